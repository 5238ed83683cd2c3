import numpy as np
from electron_rate import electron_rate

tol = 1e-3


def test_low_ci():
    assert abs(electron_rate(10.0, 104.375, 4.275) - 8.053192385444744) < tol


def test_mid_ci():
    assert abs(electron_rate(30.0, 104.375, 4.275) - 17.412755350194555) < tol


def test_high_ci():
    assert abs(electron_rate(60.0, 104.375, 4.275) - 21.21187773522976) < tol


def test_zero_at_compensation_point():
    assert abs(electron_rate(4.275, 104.375, 4.275)) < tol


def test_plateau_is_quarter_jmax():
    assert abs(electron_rate(1e9, 104.375, 4.275) - 104.375 / 4) < tol


def test_arrays():
    assert np.allclose(electron_rate(np.array([10.0, 30.0]), 104.375, 4.275),
                       [8.053192385444744, 17.412755350194555], atol=tol)
