import numpy as np
from medlyn_gs import medlyn_gs

tol = 1e-3
ENV = (40.0, 0.01, 4.0, 1.5, 101325.0)


def test_typical_assimilation():
    assert abs(medlyn_gs(12.0, *ENV) - 0.2174805108400036) < tol


def test_negative_assimilation_gives_intercept():
    assert abs(medlyn_gs(-2.0, *ENV) - 0.01) < tol


def test_zero_assimilation_gives_intercept():
    assert abs(medlyn_gs(0.0, *ENV) - 0.01) < tol


def test_zero_slope():
    assert abs(medlyn_gs(12.0, 40.0, 0.01, 0.0, 1.5, 101325.0) - (0.01 + 1.6 * 12.0 * 0.101325 / 40.0)) < tol


def test_arrays():
    assert np.allclose(medlyn_gs(np.array([12.0, -2.0]), *ENV), [0.2174805108400036, 0.01], atol=tol)
