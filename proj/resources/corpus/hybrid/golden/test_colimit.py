import numpy as np
from colimit import colimit

tol = 1e-3


def test_electron_limited():
    assert abs(colimit(12.0, 9.5, 0.9375) - 8.5625) < tol


def test_rubisco_limited():
    assert abs(colimit(3.0, 9.5, 0.5) - 2.5) < tol


def test_equal_rates():
    assert abs(colimit(4.0, 4.0, 1.0) - 3.0) < tol


def test_negative_rates():
    assert abs(colimit(-1.0, -2.0, 0.5) + 2.5) < tol


def test_arrays():
    assert np.allclose(colimit(np.array([12.0, 3.0]), 9.5, 0.5), [9.0, 2.5], atol=tol)
