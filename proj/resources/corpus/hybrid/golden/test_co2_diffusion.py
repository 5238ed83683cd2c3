from co2_diffusion import co2_diffusion

tol = 1e-3


def test_typical():
    assert abs(co2_diffusion(0.2, 40.0, 30.0, 101325.0) - 12.33654083395016) < tol


def test_no_gradient():
    assert abs(co2_diffusion(0.2, 40.0, 40.0, 101325.0)) < tol


def test_reverse_gradient():
    assert co2_diffusion(0.2, 40.0, 50.0, 101325.0) < 0.0


def test_linear_in_conductance():
    assert abs(co2_diffusion(0.4, 40.0, 30.0, 101325.0) - 2 * 12.33654083395016) < tol


def test_zero_conductance():
    assert co2_diffusion(0.0, 40.0, 30.0, 101325.0) == 0.0
