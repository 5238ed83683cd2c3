import numpy as np


def net_assimilation(ci, vcmax25, jmax25, rd25, gamma_star, kc, ko, oi):
    """Net assimilation (umol CO2/m2/s): min of the Rubisco- and
    RuBP-limited rates minus dark respiration. Elementwise over arrays."""
    ac = vcmax25 * (ci - gamma_star) / (ci + kc * (1.0 + oi / ko))
    aj = (jmax25 / 4.0) * (ci - gamma_star) / (ci + 2.0 * gamma_star)
    return np.minimum(ac, aj) - rd25
