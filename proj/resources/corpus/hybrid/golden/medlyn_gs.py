import numpy as np


def medlyn_gs(an, ca, g0, g1, vpd, pressure):
    """Medlyn stomatal conductance to water vapour (mol/m2/s)."""
    return g0 + 1.6 * (1.0 + g1 / np.sqrt(vpd)) * np.maximum(an, 0.0) * pressure * 1.0e-6 / ca
