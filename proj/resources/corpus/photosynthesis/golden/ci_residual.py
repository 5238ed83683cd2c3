import numpy as np

from net_assimilation import net_assimilation


def ci_residual(ci, vcmax25, jmax25, rd25, gamma_star, kc, ko, oi,
                ca, g0, g1, vpd, pressure):
    """Biochemical demand minus diffusive supply at internal CO2 ci (Pa)."""
    an = net_assimilation(ci, vcmax25, jmax25, rd25, gamma_star, kc, ko, oi)
    # Medlyn conductance (mol H2O/m2/s); ca converted to umol/mol
    gs = g0 + 1.6 * (1.0 + g1 / np.sqrt(vpd)) * np.maximum(an, 0.0) * pressure * 1.0e-6 / ca
    an_diffusion = gs * (ca - ci) / (1.6 * pressure) * 1.0e6
    return an - an_diffusion
