def co2_diffusion(gs, ca, ci, pressure):
    """CO2 supply through the stomata for conductance gs."""
    return gs * (ca - ci) / (1.6 * pressure) * 1.0e6
