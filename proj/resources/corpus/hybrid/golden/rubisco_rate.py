def rubisco_rate(ci, vcmax25, gamma_star, kc, ko, oi):
    """Rubisco-limited gross assimilation (umol CO2/m2/s)."""
    return vcmax25 * (ci - gamma_star) / (ci + kc * (1.0 + oi / ko))
