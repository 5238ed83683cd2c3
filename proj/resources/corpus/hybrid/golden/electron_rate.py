def electron_rate(ci, jmax25, gamma_star):
    """RuBP-regeneration-limited gross assimilation at saturating light."""
    return (jmax25 / 4.0) * (ci - gamma_star) / (ci + 2.0 * gamma_star)
