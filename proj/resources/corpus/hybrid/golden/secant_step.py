def secant_step(x0, f0, x1, f1):
    """Secant update; -1 when the secant is flat."""
    if f1 != f0:
        return x1 - f1 * (x1 - x0) / (f1 - f0)
    return -1.0
