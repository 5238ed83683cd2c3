from ci_residual import ci_residual


def solve_ci(ci0, vcmax25, jmax25, rd25, gamma_star, kc, ko, oi,
             ca, g0, g1, vpd, pressure):
    """Root of ci_residual by secant iteration from ci0 with bisection
    fallback on the bracket (1e-6, 2*ca)."""
    max_iter = 40
    ftol = 1.0e-6
    xtol = 1.0e-3
    args = (vcmax25, jmax25, rd25, gamma_star, kc, ko, oi, ca, g0, g1, vpd, pressure)

    lo = 1.0e-6
    hi = 2.0 * ca
    x0 = ci0
    f0 = ci_residual(x0, *args)
    if f0 < 0.0:
        lo = x0
    else:
        hi = x0
    x1 = 0.99 * x0
    f1 = ci_residual(x1, *args)
    if f1 < 0.0:
        lo = max(lo, x1)
    else:
        hi = min(hi, x1)

    for _ in range(max_iter):
        if abs(f1) <= ftol and abs(x1 - x0) <= xtol:
            break
        if f1 != f0:
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        else:
            x2 = lo
        if x2 <= lo or x2 >= hi:
            x2 = 0.5 * (lo + hi)
        x0, f0 = x1, f1
        x1 = x2
        f1 = ci_residual(x1, *args)
        if f1 < 0.0:
            lo = x1
        else:
            hi = x1
    return x1
