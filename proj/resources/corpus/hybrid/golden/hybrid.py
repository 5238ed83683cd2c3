from bisect_step import bisect_step
from ci_func import ci_func
from co2_diffusion import co2_diffusion
from colimit import colimit
from electron_rate import electron_rate
from medlyn_gs import medlyn_gs
from rubisco_rate import rubisco_rate
from secant_step import secant_step


def hybrid(ci0, vcmax25, jmax25, rd25, gamma_star, kc, ko, oi,
           ca, g0, g1, vpd, pressure):
    """Hybrid secant/bisection solve for intercellular CO2 (Pa).
    Returns -1 when the converged point does not balance supply and demand."""
    max_iter = 40
    args = (vcmax25, jmax25, rd25, gamma_star, kc, ko, oi, ca, g0, g1, vpd, pressure)

    lo = 1.0e-6
    hi = 2.0 * ca
    x0 = ci0
    f0 = ci_func(x0, *args)
    if f0 < 0.0:
        lo = x0
    else:
        hi = x0
    x1 = 0.99 * x0
    f1 = ci_func(x1, *args)
    if f1 < 0.0:
        lo = max(lo, x1)
    else:
        hi = min(hi, x1)

    for _ in range(max_iter):
        if abs(f1) <= 1.0e-6 and abs(x1 - x0) <= 1.0e-3:
            break
        x2 = secant_step(x0, f0, x1, f1)
        if x2 <= lo or x2 >= hi:
            x2 = bisect_step(lo, hi)
        x0, f0 = x1, f1
        x1 = x2
        f1 = ci_func(x1, *args)
        if f1 < 0.0:
            lo = x1
        else:
            hi = x1

    an = colimit(rubisco_rate(x1, vcmax25, gamma_star, kc, ko, oi),
                 electron_rate(x1, jmax25, gamma_star), rd25)
    gs = medlyn_gs(an, ca, g0, g1, vpd, pressure)
    if abs(co2_diffusion(gs, ca, x1, pressure) - an) > 1.0e-3:
        return -1.0
    return x1
