from co2_diffusion import co2_diffusion
from colimit import colimit
from electron_rate import electron_rate
from medlyn_gs import medlyn_gs
from rubisco_rate import rubisco_rate


def ci_func(ci, vcmax25, jmax25, rd25, gamma_star, kc, ko, oi,
            ca, g0, g1, vpd, pressure):
    an = colimit(rubisco_rate(ci, vcmax25, gamma_star, kc, ko, oi),
                 electron_rate(ci, jmax25, gamma_star), rd25)
    gs = medlyn_gs(an, ca, g0, g1, vpd, pressure)
    return an - co2_diffusion(gs, ca, ci, pressure)
