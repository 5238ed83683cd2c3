"""Independent oracle for the corpus expectations.

Recomputes every oracle.json value with direct formulas and scipy's Brent
solver, sharing no code with the native library or the golden translations.
Run from the repository root:

    python3 tests/oracles/corpus_oracle.py resources/corpus
"""
import json
import math
import sys
from pathlib import Path

from scipy.optimize import brentq

DEFAULTS = dict(vcmax25=62.5, jmax25=104.375, rd25=0.9375, gamma_star=4.275,
                kc=40.49, ko=27840.0, oi=20900.0, ca=40.0, g0=0.01, g1=4.0,
                vpd=1.5, pressure=101325.0)
ORDER = ["vcmax25", "jmax25", "rd25", "gamma_star", "kc", "ko", "oi",
         "ca", "g0", "g1", "vpd", "pressure"]


def daylength(lat, decl):
    eps = 2.0 ** -52
    pole = math.pi / 2
    if abs(lat) >= pole + 10 * eps or abs(decl) >= pole:
        return float("nan")
    lat = min(pole - 10 * eps, max(-(pole - 10 * eps), lat))
    t = -(math.sin(lat) * math.sin(decl)) / (math.cos(lat) * math.cos(decl))
    return 2.0 * 13750.9871 * math.acos(min(1.0, max(-1.0, t)))


def ac(ci, p):
    return p["vcmax25"] * (ci - p["gamma_star"]) / (ci + p["kc"] * (1 + p["oi"] / p["ko"]))


def aj(ci, p):
    return p["jmax25"] / 4 * (ci - p["gamma_star"]) / (ci + 2 * p["gamma_star"])


def an(ci, p):
    return min(ac(ci, p), aj(ci, p)) - p["rd25"]


def gs(a, p):
    return p["g0"] + 1.6 * (1 + p["g1"] / math.sqrt(p["vpd"])) * max(a, 0.0) * p["pressure"] * 1e-6 / p["ca"]


def supply(g, ci, p):
    return g * (p["ca"] - ci) / (1.6 * p["pressure"]) * 1e6


def residual(ci, p):
    a = an(ci, p)
    return a - supply(gs(a, p), ci, p)


def root(p):
    # the residual is negative below the feedback singularity and positive
    # above ca, so bracket from just above the singular point
    return brentq(lambda c: residual(c, p), p["ca"] - 1e-9 - 1.0 / (
        1.6 * (1 + p["g1"] / math.sqrt(p["vpd"])) * 1e-6 / p["ca"] * 1e6 / 1.6),
        2 * p["ca"], xtol=1e-14, rtol=1e-15)


SIGNATURES = {
    "daylength": ["lat", "decl"],
    "net_assimilation": ["ci"] + ORDER[:7],
    "ci_residual": ["ci"] + ORDER,
    "solve_ci": ["ci0"] + ORDER,
    "rubisco_rate": ["ci", "vcmax25", "gamma_star", "kc", "ko", "oi"],
    "electron_rate": ["ci", "jmax25", "gamma_star"],
    "colimit": ["ac", "aj", "rd25"],
    "medlyn_gs": ["an", "ca", "g0", "g1", "vpd", "pressure"],
    "co2_diffusion": ["gs", "ca", "ci", "pressure"],
    "ci_func": ["ci"] + ORDER,
    "secant_step": ["x0", "f0", "x1", "f1"],
    "bisect_step": ["lo", "hi"],
    "hybrid": ["ci0"] + ORDER,
}


def params_args(p):
    return [p[k] for k in ORDER]


def case(unit, args, expected, tol, source="oracle"):
    return {"unit": unit, "args": args,
            "expected": None if math.isnan(expected) else expected,
            "tol": tol, "source": source}


def daylength_cases():
    out = [case("daylength", [-1.4, 0.1], 26125.331, 1e-3, "published"),
           case("daylength", [-1.3, 0.1], 33030.159, 1e-3, "published"),
           case("daylength", [-1.5, 0.1], 0.0, 1e-3, "published"),
           case("daylength", [1.5, 0.1], 86400.0, 1e-3, "published"),
           case("daylength", [3.0, 0.1], float("nan"), 1e-3, "published"),
           case("daylength", [-1.0, -3.0], float("nan"), 1e-3, "published")]
    for lat, decl in [(0.0, 0.0), (0.5, 0.2), (-0.7, 0.35), (1.2, -0.4)]:
        out.append(case("daylength", [lat, decl], daylength(lat, decl), 1e-3))
    return out


def photosynthesis_cases():
    p = DEFAULTS
    bio = [p[k] for k in ORDER[:7]]
    out = []
    for ci in [4.275, 10.0, 35.0, 60.0, 100.0]:
        out.append(case("net_assimilation", [ci] + bio, an(ci, p), 1e-3))
    for ci in [20.0, 31.0, 40.0]:
        out.append(case("ci_residual", [ci] + params_args(p), residual(ci, p), 1e-3))
    r = root(p)
    for ci0 in [35.0, 50.0, 70.0]:
        out.append(case("solve_ci", [ci0] + params_args(p), r, 1e-3))
    q = dict(p, vcmax25=38.383, g1=3.0, vpd=1.0)
    out.append(case("solve_ci", [45.0] + params_args(q), root(q), 1e-3))
    return out


def hybrid_cases():
    p = DEFAULTS
    out = []
    for ci in [10.0, 30.0, 60.0]:
        out.append(case("rubisco_rate", [ci, p["vcmax25"], p["gamma_star"], p["kc"], p["ko"], p["oi"]], ac(ci, p), 1e-3))
        out.append(case("electron_rate", [ci, p["jmax25"], p["gamma_star"]], aj(ci, p), 1e-3))
    out.append(case("colimit", [12.0, 9.5, 0.9375], 9.5 - 0.9375, 1e-3))
    out.append(case("colimit", [3.0, 9.5, 0.5], 2.5, 1e-3))
    out.append(case("medlyn_gs", [12.0, p["ca"], p["g0"], p["g1"], p["vpd"], p["pressure"]], gs(12.0, p), 1e-3))
    out.append(case("medlyn_gs", [-2.0, p["ca"], p["g0"], p["g1"], p["vpd"], p["pressure"]], p["g0"], 1e-3))
    out.append(case("co2_diffusion", [0.2, p["ca"], 30.0, p["pressure"]], supply(0.2, 30.0, p), 1e-3))
    for ci in [20.0, 35.0]:
        out.append(case("ci_func", [ci] + params_args(p), residual(ci, p), 1e-3))
    out.append(case("secant_step", [1.0, -1.0, 2.0, 1.0], 1.5, 1e-3))
    out.append(case("secant_step", [1.0, 2.0, 3.0, 2.0], -1.0, 1e-3))
    out.append(case("bisect_step", [1.0, 4.0], 2.5, 1e-3))
    r = root(p)
    for ci0 in [35.0, 70.0]:
        out.append(case("hybrid", [ci0] + params_args(p), r, 1e-3))
    return out


def main(corpus):
    corpus = Path(corpus)
    for name, fn in [("daylength", daylength_cases),
                     ("photosynthesis", photosynthesis_cases),
                     ("hybrid", hybrid_cases)]:
        cases = fn()
        units = sorted({c["unit"] for c in cases})
        doc = {"entry": name, "signatures": {u: SIGNATURES[u] for u in units},
               "cases": cases}
        (corpus / name / "oracle.json").write_text(json.dumps(doc, indent=2) + "\n")
    p = DEFAULTS
    print("root", repr(root(p)), "daylength(-1.4,0.1)", repr(daylength(-1.4, 0.1)),
          "daylength(-1.3,0.1)", repr(daylength(-1.3, 0.1)))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "resources/corpus")
