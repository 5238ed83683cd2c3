def bisect_step(lo, hi):
    return 0.5 * (lo + hi)
