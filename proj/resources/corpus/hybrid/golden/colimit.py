import numpy as np


def colimit(ac, aj, rd25):
    return np.minimum(ac, aj) - rd25
