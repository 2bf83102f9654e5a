"""C-infinity transition profiles shared by cutoffs and the dyadic partition."""
import numpy as np


def _h(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_step(s):
    """0 for s <= 0, 1 for s >= 1, C-infinity and monotone in between."""
    a = _h(s)
    b = _h(1.0 - np.asarray(s, dtype=float))
    return a / (a + b)


def plateau(r, inner: float, outer: float):
    """1 for |r| <= inner, 0 for |r| >= outer, smooth in between."""
    r = np.abs(np.asarray(r, dtype=float))
    return 1.0 - smooth_step((r - inner) / (outer - inner))


def bump(r, radius: float = 2.0):
    """exp(1 - 1/(1 - |r/radius|^2)) inside the ball, zero outside; equals 1 at the origin."""
    r2 = np.square(np.asarray(r, dtype=float) / radius)
    out = np.zeros_like(r2)
    inside = r2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out
