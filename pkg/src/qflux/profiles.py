"""Smooth step profiles and energy windows.

A step profile s -> S(s) is exactly 0 for s <= -1, exactly 1 for s >= 0 and
monotone in between.
"""
import numpy as np


def _f(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 0
    out[m] = np.exp(-1.0 / t[m])
    return out


def bump_step(s):
    """Integrated-bump reference profile, C^infinity, all derivatives vanish at s=-1 and s=0."""
    t = np.clip(np.asarray(s, dtype=float) + 1.0, 0.0, 1.0)
    a = _f(t)
    b = _f(1.0 - t)
    return a / (a + b)


def bump_step_d(s, order: int = 1):
    """Derivatives of bump_step via the analytic form; order 1 or 2."""
    s = np.asarray(s, dtype=float)
    t = s + 1.0
    out = np.zeros_like(t)
    m = (t > 0) & (t < 1)
    tm = t[m]
    a = np.exp(-1.0 / tm)
    b = np.exp(-1.0 / (1.0 - tm))
    da = a / tm**2
    db = -b / (1.0 - tm) ** 2
    D = a + b
    if order == 1:
        out[m] = (da * b - a * db) / D**2
        return out
    if order == 2:
        dda = a * (1.0 / tm**4 - 2.0 / tm**3)
        ddb = b * (1.0 / (1.0 - tm) ** 4 - 2.0 / (1.0 - tm) ** 3)
        N = da * b - a * db
        dN = dda * b - a * ddb
        out[m] = dN / D**2 - 2.0 * N * (da + db) / D**3
        return out
    raise ValueError("order must be 1 or 2")


def smooth7(s):
    """Order-7 polynomial smoothstep; C^3 at the ends."""
    t = np.clip(np.asarray(s, dtype=float) + 1.0, 0.0, 1.0)
    return t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)


def smooth7_d(s, order: int = 1):
    s = np.asarray(s, dtype=float)
    t = s + 1.0
    m = (t > 0) & (t < 1)
    out = np.zeros_like(t)
    tm = t[m]
    if order == 1:
        out[m] = 140 * tm**3 * (1 - tm) ** 3
    elif order == 2:
        out[m] = 420 * tm**2 * (1 - tm) ** 2 * (1 - 2 * tm)
    else:
        raise ValueError("order must be 1 or 2")
    return out


PROFILES = {"bump": (bump_step, bump_step_d), "smooth7": (smooth7, smooth7_d)}


def profile(name: str):
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


def window(t, w: float):
    """Energy window: 1 on |t| <= w, 0 on |t| >= 2w."""
    return bump_step(1.0 - np.abs(np.asarray(t, dtype=float)) / w)


def bump(r, c: float = 0.0, w: float = 1.0):
    """Peak-one bump exp(1 - 1/(1 - ((r-c)/w)^2)) supported in |r-c| < w."""
    t = (np.asarray(r, dtype=float) - c) / w
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
    return out


def symmetric_plateau(d, delta: float, prof=bump_step):
    """1 on |d| <= delta, 0 on |d| >= 2 delta."""
    return prof(1.0 - np.abs(np.asarray(d, dtype=float)) / delta)
