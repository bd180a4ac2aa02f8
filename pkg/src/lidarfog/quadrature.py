"""Composite Simpson 1/3 rule on uniform grids."""

import math

import numpy as np

from lidarfog.errors import DomainError


def intervals_for_step(lo, hi, step, multiple=2):
    """Smallest interval count, a multiple of ``multiple``, with spacing <= ``step``."""
    if not step > 0:
        raise DomainError(f"step must be positive, got {step}")
    n = max(multiple, math.ceil((hi - lo) / step - 1e-9))
    return n + (-n) % multiple


def uniform_grid(lo, hi, intervals):
    if intervals < 2 or intervals % 2:
        raise DomainError(f"Simpson needs an even interval count >= 2, got {intervals}")
    return np.linspace(lo, hi, intervals + 1)


def simpson_weights(intervals):
    if intervals < 2 or intervals % 2:
        raise DomainError(f"Simpson needs an even interval count >= 2, got {intervals}")
    w = np.full(intervals + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w


def simpson(y, x):
    """Integrate samples ``y`` on the uniform grid ``x`` (odd number of nodes)."""
    y = np.asarray(y, dtype=np.float64)
    h = (x[-1] - x[0]) / (len(x) - 1)
    return float(simpson_weights(len(x) - 1) @ y * h / 3.0)


def composite_simpson(f, a, b, intervals):
    """Composite Simpson 1/3 rule for a vectorised callable ``f`` on ``[a, b]``."""
    t = uniform_grid(a, b, intervals)
    return simpson(f(t), t)
