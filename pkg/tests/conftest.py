from functools import lru_cache

import numpy as np
import pytest

from orbitdim.syslib import get_entry, run_orbit


def sweep_line_measure(points, eps):
    """Length of the union of (x - eps, x + eps), by an explicit interval merge."""
    total = 0.0
    lo = hi = None
    for x in sorted(float(p) for p in points):
        a, b = x - eps, x + eps
        if hi is None:
            lo, hi = a, b
        elif a <= hi:
            hi = max(hi, b)
        else:
            total += hi - lo
            lo, hi = a, b
    return total + (hi - lo)


@lru_cache(maxsize=None)
def catalog_orbit(name, label=None):
    entry = get_entry(name)
    return run_orbit(entry, label)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def linear_map_equations(a):
    n = len(a)
    names = [f"x{i}" for i in range(n)]
    eqs = [" + ".join(f"({float(a[i, j])!r})*{names[j]}" for j in range(n)) for i in range(n)]
    return eqs, names
