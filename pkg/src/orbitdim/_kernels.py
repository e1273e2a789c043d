"""Compiled inner loops for orbit generation.

System right-hand sides are rendered to Python source, compiled with numba
and handed to the generic drivers below.  Compilation happens once per
distinct source text.
"""

from __future__ import annotations

import math
import types
from functools import lru_cache

import numba
import numpy as np

# status codes returned by the drivers
CONVERGED = 0
MAX_ITERATIONS = 1
DIVERGED = 2
LANDED = 3
NON_FINITE = -1
NEWTON_FAILED = -2
SINGULAR = -3

_JIT = dict(error_model="numpy", nogil=True)


@lru_cache(maxsize=None)
def compile_vector_function(components: tuple[str, ...]):
    """``f(x, out)`` writing ``out[i] = components[i](x)``."""
    body = "\n".join(f"    out[{i}] = {src}" for i, src in enumerate(components))
    return _build("f", "def f(x, out):\n" + body + "\n")


@lru_cache(maxsize=None)
def compile_matrix_function(entries: tuple[tuple[str, ...], ...]):
    """``f(x, out)`` writing ``out[i, j] = entries[i][j](x)``."""
    lines = [
        f"    out[{i}, {j}] = {src}" for i, row in enumerate(entries) for j, src in enumerate(row)
    ]
    return _build("f", "def f(x, out):\n" + "\n".join(lines) + "\n")


@lru_cache(maxsize=None)
def python_vector_function(components: tuple[str, ...]):
    """Uncompiled twin of :func:`compile_vector_function`."""
    body = "\n".join(f"    out[{i}] = {src}" for i, src in enumerate(components))
    return _build("f", "def f(x, out):\n" + body + "\n", jit=False)


@lru_cache(maxsize=None)
def python_matrix_function(entries: tuple[tuple[str, ...], ...]):
    lines = [
        f"    out[{i}, {j}] = {src}" for i, row in enumerate(entries) for j, src in enumerate(row)
    ]
    return _build("f", "def f(x, out):\n" + "\n".join(lines) + "\n", jit=False)


def _build(name: str, source: str, jit: bool = True):
    namespace = {"math": math}
    exec(compile(source, f"<orbitdim:{name}>", "exec"), namespace)
    fn = namespace[name]
    return numba.njit(**_JIT)(fn) if jit else fn


@numba.njit(**_JIT)
def _dist(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        d = a[i] - b[i]
        s += d * d
    return math.sqrt(s)


@numba.njit(**_JIT)
def _all_finite(a):
    for i in range(a.shape[0]):
        if not math.isfinite(a[i]):
            return False
    return True


@numba.njit(**_JIT)
def _stop(x, x0, delta, radius):
    d = _dist(x, x0)
    if d < delta:
        return CONVERGED
    if d > radius:
        return DIVERGED
    return -100


@numba.njit(**_JIT)
def forward_orbit(f, x1, x0, max_n, delta, radius):
    """Iterate ``x <- f(x)``; returns (points, count, status, bad_index)."""
    n = x1.shape[0]
    pts = np.empty((max_n, n))
    pts[0] = x1
    if _dist(x1, x0) == 0.0:
        return pts, 1, LANDED, -1
    s = _stop(x1, x0, delta, radius)
    if s >= 0:
        return pts, 1, s, -1
    x = x1.copy()
    y = np.empty(n)
    for j in range(1, max_n):
        f(x, y)
        if not _all_finite(y):
            return pts, j, NON_FINITE, j
        pts[j] = y
        s = _stop(y, x0, delta, radius)
        if s >= 0:
            return pts, j + 1, s, -1
        x, y = y, x
    return pts, max_n, MAX_ITERATIONS, -1


@numba.njit(**_JIT)
def _lu_solve(a, b):
    """Solve ``a z = b`` in place by partial pivoting; returns (z, det)."""
    n = a.shape[0]
    det = 1.0
    for k in range(n):
        p = k
        big = abs(a[k, k])
        for i in range(k + 1, n):
            if abs(a[i, k]) > big:
                big = abs(a[i, k])
                p = i
        if p != k:
            for j in range(n):
                a[k, j], a[p, j] = a[p, j], a[k, j]
            b[k], b[p] = b[p], b[k]
            det = -det
        det *= a[k, k]
        if a[k, k] == 0.0:
            return b, 0.0
        for i in range(k + 1, n):
            m = a[i, k] / a[k, k]
            for j in range(k, n):
                a[i, j] -= m * a[k, j]
            b[i] -= m * b[k]
    for i in range(n - 1, -1, -1):
        s = b[i]
        for j in range(i + 1, n):
            s -= a[i, j] * b[j]
        b[i] = s / a[i, i]
    return b, det


@numba.njit(**_JIT)
def newton_preimage(f, jac, target, seed, tol, max_steps, det_tol):
    """Solve ``f(y) = target`` from ``seed``; returns (y, status)."""
    n = target.shape[0]
    y = seed.copy()
    fy = np.empty(n)
    jm = np.empty((n, n))
    r = np.empty(n)
    for _ in range(max_steps):
        f(y, fy)
        jac(y, jm)
        if not (_all_finite(fy) and _all_finite(jm.ravel())):
            return y, NON_FINITE
        for i in range(n):
            r[i] = target[i] - fy[i]
        step, det = _lu_solve(jm, r)
        if abs(det) <= det_tol:
            return y, SINGULAR
        size = 0.0
        scale = 0.0
        for i in range(n):
            y[i] += step[i]
            size += step[i] * step[i]
            scale += y[i] * y[i]
        if math.sqrt(size) <= tol * math.sqrt(scale) or size == 0.0:
            return y, CONVERGED
    return y, NEWTON_FAILED


@numba.njit(**_JIT)
def inverse_orbit(f, jac, x1, x0, max_n, delta, radius, tol, max_steps, det_tol):
    """Iterate ``x <- f^{-1}(x)`` by Newton, seeding each solve at the current point."""
    n = x1.shape[0]
    pts = np.empty((max_n, n))
    pts[0] = x1
    if _dist(x1, x0) == 0.0:
        return pts, 1, LANDED, -1
    s = _stop(x1, x0, delta, radius)
    if s >= 0:
        return pts, 1, s, -1
    x = x1.copy()
    for j in range(1, max_n):
        y, status = newton_preimage(f, jac, x, x, tol, max_steps, det_tol)
        if status != CONVERGED:
            return pts, j, status, j
        pts[j] = y
        s = _stop(y, x0, delta, radius)
        if s >= 0:
            return pts, j + 1, s, -1
        x = y
    return pts, max_n, MAX_ITERATIONS, -1


@numba.njit(**_JIT)
def rk4_flow(f, x, t, steps):
    """Classical RK4 over [0, t] with ``steps`` equal steps."""
    n = x.shape[0]
    h = t / steps
    y = x.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    for _ in range(steps):
        f(y, k1)
        for i in range(n):
            tmp[i] = y[i] + 0.5 * h * k1[i]
        f(tmp, k2)
        for i in range(n):
            tmp[i] = y[i] + 0.5 * h * k2[i]
        f(tmp, k3)
        for i in range(n):
            tmp[i] = y[i] + h * k3[i]
        f(tmp, k4)
        for i in range(n):
            y[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return y


@numba.njit(**_JIT)
def flow_orbit(f, x1, x0, max_n, delta, radius, t, steps):
    """Iterate the time-``t`` map of ``f``."""
    n = x1.shape[0]
    pts = np.empty((max_n, n))
    pts[0] = x1
    if _dist(x1, x0) == 0.0:
        return pts, 1, LANDED, -1
    s = _stop(x1, x0, delta, radius)
    if s >= 0:
        return pts, 1, s, -1
    x = x1.copy()
    for j in range(1, max_n):
        y = rk4_flow(f, x, t, steps)
        if not _all_finite(y):
            return pts, j, NON_FINITE, j
        pts[j] = y
        s = _stop(y, x0, delta, radius)
        if s >= 0:
            return pts, j + 1, s, -1
        x = y
    return pts, max_n, MAX_ITERATIONS, -1


# Interpreted twins of the drivers.  Short orbits finish in these before a
# per-system compilation would; long ones continue in the compiled versions.


def _interpreted(dispatcher, **overrides):
    fn = dispatcher.py_func
    namespace = dict(fn.__globals__)
    namespace.update(overrides)
    return types.FunctionType(fn.__code__, namespace, fn.__name__, fn.__defaults__)


_helpers = dict(
    _dist=_dist.py_func,
    _all_finite=_all_finite.py_func,
    _lu_solve=_lu_solve.py_func,
)
_helpers["_stop"] = _interpreted(_stop, **_helpers)
newton_preimage_py = _interpreted(newton_preimage, **_helpers)
forward_orbit_py = _interpreted(forward_orbit, **_helpers)
inverse_orbit_py = _interpreted(inverse_orbit, newton_preimage=newton_preimage_py, **_helpers)
rk4_flow_py = _interpreted(rk4_flow)
flow_orbit_py = _interpreted(flow_orbit, rk4_flow=rk4_flow_py, **_helpers)
