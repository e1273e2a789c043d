"""Eigenvalues of small dense real matrices.

Householder reduction to upper Hessenberg form followed by the Francis
implicit double-shift QR iteration.  Eigenvalues of a real matrix come out in
exact conjugate pairs.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["hessenberg", "eigvals", "EigenConvergenceError"]


_ULP = np.finfo(float).eps


class EigenConvergenceError(ArithmeticError):
    pass


def hessenberg(a) -> np.ndarray:
    """Orthogonally similar upper Hessenberg matrix."""
    h = np.array(a, dtype=float)
    n = h.shape[0]
    if h.shape != (n, n):
        raise ValueError("matrix must be square")
    for k in range(n - 2):
        x = h[k + 1 :, k]
        peak = np.max(np.abs(x))
        if peak == 0.0:
            continue
        # scale first so the squares in the norm cannot underflow
        x = x / peak
        alpha = np.linalg.norm(x)
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v)
        h[k + 2 :, k] = 0.0
    return h


def eigvals(a, max_iter: int | None = None) -> np.ndarray:
    """All eigenvalues of a real square matrix, as complex numbers.

    Raises :class:`EigenConvergenceError` when the QR sweeps exceed
    ``max_iter`` (default ``100 * n**2``).
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    # exact power-of-two scaling keeps tiny (subnormal) matrices away from underflow
    peak = float(np.max(np.abs(a)))
    if peak == 0.0:
        return np.zeros(n, dtype=complex)
    exponent = math.frexp(peak)[1]
    h = hessenberg(np.ldexp(a, -exponent))
    if max_iter is None:
        max_iter = 100 * n * n
    # 1-based copy keeps the index arithmetic of the classical algorithm
    m = np.zeros((n + 1, n + 1))
    m[1:, 1:] = h
    wr = np.zeros(n + 1)
    wi = np.zeros(n + 1)
    _hqr(m, n, wr, wi, max_iter)
    return np.ldexp(wr[1:], exponent) + 1j * np.ldexp(wi[1:], exponent)


def _sign(a, b):
    return abs(a) if b >= 0.0 else -abs(a)


def _hqr(a, n, wr, wi, max_iter):
    anorm = 0.0
    for i in range(1, n + 1):
        for j in range(max(i - 1, 1), n + 1):
            anorm += abs(a[i, j])
    nn = n
    t = 0.0
    total = 0
    while nn >= 1:
        its = 0
        while True:
            # look for a single small subdiagonal element
            l = 1
            for ll in range(nn, 1, -1):
                s = abs(a[ll - 1, ll - 1]) + abs(a[ll, ll])
                if s == 0.0:
                    s = anorm
                # relative test, or negligible against the whole matrix (graded inputs)
                if abs(a[ll, ll - 1]) + s == s or abs(a[ll, ll - 1]) <= _ULP * anorm:
                    a[ll, ll - 1] = 0.0
                    l = ll
                    break
            x = a[nn, nn]
            if l == nn:
                # one root found
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
            else:
                y = a[nn - 1, nn - 1]
                w = a[nn, nn - 1] * a[nn - 1, nn]
                if l == nn - 1:
                    # two roots found
                    p = 0.5 * (y - x)
                    q = p * p + w
                    z = math.sqrt(abs(q))
                    x += t
                    if q >= 0.0:
                        z = p + _sign(z, p)
                        wr[nn - 1] = wr[nn] = x + z
                        if z != 0.0:
                            wr[nn] = x - w / z
                        wi[nn - 1] = wi[nn] = 0.0
                    else:
                        wr[nn - 1] = wr[nn] = x + p
                        wi[nn - 1] = -z
                        wi[nn] = z
                    nn -= 2
                else:
                    if total >= max_iter:
                        raise EigenConvergenceError(
                            f"QR iteration did not converge in {max_iter} sweeps"
                        )
                    if its and its % 10 == 0:
                        # exceptional shift
                        t += x
                        for i in range(1, nn + 1):
                            a[i, i] -= x
                        s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                        y = x = 0.75 * s
                        w = -0.4375 * s * s
                    its += 1
                    total += 1
                    _double_shift_sweep(a, l, nn, x, y, w)
            if not l < nn - 1:
                break


def _double_shift_sweep(a, l, nn, x, y, w):
    # two consecutive small subdiagonal elements
    m = nn - 2
    while m >= l:
        z = a[m, m]
        r = x - z
        s = y - z
        p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
        q = a[m + 1, m + 1] - z - r - s
        r = a[m + 2, m + 1]
        s = abs(p) + abs(q) + abs(r)
        p /= s
        q /= s
        r /= s
        if m == l:
            break
        u = abs(a[m, m - 1]) * (abs(q) + abs(r))
        v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
        if u + v == v:
            break
        m -= 1
    for i in range(m + 2, nn + 1):
        a[i, i - 2] = 0.0
        if i != m + 2:
            a[i, i - 3] = 0.0
    for k in range(m, nn):
        if k != m:
            p = a[k, k - 1]
            q = a[k + 1, k - 1]
            r = a[k + 2, k - 1] if k != nn - 1 else 0.0
            x = abs(p) + abs(q) + abs(r)
            if x != 0.0:
                p /= x
                q /= x
                r /= x
        s = _sign(math.sqrt(p * p + q * q + r * r), p)
        if s == 0.0:
            continue
        if k == m:
            if l != m:
                a[k, k - 1] = -a[k, k - 1]
        else:
            a[k, k - 1] = -s * x
        p += s
        x = p / s
        y = q / s
        z = r / s
        q /= p
        r /= p
        for j in range(k, nn + 1):
            p = a[k, j] + q * a[k + 1, j]
            if k != nn - 1:
                p += r * a[k + 2, j]
                a[k + 2, j] -= p * z
            a[k + 1, j] -= p * y
            a[k, j] -= p * x
        for i in range(l, min(nn, k + 3) + 1):
            p = x * a[i, k] + y * a[i, k + 1]
            if k != nn - 1:
                p += z * a[i, k + 2]
                a[i, k + 2] -= p * r
            a[i, k + 1] -= p * q
            a[i, k] -= p
