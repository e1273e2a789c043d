"""Polynomial expansions of one-dimensional invariant manifolds of maps.

The manifold through the fixed point ``x0`` tangent to the eigen-axis ``a`` is
written as a graph ``u_i = h_i(s)`` over ``s = u_a`` (``u = x - x0``), with
``h_i(s) = sum_{j=2..K} c_ij s^j``.  Substituting into the invariance
equation ``h_i(F_a(s, h(s))) = F_i(s, h(s))`` and matching powers of ``s``
gives, for a diagonal Jacobian,

    c_ij (lambda_a^j - lambda_i) = [s^j] (F_i(s, h) - h_i(F_a(s, h)))|_{c_ij = 0}

so the coefficients follow order by order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynsys import MapSystem, Orbit
from .expr import MAX_TAYLOR_ORDER, polynomial

__all__ = [
    "ManifoldExpansion",
    "RestrictedMap",
    "ManifoldError",
    "ResonanceError",
    "NotDiagonalError",
    "DegenerateError",
    "HyperbolicRestrictionError",
    "solve_invariance",
    "restrict_to_manifold",
    "nondegeneracy_order",
    "lift_orbit",
    "series_coefficients",
    "DEFAULT_ORDER",
    "RESIDUAL_TOL",
]

DEFAULT_ORDER = 5
RESONANCE_TOL = 1e-9
DIAGONAL_TOL = 1e-9
UNIT_TOL = 1e-9
COEFF_TOL = 1e-10
RESIDUAL_TOL = 1e-8
RESIDUAL_RADIUS = 0.01
RESIDUAL_SAMPLES = 20


class ManifoldError(ValueError):
    pass


class ResonanceError(ManifoldError):
    pass


class NotDiagonalError(ManifoldError):
    pass


class DegenerateError(ManifoldError):
    pass


class HyperbolicRestrictionError(ManifoldError):
    pass


@dataclass(frozen=True, eq=False)
class ManifoldExpansion:
    """Graph ``u_i = h_i(u_axis)`` of an invariant manifold, ``u = x - x0``.

    ``coefficients[r, j - 2]`` is ``c_j`` for the normal axis
    ``normal_axes[r]``; ``residual`` is the largest invariance-equation
    residual over 20 points with ``|s| <= 0.01``.
    """

    kind: str
    base_point: np.ndarray
    axis: int
    normal_axes: tuple[int, ...]
    coefficients: np.ndarray
    eigenvalues: np.ndarray
    residual: float
    system: MapSystem = field(repr=False, default=None)

    @property
    def order(self) -> int:
        return self.coefficients.shape[1] + 1

    @property
    def dimension(self) -> int:
        return len(self.base_point)

    @property
    def axis_multiplier(self) -> float:
        return float(self.eigenvalues[self.axis])

    def series(self, normal: int | None = None) -> np.ndarray:
        """Power-series coefficients ``(0, 0, c_2, ..., c_K)`` of one ``h_i``."""
        r = 0 if normal is None else self.normal_axes.index(normal)
        return np.concatenate(([0.0, 0.0], self.coefficients[r]))

    def h(self, s) -> np.ndarray:
        """Normal coordinates ``h_i(s)``, shape ``(len(s), n - 1)``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        powers = s[:, None] ** np.arange(2, self.order + 1)
        return powers @ self.coefficients.T

    def graph(self, s) -> np.ndarray:
        """Points ``x0 + (s, h(s))`` in ambient coordinates."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        pts = np.empty((len(s), self.dimension))
        pts[:, self.axis] = s
        pts[:, list(self.normal_axes)] = self.h(s)
        return pts + self.base_point

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "base_point": self.base_point.tolist(),
            "axis": self.axis,
            "order": self.order,
            "coefficients": {
                str(i): {f"c{j + 2}": float(c) for j, c in enumerate(row)}
                for i, row in zip(self.normal_axes, self.coefficients)
            },
            "multipliers": [float(v) for v in self.eigenvalues],
            "invariance_residual": self.residual,
        }


@dataclass(frozen=True, eq=False)
class RestrictedMap:
    """The map on the manifold, ``G(s) = F_axis(s, h(s))`` truncated at degree K."""

    system: MapSystem
    coefficients: np.ndarray  # power series (g_0, ..., g_K), g_0 = 0
    source: MapSystem = field(repr=False, default=None)
    expansion: ManifoldExpansion = field(repr=False, default=None)

    @property
    def multiplier(self) -> float:
        return float(self.coefficients[1])

    def __call__(self, s):
        return self.system(s)


# -- truncated power series ---------------------------------------------------


def _mul(a, b, k):
    return np.convolve(a, b)[: k + 1]


def _compose(poly: dict, series: list[np.ndarray], k: int) -> np.ndarray:
    """``[s^0..s^k]`` of the multivariate polynomial ``poly`` at ``u = series(s)``."""
    n = len(series)
    cache = [[np.eye(1, k + 1)[0]] for _ in range(n)]

    def pw(i, e):
        while len(cache[i]) <= e:
            cache[i].append(_mul(cache[i][-1], series[i], k))
        return cache[i][e]

    out = np.zeros(k + 1)
    for alpha, c in poly.items():
        term = np.full(k + 1, 0.0)
        term[0] = c
        for i, e in enumerate(alpha):
            if e:
                term = _mul(term, pw(i, e), k)
        out += term
    return out


def _compose_1d(outer: np.ndarray, inner: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros(k + 1)
    p = np.eye(1, k + 1)[0]
    for c in outer:
        out += c * p
        p = _mul(p, inner, k)
    return out


def series_coefficients(sys: MapSystem, order: int = MAX_TAYLOR_ORDER) -> list[dict]:
    """Taylor tables of ``u -> F(x0 + u) - x0`` per component."""
    tables = []
    zero = (0,) * sys.arity
    for c in sys.components:
        t = dict(c.taylor_coefficients(sys.fixed_point, order))
        t.pop(zero, None)
        tables.append(t)
    return tables


# -- solver -------------------------------------------------------------------


def _kind_of(lam: float) -> str:
    if abs(abs(lam) - 1.0) <= UNIT_TOL:
        return "center"
    return "stable" if abs(lam) < 1.0 else "unstable"


def solve_invariance(
    sys: MapSystem, axis: int = 0, kind: str | None = None, order: int = DEFAULT_ORDER
) -> ManifoldExpansion:
    """Order-``K`` graph of the 1-D manifold tangent to eigen-axis ``axis``.

    The Jacobian at the fixed point must be diagonal (to 1e-9).  ``kind`` is
    inferred from the axis multiplier when omitted and checked against it
    otherwise.  Raises :class:`ResonanceError` when some
    ``|lambda_axis^j - lambda_i| < 1e-9``.
    """
    n = sys.arity
    if n < 2:
        raise ManifoldError("an invariant manifold needs at least two dimensions")
    if not 0 <= axis < n:
        raise ManifoldError(f"axis {axis} out of range for a {n}-dimensional system")
    if not 2 <= order <= MAX_TAYLOR_ORDER:
        raise ManifoldError(f"order must be in [2, {MAX_TAYLOR_ORDER}], got {order}")
    jac = sys.jacobian(sys.fixed_point)
    off = jac - np.diag(np.diag(jac))
    if np.max(np.abs(off)) > DIAGONAL_TOL:
        raise NotDiagonalError(
            "Jacobian at the fixed point is not diagonal; transform to eigen-coordinates first"
        )
    lam = np.diag(jac).copy()
    la = lam[axis]
    inferred = _kind_of(la)
    if kind is None:
        kind = inferred
    elif kind not in ("stable", "unstable", "center"):
        raise ManifoldError(f"unknown manifold kind {kind!r}")
    elif kind != inferred:
        raise ManifoldError(f"axis multiplier {la:g} gives a {inferred} direction, not {kind}")
    normal = tuple(i for i in range(n) if i != axis)
    for i in normal:
        if kind == "center" and abs(abs(lam[i]) - 1.0) <= UNIT_TOL:
            raise ResonanceError(f"normal multiplier {lam[i]:g} also lies on the unit circle")
        for j in range(2, order + 1):
            if abs(la**j - lam[i]) < RESONANCE_TOL:
                raise ResonanceError(
                    f"resonance lambda_{axis}^{j} = lambda_{i} ({la:g}^{j} vs {lam[i]:g})"
                )

    tables = series_coefficients(sys, order)
    h = [np.zeros(order + 1) for _ in range(n)]
    h[axis][1] = 1.0
    for j in range(2, order + 1):
        fa = _compose(tables[axis], h, j)
        for i in normal:
            lhs = _compose_1d(h[i], fa, j)
            rhs = _compose(tables[i], h, j)
            r = rhs[j] - lhs[j]
            h[i][j] = r / (la**j - lam[i])
    coeffs = np.array([h[i][2:] for i in normal])
    coeffs.setflags(write=False)
    base = sys.fixed_point.copy()
    lam.setflags(write=False)
    exp = ManifoldExpansion(kind, base, axis, normal, coeffs, lam, 0.0, sys)
    object.__setattr__(exp, "residual", invariance_residual(sys, exp))
    return exp


def invariance_residual(sys: MapSystem, exp: ManifoldExpansion, radius: float = RESIDUAL_RADIUS,
                        samples: int = RESIDUAL_SAMPLES) -> float:
    """``max |h(F_axis(p)) - F_normal(p)|`` over graph points ``p`` with ``|s| <= radius``."""
    s = np.linspace(-radius, radius, samples)
    worst = 0.0
    for p in exp.graph(s):
        fp = sys(p) - exp.base_point
        predicted = exp.h([fp[exp.axis]])[0]
        worst = max(worst, float(np.max(np.abs(predicted - fp[list(exp.normal_axes)]))))
    return worst


def restrict_to_manifold(sys: MapSystem, expansion: ManifoldExpansion) -> RestrictedMap:
    """1-D map ``G(s) = F_axis(s, h(s))`` truncated at the expansion order."""
    if not expansion.residual < RESIDUAL_TOL:
        raise ManifoldError(
            f"invariance residual {expansion.residual:.3g} is not below {RESIDUAL_TOL:g}"
        )
    k = expansion.order
    tables = series_coefficients(sys, k)
    h = [np.zeros(k + 1) for _ in range(sys.arity)]
    h[expansion.axis][1] = 1.0
    for i in expansion.normal_axes:
        h[i] = expansion.series(i)
    g = _compose(tables[expansion.axis], h, k)
    g[0] = 0.0
    g.setflags(write=False)
    var = sys.variables[expansion.axis]
    x0 = expansion.base_point[expansion.axis]
    # the polynomial is in the shifted coordinate; re-centre it at x0
    shifted = _recentre(g, x0)
    restricted = MapSystem(
        [polynomial(shifted, (var,))],
        (var,),
        fixed_point=[x0],
        name=f"{sys.name or 'system'}|{expansion.kind}",
    )
    return RestrictedMap(restricted, g, sys, expansion)


def _recentre(g: np.ndarray, x0: float) -> np.ndarray:
    """Coefficients in ``x`` of ``x0 + sum_j g_j (x - x0)^j``."""
    if x0 == 0.0:
        return g.copy()
    p = np.polynomial.Polynomial(g)
    out = p(np.polynomial.Polynomial([-x0, 1.0])) + x0
    return out.coef


def nondegeneracy_order(g: RestrictedMap | MapSystem, order: int = DEFAULT_ORDER):
    """Nondegeneracy order ``k`` and predicted dimension ``1 - 1/k``.

    With multiplier +1, ``k`` is the first ``j >= 2`` with ``|g_j| > 1e-10``.
    With multiplier -1, the same rule is applied to ``G o G`` and the result
    carries the flag ``period_doubled``.  Returns ``(k, dim, flags)``.
    """
    if isinstance(g, RestrictedMap):
        coeffs = np.asarray(g.coefficients, dtype=float)
    else:
        if g.arity != 1:
            raise ManifoldError("nondegeneracy order is defined for one-dimensional maps")
        table = g.components[0].taylor_coefficients(g.fixed_point, order)
        coeffs = np.zeros(order + 1)
        for (e,), c in table.items():
            coeffs[e] = c
        coeffs[0] = 0.0
    k_max = len(coeffs) - 1
    lam = coeffs[1]
    flags: tuple[str, ...] = ()
    if abs(lam - 1.0) <= UNIT_TOL:
        series = coeffs
    elif abs(lam + 1.0) <= UNIT_TOL:
        series = _compose_1d(coeffs, coeffs, k_max)
        flags = ("period_doubled",)
    else:
        raise HyperbolicRestrictionError(
            f"multiplier {lam:g} is not +1 or -1; the fixed point is hyperbolic along this axis"
        )
    for j in range(2, k_max + 1):
        if abs(series[j]) > COEFF_TOL:
            return j, 1.0 - 1.0 / j, flags
    raise DegenerateError(f"degenerate to order {k_max}")


def lift_orbit(orbit: Orbit, expansion: ManifoldExpansion) -> Orbit:
    """Map each point ``s`` of a 1-D orbit to ``x0 + (s, h(s))``."""
    if orbit.dimension != 1:
        raise ManifoldError("only one-dimensional orbits can be lifted")
    s = orbit.points[:, 0] - expansion.base_point[expansion.axis]
    return Orbit(expansion.graph(s), expansion.base_point, orbit.direction, orbit.termination,
                 expansion.system)

