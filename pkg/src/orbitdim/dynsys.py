"""Discrete maps, flows and their orbits."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _kernels as K
from .expr import Expression, NonFiniteError, differentiate, parse

__all__ = [
    "MapSystem",
    "FlowSystem",
    "Orbit",
    "Stop",
    "Termination",
    "OrbitError",
    "NewtonError",
    "SingularJacobianError",
    "SystemValidationError",
    "generate_orbit",
    "generate_inverse_orbit",
    "generate_flow_orbit",
    "unit_time_map",
    "unit_time_taylor",
    "DEFAULT_MAX_N",
    "DEFAULT_DELTA",
    "RK4_STEPS",
]

MAX_ARITY = 16
FIXED_POINT_TOL = 1e-9
DEFAULT_MAX_N = 10**6
DEFAULT_DELTA = 1e-12
RK4_STEPS = 64
NEWTON_TOL = 1e-13
NEWTON_MAX_STEPS = 50
DET_TOL = 1e-12
# steps run interpreted before switching to compiled kernels
INTERPRETED_STEPS = {"forward": 4096, "inverse": 4096, "flow": 512}


class SystemValidationError(ValueError):
    pass


class OrbitError(ArithmeticError):
    """Raised when an orbit cannot be continued; ``index`` is the failing step."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message if index is None else f"{message} at orbit index {index}")
        self.index = index


class NewtonError(OrbitError):
    pass


class SingularJacobianError(OrbitError):
    pass


class _System:
    kind = "system"

    def __init__(
        self,
        components: Sequence[Expression | str],
        variables: Sequence[str] | None = None,
        fixed_point: Sequence[float] | None = None,
        name: str = "",
        parameters: dict | None = None,
    ):
        comps = list(components)
        if variables is None:
            if not comps or not isinstance(comps[0], Expression):
                raise SystemValidationError("variables are required when components are strings")
            variables = comps[0].variables
        variables = tuple(variables)
        n = len(variables)
        if not 1 <= n <= MAX_ARITY:
            raise SystemValidationError(f"arity must be in [1, {MAX_ARITY}], got {n}")
        if len(comps) != n:
            raise SystemValidationError(f"{n} variables but {len(comps)} components")
        parsed = []
        for c in comps:
            if isinstance(c, str):
                c = parse(c, variables, parameters)
            if c.variables != variables:
                raise SystemValidationError(
                    f"component over {c.variables}, system variables are {variables}"
                )
            parsed.append(c)
        self.components: tuple[Expression, ...] = tuple(parsed)
        self.variables = variables
        x0 = np.zeros(n) if fixed_point is None else np.asarray(fixed_point, dtype=float).ravel()
        if x0.shape != (n,) or not np.all(np.isfinite(x0)):
            raise SystemValidationError(f"fixed point must be a finite {n}-vector")
        x0.setflags(write=False)
        self.fixed_point = x0
        self.name = name
        self._validate()

    @property
    def arity(self) -> int:
        return len(self.variables)

    def __call__(self, x) -> np.ndarray:
        x = _as_point(x, self.arity)
        return np.array([c.evaluate(x) for c in self.components])

    def __repr__(self):
        eqs = ", ".join(f"{v}: {c}" for v, c in zip(self.variables, self.components))
        return f"{type(self).__name__}({self.name or '?'}; {eqs})"

    @cached_property
    def jacobian_expressions(self) -> tuple[tuple[Expression, ...], ...]:
        return tuple(
            tuple(differentiate(c, j) for j in range(self.arity)) for c in self.components
        )

    def jacobian(self, x) -> np.ndarray:
        """Jacobian from the symbolic partial derivatives."""
        x = _as_point(x, self.arity)
        jm = np.array([[d.evaluate(x) for d in row] for row in self.jacobian_expressions])
        if not np.all(np.isfinite(jm)):
            raise NonFiniteError(f"non-finite Jacobian entry at {x.tolist()}")
        return jm

    @cached_property
    def _f(self):
        return K.compile_vector_function(tuple(c.to_source() for c in self.components))

    @cached_property
    def _jac(self):
        return K.compile_matrix_function(
            tuple(tuple(d.to_source() for d in row) for row in self.jacobian_expressions)
        )

    @cached_property
    def _f_py(self):
        return K.python_vector_function(tuple(c.to_source() for c in self.components))

    @cached_property
    def _jac_py(self):
        return K.python_matrix_function(
            tuple(tuple(d.to_source() for d in row) for row in self.jacobian_expressions)
        )

    def _validate(self):
        raise NotImplementedError


class MapSystem(_System):
    """``x -> F(x)`` with a declared fixed point (origin by default)."""

    kind = "map"

    def _validate(self):
        residual = np.linalg.norm(self(self.fixed_point) - self.fixed_point)
        if not residual <= FIXED_POINT_TOL:
            raise SystemValidationError(
                f"{self.fixed_point.tolist()} is not a fixed point (|F(x0) - x0| = {residual:.3g})"
            )


class FlowSystem(_System):
    """``dx/dt = F(x)`` with a declared singularity.

    ``box_radius`` bounds the region (around the singularity) in which the
    unit-time map may be evaluated.
    """

    kind = "flow"

    def __init__(self, *args, box_radius: float = 1e3, **kwargs):
        self.box_radius = float(box_radius)
        super().__init__(*args, **kwargs)

    def _validate(self):
        residual = np.linalg.norm(self(self.fixed_point))
        if not residual <= FIXED_POINT_TOL:
            raise SystemValidationError(
                f"{self.fixed_point.tolist()} is not a singularity (|F(x0)| = {residual:.3g})"
            )


class Stop(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    DIVERGED = "diverged"
    LANDED = "landed_on_fixed_point"


@dataclass(frozen=True)
class Termination:
    reason: Stop
    threshold: float | None = None  # delta for CONVERGED, R for DIVERGED

    def __str__(self):
        if self.threshold is None:
            return self.reason.value
        return f"{self.reason.value}({self.threshold:g})"


@dataclass(frozen=True, eq=False)
class Orbit:
    """A finite orbit ``x_1, ..., x_M`` stored as an ``(M, n)`` array."""

    points: np.ndarray
    fixed_point: np.ndarray
    direction: str
    termination: Termination
    system: object = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("an orbit needs at least one point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        x0 = np.asarray(self.fixed_point, dtype=float).ravel()
        if x0.shape != (pts.shape[1],):
            raise ValueError("fixed point dimension does not match the orbit")
        object.__setattr__(self, "fixed_point", x0)

    def __len__(self):
        return len(self.points)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def initial(self) -> np.ndarray:
        return self.points[0]

    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.points - self.fixed_point, axis=1)

    @classmethod
    def from_points(cls, points, fixed_point=None, direction="forward", termination=None):
        """Wrap an explicit point sequence (e.g. a closed-form orbit)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        x0 = np.zeros(pts.shape[1]) if fixed_point is None else fixed_point
        return cls(pts, x0, direction, termination or Termination(Stop.MAX_ITERATIONS))


def _as_point(x, n) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (n,):
        raise ValueError(f"expected a point of dimension {n}, got shape {x.shape}")
    return x


def _check_orbit_args(sys, x1, max_n, delta, radius):
    x1 = _as_point(x1, sys.arity)
    if not np.all(np.isfinite(x1)):
        raise ValueError("initial point must be finite")
    if max_n < 1:
        raise ValueError("max_n must be positive")
    if not delta > 0:
        raise ValueError("convergence radius delta must be positive")
    if radius is None:
        radius = 1e3 * (1.0 + float(np.linalg.norm(x1)))
    if not radius > np.linalg.norm(x1 - sys.fixed_point):
        raise ValueError("divergence radius must exceed the initial distance to the fixed point")
    return x1, int(max_n), float(delta), float(radius)


def _run(interpreted, compiled, budget, x1, max_n, args):
    """Run ``interpreted`` for up to ``budget`` points, then ``compiled`` for the rest."""
    first = min(max_n, budget)
    # match the compiled kernels, which produce inf/nan silently
    with np.errstate(all="ignore"):
        pts, count, status, index = interpreted(x1, first, *args)
    if status != K.MAX_ITERATIONS or first == max_n:
        return pts[:count], count, status, index
    more, count2, status, index = compiled(pts[count - 1].copy(), max_n - count + 1, *args)
    if index >= 0:
        index += count - 1
    return np.concatenate((pts[:count], more[1:count2])), count + count2 - 1, status, index


def _finish(sys, pts, count, status, index, direction, delta, radius) -> Orbit:
    if status == K.NON_FINITE:
        raise OrbitError("non-finite state", index)
    if status == K.NEWTON_FAILED:
        raise NewtonError(f"Newton inversion did not converge in {NEWTON_MAX_STEPS} steps", index)
    if status == K.SINGULAR:
        raise SingularJacobianError(f"Jacobian determinant below {DET_TOL:g}", index)
    term = {
        K.CONVERGED: Termination(Stop.CONVERGED, delta),
        K.MAX_ITERATIONS: Termination(Stop.MAX_ITERATIONS),
        K.DIVERGED: Termination(Stop.DIVERGED, radius),
        K.LANDED: Termination(Stop.LANDED),
    }[status]
    return Orbit(pts[:count].copy(), sys.fixed_point, direction, term, sys)


def generate_orbit(
    sys: MapSystem,
    x1,
    max_n: int = DEFAULT_MAX_N,
    delta: float = DEFAULT_DELTA,
    radius: float | None = None,
) -> Orbit:
    """Forward orbit of ``x1`` under a map.

    Iteration stops once the orbit comes within ``delta`` of the fixed point,
    leaves the ball of ``radius`` (default ``1e3 * (1 + |x1|)``), or holds
    ``max_n`` points.
    """
    x1, max_n, delta, radius = _check_orbit_args(sys, x1, max_n, delta, radius)
    x0 = sys.fixed_point.copy()
    res = _run(
        lambda x, m, *a: K.forward_orbit_py(sys._f_py, x, x0, m, *a),
        lambda x, m, *a: K.forward_orbit(sys._f, x, x0, m, *a),
        INTERPRETED_STEPS["forward"], x1, max_n, (delta, radius),
    )
    return _finish(sys, *res, "forward", delta, radius)


def generate_inverse_orbit(
    sys: MapSystem,
    x1,
    max_n: int = DEFAULT_MAX_N,
    delta: float = DEFAULT_DELTA,
    radius: float | None = None,
) -> Orbit:
    """Orbit under ``F^{-1}``, each preimage found by Newton's method.

    Each solve of ``F(y) = x_j`` is seeded at ``x_j`` and stops when the
    Newton step is below ``1e-13`` relative to ``|y|``.  Raises
    :class:`SingularJacobianError` if ``|det DF|`` drops to ``1e-12`` and
    :class:`NewtonError` after 50 unsuccessful steps.
    """
    x1, max_n, delta, radius = _check_orbit_args(sys, x1, max_n, delta, radius)
    x0 = sys.fixed_point.copy()
    res = _run(
        lambda x, m, *a: K.inverse_orbit_py(sys._f_py, sys._jac_py, x, x0, m, *a),
        lambda x, m, *a: K.inverse_orbit(sys._f, sys._jac, x, x0, m, *a),
        INTERPRETED_STEPS["inverse"], x1, max_n,
        (delta, radius, NEWTON_TOL, NEWTON_MAX_STEPS, DET_TOL),
    )
    return _finish(sys, *res, "inverse", delta, radius)


def unit_time_map(flow: FlowSystem, x, steps: int = RK4_STEPS, t: float = 1.0) -> np.ndarray:
    """Time-one map of the flow by fixed-step RK4 (``t=-1`` runs it backwards)."""
    x = _as_point(x, flow.arity)
    if not np.linalg.norm(x - flow.fixed_point, ord=np.inf) <= flow.box_radius:
        raise ValueError(f"{x.tolist()} lies outside the integration box")
    with np.errstate(all="ignore"):
        y = K.rk4_flow_py(flow._f_py, x, float(t), int(steps))
    if not np.all(np.isfinite(y)):
        raise OrbitError("non-finite state during integration")
    return y


def generate_flow_orbit(
    flow: FlowSystem,
    x1,
    max_n: int = DEFAULT_MAX_N,
    delta: float = DEFAULT_DELTA,
    radius: float | None = None,
    stability_hint: str = "stable",
    steps: int = RK4_STEPS,
) -> Orbit:
    """Orbit of the unit-time map on the trajectory through ``x1``.

    With ``stability_hint="unstable"`` the map is run backwards by
    integrating over ``[0, -1]``.  The hint is required because semistable
    singularities attract on one side and repel on the other.
    """
    if stability_hint not in ("stable", "unstable"):
        raise ValueError("stability_hint must be 'stable' or 'unstable'")
    x1, max_n, delta, radius = _check_orbit_args(flow, x1, max_n, delta, radius)
    if not np.linalg.norm(x1 - flow.fixed_point, ord=np.inf) <= flow.box_radius:
        raise ValueError(f"{x1.tolist()} lies outside the integration box")
    radius = min(radius, flow.box_radius)
    t = 1.0 if stability_hint == "stable" else -1.0
    x0 = flow.fixed_point.copy()
    res = _run(
        lambda x, m, *a: K.flow_orbit_py(flow._f_py, x, x0, m, *a),
        lambda x, m, *a: K.flow_orbit(flow._f, x, x0, m, *a),
        INTERPRETED_STEPS["flow"], x1, max_n, (delta, radius, t, int(steps)),
    )
    direction = "forward" if t > 0 else "backward"
    return _finish(flow, *res, direction, delta, radius)


def unit_time_taylor(
    flow: FlowSystem, order: int, radius: float = 0.1, samples: int = 41, fit_degree: int = 12
) -> np.ndarray:
    """Taylor coefficients (orders ``0..order``) of a 1-D unit-time map.

    The map is sampled at Chebyshev nodes on ``[x0 - radius, x0 + radius]``
    and fitted by least squares in the Chebyshev basis; the power-series
    coefficients of the fit are returned.
    """
    if flow.arity != 1:
        raise ValueError("unit_time_taylor needs a one-dimensional flow")
    x0 = flow.fixed_point[0]
    nodes = np.cos(np.pi * (np.arange(samples) + 0.5) / samples)
    values = np.array([unit_time_map(flow, [x0 + radius * s])[0] - x0 for s in nodes])
    cheb = np.polynomial.chebyshev.Chebyshev.fit(nodes, values, fit_degree, domain=[-1, 1])
    coeffs = cheb.convert(kind=np.polynomial.Polynomial).coef
    scaled = coeffs / radius ** np.arange(len(coeffs))
    out = np.zeros(order + 1)
    m = min(order + 1, len(scaled))
    out[:m] = scaled[:m]
    return out
