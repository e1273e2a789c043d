"""Hyperbolicity of fixed points and singularities.

Spectral classification uses the symbolic Jacobian and the QR eigenvalue
solver in :mod:`orbitdim.linalg`.  The fractal detector looks at projective
box dimensions of an orbit instead: a projection with positive dimension
(above ``theta``) proves the limit point is nonhyperbolic.  The converse
does not hold, so the detector never certifies hyperbolicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boxdim import LOW_R2, DimensionEstimate, projective_dimensions
from .dynsys import FIXED_POINT_TOL, FlowSystem, MapSystem, Orbit, Stop, unit_time_map
from .expr import NonFiniteError
from .linalg import eigvals

__all__ = [
    "Spectrum",
    "ClassificationReport",
    "ClassificationError",
    "ConsistencyError",
    "NonConvergentOrbitError",
    "jacobian",
    "eigenvalues",
    "classify_map_fixed_point",
    "classify_flow_singularity",
    "detect_nonhyperbolic_via_dimension",
    "unit_time_jacobian",
    "DEFAULT_ETA",
    "DEFAULT_THETA",
    "HYPERBOLIC_STABLE",
    "HYPERBOLIC_UNSTABLE",
    "HYPERBOLIC_SADDLE",
    "NONHYPERBOLIC",
    "NO_EVIDENCE",
]

DEFAULT_ETA = 1e-6
DEFAULT_THETA = 0.2
MAX_DIMENSION = 16
PAIR_TOL = 1e-9
SPECTRAL_TOL = 1e-4
FD_STEP = 1e-5

HYPERBOLIC_STABLE = "hyperbolic_stable"
HYPERBOLIC_UNSTABLE = "hyperbolic_unstable"
HYPERBOLIC_SADDLE = "hyperbolic_saddle"
NONHYPERBOLIC = "nonhyperbolic"
NO_EVIDENCE = "no_evidence"


class ClassificationError(ValueError):
    pass


class ConsistencyError(ArithmeticError):
    """Two routes to the same spectral quantity disagree."""


class NonConvergentOrbitError(ClassificationError):
    pass


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with their split by the unit circle (maps) or imaginary axis (flows).

    ``n_minus`` counts contracting eigenvalues (modulus < 1 or negative real
    part), ``n_plus`` expanding ones and ``n_zero`` those within ``eta`` of
    the boundary.
    """

    values: tuple[complex, ...]
    kind: str  # "map" | "flow"
    eta: float
    n_minus: int
    n_plus: int
    n_zero: int

    @property
    def n(self) -> int:
        return len(self.values)

    def indicator(self) -> np.ndarray:
        """Moduli for maps, real parts for flows."""
        v = np.array(self.values, dtype=complex)
        return np.abs(v) if self.kind == "map" else v.real

    def verdict(self) -> str:
        if self.n_zero:
            return NONHYPERBOLIC
        if self.n_plus == 0:
            return HYPERBOLIC_STABLE
        if self.n_minus == 0:
            return HYPERBOLIC_UNSTABLE
        return HYPERBOLIC_SADDLE

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.values],
            ("moduli" if self.kind == "map" else "real_parts"): [float(v) for v in self.indicator()],
            "n_minus": self.n_minus,
            "n_plus": self.n_plus,
            "n_zero": self.n_zero,
            "eta": self.eta,
        }


@dataclass(frozen=True)
class ClassificationReport:
    point: tuple[float, ...]
    spectrum: Spectrum | None
    verdict: str | None
    evidence: str  # "spectral" | "projective_dimension"
    projective: tuple[DimensionEstimate, ...] | None = None
    predicted_dimension: float | None = None
    flags: tuple[str, ...] = ()
    unit_time_multipliers: tuple[complex, ...] | None = field(default=None)

    def to_dict(self) -> dict:
        out = {
            "point": [float(v) for v in self.point],
            "verdict": self.verdict,
            "evidence": self.evidence,
            "flags": list(self.flags),
        }
        if self.spectrum is not None:
            out["spectrum"] = self.spectrum.to_dict()
        if self.unit_time_multipliers is not None:
            out["unit_time_moduli"] = [float(abs(z)) for z in self.unit_time_multipliers]
        if self.projective is not None:
            out["projective_dimensions"] = [e.to_dict() for e in self.projective]
        if self.predicted_dimension is not None:
            out["predicted_dimension"] = self.predicted_dimension
        return out


def jacobian(sys: MapSystem | FlowSystem, point=None) -> np.ndarray:
    """Jacobian from symbolic partial derivatives (fixed point by default)."""
    point = sys.fixed_point if point is None else np.asarray(point, dtype=float)
    if not np.all(np.isfinite(point)):
        raise ClassificationError("point must be finite")
    return sys.jacobian(point)


def eigenvalues(m, kind: str = "map", eta: float = DEFAULT_ETA) -> Spectrum:
    """Spectrum of a real matrix of order at most 16."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ClassificationError("matrix must be square")
    if m.shape[0] > MAX_DIMENSION:
        raise ClassificationError(f"matrix order {m.shape[0]} exceeds {MAX_DIMENSION}")
    if kind not in ("map", "flow"):
        raise ClassificationError("kind must be 'map' or 'flow'")
    if not eta >= 0:
        raise ClassificationError("eta must be non-negative")
    vals = eigvals(m)
    _check_pairing(vals)
    if kind == "map":
        ind = np.abs(vals)
        boundary = np.abs(ind - 1.0) <= eta
        minus = ~boundary & (ind < 1.0)
    else:
        ind = vals.real
        boundary = np.abs(ind) <= eta
        minus = ~boundary & (ind < 0.0)
    plus = ~boundary & ~minus
    return Spectrum(
        tuple(complex(v) for v in vals), kind, float(eta),
        int(minus.sum()), int(plus.sum()), int(boundary.sum()),
    )


def _check_pairing(vals):
    scale = max(1.0, float(np.max(np.abs(vals)))) if len(vals) else 1.0
    complex_ones = [v for v in vals if abs(v.imag) > PAIR_TOL * scale]
    for v in complex_ones:
        if not any(abs(w - np.conj(v)) <= PAIR_TOL * scale for w in complex_ones):
            raise ConsistencyError(f"eigenvalue {v} has no conjugate partner")


def classify_map_fixed_point(sys: MapSystem, point=None, eta: float = DEFAULT_ETA) -> ClassificationReport:
    point = sys.fixed_point if point is None else np.asarray(point, dtype=float)
    residual = np.linalg.norm(sys(point) - point)
    if not residual <= FIXED_POINT_TOL:
        raise ClassificationError(f"{point.tolist()} is not a fixed point (|F(x) - x| = {residual:.3g})")
    spec = eigenvalues(jacobian(sys, point), "map", eta)
    return ClassificationReport(tuple(point.tolist()), spec, spec.verdict(), "spectral")


def unit_time_jacobian(flow: FlowSystem, point=None, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of the unit-time map."""
    point = flow.fixed_point if point is None else np.asarray(point, dtype=float)
    n = flow.arity
    out = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        out[:, j] = (unit_time_map(flow, point + e) - unit_time_map(flow, point - e)) / (2 * step)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("non-finite unit-time Jacobian")
    return out


def classify_flow_singularity(
    flow: FlowSystem, point=None, eta: float = DEFAULT_ETA, check: bool = True
) -> ClassificationReport:
    """Spectral verdict from real parts, cross-checked on the unit-time map.

    The moduli of the numerical unit-time-map multipliers must equal
    ``exp(Re lambda)`` within 1e-4; otherwise :class:`ConsistencyError`.
    """
    point = flow.fixed_point if point is None else np.asarray(point, dtype=float)
    residual = np.linalg.norm(flow(point))
    if not residual <= FIXED_POINT_TOL:
        raise ClassificationError(f"{point.tolist()} is not a singularity (|F(x)| = {residual:.3g})")
    spec = eigenvalues(jacobian(flow, point), "flow", eta)
    multipliers = None
    if check:
        multipliers = eigvals(unit_time_jacobian(flow, point))
        got = np.sort(np.abs(multipliers))
        want = np.sort(np.exp(spec.indicator()))
        err = float(np.max(np.abs(got - want)))
        if err > SPECTRAL_TOL:
            raise ConsistencyError(
                f"unit-time multiplier moduli {got.tolist()} differ from exp(Re lambda) "
                f"{want.tolist()} by {err:.3g}"
            )
        multipliers = tuple(complex(z) for z in multipliers)
    return ClassificationReport(tuple(point.tolist()), spec, spec.verdict(), "spectral",
                                unit_time_multipliers=multipliers)


def _convergence(orbit: Orbit):
    """``None`` if the orbit may be taken to converge to its fixed point, else a flag."""
    reason = orbit.termination.reason
    if reason in (Stop.CONVERGED, Stop.LANDED):
        return None
    if reason == Stop.DIVERGED:
        raise NonConvergentOrbitError("orbit diverged; the detector needs an orbit converging to x0")
    d = orbit.distances()
    tail = d[-max(len(d) // 10, 2):]
    if d[-1] <= 0.1 * d[0] and np.all(np.diff(tail) <= 0):
        return None
    return "fixed_point_mismatch"


def detect_nonhyperbolic_via_dimension(
    orbit: Orbit, theta: float = DEFAULT_THETA, r2_min: float = LOW_R2
) -> ClassificationReport:
    """Fires when some projective box dimension of the orbit exceeds ``theta``.

    Orbits stopped at the iteration cap count as convergent when their
    final distance is at most a tenth of the initial one and the last tenth
    of the distances is nonincreasing.  Otherwise the result has no verdict
    and the flag ``fixed_point_mismatch``.  Diverged orbits raise
    :class:`NonConvergentOrbitError`.
    """
    point = tuple(orbit.fixed_point.tolist())
    mismatch = _convergence(orbit)
    if mismatch:
        return ClassificationReport(point, None, None, "projective_dimension", flags=(mismatch,))
    dims = tuple(projective_dimensions(orbit))
    flags = tuple(sorted({f for e in dims for f in e.flags}))
    fired = any(e.value > theta and e.r2 >= r2_min for e in dims)
    verdict = NONHYPERBOLIC if fired else NO_EVIDENCE
    return ClassificationReport(point, None, verdict, "projective_dimension", dims, flags=flags)
