"""Box dimension and Minkowski content of finite orbits.

Three estimators are provided:

* ``exact_1d``: the Lebesgue measure of the epsilon-neighbourhood of a point
  set on the line, computed exactly by merging intervals, fitted as
  ``dim = 1 - slope(log |S_eps| vs log eps)``;
* ``grid``: the number of occupied cells of an epsilon grid anchored at the
  fixed point, fitted as ``dim = slope(log N(eps) vs log(1/eps))``;
* ``tail_exponent``: for monotone 1-D orbits with ``|x_n - x0| ~ n^(-p)``,
  ``dim = 1 / (1 + p)``.

A finite set has dimension zero, so the fits are restricted to the scaling
range between the final orbit gap and a tenth of the diameter.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynsys import Orbit

__all__ = [
    "NeighborhoodMeasurement",
    "DimensionEstimate",
    "ContentEstimate",
    "EstimationError",
    "InsufficientDataError",
    "exact_measure_1d",
    "exact_measures_1d",
    "grid_box_count",
    "grid_box_counts",
    "epsilon_grid",
    "estimate_dimension",
    "tail_exponent_dimension",
    "projective_dimensions",
    "minkowski_content",
    "MIN_POINTS",
    "N_EPSILON",
    "WINDOW",
]

MIN_POINTS = 100
N_EPSILON = 48
MIN_EPSILON_SAMPLES = 32
WINDOW = 16
EPS_MAX_FRACTION = 0.1
EPS_FLOOR_FRACTION = 1e-9
DEDUP_TOL = 1e-14
LOW_R2 = 0.95


class EstimationError(ValueError):
    pass


class InsufficientDataError(EstimationError):
    pass


@dataclass(frozen=True)
class NeighborhoodMeasurement:
    epsilon: float
    measure: float
    method: str  # "exact_1d" | "grid"


@dataclass(frozen=True)
class DimensionEstimate:
    value: float
    slope: float
    eps_min: float
    eps_max: float
    n_samples: int
    r2: float
    method: str  # "neighborhood_slope" | "box_count_slope" | "tail_exponent"
    measurements: tuple[NeighborhoodMeasurement, ...] = field(default=(), repr=False)
    flags: tuple[str, ...] = ()

    @property
    def reliable(self) -> bool:
        return self.r2 >= LOW_R2 and "degenerate" not in self.flags

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "slope": self.slope,
            "r2": self.r2,
            "eps_min": self.eps_min,
            "eps_max": self.eps_max,
            "n_samples": self.n_samples,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class ContentEstimate:
    s: float
    upper: float  # sup over the fit window of |S_eps| / eps^(N - s)
    lower: float  # inf over the same window
    eps_min: float
    eps_max: float


# -- measurements ---------------------------------------------------------------


def _sorted_1d(points) -> np.ndarray:
    x = np.asarray(points, dtype=float).ravel()
    if x.size == 0:
        raise EstimationError("empty point set")
    if not np.all(np.isfinite(x)):
        raise EstimationError("point set contains non-finite values")
    if np.any(np.diff(x) < 0):
        x = np.sort(x)
    return x


def exact_measures_1d(points, epsilons) -> np.ndarray:
    """``|S_eps|`` for each eps: length of the union of ``(x_j - eps, x_j + eps)``.

    Sorting once turns the union into ``2 eps + sum_j min(gap_j, 2 eps)``;
    prefix sums over the sorted gaps give each value in ``O(log M)``.
    """
    x = _sorted_1d(points)
    gaps = np.sort(np.diff(x))
    prefix = np.concatenate(([0.0], np.cumsum(gaps)))
    eps = np.asarray(epsilons, dtype=float)
    if np.any(eps <= 0):
        raise EstimationError("epsilon must be positive")
    # gaps <= 2 eps merge, so they contribute their own length
    k = np.searchsorted(gaps, 2.0 * eps, side="right")
    return 2.0 * eps + prefix[k] + 2.0 * eps * (len(gaps) - k)


def exact_measure_1d(points, eps: float) -> NeighborhoodMeasurement:
    return NeighborhoodMeasurement(float(eps), float(exact_measures_1d(points, [eps])[0]), "exact_1d")


def _cells(points, eps, anchor) -> np.ndarray:
    return np.floor((points - anchor) / eps).astype(np.int64)


def _count_cells(points: np.ndarray, eps: float, anchor: np.ndarray) -> int:
    c = _cells(points, eps, anchor)
    if c.shape[1] == 1:
        return int(np.unique(c[:, 0]).size)
    # consecutive orbit points often share a cell; drop those first
    keep = np.ones(len(c), dtype=bool)
    keep[1:] = np.any(c[1:] != c[:-1], axis=1)
    c = c[keep]
    lo = c.min(axis=0)
    span = c.max(axis=0) - lo + 1
    if np.prod(span.astype(float)) < 2.0**62:
        radix = np.concatenate(([1], np.cumprod(span[:-1])))
        return int(np.unique((c - lo) @ radix).size)
    return int(np.unique(c, axis=0).shape[0])


def grid_box_counts(points, epsilons, anchor=None) -> np.ndarray:
    """Occupied-cell counts of grids with side eps anchored at ``anchor``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.size == 0:
        raise EstimationError("empty point set")
    if not np.all(np.isfinite(pts)):
        raise EstimationError("point set contains non-finite values")
    anchor = np.zeros(pts.shape[1]) if anchor is None else np.asarray(anchor, dtype=float).ravel()
    if pts.shape[1] == 1:
        # 1-D: sort once, count changes of cell index
        x = np.sort(pts[:, 0]) - anchor[0]
        out = []
        for e in np.asarray(epsilons, dtype=float):
            if e <= 0:
                raise EstimationError("epsilon must be positive")
            c = np.floor(x / e)
            out.append(1 + int(np.count_nonzero(c[1:] != c[:-1])))
        return np.array(out, dtype=float)
    out = []
    for e in np.asarray(epsilons, dtype=float):
        if e <= 0:
            raise EstimationError("epsilon must be positive")
        out.append(_count_cells(pts, e, anchor))
    return np.array(out, dtype=float)


def grid_box_count(points, eps: float, anchor=None) -> NeighborhoodMeasurement:
    return NeighborhoodMeasurement(float(eps), float(grid_box_counts(points, [eps], anchor)[0]), "grid")


# -- fitting ------------------------------------------------------------------


def _diameter(pts: np.ndarray) -> float:
    if pts.shape[1] == 1:
        return float(np.ptp(pts[:, 0]))
    # double sweep: farthest point from the start, then farthest from that
    a = pts[np.argmax(np.linalg.norm(pts - pts[0], axis=1))]
    return float(np.max(np.linalg.norm(pts - a, axis=1)))


def epsilon_grid(points, last_gap: float | None = None, samples: int = N_EPSILON) -> np.ndarray:
    """Log-spaced epsilons from ``max(last_gap, 1e-9 diam)`` to ``diam / 10``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    diam = _diameter(pts)
    if diam == 0.0:
        raise EstimationError("point set has zero diameter")
    if last_gap is None:
        last_gap = float(np.linalg.norm(pts[-1] - pts[-2])) if len(pts) > 1 else 0.0
    eps_max = EPS_MAX_FRACTION * diam
    eps_min = max(last_gap, EPS_FLOOR_FRACTION * diam)
    if not eps_min < eps_max:
        raise EstimationError(
            f"no scaling range: final gap {last_gap:.3g} is not below diameter/10 = {eps_max:.3g}"
        )
    return np.geomspace(eps_min, eps_max, samples)


def _linfit(x, y):
    xm = x.mean()
    ym = y.mean()
    sxx = np.sum((x - xm) ** 2)
    sxy = np.sum((x - xm) * (y - ym))
    syy = np.sum((y - ym) ** 2)
    slope = sxy / sxx
    if syy == 0.0:
        return slope, 1.0
    r2 = (sxy * sxy) / (sxx * syy)
    return slope, float(min(max(r2, 0.0), 1.0))


def _best_window(x, y, window):
    """Slope and R^2 of the ``window``-sample stretch with the highest R^2."""
    window = min(window, len(x))
    best = None
    for i in range(len(x) - window + 1):
        slope, r2 = _linfit(x[i : i + window], y[i : i + window])
        if best is None or r2 > best[1]:
            best = (slope, r2, i)
    return best


def _fit(eps, measures, method, ambient, window, measurements):
    flags = []
    logm = np.log(measures)
    if np.ptp(logm) == 0.0:
        return DimensionEstimate(
            0.0, 0.0, float(eps[0]), float(eps[-1]), len(eps), 0.0,
            "neighborhood_slope" if method == "exact_1d" else "box_count_slope",
            measurements, ("degenerate",),
        )
    if method == "exact_1d":
        slope, r2, i = _best_window(np.log(eps), logm, window)
        value = ambient - slope
        name = "neighborhood_slope"
    else:
        slope, r2, i = _best_window(np.log(1.0 / eps[::-1]), logm[::-1], window)
        i = len(eps) - window - i
        value = slope
        name = "box_count_slope"
    if r2 < LOW_R2:
        flags.append("low_r2")
    value = float(min(max(value, 0.0), ambient))
    lo = eps[i]
    hi = eps[min(i + window, len(eps)) - 1]
    return DimensionEstimate(
        value, float(slope), float(lo), float(hi), int(min(window, len(eps))), r2, name,
        measurements, tuple(flags),
    )


def _as_points(orbit):
    if isinstance(orbit, Orbit):
        return orbit.points, orbit.fixed_point
    pts = np.asarray(orbit, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts, np.zeros(pts.shape[1])


def estimate_dimension(
    orbit,
    eps_grid=None,
    method: str | None = None,
    window: int = WINDOW,
    anchor=None,
) -> DimensionEstimate:
    """Box dimension of an orbit's point set.

    ``method`` defaults to ``"exact_1d"`` on the line and ``"grid"``
    otherwise.  The auto epsilon grid has 48 log-spaced samples; the fit uses
    the 16-sample window with the best R^2.  All-equal measurements give a
    zero estimate flagged ``degenerate``; a best R^2 under 0.95 is flagged
    ``low_r2``.
    """
    pts, x0 = _as_points(orbit)
    if anchor is not None:
        x0 = np.asarray(anchor, dtype=float).ravel()
    if len(pts) < MIN_POINTS:
        raise InsufficientDataError(f"need at least {MIN_POINTS} orbit points, got {len(pts)}")
    ambient = pts.shape[1]
    if method is None:
        method = "exact_1d" if ambient == 1 else "grid"
    if method == "exact_1d" and ambient != 1:
        raise EstimationError("the exact neighbourhood measure is only available on the line")
    if method not in ("exact_1d", "grid"):
        raise EstimationError(f"unknown method {method!r}")
    eps = epsilon_grid(pts) if eps_grid is None else np.sort(np.asarray(eps_grid, dtype=float))
    if len(eps) < MIN_EPSILON_SAMPLES:
        raise EstimationError(f"epsilon grid needs at least {MIN_EPSILON_SAMPLES} samples")
    return _estimate(pts, x0, eps, method, window)


def _estimate(pts, x0, eps, method, window):
    if method == "exact_1d":
        measures = exact_measures_1d(pts[:, 0], eps)
    else:
        measures = grid_box_counts(pts, eps, x0)
    measurements = tuple(NeighborhoodMeasurement(float(e), float(m), method) for e, m in zip(eps, measures))
    return _fit(eps, measures, method, pts.shape[1], window, measurements)


def tail_exponent_dimension(orbit, fixed_point=None, start: int = 10) -> DimensionEstimate:
    """Dimension ``1 / (1 + p)`` from a power-law tail ``|x_n - x0| ~ n^(-p)``.

    Fits ``log |x_n - x0|`` against ``log n`` over the final 80% of the
    orbit.  If a straight line in ``n`` (geometric decay) fits the tail better
    than one in ``log n``, the exponent is unbounded and the value is 0.
    Orbits that are not strictly monotone towards ``x0`` after index
    ``start`` fall back to :func:`estimate_dimension`, flagged
    ``fallback_non_monotone``.
    """
    pts, x0 = _as_points(orbit)
    if fixed_point is not None:
        x0 = np.asarray(fixed_point, dtype=float).ravel()
    if pts.shape[1] != 1:
        raise EstimationError("tail exponent needs a one-dimensional orbit")
    x = pts[:, 0] - x0[0]
    d = np.abs(x)
    tail = x[start:]
    monotone = (
        len(tail) >= 3
        and np.all(d[start:] > 0)
        and (np.all(tail > 0) or np.all(tail < 0))
        and np.all(np.diff(d[start:]) < 0)
    )
    if not monotone:
        warnings.warn("orbit tail is not monotone; using the neighbourhood estimator", RuntimeWarning)
        est = estimate_dimension(orbit)
        return DimensionEstimate(
            est.value, est.slope, est.eps_min, est.eps_max, est.n_samples, est.r2, est.method,
            est.measurements, est.flags + ("fallback_non_monotone",),
        )
    m = len(x)
    first = max(int(np.ceil(0.2 * m)), 1)
    n = np.arange(first, m + 1, dtype=float)  # 1-based orbit indices
    logd = np.log(d[first - 1 :])
    slope, r2 = _linfit(np.log(n), logd)
    _, r2_geometric = _linfit(n, logd)
    p = -slope
    flags = []
    if r2_geometric > r2 or p <= 0:
        value = 0.0
        flags.append("geometric_decay")
    else:
        value = 1.0 / (1.0 + p)
    if r2 < LOW_R2 and not flags:
        flags.append("low_r2")
    return DimensionEstimate(
        float(value), float(slope), float(d[-1]), float(d[first - 1]), len(n), r2,
        "tail_exponent", (), tuple(flags),
    )


def _dedup(values: np.ndarray) -> np.ndarray:
    v = np.sort(values)
    if len(v) < 2:
        return v
    keep = np.ones(len(v), dtype=bool)
    keep[1:] = np.diff(v) > DEDUP_TOL
    return v[keep]


def projective_dimensions(orbit, window: int = WINDOW) -> list[DimensionEstimate]:
    """Box dimension of the orbit's projection on each coordinate axis.

    Projections are deduplicated (values closer than 1e-14 merge) and measured
    with the exact 1-D estimator.  Orbits shorter than 100 points and
    projections with a single distinct value give zero estimates flagged
    ``insufficient_data`` / ``degenerate``.
    """
    pts, x0 = _as_points(orbit)
    out = []
    for k in range(pts.shape[1]):
        column = pts[:, k]
        values = _dedup(column)
        if len(values) < 2:
            out.append(_zero_estimate("degenerate"))
            continue
        if len(pts) < MIN_POINTS:
            out.append(_zero_estimate("insufficient_data"))
            continue
        last_gap = abs(column[-1] - column[-2])
        try:
            eps = epsilon_grid(values[:, None], last_gap=last_gap)
        except EstimationError:
            out.append(_zero_estimate("degenerate"))
            continue
        out.append(_estimate(values[:, None], x0[k : k + 1], eps, "exact_1d", window))
    return out


def _zero_estimate(flag):
    return DimensionEstimate(0.0, 0.0, 0.0, 0.0, 0, 0.0, "neighborhood_slope", (), (flag,))


def minkowski_content(orbit, s: float, estimate: DimensionEstimate | None = None) -> ContentEstimate:
    """Bounds on the ``s``-dimensional Minkowski content over the fit window.

    Evaluates ``|S_eps| / eps^(N - s)`` at the measured epsilons inside the
    window of ``estimate`` (computed if not given) and returns the sup and
    inf.  On grids ``|S_eps|`` is taken as ``N(eps) eps^N``.
    """
    pts, _ = _as_points(orbit)
    ambient = pts.shape[1]
    if not 0 <= s <= ambient:
        raise EstimationError(f"s must lie in [0, {ambient}]")
    if estimate is None:
        estimate = estimate_dimension(orbit)
    eps = np.array([m.epsilon for m in estimate.measurements])
    meas = np.array([m.measure for m in estimate.measurements])
    method = estimate.measurements[0].method
    inside = (eps >= estimate.eps_min) & (eps <= estimate.eps_max)
    eps, meas = eps[inside], meas[inside]
    volume = meas if method == "exact_1d" else meas * eps**ambient
    ratio = volume / eps ** (ambient - s)
    return ContentEstimate(float(s), float(ratio.max()), float(ratio.min()), float(eps.min()), float(eps.max()))
