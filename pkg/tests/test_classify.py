import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import orbitdim.classify as classify
from orbitdim.classify import (
    ClassificationError,
    ConsistencyError,
    NonConvergentOrbitError,
    classify_flow_singularity,
    classify_map_fixed_point,
    detect_nonhyperbolic_via_dimension,
    eigenvalues,
    jacobian,
)
from orbitdim.dynsys import FlowSystem, MapSystem, Orbit, Stop, Termination, generate_orbit
from orbitdim.syslib import entry_names, get_entry

from conftest import catalog_orbit


# -- jacobian and spectrum ------------------------------------------------------------------


def test_jacobian_examples():
    node = MapSystem(["0.8*x", "0.7*y"], ["x", "y"])
    assert jacobian(node).tolist() == [[0.8, 0.0], [0.0, 0.7]]
    focus = MapSystem(["0.8*x + 0.2*y", "-0.2*x + 0.8*y"], ["x", "y"])
    assert jacobian(focus).tolist() == [[0.8, 0.2], [-0.2, 0.8]]
    ident = MapSystem(["x", "y", "z"], ["x", "y", "z"])
    assert jacobian(ident).tolist() == np.eye(3).tolist()
    with pytest.raises(ClassificationError):
        jacobian(node, [np.nan, 0.0])


def test_spectrum_examples():
    s = eigenvalues(np.diag([0.8, 0.7]))
    assert sorted(z.real for z in s.values) == pytest.approx([0.7, 0.8], abs=1e-15)
    assert (s.n_minus, s.n_plus, s.n_zero) == (2, 0, 0)

    s = eigenvalues([[0.8, 0.2], [-0.2, 0.8]])
    # roots of l^2 - 1.6 l + 0.68
    roots = np.roots([1.0, -1.6, 0.68])
    assert sorted(s.values, key=lambda z: z.imag) == pytest.approx(sorted(roots, key=lambda z: z.imag), abs=1e-14)
    assert s.indicator() == pytest.approx([np.sqrt(0.68)] * 2, abs=1e-14)
    assert s.verdict() == "hyperbolic_stable"

    s = eigenvalues(np.diag([1.0, 0.5]))
    assert s.n_zero == 1 and s.verdict() == "nonhyperbolic"


def test_spectrum_argument_checks():
    with pytest.raises(ClassificationError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ClassificationError):
        eigenvalues(np.eye(17))
    with pytest.raises(ClassificationError):
        eigenvalues(np.eye(2), kind="other")


matrices = st.integers(1, 8).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-3, 3, allow_nan=False, allow_infinity=False))
)


@settings(max_examples=100, deadline=None)
@given(matrices, st.sampled_from(["map", "flow"]))
def test_spectrum_invariants(m, kind):
    s = eigenvalues(m, kind)
    assert s.n_minus + s.n_plus + s.n_zero == s.n == len(m)
    vals = np.array(s.values)
    scale = max(1.0, np.abs(vals).max())
    for v in vals[np.abs(vals.imag) > 1e-9 * scale]:
        assert np.min(np.abs(vals - np.conj(v))) <= 1e-9 * scale
    norm = max(np.linalg.norm(m, 2), 1e-300)
    for v in vals:
        smin = np.linalg.svd(m - v * np.eye(len(m)), compute_uv=False)[-1]
        assert smin < 1e-8 * max(norm, 1.0)


# -- map verdicts -----------------------------------------------------------------------------


def test_map_verdicts():
    assert classify_map_fixed_point(get_entry("node-ex1").system).verdict == "hyperbolic_stable"
    saddle = classify_map_fixed_point(MapSystem(["1.2*x", "0.7*y"], ["x", "y"]))
    assert saddle.verdict == "hyperbolic_saddle"
    assert saddle.evidence == "spectral"
    assert classify_map_fixed_point(MapSystem(["x - x^3"], ["x"])).verdict == "nonhyperbolic"
    assert classify_map_fixed_point(MapSystem(["2*x"], ["x"])).verdict == "hyperbolic_unstable"


def test_unit_circle_band():
    near = MapSystem(["0.9999999*x"], ["x"])
    assert classify_map_fixed_point(near).verdict == "nonhyperbolic"
    assert classify_map_fixed_point(near, eta=1e-9).verdict == "hyperbolic_stable"
    assert classify_map_fixed_point(MapSystem(["0.999999*x"], ["x"]), eta=1e-7).verdict == "hyperbolic_stable"


def test_map_point_must_be_fixed():
    with pytest.raises(ClassificationError):
        classify_map_fixed_point(MapSystem(["x - x^2"], ["x"]), point=[0.5])


# -- flow verdicts ----------------------------------------------------------------------------


def test_linear_decay():
    r = classify_flow_singularity(FlowSystem(["-x"], ["x"]))
    assert r.verdict == "hyperbolic_stable"
    assert abs(r.unit_time_multipliers[0]) == pytest.approx(np.exp(-1), abs=1e-8)


def test_flow_examples():
    assert classify_flow_singularity(FlowSystem(["-x^2"], ["x"])).verdict == "nonhyperbolic"
    r = classify_flow_singularity(get_entry("flow-ks2").system)
    assert r.verdict == "nonhyperbolic"
    assert r.spectrum.n_zero == 1 and r.spectrum.n_minus == 1
    assert "real_parts" in r.to_dict()["spectrum"]


def test_flow_cross_check_failure(monkeypatch):
    flow = FlowSystem(["-x"], ["x"])
    monkeypatch.setattr(classify, "unit_time_jacobian", lambda f, p: np.array([[0.5]]))
    with pytest.raises(ConsistencyError):
        classify_flow_singularity(flow)


def test_flow_point_must_be_singular():
    with pytest.raises(ClassificationError):
        classify_flow_singularity(FlowSystem(["-x^2"], ["x"]), point=[1.0])


def test_exponential_map_consistency_random(rng):
    for _ in range(5):
        a = rng.normal(size=(3, 3)) * 0.7
        eqs = [" + ".join(f"({float(a[i, j])!r})*x{j}" for j in range(3)) + f" + 0.1*x{i}^2" for i in range(3)]
        flow = FlowSystem(eqs, ["x0", "x1", "x2"])
        r = classify_flow_singularity(flow)
        got = np.sort(np.abs(r.unit_time_multipliers))
        want = np.sort(np.exp(r.spectrum.indicator()))
        assert np.max(np.abs(got - want)) < 1e-4


# -- detector ---------------------------------------------------------------------------------


def test_detector_fires_on_transcritical_orbit():
    r = detect_nonhyperbolic_via_dimension(catalog_orbit("k2"))
    assert r.verdict == "nonhyperbolic"
    assert r.evidence == "projective_dimension"
    assert r.projective[0].value == pytest.approx(0.5, abs=0.05)


def test_detector_quiet_on_node():
    r = detect_nonhyperbolic_via_dimension(catalog_orbit("node-ex1"))
    assert r.verdict == "no_evidence"
    assert all(e.value <= 0.1 for e in r.projective)


def test_detector_flags_tiny_orbit():
    o = Orbit.from_points([0.5, 0.25, 0.125], termination=Termination(Stop.CONVERGED))
    r = detect_nonhyperbolic_via_dimension(o)
    assert r.verdict == "no_evidence"
    assert "insufficient_data" in r.flags


def test_detector_needs_convergence():
    o = Orbit.from_points([1.0, 10.0, 100.0], termination=Termination(Stop.DIVERGED))
    with pytest.raises(NonConvergentOrbitError):
        detect_nonhyperbolic_via_dimension(o)


def test_detector_reports_mismatched_limit():
    # settles on 0.1 while the declared fixed point is 0
    o = Orbit(np.full((500, 1), 0.1) + np.linspace(0.4, 0, 500)[:, None] ** 2, np.zeros(1),
              "forward", Termination(Stop.MAX_ITERATIONS))
    r = detect_nonhyperbolic_via_dimension(o)
    assert r.verdict is None
    assert r.flags == ("fixed_point_mismatch",)


def test_detector_accepts_slow_orbit_at_cap():
    o = generate_orbit(MapSystem(["x - x^5"], ["x"]), [0.5], max_n=200_000)
    assert o.termination.reason == Stop.MAX_ITERATIONS
    assert detect_nonhyperbolic_via_dimension(o).verdict == "nonhyperbolic"


def _spectral(entry):
    if entry.kind == "flow":
        return classify_flow_singularity(entry.system)
    return classify_map_fixed_point(entry.system)


@pytest.mark.parametrize("name", entry_names())
def test_spectral_and_fractal_verdicts_agree(name):
    entry = get_entry(name)
    verdict = _spectral(entry).verdict
    assert verdict == entry.expected_verdict
    for label in entry.orbits:
        r = detect_nonhyperbolic_via_dimension(catalog_orbit(name, label))
        fired = r.verdict == "nonhyperbolic"
        assert fired == (verdict == "nonhyperbolic"), (name, label, r.to_dict())
