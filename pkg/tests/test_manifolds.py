import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitdim.boxdim import estimate_dimension
from orbitdim.dynsys import MapSystem, Orbit, generate_inverse_orbit, generate_orbit
from orbitdim.manifolds import (
    DegenerateError,
    HyperbolicRestrictionError,
    ManifoldError,
    ManifoldExpansion,
    NotDiagonalError,
    ResonanceError,
    invariance_residual,
    lift_orbit,
    nondegeneracy_order,
    restrict_to_manifold,
    solve_invariance,
)
from orbitdim.syslib import get_entry

from conftest import catalog_orbit

TEMPLATE = [
    "λ1*x + a1*x^2 + a2*x*y + a3*y^2",
    "λ2*y + b1*x^2 + b2*x*y + b3*y^2",
]
NAMES = ("λ1", "λ2", "a1", "a2", "a3", "b1", "b2", "b3")


def saddle(**params):
    base = dict(λ1=0.5, λ2=2.0, a1=0.0, a2=0.0, a3=0.0, b1=0.0, b2=0.0, b3=0.0)
    base.update(params)
    return MapSystem(TEMPLATE, ["x", "y"], parameters=base)


def closed_forms(λ1, λ2, a1, a2, a3, b1, b2, b3):
    """Quadratic and cubic graph coefficients, worked out by hand from the invariance equation."""
    alpha2 = b1 / (λ1**2 - λ2)
    alpha3 = b1 * (b2 - 2 * a1 * λ1) / ((λ1**2 - λ2) * (λ1**3 - λ2))
    beta2 = a3 / (λ2**2 - λ1)
    beta3 = a3 * (a2 - 2 * b3 * λ2) / ((λ2**2 - λ1) * (λ2**3 - λ1))
    return alpha2, alpha3, beta2, beta3


# -- solver ---------------------------------------------------------------------------


def test_quadratic_coefficient_example():
    exp = solve_invariance(saddle(b1=1.0), axis=0)
    assert exp.kind == "stable"
    assert exp.coefficients[0, 0] == pytest.approx(-4 / 7, abs=1e-15)
    assert exp.residual < 1e-8


def test_linear_system_has_flat_manifold():
    exp = solve_invariance(saddle(), axis=0)
    assert np.all(exp.coefficients == 0.0)
    g = restrict_to_manifold(saddle(), exp)
    assert g.coefficients.tolist() == [0.0, 0.5, 0.0, 0.0, 0.0, 0.0]


def test_matches_closed_forms_on_random_draws(rng):
    for _ in range(20):
        λ1 = rng.uniform(0.1, 0.9) * rng.choice([-1, 1])
        λ2 = rng.uniform(1.2, 3.0) * rng.choice([-1, 1])
        quad = rng.uniform(-1, 1, 6)
        params = dict(zip(NAMES, [λ1, λ2, *quad]))
        sys = saddle(**params)
        a2, a3, b2, b3 = closed_forms(λ1, λ2, *quad)
        stable = solve_invariance(sys, axis=0)
        unstable = solve_invariance(sys, axis=1)
        assert unstable.kind == "unstable"
        assert stable.coefficients[0, :2] == pytest.approx([a2, a3], abs=1e-10)
        assert unstable.coefficients[0, :2] == pytest.approx([b2, b3], abs=1e-10)
        assert stable.residual < 1e-8 and unstable.residual < 1e-8


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6), st.floats(0.1, 0.9), st.floats(1.2, 3.0))
def test_invariance_residual_is_small(quad, λ1, λ2):
    sys = saddle(**dict(zip(NAMES, [λ1, λ2, *quad])))
    for axis in (0, 1):
        exp = solve_invariance(sys, axis=axis)
        assert invariance_residual(sys, exp) < 1e-8
        # tangency: h(x)/x vanishes at the base point
        assert abs(exp.h([1e-4])[0, 0] / 1e-4) < 1e-3


def test_expansion_about_shifted_fixed_point():
    # the same saddle translated to (1, -2)
    sys = MapSystem(
        ["1 + 0.5*(x-1) + (y+2)^2", "-2 + 2*(y+2) + (x-1)^2"], ["x", "y"], fixed_point=[1, -2]
    )
    exp = solve_invariance(sys, axis=0)
    assert exp.coefficients[0, 0] == pytest.approx(-4 / 7, abs=1e-14)
    assert exp.graph([0.0])[0].tolist() == [1.0, -2.0]
    assert exp.residual < 1e-8


def test_resonance_is_refused():
    with pytest.raises(ResonanceError):
        solve_invariance(saddle(λ1=0.5, λ2=0.25, b1=1.0), axis=0)
    with pytest.raises(ResonanceError):
        solve_invariance(MapSystem(["x - x^3", "y + x^2"], ["x", "y"]), axis=0)


def test_non_diagonal_jacobian_is_refused():
    with pytest.raises(NotDiagonalError):
        solve_invariance(MapSystem(["0.5*x + 0.1*y", "2*y"], ["x", "y"]))


def test_kind_and_axis_checks():
    with pytest.raises(ManifoldError):
        solve_invariance(saddle(), axis=0, kind="unstable")
    with pytest.raises(ManifoldError):
        solve_invariance(saddle(), axis=2)
    with pytest.raises(ManifoldError):
        solve_invariance(saddle(), order=6)
    with pytest.raises(ManifoldError):
        solve_invariance(MapSystem(["0.5*x"], ["x"]))


# -- restriction --------------------------------------------------------------------------


def test_restricted_map_of_template():
    entry = get_entry("saddle-ex2-template")
    p = entry.parameters
    exp = solve_invariance(entry.system, axis=0)
    g = restrict_to_manifold(entry.system, exp).coefficients
    alpha2, alpha3, _, _ = closed_forms(*(p[k] for k in NAMES))
    assert g[1] == pytest.approx(p["λ1"], abs=1e-15)
    assert g[2] == pytest.approx(p["a1"], abs=1e-15)
    assert g[3] == pytest.approx(p["a2"] * alpha2, abs=1e-12)
    # next order collects a2*alpha3 from x*y and a3*alpha2^2 from y^2
    assert g[4] == pytest.approx(p["a2"] * alpha3 + p["a3"] * alpha2**2, abs=1e-12)


def test_center_manifold_example():
    sys = get_entry("center-2d").system
    exp = solve_invariance(sys, axis=0)
    assert exp.kind == "center"
    # c2 = 1 / (1 - 0.5); the x^4 term follows from matching the next order by hand
    assert exp.coefficients[0].tolist() == pytest.approx([2.0, 0.0, -8.0, 0.0], abs=1e-12)
    g = restrict_to_manifold(sys, exp)
    assert g.multiplier == 1.0
    assert g.coefficients.tolist() == pytest.approx([0, 1, 0, 1, 0, -8], abs=1e-12)
    assert g.system([0.0])[0] == 0.0
    assert nondegeneracy_order(g)[:2] == (3, pytest.approx(2 / 3))


def test_restriction_refuses_bad_residual():
    sys = saddle(b1=1.0)
    exp = solve_invariance(sys, axis=0)
    bad = ManifoldExpansion(exp.kind, exp.base_point, 0, (1,), exp.coefficients, exp.eigenvalues, 1.0, sys)
    with pytest.raises(ManifoldError):
        restrict_to_manifold(sys, bad)


# -- nondegeneracy order ----------------------------------------------------------------------


@pytest.mark.parametrize("text, k", [("x - x^2", 2), ("x - x^3", 3), ("x + x^4", 4), ("x - x^5", 5)])
def test_nondegeneracy_examples(text, k):
    got, dim, flags = nondegeneracy_order(MapSystem([text], ["x"]))
    assert got == k
    assert dim == pytest.approx(1 - 1 / k)
    assert flags == ()


def test_flip_uses_second_iterate():
    k, dim, flags = nondegeneracy_order(MapSystem(["-x + x^3"], ["x"]))
    assert (k, flags) == (3, ("period_doubled",))
    assert dim == pytest.approx(2 / 3)


def test_nondegeneracy_errors():
    with pytest.raises(DegenerateError):
        nondegeneracy_order(MapSystem(["x"], ["x"]))
    with pytest.raises(HyperbolicRestrictionError):
        nondegeneracy_order(MapSystem(["0.5*x + x^2"], ["x"]))
    with pytest.raises(ManifoldError):
        nondegeneracy_order(saddle())


def test_predicted_dimension_matches_estimate_for_fifth_order():
    o = generate_orbit(MapSystem(["x - x^5"], ["x"]), [0.5], max_n=1_000_000)
    assert estimate_dimension(o).value == pytest.approx(0.8, abs=0.05)


# -- lifting ----------------------------------------------------------------------------------


def _graph(coeffs):
    c = np.array([coeffs], dtype=float)
    return ManifoldExpansion("center", np.zeros(2), 0, (1,), c, np.array([1.0, 0.5]), 0.0)


def test_flat_lift_is_inclusion():
    o = catalog_orbit("k3")
    lifted = lift_orbit(o, _graph([0, 0, 0, 0]))
    assert np.array_equal(lifted.points[:, 0], o.points[:, 0])
    assert np.all(lifted.points[:, 1] == 0.0)
    # same cells once both sides use grid counting
    assert estimate_dimension(lifted, method="grid").value == estimate_dimension(o, method="grid").value


def test_lift_by_parabola_keeps_dimension():
    lifted = lift_orbit(catalog_orbit("k3"), _graph([2, 0, 0, 0]))
    assert lifted.dimension == 2
    assert estimate_dimension(lifted).value == pytest.approx(2 / 3, abs=0.05)


def test_lift_single_point():
    lifted = lift_orbit(Orbit.from_points([0.1]), _graph([2, 0, 0, 0]))
    assert lifted.points.tolist() == [[0.1, pytest.approx(0.02)]]


def test_lift_needs_1d_orbit():
    with pytest.raises(ManifoldError):
        lift_orbit(Orbit.from_points(np.zeros((3, 2))), _graph([2, 0, 0, 0]))


@pytest.mark.parametrize("name", ["center-2d", "saddle-ex2-template"])
def test_dimension_transport(name):
    entry = get_entry(name)
    spec = entry.designated_orbit
    exp = solve_invariance(entry.system, spec.manifold_axis)
    g = restrict_to_manifold(entry.system, exp).system
    run = generate_orbit if spec.direction == "forward" else generate_inverse_orbit
    flat = run(g, spec.x1, spec.max_n, spec.delta)
    lifted = lift_orbit(flat, exp)
    assert abs(estimate_dimension(lifted).value - estimate_dimension(flat).value) < 0.05
