import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitdim.dynsys import (
    FlowSystem,
    MapSystem,
    Orbit,
    OrbitError,
    SingularJacobianError,
    Stop,
    SystemValidationError,
    generate_flow_orbit,
    generate_inverse_orbit,
    generate_orbit,
    unit_time_map,
    unit_time_taylor,
)

from conftest import linear_map_equations

NODE = MapSystem(["0.8*x", "0.7*y"], ["x", "y"])


def test_node_orbit_first_points():
    o = generate_orbit(NODE, [1, 1], max_n=3)
    assert np.array_equal(o.points, [[1, 1], [0.8, 0.7], [0.8 * 0.8, 0.7 * 0.7]])
    assert o.termination.reason == Stop.MAX_ITERATIONS
    assert o.direction == "forward"


def test_start_at_fixed_point():
    o = generate_orbit(NODE, [0, 0])
    assert len(o) == 1
    assert o.termination.reason == Stop.LANDED


def test_k2_orbit_is_monotone():
    o = generate_orbit(MapSystem(["x - x^2"], ["x"]), [0.5], max_n=10_000)
    assert o.points[:3, 0].tolist() == [0.5, 0.25, 0.1875]
    assert np.all(np.diff(o.points[:, 0]) < 0)
    assert np.all(o.points > 0)


def test_long_orbit_matches_short_prefix():
    # the interpreted and compiled drivers must agree where they overlap
    sys = MapSystem(["x - x^3"], ["x"])
    long = generate_orbit(sys, [0.5], max_n=20_000)
    short = generate_orbit(sys, [0.5], max_n=3_000)
    assert np.array_equal(long.points[:3_000], short.points)
    step = np.array([sys(p) for p in long.points[-100:-1]])
    assert np.array_equal(step, long.points[-99:])


def test_converged_orbit_ends_within_delta():
    o = generate_orbit(NODE, [0.5, 0.5], delta=1e-6)
    assert o.termination.reason == Stop.CONVERGED
    assert np.linalg.norm(o.points[-1]) < 1e-6
    assert np.all(np.linalg.norm(o.points[:-1], axis=1) >= 1e-6)


def test_divergence_is_a_termination_not_an_error():
    o = generate_orbit(MapSystem(["2*x"], ["x"]), [1.0], radius=100.0)
    assert o.termination.reason == Stop.DIVERGED
    assert abs(o.points[-1, 0]) > 100.0
    assert str(o.termination) == "diverged(100)"


def test_non_finite_state_reports_index():
    # 0.25 -> 0.5 -> pole
    sys = MapSystem(["x/(1 - 2*x)"], ["x"])
    with pytest.raises(OrbitError) as info:
        generate_orbit(sys, [0.25], radius=1e300)
    assert info.value.index == 2


def test_bad_arguments():
    with pytest.raises(ValueError):
        generate_orbit(NODE, [1.0])
    with pytest.raises(ValueError):
        generate_orbit(NODE, [1.0, 1.0], delta=0.0)
    with pytest.raises(ValueError):
        generate_orbit(NODE, [1.0, 1.0], radius=0.5)
    with pytest.raises(ValueError):
        generate_orbit(NODE, [np.nan, 1.0])


def test_fixed_point_validation():
    with pytest.raises(SystemValidationError):
        MapSystem(["x + 1"], ["x"])
    MapSystem(["x^2"], ["x"], fixed_point=[1.0])
    with pytest.raises(SystemValidationError):
        FlowSystem(["1 - x"], ["x"])
    FlowSystem(["1 - x"], ["x"], fixed_point=[1.0])


def test_arity_limits():
    with pytest.raises(SystemValidationError):
        MapSystem(["x", "y"], ["x"])
    names = [f"v{i}" for i in range(17)]
    with pytest.raises(SystemValidationError):
        MapSystem(names, names)


def test_inverse_orbit_linear():
    o = generate_inverse_orbit(MapSystem(["1.25*x"], ["x"]), [0.5], max_n=4)
    assert o.points[:, 0] == pytest.approx([0.5, 0.4, 0.32, 0.256], rel=1e-15)
    assert o.direction == "inverse"


def test_inverse_orbit_on_unstable_axis():
    sys = MapSystem(["1.2*x", "0.7*y"], ["x", "y"])
    o = generate_inverse_orbit(sys, [0.5, 0.0], delta=1e-12)
    assert o.termination.reason == Stop.CONVERGED
    assert np.all(o.points[:, 1] == 0.0)
    assert np.all(np.diff(o.points[:, 0]) < 0)


def test_inverse_orbit_singular_jacobian():
    # F(x) = x + x^2 has F'(-1/2) = 0; the seed x1 = -1/2 hits it immediately
    with pytest.raises(SingularJacobianError):
        generate_inverse_orbit(MapSystem(["x + x^2"], ["x"]), [-0.5])


def test_inverse_consistency():
    sys = MapSystem(["x + x^3", "0.5*y + x^2"], ["x", "y"])
    o = generate_inverse_orbit(MapSystem(["1.5*x + x^2"], ["x"]), [0.4], max_n=200)
    f = MapSystem(["1.5*x + x^2"], ["x"])
    for prev, cur in zip(o.points[:-1], o.points[1:]):
        assert abs(f(cur)[0] - prev[0]) <= 1e-10
    o2 = generate_inverse_orbit(sys, [0.2, 0.1], max_n=50)
    for prev, cur in zip(o2.points[:-1], o2.points[1:]):
        assert np.max(np.abs(sys(cur) - prev)) <= 1e-10


def test_unit_time_map_exact_solutions():
    assert unit_time_map(FlowSystem(["-x"], ["x"]), [1.0])[0] == pytest.approx(math.exp(-1), abs=1e-8)
    assert unit_time_map(FlowSystem(["-x^2"], ["x"]), [0.5])[0] == pytest.approx(1 / 3, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_unit_time_map_linear_accuracy(lam, x):
    flow = FlowSystem([f"({lam!r})*x"], ["x"])
    assert abs(unit_time_map(flow, [x])[0] - math.exp(lam) * x) < 1e-8


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-1, 1))
def test_unit_time_map_linear_accuracy_fine_steps(lam, x):
    # RK4 error grows like lam^5 e^lam h^4; at |lam| = 2 this needs 128 steps
    flow = FlowSystem([f"({lam!r})*x"], ["x"])
    assert abs(unit_time_map(flow, [x], steps=128)[0] - math.exp(lam) * x) < 1e-8


def test_unit_time_map_error_at_default_steps():
    err = abs(unit_time_map(FlowSystem(["2*x"], ["x"]), [1.0])[0] - math.exp(2.0))
    assert 1e-8 < err < 2e-7


def test_unit_time_map_box():
    flow = FlowSystem(["-x"], ["x"], box_radius=1.0)
    with pytest.raises(ValueError):
        unit_time_map(flow, [2.0])


def test_unit_time_taylor_quadratic():
    c = unit_time_taylor(FlowSystem(["-x^2"], ["x"]), 3)
    # exact: x / (1 + x) = x - x^2 + x^3 - ...
    assert c == pytest.approx([0.0, 1.0, -1.0, 1.0], abs=1e-4)


def test_flow_orbit_linear():
    o = generate_flow_orbit(FlowSystem(["-x"], ["x"]), [1.0], delta=1e-12)
    assert o.termination.reason == Stop.CONVERGED
    n = np.arange(len(o))
    assert np.allclose(o.points[:, 0], np.exp(-n), rtol=1e-6, atol=0)


def test_flow_orbit_backward():
    o = generate_flow_orbit(FlowSystem(["x^2"], ["x"]), [0.5], max_n=200, stability_hint="unstable")
    assert o.direction == "backward"
    n = np.arange(len(o))
    # backward unit step of dx/dt = x^2 is x / (1 + x)
    assert np.allclose(o.points[:, 0], 0.5 / (1 + 0.5 * n), rtol=1e-6)


def test_flow_orbit_cubic_tail():
    o = generate_flow_orbit(FlowSystem(["-x^3"], ["x"]), [0.5], max_n=2_000)
    x = o.points[:, 0]
    assert np.all(np.diff(x) < 0)
    n = np.arange(len(o))
    exact = 0.5 / np.sqrt(1 + 2 * n * 0.25)
    assert np.allclose(x, exact, rtol=1e-6)


def test_flow_orbit_hint_checked():
    with pytest.raises(ValueError):
        generate_flow_orbit(FlowSystem(["-x"], ["x"]), [1.0], stability_hint="sideways")


def test_orbits_are_deterministic():
    sys = MapSystem(["x - x^2 + 0.1*sin(x)^3"], ["x"])
    a = generate_orbit(sys, [0.3], max_n=10_000)
    b = generate_orbit(sys, [0.3], max_n=10_000)
    assert np.array_equal(a.points, b.points)


def test_stable_linear_norm_is_monotone():
    for sys in (NODE, MapSystem(["0.8*x + 0.2*y", "-0.2*x + 0.8*y"], ["x", "y"])):
        d = generate_orbit(sys, [0.5, 0.5], delta=1e-300).distances()
        assert np.all(np.diff(d) <= 0)


def test_orbit_points_are_read_only():
    o = generate_orbit(NODE, [1, 1], max_n=3)
    with pytest.raises(ValueError):
        o.points[0, 0] = 2.0


def test_orbit_from_points():
    o = Orbit.from_points([1.0, 0.5, 0.25])
    assert o.points.shape == (3, 1)
    assert o.distances().tolist() == [1.0, 0.5, 0.25]


def test_random_linear_system_builds(rng):
    a = rng.normal(size=(4, 4)) * 0.2
    eqs, names = linear_map_equations(a)
    sys = MapSystem(eqs, names)
    x = rng.normal(size=4)
    assert np.allclose(sys(x), a @ x, rtol=1e-14)
    assert np.allclose(sys.jacobian(x), a)
