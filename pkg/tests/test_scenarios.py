import numpy as np
import pytest
import yaml

from quadmpc.exceptions import ScenarioError
from quadmpc.ocp import ProblemDims
from quadmpc.scenarios import (
    CollisionCost,
    GapCost,
    GapSpec,
    MultiRobotSpec,
    SteppingStoneCost,
    StoneField,
    bundled_scenario_path,
    load_scenario,
    validate_footholds,
)

DIMS = ProblemDims(n=6, m=5, p=9, N=2, dt=0.04)  # three footholds


def _u_with_feet(feet):
    U = np.zeros(DIMS.nu)
    U[DIMS.p_slice] = np.asarray(feet, dtype=float).ravel()
    return U


# --- gap cost ---------------------------------------------------------------


def test_gap_cost_clear_foothold_is_free():
    cost = GapCost(DIMS, [GapSpec(g_x=0.0, half_width=0.16)])
    U = _u_with_feet([[0.5, 0, 0], [0.6, 0, 0], [-0.5, 0, 0]])
    assert cost.value(None, U) == pytest.approx(0.0, abs=1e-12)


def test_gap_cost_center_value():
    cost = GapCost(DIMS, [GapSpec(g_x=1.0, half_width=0.16)])
    U = _u_with_feet([[1.0, 0, 0], [2.0, 0, 0], [2.0, 0, 0]])
    # Gamma = |0| - 0.16 < -eps: 0.16^2 + eps^2/3, up to the |.| smoothing delta
    assert cost.value(None, U) == pytest.approx(0.16**2 + 0.01 / 3.0, abs=1e-6)


def test_gap_cost_zero_set_boundary():
    cost = GapCost(DIMS, [GapSpec(g_x=0.0, half_width=0.16)])
    xs = np.linspace(-1.0, 1.0, 801)
    for x in xs:
        U = _u_with_feet([[x, 0, 0], [5, 0, 0], [5, 0, 0]])
        v = cost.value(None, U)
        if abs(x) >= 0.16 + 0.1 + 1e-9:
            assert v == 0.0
        elif abs(x) < 0.16 + 0.1 - 1e-6:
            assert v > 0.0


def test_gap_cost_gradient_fd():
    rng = np.random.default_rng(0)
    cost = GapCost(DIMS, [GapSpec(g_x=0.1, half_width=0.16), GapSpec(g_x=-0.4, half_width=0.05)])
    U = _u_with_feet(rng.uniform(-0.6, 0.6, (3, 3)))
    ev = cost.derivatives(None, U)
    h = 1e-6
    for i in range(DIMS.nu):
        Up, Um = U.copy(), U.copy()
        Up[i] += h
        Um[i] -= h
        fd = (cost.value(None, Up) - cost.value(None, Um)) / (2 * h)
        assert ev.gu[i] == pytest.approx(fd, abs=2e-5)


# --- stepping stones ---------------------------------------------------------


FIELD = StoneField(stones=np.array([[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]))


def test_stone_cost_on_stone():
    cost = SteppingStoneCost(DIMS, FIELD)
    U = _u_with_feet([[0, 0, 0], [100, 100, 0], [100, 100, 0]])
    assert cost.value(None, U) == pytest.approx(-0.1, abs=1e-12)


def test_stone_cost_one_sigma():
    cost = SteppingStoneCost(DIMS, FIELD)
    U = _u_with_feet([[0.041, 0, 0], [100, 100, 0], [100, 100, 0]])
    assert cost.value(None, U) == pytest.approx(-0.1 * np.exp(-0.5), abs=1e-9)


def test_stone_cost_far_tail():
    cost = SteppingStoneCost(DIMS, FIELD)
    U = _u_with_feet([[0.5, 0, 0], [100, 100, 0], [100, 100, 0]])
    assert abs(cost.value(None, U)) < 1e-30


def test_stone_cost_translation_equivariance():
    rng = np.random.default_rng(1)
    feet = rng.uniform(-0.2, 0.2, (3, 3))
    shift = np.array([0.5, -0.25, 0.0])
    c1 = SteppingStoneCost(DIMS, StoneField(stones=FIELD.stones))
    c2 = SteppingStoneCost(DIMS, StoneField(stones=FIELD.stones + shift))
    assert c2.value(None, _u_with_feet(feet + shift)) == pytest.approx(
        c1.value(None, _u_with_feet(feet)), rel=1e-12
    )


def test_stone_cost_gradient_fd():
    rng = np.random.default_rng(2)
    cost = SteppingStoneCost(DIMS, FIELD)
    U = _u_with_feet(rng.uniform(-0.15, 0.15, (3, 3)))
    ev = cost.derivatives(None, U)
    h = 1e-6
    for i in range(DIMS.nu):
        Up, Um = U.copy(), U.copy()
        Up[i] += h
        Um[i] -= h
        fd = (cost.value(None, Up) - cost.value(None, Um)) / (2 * h)
        assert ev.gu[i] == pytest.approx(fd, abs=2e-5)


def test_stone_cost_gn_block_psd():
    rng = np.random.default_rng(3)
    cost = SteppingStoneCost(DIMS, FIELD)
    for _ in range(20):
        U = _u_with_feet(rng.uniform(-0.3, 0.3, (3, 3)))
        ev = cost.derivatives(None, U)
        assert np.min(np.linalg.eigvalsh(ev.huu)) >= -1e-12


def test_stone_field_validation():
    with pytest.raises(ValueError):
        StoneField(stones=np.zeros((0, 3)))
    with pytest.raises(ValueError):
        StoneField(stones=np.array([[0, 0, 0], [0, 0, 0]]))


# --- collision ---------------------------------------------------------------


def _two_robot_dims():
    return ProblemDims(n=12, m=10, p=6, N=2, dt=0.04)


def _stacked_X(dims, ra, rb):
    X = np.zeros(dims.nx)
    for k in range(dims.N):
        X[k * dims.n : k * dims.n + 3] = ra
        X[k * dims.n + 6 : k * dims.n + 9] = rb
    return X


def test_collision_cost_far_apart():
    dims = _two_robot_dims()
    cost = CollisionCost(dims, offset_a=0, offset_b=6)
    X = _stacked_X(dims, [0, 0, 0.3], [2, 0, 0.3])
    assert cost.value(X, None) == pytest.approx(0.0, abs=1e-12)


def test_collision_cost_close_value():
    dims = _two_robot_dims()
    cost = CollisionCost(dims, offset_a=0, offset_b=6)
    X = _stacked_X(dims, [0, 0, 0.3], [0.8, 0, 0.3])
    # per step: Gamma = 0.8 - 1.0 < -eps: 0.04 + eps^2/3; two steps
    expected = 2 * (0.04 + 0.01 / 3.0)
    assert cost.value(X, None) == pytest.approx(expected, abs=1e-9)


def test_collision_cost_swap_symmetry():
    dims = _two_robot_dims()
    cost = CollisionCost(dims, offset_a=0, offset_b=6)
    rng = np.random.default_rng(4)
    ra, rb = rng.normal(size=3), rng.normal(size=3)
    assert cost.value(_stacked_X(dims, ra, rb), None) == cost.value(
        _stacked_X(dims, rb, ra), None
    )


def test_collision_cost_gradient_fd():
    dims = _two_robot_dims()
    cost = CollisionCost(dims, offset_a=0, offset_b=6)
    rng = np.random.default_rng(5)
    X = rng.normal(size=dims.nx) * 0.4
    ev = cost.derivatives(X, None)
    h = 1e-6
    for i in range(dims.nx):
        Xp, Xm = X.copy(), X.copy()
        Xp[i] += h
        Xm[i] -= h
        fd = (cost.value(Xp, None) - cost.value(Xm, None)) / (2 * h)
        assert ev.gx[i] == pytest.approx(fd, abs=2e-5)


def test_multi_robot_spec_validation():
    with pytest.raises(ValueError):
        MultiRobotSpec(min_distance=0.0)


# --- scenario files ----------------------------------------------------------


def test_load_bundled_trot():
    sc = load_scenario(bundled_scenario_path("trot"))
    assert sc.model == "ipm"
    assert sc.N == 20 and sc.dt == 0.04
    assert len(sc.robots) == 1
    assert sc.solver.max_iterations == 50


def test_scenario_semantic_error_names_field(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text(
        "name: bad\nterrain:\n  gaps:\n    - {x: 1.0, half_width: -0.1}\n"
    )
    with pytest.raises(ScenarioError) as err:
        load_scenario(bad)
    assert "half_width" in str(err.value)


def test_scenario_unknown_key_rejected(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: bad\nbogus_key: 1\n")
    with pytest.raises(ScenarioError) as err:
        load_scenario(bad)
    assert "bogus_key" in str(err.value)


def test_scenario_parse_error(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: [unclosed\n")
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_scenario_missing_file():
    with pytest.raises(ScenarioError):
        load_scenario("/nonexistent/scenario.yaml")


def test_two_robot_scenario_loads():
    sc = load_scenario(bundled_scenario_path("two_robot"))
    assert len(sc.robots) == 2
    assert sc.multi_robot is not None
    assert sc.multi_robot.min_distance == 1.0


def test_scenario_overrides():
    sc = load_scenario(bundled_scenario_path("trot"), {"solver.max_iterations": "7"})
    assert sc.solver.max_iterations == 7
    with pytest.raises(ScenarioError):
        load_scenario(bundled_scenario_path("trot"), {"solver.nope": "1"})


def test_scenario_resolved_roundtrip(tmp_path):
    sc = load_scenario(bundled_scenario_path("stones"))
    copy = tmp_path / "resolved.yaml"
    copy.write_text(yaml.safe_dump(sc.resolved, sort_keys=True))
    sc2 = load_scenario(copy)
    assert sc2.N == sc.N
    assert sc2.stones is not None
    assert np.allclose(sc2.stones.stones, sc.stones.stones)


# --- validation --------------------------------------------------------------


def test_validate_footholds_clear():
    report = validate_footholds(
        np.array([[0.5, 0, 0], [2.0, 0, 0]]), [GapSpec(1.0, 0.16)], None
    )
    assert report.violation_count == 0


def test_validate_footholds_gap_hit():
    report = validate_footholds(
        np.array([[1.0, 0, 0], [2.0, 0, 0]]), [GapSpec(1.0, 0.16)], None
    )
    assert report.gap_violations == 1
    assert report.in_gap == [True, False]


def test_validate_footholds_stone_radius():
    field = StoneField(stones=np.array([[0.0, 0.0, 0.0]]), radius=0.06)
    report = validate_footholds(np.array([[0.05, 0, 0]]), [], field)
    assert report.stone_violations == 0
    report = validate_footholds(np.array([[0.1, 0, 0]]), [], field)
    assert report.stone_violations == 1
