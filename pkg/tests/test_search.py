"""Successor escalation, the grid heuristic and the two planners."""
import io
import math
import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_scene
from oracles import flood_reachable, grid_dijkstra, joint_space_optimum
from scenarios import boxed_goal, corridor, small_scene, two_gaps
from selectsim.models import CallCounters, CollisionChecker, ModelScope, Simulator
from selectsim.scene import ACTIONS, Action, Disk, GoalSpec, Rect, project
from selectsim.search import (
    INFEASIBLE,
    PLANNERS,
    SOLVED,
    TIMEOUT,
    Branch,
    SearchConfig,
    compute_heuristic,
    get_succs,
    goal_cells,
    plan_lazy_wastar,
    plan_wastar,
)

RIGHT = Action(1, 0)


def _models(scene, scope):
    c = CallCounters()
    return CollisionChecker(scene, scope, c), Simulator(scene, scope, c), c


# -- get_succs ------------------------------------------------------------------

def test_free_move_uses_no_simulation():
    scene = make_scene([(Disk(1.0), 5.0, 5.0)])
    cc, sim, c = _models(scene, [0])
    out = get_succs(scene.initial_state(), RIGHT, cc, sim)
    assert out.branch == Branch.FREE and out.state.robot == (1, 0)
    assert c.as_dict() == {"collision_checks": 1, "ext_simulations": 0}


def test_forbidden_contact_rejected_without_simulation():
    scene = make_scene([(Disk(1.0), 1.5, 0.0, False)])
    cc, sim, c = _models(scene, [0])
    out = get_succs(scene.initial_state(), RIGHT, cc, sim)
    assert out.branch == Branch.CC_INVALID and out.state is None
    assert c.ext_simulations == 0


def test_relevant_push_costs_one_simulation():
    scene = make_scene([(Disk(1.0), 1.5, 0.0)])
    cc, sim, c = _models(scene, [0])
    out = get_succs(scene.initial_state(), RIGHT, cc, sim)
    assert out.branch == Branch.SIM_VALID
    assert out.state.poses[0][:2] == pytest.approx((2.0, 0.0))
    assert c.as_dict() == {"collision_checks": 1, "ext_simulations": 1}


def test_simulated_violation_is_invalid():
    scene = make_scene([(Disk(1.0), 1.5, 0.0), (Disk(0.5), 3.4, 0.0, False)])
    cc, sim, c = _models(scene, [0, 1])
    out = get_succs(scene.initial_state(), RIGHT, cc, sim)
    assert out.branch == Branch.SIM_INVALID and c.ext_simulations == 1


def test_missing_simulator_is_reported():
    scene = make_scene([(Disk(1.0), 1.5, 0.0)])
    with pytest.raises(ValueError):
        get_succs(scene.initial_state(), RIGHT, CollisionChecker(scene, [0]), None)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000))
def test_exactly_one_branch_per_edge(seed):
    scene = small_scene(seed)
    rng = random.Random(seed)
    scope = [i for i in range(scene.n) if rng.random() < 0.6]
    cc, sim, c = _models(scene, scope)
    s = project(scene.initial_state(), scope)
    for _ in range(30):
        moves = [a for a in ACTIONS if scene.in_bounds((s.robot[0] + a.dx, s.robot[1] + a.dy))]
        a = rng.choice(moves)
        before = c.snapshot()
        out = get_succs(s, a, cc, sim)
        checks = c.collision_checks - before.collision_checks
        sims = c.ext_simulations - before.ext_simulations
        assert checks == 1
        if out.branch in (Branch.FREE, Branch.CC_INVALID):
            assert sims == 0
        else:
            assert out.branch in (Branch.SIM_VALID, Branch.SIM_INVALID) and sims == 1
        assert (out.state is None) == (out.branch in (Branch.CC_INVALID, Branch.SIM_INVALID))
        if out.state is not None:
            s = out.state


# -- heuristic --------------------------------------------------------------------

def test_diagonal_chain_on_empty_grid():
    # goal disk covering lattice points (5,5), (5,6), (6,5), (6,6)
    scene = make_scene(goal=((5.5, 5.5), 1.0))
    h = compute_heuristic(scene.goal, scene)
    assert h((0, 0)) == pytest.approx(5 * math.sqrt(2))
    assert h((5, 5)) == 0.0 and h((6, 6)) == 0.0


def test_heuristic_matches_dijkstra_oracle():
    scene = corridor()
    h = compute_heuristic(scene.goal, scene)
    blocked = {(i, j) for i in range(scene.nx + 1) for j in range(scene.ny + 1) if h.blocked[i * (scene.ny + 1) + j]}
    want = grid_dijkstra(scene.nx, scene.ny, blocked, goal_cells(scene, scene.goal))
    for i in range(scene.nx + 1):
        for j in range(scene.ny + 1):
            assert h((i, j)) == pytest.approx(want.get((i, j), math.inf))
    assert h((5, 5)) < math.inf and h((5, 1)) == math.inf


def test_walled_goal_is_infinite_and_infeasible():
    scene = boxed_goal()
    h = compute_heuristic(scene.goal, scene)
    assert h(scene.robot_start) == math.inf
    assert not any(scene.at_goal(c) for c in flood_reachable(scene, range(scene.n)))
    for plan in PLANNERS.values():
        res = plan(scene, scene.initial_state())
        assert res.status == INFEASIBLE and res.expansions == 0


def test_out_of_scope_forbidden_objects_do_not_block():
    scene = corridor(blocker=False)
    h_all = compute_heuristic(scene.goal, scene)
    h_none = compute_heuristic(scene.goal, scene, scope=[])
    assert h_none((4, 1)) < h_all((4, 1))


# -- planners ---------------------------------------------------------------------

@pytest.mark.parametrize("plan", [plan_wastar, plan_lazy_wastar])
def test_start_in_goal(plan):
    scene = make_scene(goal=((0.0, 0.0), 1.0))
    res = plan(scene, scene.initial_state())
    assert res.status == SOLVED and res.actions == () and res.cost == 0.0


@pytest.mark.parametrize("plan", [plan_wastar, plan_lazy_wastar])
def test_empty_grid_optimal_at_unit_weight(plan):
    scene = make_scene()
    res = plan(scene, scene.initial_state(), cfg=SearchConfig(w=1.0))
    want = grid_dijkstra(scene.nx, scene.ny, set(), goal_cells(scene, scene.goal))
    assert res.cost == pytest.approx(want[scene.robot_start])
    assert scene.at_goal(res.states[-1].robot)


@pytest.mark.parametrize("w", [1.0, 1.5, 3.0])
@pytest.mark.parametrize("plan", [plan_wastar, plan_lazy_wastar])
def test_corridor_requires_pushing(plan, w):
    scene = corridor()
    opt = joint_space_optimum(scene)
    res = plan(scene, scene.initial_state(), cfg=SearchConfig(w=w))
    assert res.success and res.counters.ext_simulations > 0
    assert res.cost <= w * opt + 1e-9
    assert res.states[-1].poses[2].x > 5.0


def test_lazy_matches_eager_without_contact():
    scene = make_scene([(Disk(0.5), 1.0, 8.0)])
    a = plan_wastar(scene, scene.initial_state())
    b = plan_lazy_wastar(scene, scene.initial_state())
    assert a.actions == b.actions and a.counters.ext_simulations == b.counters.ext_simulations == 0


def test_lazy_no_worse_when_shortcut_fails():
    scene = two_gaps()
    eager = plan_wastar(scene, scene.initial_state(), cfg=SearchConfig(w=1.0))
    lazy = plan_lazy_wastar(scene, scene.initial_state(), cfg=SearchConfig(w=1.0))
    assert eager.success and lazy.success
    assert max(s.robot[1] for s in lazy.states) >= 8
    assert lazy.cost == pytest.approx(eager.cost)
    assert 0 < lazy.counters.ext_simulations <= eager.counters.ext_simulations


def test_lazy_strictly_cheaper_when_contacts_lie_off_the_path():
    # movable clutter behind the start: eager simulates those edges on the first
    # expansion, lazy never pops them
    clutter = [(Disk(0.4), 0.0, 4.0), (Disk(0.4), 0.0, 6.0), (Disk(0.4), 1.0, 3.9), (Disk(0.4), 1.0, 6.1)]
    scene = make_scene(clutter, start=(1, 5), goal=((9.0, 5.0), 1.0))
    eager = plan_wastar(scene, scene.initial_state(), cfg=SearchConfig(w=1.0))
    lazy = plan_lazy_wastar(scene, scene.initial_state(), cfg=SearchConfig(w=1.0))
    assert eager.success and lazy.success and lazy.cost == eager.cost
    assert lazy.counters.ext_simulations < eager.counters.ext_simulations


def test_timeout_carries_counters():
    scene = corridor()
    res = plan_wastar(scene, scene.initial_state(), deadline=time.monotonic() - 1.0)
    assert res.status == TIMEOUT and not res.success
    assert res.counters.collision_checks >= 0


def test_expansion_log_format():
    scene = corridor()
    buf = io.StringIO()
    res = plan_lazy_wastar(scene, scene.initial_state(), log=buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == res.expansions
    f, g, h, key, branch = lines[0].split("\t")
    assert float(g) == 0.0 and float(f) == pytest.approx(SearchConfig().w * float(h))
    assert key.startswith("1,5|") and branch == "start"
    assert {ln.split("\t")[4] for ln in lines} <= {"start", "free", "sim-valid"}


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(w=0.5)
    assert SearchConfig().cost(Action(1, 1)) == pytest.approx(math.sqrt(2))


# -- properties over small exhaustively checkable scenes ---------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([1.0, 1.5, 3.0]))
def test_cost_within_weight_of_joint_optimum(seed, w):
    scene = small_scene(seed)
    opt = joint_space_optimum(scene)
    for plan in PLANNERS.values():
        res = plan(scene, scene.initial_state(), cfg=SearchConfig(w=w))
        if math.isinf(opt):
            continue
        if res.success:
            assert res.cost <= w * opt + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([1.0, 2.0]))
def test_lazy_never_simulates_more(seed, w):
    scene = small_scene(seed)
    rng = random.Random(seed)
    scope = [i for i in range(scene.n) if rng.random() < 0.7]
    start = project(scene.initial_state(), scope)
    eager = plan_wastar(scene, start, cfg=SearchConfig(w=w))
    lazy = plan_lazy_wastar(scene, start, cfg=SearchConfig(w=w))
    assert eager.status == lazy.status
    assert lazy.counters.ext_simulations <= eager.counters.ext_simulations
    if eager.success:
        assert lazy.cost == pytest.approx(eager.cost)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_heuristic_never_overestimates_on_the_plan(seed):
    scene = small_scene(seed)
    h = compute_heuristic(scene.goal, scene)
    res = plan_lazy_wastar(scene, scene.initial_state(), cfg=SearchConfig(w=2.0))
    if not res.success:
        return
    remaining = res.cost
    for s, a in zip(res.states, res.actions + (None,)):
        assert h(s.robot) <= remaining + 1e-9
        if a is not None:
            remaining -= a.cost
    assert h(scene.robot_start) <= joint_space_optimum(scene) + 1e-9


def test_goal_cells_inside_region():
    scene = make_scene(goal=((5.0, 5.0), 1.0))
    cells = goal_cells(scene, GoalSpec((5.0, 5.0), 1.0))
    assert sorted(cells) == [(4, 5), (5, 4), (5, 5), (5, 6), (6, 5)]
    assert ModelScope.of([]).active == frozenset()
