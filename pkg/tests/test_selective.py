"""Replay, culprit search and the relevance-growing solve loop."""
import json
import logging
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_scene
from oracles import joint_space_optimum
from scenarios import boxed_goal, corridor, hidden_chain, small_scene
from selectsim.models import CollisionChecker, ModelScope, Simulator, simulate
from selectsim.scene import ACTIONS, ROBOT, Action, Disk, RelevantSet, project
from selectsim.search import INFEASIBLE, SOLVED, SearchConfig
from selectsim.selective import (
    NoCulpritError,
    pick_culprits,
    relevant_object,
    replay,
    solve,
    track,
)

RIGHT = Action(1, 0)
O1, O2, O3, O4, O5 = 1, 2, 3, 4, 5


# -- culprit search ------------------------------------------------------------------

def test_culprit_two_links_back():
    pairs = {(ROBOT, O3), (O2, O3), (O1, O2)}
    assert relevant_object(pairs, O1, RelevantSet([O1, O2])) == O3


def test_irrelevant_violator_is_its_own_culprit():
    pairs = {(ROBOT, O5), (O4, O5)}
    assert relevant_object(pairs, O4, RelevantSet()) == O4


def test_equal_depth_goes_to_lower_id():
    pairs = {(O1, O2), (O1, O3)}
    assert relevant_object(pairs, O1, RelevantSet([O1])) == O2
    # same answer whichever order the pairs arrive in
    assert relevant_object([(O1, O3), (O1, O2)], O1, RelevantSet([O1])) == O2


def test_no_culprit_and_fallbacks(caplog):
    with pytest.raises(NoCulpritError):
        relevant_object({(ROBOT, O3)}, O3, RelevantSet([O3]))
    with caplog.at_level(logging.WARNING, logger="selectsim.selective"):
        ids, fell = pick_culprits(frozenset({(ROBOT, O3), (ROBOT, O4)}), O3, RelevantSet([O3]))
    assert ids == (O4,) and fell
    assert "fell back" in caplog.text
    ids, fell = pick_culprits(frozenset({(ROBOT, O3)}), O3, RelevantSet([O3]))
    assert ids == () and fell
    ids, fell = pick_culprits(frozenset({(O1, O2)}), O1, RelevantSet([O1]))
    assert ids == (O2,) and not fell


# -- track ----------------------------------------------------------------------------

def test_free_path_tracks_cleanly():
    scene = make_scene([(Disk(0.5), 5.0, 5.0)])
    rep = replay(scene, [Action(0, 1)] * 3)
    assert rep.success and rep.pairs == frozenset() and rep.violation is None
    assert rep.final_state.robot == (0, 3) and len(rep.states) == 4


def test_chain_into_forbidden_object_is_caught():
    # robot shoves object 3 into 2 into the fixed object 1
    objs = [(Disk(0.2), 8.0, 8.0), (Disk(0.5), 4.45, 0.0, False),
            (Disk(0.5), 3.4, 0.0), (Disk(1.0), 1.5, 0.0)]
    scene = make_scene(objs)
    sim = Simulator(scene, ModelScope.everything(scene))
    rep = track([RIGHT, RIGHT], scene.initial_state(), sim)
    assert not rep.success and rep.violation == (O1, "forbidden-contact") and rep.step == 0
    assert {(ROBOT, O3), (O2, O3), (O1, O2)} <= rep.pairs
    assert relevant_object(rep.pairs, O1, RelevantSet([O1, O2])) == O3


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_collision_check_shortcut_changes_nothing(seed):
    scene = small_scene(seed)
    rng = random.Random(seed)
    s = scene.initial_state()
    path = []
    for _ in range(15):
        moves = [a for a in ACTIONS if scene.in_bounds((s.robot[0] + a.dx, s.robot[1] + a.dy))]
        a = rng.choice(moves)
        path.append(a)
        s = s.replace((s.robot[0] + a.dx, s.robot[1] + a.dy), s.poses)
    full = ModelScope.everything(scene)
    plain = track(path, scene.initial_state(), Simulator(scene, full))
    quick = track(path, scene.initial_state(), Simulator(scene, full), CollisionChecker(scene, full))
    assert plain == quick


# -- solve ----------------------------------------------------------------------------

def test_nothing_in_the_way():
    scene = make_scene([(Disk(0.5), 1.0, 8.0, False)])
    res = solve(scene)
    assert res.success and len(res.log.iterations) == 1
    assert res.relevant == () and res.counters.ext_simulations == 0
    assert res.log.iterations[0].track_success


def test_relevance_grows_over_three_iterations():
    scene = hidden_chain()
    res = solve(scene, SearchConfig(w=1.0))
    it = res.log.iterations
    assert res.success and len(it) == 3
    assert it[0].relevant == () and it[0].track_success is False and it[0].added == (0,)
    assert it[1].relevant == (0,) and it[1].track_success is False and it[1].added == (1,)
    assert it[2].relevant == (0, 1) and it[2].track_success is True
    assert 2 not in res.relevant
    assert replay(scene, res.actions).success


def test_all_objects_relevant_skips_replay():
    scene = corridor()
    res = solve(scene, selective=False)
    assert res.success and len(res.log.iterations) == 1
    assert res.log.iterations[0].tracked is False
    assert res.states[-1] == replay(scene, res.actions).final_state


def test_ringed_goal_is_infeasible():
    scene = boxed_goal()
    assert math.isinf(joint_space_optimum(scene))
    for planner in ("wastar", "lazy"):
        res = solve(scene, planner=planner)
        assert res.status == INFEASIBLE and not res.success


def test_timeout_is_cumulative():
    res = solve(corridor(), SearchConfig(timeout=1e-9))
    assert res.status == "timeout"


def test_log_serializes():
    res = solve(hidden_chain(), SearchConfig(w=1.0))
    data = json.loads(json.dumps(res.log.to_dict()))
    assert data["fallbacks"] == 0
    assert [r["added"] for r in data["iterations"]] == [[0], [1], []]
    assert set(data["iterations"][0]) >= {"relevant", "cost", "collision_checks", "ext_simulations",
                                           "track_success", "added"}


# -- properties ------------------------------------------------------------------------

def _sample_projection_case(rng, scene):
    s = scene.initial_state()
    poses = list(s.poses)
    for i, o in enumerate(scene.objects):
        if o.movable and rng.random() < 0.3:
            poses[i] = o.pose._replace(x=o.pose.x + rng.choice((-0.5, 0.0, 0.5)))
    cell = (rng.randint(0, scene.nx), rng.randint(0, scene.ny))
    return s.replace(cell, tuple(poses))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_first_order_valid_moves_stay_valid_when_projected(seed):
    scene = small_scene(seed)
    rng = random.Random(seed)
    s = _sample_projection_case(rng, scene)
    everything = range(scene.n)
    for a in ACTIONS:
        if not scene.in_bounds((s.robot[0] + a.dx, s.robot[1] + a.dy)):
            continue
        full = simulate(scene, s, a, everything)
        if full.violation is not None or any(ROBOT not in p for p in full.pairs):
            continue
        cr = [i for i in everything if rng.random() < 0.5]
        p = project(s, cr)
        assert simulate(scene, p, a, cr).valid
        assert CollisionChecker(scene, cr).evaluate(p, a).violation is None


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["wastar", "lazy"]))
def test_returned_paths_replay_cleanly(seed, planner):
    scene = small_scene(seed)
    res = solve(scene, SearchConfig(w=2.0), planner=planner)
    assert len(res.log.iterations) <= scene.n + 1
    assert res.log.fallbacks == 0
    if res.success:
        rep = replay(scene, res.actions)
        assert rep.success and scene.at_goal(rep.final_state.robot)
    else:
        assert math.isinf(joint_space_optimum(scene))
