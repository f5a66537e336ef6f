"""Planning in a growing space of relevant objects.

Each iteration plans with only the relevant objects modelled, replays the plan
against every object, and on failure adds the object that set off the failing
interaction chain.
"""
from __future__ import annotations

import logging
import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from .models import CallCounters, CollisionChecker, ModelScope, Simulator
from .scene import (
    ROBOT,
    Action,
    ConstraintSpec,
    FullState,
    GoalSpec,
    RelevantSet,
    Scene,
    Violation,
    embed,
    project,
)
from .search import (
    INFEASIBLE,
    SOLVED,
    TIMEOUT,
    PlanResult,
    SearchConfig,
    compute_heuristic,
    plan_lazy_wastar,
    plan_wastar,
)

log = logging.getLogger(__name__)


class NoCulpritError(LookupError):
    """No object outside the relevant set is linked to the violation."""


@dataclass(frozen=True)
class TrackReport:
    success: bool
    pairs: frozenset[tuple[int, int]]
    violation: Violation | None
    step: int | None
    final_state: FullState
    states: tuple[FullState, ...] = ()


def track(path: Sequence[Action], s0: FullState, simulator: Simulator,
          checker: CollisionChecker | None = None) -> TrackReport:
    """Replay ``path`` under ``simulator`` and stop at the first violation.

    With a ``checker`` over the same objects, steps on which the robot touches
    nothing skip the simulator: nothing can move without robot contact, so the
    outcome is unchanged.
    """
    pairs: set[tuple[int, int]] = set()
    s = s0
    states = [s0]
    for k, a in enumerate(path):
        res = checker.evaluate(s, a) if checker is not None else None
        if res is None or res.pairs:
            res = simulator.evaluate(s, a)
        pairs |= res.pairs
        if res.violation is not None:
            return TrackReport(False, frozenset(pairs), res.violation, k, s, tuple(states))
        s = res.successor
        states.append(s)
    return TrackReport(True, frozenset(pairs), None, None, s, tuple(states))


def replay(scene: Scene, path: Sequence[Action], c: ConstraintSpec | None = None,
           start: FullState | None = None) -> TrackReport:
    """Check a path against a fresh simulator holding every object."""
    sim = Simulator(scene, ModelScope.everything(scene), constraints=c)
    return track(path, start if start is not None else scene.initial_state(), sim)


def _bfs(adj: dict[int, set[int]], root: int, cr: RelevantSet) -> int | None:
    seen = {root}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        if v != ROBOT and v not in cr:
            return v
        for u in sorted(adj.get(v, ())):
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return None


def _adjacency(pairs: Iterable[tuple[int, int]], with_robot: bool) -> dict[int, set[int]]:
    adj: dict[int, set[int]] = {}
    for a, b in pairs:
        if not with_robot and (a == ROBOT or b == ROBOT):
            continue
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def relevant_object(pairs: Iterable[tuple[int, int]], violated: int, cr: RelevantSet) -> int:
    """Nearest object to ``violated`` in the object-object contact graph that is
    not yet relevant; ``violated`` itself counts. Ties go to the lower id."""
    found = _bfs(_adjacency(pairs, False), violated, cr)
    if found is None:
        raise NoCulpritError(f"no irrelevant object linked to {violated}")
    return found


def pick_culprits(pairs: frozenset[tuple[int, int]], violated: int,
                  cr: RelevantSet) -> tuple[tuple[int, ...], bool]:
    """``relevant_object`` with the widening fallback; returns (ids, fell_back)."""
    try:
        return (relevant_object(pairs, violated, cr),), False
    except NoCulpritError:
        pass
    found = _bfs(_adjacency(pairs, True), violated, cr)
    if found is not None:
        ids: tuple[int, ...] = (found,)
    else:
        ids = tuple(sorted({x for p in pairs for x in p if x != ROBOT and x not in cr}))
    log.warning("culprit search fell back for violation at %d: adding %s", violated, ids)
    return ids, True


@dataclass
class IterationRecord:
    relevant: tuple[int, ...]
    status: str
    cost: float
    collision_checks: int
    ext_simulations: int
    expansions: int
    tracked: bool
    track_success: bool | None = None
    violation: tuple[int, str] | None = None
    violation_step: int | None = None
    added: tuple[int, ...] = ()
    fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "relevant": list(self.relevant),
            "status": self.status,
            "cost": None if math.isinf(self.cost) else self.cost,
            "collision_checks": self.collision_checks,
            "ext_simulations": self.ext_simulations,
            "expansions": self.expansions,
            "tracked": self.tracked,
            "track_success": self.track_success,
            "violation": list(self.violation) if self.violation else None,
            "violation_step": self.violation_step,
            "added": list(self.added),
            "fallback": self.fallback,
        }


@dataclass
class SolveLog:
    iterations: list[IterationRecord] = field(default_factory=list)

    @property
    def fallbacks(self) -> int:
        return sum(r.fallback for r in self.iterations)

    def to_dict(self) -> dict:
        return {"iterations": [r.to_dict() for r in self.iterations],
                "fallbacks": self.fallbacks}


def solve(scene: Scene, cfg: SearchConfig | None = None, *, planner: str = "lazy",
          selective: bool = True, c: ConstraintSpec | None = None, goal: GoalSpec | None = None,
          sim_cost_us: float = 0.0, expansion_log: IO[str] | None = None) -> PlanResult:
    """Plan from the scene's start to its goal.

    ``selective=False`` models every object from the outset; the loop then runs
    once and needs no replay.
    """
    cfg = cfg if cfg is not None else SearchConfig()
    c = c if c is not None else scene.constraints
    goal = goal if goal is not None else scene.goal
    plan = {"wastar": plan_wastar, "lazy": plan_lazy_wastar}[planner]
    t0 = time.perf_counter()
    deadline = t0 + cfg.timeout
    counters = CallCounters()
    s0 = scene.initial_state()
    n = scene.n
    cr = RelevantSet(range(n)) if not selective else RelevantSet()
    slog = SolveLog()
    tracker: Simulator | None = None
    track_cc: CollisionChecker | None = None

    while True:
        before = counters.snapshot()
        scope = ModelScope.of(cr.ids)
        start = project(s0, cr.ids)
        h = compute_heuristic(goal, scene, c, scope)
        res = plan(scene, start, goal, scope, c, cfg, counters=counters, heuristic=h,
                   deadline=deadline, sim_cost_us=sim_cost_us, log=expansion_log)
        rec = IterationRecord(cr.ids, res.status, res.cost, 0, 0, res.expansions, False)
        slog.iterations.append(rec)

        def close(status: str, **kw) -> PlanResult:
            rec.collision_checks = counters.collision_checks - before.collision_checks
            rec.ext_simulations = counters.ext_simulations - before.ext_simulations
            return PlanResult(status, counters=counters, elapsed=time.perf_counter() - t0,
                              expansions=sum(r.expansions for r in slog.iterations),
                              log=slog, relevant=cr.ids, **kw)

        if res.status != SOLVED:
            return close(res.status)
        if len(cr) == n:
            states = tuple(embed(p, s0) for p in res.states)
            return close(SOLVED, actions=res.actions, states=states, cost=res.cost)
        if time.perf_counter() > deadline:
            return close(TIMEOUT)
        if tracker is None:
            everything = ModelScope.everything(scene)
            tracker = Simulator(scene, everything, counters, constraints=c, sim_cost_us=sim_cost_us)
            track_cc = CollisionChecker(scene, everything, counters, constraints=c)
        rep = track(res.actions, s0, tracker, track_cc)
        rec.tracked = True
        rec.track_success = rep.success
        if rep.success:
            return close(SOLVED, actions=res.actions, states=rep.states, cost=res.cost)
        rec.violation = tuple(rep.violation)
        rec.violation_step = rep.step
        added, fell_back = pick_culprits(rep.pairs, rep.violation.object_id, cr)
        rec.added = added
        rec.fallback = fell_back
        if not added:
            # nothing left to learn from this failure; treat as unsolvable
            log.error("track failed at %s with no object to add", rep.violation)
            return close(INFEASIBLE)
        rec.collision_checks = counters.collision_checks - before.collision_checks
        rec.ext_simulations = counters.ext_simulations - before.ext_simulations
        cr = cr.add(*added)
