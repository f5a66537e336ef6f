"""Escalating successor generation, the grid heuristic and the two planners."""
from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple

from . import kernels
from .models import CallCounters, CollisionChecker, ModelScope, Simulator
from .scene import (
    ACTIONS,
    Action,
    ConstraintSpec,
    EvalResult,
    GoalSpec,
    Scene,
    State,
    state_key,
)

SOLVED = "solved"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout"


class Branch:
    """Which successor rule fired for an edge."""

    FREE = "free"
    CC_INVALID = "cc-invalid"
    SIM_VALID = "sim-valid"
    SIM_INVALID = "sim-invalid"
    NEEDS_SIM = "needs-sim"


@dataclass(frozen=True)
class SearchConfig:
    w: float = 2.0
    timeout: float = 30.0
    orthogonal_cost: float = 1.0
    diagonal_cost: float = math.sqrt(2.0)

    def __post_init__(self) -> None:
        if not self.w >= 1.0:
            raise ValueError("w must be >= 1")
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")

    def cost(self, a: Action) -> float:
        return self.diagonal_cost if a.dx and a.dy else self.orthogonal_cost


class Succ(NamedTuple):
    branch: str
    state: State | None
    result: EvalResult | None


def classify(s: State, a: Action, checker: CollisionChecker, relevant: Iterable[int] | frozenset) -> Succ:
    """The collision-check half of successor generation.

    Returns ``NEEDS_SIM`` when the edge touches a relevant object and only the
    expensive model can decide it.
    """
    cc = checker.evaluate(s, a)
    if not cc.objects:
        return Succ(Branch.FREE, cc.successor, cc)
    if cc.violation is not None:
        return Succ(Branch.CC_INVALID, None, cc)
    if any(o in relevant for o in cc.objects):
        return Succ(Branch.NEEDS_SIM, None, cc)
    # contact only with objects the models were not given: nothing to check
    return Succ(Branch.FREE, cc.successor, cc)


def resolve(s: State, a: Action, simulator: Simulator) -> Succ:
    res = simulator.evaluate(s, a)
    if res.violation is not None:
        return Succ(Branch.SIM_INVALID, None, res)
    return Succ(Branch.SIM_VALID, res.successor, res)


def get_succs(s: State, a: Action, checker: CollisionChecker, simulator: Simulator | None,
              relevant: Iterable[int] | frozenset | None = None) -> Succ:
    """Evaluate one edge, escalating to the simulator only on relevant contact.

    ``relevant`` defaults to the checker's scope.
    """
    if relevant is None:
        relevant = checker.scope.active
    out = classify(s, a, checker, relevant)
    if out.branch != Branch.NEEDS_SIM:
        return out
    if simulator is None:
        raise ValueError("edge needs the simulator but none was supplied")
    return resolve(s, a, simulator)


# -- heuristic ----------------------------------------------------------------

class Heuristic:
    """Octile grid distance to the goal around forbidden obstacles."""

    def __init__(self, values: list[float], ny: int, blocked: bytearray):
        self.values = values
        self._h = ny + 1
        self.blocked = blocked

    def __call__(self, cell: tuple[int, int]) -> float:
        return self.values[cell[0] * self._h + cell[1]]

    def reachable(self, cell: tuple[int, int]) -> bool:
        return self(cell) < math.inf


def goal_cells(scene: Scene, goal: GoalSpec) -> list[tuple[int, int]]:
    res = scene.resolution
    gx, gy = goal.center
    r = goal.radius
    out = []
    for i in range(max(0, math.floor((gx - r) / res)), min(scene.nx, math.ceil((gx + r) / res)) + 1):
        for j in range(max(0, math.floor((gy - r) / res)), min(scene.ny, math.ceil((gy + r) / res)) + 1):
            if goal.contains(i * res, j * res):
                out.append((i, j))
    return out


def compute_heuristic(goal: GoalSpec, scene: Scene, c: ConstraintSpec | None = None,
                      scope: ModelScope | Iterable[int] | None = None) -> Heuristic:
    """Distance field from the goal region with forbidden objects as obstacles.

    With ``scope`` given, only forbidden objects inside it block the grid, which
    keeps the values admissible for a search that does not model the rest.
    """
    c = c if c is not None else scene.constraints
    obstacles = c.forbidden_contact
    if scope is not None:
        active = scope.active if isinstance(scope, ModelScope) else frozenset(scope)
        obstacles = obstacles & active
    kinds, xs, ys, exs, eys = [], [], [], [], []
    for i in sorted(obstacles):
        o = scene.objects[i]
        k, ex, ey = o.footprint(o.pose.toppled)
        kinds.append(k)
        xs.append(o.pose.x)
        ys.append(o.pose.y)
        exs.append(ex)
        eys.append(ey)
    nx, ny = scene.nx, scene.ny
    blocked = kernels.blocked_cells(nx, ny, scene.resolution, scene.robot_radius,
                                    kinds, xs, ys, exs, eys)
    sources = [i * (ny + 1) + j for i, j in goal_cells(scene, goal)]
    values = kernels.grid_distances(nx, ny, blocked, sources)
    return Heuristic(list(values), ny, blocked)


# -- planners -----------------------------------------------------------------

@dataclass
class PlanResult:
    status: str
    actions: tuple[Action, ...] = ()
    states: tuple[State, ...] = ()
    cost: float = math.inf
    counters: CallCounters = field(default_factory=CallCounters)
    expansions: int = 0
    elapsed: float = 0.0
    log: object = None
    relevant: tuple[int, ...] = ()

    @property
    def success(self) -> bool:
        return self.status == SOLVED


def format_key(key: tuple) -> str:
    robot, poses = key
    body = ";".join(f"{x},{y},{int(t)}" for x, y, t in poses)
    return f"{robot[0]},{robot[1]}|{body}"


class _Search:
    """Weighted A* over lattice states with optional deferred simulation.

    OPEN entries are ``(f, -g, parent_key, action_index, seq, state, key, lazy)``.
    Both variants share this order, so they pop edges in the same sequence and
    the lazy one can only skip simulations, never add them.
    """

    def __init__(self, scene: Scene, goal: GoalSpec, scope: ModelScope, c: ConstraintSpec,
                 cfg: SearchConfig, *, lazy: bool, counters: CallCounters,
                 heuristic: Heuristic | None, deadline: float | None,
                 sim_cost_us: float, log: IO[str] | None):
        self.scene = scene
        self.goal = goal
        self.cfg = cfg
        self.lazy = lazy
        self.relevant = scope.active
        self.checker = CollisionChecker(scene, scope, counters, constraints=c)
        # never instantiated for an empty scope: no edge can need it
        self.simulator = (Simulator(scene, scope, counters, constraints=c, sim_cost_us=sim_cost_us)
                          if scope.active else None)
        self.h = heuristic if heuristic is not None else compute_heuristic(goal, scene, c, scope)
        self.deadline = deadline if deadline is not None else time.perf_counter() + cfg.timeout
        self.counters = counters
        self.log = log
        self._edges: dict[tuple, Succ] = {}

    def _edge(self, s: State, key: tuple, ai: int) -> Succ:
        ek = (key, ai)
        out = self._edges.get(ek)
        if out is None:
            out = classify(s, ACTIONS[ai], self.checker, self.relevant)
            if out.branch == Branch.NEEDS_SIM and not self.lazy:
                out = resolve(s, ACTIONS[ai], self.simulator)
            self._edges[ek] = out
        return out

    def _resolve(self, s: State, key: tuple, ai: int) -> Succ:
        ek = (key, ai)
        out = self._edges[ek]
        if out.branch == Branch.NEEDS_SIM:
            out = resolve(s, ACTIONS[ai], self.simulator)
            self._edges[ek] = out
        return out

    def run(self, start: State) -> PlanResult:
        t0 = time.perf_counter()
        scene, goal, cfg, h = self.scene, self.goal, self.cfg, self.h
        q = scene.pose_resolution
        res = scene.resolution
        w = cfg.w
        key0 = state_key(start, q)
        if not scene.in_bounds(start.robot):
            raise ValueError("start cell outside the grid")
        h0 = h(start.robot)
        if h0 == math.inf:
            return PlanResult(INFEASIBLE, counters=self.counters, elapsed=time.perf_counter() - t0)
        seq = itertools.count()
        heap = [(w * h0, -0.0, (), -1, next(seq), start, key0, False)]
        best_g = {key0: 0.0}
        closed: dict[tuple, float] = {}
        parent: dict[tuple, tuple] = {key0: None}
        states = {key0: start}
        expansions = 0
        costs = [cfg.cost(a) for a in ACTIONS]
        nx, ny = scene.nx, scene.ny
        log = self.log

        while heap:
            if time.perf_counter() > self.deadline:
                return PlanResult(TIMEOUT, counters=self.counters, expansions=expansions,
                                  elapsed=time.perf_counter() - t0)
            f, ng, pkey, ai, _, s, key, pending = heapq.heappop(heap)
            g = -ng
            branch = "start" if ai < 0 else Branch.FREE
            if pending:
                out = self._resolve(s, pkey, ai)
                if out.state is None:
                    continue
                s = out.state
                key = state_key(s, q)
                if g >= best_g.get(key, math.inf):
                    continue
                best_g[key] = g
                parent[key] = (pkey, ai)
                states[key] = s
                branch = Branch.SIM_VALID
            elif g > best_g[key]:
                continue
            elif ai >= 0:
                branch = self._edges[(pkey, ai)].branch
            done = closed.get(key)
            if done is not None and done <= g:
                continue
            closed[key] = g
            expansions += 1
            if log is not None:
                hv = h(s.robot)
                log.write(f"{f:.6f}\t{g:.6f}\t{hv:.6f}\t{format_key(key)}\t{branch}\n")
            cx, cy = s.robot
            if goal.contains(cx * res, cy * res):
                return self._finish(key, parent, states, expansions, t0)
            for i, a in enumerate(ACTIONS):
                dx, dy = cx + a.dx, cy + a.dy
                if dx < 0 or dy < 0 or dx > nx or dy > ny:
                    continue
                hd = h((dx, dy))
                if hd == math.inf:
                    continue
                g2 = g + costs[i]
                out = self._edge(s, key, i)
                b = out.branch
                if b == Branch.NEEDS_SIM:
                    heapq.heappush(heap, (g2 + w * hd, -g2, key, i, next(seq), s, None, True))
                    continue
                if out.state is None:
                    continue
                k2 = state_key(out.state, q)
                if g2 < best_g.get(k2, math.inf):
                    best_g[k2] = g2
                    parent[k2] = (key, i)
                    states[k2] = out.state
                    heapq.heappush(heap, (g2 + w * hd, -g2, key, i, next(seq), out.state, k2, False))
        return PlanResult(INFEASIBLE, counters=self.counters, expansions=expansions,
                          elapsed=time.perf_counter() - t0)

    def _finish(self, key, parent, states, expansions, t0) -> PlanResult:
        acts: list[Action] = []
        path = [states[key]]
        while parent[key] is not None:
            key, ai = parent[key]
            acts.append(ACTIONS[ai])
            path.append(states[key])
        acts.reverse()
        path.reverse()
        cost = math.fsum(self.cfg.cost(a) for a in acts)
        return PlanResult(SOLVED, tuple(acts), tuple(path), cost, self.counters, expansions,
                          time.perf_counter() - t0)


def _plan(lazy: bool, scene: Scene, start: State, goal: GoalSpec | None,
          scope: ModelScope | Iterable[int] | None, c: ConstraintSpec | None,
          cfg: SearchConfig | None, counters: CallCounters | None,
          heuristic: Heuristic | None, deadline: float | None,
          sim_cost_us: float, log: IO[str] | None) -> PlanResult:
    goal = goal if goal is not None else scene.goal
    c = c if c is not None else scene.constraints
    cfg = cfg if cfg is not None else SearchConfig()
    if scope is None:
        scope = ModelScope.of(start.ids)
    elif not isinstance(scope, ModelScope):
        scope = ModelScope.of(scope)
    counters = counters if counters is not None else CallCounters()
    search = _Search(scene, goal, scope, c, cfg, lazy=lazy, counters=counters,
                     heuristic=heuristic, deadline=deadline, sim_cost_us=sim_cost_us, log=log)
    return search.run(start)


def plan_wastar(scene: Scene, start: State, goal: GoalSpec | None = None,
                scope: ModelScope | Iterable[int] | None = None, c: ConstraintSpec | None = None,
                cfg: SearchConfig | None = None, *, counters: CallCounters | None = None,
                heuristic: Heuristic | None = None, deadline: float | None = None,
                sim_cost_us: float = 0.0, log: IO[str] | None = None) -> PlanResult:
    """Weighted A*; every generated edge is fully evaluated.

    ``scope`` defaults to the objects carried by ``start``.
    """
    return _plan(False, scene, start, goal, scope, c, cfg, counters, heuristic,
                 deadline, sim_cost_us, log)


def plan_lazy_wastar(scene: Scene, start: State, goal: GoalSpec | None = None,
                     scope: ModelScope | Iterable[int] | None = None, c: ConstraintSpec | None = None,
                     cfg: SearchConfig | None = None, *, counters: CallCounters | None = None,
                     heuristic: Heuristic | None = None, deadline: float | None = None,
                     sim_cost_us: float = 0.0, log: IO[str] | None = None) -> PlanResult:
    """Weighted A* that simulates contact edges only when they are popped."""
    return _plan(True, scene, start, goal, scope, c, cfg, counters, heuristic,
                 deadline, sim_cost_us, log)


PLANNERS = {"wastar": plan_wastar, "lazy": plan_lazy_wastar}
