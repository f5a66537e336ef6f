"""The two forward models: a cheap collision checker and a quasi-static
push simulator, each restricted to an active subset of objects."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from . import kernels
from .scene import (
    ROBOT,
    Action,
    ConstraintSpec,
    EvalResult,
    FullState,
    Pose,
    ProjectedState,
    Scene,
    State,
    check_constraints,
    objects_in,
)

PropagationError = kernels.PropagationError


class InvalidAction(ValueError):
    """The robot move would leave the workspace."""


@dataclass(frozen=True)
class ModelScope:
    active: frozenset[int]

    @classmethod
    def of(cls, ids: Iterable[int]) -> ModelScope:
        return cls(frozenset(ids))

    @classmethod
    def everything(cls, scene: Scene) -> ModelScope:
        return cls(frozenset(range(scene.n)))


@dataclass
class CallCounters:
    collision_checks: int = 0
    ext_simulations: int = 0

    def merge(self, other: CallCounters) -> None:
        self.collision_checks += other.collision_checks
        self.ext_simulations += other.ext_simulations

    def snapshot(self) -> CallCounters:
        return CallCounters(self.collision_checks, self.ext_simulations)

    def as_dict(self) -> dict:
        return {"collision_checks": self.collision_checks,
                "ext_simulations": self.ext_simulations}


class _ScopedModel:
    def __init__(self, scene: Scene, scope: ModelScope | Iterable[int],
                 counters: CallCounters | None = None, *,
                 constraints: ConstraintSpec | None = None):
        if not isinstance(scope, ModelScope):
            scope = ModelScope.of(scope)
        if not scope.active <= frozenset(range(scene.n)):
            raise ValueError("scope names objects outside the scene")
        self.scene = scene
        self.constraints = constraints if constraints is not None else scene.constraints
        self.scope = scope
        self.active = tuple(sorted(scope.active))
        self.counters = counters if counters is not None else CallCounters()
        specs = [scene.objects[i] for i in self.active]
        self._specs = specs
        self._kinds = [s.footprint(False)[0] for s in specs]
        self._upright = [s.footprint(False)[1:] for s in specs]
        self._fallen = [s.footprint(True)[1:] for s in specs]
        self._movable = [s.movable for s in specs]
        self._index_cache: dict[tuple[int, ...], list[int]] = {}

    def _indices(self, s: State) -> list[int]:
        ids = s.ids
        idx = self._index_cache.get(ids)
        if idx is None:
            where = {oid: k for k, oid in enumerate(ids)}
            try:
                idx = [where[oid] for oid in self.active]
            except KeyError as exc:
                raise ValueError(f"state carries no pose for active object {exc.args[0]}") from None
            self._index_cache[ids] = idx
        return idx

    def _geometry(self, s: State):
        idx = self._indices(s)
        poses = s.poses
        xs, ys, exs, eys = [], [], [], []
        for k, i in enumerate(idx):
            p = poses[i]
            xs.append(p.x)
            ys.append(p.y)
            ex, ey = self._fallen[k] if p.toppled else self._upright[k]
            exs.append(ex)
            eys.append(ey)
        return idx, xs, ys, exs, eys

    def _move(self, s: State, a: Action):
        cx, cy = s.robot
        dest = (cx + a.dx, cy + a.dy)
        if not self.scene.in_bounds(dest):
            raise InvalidAction(f"move {tuple(a)} from {s.robot} leaves the workspace")
        res = self.scene.resolution
        return dest, cx * res, cy * res, dest[0] * res, dest[1] * res

    def _finish(self, pairs: frozenset, successor: State, escaped: frozenset = frozenset()) -> EvalResult:
        res = EvalResult(pairs, objects_in(pairs), successor, None, escaped)
        if not pairs and not escaped:
            return res
        v = check_constraints(res, self.constraints)
        if v is None:
            return res
        return EvalResult(pairs, res.objects, successor, v, escaped)


class CollisionChecker(_ScopedModel):
    """First-order contact detection only; objects never move."""

    def evaluate(self, s: State, a: Action) -> EvalResult:
        dest, x0, y0, x1, y1 = self._move(s, a)
        self.counters.collision_checks += 1
        _, xs, ys, exs, eys = self._geometry(s)
        hits = kernels.capsule_hits(x0, y0, x1, y1, self.scene.robot_radius,
                                    self._kinds, xs, ys, exs, eys)
        pairs = frozenset((ROBOT, self.active[i]) for i in hits)
        return self._finish(pairs, s.replace(dest, s.poses))


class Simulator(_ScopedModel):
    """Deterministic, friction-free quasi-static pushing.

    With ``quantize`` (the planning model) every pushed object's displacement
    is rounded up to the pose lattice along each axis, so successor poses stay
    on the lattice the search hashes on. ``quantize=False`` gives the exact
    continuous propagation.
    """

    def __init__(self, scene: Scene, scope: ModelScope | Iterable[int],
                 counters: CallCounters | None = None, *,
                 constraints: ConstraintSpec | None = None, quantize: bool = True,
                 sim_cost_us: float = 0.0):
        super().__init__(scene, scope, counters, constraints=constraints)
        self.quantize = quantize
        self.sim_cost_us = sim_cost_us
        self._thresholds = [s.topple_threshold for s in self._specs]

    def _burn(self) -> None:
        if self.sim_cost_us > 0:
            time.sleep(self.sim_cost_us * 1e-6)

    def evaluate(self, s: State, a: Action) -> EvalResult:
        dest, x0, y0, x1, y1 = self._move(s, a)
        self.counters.ext_simulations += 1
        self._burn()
        scene = self.scene
        idx, xs, ys, exs, eys = self._geometry(s)
        diagonal = bool(a.dx and a.dy)
        length = scene.resolution * (math.sqrt(2.0) if diagonal else 1.0)
        norm = math.sqrt(2.0) if diagonal else 1.0
        ux, uy = a.dx / norm, a.dy / norm
        q = scene.pose_resolution
        step = (q * norm) if self.quantize else 0.0

        disp, kpairs = kernels.propagate(x0, y0, ux, uy, length, scene.robot_radius,
                                         self._kinds, xs, ys, exs, eys, self._movable, step)
        hits = kernels.capsule_hits(x0, y0, x1, y1, scene.robot_radius,
                                    self._kinds, xs, ys, exs, eys)
        active = self.active
        pairs = {(ROBOT, active[i]) for i in hits}
        for i, j in kpairs:
            pairs.add((ROBOT, active[j]) if i < 0 else (active[i], active[j]))

        poses = list(s.poses)
        fallen: list[int] = []
        escaped: list[int] = []
        for k, t in enumerate(disp):
            if t <= 0.0:
                continue
            p = poses[idx[k]]
            units = t / step if step > 0 else 0.0
            if step > 0 and abs(units - round(units)) < 1e-6:
                m = round(units) * q
                nx_, ny_ = p.x + a.dx * m, p.y + a.dy * m
            else:
                nx_, ny_ = p.x + ux * t, p.y + uy * t
            toppled = p.toppled
            if not toppled and t > self._thresholds[k]:
                toppled = True
                fallen.append(k)
            poses[idx[k]] = Pose(nx_, ny_, toppled)
            if not scene.on_table(nx_, ny_):
                escaped.append(active[k])

        for k in fallen:
            p = poses[idx[k]]
            ex, ey = self._fallen[k]
            for j in range(len(active)):
                if j == k:
                    continue
                o = poses[idx[j]]
                oex, oey = self._fallen[j] if o.toppled else self._upright[j]
                if kernels.footprint_overlap(self._kinds[k], ex, ey, p.x, p.y,
                                             self._kinds[j], oex, oey, o.x, o.y) > kernels.EPS:
                    pairs.add((active[k], active[j]) if active[k] < active[j]
                              else (active[j], active[k]))

        return self._finish(frozenset(pairs), s.replace(dest, tuple(poses)), frozenset(escaped))


def collision_check(scene: Scene, s: State, a: Action, scope: ModelScope | Iterable[int]) -> EvalResult:
    return CollisionChecker(scene, scope).evaluate(s, a)


def simulate(scene: Scene, s: State, a: Action, scope: ModelScope | Iterable[int], *,
             quantize: bool = True) -> EvalResult:
    return Simulator(scene, scope, quantize=quantize).evaluate(s, a)


# -- evaluation traces ----------------------------------------------------------
#
# One JSON object per line:
#   {"model": "sim"|"cc", "state": {...}, "action": [dx, dy],
#    "pairs": [[a, b], ...], "violation": [id, reason] | null, "successor": {...}}

def _state_to_json(s: State) -> dict:
    poses = [[p.x, p.y, p.toppled] for p in s.poses]
    if isinstance(s, FullState):
        return {"robot": list(s.robot), "objects": poses}
    return {"robot": list(s.robot), "ids": list(s.ids), "poses": poses}


def state_from_json(d: dict) -> State:
    robot = (int(d["robot"][0]), int(d["robot"][1]))
    if "objects" in d:
        return FullState(robot, tuple(Pose(float(x), float(y), bool(t)) for x, y, t in d["objects"]))
    return ProjectedState(robot, tuple(int(i) for i in d["ids"]),
                          tuple(Pose(float(x), float(y), bool(t)) for x, y, t in d["poses"]))


def trace_record(model: str, s: State, a: Action, res: EvalResult) -> dict:
    return {
        "model": model,
        "state": _state_to_json(s),
        "action": [a.dx, a.dy],
        "pairs": sorted(list(p) for p in res.pairs),
        "violation": list(res.violation) if res.violation else None,
        "successor": _state_to_json(res.successor),
    }


def dump_trace(records: Iterable[dict], fh: IO[str]) -> None:
    for rec in records:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


def load_trace(fh: IO[str]) -> Iterator[dict]:
    for line in fh:
        line = line.strip()
        if line:
            yield json.loads(line)
