"""Scene description, planning states and the projection onto relevant objects."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Union

from . import kernels

ROBOT = -1

FORBIDDEN_CONTACT = "forbidden-contact"
TOPPLED_PROTECTED = "toppled-protected"
OFF_TABLE = "off-table"
_REASON_ORDER = {FORBIDDEN_CONTACT: 0, TOPPLED_PROTECTED: 1, OFF_TABLE: 2}

SCHEMA_VERSION = 1


class SceneError(ValueError):
    """Invalid scene description."""


@dataclass(frozen=True)
class Disk:
    radius: float

    def extents(self, scale: float = 1.0) -> tuple[int, float, float]:
        return kernels.DISK, self.radius * scale, self.radius * scale


@dataclass(frozen=True)
class Rect:
    hx: float
    hy: float

    def extents(self, scale: float = 1.0) -> tuple[int, float, float]:
        return kernels.RECT, self.hx * scale, self.hy * scale


Shape = Union[Disk, Rect]


class Pose(NamedTuple):
    x: float
    y: float
    toppled: bool = False


class Action(NamedTuple):
    dx: int
    dy: int

    @property
    def cost(self) -> float:
        return math.sqrt(2.0) if self.dx and self.dy else 1.0


# Fixed order; the index is part of the search tie-break.
ACTIONS: tuple[Action, ...] = (
    Action(1, 0), Action(0, 1), Action(-1, 0), Action(0, -1),
    Action(1, 1), Action(-1, 1), Action(-1, -1), Action(1, -1),
)


@dataclass(frozen=True)
class ObjectSpec:
    """Static description of one object; ``pose`` is its initial pose."""

    id: int
    shape: Shape
    pose: Pose
    movable: bool = True
    no_topple: bool = False
    topple_threshold: float = math.inf
    toppled_footprint_scale: float = 1.0

    def footprint(self, toppled: bool) -> tuple[int, float, float]:
        return self.shape.extents(self.toppled_footprint_scale if toppled else 1.0)


@dataclass(frozen=True)
class ConstraintSpec:
    forbidden_contact: frozenset[int] = frozenset()
    no_topple: frozenset[int] = frozenset()


@dataclass(frozen=True)
class GoalSpec:
    center: tuple[float, float]
    radius: float

    def contains(self, x: float, y: float) -> bool:
        return math.hypot(x - self.center[0], y - self.center[1]) <= self.radius + 1e-12


@dataclass(frozen=True, slots=True)
class FullState:
    robot: tuple[int, int]
    objects: tuple[Pose, ...]

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(range(len(self.objects)))

    @property
    def poses(self) -> tuple[Pose, ...]:
        return self.objects

    def replace(self, robot: tuple[int, int], poses: tuple[Pose, ...]) -> FullState:
        return FullState(robot, poses)


@dataclass(frozen=True, slots=True)
class ProjectedState:
    """Robot cell plus the poses of the relevant objects, sorted by id."""

    robot: tuple[int, int]
    ids: tuple[int, ...] = ()
    poses: tuple[Pose, ...] = ()

    def replace(self, robot: tuple[int, int], poses: tuple[Pose, ...]) -> ProjectedState:
        return ProjectedState(robot, self.ids, poses)

    def pose_of(self, oid: int) -> Pose:
        return self.poses[self.ids.index(oid)]


State = Union[FullState, ProjectedState]


class Violation(NamedTuple):
    object_id: int
    reason: str


@dataclass(frozen=True)
class EvalResult:
    """Outcome of evaluating one action under one model.

    ``pairs`` holds normalized ``(a, b)`` tuples with ``a < b``; the robot is
    ``ROBOT`` (-1). ``objects`` are the object ids appearing in ``pairs``.
    """

    pairs: frozenset[tuple[int, int]]
    objects: frozenset[int]
    successor: State
    violation: Violation | None = None
    escaped: frozenset[int] = frozenset()

    @property
    def valid(self) -> bool:
        return self.violation is None


def make_pair(a: int, b: int) -> tuple[int, int]:
    if a == b:
        raise ValueError("interaction pair needs two distinct bodies")
    return (a, b) if a < b else (b, a)


def objects_in(pairs: Iterable[tuple[int, int]]) -> frozenset[int]:
    return frozenset(x for p in pairs for x in p if x != ROBOT)


class RelevantSet:
    """Ordered, grow-only set of relevant object ids (insertion order kept)."""

    __slots__ = ("order", "_members")

    def __init__(self, ids: Iterable[int] = ()):
        order: list[int] = []
        for i in ids:
            if i not in order:
                order.append(int(i))
        self.order = tuple(order)
        self._members = frozenset(order)

    def add(self, *ids: int) -> RelevantSet:
        return RelevantSet(self.order + tuple(ids))

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._members))

    def complement(self, n: int) -> tuple[int, ...]:
        return tuple(i for i in range(n) if i not in self._members)

    def __contains__(self, oid: object) -> bool:
        return oid in self._members

    def __iter__(self):
        return iter(self.ids)

    def __len__(self) -> int:
        return len(self._members)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, RelevantSet):
            return self._members == other._members
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._members)

    def __repr__(self) -> str:
        return f"RelevantSet({list(self.order)})"


@dataclass(frozen=True)
class Scene:
    width: float
    height: float
    objects: tuple[ObjectSpec, ...]
    goal: GoalSpec
    robot_start: tuple[int, int]
    constraints: ConstraintSpec = field(default_factory=ConstraintSpec)
    resolution: float = 0.05
    robot_radius: float = 0.04
    pose_resolution: float = 0.01
    target: int | None = None

    def __post_init__(self) -> None:
        flagged = frozenset(o.id for o in self.objects if o.no_topple)
        if not flagged <= self.constraints.no_topple:
            object.__setattr__(self, "constraints", ConstraintSpec(
                self.constraints.forbidden_contact, self.constraints.no_topple | flagged))
        self.validate()

    @property
    def n(self) -> int:
        return len(self.objects)

    @property
    def nx(self) -> int:
        return int(round(self.width / self.resolution))

    @property
    def ny(self) -> int:
        return int(round(self.height / self.resolution))

    def position(self, cell: tuple[int, int]) -> tuple[float, float]:
        return cell[0] * self.resolution, cell[1] * self.resolution

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        return 0 <= cell[0] <= self.nx and 0 <= cell[1] <= self.ny

    def on_table(self, x: float, y: float) -> bool:
        return -1e-9 <= x <= self.width + 1e-9 and -1e-9 <= y <= self.height + 1e-9

    def at_goal(self, cell: tuple[int, int]) -> bool:
        return self.goal.contains(*self.position(cell))

    def initial_state(self) -> FullState:
        return FullState(tuple(self.robot_start), tuple(o.pose for o in self.objects))

    def validate(self) -> None:
        if self.resolution <= 0 or self.width <= 0 or self.height <= 0:
            raise SceneError("workspace and resolution must be positive")
        if self.pose_resolution <= 0:
            raise SceneError("pose_resolution must be positive")
        ratio = self.resolution / self.pose_resolution
        if abs(ratio - round(ratio)) > 1e-6:
            raise SceneError("resolution must be an integer multiple of pose_resolution")
        if self.robot_radius < 0:
            raise SceneError("robot_radius must be non-negative")
        for i, o in enumerate(self.objects):
            if o.id != i:
                raise SceneError(f"object ids must be dense 0..n-1 (got {o.id} at {i})")
            if isinstance(o.shape, Disk):
                if not o.shape.radius > 0:
                    raise SceneError(f"object {i}: radius must be positive")
            elif not (o.shape.hx > 0 and o.shape.hy > 0):
                raise SceneError(f"object {i}: half-extents must be positive")
            if o.toppled_footprint_scale < 1:
                raise SceneError(f"object {i}: toppled_footprint_scale must be >= 1")
            if not (math.isfinite(o.pose.x) and math.isfinite(o.pose.y)):
                raise SceneError(f"object {i}: pose must be finite")
            if not self.on_table(o.pose.x, o.pose.y):
                raise SceneError(f"object {i}: pose outside the workspace")
        ids = set(range(self.n))
        c = self.constraints
        if not (c.forbidden_contact <= ids and c.no_topple <= ids):
            raise SceneError("constraint ids must name scene objects")
        fixed = {o.id for o in self.objects if not o.movable}
        if not fixed <= c.forbidden_contact:
            raise SceneError("fixed objects must be listed in forbidden_contact")
        if self.target is not None and self.target not in ids:
            raise SceneError("target must name a scene object")
        if self.goal.radius < self.resolution:
            raise SceneError("goal radius must be at least one grid resolution")
        if not self.in_bounds(tuple(self.robot_start)):
            raise SceneError("robot_start outside the grid")
        if not self._goal_supported():
            raise SceneError("goal region is entirely covered by forbidden objects")

    def _goal_supported(self) -> bool:
        gx, gy = self.goal.center
        r = self.goal.radius
        res = self.resolution
        forb = [self.objects[i] for i in sorted(self.constraints.forbidden_contact)]
        for i in range(max(0, math.floor((gx - r) / res)), min(self.nx, math.ceil((gx + r) / res)) + 1):
            for j in range(max(0, math.floor((gy - r) / res)), min(self.ny, math.ceil((gy + r) / res)) + 1):
                x, y = i * res, j * res
                if not self.goal.contains(x, y):
                    continue
                if all(kernels.footprint_overlap(kernels.DISK, self.robot_radius, self.robot_radius,
                                                 x, y, *o.footprint(o.pose.toppled)[:3],
                                                 o.pose.x, o.pose.y) <= kernels.EPS
                       for o in forb):
                    return True
        return False


def project(s: FullState, cr: Iterable[int]) -> ProjectedState:
    """Drop the poses of objects outside ``cr`` (the many-to-one map onto the
    selective space)."""
    ids = tuple(sorted(set(cr)))
    n = len(s.objects)
    for i in ids:
        if not 0 <= i < n:
            raise ValueError(f"object id {i} not in scene")
    return ProjectedState(s.robot, ids, tuple(s.objects[i] for i in ids))


def embed(p: ProjectedState, fill: FullState) -> FullState:
    """Inverse-image representative of ``p`` taking irrelevant poses from ``fill``."""
    objects = list(fill.objects)
    for i, pose in zip(p.ids, p.poses):
        objects[i] = pose
    return FullState(p.robot, tuple(objects))


def check_constraints(res: EvalResult, c: ConstraintSpec) -> Violation | None:
    """First interaction-constraint violation in ``res`` (lowest object id)."""
    found: list[Violation] = []
    for pair in res.pairs:
        for x in pair:
            if x in c.forbidden_contact:
                found.append(Violation(x, FORBIDDEN_CONTACT))
    succ = res.successor
    for oid, pose in zip(succ.ids, succ.poses):
        if pose.toppled and oid in c.no_topple and oid in res.objects:
            found.append(Violation(oid, TOPPLED_PROTECTED))
    for oid in res.escaped:
        found.append(Violation(oid, OFF_TABLE))
    if not found:
        return None
    return min(found, key=lambda v: (v.object_id, _REASON_ORDER[v.reason]))


def state_key(s: State, pose_resolution: float = 0.01) -> tuple:
    """Hashable key; poses are snapped to the pose-resolution lattice."""
    q = pose_resolution
    return (s.robot, tuple((round(p.x / q), round(p.y / q), p.toppled) for p in s.poses))


# -- JSON scene files ---------------------------------------------------------

def _shape_to_dict(shape: Shape) -> dict:
    if isinstance(shape, Disk):
        return {"type": "disk", "radius": shape.radius}
    return {"type": "rect", "half_extents": [shape.hx, shape.hy]}


def _shape_from_dict(d: dict) -> Shape:
    kind = d.get("type")
    if kind == "disk":
        return Disk(float(d["radius"]))
    if kind == "rect":
        hx, hy = d["half_extents"]
        return Rect(float(hx), float(hy))
    raise SceneError(f"unknown shape type {kind!r}")


def _num_out(v: float) -> float | str:
    return "inf" if math.isinf(v) else v


def _num_in(v: float | str) -> float:
    return math.inf if v == "inf" else float(v)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "workspace": {"width": scene.width, "height": scene.height},
        "resolution": scene.resolution,
        "pose_resolution": scene.pose_resolution,
        "robot_radius": scene.robot_radius,
        "robot_start": list(scene.robot_start),
        "goal": {"center": list(scene.goal.center), "radius": scene.goal.radius},
        "target": scene.target,
        "objects": [
            {
                "id": o.id,
                "shape": _shape_to_dict(o.shape),
                "pose": {"x": o.pose.x, "y": o.pose.y, "toppled": o.pose.toppled},
                "movable": o.movable,
                "no_topple": o.no_topple,
                "topple_threshold": _num_out(o.topple_threshold),
                "toppled_footprint_scale": o.toppled_footprint_scale,
            }
            for o in scene.objects
        ],
        "constraints": {
            "forbidden_contact": sorted(scene.constraints.forbidden_contact),
            "no_topple": sorted(scene.constraints.no_topple),
        },
    }


def scene_from_dict(d: dict) -> Scene:
    try:
        ws = d["workspace"]
        objects = tuple(
            ObjectSpec(
                id=int(o["id"]),
                shape=_shape_from_dict(o["shape"]),
                pose=Pose(float(o["pose"]["x"]), float(o["pose"]["y"]),
                          bool(o["pose"].get("toppled", False))),
                movable=bool(o.get("movable", True)),
                no_topple=bool(o.get("no_topple", False)),
                topple_threshold=_num_in(o.get("topple_threshold", "inf")),
                toppled_footprint_scale=float(o.get("toppled_footprint_scale", 1.0)),
            )
            for o in d.get("objects", [])
        )
        cons = d.get("constraints", {})
        goal = d["goal"]
        return Scene(
            width=float(ws["width"]),
            height=float(ws["height"]),
            objects=objects,
            goal=GoalSpec((float(goal["center"][0]), float(goal["center"][1])), float(goal["radius"])),
            robot_start=(int(d["robot_start"][0]), int(d["robot_start"][1])),
            constraints=ConstraintSpec(frozenset(int(i) for i in cons.get("forbidden_contact", [])),
                                       frozenset(int(i) for i in cons.get("no_topple", []))),
            resolution=float(d.get("resolution", 0.05)),
            robot_radius=float(d.get("robot_radius", 0.04)),
            pose_resolution=float(d.get("pose_resolution", 0.01)),
            target=d.get("target"),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise SceneError(f"malformed scene file: {exc!r}") from exc


def dumps_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + "\n"


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(dumps_scene(scene))


def load_scene(path: str | Path) -> Scene:
    return scene_from_dict(json.loads(Path(path).read_text()))
