"""Hand-built and seeded scenes shared by the test modules."""
from __future__ import annotations

import math
import random

from oracles import shapes_overlap
from selectsim.scene import ConstraintSpec, Disk, GoalSpec, ObjectSpec, Pose, Rect, Scene, SceneError


def corridor(blocker: bool = True, extra=()) -> Scene:
    """A wall across x = 5 with a one-cell gap at y = 5; optionally a movable
    disk plugging the gap. Robot starts at (1, 5), goal disk around (9, 5)."""
    objs = [
        ObjectSpec(0, Rect(0.4, 2.6), Pose(5.0, 2.0), movable=False),
        ObjectSpec(1, Rect(0.4, 2.6), Pose(5.0, 8.0), movable=False),
    ]
    if blocker:
        objs.append(ObjectSpec(2, Disk(0.3), Pose(5.0, 5.0)))
    for shape, x, y, movable in extra:
        objs.append(ObjectSpec(len(objs), shape, Pose(x, y), movable=movable))
    fixed = frozenset(o.id for o in objs if not o.movable)
    return Scene(10.0, 10.0, tuple(objs), GoalSpec((9.0, 5.0), 1.0), (1, 5),
                 ConstraintSpec(fixed), 1.0, 0.0, 0.1)


def two_gaps() -> Scene:
    """Wall at x = 5 with a plugged gap at y = 5 and an open one at y = 8.

    A fixed post sits right behind the plug, so every push through the near
    gap ends in forbidden contact and the robot has to detour.
    """
    objs = (
        ObjectSpec(0, Rect(0.4, 2.3), Pose(5.0, 2.3), movable=False),
        ObjectSpec(1, Rect(0.4, 1.0), Pose(5.0, 6.4), movable=False),
        ObjectSpec(2, Rect(0.4, 0.8), Pose(5.0, 9.4), movable=False),
        ObjectSpec(3, Rect(0.3, 0.3), Pose(5.8, 5.0), movable=False),
        ObjectSpec(4, Disk(0.3), Pose(5.0, 5.0)),
    )
    return Scene(10.0, 10.0, objs, GoalSpec((9.0, 5.0), 1.0), (1, 5),
                 ConstraintSpec(frozenset(range(4))), 1.0, 0.0, 0.1)


def hidden_chain() -> Scene:
    """The straight route pushes movable disk 1 into fixed post 0.

    Ignoring everything, the first plan hits the post; with the post modelled
    the plan still shoves the disk into it; only with both modelled does a
    plan survive replay. Object 2 sits far away and never matters.
    """
    objs = (
        ObjectSpec(0, Rect(0.3, 0.4), Pose(4.3, 5.0), movable=False),
        ObjectSpec(1, Disk(0.4), Pose(3.0, 5.0)),
        ObjectSpec(2, Disk(0.4), Pose(8.0, 9.0)),
    )
    return Scene(10.0, 10.0, objs, GoalSpec((9.0, 5.0), 1.0), (1, 5),
                 ConstraintSpec(frozenset({0})), 1.0, 0.0, 0.1)


def boxed_goal() -> Scene:
    """Goal ringed by fixed rectangles: no path exists."""
    ring = [Rect(2.5, 0.3), Rect(2.5, 0.3), Rect(0.3, 2.5), Rect(0.3, 2.5)]
    at = [(7.0, 5.0), (7.0, 9.0), (5.0, 7.0), (9.0, 7.0)]
    objs = tuple(ObjectSpec(i, s, Pose(*p), movable=False) for i, (s, p) in enumerate(zip(ring, at)))
    return Scene(10.0, 10.0, objs, GoalSpec((7.0, 7.0), 1.0), (1, 1),
                 ConstraintSpec(frozenset(range(4))), 1.0, 0.0, 0.1)


SMALL_RES = 1.0
SMALL_ROBOT = 0.3
SMALL_POSE = 0.5


def small_scene(seed: int, max_cells: int = 9, max_movable: int = 3) -> Scene:
    """Seeded scene on at most a 10 x 10 lattice with up to ``max_movable``
    movable objects and up to two fixed ones, clustered between start and goal."""
    rng = random.Random(f"small:{seed}")
    while True:
        n = rng.randint(5, max_cells)
        start = (rng.randint(0, 1), rng.randint(0, n))
        goal = (rng.randint(n - 1, n), rng.randint(0, n))
        n_mov = rng.randint(0, max_movable)
        n_fix = rng.randint(0, 2)
        objs: list[ObjectSpec] = []
        tries = 0
        while len(objs) < n_mov + n_fix and tries < 500:
            tries += 1
            fixed = len(objs) < n_fix
            if rng.random() < 0.5:
                shape = Disk(rng.choice((0.3, 0.45, 0.6)))
            else:
                shape = Rect(rng.choice((0.3, 0.45, 0.6)), rng.choice((0.3, 0.45, 0.6, 1.5)))
            pose = Pose(rng.randint(4, 2 * n - 4) * 0.5, rng.randint(2, 2 * n - 2) * 0.5)
            if any(shapes_overlap(shape, pose[:2], o.shape, o.pose[:2], -0.05) for o in objs):
                continue
            if any(shapes_overlap(Disk(SMALL_ROBOT), (c[0] * SMALL_RES, c[1] * SMALL_RES), shape, pose[:2])
                   for c in (start, goal)):
                continue
            topple = not fixed and rng.random() < 0.25
            objs.append(ObjectSpec(len(objs), shape, pose, movable=not fixed,
                                   no_topple=topple,
                                   topple_threshold=0.8 if topple else math.inf,
                                   toppled_footprint_scale=1.5))
        fixed_ids = frozenset(o.id for o in objs if not o.movable)
        try:
            return Scene(n * SMALL_RES, n * SMALL_RES, tuple(objs),
                         GoalSpec((goal[0] * SMALL_RES, goal[1] * SMALL_RES), SMALL_RES),
                         start, ConstraintSpec(fixed_ids), SMALL_RES, SMALL_ROBOT, SMALL_POSE)
        except SceneError:
            continue


# -- randomized desk-scale worlds -------------------------------------------------

RES, RR = 0.05, 0.04


def desk_scene(rng: random.Random, n: int, topple: bool = True) -> Scene:
    """n objects crowded around the middle of a 1 x 1 table."""
    objs: list[ObjectSpec] = []
    while len(objs) < n:
        i = len(objs)
        shape = Disk(rng.uniform(0.03, 0.12)) if rng.random() < 0.5 else \
            Rect(rng.uniform(0.03, 0.12), rng.uniform(0.03, 0.12))
        pose = Pose(round(rng.uniform(0.3, 0.7), 3), round(rng.uniform(0.3, 0.7), 3))
        if any(shapes_overlap(shape, pose[:2], o.shape, o.pose[:2]) for o in objs):
            continue
        fixed = rng.random() < 0.2
        objs.append(ObjectSpec(i, shape, pose, movable=not fixed,
                               topple_threshold=rng.uniform(0.02, 0.06) if topple else math.inf,
                               toppled_footprint_scale=1.5, no_topple=rng.random() < 0.3))
    fixed = frozenset(o.id for o in objs if not o.movable)
    return Scene(1.0, 1.0, tuple(objs), GoalSpec((0.95, 0.95), 0.05), (2, 2),
                 ConstraintSpec(fixed), RES, RR, 0.01)


def random_state(rng: random.Random, scene: Scene):
    """Robot placed on a lattice point near the clutter; objects jittered."""
    poses = []
    for o in scene.objects:
        if o.movable and rng.random() < 0.3:
            poses.append(Pose(o.pose.x + rng.uniform(-0.02, 0.02), o.pose.y + rng.uniform(-0.02, 0.02),
                              rng.random() < 0.1))
        else:
            poses.append(o.pose)
    robot = (rng.randint(4, 16), rng.randint(4, 16))
    return scene.initial_state().replace(robot, tuple(poses))
