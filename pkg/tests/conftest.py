import math
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from selectsim import _kernels_py, kernels  # noqa: E402
from selectsim.scene import (  # noqa: E402
    ConstraintSpec,
    Disk,
    GoalSpec,
    ObjectSpec,
    Pose,
    Rect,
    Scene,
)


def make_scene(objects=(), *, size=10.0, goal=((9.0, 9.0), 1.0), start=(0, 0), forbidden=(),
               no_topple=(), resolution=1.0, robot_radius=0.0, pose_resolution=0.1):
    """Unit-grid scene; ``objects`` are ObjectSpec or (shape, x, y[, movable]) tuples."""
    specs = []
    for i, o in enumerate(objects):
        if isinstance(o, ObjectSpec):
            specs.append(o)
            continue
        shape, x, y, *rest = o
        movable = rest[0] if rest else True
        specs.append(ObjectSpec(i, shape, Pose(x, y), movable=movable))
    fixed = {o.id for o in specs if not o.movable}
    return Scene(size, size, tuple(specs), GoalSpec(*goal), start,
                 ConstraintSpec(frozenset(forbidden) | fixed, frozenset(no_topple)),
                 resolution, robot_radius, pose_resolution)


def push_scene(second=False):
    """Robot at the origin facing a radius-1 disk at (1.5, 0); optionally a
    radius-0.5 disk behind it at (3.4, 0)."""
    objs = [(Disk(1.0), 1.5, 0.0)]
    if second:
        objs.append((Disk(0.5), 3.4, 0.0))
    return make_scene(objs)


BACKENDS = [pytest.param(m, id=name) for name, m in kernels.backends().items()]


_KERNEL_NAMES = ("footprint_overlap", "capsule_penetration", "capsule_hits", "sweep_gap",
                 "propagate", "blocked_cells", "grid_distances")


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def use_backend(backend, monkeypatch):
    """Route the library through one kernel backend for the test's duration."""
    for name in _KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(backend, name))
    return backend


__all__ = ["make_scene", "push_scene", "BACKENDS", "math", "Disk", "Rect", "_kernels_py"]
