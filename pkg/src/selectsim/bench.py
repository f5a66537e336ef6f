"""Seeded scene generation, experiment campaigns and summary tables."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

from . import kernels
from .scene import (
    ConstraintSpec,
    Disk,
    GoalSpec,
    ObjectSpec,
    Pose,
    Rect,
    Scene,
)
from .search import SearchConfig
from .selective import replay, solve

RES = 0.05
ROBOT_RADIUS = 0.04
POSE_RES = 0.01
GOAL_RADIUS = 0.05
MAX_REJECTIONS = 10_000
FRAGILE = 0.0           # chance a movable object may not topple
GAP = 0.0               # extra clearance between placed objects
CLUTTER_SIGMA = 0.05    # spread of the cluster around the goal, as a fraction of the table
CORE = 4                # movable objects drawn into that cluster; the rest spread uniformly
FIXED_KEEPOUT = 0.3     # fixed objects stay at least this far (fraction of table) from the goal
GOAL_X = (0.5, 0.65)    # goal column range, as fractions of the grid
DEFAULT_W = 1.0


class GenerationError(RuntimeError):
    """Object placement kept failing; try another seed."""


@dataclass(frozen=True)
class ExperimentSpec:
    n_objects: int = 12
    n_fixed: int = 2
    grid: int = 40
    seed: int = 0
    w: float = DEFAULT_W
    timeout: float = 30.0
    planner: str = "lazy"
    selective: bool = True
    sim_cost_us: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.n_fixed <= self.n_objects:
            raise ValueError("need 0 <= n_fixed <= n_objects")
        if self.planner not in ("wastar", "lazy"):
            raise ValueError(f"unknown planner {self.planner!r}")
        if self.grid < 8:
            raise ValueError("grid must be at least 8 cells")

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentSpec:
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown experiment fields: {sorted(unknown)}")
        return cls(**d)


def generate_scene(spec: ExperimentSpec) -> Scene:
    """Random tabletop with a goal sitting in clutter.

    Start and goal come first, then the ``n_fixed`` forbidden objects, kept
    away from the goal. The first ``CORE`` movable objects crowd around the
    goal; any further ones land anywhere on the table. Objects are placed one
    at a time with rejection, so for a given seed the scene with more objects
    extends the one with fewer: the layout depends on ``seed``, ``n_fixed`` and
    ``grid`` while ``n_objects`` only sets how many are drawn.
    """
    rng = random.Random(f"selectsim-scene:{spec.seed}:{spec.n_fixed}:{spec.grid}")
    n = spec.grid
    size = n * RES
    margin = 2 * RES
    start = (rng.randint(2, max(2, n // 8)), rng.randint(2, n - 2))
    gcell = (rng.randint(int(GOAL_X[0] * n), int(GOAL_X[1] * n)),
             rng.randint(int(0.25 * n), int(0.75 * n)))
    keep_free = [start, gcell]
    sigma = CLUTTER_SIGMA * size
    placed: list[ObjectSpec] = []
    budget = MAX_REJECTIONS
    for i in range(spec.n_objects):
        fixed = i < spec.n_fixed
        shape = _sample_shape(rng)
        fragile = not fixed and rng.random() < FRAGILE
        threshold = math.inf if fixed else round(rng.uniform(0.04, 0.1), 3)
        reach = max(shape.extents()[1:])
        lo, hi = margin + reach, size - margin - reach
        while True:
            budget -= 1
            if budget < 0:
                raise GenerationError(f"could not place {spec.n_objects} objects for seed {spec.seed}")
            if fixed:
                x, y = rng.uniform(0.25 * size, 0.85 * size), rng.uniform(lo, hi)
            elif i - spec.n_fixed >= CORE:
                x, y = rng.uniform(lo, hi), rng.uniform(lo, hi)
            else:
                x, y = rng.gauss(gcell[0] * RES, sigma), rng.gauss(gcell[1] * RES, sigma)
            x, y = _snap(x), _snap(y)
            if not (lo <= x <= hi and lo <= y <= hi):
                continue
            if fixed and math.hypot(x - gcell[0] * RES, y - gcell[1] * RES) < FIXED_KEEPOUT * size:
                continue
            cand = ObjectSpec(i, shape, Pose(x, y), movable=not fixed, no_topple=fragile,
                              topple_threshold=threshold,
                              toppled_footprint_scale=1.0 if fixed else 1.5)
            if _clear(cand, placed) and all(_robot_free(c, [cand]) for c in keep_free):
                placed.append(cand)
                break
    goal = GoalSpec((gcell[0] * RES, gcell[1] * RES), GOAL_RADIUS)
    return Scene(size, size, tuple(placed), goal, start,
                 ConstraintSpec(frozenset(range(spec.n_fixed)), frozenset()),
                 RES, ROBOT_RADIUS, POSE_RES)


def _sample_shape(rng: random.Random):
    if rng.random() < 0.5:
        return Disk(rng.randint(1, 3) * RES)
    return Rect(rng.randint(1, 3) * RES, rng.randint(1, 3) * RES)


def _clear(cand: ObjectSpec, placed: Sequence[ObjectSpec]) -> bool:
    k, ex, ey = cand.footprint(False)
    for o in placed:
        k2, ex2, ey2 = o.footprint(False)
        if kernels.footprint_overlap(k, ex + GAP, ey + GAP, cand.pose.x, cand.pose.y,
                                     k2, ex2, ey2, o.pose.x, o.pose.y) > 0.0:
            return False
    return True


def _snap(v: float) -> float:
    return round(round(v / POSE_RES) * POSE_RES, 10)


def _robot_free(cell, objects) -> bool:
    x, y = cell[0] * RES, cell[1] * RES
    for o in objects:
        k, ex, ey = o.footprint(False)
        if kernels.footprint_overlap(kernels.DISK, ROBOT_RADIUS, ROBOT_RADIUS, x, y,
                                     k, ex, ey, o.pose.x, o.pose.y) > kernels.EPS:
            return False
    return True


CSV_COLUMNS = ("seed", "variant", "selective", "success", "time_s", "ext_sims", "coll_checks",
               "cost", "iterations", "relevant_count",
               "n_objects", "n_fixed", "grid", "w", "timeout", "sim_cost_us", "status",
               "fallbacks", "path")


@dataclass
class ExperimentRecord:
    seed: int
    variant: str
    selective: bool
    success: bool
    time_s: float
    ext_sims: int
    coll_checks: int
    cost: float
    iterations: int
    relevant_count: int
    n_objects: int
    n_fixed: int
    grid: int
    w: float
    timeout: float
    sim_cost_us: float
    status: str
    fallbacks: int
    path: str

    @property
    def spec(self) -> ExperimentSpec:
        return ExperimentSpec(self.n_objects, self.n_fixed, self.grid, self.seed, self.w,
                              self.timeout, self.variant, self.selective, self.sim_cost_us)

    def actions(self):
        from .scene import Action
        if not self.path:
            return ()
        return tuple(Action(*map(int, step.split(","))) for step in self.path.split(";"))

    def row(self) -> dict:
        d = asdict(self)
        d["selective"] = int(self.selective)
        d["success"] = int(self.success)
        d["time_s"] = f"{self.time_s:.4f}"
        d["cost"] = "" if math.isinf(self.cost) else repr(self.cost)
        return d

    @classmethod
    def from_row(cls, row: dict) -> ExperimentRecord:
        return cls(
            seed=int(row["seed"]), variant=row["variant"], selective=bool(int(row["selective"])),
            success=bool(int(row["success"])), time_s=float(row["time_s"]),
            ext_sims=int(row["ext_sims"]), coll_checks=int(row["coll_checks"]),
            cost=float(row["cost"]) if row["cost"] else math.inf,
            iterations=int(row["iterations"]), relevant_count=int(row["relevant_count"]),
            n_objects=int(row["n_objects"]), n_fixed=int(row["n_fixed"]), grid=int(row["grid"]),
            w=float(row["w"]), timeout=float(row["timeout"]), sim_cost_us=float(row["sim_cost_us"]),
            status=row["status"], fallbacks=int(row["fallbacks"]), path=row["path"])


def run_experiment(spec: ExperimentSpec) -> ExperimentRecord:
    scene = generate_scene(spec)
    cfg = SearchConfig(w=spec.w, timeout=spec.timeout)
    t0 = time.perf_counter()
    res = solve(scene, cfg, planner=spec.planner, selective=spec.selective,
                sim_cost_us=spec.sim_cost_us)
    elapsed = time.perf_counter() - t0
    slog = res.log
    return ExperimentRecord(
        seed=spec.seed, variant=spec.planner, selective=spec.selective, success=res.success,
        time_s=elapsed, ext_sims=res.counters.ext_simulations,
        coll_checks=res.counters.collision_checks, cost=res.cost,
        iterations=len(slog.iterations), relevant_count=len(res.relevant),
        n_objects=spec.n_objects, n_fixed=spec.n_fixed, grid=spec.grid, w=spec.w,
        timeout=spec.timeout, sim_cost_us=spec.sim_cost_us, status=res.status,
        fallbacks=slog.fallbacks, path=";".join(f"{a.dx},{a.dy}" for a in res.actions))


def verify_record(rec: ExperimentRecord) -> bool:
    """Replay a successful record's path on its regenerated scene."""
    if not rec.success:
        return True
    scene = generate_scene(rec.spec)
    rep = replay(scene, rec.actions())
    return rep.success and scene.at_goal(rep.final_state.robot)


def run_campaign(specs: Sequence[ExperimentSpec], workers: int = 1) -> list[ExperimentRecord]:
    """Run every spec; records come back in spec order."""
    if workers <= 1 or len(specs) <= 1:
        return [run_experiment(s) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_experiment, specs, chunksize=1))


def write_records(records: Iterable[ExperimentRecord], fh) -> None:
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())


def read_records(fh) -> list[ExperimentRecord]:
    return [ExperimentRecord.from_row(row) for row in csv.DictReader(fh)]


# -- summaries ----------------------------------------------------------------

def _median(xs: list[float]) -> float:
    return statistics.median(xs) if xs else math.nan


def _summary(group: list[ExperimentRecord]) -> dict:
    sims = [r.ext_sims for r in group]
    return {
        "runs": len(group),
        "success_rate": sum(r.success for r in group) / len(group),
        "mean_time_s": f"{statistics.fmean(r.time_s for r in group):.4f}",
        "mean_ext_sims": f"{statistics.fmean(sims):.2f}",
        "median_ext_sims": _median(sims),
        "median_relevant": _median([r.relevant_count for r in group]),
    }


def _table(records: Sequence[ExperimentRecord], keys: tuple[str, ...]) -> str:
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for r in records:
        groups.setdefault(tuple(getattr(r, k) for k in keys), []).append(r)
    out = io.StringIO()
    cols = keys + ("runs", "success_rate", "mean_time_s", "mean_ext_sims", "median_ext_sims",
                   "median_relevant")
    w = csv.DictWriter(out, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for k in sorted(groups):
        row = dict(zip(keys, k))
        if "selective" in row:
            row["selective"] = int(row["selective"])
        row.update(_summary(groups[k]))
        w.writerow(row)
    return out.getvalue()


def aggregate(records: Sequence[ExperimentRecord]) -> dict[str, str]:
    """CSV summaries keyed ``variants`` (per variant), ``objects`` (versus object
    count) and ``fixed`` (versus fixed-object count)."""
    if not records:
        raise ValueError("nothing to aggregate")
    return {
        "variants": _table(records, ("selective", "variant")),
        "objects": _table(records, ("n_fixed", "selective", "variant", "n_objects")),
        "fixed": _table(records, ("n_objects", "selective", "variant", "n_fixed")),
    }


# -- campaigns ----------------------------------------------------------------

VARIANTS = ((False, "wastar"), (True, "lazy"), (True, "wastar"))


def variants_campaign(seeds: int = 60, sim_cost_us: float = 500.0, timeout: float = 30.0,
                    w: float = DEFAULT_W) -> list[ExperimentSpec]:
    return [ExperimentSpec(12, 2, 40, seed, w, timeout, planner, sel, sim_cost_us)
            for seed in range(seeds) for sel, planner in VARIANTS]


def objects_campaign(seeds: int = 20, counts: Sequence[int] = (6, 10, 14, 18), n_fixed: int = 3,
                   sim_cost_us: float = 0.0, timeout: float = 30.0, w: float = DEFAULT_W) -> list[ExperimentSpec]:
    return [ExperimentSpec(n, n_fixed, 40, seed, w, timeout, "lazy", sel, sim_cost_us)
            for n in counts for seed in range(seeds) for sel in (False, True)]


def fixed_campaign(seeds: int = 20, fixed: Sequence[int] = (0, 2, 4, 6), n_objects: int = 12,
                   sim_cost_us: float = 0.0, timeout: float = 30.0, w: float = DEFAULT_W) -> list[ExperimentSpec]:
    return [ExperimentSpec(n_objects, f, 40, seed, w, timeout, "lazy", sel, sim_cost_us)
            for f in fixed for seed in range(seeds) for sel in (False, True)]


PRESETS = {"variants": variants_campaign, "objects": objects_campaign, "fixed": fixed_campaign}


def load_campaign(source: str | Path) -> list[ExperimentSpec]:
    """Preset name, or a JSON file holding either a list of spec objects or
    ``{"defaults": {...}, "sweep": {field: [values, ...]}}`` (cartesian product
    in the listed field order)."""
    if str(source) in PRESETS:
        return PRESETS[str(source)]()
    data = json.loads(Path(source).read_text())
    if isinstance(data, list):
        return [ExperimentSpec.from_dict(d) for d in data]
    if "preset" in data:
        return PRESETS[data["preset"]](**data.get("args", {}))
    defaults = data.get("defaults", {})
    sweep = data.get("sweep", {})
    names = list(sweep)
    return [ExperimentSpec.from_dict({**defaults, **dict(zip(names, combo))})
            for combo in itertools.product(*(sweep[k] for k in names))]


__all__ = [
    "ExperimentSpec", "ExperimentRecord", "GenerationError", "generate_scene", "run_experiment",
    "run_campaign", "aggregate", "load_campaign", "verify_record", "write_records",
    "read_records", "variants_campaign", "objects_campaign", "fixed_campaign",
]
