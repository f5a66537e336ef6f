"""Command-line entry point: ``selectsim {gen,plan,bench,replay}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import nullcontext
from pathlib import Path

from . import bench
from .scene import ACTIONS, Action, dumps_scene, load_scene
from .search import SearchConfig
from .selective import replay, solve


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = bench.ExperimentSpec(n_objects=args.n_objects, n_fixed=args.n_fixed,
                                grid=args.grid, seed=args.seed)
    text = dumps_scene(bench.generate_scene(spec))
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def _path_to_json(actions) -> dict:
    return {"actions": [[a.dx, a.dy] for a in actions]}


def _path_from_json(data) -> tuple[Action, ...]:
    steps = data["actions"] if isinstance(data, dict) else data
    out = []
    for dx, dy in steps:
        a = Action(int(dx), int(dy))
        if a not in ACTIONS:
            raise ValueError(f"not a lattice move: {a}")
        out.append(a)
    return tuple(out)


def _cmd_plan(args: argparse.Namespace) -> int:
    scene = load_scene(args.scene)
    cfg = SearchConfig(w=args.w, timeout=args.timeout)
    log_ctx = open(args.log, "w") if args.log else nullcontext(None)
    with log_ctx as fh:
        res = solve(scene, cfg, planner=args.planner, selective=args.selective == "on",
                    sim_cost_us=args.sim_cost_us, expansion_log=fh)
    summary = {
        "status": res.status,
        "cost": res.cost if res.success else None,
        "steps": len(res.actions),
        "collision_checks": res.counters.collision_checks,
        "ext_simulations": res.counters.ext_simulations,
        "relevant": list(res.relevant),
        "elapsed_s": round(res.elapsed, 6),
        "solve_log": res.log.to_dict(),
    }
    print(json.dumps(summary, indent=2))
    if args.out and res.success:
        Path(args.out).write_text(json.dumps(_path_to_json(res.actions), indent=2) + "\n")
    return 0 if res.success else 1


def _cmd_bench(args: argparse.Namespace) -> int:
    specs = bench.load_campaign(args.campaign)
    records = bench.run_campaign(specs, workers=args.workers)
    out = Path(args.out)
    with out.open("w", newline="") as fh:
        bench.write_records(records, fh)
    for name, text in bench.aggregate(records).items():
        out.with_name(f"{out.stem}_{name}.csv").write_text(text)
    print(bench.aggregate(records)["variants"], end="")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    scene = load_scene(args.scene)
    path = _path_from_json(json.loads(Path(args.path).read_text()))
    rep = replay(scene, path)
    at_goal = scene.at_goal(rep.final_state.robot)
    print(json.dumps({
        "valid": rep.success,
        "reaches_goal": at_goal,
        "violation": list(rep.violation) if rep.violation else None,
        "violation_step": rep.step,
        "pairs": sorted(list(p) for p in rep.pairs),
    }, indent=2))
    return 0 if rep.success and at_goal else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selectsim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a seeded scene file")
    g.add_argument("--n-objects", type=int, default=12)
    g.add_argument("--n-fixed", type=int, default=2)
    g.add_argument("--grid", type=int, default=40)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None, help="output path (stdout when omitted)")
    g.set_defaults(func=_cmd_gen)

    pl = sub.add_parser("plan", help="plan on a scene file")
    pl.add_argument("--scene", required=True)
    pl.add_argument("--planner", choices=("wastar", "lazy"), default="lazy")
    pl.add_argument("--selective", choices=("on", "off"), default="on")
    pl.add_argument("--w", type=float, default=bench.DEFAULT_W)
    pl.add_argument("--timeout", type=float, default=30.0)
    pl.add_argument("--sim-cost-us", type=float, default=0.0)
    pl.add_argument("--log", default=None, help="write the expansion log here")
    pl.add_argument("--out", default=None, help="write the action path (JSON) here")
    pl.set_defaults(func=_cmd_plan)

    b = sub.add_parser("bench", help="run an experiment campaign")
    b.add_argument("--campaign", required=True,
                   help="campaign JSON file or preset name (variants, objects, fixed)")
    b.add_argument("--out", required=True, help="per-run CSV; summaries are written next to it")
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=_cmd_bench)

    r = sub.add_parser("replay", help="check a path against the full simulator")
    r.add_argument("--scene", required=True)
    r.add_argument("--path", required=True)
    r.set_defaults(func=_cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
