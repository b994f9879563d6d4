"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import analysis, instances
from .core import Instance, OptimalSolverError, Point, agent, approximation_ratio, utilitarian_cost
from .io import (InstanceFormatError, RunManifest, dump_json, instance_to_dict, load_instance,
                 render_csv)
from .mechanisms import cm, cmp, gcm
from .optimal import geometric_median_iterative

EXIT_USAGE = 2
EXIT_RUNTIME = 3

BOUNDS_COLUMNS = ["c", "w_min", "w_max", "consistency_bound", "robustness_bound",
                  "empirical_consistency", "empirical_robustness"]
TRADEOFF_COLUMNS = ["instance_id", "c", "prediction_mode", "pred_x", "pred_y", "facility_x",
                    "facility_y", "opt_x", "opt_y", "mech_cost", "opt_cost", "ratio"]
IMPOSSIBILITY_COLUMNS = ["table", "placement", "phantom_y", "instance", "n", "w_min", "w_max",
                         "facility_y", "ratio", "closed_form"]

# constant-point heights for the impossibility table: above 20 keeps instance A
# optimal, at 10 the GCM falls to (0,10) on A
PLACEMENTS = {"above": 21.0, "below": 10.0}


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc
    return vals


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise UsageError(f"expected two comma-separated numbers, got {text!r}")
    return vals[0], vals[1]


def _point(text: str) -> Point:
    return Point(*_pair(text))


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _params(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}


def cmd_place(args: argparse.Namespace) -> None:
    inst = load_instance(args.instance)
    c = args.c if args.c is not None else (inst.confidence or 0.0)
    if not 0.0 <= c < 1.0:
        raise UsageError(f"invalid confidence {c}")
    opt = None
    if args.mechanism == "cm":
        out = cm(inst.agents)
        pred = None
    else:
        if args.prediction == "accurate":
            opt = geometric_median_iterative(inst.agents)
            pred = opt.location
        elif args.prediction is not None:
            pred = _point(args.prediction)
        else:
            pred = inst.prediction
        if pred is None and c > 0:
            raise UsageError("a prediction is required when c > 0")
        out = cmp(inst.agents, pred or Point(0.0, 0.0), c)
    cost = utilitarian_cost(out.facility, inst.agents)
    result = {
        "manifest": RunManifest.now("place", _params(args)).as_dict(),
        "mechanism": args.mechanism, "c": c,
        "prediction": None if pred is None else [pred.x, pred.y],
        "facility": [out.facility.x, out.facility.y],
        "phantom_count": out.phantom_count,
        "total_cost": cost.total_cost, "per_agent": cost.per_agent,
    }
    if args.optimal:
        opt = opt or geometric_median_iterative(inst.agents)
        result.update(optimal=[opt.location.x, opt.location.y], opt_cost=opt.cost,
                      ratio=approximation_ratio(cost.total_cost, opt.cost))
    _emit(dump_json(result), args.out)


def cmd_bounds(args: argparse.Namespace) -> None:
    grid = _floats(args.c_grid)
    if not grid:
        raise UsageError("empty c grid")
    if not 0 < args.w_min <= args.w_max:
        raise UsageError("need 0 < w_min <= w_max")
    rows = []
    for c in grid:
        pair = instances.BoundPair.of(c, args.w_min, args.w_max)
        row = {"c": c, "w_min": args.w_min, "w_max": args.w_max,
               "consistency_bound": pair.consistency, "robustness_bound": pair.robustness}
        if args.empirical:
            n = instances.smallest_compatible_n(c)
            for mode in instances.MODES:
                coa = instances.coa_worst_instance(n, c, args.w_min, args.w_max, mode)
                row[f"empirical_{mode}"] = instances.instance_ratio(coa.instance)
        rows.append(row)
    manifest = RunManifest.now("bounds", _params(args))
    _emit(render_csv(manifest, BOUNDS_COLUMNS, rows), args.out)


def cmd_gen_coa(args: argparse.Namespace) -> None:
    n = args.n or instances.smallest_compatible_n(args.c)
    coa = instances.coa_worst_instance(n, args.c, args.w_min, args.w_max, args.mode)
    data = instance_to_dict(coa.instance)
    data["coa"] = {"mode": coa.mode, "worst_x": coa.worst_x, "expected_ratio": coa.expected_ratio,
                   "measured_ratio": instances.instance_ratio(coa.instance)}
    data["manifest"] = RunManifest.now("gen-coa", _params(args)).as_dict()
    _emit(dump_json(data), args.out)


def cmd_search(args: argparse.Namespace) -> None:
    cfg = analysis.SearchConfig(
        seed=args.seed, c=args.c, mode=args.mode, restarts=args.restarts,
        steps_per_restart=args.steps, n_range=tuple(int(v) for v in _pair(args.n_range)),
        coordinate_box=_pair(args.box), weight_box=_pair(args.weight_box),
        seed_with_coa=not args.no_seed_coa)
    res = analysis.adversarial_search(cfg)
    data = {
        "manifest": RunManifest.now("search", _params(args), args.seed).as_dict(),
        "best_ratio": res.report.ratio, "bound": res.bound,
        "box_bound": instances.bound(cfg.c, cfg.weight_box[0], cfg.weight_box[1], cfg.mode),
        "max_excess": res.max_excess, "evaluations": res.evaluations,
        "report": res.report.as_row(), "instance": instance_to_dict(res.instance),
    }
    _emit(dump_json(data), args.out)


def cmd_fuzz(args: argparse.Namespace) -> None:
    rep = analysis.fuzz_strategyproofness(args.mechanism, args.trials, args.seed, args.tolerance)
    data = {"manifest": RunManifest.now("fuzz", _params(args), args.seed).as_dict(),
            **rep.as_dict()}
    if args.out:
        Path(args.out).write_text(dump_json(data), encoding="utf-8")
    print(f"mechanism: {rep.mechanism}")
    print(f"trials: {rep.trials}")
    print(f"violations: {len(rep.violations)}")
    print(f"max_gain: {rep.max_gain!r}")


EXAMPLE_INSTANCE = Instance((agent(0, 1, 4), agent(-1, 0, 1), agent(1, 0, 1)))


def _prediction_list(text: str) -> list:
    preds = []
    for tok in text.split(";"):
        tok = tok.strip()
        if not tok:
            continue
        preds.append(analysis.ACCURATE if tok == "accurate" else _point(tok))
    if not preds:
        raise UsageError("empty prediction list")
    return preds


def cmd_tradeoff(args: argparse.Namespace) -> None:
    inst = load_instance(args.instance) if args.instance else EXAMPLE_INSTANCE
    c_grid = _floats(args.c_grid)
    if not c_grid:
        raise UsageError("empty c grid")
    reports = analysis.tradeoff_sweep(inst, _prediction_list(args.predictions), c_grid)
    manifest = RunManifest.now("tradeoff", _params(args))
    _emit(render_csv(manifest, TRADEOFF_COLUMNS, [r.as_row() for r in reports]), args.out)


def impossibility_rows(placements: Sequence[str]) -> list[dict]:
    a, b = instances.impossibility_instances()
    rows = []
    for name in placements:
        y = PLACEMENTS[name]
        phantoms = [Point(0.0, y)] * 4
        for label, inst in (("A", a), ("B", b)):
            rows.append({"table": "pair", "placement": name, "phantom_y": y, "instance": label,
                         "n": inst.n, "w_min": inst.w_min, "w_max": inst.w_max,
                         "facility_y": gcm(inst.agents, phantoms).facility.y,
                         "ratio": instances.constant_point_ratio(inst, phantoms)})
    for n in range(2, 11):
        for wr in (1.0, 2.0, 5.0, 10.0):
            inst, phantoms = instances.impossibility_family(n, 1.0, wr)
            rows.append({"table": "scaling", "placement": "above", "phantom_y": phantoms[0].y,
                         "instance": "B", "n": n, "w_min": 1.0, "w_max": wr,
                         "facility_y": gcm(inst.agents, phantoms).facility.y,
                         "ratio": instances.constant_point_ratio(inst, phantoms),
                         "closed_form": instances.impossibility_ratio(n, 1.0, wr)})
    return rows


def cmd_impossibility(args: argparse.Namespace) -> None:
    placements = list(PLACEMENTS) if args.placement == "both" else [args.placement]
    manifest = RunManifest.now("impossibility", _params(args))
    _emit(render_csv(manifest, IMPOSSIBILITY_COLUMNS, impossibility_rows(placements)), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wfacility", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("place", help="run CMP (or CM) on an instance file")
    s.add_argument("instance")
    s.add_argument("--c", type=float, default=None, help="confidence in [0,1)")
    s.add_argument("--prediction", default=None, help="'x,y' or 'accurate'")
    s.add_argument("--mechanism", choices=("cmp", "cm"), default="cmp")
    s.add_argument("--optimal", action="store_true", help="also report optimum and ratio")
    s.add_argument("--out")
    s.set_defaults(func=cmd_place)

    s = sub.add_parser("bounds", help="tabulate the consistency/robustness bounds")
    s.add_argument("--c-grid", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    s.add_argument("--w-min", type=float, default=1.0)
    s.add_argument("--w-max", type=float, default=1.0)
    s.add_argument("--empirical", action="store_true",
                   help="fill the empirical columns from generated worst-case instances")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("gen-coa", help="write a weighted COA worst-case instance")
    s.add_argument("--n", type=int, default=None, help="default: smallest compatible n")
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--w-min", type=float, default=1.0)
    s.add_argument("--w-max", type=float, default=1.0)
    s.add_argument("--mode", choices=instances.MODES, default="consistency")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen_coa)

    s = sub.add_parser("search", help="adversarial hill climbing against the bounds")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--mode", choices=instances.MODES, default="consistency")
    s.add_argument("--weight-box", default="1,1")
    s.add_argument("--box", default="-10,10")
    s.add_argument("--n-range", default="1,16")
    s.add_argument("--restarts", type=int, default=10)
    s.add_argument("--steps", type=int, default=2000)
    s.add_argument("--no-seed-coa", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("fuzz", help="strategyproofness fuzzing")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--mechanism", choices=sorted(analysis.BATCH_MECHANISMS), default="cmp")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--tolerance", type=float, default=1e-9)
    s.add_argument("--out", help="write the full JSON report here")
    s.set_defaults(func=cmd_fuzz)

    s = sub.add_parser("tradeoff", help="sweep predictions x confidences on one instance")
    s.add_argument("--instance", default=None, help="default: the 3-agent example instance")
    s.add_argument("--predictions", default="accurate;0,-10;0,0.5")
    s.add_argument("--c-grid", default="0,0.2,0.5,0.7")
    s.add_argument("--out")
    s.set_defaults(func=cmd_tradeoff)

    s = sub.add_parser("impossibility", help="constant-point impossibility table")
    s.add_argument("--placement", choices=("above", "below", "both"), default="both")
    s.add_argument("--out")
    s.set_defaults(func=cmd_impossibility)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (UsageError, InstanceFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OptimalSolverError, RuntimeError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
