"""Batch experiment driver: probes, bets, tent systems, lattice measures.

Every command reads a JSON config, writes machine-readable output (exact
"p/q" rationals throughout), and exits 0 only when every assertion in the
run held.  Reports contain nothing environment-dependent, so identical
configs yield byte-identical bytes.

Exit codes: 0 pass, 1 assertion failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import derivatives as dv
from . import martingales as mg
from . import nullsets as ns
from . import serialize as sz
from . import tentsystem as ts
from .rationals import decimal_string, parse_rational


class ConfigError(ValueError):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _write_out(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _require(config: dict, key: str) -> object:
    if key not in config:
        raise ConfigError(f"config lacks required key {key!r}")
    return config[key]


# ---------------------------------------------------------------------------
# probe


def cmd_probe(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    f = sz.function_from_descriptor(_require(config, "function"))
    points = [sz.parse_point(p) for p in _require(config, "points")]
    depth = int(config.get("depth", args.depth or 6))
    oscillation = config.get("oscillation_threshold")
    separation = config.get("separation_threshold")
    osc_thr = parse_rational(oscillation) if oscillation is not None else None
    sep_thr = parse_rational(separation) if separation is not None else None
    results = []
    for point in points:
        entry: dict = {"point": point}
        schedule = dv.dyadic_schedule(depth + 2)
        entry["partials"] = [
            sz.to_plain(dv.partial_probe(f, point, axis, schedule, osc_thr))
            for axis in range(f.dimension)
        ]
        entry["class_a"] = sz.to_plain(dv.diff_class_a(f, point, depth, sep_thr))
        entry["class_b"] = sz.to_plain(dv.diff_class_b(f, point, depth))
        directions = config.get("defect")
        if directions:
            entry["defect"] = sz.to_plain(
                dv.linearity_defect(
                    f,
                    point,
                    sz.parse_point(directions["u"]),
                    sz.parse_point(directions["v"]),
                    parse_rational(directions.get("max_step", "1/4")),
                    depth=depth,
                    threshold=parse_rational(directions["threshold"])
                    if "threshold" in directions
                    else None,
                )
            )
        results.append(entry)
    report = {
        "command": "probe",
        "config": config,
        "norm": "euclidean",  # distance-sensitive checks compare squared norms
        "results": results,
    }
    _write_out(sz.canonical_json(report), args.out)
    return 0


# ---------------------------------------------------------------------------
# bet


def cmd_bet(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    try:
        martingale = sz.martingale_from_descriptor(_require(config, "martingale"))
    except mg.MonotonicityError as exc:
        sys.stderr.write(f"martingale rejected: {exc}\n")
        return 1
    source = sz.source_from_descriptor(_require(config, "source"))
    depth = int(config.get("depth", args.depth or 16))
    witness = mg.check_fairness(martingale, min(depth, int(config.get("audit_depth", 8))))
    if witness is not None:
        sys.stderr.write(
            f"fairness audit failed at sigma = {''.join(map(str, witness))!r}\n"
        )
        return 1
    thresholds = [parse_rational(t) for t in config.get("thresholds", [])]
    run = mg.run_bet(martingale, source, depth, thresholds)
    if args.format == "csv":
        _write_out(run.to_csv(), args.out)
    else:
        summary = {
            "command": "bet",
            "config": config,
            "trajectory": run.trajectory,
            "max_capital": run.max_capital,
            "min_tail_capital": run.min_tail_capital,
            "threshold_crossings": run.threshold_crossings,
        }
        if args.decimals is not None:
            summary["max_capital_decimal"] = decimal_string(run.max_capital, args.decimals)
        _write_out(sz.canonical_json(summary), args.out)
    return 0


# ---------------------------------------------------------------------------
# tent-system


def cmd_tent_system(args: argparse.Namespace) -> int:
    if args.check_bundle:
        try:
            system = ts.system_from_bundle(_load_config(args.check_bundle))
        except (ts.PartitionError, ValueError) as exc:
            sys.stderr.write(f"bundle verification failed: {exc}\n")
            return 1
        _write_out(
            sz.canonical_json(
                {"command": "tent-system", "bundle": args.check_bundle, "verified": True}
            ),
            args.out,
        )
        return 0
    if args.config is None:
        raise ConfigError("either --config or --check-bundle is required")
    config = _load_config(args.config)
    test = sz.nested_test_from_descriptor(_require(config, "test"))
    depth = int(config.get("depth", args.depth or 4))
    cutoff = int(config.get("cutoff", 0))
    budget = int(config.get("budget", 8))
    audit = ns.audit_nesting(test, depth, budget)
    if audit is not None:
        sys.stderr.write(f"nesting audit failed at stage {audit[0]}: {audit[1].to_json()}\n")
        return 1
    try:
        system = ts.build_tent_system(test, depth, cutoff, budget)
    except (ts.BuildBudgetError, ts.PartitionError) as exc:
        sys.stderr.write(f"build failed: {exc}\n")
        return 1
    failures: list[str] = []
    report: dict = {
        "command": "tent-system",
        "config": config,
        "partition": system.partition.verify_properties(),
        # cutoff >= depth leaves no stage in the sum: checks pass vacuously
        "vacuous": cutoff >= depth,
    }
    exclusion = []
    for m in range(depth + 1):
        for axis in range(1, system.dimension):
            entry = system.exclusion_visible(m, axis)
            exclusion.append(sz.to_plain(entry))
            if not entry.within_bound:
                failures.append(f"exclusion bound fails at stage {m}, axis {axis}")
    report["exclusion"] = exclusion
    rng = random.Random(args.seed or 0)
    audits = {}
    for m in range(1, depth + 1):
        violations = system.modulus_audit(m, int(config.get("modulus_pairs", 50)), rng)
        audits[str(m)] = {"violations": sz.to_plain(violations)}
        if violations:
            failures.append(f"modulus audit fails at stage {m}")
    report["modulus"] = audits
    oscillation = []
    for point_desc in config.get("points", []):
        point = sz.parse_point(point_desc)
        for m in config.get("oscillation_stages", list(range(1, depth + 1))):
            try:
                check = system.oscillation_check(point, int(m))
            except ValueError as exc:
                oscillation.append({"point": sz.to_plain(point), "stage": m, "error": str(exc)})
                failures.append(f"oscillation check unusable at stage {m}: {exc}")
                continue
            oscillation.append(sz.to_plain(check))
            if not check.passed or not check.tail_ok:
                failures.append(f"oscillation bound fails at stage {m}")
    report["oscillation"] = oscillation
    precisions = [int(p) for p in config.get("precisions", [])]
    if precisions and config.get("points"):
        evaluations = []
        for point_desc in config["points"]:
            point = sz.parse_point(point_desc)
            per_point = []
            for m in precisions:
                try:
                    value = system.evaluate(point, m)
                except ts.InsufficientDepthError as exc:
                    failures.append(f"evaluation at precision {m} needs a deeper build: {exc}")
                    break
                per_point.append(
                    {"precision": m, "value": value.value, "error": value.error}
                )
            evaluations.append({"point": point, "values": per_point})
        report["evaluations"] = sz.to_plain(evaluations)
    report["failures"] = failures
    if args.bundle:
        Path(args.bundle).write_text(sz.canonical_json(system.to_bundle()), encoding="utf-8")
    _write_out(sz.canonical_json(report), args.out)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# dore-maleva


def cmd_dore_maleva(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    params = sz.dore_maleva_params_from_descriptor(config.get("params", {"kind": "default"}))
    stages = int(config.get("stages", args.depth or 3))
    if stages < 0:
        raise ConfigError("stages must be >= 0")
    table = []
    remaining = Fraction(1)
    failures: list[str] = []
    for i in range(1, stages + 1):
        stage = ns.dore_maleva_stage(params, i)
        previous = remaining
        remaining = ns.dore_maleva_measure(params, i)
        if remaining >= previous:
            failures.append(f"remaining measure fails to decrease at stage {i}")
        row = {
            "stage": i,
            "n": params.n_at(i),
            "p": params.p_at(i),
            "p_raw": params.p_raw_at(i),
            "pitch": stage.pitch,
            "radius": stage.radius,
            "removed_fraction_per_cell": stage.removed_fraction_per_cell,
            "whole_cell": stage.whole_cell,
            "remaining": remaining,
        }
        if args.decimals is not None:
            row["remaining_decimal"] = decimal_string(remaining, args.decimals)
        table.append(row)
    geometry = None
    if config.get("geometry", True) and stages >= 1:
        try:
            geometry = [
                {"x0": r[0], "x1": r[1], "y0": r[2], "y1": r[3]}
                for r in ns.dore_maleva_rectangles(params, min(stages, int(config.get("geometry_stages", 2))))
            ]
        except ValueError:
            geometry = None
    report = {
        "command": "dore-maleva",
        "config": config,
        "table": table,
        "geometry": geometry,
        "failures": failures,
    }
    _write_out(sz.canonical_json(report), args.out)
    return 1 if failures else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slopelab",
        description="Exact-rational experiments: probes, bets, tents, lattices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler, blurb in (
        ("probe", cmd_probe, "differentiability probes on a function"),
        ("bet", cmd_bet, "martingale simulation against a bit source"),
        ("tent-system", cmd_tent_system, "build and verify a tent system"),
        ("dore-maleva", cmd_dore_maleva, "lattice removal measures and geometry"),
    ):
        p = sub.add_parser(name, help=blurb)
        p.add_argument(
            "--config",
            required=name != "tent-system",  # tent-system may verify a bundle instead
            help="JSON config path",
        )
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--depth", type=int, default=None, help="depth override")
        p.add_argument("--seed", type=int, default=None, help="seed for sampled audits")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument(
            "--decimals",
            type=int,
            default=None,
            help="also render key rationals as decimals with this many digits",
        )
        if name == "tent-system":
            p.add_argument("--bundle", default=None, help="also persist the system bundle")
            p.add_argument(
                "--check-bundle",
                default=None,
                help="verify a persisted bundle instead of building",
            )
        p.set_defaults(handler=handler)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (ValueError, KeyError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
