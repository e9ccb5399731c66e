"""Command-line entry point.

Subcommands: ``run`` executes a scenario config, ``scenarios`` lists the
builtins, ``verify`` checks a serialized distribution against a config's
thresholds, and ``lowerbound`` emits the proper-versus-improper query
separation tables. Exit codes: 0 success, 1 configuration/usage error,
2 threshold breach.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from ..core import verify_candidate
from ..errors import ConfigError, ValidgenError
from ..learners import distribution_from_jsonable, vgm_learn, LearnerParams
from ..lowerbound import (
    evaluate_box_candidate,
    gv_packing,
    make_hidden_box_instance,
    make_needle_instance,
    proper_search_demo,
)
from . import config as config_mod
from .runner import compute_optimum, persist, run_scenario
from .scenarios import builtin_names, get_builtin


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="validgen", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_run = sub.add_parser("run", help="run a scenario config file")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override the base seed")
    p_run.add_argument("--out-dir", default="validgen-out")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    p_run.add_argument("--jobs", type=int, default=1)

    sub.add_parser("scenarios", help="list builtin scenarios")

    p_ver = sub.add_parser("verify", help="verify a serialized distribution against a config")
    p_ver.add_argument("distribution")
    p_ver.add_argument("config")
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.add_argument("--delta", type=float, default=0.05)
    p_ver.add_argument("--threshold-loss", type=float, default=None)

    p_low = sub.add_parser("lowerbound", help="query-separation tables")
    low_sub = p_low.add_subparsers(dest="instance", parser_class=_Parser)
    p_needle = low_sub.add_parser("needle")
    p_needle.add_argument("--n", type=int, default=1000)
    p_needle.add_argument("--trials", type=int, default=100)
    p_needle.add_argument("--seed", type=int, default=0)
    p_needle.add_argument("--out-dir", default=None)
    p_hidden = low_sub.add_parser("hidden-box")
    p_hidden.add_argument("--d", type=int, default=12)
    p_hidden.add_argument("--trials", type=int, default=20)
    p_hidden.add_argument("--seed", type=int, default=0)
    p_hidden.add_argument("--packing-size", type=int, default=4)
    p_hidden.add_argument("--out-dir", default=None)
    return parser


def _cmd_run(args) -> int:
    scenario = config_mod.load_config(args.config)
    if args.seed is not None:
        scenario = scenario.with_overrides(base_seed=args.seed)
    reports, summary = run_scenario(scenario, jobs=args.jobs)
    written = persist(scenario, reports, summary, args.out_dir, fmt=args.format)
    print(json.dumps(summary, indent=1, sort_keys=True))
    for path in written:
        print(f"wrote {path}")
    frac = summary.get("success_fraction")
    if scenario.min_success_fraction is not None and frac is not None and frac < scenario.min_success_fraction:
        print(
            f"success fraction {frac:.3f} below required {scenario.min_success_fraction:.3f}",
            file=sys.stderr,
        )
        return 2
    return 0


def _cmd_scenarios() -> int:
    for name in builtin_names():
        scenario = get_builtin(name)
        print(f"{name:24s} learner={scenario.learner:10s} {scenario.description}")
    return 0


def _cmd_verify(args) -> int:
    with open(args.distribution, "r", encoding="utf-8") as fh:
        record = json.load(fh)
    payload = record.get("distribution", record)
    dist = distribution_from_jsonable(payload)
    scenario = config_mod.load_config(args.config)
    seed = args.seed if args.seed is not None else scenario.base_seed
    rng = np.random.default_rng(seed)
    env = scenario.make_env(rng)
    threshold = args.threshold_loss
    if threshold is None:
        opt = compute_optimum(scenario)
        if opt is None:
            raise ConfigError("no computable optimum; pass --threshold-loss", "verify")
        threshold = opt + scenario.eps1
    report = verify_candidate(
        dist,
        env.p,
        env.oracle,
        scenario.loss,
        scenario.eps1,
        scenario.eps2,
        args.delta,
        rng,
        threshold_loss=threshold,
    )
    print(
        json.dumps(
            {
                "passed": report.passed,
                "loss_estimate": report.loss_estimate,
                "inv_estimate": report.inv_estimate,
                "threshold_loss": report.threshold_loss,
                "threshold_inv": report.threshold_inv,
                "samples_used": report.samples_used,
                "queries_used": report.queries_used,
            },
            indent=1,
        )
    )
    return 0 if report.passed else 2


def _write_table(rows: list[dict], columns: list[str], out_dir, name: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row[c] for c in columns])
    text = buf.getvalue()
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{name}.csv").write_text(text, encoding="utf-8")
        print(f"wrote {path / f'{name}.csv'}")
    else:
        print(text, end="")


def _cmd_lowerbound_needle(args) -> int:
    rows = []
    params = LearnerParams(P=50, R=20, T=450)
    from ..core import LossFunction

    loss = LossFunction.capped_log(5.0)
    for t in range(args.trials):
        seed = args.seed + t
        rng = np.random.default_rng(seed)
        inst = make_needle_instance(args.n, i_star=None, rng=rng)
        scan = proper_search_demo(inst, "scan")
        inst.oracle.reset()
        probe = proper_search_demo(inst, "random-probe", rng=rng)
        inst.oracle.reset()
        outcome = vgm_learn(
            inst.family, None, inst.p, inst.oracle, 0.3, 0.05, params, rng, loss=loss
        )
        draws = outcome.distribution.sample(rng, 2000)
        emit_zero = float(np.mean([1.0 if pt == (0,) else 0.0 for pt in draws]))
        rows.append(
            {
                "trial": t,
                "seed": seed,
                "i_star": inst.i_star,
                "scan_queries": scan.queries_used,
                "probe_queries": probe.queries_used,
                "vgm_queries": outcome.oracle_queries,
                "vgm_rounds": outcome.rounds_used,
                "vgm_kind": outcome.kind,
                "emit_zero_freq": format(emit_zero, ".6g"),
            }
        )
    cols = list(rows[0]) if rows else []
    _write_table(rows, cols, args.out_dir, f"lowerbound-needle-n{args.n}")
    if rows:
        mean_scan = float(np.mean([r["scan_queries"] for r in rows]))
        mean_vgm = float(np.mean([r["vgm_queries"] for r in rows]))
        print(f"mean scan queries {mean_scan:.1f} vs mean improper-learner queries {mean_vgm:.1f}")
    return 0


def _cmd_lowerbound_hidden(args) -> int:
    rows = []
    for t in range(args.trials):
        seed = args.seed + t
        rng = np.random.default_rng(seed)
        packing = gv_packing(args.d, target_size=args.packing_size, rng=rng, max_attempts=4000)
        if len(packing) == 0:
            continue
        planted = packing.vectors[int(rng.integers(len(packing)))]
        inst = make_hidden_box_instance(args.d, rng, y=planted)
        scan = proper_search_demo(inst, "scan", candidates=packing.vectors)
        inst.oracle.reset()
        probe = proper_search_demo(inst, "random-probe", rng=rng, candidates=packing.vectors)
        loss_opt, inv_opt = evaluate_box_candidate(inst, planted)
        swapped = planted.copy()
        one = int(np.flatnonzero(swapped == 1)[0])
        zero = int(np.flatnonzero(swapped == 0)[0])
        swapped[one], swapped[zero] = 0, 1
        _, inv_swapped = evaluate_box_candidate(inst, swapped)
        rows.append(
            {
                "trial": t,
                "seed": seed,
                "packing_size": len(packing),
                "scan_probes": scan.probes,
                "random_probes": probe.probes,
                "secret_loss": format(loss_opt, ".6g"),
                "secret_inv": format(inv_opt, ".6g"),
                "swapped_inv": format(inv_swapped, ".6g"),
            }
        )
    cols = list(rows[0]) if rows else []
    _write_table(rows, cols, args.out_dir, f"lowerbound-hidden-box-d{args.d}")
    if rows:
        mean_probe = float(np.mean([r["random_probes"] for r in rows]))
        mean_size = float(np.mean([r["packing_size"] for r in rows]))
        print(f"mean random probes {mean_probe:.2f} over packings of mean size {mean_size:.2f}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "scenarios":
            return _cmd_scenarios()
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "lowerbound":
            if args.instance == "needle":
                return _cmd_lowerbound_needle(args)
            if args.instance == "hidden-box":
                return _cmd_lowerbound_hidden(args)
            parser.error("lowerbound needs an instance: needle or hidden-box")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValidgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
