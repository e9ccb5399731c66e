"""Seeded multi-trial execution, ground-truth scoring, and report persistence.

Each trial owns its generator (seeded base_seed + trial index) and a fresh
oracle, so trials are order-independent and `--jobs k` reproduces the
serial rows exactly. Ground-truth metrics are computed from the scenario
rule directly and never touch the counted oracle.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import (
    DiscreteDistribution,
    LossFunction,
    empirical_loss,
    invalidity_under_rule,
    true_loss,
)
from ..errors import ValidgenError
from ..learners import (
    LearnerOutcome,
    partial_validity_learn,
    proper_box_learn,
    vgm_learn,
)
from .scenarios import Scenario

_EST_SAMPLES = 4000

CSV_COLUMNS = [
    "trial",
    "seed",
    "learner",
    "output_kind",
    "loss_true",
    "loss_est",
    "inv_true",
    "inv_est",
    "opt_loss",
    "samples",
    "queries",
    "rounds",
    "wall_ms",
]


@dataclass
class TrialReport:
    """One row of the per-trial table."""

    trial: int
    seed: int
    learner: str
    output_kind: str
    loss_true: float | None
    loss_est: float | None
    inv_true: float | None
    inv_est: float | None
    opt_loss: float | None
    samples: int
    queries: int
    rounds: int
    wall_ms: float
    success: bool | None = None
    error: str | None = None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def compute_box_optimum(p: DiscreteDistribution, rule, d: int, delta: int, loss: LossFunction) -> float:
    """Exact best true loss among boxes whose support is entirely valid.

    Full enumeration over all (delta(delta+1)/2)^d boxes with integral
    images for the per-box mass sums; intended for d <= 2, delta <= 16.
    """
    if d not in (1, 2):
        raise ValidgenError("box optimum enumeration supports d in {1, 2}")
    shape = (delta,) * d
    p_grid = np.zeros(shape)
    for pt, pr in p.items():
        p_grid[pt] = pr
    inv_grid = np.zeros(shape)
    for idx in np.ndindex(shape):
        inv_grid[idx] = float(rule(idx))

    def integral(a: np.ndarray) -> np.ndarray:
        out = a
        for ax in range(d):
            out = np.cumsum(out, axis=ax)
        return np.pad(out, [(1, 0)] * d)

    ip, iv = integral(p_grid), integral(inv_grid)

    def region_sum(ii: np.ndarray, lo, hi) -> float:
        if d == 1:
            return float(ii[hi[0] + 1] - ii[lo[0]])
        return float(
            ii[hi[0] + 1, hi[1] + 1]
            - ii[lo[0], hi[1] + 1]
            - ii[hi[0] + 1, lo[1]]
            + ii[lo[0], lo[1]]
        )

    best = None
    sides = [(a, b) for a in range(delta) for b in range(a, delta)]
    if d == 1:
        combos = (((a,), (b,)) for a, b in sides)
    else:
        combos = (((a0, a1), (b0, b1)) for a0, b0 in sides for a1, b1 in sides)
    for lo, hi in combos:
        if region_sum(iv, lo, hi) > 0.0:
            continue
        vol = 1
        for l, h in zip(lo, hi):
            vol *= h - l + 1
        pmass = region_sum(ip, lo, hi)
        val = loss.eval(1.0 / vol) * pmass + loss.eval(0.0) * (1.0 - pmass)
        if best is None or val < best:
            best = val
    if best is None:
        raise ValidgenError("no fully valid box exists")
    return best


def compute_optimum(scenario: Scenario) -> float | None:
    """Brute-force best achievable true loss for the scenario's comparison class."""
    if scenario.opt_value is not None:
        return scenario.opt_value
    if scenario.opt_mode is None:
        return None
    env = scenario.make_env(np.random.default_rng(scenario.base_seed))
    if scenario.opt_mode in ("finite-valid", "finite-alpha"):
        bound = scenario.alpha if scenario.opt_mode == "finite-alpha" else 0.0
        best = None
        for q in env.family.members:
            if invalidity_under_rule(q, env.rule) <= bound:
                val = true_loss(q, env.p, scenario.loss)
                if best is None or val < best:
                    best = val
        return best
    if scenario.opt_mode == "box-enum":
        d, delta = env.box
        if d > 2 or delta > 16:
            return None
        return compute_box_optimum(env.p, env.rule, d, delta, scenario.loss)
    raise ValidgenError(f"unknown opt mode {scenario.opt_mode!r}")


def _run_learner(scenario: Scenario, env, rng: np.random.Generator) -> LearnerOutcome:
    if scenario.learner == "vgm":
        return vgm_learn(
            env.family,
            env.gmn_oracle,
            env.p,
            env.oracle,
            scenario.eps1,
            scenario.eps2,
            scenario.params,
            rng,
            loss=scenario.loss,
        )
    if scenario.learner == "partial":
        return partial_validity_learn(
            env.family,
            env.p,
            env.oracle,
            scenario.eps1,
            scenario.eps2,
            scenario.alpha,
            scenario.params,
            rng,
            loss=scenario.loss,
            x_star=env.x_star,
            use_cover=scenario.use_cover,
        )
    if scenario.learner == "proper-box":
        d, delta = env.box
        return proper_box_learn(
            env.p,
            env.oracle,
            scenario.eps1,
            scenario.eps2,
            d,
            delta,
            scenario.loss,
            rng,
            params=scenario.params,
        )
    raise ValidgenError(f"unknown learner {scenario.learner!r}")


def run_trial(scenario: Scenario, trial: int, opt_loss: float | None) -> TrialReport:
    seed = scenario.base_seed + trial
    rng = np.random.default_rng(seed)
    env = scenario.make_env(rng)
    t0 = time.perf_counter()
    try:
        outcome = _run_learner(scenario, env, rng)
        error = None
    except ValidgenError as exc:
        outcome = None
        error = type(exc).__name__
    wall_ms = (time.perf_counter() - t0) * 1000.0

    if outcome is None:
        return TrialReport(
            trial=trial,
            seed=seed,
            learner=scenario.learner,
            output_kind=f"error:{error}",
            loss_true=None,
            loss_est=None,
            inv_true=None,
            inv_est=None,
            opt_loss=opt_loss,
            samples=0,
            queries=env.oracle.query_count,
            rounds=0,
            wall_ms=wall_ms,
            success=False,
            error=error,
        )

    if env.oracle.query_count != outcome.oracle_queries:
        raise AssertionError("reported queries disagree with the oracle counter")

    dist = outcome.distribution
    try:
        lt = true_loss(dist, env.p, scenario.loss)
    except ValidgenError:
        lt = None
    try:
        it = invalidity_under_rule(dist, env.rule)
    except ValidgenError:
        it = None

    est_pts = env.p.sample(rng, _EST_SAMPLES)
    try:
        loss_est = empirical_loss(dist, est_pts, scenario.loss)
    except ValidgenError:
        loss_est = None
    draws = dist.sample(rng, _EST_SAMPLES)
    inv_est = float(np.mean([float(env.rule(pt)) for pt in draws]))

    success = None
    if opt_loss is not None and lt is not None and it is not None:
        inv_bound = scenario.eps2 if scenario.alpha is None else scenario.alpha + scenario.eps2
        success = (lt <= opt_loss + scenario.eps1) and (it <= inv_bound)

    return TrialReport(
        trial=trial,
        seed=seed,
        learner=scenario.learner,
        output_kind=outcome.kind,
        loss_true=lt,
        loss_est=loss_est,
        inv_true=it,
        inv_est=inv_est,
        opt_loss=opt_loss,
        samples=outcome.samples_from_p,
        queries=outcome.oracle_queries,
        rounds=outcome.rounds_used,
        wall_ms=wall_ms,
        success=success,
        error=None,
    )


def run_scenario(scenario: Scenario, jobs: int = 1) -> tuple[list[TrialReport], dict]:
    """Execute all trials and summarize; returns (reports, summary)."""
    opt_loss = compute_optimum(scenario)
    trials = list(range(scenario.trials))
    if jobs > 1 and len(trials) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(lambda t: run_trial(scenario, t, opt_loss), trials))
    else:
        reports = [run_trial(scenario, t, opt_loss) for t in trials]
    reports.sort(key=lambda r: r.trial)

    successes = sum(1 for r in reports if r.success)
    evaluated = sum(1 for r in reports if r.success is not None)
    errors = sum(1 for r in reports if r.error is not None)
    summary = {
        "scenario": scenario.name,
        "learner": scenario.learner,
        "trials": scenario.trials,
        "base_seed": scenario.base_seed,
        "eps1": scenario.eps1,
        "eps2": scenario.eps2,
        "alpha": scenario.alpha,
        "opt_loss": opt_loss,
        "successes": successes,
        "errors": errors,
        "success_fraction": (successes / scenario.trials) if (scenario.trials > 0 and evaluated > 0) else None,
        "total_samples": int(sum(r.samples for r in reports)),
        "total_queries": int(sum(r.queries for r in reports)),
        "wall_ms_total": float(sum(r.wall_ms for r in reports)),
    }
    return reports, summary


def reports_to_csv(reports: list[TrialReport], record_wall_time: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow(
            [
                r.trial,
                r.seed,
                r.learner,
                r.output_kind,
                _fmt(r.loss_true),
                _fmt(r.loss_est),
                _fmt(r.inv_true),
                _fmt(r.inv_est),
                _fmt(r.opt_loss),
                r.samples,
                r.queries,
                r.rounds,
                _fmt(round(r.wall_ms)) if record_wall_time else "",
            ]
        )
    return buf.getvalue()


def reports_to_jsonable(reports: list[TrialReport], record_wall_time: bool = False) -> list[dict]:
    rows = []
    for r in reports:
        row = {c: getattr(r, c) for c in CSV_COLUMNS if c != "wall_ms"}
        row["wall_ms"] = round(r.wall_ms) if record_wall_time else None
        rows.append(row)
    return rows


def persist(
    scenario: Scenario,
    reports: list[TrialReport],
    summary: dict,
    out_dir,
    fmt: str = "csv",
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        csv_path = out_dir / f"{scenario.name}.csv"
        csv_path.write_text(reports_to_csv(reports, scenario.record_wall_time), encoding="utf-8")
        written.append(csv_path)
    elif fmt == "json":
        json_path = out_dir / f"{scenario.name}.trials.json"
        json_path.write_text(
            json.dumps(reports_to_jsonable(reports, scenario.record_wall_time), indent=1),
            encoding="utf-8",
        )
        written.append(json_path)
    else:
        raise ValidgenError(f"unknown output format {fmt!r}")
    summary_path = out_dir / f"{scenario.name}.summary.json"
    summary_path.write_text(json.dumps(summary, indent=1, sort_keys=True), encoding="utf-8")
    written.append(summary_path)
    return written
