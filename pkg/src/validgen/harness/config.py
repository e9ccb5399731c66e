"""Scenario configuration files.

A config either names a builtin scenario (optionally overriding budgets,
trial counts, and thresholds) or fully specifies the family, target
distribution, and oracle inline. Unknown keys are rejected with the field
path, and the schema is versioned.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..core import (
    DiscreteDistribution,
    GridInvalidityOracle,
    InvalidityOracle,
    LossFunction,
    TableInvalidityOracle,
    assert_oracle_valid_on,
    point_from_jsonable,
)
from ..errors import ConfigError
from ..families import FiniteFamily, ngram_gmn_greedy
from ..learners import LearnerParams
from ..lowerbound import make_needle_instance
from .scenarios import Scenario, brace_validity, builtin_names, get_builtin

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "version",
    "scenario",
    "learner",
    "family",
    "p",
    "oracle",
    "loss",
    "M",
    "eps1",
    "eps2",
    "alpha",
    "use_cover",
    "params",
    "trials",
    "base_seed",
    "x_star",
    "min_success_fraction",
    "record_wall_time",
}

_PARAM_KEYS = {
    "P",
    "R",
    "T",
    "n1",
    "n2",
    "c_P",
    "c_R",
    "c_T",
    "c_n1",
    "c_n2",
    "inner_cap",
    "box_sample_coeff",
    "box_candidate_budget",
}


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"missing required key {key!r}", path)
    return obj[key]


def _check_keys(obj: dict, allowed: set, path: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", path)
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", path)


def _loss_from_config(cfg: dict) -> LossFunction:
    kind = cfg.get("loss", "capped-log")
    M = float(cfg.get("M", 5.0))
    try:
        if kind == "coverage":
            return LossFunction.coverage()
        return LossFunction(kind, M)
    except ValueError as exc:
        raise ConfigError(str(exc), "loss") from exc


def _params_from_config(obj: dict, path: str) -> LearnerParams:
    _check_keys(obj, _PARAM_KEYS, path)
    clean = {}
    for k, v in obj.items():
        if k in ("box_sample_coeff", "c_P", "c_R", "c_T", "c_n1", "c_n2"):
            clean[k] = float(v)
        else:
            clean[k] = int(v)
    return LearnerParams(**clean)


def _distribution_from_spec(spec: dict, path: str, base_dir: Path) -> DiscreteDistribution:
    _check_keys(spec, {"kind", "path", "points", "probs", "point"}, path)
    kind = _require(spec, "kind", path)
    try:
        if kind == "table":
            pts = [point_from_jsonable(p) for p in _require(spec, "points", path)]
            return DiscreteDistribution.from_probs(pts, _require(spec, "probs", path))
        if kind == "uniform":
            pts = [point_from_jsonable(p) for p in _require(spec, "points", path)]
            return DiscreteDistribution.uniform_over(pts)
        if kind == "point-mass":
            return DiscreteDistribution.point_mass(point_from_jsonable(_require(spec, "point", path)))
        if kind == "file":
            with open(base_dir / _require(spec, "path", path), "r", encoding="utf-8") as fh:
                return DiscreteDistribution.from_jsonable(json.load(fh))
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError(str(exc), path) from exc
    raise ConfigError(f"unknown distribution kind {kind!r}", path)


def _family_from_spec(spec: dict, path: str, base_dir: Path):
    """Returns (family, box_dims, ngram_spec); exactly one is non-None."""
    _check_keys(spec, {"kind", "path", "domain", "members", "d", "delta", "order", "alphabet", "max_len"}, path)
    kind = _require(spec, "kind", path)
    try:
        if kind == "finite-file":
            return FiniteFamily.load(base_dir / _require(spec, "path", path)), None, None
        if kind == "inline":
            return FiniteFamily.from_jsonable(spec), None, None
        if kind == "box":
            return None, (int(_require(spec, "d", path)), int(_require(spec, "delta", path))), None
        if kind == "ngram":
            return (
                None,
                None,
                {
                    "order": int(_require(spec, "order", path)),
                    "alphabet": tuple(_require(spec, "alphabet", path)),
                    "max_len": int(_require(spec, "max_len", path)),
                },
            )
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError(str(exc), path) from exc
    raise ConfigError(f"unknown family kind {kind!r}", path)


def _oracle_from_spec(spec: dict, path: str, p: DiscreteDistribution | None):
    """Returns (factory(rng) -> oracle, rule, env_factory_or_None)."""
    _check_keys(spec, {"kind", "points", "values", "fractional", "d", "delta", "N", "i_star"}, path)
    kind = _require(spec, "kind", path)
    if kind == "table":
        pts = [point_from_jsonable(q) for q in _require(spec, "points", path)]
        vals = np.asarray(_require(spec, "values", path), dtype=np.float64)
        fractional = bool(spec.get("fractional", False))
        lookup = dict(zip(pts, vals))

        def rule(x):
            return float(lookup[x])

        def factory(rng):
            oracle = TableInvalidityOracle(pts, vals, fractional=fractional)
            if p is not None:
                assert_oracle_valid_on(oracle, p.support())
            return oracle

        return factory, rule, None
    if kind == "grid":
        d = int(_require(spec, "d", path))
        delta = int(_require(spec, "delta", path))
        vals = np.asarray(_require(spec, "values", path), dtype=np.float64).reshape(-1)
        fractional = bool(spec.get("fractional", False))
        grid = vals.reshape((delta,) * d)

        def rule(x):
            return float(grid[tuple(x)])

        def factory(rng):
            oracle = GridInvalidityOracle(vals, d=d, delta=delta, fractional=fractional)
            if p is not None:
                assert_oracle_valid_on(oracle, p.support())
            return oracle

        return factory, rule, None
    if kind == "brace-matcher":
        def rule(s):
            return float(brace_validity(s))

        def factory(rng):
            oracle = InvalidityOracle(rule, fractional=False)
            if p is not None:
                assert_oracle_valid_on(oracle, p.support())
            return oracle

        return factory, rule, None
    if kind == "needle":
        N = int(_require(spec, "N", path))
        fixed = spec.get("i_star")

        def env_factory(scenario, rng):
            from types import SimpleNamespace

            inst = make_needle_instance(N, i_star=fixed, rng=rng)
            return SimpleNamespace(
                family=inst.family,
                p=inst.p,
                oracle=inst.oracle,
                rule=inst.oracle.rule,
                gmn_oracle=None,
                x_star=(0,),
                box=None,
            )

        return None, None, env_factory
    if kind == "hidden-box":
        raise ConfigError("hidden-box oracles run through the lowerbound subcommand or the builtin scenario", path)
    raise ConfigError(f"unknown oracle kind {kind!r}", path)


def load_config(path) -> Scenario:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(path)) from exc
    return scenario_from_config(cfg, base_dir=path.parent)


def scenario_from_config(cfg: dict, base_dir: Path | None = None) -> Scenario:
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    _check_keys(cfg, _TOP_KEYS, "")
    version = _require(cfg, "version", "")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {version!r}", "version")
    name = _require(cfg, "scenario", "scenario")

    overrides = {}
    if "trials" in cfg:
        overrides["trials"] = int(cfg["trials"])
    if "base_seed" in cfg:
        overrides["base_seed"] = int(cfg["base_seed"])
    if "eps1" in cfg:
        overrides["eps1"] = float(cfg["eps1"])
    if "eps2" in cfg:
        overrides["eps2"] = float(cfg["eps2"])
    if "alpha" in cfg:
        overrides["alpha"] = float(cfg["alpha"])
    if "use_cover" in cfg:
        overrides["use_cover"] = bool(cfg["use_cover"])
    if "min_success_fraction" in cfg:
        overrides["min_success_fraction"] = float(cfg["min_success_fraction"])
    if "record_wall_time" in cfg:
        overrides["record_wall_time"] = bool(cfg["record_wall_time"])
    if "params" in cfg:
        overrides["params"] = _params_from_config(cfg["params"], "params")
    if "loss" in cfg or "M" in cfg:
        overrides["loss"] = _loss_from_config(cfg)

    custom = any(k in cfg for k in ("family", "p", "oracle", "learner"))
    if not custom:
        if name not in builtin_names():
            raise ConfigError(f"unknown builtin scenario {name!r}", "scenario")
        return get_builtin(name).with_overrides(**overrides)

    learner = _require(cfg, "learner", "learner")
    if learner not in ("vgm", "partial", "proper-box"):
        raise ConfigError(f"unknown learner {learner!r}", "learner")
    alpha = overrides.get("alpha")
    if (alpha is not None) != (learner == "partial"):
        raise ConfigError("alpha must be present exactly when learner is 'partial'", "alpha")

    loss = overrides.pop("loss", _loss_from_config(cfg))
    family, box, ngram = (None, None, None)
    if "family" in cfg:
        family, box, ngram = _family_from_spec(cfg["family"], "family", base_dir)
    elif learner != "vgm":
        raise ConfigError("family is required for this learner", "family")

    p = _distribution_from_spec(_require(cfg, "p", "p"), "p", base_dir) if "p" in cfg else None

    env_factory = None
    factory = rule = None
    if "oracle" in cfg:
        factory, rule, env_factory = _oracle_from_spec(cfg["oracle"], "oracle", p)
    if env_factory is None and factory is None:
        raise ConfigError("an oracle spec is required", "oracle")
    if env_factory is None and p is None:
        raise ConfigError("a p spec is required", "p")

    x_star = point_from_jsonable(cfg["x_star"]) if "x_star" in cfg else None
    if learner == "partial" and x_star is None and env_factory is None:
        raise ConfigError("partial learner needs a known valid point", "x_star")
    if learner == "proper-box" and box is None:
        raise ConfigError("proper-box learner needs a box family", "family")

    gmn_factory = None
    if ngram is not None:
        if learner != "vgm":
            raise ConfigError("ngram families run under the vgm learner", "family")

        def gmn_factory(scenario, _ng=ngram):
            def oracle_call(positives, negatives):
                return ngram_gmn_greedy(
                    positives, negatives, _ng["order"], _ng["alphabet"], _ng["max_len"], scenario.loss
                )

            return oracle_call

    opt_mode = None
    if family is not None:
        opt_mode = "finite-alpha" if learner == "partial" else "finite-valid"
    elif box is not None:
        opt_mode = "box-enum"

    scenario = Scenario(
        name=name,
        learner=learner,
        loss=loss,
        eps1=overrides.pop("eps1", 0.1),
        eps2=overrides.pop("eps2", 0.05),
        trials=overrides.pop("trials", 10),
        base_seed=overrides.pop("base_seed", 0),
        alpha=overrides.pop("alpha", None),
        params=overrides.pop("params", LearnerParams()),
        use_cover=overrides.pop("use_cover", False),
        x_star=x_star,
        family=family,
        p=p,
        oracle_factory=factory,
        rule=rule,
        gmn_factory=gmn_factory,
        box=box,
        opt_mode=opt_mode,
        env_factory=env_factory,
        min_success_fraction=overrides.pop("min_success_fraction", None),
        record_wall_time=overrides.pop("record_wall_time", False),
    )
    return scenario
