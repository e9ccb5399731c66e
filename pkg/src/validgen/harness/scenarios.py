"""Built-in scenario library.

Each builder wires a family, a target distribution, a counted oracle
factory, and learner settings into a Scenario. Construction is fully
deterministic; anything randomized (secret corners, needle indices)
happens per trial through the trial rng.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import SimpleNamespace
from typing import Callable

import numpy as np

from ..core import (
    DiscreteDistribution,
    GridInvalidityOracle,
    InvalidityOracle,
    LossFunction,
    Point,
    TableInvalidityOracle,
    assert_oracle_valid_on,
    invalidity_under_rule,
    true_loss,
)
from ..families import FiniteFamily, ngram_gmn_greedy
from ..learners import LearnerParams
from ..lowerbound import gv_packing, make_needle_instance, _hidden_box_rules


def brace_validity(s: str) -> int:
    """0 when braces balance and no prefix dips negative, 1 otherwise."""
    depth = 0
    for ch in s:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth < 0:
                return 1
    return 0 if depth == 0 else 1


@dataclass
class Scenario:
    """Everything run_scenario needs to execute seeded trials."""

    name: str
    learner: str  # "vgm" | "partial" | "proper-box"
    loss: LossFunction
    eps1: float
    eps2: float
    trials: int
    base_seed: int
    alpha: float | None = None
    params: LearnerParams = field(default_factory=LearnerParams)
    use_cover: bool = False
    x_star: Point | None = None
    family: FiniteFamily | None = None
    p: DiscreteDistribution | None = None
    oracle_factory: Callable[[np.random.Generator], InvalidityOracle] | None = None
    rule: Callable[[Point], float] | None = None
    gmn_factory: Callable | None = None
    box: tuple[int, int] | None = None
    opt_mode: str | None = None  # "finite-valid" | "finite-alpha" | "box-enum" | None
    opt_value: float | None = None
    env_factory: Callable | None = None
    min_success_fraction: float | None = None
    record_wall_time: bool = False
    description: str = ""

    def make_env(self, rng: np.random.Generator) -> SimpleNamespace:
        """Fresh per-trial environment: oracle always new, rest usually shared."""
        if self.env_factory is not None:
            return self.env_factory(self, rng)
        oracle = self.oracle_factory(rng)
        return SimpleNamespace(
            family=self.family,
            p=self.p,
            oracle=oracle,
            rule=self.rule if self.rule is not None else oracle.rule,
            gmn_oracle=self.gmn_factory(self) if self.gmn_factory is not None else None,
            x_star=self.x_star,
            box=self.box,
        )

    def with_overrides(self, **kw) -> "Scenario":
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# Finite synthetic scenarios for the round-based learner
#
# Shared shape: 128 scalar grid points, a valid core carrying p, an invalid
# band, and a valid fringe. Tempting members fit the core tightly but leak
# mass into the invalid band; clean members must overspread into the fringe.


def _p_uniform(idxs) -> DiscreteDistribution:
    return DiscreteDistribution.uniform_over([(i,) for i in idxs])


def _member(core: dict[int, float]) -> DiscreteDistribution:
    return DiscreteDistribution({(i,): pr for i, pr in core.items()})


def _uniform_member(idxs) -> DiscreteDistribution:
    idxs = list(idxs)
    return _member({i: 1.0 / len(idxs) for i in idxs})


def _split_member(groups: list[tuple[list[int], float]]) -> DiscreteDistribution:
    support: dict[int, float] = {}
    for idxs, mass in groups:
        for i in idxs:
            support[i] = support.get(i, 0.0) + mass / len(idxs)
    return _member(support)


def _table_oracle_factory(domain, values, fractional=False, p=None):
    values = np.asarray(values, dtype=np.float64)

    def factory(rng: np.random.Generator) -> TableInvalidityOracle:
        oracle = TableInvalidityOracle(domain, values, fractional=fractional)
        if p is not None:
            assert_oracle_valid_on(oracle, p.support())
        return oracle

    return factory


def _finite_synthetic(variant: str) -> Scenario:
    n_domain = 128
    domain = tuple((i,) for i in range(n_domain))
    inv = np.zeros(n_domain)

    if variant == "a":
        core = list(range(24))
        inv[24:56] = 1.0
        p = _p_uniform(core)
        members: list[DiscreteDistribution] = []
        for m in (8, 10, 12, 14, 16, 20, 24, 28):
            members.append(_uniform_member(core + list(range(56, 56 + m))))
        for k in range(7):
            members.append(_uniform_member(core + [24 + k]))
        for k in range(6):
            members.append(_uniform_member(core + [31 + 2 * k, 32 + 2 * k]))
        for k in range(5):
            members.append(_uniform_member(core + [44 + k, 45 + k, 46 + k]))
        rng = np.random.default_rng(20250809)
        while len(members) < 64:
            n_core = int(rng.integers(12, 25))
            n_fringe = int(rng.integers(8, 31))
            sup_core = list(rng.choice(core, n_core, replace=False))
            sup_fringe = list(rng.choice(np.arange(56, 128), n_fringe, replace=False))
            groups = [(sup_core, 0.65), (sup_fringe, 0.35)]
            if rng.random() < 0.4:
                n_bad = int(rng.integers(1, 4))
                bad = list(rng.choice(np.arange(24, 56), n_bad, replace=False))
                groups = [(sup_core, 0.60), (sup_fringe, 0.30), (bad, 0.10)]
            members.append(_split_member([(list(map(int, g)), m) for g, m in groups]))
    elif variant == "b":
        # non-uniform weights: tight-core members must leak a little mass
        # into the invalid band to beat the spread-out clean members
        core = list(range(32))
        inv[32:64] = 1.0
        p = _p_uniform(core)
        members = [
            _uniform_member(core + list(range(64, 64 + s))) for s in (4, 8, 12, 16, 20)
        ]
        for k in range(6):  # single poison points, beta = 0.05
            members.append(_split_member([(core, 0.95), ([32 + k], 0.05)]))
        for k in range(5):  # poison pairs, beta = 0.08
            members.append(_split_member([(core, 0.92), ([39 + 2 * k, 40 + 2 * k], 0.08)]))
        for k in range(4):  # overlapping poison triples, beta = 0.10
            members.append(_split_member([(core, 0.90), (list(range(50 + k, 53 + k)), 0.10)]))
        rng = np.random.default_rng(777001)
        while len(members) < 64:
            n_core = int(rng.integers(24, 33))
            n_fringe = int(rng.integers(4, 26))
            sup_core = list(map(int, rng.choice(core, n_core, replace=False)))
            sup_fringe = list(map(int, rng.choice(np.arange(64, 128), n_fringe, replace=False)))
            if rng.random() < 0.5:
                n_bad = int(rng.integers(1, 5))
                bad = list(map(int, rng.choice(np.arange(32, 64), n_bad, replace=False)))
                members.append(_split_member([(sup_core, 0.72), (sup_fringe, 0.2), (bad, 0.08)]))
            else:
                members.append(_split_member([(sup_core, 0.7), (sup_fringe, 0.3)]))
    elif variant == "c":
        # agnostic: p is a 0.7/0.3 mixture no member reproduces exactly
        inv[40:80] = 1.0
        block_a = list(range(16))
        block_b = list(range(16, 32))
        p = DiscreteDistribution(
            {**{(i,): 0.7 / 16 for i in block_a}, **{(i,): 0.3 / 16 for i in block_b}}
        )
        members = [
            _split_member([(block_a, 0.65), (block_b, 0.25), (list(range(80, 88)), 0.10)]),
            _split_member([(block_a, 0.60), (block_b, 0.20), (list(range(88, 104)), 0.20)]),
            _uniform_member(range(40)),
        ]
        for k in range(6):  # disjoint single poisons
            members.append(_split_member([(block_a, 0.68), (block_b, 0.27), ([40 + k], 0.05)]))
        for k in range(5):  # poison pairs
            members.append(_split_member([(block_a, 0.66), (block_b, 0.26), ([47 + 2 * k, 48 + 2 * k], 0.08)]))
        for k in range(4):  # overlapping triples
            members.append(_split_member([(block_a, 0.64), (block_b, 0.26), (list(range(58 + k, 61 + k)), 0.10)]))
        rng = np.random.default_rng(424243)
        while len(members) < 64:
            n_a = int(rng.integers(10, 17))
            n_b = int(rng.integers(6, 17))
            sup_a = list(map(int, rng.choice(np.arange(16), n_a, replace=False)))
            sup_b = list(map(int, rng.choice(np.arange(16, 40), n_b, replace=False)))
            groups = [(sup_a, 0.55), (sup_b, 0.3)]
            rest = 0.15
            if rng.random() < 0.45:
                n_bad = int(rng.integers(1, 4))
                bad = list(map(int, rng.choice(np.arange(40, 80), n_bad, replace=False)))
                groups.append((bad, rest))
            else:
                fr = list(map(int, rng.choice(np.arange(80, 128), 8, replace=False)))
                groups.append((fr, rest))
            members.append(_split_member(groups))
    else:
        raise ValueError(f"unknown finite-synthetic variant {variant!r}")

    family = FiniteFamily(members, domain)
    rule_values = inv.copy()

    def rule(pt):
        return float(rule_values[pt[0]])

    # the construction must leave at least one exactly valid member and a
    # meaningful set of lower-loss invalid temptations
    loss_fn = LossFunction.capped_log(5.0)
    exact = [(true_loss(q, p, loss_fn), invalidity_under_rule(q, rule)) for q in members]
    valid_losses = [lo for lo, iv in exact if iv == 0.0]
    if not valid_losses:
        raise AssertionError("scenario construction produced no fully valid member")
    opt = min(valid_losses)
    tempting = sum(1 for lo, iv in exact if iv > 0.0 and lo < opt)
    if tempting < 8:
        raise AssertionError(f"only {tempting} tempting invalid members; construction broken")

    return Scenario(
        name=f"finite-synthetic-{variant}" if variant != "a" else "finite-synthetic",
        learner="vgm",
        loss=LossFunction.capped_log(5.0),
        eps1=0.1,
        eps2=0.05,
        trials=100,
        base_seed={"a": 1000, "b": 2000, "c": 3000}[variant],
        family=family,
        p=p,
        oracle_factory=_table_oracle_factory(domain, rule_values, fractional=False, p=p),
        rule=rule,
        opt_mode="finite-valid",
        description="synthetic finite family with tempting invalid members",
    )


# ---------------------------------------------------------------------------
# Partial-validity scenarios (fractional oracle, convex loss)


def _partial_synthetic(variant: str) -> Scenario:
    n_domain = 64
    domain = tuple((i,) for i in range(n_domain))
    inv = np.zeros(n_domain)

    if variant == "a":
        inv[32:48] = 0.5
        inv[48:64] = 1.0
        core = list(range(16))
        p = _p_uniform(core)
        members = [
            _uniform_member(range(32)),  # clean wide spread; the alpha-feasible target
            _uniform_member(range(48)),  # wider, picks up fractional mass
            _split_member([(list(range(32)), 0.9), (list(range(16, 20)), 0.1)]),
        ]
        blocks = [list(range(48, 52)), list(range(52, 56)), list(range(56, 60))]
        for beta, block in zip((0.36, 0.42, 0.48), blocks):
            members.append(_split_member([(core, 1.0 - beta), (block, beta)]))
        j = 0
        while len(members) < 24:
            start = 16 + 2 * (j % 18)
            members.append(_uniform_member(range(start, start + 8)))
            j += 1
    elif variant == "b":
        inv[24:40] = 0.25
        inv[40:64] = 1.0
        core = list(range(12))
        p = _p_uniform(core)
        members = [
            _uniform_member(range(24)),
            _split_member([(core, 0.64), (list(range(24, 32)), 0.36)]),  # alpha-feasible optimum
            _split_member([(core, 0.68), (list(range(40, 44)), 0.32)]),
            _split_member([(core, 0.66), (list(range(44, 48)), 0.34)]),
        ]
        j = 0
        while len(members) < 20:
            start = 12 + 2 * (j % 20)
            members.append(_uniform_member(range(start, start + 10)))
            j += 1
    else:
        raise ValueError(f"unknown partial-synthetic variant {variant!r}")

    family = FiniteFamily(members, domain)
    rule_values = inv.copy()

    def rule(pt):
        return float(rule_values[pt[0]])

    return Scenario(
        name=f"partial-synthetic-{variant}" if variant != "a" else "partial-synthetic",
        learner="partial",
        loss=LossFunction.shifted_log(5.0),
        eps1=0.15,
        eps2=0.1,
        alpha=0.2,
        trials=100,
        base_seed={"a": 5000, "b": 6000}[variant],
        params=LearnerParams(n1=40_000, n2=30_000),
        x_star=(0,),
        family=family,
        p=p,
        oracle_factory=_table_oracle_factory(domain, rule_values, fractional=True, p=p),
        rule=rule,
        opt_mode="finite-alpha",
        description="fractional invalidity with tempting over-contaminated members",
    )


# ---------------------------------------------------------------------------
# Proper box learning on the non-convex valid region


def figure1_valid_mask(delta: int = 16) -> np.ndarray:
    """L-shaped valid region: [0,11]x[0,5] union [0,5]x[0,11]."""
    mask = np.zeros((delta, delta), dtype=bool)
    mask[0:12, 0:6] = True
    mask[0:6, 0:12] = True
    return mask


def _figure1_rectangle() -> Scenario:
    delta = 16
    mask = figure1_valid_mask(delta)
    inv_grid = (~mask).astype(np.float64)
    cells = [(int(x), int(y)) for x in range(delta) for y in range(delta) if mask[x, y]]
    p = DiscreteDistribution.uniform_over(cells)

    def factory(rng: np.random.Generator) -> GridInvalidityOracle:
        oracle = GridInvalidityOracle(inv_grid, d=2, delta=delta)
        assert_oracle_valid_on(oracle, p.support())
        return oracle

    def rule(pt):
        return float(inv_grid[pt[0], pt[1]])

    return Scenario(
        name="figure1-rectangle",
        learner="proper-box",
        loss=LossFunction.capped_log(5.0),
        eps1=0.3,
        eps2=0.05,
        trials=100,
        base_seed=4000,
        box=(2, delta),
        p=p,
        oracle_factory=factory,
        rule=rule,
        opt_mode="box-enum",
        description="uniform target on an L-shaped valid region, best box sought",
    )


# ---------------------------------------------------------------------------
# Needle in a haystack


def _needle() -> Scenario:
    N = 1000

    def env_factory(scenario: Scenario, rng: np.random.Generator) -> SimpleNamespace:
        inst = make_needle_instance(N, i_star=None, rng=rng)
        return SimpleNamespace(
            family=inst.family,
            p=inst.p,
            oracle=inst.oracle,
            rule=inst.oracle.rule,
            gmn_oracle=None,
            x_star=(0,),
            box=None,
        )

    return Scenario(
        name="needle",
        learner="vgm",
        loss=LossFunction.capped_log(5.0),
        eps1=0.3,
        eps2=0.05,
        trials=100,
        base_seed=7000,
        params=LearnerParams(P=50, R=20, T=450),
        env_factory=env_factory,
        opt_mode="finite-valid",
        description="one hidden valid point among N; improper output collapses to 0",
    )


# ---------------------------------------------------------------------------
# Hidden box over a packing family


def _subset_box_member(corner: np.ndarray) -> DiscreteDistribution:
    d = corner.shape[0]
    sup = np.flatnonzero(corner)
    w = len(sup)
    pts = {}
    for mask in range(1 << w):
        v = [0] * d
        for b in range(w):
            if (mask >> b) & 1:
                v[sup[b]] = 1
        pts[tuple(v)] = 1.0 / (1 << w)
    return DiscreteDistribution(pts)


def _hidden_box(d: int = 12) -> Scenario:
    def env_factory(scenario: Scenario, rng: np.random.Generator) -> SimpleNamespace:
        packing = gv_packing(d, target_size=4, rng=rng, max_attempts=4000)
        corners = packing.vectors
        planted = corners[int(rng.integers(corners.shape[0]))]
        rule, rule_array = _hidden_box_rules(planted, d)
        from ..core import VectorRuleOracle

        members = [_subset_box_member(c) for c in corners]
        members.append(DiscreteDistribution.point_mass(tuple([0] * d)))
        domain = sorted({pt for q in members for pt in q.support()})
        basis = []
        for i in range(d):
            v = [0] * d
            v[i] = 1
            basis.append(tuple(v))
        for pt in basis:
            if pt not in set(domain):
                domain.append(pt)
        family = FiniteFamily(members, tuple(domain))
        p = DiscreteDistribution.uniform_over(basis)
        oracle = VectorRuleOracle(rule, rule_array, fractional=False)
        assert_oracle_valid_on(oracle, basis)
        return SimpleNamespace(
            family=family,
            p=p,
            oracle=oracle,
            rule=rule,
            gmn_oracle=None,
            x_star=tuple([0] * d),
            box=None,
        )

    return Scenario(
        name="hidden-box",
        learner="vgm",
        loss=LossFunction.coverage(),
        eps1=0.3,
        eps2=0.25,
        trials=20,
        base_seed=8000,
        params=LearnerParams(P=60, R=8, T=160),
        env_factory=env_factory,
        opt_mode="finite-valid",
        description="packing of secret corners; proper probing pays per candidate",
    )


# ---------------------------------------------------------------------------
# n-gram brace demo


_NGRAM_CORPUS = [
    "{}",
    "{a}",
    "a",
    "aa",
    "{aa}",
    "{}{}",
    "a{a}",
    "{a}a",
    "{{a}}",
    "{aaa}",
]


def _ngram_braces() -> Scenario:
    order = 2
    alphabet = ("{", "}", "a")
    max_len = 8
    p = DiscreteDistribution.uniform_over(_NGRAM_CORPUS)

    def factory(rng: np.random.Generator) -> InvalidityOracle:
        oracle = InvalidityOracle(lambda s: float(brace_validity(s)), fractional=False)
        assert_oracle_valid_on(oracle, p.support())
        return oracle

    def gmn_factory(scenario: Scenario):
        def oracle_call(positives, negatives):
            return ngram_gmn_greedy(positives, negatives, order, alphabet, max_len, scenario.loss)

        return oracle_call

    return Scenario(
        name="ngram-braces",
        learner="vgm",
        loss=LossFunction.capped_log(5.0),
        eps1=0.3,
        eps2=0.2,
        trials=20,
        base_seed=9000,
        params=LearnerParams(P=60, R=6, T=200),
        p=p,
        oracle_factory=factory,
        rule=lambda s: float(brace_validity(s)),
        gmn_factory=gmn_factory,
        opt_mode=None,
        description="character model forced to keep braces balanced",
    )


_BUILDERS: dict[str, Callable[[], Scenario]] = {
    "finite-synthetic": lambda: _finite_synthetic("a"),
    "finite-synthetic-b": lambda: _finite_synthetic("b"),
    "finite-synthetic-c": lambda: _finite_synthetic("c"),
    "partial-synthetic": lambda: _partial_synthetic("a"),
    "partial-synthetic-b": lambda: _partial_synthetic("b"),
    "figure1-rectangle": _figure1_rectangle,
    "needle": _needle,
    "hidden-box": lambda: _hidden_box(12),
    "ngram-braces": _ngram_braces,
}


def builtin_names() -> list[str]:
    return sorted(_BUILDERS)


def get_builtin(name: str) -> Scenario:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"no builtin scenario named {name!r}") from None
