"""Executable adversarial instances behind the proper/improper separation.

The hidden-box instance hides a weight-d/3 binary vector behind an
invalidity rule that reveals nothing on queries of weight below d/6 or
above d/3; the needle instance hides a single valid point in a large
domain. Both carry counted oracles so query budgets can be tabulated
against the improper learner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .core import (
    DiscreteDistribution,
    InvalidityOracle,
    LossFunction,
    TableInvalidityOracle,
    VectorRuleOracle,
    assert_oracle_valid_on,
)
from .families import FiniteFamily


@dataclass
class HiddenBoxInstance:
    """Secret corner vector y with |y| = d/3 behind a counted invalidity rule.

    A point is valid when its weight is below d/6 or it fits under y
    coordinatewise. The target distribution spreads 1/d over each
    standard basis vector, and the loss is coverage.
    """

    d: int
    y: np.ndarray
    p: DiscreteDistribution
    oracle: VectorRuleOracle
    loss: LossFunction

    def basis_vectors(self):
        pts = []
        for i in range(self.d):
            v = [0] * self.d
            v[i] = 1
            pts.append(tuple(v))
        return pts

    def to_jsonable(self) -> dict:
        return {"type": "hidden-box", "d": self.d, "secret_y": [int(v) for v in self.y]}

    @classmethod
    def from_jsonable(cls, obj: dict) -> "HiddenBoxInstance":
        return make_hidden_box_instance(int(obj["d"]), rng=None, y=np.asarray(obj["secret_y"]))


def _hidden_box_rules(y: np.ndarray, d: int):
    y = y.astype(np.int64)

    def rule_array(arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr, dtype=np.int64).reshape(-1, d)
        weight = arr.sum(axis=1)
        under = (arr <= y[None, :]).all(axis=1)
        valid = (weight < d // 6) | under
        return (~valid).astype(np.float64)

    def rule(point) -> float:
        return float(rule_array(np.array(point, dtype=np.int64).reshape(1, d))[0])

    return rule, rule_array


def make_hidden_box_instance(
    d: int, rng: np.random.Generator | None = None, y: np.ndarray | None = None
) -> HiddenBoxInstance:
    """Sample the secret among weight-d/3 vectors and wire up the counted oracle.

    d must be divisible by 6 so d/3 and d/6 are integral. The constructor
    asserts Inv = 0 on every basis vector and zeroes the counter; at
    d = 6 that assertion itself rejects the instance, since basis vectors
    outside the secret have weight d/6 there. A specific secret may be
    planted through ``y``.
    """
    if d % 6 != 0 or d < 6:
        raise ValueError("hidden-box construction needs d divisible by 6, d >= 6")
    if y is not None:
        y = np.asarray(y, dtype=np.int64).reshape(d)
        if int(y.sum()) != d // 3 or not np.all((y == 0) | (y == 1)):
            raise ValueError("planted secret must be a binary vector of weight d/3")
    else:
        if rng is None:
            raise ValueError("either plant a secret or pass an rng to draw one")
        y = np.zeros(d, dtype=np.int64)
        y[rng.choice(d, d // 3, replace=False)] = 1
    rule, rule_array = _hidden_box_rules(y, d)
    oracle = VectorRuleOracle(rule, rule_array, fractional=False)
    instance = HiddenBoxInstance(
        d=d,
        y=y,
        p=None,  # set below, after validity is asserted
        oracle=oracle,
        loss=LossFunction.coverage(),
    )
    basis = instance.basis_vectors()
    assert_oracle_valid_on(oracle, basis)
    instance.p = DiscreteDistribution.uniform_over(basis)
    return instance


def evaluate_box_candidate(
    instance: HiddenBoxInstance,
    y_prime,
    *,
    exact_threshold: int = 24,
    mc_samples: int = 20_000,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Coverage loss and invalid mass of the box spanned by a corner guess.

    Loss is (d - |y'|)/d exactly: the box covers exactly the basis
    vectors its corner selects. Invalid mass is an exact average over the
    2^{|y'|} box points up to ``exact_threshold`` support bits, Monte
    Carlo beyond. Evaluation reads the rule directly and does not consume
    counted queries.
    """
    d = instance.d
    yp = np.asarray(y_prime, dtype=np.int64).reshape(d)
    w = int(yp.sum())
    loss = (d - w) / d
    _, rule_array = _hidden_box_rules(instance.y, d)
    if w == 0:
        return loss, float(rule_array(np.zeros((1, d), dtype=np.int64))[0])
    sup = np.flatnonzero(yp)
    if w <= exact_threshold:
        masks = np.arange(1 << w, dtype=np.int64)
        bits = (masks[:, None] >> np.arange(w)[None, :]) & 1
        pts = np.zeros((1 << w, d), dtype=np.int64)
        pts[:, sup] = bits
        inv = float(rule_array(pts).mean())
    else:
        if rng is None:
            raise ValueError("Monte Carlo evaluation needs an rng")
        bits = rng.integers(0, 2, size=(mc_samples, w), dtype=np.int64)
        pts = np.zeros((mc_samples, d), dtype=np.int64)
        pts[:, sup] = bits
        inv = float(rule_array(pts).mean())
    return loss, inv


@dataclass
class PackingResult:
    """Weight-d/3 vectors with pairwise overlap below d/6."""

    vectors: np.ndarray
    attempts: int
    reached_target: bool

    def __len__(self) -> int:
        return self.vectors.shape[0]


def gv_packing(
    d: int,
    target_size: int,
    rng: np.random.Generator,
    max_attempts: int = 10_000,
) -> PackingResult:
    """Rejection-sample a packing of weight-d/3 vectors.

    Keeps a fresh vector when its overlap with every kept vector stays
    below d/6; stops at the target size or the attempt budget, returning
    whatever was collected. The pairwise property is re-checked on the
    returned set rather than trusted.
    """
    if d % 6 != 0 or d < 6:
        raise ValueError("packing needs d divisible by 6")
    limit = d // 6
    kept = np.zeros((0, d), dtype=np.int64)
    attempts = 0
    while kept.shape[0] < target_size and attempts < max_attempts:
        attempts += 1
        vec = np.zeros(d, dtype=np.int64)
        vec[rng.choice(d, d // 3, replace=False)] = 1
        if _accel.max_intersection(vec, kept) < limit:
            kept = np.vstack([kept, vec[None, :]])
    if kept.shape[0] > 1:
        gram = kept @ kept.T
        np.fill_diagonal(gram, 0)
        if int(gram.max()) >= limit:
            raise AssertionError("packing postcondition violated")
    return PackingResult(vectors=kept, attempts=attempts, reached_target=kept.shape[0] >= target_size)


@dataclass
class NeedleInstance:
    """Domain {0..N} with one secret valid point besides 0.

    The family pairs half the mass at 0 with half at each nonzero point;
    only the member at the secret index is fully valid.
    """

    N: int
    i_star: int
    family: FiniteFamily
    p: DiscreteDistribution
    oracle: TableInvalidityOracle
    domain: tuple


def make_needle_instance(
    N: int,
    i_star: int | None = None,
    rng: np.random.Generator | None = None,
) -> NeedleInstance:
    if i_star is None:
        if rng is None:
            raise ValueError("either fix i_star or pass an rng to draw it")
        i_star = int(rng.integers(1, N + 1))
    if not (1 <= i_star <= N):
        raise ValueError(f"i_star {i_star} outside [1, {N}]")
    domain = tuple((i,) for i in range(N + 1))
    values = np.ones(N + 1, dtype=np.float64)
    values[0] = 0.0
    values[i_star] = 0.0
    oracle = TableInvalidityOracle(domain, values, fractional=False)
    members = [
        DiscreteDistribution({(0,): 0.5, (i,): 0.5}) for i in range(1, N + 1)
    ]
    family = FiniteFamily(members, domain)
    p = DiscreteDistribution.point_mass((0,))
    assert_oracle_valid_on(oracle, p.support())
    return NeedleInstance(N=N, i_star=i_star, family=family, p=p, oracle=oracle, domain=domain)


def needle_to_jsonable(instance: NeedleInstance) -> dict:
    return {"type": "needle", "N": instance.N, "secret_i_star": instance.i_star}


def needle_from_jsonable(obj: dict) -> NeedleInstance:
    return make_needle_instance(int(obj["N"]), i_star=int(obj["secret_i_star"]))


@dataclass
class SearchReport:
    """Query accounting for a proper search strategy on an instance."""

    strategy: str
    probes: int
    queries_used: int
    found: bool


def proper_search_demo(
    instance,
    strategy: str,
    rng: np.random.Generator | None = None,
    candidates: np.ndarray | None = None,
) -> SearchReport:
    """Run a proper search (test candidates until one is valid) and count queries.

    For the needle instance the candidates are the nonzero domain points;
    for the hidden box they must be supplied, typically a packing that
    contains the planted corner. ``scan`` probes in index order,
    ``random-probe`` in a uniformly shuffled order.
    """
    if strategy not in ("scan", "random-probe"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "random-probe" and rng is None:
        raise ValueError("random-probe needs an rng")

    oracle: InvalidityOracle = instance.oracle
    before = oracle.query_count
    if isinstance(instance, NeedleInstance):
        order = np.arange(1, instance.N + 1)
        if strategy == "random-probe":
            order = rng.permutation(order)
        probes = 0
        found = False
        for j in order:
            probes += 1
            if oracle.query((int(j),)) == 0.0:
                found = True
                break
    elif isinstance(instance, HiddenBoxInstance):
        if candidates is None:
            raise ValueError("hidden-box search needs candidate corners")
        cand = np.asarray(candidates, dtype=np.int64).reshape(-1, instance.d)
        idx = np.arange(cand.shape[0])
        if strategy == "random-probe":
            idx = rng.permutation(idx)
        probes = 0
        found = False
        for k in idx:
            probes += 1
            # a weight-d/3 probe is valid exactly when it equals the secret
            if oracle.query(tuple(int(v) for v in cand[k])) == 0.0:
                found = True
                break
    else:
        raise TypeError(f"unsupported instance type {type(instance)!r}")
    return SearchReport(
        strategy=strategy,
        probes=probes,
        queries_used=oracle.query_count - before,
        found=found,
    )


def expected_scan_queries(N: int) -> float:
    """Mean index-order scan cost when the secret index is uniform."""
    return (N + 1) / 2.0


def packing_collision_rate(d: int, pairs: int, rng: np.random.Generator) -> float:
    """Empirical probability that two random weight-d/3 vectors overlap in >= d/6 places."""
    hits = 0
    for _ in range(pairs):
        a = rng.choice(d, d // 3, replace=False)
        b = rng.choice(d, d // 3, replace=False)
        if len(np.intersect1d(a, b, assume_unique=True)) >= d // 6:
            hits += 1
    return hits / pairs


def chernoff_collision_bound(d: int) -> float:
    """The e^{-d/108} overlap tail bound used to size packings."""
    return math.exp(-d / 108.0)
