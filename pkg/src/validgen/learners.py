"""The three learners: round-based elimination with an exact minimization
oracle, importance-weighted elimination under partial validity, and the
proper box learner.

Each learner returns a ``LearnerOutcome`` wrapping the output distribution
together with round and query accounting, so the harness can persist
provenance without re-deriving it.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _accel
from .core import (
    DiscreteDistribution,
    InvalidityOracle,
    LossFunction,
    Point,
    point_from_jsonable,
    point_to_jsonable,
)
from .errors import NoCandidateSurvived, NoFeasibleDistribution, ValidgenError
from .families import (
    BoxDistribution,
    FiniteFamily,
    NgramModel,
    gmn_select,
    greedy_l1_cover_indices,
    spanned_box_candidates,
)


@dataclass(frozen=True)
class LearnerParams:
    """Sampling budgets with derived defaults for finite families.

    Explicit fields override the derived values. Derived defaults:

    - R = ceil(c_R * M / eps1), with c_R = 32 from the round analysis;
    - P = ceil(c_P * (M/eps1)^2 * ln|Q|), c_P = 32;
    - T = ceil(c_T * (R/eps2) * ln(8 |Q| R)), c_T = 1, the rate needed to
      catch any member keeping eps2/R invalid mass, union-bounded over
      members and rounds;
    - n1 = ceil(4.5 * (M/eps1)^2 * ln(30 |Q|)): Hoeffding accuracy eps1/3
      for all members at failure probability 1/15;
    - n2 = ceil(c_n2 * (M^2/(eps1^2 eps2^2)) * ln|Q| * ln(M ln|Q| / (eps1 eps2))):
      the worst-case concentration budget. With c_n2 = 1 this is far
      beyond desk scale; built-in elimination scenarios override n2
      explicitly.

    ``inner_cap`` bounds elimination iterations per loss level as a
    safeguard against sampling-noise stalls; a capped level is treated as
    exhausted. ``box_sample_coeff`` is the c in P = ceil(c d M^2/eps1^2)
    for the box learner and ``box_candidate_budget`` guards its
    enumeration size.
    """

    P: int | None = None
    R: int | None = None
    T: int | None = None
    n1: int | None = None
    n2: int | None = None
    c_P: float = 32.0
    c_R: float = 32.0
    c_T: float = 1.0
    c_n1: float = 4.5
    c_n2: float = 1.0
    inner_cap: int | None = None
    box_sample_coeff: float = 16.0
    box_candidate_budget: int = 2_000_000

    def resolve_R(self, M: float, eps1: float) -> int:
        return self.R if self.R is not None else math.ceil(self.c_R * M / eps1)

    def resolve_P(self, M: float, eps1: float, qsize: int | None) -> int:
        if self.P is not None:
            return self.P
        if qsize is None:
            raise ValueError("P must be set explicitly when the family size is unknown")
        return math.ceil(self.c_P * (M / eps1) ** 2 * math.log(max(qsize, 2)))

    def resolve_T(self, R: int, eps2: float, qsize: int | None) -> int:
        if self.T is not None:
            return self.T
        if qsize is None:
            raise ValueError("T must be set explicitly when the family size is unknown")
        return math.ceil(self.c_T * (R / eps2) * math.log(8.0 * max(qsize, 2) * R))

    def resolve_n1(self, M: float, eps1: float, qsize: int) -> int:
        if self.n1 is not None:
            return self.n1
        return math.ceil(self.c_n1 * (M / eps1) ** 2 * math.log(30.0 * max(qsize, 2)))

    def resolve_n2(self, M: float, eps1: float, eps2: float, qsize: int) -> int:
        if self.n2 is not None:
            return self.n2
        q = max(qsize, 2)
        inner = max(math.e, M * math.log(q) / (eps1 * eps2))
        return math.ceil(self.c_n2 * (M * M / (eps1 * eps1 * eps2 * eps2)) * math.log(q) * math.log(inner))

    def resolve_inner_cap(self, eps2: float, qsize: int) -> int:
        if self.inner_cap is not None:
            return self.inner_cap
        return math.ceil(8.0 * math.log(max(qsize, 2)) / eps2) + 8

    def to_jsonable(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class LearnerOutcome:
    """Learner output plus the accounting the harness persists."""

    distribution: object
    kind: str  # "proper" | "filtered-meta" | "mu-prime"
    rounds_used: int
    samples_from_p: int
    oracle_queries: int
    x_star: Point | None = None
    chosen_index: int | None = None
    resolved: dict = field(default_factory=dict)
    history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Filtered meta-distribution (round-based learner's improper output)


class FilteredMeta:
    """Samples the base round's candidate and keeps a point only when some
    later round's candidate also supports it; otherwise emits the fallback.

    Acceptance membership is decided lazily against the later rounds'
    supports, so round candidates only need a support test, not an
    enumerable support. Density evaluation does require the base round's
    support to be enumerable.
    """

    def __init__(self, base_index: int, rounds: Sequence, fallback: Point):
        if not (0 <= base_index < len(rounds)):
            raise ValueError("base index outside rounds")
        self.base_index = base_index
        self.rounds = tuple(rounds)
        self.fallback = fallback
        self._accept_cache: dict = {}
        self._rejected_mass: float | None = None

    @property
    def base(self):
        return self.rounds[self.base_index]

    def in_acceptance(self, point: Point) -> bool:
        got = self._accept_cache.get(point)
        if got is None:
            got = any(self.rounds[j].in_support(point) for j in range(self.base_index + 1, len(self.rounds)))
            self._accept_cache[point] = got
        return got

    def _rejected(self) -> float:
        if self._rejected_mass is None:
            self._rejected_mass = float(
                sum(self.base.prob(pt) for pt in self.base.support() if not self.in_acceptance(pt))
            )
        return self._rejected_mass

    def prob(self, point: Point) -> float:
        kept = self.base.prob(point) if self.in_acceptance(point) else 0.0
        if point == self.fallback:
            return kept + self._rejected()
        return kept

    def in_support(self, point: Point) -> bool:
        return self.prob(point) > 0.0

    def support(self):
        pts = [pt for pt in self.base.support() if self.in_acceptance(pt)]
        if self.fallback not in pts and self._rejected() > 0.0:
            pts.append(self.fallback)
        return pts

    def sample(self, rng: np.random.Generator, n: int | None = None):
        base = self.base
        if isinstance(base, DiscreteDistribution):
            flags = [self.in_acceptance(pt) for pt in base.points]
            idx = base.sample_indices(rng, 1 if n is None else n)
            pts = base.points
            out = [pts[i] if flags[i] else self.fallback for i in idx]
        else:
            draws = base.sample(rng, 1 if n is None else n)
            out = [pt if self.in_acceptance(pt) else self.fallback for pt in draws]
        return out[0] if n is None else out


def filtered_density(meta: FilteredMeta, point: Point) -> float:
    return meta.prob(point)


def filtered_sample(meta: FilteredMeta, rng: np.random.Generator) -> Point:
    return meta.sample(rng)


# ---------------------------------------------------------------------------
# Acceptance-filtered mixture (elimination learner's improper output)


class MuPrime:
    """Uniform mixture over surviving members, filtered by the importance cap.

    A drawn point x is kept with probability pi(x), the fraction of
    members whose density ratio against the mixture stays below
    3M/eps1; rejected draws emit the known-valid fallback.
    """

    def __init__(self, members: Sequence[DiscreteDistribution], fallback: Point, eps1: float, M: float):
        if not members:
            raise ValueError("mixture needs at least one member")
        self.members = tuple(members)
        self.fallback = fallback
        self.eps1 = eps1
        self.M = M
        self.weight_cap = 3.0 * M / eps1
        pts: list[Point] = []
        seen = set()
        for q in self.members:
            for pt in q.support():
                if pt not in seen:
                    seen.add(pt)
                    pts.append(pt)
        self._points = tuple(pts)
        self._col = {pt: j for j, pt in enumerate(pts)}
        mat = np.zeros((len(self.members), len(pts)), dtype=np.float64)
        for i, q in enumerate(self.members):
            for pt, pr in q.items():
                mat[i, self._col[pt]] = pr
        self._mat = mat
        self._mu = mat.mean(axis=0)
        self._pi = _accel.acceptance_probs(mat, self._mu, self.weight_cap)
        self._mix = DiscreteDistribution.from_probs(self._points, self._mu)
        self._diverted = float(np.dot(self._mu, 1.0 - self._pi))

    def mixture_prob(self, point: Point) -> float:
        j = self._col.get(point)
        return float(self._mu[j]) if j is not None else 0.0

    def accept_prob(self, point: Point) -> float:
        j = self._col.get(point)
        return float(self._pi[j]) if j is not None else 1.0

    def prob(self, point: Point) -> float:
        j = self._col.get(point)
        kept = float(self._mu[j] * self._pi[j]) if j is not None else 0.0
        if point == self.fallback:
            return kept + self._diverted
        return kept

    def in_support(self, point: Point) -> bool:
        return self.prob(point) > 0.0

    def support(self):
        pts = [pt for j, pt in enumerate(self._points) if self._mu[j] * self._pi[j] > 0.0]
        if self.fallback not in pts and self._diverted > 0.0:
            pts.append(self.fallback)
        return pts

    def sample(self, rng: np.random.Generator, n: int | None = None):
        m = 1 if n is None else n
        idx = self._mix.sample_indices(rng, m)
        keep = rng.random(m) < self._pi[idx]
        pts = self._points
        out = [pts[i] if k else self.fallback for i, k in zip(idx, keep)]
        return out[0] if n is None else out


def mu_prime_accept_prob(members: Sequence, eps1: float, M: float, point: Point) -> float:
    """Exact fraction of members whose density ratio at the point clears the cap.

    Where the mixture has no mass the probability is defined as 1; such
    points are never drawn from the mixture.
    """
    probs = [q.prob(point) for q in members]
    mu = sum(probs) / len(probs)
    if mu <= 0.0:
        return 1.0
    cap = 3.0 * M / eps1
    return sum(1 for pr in probs if pr / mu < cap) / len(probs)


# ---------------------------------------------------------------------------
# Round-based learner (binary oracle, full validity)


def _query_distribution_samples(oracle: InvalidityOracle, q, n: int, rng: np.random.Generator):
    """Draw n samples from a candidate and query each; returns (points-or-None, codes, values).

    Keeps everything in index space when both the candidate and the
    oracle support it; otherwise falls back to point objects.
    """
    if isinstance(q, DiscreteDistribution):
        local = q.sample_indices(rng, n)
        ocodes = oracle.try_encode_points(q.points)
        if ocodes is not None:
            vals = oracle.query_codes(ocodes[local])
            return None, local, vals
        pts_all = q.points
        pts = [pts_all[i] for i in local]
        return pts, local, oracle.query_many(pts)
    if isinstance(q, BoxDistribution) and hasattr(oracle, "query_array"):
        arr = q.sample_array(rng, n)
        vals = oracle.query_array(arr)
        return [tuple(int(v) for v in row) for row in arr], None, vals
    pts = q.sample(rng, n)
    return pts, None, oracle.query_many(pts)


def vgm_learn(
    family: FiniteFamily | None,
    gmn_oracle: Callable | None,
    p_sampler,
    inv_oracle: InvalidityOracle,
    eps1: float,
    eps2: float,
    params: LearnerParams,
    rng: np.random.Generator,
    loss: LossFunction | None = None,
) -> LearnerOutcome:
    """Round-based improper learner against a binary invalidity oracle.

    Draws the positive sample once, then repeatedly asks the minimization
    oracle for the best candidate avoiding the invalid points seen so
    far, testing each candidate with T fresh draws. A candidate with no
    invalid draw is returned as-is; if all R rounds fail, a uniformly
    chosen round becomes the base of a filtered meta-distribution with
    the first positive sample as fallback.
    """
    for name, v in (("eps1", eps1), ("eps2", eps2)):
        if not (0.0 < v < 1.0):
            raise ValueError(f"{name} must lie in (0, 1)")
    if inv_oracle.fractional:
        raise ValueError("the round-based learner requires a binary invalidity oracle")
    if gmn_oracle is None and (family is None or loss is None):
        raise ValueError("without a custom oracle, a finite family and a loss are required")

    M = loss.M if loss is not None else None
    qsize = len(family) if family is not None else None
    if M is None:
        if params.R is None or params.T is None or params.P is None:
            raise ValueError("P, R, T must be set explicitly when no loss is given")
    R = params.resolve_R(M, eps1) if M is not None else params.R
    P = params.resolve_P(M, eps1, qsize) if M is not None else params.P
    T = params.resolve_T(R, eps2, qsize) if M is not None else params.T

    if P < 1:
        raise ValueError("positive sample must be non-empty")
    resolved = {"P": P, "R": R, "T": T, "eps1": eps1, "eps2": eps2}

    fast = gmn_oracle is None
    positives = counts = None
    if fast and isinstance(p_sampler, DiscreteDistribution):
        cols = [family.column_of(pt) for pt in p_sampler.points]
        if all(c is not None for c in cols):
            # index-space positive sample: same draws, no point materialization
            idx = p_sampler.sample_indices(rng, P)
            counts = np.bincount(np.asarray(cols, dtype=np.int64)[idx], minlength=len(family.domain))
            outside = 0
            x_star = p_sampler.points[int(idx[0])]
    if counts is None:
        positives = p_sampler.sample(rng, P)
        x_star = positives[0]
        if fast:
            counts, outside = family.sample_counts(positives)
    if fast:
        losses = family.losses_from_counts(counts, outside, loss)
        feasible = np.ones(len(family), dtype=bool)

    queries_before = inv_oracle.query_count
    negatives: list[Point] = []
    negative_set: set[Point] = set()
    rounds: list = []

    for rnd in range(R):
        if fast:
            try:
                idx = gmn_select(family, losses, feasible)
            except NoFeasibleDistribution as exc:
                exc.negatives = list(negatives)
                raise
            q_i = family.members[idx]
        else:
            got = gmn_oracle(positives, list(negatives))
            idx, q_i = got if isinstance(got, tuple) else (None, got)
        rounds.append(q_i)

        pts, local, vals = _query_distribution_samples(inv_oracle, q_i, T, rng)
        if not np.all((vals == 0.0) | (vals == 1.0)):
            raise ValidgenError("round-based learner observed fractional invalidity values")
        bad = vals == 1.0
        if not bad.any():
            return LearnerOutcome(
                distribution=q_i,
                kind="proper",
                rounds_used=rnd + 1,
                samples_from_p=P,
                oracle_queries=inv_oracle.query_count - queries_before,
                x_star=x_star,
                chosen_index=idx,
                resolved=resolved,
            )
        if pts is None:
            qpts = q_i.points
            new_pts = {qpts[i] for i in np.unique(local[bad])}
        else:
            new_pts = {pts[i] for i in np.flatnonzero(bad)}
        for pt in new_pts:
            # every inserted negative was observed invalid this round
            if pt not in negative_set:
                negative_set.add(pt)
                negatives.append(pt)
        if fast:
            new_cols = [c for c in (family.column_of(pt) for pt in new_pts) if c is not None]
            if new_cols:
                feasible &= ~family.support_mask[:, new_cols].any(axis=1)

    base = int(rng.integers(R))
    meta = FilteredMeta(base, rounds, x_star)
    return LearnerOutcome(
        distribution=meta,
        kind="filtered-meta",
        rounds_used=R,
        samples_from_p=P,
        oracle_queries=inv_oracle.query_count - queries_before,
        x_star=x_star,
        chosen_index=base,
        resolved=resolved,
    )


# ---------------------------------------------------------------------------
# Importance-weighted elimination learner (fractional oracle, partial validity)


def partial_validity_learn(
    family: FiniteFamily,
    p_sampler,
    inv_oracle: InvalidityOracle,
    eps1: float,
    eps2: float,
    alpha: float,
    params: LearnerParams,
    rng: np.random.Generator,
    loss: LossFunction,
    x_star: Point,
    use_cover: bool = False,
) -> LearnerOutcome:
    """Elimination learner tolerating invalid mass up to alpha.

    Scans loss levels in eps1/3 steps. At each level the surviving set is
    sampled as a uniform mixture; the run returns the acceptance-filtered
    mixture once its weighted empirical invalidity clears alpha + 4 eps2/5,
    and otherwise removes every member whose importance-weighted estimate
    exceeds alpha + eps2/5. With ``use_cover`` the level set is first
    reduced to a greedy L1 cover of radius eps2.
    """
    if not loss.is_convex:
        raise ValueError("the elimination learner requires a convex loss")
    for name, v in (("eps1", eps1), ("eps2", eps2)):
        if not (0.0 < v < 1.0):
            raise ValueError(f"{name} must lie in (0, 1)")
    if alpha < 0.0:
        raise ValueError("alpha must be non-negative")
    if float(inv_oracle.rule(x_star)) != 0.0:
        raise ValidgenError(f"supplied fallback {x_star!r} is not valid")

    M = loss.M
    qsize = len(family)
    n1 = params.resolve_n1(M, eps1, qsize)
    n2 = params.resolve_n2(M, eps1, eps2, qsize)
    inner_cap = params.resolve_inner_cap(eps2, qsize)
    weight_cap = 3.0 * M / eps1
    resolved = {"n1": n1, "n2": n2, "inner_cap": inner_cap, "eps1": eps1, "eps2": eps2, "alpha": alpha}

    sample1 = p_sampler.sample(rng, n1)
    counts, outside = family.sample_counts(sample1)
    emp_losses = family.losses_from_counts(counts, outside, loss)

    step = eps1 / 3.0
    levels = [j * step for j in range(int(math.floor(M / step)) + 1)]
    if not levels or levels[-1] < M:
        levels.append(M)

    domain_codes = inv_oracle.try_encode_points(family.domain)
    queries_before = inv_oracle.query_count
    mat = family.prob_matrix
    history: list[dict] = []

    for ell in levels:
        level_members = [i for i in range(qsize) if emp_losses[i] <= ell]
        if not level_members:
            continue
        if use_cover:
            sub = FiniteFamily([family.members[i] for i in level_members], family.domain)
            kept = greedy_l1_cover_indices(sub, eps2)
            level_members = [level_members[k] for k in kept]
        D = list(level_members)
        level_log = {"level": ell, "initial": list(D), "iterations": []}
        history.append(level_log)
        iters = 0
        while D and iters < inner_cap:
            iters += 1
            rows = mat[D]
            mu = rows.mean(axis=0)
            nz = np.flatnonzero(mu > 0.0)
            cdf = np.cumsum(mu[nz])
            cdf[-1] = 1.0
            draw = _accel.sample_from_cdf(cdf, rng.random(n2))
            codes = nz[draw]
            if domain_codes is not None:
                vals = inv_oracle.query_codes(domain_codes[codes])
            else:
                dom = family.domain
                vals = inv_oracle.query_many([dom[c] for c in codes])

            pi = _accel.acceptance_probs(rows, mu, weight_cap)
            accept_stat = float(np.mean(vals * pi[codes]))
            if accept_stat <= alpha + 0.8 * eps2:
                out = MuPrime([family.members[i] for i in D], x_star, eps1, M)
                level_log["iterations"].append(
                    {"survivors": list(D), "accept_stat": accept_stat, "removed": [], "returned": True}
                )
                return LearnerOutcome(
                    distribution=out,
                    kind="mu-prime",
                    rounds_used=sum(len(h["iterations"]) for h in history),
                    samples_from_p=n1,
                    oracle_queries=inv_oracle.query_count - queries_before,
                    x_star=x_star,
                    resolved=resolved,
                    history=history,
                )
            est, max_w = _accel.weighted_invalidity_estimates(rows, mu, codes, vals, weight_cap)
            if max_w > weight_cap:
                raise AssertionError("importance weight exceeded its cap")
            keep = est <= alpha + 0.2 * eps2
            removed = [D[k] for k in np.flatnonzero(~keep)]
            level_log["iterations"].append(
                {
                    "survivors": list(D),
                    "accept_stat": accept_stat,
                    "estimates": est.tolist(),
                    "max_weight": float(max_w),
                    "removed": removed,
                    "returned": False,
                }
            )
            D = [D[k] for k in np.flatnonzero(keep)]
        level_log["capped"] = bool(D) and iters >= inner_cap

    raise NoCandidateSurvived(
        "every loss level exhausted its candidate set", history=history
    )


# ---------------------------------------------------------------------------
# Proper box learner


def proper_box_learn(
    p_sampler,
    inv_oracle: InvalidityOracle,
    eps1: float,
    eps2: float,
    d: int,
    delta: int,
    loss: LossFunction,
    rng: np.random.Generator,
    params: LearnerParams | None = None,
) -> LearnerOutcome:
    """Proper learner over uniform box distributions on the integer grid.

    Enumerates boxes spanned by sample coordinates, then tests candidates
    in order of increasing empirical loss, drawing ceil((1/eps2) ln(8 P^{2d}))
    points from each until one shows no invalid sample. Testing in loss
    order returns exactly the minimum-loss candidate with a clean test.
    """
    params = params or LearnerParams()
    for name, v in (("eps1", eps1), ("eps2", eps2)):
        if not (0.0 < v < 1.0):
            raise ValueError(f"{name} must lie in (0, 1)")
    M = loss.M
    P = params.P if params.P is not None else math.ceil(params.box_sample_coeff * d * (M / eps1) ** 2)
    positives = p_sampler.sample(rng, P)
    pos = np.array(positives, dtype=np.int64).reshape(P, d)

    lo, hi = spanned_box_candidates(pos)
    n_cand = lo.shape[0]
    if n_cand > params.box_candidate_budget:
        raise ValidgenError(
            f"{n_cand} candidate boxes exceed the budget {params.box_candidate_budget}"
        )
    n_test = math.ceil((1.0 / eps2) * (math.log(8.0) + 2.0 * d * math.log(P)))

    counter = Counter(map(tuple, pos))
    pts = np.array(list(counter.keys()), dtype=np.int64).reshape(len(counter), d)
    cnts = np.array(list(counter.values()), dtype=np.int64)
    inside, _ = _accel.box_stats(lo, hi, pts, cnts, np.empty((0, d), dtype=np.int64))
    volumes = np.prod(hi - lo + 1, axis=1)
    losses = (inside * loss.eval_array(1.0 / volumes) + (P - inside) * loss.eval(0.0)) / P

    keys = [hi[:, ax] for ax in range(d - 1, -1, -1)] + [lo[:, ax] for ax in range(d - 1, -1, -1)] + [losses]
    order = np.lexsort(tuple(keys))

    queries_before = inv_oracle.query_count
    tested = 0
    for ci in order:
        box = BoxDistribution(lo[ci], hi[ci], d, delta)
        tested += 1
        if hasattr(inv_oracle, "query_array"):
            vals = inv_oracle.query_array(box.sample_array(rng, n_test))
        else:
            vals = inv_oracle.query_many(box.sample(rng, n_test))
        if np.all(vals == 0.0):
            return LearnerOutcome(
                distribution=box,
                kind="proper",
                rounds_used=tested,
                samples_from_p=P,
                oracle_queries=inv_oracle.query_count - queries_before,
                x_star=None,
                resolved={"P": P, "n_test": n_test, "candidates": int(n_cand)},
            )
    raise NoFeasibleDistribution("no candidate box passed the validity test")


# ---------------------------------------------------------------------------
# Output serialization


def distribution_to_jsonable(dist) -> dict:
    if isinstance(dist, DiscreteDistribution):
        return {"type": "discrete", **dist.to_jsonable()}
    if isinstance(dist, BoxDistribution):
        return {"type": "box", **dist.to_jsonable()}
    if isinstance(dist, FilteredMeta):
        return {
            "type": "filtered-meta",
            "base_index": dist.base_index,
            "rounds": [distribution_to_jsonable(q) for q in dist.rounds],
            "fallback": point_to_jsonable(dist.fallback),
        }
    if isinstance(dist, MuPrime):
        return {
            "type": "mu-prime",
            "members": [distribution_to_jsonable(q) for q in dist.members],
            "fallback": point_to_jsonable(dist.fallback),
            "eps1": dist.eps1,
            "M": dist.M,
        }
    if isinstance(dist, NgramModel):
        return {
            "type": "ngram",
            "order": dist.order,
            "alphabet": list(dist.alphabet),
            "max_len": dist.max_len,
            "transitions": {ctx: dict(nexts) for ctx, nexts in dist.transitions.items()},
        }
    raise TypeError(f"cannot serialize distribution of type {type(dist)!r}")


def distribution_from_jsonable(obj: dict):
    t = obj["type"]
    if t == "discrete":
        return DiscreteDistribution.from_jsonable(obj)
    if t == "box":
        return BoxDistribution.from_jsonable(obj)
    if t == "filtered-meta":
        rounds = [distribution_from_jsonable(r) for r in obj["rounds"]]
        return FilteredMeta(int(obj["base_index"]), rounds, point_from_jsonable(obj["fallback"]))
    if t == "mu-prime":
        members = [distribution_from_jsonable(m) for m in obj["members"]]
        return MuPrime(members, point_from_jsonable(obj["fallback"]), float(obj["eps1"]), float(obj["M"]))
    if t == "ngram":
        return NgramModel(int(obj["order"]), obj["alphabet"], int(obj["max_len"]), obj["transitions"])
    raise ValueError(f"unknown distribution record type {t!r}")


def outcome_to_record(outcome: LearnerOutcome, *, seed=None) -> dict:
    """Structured record of a learner output: kind, components, provenance."""
    return {
        "kind": outcome.kind,
        "distribution": distribution_to_jsonable(outcome.distribution),
        "fallback": point_to_jsonable(outcome.x_star) if outcome.x_star is not None else None,
        "params": outcome.resolved,
        "provenance": {
            "seed": seed,
            "rounds": outcome.rounds_used,
            "samples": outcome.samples_from_p,
            "queries": outcome.oracle_queries,
        },
    }
