"""Concrete distribution families and their exact constrained-loss minimizers.

A minimizer call ("GMN oracle") takes positive points, forbidden points,
and a loss, and returns the family member with least empirical loss whose
support avoids every forbidden point. Ties break deterministically:
lowest member index for finite families, lexicographic corners for boxes.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from typing import Iterable, Sequence

import numpy as np

from . import _accel
from .core import (
    DiscreteDistribution,
    GridPoint,
    LossFunction,
    Point,
    as_grid_point,
    point_from_jsonable,
    point_to_jsonable,
)
from .errors import NoFeasibleDistribution, ValidgenError

_ENUM_GUARD = 1_000_000


class FiniteFamily:
    """Indexed members over a shared finite domain, with cached matrix views."""

    def __init__(self, members: Sequence[DiscreteDistribution], domain: Sequence[Point]):
        self.members = tuple(members)
        self.domain = tuple(domain)
        if len(set(self.domain)) != len(self.domain):
            raise ValueError("domain contains duplicate points")
        if not self.members:
            raise ValueError("family needs at least one member")
        self._col = {pt: j for j, pt in enumerate(self.domain)}
        mat = np.zeros((len(self.members), len(self.domain)), dtype=np.float64)
        for i, q in enumerate(self.members):
            for pt, pr in q.items():
                j = self._col.get(pt)
                if j is None:
                    raise ValueError(f"member {i} puts mass on {pt!r}, outside the family domain")
                mat[i, j] = pr
        self.prob_matrix = mat
        self.support_mask = mat > 0.0
        self._loss_cache: dict[LossFunction, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.members)

    def column_of(self, point: Point) -> int | None:
        return self._col.get(point)

    def loss_matrix(self, loss: LossFunction) -> np.ndarray:
        """Pointwise loss of every member at every domain point, cached."""
        got = self._loss_cache.get(loss)
        if got is None:
            got = loss.eval_array(self.prob_matrix)
            self._loss_cache[loss] = got
        return got

    def sample_counts(self, sample_points: Sequence[Point]) -> tuple[np.ndarray, int]:
        """Per-domain-point multiplicities of a sample, plus the out-of-domain count."""
        counts = np.zeros(len(self.domain), dtype=np.int64)
        outside = 0
        col = self._col
        for pt in sample_points:
            j = col.get(pt)
            if j is None:
                outside += 1
            else:
                counts[j] += 1
        return counts, outside

    def member_empirical_losses(self, sample_points: Sequence[Point], loss: LossFunction) -> np.ndarray:
        counts, outside = self.sample_counts(sample_points)
        return self.losses_from_counts(counts, outside, loss)

    def losses_from_counts(self, counts: np.ndarray, outside: int, loss: LossFunction) -> np.ndarray:
        total = int(counts.sum()) + outside
        if total == 0:
            raise ValueError("empirical loss needs a non-empty sample")
        lmat = self.loss_matrix(loss)
        vals = lmat @ counts.astype(np.float64)
        if outside:
            vals = vals + outside * loss.eval(0.0)
        return vals / total

    def to_jsonable(self) -> dict:
        return {
            "version": 1,
            "domain": [point_to_jsonable(pt) for pt in self.domain],
            "members": [q.to_jsonable() for q in self.members],
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "FiniteFamily":
        domain = [point_from_jsonable(p) for p in obj["domain"]]
        members = [DiscreteDistribution.from_jsonable(m) for m in obj["members"]]
        return cls(members, domain)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_jsonable(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "FiniteFamily":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_jsonable(json.load(fh))


def gmn_select(family: FiniteFamily, losses: np.ndarray, feasible: np.ndarray) -> int:
    """Lowest-index loss minimizer among feasible members."""
    if not feasible.any():
        raise NoFeasibleDistribution("every member's support hits a forbidden point")
    masked = np.where(feasible, losses, np.inf)
    return int(np.argmin(masked))  # argmin takes the first minimum, i.e. lowest index


def gmn_oracle_finite(
    family: FiniteFamily,
    positives: Sequence[Point],
    negatives: Iterable[Point],
    loss: LossFunction,
) -> tuple[int, DiscreteDistribution]:
    """Exact empirical-loss minimizer whose support avoids all negatives."""
    if len(positives) == 0:
        raise ValueError("positive sample must be non-empty")
    losses = family.member_empirical_losses(positives, loss)
    neg_cols = [c for c in (family.column_of(pt) for pt in negatives) if c is not None]
    feasible = ~family.support_mask[:, neg_cols].any(axis=1) if neg_cols else np.ones(len(family), dtype=bool)
    try:
        idx = gmn_select(family, losses, feasible)
    except NoFeasibleDistribution as exc:
        exc.negatives = list(negatives)
        raise
    return idx, family.members[idx]


# ---------------------------------------------------------------------------
# Axis-aligned boxes on the integer grid


class BoxDistribution:
    """Uniform distribution over an axis-aligned box of grid cells."""

    __slots__ = ("a", "b", "d", "delta", "volume")

    def __init__(self, a: Iterable[int], b: Iterable[int], d: int, delta: int):
        self.a = as_grid_point(a, d, delta)
        self.b = as_grid_point(b, d, delta)
        if any(ai > bi for ai, bi in zip(self.a, self.b)):
            raise ValueError(f"box corners out of order: {self.a} > {self.b}")
        self.d = d
        self.delta = delta
        vol = 1
        for ai, bi in zip(self.a, self.b):
            vol *= bi - ai + 1
        self.volume = vol

    def __repr__(self) -> str:
        return f"BoxDistribution(a={self.a}, b={self.b})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoxDistribution):
            return NotImplemented
        return (self.a, self.b, self.d, self.delta) == (other.a, other.b, other.d, other.delta)

    def __hash__(self):
        return hash((self.a, self.b, self.d, self.delta))

    def in_support(self, point: Point) -> bool:
        return (
            isinstance(point, tuple)
            and len(point) == self.d
            and all(ai <= c <= bi for c, ai, bi in zip(point, self.a, self.b))
        )

    def prob(self, point: Point) -> float:
        return 1.0 / self.volume if self.in_support(point) else 0.0

    def support(self) -> Iterable[GridPoint]:
        if self.volume > _ENUM_GUARD:
            raise ValidgenError(f"box volume {self.volume} too large to enumerate")
        return [tuple(pt) for pt in itertools.product(*(range(ai, bi + 1) for ai, bi in zip(self.a, self.b)))]

    def sample_array(self, rng: np.random.Generator, n: int) -> np.ndarray:
        cols = [rng.integers(ai, bi + 1, size=n, dtype=np.int64) for ai, bi in zip(self.a, self.b)]
        return np.stack(cols, axis=1)

    def sample(self, rng: np.random.Generator, n: int | None = None):
        arr = self.sample_array(rng, 1 if n is None else n)
        pts = [tuple(int(v) for v in row) for row in arr]
        return pts[0] if n is None else pts

    def to_jsonable(self) -> dict:
        return {"a": list(self.a), "b": list(self.b), "d": self.d, "delta": self.delta}

    @classmethod
    def from_jsonable(cls, obj: dict) -> "BoxDistribution":
        return cls(obj["a"], obj["b"], int(obj["d"]), int(obj["delta"]))


class BoxFamily:
    """All axis-aligned boxes on {0..delta-1}^d, never materialized."""

    def __init__(self, d: int, delta: int):
        if d < 1 or delta < 1:
            raise ValueError("box family needs d >= 1 and delta >= 1")
        self.d = d
        self.delta = delta

    def __len__(self) -> int:
        return (self.delta * (self.delta + 1) // 2) ** self.d

    def iter_members(self) -> Iterable[BoxDistribution]:
        side = [(a, b) for a in range(self.delta) for b in range(a, self.delta)]
        for combo in itertools.product(side, repeat=self.d):
            a = tuple(c[0] for c in combo)
            b = tuple(c[1] for c in combo)
            yield BoxDistribution(a, b, self.d, self.delta)


def box_loss_from_count(inside: int, total: int, volume: int, loss: LossFunction) -> float:
    """Empirical loss of a uniform box: covered points see L(1/vol), the rest L(0).

    Shared by the candidate oracle and the full-enumeration check so that
    equal counts give bitwise-equal losses.
    """
    return (inside * loss.eval(1.0 / volume) + (total - inside) * loss.eval(0.0)) / total


def spanned_box_candidates(positives: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All boxes whose per-axis extremes are drawn from positive coordinate values.

    Returns (lo, hi) arrays of shape (C, d). Degenerate boxes are included;
    they are needed when every spanning box hits a forbidden point.
    """
    d = positives.shape[1]
    axis_pairs = []
    for axis in range(d):
        vals = np.unique(positives[:, axis])
        pairs = [(a, b) for i, a in enumerate(vals) for b in vals[i:]]
        axis_pairs.append(np.array(pairs, dtype=np.int64))
    sizes = [p.shape[0] for p in axis_pairs]
    grid = np.indices(sizes).reshape(d, -1)
    lo = np.stack([axis_pairs[ax][grid[ax], 0] for ax in range(d)], axis=1)
    hi = np.stack([axis_pairs[ax][grid[ax], 1] for ax in range(d)], axis=1)
    return lo, hi


def _dedupe_with_counts(points: Sequence[GridPoint], d: int) -> tuple[np.ndarray, np.ndarray]:
    counter = Counter(points)
    pts = np.array(list(counter.keys()), dtype=np.int64).reshape(len(counter), d)
    cnts = np.array(list(counter.values()), dtype=np.int64)
    return pts, cnts


def gmn_oracle_box(
    positives: Sequence[GridPoint],
    negatives: Sequence[GridPoint],
    loss: LossFunction,
    d: int,
    delta: int,
) -> BoxDistribution:
    """Exact loss minimizer over boxes avoiding all negatives.

    Enumerates only boxes spanned by positive coordinates: shrinking any
    feasible box onto the positive points it covers weakly raises the
    density and never adds forbidden points, so the optimum is preserved.
    Ties break lexicographically on the corner vector (a, b).
    """
    if len(positives) == 0:
        raise ValueError("positive sample must be non-empty")
    if d > 4:
        raise ValidgenError("box enumeration is limited to d <= 4")
    pos = np.array([as_grid_point(pt, d, delta) for pt in positives], dtype=np.int64)
    neg = np.array([as_grid_point(pt, d, delta) for pt in negatives], dtype=np.int64).reshape(-1, d)
    lo, hi = spanned_box_candidates(pos)
    pts, cnts = _dedupe_with_counts([tuple(row) for row in pos], d)
    inside, feasible = _accel.box_stats(lo, hi, pts, cnts, neg)
    if not feasible.any():
        raise NoFeasibleDistribution(
            "every candidate box contains a forbidden point", negatives=list(map(tuple, neg))
        )
    total = len(positives)
    volumes = np.prod(hi - lo + 1, axis=1)
    best_idx = None
    best_loss = math.inf
    best_key = None
    for i in np.flatnonzero(feasible):
        val = box_loss_from_count(int(inside[i]), total, int(volumes[i]), loss)
        key = tuple(lo[i]) + tuple(hi[i])
        if val < best_loss or (val == best_loss and key < best_key):
            best_idx, best_loss, best_key = int(i), val, key
    return BoxDistribution(lo[best_idx], hi[best_idx], d, delta)


# ---------------------------------------------------------------------------
# L1 geometry on finite families


def l1_distance(q1, q2) -> float:
    """Sum of |q1_x - q2_x| over the union of supports; ranges over [0, 2]."""
    pts = set(q1.support()) | set(q2.support())
    return float(sum(abs(q1.prob(pt) - q2.prob(pt)) for pt in pts))


def greedy_l1_cover_indices(family: FiniteFamily, eps: float) -> list[int]:
    if eps <= 0.0:
        raise ValueError("cover radius must be positive")
    mat = family.prob_matrix
    kept: list[int] = []
    for i in range(len(family)):
        if kept:
            dists = np.abs(mat[kept] - mat[i]).sum(axis=1)
            if float(dists.min()) <= eps:
                continue
        kept.append(i)
    return kept


def greedy_l1_cover(family: FiniteFamily, eps: float) -> FiniteFamily:
    """Greedy L1 cover: scan in index order, keep members not yet covered.

    Every family member ends up within eps of some kept member; the kept
    set is a subfamily, not necessarily a minimal cover.
    """
    kept = greedy_l1_cover_indices(family, eps)
    return FiniteFamily([family.members[i] for i in kept], family.domain)


# ---------------------------------------------------------------------------
# Character n-gram demo model

_BOS = "\x02"
_EOS = "\x03"


class NgramModel:
    """Markov character model over a finite alphabet with an explicit transition set.

    Transitions map a length-n context to the permitted next characters
    with additive-smoothed probabilities. Strings are in the support when
    every step uses a permitted transition and the string either ends
    where the end marker is permitted or runs to the length cap.
    """

    def __init__(self, order: int, alphabet: Sequence[str], max_len: int, transitions: dict[str, dict[str, float]]):
        self.order = order
        self.alphabet = tuple(alphabet)
        self.max_len = max_len
        self.transitions = transitions

    @classmethod
    def fit(cls, strings: Sequence[str], order: int, alphabet: Sequence[str], max_len: int) -> "NgramModel":
        """Count transitions over the training strings with add-one smoothing.

        Smoothing applies only to transitions actually observed, so the
        support stays inside what the data exhibits.
        """
        counts: dict[str, Counter] = {}
        for s in strings:
            for ctx, ch in cls._walk(s, order):
                counts.setdefault(ctx, Counter())[ch] += 1
        transitions = {
            ctx: {ch: (c + 1.0) for ch, c in ctr.items()} for ctx, ctr in counts.items()
        }
        model = cls(order, alphabet, max_len, transitions)
        model._prune_dead_contexts()
        model._renormalize()
        return model

    @staticmethod
    def _walk(s: str, order: int):
        padded = _BOS * order + s + _EOS
        for i in range(order, len(padded)):
            yield padded[i - order : i], padded[i]

    def _next_context(self, ctx: str, ch: str) -> str:
        return (ctx + ch)[-self.order :]

    def _prune_dead_contexts(self) -> None:
        # A context is live when the end marker is reachable from it.
        live: set[str] = set()
        changed = True
        while changed:
            changed = False
            for ctx, nexts in self.transitions.items():
                if ctx in live:
                    continue
                for ch in nexts:
                    if ch == _EOS or self._next_context(ctx, ch) in live:
                        live.add(ctx)
                        changed = True
                        break
        for ctx in list(self.transitions):
            if ctx not in live:
                del self.transitions[ctx]
                continue
            nexts = self.transitions[ctx]
            for ch in list(nexts):
                if ch != _EOS and self._next_context(ctx, ch) not in self.transitions:
                    del nexts[ch]
            if not nexts:
                del self.transitions[ctx]

    def _renormalize(self) -> None:
        for ctx, nexts in self.transitions.items():
            total = sum(nexts.values())
            self.transitions[ctx] = {ch: w / total for ch, w in nexts.items()}

    def copy_without(self, ctx: str, ch: str) -> "NgramModel":
        transitions = {c: dict(n) for c, n in self.transitions.items()}
        transitions.get(ctx, {}).pop(ch, None)
        if ctx in transitions and not transitions[ctx]:
            del transitions[ctx]
        clone = NgramModel(self.order, self.alphabet, self.max_len, transitions)
        clone._prune_dead_contexts()
        clone._renormalize()
        return clone

    def transition_path(self, s: str) -> list[tuple[str, str]]:
        return list(self._walk(s, self.order))

    def in_support(self, s) -> bool:
        if not isinstance(s, str) or len(s) > self.max_len:
            return False
        ctx = _BOS * self.order
        for ch in s:
            nexts = self.transitions.get(ctx)
            if nexts is None or ch not in nexts:
                return False
            ctx = self._next_context(ctx, ch)
        if len(s) == self.max_len:
            return True
        nexts = self.transitions.get(ctx)
        return nexts is not None and _EOS in nexts

    def prob(self, s) -> float:
        """Walk probability of s; strings cut at the length cap omit the end factor."""
        if not self.in_support(s):
            return 0.0
        ctx = _BOS * self.order
        pr = 1.0
        for ch in s:
            pr *= self.transitions[ctx][ch]
            ctx = self._next_context(ctx, ch)
        if len(s) < self.max_len:
            pr *= self.transitions[ctx][_EOS]
        return pr

    def support(self):
        raise ValidgenError("n-gram support is not enumerated")

    def sample_one(self, rng: np.random.Generator) -> str:
        ctx = _BOS * self.order
        out: list[str] = []
        while len(out) < self.max_len:
            nexts = self.transitions.get(ctx)
            if not nexts:
                break
            chars = sorted(nexts)
            weights = np.array([nexts[c] for c in chars], dtype=np.float64)
            pick = chars[int(rng.choice(len(chars), p=weights / weights.sum()))]
            if pick == _EOS:
                break
            out.append(pick)
            ctx = self._next_context(ctx, pick)
        return "".join(out)

    def sample(self, rng: np.random.Generator, n: int | None = None):
        if n is None:
            return self.sample_one(rng)
        return [self.sample_one(rng) for _ in range(n)]


def ngram_gmn_greedy(
    positives: Sequence[str],
    negatives: Sequence[str],
    order: int,
    alphabet: Sequence[str],
    max_len: int,
    loss: LossFunction,
) -> NgramModel:
    """Fit an n-gram model on positives, then greedily cut transitions until
    no negative string stays in the support.

    Each step removes, among the transitions on the offending negative's
    path, the one whose removal costs the least empirical positive loss.
    Heuristic only; no optimality claim.
    """
    if len(positives) == 0:
        raise ValueError("positive sample must be non-empty")
    model = NgramModel.fit(positives, order, alphabet, max_len)

    def xp_loss(m: NgramModel) -> float:
        vals = [loss.eval(min(1.0, m.prob(s))) for s in positives]
        return float(np.mean(vals))

    while True:
        offender = next((s for s in negatives if model.in_support(s)), None)
        if offender is None:
            return model
        best = None
        best_cost = math.inf
        path = model.transition_path(offender)
        if len(offender) == model.max_len:
            path = path[:-1]  # capped strings carry no end-marker step
        for ctx, ch in path:
            trial = model.copy_without(ctx, ch)
            if not any(trial.in_support(s) for s in positives):
                continue
            cost = xp_loss(trial)
            if cost < best_cost:
                best, best_cost = trial, cost
        if best is None:
            raise NoFeasibleDistribution(
                f"removing any transition of {offender!r} empties the positive support",
                negatives=list(negatives),
            )
        model = best
