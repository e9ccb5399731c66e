"""Domain points, discrete distributions, bounded losses, and counted invalidity access.

Everything downstream works with three primitives defined here:

- finite-support distributions with cached cumulative tables for sampling,
- bounded non-increasing loss functions on probabilities,
- an invalidity oracle that charges one query per rule evaluation.

Points are plain hashable values: grid points are tuples of ints, demo
tokens are strings. Probabilities below ``SUPPORT_EPS`` are treated as
zero for support-membership purposes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import _accel
from .errors import AmplificationExhausted, ValidgenError

Point = Hashable
GridPoint = tuple
Token = str

SUPPORT_EPS = 1e-12
_SUM_TOL = 1e-9


def as_grid_point(coords: Iterable[int], d: int | None = None, delta: int | None = None) -> GridPoint:
    """Validate and freeze integer grid coordinates into a point."""
    pt = tuple(int(c) for c in coords)
    if d is not None and len(pt) != d:
        raise ValueError(f"grid point {pt} has length {len(pt)}, expected {d}")
    if delta is not None and any(c < 0 or c >= delta for c in pt):
        raise ValueError(f"grid point {pt} outside [0, {delta - 1}]")
    return pt


def point_to_jsonable(point: Point):
    if isinstance(point, tuple):
        return [int(c) for c in point]
    if isinstance(point, str):
        return point
    if isinstance(point, (int, np.integer)):
        return int(point)
    raise TypeError(f"unsupported point type {type(point)!r}")


def point_from_jsonable(obj) -> Point:
    if isinstance(obj, list):
        return tuple(int(c) for c in obj)
    if isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return int(obj)
    raise TypeError(f"cannot decode point from {obj!r}")


class DiscreteDistribution:
    """Explicit finite-support probability mass function.

    Entries below ``SUPPORT_EPS`` are dropped at construction; the
    remaining probabilities must be strictly positive and sum to 1
    within 1e-9. Instances are immutable and safe to share.
    """

    __slots__ = ("_points", "_probs", "_index", "_cdf")

    def __init__(self, support: Mapping[Point, float]):
        items = [(pt, float(pr)) for pt, pr in support.items() if float(pr) > SUPPORT_EPS]
        if not items:
            raise ValueError("distribution has empty support")
        for pt, pr in items:
            if not math.isfinite(pr) or pr <= 0.0:
                raise ValueError(f"probability {pr} for point {pt!r} is not strictly positive")
        total = math.fsum(pr for _, pr in items)
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1 within {_SUM_TOL}")
        self._points = tuple(pt for pt, _ in items)
        self._probs = np.array([pr for _, pr in items], dtype=np.float64)
        self._index = {pt: i for i, pt in enumerate(self._points)}
        cdf = np.cumsum(self._probs)
        cdf[-1] = 1.0
        self._cdf = cdf

    @classmethod
    def uniform_over(cls, points: Iterable[Point]) -> "DiscreteDistribution":
        pts = list(points)
        if len(set(pts)) != len(pts):
            raise ValueError("duplicate points in uniform support")
        return cls({pt: 1.0 / len(pts) for pt in pts})

    @classmethod
    def point_mass(cls, point: Point) -> "DiscreteDistribution":
        return cls({point: 1.0})

    @classmethod
    def from_probs(cls, points: Sequence[Point], probs: Sequence[float]) -> "DiscreteDistribution":
        return cls(dict(zip(points, probs)))

    @property
    def points(self) -> tuple:
        return self._points

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    def __len__(self) -> int:
        return len(self._points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return self._points == other._points and np.array_equal(self._probs, other._probs)

    def __hash__(self):
        return hash((self._points, self._probs.tobytes()))

    def __repr__(self) -> str:
        return f"DiscreteDistribution({len(self)} points)"

    def prob(self, point: Point) -> float:
        i = self._index.get(point)
        return float(self._probs[i]) if i is not None else 0.0

    def in_support(self, point: Point) -> bool:
        return point in self._index

    def support(self) -> tuple:
        return self._points

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n support indices using the cached cumulative table."""
        return _accel.sample_from_cdf(self._cdf, rng.random(n))

    def sample(self, rng: np.random.Generator, n: int | None = None):
        if n is None:
            return self._points[int(self.sample_indices(rng, 1)[0])]
        idx = self.sample_indices(rng, n)
        pts = self._points
        return [pts[i] for i in idx]

    def items(self):
        return zip(self._points, self._probs)

    def to_jsonable(self) -> dict:
        return {
            "points": [point_to_jsonable(pt) for pt in self._points],
            "probs": [float(p) for p in self._probs],
        }

    @classmethod
    def from_jsonable(cls, obj: dict) -> "DiscreteDistribution":
        pts = [point_from_jsonable(p) for p in obj["points"]]
        return cls.from_probs(pts, obj["probs"])


CAPPED_LOG = "capped-log"
SHIFTED_LOG = "shifted-log"
COVERAGE = "coverage"


@dataclass(frozen=True)
class LossFunction:
    """Bounded non-increasing loss on probabilities, mapping [0,1] into [0,M].

    The shifted-log kind is clipped into [0, M]; clipping below at zero
    keeps it convex (pointwise max of a convex function and a constant),
    which the elimination learner requires.
    """

    kind: str
    M: float

    def __post_init__(self):
        if self.kind not in (CAPPED_LOG, SHIFTED_LOG, COVERAGE):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if not (self.M > 0.0 and math.isfinite(self.M)):
            raise ValueError("loss bound M must be positive and finite")
        if self.kind == COVERAGE and self.M != 1.0:
            raise ValueError("coverage loss has M = 1")

    @classmethod
    def capped_log(cls, M: float) -> "LossFunction":
        return cls(CAPPED_LOG, float(M))

    @classmethod
    def shifted_log(cls, M: float) -> "LossFunction":
        return cls(SHIFTED_LOG, float(M))

    @classmethod
    def coverage(cls) -> "LossFunction":
        return cls(COVERAGE, 1.0)

    @property
    def is_convex(self) -> bool:
        return self.kind == SHIFTED_LOG

    def eval(self, qx: float) -> float:
        qx = _check_prob(qx)
        if self.kind == CAPPED_LOG:
            if qx <= 0.0:
                return self.M
            return min(self.M, -math.log(qx)) + 0.0
        if self.kind == SHIFTED_LOG:
            v = -math.log(qx + math.exp(-self.M))
            return min(self.M, max(0.0, v))
        return 1.0 if qx <= SUPPORT_EPS else 0.0

    def eval_array(self, qx: np.ndarray) -> np.ndarray:
        qx = np.asarray(qx, dtype=np.float64)
        if np.any(qx < -_SUM_TOL) or np.any(qx > 1.0 + _SUM_TOL):
            raise ValueError("probability outside [0, 1]")
        qx = np.clip(qx, 0.0, 1.0)
        if self.kind == CAPPED_LOG:
            with np.errstate(divide="ignore"):
                return np.minimum(self.M, -np.log(qx)) + 0.0
        if self.kind == SHIFTED_LOG:
            return np.clip(-np.log(qx + math.exp(-self.M)), 0.0, self.M)
        return (qx <= SUPPORT_EPS).astype(np.float64)

    def to_jsonable(self) -> dict:
        return {"kind": self.kind, "M": self.M}

    @classmethod
    def from_jsonable(cls, obj: dict) -> "LossFunction":
        return cls(obj["kind"], float(obj["M"]))


def _check_prob(qx: float) -> float:
    qx = float(qx)
    if not (-_SUM_TOL <= qx <= 1.0 + _SUM_TOL):
        raise ValueError(f"probability {qx} outside [0, 1]")
    return min(1.0, max(0.0, qx))


class InvalidityOracle:
    """Counted query access to a pointwise invalidity rule.

    The counter increments by exactly one per rule evaluation made
    through the query interface. The raw ``rule`` attribute is public
    for ground-truth evaluation by harness and tests; going through it
    does not count as querying.
    """

    def __init__(self, rule: Callable[[Point], float], *, fractional: bool = False, track_log: bool = False):
        self.rule = rule
        self.fractional = fractional
        self._count = 0
        self._log: list | None = [] if track_log else None

    @property
    def query_count(self) -> int:
        return self._count

    @property
    def query_log(self) -> list | None:
        return self._log

    def reset(self) -> None:
        self._count = 0
        if self._log is not None:
            self._log = []

    def _checked(self, value: float, point) -> float:
        v = float(value)
        if not (0.0 <= v <= 1.0):
            raise ValidgenError(f"invalidity rule returned {v} at {point!r}, outside [0, 1]")
        if not self.fractional and v not in (0.0, 1.0):
            raise ValidgenError(f"binary oracle returned fractional value {v} at {point!r}")
        return v

    def query(self, point: Point) -> float:
        v = self._checked(self.rule(point), point)
        self._count += 1
        if self._log is not None:
            self._log.append(point)
        return v

    def query_many(self, points: Sequence[Point]) -> np.ndarray:
        out = np.empty(len(points), dtype=np.float64)
        for i, pt in enumerate(points):
            out[i] = self._checked(self.rule(pt), pt)
        self._count += len(points)
        if self._log is not None:
            self._log.extend(points)
        return out

    def try_encode_points(self, points: Sequence[Point]) -> np.ndarray | None:
        """Codes for a batched table lookup, or None when unsupported."""
        return None


class TableInvalidityOracle(InvalidityOracle):
    """Oracle backed by an explicit table over a finite point set."""

    def __init__(self, points: Sequence[Point], values: Sequence[float], *, fractional: bool = False, track_log: bool = False):
        self.domain = tuple(points)
        self.values = np.asarray(values, dtype=np.float64)
        if len(self.domain) != len(self.values):
            raise ValueError("points and values length mismatch")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0):
            raise ValueError("invalidity values outside [0, 1]")
        if not fractional and not np.all(np.isin(self.values, (0.0, 1.0))):
            raise ValueError("binary table contains fractional values")
        self._pos = {pt: i for i, pt in enumerate(self.domain)}
        super().__init__(self._lookup, fractional=fractional, track_log=track_log)

    def _lookup(self, point: Point) -> float:
        i = self._pos.get(point)
        if i is None:
            raise KeyError(f"point {point!r} not in oracle table")
        return float(self.values[i])

    def try_encode_points(self, points: Sequence[Point]) -> np.ndarray | None:
        pos = self._pos
        try:
            return np.array([pos[pt] for pt in points], dtype=np.int64)
        except KeyError:
            return None

    def query_codes(self, codes: np.ndarray) -> np.ndarray:
        out = self.values[codes]
        self._count += len(codes)
        if self._log is not None:
            dom = self.domain
            self._log.extend(dom[int(c)] for c in codes)
        return out


class GridInvalidityOracle(InvalidityOracle):
    """Oracle over the integer grid {0..delta-1}^d backed by a dense value array."""

    def __init__(self, values: np.ndarray, d: int, delta: int, *, fractional: bool = False, track_log: bool = False):
        flat = np.asarray(values, dtype=np.float64).reshape(-1)
        if flat.shape[0] != delta**d:
            raise ValueError(f"expected {delta ** d} grid values, got {flat.shape[0]}")
        self.values = flat
        self.d = d
        self.delta = delta
        super().__init__(self._lookup, fractional=fractional, track_log=track_log)

    def _flat_index(self, point) -> int:
        idx = 0
        for c in point:
            c = int(c)
            if c < 0 or c >= self.delta:
                raise KeyError(f"coordinate {c} outside grid of side {self.delta}")
            idx = idx * self.delta + c
        return idx

    def _lookup(self, point: Point) -> float:
        if len(point) != self.d:
            raise KeyError(f"point {point!r} has wrong dimension")
        return float(self.values[self._flat_index(point)])

    def encode_array(self, arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr, dtype=np.int64)
        return np.ravel_multi_index(arr.T, (self.delta,) * self.d).astype(np.int64)

    def try_encode_points(self, points: Sequence[Point]) -> np.ndarray | None:
        try:
            return np.array([self._flat_index(pt) for pt in points], dtype=np.int64)
        except KeyError:
            return None

    def query_codes(self, codes: np.ndarray) -> np.ndarray:
        out = self.values[codes]
        self._count += len(codes)
        if self._log is not None:
            self._log.extend(np.unravel_index(codes, (self.delta,) * self.d))
        return out

    def query_array(self, arr: np.ndarray) -> np.ndarray:
        """Query a batch of points given as an (n, d) integer array."""
        return self.query_codes(self.encode_array(arr))


class VectorRuleOracle(InvalidityOracle):
    """Oracle whose rule also has a vectorized form over (n, d) integer arrays."""

    def __init__(self, rule, rule_array, *, fractional: bool = False, track_log: bool = False):
        self.rule_array = rule_array
        super().__init__(rule, fractional=fractional, track_log=track_log)

    def query_array(self, arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr)
        out = np.asarray(self.rule_array(arr), dtype=np.float64)
        if out.shape[0] != arr.shape[0]:
            raise ValidgenError("vectorized rule returned wrong number of values")
        self._count += arr.shape[0]
        if self._log is not None:
            self._log.extend(tuple(int(v) for v in row) for row in arr)
        return out


def assert_oracle_valid_on(oracle: InvalidityOracle, points: Iterable[Point]) -> None:
    """Require Inv(x) = 0 on every given point, then zero the counter.

    Scenario constructors call this with supp(p): the model assumes the
    target distribution never produces invalid points.
    """
    for pt in points:
        if oracle.query(pt) != 0.0:
            raise ValidgenError(f"support point {pt!r} is invalid; scenarios require Inv = 0 on supp(p)")
    oracle.reset()


# ---------------------------------------------------------------------------
# Loss and invalidity functionals


def loss_eval(loss: LossFunction, qx: float) -> float:
    """Pointwise loss L(q_x)."""
    return loss.eval(qx)


def empirical_loss(q, sample_points: Sequence[Point], loss: LossFunction) -> float:
    """Arithmetic mean of L(q_x) over a positive sample, with multiplicity."""
    if len(sample_points) == 0:
        raise ValueError("empirical loss needs a non-empty sample")
    probs = np.array([q.prob(pt) for pt in sample_points], dtype=np.float64)
    return float(np.mean(loss.eval_array(probs)))


def true_loss(q, p: DiscreteDistribution, loss: LossFunction) -> float:
    """Exact expected loss E_{x~p}[L(q_x)] for an explicit finite p."""
    vals = loss.eval_array(np.array([q.prob(pt) for pt in p.points], dtype=np.float64))
    return float(np.dot(p.probs, vals))


def invalidity(
    q,
    oracle: InvalidityOracle,
    mode: str = "exact",
    *,
    T: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Invalid mass of q, either by exact summation or by Monte Carlo.

    Exact mode enumerates supp(q) and charges one query per support
    point. Monte Carlo draws T samples from q and charges exactly T
    queries.
    """
    if mode == "exact":
        try:
            pts = list(q.support())
        except (AttributeError, ValidgenError) as exc:
            raise ValidgenError(f"exact invalidity needs an enumerable support: {exc}") from exc
        vals = oracle.query_many(pts)
        probs = np.array([q.prob(pt) for pt in pts], dtype=np.float64)
        return float(np.dot(probs, vals))
    if mode == "monte-carlo":
        if T is None or T < 1:
            raise ValueError("monte-carlo mode requires T >= 1")
        if rng is None:
            raise ValueError("monte-carlo mode requires an rng")
        vals = query_samples(oracle, q, T, rng)
        return float(np.mean(vals))
    raise ValueError(f"unknown invalidity mode {mode!r}")


def invalidity_under_rule(q, rule: Callable[[Point], float]) -> float:
    """Exact invalid mass evaluated directly on a rule, without query accounting."""
    pts = list(q.support())
    vals = np.array([float(rule(pt)) for pt in pts], dtype=np.float64)
    probs = np.array([q.prob(pt) for pt in pts], dtype=np.float64)
    return float(np.dot(probs, vals))


def query_samples(oracle: InvalidityOracle, q, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n samples from q and query each once, via the fastest available path."""
    if isinstance(q, DiscreteDistribution):
        codes = q.sample_indices(rng, n)
        oracle_codes = oracle.try_encode_points(q.points)
        if oracle_codes is not None:
            return oracle.query_codes(oracle_codes[codes])
        pts = q.points
        return oracle.query_many([pts[i] for i in codes])
    return oracle.query_many(q.sample(rng, n))


# ---------------------------------------------------------------------------
# Statistical verification and amplification


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the loss/validity check on a candidate distribution."""

    loss_estimate: float
    inv_estimate: float
    samples_used: int
    queries_used: int
    passed: bool
    threshold_loss: float
    threshold_inv: float


def verify_candidate(
    q,
    p_sampler,
    oracle: InvalidityOracle,
    loss: LossFunction,
    eps1: float,
    eps2: float,
    delta: float,
    rng: np.random.Generator,
    *,
    threshold_loss: float,
) -> VerificationReport:
    """Check a candidate against a loss threshold and the 2*eps2 invalidity gate.

    Uses ceil((2 M^2 / eps1^2) ln(4/delta)) samples from p (Hoeffding on
    [0, M] gives a loss estimate within eps1/2 w.p. >= 1 - delta/2) and
    ceil((3/eps2) ln(4/delta)) samples from q, one oracle query each.
    A candidate with true invalid mass <= eps2 passes the 2*eps2 gate
    w.h.p.; one with mass >= 4*eps2 fails w.h.p.
    """
    for name, v in (("eps1", eps1), ("eps2", eps2), ("delta", delta)):
        if not (0.0 < v < 1.0):
            raise ValueError(f"{name} must lie in (0, 1)")
    M = loss.M
    n_loss = math.ceil((2.0 * M * M / (eps1 * eps1)) * math.log(4.0 / delta))
    n_inv = math.ceil((3.0 / eps2) * math.log(4.0 / delta))

    xs = p_sampler.sample(rng, n_loss)
    loss_est = empirical_loss(q, xs, loss)

    before = oracle.query_count
    inv_vals = query_samples(oracle, q, n_inv, rng)
    inv_est = float(np.mean(inv_vals))
    used = oracle.query_count - before

    passed = (loss_est <= threshold_loss) and (inv_est <= 2.0 * eps2)
    return VerificationReport(
        loss_estimate=loss_est,
        inv_estimate=inv_est,
        samples_used=n_loss,
        queries_used=used,
        passed=passed,
        threshold_loss=threshold_loss,
        threshold_inv=2.0 * eps2,
    )


@dataclass
class AmplifyResult:
    candidate: object
    reports: list
    repetitions: int
    total_samples: int
    total_queries: int


def amplify(
    learner: Callable[[np.random.Generator], object],
    verifier: Callable[[object, np.random.Generator], VerificationReport],
    delta: float,
    rng: np.random.Generator,
    max_reps: int | None = None,
) -> AmplifyResult:
    """Repeat a constant-success learner until one output passes verification.

    The default repetition budget ceil(log_{4/3}(1/delta)) drives the
    failure probability of a 3/4-success learner below delta.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    if max_reps is None:
        max_reps = math.ceil(math.log(1.0 / delta) / math.log(4.0 / 3.0))
    if max_reps < 1:
        raise ValueError("max_reps must be at least 1")
    reports: list[VerificationReport] = []
    total_samples = 0
    total_queries = 0
    for rep in range(1, max_reps + 1):
        candidate = learner(rng)
        report = verifier(candidate, rng)
        reports.append(report)
        total_samples += report.samples_used
        total_queries += report.queries_used
        if report.passed:
            return AmplifyResult(candidate, reports, rep, total_samples, total_queries)
    raise AmplificationExhausted(
        f"no candidate passed verification in {max_reps} repetitions", reports=reports
    )
