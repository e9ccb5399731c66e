"""Learners: filtered meta semantics, round bookkeeping, estimator identities,
elimination safety, and the proper box learner."""

import math

import numpy as np
import pytest

from validgen import (
    DiscreteDistribution,
    FilteredMeta,
    FiniteFamily,
    GridInvalidityOracle,
    LearnerParams,
    LossFunction,
    MuPrime,
    TableInvalidityOracle,
    filtered_density,
    filtered_sample,
    gmn_oracle_finite,
    invalidity_under_rule,
    mu_prime_accept_prob,
    partial_validity_learn,
    proper_box_learn,
    true_loss,
    vgm_learn,
)
from validgen.harness import get_builtin


from _oracles import random_meta_rounds as random_rounds, random_partial_instance


class TestFilteredMeta:
    def test_last_round_always_fallback(self):
        rng = np.random.default_rng(0)
        _, rounds = random_rounds(rng)
        meta = FilteredMeta(len(rounds) - 1, rounds, fallback=99)
        assert filtered_density(meta, 99) == pytest.approx(1.0, abs=1e-12)
        draws = meta.sample(np.random.default_rng(1), 200)
        assert all(pt == 99 for pt in draws)
        assert filtered_sample(meta, np.random.default_rng(2)) == 99

    def test_accepted_point_keeps_base_density(self):
        q1 = DiscreteDistribution.uniform_over([0, 1])
        q2 = DiscreteDistribution.uniform_over([1, 2])
        meta = FilteredMeta(0, [q1, q2], fallback=5)
        # 1 is supported by the later round, so its density is q1's
        assert filtered_density(meta, 1) == pytest.approx(0.5, abs=1e-15)
        assert filtered_density(meta, 0) == 0.0
        assert filtered_density(meta, 5) == pytest.approx(0.5, abs=1e-15)

    def test_density_sums_to_one(self):
        for seed in range(30):
            rng = np.random.default_rng(seed)
            domain, rounds = random_rounds(rng)
            meta = FilteredMeta(int(rng.integers(len(rounds))), rounds, fallback=int(rng.integers(10)))
            total = sum(meta.prob(pt) for pt in set(domain) | {meta.fallback})
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_histogram_matches_density(self):
        rng = np.random.default_rng(4)
        domain, rounds = random_rounds(rng, n_rounds=5, n_domain=8)
        meta = FilteredMeta(1, rounds, fallback=3)
        n = 100_000
        draws = meta.sample(np.random.default_rng(5), n)
        pts = sorted(set(domain) | {3})
        emp = np.array([draws.count(pt) / n for pt in pts])
        dens = np.array([meta.prob(pt) for pt in pts])
        assert np.abs(emp - dens).sum() <= 0.02


def small_vgm_instance():
    # domain 0..7; 5 and 6 invalid; p uniform over 0..3
    domain = list(range(8))
    inv = np.zeros(8)
    inv[5] = inv[6] = 1.0
    members = [
        DiscreteDistribution.uniform_over([0, 1, 2, 3, 5]),   # tempting, poisoned
        DiscreteDistribution.uniform_over([0, 1, 2, 3, 6]),   # tempting, poisoned
        DiscreteDistribution.uniform_over([0, 1, 2, 3, 4, 7]),  # clean
        DiscreteDistribution.uniform_over([0, 1]),
    ]
    family = FiniteFamily(members, domain)
    p = DiscreteDistribution.uniform_over([0, 1, 2, 3])
    make_oracle = lambda: TableInvalidityOracle(domain, inv)
    rule = lambda pt: float(inv[pt])
    return family, p, make_oracle, rule


class TestVgmLearn:
    LOSS = LossFunction.capped_log(5.0)

    def test_realizable_returns_near_optimal(self):
        family, p, make_oracle, rule = small_vgm_instance()
        opt = min(
            true_loss(q, p, self.LOSS)
            for q in family.members
            if invalidity_under_rule(q, rule) == 0.0
        )
        for seed in range(10):
            oracle = make_oracle()
            out = vgm_learn(family, None, p, oracle, 0.1, 0.1, LearnerParams(), np.random.default_rng(seed), loss=self.LOSS)
            assert out.kind == "proper"
            assert true_loss(out.distribution, p, self.LOSS) <= opt + 0.1
            assert invalidity_under_rule(out.distribution, rule) == 0.0

    def test_round_and_query_budget(self):
        family, p, make_oracle, _ = small_vgm_instance()
        params = LearnerParams()
        R = params.resolve_R(5.0, 0.1)
        T = params.resolve_T(R, 0.1, len(family))
        assert R == math.ceil(32 * 5.0 / 0.1)
        oracle = make_oracle()
        out = vgm_learn(family, None, p, oracle, 0.1, 0.1, params, np.random.default_rng(0), loss=self.LOSS)
        assert out.rounds_used <= R
        assert out.oracle_queries <= R * T
        assert out.oracle_queries == out.rounds_used * T == oracle.query_count

    def test_negatives_grow_and_are_invalid(self):
        family, p, make_oracle, rule = small_vgm_instance()
        seen = []

        def recording_oracle(positives, negatives):
            seen.append(list(negatives))
            return gmn_oracle_finite(family, positives, negatives, self.LOSS)

        oracle = make_oracle()
        params = LearnerParams(P=400, R=10, T=300)
        out = vgm_learn(family, recording_oracle, p, oracle, 0.1, 0.1, params, np.random.default_rng(2), loss=self.LOSS)
        # weakly growing negative sets, all of whose members are invalid,
        # and every candidate avoids the negatives it was given
        for earlier, later in zip(seen, seen[1:]):
            assert set(earlier) <= set(later)
        for negs in seen:
            assert all(rule(pt) == 1.0 for pt in negs)
        assert out.kind == "proper"

    def test_meta_branch_when_rounds_too_few(self):
        family, p, make_oracle, rule = small_vgm_instance()
        params = LearnerParams(P=200, R=1, T=400)
        oracle = make_oracle()
        out = vgm_learn(family, None, p, oracle, 0.1, 0.1, params, np.random.default_rng(3), loss=self.LOSS)
        assert out.kind == "filtered-meta"
        assert out.rounds_used == 1
        meta = out.distribution
        # single round: acceptance set empty, everything lands on the fallback
        assert filtered_density(meta, meta.fallback) == pytest.approx(1.0, abs=1e-12)

    def test_determinism(self):
        family, p, make_oracle, _ = small_vgm_instance()
        outs = []
        for _ in range(2):
            oracle = make_oracle()
            out = vgm_learn(family, None, p, oracle, 0.1, 0.1, LearnerParams(), np.random.default_rng(7), loss=self.LOSS)
            outs.append((out.chosen_index, out.rounds_used, out.oracle_queries))
        assert outs[0] == outs[1]

    def test_fractional_oracle_rejected(self):
        family, p, _, _ = small_vgm_instance()
        oracle = TableInvalidityOracle(list(range(8)), [0.0, 0.5, 0, 0, 0, 1, 1, 0], fractional=True)
        with pytest.raises(ValueError):
            vgm_learn(family, None, p, oracle, 0.1, 0.1, LearnerParams(), np.random.default_rng(0), loss=self.LOSS)




class TestEstimatorIdentity:
    def test_exact_identity_and_weight_cap(self):
        # E_{x~mu}[inv(x) w(x) I] equals the invalidity of the filtered member,
        # exactly, on random instances; and surviving weights stay under 3M/eps1
        eps1, M = 0.3, 5.0
        cap = 3.0 * M / eps1
        for seed in range(100):
            rng = np.random.default_rng(seed)
            family, inv = random_partial_instance(rng)
            k = int(rng.integers(1, len(family) + 1))
            D = sorted(map(int, rng.choice(len(family), k, replace=False)))
            rows = family.prob_matrix[D]
            mu = rows.mean(axis=0)
            for local, qi in enumerate(D):
                q = rows[local]
                with np.errstate(divide="ignore", invalid="ignore"):
                    w = np.where(mu > 0, q / mu, np.inf)
                keep = (w < cap) & (mu > 0)
                w_kept = np.where(keep, w, 0.0)
                lhs = float(np.sum(mu * inv * w_kept))
                rhs = float(np.sum(np.where(w < cap, q * inv, 0.0)))  # Inv(q'), fallback is valid
                assert abs(lhs - rhs) <= 1e-9
                assert np.all(w_kept <= cap)

    def test_markov_filter_bound(self):
        eps1, M = 0.3, 5.0
        for seed in range(100):
            rng = np.random.default_rng(1_000 + seed)
            family, _ = random_partial_instance(rng)
            k = int(rng.integers(1, len(family) + 1))
            D = [family.members[i] for i in sorted(map(int, rng.choice(len(family), k, replace=False)))]
            mu = np.mean([[q.prob(x) for x in family.domain] for q in D], axis=0)
            for j, x in enumerate(family.domain):
                if mu[j] > 0:
                    pi = mu_prime_accept_prob(D, eps1, M, x)
                    assert 1.0 - pi <= eps1 / (3.0 * M) + 1e-15

    def test_accept_prob_degenerate_point(self):
        D = [DiscreteDistribution.uniform_over([0, 1])]
        assert mu_prime_accept_prob(D, 0.3, 5.0, 7) == 1.0

    def test_accept_prob_single_member(self):
        D = [DiscreteDistribution.uniform_over([0, 1])]
        assert mu_prime_accept_prob(D, 0.3, 5.0, 0) == 1.0

    def test_accept_prob_two_member_example(self):
        # q1(x) = 0, q2(x) = 2t: both clear the cap whenever 2 eps1 < 3M
        t = 0.2
        q1 = DiscreteDistribution.from_probs([0, 1], [1.0, None or 0.0] if False else [1.0 - 1e-6, 1e-6])
        q1 = DiscreteDistribution.point_mass(1)
        q2 = DiscreteDistribution.from_probs([0, 1], [2 * t, 1.0 - 2 * t])
        assert mu_prime_accept_prob([q1, q2], 0.3, 5.0, 0) == 1.0


class TestMuPrime:
    def test_single_member_is_member(self):
        q = DiscreteDistribution.from_probs([0, 1, 2], [0.5, 0.3, 0.2])
        mp = MuPrime([q], fallback=0, eps1=0.3, M=5.0)
        for x in (0, 1, 2):
            assert mp.prob(x) == pytest.approx(q.prob(x), abs=1e-15)
        assert mp.accept_prob(1) == 1.0

    def test_density_sums_to_one(self):
        rng = np.random.default_rng(9)
        for seed in range(20):
            r = np.random.default_rng(seed)
            family, _ = random_partial_instance(r)
            k = int(r.integers(1, len(family) + 1))
            members = [family.members[i] for i in r.choice(len(family), k, replace=False)]
            mp = MuPrime(members, fallback=0, eps1=0.3, M=5.0)
            pts = set(family.domain) | {0}
            assert sum(mp.prob(x) for x in pts) == pytest.approx(1.0, abs=1e-9)

    def test_sampling_matches_density(self):
        q1 = DiscreteDistribution.from_probs([0, 1], [0.7, 0.3])
        q2 = DiscreteDistribution.from_probs([1, 2], [0.4, 0.6])
        mp = MuPrime([q1, q2], fallback=0, eps1=0.3, M=5.0)
        n = 50_000
        draws = mp.sample(np.random.default_rng(12), n)
        for x in (0, 1, 2):
            assert abs(draws.count(x) / n - mp.prob(x)) < 0.02


class TestPartialValidity:
    def _scenario(self):
        return get_builtin("partial-synthetic")

    def test_requires_convex_loss(self):
        s = self._scenario()
        env = s.make_env(np.random.default_rng(0))
        with pytest.raises(ValueError):
            partial_validity_learn(
                env.family, env.p, env.oracle, s.eps1, s.eps2, s.alpha,
                s.params, np.random.default_rng(0), loss=LossFunction.capped_log(5.0), x_star=(0,),
            )

    def test_meets_guarantee_on_builtin(self):
        s = self._scenario()
        rng0 = np.random.default_rng(s.base_seed)
        env0 = s.make_env(rng0)
        opt = min(
            true_loss(q, env0.p, s.loss)
            for q in env0.family.members
            if invalidity_under_rule(q, env0.rule) <= s.alpha
        )
        wins = 0
        for seed in range(5):
            rng = np.random.default_rng(seed)
            env = s.make_env(rng)
            out = partial_validity_learn(
                env.family, env.p, env.oracle, s.eps1, s.eps2, s.alpha,
                s.params, rng, loss=s.loss, x_star=s.x_star,
            )
            assert out.kind == "mu-prime"
            lt = true_loss(out.distribution, env.p, s.loss)
            it = invalidity_under_rule(out.distribution, env.rule)
            wins += (lt <= opt + s.eps1) and (it <= s.alpha + s.eps2)
        assert wins >= 4

    def test_elimination_safety_instrumented(self):
        # the alpha-feasible optimum is only ever removed when its
        # estimate errs by more than eps2/5
        s = self._scenario()
        rng = np.random.default_rng(123)
        env = s.make_env(rng)
        feasible = [
            (i, true_loss(q, env.p, s.loss))
            for i, q in enumerate(env.family.members)
            if invalidity_under_rule(q, env.rule) <= s.alpha
        ]
        star = min(feasible, key=lambda t: t[1])[0]
        out = partial_validity_learn(
            env.family, env.p, env.oracle, s.eps1, s.eps2, s.alpha,
            s.params, rng, loss=s.loss, x_star=s.x_star,
        )
        mat = env.family.prob_matrix
        inv_vec = np.array([env.rule(pt) for pt in env.family.domain])
        cap = 3.0 * s.loss.M / s.eps1
        for level in out.history:
            for it in level["iterations"]:
                if it["returned"] or star not in it["survivors"]:
                    continue
                local = it["survivors"].index(star)
                if star in it["removed"]:
                    rows = mat[it["survivors"]]
                    mu = rows.mean(axis=0)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        w = np.where(mu > 0, rows[local] / mu, np.inf)
                    exact = float(np.sum(np.where((w < cap) & (mu > 0), mat[star] * inv_vec, 0.0)))
                    assert abs(it["estimates"][local] - exact) > s.eps2 / 5.0

    def test_weight_cap_audited(self):
        s = self._scenario()
        rng = np.random.default_rng(5)
        env = s.make_env(rng)
        out = partial_validity_learn(
            env.family, env.p, env.oracle, s.eps1, s.eps2, s.alpha,
            s.params, rng, loss=s.loss, x_star=s.x_star,
        )
        cap = 3.0 * s.loss.M / s.eps1
        for level in out.history:
            for it in level["iterations"]:
                if "max_weight" in it:
                    assert it["max_weight"] <= cap

    def test_use_cover_variant_runs(self):
        s = self._scenario()
        rng = np.random.default_rng(11)
        env = s.make_env(rng)
        out = partial_validity_learn(
            env.family, env.p, env.oracle, s.eps1, s.eps2, s.alpha,
            s.params, rng, loss=s.loss, x_star=s.x_star, use_cover=True,
        )
        assert out.kind == "mu-prime"
        it = invalidity_under_rule(out.distribution, env.rule)
        assert it <= s.alpha + 2 * s.eps2

    def test_single_member_family_returns_member(self):
        q = DiscreteDistribution.uniform_over([0, 1, 2])
        family = FiniteFamily([q], [0, 1, 2, 3])
        oracle = TableInvalidityOracle([0, 1, 2, 3], [0.0, 0.0, 0.0, 1.0], fractional=True)
        p = DiscreteDistribution.uniform_over([0, 1, 2])
        out = partial_validity_learn(
            family, p, oracle, 0.3, 0.2, 0.1, LearnerParams(n1=500, n2=500),
            np.random.default_rng(0), loss=LossFunction.shifted_log(5.0), x_star=0,
        )
        mp = out.distribution
        for x in (0, 1, 2, 3):
            assert mp.prob(x) == pytest.approx(q.prob(x), abs=1e-12)


class TestProperBox:
    def test_whole_grid_valid(self):
        delta = 8
        cells = [(x, y) for x in range(delta) for y in range(delta)]
        p = DiscreteDistribution.uniform_over(cells)
        oracle = GridInvalidityOracle(np.zeros(delta * delta), d=2, delta=delta)
        loss = LossFunction.capped_log(5.0)
        out = proper_box_learn(p, oracle, 0.4, 0.1, 2, delta, loss, np.random.default_rng(0),
                               params=LearnerParams(P=2000))
        box = out.distribution
        best = math.log(delta * delta)  # full box covers everything
        assert true_loss(box, p, loss) <= best + 0.4

    def test_query_accounting_bound(self):
        delta = 6
        valid = np.zeros((delta, delta))
        valid[4:, :] = 1.0  # top rows invalid
        cells = [(x, y) for x in range(4) for y in range(delta)]
        p = DiscreteDistribution.uniform_over(cells)
        oracle = GridInvalidityOracle(valid.reshape(-1), d=2, delta=delta)
        out = proper_box_learn(p, oracle, 0.4, 0.1, 2, delta, LossFunction.capped_log(5.0),
                               np.random.default_rng(1), params=LearnerParams(P=1500))
        n_test = out.resolved["n_test"]
        n_cand = out.resolved["candidates"]
        assert out.oracle_queries <= n_cand * n_test
        assert n_test == math.ceil((1 / 0.1) * (math.log(8) + 4 * math.log(1500)))
        assert invalidity_under_rule(out.distribution, lambda pt: float(valid[pt[0], pt[1]])) == 0.0


class TestErrorPaths:
    def test_empty_positive_sample_rejected(self):
        family, p, make_oracle, _ = small_vgm_instance()
        with pytest.raises(ValueError):
            vgm_learn(family, None, p, make_oracle(), 0.1, 0.1,
                      LearnerParams(P=0, R=4, T=50), np.random.default_rng(0),
                      loss=LossFunction.capped_log(5.0))

    def test_no_candidate_survived(self):
        from validgen import NoCandidateSurvived

        domain = [0, 1, 2, 3]
        members = [
            DiscreteDistribution.uniform_over([2, 3]),
            DiscreteDistribution.from_probs([2, 3], [0.7, 0.3]),
        ]
        family = FiniteFamily(members, domain)
        oracle = TableInvalidityOracle(domain, [0.0, 0.0, 1.0, 1.0], fractional=True)
        p = DiscreteDistribution.uniform_over([0, 1])
        with pytest.raises(NoCandidateSurvived) as err:
            partial_validity_learn(
                family, p, oracle, 0.3, 0.1, 0.05, LearnerParams(n1=400, n2=400),
                np.random.default_rng(0), loss=LossFunction.shifted_log(5.0), x_star=0,
            )
        assert err.value.history  # per-level elimination diagnostics

    def test_exact_invalidity_needs_enumerable_support(self):
        from validgen import InvalidityOracle, ValidgenError, invalidity, ngram_gmn_greedy

        model = ngram_gmn_greedy(["{}", "a"], [], 1, ("{", "}", "a"), 6, LossFunction.capped_log(5.0))
        oracle = InvalidityOracle(lambda s: 0.0)
        with pytest.raises(ValidgenError):
            invalidity(model, oracle, "exact")
