import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from imital import alcore, evaluation, learner, policy
from imital.errors import EmptyCurve, LengthMismatch, MissingModel
from conftest import make_blobs


def brute_force_wilcoxon(xs, ys):
    """Enumerate all 2^n sign assignments of the nonzero differences."""
    d = np.asarray(xs, dtype=np.float64) - np.asarray(ys, dtype=np.float64)
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return 1.0
    ranks = evaluation._midranks(np.abs(d))
    w_plus = ranks[d > 0].sum()
    at_most = at_least = 0
    for signs in itertools.product([0, 1], repeat=n):
        w = sum(r for s, r in zip(signs, ranks) if s)
        if w <= w_plus + 1e-9:
            at_most += 1
        if w >= w_plus - 1e-9:
            at_least += 1
    return min(1.0, 2.0 * min(at_most, at_least) / 2**n)


class TestF1Auc:
    def test_mean_of_curve(self):
        assert evaluation.f1_auc([0.2, 0.4, 0.6]) == pytest.approx(0.4)

    def test_accepts_learning_curve(self):
        curve = alcore.LearningCurve(f1_per_cycle=[0.5, 1.0])
        assert evaluation.f1_auc(curve) == pytest.approx(0.75)

    def test_empty_raises(self):
        with pytest.raises(EmptyCurve):
            evaluation.f1_auc([])

    def test_dominating_curve_scores_higher(self):
        lo = [0.1, 0.2, 0.3]
        hi = [0.2, 0.3, 0.4]
        assert evaluation.f1_auc(hi) > evaluation.f1_auc(lo)


class TestWilcoxon:
    def test_worked_example_n5(self):
        # five all-positive differences: p = 2 / 2^5
        xs = [1.0, 2.0, 3.0, 4.0, 5.0]
        ys = [0.0, 1.0, 2.0, 3.0, 4.5]
        assert evaluation.wilcoxon_signed_rank(xs, ys) == pytest.approx(0.0625)

    def test_worked_example_n6(self):
        xs = np.arange(6, dtype=np.float64) + 1.0
        ys = xs - np.array([0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
        assert evaluation.wilcoxon_signed_rank(xs, ys) == pytest.approx(0.03125)

    def test_identical_samples_give_one(self):
        xs = [0.3, 0.7, 0.9]
        assert evaluation.wilcoxon_signed_rank(xs, xs) == 1.0

    def test_single_difference(self):
        assert evaluation.wilcoxon_signed_rank([1.0], [0.0]) == 1.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for n in range(3, 13):
            for _ in range(5):
                xs = rng.integers(0, 6, size=n) / 5.0  # force ties and zeros
                ys = rng.integers(0, 6, size=n) / 5.0
                got = evaluation.wilcoxon_signed_rank(xs, ys)
                want = brute_force_wilcoxon(xs, ys)
                assert got == pytest.approx(want, abs=1e-12), (xs, ys)

    def test_rejects_large_n(self):
        xs = np.arange(26, dtype=np.float64)
        with pytest.raises(ValueError):
            evaluation.wilcoxon_signed_rank(xs, xs + 1.0)

    def test_rejects_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            evaluation.wilcoxon_signed_rank([1.0, 2.0], [1.0])

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.floats(0.0, 1.0, allow_nan=False), min_size=2, max_size=10
        ),
        st.integers(0, 2**31),
    )
    def test_symmetry_and_range(self, xs, seed):
        ys = np.random.default_rng(seed).random(len(xs))
        p_ab = evaluation.wilcoxon_signed_rank(xs, ys)
        p_ba = evaluation.wilcoxon_signed_rank(ys, xs)
        assert 0.0 < p_ab <= 1.0
        assert p_ab == pytest.approx(p_ba, abs=1e-12)


class TestWinTieLoss:
    def test_identical_curves_all_tie(self):
        curves = [[0.1 * i, 0.2 * i, 0.3 * i] for i in range(1, 6)]
        wtl = evaluation.win_tie_loss(curves, curves)
        assert (wtl.win, wtl.tie, wtl.loss) == (0.0, 100.0, 0.0)

    def test_dominating_curves_all_win(self):
        lo = [[0.1 * (c + 1) for c in range(6)] for _ in range(4)]
        hi = [[v + 0.2 for v in curve] for curve in lo]
        wtl = evaluation.win_tie_loss(hi, lo)
        assert (wtl.win, wtl.tie, wtl.loss) == (100.0, 0.0, 0.0)
        assert evaluation.win_tie_loss(lo, hi).loss == 100.0

    def test_alpha_boundary_is_tie(self):
        # n=5 uniform shift: p = 0.0625, a tie at alpha 0.0625 but not 0.063
        a = [[1.0, 2.0, 3.0, 4.0, 5.0]]
        b = [[0.5, 1.5, 2.5, 3.5, 4.5]]
        assert evaluation.win_tie_loss(a, b, alpha=0.0625).tie == 100.0
        assert evaluation.win_tie_loss(a, b, alpha=0.063).win == 100.0

    def test_counts_sum_to_n(self):
        rng = np.random.default_rng(3)
        a = [list(rng.random(8)) for _ in range(7)]
        b = [list(rng.random(8)) for _ in range(7)]
        wtl = evaluation.win_tie_loss(a, b)
        assert sum(wtl.counts()) == wtl.n == 7

    def test_rejects_mismatch(self):
        with pytest.raises(LengthMismatch):
            evaluation.win_tie_loss([[0.1]], [])


class TestCompetitionRanks:
    def test_three_distinct_means(self):
        assert evaluation.competition_ranks([0.745, 0.736, 0.737]) == [1, 3, 2]

    def test_bit_equal_share_rank(self):
        assert evaluation.competition_ranks([0.5, 0.7, 0.5]) == [2, 1, 2]

    def test_all_equal(self):
        assert evaluation.competition_ranks([0.4, 0.4]) == [1, 1]

    def test_nearly_equal_stay_distinct(self):
        ranks = evaluation.competition_ranks([0.5, 0.5 + 1e-12])
        assert sorted(ranks) == [1, 2]


class TestStrategies:
    def _pool(self, n=40):
        ds = make_blobs(n=n, seed=0)
        cfg = learner.TrainConfig(epochs=3, seed=0)
        return alcore.init_pool(ds, np.random.default_rng(0), cfg)

    def test_counter_values(self):
        pool = self._pool()  # 38 unlabeled
        u = len(pool.unlabeled)
        cases = {
            "random": 0,
            "lc": u,
            "entropy": u,
            "qbc": u,
            "gd": u + (u - 1) + (u - 2),
        }
        test = make_blobs(n=20, seed=1)
        model = policy.init_policy(20, layout=(8,), seed=0)
        for name, expected in cases.items():
            s = evaluation.make_strategy(name, test=test, model=model)
            assert s.evaluation_count(pool, 3) == expected
        for name in ("imital", "expert"):
            s = evaluation.make_strategy(name, test=test, model=model, j=2, k=20)
            assert s.evaluation_count(pool, 3) == 2 * 20
            s = evaluation.make_strategy(name, test=test, model=model, j=2, k=50)
            assert s.evaluation_count(pool, 3) == 2 * u

    def test_imital_requires_model(self):
        with pytest.raises(MissingModel):
            evaluation.make_strategy("imital")

    def test_expert_requires_test_split(self):
        with pytest.raises(ValueError):
            evaluation.make_strategy("expert")

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            evaluation.make_strategy("margin")


class TestRunExperiment:
    def _experiment(self, names, reps=2, seed=7):
        ds = make_blobs(n=80, seed=2)
        cfg = learner.TrainConfig(epochs=4, seed=0)
        return evaluation.run_experiment(
            ds, names, reps=reps, b=3, cycles=2, seed=seed, learner_cfg=cfg
        )

    def test_shapes_and_pairing(self):
        result = self._experiment(["random", "lc"])
        assert len(result.initial_pools) == 2
        for res in result.strategies:
            assert len(res.curves) == 2
            for curve in res.curves:
                assert len(curve.f1_per_cycle) == 2
        # paired design: all strategies start each rep from the same pool
        for res in result.strategies:
            for rep, log in enumerate(res.logs):
                assert log.initial_labeled == result.initial_pools[rep]

    def test_deterministic(self):
        a = self._experiment(["random", "gd"])
        b = self._experiment(["random", "gd"])
        for ra, rb in zip(a.strategies, b.strategies):
            assert [c.f1_per_cycle for c in ra.curves] == [
                c.f1_per_cycle for c in rb.curves
            ]

    def test_ranks_are_assigned(self):
        result = self._experiment(["random", "lc", "gd"])
        ranks = sorted(res.rank for res in result.strategies)
        assert ranks[0] == 1 and set(ranks) <= {1, 2, 3}

    def test_rejects_zero_reps(self):
        with pytest.raises(ValueError):
            self._experiment(["random"], reps=0)


class TestBenchRuntime:
    def test_rows_and_counts(self):
        rows = evaluation.bench_runtime(
            [30, 60], ["random", "lc"], cycles=2, b=2, seed=0,
            learner_cfg=learner.TrainConfig(epochs=2, seed=0),
        )
        assert len(rows) == 2 * 2 * 2
        by = {(r[0], r[1], r[2]): r for r in rows}
        assert by[(30, "lc", 0)][3] == 30
        assert by[(30, "lc", 1)][3] == 28
        assert by[(60, "random", 0)][3] == 0
        assert all(r[4] >= 0.0 for r in rows)

    def test_rejects_unsorted_sizes(self):
        with pytest.raises(ValueError):
            evaluation.bench_runtime([60, 30], ["random"], 1, 1, 0)


class TestReport:
    def test_contains_ranks_and_wtl(self):
        ds = make_blobs(n=80, seed=2)
        cfg = learner.TrainConfig(epochs=4, seed=0)
        result = evaluation.run_experiment(
            ds, ["random", "lc"], reps=2, b=3, cycles=2, seed=1, learner_cfg=cfg
        )
        text, results_rows, curve_rows = evaluation.report(result)
        assert "win/tie/loss of random" in text
        assert [r[0] for r in results_rows] == ["random", "lc"]
        assert len(curve_rows) == 2 * 2 * 2
        ranks = {r[0]: r[2] for r in results_rows}
        assert sorted(ranks.values()) in ([1, 2], [1, 1])

    def test_single_strategy_no_wtl(self):
        ds = make_blobs(n=60, seed=2)
        cfg = learner.TrainConfig(epochs=3, seed=0)
        result = evaluation.run_experiment(
            ds, ["random"], reps=1, b=2, cycles=2, seed=1, learner_cfg=cfg
        )
        text, rows, _ = evaluation.report(result)
        assert "win/tie/loss" not in text
        assert len(rows) == 1

    def test_empty_result(self):
        empty = evaluation.ExperimentResult(
            strategies=[], reps=0, cycles=0, b=0, seed=0
        )
        assert evaluation.report(empty) == ("", [], [])
