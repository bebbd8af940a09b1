"""Experiment harness: repeated seeded episodes, F1-AUC aggregation,
exact Wilcoxon signed-rank statistics and runtime/counter tables."""

from dataclasses import dataclass, field

import numpy as np

from . import alcore, expert as expert_mod, learner as learner_mod, policy as policy_mod
from .errors import EmptyCurve, LengthMismatch, MissingModel

WILCOXON_MAX_N = 25
DEFAULT_ALPHA = 0.05


# ---------------------------------------------------------------- metrics


def f1_auc(curve):
    """Mean per-cycle macro-F1: the rectangle-rule area under the learning
    curve divided by the perfect-score rectangle."""
    values = curve.f1_per_cycle if isinstance(curve, alcore.LearningCurve) else curve
    if len(values) == 0:
        raise EmptyCurve("empty learning curve")
    return float(np.mean(values))


def _midranks(values):
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def wilcoxon_signed_rank(xs, ys):
    """Exact two-sided p-value of the paired signed-rank test.

    Zero differences are discarded, tied magnitudes get midranks, and the
    exact null distribution of the positive-rank sum is built by dynamic
    programming over the 2^n equiprobable sign assignments.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise LengthMismatch("paired samples must be 1-d and equally long")
    if xs.size > WILCOXON_MAX_N:
        raise ValueError(f"exact test limited to n <= {WILCOXON_MAX_N}")
    d = xs - ys
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        return 1.0
    # doubled midranks are integers, which keeps the DP lattice exact
    doubled = np.rint(2.0 * _midranks(np.abs(d))).astype(np.int64)
    w_plus = int(doubled[d > 0.0].sum())
    total = int(doubled.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled:
        counts[r:] += counts[: total + 1 - r].copy()
    n_assignments = 2.0**n
    cdf_le = counts[: w_plus + 1].sum() / n_assignments
    cdf_ge = counts[w_plus:].sum() / n_assignments
    return float(min(1.0, 2.0 * min(cdf_le, cdf_ge)))


@dataclass
class WTLResult:
    win: float
    tie: float
    loss: float
    n: int

    def counts(self):
        return (
            round(self.win * self.n / 100.0),
            round(self.tie * self.n / 100.0),
            round(self.loss * self.n / 100.0),
        )


def win_tie_loss(curves_a, curves_b, alpha=DEFAULT_ALPHA):
    """Per-repetition Wilcoxon verdicts between two paired curve sets.

    p >= alpha counts as a tie; otherwise the higher curve mean decides
    win (a) or loss (b).
    """
    if len(curves_a) != len(curves_b) or not curves_a:
        raise LengthMismatch("need equally many (and > 0) paired curves")
    win = tie = loss = 0
    for a, b in zip(curves_a, curves_b):
        va = np.asarray(a.f1_per_cycle if isinstance(a, alcore.LearningCurve) else a)
        vb = np.asarray(b.f1_per_cycle if isinstance(b, alcore.LearningCurve) else b)
        p = wilcoxon_signed_rank(va, vb)
        if p >= alpha:
            tie += 1
        elif va.mean() > vb.mean():
            win += 1
        else:
            loss += 1
    n = len(curves_a)
    return WTLResult(win=100.0 * win / n, tie=100.0 * tie / n, loss=100.0 * loss / n, n=n)


# ---------------------------------------------------------------- strategies


class Strategy:
    """Named query strategy with an analytic candidate-evaluation counter."""

    def __init__(self, name, fn, counter):
        self.name = name
        self._fn = fn
        self._counter = counter

    def __call__(self, pool, b, rng):
        return self._fn(pool, b, rng)

    def evaluation_count(self, pool, b):
        return self._counter(pool, b)


def make_strategy(name, *, model=None, test=None, j=policy_mod.APPLICATION_J, k=policy_mod.DEFAULT_K):
    """Build a Strategy by CLI identifier.

    `imital` needs a trained policy model; `expert` needs the ground-truth
    test split its rewards are evaluated on.
    """
    pool_size = lambda pool, b: len(pool.unlabeled)
    preselect_size = lambda pool, b: j * min(k, len(pool.unlabeled))
    if name == "random":
        return Strategy(name, alcore.random_query, lambda pool, b: 0)
    if name == "lc":
        return Strategy(name, lambda p, b, r: alcore.lc_query(p, b), pool_size)
    if name == "entropy":
        return Strategy(name, lambda p, b, r: alcore.entropy_query(p, b), pool_size)
    if name == "qbc":
        return Strategy(name, alcore.qbc_query, pool_size)
    if name == "gd":
        return Strategy(
            name,
            lambda p, b, r: alcore.gd_query(p, b),
            lambda pool, b: sum(
                len(pool.unlabeled) - i for i in range(min(b, len(pool.unlabeled)))
            ),
        )
    if name == "imital":
        if model is None:
            raise MissingModel("the imital strategy needs a trained policy model")
        return Strategy(
            name,
            lambda p, b, r: policy_mod.imital_query(p, model, j, k, b, r),
            preselect_size,
        )
    if name == "expert":
        if test is None:
            raise ValueError("the expert strategy needs the held-out test split")
        return Strategy(
            name,
            lambda p, b, r: expert_mod.expert_query(p, j, k, b, test, r),
            preselect_size,
        )
    raise ValueError(f"unknown strategy {name!r}")


# ---------------------------------------------------------------- harness


@dataclass
class StrategyResult:
    name: str
    curves: list
    logs: list
    mean_f1auc: float = 0.0
    rank: int = 0
    mean_query_seconds: float = 0.0
    mean_candidates_per_cycle: float = 0.0


@dataclass
class ExperimentResult:
    strategies: list
    reps: int
    cycles: int
    b: int
    seed: int
    initial_pools: list = field(default_factory=list)


def competition_ranks(means):
    """1 = best (largest mean); bit-equal values share the lower rank."""
    means = np.asarray(means)
    ranks = np.empty(means.size, dtype=np.int64)
    order = np.argsort(-means, kind="stable")
    for pos, idx in enumerate(order):
        if pos > 0 and means[idx] == means[order[pos - 1]]:
            ranks[idx] = ranks[order[pos - 1]]
        else:
            ranks[idx] = pos + 1
    return [int(r) for r in ranks]


def run_experiment(
    dataset,
    strategy_names,
    reps,
    b,
    cycles,
    seed,
    learner_cfg=None,
    *,
    model=None,
    j=policy_mod.APPLICATION_J,
    k=policy_mod.DEFAULT_K,
):
    """Repeated paired episodes: every strategy sees the identical split and
    initial pool in each repetition."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    base_cfg = learner_cfg or learner_mod.TrainConfig()
    results = [StrategyResult(name=n, curves=[], logs=[]) for n in strategy_names]
    initial_pools = []
    from .synthgen import split as split_fn

    for rep in range(reps):
        split_rng = np.random.default_rng(np.random.SeedSequence((seed, rep, 0)))
        train, test = split_fn(dataset, 0.5, split_rng)
        cfg = learner_mod.TrainConfig(
            epochs=base_cfg.epochs,
            minibatch_size=base_cfg.minibatch_size,
            learning_rate=base_cfg.learning_rate,
            seed=int(np.random.default_rng((seed, rep, 1)).integers(2**31)),
        )
        pool0 = alcore.init_pool(
            train, np.random.default_rng(np.random.SeedSequence((seed, rep, 2))), cfg
        )
        initial_pools.append(list(pool0.labeled))
        for si, res in enumerate(results):
            strategy = make_strategy(res.name, model=model, test=test, j=j, k=k)
            pool = pool0.copy()
            rng = np.random.default_rng(np.random.SeedSequence((seed, rep, 3, si)))
            log = alcore.al_loop(pool, strategy, b, cycles, test, rng)
            res.curves.append(log.curve)
            res.logs.append(log)
    for res in results:
        res.mean_f1auc = float(np.mean([f1_auc(c) for c in res.curves]))
        res.mean_query_seconds = float(
            np.mean([t for log in res.logs for t in log.query_seconds])
        )
        res.mean_candidates_per_cycle = float(
            np.mean([c for log in res.logs for c in log.candidates_evaluated])
        )
    for res, rank in zip(results, competition_ranks([r.mean_f1auc for r in results])):
        res.rank = rank
    return ExperimentResult(
        strategies=results,
        reps=reps,
        cycles=cycles,
        b=b,
        seed=seed,
        initial_pools=initial_pools,
    )


def bench_pool_dataset(pool_size, seed, n_features=10, test_size=500):
    """Two-blob dataset sized so the initial pool has exactly `pool_size`
    unlabeled samples (plus one labeled seed per class)."""
    from .synthgen import Dataset, minmax_scale

    rng = np.random.default_rng(seed)
    n = pool_size + 2 + test_size
    half = n // 2
    X = np.vstack(
        [
            rng.standard_normal((half, n_features)),
            rng.standard_normal((n - half, n_features)) + 4.0,
        ]
    )
    y = np.concatenate([np.zeros(half, np.int64), np.ones(n - half, np.int64)])
    perm = rng.permutation(n)
    ds = Dataset(minmax_scale(X[perm]), y[perm], 2)
    train_rows = np.arange(pool_size + 2)
    test_rows = np.arange(pool_size + 2, n)
    train = Dataset(ds.features[train_rows], ds.labels[train_rows], 2)
    test = Dataset(ds.features[test_rows], ds.labels[test_rows], 2)
    return train, test


def bench_runtime(
    sizes,
    strategy_names,
    cycles,
    b,
    seed,
    *,
    model=None,
    j=policy_mod.APPLICATION_J,
    k=policy_mod.DEFAULT_K,
    learner_cfg=None,
):
    """Per (pool size, strategy): per-cycle query times and candidate counts.

    Returns rows (size, strategy, cycle, candidates_evaluated, seconds).
    """
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be ascending")
    rows = []
    for size in sizes:
        train, test = bench_pool_dataset(size, seed)
        cfg = learner_cfg or learner_mod.TrainConfig(epochs=10, seed=seed)
        for si, name in enumerate(strategy_names):
            strategy = make_strategy(name, model=model, test=test, j=j, k=k)
            pool = alcore.init_pool(
                train, np.random.default_rng(np.random.SeedSequence((seed, size))), cfg
            )
            rng = np.random.default_rng(np.random.SeedSequence((seed, size, si)))
            log = alcore.al_loop(pool, strategy, b, cycles, test, rng)
            for cycle, (cnt, sec) in enumerate(
                zip(log.candidates_evaluated, log.query_seconds)
            ):
                rows.append((size, name, cycle, cnt, sec))
    return rows


def report(result, alpha=DEFAULT_ALPHA):
    """Render rank/WTL/runtime tables.

    Returns (text, results_rows, curve_rows): results_rows are
    (name, mean_f1auc, rank, mean_query_seconds, candidates_per_cycle),
    curve_rows are (strategy, rep, cycle, f1).  Percentages are displayed
    with one decimal; ranks come from the unrounded means.  WTL compares the
    first listed strategy against every other.
    """
    lines = []
    results_rows = []
    curve_rows = []
    if not result.strategies:
        return "", results_rows, curve_rows
    lines.append("strategy        mean F1-AUC %   rank   query s/cycle   candidates/cycle")
    for res in result.strategies:
        lines.append(
            f"{res.name:<15} {100.0 * res.mean_f1auc:>13.1f} {res.rank:>6} "
            f"{res.mean_query_seconds:>15.6f} {res.mean_candidates_per_cycle:>18.1f}"
        )
        results_rows.append(
            (
                res.name,
                res.mean_f1auc,
                res.rank,
                res.mean_query_seconds,
                res.mean_candidates_per_cycle,
            )
        )
        for rep, curve in enumerate(res.curves):
            for cycle, f1 in enumerate(curve.f1_per_cycle):
                curve_rows.append((res.name, rep, cycle, f1))
    if len(result.strategies) > 1:
        ref = result.strategies[0]
        lines.append("")
        lines.append(f"win/tie/loss of {ref.name} (alpha={alpha}):")
        for other in result.strategies[1:]:
            wtl = win_tie_loss(ref.curves, other.curves, alpha)
            lines.append(
                f"  vs {other.name:<12} {wtl.win:5.1f} / {wtl.tie:5.1f} / {wtl.loss:5.1f}"
            )
    return "\n".join(lines) + "\n", results_rows, curve_rows
