"""Future-peek expert: look-ahead rewards, optimal queries, and the
simulation campaign that produces imitation-learning training records."""

import concurrent.futures
from dataclasses import dataclass

import numpy as np

from . import alcore, encoding, learner as learner_mod, synthgen
from .errors import EmptyCorpus, EmptyPool, InconsistentK, IoError, SinkWriteFailure

CORPUS_MAGIC = "#imital-corpus"


@dataclass
class SimulationRecord:
    encoded: encoding.EncodedState
    rewards: np.ndarray  # k look-ahead accuracies, zero-padded like the encoding
    dataset_id: int
    cycle: int


@dataclass
class CampaignConfig:
    n_datasets: int
    tau: int = 10
    j: int = 10
    k: int = 20
    b: int = 5
    seed: int = 0
    parallelism: int = 1
    learner_epochs: int = 50
    learner_minibatch: int = 32
    learner_lr: float = 1e-3
    # optional caps on the sampled generation parameters (desk-scale runs)
    max_samples: int = None
    max_features: int = None
    max_classes: int = None

    def validate(self):
        for name in ("n_datasets", "tau", "j", "k", "b", "parallelism"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def learner_cfg(self, seed=0):
        return learner_mod.TrainConfig(
            epochs=self.learner_epochs,
            minibatch_size=self.learner_minibatch,
            learning_rate=self.learner_lr,
            seed=seed,
        )


@dataclass
class CampaignSummary:
    records_written: int = 0
    datasets_completed: int = 0
    failures: int = 0


def future_peek_rewards(pool, candidates, test, learner_cfg):
    """Held-out accuracy after retraining on L plus each single candidate.

    One fresh training per candidate, all with the same seed so reward
    differences come from the added sample only.  The pool is not modified.
    Returns k values, zero-padded past the real candidates.
    """
    idx = np.asarray(candidates.indices)
    rewards = np.zeros(candidates.k)
    labeled = np.asarray(pool.labeled)
    X, y = pool.dataset.features, pool.dataset.labels
    for pos, cand in enumerate(idx):
        rows = np.append(labeled, cand)
        peek_train = synthgen.Dataset(X[rows], y[rows], pool.dataset.n_classes)
        clf = learner_mod.fit(pool.learner, peek_train, learner_cfg)
        rewards[pos] = learner_mod.accuracy(clf, test)
    return rewards


def expert_query(pool, j, k, b, test, rng, learner_cfg=None):
    """Pre-select, score by future peek, return the b best-reward candidates."""
    if not pool.unlabeled:
        raise EmptyPool("no unlabeled samples left")
    cfg = learner_cfg or pool.learner_cfg
    candidates = encoding.pre_select(pool, j, k, rng)
    rewards = future_peek_rewards(pool, candidates, test, cfg)
    n_real = candidates.indices.size
    return alcore.Query(
        indices=sorted(
            alcore._top_b_by_score(candidates.indices, rewards[:n_real], b)
        )
    )


def simulate_dataset(source, cfg, rng, dataset_id=0):
    """One expert episode: tau cycles of pre-select / encode / future-peek /
    label-the-best.  `source` is either SynthParams or a ready Dataset."""
    cfg.validate()
    if isinstance(source, synthgen.SynthParams):
        dataset = synthgen.generate(source)
    else:
        dataset = source
    train, test = synthgen.split(dataset, 0.5, rng)
    learner_cfg = cfg.learner_cfg(seed=int(rng.integers(2**31)))
    pool = alcore.init_pool(train, rng, learner_cfg)
    records = []
    for cycle in range(cfg.tau):
        if not pool.unlabeled:
            break
        candidates = encoding.pre_select(pool, cfg.j, cfg.k, rng)
        encoded = encoding.encode_state(pool, candidates, pool.learner)
        peek_cfg = cfg.learner_cfg(seed=int(rng.integers(2**31)))
        rewards = future_peek_rewards(pool, candidates, test, peek_cfg)
        records.append(
            SimulationRecord(
                encoded=encoded, rewards=rewards, dataset_id=dataset_id, cycle=cycle
            )
        )
        n_real = candidates.indices.size
        best = alcore._top_b_by_score(candidates.indices, rewards[:n_real], cfg.b)
        alcore.apply_query(pool, alcore.Query(indices=sorted(best)))
    return records


def record_to_line(record):
    values = " ".join(repr(float(v)) for v in record.encoded.values)
    rewards = " ".join(repr(float(r)) for r in record.rewards)
    return f"{record.dataset_id} {record.cycle} {record.encoded.k} {values} {rewards}"


def parse_record_line(line, k, lineno="?"):
    parts = line.split()
    if len(parts) != 3 + 6 * k:
        raise IoError(f"corpus line {lineno}: expected {3 + 6 * k} fields, got {len(parts)}")
    try:
        dataset_id, cycle, line_k = int(parts[0]), int(parts[1]), int(parts[2])
        floats = np.array([float(v) for v in parts[3:]])
    except ValueError as exc:
        raise IoError(f"corpus line {lineno}: bad value ({exc})") from exc
    if line_k != k:
        raise InconsistentK(f"corpus line {lineno}: k={line_k} but corpus k={k}")
    return SimulationRecord(
        encoded=encoding.EncodedState(values=floats[: 5 * k], k=k),
        rewards=floats[5 * k :],
        dataset_id=dataset_id,
        cycle=cycle,
    )


def corpus_header(cfg):
    return (
        f"{CORPUS_MAGIC} k={cfg.k} tau={cfg.tau} seed={cfg.seed} "
        f"metric_threshold={encoding.METRIC_FEATURE_THRESHOLD}"
    )


def parse_corpus_header(line):
    parts = line.split()
    if not parts or parts[0] != CORPUS_MAGIC:
        raise IoError("not a corpus file (bad header)")
    header = {}
    for tok in parts[1:]:
        key, _, val = tok.partition("=")
        header[key] = int(val)
    for key in ("k", "tau", "seed", "metric_threshold"):
        if key not in header:
            raise IoError(f"corpus header missing {key}")
    return header


def read_corpus(path, expected_k=None):
    """Returns (header, records).  Rejects k mismatches."""
    try:
        with open(path) as fh:
            header = parse_corpus_header(fh.readline().strip())
            if expected_k is not None and header["k"] != expected_k:
                raise InconsistentK(
                    f"corpus k={header['k']} but k={expected_k} requested"
                )
            records = [
                parse_record_line(line.strip(), header["k"], lineno)
                for lineno, line in enumerate(fh, start=2)
                if line.strip()
            ]
    except OSError as exc:
        raise IoError(f"cannot read corpus {path}: {exc}") from exc
    if not records:
        raise EmptyCorpus(f"{path} holds no records")
    return header, records


def _campaign_job(cfg, index):
    """One dataset simulation; returns (index, lines or None on failure)."""
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, index)))
    params = synthgen.sample_params(
        rng,
        max_samples=cfg.max_samples,
        max_features=cfg.max_features,
        max_classes=cfg.max_classes,
    )
    try:
        records = simulate_dataset(params, cfg, rng, dataset_id=index)
    except (synthgen.TimeoutRetryExhausted, synthgen.InfeasibleSplit):
        # a sampled dataset can be unusable (generation timed out, or a class
        # too rare to stratify); count it and move on
        return index, None
    return index, [record_to_line(r) for r in records]


def run_campaign(cfg, sink):
    """Run n_datasets independent expert simulations, streaming record lines
    to the sink in completion order.  Per-job seeding makes the record
    multiset independent of the parallelism degree."""
    cfg.validate()
    summary = CampaignSummary()

    def write(lines):
        try:
            for line in lines:
                sink.write(line + "\n")
        except OSError as exc:
            raise SinkWriteFailure(f"sink write failed: {exc}") from exc

    write([corpus_header(cfg)])
    if cfg.parallelism <= 1:
        results = (_campaign_job(cfg, i) for i in range(cfg.n_datasets))
    else:
        pool = concurrent.futures.ProcessPoolExecutor(max_workers=cfg.parallelism)
        futures = [
            pool.submit(_campaign_job, cfg, i) for i in range(cfg.n_datasets)
        ]
        results = (f.result() for f in concurrent.futures.as_completed(futures))
    try:
        for _, lines in results:
            if lines is None:
                summary.failures += 1
                continue
            write(lines)
            summary.datasets_completed += 1
            summary.records_written += len(lines)
    finally:
        if cfg.parallelism > 1:
            pool.shutdown()
    return summary
