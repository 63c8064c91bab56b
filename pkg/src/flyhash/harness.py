"""Multi-trial experiment driver.

A validated config describes one experiment: dataset, scheme, code
geometry, optional refinement and coarse quantization, metric, and
cutoff. The dataset, split, and ground truth are built once; each trial
then reruns train -> hash -> index -> query -> metric with seeds
seed0 .. seed0 + trials - 1 so that trial-to-trial variation reflects
random initialization only. Results aggregate into a mean and a
normal-approximation 95% confidence interval.
"""

import json
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .coarse import coarse_fit, coarse_probe
from .config import ConfigError
from .datasets import (
    Dataset,
    load_csv,
    load_fvecs,
    load_ivecs,
    load_raw_f32,
    make_split,
    synth_gaussian_mixture,
)
from .hashers import make_hasher
from .index import build_index
from .metrics import (
    build_label_oracle,
    build_metric_oracle,
    map_at_n,
    precision_at_n,
)
from .refine import sbiht_decode, train_decoder


@dataclass
class EvalReport:
    """Aggregated retrieval quality over repeated trials.

    Values are percentages in [0, 100]; ci95 is the half-width
    1.96 * stddev / sqrt(trials) (0 for a single trial).
    """

    method: str
    dataset: str
    n_bits: int
    alpha: int
    metric: str
    n: int
    per_trial: List[float] = field(default_factory=list)
    mean: float = 0.0
    ci95: float = 0.0
    zero_relevant: int = 0

    def to_json(self):
        """Machine-readable dict; D is the code length."""
        return {
            "method": self.method,
            "dataset": self.dataset,
            "D": self.n_bits,
            "alpha": self.alpha,
            "metric": self.metric,
            "n": self.n,
            "per_trial": self.per_trial,
            "mean": self.mean,
            "ci95": self.ci95,
        }

    def to_text(self):
        trials = " ".join(f"{v:.4f}" for v in self.per_trial)
        return "\n".join(
            [
                f"method    {self.method}",
                f"dataset   {self.dataset}",
                f"D         {self.n_bits}",
                f"alpha     {self.alpha}",
                f"metric    {self.metric}@{self.n}",
                f"trials    {len(self.per_trial)}",
                f"per-trial {trials}",
                f"mean      {self.mean:.4f}",
                f"ci95      {self.ci95:.4f}",
                f"zero-relevant queries {self.zero_relevant}",
            ]
        )


def ci_halfwidth(values):
    """Half-width of the normal-approximation 95% confidence interval."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return 0.0
    return float(1.96 * values.std(ddof=1) / math.sqrt(values.size))


@dataclass
class ExperimentData:
    """Frozen per-experiment state shared by all trials."""

    name: str
    X_train: np.ndarray
    X_targets: np.ndarray
    X_queries: np.ndarray
    oracle: object


def _load_file_dataset(ds):
    kind = ds["kind"]
    if kind == "fvecs":
        targets = load_fvecs(ds["targets"])
        queries = load_fvecs(ds["queries"])
        if "target_labels" in ds:
            targets.labels = load_ivecs(ds["target_labels"]).reshape(-1)
        if "query_labels" in ds:
            queries.labels = load_ivecs(ds["query_labels"]).reshape(-1)
    elif kind == "csv":
        targets = load_csv(ds["targets"], ds.get("label_column"))
        queries = load_csv(ds["queries"], ds.get("label_column"))
    elif kind == "raw":
        targets = load_raw_f32(ds["targets"], ds["dim"])
        queries = load_raw_f32(ds["queries"], ds["dim"])
    else:
        raise ConfigError(f"unknown dataset kind {kind!r}")
    return targets, queries


def prepare_experiment(cfg):
    """Build the dataset, split, and relevance oracle for a config."""
    ds = cfg["dataset"]
    seed = cfg["seed"]
    if ds["kind"] == "synthetic":
        data = synth_gaussian_mixture(
            ds["classes"],
            ds["per_class"],
            ds["dim"],
            separation=ds["separation"],
            noise=ds["noise"],
            seed=ds.get("seed", seed),
        )
        train_size = min(cfg["train"].get("train_size", 5000), data.n - ds["n_queries"])
        split = make_split(
            data.n, train_size=train_size, n_queries=ds["n_queries"], seed=seed
        )
        targets = Dataset(
            features=data.features[split.target_ids],
            labels=None if data.labels is None else data.labels[split.target_ids],
            name=data.name,
        )
        queries = Dataset(
            features=data.features[split.query_ids],
            labels=None if data.labels is None else data.labels[split.query_ids],
            name=data.name,
        )
        train_members = np.searchsorted(split.target_ids, split.train_ids)
        X_train = targets.features[train_members]
    else:
        targets, queries = _load_file_dataset(ds)
        train_size = min(cfg["train"].get("train_size", 5000), targets.n)
        split = make_split(targets.n, train_size=train_size, n_queries=0, seed=seed)
        X_train = targets.features[split.train_ids]

    rel = cfg["relevance"]
    if rel["mode"] == "label":
        if targets.labels is None or queries.labels is None:
            raise ConfigError(
                "label relevance needs labeled targets and queries; supply "
                "label files or switch relevance.mode to 'metric'"
            )
        oracle = build_label_oracle(targets.labels, queries.labels)
    else:
        oracle = build_metric_oracle(
            targets.features,
            queries.features,
            rel.get("k", cfg["n"]),
            metric=rel["metric_space"],
        )
    return ExperimentData(
        name=targets.name,
        X_train=X_train,
        X_targets=targets.features,
        X_queries=queries.features,
        oracle=oracle,
    )


def _hasher_options(cfg):
    t = cfg["train"]
    scheme = cfg["scheme"]
    opts = {}
    if scheme == "fruitfly":
        if "p" in t:
            opts["p"] = t["p"]
    elif scheme == "posh":
        for src, dst in (
            ("epochs", "epochs"),
            ("mini_batch", "batch_size"),
            ("full_batch", "full_batch"),
        ):
            if src in t:
                opts[dst] = t[src]
    elif scheme == "spherical":
        if "epochs" in t:
            opts["epochs"] = t["epochs"]
    elif scheme == "biohash":
        for src, dst in (("epochs", "epochs"), ("lr", "lr")):
            if src in t:
                opts[dst] = t[src]
    elif scheme == "bosl":
        if "rounds" in t:
            opts["rounds"] = t["rounds"]
    elif scheme == "itq":
        if "iters" in t:
            opts["n_iters"] = t["iters"]
    elif scheme == "knnh":
        if "iters" in t:
            opts["n_iters"] = t["iters"]
        if "n_neighbors" in t:
            opts["n_neighbors"] = t["n_neighbors"]
    return opts


def build_trial_hasher(cfg, seed):
    """Construct the configured estimator for one trial seed."""
    return make_hasher(
        cfg["scheme"],
        cfg["D"],
        alpha=cfg.get("alpha"),
        random_state=seed,
        **_hasher_options(cfg),
    )


def _rank_plain(index, codes_q, n, candidates, n_threads):
    rows = []
    for qi in range(codes_q.shape[0]):
        cand = None if candidates is None else candidates[qi]
        ids, _ = index.query(codes_q[qi], n, cand)
        rows.append(ids)
    return rows


def _rank_linear(index, decoder, X_queries, codes_q, n, oversample, candidates):
    fetch = int(math.ceil(oversample * n))
    rows = []
    for qi in range(codes_q.shape[0]):
        cand = None if candidates is None else candidates[qi]
        ids, _ = index.query(codes_q[qi], fetch, cand)
        if ids.size == 0:
            rows.append(ids)
            continue
        recon = decoder.decode(index.codes_for(ids))
        dists = np.linalg.norm(recon - X_queries[qi], axis=1)
        order = np.lexsort((ids, dists))[:n]
        rows.append(ids[order])
    return rows


def _rank_sbiht(index, decoder, model, Z_queries, codes_q, n, oversample, max_iters, candidates):
    fetch = int(math.ceil(oversample * n))
    cache = {}
    rows = []
    for qi in range(codes_q.shape[0]):
        cand = None if candidates is None else candidates[qi]
        ids, _ = index.query(codes_q[qi], fetch, cand)
        if ids.size == 0:
            rows.append(ids)
            continue
        recon = np.empty((ids.size, Z_queries.shape[1]))
        codes = index.codes_for(ids)
        for row, tid in enumerate(ids):
            if tid not in cache:
                cache[tid] = sbiht_decode(
                    codes[row], model.W, decoder, max_iters=max_iters
                )
            recon[row] = cache[tid]
        dists = np.linalg.norm(recon - Z_queries[qi], axis=1)
        order = np.lexsort((ids, dists))[:n]
        rows.append(ids[order])
    return rows


def run_single_trial(cfg, data, seed, n_threads=1):
    """One full train -> hash -> index -> query -> metric pass."""
    hasher = build_trial_hasher(cfg, seed)
    hasher.fit(data.X_train)
    model = hasher.model_
    codes_t = hasher.transform(data.X_targets, n_threads=n_threads)
    codes_q = hasher.transform(data.X_queries, n_threads=n_threads)
    index = build_index(model, codes_t)

    candidates = None
    if cfg["coarse"]["enabled"]:
        cq = coarse_fit(data.X_targets, seed=seed)
        candidates = [
            coarse_probe(cq, data.X_queries[qi], cfg["coarse"]["nprobe"])
            for qi in range(data.X_queries.shape[0])
        ]

    n = cfg["n"]
    mode = cfg["refinement"]["mode"]
    if mode == "off":
        rankings = _rank_plain(index, codes_q, n, candidates, n_threads)
    elif mode == "linear":
        decoder = train_decoder(codes_t, data.X_targets, model.n_bits)
        rankings = _rank_linear(
            index,
            decoder,
            data.X_queries,
            codes_q,
            n,
            cfg["refinement"]["oversample"],
            candidates,
        )
    else:
        Z_targets = model.preprocess(data.X_targets)
        Z_queries = model.preprocess(data.X_queries)
        decoder = train_decoder(codes_t, Z_targets, model.n_bits)
        rankings = _rank_sbiht(
            index,
            decoder,
            model,
            Z_queries,
            codes_q,
            n,
            cfg["refinement"]["oversample"],
            cfg["refinement"]["max_iters"],
            candidates,
        )

    if cfg["metric"] == "map":
        return map_at_n(rankings, data.oracle, n)
    return precision_at_n(rankings, data.oracle, n)


def run_trials(cfg, trials=None, n_threads=1, data=None, on_trial=None):
    """Run the configured experiment over consecutive seeds.

    Parameters
    ----------
    cfg : validated config dict
    trials : int or None
        Override for cfg["trials"].
    n_threads : int
        Worker threads for batch hashing and querying.
    data : ExperimentData or None
        Reuse an already-prepared dataset (for sweeps over schemes on
        identical data).
    on_trial : callable or None
        Called as on_trial(seed, value) after each trial.

    Returns
    -------
    EvalReport

    Any trial failure aborts the run with the failing seed named.
    """
    trials = cfg["trials"] if trials is None else trials
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if data is None:
        data = prepare_experiment(cfg)
    seed0 = cfg["seed"]
    values = []
    for t in range(trials):
        seed = seed0 + t
        try:
            value = run_single_trial(cfg, data, seed, n_threads=n_threads)
        except Exception as exc:
            raise RuntimeError(f"trial with seed {seed} failed: {exc}") from exc
        values.append(float(value))
        if on_trial is not None:
            on_trial(seed, values[-1])
    report = EvalReport(
        method=cfg["scheme"],
        dataset=data.name,
        n_bits=cfg["D"],
        alpha=cfg.get("alpha", 0),
        metric=cfg["metric"],
        n=cfg["n"],
        per_trial=values,
        mean=float(np.mean(values)),
        ci95=ci_halfwidth(values),
        zero_relevant=data.oracle.zero_relevant_queries,
    )
    return report


def report_to_json_text(report):
    return json.dumps(report.to_json(), indent=2) + "\n"
