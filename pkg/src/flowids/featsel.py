"""Feature selection: chi-squared filter scores over quantile-binned features
and the network-ablation procedure (zero one input's first-layer weights,
measure the accuracy drop, remove features whose drop stays acceptable).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .ingest import DatasetTable, take_rows
from .nn import Model, ModelSpec, TrainConfig, model_forward, train

DEFAULT_BINS = 10


@dataclass(frozen=True)
class ChiSquareReport:
    """Per-feature chi-squared score against the label, plus the full ranking
    (descending score, ties broken by ascending index)."""

    scores: np.ndarray
    bin_count: int
    selected: tuple[int, ...]


@dataclass(frozen=True)
class AblationEntry:
    feature: int
    train_accuracy: float  # network accuracy with this input zeroed, train part
    test_accuracy: float   # same on the held-out part
    drop: float            # full-model test accuracy minus test_accuracy
    removed: bool


@dataclass(frozen=True)
class FeatureRanking:
    baseline_train_accuracy: float
    baseline_test_accuracy: float
    entries: tuple[AblationEntry, ...]


@dataclass(frozen=True)
class SelectionConfig:
    """max_drop is the largest test-accuracy drop still considered removable;
    retrain=False reuses the single trained network for every ablation."""

    max_drop: float = 0.005
    max_removals: int | None = None
    retrain: bool = False

    def __post_init__(self):
        if self.max_drop < 0:
            raise ValueError("max_drop must be >= 0")
        if self.max_removals is not None and self.max_removals < 0:
            raise ValueError("max_removals must be >= 0")


def _quantile_bins(values: np.ndarray, bins: int) -> np.ndarray:
    edges = np.quantile(values, np.linspace(0.0, 1.0, bins + 1)[1:-1])
    edges = np.unique(edges)
    return np.searchsorted(edges, values, side="right")


def chi_square_scores(table: DatasetTable, bins: int = DEFAULT_BINS) -> ChiSquareReport:
    """Chi-squared statistic of each quantile-binned feature against the
    binary label; expected counts come from the contingency marginals."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    labels = table.labels
    if len(np.unique(labels)) < 2:
        raise DataError("chi-squared scores are undefined on a single-class table")
    n = table.n_rows
    scores = np.zeros(table.n_cols)
    for j in range(table.n_cols):
        assign = _quantile_bins(table.features[:, j], bins)
        n_bins = int(assign.max()) + 1
        observed = np.zeros((n_bins, 2))
        np.add.at(observed, (assign, labels), 1.0)
        row = observed.sum(axis=1)
        col = observed.sum(axis=0)
        expected = np.outer(row, col) / n
        mask = expected > 0
        scores[j] = float(
            np.sum((observed[mask] - expected[mask]) ** 2 / expected[mask])
        )
    order = sorted(range(table.n_cols), key=lambda i: (-scores[i], i))
    scores.setflags(write=False)
    return ChiSquareReport(scores=scores, bin_count=bins, selected=tuple(order))


def select_top_chi(report: ChiSquareReport, m: int) -> tuple[int, ...]:
    """First m feature indices of the ranking, in ranking order."""
    total = len(report.selected)
    if not 1 <= m <= total:
        raise ValueError(f"m must be in [1, {total}], got {m}")
    return report.selected[:m]


def zero_input_weights(model: Model, k: int) -> Model:
    """Copy of the model whose output no longer depends on input feature k.

    A dense first layer gets column k of its weight matrix zeroed; for conv
    and recurrent first layers the feature's value path is masked at the
    input, which has the same effect without enumerating kernel taps. All
    other parameters are bit-identical.
    """
    width = model.spec.input_width
    if not 0 <= k < width:
        raise ValueError(f"feature index {k} out of range [0, {width})")
    out = model.copy()
    first = model.spec.layers[0]
    if first.kind == "dense":
        out.params["layer0.W"][:, k] = 0.0
    else:
        out.input_mask[k] = 0.0
    return out


def _accuracy(model: Model, features: np.ndarray, labels: np.ndarray) -> float:
    probs = model_forward(model, features)
    return float(np.mean((probs >= 0.5) == (labels == 1)))


def _mask_model(model: Model, removed) -> Model:
    out = model
    for k in removed:
        out = zero_input_weights(out, k)
    return out


def ablation_select(
    table: DatasetTable,
    split: tuple[np.ndarray, np.ndarray],
    spec: ModelSpec,
    train_config: TrainConfig,
    sel: SelectionConfig,
) -> tuple[tuple[int, ...], FeatureRanking]:
    """Train the selection network, ablate each input in turn, and drop the
    features whose test-accuracy cost stays within sel.max_drop.

    Candidates are processed in ascending order of drop; at least one feature
    always survives. With retrain=True the network is refit after every
    accepted removal instead of reusing the original weights.
    """
    if table.n_cols < 2:
        raise ValueError("ablation selection needs at least two features")
    train_idx = np.asarray(split[0], dtype=np.int64)
    test_idx = np.asarray(split[1], dtype=np.int64)
    if train_idx.size == 0 or test_idx.size == 0:
        raise ValueError("both split parts must be non-empty")

    x_train, y_train = table.features[train_idx], table.labels[train_idx]
    x_test, y_test = table.features[test_idx], table.labels[test_idx]

    model, _ = train(spec, take_rows(table, train_idx), train_config)
    base_train = _accuracy(model, x_train, y_train)
    base_test = _accuracy(model, x_test, y_test)

    entries: dict[int, AblationEntry] = {}
    for k in range(table.n_cols):
        ablated = zero_input_weights(model, k)
        r_train = _accuracy(ablated, x_train, y_train)
        r_test = _accuracy(ablated, x_test, y_test)
        entries[k] = AblationEntry(
            feature=k,
            train_accuracy=r_train,
            test_accuracy=r_test,
            drop=base_test - r_test,
            removed=False,
        )

    order = sorted(entries, key=lambda k: (entries[k].drop, k))
    survivors = set(range(table.n_cols))
    removed: list[int] = []
    cap = sel.max_removals if sel.max_removals is not None else table.n_cols

    if not sel.retrain:
        for k in order:
            if len(survivors) <= 1 or len(removed) >= cap:
                break
            if entries[k].drop <= sel.max_drop:
                survivors.remove(k)
                removed.append(k)
                entries[k] = replace(entries[k], removed=True)
    else:
        current = model
        base_test_now = base_test
        while len(survivors) > 1 and len(removed) < cap:
            best_k, best_drop = None, None
            for k in sorted(survivors):
                r_test = _accuracy(zero_input_weights(current, k), x_test, y_test)
                drop = base_test_now - r_test
                if best_drop is None or drop < best_drop:
                    best_k, best_drop = k, drop
            if best_k is None or best_drop > sel.max_drop:
                break
            survivors.remove(best_k)
            removed.append(best_k)
            entries[best_k] = replace(entries[best_k], drop=best_drop, removed=True)
            # Refit on the surviving features (removed columns zeroed), then
            # mask the removals so evaluation cannot see them either.
            feats = table.features.copy()
            feats[:, removed] = 0.0
            masked_table = DatasetTable(
                features=feats, feature_names=table.feature_names, labels=table.labels
            )
            current, _ = train(spec, take_rows(masked_table, train_idx), train_config)
            current = _mask_model(current, removed)
            base_test_now = _accuracy(current, x_test, y_test)

    ranking = FeatureRanking(
        baseline_train_accuracy=base_train,
        baseline_test_accuracy=base_test,
        entries=tuple(entries[k] for k in range(table.n_cols)),
    )
    return tuple(sorted(survivors)), ranking


def write_chi2_csv(report: ChiSquareReport, feature_names, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_index", "feature_name", "chi2_score", "rank"])
        rank_of = {f: r for r, f in enumerate(report.selected)}
        for i, name in enumerate(feature_names):
            writer.writerow([i, name, repr(float(report.scores[i])), rank_of[i]])


def write_ranking_csv(ranking: FeatureRanking, feature_names, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "feature_index", "feature_name", "train_accuracy",
            "test_accuracy", "drop", "removed",
        ])
        for e in ranking.entries:
            writer.writerow([
                e.feature, feature_names[e.feature], repr(e.train_accuracy),
                repr(e.test_accuracy), repr(e.drop), int(e.removed),
            ])
