"""Experiment orchestration: configuration, stage wiring
(ingest -> normalize -> svd -> selection -> train -> evaluate), report
emission, and baseline comparison.

Per-fold preprocessing artifacts (normalizer stats, SVD factors, selected
features) are fit on that fold's training rows only; test rows never reach
the fitting code paths. Fold results are assembled in fold order so thread
parallelism cannot change a single emitted byte. Wall-clock timings go to a
separate timings.json because the main report must be byte-reproducible.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .errors import ConfigError, DataError, PipelineError
from .featsel import (
    ChiSquareReport,
    FeatureRanking,
    SelectionConfig,
    ablation_select,
    chi_square_scores,
    select_top_chi,
)
from .ingest import (
    DatasetSchema,
    DatasetTable,
    FoldPlan,
    NormalizationStats,
    apply_normalizer,
    encode,
    fit_normalizer,
    load_csv,
    schema_preset,
    stratified_kfold,
    stratified_sample_rows,
    take_rows,
)
from .linalg import RsvdConfig, SvdFactors, project, randomized_svd
from .metrics import METRIC_NAMES, FoldSummary, MetricsReport, aggregate, evaluate
from .nn import (
    Model,
    TrainConfig,
    lstm_classifier_spec,
    model_forward,
    selector_cnn_spec,
    train,
)

DEFAULT_BASELINES = {"method21": 0.934, "method19": 0.945}
SELECTION_METHODS = ("none", "chi2", "ablation", "chi2-then-ablation")

# Tags keep per-stage seed streams independent of each other.
_SEED_SVD = 1
_SEED_SELECTOR = 2
_SEED_CLASSIFIER = 3
_SEED_ABLATION_SPLIT = 4

_ABLATION_SPLIT_FOLDS = 4  # selector validates on 1/4 of the training rows


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed derived from (base seed, repetition, fold, stage)."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 6
    batch_size: int = 64
    learning_rate: float = 1e-3
    rmsprop_decay: float = 0.9
    rmsprop_epsilon: float = 1e-8
    hidden_size: int = 64

    def to_train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            rmsprop_decay=self.rmsprop_decay,
            rmsprop_epsilon=self.rmsprop_epsilon,
            seed=seed,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str
    schema: DatasetSchema
    schema_name: str | None = None
    delimiter: str = ","
    k_folds: int = 10
    repetitions: int = 5
    seed: int = 42
    sample_rows: int | None = None
    threshold: float = 0.5
    svd_enabled: bool = True
    svd_rank: int = 20
    svd_oversampling: int = 10
    svd_power: int = 2
    selection_method: str = "ablation"
    selection_max_drop: float = 0.005
    selection_top_m: int = 20
    selection_bins: int = 10
    selection_max_removals: int | None = None
    selection_retrain: bool = False
    train: TrainSettings = field(default_factory=TrainSettings)
    baselines: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_BASELINES))

    def __post_init__(self):
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.selection_method not in SELECTION_METHODS:
            raise ConfigError(
                f"selection method must be one of {SELECTION_METHODS}, "
                f"got {self.selection_method!r}"
            )
        if self.svd_enabled and self.svd_rank < 1:
            raise ConfigError("svd rank must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must be in [0, 1]")
        if self.sample_rows is not None and self.sample_rows < 1:
            raise ConfigError("sample_rows must be >= 1")

    def to_json_dict(self) -> dict:
        schema_echo: object
        if self.schema_name is not None:
            schema_echo = self.schema_name
        else:
            schema_echo = {
                "name": self.schema.name,
                "feature_columns": [[c, k] for c, k in self.schema.feature_columns],
                "label_column": self.schema.label_column,
                "positive_label_values": sorted(self.schema.positive_label_values),
            }
        return {
            "dataset": {
                "path": self.dataset_path,
                "schema": schema_echo,
                "delimiter": self.delimiter,
            },
            "k_folds": self.k_folds,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "sample_rows": self.sample_rows,
            "threshold": self.threshold,
            "svd": {
                "enabled": self.svd_enabled,
                "rank": self.svd_rank,
                "oversampling": self.svd_oversampling,
                "power": self.svd_power,
            },
            "selection": {
                "method": self.selection_method,
                "max_drop": self.selection_max_drop,
                "top_m": self.selection_top_m,
                "bins": self.selection_bins,
                "max_removals": self.selection_max_removals,
                "retrain": self.selection_retrain,
            },
            "train": {
                "epochs": self.train.epochs,
                "batch_size": self.train.batch_size,
                "learning_rate": self.train.learning_rate,
                "rmsprop_decay": self.train.rmsprop_decay,
                "rmsprop_epsilon": self.train.rmsprop_epsilon,
                "hidden_size": self.train.hidden_size,
            },
            "baselines": dict(self.baselines),
        }


def _require_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")


def _schema_from_config(value) -> tuple[DatasetSchema, str | None]:
    if isinstance(value, str):
        return schema_preset(value), value
    if isinstance(value, dict):
        _require_keys(
            value,
            {"name", "feature_columns", "label_column", "positive_label_values"},
            "schema",
        )
        try:
            schema = DatasetSchema(
                name=value.get("name", "inline"),
                feature_columns=tuple(
                    (str(c), str(k)) for c, k in value["feature_columns"]
                ),
                label_column=str(value["label_column"]),
                positive_label_values=frozenset(
                    str(v) for v in value["positive_label_values"]
                ),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid inline schema: {exc}") from exc
        return schema, None
    raise ConfigError("dataset.schema must be a preset name or an inline object")


def resolve_config(doc: dict) -> ExperimentConfig:
    """Fill defaults, validate, and freeze a raw JSON config document."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a JSON object")
    _require_keys(
        doc,
        {"dataset", "k_folds", "repetitions", "seed", "sample_rows", "threshold",
         "svd", "selection", "train", "baselines"},
        "top-level",
    )
    dataset = doc.get("dataset")
    if not isinstance(dataset, dict):
        raise ConfigError("config needs a 'dataset' object with path and schema")
    _require_keys(dataset, {"path", "schema", "delimiter"}, "dataset")
    if "path" not in dataset or "schema" not in dataset:
        raise ConfigError("dataset needs 'path' and 'schema'")
    schema, schema_name = _schema_from_config(dataset["schema"])

    svd = doc.get("svd", {})
    _require_keys(svd, {"enabled", "rank", "oversampling", "power"}, "svd")
    selection = doc.get("selection", {})
    _require_keys(
        selection,
        {"method", "max_drop", "top_m", "bins", "max_removals", "retrain"},
        "selection",
    )
    train_sec = doc.get("train", {})
    _require_keys(
        train_sec,
        {"epochs", "batch_size", "learning_rate", "rmsprop_decay",
         "rmsprop_epsilon", "hidden_size"},
        "train",
    )
    baselines = doc.get("baselines", dict(DEFAULT_BASELINES))
    if not isinstance(baselines, dict) or not all(
        isinstance(v, (int, float)) for v in baselines.values()
    ):
        raise ConfigError("baselines must map names to accuracies")

    try:
        settings = TrainSettings(
            epochs=int(train_sec.get("epochs", 6)),
            batch_size=int(train_sec.get("batch_size", 64)),
            learning_rate=float(train_sec.get("learning_rate", 1e-3)),
            rmsprop_decay=float(train_sec.get("rmsprop_decay", 0.9)),
            rmsprop_epsilon=float(train_sec.get("rmsprop_epsilon", 1e-8)),
            hidden_size=int(train_sec.get("hidden_size", 64)),
        )
        sample_rows = doc.get("sample_rows")
        max_removals = selection.get("max_removals")
        return ExperimentConfig(
            dataset_path=str(dataset["path"]),
            schema=schema,
            schema_name=schema_name,
            delimiter=str(dataset.get("delimiter", ",")),
            k_folds=int(doc.get("k_folds", 10)),
            repetitions=int(doc.get("repetitions", 5)),
            seed=int(doc.get("seed", 42)),
            sample_rows=None if sample_rows is None else int(sample_rows),
            threshold=float(doc.get("threshold", 0.5)),
            svd_enabled=bool(svd.get("enabled", True)),
            svd_rank=int(svd.get("rank", 20)),
            svd_oversampling=int(svd.get("oversampling", 10)),
            svd_power=int(svd.get("power", 2)),
            selection_method=str(selection.get("method", "ablation")),
            selection_max_drop=float(selection.get("max_drop", 0.005)),
            selection_top_m=int(selection.get("top_m", 20)),
            selection_bins=int(selection.get("bins", 10)),
            selection_max_removals=(
                None if max_removals is None else int(max_removals)
            ),
            selection_retrain=bool(selection.get("retrain", False)),
            train=settings,
            baselines={str(k): float(v) for k, v in baselines.items()},
        )
    except ValueError as exc:
        raise ConfigError(f"invalid configuration value: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}") from exc
    return resolve_config(doc)


# --------------------------------------------------------------------------
# Fold-level fitting and evaluation


@dataclass(frozen=True)
class FoldArtifacts:
    """Everything fit on one fold's training rows."""

    norm_stats: NormalizationStats
    svd_factors: SvdFactors | None
    selected_features: tuple[int, ...]
    chi2_report: ChiSquareReport | None = None
    ablation_ranking: FeatureRanking | None = None
    selection_input_names: tuple[str, ...] = ()
    ablation_input_names: tuple[str, ...] = ()


def _select_columns(table: DatasetTable, cols) -> DatasetTable:
    idx = list(cols)
    return DatasetTable(
        features=table.features[:, idx],
        feature_names=tuple(table.feature_names[i] for i in idx),
        labels=table.labels,
    )


def fit_fold_artifacts(
    table: DatasetTable,
    train_rows: np.ndarray,
    config: ExperimentConfig,
    repetition: int,
    fold: int,
) -> FoldArtifacts:
    """Fit normalizer, SVD factors, and feature selection on training rows
    only. Test rows are never touched here, which is what makes the leakage
    guarantee testable."""
    train_table = take_rows(table, train_rows)
    stats = fit_normalizer(train_table, np.arange(train_table.n_rows))
    current = apply_normalizer(train_table, stats)

    factors = None
    if config.svd_enabled:
        rank, over = config.svd_rank, config.svd_oversampling
        if rank + over > min(current.n_rows, current.n_cols):
            raise DataError(
                f"svd rank+oversampling {rank + over} exceeds training fold "
                f"dimensions {current.n_rows}x{current.n_cols}"
            )
        factors = randomized_svd(
            current.features,
            RsvdConfig(
                k=rank,
                p=over,
                q=config.svd_power,
                seed=derive_seed(config.seed, repetition, fold, _SEED_SVD),
            ),
        )
        current = project(current, factors)

    chi2_report = None
    ranking = None
    selected = tuple(range(current.n_cols))
    selection_input_names = current.feature_names
    ablation_input_names: tuple[str, ...] = ()

    method = config.selection_method
    if method in ("chi2", "chi2-then-ablation"):
        chi2_report = chi_square_scores(current, config.selection_bins)
        m = min(config.selection_top_m, current.n_cols)
        keep = sorted(select_top_chi(chi2_report, m))
        selected = tuple(keep)
        current = _select_columns(current, selected)
    if method in ("ablation", "chi2-then-ablation"):
        ablation_input_names = current.feature_names
        split_seed = derive_seed(config.seed, repetition, fold, _SEED_ABLATION_SPLIT)
        inner = stratified_kfold(current.labels, _ABLATION_SPLIT_FOLDS, split_seed)
        inner_split = (inner.train_indices(0), inner.test_indices(0))
        sel_cfg = SelectionConfig(
            max_drop=config.selection_max_drop,
            max_removals=config.selection_max_removals,
            retrain=config.selection_retrain,
        )
        selector_seed = derive_seed(config.seed, repetition, fold, _SEED_SELECTOR)
        survivors, ranking = ablation_select(
            current,
            inner_split,
            selector_cnn_spec(current.n_cols),
            config.train.to_train_config(selector_seed),
            sel_cfg,
        )
        selected = tuple(selected[i] for i in survivors)

    return FoldArtifacts(
        norm_stats=stats,
        svd_factors=factors,
        selected_features=selected,
        chi2_report=chi2_report,
        ablation_ranking=ranking,
        selection_input_names=selection_input_names,
        ablation_input_names=ablation_input_names,
    )


def transform_with_artifacts(table: DatasetTable, artifacts: FoldArtifacts) -> DatasetTable:
    """Apply fitted preprocessing to any rows (train or test)."""
    out = apply_normalizer(table, artifacts.norm_stats)
    if artifacts.svd_factors is not None:
        out = project(out, artifacts.svd_factors)
    if artifacts.selected_features != tuple(range(out.n_cols)):
        out = _select_columns(out, artifacts.selected_features)
    return out


@dataclass
class FoldResult:
    repetition: int
    fold: int
    report: MetricsReport
    artifacts: FoldArtifacts
    model: Model
    stage_seconds: dict[str, float]


def run_fold(
    table: DatasetTable,
    plan: FoldPlan,
    config: ExperimentConfig,
    repetition: int,
    fold: int,
) -> FoldResult:
    timings: dict[str, float] = {}

    def _staged(stage, fn):
        t0 = time.perf_counter()
        try:
            result = fn()
        except Exception as exc:
            raise PipelineError(stage, repetition, fold, exc) from exc
        timings[stage] = timings.get(stage, 0.0) + time.perf_counter() - t0
        return result

    train_rows = plan.train_indices(fold)
    test_rows = plan.test_indices(fold)
    artifacts = _staged(
        "fit-preprocessing",
        lambda: fit_fold_artifacts(table, train_rows, config, repetition, fold),
    )
    train_view = _staged(
        "transform",
        lambda: transform_with_artifacts(take_rows(table, train_rows), artifacts),
    )
    test_view = _staged(
        "transform",
        lambda: transform_with_artifacts(take_rows(table, test_rows), artifacts),
    )
    classifier_seed = derive_seed(config.seed, repetition, fold, _SEED_CLASSIFIER)
    spec = lstm_classifier_spec(train_view.n_cols, hidden=config.train.hidden_size)
    model, _history = _staged(
        "train",
        lambda: train(spec, train_view, config.train.to_train_config(classifier_seed)),
    )
    report = _staged(
        "evaluate",
        lambda: evaluate(
            test_view.labels,
            model_forward(model, test_view.features),
            config.threshold,
        ),
    )
    return FoldResult(
        repetition=repetition,
        fold=fold,
        report=report,
        artifacts=artifacts,
        model=model,
        stage_seconds=timings,
    )


# --------------------------------------------------------------------------
# Whole experiment


@dataclass
class ReportDocument:
    version: str
    seed: int
    config: dict
    repetition_reports: list[list[MetricsReport]]
    repetition_summaries: list[FoldSummary]
    overall: FoldSummary
    baselines: list[dict]
    timings: dict[str, float]

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "repetitions": [
                {
                    "repetition": i,
                    "folds": [r.to_json_dict() for r in reports],
                    "summary": summary.to_json_dict(),
                }
                for i, (reports, summary) in enumerate(
                    zip(self.repetition_reports, self.repetition_summaries)
                )
            ],
            "overall": self.overall.to_json_dict(),
            "baselines": self.baselines,
        }


def compare_baselines(overall_accuracy: float | None, baselines: dict[str, float]) -> list[dict]:
    """Rows (name, accuracy, delta = ours - theirs); no judgment encoded."""
    ours_delta = 0.0 if overall_accuracy is not None else None
    rows = [{"name": "ours", "accuracy": overall_accuracy, "delta": ours_delta}]
    for name, acc in baselines.items():
        delta = None if overall_accuracy is None else overall_accuracy - acc
        rows.append({"name": name, "accuracy": acc, "delta": delta})
    return rows


def load_dataset(config: ExperimentConfig) -> tuple[DatasetTable, dict]:
    """Load, encode, and optionally subsample the configured dataset."""
    raw = load_csv(config.dataset_path, config.schema, config.delimiter)
    table, enc_stats = encode(raw, config.schema)
    summary = {
        "rows": table.n_rows,
        "columns": table.n_cols,
        "positives": int(table.labels.sum()),
        "negatives": int(table.n_rows - table.labels.sum()),
        "unparseable_cells": enc_stats.n_unparseable,
        "single_class": enc_stats.single_class,
        "bucketed_categories": enc_stats.bucketed_categories,
    }
    if config.sample_rows is not None and config.sample_rows < table.n_rows:
        rows = stratified_sample_rows(table.labels, config.sample_rows, config.seed)
        table = take_rows(table, rows)
        summary["sampled_rows"] = table.n_rows
    return table, summary


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ReportDocument:
    """Run repetitions x folds of the full pipeline and aggregate.

    Fold plans use seed + repetition index; all other stage seeds derive from
    (seed, repetition, fold, stage) so every repetition is independently
    reproducible. BLAS pools are pinned to one thread so fold-level
    parallelism cannot perturb results.
    """
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    t_start = time.perf_counter()
    table, _summary = load_dataset(config)
    t_ingest = time.perf_counter() - t_start

    fold_results: list[FoldResult] = []
    t_folds = time.perf_counter()
    with threadpool_limits(limits=1):
        for rep in range(config.repetitions):
            plan = stratified_kfold(table.labels, config.k_folds, config.seed + rep)
            jobs = [(rep, fold) for fold in range(config.k_folds)]
            if threads == 1:
                results = [run_fold(table, plan, config, rep, fold) for rep, fold in jobs]
            else:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    futures = [
                        pool.submit(run_fold, table, plan, config, rep, fold)
                        for rep, fold in jobs
                    ]
                    results = [f.result() for f in futures]
            fold_results.extend(sorted(results, key=lambda r: r.fold))
    t_folds = time.perf_counter() - t_folds

    repetition_reports: list[list[MetricsReport]] = []
    repetition_summaries: list[FoldSummary] = []
    for rep in range(config.repetitions):
        reports = [r.report for r in fold_results if r.repetition == rep]
        repetition_reports.append(reports)
        repetition_summaries.append(aggregate(reports))
    overall = aggregate([r.report for r in fold_results])

    stage_totals: dict[str, float] = {}
    for r in fold_results:
        for stage, secs in r.stage_seconds.items():
            stage_totals[stage] = stage_totals.get(stage, 0.0) + secs
    timings = {"ingest": t_ingest, **stage_totals, "cross_validation": t_folds,
               "total": time.perf_counter() - t_start}

    return ReportDocument(
        version=__version__,
        seed=config.seed,
        config=config.to_json_dict(),
        repetition_reports=repetition_reports,
        repetition_summaries=repetition_summaries,
        overall=overall,
        baselines=compare_baselines(overall.mean["accuracy"], config.baselines),
        timings=timings,
    )


# --------------------------------------------------------------------------
# Trained-model bundles (CLI train/evaluate surface)


@dataclass
class InferenceBundle:
    """A trained classifier plus the preprocessing fitted alongside it."""

    model: Model
    mean: np.ndarray
    std: np.ndarray
    svd_v: np.ndarray | None
    keep: tuple[int, ...] | None
    threshold: float

    def transform(self, features: np.ndarray) -> np.ndarray:
        x = (features - self.mean) / self.std
        if self.svd_v is not None:
            x = x @ self.svd_v
        if self.keep is not None:
            x = x[:, list(self.keep)]
        return x

    def predict(self, features: np.ndarray) -> np.ndarray:
        return model_forward(self.model, self.transform(features))


def save_bundle(bundle: InferenceBundle, out_dir) -> tuple[str, str]:
    """Write model.mgnn (all tensors) and model.json (architecture)."""
    from .nn import save_tensors

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tensors: dict[str, np.ndarray] = {
        "pre.mean": bundle.mean,
        "pre.std": bundle.std,
    }
    if bundle.svd_v is not None:
        tensors["pre.svd_v"] = bundle.svd_v
    if bundle.keep is not None:
        tensors["pre.keep"] = np.asarray(bundle.keep, dtype=np.float64)
    tensors["input_mask"] = bundle.model.input_mask
    for name, arr in bundle.model.params.items():
        tensors[f"param.{name}"] = arr
    model_path = out / "model.mgnn"
    save_tensors(model_path, tensors)
    meta_path = out / "model.json"
    meta_path.write_text(
        json.dumps(
            {
                "spec": bundle.model.spec.to_json_dict(),
                "threshold": bundle.threshold,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return str(model_path), str(meta_path)


def load_bundle(model_path) -> InferenceBundle:
    from .nn import ModelSpec, load_tensors

    p = Path(model_path)
    meta_path = p.with_suffix(".json")
    if not meta_path.is_file():
        raise DataError(f"model metadata not found: {meta_path}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    spec = ModelSpec.from_json_dict(meta["spec"])
    tensors = load_tensors(p)
    mean = tensors.pop("pre.mean")
    std = tensors.pop("pre.std")
    svd_v = tensors.pop("pre.svd_v", None)
    keep_arr = tensors.pop("pre.keep", None)
    keep = None if keep_arr is None else tuple(int(i) for i in keep_arr)
    mask = tensors.pop("input_mask")
    params = {
        name[len("param."):]: arr
        for name, arr in tensors.items()
        if name.startswith("param.")
    }
    model = Model(spec=spec, params=params, input_mask=mask)
    return InferenceBundle(
        model=model,
        mean=mean,
        std=std,
        svd_v=svd_v,
        keep=keep,
        threshold=float(meta["threshold"]),
    )


def fit_full_bundle(config: ExperimentConfig, table: DatasetTable) -> tuple[InferenceBundle, FoldArtifacts, list[dict]]:
    """Fit preprocessing and train the classifier on every row (the CLI
    train surface; fold-based evaluation is run_experiment's job)."""
    all_rows = np.arange(table.n_rows)
    artifacts = fit_fold_artifacts(table, all_rows, config, 0, 0)
    view = transform_with_artifacts(table, artifacts)
    seed = derive_seed(config.seed, 0, 0, _SEED_CLASSIFIER)
    spec = lstm_classifier_spec(view.n_cols, hidden=config.train.hidden_size)
    model, history = train(spec, view, config.train.to_train_config(seed))
    n_post_svd = (
        artifacts.svd_factors.v.shape[1]
        if artifacts.svd_factors is not None
        else table.n_cols
    )
    keep = (
        None
        if artifacts.selected_features == tuple(range(n_post_svd))
        else artifacts.selected_features
    )
    bundle = InferenceBundle(
        model=model,
        mean=artifacts.norm_stats.mean,
        std=artifacts.norm_stats.std,
        svd_v=None if artifacts.svd_factors is None else artifacts.svd_factors.v,
        keep=keep,
        threshold=config.threshold,
    )
    return bundle, artifacts, history


# --------------------------------------------------------------------------
# Emission


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(doc: ReportDocument, out_dir) -> list[str]:
    """Write report.json, metrics.csv, chart_data.csv (all byte-reproducible)
    plus timings.json (wall-clock, intentionally separate)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(doc.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    paths.append(str(report_path))

    metrics_path = out / "metrics.csv"
    with open(metrics_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "repetition", "fold", "tp", "fp", "tn", "fn",
            "fpr", "frr", "accuracy", "precision", "recall", "f_measure",
            "threshold",
        ])
        for rep, reports in enumerate(doc.repetition_reports):
            for fold, r in enumerate(reports):
                writer.writerow([
                    rep, fold, r.counts.tp, r.counts.fp, r.counts.tn, r.counts.fn,
                    _csv_cell(r.fpr), _csv_cell(r.frr), _csv_cell(r.accuracy),
                    _csv_cell(r.precision), _csv_cell(r.recall),
                    _csv_cell(r.f_measure), _csv_cell(r.threshold),
                ])
    paths.append(str(metrics_path))

    chart_path = out / "chart_data.csv"
    with open(chart_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series", "x", "y"])
        for metric in METRIC_NAMES:
            for rep, summary in enumerate(doc.repetition_summaries):
                writer.writerow([metric, rep, _csv_cell(summary.mean[metric])])
        for row in doc.baselines:
            writer.writerow([f"baseline:{row['name']}", 0, _csv_cell(row["accuracy"])])
    paths.append(str(chart_path))

    timings_path = out / "timings.json"
    timings_path.write_text(
        json.dumps({"seconds": doc.timings}, indent=2) + "\n", encoding="utf-8"
    )
    paths.append(str(timings_path))
    return paths
