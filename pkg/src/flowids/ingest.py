"""Dataset loading: CSV parsing, numeric/one-hot encoding, train-only
normalization, and deterministic stratified fold plans.

All operations are pure functions of their inputs plus an explicit seed;
tables are immutable after construction (their arrays are marked read-only).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# Long-tailed categorical columns (e.g. service/state) are capped to bound
# dimensionality before the SVD stage; overflow categories share one bucket.
CATEGORY_CAP = 32
OTHER_CATEGORY = "__other__"

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class DatasetSchema:
    """Declares which CSV columns are features, their kinds, and the label."""

    name: str
    feature_columns: tuple[tuple[str, str], ...]
    label_column: str
    positive_label_values: frozenset[str]

    def __post_init__(self):
        if not self.feature_columns:
            raise ValueError("schema needs at least one feature column")
        names = [c for c, _ in self.feature_columns]
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature column names in schema")
        if self.label_column in names:
            raise ValueError("label column cannot also be a feature column")
        for col, kind in self.feature_columns:
            if kind not in (NUMERIC, CATEGORICAL):
                raise ValueError(f"unknown column kind {kind!r} for {col!r}")

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.feature_columns) + (self.label_column,)


@dataclass(frozen=True)
class RawTable:
    """String cells straight from the CSV, aligned to schema column order."""

    columns: tuple[str, ...]
    rows: list[list[str]]

    @property
    def n_rows(self) -> int:
        return len(self.rows)


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DatasetTable:
    """Numeric feature matrix with 0/1 labels; the pipeline's currency."""

    features: np.ndarray
    feature_names: tuple[str, ...]
    labels: np.ndarray

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        labs = np.ascontiguousarray(self.labels, dtype=np.int64)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if feats.shape[0] < 1:
            raise ValueError("table needs at least one row")
        if feats.shape[1] != len(self.feature_names):
            raise ValueError("feature_names length must match feature columns")
        if labs.shape != (feats.shape[0],):
            raise ValueError("labels length must match row count")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features contain non-finite entries")
        if not np.all((labs == 0) | (labs == 1)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "features", _freeze(feats))
        object.__setattr__(self, "labels", _freeze(labs))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_cols(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature mean and floored standard deviation, fit on training rows."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        std = np.ascontiguousarray(self.std, dtype=np.float64)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean/std must be 1-D vectors of equal length")
        if not np.all(std > 0):
            raise ValueError("standard deviations must be positive after flooring")
        object.__setattr__(self, "mean", _freeze(mean))
        object.__setattr__(self, "std", _freeze(std))


@dataclass(frozen=True)
class FoldPlan:
    """Stratified fold assignment for every row, reproducible from the seed."""

    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        a = np.ascontiguousarray(self.assignments, dtype=np.int64)
        if a.ndim != 1:
            raise ValueError("assignments must be a vector")
        if np.any((a < 0) | (a >= self.k)):
            raise ValueError("fold index out of range")
        object.__setattr__(self, "assignments", _freeze(a))

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


@dataclass
class EncodeStats:
    """Bookkeeping from encode: fallback counts and degenerate-label flags."""

    n_unparseable: int = 0
    single_class: bool = False
    bucketed_categories: dict[str, int] = field(default_factory=dict)


def load_csv(path, schema: DatasetSchema, delimiter: str = ",") -> RawTable:
    """Read a headered CSV and return the schema's columns as string cells.

    The header must contain every schema column (order-insensitive); extra
    columns are ignored. Ragged rows are an error reported by row number.
    """
    p = Path(path)
    if not p.is_file():
        raise DataError(f"dataset file not found: {p}")
    wanted = schema.column_names
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{p}: empty file, no header row") from None
        header = [h.strip() for h in header]
        positions = {}
        for col in wanted:
            if col not in header:
                raise DataError(f"{p}: missing column {col!r}")
            positions[col] = header.index(col)
        width = len(header)
        take = [positions[col] for col in wanted]
        rows: list[list[str]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue  # blank trailing lines
            if len(row) != width:
                raise DataError(
                    f"{p}: ragged row at line {lineno}: "
                    f"expected {width} cells, got {len(row)}"
                )
            rows.append([row[i].strip() for i in take])
    return RawTable(columns=wanted, rows=rows)


def encode(raw: RawTable, schema: DatasetSchema) -> tuple[DatasetTable, EncodeStats]:
    """Turn string cells into the numeric table the rest of the pipeline eats.

    Numeric columns parse as floats (unparseable or non-finite cells become 0
    and are counted); categorical columns one-hot encode over the categories
    seen here, capped at the CATEGORY_CAP most frequent plus an overflow
    bucket; labels map through the schema's positive value set.
    """
    if raw.n_rows == 0:
        raise DataError("cannot encode a table with zero rows")
    if raw.columns != schema.column_names:
        raise DataError("raw table columns do not match schema")

    n = raw.n_rows
    stats = EncodeStats()
    blocks: list[np.ndarray] = []
    names: list[str] = []

    for ci, (col, kind) in enumerate(schema.feature_columns):
        cells = [row[ci] for row in raw.rows]
        if kind == NUMERIC:
            values = np.zeros(n)
            for i, cell in enumerate(cells):
                try:
                    x = float(cell)
                except ValueError:
                    stats.n_unparseable += 1
                    continue
                if not np.isfinite(x):
                    stats.n_unparseable += 1
                    continue
                values[i] = x
            blocks.append(values[:, None])
            names.append(col)
        else:
            counts: dict[str, int] = {}
            for cell in cells:
                counts[cell] = counts.get(cell, 0) + 1
            ordered = sorted(counts, key=lambda c: (-counts[c], c))
            kept = ordered[:CATEGORY_CAP]
            overflow = set(ordered[CATEGORY_CAP:])
            if overflow:
                stats.bucketed_categories[col] = len(overflow)
            index = {c: j for j, c in enumerate(kept)}
            width = len(kept) + (1 if overflow else 0)
            block = np.zeros((n, width))
            other_j = len(kept)
            for i, cell in enumerate(cells):
                j = index.get(cell, other_j)
                block[i, j] = 1.0
            blocks.append(block)
            names.extend(f"{col}={c}" for c in kept)
            if overflow:
                names.append(f"{col}={OTHER_CATEGORY}")

    label_ci = len(schema.feature_columns)
    labels = np.array(
        [1 if row[label_ci] in schema.positive_label_values else 0 for row in raw.rows],
        dtype=np.int64,
    )
    stats.single_class = len(np.unique(labels)) < 2

    table = DatasetTable(
        features=np.hstack(blocks), feature_names=tuple(names), labels=labels
    )
    return table, stats


def fit_normalizer(table: DatasetTable, training_rows) -> NormalizationStats:
    """Per-feature mean/std from the given training rows only (no leakage)."""
    if isinstance(training_rows, (set, frozenset)):
        idx = np.fromiter(sorted(training_rows), dtype=np.int64)
    else:
        idx = np.asarray(training_rows, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("training row set must be non-empty")
    sub = table.features[idx]
    mean = sub.mean(axis=0)
    std = sub.std(axis=0)  # population std
    std = np.maximum(std, STD_FLOOR)
    return NormalizationStats(mean=mean, std=std)


def apply_normalizer(table: DatasetTable, stats: NormalizationStats) -> DatasetTable:
    """Center and scale every feature; labels pass through unchanged."""
    if stats.mean.shape[0] != table.n_cols:
        raise ValueError(
            f"normalizer has {stats.mean.shape[0]} columns, table has {table.n_cols}"
        )
    scaled = (table.features - stats.mean) / stats.std
    return DatasetTable(
        features=scaled, feature_names=table.feature_names, labels=table.labels
    )


def stratified_kfold(labels, k: int, seed: int) -> FoldPlan:
    """Within each class, shuffle with the seeded generator and deal
    round-robin, so per-class fold sizes differ by at most one."""
    labs = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    assignments = np.empty(labs.shape[0], dtype=np.int64)
    for cls in sorted(np.unique(labs).tolist()):
        members = np.flatnonzero(labs == cls)
        if members.size < k:
            raise DataError(
                f"class {cls} has {members.size} members, fewer than k={k}"
            )
        shuffled = members.copy()
        rng.shuffle(shuffled)
        assignments[shuffled] = np.arange(shuffled.size) % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def take_rows(table: DatasetTable, rows) -> DatasetTable:
    """Row-subset view of a table (copying, so the result is independent)."""
    idx = np.asarray(rows, dtype=np.int64)
    return DatasetTable(
        features=table.features[idx].copy(),
        feature_names=table.feature_names,
        labels=table.labels[idx].copy(),
    )


def stratified_sample_rows(labels, n: int, seed: int) -> np.ndarray:
    """Seeded, class-proportional subsample of row indices, in row order."""
    labs = np.asarray(labels, dtype=np.int64)
    total = labs.shape[0]
    if n >= total:
        return np.arange(total, dtype=np.int64)
    if n < 1:
        raise ValueError("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    chosen: list[np.ndarray] = []
    classes = sorted(np.unique(labs).tolist())
    quotas = []
    for cls in classes:
        members = np.flatnonzero(labs == cls)
        quotas.append((cls, members, members.size * n / total))
    counts = [int(np.floor(q)) for _, _, q in quotas]
    remainders = [(q - np.floor(q), i) for i, (_, _, q) in enumerate(quotas)]
    short = n - sum(counts)
    for _, i in sorted(remainders, reverse=True)[:short]:
        counts[i] += 1
    for (cls, members, _), cnt in zip(quotas, counts):
        cnt = min(max(cnt, 1 if members.size else 0), members.size)
        picked = rng.choice(members, size=cnt, replace=False)
        chosen.append(picked)
    out = np.concatenate(chosen)
    out.sort()
    return out[:n]


def _unsw_nb15_schema() -> DatasetSchema:
    numeric = (
        "dur spkts dpkts sbytes dbytes rate sttl dttl sload dload sloss dloss "
        "sinpkt dinpkt sjit djit swin stcpb dtcpb dwin tcprtt synack ackdat "
        "smean dmean trans_depth response_body_len ct_srv_src ct_state_ttl "
        "ct_dst_ltm ct_src_dport_ltm ct_dst_sport_ltm ct_dst_src_ltm "
        "is_ftp_login ct_ftp_cmd ct_flw_http_mthd ct_src_ltm ct_srv_dst "
        "is_sm_ips_ports"
    ).split()
    cols = [("proto", CATEGORICAL), ("service", CATEGORICAL), ("state", CATEGORICAL)]
    cols += [(c, NUMERIC) for c in numeric]
    return DatasetSchema(
        name="unsw-nb15",
        feature_columns=tuple(cols),
        label_column="label",
        positive_label_values=frozenset({"1"}),
    )


def _bot_iot_schema() -> DatasetSchema:
    numeric = (
        "pkts bytes seq dur mean stddev sum min max spkts dpkts sbytes dbytes "
        "rate srate drate"
    ).split()
    cols = [("flgs", CATEGORICAL), ("proto", CATEGORICAL), ("state", CATEGORICAL)]
    cols += [(c, NUMERIC) for c in numeric]
    return DatasetSchema(
        name="bot-iot",
        feature_columns=tuple(cols),
        label_column="attack",
        positive_label_values=frozenset({"1"}),
    )


def _cse_cic_ids2018_schema() -> DatasetSchema:
    numeric = [
        "Dst Port", "Flow Duration", "Tot Fwd Pkts", "Tot Bwd Pkts",
        "TotLen Fwd Pkts", "TotLen Bwd Pkts", "Fwd Pkt Len Max",
        "Fwd Pkt Len Min", "Fwd Pkt Len Mean", "Fwd Pkt Len Std",
        "Bwd Pkt Len Max", "Bwd Pkt Len Min", "Bwd Pkt Len Mean",
        "Bwd Pkt Len Std", "Flow Byts/s", "Flow Pkts/s", "Flow IAT Mean",
        "Flow IAT Std", "Flow IAT Max", "Flow IAT Min", "Fwd IAT Tot",
        "Fwd IAT Mean", "Fwd IAT Std", "Fwd IAT Max", "Fwd IAT Min",
        "Bwd IAT Tot", "Bwd IAT Mean", "Bwd IAT Std", "Bwd IAT Max",
        "Bwd IAT Min", "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags",
        "Bwd URG Flags", "Fwd Header Len", "Bwd Header Len", "Fwd Pkts/s",
        "Bwd Pkts/s", "Pkt Len Min", "Pkt Len Max", "Pkt Len Mean",
        "Pkt Len Std", "Pkt Len Var", "FIN Flag Cnt", "SYN Flag Cnt",
        "RST Flag Cnt", "PSH Flag Cnt", "ACK Flag Cnt", "URG Flag Cnt",
        "CWE Flag Count", "ECE Flag Cnt", "Down/Up Ratio", "Pkt Size Avg",
        "Fwd Seg Size Avg", "Bwd Seg Size Avg", "Fwd Byts/b Avg",
        "Fwd Pkts/b Avg", "Fwd Blk Rate Avg", "Bwd Byts/b Avg",
        "Bwd Pkts/b Avg", "Bwd Blk Rate Avg", "Subflow Fwd Pkts",
        "Subflow Fwd Byts", "Subflow Bwd Pkts", "Subflow Bwd Byts",
        "Init Fwd Win Byts", "Init Bwd Win Byts", "Fwd Act Data Pkts",
        "Fwd Seg Size Min", "Active Mean", "Active Std", "Active Max",
        "Active Min", "Idle Mean", "Idle Std", "Idle Max", "Idle Min",
    ]
    cols = [("Protocol", CATEGORICAL)] + [(c, NUMERIC) for c in numeric]
    attacks = frozenset({
        "Bot", "Brute Force -Web", "Brute Force -XSS", "DDOS attack-HOIC",
        "DDOS attack-LOIC-UDP", "DDoS attacks-LOIC-HTTP",
        "DoS attacks-GoldenEye", "DoS attacks-Hulk",
        "DoS attacks-SlowHTTPTest", "DoS attacks-Slowloris",
        "FTP-BruteForce", "Infilteration", "SQL Injection", "SSH-Bruteforce",
    })
    return DatasetSchema(
        name="cse-cic-ids2018",
        feature_columns=tuple(cols),
        label_column="Label",
        positive_label_values=attacks,
    )


_PRESETS = {
    "unsw-nb15": _unsw_nb15_schema,
    "bot-iot": _bot_iot_schema,
    "cse-cic-ids2018": _cse_cic_ids2018_schema,
}


def schema_preset(name: str) -> DatasetSchema:
    """Built-in schema for one of the supported public datasets."""
    try:
        return _PRESETS[name]()
    except KeyError:
        raise DataError(
            f"unknown schema preset {name!r}; available: {sorted(_PRESETS)}"
        ) from None


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_PRESETS))
