"""Shared synthetic-data builders for the test suite."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from flowids.ingest import DatasetTable


def make_separable_table(seed: int, n: int = 200, margin: float = 0.2) -> DatasetTable:
    """Two uniform features, label = 1[x0 + x1 > 0], margin-separated."""
    rng = np.random.default_rng(seed)
    rows = []
    while len(rows) < n:
        x = rng.uniform(-2.0, 2.0, 2)
        if abs(x[0] + x[1]) > margin:
            rows.append(x)
    feats = np.array(rows)
    labels = (feats[:, 0] + feats[:, 1] > 0).astype(np.int64)
    return DatasetTable(features=feats, feature_names=("a", "b"), labels=labels)


def make_noise_table(seed: int, n: int = 500, n_features: int = 10) -> DatasetTable:
    """Gaussian features; label depends on features 0 and 1 only."""
    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((n, n_features))
    labels = (feats[:, 0] + feats[:, 1] > 0).astype(np.int64)
    names = tuple(f"f{i}" for i in range(n_features))
    return DatasetTable(features=feats, feature_names=names, labels=labels)


def write_table_csv(table: DatasetTable, path: Path, label_column: str = "verdict",
                    positive: str = "attack", negative: str = "normal") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(table.feature_names) + f",{label_column}\n")
        for i in range(table.n_rows):
            cells = [repr(float(v)) for v in table.features[i]]
            cells.append(positive if table.labels[i] == 1 else negative)
            fh.write(",".join(cells) + "\n")


def inline_schema(table: DatasetTable, label_column: str = "verdict",
                  positive: str = "attack") -> dict:
    return {
        "name": "synthetic",
        "feature_columns": [[name, "numeric"] for name in table.feature_names],
        "label_column": label_column,
        "positive_label_values": [positive],
    }


def base_config_doc(csv_path: Path, schema: dict, **overrides) -> dict:
    doc = {
        "dataset": {"path": str(csv_path), "schema": schema},
        "k_folds": 2,
        "repetitions": 1,
        "seed": 7,
        "svd": {"enabled": False},
        "selection": {"method": "none"},
        "train": {"epochs": 40, "batch_size": 32, "learning_rate": 3e-3,
                  "hidden_size": 16},
    }
    doc.update(overrides)
    return doc


@pytest.fixture
def separable_csv(tmp_path):
    """A separable synthetic dataset on disk plus its config document."""
    table = make_separable_table(seed=0, n=240)
    csv_path = tmp_path / "separable.csv"
    write_table_csv(table, csv_path)
    doc = base_config_doc(csv_path, inline_schema(table))
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(doc), encoding="utf-8")
    return {"table": table, "csv": csv_path, "doc": doc, "config_path": cfg_path}
