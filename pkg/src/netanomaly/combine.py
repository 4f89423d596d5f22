"""The 140-column feature matrix, Feature sum, and the random-forest combiner."""
from __future__ import annotations

import hashlib
import io
import json
import pickle
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats
from sklearn.ensemble import RandomForestRegressor

from . import localisation, netemd, pathfinder

BASIC_NAMES = (
    "std_degree",
    "comm_density_full",
    "comm_density_avg",
    "comm_gaw_full",
    "comm_gaw_avg",
    "gaw",
    "gaw_top10",
    "gaw_top20",
    "comm_density_config",
    "small_comm_flag",
)
FEATURE_NAMES = BASIC_NAMES + pathfinder.FEATURE_NAMES + netemd.FEATURE_NAMES + localisation.FEATURE_NAMES
N_FEATURES = len(FEATURE_NAMES)
DEFAULT_CUTOFF = 44
FOREST_FORMAT = 1


class SchemaError(ValueError):
    pass


def schema_hash(names) -> str:
    return hashlib.sha256("\n".join(names).encode()).hexdigest()


@dataclass
class FeatureMatrix:
    values: np.ndarray
    names: tuple = FEATURE_NAMES
    node_ids: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise SchemaError(f"expected {len(self.names)} columns, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise SchemaError("feature matrix contains non-finite values")
        if self.node_ids is None:
            self.node_ids = np.arange(self.values.shape[0])

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def select(self, names) -> "FeatureMatrix":
        missing = [c for c in names if c not in self.names]
        if missing:
            raise SchemaError(f"unknown feature columns: {', '.join(missing)}")
        idx = [self.names.index(c) for c in names]
        return FeatureMatrix(self.values[:, idx], tuple(names), self.node_ids)

    def to_csv(self, path) -> None:
        header = "node," + ",".join(self.names)
        rows = np.column_stack([self.node_ids, self.values])
        fmt = ["%d"] + ["%.17g"] * len(self.names)
        np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt=fmt)

    @classmethod
    def from_csv(cls, path) -> "FeatureMatrix":
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        if not header or header[0] != "node":
            raise SchemaError(f"{path}: first column must be 'node'")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 1:], tuple(header[1:]), data[:, 0].astype(np.int64))


def feature_sum(m) -> np.ndarray:
    values = m.values if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=float)
    return values.sum(axis=1)


@dataclass
class RegressionForest:
    model: RandomForestRegressor
    names: tuple

    @property
    def tree_count(self) -> int:
        return len(self.model.estimators_)

    def predict(self, m: FeatureMatrix) -> np.ndarray:
        if tuple(m.names) != tuple(self.names):
            # extra columns are fine (a full matrix feeding a selected-feature forest)
            missing = [c for c in self.names if c not in m.names]
            if missing:
                raise SchemaError(f"schema mismatch; missing columns: {', '.join(missing)}")
            m = m.select(self.names)
        return self.model.predict(m.values)

    def importance(self) -> np.ndarray:
        imp = np.asarray(self.model.feature_importances_, dtype=float)
        total = imp.sum()
        return imp / total if total > 0 else imp

    def save(self, path) -> None:
        manifest = {
            "format": FOREST_FORMAT,
            "kind": "regression_forest",
            "tree_count": self.tree_count,
            "names": list(self.names),
            "schema_sha256": schema_hash(self.names),
        }
        with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
            zf.writestr("manifest.json", json.dumps(manifest, indent=2))
            zf.writestr("model.pkl", pickle.dumps(self.model))

    @classmethod
    def load(cls, path) -> "RegressionForest":
        with zipfile.ZipFile(path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            if manifest.get("format") != FOREST_FORMAT:
                raise SchemaError(f"{path}: unsupported forest format {manifest.get('format')!r}")
            names = tuple(manifest["names"])
            if schema_hash(names) != manifest["schema_sha256"]:
                raise SchemaError(f"{path}: schema hash does not match the stored column names")
            model = pickle.load(io.BytesIO(zf.read("model.pkl")))
        return cls(model, names)


def train_forest(m: FeatureMatrix, y, tree_count: int = 10, seed=0) -> RegressionForest:
    """Bootstrap CART regression trees grown to purity, all features per split."""
    y = np.asarray(y, dtype=float)
    if m.n != len(y) or len(y) < 2:
        raise ValueError("need at least 2 labelled rows matching the feature matrix")
    model = RandomForestRegressor(
        n_estimators=tree_count,
        max_features=1.0,
        min_samples_split=2,
        bootstrap=True,
        random_state=int(seed),
    )
    model.fit(m.values, y)
    return RegressionForest(model, tuple(m.names))


def feature_ranks(importances) -> np.ndarray:
    """Rank 1 = most important; equal scores share the worst rank of their group."""
    imp = np.atleast_2d(np.asarray(importances, dtype=float))
    return np.vstack([stats.rankdata(-row, method="max") for row in imp])


def average_ranks(importances) -> np.ndarray:
    return feature_ranks(importances).mean(axis=0)


def select_features(importances, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Indices of the ``cutoff`` features with the best average rank (stable on ties)."""
    avg = average_ranks(importances)
    return np.sort(np.argsort(avg, kind="stable")[: min(cutoff, avg.size)])


def write_rank_curve(importances, path, names=FEATURE_NAMES) -> None:
    """Sorted average ranks as CSV, for picking the cutoff by eye."""
    avg = average_ranks(importances)
    order = np.argsort(avg, kind="stable")
    with open(Path(path), "w") as fh:
        fh.write("position,feature,average_rank\n")
        for pos, i in enumerate(order, 1):
            fh.write(f"{pos},{names[i]},{avg[i]:.6g}\n")
