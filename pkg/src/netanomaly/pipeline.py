"""End-to-end orchestration: features, rankings, training, evaluation and run manifests."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basic import gaw_features, standardized_degree
from .combine import (
    FEATURE_NAMES,
    FeatureMatrix,
    RegressionForest,
    feature_sum,
    select_features,
    train_forest,
    write_rank_curve,
)
from .community import augment, community_features, detect_communities
from .generators import default_count_range, generate_weighted_er, plant_anomalies, training_grid
from .graph import GraphError, WeightedDigraph, load_edge_list, load_ground_truth
from .localisation import FEATURE_NAMES as LOC_NAMES
from .localisation import localisation_features
from .metrics import K_GRID, average_precision, precision_recall_at
from .netemd import FEATURE_NAMES as NETEMD_NAMES
from .netemd import netemd_features
from .pathfinder import FEATURE_NAMES as PATH_NAMES
from .pathfinder import path_features

log = logging.getLogger(__name__)

COMMUNITY_COLUMNS = ("comm_density_full", "comm_density_avg", "comm_gaw_full", "comm_gaw_avg",
                     "comm_density_config", "small_comm_flag")


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    seed: int = 0
    gaw_samples: int = 10_000
    community_replicas: int = 20
    localisation_replicas: int = 500
    share_operator_replicas: bool = False
    netemd_reference: int = 15
    netemd_null: int = 100
    path_replicas: int = 20
    beam_width: int = 5000
    max_path_size: int = 21
    augment_quantile: float = 0.99
    alpha: float = 0.05
    cutoff: int = 44
    tree_count: int = 10
    train_fraction: float = 0.7
    workers: int = 1

    def __post_init__(self):
        counts = ("gaw_samples", "community_replicas", "localisation_replicas", "netemd_reference",
                  "netemd_null", "path_replicas", "beam_width", "cutoff", "tree_count", "workers")
        for name in counts:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not 3 <= self.max_path_size <= 32:
            raise ConfigError("max_path_size must lie in [3, 32]")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if not 0 < self.augment_quantile < 1:
            raise ConfigError("augment_quantile must lie in (0, 1)")
        if not 0 < self.train_fraction <= 1:
            raise ConfigError("train_fraction must lie in (0, 1]")

    @classmethod
    def desk(cls, **overrides) -> "PipelineConfig":
        """Reduced replica counts for single-core runs at n of a few thousand."""
        base = dict(gaw_samples=2000, localisation_replicas=60, netemd_null=40, beam_width=1000)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def profile(cls, name: str, **overrides) -> "PipelineConfig":
        if name == "full":
            return cls(**overrides)
        if name == "desk":
            return cls.desk(**overrides)
        raise ConfigError(f"unknown profile {name!r} (expected 'full' or 'desk')")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def updated(self, values: dict) -> "PipelineConfig":
        """Copy with string or typed overrides applied; unknown keys are errors."""
        fields = {f.name: f for f in dataclasses.fields(self)}
        out = self.to_dict()
        for key, raw in values.items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            kind = type(out[key])
            if isinstance(raw, str):
                try:
                    raw = raw.strip().lower() in ("1", "true", "yes") if kind is bool else kind(raw)
                except ValueError:
                    raise ConfigError(f"bad value for {key}: {raw!r}") from None
            out[key] = raw
        return PipelineConfig(**out)

    @staticmethod
    def read_file(path) -> dict:
        """Flat ``key = value`` lines; ``#`` comments."""
        values = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, val = (t.strip() for t in text.split("=", 1))
            values[key] = val
        return values


def unit_seed(seed: int, *keys: int) -> int:
    """Stable 32-bit seed for one unit of work."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


@dataclass
class Timer:
    stages: dict = field(default_factory=dict)

    def run(self, stage: str, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage, exc) from exc
        finally:
            self.stages[stage] = self.stages.get(stage, 0.0) + time.perf_counter() - t0


def _community_unit(args):
    """Localisation and NetEMD columns for one community (picklable for process pools)."""
    sub, aug_sub, seed, cfg = args
    loc = localisation_features(aug_sub, seed=unit_seed(seed, 1), n_replicas=cfg.localisation_replicas,
                                alpha=cfg.alpha, share_operators=cfg.share_operator_replicas)
    ne = netemd_features(sub, aug_sub, seed=unit_seed(seed, 2), n_reference=cfg.netemd_reference,
                         n_null=cfg.netemd_null, alpha=cfg.alpha)
    return loc.features, ne.features, len(loc.diagnostics)


@dataclass
class DetectionResult:
    features: FeatureMatrix
    partition: np.ndarray
    timings: dict
    diagnostics: dict


def compute_features(g: WeightedDigraph, cfg: PipelineConfig, partial: dict | None = None) -> DetectionResult:
    """All 140 features of ``g``.

    ``partial`` (if given) receives the matrix as it fills, so a caller
    can flush it when a later stage fails.
    """
    values = np.zeros((g.n, len(FEATURE_NAMES)))
    if partial is not None:
        partial["values"] = values
    col = {name: i for i, name in enumerate(FEATURE_NAMES)}
    timer = Timer()
    diag: dict = {}
    seed = cfg.seed

    values[:, col["std_degree"]] = timer.run("basic", standardized_degree, g)
    if g.m:
        gaw = timer.run("basic", gaw_features, g, unit_seed(seed, 1), cfg.gaw_samples, cfg.alpha)
        values[:, [col["gaw"], col["gaw_top10"], col["gaw_top20"]]] = gaw

    if g.m == 0:
        return DetectionResult(FeatureMatrix(values, node_ids=np.arange(g.n)), np.zeros(g.n, np.int64),
                               timer.stages, diag)

    aug = timer.run("augment", augment, g, cfg.augment_quantile)
    part = timer.run("community", detect_communities, aug, unit_seed(seed, 2))
    diag["communities"] = part.count
    diag["augmented_edges"] = aug.added
    comm = timer.run("community", community_features, g, part, unit_seed(seed, 3),
                     cfg.community_replicas, cfg.augment_quantile)
    values[:, [col[c] for c in COMMUNITY_COLUMNS]] = comm

    members = [m for m in part.members() if len(m) >= 2]
    jobs = [(g.subgraph(m), aug.graph.subgraph(m), unit_seed(seed, 4, c), cfg) for c, m in enumerate(members)]
    loc_cols = [col[c] for c in LOC_NAMES]
    ne_cols = [col[c] for c in NETEMD_NAMES]

    def per_community():
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                results = list(pool.map(_community_unit, jobs))
        else:
            results = map(_community_unit, jobs)
        large = 0
        for m, (loc, ne, n_large) in zip(members, results):
            values[np.ix_(m, loc_cols)] = loc
            values[np.ix_(m, ne_cols)] = ne
            large += n_large
        return large

    diag["sign_large_number_cases"] = timer.run("localisation+netemd", per_community)
    paths = timer.run("pathfinder", path_features, g, unit_seed(seed, 5), cfg.path_replicas,
                      cfg.max_path_size, cfg.beam_width, cfg.alpha)
    values[:, [col[c] for c in PATH_NAMES]] = paths
    return DetectionResult(FeatureMatrix(values, node_ids=np.arange(g.n)), part.labels, timer.stages, diag)


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    import numba
    import scipy
    import sklearn

    return {"netanomaly": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__, "scikit-learn": sklearn.__version__}


def write_manifest(path, command: str, cfg: PipelineConfig | None, inputs: dict, timings: dict,
                   extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config": cfg.to_dict() if cfg else None,
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in inputs.items()},
        "versions": versions(),
        "timings_s": {k: round(v, 3) for k, v in timings.items()},
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def write_ranking(path, labels, scores) -> None:
    """``node,score,rank`` sorted by score (rank 1 = most anomalous; ties share the best rank)."""
    scores = np.asarray(scores, dtype=float)
    order = np.lexsort((np.arange(len(scores)), -scores))
    ranks = np.empty(len(scores), dtype=np.int64)
    s = scores[order]
    first = np.r_[True, s[1:] != s[:-1]]
    ranks[order] = np.maximum.accumulate(np.where(first, np.arange(1, len(s) + 1), 0))
    with open(path, "w") as fh:
        fh.write("node,score,rank\n")
        for i in order:
            fh.write(f"{labels[i]},{float(scores[i])!r},{ranks[i]}\n")


def read_ranking(path) -> dict:
    out = {}
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != ["node", "score"]:
            raise GraphError(f"{path}: expected a node,score header")
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            try:
                out[parts[0]] = float(parts[1])
            except (IndexError, ValueError):
                raise GraphError(f"{path}:{lineno}: bad ranking row {line.strip()!r}") from None
    return out


def run_detect(graph_path, cfg: PipelineConfig, out_dir, model_path=None) -> DetectionResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(graph_path) as fh:
        g = load_edge_list(fh)
    forest = RegressionForest.load(model_path) if model_path else None
    partial: dict = {}
    t0 = time.perf_counter()
    try:
        res = compute_features(g, cfg, partial)
    except StageError:
        if "values" in partial:
            FeatureMatrix(partial["values"], node_ids=np.arange(g.n)).to_csv(out / "features.partial.csv")
        raise
    labels = g.node_labels()
    res.features.node_ids = np.arange(g.n)
    _write_features(res.features, labels, out / "features.csv")
    write_ranking(out / "ranking_feature_sum.csv", labels, feature_sum(res.features))
    inputs = {"graph": graph_path}
    if forest is not None:
        write_ranking(out / "ranking_forest.csv", labels, forest.predict(res.features))
        inputs["model"] = model_path
    res.timings["total"] = time.perf_counter() - t0
    write_manifest(out / "manifest.json", "detect", cfg, inputs, res.timings, {"diagnostics": res.diagnostics})
    return res


def _write_features(m: FeatureMatrix, labels, path) -> None:
    with open(path, "w") as fh:
        fh.write("node," + ",".join(m.names) + "\n")
        for lab, row in zip(labels, m.values):
            fh.write(f"{lab}," + ",".join(repr(float(v)) for v in row) + "\n")


@dataclass
class TrainingSet:
    """Labelled feature matrices grouped by (p, w) regime."""
    regimes: list = field(default_factory=list)  # [(p, w)]
    matrices: list = field(default_factory=list)  # per regime: [FeatureMatrix]
    labels: list = field(default_factory=list)  # per regime: [np.ndarray]


def build_training_set(cfg: PipelineConfig, n: int, grid=None, networks_per_regime: int = 2,
                       count_range=None) -> TrainingSet:
    grid = list(training_grid(n) if grid is None else grid)
    if not grid:
        raise ConfigError("training grid is empty")
    count_range = count_range or default_count_range(n)
    ts = TrainingSet()
    for r, (p, w) in enumerate(grid):
        mats, labs = [], []
        for k in range(networks_per_regime):
            s = unit_seed(cfg.seed, 7, r, k)
            g = generate_weighted_er(n, p, seed=s)
            g, truth = plant_anomalies(g, w, seed=s + 1, count_range=count_range)
            mats.append(compute_features(g, cfg.updated({"seed": s}), None).features)
            labs.append(truth.labels.astype(float))
        ts.regimes.append((p, w))
        ts.matrices.append(mats)
        ts.labels.append(labs)
    return ts


@dataclass
class TrainResult:
    forest: RegressionForest
    selected: tuple
    importances: np.ndarray


def train_from_set(ts: TrainingSet, cfg: PipelineConfig) -> TrainResult:
    """Per-regime forests, average-rank selection, then one forest on the pooled training rows."""
    if not ts.regimes:
        raise ConfigError("training grid is empty")
    imps, pooled_x, pooled_y = [], [], []
    for r, (mats, labs) in enumerate(zip(ts.matrices, ts.labels)):
        n_train = max(1, int(round(cfg.train_fraction * len(mats))))
        x = np.vstack([m.values for m in mats[:n_train]])
        y = np.concatenate(labs[:n_train])
        forest = train_forest(FeatureMatrix(x), y, cfg.tree_count, unit_seed(cfg.seed, 8, r))
        imps.append(forest.importance())
        pooled_x.append(x)
        pooled_y.append(y)
    imps = np.array(imps)
    keep = select_features(imps, cfg.cutoff)
    names = tuple(FEATURE_NAMES[i] for i in keep)
    x = FeatureMatrix(np.vstack(pooled_x)).select(names)
    final = train_forest(x, np.concatenate(pooled_y), cfg.tree_count, unit_seed(cfg.seed, 9))
    return TrainResult(final, names, imps)


def run_train(cfg: PipelineConfig, out_dir, n: int = 2000, grid=None, networks_per_regime: int = 2) -> TrainResult:
    if grid is not None and not list(grid):
        raise ConfigError("training grid is empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timer = Timer()
    ts = timer.run("features", build_training_set, cfg, n, grid, networks_per_regime)
    res = timer.run("train", train_from_set, ts, cfg)
    res.forest.save(out / "model.zip")
    (out / "selected_features.txt").write_text("\n".join(res.selected) + "\n")
    write_rank_curve(res.importances, out / "rank_curve.csv")
    np.savetxt(out / "importances.csv", res.importances, delimiter=",", header=",".join(FEATURE_NAMES),
               comments="", fmt="%.17g")
    write_manifest(out / "manifest.json", "train", cfg, {}, timer.stages,
                   {"n": n, "regimes": [list(r) for r in ts.regimes], "networks_per_regime": networks_per_regime})
    return res


def evaluate_scores(scores, truth, ks=K_GRID) -> list[tuple[str, int | None, float]]:
    rows = []
    n = len(scores)
    for k in ks:
        if k > n:
            break
        p, r = precision_recall_at(scores, truth, k)
        rows += [("precision", k, p), ("recall", k, r)]
    rows.append(("average_precision", None, average_precision(scores, truth)))
    return rows


def run_evaluate(ranking_path, truth_path, graph_path, out_path) -> list:
    with open(graph_path) as fh:
        g = load_edge_list(fh)
    with open(truth_path) as fh:
        truth = load_ground_truth(fh, g)
    ranked = read_ranking(ranking_path)
    labels = [str(x) for x in g.node_labels()]
    missing = [lab for lab in labels if lab not in ranked]
    if missing:
        shown = ", ".join(missing[:20]) + (" ..." if len(missing) > 20 else "")
        raise GraphError(f"ranking misses {len(missing)} node(s): {shown}")
    scores = np.array([ranked[lab] for lab in labels])
    rows = evaluate_scores(scores, truth.labels)
    write_metrics(out_path, rows)
    return rows


def write_metrics(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("metric,k,value\n")
        for name, k, v in rows:
            fh.write(f"{name},{'' if k is None else k},{float(v)!r}\n")


def read_metrics(path) -> list:
    rows = []
    with open(path) as fh:
        fh.readline()
        for line in fh:
            name, k, v = line.strip().split(",")
            rows.append((name, int(k) if k else None, float(v)))
    return rows


def read_features(path) -> tuple[list[str], FeatureMatrix]:
    """Inverse of the ``features.csv`` written by :func:`run_detect`; node labels stay strings."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "node":
            raise GraphError(f"{path}: first column must be 'node'")
        labels, rows = [], []
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != len(header):
                raise GraphError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
            labels.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    values = np.array(rows).reshape(len(rows), len(header) - 1)
    return labels, FeatureMatrix(values, tuple(header[1:]))
