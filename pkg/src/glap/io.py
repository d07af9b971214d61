"""File interchange: CSV matrices/labels/semantic tables, model JSON, reports.

Formats are deliberately minimal: comma-separated values, '.' decimal
point, no header, lines starting with '#' ignored.  Feature files store one
instance per ROW (ingestion transposes to the internal column convention).
Label files hold one integer per line.  Semantic-table files hold a class
id followed by the vector entries on each row.

All writers are deterministic: floats use the shortest round-trip decimal
form, JSON keys are sorted, newlines are LF, encoding is UTF-8.  Re-running
a command on the same inputs reproduces output files byte for byte.
"""

from __future__ import annotations

import json
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .datasets import FeatureMatrix, LabelVector, SemanticTable
from .model import GlapModel, Metric, PredictionResult, Strategy, StrategyConfig
from .prototypes import VirtualDataset
from .solvers import LinearMap
from .synthetic import EvalReport, SweepReport, SyntheticConfig
from .transfer import TransferReport

MODEL_FORMAT_VERSION = 1


def _data_lines(path: str) -> Iterable[Tuple[int, str]]:
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def _parse_float(token: str, path: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: not a number: {token!r}") from None
    if not np.isfinite(value):
        raise ValueError(f"{path}:{lineno}: non-finite value {token!r}")
    return value


def _l2_normalize_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0  # zero rows stay zero
    return rows / norms


def load_features(path: str, normalize: bool = False) -> FeatureMatrix:
    """Read a feature CSV (one instance per row) into column convention.

    ``normalize`` rescales each instance to unit L2 norm before transposing.
    """
    rows: List[List[float]] = []
    width = None
    for lineno, line in _data_lines(path):
        values = [_parse_float(tok, path, lineno) for tok in line.split(",")]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ValueError(
                f"{path}:{lineno}: expected {width} values per row, got {len(values)}"
            )
        rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no instances")
    matrix = np.asarray(rows, dtype=np.float64)
    if normalize:
        matrix = _l2_normalize_rows(matrix)
    return FeatureMatrix(matrix.T)


def load_labels(path: str) -> LabelVector:
    """Read a label file: one non-negative integer per line."""
    labels: List[int] = []
    for lineno, line in _data_lines(path):
        try:
            value = int(line)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not an integer label: {line!r}") from None
        if value < 0:
            raise ValueError(f"{path}:{lineno}: negative class id {value}")
        labels.append(value)
    if not labels:
        raise ValueError(f"{path}: no labels")
    return LabelVector(np.asarray(labels, dtype=np.int64))


def load_semantics(path: str, normalize: bool = False) -> SemanticTable:
    """Read a semantic table: rows of ``class_id, v1, ..., va``."""
    entries: List[Tuple[int, List[float]]] = []
    width = None
    for lineno, line in _data_lines(path):
        tokens = line.split(",")
        if len(tokens) < 2:
            raise ValueError(f"{path}:{lineno}: expected a class id and a vector")
        try:
            class_id = int(tokens[0])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not an integer class id: {tokens[0]!r}") from None
        vector = [_parse_float(tok, path, lineno) for tok in tokens[1:]]
        if width is None:
            width = len(vector)
        elif len(vector) != width:
            raise ValueError(
                f"{path}:{lineno}: expected vectors of length {width}, got {len(vector)}"
            )
        entries.append((class_id, vector))
    if not entries:
        raise ValueError(f"{path}: no semantic entries")
    ids = np.asarray([c for c, _ in entries], dtype=np.int64)
    vectors = np.asarray([v for _, v in entries], dtype=np.float64)
    if normalize:
        vectors = _l2_normalize_rows(vectors)
    try:
        return SemanticTable(ids, vectors.T)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _fmt(value: float) -> str:
    # shortest decimal that round-trips the float64
    return repr(float(value))


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def write_instances_csv(path: str, columns: np.ndarray) -> None:
    """Write a matrix in column-instance convention as one row per instance."""
    lines = [",".join(_fmt(v) for v in columns[:, j]) for j in range(columns.shape[1])]
    _write_text(path, "\n".join(lines) + "\n")


def write_labels_csv(path: str, labels: np.ndarray) -> None:
    _write_text(path, "\n".join(str(int(v)) for v in labels) + "\n")


def write_predictions_csv(path: str, result: PredictionResult) -> None:
    """Rows of ``instance_index, predicted_class_id, score...`` (table order)."""
    lines = []
    for i in range(result.labels.size):
        scores = ",".join(_fmt(v) for v in result.scores[i])
        lines.append(f"{i},{int(result.labels[i])},{scores}")
    _write_text(path, "\n".join(lines) + "\n")


def write_json(path: str, payload) -> None:
    _write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def model_to_dict(model: GlapModel) -> dict:
    a, d = model.map.matrix.shape
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "a": a,
        "d": d,
        "metric": model.config.metric.value,
        "strategy": model.config.strategy.value,
        "lambda": model.config.lambda_,
        "npc": model.config.npc,
        "sigma2": model.config.sigma2,
        "seed": model.config.seed,
        "ridge_eps": model.map.ridge_eps,
        "A": [float(v) for v in model.map.matrix.ravel(order="C")],
        "unseen": [
            {"class_id": class_id, "vector": [float(v) for v in vector]}
            for class_id, vector in model.unseen.entries()
        ],
        "provenance": dict(model.provenance),
    }


def save_model(path: str, model: GlapModel) -> None:
    write_json(path, model_to_dict(model))


def load_model(path: str) -> GlapModel:
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format version {version!r}")
    a, d = int(payload["a"]), int(payload["d"])
    flat = np.asarray(payload["A"], dtype=np.float64)
    if flat.size != a * d:
        raise ValueError(f"{path}: map has {flat.size} entries, expected {a * d}")
    linmap = LinearMap(flat.reshape(a, d), np.zeros(a), float(payload["ridge_eps"]))
    unseen = SemanticTable.from_entries(
        (entry["class_id"], entry["vector"]) for entry in payload["unseen"]
    )
    sigma2 = payload["sigma2"]
    config = StrategyConfig(
        strategy=Strategy(payload["strategy"]),
        lambda_=float(payload["lambda"]),
        npc=int(payload["npc"]),
        sigma2=None if sigma2 is None else float(sigma2),
        ridge_eps=float(payload["ridge_eps"]),
        seed=int(payload["seed"]),
        metric=Metric(payload["metric"]),
    )
    return GlapModel(linmap, unseen, config, dict(payload.get("provenance", {})))


def transfer_report_to_dict(report: TransferReport) -> dict:
    return {
        "tolerance": report.tolerance,
        "classes": [
            {
                "class_id": entry.class_id,
                "relative_residual": entry.relative_residual,
                "transferable": entry.transferable,
            }
            for entry in report.per_class
        ],
    }


def synthetic_config_to_dict(config: Optional[SyntheticConfig]) -> Optional[dict]:
    if config is None:
        return None
    return {
        "latent_dim": config.latent_dim,
        "feature_dim": config.feature_dim,
        "semantic_dim": config.semantic_dim,
        "n_seen": config.n_seen,
        "n_unseen": config.n_unseen,
        "samples_per_class": config.samples_per_class,
        "obs_noise": config.obs_noise,
        "mixing": config.mixing.value,
        "seed": config.seed,
    }


def eval_report_to_dict(report: EvalReport) -> dict:
    return {
        "config": synthetic_config_to_dict(report.config),
        "seeds": list(report.seeds),
        "margins": dict(report.margins),
        "strategies": [
            {
                "name": outcome.name,
                "accuracy": outcome.accuracy,
                "mean_accuracy": outcome.mean_accuracy,
                "std_accuracy": outcome.std_accuracy,
                "per_trial_accuracies": list(outcome.per_trial),
                "class_ids": [int(c) for c in outcome.class_ids],
                "confusion": outcome.confusion.tolist(),
            }
            for outcome in report.strategies
        ],
    }


def write_sweep_csv(path: str, report: SweepReport) -> None:
    lines = ["# npc,strategy,mean_accuracy,std_accuracy"]
    for row in report.rows:
        lines.append(
            f"{row.npc},{row.strategy},{_fmt(row.mean_accuracy)},{_fmt(row.std_accuracy)}"
        )
    _write_text(path, "\n".join(lines) + "\n")


def write_virtual_dataset(
    dataset: VirtualDataset,
    features_path: str,
    labels_path: Optional[str] = None,
    semantics_path: Optional[str] = None,
) -> None:
    write_instances_csv(features_path, dataset.features)
    if labels_path is not None:
        write_labels_csv(labels_path, dataset.labels)
    if semantics_path is not None:
        write_instances_csv(semantics_path, dataset.semantics)
