"""Cleaning, encoding, scaling, and splitting of flow records.

All fitted parameters (category vocabularies, scaler moments) come from
training rows only; apply steps are pure and reusable at inference time
without any training data present.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import TooFewRows
from .ingest import ATTACK, FlowRecord

NUMERIC_FIELDS = (
    "src_port",
    "dst_port",
    "duration",
    "orig_bytes",
    "resp_bytes",
    "orig_pkts",
    "orig_ip_bytes",
    "resp_pkts",
    "resp_ip_bytes",
)
OPTIONAL_NUMERIC = ("duration", "orig_bytes", "resp_bytes")
CATEGORICAL_FIELDS = ("proto", "service", "conn_state", "history")

KIND_NUMERIC = "numeric"
KIND_BIT = "bit"

STD_FLOOR = 1e-12


@dataclass
class EncodingSpec:
    """Binary-positional codes for categorical features.

    Categories get dense codes 1..|vocab| in first-appearance order; code 0
    is reserved for unseen or missing values. A feature with |vocab|
    categories spans ceil(log2(|vocab|+1)) bit columns, most significant
    bit first.
    """

    vocabularies: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        self._maps: dict[str, dict[str, int]] = {}

    def width(self, feature: str) -> int:
        size = len(self.vocabularies[feature])
        return max(1, math.ceil(math.log2(size + 1)))

    def code(self, feature: str, value: Optional[str]) -> int:
        if value is None:
            return 0
        table = self._maps.get(feature)
        if table is None:
            table = {v: i + 1 for i, v in enumerate(self.vocabularies[feature])}
            self._maps[feature] = table
        return table.get(value, 0)

    def bit_names(self, feature: str) -> list[str]:
        w = self.width(feature)
        return [f"{feature}_bit{b}" for b in range(w - 1, -1, -1)]

    def to_dict(self) -> dict:
        return {"vocabularies": self.vocabularies}

    @classmethod
    def from_dict(cls, data: dict) -> "EncodingSpec":
        return cls(vocabularies={k: list(v) for k, v in data["vocabularies"].items()})


@dataclass
class ScalerParams:
    """Per-column standardization moments fitted on training rows."""

    feature_names: list[str]
    mean: np.ndarray
    std: np.ndarray  # floored at STD_FLOOR

    def to_dict(self) -> dict:
        return {
            "feature_names": self.feature_names,
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalerParams":
        return cls(
            feature_names=list(data["feature_names"]),
            mean=np.asarray(data["mean"], dtype=np.float64),
            std=np.asarray(data["std"], dtype=np.float64),
        )


@dataclass
class Dataset:
    """Numeric feature matrix with per-column kind metadata and labels."""

    feature_names: list[str]
    feature_kinds: list[str]
    values: np.ndarray  # (n, p) float64
    labels: Optional[np.ndarray]  # (n,) int, 0=Benign 1=Attack, None if unlabeled
    scaled: bool = False
    scaler: Optional[ScalerParams] = None
    encoding: Optional[EncodingSpec] = None

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        if len(self.feature_names) != self.values.shape[1]:
            raise ValueError("feature_names length must match column count")
        if len(self.feature_kinds) != len(self.feature_names):
            raise ValueError("feature_kinds length must match feature_names")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature_names must be unique")
        if not np.isfinite(self.values).all():
            raise ValueError("values must be finite")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape[0] != self.values.shape[0]:
                raise ValueError("labels length must match row count")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def numeric_columns(self) -> np.ndarray:
        return np.array([k == KIND_NUMERIC for k in self.feature_kinds], dtype=bool)

    def take(self, indices: np.ndarray) -> "Dataset":
        return Dataset(
            feature_names=list(self.feature_names),
            feature_kinds=list(self.feature_kinds),
            values=self.values[indices],
            labels=None if self.labels is None else self.labels[indices],
            scaled=self.scaled,
            scaler=self.scaler,
            encoding=self.encoding,
        )

    def select(self, names: Sequence[str]) -> "Dataset":
        """Project to a feature subset, preserving original column order."""
        wanted = set(names)
        unknown = wanted - set(self.feature_names)
        if unknown:
            raise KeyError(f"unknown features: {sorted(unknown)}")
        idx = [i for i, n in enumerate(self.feature_names) if n in wanted]
        return Dataset(
            feature_names=[self.feature_names[i] for i in idx],
            feature_kinds=[self.feature_kinds[i] for i in idx],
            values=self.values[:, idx],
            labels=self.labels,
            scaled=self.scaled,
            scaler=self.scaler,
            encoding=self.encoding,
        )


@dataclass
class DataSplit:
    train: Dataset
    validation: Dataset
    test: Dataset
    seed: int
    train_idx: Optional[np.ndarray] = None
    validation_idx: Optional[np.ndarray] = None
    test_idx: Optional[np.ndarray] = None


@dataclass
class CleanReport:
    input_rows: int = 0
    duplicates_removed: int = 0
    inconsistent_dropped: int = 0
    missing_counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "input_rows": self.input_rows,
            "duplicates_removed": self.duplicates_removed,
            "inconsistent_dropped": self.inconsistent_dropped,
            "missing_counts": dict(self.missing_counts),
        }


def clean(records: Sequence[FlowRecord]) -> tuple[list[FlowRecord], CleanReport]:
    """Deduplicate, drop byte-accounting inconsistencies, count missingness.

    Duplicates compare all 13 features plus label (never detailed_label);
    the first occurrence survives. Rows where payload bytes exceed IP-layer
    bytes are dropped and counted. Missing optional numerics stay None here;
    assemble() materializes the impute-to-0 plus indicator-bit view.
    """
    report = CleanReport(input_rows=len(records))
    report.missing_counts = {f: 0 for f in OPTIONAL_NUMERIC}
    seen = set()
    out: list[FlowRecord] = []
    for rec in records:
        key = rec.feature_key()
        if key in seen:
            report.duplicates_removed += 1
            continue
        seen.add(key)
        if (rec.orig_bytes is not None and rec.orig_bytes > rec.orig_ip_bytes) or (
            rec.resp_bytes is not None and rec.resp_bytes > rec.resp_ip_bytes
        ):
            report.inconsistent_dropped += 1
            continue
        for f in OPTIONAL_NUMERIC:
            if getattr(rec, f) is None:
                report.missing_counts[f] += 1
        out.append(rec)
    return out, report


def fit_encoding(records: Sequence[FlowRecord]) -> EncodingSpec:
    """Vocabulary per categorical feature, in first-appearance order."""
    vocab: dict[str, list[str]] = {f: [] for f in CATEGORICAL_FIELDS}
    seen: dict[str, set] = {f: set() for f in CATEGORICAL_FIELDS}
    for rec in records:
        for f in CATEGORICAL_FIELDS:
            value = getattr(rec, f)
            if value is None or value in seen[f]:
                continue
            seen[f].add(value)
            vocab[f].append(value)
    return EncodingSpec(vocabularies=vocab)


def feature_layout(spec: EncodingSpec) -> tuple[list[str], list[str]]:
    """Column names and kinds of the assembled dataset for a fitted spec."""
    names = list(NUMERIC_FIELDS)
    kinds = [KIND_NUMERIC] * len(NUMERIC_FIELDS)
    for f in OPTIONAL_NUMERIC:
        names.append(f"{f}_missing")
        kinds.append(KIND_BIT)
    for f in CATEGORICAL_FIELDS:
        for bit in spec.bit_names(f):
            names.append(bit)
            kinds.append(KIND_BIT)
    return names, kinds


def apply_encoding(spec: EncodingSpec, records: Sequence[FlowRecord]) -> Dataset:
    """Bit-column view of the categorical features only."""
    names: list[str] = []
    kinds: list[str] = []
    for f in CATEGORICAL_FIELDS:
        names.extend(spec.bit_names(f))
        kinds.extend([KIND_BIT] * spec.width(f))
    values = np.zeros((len(records), len(names)), dtype=np.float64)
    col = 0
    for f in CATEGORICAL_FIELDS:
        w = spec.width(f)
        codes = np.array([spec.code(f, getattr(r, f)) for r in records], dtype=np.int64)
        for b in range(w):
            values[:, col + b] = (codes >> (w - 1 - b)) & 1
        col += w
    labels = _labels_array(records)
    return Dataset(names, kinds, values, labels, encoding=spec)


def _labels_array(records: Sequence[FlowRecord]) -> Optional[np.ndarray]:
    labels = [r.label for r in records]
    if all(l is None for l in labels):
        return None
    if any(l is None for l in labels):
        raise ValueError("mixed labeled and unlabeled records")
    return np.array([1 if l == ATTACK else 0 for l in labels], dtype=np.int64)


def assemble(records: Sequence[FlowRecord], spec: EncodingSpec) -> Dataset:
    """Full model-ready matrix: numerics, missingness bits, categorical bits.

    Missing optional numerics become 0 with the companion ``*_missing``
    indicator set to 1, so tree splits can still separate missingness.
    """
    names, kinds = feature_layout(spec)
    n = len(records)
    values = np.zeros((n, len(names)), dtype=np.float64)
    col = 0
    for f in NUMERIC_FIELDS:
        raw = [getattr(r, f) for r in records]
        values[:, col] = [0.0 if v is None else float(v) for v in raw]
        col += 1
    for f in OPTIONAL_NUMERIC:
        values[:, col] = [1.0 if getattr(r, f) is None else 0.0 for r in records]
        col += 1
    for f in CATEGORICAL_FIELDS:
        w = spec.width(f)
        codes = np.array([spec.code(f, getattr(r, f)) for r in records], dtype=np.int64)
        for b in range(w):
            values[:, col + b] = (codes >> (w - 1 - b)) & 1
        col += w
    return Dataset(names, kinds, values, _labels_array(records), encoding=spec)


def assemble_row(record: FlowRecord, spec: EncodingSpec) -> np.ndarray:
    """Single-record fast path used by the streaming classifier."""
    parts = []
    for f in NUMERIC_FIELDS:
        v = getattr(record, f)
        parts.append(0.0 if v is None else float(v))
    for f in OPTIONAL_NUMERIC:
        parts.append(1.0 if getattr(record, f) is None else 0.0)
    for f in CATEGORICAL_FIELDS:
        w = spec.width(f)
        code = spec.code(f, getattr(record, f))
        for b in range(w):
            parts.append(float((code >> (w - 1 - b)) & 1))
    return np.asarray(parts, dtype=np.float64)


def fit_scaler(dataset: Dataset) -> ScalerParams:
    """Population mean/std of the numeric columns, std floored at 1e-12."""
    mask = dataset.numeric_columns()
    cols = np.flatnonzero(mask)
    mean = dataset.values[:, cols].mean(axis=0)
    std = dataset.values[:, cols].std(axis=0)
    std = np.maximum(std, STD_FLOOR)
    return ScalerParams(
        feature_names=[dataset.feature_names[i] for i in cols],
        mean=mean,
        std=std,
    )


def _scaler_column_map(params: ScalerParams, dataset: Dataset) -> list[tuple[int, int]]:
    pos = {n: i for i, n in enumerate(params.feature_names)}
    pairs = []
    for col, name in enumerate(dataset.feature_names):
        if dataset.feature_kinds[col] == KIND_NUMERIC:
            if name not in pos:
                raise KeyError(f"scaler has no parameters for column {name!r}")
            pairs.append((col, pos[name]))
    return pairs


def apply_scaler(params: ScalerParams, dataset: Dataset) -> Dataset:
    """Standardize numeric columns; bit columns pass through untouched."""
    values = dataset.values.copy()
    for col, j in _scaler_column_map(params, dataset):
        values[:, col] = (values[:, col] - params.mean[j]) / params.std[j]
    return Dataset(
        list(dataset.feature_names),
        list(dataset.feature_kinds),
        values,
        dataset.labels,
        scaled=True,
        scaler=params,
        encoding=dataset.encoding,
    )


def invert_scaler(params: ScalerParams, dataset: Dataset) -> Dataset:
    values = dataset.values.copy()
    for col, j in _scaler_column_map(params, dataset):
        values[:, col] = values[:, col] * params.std[j] + params.mean[j]
    return Dataset(
        list(dataset.feature_names),
        list(dataset.feature_kinds),
        values,
        dataset.labels,
        scaled=False,
        scaler=params,
        encoding=dataset.encoding,
    )


def split_indices(
    labels: np.ndarray,
    seed: int,
    fractions: tuple[float, float, float] = (0.64, 0.16, 0.20),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stratified train/validation/test index sets, deterministic under seed.

    Per class the first two fractions are rounded to nearest; the test split
    takes the remainder, so the three sets are disjoint and exhaustive.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n < 10:
        raise TooFewRows(f"need at least 10 rows to split, got {n}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.shape[0])]
        n_train = int(round(fractions[0] * idx.shape[0]))
        n_val = int(round(fractions[1] * idx.shape[0]))
        n_val = min(n_val, idx.shape[0] - n_train)
        parts[0].append(idx[:n_train])
        parts[1].append(idx[n_train:n_train + n_val])
        parts[2].append(idx[n_train + n_val:])
    return tuple(np.sort(np.concatenate(p)) for p in parts)


def split(dataset: Dataset, seed: int,
          fractions: tuple[float, float, float] = (0.64, 0.16, 0.20)) -> DataSplit:
    if dataset.labels is None:
        raise ValueError("split requires a labeled dataset")
    tr, va, te = split_indices(dataset.labels, seed, fractions)
    return DataSplit(
        train=dataset.take(tr),
        validation=dataset.take(va),
        test=dataset.take(te),
        seed=seed,
        train_idx=tr,
        validation_idx=va,
        test_idx=te,
    )


@dataclass
class PreparedData:
    """Everything the modeling stages need, with leak-free provenance."""

    split: DataSplit
    encoding: EncodingSpec
    scaler: ScalerParams
    clean_report: CleanReport
    records: list[FlowRecord]
    train_idx: np.ndarray
    validation_idx: np.ndarray
    test_idx: np.ndarray


def prepare(records: Sequence[FlowRecord], seed: int) -> PreparedData:
    """Canonical pipeline: clean, split on labels, fit on train rows only.

    Split indices are computed from labels alone, so the encoder and scaler
    can be fitted on the training partition before any matrix is built.
    """
    cleaned, report = clean(records)
    labels = _labels_array(cleaned)
    if labels is None:
        raise ValueError("prepare requires labeled records")
    tr, va, te = split_indices(labels, seed)
    train_records = [cleaned[i] for i in tr]
    spec = fit_encoding(train_records)
    datasets = []
    for idx in (tr, va, te):
        datasets.append(assemble([cleaned[i] for i in idx], spec))
    scaler = fit_scaler(datasets[0])
    scaled = [apply_scaler(scaler, ds) for ds in datasets]
    split_obj = DataSplit(
        train=scaled[0], validation=scaled[1], test=scaled[2], seed=seed,
        train_idx=tr, validation_idx=va, test_idx=te,
    )
    return PreparedData(
        split=split_obj,
        encoding=spec,
        scaler=scaler,
        clean_report=report,
        records=cleaned,
        train_idx=tr,
        validation_idx=va,
        test_idx=te,
    )


def dataset_to_csv(dataset: Dataset, csv_path, sidecar_path=None, seed: Optional[int] = None) -> None:
    """CSV matrix plus JSON sidecar carrying names, kinds, and provenance."""
    with open(csv_path, "w", encoding="utf-8") as fh:
        header = list(dataset.feature_names)
        if dataset.labels is not None:
            header.append("label")
        fh.write(",".join(header) + "\n")
        for i in range(dataset.n_rows):
            row = [repr(float(v)) for v in dataset.values[i]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[i])))
            fh.write(",".join(row) + "\n")
    if sidecar_path is not None:
        sidecar = {
            "feature_names": dataset.feature_names,
            "feature_kinds": dataset.feature_kinds,
            "scaled": dataset.scaled,
            "encoding": dataset.encoding.to_dict() if dataset.encoding else None,
            "scaler": dataset.scaler.to_dict() if dataset.scaler else None,
            "seed": seed,
            "has_labels": dataset.labels is not None,
        }
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")


def dataset_from_csv(csv_path, sidecar_path) -> Dataset:
    with open(sidecar_path, "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    names = list(sidecar["feature_names"])
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        has_labels = sidecar.get("has_labels", header[-1] == "label")
        rows = []
        labels = []
        for line in fh:
            cells = line.rstrip("\n").split(",")
            if not cells or cells == [""]:
                continue
            if has_labels:
                rows.append([float(c) for c in cells[:-1]])
                labels.append(int(cells[-1]))
            else:
                rows.append([float(c) for c in cells])
    values = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(
        feature_names=names,
        feature_kinds=list(sidecar["feature_kinds"]),
        values=values,
        labels=np.asarray(labels, dtype=np.int64) if has_labels else None,
        scaled=bool(sidecar.get("scaled", False)),
        scaler=ScalerParams.from_dict(sidecar["scaler"]) if sidecar.get("scaler") else None,
        encoding=EncodingSpec.from_dict(sidecar["encoding"]) if sidecar.get("encoding") else None,
    )
