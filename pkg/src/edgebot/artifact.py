"""Portable model artifacts for edge deployment.

Single self-sufficient binary file: magic ``EBOT``, u32 format version,
length-prefixed sections (META and PREP as JSON, TREE as packed little-
endian arrays), and a trailing 64-bit truncated-SHA256 checksum. The
checksum is validated before anything else is parsed; loading never needs
training data.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .boosting import FeatureBundle, GbdtModel, GbdtParams, GossConfig
from .errors import (
    ArtifactError,
    ChecksumMismatch,
    DataError,
    TruncatedArtifact,
    UnsupportedVersion,
)
from .forest import ForestModel, ForestParams
from .preprocess import Dataset, EncodingSpec, ScalerParams, assemble_row
from .tree import DecisionTree

MAGIC = b"EBOT"
VERSION = 1
CHECKSUM_BYTES = 8


def dataset_fingerprint(dataset: Dataset) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(dataset.values).tobytes())
    if dataset.labels is not None:
        digest.update(np.ascontiguousarray(dataset.labels).tobytes())
    return digest.hexdigest()[:16]


def _checksum(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()[:CHECKSUM_BYTES]


def _pack_section(tag: bytes, payload: bytes) -> bytes:
    return tag + struct.pack("<Q", len(payload)) + payload


def _pack_trees(trees: Sequence[DecisionTree]) -> bytes:
    parts = [struct.pack("<I", len(trees))]
    for tree in trees:
        n = tree.n_nodes
        width = tree.value.shape[1]
        payload_code = 0 if tree.payload == "class_counts" else 1
        parts.append(struct.pack("<IBB", n, width, payload_code))
        parts.append(tree.feature.astype("<i4").tobytes())
        parts.append(tree.threshold.astype("<f8").tobytes())
        parts.append(tree.left.astype("<i4").tobytes())
        parts.append(tree.right.astype("<i4").tobytes())
        parts.append(tree.gain.astype("<f8").tobytes())
        parts.append(tree.cover.astype("<f8").tobytes())
        parts.append(tree.n_samples.astype("<i4").tobytes())
        parts.append(np.ascontiguousarray(tree.value, dtype="<f8").tobytes())
    return b"".join(parts)


def _unpack_trees(blob: bytes) -> list[DecisionTree]:
    offset = 0

    def take(count: int) -> bytes:
        nonlocal offset
        if offset + count > len(blob):
            raise TruncatedArtifact("tree section ends mid-record")
        out = blob[offset:offset + count]
        offset += count
        return out

    (n_trees,) = struct.unpack("<I", take(4))
    trees = []
    for _ in range(n_trees):
        n, width, payload_code = struct.unpack("<IBB", take(6))
        feature = np.frombuffer(take(4 * n), dtype="<i4")
        threshold = np.frombuffer(take(8 * n), dtype="<f8")
        left = np.frombuffer(take(4 * n), dtype="<i4")
        right = np.frombuffer(take(4 * n), dtype="<i4")
        gain = np.frombuffer(take(8 * n), dtype="<f8")
        cover = np.frombuffer(take(8 * n), dtype="<f8")
        n_samples = np.frombuffer(take(4 * n), dtype="<i4")
        value = np.frombuffer(take(8 * n * width), dtype="<f8").reshape(n, width)
        trees.append(DecisionTree(
            feature.copy(), threshold.copy(), left.copy(), right.copy(),
            gain.copy(), cover.copy(), n_samples.copy(), value.copy(),
            "class_counts" if payload_code == 0 else "weight",
        ))
    return trees


def _params_to_dict(params) -> Optional[dict]:
    if params is None:
        return None
    return dataclasses.asdict(params)


def _gbdt_params_from_dict(data: Optional[dict]) -> Optional[GbdtParams]:
    if data is None:
        return None
    data = dict(data)
    goss = data.get("goss")
    data["goss"] = GossConfig(**goss) if goss else None
    return GbdtParams(**data)


def serialize_model(
    model,
    *,
    encoding: Optional[EncodingSpec] = None,
    scaler: Optional[ScalerParams] = None,
    feature_names: Optional[list[str]] = None,
    feature_kinds: Optional[list[str]] = None,
    selected: Optional[list[str]] = None,
    seed: Optional[int] = None,
    fingerprint: str = "",
) -> bytes:
    """Versioned, checksummed, endianness-fixed binary container."""
    if isinstance(model, ForestModel):
        meta = {
            "kind": "rf",
            "n_classes": model.n_classes,
            "params": _params_to_dict(model.params),
            "seed": model.seed if seed is None else seed,
        }
        trees = model.trees
        bundle = None
        model_feature_names = model.feature_names
    elif isinstance(model, GbdtModel):
        meta = {
            "kind": model.mode,
            "base_score": model.base_score,
            "learning_rate": model.learning_rate,
            "params": _params_to_dict(model.params),
            "seed": model.seed if seed is None else seed,
        }
        trees = model.trees
        bundle = model.bundle
        model_feature_names = model.source_feature_names or model.feature_names
    else:
        raise DataError(f"cannot serialize {type(model).__name__}")
    meta["fingerprint"] = fingerprint
    prep = {
        "feature_names": feature_names if feature_names is not None else model_feature_names,
        "feature_kinds": feature_kinds,
        "encoding": encoding.to_dict() if encoding else None,
        "scaler": scaler.to_dict() if scaler else None,
        "selected": selected,
        "bundle": bundle.to_dict() if bundle else None,
    }
    body = MAGIC + struct.pack("<I", VERSION)
    sections = [
        _pack_section(b"META", json.dumps(meta, sort_keys=True).encode("utf-8")),
        _pack_section(b"PREP", json.dumps(prep, sort_keys=True).encode("utf-8")),
        _pack_section(b"TREE", _pack_trees(trees)),
    ]
    body += struct.pack("<I", len(sections)) + b"".join(sections)
    return body + _checksum(body)


@dataclass
class LoadedArtifact:
    """A deserialized model plus everything needed to classify raw flows."""

    kind: str
    model: object
    encoding: Optional[EncodingSpec]
    scaler: Optional[ScalerParams]
    feature_names: list[str]
    feature_kinds: Optional[list[str]]
    selected: Optional[list[str]]
    meta: dict
    artifact_id: str
    size_bytes: int
    _selected_idx: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.selected is not None:
            pos = {n: i for i, n in enumerate(self.feature_names)}
            missing = [n for n in self.selected if n not in pos]
            if missing:
                raise ArtifactError(f"selected features missing from layout: {missing}")
            self._selected_idx = np.array([pos[n] for n in self.selected], dtype=np.int64)

    def _project(self, X: np.ndarray) -> np.ndarray:
        if self._selected_idx is None:
            return X
        return X[:, self._selected_idx]

    def _scale_rows(self, X: np.ndarray) -> np.ndarray:
        if self.scaler is None or self.feature_kinds is None:
            return X
        pos = {n: i for i, n in enumerate(self.scaler.feature_names)}
        X = X.copy()
        for col, name in enumerate(self.feature_names):
            if self.feature_kinds[col] == "numeric" and name in pos:
                j = pos[name]
                X[:, col] = (X[:, col] - self.scaler.mean[j]) / self.scaler.std[j]
        return X

    def predict_matrix(self, X: np.ndarray):
        """Classes and scores for rows already in the selected feature space."""
        from .evaluate import predict_classes, predict_scores

        return predict_classes(self.model, X), predict_scores(self.model, X)

    def predict_full_matrix(self, X: np.ndarray):
        return self.predict_matrix(self._project(np.asarray(X, dtype=np.float64)))

    def predict_records(self, records):
        """Raw FlowRecords through stored preprocessing to predictions."""
        if self.encoding is None:
            raise ArtifactError("artifact carries no preprocessing parameters")
        rows = np.vstack([assemble_row(r, self.encoding) for r in records])
        if rows.shape[1] != len(self.feature_names):
            raise ArtifactError(
                "stored feature layout does not cover the full encoded record; "
                "this artifact cannot classify raw flows"
            )
        return self.predict_full_matrix(self._scale_rows(rows))


def deserialize(blob: bytes) -> LoadedArtifact:
    if len(blob) < len(MAGIC) + 4 + 4 + CHECKSUM_BYTES:
        raise TruncatedArtifact(f"artifact is only {len(blob)} bytes")
    if blob[:4] != MAGIC:
        raise ArtifactError("bad magic; not a model artifact")
    body, stored = blob[:-CHECKSUM_BYTES], blob[-CHECKSUM_BYTES:]
    if _checksum(body) != stored:
        raise ChecksumMismatch("artifact checksum does not match contents")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != VERSION:
        raise UnsupportedVersion(f"format version {version}; this build reads {VERSION}")
    (n_sections,) = struct.unpack("<I", blob[8:12])
    offset = 12
    sections: dict[bytes, bytes] = {}
    for _ in range(n_sections):
        if offset + 12 > len(body):
            raise TruncatedArtifact("section header extends past end of artifact")
        tag = body[offset:offset + 4]
        (length,) = struct.unpack("<Q", body[offset + 4:offset + 12])
        offset += 12
        if offset + length > len(body):
            raise TruncatedArtifact(f"section {tag!r} extends past end of artifact")
        sections[tag] = body[offset:offset + length]
        offset += length
    for required in (b"META", b"PREP", b"TREE"):
        if required not in sections:
            raise TruncatedArtifact(f"missing section {required!r}")
    meta = json.loads(sections[b"META"].decode("utf-8"))
    prep = json.loads(sections[b"PREP"].decode("utf-8"))
    trees = _unpack_trees(sections[b"TREE"])
    kind = meta["kind"]
    params = meta.get("params")
    if kind == "rf":
        fp = ForestParams(**params) if params else None
        model = ForestModel(
            trees=trees,
            n_classes=int(meta.get("n_classes", 2)),
            params=fp,
            feature_names=list(prep.get("feature_names") or []),
            seed=meta.get("seed"),
        )
    else:
        bundle_dict = prep.get("bundle")
        bundle = FeatureBundle.from_dict(bundle_dict) if bundle_dict else None
        source_names = list(prep.get("feature_names") or [])
        gp = _gbdt_params_from_dict(params)
        model = GbdtModel(
            mode=kind,
            trees=trees,
            learning_rate=float(meta["learning_rate"]),
            base_score=float(meta["base_score"]),
            params=gp,
            feature_names=(
                bundle.output_names(source_names) if bundle and source_names
                else list(source_names)
            ),
            source_feature_names=source_names,
            bundle=bundle,
            seed=meta.get("seed"),
        )
    return LoadedArtifact(
        kind=kind,
        model=model,
        encoding=EncodingSpec.from_dict(prep["encoding"]) if prep.get("encoding") else None,
        scaler=ScalerParams.from_dict(prep["scaler"]) if prep.get("scaler") else None,
        feature_names=list(prep.get("feature_names") or []),
        feature_kinds=list(prep["feature_kinds"]) if prep.get("feature_kinds") else None,
        selected=list(prep["selected"]) if prep.get("selected") else None,
        meta=meta,
        artifact_id=_checksum(body).hex(),
        size_bytes=len(blob),
    )


def save_artifact(path, blob: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(blob)


def load_artifact(path) -> LoadedArtifact:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def describe(artifact: LoadedArtifact) -> str:
    """Human-readable dump for the inspect subcommand."""
    model = artifact.model
    trees = getattr(model, "trees", [])
    lines = [
        f"kind:          {artifact.kind}",
        f"artifact id:   {artifact.artifact_id}",
        f"size:          {artifact.size_bytes} bytes",
        f"trees:         {len(trees)}",
        f"total nodes:   {sum(t.n_nodes for t in trees)}",
        f"total leaves:  {sum(t.n_leaves for t in trees)}",
        f"max depth:     {max((t.depth for t in trees), default=0)}",
        f"features:      {len(artifact.feature_names)}",
        f"selected:      {len(artifact.selected) if artifact.selected else 'all'}",
        f"has encoding:  {artifact.encoding is not None}",
        f"has scaler:    {artifact.scaler is not None}",
        f"seed:          {artifact.meta.get('seed')}",
        f"fingerprint:   {artifact.meta.get('fingerprint', '')}",
    ]
    params = artifact.meta.get("params")
    if params:
        lines.append("params:")
        for key in sorted(params):
            lines.append(f"  {key} = {params[key]}")
    return "\n".join(lines) + "\n"
