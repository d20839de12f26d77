"""Feature-vector file format (.rdaf) and dataset manifest.

File layout, little-endian throughout:

    bytes 0..3    magic "RDAF"
    bytes 4..7    version u32: low 24 bits = 1, bit 31 set iff labels present
    bytes 8..11   vector count u32
    bytes 12..15  dimension u32
    then          count * dimension float32 values, row-major
    then          count label bytes, only when the labels flag is set
                  (0 = ID, 1 = OOD, 255 = unlabeled)

The manifest is a UTF-8 JSON document listing {path, split, source, count,
dim} per feature file; split and source live only there, not in the binary.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, FormatError

MAGIC = b"RDAF"
FORMAT_VERSION = 1
LABELS_FLAG = 0x80000000

LABEL_ID = 0
LABEL_OOD = 1
LABEL_UNLABELED = 255
_LABEL_NAMES = {LABEL_ID: "ID", LABEL_OOD: "OOD", LABEL_UNLABELED: None}
_LABEL_CODES = {"ID": LABEL_ID, "OOD": LABEL_OOD, None: LABEL_UNLABELED}

SPLITS = ("train", "val", "test")


def label_name(code: int) -> str | None:
    return _LABEL_NAMES[int(code)]


def label_code(name: str | None) -> int:
    try:
        return _LABEL_CODES[name]
    except KeyError:
        raise ConfigError(f"unknown label {name!r}") from None


@dataclass
class FeatureDataset:
    """A block of l-dimensional feature vectors with optional ID/OOD labels.

    features is (n, dim) float32; labels, when present, is (n,) uint8 with
    the codes above. The dimension must be >= 1 even when n == 0.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    split: str = "test"
    source: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float32)
        if self.features.ndim != 2:
            raise DimensionError("features must be a 2-d (n, dim) array")
        if self.dim < 1:
            raise DimensionError("feature dimension must be >= 1")
        if not np.isfinite(self.features).all():
            raise ConfigError("features contain non-finite entries")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.uint8)
            if self.labels.shape != (self.n,):
                raise DimensionError("labels length does not match vector count")
            valid = np.isin(self.labels, (LABEL_ID, LABEL_OOD, LABEL_UNLABELED))
            if not valid.all():
                raise ConfigError("labels must be 0 (ID), 1 (OOD) or 255 (unlabeled)")
        if self.split not in SPLITS:
            raise ConfigError(f"unknown split {self.split!r}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def label_names(self) -> list[str | None]:
        if self.labels is None:
            return [None] * self.n
        return [label_name(c) for c in self.labels]

    def mask(self, name: str) -> np.ndarray:
        """Boolean row mask for one label name; all-False when unlabeled."""
        if self.labels is None:
            return np.zeros(self.n, dtype=bool)
        return self.labels == label_code(name)

    def subset(self, indices, split: str | None = None) -> "FeatureDataset":
        idx = np.asarray(indices)
        return FeatureDataset(
            features=self.features[idx].copy(),
            labels=None if self.labels is None else self.labels[idx].copy(),
            split=self.split if split is None else split,
            source=self.source,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureDataset):
            return NotImplemented
        if self.split != other.split or self.source != other.source:
            return False
        if self.features.shape != other.features.shape:
            return False
        if not np.array_equal(self.features, other.features):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        return self.labels is None or np.array_equal(self.labels, other.labels)


def write_features(dataset: FeatureDataset, destination) -> int:
    """Serialize a dataset; returns the number of bytes written."""
    version = FORMAT_VERSION | (LABELS_FLAG if dataset.labels is not None else 0)
    header = MAGIC + struct.pack("<III", version, dataset.n, dataset.dim)
    payload = np.ascontiguousarray(dataset.features, dtype="<f4").tobytes()
    blob = header + payload
    if dataset.labels is not None:
        blob += dataset.labels.tobytes()
    path = Path(destination)
    path.write_bytes(blob)
    return len(blob)


def read_features(source, split: str = "test", source_name: str = "") -> FeatureDataset:
    """Read and validate a feature file.

    split/source are not stored in the binary; pass them through (normally
    from the manifest) to tag the returned dataset.
    """
    path = Path(source)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise FileNotFoundError(f"feature file not found: {path}") from None
    if len(blob) < 16:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: magic mismatch, expected {MAGIC!r}, got {blob[:4]!r}")
    version, count, dim = struct.unpack("<III", blob[4:16])
    has_labels = bool(version & LABELS_FLAG)
    base_version = version & ~LABELS_FLAG
    if base_version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version 0x{base_version:x}")
    if dim < 1:
        raise FormatError(f"{path}: declared dimension {dim} is invalid")
    payload_bytes = count * dim * 4
    label_bytes = count if has_labels else 0
    expected = 16 + payload_bytes + label_bytes
    if len(blob) < expected:
        raise FormatError(
            f"{path}: truncated payload, expected {expected} bytes, got {len(blob)}"
        )
    if len(blob) > expected:
        raise FormatError(f"{path}: {len(blob) - expected} trailing bytes after payload")
    values = np.frombuffer(blob, dtype="<f4", count=count * dim, offset=16)
    features = values.reshape(count, dim).astype(np.float32)
    if not np.isfinite(features).all():
        bad = int(np.flatnonzero(~np.isfinite(features).all(axis=1))[0])
        raise FormatError(f"{path}: non-finite entry in vector {bad}")
    labels = None
    if has_labels:
        labels = np.frombuffer(blob, dtype=np.uint8, count=count, offset=16 + payload_bytes)
        labels = labels.copy()
    try:
        return FeatureDataset(features=features, labels=labels, split=split, source=source_name)
    except ConfigError as exc:
        raise FormatError(f"{path}: {exc}") from None


@dataclass
class ManifestEntry:
    path: str
    split: str
    source: str
    count: int
    dim: int


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def for_split(self, split: str) -> ManifestEntry:
        hits = [e for e in self.entries if e.split == split]
        if not hits:
            raise ConfigError(f"manifest has no entry for split {split!r}")
        if len(hits) > 1:
            raise ConfigError(f"manifest has {len(hits)} entries for split {split!r}")
        return hits[0]


def write_manifest(manifest: Manifest, destination) -> None:
    doc = [
        {"path": e.path, "split": e.split, "source": e.source, "count": e.count, "dim": e.dim}
        for e in manifest.entries
    ]
    Path(destination).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_manifest(source) -> Manifest:
    path = Path(source)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid manifest JSON ({exc})") from None
    if not isinstance(doc, list):
        raise FormatError(f"{path}: manifest must be a JSON list")
    entries = []
    for i, item in enumerate(doc):
        try:
            entries.append(
                ManifestEntry(
                    path=str(item["path"]),
                    split=str(item["split"]),
                    source=str(item["source"]),
                    count=int(item["count"]),
                    dim=int(item["dim"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: bad manifest entry {i} ({exc})") from None
    return Manifest(entries)


def load_split(manifest_path, split: str) -> FeatureDataset:
    """Load one split's feature file via the manifest, cross-checking count/dim."""
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    entry = manifest.for_split(split)
    file_path = manifest_path.parent / entry.path
    dataset = read_features(file_path, split=split, source_name=entry.source)
    if dataset.n != entry.count or dataset.dim != entry.dim:
        raise FormatError(
            f"{file_path}: manifest declares {entry.count} x {entry.dim}, "
            f"file holds {dataset.n} x {dataset.dim}"
        )
    return dataset
