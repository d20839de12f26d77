"""Seeded generators of ID/OOD feature datasets with known geometry.

The default benchmark ("gauss-shift-16") is dim-16 unit Gaussian ID data
with a mean-shifted OOD population: 2000/400/800 ID vectors in
train/val/test and 200/400 OOD vectors in val/test, seed 7, shift 2.0
spread along the normalized all-ones direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .features import LABEL_ID, LABEL_OOD, FeatureDataset, Manifest, ManifestEntry, write_features, write_manifest


@dataclass(frozen=True)
class IsotropicGaussian:
    """ID vectors ~ N(0, scale^2 I)."""

    scale: float = 1.0


@dataclass(frozen=True)
class GaussianMixture:
    """ID vectors from k unit-covariance components with means ~ N(0, spread^2 I)."""

    k: int = 3
    spread: float = 3.0


@dataclass(frozen=True)
class MeanShift:
    """OOD = ID shifted by delta along the normalized all-ones direction."""

    delta: float = 2.0


@dataclass(frozen=True)
class ScaleShift:
    """OOD = ID scaled by gamma."""

    gamma: float = 1.5


@dataclass(frozen=True)
class SubspaceOffset:
    """OOD = ID offset by delta along one coordinate axis."""

    axis: int = 0
    delta: float = 2.0


ID_KINDS = (IsotropicGaussian, GaussianMixture)
OOD_KINDS = (MeanShift, ScaleShift, SubspaceOffset)


@dataclass
class SyntheticSpec:
    dim: int = 16
    n_train: int = 2000
    n_val_id: int = 400
    n_val_ood: int = 200
    n_test_id: int = 800
    n_test_ood: int = 400
    id_kind: IsotropicGaussian | GaussianMixture = field(default_factory=IsotropicGaussian)
    ood_kind: MeanShift | ScaleShift | SubspaceOffset = field(default_factory=MeanShift)
    seed: int = 7

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        for name in ("n_train", "n_val_id", "n_val_ood", "n_test_id", "n_test_ood"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not isinstance(self.id_kind, ID_KINDS):
            raise ConfigError(f"unknown id_kind {self.id_kind!r}")
        if not isinstance(self.ood_kind, OOD_KINDS):
            raise ConfigError(f"unknown ood_kind {self.ood_kind!r}")
        if isinstance(self.id_kind, IsotropicGaussian) and self.id_kind.scale <= 0:
            raise ConfigError("id_kind.scale must be positive")
        if isinstance(self.id_kind, GaussianMixture):
            if self.id_kind.k < 1:
                raise ConfigError("id_kind.k must be >= 1")
            if self.id_kind.spread < 0:
                raise ConfigError("id_kind.spread must be >= 0")
        if isinstance(self.ood_kind, (MeanShift, SubspaceOffset)) and self.ood_kind.delta < 0:
            raise ConfigError("ood_kind.delta must be >= 0")
        if isinstance(self.ood_kind, ScaleShift) and self.ood_kind.gamma <= 0:
            raise ConfigError("ood_kind.gamma must be positive")
        if isinstance(self.ood_kind, SubspaceOffset) and not (
            0 <= self.ood_kind.axis < self.dim
        ):
            raise ConfigError(
                f"ood_kind.axis must lie in [0, {self.dim}), got {self.ood_kind.axis}"
            )

    def describe(self) -> str:
        return (
            f"synthetic dim={self.dim} seed={self.seed} "
            f"id={self.id_kind!r} ood={self.ood_kind!r}"
        )


def default_benchmark_spec() -> SyntheticSpec:
    return SyntheticSpec()


def _sample_id(spec: SyntheticSpec, n: int, rng, means) -> np.ndarray:
    if isinstance(spec.id_kind, IsotropicGaussian):
        return spec.id_kind.scale * rng.standard_normal((n, spec.dim))
    comp = rng.integers(0, spec.id_kind.k, size=n)
    return means[comp] + rng.standard_normal((n, spec.dim))


def _to_ood(spec: SyntheticSpec, samples: np.ndarray) -> np.ndarray:
    kind = spec.ood_kind
    if isinstance(kind, MeanShift):
        shift = kind.delta / np.sqrt(spec.dim)
        return samples + shift
    if isinstance(kind, ScaleShift):
        return samples * kind.gamma
    offset = np.zeros(spec.dim)
    offset[kind.axis] = kind.delta
    return samples + offset


def generate(spec: SyntheticSpec) -> dict[str, FeatureDataset]:
    """Seeded train/val/test datasets; train is ID-only, val/test carry labels."""
    rng = np.random.default_rng(spec.seed)
    if isinstance(spec.id_kind, GaussianMixture):
        means = spec.id_kind.spread * rng.standard_normal((spec.id_kind.k, spec.dim))
    else:
        means = None
    source = spec.describe()

    def build(n_id: int, n_ood: int, split: str) -> FeatureDataset:
        id_part = _sample_id(spec, n_id, rng, means)
        ood_part = _to_ood(spec, _sample_id(spec, n_ood, rng, means))
        features = np.concatenate([id_part, ood_part], axis=0)
        labels = np.concatenate(
            [np.full(n_id, LABEL_ID, np.uint8), np.full(n_ood, LABEL_OOD, np.uint8)]
        )
        order = rng.permutation(n_id + n_ood)
        return FeatureDataset(
            features=features[order].astype(np.float32),
            labels=labels[order],
            split=split,
            source=source,
        )

    return {
        "train": build(spec.n_train, 0, "train"),
        "val": build(spec.n_val_id, spec.n_val_ood, "val"),
        "test": build(spec.n_test_id, spec.n_test_ood, "test"),
    }


def write_benchmark(spec: SyntheticSpec, out_dir) -> dict[str, str]:
    """Generate and write the three splits plus manifest.json to a directory."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    datasets = generate(spec)
    entries = []
    paths = {}
    for split in ("train", "val", "test"):
        ds = datasets[split]
        name = f"{split}.rdaf"
        write_features(ds, out / name)
        entries.append(
            ManifestEntry(path=name, split=split, source=ds.source, count=ds.n, dim=ds.dim)
        )
        paths[split] = str(out / name)
    write_manifest(Manifest(entries), out / "manifest.json")
    paths["manifest"] = str(out / "manifest.json")
    return paths
