"""Residual accumulation amplification: the OOD score, its calibration, and
the decision rule.

Scoring a vector v anchors at v_1 = v and runs T iterations. Iteration t
draws s Gaussian perturbations, forms candidates v_t + m * n_t_i,
reconstructs each one, and measures the error against the ORIGINAL anchor
v_1; the worst-reconstructed candidate becomes the next anchor. The final
iteration's maximum error is the difficulty score `diff`. Repeated
selection of hard candidates widens the reconstruction-error gap between
in-distribution and out-of-distribution inputs.

The decision threshold is thre = mu_diff + 0.001 * sigma_diff over
validation difficulties; a sample is OOD iff diff > thre (strictly).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diffusion import SIGMA_MIN, DenoiserParams
from .errors import ConfigError, DimensionError, FormatError, ScoringError
from .features import FeatureDataset, label_code
from .reconstruct import ReverseConfig, reconstruct


@dataclass
class RAAConfig:
    """Knobs of the amplification loop.

    m = 0 with s = 1 degenerates to repeated plain reconstruction of the
    input itself. sigma_rec defaults to the std of the injected corruption,
    max(m * noise_std, SIGMA_MIN); track_iteration scales it by sqrt(t) to
    follow the noise accumulated across iterations.
    """

    T: int = 5
    s: int = 3
    m: float = 1.8
    noise_mean: float = 0.0
    noise_std: float = 1.0
    reverse: ReverseConfig = field(default_factory=ReverseConfig)
    seed: int = 0
    sigma_rec: float | None = None
    track_iteration: bool = False

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.s < 1:
            raise ConfigError("s must be >= 1")
        if self.m < 0:
            raise ConfigError("m must be >= 0")
        if self.noise_std <= 0:
            raise ConfigError("noise_std must be positive")
        if self.sigma_rec is not None and self.sigma_rec <= 0:
            raise ConfigError("sigma_rec must be positive")

    def effective_sigma_rec(self) -> float:
        if self.sigma_rec is not None:
            return float(self.sigma_rec)
        return max(self.m * self.noise_std, SIGMA_MIN)


@dataclass
class ScoreRecord:
    """Full trace of one scored sample."""

    diff: float
    per_iteration_errors: np.ndarray  # (T, s)
    selected_indices: list[int]  # argmax candidate per iteration, ties -> lowest
    label: str | None = None
    index: int | None = None


def sample_stream(seed: int, v: np.ndarray) -> np.random.Generator:
    """Deterministic random stream for one sample, keyed by its content.

    Each vector carries its own generator, derived from the seed and the
    vector's bytes. Scores therefore do not depend on a sample's position or
    on evaluation order: permuting a dataset permutes its scores, and equal
    vectors always score identically.
    """
    h = hashlib.blake2b(digest_size=16)
    h.update(struct.pack("<q", int(seed)))
    h.update(np.ascontiguousarray(v, dtype="<f8").tobytes())
    return np.random.default_rng(int.from_bytes(h.digest(), "little"))


def raa_score(
    params: DenoiserParams,
    v: np.ndarray,
    cfg: RAAConfig,
    rng: np.random.Generator | None = None,
) -> ScoreRecord:
    """Score one feature vector; higher diff means harder to reconstruct."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != params.feature_dim:
        raise DimensionError(
            f"raa_score: expected a vector of dim {params.feature_dim}, got shape {v.shape}"
        )
    if rng is None:
        rng = sample_stream(cfg.seed, v)
    base_sigma = cfg.effective_sigma_rec()
    errors = np.zeros((cfg.T, cfg.s))
    selected: list[int] = []
    anchor = v.copy()
    for t in range(cfg.T):
        noise = cfg.noise_mean + cfg.noise_std * rng.standard_normal((cfg.s, v.shape[0]))
        candidates = anchor[None, :] + cfg.m * noise
        sigma_rec = base_sigma * np.sqrt(t + 1.0) if cfg.track_iteration else base_sigma
        recon = reconstruct(params, candidates, cfg.reverse, sigma_rec, rng)
        e = np.sqrt(np.sum((recon - v[None, :]) ** 2, axis=1))
        if not np.isfinite(e).all():
            i = int(np.flatnonzero(~np.isfinite(e))[0])
            raise ScoringError(f"non-finite reconstruction at iteration {t}, candidate {i}")
        errors[t] = e
        pick = int(np.argmax(e))  # first maximum wins on ties
        selected.append(pick)
        anchor = candidates[pick]
    return ScoreRecord(
        diff=float(errors[-1].max()),
        per_iteration_errors=errors,
        selected_indices=selected,
    )


def score_dataset(
    params: DenoiserParams, dataset: FeatureDataset, cfg: RAAConfig
) -> list[ScoreRecord]:
    """raa_score per vector, each under its own content-keyed rng stream.

    Per-sample streams make results independent of evaluation order and of
    position: a permuted dataset yields identically permuted scores, and
    equal vectors always receive equal scores.
    """
    if dataset.n > 0 and dataset.dim != params.feature_dim:
        raise DimensionError(
            f"score_dataset: dataset dim {dataset.dim} != model dim {params.feature_dim}"
        )
    names = dataset.label_names()
    records = []
    for i in range(dataset.n):
        try:
            rec = raa_score(params, dataset.features[i], cfg)
        except ScoringError as exc:
            raise ScoringError(f"sample {i}: {exc}") from None
        rec.index = i
        rec.label = names[i]
        records.append(rec)
    return records


@dataclass
class ThresholdConfig:
    """Calibrated decision threshold and the statistics it came from."""

    thre: float
    mu_diff: float
    sigma_diff: float
    source_split: str = "val"
    population_std: bool = True
    coefficient: float = 0.001

    def to_dict(self) -> dict:
        return {
            "thre": self.thre,
            "mu_diff": self.mu_diff,
            "sigma_diff": self.sigma_diff,
            "source_split": self.source_split,
            "population_std": self.population_std,
            "coefficient": self.coefficient,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ThresholdConfig":
        try:
            return cls(
                thre=float(doc["thre"]),
                mu_diff=float(doc["mu_diff"]),
                sigma_diff=float(doc["sigma_diff"]),
                source_split=str(doc.get("source_split", "val")),
                population_std=bool(doc.get("population_std", True)),
                coefficient=float(doc.get("coefficient", 0.001)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad threshold document ({exc})") from None


def calibrate_threshold(
    diffs,
    population_std: bool = True,
    coefficient: float = 0.001,
    source_split: str = "val",
) -> ThresholdConfig:
    """thre = mean(diffs) + coefficient * std(diffs).

    population_std divides the variance by n; otherwise by n - 1 (a single
    observation then gives sigma_diff = 0).
    """
    diffs = np.asarray(diffs, dtype=np.float64)
    if diffs.size == 0:
        raise ConfigError("calibrate_threshold: no difficulty scores given")
    mu = float(np.mean(diffs))
    if population_std:
        sigma = float(np.std(diffs))
    else:
        sigma = float(np.std(diffs, ddof=1)) if diffs.size > 1 else 0.0
    return ThresholdConfig(
        thre=mu + coefficient * sigma,
        mu_diff=mu,
        sigma_diff=sigma,
        source_split=source_split,
        population_std=population_std,
        coefficient=coefficient,
    )


def classify(diff: float, thr: ThresholdConfig) -> str:
    """OOD iff diff exceeds the threshold strictly; the boundary is ID."""
    return "OOD" if diff > thr.thre else "ID"


def write_threshold(thr: ThresholdConfig, destination) -> None:
    Path(destination).write_text(json.dumps(thr.to_dict(), indent=2) + "\n", encoding="utf-8")


def read_threshold(source) -> ThresholdConfig:
    path = Path(source)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid threshold JSON ({exc})") from None
    return ThresholdConfig.from_dict(doc)


def write_scores(records: list[ScoreRecord], destination) -> None:
    """Score dump: one JSON object per line, one line per sample."""
    lines = []
    for rec in records:
        doc = {"index": rec.index, "diff": rec.diff}
        if rec.label is not None:
            doc["label"] = rec.label
        doc["selected_indices"] = list(rec.selected_indices)
        doc["errors"] = rec.per_iteration_errors.tolist()
        lines.append(json.dumps(doc))
    Path(destination).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_scores(source) -> list[ScoreRecord]:
    path = Path(source)
    records = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            rec = ScoreRecord(
                diff=float(doc["diff"]),
                per_iteration_errors=np.asarray(doc["errors"], dtype=np.float64),
                selected_indices=[int(i) for i in doc["selected_indices"]],
                label=doc.get("label"),
                index=doc.get("index"),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}:{lineno + 1}: bad score record ({exc})") from None
        if rec.label is not None:
            label_code(rec.label)  # validates the name
        records.append(rec)
    return records
