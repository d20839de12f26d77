"""Test-time reconstruction operators.

Three modes. single_step applies the denoiser once at the requested noise
level. The langevin modes run the iterative chain

    v_t = v_{t-1} + (eps/2) * g(v_{t-1}, sigma_t) + sqrt(eps) * z_t

where g is the denoiser output itself (langevin_denoiser) or the score
estimate (denoise(v, sigma) - v) / sigma^2 (langevin_score), and z_t is
standard normal or zero when stochastic is off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import SIGMA_MAX, SIGMA_MIN, DenoiserParams, denoise
from .errors import ConfigError, DimensionError

MODES = ("single_step", "langevin_denoiser", "langevin_score")


def geometric_schedule(steps: int, sigma_max: float = SIGMA_MAX, sigma_min: float = SIGMA_MIN):
    """Strictly decreasing geometric interpolation sigma_max -> sigma_min."""
    if steps < 1:
        raise ConfigError("schedule needs at least one step")
    if steps == 1:
        return [float(sigma_max)]
    ratio = (sigma_min / sigma_max) ** (1.0 / (steps - 1))
    return [float(sigma_max * ratio**i) for i in range(steps)]


@dataclass
class ReverseConfig:
    mode: str = "single_step"
    steps: int = 1
    step_size: float = 0.1
    sigma_schedule: list[float] | None = None
    stochastic: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown reverse mode {self.mode!r}")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.step_size <= 0:
            raise ConfigError("step_size must be positive")
        if self.sigma_schedule is not None:
            sched = [float(s) for s in self.sigma_schedule]
            if len(sched) == 0:
                raise ConfigError("sigma_schedule must not be empty")
            if any(s <= 0 for s in sched):
                raise ConfigError("sigma_schedule values must be positive")
            if any(b >= a for a, b in zip(sched, sched[1:])):
                raise ConfigError("sigma_schedule must be strictly decreasing")
            if len(sched) != self.steps:
                raise ConfigError(
                    f"sigma_schedule length {len(sched)} != steps {self.steps}"
                )
            self.sigma_schedule = sched


def reconstruct(
    params: DenoiserParams,
    x: np.ndarray,
    cfg: ReverseConfig,
    sigma_rec: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Recover a feature vector (or an (n, dim) batch of them).

    sigma_rec is the noise level handed to the denoiser in single_step mode;
    chain modes follow cfg.sigma_schedule (default: geometric
    sigma_max -> sigma_min over cfg.steps). With stochastic=True an rng must
    be supplied; rows of a batch evolve under one shared draw sequence, so
    callers wanting per-sample streams pass one row at a time.
    """
    if not (sigma_rec > 0 and np.isfinite(sigma_rec)):
        raise ConfigError(f"sigma_rec must be positive, got {sigma_rec}")
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != params.feature_dim:
        raise DimensionError(
            f"reconstruct: expected vectors of dim {params.feature_dim}, got shape {np.shape(x)}"
        )

    if cfg.mode == "single_step":
        out = denoise(params, arr, sigma_rec)
        return out[0] if single else out

    schedule = cfg.sigma_schedule or geometric_schedule(cfg.steps)
    if cfg.stochastic and rng is None:
        raise ConfigError("stochastic reverse chain needs an rng")
    eps = cfg.step_size
    v = arr.copy()
    for sigma_t in schedule:
        g = denoise(params, v, sigma_t)
        if cfg.mode == "langevin_score":
            g = (g - v) / sigma_t**2
        z = rng.standard_normal(v.shape) if cfg.stochastic else 0.0
        v = v + 0.5 * eps * g + np.sqrt(eps) * z
    return v[0] if single else v
