"""Operator-facing command line tying the pipeline together.

Commands: ``synth``, ``train``, ``calibrate``, ``score``, ``eval``
(``score --eval`` combines the last two). Settings come from flat
dotted-key JSON config files plus repeatable ``--set key=value``
overrides; unknown keys are rejected, and every run prints its fully
resolved configuration on one line for reproducibility.

Exit codes: 0 success, 1 configuration error, 2 I/O or file-format
error, 3 numerical failure during training or scoring.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .diffusion import NoiseLevelSampler, TrainConfig, load_model, save_model, train
from .errors import (
    ConfigError,
    DimensionError,
    FormatError,
    ScoringError,
    TrainingError,
)
from .features import read_features
from .metrics import auc_score, confusion_metrics, format_report_table
from .reconstruct import ReverseConfig
from .scoring import (
    RAAConfig,
    ScoreRecord,
    calibrate_threshold,
    classify,
    read_scores,
    read_threshold,
    score_dataset,
    write_scores,
    write_threshold,
)
from .synthetic import (
    GaussianMixture,
    IsotropicGaussian,
    MeanShift,
    ScaleShift,
    SubspaceOffset,
    SyntheticSpec,
    write_benchmark,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


# --------------------------------------------------------------------------
# config files: flat dotted-key JSON + --set overrides


def _as_int(key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return value


def _as_float(key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _as_bool(key: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{key}: expected true or false, got {value!r}")
    return value


def _as_str(key: str, value) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _as_int_list(key: str, value) -> list[int]:
    ok = isinstance(value, list) and all(
        isinstance(v, int) and not isinstance(v, bool) for v in value
    )
    if not ok:
        raise ConfigError(f"{key}: expected a list of integers, got {value!r}")
    return list(value)


def _as_float_list(key: str, value) -> list[float]:
    ok = isinstance(value, list) and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    )
    if not ok:
        raise ConfigError(f"{key}: expected a list of numbers, got {value!r}")
    return [float(v) for v in value]


def load_config(path) -> dict:
    """Read a flat JSON object; None means an empty configuration."""
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    for key in doc:
        if not isinstance(key, str):
            raise ConfigError(f"{path}: keys must be strings")
    return doc


def apply_overrides(config: dict, assignments: list[str]) -> dict:
    """Apply ``key=value`` pairs; values parse as JSON, else stay strings."""
    merged = dict(config)
    for text in assignments:
        key, sep, raw = text.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {text!r}")
        try:
            merged[key] = json.loads(raw)
        except json.JSONDecodeError:
            merged[key] = raw
    return merged


def _reject_unknown(config: dict, known: set[str], command: str) -> None:
    unknown = sorted(set(config) - known)
    if unknown:
        raise ConfigError(
            f"{command}: unknown config keys {unknown}; known keys are {sorted(known)}"
        )


def _log_config(command: str, resolved: dict) -> None:
    print(f"config {command} {json.dumps(resolved, sort_keys=True)}")


# --------------------------------------------------------------------------
# synth


_ID_KIND_KEYS = {
    "isotropic_gaussian": {"id_kind.scale"},
    "gaussian_mixture": {"id_kind.k", "id_kind.spread"},
}
_OOD_KIND_KEYS = {
    "mean_shift": {"ood_kind.delta"},
    "scale_shift": {"ood_kind.gamma"},
    "subspace_offset": {"ood_kind.axis", "ood_kind.delta"},
}

_SYNTH_KEYS = {
    "dim",
    "n_train",
    "n_val_id",
    "n_val_ood",
    "n_test_id",
    "n_test_ood",
    "seed",
    "id_kind",
    "id_kind.scale",
    "id_kind.k",
    "id_kind.spread",
    "ood_kind",
    "ood_kind.delta",
    "ood_kind.gamma",
    "ood_kind.axis",
}


def _check_kind_keys(config: dict, prefix: str, active: str, table: dict) -> None:
    allowed = table[active]
    for key in config:
        if key.startswith(prefix + ".") and key not in allowed:
            raise ConfigError(f"{key}: only applies to {_owner_of(key, table)}, not {active!r}")


def _owner_of(key: str, table: dict) -> str:
    owners = sorted(kind for kind, keys in table.items() if key in keys)
    return " / ".join(repr(o) for o in owners) if owners else "no kind"


def build_synthetic_spec(config: dict, seed_override: int | None) -> SyntheticSpec:
    _reject_unknown(config, _SYNTH_KEYS, "synth")
    id_name = _as_str("id_kind", config.get("id_kind", "isotropic_gaussian"))
    if id_name not in _ID_KIND_KEYS:
        raise ConfigError(
            f"id_kind: unknown kind {id_name!r}; choose from {sorted(_ID_KIND_KEYS)}"
        )
    ood_name = _as_str("ood_kind", config.get("ood_kind", "mean_shift"))
    if ood_name not in _OOD_KIND_KEYS:
        raise ConfigError(
            f"ood_kind: unknown kind {ood_name!r}; choose from {sorted(_OOD_KIND_KEYS)}"
        )
    _check_kind_keys(config, "id_kind", id_name, _ID_KIND_KEYS)
    _check_kind_keys(config, "ood_kind", ood_name, _OOD_KIND_KEYS)

    if id_name == "isotropic_gaussian":
        id_kind = IsotropicGaussian(scale=_as_float("id_kind.scale", config.get("id_kind.scale", 1.0)))
    else:
        id_kind = GaussianMixture(
            k=_as_int("id_kind.k", config.get("id_kind.k", 3)),
            spread=_as_float("id_kind.spread", config.get("id_kind.spread", 3.0)),
        )
    if ood_name == "mean_shift":
        ood_kind = MeanShift(delta=_as_float("ood_kind.delta", config.get("ood_kind.delta", 2.0)))
    elif ood_name == "scale_shift":
        ood_kind = ScaleShift(gamma=_as_float("ood_kind.gamma", config.get("ood_kind.gamma", 1.5)))
    else:
        ood_kind = SubspaceOffset(
            axis=_as_int("ood_kind.axis", config.get("ood_kind.axis", 0)),
            delta=_as_float("ood_kind.delta", config.get("ood_kind.delta", 2.0)),
        )

    base = SyntheticSpec()
    seed = _as_int("seed", config.get("seed", base.seed))
    if seed_override is not None:
        seed = seed_override
    return SyntheticSpec(
        dim=_as_int("dim", config.get("dim", base.dim)),
        n_train=_as_int("n_train", config.get("n_train", base.n_train)),
        n_val_id=_as_int("n_val_id", config.get("n_val_id", base.n_val_id)),
        n_val_ood=_as_int("n_val_ood", config.get("n_val_ood", base.n_val_ood)),
        n_test_id=_as_int("n_test_id", config.get("n_test_id", base.n_test_id)),
        n_test_ood=_as_int("n_test_ood", config.get("n_test_ood", base.n_test_ood)),
        id_kind=id_kind,
        ood_kind=ood_kind,
        seed=seed,
    )


def _spec_to_keys(spec: SyntheticSpec) -> dict:
    doc = {
        "dim": spec.dim,
        "n_train": spec.n_train,
        "n_val_id": spec.n_val_id,
        "n_val_ood": spec.n_val_ood,
        "n_test_id": spec.n_test_id,
        "n_test_ood": spec.n_test_ood,
        "seed": spec.seed,
    }
    if isinstance(spec.id_kind, IsotropicGaussian):
        doc["id_kind"] = "isotropic_gaussian"
        doc["id_kind.scale"] = spec.id_kind.scale
    else:
        doc["id_kind"] = "gaussian_mixture"
        doc["id_kind.k"] = spec.id_kind.k
        doc["id_kind.spread"] = spec.id_kind.spread
    if isinstance(spec.ood_kind, MeanShift):
        doc["ood_kind"] = "mean_shift"
        doc["ood_kind.delta"] = spec.ood_kind.delta
    elif isinstance(spec.ood_kind, ScaleShift):
        doc["ood_kind"] = "scale_shift"
        doc["ood_kind.gamma"] = spec.ood_kind.gamma
    else:
        doc["ood_kind"] = "subspace_offset"
        doc["ood_kind.axis"] = spec.ood_kind.axis
        doc["ood_kind.delta"] = spec.ood_kind.delta
    return doc


def cmd_synth(args) -> int:
    config = apply_overrides(load_config(args.config), args.set)
    spec = build_synthetic_spec(config, args.seed)
    _log_config("synth", _spec_to_keys(spec))
    paths = write_benchmark(spec, args.out_dir)
    for split in ("train", "val", "test", "manifest"):
        print(f"wrote {paths[split]}")
    return EXIT_OK


# --------------------------------------------------------------------------
# train


_TRAIN_KEYS = {
    "epochs",
    "batch_size",
    "learning_rate",
    "seed",
    "loss_weighting",
    "hidden_dims",
    "activation",
    "weight_decay",
    "beta1",
    "beta2",
    "epsilon",
    "lr_schedule",
    "sigma_data",
    "dtype",
    "noise.p_mean",
    "noise.p_std",
}


def build_train_config(
    config: dict, seed_override: int | None
) -> tuple[TrainConfig, NoiseLevelSampler]:
    _reject_unknown(config, _TRAIN_KEYS, "train")
    base = TrainConfig()
    seed = _as_int("seed", config.get("seed", base.seed))
    if seed_override is not None:
        seed = seed_override
    hidden = config.get("hidden_dims", None)
    if hidden is not None:
        hidden = tuple(_as_int_list("hidden_dims", hidden))
    sigma_data = config.get("sigma_data", None)
    if sigma_data is not None:
        sigma_data = _as_float("sigma_data", sigma_data)
    cfg = TrainConfig(
        epochs=_as_int("epochs", config.get("epochs", base.epochs)),
        batch_size=_as_int("batch_size", config.get("batch_size", base.batch_size)),
        learning_rate=_as_float("learning_rate", config.get("learning_rate", base.learning_rate)),
        seed=seed,
        loss_weighting=_as_str("loss_weighting", config.get("loss_weighting", base.loss_weighting)),
        hidden_dims=hidden,
        activation=_as_str("activation", config.get("activation", base.activation)),
        weight_decay=_as_float("weight_decay", config.get("weight_decay", base.weight_decay)),
        beta1=_as_float("beta1", config.get("beta1", base.beta1)),
        beta2=_as_float("beta2", config.get("beta2", base.beta2)),
        epsilon=_as_float("epsilon", config.get("epsilon", base.epsilon)),
        lr_schedule=_as_str("lr_schedule", config.get("lr_schedule", base.lr_schedule)),
        sigma_data=sigma_data,
        dtype=_as_str("dtype", config.get("dtype", base.dtype)),
    )
    sampler = NoiseLevelSampler(
        p_mean=_as_float("noise.p_mean", config.get("noise.p_mean", -0.05)),
        p_std=_as_float("noise.p_std", config.get("noise.p_std", 1.5)),
    )
    return cfg, sampler


def _train_to_keys(cfg: TrainConfig, sampler: NoiseLevelSampler) -> dict:
    return {
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "learning_rate": cfg.learning_rate,
        "seed": cfg.seed,
        "loss_weighting": cfg.loss_weighting,
        "hidden_dims": None if cfg.hidden_dims is None else list(cfg.hidden_dims),
        "activation": cfg.activation,
        "weight_decay": cfg.weight_decay,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "epsilon": cfg.epsilon,
        "lr_schedule": cfg.lr_schedule,
        "sigma_data": cfg.sigma_data,
        "dtype": cfg.dtype,
        "noise.p_mean": sampler.p_mean,
        "noise.p_std": sampler.p_std,
    }


def cmd_train(args) -> int:
    config = apply_overrides(load_config(args.config), args.set)
    cfg, sampler = build_train_config(config, args.seed)
    _log_config("train", _train_to_keys(cfg, sampler))
    dataset = read_features(args.features, split="train")

    def on_epoch(epoch: int, mean_loss: float) -> None:
        print(f"epoch {epoch + 1}/{cfg.epochs} loss {mean_loss:.6f}")

    params, history = train(dataset, cfg, sampler, on_epoch=on_epoch)
    n_bytes = save_model(params, args.out_model)
    print(f"wrote {args.out_model} ({n_bytes} bytes, {len(history)} epochs)")
    return EXIT_OK


# --------------------------------------------------------------------------
# calibrate / score / eval (shared reconstruction-difficulty config)


_RAA_KEYS = {
    "T",
    "s",
    "m",
    "noise_mean",
    "noise_std",
    "seed",
    "sigma_rec",
    "track_iteration",
    "reverse.mode",
    "reverse.steps",
    "reverse.step_size",
    "reverse.sigma_schedule",
    "reverse.stochastic",
    "reverse.seed",
    "threshold.coefficient",
    "threshold.population_std",
}


def build_raa_config(config: dict, seed_override: int | None) -> RAAConfig:
    _reject_unknown(config, _RAA_KEYS, "score")
    base = RAAConfig()
    rev = ReverseConfig()
    seed = _as_int("seed", config.get("seed", base.seed))
    if seed_override is not None:
        seed = seed_override
    schedule = config.get("reverse.sigma_schedule", None)
    if schedule is not None:
        schedule = _as_float_list("reverse.sigma_schedule", schedule)
    sigma_rec = config.get("sigma_rec", None)
    if sigma_rec is not None:
        sigma_rec = _as_float("sigma_rec", sigma_rec)
    reverse = ReverseConfig(
        mode=_as_str("reverse.mode", config.get("reverse.mode", rev.mode)),
        steps=_as_int("reverse.steps", config.get("reverse.steps", rev.steps)),
        step_size=_as_float("reverse.step_size", config.get("reverse.step_size", rev.step_size)),
        sigma_schedule=schedule,
        stochastic=_as_bool("reverse.stochastic", config.get("reverse.stochastic", rev.stochastic)),
        seed=_as_int("reverse.seed", config.get("reverse.seed", rev.seed)),
    )
    return RAAConfig(
        T=_as_int("T", config.get("T", base.T)),
        s=_as_int("s", config.get("s", base.s)),
        m=_as_float("m", config.get("m", base.m)),
        noise_mean=_as_float("noise_mean", config.get("noise_mean", base.noise_mean)),
        noise_std=_as_float("noise_std", config.get("noise_std", base.noise_std)),
        reverse=reverse,
        seed=seed,
        sigma_rec=sigma_rec,
        track_iteration=_as_bool(
            "track_iteration", config.get("track_iteration", base.track_iteration)
        ),
    )


def _threshold_options(config: dict) -> tuple[float, bool]:
    coefficient = _as_float("threshold.coefficient", config.get("threshold.coefficient", 0.001))
    population = _as_bool(
        "threshold.population_std", config.get("threshold.population_std", True)
    )
    return coefficient, population


def _raa_to_keys(cfg: RAAConfig, coefficient: float, population_std: bool) -> dict:
    return {
        "T": cfg.T,
        "s": cfg.s,
        "m": cfg.m,
        "noise_mean": cfg.noise_mean,
        "noise_std": cfg.noise_std,
        "seed": cfg.seed,
        "sigma_rec": cfg.sigma_rec,
        "track_iteration": cfg.track_iteration,
        "reverse.mode": cfg.reverse.mode,
        "reverse.steps": cfg.reverse.steps,
        "reverse.step_size": cfg.reverse.step_size,
        "reverse.sigma_schedule": cfg.reverse.sigma_schedule,
        "reverse.stochastic": cfg.reverse.stochastic,
        "reverse.seed": cfg.reverse.seed,
        "threshold.coefficient": coefficient,
        "threshold.population_std": population_std,
    }


def cmd_calibrate(args) -> int:
    config = apply_overrides(load_config(args.config), args.set)
    cfg = build_raa_config(config, args.seed)
    coefficient, population = _threshold_options(config)
    _log_config("calibrate", _raa_to_keys(cfg, coefficient, population))
    params = load_model(args.model)
    dataset = read_features(args.features, split="val")
    if not args.full_split and dataset.labels is not None:
        dataset = dataset.subset(dataset.mask("ID"))
        if dataset.n == 0:
            raise ConfigError(
                "no ID-labeled vectors to calibrate on; pass --full-split to use all"
            )
    records = score_dataset(params, dataset, cfg)
    thr = calibrate_threshold(
        [r.diff for r in records],
        population_std=population,
        coefficient=coefficient,
        source_split="val",
    )
    write_threshold(thr, args.out_threshold)
    if args.out_scores:
        write_scores(records, args.out_scores)
        print(f"wrote {args.out_scores} ({len(records)} scores)")
    print(
        f"calibrated on {len(records)} vectors: mu_diff {thr.mu_diff:.6f} "
        f"sigma_diff {thr.sigma_diff:.6f} thre {thr.thre:.6f}"
    )
    print(f"wrote {args.out_threshold}")
    return EXIT_OK


def _evaluate(records: list[ScoreRecord], thr, out_report) -> None:
    labeled = [r for r in records if r.label is not None]
    if not labeled:
        print(f"metrics skipped: none of the {len(records)} scored vectors are labeled")
        return
    if len(labeled) < len(records):
        print(
            f"metrics restricted to {len(labeled)} labeled vectors "
            f"({len(records) - len(labeled)} unlabeled skipped)"
        )
    labels = [r.label for r in labeled]
    predictions = [classify(r.diff, thr) for r in labeled]
    report = confusion_metrics(labels, predictions)
    diffs = [r.diff for r in labeled]
    auc = auc_score(diffs, labels) if len(set(labels)) == 2 else None
    doc = {
        "n_scored": len(records),
        "n_labeled": len(labeled),
        "threshold": thr.to_dict(),
        "metrics": report.to_dict(),
        "auc": auc,
    }
    if out_report:
        Path(out_report).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {out_report}")
    print(format_report_table([("test", report)]))
    if auc is not None:
        print(f"auc {auc:.4f}")
    elif report.degenerate:
        print(f"degenerate metrics (zero denominator): {', '.join(report.degenerate)}")


def cmd_score(args) -> int:
    config = apply_overrides(load_config(args.config), args.set)
    cfg = build_raa_config(config, args.seed)
    coefficient, population = _threshold_options(config)
    _log_config("score", _raa_to_keys(cfg, coefficient, population))
    params = load_model(args.model)
    dataset = read_features(args.features, split="test")
    records = score_dataset(params, dataset, cfg)
    write_scores(records, args.out_scores)
    print(f"wrote {args.out_scores} ({len(records)} scores)")
    if args.eval:
        thr = read_threshold(args.threshold)
        _evaluate(records, thr, args.out_report)
    return EXIT_OK


def cmd_eval(args) -> int:
    records = read_scores(args.scores)
    thr = read_threshold(args.threshold)
    _log_config("eval", {"scores": str(args.scores), "threshold": thr.to_dict()})
    _evaluate(records, thr, args.out_report)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as configuration errors."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="accepted for interface stability; computation is single-process",
    )
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable); value parses as JSON",
    )
    common.add_argument("--config", default=None, help="flat dotted-key JSON config file")

    parser = _Parser(prog="raad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic ID/OOD benchmark")
    p.add_argument("--out-dir", required=True, help="directory for feature files + manifest")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", parents=[common], help="fit the denoiser on a train split")
    p.add_argument("--features", required=True, help="training feature file")
    p.add_argument("--out-model", required=True, help="checkpoint path to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("calibrate", parents=[common], help="fit the decision threshold")
    p.add_argument("--model", required=True, help="trained checkpoint")
    p.add_argument("--features", required=True, help="validation feature file")
    p.add_argument("--out-threshold", required=True, help="threshold JSON to write")
    p.add_argument("--out-scores", default=None, help="optional score dump (JSON lines)")
    p.add_argument(
        "--full-split",
        action="store_true",
        help="calibrate on the full split instead of only ID-labeled vectors "
        "(unlabeled splits always use every vector)",
    )
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("score", parents=[common], help="score a feature file")
    p.add_argument("--model", required=True, help="trained checkpoint")
    p.add_argument("--features", required=True, help="feature file to score")
    p.add_argument("--out-scores", required=True, help="score dump to write (JSON lines)")
    p.add_argument("--eval", action="store_true", help="also evaluate against a threshold")
    p.add_argument("--threshold", default=None, help="threshold JSON (with --eval)")
    p.add_argument("--out-report", default=None, help="report JSON (with --eval)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", parents=[common], help="evaluate an existing score dump")
    p.add_argument("--scores", required=True, help="score dump (JSON lines)")
    p.add_argument("--threshold", required=True, help="threshold JSON")
    p.add_argument("--out-report", default=None, help="report JSON to write")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        if getattr(args, "eval", False) and not args.threshold:
            raise ConfigError("--eval needs --threshold")
        return args.func(args)
    except (ConfigError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TrainingError, ScoringError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
