"""Experiment configuration files.

Configs are TOML with five sections: [model], [target], [distribution],
[optimizer] and [run], plus an optional [batch] section (defaulting to the
nominal scheduler).  Every run must state its seed explicitly so comparisons
across batch modes share initial guesses and first batches.  Unknown keys
are rejected, and semantic errors name the offending section.key.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import HamiltonianModel, NoisyQubit, ThreeQubitCoupling
from .objective import GateTarget, rx_pi_target, toffoli_target
from .optimizer import OptimizerConfig
from .sampling import FourierNoise, UniformBox

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


_SECTIONS = {
    "model": {"kind", "duration", "segments", "bound"},
    "target": {"kind", "path"},
    "distribution": {"kind", "half_width", "lo", "hi", "amp_sigma", "num_modes", "freq_lo", "freq_hi"},
    "optimizer": {
        "learning_rate",
        "sample_budget",
        "momentum_lambda",
        "use_momentum",
        "momentum_style",
        "test_set_size",
        "test_every",
        "decay_factor",
        "decay_every",
        "target_batch_loss",
        "objective",
    },
    "batch": {"mode", "size"},
    "run": {"seed", "out"},
}

_REQUIRED_SECTIONS = ("model", "target", "distribution", "optimizer", "run")


@dataclass
class ExperimentConfig:
    """Validated experiment description, ready to instantiate objects from."""

    model_kind: str
    duration: float
    segments: int
    bound: float | None
    target_kind: str
    target_path: str | None
    distribution_kind: str
    distribution_params: dict
    optimizer: OptimizerConfig
    batch_mode: str
    batch_size: int
    seed: int
    out: str | None
    source_path: str | None = None

    def make_model(self) -> HamiltonianModel:
        if self.model_kind == "three_qubit_coupling":
            return ThreeQubitCoupling()
        if self.model_kind == "noisy_qubit":
            return NoisyQubit(num_modes=self.distribution_params.get("num_modes", 10))
        raise ConfigError(f"model.kind: unknown model {self.model_kind!r}")

    def make_target(self) -> GateTarget:
        if self.target_kind == "toffoli":
            return toffoli_target()
        if self.target_kind == "rx_pi":
            return rx_pi_target()
        matrix = np.loadtxt(self.target_path, dtype=complex, delimiter=",")
        try:
            return GateTarget(matrix, Path(self.target_path).stem)
        except ValueError as exc:
            raise ConfigError(f"target.path: {exc}") from exc

    def make_distribution(self):
        p = self.distribution_params
        if self.distribution_kind == "uniform_box":
            if "half_width" in p:
                return UniformBox.symmetric(p["half_width"], p["dim"])
            return UniformBox(np.asarray(p["lo"], dtype=float), np.asarray(p["hi"], dtype=float))
        if self.distribution_kind == "fourier_noise":
            return FourierNoise(
                amp_sigma=p["amp_sigma"],
                num_modes=p.get("num_modes", 10),
                freq_lo=p.get("freq_lo", 0.0),
                freq_hi=p.get("freq_hi", 2.0 * np.pi),
            )
        raise ConfigError(f"distribution.kind: unknown distribution {self.distribution_kind!r}")

    def echo(self) -> dict:
        """Plain-dict form of the configuration for manifests."""
        opt = self.optimizer
        return {
            "model": {
                "kind": self.model_kind,
                "duration": self.duration,
                "segments": self.segments,
                "bound": self.bound,
            },
            "target": {"kind": self.target_kind, "path": self.target_path},
            "distribution": {"kind": self.distribution_kind, **self.distribution_params},
            "optimizer": {
                "learning_rate": opt.learning_rate,
                "sample_budget": opt.sample_budget,
                "momentum_lambda": opt.momentum_lambda,
                "use_momentum": opt.use_momentum,
                "momentum_style": opt.momentum_style,
                "test_set_size": opt.test_set_size,
                "test_every": opt.test_every,
                "decay_factor": opt.decay_factor,
                "decay_every": opt.decay_every,
                "target_batch_loss": opt.target_batch_loss,
                "objective": opt.objective_kind,
            },
            "batch": {"mode": self.batch_mode, "size": self.batch_size},
            "run": {"seed": self.seed, "out": self.out},
        }


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _get(section: dict, section_name: str, key: str, kind, default=None, required=False):
    if key not in section:
        _require(not required, f"{section_name}.{key}: required key is missing")
        return default
    value = section[key]
    label = f"{section_name}.{key}"
    if kind is bool:
        _require(isinstance(value, bool), f"{label}: expected a boolean, got {value!r}")
        return value
    _require(not isinstance(value, bool), f"{label}: expected {kind.__name__}, got {value!r}")
    if kind is float:
        _require(isinstance(value, (int, float)), f"{label}: expected a number, got {value!r}")
        return float(value)
    _require(isinstance(value, kind), f"{label}: expected {kind.__name__}, got {value!r}")
    return value


def load_config(path) -> ExperimentConfig:
    """Parse and validate a TOML experiment config."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    for section_name, table in raw.items():
        _require(section_name in _SECTIONS, f"{section_name}: unknown section")
        _require(isinstance(table, dict), f"{section_name}: expected a table")
        for key in table:
            _require(key in _SECTIONS[section_name], f"{section_name}.{key}: unknown key")
    for section_name in _REQUIRED_SECTIONS:
        _require(section_name in raw, f"{section_name}: required section is missing")

    model_raw = raw["model"]
    model_kind = _get(model_raw, "model", "kind", str, required=True)
    _require(
        model_kind in ("three_qubit_coupling", "noisy_qubit"),
        f"model.kind: unknown model {model_kind!r}",
    )
    duration = _get(model_raw, "model", "duration", float, required=True)
    _require(duration > 0, f"model.duration: must be positive, got {duration}")
    segments = _get(model_raw, "model", "segments", int, required=True)
    _require(segments >= 1, f"model.segments: must be at least 1, got {segments}")
    bound = _get(model_raw, "model", "bound", float)
    _require(bound is None or bound > 0, f"model.bound: must be positive when set, got {bound}")

    target_raw = raw["target"]
    target_kind = _get(target_raw, "target", "kind", str, required=True)
    _require(
        target_kind in ("toffoli", "rx_pi", "file"),
        f"target.kind: expected 'toffoli', 'rx_pi' or 'file', got {target_kind!r}",
    )
    target_path = _get(target_raw, "target", "path", str)
    if target_kind == "file":
        _require(target_path is not None, "target.path: required for target.kind = 'file'")
        resolved = (path.parent / target_path).resolve() if not Path(target_path).is_absolute() else Path(target_path)
        _require(resolved.exists(), f"target.path: file {resolved} does not exist")
        target_path = str(resolved)
    else:
        _require(target_path is None, f"target.path: only valid for target.kind = 'file'")

    dist_raw = raw["distribution"]
    dist_kind = _get(dist_raw, "distribution", "kind", str, required=True)
    dist_params: dict = {}
    model_dim = {"three_qubit_coupling": 2, "noisy_qubit": 30}
    if dist_kind == "uniform_box":
        if "half_width" in dist_raw:
            hw = _get(dist_raw, "distribution", "half_width", float)
            _require(hw >= 0, f"distribution.half_width: must be nonnegative, got {hw}")
            dist_params = {"half_width": hw, "dim": model_dim[model_kind]}
        else:
            lo = _get(dist_raw, "distribution", "lo", list, required=True)
            hi = _get(dist_raw, "distribution", "hi", list, required=True)
            _require(len(lo) == len(hi), "distribution.lo/hi: lengths differ")
            _require(
                len(lo) == model_dim[model_kind],
                f"distribution.lo: expected {model_dim[model_kind]} coordinates for {model_kind}, got {len(lo)}",
            )
            _require(all(a <= b for a, b in zip(lo, hi)), "distribution.lo/hi: requires lo <= hi elementwise")
            dist_params = {"lo": [float(x) for x in lo], "hi": [float(x) for x in hi]}
    elif dist_kind == "fourier_noise":
        _require(model_kind == "noisy_qubit", "distribution.kind: fourier_noise requires model.kind = 'noisy_qubit'")
        sigma = _get(dist_raw, "distribution", "amp_sigma", float, required=True)
        _require(sigma > 0, f"distribution.amp_sigma: must be positive, got {sigma}")
        num_modes = _get(dist_raw, "distribution", "num_modes", int, default=10)
        _require(num_modes >= 1, f"distribution.num_modes: must be at least 1, got {num_modes}")
        dist_params = {
            "amp_sigma": sigma,
            "num_modes": num_modes,
            "freq_lo": _get(dist_raw, "distribution", "freq_lo", float, default=0.0),
            "freq_hi": _get(dist_raw, "distribution", "freq_hi", float, default=2.0 * np.pi),
        }
        _require(
            dist_params["freq_lo"] <= dist_params["freq_hi"],
            "distribution.freq_lo: must not exceed freq_hi",
        )
    else:
        raise ConfigError(f"distribution.kind: expected 'uniform_box' or 'fourier_noise', got {dist_kind!r}")

    batch_raw = raw.get("batch", {})
    batch_mode = _get(batch_raw, "batch", "mode", str, default="nominal")
    _require(
        batch_mode in ("fresh", "fixed", "nominal"),
        f"batch.mode: expected 'fresh', 'fixed' or 'nominal', got {batch_mode!r}",
    )
    batch_size = _get(batch_raw, "batch", "size", int, default=1)
    _require(batch_size >= 1, f"batch.size: must be at least 1, got {batch_size}")

    run_raw = raw["run"]
    seed = _get(run_raw, "run", "seed", int, required=True)
    _require(0 <= seed < 2**64, f"run.seed: must be a 64-bit unsigned integer, got {seed}")
    out = _get(run_raw, "run", "out", str)

    opt_raw = raw["optimizer"]
    objective_kind = _get(opt_raw, "optimizer", "objective", str, default="phase_sensitive")
    _require(
        objective_kind in ("phase_sensitive", "phase_invariant"),
        f"optimizer.objective: expected 'phase_sensitive' or 'phase_invariant', got {objective_kind!r}",
    )
    optimizer = OptimizerConfig(
        learning_rate=_get(opt_raw, "optimizer", "learning_rate", float, required=True),
        sample_budget=_get(opt_raw, "optimizer", "sample_budget", int, required=True),
        momentum_lambda=_get(opt_raw, "optimizer", "momentum_lambda", float, default=0.1),
        use_momentum=_get(opt_raw, "optimizer", "use_momentum", bool, default=True),
        momentum_style=_get(opt_raw, "optimizer", "momentum_style", str, default="blend"),
        test_set_size=_get(opt_raw, "optimizer", "test_set_size", int, default=1000),
        test_every=_get(opt_raw, "optimizer", "test_every", int, default=100),
        seed=seed,
        batch_mode=batch_mode,
        batch_size=batch_size,
        decay_factor=_get(opt_raw, "optimizer", "decay_factor", float, default=1.0),
        decay_every=_get(opt_raw, "optimizer", "decay_every", int),
        target_batch_loss=_get(opt_raw, "optimizer", "target_batch_loss", float),
        objective_kind=objective_kind,
    )
    try:
        optimizer.validate()
    except ValueError as exc:
        raise ConfigError(f"optimizer: {exc}") from exc
    _require(
        optimizer.sample_budget >= batch_size,
        f"optimizer.sample_budget: must be at least batch.size ({batch_size})",
    )

    cfg = ExperimentConfig(
        model_kind=model_kind,
        duration=duration,
        segments=segments,
        bound=bound,
        target_kind=target_kind,
        target_path=target_path,
        distribution_kind=dist_kind,
        distribution_params=dist_params,
        optimizer=optimizer,
        batch_mode=batch_mode,
        batch_size=batch_size,
        seed=seed,
        out=out,
        source_path=str(path),
    )
    model = cfg.make_model()
    dist = cfg.make_distribution()
    _require(
        dist.dim == model.uncertainty_dim,
        f"distribution: dimension {dist.dim} does not match the model's uncertainty dimension {model.uncertainty_dim}",
    )
    _require(
        cfg.make_target().dim == model.dim,
        f"target.kind: target dimension does not match the model dimension {model.dim}",
    )
    return cfg
