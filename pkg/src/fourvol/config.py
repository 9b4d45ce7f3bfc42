"""Run configuration for the command-line pipeline (JSON files).

Tuning entries accept integers or rules evaluated on the smallest sample
size ``n_min``: ``"n^0.75"`` (``floor(n_min^0.75)``), ``"nyquist"``
(``floor(n_min/2) - M + 1``, for ``N`` only) and ``"kappa"``
(``floor(kappa n_min^0.8)``, for ``N`` only).
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .errors import ConfigurationError, TuningError
from .functionals import TuningParams, default_L, get_functional
from .spot import default_B

MODES = ("general", "synchronous-optimal", "biased-optimal-rate")
MODELS = ("heston-bridge", "constant", "fbm")
_POWER_RULE = re.compile(r"^n\^([0-9]*\.?[0-9]+)$")

Rule = Union[int, str, None]


@dataclass
class TuningConfig:
    N: Rule = None
    M: Rule = "n^0.3"
    B: Optional[int] = None
    L: Optional[int] = None
    kappa: Optional[float] = None
    alpha_holder: Optional[float] = None

    def resolve(self, sizes, periodic: bool = True, mode: str = "general") -> TuningParams:
        """Concrete ``TuningParams`` for the given sample sizes."""
        n_min = min(sizes)
        M = _rule(self.M, n_min, "M")
        if M is None:
            raise ConfigurationError("tuning.M must be an integer or a power rule such as 'n^0.3'")
        N_rule = self.N
        if N_rule is None:
            N_rule = {"synchronous-optimal": "nyquist", "biased-optimal-rate": "kappa"}.get(mode, "n^0.75")
        if N_rule == "nyquist":
            N = n_min // 2 - M + 1
        elif N_rule == "kappa":
            if self.kappa is None:
                raise ConfigurationError("tuning.N = 'kappa' needs tuning.kappa")
            N = math.floor(self.kappa * n_min ** 0.8)
        else:
            N = _rule(N_rule, n_min, "N")
        if N is None or N < 1:
            raise TuningError(f"tuning.N resolves to {N} for n_min={n_min}")
        B = self.B if self.B is not None else default_B(N, M)
        L = self.L if self.L is not None else default_L(B, M, periodic)
        return TuningParams(N=N, M=M, B=B, L=L, kappa=self.kappa)


def _rule(value, n_min, name):
    if value is None:
        return None
    if isinstance(value, bool):
        raise ConfigurationError(f"tuning.{name} must not be a boolean")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        m = _POWER_RULE.match(value.replace(" ", ""))
        if m:
            return math.floor(n_min ** float(m.group(1)))
    raise ConfigurationError(f"tuning.{name}={value!r} is not an integer or a rule like 'n^0.75'")


@dataclass
class SamplingConfig:
    kind: str = "regular"
    mesh: int = 1
    offset: int = 0
    keep_prob: float = 0.5
    max_ratio: float = 50.0


@dataclass
class SimulationConfig:
    """Latent model and per-asset sampling. ``params`` go to the simulator
    (``heston-bridge``: mean_rev, long_run, volvol, drift, corr, price_corr, c0;
    ``constant``: cov, drift; ``fbm``: H, level, scale, drift)."""

    model: str = "heston-bridge"
    d: int = 1
    T: float = 1.0 / 252.0
    n_steps: int = 23400
    params: dict = field(default_factory=dict)
    sampling: list = field(default_factory=lambda: [SamplingConfig()])


@dataclass
class RunConfig:
    T: Optional[float] = None
    files: list = field(default_factory=list)
    assets: Optional[list] = None
    simulation: Optional[SimulationConfig] = None
    tuning: TuningConfig = field(default_factory=TuningConfig)
    functionals: list = field(default_factory=lambda: ["power:2"])
    mode: str = "general"
    alpha: float = 0.05
    periodic: bool = True
    seed: int = 0
    replications: int = 1
    workers: int = 1
    output: str = "fourvol-out"

    def validate(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.replications < 1 or self.workers < 1:
            raise ConfigurationError("replications and workers must be >= 1")
        if not self.functionals:
            raise ConfigurationError("at least one functional is required")
        for f in self.functionals:
            get_functional(f)
        if self.mode == "biased-optimal-rate" and self.tuning.kappa is None:
            raise ConfigurationError("mode biased-optimal-rate needs tuning.kappa (N = kappa n^(4/5))")
        if self.tuning.kappa is not None and not self.tuning.kappa > 0:
            raise ConfigurationError(f"tuning.kappa must be positive, got {self.tuning.kappa}")
        if self.simulation is not None:
            sim = self.simulation
            if sim.model not in MODELS:
                raise ConfigurationError(f"simulation.model must be one of {', '.join(MODELS)}")
            if sim.d < 1 or sim.n_steps < 2 or not sim.T > 0:
                raise ConfigurationError("simulation needs d >= 1, n_steps >= 2 and T > 0")
            if len(sim.sampling) not in (1, sim.d):
                raise ConfigurationError(f"simulation.sampling needs 1 or {sim.d} entries")
        return self


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    return cls(**data)


def config_from_dict(data: dict) -> RunConfig:
    """Build and validate a RunConfig; unknown keys at any level are rejected."""
    data = dict(data)
    if "tuning" in data:
        data["tuning"] = _build(TuningConfig, data["tuning"], "tuning")
    if data.get("simulation") is not None:
        sim = dict(data["simulation"])
        if "sampling" in sim:
            sampling = sim["sampling"]
            if isinstance(sampling, dict):
                sampling = [sampling]
            sim["sampling"] = [_build(SamplingConfig, s, "simulation.sampling") for s in sampling]
        data["simulation"] = _build(SimulationConfig, sim, "simulation")
    return _build(RunConfig, data, "config").validate()


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    cfg = config_from_dict(data)
    base = Path(path).parent
    cfg.files = [str(f if Path(f).is_absolute() else base / f) for f in cfg.files]
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)
