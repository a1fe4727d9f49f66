"""
Run configuration: flat YAML mapping of keys to scalars or lists.

Every key is optional; an empty file yields the dimensionless parameter
set m = g = w_r = T = 1, w0 = 0.2, alpha = pi/2 with K in {0.5, 5}.
JSON is valid YAML, so a run manifest (whose ``config`` entry echoes the
full configuration) can be passed back in to reproduce a run.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import yaml

from .cantilever import MapParams, chaos_parameter
from .errors import ConfigError, DomainError

EXPERIMENTS = (
    "phase-portrait",
    "spin-dynamics",
    "psd",
    "coherence",
    "recurrence",
    "levels",
    "diffusion",
    "correlations",
    "ttsb",
)

DEFAULT_KICKS = {
    "phase-portrait": 10_000,
    "spin-dynamics": 2048,
    "psd": 2048,
    "coherence": 1000,
    "recurrence": 1000,
    "levels": 10_000,
    "diffusion": 500,
    "correlations": 4096,
    "ttsb": 1000,
}

#: Seeds whose initial conditions are used for the dynamical-freezing check.
FREEZING_SEEDS = tuple(range(16))

PHYSICAL_KEYS = ("phys_epsilon", "phys_T", "phys_mu", "phys_m", "phys_omega_r", "phys_I0")

# key -> (units / meaning)
KEY_DOCS = {
    "experiment": "experiment name, one of EXPERIMENTS",
    "K": "stochasticity parameter(s), dimensionless; number or list",
    "n_kicks": "number of kicks; default depends on the experiment",
    "seeds": "list of integer seeds; each draws an initial (I0, theta0) uniformly on the torus",
    "omega0": "spin level splitting, rad per time unit",
    "g": "spin-cantilever coupling, rad per time unit per unit length",
    "m": "cantilever mass, mass units",
    "omega_r": "cantilever frequency, rad per time unit",
    "T": "kick period, time units",
    "alpha": "mixing angle, rad",
    "I0": "initial action for seedless runs and ensembles, action units",
    "theta0": "initial angle for seedless runs, rad",
    "histogram_bins": "bins of the level-spacing histogram",
    "eps_state": "state-recurrence threshold (Euclidean spinor distance)",
    "eps_obs": "observable threshold (Euclidean Bloch-vector distance)",
    "occupancy_threshold": "relative power threshold for spectral occupancy",
    "p1": "weight of |0><0| in the initial density matrix (1 = pure |0>)",
    "max_lag": "largest lag of the Hamiltonian covariance",
    "n_trajectories": "ensemble size for diffusion",
    "freeze_level": "target <sx> value of the freezing detector",
    "freeze_band": "half-width of the freezing band",
    "ttsb_max_k": "largest recurrence offset k searched by the TTSB detector (null = all)",
    "debug_eigensystem": "also write per-kick n,chi,phi,eta,xi for spin-dynamics",
    "output_dir": "output directory (falls back to $NEMS_OUT)",
    "phys_epsilon": "drive strength epsilon, dimensionless",
    "phys_T": "physical kick period, s",
    "phys_mu": "quartic nonlinearity, J/m^4",
    "phys_m": "physical mass, kg",
    "phys_omega_r": "physical resonator frequency, rad/s",
    "phys_I0": "reference action, J s",
}


@dataclass(frozen=True)
class RunConfig:
    experiment: Optional[str] = None
    K: Tuple[float, ...] = (0.5, 5.0)
    n_kicks: Optional[int] = None
    seeds: Tuple[int, ...] = ()
    omega0: float = 0.2
    g: float = 1.0
    m: float = 1.0
    omega_r: float = 1.0
    T: float = 1.0
    alpha: float = math.pi / 2
    I0: float = 0.3
    theta0: float = 0.1
    histogram_bins: int = 60
    eps_state: float = 0.05
    eps_obs: float = 0.05
    occupancy_threshold: float = 1e-4
    p1: float = 1.0
    max_lag: int = 1000
    n_trajectories: int = 1000
    freeze_level: float = -1.0
    freeze_band: float = 0.1
    ttsb_max_k: Optional[int] = None
    debug_eigensystem: bool = False
    output_dir: Optional[str] = None
    phys_epsilon: Optional[float] = None
    phys_T: Optional[float] = None
    phys_mu: Optional[float] = None
    phys_m: Optional[float] = None
    phys_omega_r: Optional[float] = None
    phys_I0: Optional[float] = None

    @property
    def kicks(self) -> int:
        if self.n_kicks is not None:
            return self.n_kicks
        return DEFAULT_KICKS[self.experiment]

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["K"] = list(self.K)
        d["seeds"] = list(self.seeds)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _as_float(key, v):
    if not _is_number(v):
        raise ConfigError(key, f"expected a number, got {type(v).__name__}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(key, "must be finite")
    return v


def _as_int(key, v):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            return int(v)
        raise ConfigError(key, f"expected an integer, got {type(v).__name__}")
    return v


def _coerce(key, v):
    if key == "experiment":
        if v is None:
            return None
        if not isinstance(v, str):
            raise ConfigError(key, "expected a string")
        if v not in EXPERIMENTS:
            raise ConfigError(key, f"unknown experiment {v!r}; choose from {', '.join(EXPERIMENTS)}")
        return v
    if key == "K":
        vals = v if isinstance(v, list) else [v]
        if not vals:
            raise ConfigError(key, "needs at least one value")
        return tuple(_as_float(key, x) for x in vals)
    if key == "seeds":
        vals = v if isinstance(v, list) else [v]
        return tuple(_as_int(key, x) for x in vals)
    if key == "debug_eigensystem":
        if not isinstance(v, bool):
            raise ConfigError(key, "expected true or false")
        return v
    if key == "output_dir":
        if v is None:
            return None
        if not isinstance(v, str):
            raise ConfigError(key, "expected a path string")
        return v
    if key in ("n_kicks", "histogram_bins", "max_lag", "n_trajectories", "ttsb_max_k"):
        return None if v is None and key in ("n_kicks", "ttsb_max_k") else _as_int(key, v)
    if key in PHYSICAL_KEYS and v is None:
        return None
    return _as_float(key, v)


def _check_ranges(cfg: RunConfig):
    def positive(key):
        if getattr(cfg, key) <= 0:
            raise ConfigError(key, "must be positive")

    for k in cfg.K:
        if k < 0:
            raise ConfigError("K", f"must be non-negative, got {k!r}")
    if cfg.n_kicks is not None and cfg.n_kicks < 0:
        raise ConfigError("n_kicks", "must be non-negative")
    for key in ("omega0", "m", "omega_r", "T", "histogram_bins", "eps_state", "eps_obs", "freeze_band", "n_trajectories"):
        positive(key)
    if not 0.0 < cfg.occupancy_threshold < 1.0:
        raise ConfigError("occupancy_threshold", "must lie in (0, 1)")
    if not 0.0 <= cfg.p1 <= 1.0:
        raise ConfigError("p1", "must lie in [0, 1]")
    if cfg.max_lag < 0:
        raise ConfigError("max_lag", "must be non-negative")
    if cfg.ttsb_max_k is not None and cfg.ttsb_max_k < 1:
        raise ConfigError("ttsb_max_k", "must be at least 1")
    if cfg.I0 < 0:
        raise ConfigError("I0", "must be non-negative")
    for s in cfg.seeds:
        if not 0 <= s < 2**64:
            raise ConfigError("seeds", "seeds must be 64-bit unsigned integers")


def _resolve_physical(values: dict, K_given: bool) -> dict:
    phys = {k: values.get(k) for k in PHYSICAL_KEYS}
    present = [k for k, v in phys.items() if v is not None]
    if not present:
        return values
    if len(present) != len(PHYSICAL_KEYS):
        missing = [k for k in PHYSICAL_KEYS if phys[k] is None]
        raise ConfigError(missing[0], "physical parameters must be given together")
    mp = dict(
        drive_strength=phys["phys_epsilon"],
        kick_period=phys["phys_T"],
        nonlinearity=phys["phys_mu"],
        mass=phys["phys_m"],
        resonator_freq=phys["phys_omega_r"],
        initial_action=phys["phys_I0"],
    )
    try:
        if K_given:
            for k in values["K"]:
                chaos_parameter(MapParams(stochasticity=k, **mp))
        else:
            values["K"] = (chaos_parameter(MapParams(**mp)).K,)
    except DomainError as exc:
        raise ConfigError("K", str(exc)) from None
    return values


def config_from_mapping(data) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "configuration must be a mapping of keys to values")
    if "config" in data and isinstance(data["config"], dict) and "files" in data:
        data = data["config"]
    values = {}
    for key, v in data.items():
        if key not in _FIELDS:
            raise ConfigError(str(key), "unknown key")
        values[key] = _coerce(key, v)
    values = _resolve_physical(values, K_given="K" in data)
    cfg = RunConfig(**values)
    _check_ranges(cfg)
    return cfg


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text) if text and text.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError("<root>", f"unparseable configuration: {exc}") from None
    return config_from_mapping(data)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def override(cfg: RunConfig, **changes) -> RunConfig:
    """Replace fields (e.g. from CLI flags) and re-validate."""
    data = cfg.to_dict()
    data.update({k: v for k, v in changes.items() if v is not None})
    return config_from_mapping(data)
