"""
Experiment pipelines: cantilever map -> spin evolution -> diagnostics.

Each experiment writes one CSV per (K, initial condition) plus a JSON
manifest ``<experiment>_manifest.json`` holding the configuration echo,
package version, SHA-256 of every CSV, summary metrics and wall-clock
duration.  CSV content depends only on the configuration.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np

from . import __version__
from .cantilever import EnsembleSpec, PhasePoint, TWO_PI, estimate_diffusion, iterate_trajectory, parity_fold, reconstruct_xp
from .config import RunConfig, config_from_mapping
from .csvio import atomic_write_bytes, write_csv
from .errors import ConfigError
from .observables import (
    coherence_relative_entropy,
    correlation_decay_lag,
    density_matrix,
    evolve_mixed,
    freezing_detector,
    hamiltonian_covariances,
    level_spacings,
    pauli_expectations,
    power_spectrum,
    recurrence_distance,
    recurrence_periodicity,
    spectral_occupancy,
    ttsb_detector,
)
from .spin import KET_0, SpinParams, coupling_series, eigensystem_table, evolve_direct


@dataclass
class RunManifest:
    experiment: str
    config: dict
    version: str
    seeds: List[int]
    files: Dict[str, str] = field(default_factory=dict)
    metrics: Dict[str, dict] = field(default_factory=dict)
    duration_s: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "experiment": self.experiment,
                "config": self.config,
                "version": self.version,
                "seeds": self.seeds,
                "files": self.files,
                "metrics": self.metrics,
                "duration_s": self.duration_s,
            },
            indent=2,
            sort_keys=True,
        )


def spin_params(cfg: RunConfig) -> SpinParams:
    return SpinParams(
        level_splitting=cfg.omega0,
        coupling=cfg.g,
        mixing_angle=cfg.alpha,
        kick_period=cfg.T,
        mass=cfg.m,
        resonator_freq=cfg.omega_r,
    )


def seed_initial_condition(seed: int) -> PhasePoint:
    """Initial (I0, theta0) drawn uniformly on [0, 2 pi)^2 from PCG64(seed)."""
    I0, th0 = np.random.default_rng(seed).uniform(0.0, TWO_PI, 2)
    return PhasePoint(float(I0), float(th0))


def initial_conditions(cfg: RunConfig):
    """(label, PhasePoint) pairs: one per seed, or the configured (I0, theta0)."""
    if cfg.seeds:
        return [(f"s{s}", seed_initial_condition(s)) for s in cfg.seeds]
    return [("ic", PhasePoint(cfg.I0, cfg.theta0))]


def _k_label(K):
    return "K" + ("%g" % K)


def _spin_run(cfg, K, p0, n_kicks):
    traj = iterate_trajectory(p0, K, n_kicks)
    sp = spin_params(cfg)
    states = evolve_direct(KET_0, traj, sp)
    return traj, sp, states


def _phase_portrait(cfg, K, label, p0, out, man):
    traj = iterate_trajectory(p0, K, cfg.kicks)
    rows = []
    for n, p in enumerate(traj):
        x, mom = reconstruct_xp(parity_fold(p), cfg.m, cfg.omega_r)
        rows.append((n, p.action, p.angle, x, mom))
    name = f"phase-portrait_{_k_label(K)}_{label}.csv"
    man.files[name] = write_csv(out / name, ["n", "I", "theta", "x", "p"], rows)
    man.metrics[name] = {"K": K, "max_abs_dI": float(np.max(np.abs(traj.action - traj.action[0])))}


def _spin_dynamics(cfg, K, label, p0, out, man):
    traj, sp, states = _spin_run(cfg, K, p0, cfg.kicks)
    bloch = pauli_expectations(states)
    n = np.arange(len(states))
    name = f"spin-dynamics_{_k_label(K)}_{label}.csv"
    man.files[name] = write_csv(out / name, ["n", "sx", "sy", "sz"], np.column_stack([n, bloch]))
    man.metrics[name] = {
        "K": K,
        "freezing_run": freezing_detector(bloch[:, 0], cfg.freeze_level, cfg.freeze_band),
    }
    if cfg.debug_eigensystem and sp.resonant:
        ename = f"eigensystem_{_k_label(K)}_{label}.csv"
        man.files[ename] = write_csv(out / ename, ["n", "chi", "phi", "eta", "xi"], eigensystem_table(traj, sp))


def _psd(cfg, K, label, p0, out, man):
    _, _, states = _spin_run(cfg, K, p0, cfg.kicks)
    bloch = pauli_expectations(states)[1:]
    spectra = [power_spectrum(bloch[:, i], cfg.T, c) for i, c in enumerate("xyz")]
    name = f"psd_{_k_label(K)}_{label}.csv"
    rows = np.column_stack([spectra[0].frequencies] + [s.power for s in spectra])
    man.files[name] = write_csv(out / name, ["omega", "Ix", "Iy", "Iz"], rows)
    man.metrics[name] = {
        "K": K,
        **{f"occupancy_{s.component}": spectral_occupancy(s, cfg.occupancy_threshold) for s in spectra},
    }


def _coherence(cfg, K, label, p0, out, man):
    traj = iterate_trajectory(p0, K, cfg.kicks)
    sp = spin_params(cfg)
    if cfg.p1 == 1.0:
        rho = density_matrix(evolve_direct(KET_0, traj, sp))
    else:
        rho = evolve_mixed(cfg.p1, traj, sp)
    D = coherence_relative_entropy(rho)
    name = f"coherence_{_k_label(K)}_{label}.csv"
    man.files[name] = write_csv(out / name, ["n", "coherence"], np.column_stack([np.arange(len(D)), D]))
    man.metrics[name] = {"K": K, "max": float(np.max(D)), "mean": float(np.mean(D))}


def _recurrence(cfg, K, label, p0, out, man):
    _, _, states = _spin_run(cfg, K, p0, cfg.kicks)
    d = recurrence_distance(states, states[0])
    lag, ac = recurrence_periodicity(d)
    name = f"recurrence_{_k_label(K)}_{label}.csv"
    man.files[name] = write_csv(out / name, ["n", "recurrence"], np.column_stack([np.arange(len(d)), d]))
    man.metrics[name] = {"K": K, "dominant_period": lag, "autocorrelation_at_period": ac}


def _levels(cfg, K, label, p0, out, man):
    traj = iterate_trajectory(p0, K, cfg.kicks)
    sample = level_spacings(traj, spin_params(cfg), cfg.histogram_bins)
    name = f"levels_{_k_label(K)}_{label}.csv"
    man.files[name] = write_csv(out / name, ["S"], sample.spacings[:, None])
    hname = f"levels-histogram_{_k_label(K)}_{label}.csv"
    rows = np.column_stack([sample.bin_edges[:-1], sample.bin_edges[1:], sample.densities])
    man.files[hname] = write_csv(out / hname, ["bin_lo", "bin_hi", "density"], rows)
    widths = np.diff(sample.bin_edges)
    man.metrics[name] = {
        "K": K,
        "min_S": float(sample.spacings.min()),
        "mode_S": float(0.5 * (sample.bin_edges[np.argmax(sample.densities)] + sample.bin_edges[np.argmax(sample.densities) + 1])),
        "density_integral": float(np.sum(sample.densities * widths)),
    }


def _correlations(cfg, K, label, p0, out, man):
    traj = iterate_trajectory(p0, K, cfg.kicks)
    sp = spin_params(cfg)
    max_lag = min(cfg.max_lag, cfg.kicks - 1)
    cov = hamiltonian_covariances(traj, sp, KET_0, max_lag)
    name = f"correlations_{_k_label(K)}_{label}.csv"
    man.files[name] = write_csv(out / name, ["lag", "covariance"], np.column_stack([np.arange(cov.size), cov]))
    man.metrics[name] = {"K": K, "decay_lag": correlation_decay_lag(cov)}


def _ttsb(cfg, K, label, p0, out, man):
    _, _, states = _spin_run(cfg, K, p0, cfg.kicks)
    bloch = pauli_expectations(states)
    records = ttsb_detector(states, bloch, cfg.eps_state, cfg.eps_obs, cfg.ttsb_max_k)
    rows = [(r.n, r.k, r.state_distance, r.observable_distance, r.is_event) for r in records]
    name = f"ttsb_{_k_label(K)}_{label}.csv"
    man.files[name] = write_csv(out / name, ["n", "k", "state_distance", "observable_distance", "ttsb"], rows)
    man.metrics[name] = {
        "K": K,
        "state_recurrences": len(records),
        "ttsb_events": sum(r.is_event for r in records),
    }


def _diffusion(cfg, K, out, man):
    for seed in cfg.seeds or (0,):
        es = EnsembleSpec(cfg.n_trajectories, max(cfg.kicks, 1), seed, initial_action=cfg.I0)
        est = estimate_diffusion(es, K, cfg.T)
        name = f"diffusion_{_k_label(K)}_s{seed}.csv"
        man.files[name] = write_csv(out / name, ["n", "mean_I", "var_I", "msd"], est.moments)
        man.metrics[name] = {
            "K": K,
            "A": est.A,
            "B": est.B,
            "A_stderr": est.A_stderr,
            "B_stderr": est.B_stderr,
            "fit_D": est.fit_D,
            "quasilinear_D": K * K / (2.0 * cfg.T),
            "regular_regime_warning": est.regular_regime,
        }


_PER_TRAJECTORY = {
    "phase-portrait": _phase_portrait,
    "spin-dynamics": _spin_dynamics,
    "psd": _psd,
    "coherence": _coherence,
    "recurrence": _recurrence,
    "levels": _levels,
    "correlations": _correlations,
    "ttsb": _ttsb,
}


def resolve_output_dir(cfg: RunConfig) -> Path:
    out = cfg.output_dir or os.environ.get("NEMS_OUT") or "nems_out"
    return Path(out)


def run_experiment(cfg: RunConfig) -> RunManifest:
    """Run ``cfg.experiment`` for every K and initial condition; write CSVs and manifest."""
    if cfg.experiment is None:
        raise ConfigError("experiment", "no experiment selected")
    out = resolve_output_dir(cfg)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("output_dir", f"cannot create {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError("output_dir", f"{out} is not writable")
    start = time.perf_counter()
    echo = cfg.to_dict()
    echo["output_dir"] = None
    man = RunManifest(cfg.experiment, echo, __version__, list(cfg.seeds))
    for K in cfg.K:
        if cfg.experiment == "diffusion":
            _diffusion(cfg, K, out, man)
            continue
        for label, p0 in initial_conditions(cfg):
            _PER_TRAJECTORY[cfg.experiment](cfg, K, label, p0, out, man)
    man.duration_s = time.perf_counter() - start
    atomic_write_bytes(out / f"{cfg.experiment}_manifest.json", (man.to_json() + "\n").encode("utf-8"))
    return man


def config_from_manifest(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return config_from_mapping(data["config"])
