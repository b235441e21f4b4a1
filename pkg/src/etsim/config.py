"""Simulation configuration: JSON loading, validation, and builders.

A config bundles the network, the observation model, the gain/threshold
schedules, the horizon, the seed, and the estimator variant to run.
Dimension errors are rejected at load time; violated theorem conditions
are only surfaced as warnings by the ``validate`` CLI subcommand, never
as load failures.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, ParseError
from .graph import Network, build_network
from .schedules import DEFAULT_EPSILON1, ScheduleParams
from .sensing import ObservationSystem, build_observation_system

__all__ = ["SimConfig", "MODES", "load_config", "config_from_dict",
           "bundled_config_path"]

MODES = ("event_triggered", "time_driven", "always_trigger", "centralized",
         "compare")

DEFAULT_SEED = 0


@dataclass(frozen=True)
class SimConfig:
    """Fully validated simulation configuration."""
    adjacency: np.ndarray
    theta: np.ndarray
    sensors: tuple[np.ndarray, ...]
    noise_cov: np.ndarray
    schedule: ScheduleParams
    horizon: int
    seed: int
    mode: str
    initial_estimates: np.ndarray
    centralized_gain: float
    centralized_exponent: float
    centralized_init: np.ndarray
    stride: int = 1
    name: str = "unnamed"
    notices: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_params(self) -> int:
        return self.theta.shape[0]

    def build_network(self) -> Network:
        return build_network(self.adjacency)

    def build_system(self) -> ObservationSystem:
        return build_observation_system(self.theta, self.sensors, self.noise_cov)

    def with_(self, **changes) -> "SimConfig":
        """Copy with selected fields replaced (seed, mode, horizon, ...)."""
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "adjacency": self.adjacency.tolist(),
            "theta": self.theta.tolist(),
            "sensors": [h.tolist() for h in self.sensors],
            "noise_cov": self.noise_cov.tolist(),
            "schedule": {
                "a": self.schedule.a,
                "b": self.schedule.b,
                "tau1": self.schedule.tau1,
                "tau2": self.schedule.tau2,
                "rho": list(self.schedule.rho),
                "epsilon1": self.schedule.epsilon1,
            },
            "horizon": self.horizon,
            "seed": self.seed,
            "mode": self.mode,
            "initial_estimates": self.initial_estimates.tolist(),
            "centralized": {
                "a_c": self.centralized_gain,
                "tau_c": self.centralized_exponent,
                "init": self.centralized_init.tolist(),
            },
            "stride": self.stride,
            "notices": list(self.notices),
        }


def bundled_config_path(name: str) -> Path | None:
    """Path of a config shipped with the package, or None."""
    candidate = resources.files("etsim").joinpath("data", name)
    try:
        if candidate.is_file():
            return Path(str(candidate))
    except (OSError, TypeError):
        return None
    return None


def load_config(path: str | Path) -> SimConfig:
    """Load and validate a JSON config.

    Bare file names that do not exist on disk are resolved against the
    configs bundled with the package (e.g. ``paper_sec4.json``).
    """
    p = Path(path)
    if not p.is_file():
        bundled = bundled_config_path(p.name) if p.name == str(p) else None
        if bundled is None:
            raise ParseError(f"config file not found: {path}")
        p = bundled
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {p} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"config {p} must contain a JSON object")
    cfg = config_from_dict(raw)
    if cfg.name == "unnamed":
        cfg = cfg.with_(name=p.stem)
    return cfg


def config_from_dict(raw: dict) -> SimConfig:
    """Validate a raw config mapping into a :class:`SimConfig`."""
    notices: list[str] = []
    try:
        adjacency = np.asarray(raw["adjacency"])
        theta = np.asarray(raw["theta"], dtype=float).reshape(-1)
        sensors = tuple(np.atleast_2d(np.asarray(h, dtype=float))
                        for h in raw["sensors"])
        horizon = int(raw["horizon"])
    except KeyError as exc:
        raise ParseError(f"config is missing required key {exc}") from exc

    n_agents = adjacency.shape[0] if adjacency.ndim == 2 else 0
    n = theta.shape[0]
    if len(sensors) != n_agents:
        raise DimensionMismatchError(
            f"{len(sensors)} sensors for {n_agents} agents")
    for i, h in enumerate(sensors):
        if h.shape[1] != n:
            raise DimensionMismatchError(
                f"sensor {i} has {h.shape[1]} columns, theta has length {n}")
    total_dim = sum(h.shape[0] for h in sensors)

    if "noise_cov" in raw:
        noise_cov = np.asarray(raw["noise_cov"], dtype=float)
    elif "noise_variance" in raw:
        noise_cov = float(raw["noise_variance"]) * np.eye(total_dim)
    else:
        raise ParseError("config needs either noise_cov or noise_variance")
    if noise_cov.shape != (total_dim, total_dim):
        raise DimensionMismatchError(
            f"noise_cov is {noise_cov.shape}, expected ({total_dim}, {total_dim})")

    sched_raw = dict(raw.get("schedule", {}))
    rho_raw = sched_raw.get("rho", 0.6)
    rho = tuple(float(r) for r in rho_raw) if isinstance(rho_raw, (list, tuple)) \
        else (float(rho_raw),) * n_agents
    if len(rho) != n_agents:
        raise DimensionMismatchError(
            f"{len(rho)} threshold exponents for {n_agents} agents")
    schedule = ScheduleParams(
        a=float(sched_raw.get("a", 1.0)),
        b=float(sched_raw.get("b", 1.0)),
        tau1=float(sched_raw["tau1"]) if "tau1" in sched_raw else 0.7,
        tau2=float(sched_raw["tau2"]) if "tau2" in sched_raw else 0.5,
        rho=rho,
        epsilon1=float(sched_raw.get("epsilon1", DEFAULT_EPSILON1)),
    )

    if "initial_estimates" in raw:
        initial = np.asarray(raw["initial_estimates"], dtype=float)
    else:
        initial = np.zeros((n_agents, n))
        notices.append("no initial_estimates given; starting all agents at 0")
    if initial.shape != (n_agents, n):
        raise DimensionMismatchError(
            f"initial_estimates is {initial.shape}, expected ({n_agents}, {n})")

    if "seed" in raw:
        seed = int(raw["seed"])
    else:
        seed = DEFAULT_SEED
        notices.append(f"no seed given; using deterministic default {DEFAULT_SEED}")

    mode = str(raw.get("mode", "event_triggered"))
    if mode not in MODES:
        raise ParseError(f"unknown mode {mode!r}; expected one of {MODES}")
    if horizon < 0:
        raise ParseError("horizon must be nonnegative")
    stride = int(raw.get("stride", 1))
    if stride < 1:
        raise ParseError("stride must be at least 1")

    cen = dict(raw.get("centralized", {}))
    centralized_gain = float(cen.get("a_c", schedule.a))
    centralized_exponent = float(cen.get("tau_c", schedule.tau1))
    if "init" in cen:
        centralized_init = np.asarray(cen["init"], dtype=float).reshape(-1)
        if centralized_init.shape != (n,):
            raise DimensionMismatchError(
                f"centralized init has length {centralized_init.shape[0]}, "
                f"expected {n}")
    else:
        centralized_init = initial.mean(axis=0)

    # Fail fast on bad graph / noise model while the context is still "config".
    net = build_network(adjacency)
    build_observation_system(theta, sensors, noise_cov)

    return SimConfig(
        adjacency=net.adjacency,
        theta=theta,
        sensors=sensors,
        noise_cov=noise_cov,
        schedule=schedule,
        horizon=horizon,
        seed=seed,
        mode=mode,
        initial_estimates=initial,
        centralized_gain=centralized_gain,
        centralized_exponent=centralized_exponent,
        centralized_init=centralized_init,
        stride=stride,
        name=str(raw.get("name", "unnamed")),
        notices=tuple(notices),
    )
