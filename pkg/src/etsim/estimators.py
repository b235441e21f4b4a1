"""Estimator updates and the simulation loop.

Three estimator variants share one arithmetic kernel:

* event-triggered: each agent mixes its neighbors' *stored* broadcast
  copies with its own measurement innovation,
* time-driven: identical update fed with the neighbors' current estimates
  (equivalently, an always-fresh mailbox),
* centralized: a single estimate driven by all measurements at once.

Because the time-driven update is the event-triggered kernel applied to a
synchronized mailbox, forcing a broadcast every step (always-trigger mode)
reproduces the time-driven trajectory bit for bit under a shared noise
stream.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import SimConfig
from .errors import NonFiniteError
from .events import AgentCommState, Mailbox, broadcast, evaluate_trigger
from .graph import Network
from .rng import master_stream
from .schedules import ScheduleParams, alpha, beta
from .sensing import ObservationSystem, sample_measurements
from .trace import SimTrace

__all__ = ["DistributedState", "CentralizedState", "make_distributed_state",
           "distributed_step", "time_driven_step", "distributed_step_stacked",
           "centralized_step", "centralized_update", "run_simulation",
           "sensor_blockdiag"]


@dataclass
class DistributedState:
    """All agent estimates plus their communication state at step t."""
    t: int
    estimates: np.ndarray            # (N, n)
    comm: list[AgentCommState]
    mailbox: Mailbox


@dataclass
class CentralizedState:
    """Single fused estimate with its gain schedule."""
    t: int
    u: np.ndarray
    a_c: float
    tau_c: float


def make_distributed_state(initial_estimates: np.ndarray) -> DistributedState:
    """Fresh state at t=0; stored copies are initialized to the initial
    estimates (every agent broadcasts its starting point)."""
    est = np.array(initial_estimates, dtype=float)
    comm = [AgentCommState(i, est[i]) for i in range(est.shape[0])]
    return DistributedState(t=0, estimates=est, comm=comm, mailbox=Mailbox(est))


def _neighbor_index_arrays(net: Network) -> list[np.ndarray]:
    return [np.asarray(nb, dtype=int) for nb in net.neighbor_lists]


def _update_estimates(estimates: np.ndarray, stored: np.ndarray,
                      stacked_y: np.ndarray, a_t: float, b_t: float,
                      net: Network, sys: ObservationSystem,
                      neighbor_idx: list[np.ndarray] | None = None) -> np.ndarray:
    """Shared kernel: one consensus+innovation update for every agent.

    x_i' = x_i + b_t * sum_{j in N_i}(stored_j - x_i)
               + a_t * H_i^T (y_i - H_i x_i)
    """
    if neighbor_idx is None:
        neighbor_idx = _neighbor_index_arrays(net)
    new = np.empty_like(estimates)
    for i, nb in enumerate(neighbor_idx):
        x = estimates[i]
        if nb.size:
            consensus = stored[nb].sum(axis=0) - nb.size * x
        else:
            consensus = np.zeros_like(x)
        h = sys.sensors[i]
        residual = stacked_y[sys.slices[i]] - h @ x
        new[i] = x + b_t * consensus + a_t * (h.T @ residual)
    return new


def _require_finite(arr: np.ndarray, t: int) -> None:
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"estimate update produced NaN/Inf at step {t}",
                             step=t)


def distributed_step(state: DistributedState, stacked_y: np.ndarray,
                     params: ScheduleParams, net: Network,
                     sys: ObservationSystem) -> DistributedState:
    """Event-triggered update using the post-broadcast mailbox.

    The trigger/broadcast phase for step t must already have been applied
    to ``state.mailbox``.
    """
    a_t, b_t = alpha(params, state.t), beta(params, state.t)
    new = _update_estimates(state.estimates, state.mailbox.stored, stacked_y,
                            a_t, b_t, net, sys)
    _require_finite(new, state.t)
    return DistributedState(state.t + 1, new, state.comm, state.mailbox)


def time_driven_step(state: DistributedState, stacked_y: np.ndarray,
                     params: ScheduleParams, net: Network,
                     sys: ObservationSystem) -> DistributedState:
    """Baseline update reading the neighbors' current estimates."""
    a_t, b_t = alpha(params, state.t), beta(params, state.t)
    new = _update_estimates(state.estimates, state.estimates, stacked_y,
                            a_t, b_t, net, sys)
    _require_finite(new, state.t)
    return DistributedState(state.t + 1, new, state.comm, state.mailbox)


def sensor_blockdiag(sys: ObservationSystem) -> np.ndarray:
    """Block-diagonal of the transposed sensors, shape (N*n, M)."""
    n, total = sys.n_params, sys.total_dim
    out = np.zeros((sys.n_agents * n, total))
    for i, h in enumerate(sys.sensors):
        out[i * n:(i + 1) * n, sys.slices[i]] = h.T
    return out


def distributed_step_stacked(estimates: np.ndarray, stored: np.ndarray,
                             stacked_y: np.ndarray, t: int,
                             params: ScheduleParams, net: Network,
                             sys: ObservationSystem) -> np.ndarray:
    """Compact stacked form of the event-triggered update.

    X' = X - beta (L kron I) X + alpha Dbar (Y - Dbar^T X)
           + beta (A kron I) (X_stored - X)

    Kept as a second, independently structured route; it must agree with
    :func:`distributed_step` to floating-point accumulation error.
    """
    n = sys.n_params
    adj = net.adjacency.astype(float)
    lap = np.diag(adj.sum(axis=1)) - adj
    eye = np.eye(n)
    lap_kron = np.kron(lap, eye)
    adj_kron = np.kron(adj, eye)
    dbar = sensor_blockdiag(sys)
    x = estimates.reshape(-1)
    xk = stored.reshape(-1)
    a_t, b_t = alpha(params, t), beta(params, t)
    x_new = (x - b_t * (lap_kron @ x) + a_t * (dbar @ (stacked_y - dbar.T @ x))
             + b_t * (adj_kron @ (xk - x)))
    return x_new.reshape(estimates.shape)


def centralized_update(u: np.ndarray, stacked_y: np.ndarray, t: int,
                       a_c: float, tau_c: float,
                       sys: ObservationSystem) -> np.ndarray:
    """One step of the centralized estimator:
    u' = u + (a_c / ((t+1)**tau_c * N)) * sum_i H_i^T (y_i - H_i u).
    """
    gain = a_c / (t + 1.0) ** tau_c
    residual = stacked_y - sys.stacked @ u
    return u + (gain / sys.n_agents) * (sys.stacked.T @ residual)


def centralized_step(state: CentralizedState, stacked_y: np.ndarray,
                     sys: ObservationSystem) -> CentralizedState:
    new_u = centralized_update(state.u, stacked_y, state.t, state.a_c,
                               state.tau_c, sys)
    _require_finite(new_u, state.t)
    return CentralizedState(state.t + 1, new_u, state.a_c, state.tau_c)


# ---------------------------------------------------------------------------
# Simulation loop
# ---------------------------------------------------------------------------

def run_simulation(config: SimConfig, rng: np.random.Generator | None = None,
                   stream_id: tuple | None = None) -> SimTrace:
    """Execute ``config.horizon`` steps of [trigger, broadcast, measure,
    update] for the configured estimator variant.

    Measurements are drawn every step from one seeded stream regardless of
    mode, so runs of different variants under the same seed share their
    noise (common random numbers). Identical (config, seed) pairs yield
    identical traces.
    """
    start = time.perf_counter()
    net = config.build_network()
    sys = config.build_system()
    params = config.schedule
    horizon = config.horizon
    n_agents, n = config.n_agents, config.n_params
    mode = config.mode
    if rng is None:
        rng = master_stream(config.seed)
    if stream_id is None:
        stream_id = (config.seed,)

    use_mailbox = mode in ("event_triggered", "always_trigger", "compare")
    run_distributed = mode != "centralized"
    run_centralized = mode in ("centralized", "compare")
    always = mode == "always_trigger"

    estimates = np.array(config.initial_estimates, dtype=float)
    comm = [AgentCommState(i, estimates[i]) for i in range(n_agents)]
    mailbox = Mailbox(estimates)
    u = np.array(config.centralized_init, dtype=float)

    step_grid = np.unique(np.concatenate(
        [np.arange(0, horizon + 1, config.stride), [horizon]])).astype(int)
    est_hist = np.empty((len(step_grid), n_agents, n))
    err = np.empty((horizon + 1, n_agents))
    cons = np.empty((horizon + 1, n_agents))
    triggered = np.zeros((horizon, n_agents), dtype=bool)
    cen_hist = np.empty((horizon + 1, n)) if run_centralized else None
    cen_err = np.empty(horizon + 1) if run_centralized else None

    theta = config.theta
    neighbor_idx = _neighbor_index_arrays(net)
    store_pos = {int(t): k for k, t in enumerate(step_grid)}
    forced = 0

    def record(t: int, x: np.ndarray) -> None:
        err[t] = np.linalg.norm(x - theta, axis=1)
        cons[t] = np.linalg.norm(x - x.mean(axis=0), axis=1)
        pos = store_pos.get(t)
        if pos is not None:
            est_hist[pos] = x
        if run_centralized:
            cen_hist[t] = u
            cen_err[t] = np.linalg.norm(u - theta)

    record(0, estimates)

    for t in range(horizon):
        if use_mailbox:
            for i in range(n_agents):
                organic = always or evaluate_trigger(comm[i], estimates[i], t,
                                                     params)
                if organic or t == 0:
                    broadcast(comm[i], mailbox, estimates[i], t)
                    triggered[t, i] = True
                    if not organic:
                        forced += 1
        elif mode == "time_driven":
            # The baseline communicates everywhere by definition.
            triggered[t, :] = True

        stacked_y = sample_measurements(sys, rng)

        if run_distributed:
            a_t, b_t = alpha(params, t), beta(params, t)
            stored = mailbox.stored if use_mailbox else estimates
            estimates = _update_estimates(estimates, stored, stacked_y,
                                          a_t, b_t, net, sys, neighbor_idx)
            _require_finite(estimates, t)
        if run_centralized:
            u = centralized_update(u, stacked_y, t, config.centralized_gain,
                                   config.centralized_exponent, sys)
            _require_finite(u, t)

        record(t + 1, estimates)

    return SimTrace(
        config=config,
        mode=mode,
        seed=config.seed,
        stream_id=stream_id,
        horizon=horizon,
        theta=theta.copy(),
        steps=step_grid,
        estimates=est_hist,
        error_norms=err,
        consensus_dev=cons,
        triggered=triggered,
        trigger_times=tuple(tuple(c.trigger_times) for c in comm),
        forced_broadcasts=forced,
        centralized=cen_hist,
        centralized_error=cen_err,
        duration=time.perf_counter() - start,
        notes=config.notices,
    )
