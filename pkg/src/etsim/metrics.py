"""Trace-level metrics: error norms, consensus deviation, the gap to the
centralized baseline, communication statistics, and the Monte Carlo
studies for bias decay and asymptotic normality.

All asymptotic statements are evaluated as finite-horizon decay ratios;
the numeric pass thresholds live with the tests, not here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import asymptotic_covariance
from .config import SimConfig
from .errors import DomainError, MissingBaselineError, NotHurwitzError
from .estimators import centralized_update, run_simulation
from .rng import substream
from .schedules import ConditionReport, ScheduleParams
from .sensing import ObservationSystem, sample_measurements
from .trace import SimTrace

__all__ = ["CommunicationStats", "ScaledDecay", "DecaySummary", "BiasStudy",
           "NormalityStudy", "MetricsReport", "communication_stats",
           "consensus_decay", "centralized_gap", "staleness_excess",
           "coupling_term_excess", "monte_carlo_bias",
           "monte_carlo_normality", "build_report", "summarize_decay"]


# ---------------------------------------------------------------------------
# Communication
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CommunicationStats:
    """Broadcast counts, rates and triggering-interval growth.

    The rate counts organic broadcasts only; the forced step-0 broadcasts
    that initialize the stored copies are reported separately. Interval
    deciles are the first/last tenth of each agent's interval sequence.
    """
    communication_rate: float
    forced_broadcasts: int
    per_agent_counts: tuple[int, ...]
    per_agent_rates: tuple[float, ...]
    first_decile_means: tuple[float, ...]
    last_decile_means: tuple[float, ...]
    growth_ratios: tuple[float, ...]

    def to_dict(self) -> dict:
        def clean(values):
            return [v if math.isfinite(v) else None for v in values]
        return {
            "communication_rate": self.communication_rate,
            "forced_broadcasts": self.forced_broadcasts,
            "per_agent_counts": list(self.per_agent_counts),
            "per_agent_rates": list(self.per_agent_rates),
            "first_decile_means": clean(self.first_decile_means),
            "last_decile_means": clean(self.last_decile_means),
            "growth_ratios": clean(self.growth_ratios),
        }


def trigger_intervals(trace: SimTrace, agent: int) -> np.ndarray:
    """Successive triggering-instant differences of one agent."""
    return np.diff(np.asarray(trace.trigger_times[agent], dtype=int))


def communication_stats(trace: SimTrace) -> CommunicationStats:
    horizon, n_agents = trace.horizon, trace.n_agents
    denom = max(1, n_agents * horizon)
    total = int(trace.triggered.sum())
    rate = (total - trace.forced_broadcasts) / denom
    forced_each = trace.forced_broadcasts // n_agents

    counts, rates, firsts, lasts, growths = [], [], [], [], []
    for i in range(n_agents):
        count = int(trace.triggered[:, i].sum())
        counts.append(count)
        rates.append((count - forced_each) / max(1, horizon))
        intervals = trigger_intervals(trace, i)
        if intervals.size == 0:
            firsts.append(math.nan)
            lasts.append(math.nan)
            growths.append(math.nan)
            continue
        d = max(1, intervals.size // 10)
        first = float(intervals[:d].mean())
        last = float(intervals[-d:].mean())
        firsts.append(first)
        lasts.append(last)
        growths.append(last / first if first > 0 else math.inf)

    return CommunicationStats(
        communication_rate=float(rate),
        forced_broadcasts=trace.forced_broadcasts,
        per_agent_counts=tuple(counts),
        per_agent_rates=tuple(rates),
        first_decile_means=tuple(firsts),
        last_decile_means=tuple(lasts),
        growth_ratios=tuple(growths),
    )


# ---------------------------------------------------------------------------
# Scaled decay sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScaledDecay:
    """A sequence ``(t+1)**tau0 * value(t)`` with a log-log tail slope."""
    tau0: float
    steps: np.ndarray
    scaled: np.ndarray
    tail_slope: float
    warning: str | None = None

    def value_at(self, t: int) -> float:
        idx = int(np.searchsorted(self.steps, t))
        if idx >= self.steps.size or self.steps[idx] != t:
            raise KeyError(f"step {t} not present in the decay sequence")
        return float(self.scaled[idx])


@dataclass(frozen=True)
class DecaySummary:
    metric: str
    tau0: float
    tail_slope: float
    reference_step: int
    reference_value: float
    final_value: float
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "metric": self.metric, "tau0": self.tau0,
            "tail_slope": self.tail_slope,
            "reference_step": self.reference_step,
            "reference_value": self.reference_value,
            "final_value": self.final_value, "warning": self.warning,
        }


def _tail_slope(steps: np.ndarray, scaled: np.ndarray) -> float:
    """Log-log slope over the last half of the horizon."""
    horizon = steps[-1] if steps.size else 0
    mask = (steps >= horizon / 2) & (scaled > 0)
    if mask.sum() < 2:
        return math.nan
    x = np.log(steps[mask] + 1.0)
    y = np.log(scaled[mask])
    if x.size > 512:
        sel = np.linspace(0, x.size - 1, 512).astype(int)
        x, y = x[sel], y[sel]
    return float(np.polyfit(x, y, 1)[0])


def consensus_decay(trace: SimTrace, tau0: float,
                    report: ConditionReport | None = None) -> ScaledDecay:
    """Scaled worst-agent consensus deviation
    ``(t+1)**tau0 * max_i ||x_i(t) - x_avg(t)||`` at every step."""
    steps = np.arange(trace.horizon + 1)
    value = trace.consensus_dev.max(axis=1)
    scaled = (steps + 1.0) ** tau0 * value
    warning = None
    if report is not None and tau0 >= report.consensus_tau0_sup:
        warning = (f"tau0={tau0} is not below the certified supremum "
                   f"{report.consensus_tau0_sup}; decay is not guaranteed")
    return ScaledDecay(tau0, steps, scaled, _tail_slope(steps, scaled), warning)


def centralized_gap(trace: SimTrace, tau0: float,
                    report: ConditionReport | None = None) -> ScaledDecay:
    """Scaled worst-agent gap to the parallel centralized trajectory at the
    stored estimate steps."""
    if trace.centralized is None:
        raise MissingBaselineError(
            "trace has no parallel centralized trajectory; run in compare mode")
    steps = trace.steps
    u = trace.centralized[steps]
    gap = np.linalg.norm(trace.estimates - u[:, None, :], axis=2).max(axis=1)
    scaled = (steps + 1.0) ** tau0 * gap
    warning = None
    if report is not None and tau0 >= report.approx_tau0_sup:
        warning = (f"tau0={tau0} is not below the certified supremum "
                   f"{report.approx_tau0_sup}; decay is not guaranteed")
    return ScaledDecay(tau0, steps, scaled, _tail_slope(steps, scaled), warning)


def summarize_decay(decay: ScaledDecay, metric: str) -> DecaySummary:
    horizon = int(decay.steps[-1]) if decay.steps.size else 0
    t_ref = max(1, horizon // 100)
    idx = min(int(np.searchsorted(decay.steps, t_ref)), decay.steps.size - 1)
    return DecaySummary(
        metric=metric, tau0=decay.tau0, tail_slope=decay.tail_slope,
        reference_step=int(decay.steps[idx]),
        reference_value=float(decay.scaled[idx]),
        final_value=float(decay.scaled[-1]), warning=decay.warning,
    )


# ---------------------------------------------------------------------------
# Trace invariants (reconstructed independently of the runtime mailbox)
# ---------------------------------------------------------------------------

def _require_dense_trace(trace: SimTrace) -> None:
    if (trace.steps.size != trace.horizon + 1
            or trace.steps[0] != 0 or trace.steps[-1] != trace.horizon):
        raise DomainError("this check needs a stride-1 trace")


def staleness_excess(trace: SimTrace,
                     params: ScheduleParams | None = None) -> float:
    """Worst violation of the post-broadcast staleness bound.

    Reconstructs each agent's stored copy at every step from the trigger
    log and the estimate history, and returns
    ``max_{i,t} (||x_i(t) - stored_i(t)|| - (t+1)**-rho_i)`` over all
    steps with a broadcast phase. A nonpositive value means the bound
    held everywhere, exactly.
    """
    _require_dense_trace(trace)
    params = params if params is not None else trace.config.schedule
    horizon = trace.horizon
    if horizon == 0:
        return -math.inf
    ts = np.arange(horizon)
    worst = -math.inf
    for i, times in enumerate(trace.trigger_times):
        times_arr = np.asarray(times, dtype=int)
        if times_arr.size == 0:
            continue
        idx = np.searchsorted(times_arr, ts, side="right") - 1
        stored = trace.estimates[times_arr[idx], i, :]
        dev = np.linalg.norm(trace.estimates[ts, i, :] - stored, axis=1)
        thr = (ts + 1.0) ** -params.rho[i]
        worst = max(worst, float((dev - thr).max()))
    return worst


def coupling_term_excess(trace: SimTrace,
                         params: ScheduleParams | None = None) -> float:
    """Worst violation of the per-step coupling bound
    ``beta(t) ||(A kron I)(X_stored - X)|| <= beta(t) ||A|| sqrt(N) (t+1)**-rho0``.

    This is the term by which the event-triggered update differs from the
    time-driven one at equal states; nonpositive means the bound held.
    """
    _require_dense_trace(trace)
    params = params if params is not None else trace.config.schedule
    horizon, n_agents = trace.horizon, trace.n_agents
    if horizon == 0:
        return -math.inf
    adj = np.asarray(trace.config.adjacency, dtype=float)
    adj_norm = float(np.linalg.eigvalsh(adj)[-1])
    ts = np.arange(horizon)
    stored = np.empty((horizon, n_agents, trace.estimates.shape[2]))
    for i, times in enumerate(trace.trigger_times):
        times_arr = np.asarray(times, dtype=int)
        idx = np.searchsorted(times_arr, ts, side="right") - 1
        stored[:, i, :] = trace.estimates[times_arr[idx], i, :]
    diff = stored - trace.estimates[:horizon]
    coupled = np.einsum("ij,tjk->tik", adj, diff)
    term = np.linalg.norm(coupled.reshape(horizon, -1), axis=1)
    bound = adj_norm * math.sqrt(n_agents) * (ts + 1.0) ** -params.rho0
    return float((term - bound).max())


# ---------------------------------------------------------------------------
# Monte Carlo studies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BiasStudy:
    """Norm of the across-run mean error per agent at checkpoint steps."""
    checkpoints: np.ndarray
    mean_error_norms: np.ndarray      # (len(checkpoints), N)
    n_runs: int
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "checkpoints": self.checkpoints.tolist(),
            "mean_error_norms": self.mean_error_norms.tolist(),
            "n_runs": self.n_runs,
            "warnings": list(self.warnings),
        }


def default_checkpoints(horizon: int, count: int = 12) -> np.ndarray:
    """Logarithmically spaced checkpoints in [1, horizon]."""
    if horizon < 1:
        return np.array([0])
    pts = np.geomspace(1, horizon, count)
    return np.unique(np.round(pts).astype(int))


def monte_carlo_bias(config: SimConfig, n_runs: int,
                     checkpoints=None, base_seed: int | None = None) -> BiasStudy:
    """Average the estimation error over independently seeded runs.

    Replication r draws from the substream (base_seed, r); the result is
    independent of how replications would be scheduled.
    """
    if n_runs < 1:
        raise DomainError("n_runs must be at least 1")
    if config.mode == "centralized":
        raise DomainError("bias study needs a distributed estimator mode")
    warnings: list[str] = []
    if n_runs == 1:
        warnings.append("single run: low confidence, no averaging effect")
    from .schedules import validate as validate_schedule
    report = validate_schedule(config.schedule)
    if not report.unbiased_ok:
        warnings.append("rho0 <= tau1 - tau2: bias removal is not guaranteed "
                        "for this schedule")

    if checkpoints is None:
        checkpoints = default_checkpoints(config.horizon)
    checkpoints = np.unique(np.asarray(checkpoints, dtype=int))
    if checkpoints.size == 0 or checkpoints[0] < 0:
        raise DomainError("checkpoints must be nonnegative steps")
    horizon = int(checkpoints[-1])
    if base_seed is None:
        base_seed = config.seed
    run_cfg = config.with_(horizon=horizon, stride=1)

    n_agents, n = config.n_agents, config.n_params
    # Kahan-compensated accumulation keeps the across-run sum independent
    # of any future re-ordering of replications.
    sums = np.zeros((checkpoints.size, n_agents, n))
    comp = np.zeros_like(sums)
    for r in range(n_runs):
        trace = run_simulation(run_cfg, rng=substream(base_seed, r),
                               stream_id=(base_seed, r))
        term = (trace.estimates[checkpoints] - config.theta) - comp
        total = sums + term
        comp = (total - sums) - term
        sums = total
    mean_err = sums / n_runs
    norms = np.linalg.norm(mean_err, axis=2)
    return BiasStudy(checkpoints=checkpoints, mean_error_norms=norms,
                     n_runs=n_runs, warnings=tuple(warnings))


@dataclass(frozen=True)
class NormalityStudy:
    """Sample covariance of the scaled centralized error against the
    predicted asymptotic covariance. ``scaled_errors`` keeps the raw
    per-run scaled error vectors for plotting."""
    sample_cov: np.ndarray
    predicted_cov: np.ndarray
    rel_error: float
    n_runs: int
    t_eval: int
    gain: float
    scaled_errors: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "sample_cov": self.sample_cov.tolist(),
            "predicted_cov": self.predicted_cov.tolist(),
            "rel_error": self.rel_error,
            "n_runs": self.n_runs,
            "t_eval": self.t_eval,
            "gain": self.gain,
        }


def monte_carlo_normality(sys: ObservationSystem, a_c: float, t_eval: int,
                          n_runs: int, base_seed: int = 0,
                          u_init: np.ndarray | None = None) -> NormalityStudy:
    """Compare the sample covariance of ``sqrt(t+1) (u(t) - theta)`` over
    independent centralized runs (gain ``a_c/(t+1)``) with the Lyapunov
    prediction.

    Raises NotHurwitzError when the gain is too small for the Gramian.
    """
    if n_runs < 2:
        raise DomainError("need at least 2 runs for a sample covariance")
    if t_eval < 1:
        raise DomainError("t_eval must be at least 1")
    cov = asymptotic_covariance(sys, a_c)
    if not cov.hurwitz:
        raise NotHurwitzError(
            f"gain {a_c} gives a non-Hurwitz drift for this system "
            f"(needs a_c > N / (2 lambda_min(G)))")

    n = sys.n_params
    u0 = np.zeros(n) if u_init is None else np.asarray(u_init, dtype=float)
    scale = math.sqrt(t_eval + 1.0)
    errs = np.empty((n_runs, n))
    for r in range(n_runs):
        rng = substream(base_seed, r)
        u = u0.copy()
        for t in range(t_eval):
            y = sample_measurements(sys, rng)
            u = centralized_update(u, y, t, a_c, 1.0, sys)
        errs[r] = scale * (u - sys.theta)
    sample_cov = np.atleast_2d(np.cov(errs, rowvar=False, ddof=1))
    denom = float(np.linalg.norm(cov.s_c))
    diff = float(np.linalg.norm(sample_cov - cov.s_c))
    rel = diff / denom if denom > 0 else diff
    return NormalityStudy(sample_cov=sample_cov, predicted_cov=cov.s_c,
                          rel_error=rel, n_runs=n_runs, t_eval=t_eval,
                          gain=a_c, scaled_errors=errs)


# ---------------------------------------------------------------------------
# Aggregate report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricsReport:
    final_error_norms: tuple[float, ...]
    communication: CommunicationStats
    decay_checks: tuple[DecaySummary, ...]
    normality: NormalityStudy | None = None

    def to_dict(self) -> dict:
        return {
            "final_error_norms": list(self.final_error_norms),
            "communication": self.communication.to_dict(),
            "decay_checks": [d.to_dict() for d in self.decay_checks],
            "normality": None if self.normality is None
            else self.normality.to_dict(),
        }


def build_report(trace: SimTrace, report: ConditionReport | None = None,
                 tau0_values: tuple[float, ...] = (0.0,),
                 normality: NormalityStudy | None = None) -> MetricsReport:
    """Assemble the standard per-run metrics report."""
    checks: list[DecaySummary] = []
    for tau0 in tau0_values:
        checks.append(summarize_decay(consensus_decay(trace, tau0, report),
                                      "consensus_deviation"))
    # The gap metric needs the parallel distributed trajectory, so it only
    # applies to compare-mode traces.
    if trace.centralized is not None and trace.mode == "compare":
        for tau0 in tau0_values:
            checks.append(summarize_decay(centralized_gap(trace, tau0, report),
                                          "centralized_gap"))
    return MetricsReport(
        final_error_norms=tuple(float(e) for e in trace.error_norms[-1]),
        communication=communication_stats(trace),
        decay_checks=tuple(checks),
        normality=normality,
    )
