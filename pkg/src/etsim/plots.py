"""Figure rendering for traces and study results.

Everything renders through the Agg backend straight to files; the CLI
report path drops these next to the delimited output.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend pinned first)
import numpy as np  # noqa: E402

from .metrics import BiasStudy, NormalityStudy, communication_stats  # noqa: E402
from .trace import SimTrace  # noqa: E402

__all__ = ["render_trace_figures", "render_bias_figure",
           "render_normality_figure", "render_sweep_figure"]


def _thin(arr: np.ndarray, limit: int = 4000) -> np.ndarray:
    if arr.shape[0] <= limit:
        return np.arange(arr.shape[0])
    return np.linspace(0, arr.shape[0] - 1, limit).astype(int)


def render_trace_figures(trace: SimTrace, outdir: str | Path,
                         prefix: str = "fig") -> list[Path]:
    """Write the three standard figures for one run: average estimate
    trajectories, per-agent error norms, and the trigger raster."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []

    # Average estimates per coordinate, with true values and the
    # centralized trajectory when present.
    avg = trace.average_estimates()
    sel = _thin(avg)
    steps = trace.steps[sel]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for k in range(avg.shape[1]):
        c = colors[k % len(colors)]
        ax.plot(steps + 1, avg[sel, k], color=c,
                label=f"agents avg, coord {k}")
        ax.axhline(trace.theta[k], color=c, linestyle=":", linewidth=1)
        if trace.centralized is not None:
            full = np.arange(trace.centralized.shape[0])
            csel = _thin(trace.centralized)
            ax.plot(full[csel] + 1, trace.centralized[csel, k], color=c,
                    linestyle="--", label=f"centralized, coord {k}")
    ax.set_xscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("estimate")
    ax.set_title("Parameter estimates")
    ax.legend(fontsize=8)
    p = outdir / f"{prefix}_estimates.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)

    # Per-agent error norms (log-log).
    fig, ax = plt.subplots(figsize=(7, 4.5))
    t_all = np.arange(trace.horizon + 1)
    sel = _thin(trace.error_norms)
    for i in range(trace.n_agents):
        ax.loglog(t_all[sel] + 1, np.maximum(trace.error_norms[sel, i], 1e-16),
                  label=f"agent {i}")
    if trace.centralized_error is not None:
        ax.loglog(t_all[sel] + 1,
                  np.maximum(trace.centralized_error[sel], 1e-16),
                  "k--", label="centralized")
    ax.set_xlabel("step")
    ax.set_ylabel("error norm")
    ax.set_title("Estimation error")
    ax.legend(fontsize=8)
    p = outdir / f"{prefix}_errors.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)

    # Trigger raster.
    fig, ax = plt.subplots(figsize=(7, 3.5))
    events = [np.asarray(t) + 1 for t in trace.trigger_times]
    if any(e.size for e in events):
        ax.eventplot(events, lineoffsets=np.arange(trace.n_agents),
                     linelengths=0.8, colors="tab:blue")
    stats = communication_stats(trace)
    ax.set_xscale("log")
    ax.set_yticks(np.arange(trace.n_agents))
    ax.set_xlabel("step")
    ax.set_ylabel("agent")
    ax.set_title(f"Triggering instants "
                 f"(communication rate {stats.communication_rate:.3%})")
    p = outdir / f"{prefix}_triggers.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)
    return paths


def render_bias_figure(study: BiasStudy, outdir: str | Path,
                       prefix: str = "fig") -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for i in range(study.mean_error_norms.shape[1]):
        ax.loglog(study.checkpoints + 1,
                  np.maximum(study.mean_error_norms[:, i], 1e-16),
                  marker="o", label=f"agent {i}")
    ax.set_xlabel("step")
    ax.set_ylabel("|| mean error over runs ||")
    ax.set_title(f"Bias decay over {study.n_runs} runs")
    ax.legend(fontsize=8)
    p = outdir / f"{prefix}_bias.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return p


def render_normality_figure(study: NormalityStudy, scaled_errors: np.ndarray,
                            outdir: str | Path, prefix: str = "fig") -> Path:
    """Scatter of the scaled final errors with the 2-sigma ellipses of the
    sample and predicted covariances (2-parameter systems only)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    if scaled_errors.shape[1] == 2:
        ax.scatter(scaled_errors[:, 0], scaled_errors[:, 1], s=6, alpha=0.4)
        angles = np.linspace(0, 2 * np.pi, 200)
        circle = np.stack([np.cos(angles), np.sin(angles)])
        for cov, style, label in ((study.sample_cov, "-", "sample 2-sigma"),
                                  (study.predicted_cov, "--", "predicted 2-sigma")):
            w, v = np.linalg.eigh(cov)
            ell = v @ (2.0 * np.sqrt(np.maximum(w, 0))[:, None] * circle)
            ax.plot(ell[0], ell[1], style, label=label)
        ax.legend(fontsize=8)
        ax.set_xlabel("scaled error, coord 0")
        ax.set_ylabel("scaled error, coord 1")
    else:
        ax.hist(scaled_errors[:, 0], bins=40)
        ax.set_xlabel("scaled error")
    ax.set_title(f"Scaled centralized error at t={study.t_eval} "
                 f"(rel cov error {study.rel_error:.3f})")
    p = outdir / f"{prefix}_normality.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return p


def render_sweep_figure(rows: list[dict], outdir: str | Path,
                        prefix: str = "fig") -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rho = [r["rho"] for r in rows]
    rate = [r["communication_rate"] for r in rows]
    err = [r["mean_final_error"] for r in rows]
    fig, ax1 = plt.subplots(figsize=(6.5, 4.5))
    ax1.plot(rho, rate, "o-", color="tab:blue", label="communication rate")
    ax1.set_xlabel("threshold decay exponent rho")
    ax1.set_ylabel("communication rate", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(rho, err, "s--", color="tab:red", label="mean final error")
    ax2.set_ylabel("mean final error norm", color="tab:red")
    ax1.set_title("Trigger threshold trade-off")
    p = outdir / f"{prefix}_sweep.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return p
