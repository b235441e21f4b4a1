"""Per-run record of estimates, errors and trigger events.

A trace stores per-agent error norms and consensus deviations at every
step, estimate snapshots on a configurable stride (always including the
first and last step), the full trigger log, and optionally a parallel
centralized trajectory. All downstream metrics read only from traces.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["SimTrace"]


@dataclass
class SimTrace:
    config: "object"                 # SimConfig echo
    mode: str
    seed: int
    stream_id: tuple
    horizon: int
    theta: np.ndarray
    steps: np.ndarray                # steps at which estimates were stored
    estimates: np.ndarray            # (len(steps), N, n)
    error_norms: np.ndarray          # (T+1, N)
    consensus_dev: np.ndarray        # (T+1, N), ||x_i - x_avg||
    triggered: np.ndarray            # (T, N) bool, broadcast at step t
    trigger_times: tuple[tuple[int, ...], ...]
    forced_broadcasts: int
    centralized: np.ndarray | None = None        # (T+1, n)
    centralized_error: np.ndarray | None = None  # (T+1,)
    duration: float = 0.0
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n_agents(self) -> int:
        return self.error_norms.shape[1]

    @property
    def communication_count(self) -> int:
        """All broadcasts, including the forced initial ones."""
        return sum(len(t) for t in self.trigger_times)

    def step_index(self, t: int) -> int:
        """Index into ``estimates`` for step t; the step must be stored."""
        idx = int(np.searchsorted(self.steps, t))
        if idx >= len(self.steps) or self.steps[idx] != t:
            raise KeyError(f"step {t} was not stored (stride too coarse)")
        return idx

    def estimates_at(self, t: int) -> np.ndarray:
        return self.estimates[self.step_index(t)]

    def average_estimates(self) -> np.ndarray:
        """Across-agent mean estimate at every stored step, (len(steps), n)."""
        return self.estimates.mean(axis=1)

    def summary(self) -> dict:
        out = {
            "mode": self.mode,
            "seed": self.seed,
            "stream_id": list(self.stream_id),
            "horizon": self.horizon,
            "final_error_norms": self.error_norms[-1].tolist(),
            "final_consensus_deviation": float(self.consensus_dev[-1].max()),
            "communication_count": self.communication_count,
            "forced_broadcasts": self.forced_broadcasts,
            "duration_seconds": self.duration,
        }
        if self.centralized_error is not None:
            out["final_centralized_error"] = float(self.centralized_error[-1])
        return out

    def write_csv(self, path: str | Path) -> Path:
        """Long-form CSV: one row per stored (step, agent).

        Columns: step, agent, the estimate coordinates, error norm, and
        the triggered flag (0 for the final step, which has no trigger
        phase).
        """
        path = Path(path)
        n = self.estimates.shape[2]
        header = (["step", "agent"] + [f"estimate_{k}" for k in range(n)]
                  + ["error_norm", "triggered"])
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for idx, t in enumerate(self.steps):
                for i in range(self.n_agents):
                    flag = int(self.triggered[t, i]) if t < self.horizon else 0
                    writer.writerow([int(t), i,
                                     *np.asarray(self.estimates[idx, i]).tolist(),
                                     float(self.error_norms[t, i]), flag])
        return path
