"""Per-agent trigger decisions and the broadcast/store protocol.

Within one synchronous step t the protocol is: (1) every agent compares
its current estimate against its own last broadcast, (2) agents whose
deviation strictly exceeds the decaying threshold broadcast, updating the
shared mailbox, (3) the estimator update then reads the post-broadcast
mailbox. This ordering makes the staleness bound
``||x_i(t) - stored_i(t)|| <= (t+1)**-rho_i`` hold deterministically at
every update.

A single global mailbox stands in for per-neighbor inboxes: with lossless
synchronous delivery they are equivalent. Entries for non-neighbors exist
but are never read by the estimator.
"""
from __future__ import annotations

import numpy as np

from .schedules import ScheduleParams, threshold

__all__ = ["AgentCommState", "Mailbox", "evaluate_trigger", "broadcast",
           "transmit_error"]


class AgentCommState:
    """Communication bookkeeping of one agent.

    ``trigger_times`` is append-only and strictly increasing; it includes
    the forced step-0 broadcast that initializes the stored copies.
    """

    __slots__ = ("agent", "last_broadcast", "last_trigger_time",
                 "trigger_count", "trigger_times")

    def __init__(self, agent: int, initial_estimate: np.ndarray):
        self.agent = agent
        self.last_broadcast = np.array(initial_estimate, dtype=float)
        self.last_trigger_time = 0
        self.trigger_count = 0
        self.trigger_times: list[int] = []


class Mailbox:
    """Latest broadcast value of every agent, as known network-wide.

    ``stored[j]`` is agent j's estimate at its most recent triggering
    instant not later than the current step.
    """

    __slots__ = ("stored",)

    def __init__(self, initial_estimates: np.ndarray):
        self.stored = np.array(initial_estimates, dtype=float)


def evaluate_trigger(state: AgentCommState, current_estimate: np.ndarray,
                     t: int, params: ScheduleParams) -> bool:
    """True iff the deviation from the last broadcast strictly exceeds
    the agent's threshold at step t (Euclidean norm)."""
    deviation = float(np.linalg.norm(current_estimate - state.last_broadcast))
    return deviation > threshold(params, state.agent, t)


def broadcast(state: AgentCommState, mailbox: Mailbox,
              current_estimate: np.ndarray, t: int) -> None:
    """Record a broadcast of ``current_estimate`` at step t.

    Updates the agent's own bookkeeping and the network-wide stored copy.
    Must be called at most once per (agent, step).
    """
    if state.trigger_times and t <= state.trigger_times[-1]:
        raise ValueError(
            f"agent {state.agent} already broadcast at step {state.trigger_times[-1]}")
    state.last_broadcast = np.array(current_estimate, dtype=float)
    state.last_trigger_time = t
    state.trigger_count += 1
    state.trigger_times.append(t)
    mailbox.stored[state.agent] = current_estimate


def transmit_error(mailbox: Mailbox, current_estimates: np.ndarray) -> float:
    """Norm of the gap between stored copies and current estimates,
    stacked over all agents."""
    return float(np.linalg.norm(mailbox.stored.ravel()
                                - np.asarray(current_estimates, float).ravel()))
