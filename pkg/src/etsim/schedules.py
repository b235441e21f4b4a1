"""Decaying gain sequences and trigger thresholds, plus the validator for
the exponent relations the convergence results rest on.

Both gains are power-law decays: the innovation gain ``a/(t+1)**tau1`` and
the consensus gain ``b/(t+1)**tau2``. Each agent's broadcast threshold is
``(t+1)**-rho_i``. The validator evaluates every inequality strictly, with
no epsilon slack: a boundary case reports False together with an advisory
message.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError

__all__ = ["ScheduleParams", "ConditionReport", "alpha", "beta", "threshold",
           "validate"]

# Default noise-moment surplus: Gaussian noise has all moments, so any
# positive value is admissible; 18 makes the coupling term 1/(2+eps1) = 0.05.
DEFAULT_EPSILON1 = 18.0


@dataclass(frozen=True)
class ScheduleParams:
    """Gain coefficients/exponents and per-agent threshold exponents.

    ``rho`` holds one decay exponent per agent; a zero entry gives a
    constant threshold, useful as a diagnostic (the validator will flag
    that the decay-based guarantees then fail).
    """
    a: float
    b: float
    tau1: float
    tau2: float
    rho: tuple[float, ...]
    epsilon1: float = DEFAULT_EPSILON1

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise DomainError("gain coefficients a, b must be strictly positive")
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise DomainError("gain exponents tau1, tau2 must be strictly positive")
        if self.epsilon1 <= 0:
            raise DomainError("noise moment surplus epsilon1 must be positive")
        if not self.rho:
            raise DomainError("at least one threshold exponent is required")
        if min(self.rho) < 0:
            raise DomainError("threshold exponents must be nonnegative")
        object.__setattr__(self, "rho", tuple(float(r) for r in self.rho))

    @property
    def rho0(self) -> float:
        """Smallest threshold exponent across agents."""
        return min(self.rho)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of checking the exponent relations.

    Every flag is reproducible from the parameters by re-evaluating its
    defining inequality; ``messages`` carries human-readable findings.
    """
    assumption4_ok: bool
    unbiased_ok: bool
    bounded_ok: bool
    consensus_tau0_sup: float
    approx_tau0_sup: float
    sparse_trigger_ok: bool
    messages: tuple[str, ...] = field(default_factory=tuple)

    @property
    def all_ok(self) -> bool:
        return (self.assumption4_ok and self.unbiased_ok and self.bounded_ok
                and self.sparse_trigger_ok)

    def to_dict(self) -> dict:
        return {
            "assumption4_ok": self.assumption4_ok,
            "unbiased_ok": self.unbiased_ok,
            "bounded_ok": self.bounded_ok,
            "consensus_tau0_sup": self.consensus_tau0_sup,
            "approx_tau0_sup": self.approx_tau0_sup,
            "sparse_trigger_ok": self.sparse_trigger_ok,
            "messages": list(self.messages),
        }


def alpha(params: ScheduleParams, t: int) -> float:
    """Innovation gain at step t: a/(t+1)**tau1."""
    return params.a / (t + 1.0) ** params.tau1


def beta(params: ScheduleParams, t: int) -> float:
    """Consensus gain at step t: b/(t+1)**tau2."""
    return params.b / (t + 1.0) ** params.tau2


def threshold(params: ScheduleParams, agent: int, t: int) -> float:
    """Broadcast threshold of ``agent`` at step t: (t+1)**-rho_agent."""
    return (t + 1.0) ** -params.rho[agent]


def validate(params: ScheduleParams) -> ConditionReport:
    """Evaluate the design inequalities behind each guarantee.

    Pure report, never a failure: strict inequalities are evaluated
    strictly, and a violated condition only produces a False flag plus an
    advisory message.
    """
    t1, t2, r0 = params.tau1, params.tau2, params.rho0
    surplus = 1.0 / (2.0 + params.epsilon1)
    msgs: list[str] = []

    range_ok = 0.0 < t2 <= t1 <= 1.0
    gap_ok = t1 > max(t2 + surplus, 0.5)
    assumption4_ok = range_ok and gap_ok
    if not range_ok:
        msgs.append(f"gain exponents must satisfy 0 < tau2 <= tau1 <= 1 "
                    f"(got tau1={t1}, tau2={t2})")
    if not gap_ok:
        msgs.append(f"tau1={t1} must strictly exceed "
                    f"max(tau2 + 1/(2+eps1), 0.5) = {max(t2 + surplus, 0.5)}")

    unbiased_ok = r0 > t1 - t2
    if not unbiased_ok:
        msgs.append(f"bias removal needs rho0 > tau1 - tau2 "
                    f"({r0} <= {t1 - t2}); boundary counts as violated")

    bounded_ok = r0 > 0.5 - t2
    if not bounded_ok:
        msgs.append(f"almost-sure boundedness needs rho0 > 0.5 - tau2 "
                    f"({r0} <= {0.5 - t2})")

    consensus_sup = min(r0, t1 - t2 - surplus)
    approx_sup = min(t1 - t2 - surplus, r0 + t2 - t1)
    if consensus_sup <= 0:
        msgs.append("no positive consensus decay exponent is certified "
                    f"(supremum {consensus_sup})")
    if approx_sup <= 0:
        msgs.append("no positive centralized-approximation decay exponent is "
                    f"certified (supremum {approx_sup})")

    sparse_trigger_ok = r0 < t1 - surplus
    if not sparse_trigger_ok:
        msgs.append(f"growing triggering intervals need rho0 < tau1 - 1/(2+eps1) "
                    f"({r0} >= {t1 - surplus})")
    if params.rho0 == 0:
        msgs.append("a zero threshold exponent keeps the threshold constant; "
                    "decay-based guarantees do not apply")
    if t1 == 1.0:
        msgs.append("with tau1 = 1 the centralized-approximation rate also "
                    "requires a > N*tau0/lambda_min(G); not checked here")

    return ConditionReport(
        assumption4_ok=assumption4_ok,
        unbiased_ok=unbiased_ok,
        bounded_ok=bounded_ok,
        consensus_tau0_sup=float(consensus_sup),
        approx_tau0_sup=float(approx_sup),
        sparse_trigger_ok=sparse_trigger_ok,
        messages=tuple(msgs),
    )
