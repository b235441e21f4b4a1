"""Numerical counterparts of the convergence analysis: the spectral
condition on the combined gain matrix, the scalar comparison recursion,
and the asymptotic covariance of the centralized estimator.

The asymptotic covariance is produced twice, by deliberately different
routes: a dense Lyapunov solve (the production path) and trapezoid
quadrature of the defining matrix-exponential integral (the oracle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotHurwitzError
from .graph import Network, is_connected
from .linalg import expm_taylor, solve_lyapunov
from .schedules import ScheduleParams, alpha, beta
from .sensing import ObservationSystem, gramian

__all__ = ["SpectralCondition", "AsymptoticCovariance", "spectral_condition",
           "scalar_recursion", "asymptotic_covariance",
           "covariance_by_quadrature"]


@dataclass(frozen=True)
class SpectralCondition:
    """Certificate that the combined gain matrix
    ``beta(t) (L kron I_n) + alpha(t) D_H`` eventually has all eigenvalues
    strictly inside (0, 1).

    ``t_star`` is the first checked step where that holds (None if the
    scan horizon never qualifies). ``m0`` is the smallest value of
    ``lambda_min(combined(t)) / alpha(t)`` over the checked steps at or
    after ``t_star``: the scalar contraction margin per unit innovation
    gain.
    """
    t_star: int | None
    m0: float | None
    max_eig_at_t_star: float | None
    base_min_eig: float              # lambda_min(L kron I_n + D_H)
    base_positive_definite: bool
    checked_steps: np.ndarray
    violations_after_t_star: int = 0

    @property
    def found(self) -> bool:
        return self.t_star is not None

    def to_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "m0": self.m0,
            "max_eig_at_t_star": self.max_eig_at_t_star,
            "base_min_eig": self.base_min_eig,
            "base_positive_definite": self.base_positive_definite,
            "checked_steps": int(self.checked_steps.size),
            "violations_after_t_star": self.violations_after_t_star,
        }


@dataclass(frozen=True)
class AsymptoticCovariance:
    """Asymptotic covariance data of the centralized estimator with gain
    ``a_c/(t+1)``: drift ``sigma1 = -(a_c/N) G + I/2``, noise forcing
    ``s1``, and the solution ``s_c`` of
    ``sigma1 S + S sigma1^T + (a_c/N)^2 s1 = 0`` when the drift is
    Hurwitz (``s_c`` is None otherwise).
    """
    sigma1: np.ndarray
    s1: np.ndarray
    s_c: np.ndarray | None
    hurwitz: bool
    gain: float
    residual: float | None

    def to_dict(self) -> dict:
        return {
            "sigma1": self.sigma1.tolist(),
            "s1": self.s1.tolist(),
            "s_c": None if self.s_c is None else self.s_c.tolist(),
            "hurwitz": self.hurwitz,
            "gain": self.gain,
            "lyapunov_residual": self.residual,
        }


def combined_gain_matrix(net: Network, sys: ObservationSystem,
                         params: ScheduleParams, t: int) -> np.ndarray:
    """``beta(t) (L kron I_n) + alpha(t) D_H`` at one step."""
    lap_kron, dh = _scan_operators(net, sys)
    return beta(params, t) * lap_kron + alpha(params, t) * dh


def _scan_operators(net: Network, sys: ObservationSystem):
    n = sys.n_params
    adj = net.adjacency.astype(float)
    lap = np.diag(adj.sum(axis=1)) - adj
    lap_kron = np.kron(lap, np.eye(n))
    blocks = [h.T @ h for h in sys.sensors]
    dh = np.zeros_like(lap_kron)
    for i, blk in enumerate(blocks):
        dh[i * n:(i + 1) * n, i * n:(i + 1) * n] = blk
    return lap_kron, dh


def spectral_condition(net: Network, sys: ObservationSystem,
                       params: ScheduleParams, t_max: int = 10 ** 6,
                       dense_limit: int = 10 ** 4,
                       stride_factor: float = 1.25,
                       allow_disconnected: bool = False) -> SpectralCondition:
    """Scan steps for the first t with all combined-gain eigenvalues in
    (0, 1), then certify the later (strided) steps and extract m0.

    The scan is exhaustive up to ``dense_limit`` and geometric afterwards;
    since both gains only shrink with t, the max eigenvalue is
    nonincreasing, so a dense scan past the first qualifying step adds
    nothing but confirmation.
    """
    if not allow_disconnected and not is_connected(net):
        raise DomainError("network is not connected; pass "
                          "allow_disconnected=True to analyze anyway")
    if t_max < 0:
        raise DomainError("t_max must be nonnegative")

    lap_kron, dh = _scan_operators(net, sys)
    base = lap_kron + dh
    base_eigs = np.linalg.eigvalsh(base)
    base_min = float(base_eigs[0])
    base_pd = bool(base_min > 0.0)

    steps = list(range(0, min(dense_limit, t_max) + 1))
    t = max(steps[-1], 1) if steps else 1
    while t < t_max:
        t = min(int(math.ceil(t * stride_factor)), t_max)
        steps.append(t)
    grid = np.unique(np.asarray(steps, dtype=int))

    t_star = None
    m0 = None
    max_at_star = None
    violations = 0
    chunk = 2048
    for lo in range(0, grid.size, chunk):
        sub = grid[lo:lo + chunk]
        alphas = params.a / (sub + 1.0) ** params.tau1
        betas = params.b / (sub + 1.0) ** params.tau2
        mats = (betas[:, None, None] * lap_kron[None, :, :]
                + alphas[:, None, None] * dh[None, :, :])
        eigs = np.linalg.eigvalsh(mats)
        ok = (eigs[:, 0] > 0.0) & (eigs[:, -1] < 1.0)
        for k in range(sub.size):
            if not ok[k]:
                if t_star is not None:
                    violations += 1
                continue
            if t_star is None:
                t_star = int(sub[k])
                max_at_star = float(eigs[k, -1])
            ratio = float(eigs[k, 0] / alphas[k])
            m0 = ratio if m0 is None else min(m0, ratio)

    return SpectralCondition(t_star=t_star, m0=m0,
                             max_eig_at_t_star=max_at_star,
                             base_min_eig=base_min,
                             base_positive_definite=base_pd,
                             checked_steps=grid,
                             violations_after_t_star=violations)


def scalar_recursion(z0: float, a1: float, a2: float, delta1: float,
                     delta2: float, delta0: float, t_max: int,
                     _chunk: int = 1 << 15) -> np.ndarray:
    """Iterate ``z(t+1) = (1 - r1(t)) z(t) + r2(t)`` and return the scaled
    sequence ``(t+1)**delta0 * z(t)`` for t = 0..t_max.

    ``r1(t) = a1/(t+1)**delta1`` clamped to [0, 1] and
    ``r2(t) = a2/(t+1)**delta2``. Under the stated exponent relations the
    scaled sequence tends to zero.
    """
    if z0 < 0:
        raise DomainError("z0 must be nonnegative")
    if a1 <= 0 or a2 < 0:
        raise DomainError("need a1 > 0 and a2 >= 0")
    if not (0.0 <= delta1 <= 1.0):
        raise DomainError("delta1 must lie in [0, 1]")
    if delta2 < 0 or delta1 >= delta2:
        raise DomainError("need delta2 >= 0 and delta1 < delta2")
    if not (0.0 <= delta0 < delta2 - delta1):
        raise DomainError("delta0 must lie in [0, delta2 - delta1)")
    if delta1 == 1.0 and a1 <= delta0:
        raise DomainError("with delta1 = 1 the decay needs a1 > delta0")
    if t_max < 0:
        raise DomainError("t_max must be nonnegative")

    out = np.empty(t_max + 1)
    out[0] = z = float(z0)
    pos = 1
    for lo in range(0, t_max, _chunk):
        hi = min(lo + _chunk, t_max)
        s = np.arange(lo, hi, dtype=float) + 1.0
        r1 = np.clip(a1 * s ** -delta1, 0.0, 1.0)
        r2 = a2 * s ** -delta2
        f = 1.0 - r1
        for k in range(hi - lo):
            z = f[k] * z + r2[k]
            out[pos] = z
            pos += 1
    if delta0 != 0.0:
        out *= (np.arange(t_max + 1, dtype=float) + 1.0) ** delta0
    return out


def asymptotic_covariance(sys: ObservationSystem,
                          a_c: float) -> AsymptoticCovariance:
    """Drift/forcing pair and the Lyapunov-equation covariance of the
    scaled centralized error.

    If the drift is not Hurwitz (gain too small for the Gramian, or a
    rank-deficient Gramian), the report carries ``hurwitz=False`` and no
    covariance.
    """
    if a_c <= 0:
        raise DomainError("a_c must be positive")
    n_agents = sys.n_agents
    g = gramian(sys).matrix
    sigma1 = -(a_c / n_agents) * g + 0.5 * np.eye(sys.n_params)
    s1 = sys.stacked.T @ sys.noise_cov @ sys.stacked
    eigs = np.linalg.eigvalsh(sigma1)
    hurwitz = bool(eigs[-1] < 0.0)
    if not hurwitz:
        return AsymptoticCovariance(sigma1=sigma1, s1=s1, s_c=None,
                                    hurwitz=False, gain=a_c, residual=None)
    forcing = (a_c / n_agents) ** 2 * s1
    s_c = solve_lyapunov(sigma1, forcing)
    residual = float(np.linalg.norm(sigma1 @ s_c + s_c @ sigma1.T + forcing))
    return AsymptoticCovariance(sigma1=sigma1, s1=s1, s_c=s_c, hurwitz=True,
                                gain=a_c, residual=residual)


def covariance_by_quadrature(sys: ObservationSystem, a_c: float,
                             step: float = 1e-3,
                             integrand_floor: float = 1e-14) -> np.ndarray:
    """Oracle route for the asymptotic covariance: trapezoid quadrature of
    ``(a_c/N)^2 * integral of exp(sigma1 v) s1 exp(sigma1^T v) dv``.

    The horizon is chosen so the integrand norm falls below
    ``integrand_floor``; the exponential steps come from the in-house
    scaling-and-squaring routine, keeping this path independent of the
    Lyapunov solve.
    """
    n_agents = sys.n_agents
    g = gramian(sys).matrix
    sigma1 = -(a_c / n_agents) * g + 0.5 * np.eye(sys.n_params)
    s1 = sys.stacked.T @ sys.noise_cov @ sys.stacked
    lam_max = float(np.linalg.eigvalsh(sigma1)[-1])
    if lam_max >= 0.0:
        raise NotHurwitzError(
            f"drift has eigenvalue {lam_max:.6g} >= 0; no finite covariance")
    s1_norm = float(np.linalg.norm(s1))
    if s1_norm == 0.0:
        return np.zeros_like(s1)
    horizon = math.log(s1_norm / integrand_floor) / (2.0 * abs(lam_max))
    n_steps = int(math.ceil(horizon / step))
    exp_step = expm_taylor(sigma1 * step)
    factor = np.eye(sys.n_params)
    total = 0.5 * s1                      # trapezoid endpoint at v = 0
    for k in range(1, n_steps + 1):
        factor = factor @ exp_step
        term = factor @ s1 @ factor.T
        total += 0.5 * term if k == n_steps else term
    return (a_c / n_agents) ** 2 * step * total
