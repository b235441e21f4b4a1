"""Observation model: true parameter, per-agent measurement matrices, and
the joint noise model.

Each agent i observes ``y_i(t) = H_i @ theta + v_i(t)`` with zero-mean,
temporally independent noise. The joint covariance over the stacked noise
vector may be spatially correlated and may be singular (noise-free
channels). The true parameter lives here and in the metrics only; the
estimators never read it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CholeskyError, DimensionMismatchError

__all__ = ["ObservationSystem", "Gramian", "build_observation_system",
           "sample_measurements", "split_measurements", "gramian"]

# Eigenvalues of the noise covariance in [-PSD_CLAMP, 0] are treated as 0.
PSD_CLAMP = 1e-10

NoiseSampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class ObservationSystem:
    """Immutable observation model shared by all estimator variants.

    Attributes:
        theta: (n,) true parameter.
        sensors: per-agent measurement matrices, each (m_i, n).
        noise_cov: (M, M) joint noise covariance, M = sum of m_i.
        noise_chol: factor F with F @ F.T == noise_cov. Lower-triangular
            Cholesky when the covariance is positive definite; an
            eigenvalue-based square root when it is singular.
        stacked: (M, n) vertically stacked sensors.
        slices: per-agent row slices into the stacked measurement vector.
    """
    theta: np.ndarray
    sensors: tuple[np.ndarray, ...]
    noise_cov: np.ndarray
    noise_chol: np.ndarray
    stacked: np.ndarray
    slices: tuple[slice, ...]

    @property
    def n_agents(self) -> int:
        return len(self.sensors)

    @property
    def n_params(self) -> int:
        return self.theta.shape[0]

    @property
    def total_dim(self) -> int:
        return self.stacked.shape[0]

    def noise_block(self, i: int, j: int) -> np.ndarray:
        """View of the (i, j) cross-covariance block of the joint noise."""
        return self.noise_cov[self.slices[i], self.slices[j]]


@dataclass(frozen=True)
class Gramian:
    """Collective-observability Gramian ``G = sum_i H_i^T H_i``."""
    matrix: np.ndarray
    min_eigenvalue: float
    full_rank: bool


def build_observation_system(theta, sensors, noise_cov) -> ObservationSystem:
    """Validate and assemble an :class:`ObservationSystem`.

    Raises:
        DimensionMismatchError: inconsistent sensor/parameter/noise shapes.
        CholeskyError: noise covariance asymmetric or indefinite beyond
            the PSD clamp tolerance.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    n = theta.shape[0]
    mats = []
    for i, h in enumerate(sensors):
        h = np.atleast_2d(np.asarray(h, dtype=float))
        if h.shape[1] != n:
            raise DimensionMismatchError(
                f"sensor {i} has {h.shape[1]} columns, parameter has length {n}")
        mats.append(h)
    if not mats:
        raise DimensionMismatchError("at least one sensor is required")
    stacked = np.vstack(mats)
    total = stacked.shape[0]

    r = np.asarray(noise_cov, dtype=float)
    if r.shape != (total, total):
        raise DimensionMismatchError(
            f"noise covariance is {r.shape}, expected ({total}, {total})")
    if not np.allclose(r, r.T, atol=PSD_CLAMP):
        raise CholeskyError("noise covariance must be symmetric")
    r = 0.5 * (r + r.T)
    factor = _psd_factor(r)

    bounds = np.cumsum([0] + [m.shape[0] for m in mats])
    slices = tuple(slice(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]))
    return ObservationSystem(theta=theta, sensors=tuple(mats), noise_cov=r,
                             noise_chol=factor, stacked=stacked, slices=slices)


def _psd_factor(r: np.ndarray) -> np.ndarray:
    """Factor F with F F^T = r, clamping eigenvalues in [-PSD_CLAMP, 0] to 0."""
    w, q = np.linalg.eigh(r)
    scale = max(1.0, float(w[-1]))
    if w[0] < -PSD_CLAMP * scale:
        raise CholeskyError(
            f"noise covariance has eigenvalue {w[0]:.3e}, not PSD within tolerance")
    if w[0] > PSD_CLAMP * scale:
        return np.linalg.cholesky(r)
    return q * np.sqrt(np.clip(w, 0.0, None))


def sample_measurements(sys: ObservationSystem, rng: np.random.Generator,
                        noise_sampler: NoiseSampler | None = None) -> np.ndarray:
    """Draw one stacked measurement vector.

    The default noise is Gaussian; a custom ``noise_sampler(rng, M)``
    returning M standardized i.i.d. draws can replace it (the joint
    covariance is imposed by the stored factor either way). Successive
    calls are temporally independent.
    """
    m = sys.total_dim
    z = rng.standard_normal(m) if noise_sampler is None else noise_sampler(rng, m)
    return sys.stacked @ sys.theta + sys.noise_chol @ z


def split_measurements(sys: ObservationSystem, stacked_y: np.ndarray) -> list[np.ndarray]:
    """Per-agent views of a stacked measurement vector."""
    return [stacked_y[s] for s in sys.slices]


def gramian(sys: ObservationSystem, tol: float = 1e-9) -> Gramian:
    """Collective observability Gramian with an eigenvalue rank decision."""
    g = np.zeros((sys.n_params, sys.n_params))
    for h in sys.sensors:
        g += h.T @ h
    w = np.linalg.eigvalsh(g)
    return Gramian(matrix=g, min_eigenvalue=float(w[0]),
                   full_rank=bool(w[0] > tol * w[-1]))
