"""Undirected agent networks and their Laplacian spectral data.

The communication topology is a plain 0/1 adjacency matrix with no
self-loops. The second-smallest Laplacian eigenvalue (algebraic
connectivity) decides connectivity; everything downstream that needs a
connected network checks it through :func:`is_connected`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyNetworkError, GraphError, NonSymmetricError, SelfLoopError
from .linalg import jacobi_eigh

__all__ = ["Network", "SpectralData", "build_network", "spectral_data",
           "is_connected", "DEFAULT_CONNECTIVITY_TOL"]

# Relative tolerance deciding lambda2 > 0; surfaced so callers can tighten it.
DEFAULT_CONNECTIVITY_TOL = 1e-9


@dataclass(frozen=True)
class Network:
    """Validated undirected graph over the agents.

    Attributes:
        adjacency: (N, N) symmetric 0/1 matrix with zero diagonal.
        neighbor_lists: per-agent tuple of neighbor indices.
    """
    adjacency: np.ndarray
    neighbor_lists: tuple[tuple[int, ...], ...]

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)


@dataclass(frozen=True)
class SpectralData:
    """Laplacian spectral summary of a network.

    ``lambda2`` is reported as 0.0 with ``lambda2_defined=False`` for a
    single-node network, where a second eigenvalue does not exist.
    """
    laplacian: np.ndarray
    degree: np.ndarray
    eigenvalues: np.ndarray
    lambda2: float
    lambda2_defined: bool = True


def build_network(adjacency) -> Network:
    """Validate an adjacency matrix and derive neighbor lists.

    Raises:
        EmptyNetworkError: zero-size matrix.
        NonSymmetricError: non-square or asymmetric matrix.
        SelfLoopError: nonzero diagonal entry.
        GraphError: entries other than 0 and 1.
    """
    a = np.asarray(adjacency)
    if a.size == 0:
        raise EmptyNetworkError("network must have at least one agent")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSymmetricError(f"adjacency must be square, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise GraphError("adjacency entries must be 0 or 1")
    a = a.astype(int)
    if (a != a.T).any():
        raise NonSymmetricError("adjacency must be symmetric (undirected graph)")
    if np.diag(a).any():
        raise SelfLoopError("graph must have no self-loops (zero diagonal)")
    neighbors = tuple(tuple(int(j) for j in np.flatnonzero(row)) for row in a)
    return Network(adjacency=a, neighbor_lists=neighbors)


def spectral_data(net: Network) -> SpectralData:
    """Laplacian, degree matrix and full symmetric eigendecomposition."""
    degree = np.diag(net.degrees).astype(float)
    laplacian = degree - net.adjacency
    eigenvalues, _ = jacobi_eigh(laplacian)
    if net.n_agents >= 2:
        return SpectralData(laplacian, degree, eigenvalues,
                            lambda2=float(eigenvalues[1]))
    return SpectralData(laplacian, degree, eigenvalues,
                        lambda2=0.0, lambda2_defined=False)


def is_connected(net: Network, tol: float = DEFAULT_CONNECTIVITY_TOL) -> bool:
    """True iff the algebraic connectivity clears a relative tolerance.

    A single agent is not connected by convention, which keeps lambda2
    meaningful for every caller.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if net.n_agents < 2:
        return False
    spec = spectral_data(net)
    scale = max(1.0, float(spec.eigenvalues[-1]))
    return spec.lambda2 > tol * scale
