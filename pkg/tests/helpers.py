"""Shared test utilities: random configuration generation."""
import numpy as np

from etsim.config import SimConfig, config_from_dict


def random_connected_adjacency(rng, n_agents: int) -> np.ndarray:
    """Random undirected graph, forced connected via a spanning chain."""
    a = (rng.random((n_agents, n_agents)) < 0.4).astype(int)
    a = np.triu(a, 1)
    for i in range(n_agents - 1):
        a[i, i + 1] = 1
    return a + a.T


def random_config(rng, max_agents=6, max_params=4, horizon=500,
                  mode="event_triggered") -> SimConfig:
    """Random, moderately gained configuration that stays finite."""
    n_agents = int(rng.integers(2, max_agents + 1))
    n = int(rng.integers(1, max_params + 1))
    sensors = []
    for _ in range(n_agents):
        m_i = int(rng.integers(1, 3))
        h = rng.standard_normal((m_i, n))
        norms = np.linalg.norm(h, axis=1, keepdims=True)
        h = h / np.maximum(norms, 1.0)
        sensors.append(h.tolist())
    total = sum(len(h) for h in sensors)
    b = rng.standard_normal((total, total))
    noise_cov = (0.01 * (b @ b.T) / total + 0.002 * np.eye(total))
    return config_from_dict({
        "adjacency": random_connected_adjacency(rng, n_agents).tolist(),
        "theta": rng.uniform(-2, 2, size=n).tolist(),
        "sensors": sensors,
        "noise_cov": noise_cov.tolist(),
        "schedule": {
            "a": float(rng.uniform(0.05, 0.4)),
            "b": float(rng.uniform(0.05, 0.3)),
            "tau1": float(rng.uniform(0.65, 1.0)),
            "tau2": float(rng.uniform(0.3, 0.6)),
            "rho": [float(r) for r in rng.uniform(0.2, 0.9, size=n_agents)],
        },
        "initial_estimates": rng.uniform(-3, 3, size=(n_agents, n)).tolist(),
        "horizon": horizon,
        "seed": int(rng.integers(0, 2 ** 31)),
        "mode": mode,
    })
