"""Spectral condition scan, scalar recursion, asymptotic covariance."""
import numpy as np
import pytest

from etsim import (asymptotic_covariance, build_network,
                   build_observation_system, covariance_by_quadrature,
                   scalar_recursion, spectral_condition)
from etsim.errors import DomainError, NotHurwitzError
from etsim.linalg import jacobi_eigvalsh
from etsim.schedules import ScheduleParams

THETA = np.array([-1.0, 2.0])
SENSORS = ([[1.0, 0.0]], [[0.0, 1.0]], [[1.0, 1.0]], [[1.0, 2.0]])
FOUR_CYCLE = [[0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0]]
PARAMS = ScheduleParams(a=1.0, b=1.0, tau1=0.7, tau2=0.5, rho=(0.6,) * 4)


def reference_parts(variance=0.01):
    net = build_network(FOUR_CYCLE)
    sys_ = build_observation_system(THETA, SENSORS, variance * np.eye(4))
    return net, sys_


# ---------------------------------------------------------------------------
# Spectral condition
# ---------------------------------------------------------------------------

def test_reference_base_matrix_positive_definite():
    net, sys_ = reference_parts()
    sc = spectral_condition(net, sys_, PARAMS, t_max=10 ** 4)
    assert sc.base_positive_definite
    assert sc.base_min_eig > 0
    # Cross-check with the in-house Jacobi route on the same 8x8 matrix.
    from etsim.asymptotics import _scan_operators
    lap_kron, dh = _scan_operators(net, sys_)
    jac_min = jacobi_eigvalsh(lap_kron + dh)[0]
    assert sc.base_min_eig == pytest.approx(jac_min, abs=1e-9)


def test_reference_scan_finds_t_star():
    net, sys_ = reference_parts()
    sc = spectral_condition(net, sys_, PARAMS, t_max=10 ** 5)
    assert sc.found
    assert 0 < sc.t_star < 100
    assert 0.0 < sc.max_eig_at_t_star < 1.0
    assert sc.violations_after_t_star == 0
    assert sc.m0 > 0
    # Scalar realization of the lower bound: lambda_min(M(t)) >= m0 alpha(t)
    # at sampled grid points.
    from etsim.asymptotics import combined_gain_matrix
    from etsim.schedules import alpha
    for t in (sc.t_star, sc.t_star + 7, 500, 10 ** 4):
        m = combined_gain_matrix(net, sys_, PARAMS, t)
        assert np.linalg.eigvalsh(m)[0] >= sc.m0 * alpha(PARAMS, t) - 1e-12


def test_tiny_gains_qualify_immediately():
    net, sys_ = reference_parts()
    tiny = ScheduleParams(a=1e-3, b=1e-3, tau1=0.7, tau2=0.5, rho=(0.6,) * 4)
    sc = spectral_condition(net, sys_, tiny, t_max=100)
    assert sc.t_star == 0


def test_zero_sensors_disconnected_base_matrix():
    net = build_network([[0, 0], [0, 0]])
    sys_ = build_observation_system(np.zeros(2),
                                    [np.zeros((1, 2)), np.zeros((1, 2))],
                                    np.zeros((2, 2)))
    sc = spectral_condition(net, sys_, PARAMS, t_max=50,
                            allow_disconnected=True)
    assert not sc.base_positive_definite
    assert sc.base_min_eig == 0.0
    assert not sc.found


def test_disconnected_without_override_rejected():
    net = build_network([[0, 0], [0, 0]])
    sys_ = build_observation_system(np.zeros(2),
                                    [np.eye(2), np.eye(2)], np.zeros((4, 4)))
    with pytest.raises(DomainError):
        spectral_condition(net, sys_, PARAMS, t_max=10)


# ---------------------------------------------------------------------------
# Scalar recursion
# ---------------------------------------------------------------------------

def test_scalar_recursion_zero_forcing_zero_start():
    seq = scalar_recursion(0.0, 1.0, 0.0, 0.5, 1.0, 0.3, 500)
    assert np.array_equal(seq, np.zeros(501))


def test_scalar_recursion_unit_rate_closed_form():
    # With delta1=0 and a1=1, r1 is identically 1, so z(t+1) = r2(t).
    a2, d2, d0 = 0.7, 1.2, 0.25
    t_max = 300
    seq = scalar_recursion(5.0, 1.0, a2, 0.0, d2, d0, t_max)
    assert seq[0] == 5.0
    t = np.arange(t_max)
    expected = (t + 2.0) ** d0 * (a2 / (t + 1.0) ** d2)
    np.testing.assert_allclose(seq[1:], expected, rtol=1e-12)


def test_scalar_recursion_matches_naive_loop():
    rng = np.random.default_rng(8)
    for _ in range(10):
        d1 = rng.uniform(0, 0.9)
        d0 = rng.uniform(0, 0.2)
        d2 = d1 + d0 + rng.uniform(0.1, 1.0)
        a1, a2, z0 = rng.uniform(0.1, 3), rng.uniform(0, 2), rng.uniform(0, 5)
        t_max = 2000
        seq = scalar_recursion(z0, a1, a2, d1, d2, d0, t_max)
        z = z0
        naive = [z0]
        for t in range(t_max):
            r1 = min(1.0, max(0.0, a1 / (t + 1.0) ** d1))
            r2 = a2 / (t + 1.0) ** d2
            z = (1.0 - r1) * z + r2
            naive.append(z)
        naive = np.asarray(naive) * (np.arange(t_max + 1) + 1.0) ** d0
        np.testing.assert_allclose(seq, naive, rtol=1e-9, atol=1e-300)


def test_scalar_recursion_domain_errors():
    good = dict(z0=1.0, a1=1.0, a2=1.0, delta1=0.5, delta2=1.0, delta0=0.2,
                t_max=10)
    for bad in (dict(z0=-1.0), dict(a1=0.0), dict(a2=-0.1), dict(delta1=1.5),
                dict(delta1=1.0, delta2=1.2, a1=0.1, delta0=0.15),
                dict(delta2=0.4), dict(delta0=0.6), dict(t_max=-1)):
        kwargs = {**good, **bad}
        with pytest.raises(DomainError):
            scalar_recursion(**kwargs)


def test_scalar_recursion_delta1_one_decays():
    # delta1 = 1 with a1 > delta0 still drives the scaled sequence down.
    seq = scalar_recursion(3.0, 2.0, 1.0, 1.0, 2.2, 0.5, 100_000)
    assert seq[100_000] < 1e-2 * seq[100]


def test_scalar_recursion_tail_monotone(expectations):
    spec = expectations["scalar_recursion"]
    rng = np.random.default_rng(31337)
    t_max = 10 ** 5
    tail = np.arange(2 * 10 ** 4, t_max + 1, 500)
    for _ in range(50):
        d1 = rng.uniform(0.0, 0.7)
        d0 = rng.uniform(0.0, 0.3)
        d2 = d1 + d0 + rng.uniform(spec["min_exponent_margin"], 1.5)
        seq = scalar_recursion(rng.uniform(0, 10), rng.uniform(0.2, 5),
                               rng.uniform(0.1, 3), d1, d2, d0, t_max)
        values = seq[tail]
        assert (np.diff(values) <= 1e-12 * values[:-1] + 1e-300).all()
        assert values[-1] < values[0]


# ---------------------------------------------------------------------------
# Asymptotic covariance
# ---------------------------------------------------------------------------

def test_scalar_closed_form():
    # One-dimensional parameter: S_c = (a_c^2 s / N^2) / (2 (a_c g / N - 1/2)).
    sensors = [[[2.0]], [[1.0]], [[0.5]]]
    r = np.diag([0.02, 0.03, 0.05])
    sys_ = build_observation_system(np.array([1.5]), sensors, r)
    g = 4.0 + 1.0 + 0.25
    s1 = 4.0 * 0.02 + 1.0 * 0.03 + 0.25 * 0.05
    a_c = 1.0
    cov = asymptotic_covariance(sys_, a_c)
    assert cov.hurwitz
    expected = (a_c ** 2 * s1 / 9.0) / (2.0 * (a_c * g / 3.0 - 0.5))
    assert cov.s_c[0, 0] == pytest.approx(expected, rel=1e-12)
    assert cov.s1[0, 0] == pytest.approx(s1, rel=1e-12)


def test_zero_noise_zero_covariance():
    _, sys_ = reference_parts(variance=0.0)
    cov = asymptotic_covariance(sys_, 2.0)
    assert cov.hurwitz
    assert np.array_equal(cov.s_c, np.zeros((2, 2)))
    assert np.array_equal(covariance_by_quadrature(sys_, 2.0),
                          np.zeros((2, 2)))


def test_small_gain_not_hurwitz():
    _, sys_ = reference_parts()
    cov = asymptotic_covariance(sys_, 1.0)
    assert not cov.hurwitz
    assert cov.s_c is None
    # lambda_max(sigma1) = 1/2 - lambda_min(G)/4 > 0 for a_c = 1.
    lam = np.linalg.eigvalsh(cov.sigma1)[-1]
    assert lam == pytest.approx(0.5 - (9 - np.sqrt(45)) / 8, abs=1e-12)
    with pytest.raises(NotHurwitzError):
        covariance_by_quadrature(sys_, 1.0)


def test_reference_covariance_closed_form():
    # With S1 = sigma^2 G and sigma1 = -(a_c/N) G + I/2 sharing eigenvectors,
    # the solution is S_c = (a_c^2 sigma^2 / N^2) G (2((a_c/N) G - I/2))^-1.
    _, sys_ = reference_parts(variance=0.01)
    a_c, n_agents = 2.0, 4
    g = np.array([[3.0, 3.0], [3.0, 6.0]])
    hand = (a_c ** 2 * 0.01 / n_agents ** 2) * g @ np.linalg.inv(
        2.0 * ((a_c / n_agents) * g - 0.5 * np.eye(2)))
    cov = asymptotic_covariance(sys_, a_c)
    np.testing.assert_allclose(cov.s_c, hand, rtol=1e-12)
    assert cov.residual < 1e-10


def test_quadrature_oracle_agrees_with_lyapunov():
    _, sys_ = reference_parts(variance=0.01)
    cov = asymptotic_covariance(sys_, 2.0)
    oracle = covariance_by_quadrature(sys_, 2.0)
    assert np.linalg.norm(cov.s_c - oracle) < 1e-6


def test_random_systems_covariance_properties():
    rng = np.random.default_rng(55)
    for _ in range(8):
        n = int(rng.integers(1, 5))
        n_agents = int(rng.integers(2, 5))
        sensors = [rng.standard_normal((n, n)) for _ in range(n_agents)]
        total = n * n_agents
        b = rng.standard_normal((total, total))
        cov_in = 0.05 * (b @ b.T) / total + 0.01 * np.eye(total)
        sys_ = build_observation_system(rng.standard_normal(n), sensors,
                                        cov_in)
        g_min = np.linalg.eigvalsh(sum(h.T @ h for h in sensors))[0]
        a_c = 1.5 * n_agents / (2.0 * g_min)
        cov = asymptotic_covariance(sys_, a_c)
        assert cov.hurwitz
        assert cov.residual < 1e-10
        np.testing.assert_allclose(cov.s_c, cov.s_c.T, atol=1e-12)
        assert np.linalg.eigvalsh(cov.s_c)[0] > -1e-10
        oracle = covariance_by_quadrature(sys_, a_c, step=5e-4)
        assert (np.linalg.norm(cov.s_c - oracle)
                <= 1e-5 * max(1.0, np.linalg.norm(cov.s_c)))
