import math

import numpy as np
import pytest
import scipy.linalg as sla

from fnlmagic import core, lattice, quench as Q

INF_TO_CRIT = Q.QuenchParams(math.inf, 1.0)
TWO_TO_CRIT = Q.QuenchParams(2.0, 1.0)


def test_params_validation():
    with pytest.raises(ValueError):
        Q.QuenchParams(1.0, math.inf)
    with pytest.raises(ValueError):
        Q.QuenchParams(-math.inf, 1.0)
    with pytest.raises(ValueError):
        Q.QuenchParams(2.0, 1.0, times=(2.0, 1.0))
    assert INF_TO_CRIT.polarized_start


def test_delta_theta():
    k = np.linspace(-math.pi, math.pi, 401)
    c, s = Q.delta_theta(k, Q.QuenchParams(0.7, 0.7))
    assert np.allclose(c, 1.0) and np.allclose(s, 0.0)
    c, s = Q.delta_theta(k, INF_TO_CRIT)
    assert np.allclose(s**2, np.cos(k / 2) ** 2, atol=1e-12)
    c6, _ = Q.delta_theta(k, Q.QuenchParams(1e6, 1.0))
    assert np.allclose(c6**2, c**2, atol=1e-5)
    c, _ = Q.delta_theta(k, Q.QuenchParams(0.3, 2.5))
    assert np.all(np.abs(c) <= 1.0)


def test_time_symbol_at_zero_and_without_quench():
    k = np.linspace(-3, 3, 13)
    assert np.allclose(Q.time_symbol(k, 0.0, TWO_TO_CRIT), lattice.static_symbol(k, 2.0), atol=1e-14)
    same = Q.QuenchParams(1.5, 1.5)
    assert np.allclose(Q.time_symbol(k, 0.0, same), Q.time_symbol(k, 7.3, same), atol=1e-14)
    _, q = Q.symbol_pq(k, 1.7, TWO_TO_CRIT)
    _, s = Q.delta_theta(k, TWO_TO_CRIT)
    assert np.allclose(q.real, 0.0)
    assert np.allclose(q.imag, s * np.sin(2 * lattice.dispersion(k, 1.0) * 1.7))


def test_block_matches_real_space_evolution():
    # ring of N sites evolved by expm(t A / 2); the light cone stays far from the wrap-around
    n, ell, t = 64, 8, 3.0
    for qp, g0 in ((INF_TO_CRIT, core.vacuum_covariance(n).gamma),
                   (TWO_TO_CRIT, lattice.finite_chain_covariance(n, 2.0).gamma)):
        r = sla.expm(t * lattice.single_body_matrix(n, qp.mu) / 2)
        gt = r @ g0 @ r.T
        ref = 1j * gt[: 2 * ell, : 2 * ell]
        assert np.allclose(Q.evolved_block_toeplitz(ell, t, qp), ref, atol=1e-8)


def test_t0_spectrum_is_static_and_no_quench_is_constant():
    lam0 = core.hermitian_mode_spectrum(Q.evolved_block_toeplitz(10, 0.0, TWO_TO_CRIT))
    ref = core.mode_spectrum(lattice.ground_state_block_toeplitz(10, 2.0))
    assert np.allclose(np.sort(lam0), np.sort(ref), atol=1e-9)
    assert Q.exact_fnl(10, 0.0, INF_TO_CRIT) == pytest.approx(0.0, abs=1e-12)
    same = Q.QuenchParams(1.5, 1.5)
    vals = Q.exact_fnl_series(10, [0.0, 3.0, 11.0], same)
    assert np.ptp(vals) < 1e-8


def test_evolved_block_validation():
    with pytest.raises(ValueError):
        Q.evolved_block_toeplitz(0, 1.0, INF_TO_CRIT)
    with pytest.raises(ValueError):
        Q.evolved_block_toeplitz(4, -1.0, INF_TO_CRIT)


def test_group_velocity():
    k = np.linspace(0.01, math.pi - 0.01, 200)
    assert np.allclose(Q.group_velocity(k, 1.0), np.cos(k / 2), atol=1e-12)
    assert Q.max_velocity(1.0) == pytest.approx(1.0, abs=1e-6)
    assert float(Q.group_velocity(0.0, 2.0)) == 0.0
    h = 1e-6
    fd = (lattice.dispersion(k + h, 2.0) - lattice.dispersion(k - h, 2.0)) / (2 * h)
    assert np.allclose(Q.group_velocity(k, 2.0), fd, atol=1e-8)
    assert np.all(np.abs(Q.group_velocity(k, 0.4)) <= Q.max_velocity(0.4) + 1e-9)
    assert Q.light_cone_time(100, 1.0) == pytest.approx(50.0, rel=1e-6)


def test_stationary_values_and_symmetry():
    assert Q.stationary_fnl(40, Q.QuenchParams(0.8, 0.8)) == pytest.approx(0.0, abs=1e-14)
    for mu0, mu in ((0.3, 2.0), (1.5, 0.6), (4.0, 1.0)):
        a = Q.stationary_fnl(50, Q.QuenchParams(mu0, mu))
        b = Q.stationary_fnl(50, Q.QuenchParams(mu, mu0))
        assert a == pytest.approx(b, abs=1e-10)


def test_quasiparticle_limits_and_shape():
    assert Q.quasiparticle_fnl(40, 0.0, INF_TO_CRIT) == 0.0
    assert Q.quasiparticle_entropy(40, 0.0, INF_TO_CRIT) == 0.0
    assert Q.quasiparticle_fnl(40, 1e7, INF_TO_CRIT) == pytest.approx(Q.stationary_fnl(40, INF_TO_CRIT), rel=1e-9)
    assert Q.quasiparticle_entropy(40, 1e7, INF_TO_CRIT) == pytest.approx(
        Q.stationary_entropy(40, INF_TO_CRIT), rel=1e-9)
    ts = np.linspace(0, 60, 61)
    for qp in (INF_TO_CRIT, TWO_TO_CRIT):
        v = np.array([Q.quasiparticle_fnl(40, t, qp) for t in ts])
        assert np.all(np.diff(v) >= -1e-12)
        assert np.all(np.diff(v, 2) <= 1e-9)


def test_quasiparticle_small_t_slope():
    slope = 2 / math.pi * Q._half_zone_integral(
        lambda k: np.abs(Q.group_velocity(k, 1.0)) * Q.mode_weight(k, INF_TO_CRIT))
    assert Q.quasiparticle_fnl(100, 1.0, INF_TO_CRIT) == pytest.approx(slope, rel=1e-9)


def test_stabilizer_like_modes_carry_entropy_not_magic():
    # at k = 0 the mu0 = inf -> 1 quench has sin^2 D = 1
    k = np.array([1e-9])
    assert Q.mode_weight(k, INF_TO_CRIT)[0] == pytest.approx(0.0, abs=1e-12)
    assert Q.mode_entropy(k, INF_TO_CRIT)[0] == pytest.approx(1.0, abs=1e-12)


def test_exact_bounded_by_max_weight():
    bound = 40 * float(core.weight(2, 0.5))
    for t in (1.0, 7.0, 25.0, 80.0):
        assert 0 <= Q.exact_fnl(40, t, INF_TO_CRIT) <= bound


def test_exact_linear_at_early_times_and_slope():
    ell = 100
    tstar = Q.light_cone_time(ell, 1.0)
    ts = np.linspace(5, 0.5 * tstar, 9)
    v = Q.exact_fnl_series(ell, ts, INF_TO_CRIT)
    a, b = np.polyfit(ts, v, 1)
    resid = np.max(np.abs(v - (a * ts + b)))
    assert resid < 0.03 * np.ptp(v)
    qslope = Q.quasiparticle_fnl(ell, 1.0, INF_TO_CRIT)
    assert a == pytest.approx(qslope, rel=0.05)


def test_rises_then_saturates():
    ell = 40
    ts = [2.0, 10.0, 20.0, 40.0, 60.0]
    v = Q.exact_fnl_series(ell, ts, INF_TO_CRIT)
    assert v[0] < v[1] < v[2]
    assert abs(v[4] - v[3]) < 0.05 * v[3]


def test_late_time_agreement_ell60():
    ell = 60
    t = 2 * Q.light_cone_time(ell, 1.0)
    for qp in (INF_TO_CRIT, TWO_TO_CRIT):
        assert Q.exact_fnl(ell, t, qp) == pytest.approx(Q.quasiparticle_fnl(ell, t, qp), rel=0.05)


def test_series_threads_keep_order():
    a = Q.exact_fnl_series(8, [0.5, 2.0, 1.0], TWO_TO_CRIT)
    b = Q.exact_fnl_series(8, [0.5, 2.0, 1.0], TWO_TO_CRIT, threads=2)
    assert np.array_equal(a, b)
