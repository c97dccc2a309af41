import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fnlmagic import core, oracle, rng
from fnlmagic.ensembles import sample_haar_orthogonal


def random_state(n, seed):
    o = sample_haar_orthogonal(2 * n, rng.stream(seed, 0))
    return core.conjugate(core.vacuum_covariance(n), o)


def block_rotation(n, ell, seed):
    g = rng.stream(seed, 1)
    o = np.zeros((2 * n, 2 * n))
    o[: 2 * ell, : 2 * ell] = sample_haar_orthogonal(2 * ell, g)
    o[2 * ell:, 2 * ell:] = sample_haar_orthogonal(2 * (n - ell), g)
    return o


# --- construction -----------------------------------------------------------

def test_vacuum_blocks():
    assert np.array_equal(core.vacuum_covariance(1).gamma, [[0, 1], [-1, 0]])
    g2 = core.vacuum_covariance(2).gamma
    assert np.array_equal(g2[:2, :2], g2[2:, 2:]) and not g2[:2, 2:].any()
    for s in range(3):
        assert core.fnl_magic(core.vacuum_covariance(3), [s]) == 0.0


def test_covariance_validation():
    with pytest.raises(core.CovarianceError):
        core.CovarianceMatrix(np.ones((2, 2)))
    with pytest.raises(core.CovarianceError):
        core.CovarianceMatrix(2.0 * core.vacuum_covariance(1).gamma)
    with pytest.raises(ValueError):
        core.Bipartition([0, 0], 3)
    with pytest.raises(ValueError):
        core.Bipartition([5], 3)


def test_conjugate_identity_and_rejects_non_orthogonal():
    g = random_state(4, 1)
    assert np.allclose(core.conjugate(g, np.eye(8)).gamma, g.gamma, atol=1e-14)
    with pytest.raises(ValueError):
        core.conjugate(g, 2 * np.eye(8))


def test_restrict_cases():
    g = random_state(3, 2)
    assert np.array_equal(core.restrict(g, [0, 1, 2]), g.gamma)
    assert not core.restrict(core.rainbow_covariance(6), [0, 1, 2]).any()
    v = core.restrict(core.vacuum_covariance(4), [1, 3])
    assert np.array_equal(v, core.vacuum_covariance(2).gamma)


# --- spectra and weight -----------------------------------------------------

def test_mode_spectrum_cases():
    assert np.allclose(core.mode_spectrum(np.array([[0, 1], [-1, 0.0]])), [1.0])
    assert np.allclose(core.mode_spectrum(np.zeros((2, 2))), [0.0])
    for theta in (0.1, 0.4, 1.0):
        psi = oracle.canonical_state(oracle.CanonicalSpec([theta], 2))
        lam = core.mode_spectrum(core.restrict(oracle.covariance_from_state(psi), [0]))
        assert lam[0] == pytest.approx(abs(math.cos(2 * theta)), abs=1e-12)


def test_mode_spectrum_rejects_bad_blocks():
    with pytest.raises(core.SpectrumError):
        core.mode_spectrum(np.eye(2))
    with pytest.raises(core.SpectrumError):
        core.mode_spectrum(np.array([[0, 1.5], [-1.5, 0]]))
    assert core.mode_spectrum(np.array([[0, 1.5], [-1.5, 0]]), strict=False)[0] == 1.0


def test_weight_values():
    assert core.weight(2, 0.0) == 0.0 and core.weight(2, 1.0) == 0.0
    assert core.weight(2, 0.5) == pytest.approx(math.log2(4 / 3), abs=1e-15)
    with pytest.raises(ValueError):
        core.weight(1, 0.5)
    with pytest.raises(ValueError):
        core.weight(2, 1.5)


@given(st.integers(2, 6), st.floats(0.0, 1.0))
def test_weight_symmetric_nonnegative(alpha, x):
    w = core.weight(alpha, x)
    assert w >= 0.0
    assert w == pytest.approx(core.weight(alpha, 1.0 - x), abs=1e-15)
    if 0.0 < x < 1.0:
        assert w > 0.0


def test_weight_small_lambda_expansion():
    # C fitted once on this grid (max ratio 0.7310) and frozen
    lam = np.linspace(1e-4, 0.1, 200)
    resid = np.abs(core.weight(2, lam**2) - lam**2 / math.log(2))
    assert np.all(resid <= 0.74 * lam**4)


def test_weight_matches_naive_formula_inside():
    x = np.linspace(0.01, 0.99, 50)
    for a in (2, 3, 4):
        naive = np.log2(((1 - x) ** a + 1 + x**a) / 2) / (1 - a)
        assert np.allclose(core.weight(a, x), naive, rtol=1e-12, atol=1e-15)


# --- fnl_magic --------------------------------------------------------------

def test_fnl_rainbow_zero_with_maximal_entropy():
    for n in (2, 8):
        g = core.rainbow_covariance(n)
        half = list(range(n // 2))
        assert core.fnl_magic(g, half) == 0.0
        assert core.entanglement_entropy(core.mode_spectrum(core.restrict(g, half))) == pytest.approx(n // 2)


def test_fnl_single_pair_log43():
    psi = oracle.canonical_state(oracle.CanonicalSpec([math.pi / 8], 2))
    assert core.fnl_magic(oracle.covariance_from_state(psi), [0]) == pytest.approx(math.log2(4 / 3), abs=1e-12)


def test_fnl_complement_and_purity_product():
    for seed in range(10):
        g = random_state(7, seed)
        a = [0, 2, 5]
        b = [1, 3, 4, 6]
        assert core.fnl_magic(g, a) == pytest.approx(core.fnl_magic(g, b), abs=1e-9)
        lam = core.mode_spectrum(core.restrict(g, a))
        assert core.fnl_magic(g, a) == pytest.approx(-math.log2(oracle.canonical_purity(lam)), abs=1e-12)


def test_fnl_local_rotation_invariance():
    for seed in range(100):
        n = 2 + seed % 9
        ell = 1 + seed % (n - 1)
        g = random_state(n, seed)
        o = block_rotation(n, ell, seed)
        sites = list(range(ell))
        assert core.fnl_magic(core.conjugate(g, o), sites) == pytest.approx(core.fnl_magic(g, sites), abs=1e-9)


def test_fnl_purity_check_and_trivial_cuts():
    g = random_state(3, 5)
    assert core.fnl_magic(g, []) == 0.0
    assert core.fnl_magic(g, [0, 1, 2]) == 0.0
    with pytest.raises(core.CovarianceError):
        core.fnl_magic(0.5 * g.gamma, [0])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_restricted_spectra_in_range(seed, n):
    g = random_state(n, seed)
    for ell in range(1, n):
        lam = core.mode_spectrum(core.restrict(g, list(range(ell))))
        assert np.all((lam >= 0) & (lam <= 1))


# --- entropy and energies ---------------------------------------------------

def test_entropy_and_energies():
    assert core.entanglement_entropy([1.0, 1.0]) == 0.0
    t = math.tanh(1.0)
    p = (1 + t) / 2
    assert core.entanglement_entropy([t]) == pytest.approx(-p * math.log2(p) - (1 - p) * math.log2(1 - p))
    assert core.entanglement_energies([0.0])[0] == 0.0
    assert core.entanglement_energies([t])[0] == pytest.approx(2.0)
    eps = np.array([0.3, 1.7, 5.0])
    assert np.allclose(np.tanh(core.entanglement_energies(np.tanh(eps / 2)) / 2), np.tanh(eps / 2), atol=1e-12)


def test_entropy_matches_oracle_reduced_density_matrix():
    t = math.tanh(1.0)
    theta = math.acos(t) / 2  # canonical pair with lambda = cos 2 theta = tanh 1
    psi = oracle.canonical_state(oracle.CanonicalSpec([theta], 2)).reshape(2, 2)
    p = np.linalg.eigvalsh(psi @ psi.conj().T)
    s = -sum(x * math.log2(x) for x in p if x > 0)
    assert core.entanglement_entropy([t]) == pytest.approx(s, abs=1e-12)


# --- error bound, shots, serialization --------------------------------------

def test_error_bound_shape():
    assert core.fnl_error_bound(8, 0.0) == 0.0
    assert core.fnl_error_bound(32, 0.01) / core.fnl_error_bound(8, 0.01) == pytest.approx(2.0)
    lip = core.lipschitz_constant()
    lam = np.linspace(0, 1, 100001)
    assert lip >= np.max(np.abs(core.weight_derivative_lambda(lam))) - 1e-12


def test_error_bound_holds_on_perturbations():
    g = random_state(16, 3)
    sites = list(range(8))
    base = core.fnl_magic(g, sites)
    block = core.restrict(g, sites)
    gen = rng.stream(3, 9)
    for _ in range(500):
        d = gen.normal(size=block.shape)
        d = d - d.T
        d *= 0.01 / np.linalg.norm(d)
        lam = core.mode_spectrum(block + d, strict=False)
        assert abs(core.fnl_from_spectrum(lam) - base) <= core.fnl_error_bound(8, 0.01)


def test_shots_estimate():
    assert core.shots_estimate(16, 0.1, 0.05) == math.ceil(4096 * math.log(320) * 100)
    r = core.shots_estimate(32, 0.1, 0.05) / core.shots_estimate(16, 0.1, 0.05)
    assert r == pytest.approx(8 * math.log(640) / math.log(320), rel=1e-6)
    assert core.shots_estimate(16, 0.05, 0.05) == pytest.approx(4 * core.shots_estimate(16, 0.1, 0.05), rel=1e-6)
    with pytest.raises(ValueError):
        core.shots_estimate(16, 0.0, 0.05)


def test_matrix_csv_round_trip(tmp_path):
    m = random_state(3, 1).gamma
    path = tmp_path / "g.csv"
    core.matrix_to_csv(m, str(path))
    assert np.array_equal(core.matrix_from_csv(str(path)), m)
    assert path.read_text().splitlines()[0] == "6"
