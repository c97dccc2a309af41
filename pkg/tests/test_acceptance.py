"""Acceptance suite: one test per numbered criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary under "acceptance criteria". Expected runtime on one core
is about 25 minutes, dominated by criteria 1, 2 and 13.
"""

import math
import sys
import warnings

import numpy as np
import pytest

from fnlmagic import circuits, core, ensembles as E, lattice as L, oracle, quench as Q, rng
from fnlmagic import variational as V

ISING_MUS = (0.2, 0.5, 1.0, 2.0, 3.0)


def _variational(psi, sites, cls, restarts, seed):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", V.ConvergenceWarning)
        return V.variational_min(psi, sites, V.OptimizerConfig(cls, restarts=restarts), seed=seed)


def test_01_closed_form_vs_brute_force(report):
    worst_gs, worst_ge = 0.0, 0.0
    for i, mu in enumerate(ISING_MUS):
        psi, _ = oracle.ising_ground_state_dense(8, mu)
        fnl = core.fnl_magic(L.finite_chain_covariance(8, mu), [0, 1, 2, 3])
        gs = _variational(psi, 4, "gaussian", 3, i)
        ge = _variational(psi, 4, "generic", 3, i)
        worst_gs = max(worst_gs, abs(fnl - gs.value))
        worst_ge = max(worst_ge, abs(fnl - ge.value))
    ok = worst_gs <= 1e-6 and worst_ge <= 1e-4
    assert report(1, ok, f"Ising N=8 l=4 mu={ISING_MUS}: max |gap| gaussian {worst_gs:.2e} (<=1e-6), "
                         f"generic {worst_ge:.2e} (<=1e-4)")


def test_02_random_gaussian_states(report):
    worst = 0.0
    for s in range(50):
        o = E.sample_haar_orthogonal(16, rng.stream(2000 + s, 0))
        fnl = core.fnl_magic(core.conjugate(core.vacuum_covariance(8), o), [0, 1, 2, 3])
        res = _variational(oracle.gaussian_state(o), 4, "gaussian", 3, s)
        worst = max(worst, abs(res.value - fnl))
    assert report(2, worst <= 1e-6, f"50 Haar Gaussian states N=8 l=4: max gaussian gap {worst:.2e} (<=1e-6)")


def test_03_half_cut_page_value(report):
    target = 0.1000280
    quad = E.page_curve_asymptotic(0.5, 2)
    closed = E.half_cut_closed_form()
    mc = E.monte_carlo_page(80, [40], 500, seed=3)[0]
    ok_quad = abs(quad - target) <= 1e-6
    ok_mc = abs(mc.density - target) <= 0.02 * target
    assert report(3, ok_quad and ok_mc,
                  f"quadrature {quad:.10f} vs 0.1000280 (diff {quad - target:.2e}, tol 1e-6; "
                  f"2-log2(2+sqrt3) = {closed:.10f}); MC N=80 500 samples {mc.density:.5f} "
                  f"+- {mc.stderr:.5f} (rel {abs(mc.density / target - 1):.2%}, tol 2%)")


def test_04_finite_kernel_vs_sampling(report):
    parts, ok = [], True
    for ell in (1, 2, 3):
        exact = E.page_curve_finite(E.JacobiKernelParams(12, ell)) / 12
        pt = E.monte_carlo_page(12, [ell], 2000, seed=40 + ell)[0]
        z = abs(exact - pt.density) / pt.stderr
        ok &= z <= 3
        parts.append(f"l={ell}: {z:.2f} se")
    assert report(4, ok, "N=12 kernel vs 2000-sample MC, " + ", ".join(parts) + " (<=3)")


def test_05_small_r_onset(report):
    r = 0.02
    ratio = E.page_curve_asymptotic(r, 2) / r**2
    rel = abs(ratio * math.log(2) - 1)
    assert report(5, rel <= 0.05, f"asymptotic(0.02)/r^2 = {ratio:.5f} vs 1/ln2 = {1 / math.log(2):.5f} "
                                  f"(rel {rel:.2%}, tol 5%)")


def test_06_syk2_typicality(report):
    cfg = E.Syk2Config(80, disorder_samples=100, eigenstates_per_sample=20, seed=6)
    pt = E.syk2_page(cfg, [40])[0]
    ref = E.page_curve_asymptotic(0.5)
    rel = abs(pt.density / ref - 1)
    assert report(6, rel <= 0.05, f"SYK2 N=80 100x20 half-cut density {pt.density:.5f} +- {pt.stderr:.5f} "
                                  f"vs {ref:.5f} (rel {rel:.2%}, tol 5%)")


def test_07_critical_scaling(report):
    ells = [64, 128, 256, 512]
    vals = [L.block_fnl(ell, 1.0, 1.0) for ell in ells]
    slope, _ = L.fit_log_slope(ells, vals)
    beta = L.critical_beta(2)
    rel_stated = abs(slope / 0.10717 - 1)
    rel_beta = abs(slope / beta - 1)
    assert report(7, rel_stated <= 0.05 and rel_beta <= 0.05,
                  f"slope over l={ells}: {slope:.5f} vs 0.10717 (rel {rel_stated:.2%}) and "
                  f"critical_beta(2) = {beta:.5f} (rel {rel_beta:.2%}), tol 5%")


def test_08_beta_cross_validation(report):
    diffs = {a: abs(L.critical_beta_integral(a) - L.critical_beta_roots(a).value) for a in (2, 3, 4)}
    closed = abs(L.critical_beta_integral(2) - L.beta_closed_form())
    ok = max(diffs.values()) <= 1e-8 and closed <= 1e-8
    text = ", ".join(f"a={a}: {d:.1e}" for a, d in diffs.items())
    assert report(8, ok, f"integral vs root-sum {text} (<=1e-8); a=2 vs closed form {closed:.1e}")


def test_09_ordered_phase_null(report):
    fnl = L.block_fnl(64, 0.5, 1.0)
    series = L.fnl_semi_infinite(0.5, 1.0).block
    assert report(9, fnl <= 1e-6, f"mu=0.5 eta=1 l=64: FNL {fnl:.4e} (<=1e-6); ladder series "
                                  f"gives {series:.4e}")


def test_10_gapped_saturation(report):
    parts, ok = [], True
    for mu in (4.0, 1.5):
        d = abs(L.block_fnl(128, mu, 1.0) - L.fnl_semi_infinite(mu, 1.0).block)
        ok &= d <= 1e-4
        parts.append(f"mu={mu}: {d:.1e}")
    assert report(10, ok, "|FNL(l=128) - 2 series| " + ", ".join(parts) + " (<=1e-4)")


def test_11_quench_agreement(report):
    ell = 100
    tstar = Q.light_cone_time(ell, 1.0)
    parts, ok = [], True
    for mu0 in (math.inf, 2.0):
        qp = Q.QuenchParams(mu0, 1.0)
        for f in (0.2, 2.0):
            ex = Q.exact_fnl(ell, f * tstar, qp)
            qv = Q.quasiparticle_fnl(ell, f * tstar, qp)
            rel = abs(ex / qv - 1)
            ok &= rel <= 0.05
            parts.append(f"mu0={mu0} {f}t*: {ex:.4f}/{qv:.4f} ({rel:.2%})")
        avg = Q.gge_time_average(ell, qp)
        st = Q.stationary_fnl(ell, qp)
        rel = abs(avg / st - 1)
        ok &= rel <= 0.01
        parts.append(f"mu0={mu0} GGE {avg:.4f}/{st:.4f} ({rel:.2%})")
    assert report(11, ok, "l=100 exact/quasiparticle (tol 5%), time average/stationary (tol 1%): "
                  + "; ".join(parts))


def test_12_gge_symmetry(report):
    grid = (0.3, 0.7, 1.0, 1.5, 3.0)
    worst = 0.0
    for a in grid:
        for b in grid:
            d = abs(Q.stationary_fnl(60, Q.QuenchParams(a, b)) - Q.stationary_fnl(60, Q.QuenchParams(b, a)))
            worst = max(worst, d)
    assert report(12, worst <= 1e-10, f"5x5 grid {grid}: max swap difference {worst:.1e} (<=1e-10)")


# --- circuits --------------------------------------------------------------

COLLAPSE_U = tuple(k / 10 for k in range(1, 11))


def _record_layers(n):
    total = n * n
    geo = np.round(np.geomspace(4, total / 16, 16)).astype(int)
    rise = np.linspace(0, total // 2, 101).astype(int)
    tail = np.linspace(0.9 * total, total, 11).astype(int)
    grid = [int(round((u * n) ** 2)) for u in COLLAPSE_U]
    return tuple(sorted({0, *geo.tolist(), *rise.tolist(), *tail.tolist(), *grid}))


@pytest.fixture(scope="module")
def circuit_runs():
    out = {}
    for n in (20, 40, 80):
        cfg = circuits.CircuitConfig(n, n * n, realizations=50, seed=13, record=_record_layers(n))
        out[n] = circuits.circuit_fnl_trajectory(cfg)
    return out


def test_13_circuit_diffusion(report, circuit_runs):
    tr = circuit_runs[80]
    expo = tr.growth_exponent()
    plateau = tr.plateau() / 80
    ok_exp = abs(expo - 0.5) <= 0.1
    ok_plat = abs(plateau / 0.1 - 1) <= 0.03
    # bands mean +- 2 se overlap when |m_i - m_j| <= 2 (se_i + se_j)
    worst, ok_col = 0.0, True
    for u in COLLAPSE_U:
        pts = []
        for n, t in circuit_runs.items():
            k = int(np.nonzero(t.times == round((u * n) ** 2))[0][0])
            pts.append((t.mean[k] / n, t.stderr[k] / n))
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                excess = abs(pts[i][0] - pts[j][0]) / (2 * (pts[i][1] + pts[j][1]))
                worst = max(worst, excess)
                ok_col &= excess <= 1.0
    assert report(13, ok_exp and ok_plat and ok_col,
                  f"N=80 50 realizations: exponent {expo:.3f} (0.5+-0.1), plateau/N {plateau:.4f} "
                  f"(within 3% of 0.1000: {abs(plateau / 0.1 - 1):.2%}), collapse N=20,40,80 at sqrt(t)/N="
                  f"0.1..1.0: worst |dm| / (2 se_i + 2 se_j) = {worst:.2f} (<=1)")


def test_13x_saturation_time_scales_as_n_squared(report, circuit_runs):
    ts = {n: circuit_runs[n].saturation_time() for n in (20, 40, 80)}
    ratios = [ts[40] / ts[20], ts[80] / ts[40]]
    ok = all(abs(r - 4) <= 1 for r in ratios)
    assert report("13x", ok, f"time to 90% of plateau {ts}: ratios on doubling N {ratios[0]:.2f}, "
                             f"{ratios[1]:.2f} (4+-1)")


# --- structural checks -----------------------------------------------------

def test_14_rainbow_null(report):
    ok, parts = True, []
    for n in (4, 8, 16):
        g = core.rainbow_covariance(n)
        half = list(range(n // 2))
        s = core.entanglement_entropy(core.mode_spectrum(core.restrict(g, half)))
        f = core.fnl_magic(g, half)
        ok &= s == n // 2 and f == 0.0
        parts.append(f"N={n}: S={s!r} FNL={f!r}")
    assert report(14, ok, "rainbow half cut " + ", ".join(parts))


def test_15_error_bound(report):
    gen = rng.stream(15, 0)
    violations, worst = 0, 0.0
    for trial in range(10000):
        if trial % 100 == 0:
            g = core.conjugate(core.vacuum_covariance(16), E.sample_haar_orthogonal(32, gen))
            block = core.restrict(g, list(range(8)))
            base = core.fnl_magic(g, list(range(8)))
        eps = 10 ** gen.uniform(-6, -1)
        d = gen.normal(size=block.shape)
        d = d - d.T
        d *= eps / np.linalg.norm(d)
        lam = core.mode_spectrum(block + d, strict=False)
        err = abs(core.fnl_from_spectrum(lam) - base)
        bound = core.fnl_error_bound(8, eps)
        violations += err > bound
        worst = max(worst, err / bound)
    assert report(15, violations == 0, f"10^4 perturbations at l=8, eps in [1e-6, 1e-1]: {violations} "
                                       f"violations, max error/bound {worst:.3f}")


def test_16_oracle_identity(report):
    gen = rng.stream(16, 0)
    worst = 0.0
    for _ in range(100):
        n = int(gen.integers(2, 9))
        ell = int(gen.integers(1, n // 2 + 1))
        th = gen.uniform(0, math.pi, size=ell)
        psi = oracle.canonical_state(oracle.CanonicalSpec(th, n))
        expect = float(np.sum(core.weight(2, np.cos(2 * th) ** 2)))
        worst = max(worst, abs(oracle.stabilizer_entropy(psi) - expect))
    assert report(16, worst <= 1e-10, f"100 canonical states N<=8: max |M2 - sum m2(l^2)| {worst:.1e} (<=1e-10)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
