"""Page curve of FNL for Haar-random Gaussian states.

Compares the exact finite-N kernel average, Monte Carlo sampling and the
large-N density at each cut ratio r = ell / N.
"""
from fnlmagic import ensembles as E

N = 24
SAMPLES = 300

print(f"{'ell':>4} {'r':>6} {'kernel':>10} {'sampled':>10} {'stderr':>8} {'large N':>10}")
mc = {p.ell: p for p in E.monte_carlo_page(N, range(1, N // 2 + 1), SAMPLES, seed=1)}
for ell in range(1, N // 2 + 1):
    exact = E.page_curve_finite(E.JacobiKernelParams(N, ell)) / N
    p = mc[ell]
    print(f"{ell:4d} {ell / N:6.3f} {exact:10.6f} {p.density:10.6f} {p.stderr:8.6f} "
          f"{E.page_curve_asymptotic(ell / N):10.6f}")

print("half-cut limit 2 - log2(2 + sqrt 3) =", E.half_cut_closed_form())
