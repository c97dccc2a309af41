"""Closed-form FNL against brute-force minimization over local unitaries.

Ising ground states at N=8; each minimization takes about ten seconds.
"""
from fnlmagic import core, lattice, oracle, variational as V

N, ELL = 8, 4
for mu in (0.5, 1.0, 2.0):
    psi, _ = oracle.ising_ground_state_dense(N, mu)
    formula = core.fnl_magic(lattice.finite_chain_covariance(N, mu), range(ELL))
    gs = V.variational_min(psi, ELL, V.OptimizerConfig("gaussian", restarts=1))
    ge = V.variational_min(psi, ELL, V.OptimizerConfig("generic", restarts=1))
    print(f"mu={mu}: formula {formula:.10f}  gaussian {gs.value:.10f}  generic {ge.value:.10f}")
