"""Diffusive FNL growth in random matchgate brickwork circuits."""
import numpy as np

from fnlmagic import circuits as C

for n in (16, 32):
    record = tuple(sorted({0, *np.unique(np.geomspace(1, n * n, 12).astype(int))}))
    tr = C.circuit_fnl_trajectory(C.CircuitConfig(n, n * n, realizations=20, seed=0, record=record))
    print(f"N={n}: exponent {tr.growth_exponent():.3f}, plateau/N {tr.plateau() / n:.4f}")
    for u, d in zip(tr.sqrt_t_over_n, tr.density):
        print(f"   sqrt(t)/N={u:.3f}  FNL/N={d:.4f}")
