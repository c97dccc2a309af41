"""Linear growth and saturation of FNL after a field quench to the critical point."""
import math

import numpy as np

from fnlmagic import quench as Q

ELL = 60
qp = Q.QuenchParams(math.inf, 1.0)
tstar = Q.light_cone_time(ELL, qp.mu)
times = np.linspace(0, 3 * tstar, 13)
exact = Q.exact_fnl_series(ELL, times, qp)

print(f"l={ELL}, light-cone time t*={tstar:.2f}")
print(f"{'t':>7} {'exact':>9} {'pairs':>9} {'S pairs':>9}")
for t, e in zip(times, exact):
    print(f"{t:7.2f} {e:9.4f} {Q.quasiparticle_fnl(ELL, t, qp):9.4f} {Q.quasiparticle_entropy(ELL, t, qp):9.4f}")
print("stationary value", Q.stationary_fnl(ELL, qp))
