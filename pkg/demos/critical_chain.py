"""Ising chain ground states: gapped saturation and logarithmic growth at criticality."""
import numpy as np

from fnlmagic import lattice as L

# gapped side: block FNL saturates at twice the half-chain ladder sum
for mu in (1.5, 2.0, 4.0):
    ladder = L.fnl_semi_infinite(mu).block
    print(f"mu={mu}: block(l=64) {L.block_fnl(64, mu):.8f}  ladder {ladder:.8f}")

# critical point: FNL grows as beta ln(l)
ells = [16, 32, 64, 128, 256]
vals = [L.block_fnl(ell, 1.0) for ell in ells]
beta, offset = L.fit_log_slope(ells, vals)
for ell, v in zip(ells, vals):
    print(f"l={ell:4d}  FNL={v:.6f}  fit={beta * np.log(ell) + offset:.6f}")
print(f"fitted slope {beta:.5f}, predicted {L.critical_beta(2):.5f}")
