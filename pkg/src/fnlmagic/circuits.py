"""Brickwork circuits of random nearest-neighbour matchgates.

A full layer is an even half-step with gates on sites ``(0,1), (2,3), ...``
followed by an odd half-step on ``(1,2), (3,4), ...``; boundaries are open, so
the odd half-step has ``N/2 - 1`` gates. Each gate rotates the four Majoranas
of its two sites by an independent Haar element of SO(4).

Realizations are propagated together as a ``(R, 2N, 2N)`` stack; realization
``r`` draws every gate from its own stream ``(seed, r)``, so results do not
depend on how realizations are batched or threaded.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import core, rng as rngmod
from .ensembles import sample_haar_orthogonal


def sample_so4(rng: np.random.Generator) -> np.ndarray:
    """Haar element of O(4), with one column negated when ``det = -1``."""
    o = sample_haar_orthogonal(4, rng)
    if np.linalg.det(o) < 0:
        o[:, 0] = -o[:, 0]
    return o


def _half_step_layout(n_sites: int, parity: str) -> tuple[int, int]:
    """First Majorana index and gate count of a half-step."""
    if n_sites % 2:
        raise ValueError("N must be even")
    if parity == "even":
        return 0, n_sites // 2
    if parity == "odd":
        return 2, n_sites // 2 - 1
    raise ValueError("parity must be 'even' or 'odd'")


def sample_so4_batch(rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` Haar elements of SO(4), shape ``(count, 4, 4)``.

    Batched QR with the triangular diagonal made positive gives Haar O(4);
    negating the first column when ``det = -1`` maps it onto Haar SO(4).
    """
    z = rng.standard_normal((count, 4, 4))
    q, r = np.linalg.qr(z)
    q = q * np.where(np.diagonal(r, axis1=1, axis2=2) < 0, -1.0, 1.0)[:, None, :]
    neg = np.linalg.det(q) < 0
    q[neg, :, 0] *= -1.0
    return q


def draw_gates(gens, count: int) -> np.ndarray:
    """``count`` SO(4) gates per generator, shape ``(len(gens), count, 4, 4)``."""
    out = np.empty((len(gens), count, 4, 4))
    for r, g in enumerate(gens):
        out[r] = sample_so4_batch(g, count)
    return out


def apply_gates(batch: np.ndarray, start: int, gates: np.ndarray) -> np.ndarray:
    """Conjugate a stack of covariances by block-diagonal gates.

    ``gates[r, j]`` acts on Majoranas ``start + 4j .. start + 4j + 3`` of
    realization ``r``; all other indices are untouched.
    """
    r, count = gates.shape[:2]
    if count == 0:
        return batch
    stop = start + 4 * count
    dim = batch.shape[-1]
    out = batch.copy()
    rows = out[:, start:stop, :].reshape(r, count, 4, dim)
    out[:, start:stop, :] = np.matmul(gates, rows).reshape(r, 4 * count, dim)
    cols = out[:, :, start:stop].reshape(r, dim, count, 4).transpose(0, 2, 1, 3)
    rot = np.matmul(cols, gates.transpose(0, 1, 3, 2))
    out[:, :, start:stop] = rot.transpose(0, 2, 1, 3).reshape(r, dim, 4 * count)
    return out


def apply_layer(gamma, parity: str, rng: np.random.Generator) -> core.CovarianceMatrix:
    """One half-step of independent random gates on a single covariance."""
    g = core.as_array(gamma)
    n = g.shape[0] // 2
    start, count = _half_step_layout(n, parity)
    gates = draw_gates([rng], count)
    return core.CovarianceMatrix(core.antisymmetrize(apply_gates(g[None], start, gates)[0]), validate=False)


@dataclass(frozen=True)
class CircuitConfig:
    n_sites: int
    layers: int
    realizations: int = 20
    seed: int = 0
    cut: tuple | None = None
    record: tuple | None = None
    alpha: int = 2

    def __post_init__(self):
        if self.n_sites < 2 or self.n_sites % 2:
            raise ValueError("N must be even and >= 2")
        if self.layers < 0 or self.realizations < 1:
            raise ValueError("layers must be >= 0 and realizations >= 1")
        if self.cut is not None:
            core.Bipartition(self.cut, self.n_sites)
        self.record_layers

    @property
    def sites(self) -> list[int]:
        return list(self.cut) if self.cut is not None else list(range(self.n_sites // 2))

    @property
    def record_layers(self) -> np.ndarray:
        """Layer counts ``t`` at which the FNL is recorded (default: every layer, including 0)."""
        if self.record is None:
            return np.arange(self.layers + 1)
        t = np.unique(np.asarray(self.record, dtype=int))
        if t.size and (t[0] < 0 or t[-1] > self.layers):
            raise ValueError("record layers must lie in [0, layers]")
        return t


@dataclass
class CircuitTrajectory:
    n_sites: int
    times: np.ndarray
    fnl: np.ndarray  # (realizations, times)
    mean: np.ndarray = field(init=False)
    stderr: np.ndarray = field(init=False)

    def __post_init__(self):
        self.mean = self.fnl.mean(axis=0)
        r = self.fnl.shape[0]
        self.stderr = self.fnl.std(axis=0, ddof=1) / math.sqrt(r) if r > 1 else np.zeros_like(self.mean)

    @property
    def sqrt_t_over_n(self) -> np.ndarray:
        return np.sqrt(self.times) / self.n_sites

    @property
    def density(self) -> np.ndarray:
        return self.mean / self.n_sites

    def plateau(self, fraction: float = 0.1) -> float:
        """Mean FNL over the recorded times in the final ``fraction`` of the run."""
        cutoff = self.times[-1] * (1.0 - fraction)
        sel = self.times >= cutoff
        return float(self.mean[sel].mean())

    def growth_exponent(self, window=None) -> float:
        """Slope of ``log FNL`` against ``log t`` over ``window`` (default ``[4, N^2/16]``)."""
        lo, hi = window if window is not None else (4.0, self.n_sites ** 2 / 16.0)
        sel = (self.times >= lo) & (self.times <= hi) & (self.mean > 0)
        if sel.sum() < 2:
            raise ValueError("fewer than two recorded times in the fit window")
        slope, _ = np.polyfit(np.log(self.times[sel]), np.log(self.mean[sel]), 1)
        return float(slope)

    def saturation_time(self, level: float = 0.9, fraction: float = 0.1) -> float:
        """First recorded time at which the mean reaches ``level`` times the plateau."""
        target = level * self.plateau(fraction)
        hit = np.nonzero(self.mean >= target)[0]
        return float(self.times[hit[0]]) if hit.size else math.nan


def _batch_fnl(batch: np.ndarray, sites: list[int], alpha: int) -> np.ndarray:
    idx = np.array([j for s in sites for j in (2 * s, 2 * s + 1)])
    blocks = batch[:, idx][:, :, idx]
    sv = np.linalg.svd(blocks, compute_uv=False)
    out = np.empty(batch.shape[0])
    for r in range(batch.shape[0]):
        out[r] = core.fnl_from_spectrum(core._pair_and_clamp(sv[r], strict=True), alpha)
    return out


def _run_chunk(cfg: CircuitConfig, members: list[int]) -> np.ndarray:
    n = cfg.n_sites
    gens = [rngmod.stream(cfg.seed, r) for r in members]
    batch = np.repeat(core.vacuum_covariance(n).gamma[None], len(members), axis=0)
    record = cfg.record_layers
    out = np.empty((len(members), record.size))
    sites = cfg.sites
    k = 0
    if record.size and record[0] == 0:
        out[:, 0] = _batch_fnl(batch, sites, cfg.alpha)
        k = 1
    even = _half_step_layout(n, "even")
    odd = _half_step_layout(n, "odd")
    for t in range(1, cfg.layers + 1):
        batch = apply_gates(batch, even[0], draw_gates(gens, even[1]))
        batch = apply_gates(batch, odd[0], draw_gates(gens, odd[1]))
        if k < record.size and record[k] == t:
            # symmetrize a copy so the trajectory does not depend on which layers are recorded
            out[:, k] = _batch_fnl(0.5 * (batch - batch.transpose(0, 2, 1)), sites, cfg.alpha)
            k += 1
    return out


def circuit_fnl_trajectory(cfg: CircuitConfig, threads: int = 1, chunk: int = 16) -> CircuitTrajectory:
    """Half-cut FNL after each recorded layer, for every realization.

    Realizations are split into chunks of at most ``chunk``; chunks run in
    parallel and are merged in realization order.
    """
    members = list(range(cfg.realizations))
    chunks = [members[i:i + chunk] for i in range(0, len(members), chunk)]
    def job(c):
        return _run_chunk(cfg, c)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    return CircuitTrajectory(cfg.n_sites, cfg.record_layers.astype(float), np.concatenate(parts, axis=0))
