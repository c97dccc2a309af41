"""Transverse-field quenches on the Ising line (eta = 1).

Time is measured in the units in which the evolved symbol oscillates as
``2 eps_k t`` with ``eps_k`` from :func:`fnlmagic.lattice.dispersion``; in real
space this is evolution under ``H/2``, i.e. Majorana rotation ``expm(t A / 2)``
with ``A`` from :func:`fnlmagic.lattice.single_body_matrix`. Quasiparticles
then move with ``v_k = d eps_k / dk`` and the light cone of an ``ell``-site
block closes at ``t* = ell / (2 v_max)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import core, lattice
from .quadrature import integrate

HERMITIAN_TOL = 1e-9
NODES_PER_OSCILLATION = 16
GGE_WINDOW = (5.0, 6.0)
GGE_SAMPLES = 64


@dataclass(frozen=True)
class QuenchParams:
    """Quench ``mu0 -> mu`` at ``eta = 1``. ``mu0 = math.inf`` is the polarized initial state."""

    mu0: float
    mu: float
    ell: int | None = None
    times: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if math.isnan(self.mu0) or not math.isfinite(self.mu):
            raise ValueError("mu must be finite and mu0 finite or +inf")
        if self.mu0 == -math.inf:
            raise ValueError("mu0 = -inf is not supported")
        ts = tuple(float(t) for t in self.times)
        if any(t < 0 for t in ts):
            raise ValueError("times must be nonnegative")
        if list(ts) != sorted(ts):
            raise ValueError("times must be sorted ascending")
        object.__setattr__(self, "times", ts)

    @property
    def polarized_start(self) -> bool:
        return math.isinf(self.mu0)


def delta_theta(k, qp: QuenchParams) -> tuple[np.ndarray, np.ndarray]:
    """``(cos, sin)`` of the mismatch ``theta_k(mu) - theta_k(mu0)``.

    For ``mu0 = inf`` the pre-quench angle vanishes identically, so the
    mismatch is the post-quench angle itself.
    """
    k = np.asarray(k, dtype=float)
    th = lattice.bogoliubov_angle(k, qp.mu, 1.0)
    if qp.polarized_start:
        return np.cos(th), np.sin(th)
    th0 = lattice.bogoliubov_angle(k, qp.mu0, 1.0)
    c, s, c0, s0 = np.cos(th), np.sin(th), np.cos(th0), np.sin(th0)
    return c * c0 + s * s0, s * c0 - c * s0


def _initial_angle(k, qp: QuenchParams):
    return np.zeros_like(np.asarray(k, dtype=float)) if qp.polarized_start else lattice.bogoliubov_angle(k, qp.mu0, 1.0)


def symbol_pq(k, t: float, qp: QuenchParams):
    """Scalar functions ``p(k, t)`` and ``q(k, t)`` of the evolved symbol.

    ``p = e^{-i theta}[cos D + i sin D cos(2 eps t)]`` and
    ``q = i sin D sin(2 eps t)``; at ``t = 0``, ``p = e^{-i theta0}`` and ``q = 0``.
    """
    k = np.asarray(k, dtype=float)
    th = lattice.bogoliubov_angle(k, qp.mu, 1.0)
    cd, sd = delta_theta(k, qp)
    ph = 2.0 * lattice.dispersion(k, qp.mu, 1.0) * t
    p = np.exp(-1j * th) * (cd + 1j * sd * np.cos(ph))
    q = 1j * sd * np.sin(ph)
    return p, q


def time_symbol(k, t: float, qp: QuenchParams) -> np.ndarray:
    """Evolved symbol ``[[-q(k), p(-k)], [-p(k), q(k)]]``, shape ``(..., 2, 2)``.

    This orientation is the one produced by real-space evolution in the
    Majorana ordering of :mod:`fnlmagic.core`; at ``t = 0`` it equals
    :func:`fnlmagic.lattice.static_symbol` of the initial Hamiltonian.
    """
    k = np.asarray(k, dtype=float)
    p, q = symbol_pq(k, t, qp)
    pm, _ = symbol_pq(-k, t, qp)
    g = np.empty(k.shape + (2, 2), dtype=complex)
    g[..., 0, 0] = -q
    g[..., 0, 1] = pm
    g[..., 1, 0] = -p
    g[..., 1, 1] = q
    return g


def _max_dispersion(mu: float) -> float:
    return abs(mu) + 1.0


def evolved_block_toeplitz(ell: int, t: float, qp: QuenchParams, tol: float = 1e-10) -> np.ndarray:
    """Hermitian ``i Gamma_A(t)`` of an ``ell``-site block after the quench.

    The quadrature starts with enough panels to put at least
    ``NODES_PER_OSCILLATION`` nodes on every period of ``cos(2 eps_k t + k d)``
    and then doubles panels until the coefficients settle to ``tol``.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if t < 0:
        raise ValueError("t must be nonnegative")
    d = np.arange(-(ell - 1), ell)
    # phase 2 eps_k t + k d sweeps at most (2 v_max t + ell) per unit k
    sweep = 2.0 * _max_dispersion(qp.mu) * t + ell
    periods = sweep * math.pi / (2 * math.pi)
    order = 32
    panels = max(4, int(math.ceil(NODES_PER_OSCILLATION * periods / order)))

    def integrand(k):
        phase = np.exp(1j * np.outer(k, d)) / (2 * math.pi)
        return phase[:, :, None, None] * time_symbol(k, t, qp)[:, None, :, :]

    coeff, _ = integrate(integrand, [-math.pi, 0.0, math.pi], tol=tol, order=order, start_panels=panels)
    gam = lattice.assemble_block_toeplitz(coeff, ell)
    ig = 1j * gam
    herm = float(np.max(np.abs(ig - ig.conj().T)))
    if herm > HERMITIAN_TOL:
        raise ArithmeticError(f"i Gamma_A deviates from Hermitian by {herm:.2e}")
    return 0.5 * (ig + ig.conj().T)


def exact_fnl(ell: int, t: float, qp: QuenchParams, alpha: int = 2, tol: float = 1e-10) -> float:
    lam = core.hermitian_mode_spectrum(evolved_block_toeplitz(ell, t, qp, tol))
    return core.fnl_from_spectrum(lam, alpha)


def exact_fnl_series(ell: int, times, qp: QuenchParams, alpha: int = 2, *, threads: int = 1,
                     tol: float = 1e-10) -> np.ndarray:
    """:func:`exact_fnl` at each time; parallel evaluation keeps input order."""
    times = [float(t) for t in times]
    def job(t):
        return exact_fnl(ell, t, qp, alpha, tol)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.array(list(pool.map(job, times)))
    return np.array([job(t) for t in times])


def group_velocity(k, mu: float, eta: float = 1.0):
    """``d eps_k / dk``; at ``eta = 1`` this is ``mu sin k / eps_k``."""
    k = np.asarray(k, dtype=float)
    eps = lattice.dispersion(k, mu, eta)
    num = (mu - np.cos(k)) * np.sin(k) + eta * eta * np.sin(k) * np.cos(k)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = num / eps
    # gap closing at k0 = 0 or pi: one-sided limit
    bad = eps == 0
    if np.any(bad):
        kk = np.where(np.abs(np.asarray(k)[bad]) < 1.0, 1e-9, np.pi - 1e-9)
        v = np.array(v, copy=True)
        v[bad] = group_velocity(kk, mu, eta)
    return v


def max_velocity(mu: float, points: int = 20001) -> float:
    """Maximal ``|v_k|`` from a dense scan on ``[0, pi]``."""
    return float(np.max(np.abs(group_velocity(np.linspace(0.0, math.pi, points), mu))))


def light_cone_time(ell: int, mu: float) -> float:
    return ell / (2.0 * max_velocity(mu))


def mode_weight(k, qp: QuenchParams, alpha: int = 2):
    """Per-mode FNL weight ``m_alpha(cos^2 D_k)`` of a quasiparticle pair.

    The stationary symbol ``e^{i theta} cos D`` gives reduced-covariance
    eigenvalues ``|cos D_k|``; by the symmetry of ``m_alpha`` this equals
    ``m_alpha(sin^2 D_k)``.
    """
    cd, _ = delta_theta(k, qp)
    return core.weight(alpha, np.clip(cd * cd, 0.0, 1.0))


def mode_entropy(k, qp: QuenchParams):
    """Per-mode entanglement ``f((1 + |cos D_k|)/2)`` in bits."""
    cd, _ = delta_theta(k, qp)
    return core.binary_entropy(0.5 * (1.0 + np.abs(cd)))


def _half_zone_integral(func, tol=1e-12, extra=()):
    pts = sorted({0.0, math.pi, *[float(e) for e in extra if 0.0 < e < math.pi]})
    val, _ = integrate(func, pts, tol=tol, start_panels=4)
    return float(val)


def stationary_fnl(ell: float, qp: QuenchParams, alpha: int = 2, tol: float = 1e-12) -> float:
    """GGE value ``(ell/pi) int_0^pi m_alpha(cos^2 D_k) dk``."""
    return ell / math.pi * _half_zone_integral(lambda k: mode_weight(k, qp, alpha), tol)


def stationary_entropy(ell: float, qp: QuenchParams, tol: float = 1e-12) -> float:
    return ell / math.pi * _half_zone_integral(lambda k: mode_entropy(k, qp), tol)


def _kinks(ell: float, t: float, mu: float, grid: int = 4001) -> list[float]:
    """Momenta in ``(0, pi)`` where ``2 |v_k| t`` crosses ``ell``."""
    if t <= 0:
        return []
    k = np.linspace(0.0, math.pi, grid)
    f = 2.0 * np.abs(group_velocity(k, mu)) * t - ell
    out = []
    for i in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]:
        out.append(brentq(lambda x: 2.0 * abs(float(group_velocity(x, mu))) * t - ell, k[i], k[i + 1], xtol=1e-15))
    return out


def _quasiparticle(ell: float, t: float, qp: QuenchParams, kernel, tol: float) -> float:
    if t == 0:
        return 0.0
    def f(k):
        return np.minimum(2.0 * np.abs(group_velocity(k, qp.mu)) * t, ell) * kernel(k)
    return _half_zone_integral(f, tol, _kinks(ell, t, qp.mu)) / math.pi


def quasiparticle_fnl(ell: float, t: float, qp: QuenchParams, alpha: int = 2, tol: float = 1e-12) -> float:
    """Pair-counting prediction ``(1/pi) int_0^pi min(2|v_k| t, ell) m_alpha(cos^2 D_k) dk``."""
    return _quasiparticle(ell, t, qp, lambda k: mode_weight(k, qp, alpha), tol)


def quasiparticle_entropy(ell: float, t: float, qp: QuenchParams, tol: float = 1e-12) -> float:
    """Same kernel with the per-mode entanglement ``f((1 + |cos D_k|)/2)``."""
    return _quasiparticle(ell, t, qp, lambda k: mode_entropy(k, qp), tol)


def gge_time_average(ell: int, qp: QuenchParams, alpha: int = 2, *, window=GGE_WINDOW,
                     samples: int = GGE_SAMPLES, threads: int = 1) -> float:
    """Mean exact FNL over ``samples`` equally spaced times in ``[window[0] ell, window[1] ell]``."""
    times = np.linspace(window[0] * ell, window[1] * ell, samples)
    return float(np.mean(exact_fnl_series(ell, times, qp, alpha, threads=threads)))
