"""Typical Gaussian states: Haar sampling, the Jacobi-kernel Page curve, its
large-N limit and SYK2 eigenstates.

For a Haar-random pure Gaussian state on ``N`` modes, the squared
reduced-covariance eigenvalues ``x = lambda^2`` of ``ell <= N/2`` modes follow a
Jacobi ensemble with weight ``(1-x)^b x^(-1/2)`` on ``(0, 1)``, ``b = N - 2 ell``.
Page-curve densities are quoted per site of the whole system, ``FNL / N``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import core, rng as rngmod
from .quadrature import integrate


# --------------------------------------------------------------------------
# Haar sampling
# --------------------------------------------------------------------------

def sample_haar_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of ``O(dim)``.

    QR of a standard Gaussian matrix with the triangular factor's diagonal
    made positive, followed by a uniformly random sign on the first column.
    """
    if dim < 2 or dim % 2:
        raise ValueError("dim must be even and >= 2")
    z = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)[None, :]
    if rng.random() < 0.5:
        q[:, 0] = -q[:, 0]
    return q


def haar_covariance(n_modes: int, rng: np.random.Generator) -> core.CovarianceMatrix:
    o = sample_haar_orthogonal(2 * n_modes, rng)
    return core.conjugate(core.vacuum_covariance(n_modes), o)


# --------------------------------------------------------------------------
# Jacobi kernel
# --------------------------------------------------------------------------

WEIGHT_EXPONENT_OFFSET = {"haar": 0.0, "printed": -0.5}


@dataclass(frozen=True)
class JacobiKernelParams:
    """Jacobi ensemble of ``x = lambda^2`` for ``ell`` of ``N`` modes.

    The weight is ``x^(-1/2) (1-x)^beta`` with ``beta = b`` for ``weight="haar"``,
    the law of Haar-random states (for ``ell = 1``, ``x`` is the squared
    component of a uniform unit vector in ``2N - 1`` dimensions). The variant
    ``weight="printed"`` uses ``beta = b - 1/2``.
    """

    n_modes: int
    ell: int
    weight: str = "haar"

    def __post_init__(self):
        if not 1 <= self.ell <= self.n_modes / 2:
            raise ValueError(f"need 1 <= ell <= N/2, got ell={self.ell}, N={self.n_modes}")
        if self.weight not in WEIGHT_EXPONENT_OFFSET:
            raise ValueError(f"weight must be one of {sorted(WEIGHT_EXPONENT_OFFSET)}")

    @property
    def b(self) -> int:
        return self.n_modes - 2 * self.ell

    @property
    def beta(self) -> float:
        return self.b + WEIGHT_EXPONENT_OFFSET[self.weight]


def jacobi_log_norm(n, beta: float):
    """``log h_n``, ``h_n = int_0^1 x^(-1/2) (1-x)^beta P_n(1-2x)^2 dx`` for Jacobi ``P_n^(-1/2, beta)``.

    ``h_n = G(n+1/2) G(n+beta+1) / ((2n+beta+1/2) G(n+1) G(n+beta+1/2))``. The
    product ``(2n+beta+1/2) G(n+beta+1/2)`` is evaluated as
    ``G(n+beta+3/2) (2n+beta+1/2)/(n+beta+1/2)``, which stays finite (equal to 1)
    at ``n = 0, beta = -1/2``.
    """
    n = np.asarray(n, dtype=float)
    s = n + beta + 0.5
    safe = np.where(s > 0, s, 1.0)
    ratio = np.where(s > 0, (2 * n + beta + 0.5) / safe, 1.0)
    return (gammaln(n + 0.5) + gammaln(n + beta + 1) - gammaln(n + 1) - gammaln(s + 1) - np.log(ratio))


def jacobi_norm(n, beta: float):
    return np.exp(jacobi_log_norm(n, beta))


def _recurrence(ell: int, beta: float):
    """Orthonormal recurrence in ``y = 1 - 2x`` for Jacobi parameters ``(-1/2, beta)``.

    Returns diagonal ``a_n`` (n < ell) and off-diagonal ``c_n`` (1 <= n < ell).
    """
    al, be = -0.5, beta
    s = al + be
    n = np.arange(ell, dtype=float)
    diag = np.empty(ell)
    diag[0] = (be - al) / (s + 2)
    if ell > 1:
        m = n[1:]
        diag[1:] = (be * be - al * al) / ((2 * m + s) * (2 * m + s + 2))
    off = np.empty(max(ell - 1, 0))
    if ell > 1:
        off[0] = math.sqrt(4 * (1 + al) * (1 + be) / ((2 + s) ** 2 * (3 + s)))
        if ell > 2:
            m = n[2:]
            t = 2 * m + s
            off[1:] = np.sqrt(4 * m * (m + al) * (m + be) * (m + s) / (t * t * (t * t - 1)))
    return diag, off


def orthonormal_polynomials(x, ell: int, beta: float) -> np.ndarray:
    """``p_n(x)`` for ``n < ell``, orthonormal against ``x^(-1/2) (1-x)^beta dx``.

    Shape ``(ell,) + x.shape``.
    """
    x = np.asarray(x, dtype=float)
    y = 1.0 - 2.0 * x
    diag, off = _recurrence(ell, beta)
    out = np.empty((ell,) + x.shape)
    out[0] = math.exp(-0.5 * float(jacobi_log_norm(0, beta)))
    if ell > 1:
        out[1] = (y - diag[0]) * out[0] / off[0]
    for n in range(1, ell - 1):
        out[n + 1] = ((y - diag[n]) * out[n] - off[n - 1] * out[n - 1]) / off[n]
    return out


def _log_kernel_sum(x, ell: int, beta: float):
    """``log sum_{n<ell} p_n(x)^2`` by the recurrence with running rescaling.

    Only two consecutive polynomials are kept, and they are renormalized
    whenever they grow large, so neither memory nor magnitude depends on ``ell``.
    """
    x = np.asarray(x, dtype=float)
    y = 1.0 - 2.0 * x
    diag, off = _recurrence(ell, beta)
    log_scale = np.zeros_like(x)
    prev = np.zeros_like(x)
    cur = np.full_like(x, math.exp(-0.5 * float(jacobi_log_norm(0, beta))))
    total = cur * cur
    for n in range(ell - 1):
        nxt = ((y - diag[n]) * cur - (off[n - 1] * prev if n else 0.0)) / off[n]
        prev, cur = cur, nxt
        total = total + cur * cur
        big = np.abs(cur) > 1e100
        if np.any(big):
            f = np.where(big, np.abs(cur), 1.0)
            prev, cur, total = prev / f, cur / f, total / (f * f)
            log_scale += np.log(f)
    return np.log(total) + 2.0 * log_scale


def _density_phi(phi, params: JacobiKernelParams):
    """``rho(x) dx/dphi`` at ``x = sin^2 phi``; equals ``2 cos^(2 beta + 1) phi sum p_n^2``."""
    phi = np.asarray(phi, dtype=float)
    x = np.sin(phi) ** 2
    expo = 2 * params.beta + 1
    with np.errstate(divide="ignore"):
        logw = np.zeros_like(phi) if expo == 0 else expo * np.log(np.cos(phi))
    return 2.0 * np.exp(logw + _log_kernel_sum(x, params.ell, params.beta))


def jacobi_density(x, params: JacobiKernelParams):
    """One-point density ``w(x) sum_{n<ell} p_n(x)^2`` of ``x = lambda^2``; integrates to ``ell``."""
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x >= 1)):
        raise ValueError("x must lie strictly inside (0, 1)")
    logw = params.beta * np.log1p(-x) - 0.5 * np.log(x)
    return np.exp(logw + _log_kernel_sum(x, params.ell, params.beta))


def _start_panels(params: JacobiKernelParams) -> int:
    # the kernel oscillates about ell times across (0, pi/2)
    return max(2, params.ell // 4)


def jacobi_total_mass(params: JacobiKernelParams, rtol: float = 1e-12) -> float:
    """``int rho`` by quadrature; equals ``ell`` up to ``rtol * ell``."""
    val, _ = integrate(lambda phi: _density_phi(phi, params), [0.0, math.pi / 2], tol=rtol * params.ell,
                       start_panels=_start_panels(params))
    return float(val)


def page_curve_finite(params: JacobiKernelParams, alpha: int = 2, tol: float = 1e-9) -> float:
    """Exact Haar average of the FNL of ``ell`` modes out of ``N`` (not divided by ``N``)."""
    alpha = core._check_alpha(alpha)

    def f(phi):
        return core.weight(alpha, np.sin(phi) ** 2) * _density_phi(phi, params)

    val, _ = integrate(f, [0.0, math.pi / 4, math.pi / 2], tol=tol, start_panels=_start_panels(params))
    return float(val)


def page_curve_asymptotic(r: float, alpha: int = 2, tol: float = 1e-12) -> float:
    """Large-N FNL density ``FNL/N`` at ratio ``r = ell/N``.

    ``(c/pi) int_0^{pi/2} cos^2 t / (1 - c sin^2 t) m_alpha(c sin^2 t) dt``,
    ``c = 4 r (1 - r)``.
    """
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    alpha = core._check_alpha(alpha)
    c = 4.0 * r * (1.0 - r)

    def f(t):
        s2 = np.sin(t) ** 2
        cs = np.cos(t) ** 2
        # at c = 1 the ratio is identically 1; avoid 0/0 at t = pi/2
        ratio = np.where(1.0 - c * s2 > 0, cs / np.where(1.0 - c * s2 > 0, 1.0 - c * s2, 1.0), 1.0)
        return ratio * core.weight(alpha, np.clip(c * s2, 0.0, 1.0))

    val, _ = integrate(f, [0.0, math.pi / 4, math.pi / 2], tol=tol, start_panels=2)
    return c / math.pi * float(val)


def half_cut_closed_form() -> float:
    """Large-N half-cut density for ``alpha = 2``: ``2 - log2(2 + sqrt 3)``."""
    return 2.0 - math.log2(2.0 + math.sqrt(3.0))


def small_r_coefficient(alpha: int = 2) -> float:
    """Limit of ``page_curve_asymptotic(r, alpha) / r^2`` as ``r -> 0``."""
    alpha = core._check_alpha(alpha)
    return alpha / ((alpha - 1) * 2.0 * math.log(2.0))


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PageCurvePoint:
    n_modes: int
    ell: int
    r: float
    density: float
    stderr: float = 0.0

    def __post_init__(self):
        if not self.density >= 0.0:
            raise ValueError("density must be nonnegative")


def _mean_stderr(values: np.ndarray, axis=0):
    m = values.mean(axis=axis)
    s = values.std(axis=axis, ddof=1) / math.sqrt(values.shape[axis])
    return m, s


def _map(func, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(i) for i in items]


def haar_fnl_samples(n_modes: int, ells, samples: int, alpha: int = 2, seed: int = 0,
                     threads: int = 1) -> np.ndarray:
    """FNL of the first ``ell`` sites of ``samples`` Haar states; shape ``(samples, len(ells))``.

    Sample ``i`` draws from stream ``(seed, i)``.
    """
    ells = [int(e) for e in ells]

    def one(i):
        g = haar_covariance(n_modes, rngmod.stream(seed, i))
        return [core.fnl_magic(g, list(range(e)), alpha) for e in ells]

    return np.array(_map(one, range(samples), threads), dtype=float).reshape(samples, len(ells))


def monte_carlo_page(n_modes: int, ells, samples: int, alpha: int = 2, seed: int = 0,
                     threads: int = 1) -> list[PageCurvePoint]:
    """Sampled Page curve: mean and standard error of ``FNL/N`` per ``ell``."""
    if samples < 2:
        raise ValueError("need at least two samples")
    vals = haar_fnl_samples(n_modes, ells, samples, alpha, seed, threads) / n_modes
    mean, err = _mean_stderr(vals)
    return [PageCurvePoint(n_modes, int(e), int(e) / n_modes, float(m), float(s))
            for e, m, s in zip(ells, mean, err)]


# --------------------------------------------------------------------------
# SYK2
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Syk2Config:
    n_modes: int
    disorder_samples: int = 20
    eigenstates_per_sample: int = 10
    coupling: float = 1.0
    flip_fraction_range: tuple = (0.25, 0.5)
    seed: int = 0

    def __post_init__(self):
        if self.n_modes < 2 or self.disorder_samples < 1 or self.eigenstates_per_sample < 1:
            raise ValueError("counts must be positive and N >= 2")
        lo, hi = self.flip_fraction_range
        if not 0.0 < lo <= hi <= 0.5:
            raise ValueError("flip fractions must satisfy 0 < lo <= hi <= 1/2")

    def flip_count_range(self) -> tuple[int, int]:
        lo = math.ceil(self.flip_fraction_range[0] * self.n_modes)
        hi = math.floor(self.flip_fraction_range[1] * self.n_modes)
        return lo, max(lo, hi)


def syk2_sample(cfg: Syk2Config, rng: np.random.Generator) -> np.ndarray:
    """Antisymmetric ``2N x 2N`` couplings with i.i.d. entries of variance ``J^2/N`` above the diagonal."""
    dim = 2 * cfg.n_modes
    h = np.zeros((dim, dim))
    iu = np.triu_indices(dim, 1)
    h[iu] = rng.normal(0.0, cfg.coupling / math.sqrt(cfg.n_modes), size=iu[0].size)
    return h - h.T


def syk2_modes(h: np.ndarray, gap_tol: float = 1e-12) -> np.ndarray:
    """Negative-energy eigenvectors of ``i h`` as columns (their conjugates carry ``+eps``)."""
    evals, vecs = np.linalg.eigh(1j * h)
    n = h.shape[0] // 2
    if np.min(np.abs(evals)) < gap_tol:
        raise ArithmeticError("zero mode in i h: particle/hole pairing is ambiguous")
    return vecs[:, :n]


def syk2_eigenstate_covariance(h: np.ndarray, flipped) -> core.CovarianceMatrix:
    """Covariance ``i (2 Xi - I)`` of the eigenstate that fills ``Xi``.

    ``Xi`` projects onto the negative-energy modes of ``i h`` except those in
    ``flipped``, which are replaced by their positive-energy partners.
    """
    v = syk2_modes(h).copy()
    flipped = np.asarray(list(flipped), dtype=int)
    v[:, flipped] = v[:, flipped].conj()
    xi = v @ v.conj().T
    gam = np.real(1j * (2.0 * xi - np.eye(h.shape[0])))
    return core.CovarianceMatrix(core.antisymmetrize(gam))


def random_flips(cfg: Syk2Config, rng: np.random.Generator) -> np.ndarray:
    lo, hi = cfg.flip_count_range()
    count = int(rng.integers(lo, hi + 1))
    return rng.choice(cfg.n_modes, size=count, replace=False)


def syk2_fnl_samples(cfg: Syk2Config, ells, alpha: int = 2, threads: int = 1) -> np.ndarray:
    """FNL per disorder sample, averaged over its eigenstates; shape ``(disorder, len(ells))``.

    Disorder realization ``i`` draws from stream ``(seed, i)``.
    """
    ells = [int(e) for e in ells]

    def one(i):
        g = rngmod.stream(cfg.seed, i)
        h = syk2_sample(cfg, g)
        acc = np.zeros(len(ells))
        for _ in range(cfg.eigenstates_per_sample):
            gam = syk2_eigenstate_covariance(h, random_flips(cfg, g))
            acc += [core.fnl_magic(gam, list(range(e)), alpha) for e in ells]
        return acc / cfg.eigenstates_per_sample

    return np.array(_map(one, range(cfg.disorder_samples), threads), dtype=float).reshape(-1, len(ells))


def syk2_page(cfg: Syk2Config, ells, alpha: int = 2, threads: int = 1) -> list[PageCurvePoint]:
    """Two-level average (eigenstates, then disorder); errors from the disorder level."""
    vals = syk2_fnl_samples(cfg, ells, alpha, threads) / cfg.n_modes
    if vals.shape[0] > 1:
        mean, err = _mean_stderr(vals)
    else:
        mean, err = vals[0], np.zeros(vals.shape[1])
    return [PageCurvePoint(cfg.n_modes, int(e), int(e) / cfg.n_modes, float(m), float(s))
            for e, m, s in zip(ells, mean, err)]
