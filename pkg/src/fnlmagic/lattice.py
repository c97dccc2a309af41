"""XY-chain ground states: momentum-space data, block-Toeplitz covariances,
corner-transfer-matrix spectra and the critical logarithmic coefficient.

Sites are zero-based. The chain Hamiltonian is

    H = -sum_j [(1+eta)/2 X_j X_{j+1} + (1-eta)/2 Y_j Y_{j+1} + mu Z_j]

which equals ``(i/4) gamma^T A gamma`` for the single-body matrix returned by
:func:`single_body_matrix`. Ground-state covariances use the sign convention of
:mod:`fnlmagic.core`, in which the polarized state ``mu -> inf`` is the vacuum.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import core
from .core import CovarianceMatrix
from .quadrature import QuadratureError, integrate

CRITICAL_TOL = 1e-9
NEAR_CRITICAL_KAPPA = 1.0 - 1e-3
SERIES_TERM_TOL = 1e-16
SERIES_MAX_TERMS = 100_000


class CriticalPointError(ValueError):
    """Raised when an off-critical formula is evaluated on a critical line."""


class SeriesWarning(UserWarning):
    pass


@dataclass(frozen=True)
class XYParams:
    mu: float
    eta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.eta)):
            raise ValueError("mu and eta must be finite")

    @property
    def near_critical_field(self) -> bool:
        return abs(self.mu - 1.0) < CRITICAL_TOL


# --------------------------------------------------------------------------
# momentum-space data
# --------------------------------------------------------------------------

def dispersion(k, mu: float, eta: float = 1.0):
    """Single-particle energy ``sqrt((mu - cos k)^2 + eta^2 sin^2 k)``."""
    k = np.asarray(k, dtype=float)
    return np.hypot(mu - np.cos(k), eta * np.sin(k))


def bogoliubov_angle(k, mu: float, eta: float = 1.0):
    """Angle with ``cos = (mu - cos k)/eps`` and ``sin = eta sin k / eps``.

    At a gap-closing momentum the angle is undefined; the one-sided limit
    ``k -> k0^+`` is returned there (see :func:`gap_closing`).
    """
    k = np.asarray(k, dtype=float)
    a = mu - np.cos(k)
    b = eta * np.sin(k)
    theta = np.arctan2(b, a)
    closed = (np.abs(a) < 1e-300) & (np.abs(b) < 1e-300)
    if np.any(closed):
        # near k0 with mu = cos k0: a ~ sin(k0) dk + cos(k0) dk^2/2, b ~ eta cos(k0) dk
        k0 = k[closed]
        da = np.where(np.abs(np.sin(k0)) > 1e-12, np.sin(k0), 0.5 * np.cos(k0) * 1e-8)
        db = eta * np.cos(k0)
        theta = np.array(theta, copy=True)
        theta[closed] = np.arctan2(db, da)
    return theta


def gap_closing(k, mu: float, eta: float = 1.0, tol: float = 1e-12):
    """Boolean mask of momenta where the dispersion vanishes."""
    return dispersion(k, mu, eta) < tol


def static_symbol(k, mu: float, eta: float = 1.0) -> np.ndarray:
    """Ground-state symbol ``[[0, e^{i theta}], [-e^{-i theta}, 0]]``, shape ``(..., 2, 2)``."""
    th = bogoliubov_angle(k, mu, eta)
    g = np.zeros(np.shape(th) + (2, 2), dtype=complex)
    g[..., 0, 1] = np.exp(1j * th)
    g[..., 1, 0] = -np.exp(-1j * th)
    return g


def _breakpoints(mu: float, eta: float, extra=()) -> list[float]:
    pts = {-math.pi, 0.0, math.pi}
    if eta == 0.0 and abs(mu) < 1.0:
        k0 = math.acos(mu)
        pts.update({k0, -k0})
    pts.update(float(p) for p in extra)
    return sorted(pts)


def assemble_block_toeplitz(coeff: np.ndarray, ell: int) -> np.ndarray:
    """Assemble ``M[2m+a, 2n+b] = coeff[m-n + ell-1, a, b]``."""
    idx = np.arange(ell)
    diff = idx[:, None] - idx[None, :] + ell - 1
    blocks = coeff[diff]  # (ell, ell, 2, 2)
    return blocks.transpose(0, 2, 1, 3).reshape(2 * ell, 2 * ell)


def fourier_blocks(symbol, ell: int, breakpoints, tol: float = 1e-10, start_panels: int = 4):
    """Coefficients ``(1/2pi) int e^{ikd} g(k) dk`` for ``d = -(ell-1) .. ell-1``.

    ``symbol`` maps a node array to an array of shape ``(nodes, 2, 2)``.
    Returns ``(coeff, panels)`` with ``coeff`` of shape ``(2 ell - 1, 2, 2)``.
    """
    d = np.arange(-(ell - 1), ell)
    # resolve the fastest Fourier mode from the first refinement on
    per_interval = max(start_panels, int(math.ceil(ell / 8)))

    def integrand(k):
        phase = np.exp(1j * np.outer(k, d))
        return phase[:, :, None, None] * symbol(k)[:, None, :, :] / (2 * math.pi)

    value, panels = integrate(integrand, breakpoints, tol=tol, start_panels=per_interval)
    return value, panels


def ground_state_block_toeplitz(ell: int, mu: float, eta: float = 1.0, tol: float = 1e-10) -> np.ndarray:
    """Reduced covariance of ``ell`` contiguous sites of the infinite chain.

    The two nonzero block entries are ``G(d) = (1/2pi) int cos(k d + theta_k) dk``
    and ``-G(-d)``; the integrals are split at ``k = 0`` and ``k = +-pi``, where
    the angle can jump at criticality.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    d = np.arange(-(ell - 1), ell)

    def integrand(k):
        return np.cos(np.outer(k, d) + bogoliubov_angle(k, mu, eta)[:, None]) / (2 * math.pi)

    start = max(4, int(math.ceil(ell / 8)))
    try:
        g, _ = integrate(integrand, _breakpoints(mu, eta), tol=tol, start_panels=start)
    except QuadratureError as exc:
        raise QuadratureError(f"block-Toeplitz coefficients: {exc}", exc.achieved) from exc
    coeff = np.zeros((2 * ell - 1, 2, 2))
    coeff[:, 0, 1] = g
    coeff[:, 1, 0] = -g[::-1]
    gam = assemble_block_toeplitz(coeff, ell)
    asym = float(np.max(np.abs(gam + gam.T)))
    if asym > 1e-9:
        raise core.CovarianceError(f"assembled block is not antisymmetric (deviation {asym:.2e})")
    return core.antisymmetrize(gam)


def block_fnl(ell: int, mu: float, eta: float = 1.0, alpha: int = 2, tol: float = 1e-10) -> float:
    """FNL of an ``ell``-site block of the infinite-chain ground state."""
    lam = core.mode_spectrum(ground_state_block_toeplitz(ell, mu, eta, tol))
    return core.fnl_from_spectrum(lam, alpha)


# --------------------------------------------------------------------------
# finite periodic chain
# --------------------------------------------------------------------------

def ns_momenta(n: int) -> np.ndarray:
    """Antiperiodic momenta ``pi (2j + 1) / N`` mapped into ``(-pi, pi)``."""
    k = np.pi * (2 * np.arange(n) + 1) / n
    return np.where(k > np.pi, k - 2 * np.pi, k)


def single_body_matrix(n: int, mu: float, eta: float = 1.0, boundary: str = "antiperiodic") -> np.ndarray:
    """Real antisymmetric ``A`` with ``H = (i/4) gamma^T A gamma``.

    ``boundary`` is ``"open"``, ``"periodic"`` or ``"antiperiodic"`` for the
    fermionic bond closing the ring.
    """
    a = np.zeros((2 * n, 2 * n))
    for m in range(n):
        a[2 * m, 2 * m + 1] = 2.0 * mu
    sign = {"open": 0.0, "periodic": 1.0, "antiperiodic": -1.0}[boundary]
    for m in range(n):
        nxt = m + 1
        s = 1.0
        if nxt == n:
            nxt, s = 0, sign
        if s == 0.0:
            continue
        a[2 * m + 1, 2 * nxt] += s * (1.0 + eta)
        a[2 * nxt + 1, 2 * m] += s * (1.0 - eta)
    return a - a.T


def finite_chain_block(n: int, ell: int, mu: float, eta: float = 1.0) -> np.ndarray:
    """Reduced covariance of the first ``ell`` sites of the periodic ``N``-site chain.

    The even-parity ground state has antiperiodic fermions, so the Fourier sums
    run over :func:`ns_momenta`. ``N`` must be divisible by 4.
    """
    if n < 4 or n % 4:
        raise ValueError("N must be a positive multiple of 4")
    if not 1 <= ell <= n:
        raise ValueError("need 1 <= ell <= N")
    k = ns_momenta(n)
    th = bogoliubov_angle(k, mu, eta)
    d = np.arange(-(ell - 1), ell)
    g = np.cos(np.outer(d, k) + th[None, :]).sum(axis=1) / n
    coeff = np.zeros((2 * ell - 1, 2, 2))
    coeff[:, 0, 1] = g
    coeff[:, 1, 0] = -g[::-1]
    return core.antisymmetrize(assemble_block_toeplitz(coeff, ell))


def finite_chain_covariance(n: int, mu: float, eta: float = 1.0) -> CovarianceMatrix:
    """Full ground-state covariance of the periodic chain (even parity sector)."""
    return CovarianceMatrix(finite_chain_block(n, n, mu, eta))


def ns_ground_energy(n: int, mu: float, eta: float = 1.0) -> float:
    """Free-fermion ground energy ``-sum_k eps_k`` over antiperiodic momenta."""
    return -float(np.sum(dispersion(ns_momenta(n), mu, eta)))


# --------------------------------------------------------------------------
# corner transfer matrix spectrum
# --------------------------------------------------------------------------

def elliptic_K(kappa: float) -> float:
    """Complete elliptic integral of the first kind, argument the modulus ``kappa``."""
    if not 0.0 <= kappa < 1.0:
        raise CriticalPointError(f"modulus {kappa} outside [0, 1)")
    a, b = 1.0, math.sqrt((1.0 - kappa) * (1.0 + kappa))
    for _ in range(64):
        if abs(a - b) <= 1e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def peschel_modulus(mu: float, eta: float = 1.0) -> tuple[float, str]:
    """Elliptic modulus and phase tag (``"disordered"`` for mu > 1, else ``"ordered"``)."""
    eta = abs(eta)
    if abs(mu - 1.0) < CRITICAL_TOL:
        raise CriticalPointError("mu = 1 is critical")
    mu = abs(mu)
    if mu > 1.0:
        kappa, phase = eta / math.sqrt(eta * eta + mu * mu - 1.0), "disordered"
    else:
        if eta == 0.0:
            raise CriticalPointError("eta = 0 with |mu| < 1 is gapless")
        r = eta * eta + mu * mu - 1.0
        if r >= 0.0:
            kappa = math.sqrt(r) / eta
        else:
            kappa = math.sqrt(-r / (1.0 - mu * mu))
        phase = "ordered"
    if kappa >= 1.0:
        raise CriticalPointError(f"modulus {kappa} on a critical line")
    return kappa, phase


@dataclass(frozen=True)
class PeschelSpectrum:
    epsilon: float
    parity: str
    kappa: float

    def energies(self, n_max: int) -> np.ndarray:
        """First ``n_max`` single-particle entanglement energies."""
        n = np.arange(n_max)
        return (2 * n + 1) * self.epsilon if self.parity == "odd" else 2 * n * self.epsilon

    def lambdas(self, n_max: int) -> np.ndarray:
        return np.tanh(self.energies(n_max) / 2)


def peschel_spectrum(mu: float, eta: float = 1.0) -> PeschelSpectrum:
    """Equally spaced half-chain entanglement ladder off criticality."""
    kappa, phase = peschel_modulus(mu, eta)
    kp = math.sqrt((1.0 - kappa) * (1.0 + kappa))
    eps = math.inf if kappa == 0.0 else math.pi * elliptic_K(kp) / elliptic_K(kappa)
    return PeschelSpectrum(eps, "odd" if phase == "disordered" else "even", kappa)


@dataclass(frozen=True)
class SemiInfiniteFNL:
    single_cut: float
    block: float
    terms: int
    converged: bool


def fnl_semi_infinite(mu: float, eta: float = 1.0, alpha: int = 2) -> SemiInfiniteFNL:
    """FNL of a half-infinite chain from the ladder, and the doubled block value."""
    spec = peschel_spectrum(mu, eta)
    if math.isinf(spec.epsilon):
        return SemiInfiniteFNL(0.0, 0.0, 0, True)
    total, n, converged = 0.0, 0, False
    offset = 1 if spec.parity == "odd" else 0
    while n <= SERIES_MAX_TERMS:
        e = (2 * n + offset) * spec.epsilon
        # 1 - tanh^2(e/2) computed directly to keep precision for large e
        one_minus = 1.0 / math.cosh(e / 2) ** 2
        term = float(core.weight(alpha, 1.0 - one_minus)) if one_minus > 0 else 0.0
        total += term
        n += 1
        # terms increase until lambda passes 1/sqrt(2), then decay monotonically
        if term < SERIES_TERM_TOL and math.tanh(e / 2) ** 2 > 0.5:
            converged = True
            break
    if not converged:
        warnings.warn(f"ladder series not converged after {n} terms (partial sum {total:.6g})",
                      SeriesWarning, stacklevel=2)
    return SemiInfiniteFNL(total, 2.0 * total, n, converged)


# --------------------------------------------------------------------------
# critical coefficient
# --------------------------------------------------------------------------

def beta_closed_form() -> float:
    """Closed form of the alpha = 2 logarithmic coefficient."""
    return (math.pi ** 2 - math.log(7 - 4 * math.sqrt(3)) ** 2) / (math.pi ** 2 * math.log(16))


def critical_beta_integral(alpha: int = 2, tol: float = 1e-14) -> float:
    """``(2/pi^2) int_0^1 m_alpha(l^2) / (1 - l^2) dl`` by adaptive Gauss-Legendre."""
    alpha = core._check_alpha(alpha)

    def f(lam):
        x = lam * lam
        return core.weight(alpha, x) / ((1.0 - lam) * (1.0 + lam))

    val, _ = integrate(f, [0.0, 0.5, 1.0], tol=tol, start_panels=2)
    return 2.0 / math.pi ** 2 * float(val)


def _beta_polynomial(alpha: int) -> np.poly1d:
    return np.poly1d([1.0, -2.0]) ** alpha + np.poly1d([1.0, 2.0]) ** alpha + np.poly1d([4.0 ** alpha])


@dataclass(frozen=True)
class BetaRoots:
    value: float
    roots: np.ndarray
    max_residual: float


def critical_beta_roots(alpha: int = 2, newton_steps: int = 20) -> BetaRoots:
    """Root-sum evaluation ``sum_j arccosh(-r_j/2)^2 / (2 (1-alpha) pi^2 ln 2)``.

    Roots of ``(x-2)^alpha + (x+2)^alpha + 4^alpha`` come from the companion
    matrix. A cluster of ``m`` nearby roots is treated as one root of
    multiplicity ``m``: it is replaced by the cluster mean and refined by Newton
    steps on the ``(m-1)``-th derivative, where it is simple. Residuals are
    relative to the polynomial's coefficient scale.
    """
    alpha = core._check_alpha(alpha)
    poly = _beta_polynomial(alpha)
    raw = np.roots(poly.coeffs).astype(complex)
    roots = []
    used = np.zeros(raw.size, dtype=bool)
    for i in range(raw.size):
        if used[i]:
            continue
        cluster = (~used) & (np.abs(raw - raw[i]) < 1e-4 * max(1.0, abs(raw[i])))
        used |= cluster
        mult = int(cluster.sum())
        target = poly.deriv(mult - 1) if mult > 1 else poly
        slope = target.deriv()
        r = complex(np.mean(raw[cluster]))
        for _ in range(newton_steps):
            dp = slope(r)
            if dp == 0:
                break
            step = target(r) / dp
            r -= step
            if abs(step) <= 1e-16 * max(1.0, abs(r)):
                break
        roots.extend([r] * mult)
    roots = np.array(roots)
    scale = float(np.sum(np.abs(poly.coeffs)))
    resid = float(np.max(np.abs(poly(roots)))) / scale
    s = np.sum(np.arccosh(-roots / 2.0) ** 2)
    value = float(np.real(s)) / (2.0 * (1 - alpha) * math.pi ** 2 * math.log(2.0))
    if resid > 1e-10:
        warnings.warn(f"root residual {resid:.2e} exceeds 1e-10", RuntimeWarning, stacklevel=2)
    return BetaRoots(value, roots, resid)


def critical_beta(alpha: int = 2, check: float = 1e-8) -> float:
    """Logarithmic coefficient of the critical FNL, cross-checked by two routes."""
    a = critical_beta_integral(alpha)
    b = critical_beta_roots(alpha).value
    if abs(a - b) > check:
        raise ArithmeticError(f"integral {a!r} and root-sum {b!r} disagree by {abs(a - b):.2e}")
    return a


# --------------------------------------------------------------------------
# phase diagram
# --------------------------------------------------------------------------

def _scan_cell(mu: float, eta: float, ell: int, alpha: int, switch_kappa: float):
    try:
        kappa, _ = peschel_modulus(mu, eta)
    except CriticalPointError:
        kappa = 1.0
    try:
        if kappa <= switch_kappa:
            res = fnl_semi_infinite(mu, eta, alpha)
            return res.block / ell, "peschel"
        return block_fnl(ell, mu, eta, alpha) / ell, "block_toeplitz"
    except (ArithmeticError, ValueError, QuadratureError):
        return math.nan, "failed"


def phase_diagram_scan(mu_grid, eta_grid, ell: int, alpha: int = 2, *,
                       switch_kappa: float = NEAR_CRITICAL_KAPPA, threads: int = 1) -> list[dict]:
    """FNL density ``M/ell`` on a ``(mu, eta)`` grid as long-format rows.

    Off-critical cells use the doubled ladder series; cells whose modulus
    exceeds ``switch_kappa`` use the block-Toeplitz numerics at ``ell``.
    Failed cells carry ``nan`` and method ``"failed"``.
    """
    cells = [(float(m), float(e)) for m in mu_grid for e in eta_grid]
    def job(c):
        return _scan_cell(c[0], c[1], ell, alpha, switch_kappa)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(job, cells))
    else:
        out = [job(c) for c in cells]
    return [dict(mu=m, eta=e, ell=ell, fnl_density=v, method=how) for (m, e), (v, how) in zip(cells, out)]


def fit_log_slope(ells, values) -> tuple[float, float]:
    """Least-squares ``values ~ beta ln(ell) + b``; returns ``(beta, b)``."""
    x = np.log(np.asarray(ells, dtype=float))
    beta, b = np.polyfit(x, np.asarray(values, dtype=float), 1)
    return float(beta), float(b)
