"""Majorana covariance matrices and the closed-form fermionic non-local magic.

Conventions
-----------
Sites are labelled ``0 .. N-1``. Site ``m`` carries the Majorana pair
``(2m, 2m+1)``. The covariance matrix of a pure Gaussian state is the real
antisymmetric ``2N x 2N`` matrix with vacuum value ``[[0, 1], [-1, 0]]`` on
every site. For a pure state ``Gamma @ Gamma.T == I``.

The non-local magic of order ``alpha`` over a bipartition ``A|B`` is

    M_alpha = sum_i weight(alpha, lambda_i**2),

where ``lambda_i`` are the singular values of the block ``Gamma[I_A, I_A]``
(one per degenerate pair) and

    weight(alpha, x) = log2(((1-x)**alpha + 1 + x**alpha) / 2) / (1 - alpha).
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

ANTISYM_TOL = 1e-12
RANGE_TOL = 1e-10
PURITY_TOL = 1e-8
CLAMP_TOL = 1e-8
PAIR_TOL = 1e-6
ORTHO_TOL = 1e-10


class CovarianceError(ValueError):
    """Raised for matrices that violate the covariance-matrix invariants."""


class SpectrumError(ValueError):
    """Raised when a restricted block has no consistent +-lambda pairing."""


@dataclass(frozen=True)
class CovarianceMatrix:
    """Validated, read-only Majorana covariance matrix.

    Parameters
    ----------
    gamma : array_like
        Real antisymmetric ``2N x 2N`` matrix.
    validate : bool
        Check antisymmetry and the singular-value range on construction.
    """

    gamma: np.ndarray
    validate: bool = True

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float, copy=True)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise CovarianceError(f"covariance must be square with even size, got {g.shape}")
        if g.shape[0] == 0:
            raise CovarianceError("covariance must describe at least one mode")
        if self.validate:
            asym = float(np.max(np.abs(g + g.T)))
            if asym > ANTISYM_TOL:
                raise CovarianceError(f"covariance not antisymmetric: max|G + G^T| = {asym:.3e}")
            smax = float(np.linalg.norm(g, 2))
            if smax > 1 + RANGE_TOL:
                raise CovarianceError(f"singular value {smax:.12f} exceeds 1")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n_modes(self) -> int:
        return self.gamma.shape[0] // 2

    def purity_defect(self) -> float:
        """Max-norm of ``Gamma Gamma^T - I``."""
        g = self.gamma
        return float(np.max(np.abs(g @ g.T - np.eye(g.shape[0]))))

    def is_pure(self, tol: float = ORTHO_TOL) -> bool:
        return self.purity_defect() <= tol

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.gamma, dtype=dtype)


CovarianceLike = Union[CovarianceMatrix, np.ndarray]


def as_array(gamma: CovarianceLike) -> np.ndarray:
    if isinstance(gamma, CovarianceMatrix):
        return gamma.gamma
    return np.asarray(gamma, dtype=float)


def antisymmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m - m.T)


@dataclass(frozen=True)
class Bipartition:
    """Subsystem ``A`` of an ``N``-site chain; ``B`` is the complement.

    Sites are zero-based and kept in the given order.
    """

    sites: tuple
    n_modes: int

    def __init__(self, sites: Iterable[int], n_modes: int):
        s = tuple(int(i) for i in sites)
        if n_modes < 1:
            raise ValueError("n_modes must be positive")
        if len(set(s)) != len(s):
            raise ValueError(f"repeated site in {s}")
        bad = [i for i in s if not 0 <= i < n_modes]
        if bad:
            raise ValueError(f"sites {bad} out of range for {n_modes} modes")
        object.__setattr__(self, "sites", s)
        object.__setattr__(self, "n_modes", int(n_modes))

    @classmethod
    def contiguous(cls, ell: int, n_modes: int, start: int = 0) -> "Bipartition":
        return cls(range(start, start + ell), n_modes)

    @property
    def ell(self) -> int:
        return len(self.sites)

    def majorana_indices(self) -> np.ndarray:
        s = np.asarray(self.sites, dtype=int)
        return np.stack([2 * s, 2 * s + 1], axis=1).ravel()

    def complement(self) -> "Bipartition":
        chosen = set(self.sites)
        return Bipartition([i for i in range(self.n_modes) if i not in chosen], self.n_modes)


def _as_bipartition(sites, n_modes: int) -> Bipartition:
    if isinstance(sites, Bipartition):
        if sites.n_modes != n_modes:
            raise ValueError(f"bipartition is for {sites.n_modes} modes, state has {n_modes}")
        return sites
    return Bipartition(sites, n_modes)


# --------------------------------------------------------------------------
# construction and transformation
# --------------------------------------------------------------------------

def vacuum_covariance(n_modes: int) -> CovarianceMatrix:
    """Covariance of ``|0...0>``: ``n_modes`` copies of ``[[0, 1], [-1, 0]]``."""
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    return CovarianceMatrix(np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]])))


def rainbow_covariance(n_modes: int) -> CovarianceMatrix:
    """Product of Bell pairs ``(|00> + |11>)/sqrt2`` on mirror sites ``(j, N-1-j)``."""
    if n_modes < 2 or n_modes % 2:
        raise ValueError(f"rainbow state needs an even number of modes, got {n_modes}")
    g = np.zeros((2 * n_modes, 2 * n_modes))
    for j in range(n_modes // 2):
        jb = n_modes - 1 - j
        g[2 * j, 2 * jb + 1] = 1.0
        g[2 * j + 1, 2 * jb] = 1.0
    return CovarianceMatrix(g - g.T)


def check_orthogonal(o: np.ndarray, tol: float = ORTHO_TOL) -> float:
    o = np.asarray(o, dtype=float)
    if o.ndim != 2 or o.shape[0] != o.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {o.shape}")
    defect = float(np.linalg.norm(o.T @ o - np.eye(o.shape[0])))
    if defect > tol:
        raise ValueError(f"matrix is not orthogonal: ||O^T O - I|| = {defect:.3e}")
    return defect


def conjugate(gamma: CovarianceLike, o: np.ndarray) -> CovarianceMatrix:
    """Return ``O Gamma O^T``, the covariance after the Gaussian unitary of ``O``."""
    g = as_array(gamma)
    o = np.asarray(o, dtype=float)
    if o.shape != g.shape:
        raise ValueError(f"rotation shape {o.shape} does not match covariance {g.shape}")
    check_orthogonal(o)
    return CovarianceMatrix(antisymmetrize(o @ g @ o.T))


def restrict(gamma: CovarianceLike, sites) -> np.ndarray:
    """Reduced block ``Gamma[I_A, I_A]`` for the sites of ``A``."""
    g = as_array(gamma)
    part = _as_bipartition(sites, g.shape[0] // 2)
    idx = part.majorana_indices()
    return g[np.ix_(idx, idx)]


# --------------------------------------------------------------------------
# spectra
# --------------------------------------------------------------------------

def _pair_and_clamp(values: np.ndarray, strict: bool) -> np.ndarray:
    v = np.sort(values)[::-1]
    first, second = v[0::2], v[1::2]
    gap = np.max(np.abs(first - second)) if v.size else 0.0
    if gap > PAIR_TOL:
        raise SpectrumError(f"spectrum does not come in +-pairs (mismatch {gap:.3e})")
    lam = 0.5 * (first + second)
    over = float(np.max(lam - 1.0, initial=0.0))
    if strict and over > CLAMP_TOL:
        raise SpectrumError(f"mode value exceeds 1 by {over:.3e}; input is not a valid covariance")
    return np.clip(lam, 0.0, 1.0)


def mode_spectrum(block: np.ndarray, strict: bool = True) -> np.ndarray:
    """Values ``lambda_i`` in ``[0, 1]``, descending, one per singular-value pair.

    ``strict=False`` clamps values above one silently; this is for
    deliberately perturbed blocks.
    """
    b = np.asarray(block, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] % 2:
        raise SpectrumError(f"block must be square with even size, got {b.shape}")
    if b.size == 0:
        return np.zeros(0)
    asym = float(np.max(np.abs(b + b.T)))
    if asym > RANGE_TOL:
        raise SpectrumError(f"block is not antisymmetric (max|B + B^T| = {asym:.3e})")
    return _pair_and_clamp(np.linalg.svd(b, compute_uv=False), strict)


def hermitian_mode_spectrum(igamma: np.ndarray, strict: bool = True) -> np.ndarray:
    """Same as :func:`mode_spectrum` for a complex Hermitian ``i Gamma_A``."""
    h = np.asarray(igamma)
    if h.size == 0:
        return np.zeros(0)
    return _pair_and_clamp(np.abs(np.linalg.eigvalsh(h)), strict)


# --------------------------------------------------------------------------
# functionals
# --------------------------------------------------------------------------

def _check_alpha(alpha) -> int:
    if int(alpha) != alpha or alpha < 2:
        raise ValueError(f"alpha must be an integer >= 2, got {alpha}")
    return int(alpha)


def weight(alpha: int, x):
    """Single-mode magic ``weight(alpha, x)`` for ``x = lambda**2`` in ``[0, 1]``.

    Evaluated through ``log1p``/``expm1`` on ``min(x, 1-x)`` so that values
    near both endpoints keep full relative precision. For ``alpha = 2`` this
    is ``-log2(1 - x + x**2)``.
    """
    alpha = _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise ValueError("weight is defined on [0, 1]")
    y = np.minimum(np.clip(x, 0.0, 1.0), 1.0 - np.clip(x, 0.0, 1.0))
    if alpha == 2:
        u = -y * (1.0 - y)
    else:
        u = 0.5 * (np.expm1(alpha * np.log1p(-y)) + y**alpha)
    out = np.log1p(u) / ((1.0 - alpha) * math.log(2.0))
    return out if out.ndim else float(out)


def weight_derivative_lambda(lam):
    """``d weight(2, lambda**2) / d lambda``."""
    lam = np.asarray(lam, dtype=float)
    l2 = lam * lam
    return 2 * lam * (1 - 2 * l2) / ((1 - l2 + l2 * l2) * math.log(2.0))


def fnl_from_spectrum(lambdas, alpha: int = 2) -> float:
    lam = np.asarray(lambdas, dtype=float)
    if lam.size == 0:
        return 0.0
    return float(np.sum(weight(alpha, lam * lam)))


def fnl_magic(gamma: CovarianceLike, sites, alpha: int = 2, *, check_purity: bool = True) -> float:
    """Fermionic non-local magic of a pure Gaussian state across ``A | B``.

    Parameters
    ----------
    gamma : CovarianceMatrix or ndarray
        Covariance matrix of the full state.
    sites : Bipartition or iterable of int
        The sites of ``A``.
    alpha : int
        Renyi order, integer ``>= 2``.
    check_purity : bool
        Reject mixed inputs (``||Gamma Gamma^T - I|| > 1e-8``). Disable only
        for deliberately perturbed matrices.
    """
    g = as_array(gamma)
    part = _as_bipartition(sites, g.shape[0] // 2)
    if check_purity:
        defect = float(np.max(np.abs(g @ g.T - np.eye(g.shape[0]))))
        if defect > PURITY_TOL:
            raise CovarianceError(f"state is not pure (max|GG^T - I| = {defect:.3e})")
    if part.ell == 0 or part.ell == part.n_modes:
        return 0.0
    if part.ell > part.n_modes // 2:
        part = part.complement()
    lam = mode_spectrum(restrict(g, part), strict=check_purity)
    return fnl_from_spectrum(lam, alpha)


def binary_entropy(x):
    """``-(1-x) log2(1-x) - x log2 x`` with ``0 log 0 = 0``."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(x > 0, x * np.log2(x), 0.0) - np.where(x < 1, (1 - x) * np.log2(1 - x), 0.0)
    return h if h.ndim else float(h)


def entanglement_entropy(lambdas) -> float:
    """Von Neumann entropy in bits of the reduced Gaussian state."""
    lam = np.asarray(lambdas, dtype=float)
    return float(np.sum(binary_entropy(0.5 * (1.0 + lam))))


def entanglement_energies(lambdas) -> np.ndarray:
    """Single-particle entanglement energies ``2 artanh(lambda)``; ``lambda = 1`` maps to ``inf``."""
    lam = np.asarray(lambdas, dtype=float)
    with np.errstate(divide="ignore"):
        return 2.0 * np.arctanh(np.clip(lam, 0.0, 1.0))


# --------------------------------------------------------------------------
# error propagation
# --------------------------------------------------------------------------

@lru_cache(maxsize=1)
def lipschitz_constant(resolution: float = 1e-5) -> float:
    """Max over ``lambda in [0, 1]`` of ``|d weight(2, lambda^2)/d lambda|``, by dense scan."""
    grid = np.linspace(0.0, 1.0, int(round(1.0 / resolution)) + 1)
    return float(np.max(np.abs(weight_derivative_lambda(grid))))


def fnl_error_bound(ell: int, frobenius_perturbation: float) -> float:
    """Worst-case change of the FNL when ``Gamma_A`` moves by ``frobenius_perturbation``.

    Combines the Lipschitz constant of the single-mode weight with the
    Hoffman-Wielandt inequality: ``L * sqrt(ell) * ||dGamma_A||_F``.
    """
    if ell < 0 or frobenius_perturbation < 0:
        raise ValueError("inputs must be nonnegative")
    return lipschitz_constant() * math.sqrt(ell) * float(frobenius_perturbation)


def shots_estimate(ell: int, epsilon: float, delta: float) -> int:
    """Planning figure ``ceil(ell^3 log(ell/delta) / epsilon^2)`` for shadow tomography.

    Order of magnitude only: constants of the underlying bound are unknown
    and set to one.
    """
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    if ell < 1:
        raise ValueError("ell must be >= 1")
    return int(math.ceil(ell**3 * math.log(ell / delta) / epsilon**2))


# --------------------------------------------------------------------------
# debugging serialization
# --------------------------------------------------------------------------

def matrix_to_csv(m: np.ndarray, target=None) -> str:
    """Row-major CSV, first line the dimension. Returns the text; writes it if ``target`` is given."""
    m = np.asarray(m, dtype=float)
    buf = io.StringIO()
    buf.write(f"{m.shape[0]}\n")
    for row in m:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    text = buf.getvalue()
    if target is not None:
        if isinstance(target, (str, os.PathLike)):
            with open(target, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            target.write(text)
    return text


def matrix_from_csv(source) -> np.ndarray:
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    elif hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    dim = int(lines[0])
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    m = np.array(rows, dtype=float)
    if m.shape != (dim, dim):
        raise ValueError(f"header says {dim}, body has shape {m.shape}")
    return m


__all__: Sequence[str] = [
    "Bipartition", "CovarianceError", "CovarianceMatrix", "SpectrumError",
    "antisymmetrize", "as_array", "binary_entropy", "check_orthogonal", "conjugate",
    "entanglement_energies", "entanglement_entropy", "fnl_error_bound", "fnl_from_spectrum",
    "fnl_magic", "hermitian_mode_spectrum", "lipschitz_constant", "matrix_from_csv",
    "matrix_to_csv", "mode_spectrum", "rainbow_covariance", "restrict", "shots_estimate",
    "vacuum_covariance", "weight", "weight_derivative_lambda",
]
