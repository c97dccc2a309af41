"""Dense statevector ground truth for small systems.

Qubit ``m`` is the ``m``-th tensor factor (most significant bit of the
amplitude index), so reshaping a state to ``(2**ell, 2**(N-ell))`` splits it
into the first ``ell`` sites and the rest. Majoranas follow the Jordan-Wigner
convention ``gamma_{2m} = Z..Z X_m`` and ``gamma_{2m+1} = Z..Z Y_m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import CovarianceMatrix, antisymmetrize, check_orthogonal

MAX_DENSE_MODES = 12
MAX_STATE_MODES = 10

#: Ratio between the single-body generator and the many-body coefficients:
#: ``exp(sum h_mn gamma_m gamma_n)`` rotates Majoranas by ``expm(GENERATOR_SCALE * h)``.
GENERATOR_SCALE = 4.0

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


def _n_qubits(psi: np.ndarray) -> int:
    n = int(round(math.log2(psi.size)))
    if 1 << n != psi.size:
        raise ValueError(f"state length {psi.size} is not a power of two")
    return n


def _check_size(n: int, limit: int):
    if n > limit:
        raise ValueError(f"{n} modes exceeds the dense limit of {limit}")


def normalized(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return psi / np.linalg.norm(psi)


def basis_state(bits: Sequence[int]) -> np.ndarray:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    psi = np.zeros(1 << len(bits), dtype=complex)
    psi[idx] = 1.0
    return psi


def vacuum_state(n_modes: int) -> np.ndarray:
    return basis_state([0] * n_modes)


# --------------------------------------------------------------------------
# Majorana operators
# --------------------------------------------------------------------------

def jw_majorana(n_modes: int, j: int) -> np.ndarray:
    """Dense ``2^N x 2^N`` matrix of Majorana ``j`` (zero-based, ``0 <= j < 2N``)."""
    _check_size(n_modes, MAX_DENSE_MODES)
    if not 0 <= j < 2 * n_modes:
        raise ValueError(f"Majorana index {j} out of range for {n_modes} modes")
    site, kind = divmod(j, 2)
    factors = [_Z] * site + [_Y if kind else _X] + [_I2] * (n_modes - site - 1)
    out = np.array([[1.0 + 0j]])
    for f in factors:
        out = np.kron(out, f)
    return out


def _bit_tables(n: int):
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    # parity of all bits strictly left of site m
    prefix = np.concatenate([np.zeros((idx.size, 1), dtype=int), np.cumsum(bits, axis=1)[:, :-1]], axis=1)
    return idx, bits, prefix & 1


def apply_majorana(psi: np.ndarray, j: int) -> np.ndarray:
    """``gamma_j |psi>`` by bit manipulation."""
    n = _n_qubits(psi)
    idx, bits, parity = _bit_tables(n)
    site, kind = divmod(j, 2)
    sign = 1 - 2 * parity[:, site]
    if kind:
        sign = sign * np.where(bits[:, site] == 0, 1j, -1j)
    out = np.empty_like(psi)
    out[idx ^ (1 << (n - 1 - site))] = sign * psi
    return out


def covariance_from_state(psi) -> CovarianceMatrix:
    """Two-point Majorana data ``Gamma_mn = -i <gamma_m gamma_n>`` (``m != n``).

    Gaussian inputs give a pure covariance; other states give the raw
    two-point matrix, which may be mixed.
    """
    psi = normalized(psi)
    n = _n_qubits(psi)
    _check_size(n, MAX_STATE_MODES)
    phi = np.stack([apply_majorana(psi, j) for j in range(2 * n)], axis=1)
    g = np.real(-1j * (phi.conj().T @ phi))
    np.fill_diagonal(g, 0.0)
    return CovarianceMatrix(antisymmetrize(g), validate=False)


# --------------------------------------------------------------------------
# Gaussian unitaries
# --------------------------------------------------------------------------

def quadratic_form(h: np.ndarray) -> np.ndarray:
    """Dense ``sum_mn h_mn gamma_m gamma_n`` for antisymmetric ``h``."""
    h = np.asarray(h, dtype=float)
    n = h.shape[0] // 2
    if np.max(np.abs(h + h.T), initial=0.0) > 1e-12:
        raise ValueError("h must be antisymmetric")
    gam = [jw_majorana(n, j) for j in range(2 * n)]
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for m in range(2 * n):
        for k in range(m + 1, 2 * n):
            if h[m, k] != 0.0:
                out += 2.0 * h[m, k] * (gam[m] @ gam[k])
    return out


def exp_antihermitian(a: np.ndarray) -> np.ndarray:
    """``exp(A)`` for anti-Hermitian ``A`` via the eigenbasis of ``iA``."""
    evals, vecs = np.linalg.eigh(1j * a)
    return (vecs * np.exp(-1j * evals)) @ vecs.conj().T


def gaussian_unitary_dense(h: np.ndarray) -> np.ndarray:
    """Many-body unitary ``exp(sum_mn h_mn gamma_m gamma_n)``.

    Its adjoint action rotates Majoranas by ``expm(GENERATOR_SCALE * h)``.
    """
    h = np.asarray(h, dtype=float)
    _check_size(h.shape[0] // 2, MAX_STATE_MODES)
    return exp_antihermitian(quadratic_form(h))


def orthogonal_log(q: np.ndarray) -> np.ndarray:
    """Real antisymmetric ``A`` with ``expm(A) = Q`` for ``Q`` in SO(n)."""
    q = np.asarray(q, dtype=float)
    t, z = sla.schur(q, output="real")
    n = q.shape[0]
    gen = np.zeros((n, n))
    minus = []
    i = 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > 1e-12:
            ang = math.atan2(t[i, i + 1], t[i, i])
            gen[i, i + 1], gen[i + 1, i] = ang, -ang
            i += 2
        else:
            if t[i, i] < 0:
                minus.append(i)
            i += 1
    if len(minus) % 2:
        raise ValueError("matrix has determinant -1; no real logarithm")
    for a, b in zip(minus[0::2], minus[1::2]):
        gen[a, b], gen[b, a] = math.pi, -math.pi
    return antisymmetrize(z @ gen @ z.T)


def _reflection(n_modes: int) -> np.ndarray:
    r = -np.ones(2 * n_modes)
    r[0] = 1.0
    return np.diag(r)


def gaussian_state(o: np.ndarray) -> np.ndarray:
    """Statevector ``U_O |0...0>`` whose covariance is ``O Gamma_0 O^T``.

    Orthogonal matrices with ``det O = -1`` are realised as ``U_Q X_0`` where
    ``X_0`` implements ``diag(1, -1, ..., -1)`` on the Majoranas.
    """
    o = np.asarray(o, dtype=float)
    check_orthogonal(o, 1e-8)
    n = o.shape[0] // 2
    _check_size(n, MAX_STATE_MODES)
    psi = vacuum_state(n)
    if np.linalg.det(o) < 0:
        o = o @ _reflection(n)
        psi = apply_majorana(psi, 0)
    h = orthogonal_log(o) / GENERATOR_SCALE
    return gaussian_unitary_dense(h) @ psi


# --------------------------------------------------------------------------
# stabilizer entropy
# --------------------------------------------------------------------------

def fwht(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along ``axis`` (length a power of two)."""
    a = np.array(np.moveaxis(np.asarray(a), axis, -1), order="C", copy=True)
    n = a.shape[-1]
    lead = a.shape[:-1]
    h = 1
    while h < n:
        v = a.reshape(*lead, n // (2 * h), 2, h)
        x, y = v[..., 0, :].copy(), v[..., 1, :].copy()
        v[..., 0, :] = x + y
        v[..., 1, :] = x - y
        h *= 2
    return np.moveaxis(a, -1, axis)


def _xor_table(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return idx[:, None] ^ idx[None, :]


def pauli_expectations(psi, method: str = "fwht") -> np.ndarray:
    """``|<P_{x,z}>|`` for every Pauli string, as a ``2^N x 2^N`` array over ``(x, z)``.

    Row ``x`` holds the X-support bitmask, column ``z`` the Z-support.
    """
    psi = np.asarray(psi, dtype=complex)
    n = _n_qubits(psi)
    v = psi[_xor_table(n)].conj() * psi[None, :]
    if method == "fwht":
        w = fwht(v, axis=1)
    elif method == "direct":
        idx = np.arange(1 << n)
        pop = np.vectorize(lambda k: bin(k).count("1"))(idx[:, None] & idx[None, :])
        w = v @ (1 - 2 * (pop & 1))
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.abs(w)


def stabilizer_entropy(psi, alpha: int = 2, method: str = "fwht") -> float:
    """Stabilizer Renyi entropy ``log2(zeta_alpha) / (1 - alpha)``.

    ``method="direct"`` sums over all ``4^N`` Pauli strings with an explicit
    sign table; ``"fwht"`` gets the same sums from Walsh-Hadamard transforms.
    """
    if int(alpha) != alpha or alpha < 2:
        raise ValueError("alpha must be an integer >= 2")
    psi = normalized(psi)
    n = _n_qubits(psi)
    _check_size(n, MAX_STATE_MODES)
    w = pauli_expectations(psi, method)
    zeta = float(np.sum(w ** (2 * alpha))) / (1 << n)
    return max(0.0, math.log2(zeta) / (1 - alpha))


# --------------------------------------------------------------------------
# canonical form and local unitaries
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CanonicalSpec:
    """Pair angles ``thetas`` on ``total_sites`` qubits; pair ``i`` sits on ``(i, len(thetas) + i)``."""

    thetas: tuple
    total_sites: int

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        if 2 * len(self.thetas) > self.total_sites:
            raise ValueError("need at least two sites per pair")


def canonical_state(spec: CanonicalSpec) -> np.ndarray:
    """``prod_i (cos t_i |00> + sin t_i |11>) |0>^(N - 2 ell)``."""
    n, ell = spec.total_sites, len(spec.thetas)
    _check_size(n, MAX_DENSE_MODES)
    psi = np.zeros(1 << n, dtype=complex)
    c = np.cos(spec.thetas)
    s = np.sin(spec.thetas)
    for pattern in range(1 << ell):
        amp = 1.0
        idx = 0
        for i in range(ell):
            bit = (pattern >> (ell - 1 - i)) & 1
            amp *= s[i] if bit else c[i]
            if bit:
                idx |= 1 << (n - 1 - i)
                idx |= 1 << (n - 1 - (ell + i))
        psi[idx] += amp
    return psi


def canonical_purity(lambdas) -> float:
    """Stabilizer purity ``prod (1 - l^2 + l^4)`` of the canonical pair product."""
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam < -1e-12) or np.any(lam > 1 + 1e-12):
        raise ValueError("lambdas must lie in [0, 1]")
    l2 = lam * lam
    return float(np.prod(1.0 - l2 + l2 * l2))


def permute_qubits(psi: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new qubit ``k`` is old qubit ``order[k]``."""
    n = _n_qubits(psi)
    return np.asarray(psi).reshape((2,) * n).transpose(order).reshape(-1)


def _split(psi: np.ndarray, sites) -> tuple[np.ndarray, list[int]]:
    n = _n_qubits(psi)
    if isinstance(sites, (int, np.integer)):
        sites = list(range(int(sites)))
    sites = list(getattr(sites, "sites", sites))
    order = sites + [q for q in range(n) if q not in sites]
    return permute_qubits(psi, order), order


def apply_local_unitaries(psi, u_a: np.ndarray, u_b: np.ndarray, sites) -> np.ndarray:
    """``(U_A (x) U_B) |psi>`` for ``A = sites`` (an int means the first ``sites`` qubits)."""
    psi = np.asarray(psi, dtype=complex)
    moved, order = _split(psi, sites)
    da, db = u_a.shape[0], u_b.shape[0]
    if da * db != psi.size:
        raise ValueError(f"unitary dimensions {da} x {db} do not match state of size {psi.size}")
    for u in (u_a, u_b):
        if np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) > 1e-8:
            raise ValueError("local factor is not unitary")
    out = (u_a @ moved.reshape(da, db) @ u_b.T).reshape(-1)
    return permute_qubits(out, np.argsort(order))


# --------------------------------------------------------------------------
# spin-chain fixture
# --------------------------------------------------------------------------

def xy_hamiltonian_sparse(n: int, mu: float, eta: float = 1.0) -> sp.csr_matrix:
    """Periodic XY chain ``-sum[(1+eta)/2 XX + (1-eta)/2 YY + mu Z]``."""
    dim = 1 << n
    idx = np.arange(dim)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    diag = -mu * np.sum(1 - 2 * bits, axis=1).astype(float)
    rows, cols, vals = [idx], [idx], [diag]
    for j in range(n):
        k = (j + 1) % n
        flip = idx ^ (1 << (n - 1 - j)) ^ (1 << (n - 1 - k))
        # XX flips both bits; YY adds -(-1)^(b_j + b_k)
        yy = -((-1.0) ** (bits[:, j] + bits[:, k]))
        coeff = -(0.5 * (1 + eta) + 0.5 * (1 - eta) * yy)
        rows.append(flip)
        cols.append(idx)
        vals.append(coeff)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))


def ising_ground_state_dense(n: int, mu: float, eta: float = 1.0) -> tuple[np.ndarray, float]:
    """Lowest even-parity eigenvector of the periodic chain, and its energy.

    The search is restricted to the even fermion-parity sector, which for
    ``n`` divisible by 4 holds the antiperiodic (Neveu-Schwarz) ground state;
    in the ordered phase the two parity sectors are nearly degenerate.
    """
    _check_size(n, MAX_DENSE_MODES)
    h = xy_hamiltonian_sparse(n, mu, eta)
    idx = np.arange(1 << n)
    even = np.array([bin(i).count("1") % 2 == 0 for i in idx])
    sub = h[even][:, even]
    if sub.shape[0] <= 1024:
        evals, evecs = np.linalg.eigh(sub.toarray())
        e0, v0 = evals[0], evecs[:, 0]
    else:
        evals, evecs = spla.eigsh(sub, k=1, which="SA", tol=1e-12)
        e0, v0 = evals[0], evecs[:, 0]
    psi = np.zeros(1 << n, dtype=complex)
    psi[even] = v0
    return psi / np.linalg.norm(psi), float(e0)
