"""Brute-force minimization of the stabilizer entropy over local unitaries.

For a state ``|psi>`` split into ``A | B`` the cost is
``C(theta) = M_alpha((U_A (x) U_B) |psi>)`` with ``U = exp(-i sum_j theta_j tau_j)``.
Two generator sets are provided:

``generic``
    all non-identity Pauli strings on the subsystem, i.e. a basis of su(d);
``gaussian``
    ``tau = 2i gamma_m gamma_n`` (``m < n``) built from the subsystem's own
    Jordan-Wigner Majoranas, so ``U = exp(sum h_mn gamma_m gamma_n)`` with
    ``h_mn = theta_mn``.

The gradient is available by forward differences or analytically (Wirtinger
derivative of the Pauli sums, pushed through the matrix exponential with the
Daleckii-Krein formula). L-BFGS from :mod:`scipy.optimize` does the descent.
"""

from __future__ import annotations

import copy
import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from . import oracle
from . import rng as rngmod


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    unitary_class: str = "gaussian"
    restarts: int = 10
    fd_step: float = 1e-8
    convergence: float = 1e-10
    max_iterations: int = 5000
    stage_iterations: int = 100
    gradient: str = "analytic"
    alpha: int = 2

    def __post_init__(self):
        if self.unitary_class not in ("generic", "gaussian"):
            raise ValueError("unitary_class must be 'generic' or 'gaussian'")
        if self.restarts < 1 or self.max_iterations < 1 or self.stage_iterations < 1:
            raise ValueError("restarts and max_iterations must be positive")
        if not 0.0 < self.fd_step < 1e-4:
            raise ValueError("fd_step must lie in (0, 1e-4)")
        if self.gradient not in ("analytic", "fd"):
            raise ValueError("gradient must be 'analytic' or 'fd'")
        if int(self.alpha) != self.alpha or self.alpha < 2:
            raise ValueError("alpha must be an integer >= 2")


@dataclass
class VariationalResult:
    """Best value over restarts.

    ``params`` holds the best local unitaries ``(U_A, U_B)`` in the A-first
    qubit order; they compose all stages of the winning restart.
    """

    value: float
    params: tuple
    converged: bool
    restart_values: list = field(default_factory=list)
    iterations: int = 0
    message: str = ""


# --------------------------------------------------------------------------
# generator sets
# --------------------------------------------------------------------------

@lru_cache(maxsize=16)
def pauli_generators(n_qubits: int) -> np.ndarray:
    """All ``4^n - 1`` non-identity Pauli strings, shape ``(4^n - 1, 2^n, 2^n)``."""
    singles = [oracle._I2, oracle._X, oracle._Y, oracle._Z]
    out = []
    for word in itertools.product(range(4), repeat=n_qubits):
        if not any(word):
            continue
        m = np.array([[1.0 + 0j]])
        for w in word:
            m = np.kron(m, singles[w])
        out.append(m)
    arr = np.array(out)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=16)
def gaussian_generators(n_qubits: int) -> np.ndarray:
    """``2i gamma_m gamma_n`` for ``m < n`` on ``n_qubits`` modes."""
    gam = [oracle.jw_majorana(n_qubits, j) for j in range(2 * n_qubits)]
    out = [2j * gam[m] @ gam[n] for m in range(2 * n_qubits) for n in range(m + 1, 2 * n_qubits)]
    arr = np.array(out)
    arr.setflags(write=False)
    return arr


def generators(unitary_class: str, n_qubits: int) -> np.ndarray:
    if n_qubits == 0:
        return np.zeros((0, 1, 1), dtype=complex)
    return pauli_generators(n_qubits) if unitary_class == "generic" else gaussian_generators(n_qubits)


# --------------------------------------------------------------------------
# stabilizer entropy and its Wirtinger gradient
# --------------------------------------------------------------------------

def _pauli_transform(psi: np.ndarray) -> np.ndarray:
    n = oracle._n_qubits(psi)
    v = psi[oracle._xor_table(n)].conj() * psi[None, :]
    return oracle.fwht(v, axis=1)


def stabilizer_entropy_grad(psi: np.ndarray, alpha: int = 2) -> tuple[float, np.ndarray]:
    """``M_alpha(psi)`` and ``dM / d conj(psi)`` for a normalized ``psi``.

    Returns the raw value (which may be ``-1e-16`` for stabilizer states).
    """
    n = oracle._n_qubits(psi)
    w = _pauli_transform(psi)
    aw = np.abs(w)
    zeta = float(np.sum(aw ** (2 * alpha))) / (1 << n)
    value = math.log2(zeta) / (1 - alpha)
    pw = alpha * aw ** (2 * alpha - 2)
    ha = oracle.fwht(pw * w.conj(), axis=1)
    hb = oracle.fwht(pw * w, axis=1)
    xor = oracle._xor_table(n)
    g = np.sum(psi[xor] * (np.take_along_axis(ha, xor, axis=1) + hb), axis=0)
    scale = 1.0 / ((1 << n) * zeta * (1 - alpha) * math.log(2.0))
    return value, scale * g


# --------------------------------------------------------------------------
# cost function
# --------------------------------------------------------------------------

def _expm_herm(k: np.ndarray):
    lam, v = np.linalg.eigh(k)
    u = (v * np.exp(-1j * lam)) @ v.conj().T
    return u, lam, v


def _divided_differences(lam: np.ndarray) -> np.ndarray:
    """``(e^{-i a} - e^{-i b}) / (a - b)``, written so that ``a -> b`` is stable."""
    d = lam[:, None] - lam[None, :]
    s = lam[:, None] + lam[None, :]
    return -1j * np.exp(-0.5j * s) * np.sinc(d / (2 * math.pi))


def _param_gradient(m: np.ndarray, lam: np.ndarray, v: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """``d/d theta_j 2 Re tr(U M)`` for ``U = exp(-i sum theta tau)``."""
    phi = _divided_differences(lam)
    z = v @ ((v.conj().T @ m @ v) * phi.T) @ v.conj().T
    return 2.0 * np.real(np.einsum("jab,ba->j", taus, z))


class LocalUnitaryCost:
    """Cost ``M_alpha`` of ``(U_A (x) U_B)|psi>`` as a function of generator angles."""

    def __init__(self, psi, sites, unitary_class: str = "gaussian", alpha: int = 2):
        psi = oracle.normalized(psi)
        n = oracle._n_qubits(psi)
        if isinstance(sites, (int, np.integer)):
            sites = list(range(int(sites)))
        sites = list(getattr(sites, "sites", sites))
        moved, _ = oracle._split(psi, sites)
        self.n_a = len(sites)
        self.n_b = n - self.n_a
        self.da, self.db = 1 << self.n_a, 1 << self.n_b
        # the cost is invariant under qubit relabeling, so work in the A-first order throughout
        self.psi = moved.reshape(self.da, self.db)
        self.alpha = int(alpha)
        self.tau_a = generators(unitary_class, self.n_a)
        self.tau_b = generators(unitary_class, self.n_b)
        self.size = self.tau_a.shape[0] + self.tau_b.shape[0]

    def copy(self) -> "LocalUnitaryCost":
        out = copy.copy(self)
        out.psi = self.psi.copy()
        return out

    def _unitaries(self, theta):
        na = self.tau_a.shape[0]
        ka = np.tensordot(theta[:na], self.tau_a, axes=1) if na else np.zeros((self.da, self.da))
        kb = np.tensordot(theta[na:], self.tau_b, axes=1) if self.tau_b.shape[0] else np.zeros((self.db, self.db))
        return _expm_herm(ka), _expm_herm(kb)

    def evolved(self, theta) -> np.ndarray:
        (ua, _, _), (ub, _, _) = self._unitaries(np.asarray(theta, dtype=float))
        return (ua @ self.psi @ ub.T).reshape(-1)

    def __call__(self, theta) -> float:
        psi = self.evolved(theta)
        w = np.abs(_pauli_transform(psi))
        zeta = float(np.sum(w ** (2 * self.alpha))) / psi.size
        return math.log2(zeta) / (1 - self.alpha)

    def value_and_grad(self, theta) -> tuple[float, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        (ua, la, va), (ub, lb, vb) = self._unitaries(theta)
        out = ua @ self.psi @ ub.T
        value, g = stabilizer_entropy_grad(out.reshape(-1), self.alpha)
        gm = g.reshape(self.da, self.db).conj().T  # G^dagger
        m_a = self.psi @ ub.T @ gm
        m_b = (gm @ ua @ self.psi).T
        grad = np.concatenate([
            _param_gradient(m_a, la, va, self.tau_a) if self.tau_a.shape[0] else np.zeros(0),
            _param_gradient(m_b, lb, vb, self.tau_b) if self.tau_b.shape[0] else np.zeros(0),
        ])
        return value, grad

    def fd_value_and_grad(self, theta, step: float = 1e-8) -> tuple[float, np.ndarray]:
        """Forward differences with step ``step``."""
        theta = np.asarray(theta, dtype=float)
        f0 = self(theta)
        grad = np.empty(theta.size)
        for j in range(theta.size):
            t = theta.copy()
            t[j] += step
            grad[j] = (self(t) - f0) / step
        return f0, grad


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

def _one_restart(cost: LocalUnitaryCost, cfg: OptimizerConfig, seed: int, index: int):
    """One restart: L-BFGS in stages, folding each stage's unitaries into the state.

    Stage ``s`` minimizes over ``exp(-i theta . tau)`` applied to the state
    produced by stages ``< s``; the first stage starts from the random
    angles, later ones from ``theta = 0`` where the exponential map is well
    conditioned. The restart has converged once a full stage lowers the
    cost by less than ``cfg.convergence``.
    """
    cost = cost.copy()
    theta = rngmod.stream(seed, index).uniform(0.0, 2.0 * math.pi, size=cost.size)
    if cfg.gradient == "analytic":
        fun = cost.value_and_grad
    else:
        def fun(t):
            return cost.fd_value_and_grad(t, cfg.fd_step)
    u_a, u_b = np.eye(cost.da, dtype=complex), np.eye(cost.db, dtype=complex)
    prev, used, ok, msg = math.inf, 0, False, ""
    while used < cfg.max_iterations:
        res = minimize(fun, theta, jac=True, method="L-BFGS-B",
                       options=dict(maxiter=min(cfg.stage_iterations, cfg.max_iterations - used),
                                    ftol=0.0, gtol=1e-14, maxcor=30, maxls=50))
        used += max(1, int(res.nit))
        (sa, _, _), (sb, _, _) = cost._unitaries(np.asarray(res.x))
        cost.psi = sa @ cost.psi @ sb.T
        u_a, u_b = sa @ u_a, sb @ u_b
        theta = np.zeros(cost.size)
        value = float(res.fun)
        if prev - value < cfg.convergence:
            ok, msg = True, f"stage improvement below {cfg.convergence:g}"
            break
        prev = value
    else:
        msg = f"iteration limit {cfg.max_iterations} reached"
    return min(prev, value), (u_a, u_b), ok, used, msg


def variational_min(psi, sites, cfg: OptimizerConfig | None = None, seed: int = 0,
                    threads: int = 1) -> VariationalResult:
    """Minimum of ``M_alpha`` over local unitaries of the chosen class, best of ``cfg.restarts``.

    Restart ``i`` starts from angles uniform in ``[0, 2 pi)`` drawn from stream
    ``(seed, i)``. If the best restart did not meet the convergence test the
    best-so-far value is returned with ``converged=False`` and a
    :class:`ConvergenceWarning`.
    """
    cfg = cfg or OptimizerConfig()
    cost = LocalUnitaryCost(psi, sites, cfg.unitary_class, cfg.alpha)
    if cost.size == 0:
        v = max(0.0, cost(np.zeros(0)))
        return VariationalResult(v, (np.eye(cost.da), np.eye(cost.db)), True, [v], 0, "no parameters")
    def job(i):
        return _one_restart(cost, cfg, seed, i)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(job, range(cfg.restarts)))
    else:
        runs = [job(i) for i in range(cfg.restarts)]
    best = min(range(len(runs)), key=lambda i: runs[i][0])
    value, params, ok, used, msg = runs[best]
    if not ok:
        warnings.warn(f"best restart did not converge: {msg}", ConvergenceWarning, stacklevel=2)
    return VariationalResult(max(0.0, value), params, ok, [r[0] for r in runs],
                             sum(r[3] for r in runs), msg)
