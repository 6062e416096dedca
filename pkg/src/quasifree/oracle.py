"""Brute-force ground truth by exact diagonalization in the spin basis.

Fermions are represented through the Jordan-Wigner string

    b_j = (prod_{l<j} sz_l) s+_j,     s+ = [[0, 1], [0, 0]],

so that ``2 b_l b_l^+ - 1 = sz_l`` and ``b_j + b_j^+ = (prod_{l<j} sz_l) sx_j``.
Site 1 is the leftmost tensor factor, so a left block is a leading factor of
the Hilbert space.  Majorana operators use 0-based indices: ``m[2j]`` is
``b_j + b_j^+`` and ``m[2j+1]`` is ``i (b_j - b_j^+)``.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .finite import FiniteChain, ground_state
from .model import ModelSpec

__all__ = [
    "MAX_SITES",
    "DegeneracyWarning",
    "ExactGroundState",
    "fermion_operators",
    "majorana_operators",
    "spin_hamiltonian",
    "exact_ground_state",
    "exact_block_entropy",
    "exact_block_entropies",
    "pairing_sum",
    "wick_check",
    "free_fermion_spectrum",
]

MAX_SITES = 12
DEGENERACY_GAP = 1e-8


class DegeneracyWarning(UserWarning):
    """The many-body ground state is (nearly) degenerate."""


_SZ = sp.csr_matrix(np.diag([1.0, -1.0]))
_SP = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
_ID = sp.identity(2, format="csr")


def _check_size(N: int, cap: int = MAX_SITES):
    if not 1 <= N <= cap:
        raise ValueError(f"exact diagonalization supports 1 <= N <= {cap}")


@lru_cache(maxsize=16)
def fermion_operators(N: int) -> tuple[sp.csr_matrix, ...]:
    """Sparse annihilators ``b_1 .. b_N`` on ``(C^2)^{\\otimes N}``."""
    _check_size(N)
    ops = []
    for j in range(N):
        factors = [_SZ] * j + [_SP] + [_ID] * (N - j - 1)
        op = factors[0]
        for f in factors[1:]:
            op = sp.kron(op, f, format="csr")
        ops.append(op)
    return tuple(ops)


@lru_cache(maxsize=16)
def majorana_operators(N: int) -> tuple[sp.csr_matrix, ...]:
    out = []
    for b in fermion_operators(N):
        bd = b.T.tocsr()
        out.append((b + bd).tocsr())
        out.append((1j * (b - bd)).tocsr())
    return tuple(out)


def spin_hamiltonian(model: ModelSpec, N: int, boundary: str = "open") -> np.ndarray:
    """Dense ``2^N x 2^N`` matrix of the quadratic Hamiltonian.

    With ``boundary="periodic"`` the wrap-around terms are built from the
    fermion operators themselves, which is the fermionic-periodic chain
    (its spin form carries a parity-dependent boundary string).
    """
    _check_size(N)
    A = model.hop_matrix(N, boundary)
    B = model.pair_matrix(N, boundary)
    b = fermion_operators(N)
    bd = [x.T.tocsr() for x in b]
    dim = 2**N
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for i in range(N):
        for j in range(N):
            if A[i, j] != 0:
                H = H + A[i, j] * (bd[i] @ b[j])
            if B[i, j] != 0:
                H = H + 0.5 * B[i, j] * (bd[i] @ bd[j]) - 0.5 * np.conj(B[i, j]) * (b[i] @ b[j])
    H = H.toarray()
    return 0.5 * (H + H.conj().T)


@dataclass(frozen=True)
class ExactGroundState:
    N: int
    energy: float
    gap: float
    psi: np.ndarray

    @property
    def degenerate(self) -> bool:
        return self.gap < DEGENERACY_GAP


def exact_ground_state(model: ModelSpec, N: int, boundary: str = "open") -> ExactGroundState:
    H = spin_hamiltonian(model, N, boundary)
    E, V = np.linalg.eigh(H)
    gap = float(E[1] - E[0]) if E.size > 1 else math.inf
    gs = ExactGroundState(N, float(E[0]), gap, V[:, 0])
    if gs.degenerate:
        warnings.warn(f"ground state degenerate within {DEGENERACY_GAP:g} (gap {gap:.2e})", DegeneracyWarning,
                      stacklevel=2)
    return gs


def _schmidt_entropy(psi: np.ndarray, N: int, L: int) -> float:
    s = np.linalg.svd(psi.reshape(2**L, 2 ** (N - L)), compute_uv=False)
    p = s**2
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def exact_block_entropy(model: ModelSpec, N: int, L: int, boundary: str = "open") -> float:
    """Entropy of the first ``L`` spins in the exact ground state."""
    if not 0 <= L <= N:
        raise ValueError("need 0 <= L <= N")
    gs = exact_ground_state(model, N, boundary)
    return _schmidt_entropy(gs.psi, N, L)


def exact_block_entropies(model: ModelSpec, N: int, boundary: str = "open") -> np.ndarray:
    """Entropies of the first ``L`` spins for ``L = 1..N-1`` from one diagonalization."""
    gs = exact_ground_state(model, N, boundary)
    return np.array([_schmidt_entropy(gs.psi, N, L) for L in range(1, N)])


def _expect(psi, ops, idx):
    v = psi
    for i in reversed(idx):
        v = ops[i] @ v
    return complex(np.vdot(psi, v))


def pairing_sum(idx: Sequence[int], two_point) -> complex:
    """Signed sum over pairings of ``two_point(a, b)`` in operator order.

    ``two_point(a, b)`` must return ``<m_a m_b>`` for positions ``a < b`` in
    the product (``a`` standing to the left).
    """
    idx = list(idx)
    if not idx:
        return 1.0 + 0j
    if len(idx) % 2:
        return 0j
    first, rest = idx[0], idx[1:]
    total = 0j
    for k, other in enumerate(rest):
        sign = -1.0 if k % 2 else 1.0
        total += sign * two_point(first, other) * pairing_sum(rest[:k] + rest[k + 1 :], two_point)
    return total


def wick_check(model: ModelSpec, N: int, tuples: Sequence[Sequence[int]], boundary: str = "open") -> float:
    """Largest deviation between exact multi-point majorana expectations and the pairing sum."""
    _check_size(N, 10)
    if any(len(t) > 6 for t in tuples):
        raise ValueError("tuples longer than 6 are not supported")
    gs = exact_ground_state(model, N, boundary)
    ops = majorana_operators(N)
    two = {}

    def g2(a, b):
        if (a, b) not in two:
            two[(a, b)] = _expect(gs.psi, ops, (a, b))
        return two[(a, b)]

    dev = 0.0
    for t in tuples:
        exact = _expect(gs.psi, ops, tuple(t))
        dev = max(dev, abs(exact - pairing_sum(t, g2)))
    return dev


def free_fermion_spectrum(model: ModelSpec, N: int, boundary: str = "open") -> np.ndarray:
    """All ``2^N`` many-body levels ``E_0 + sum_{k in S} eps_k``, sorted."""
    _check_size(N)
    st = ground_state(FiniteChain(model, N, boundary))
    levels = np.zeros(1)
    for e in st.energies:
        levels = np.concatenate([levels, levels + e])
    return np.sort(st.energy + levels)
