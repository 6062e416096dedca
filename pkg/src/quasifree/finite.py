"""Exact ground states of finite quadratic chains and finite-size scaling."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .correlations import DEFAULT_TOL, pi_blocks
from .entropy import entropy_scan, majorana_entropy
from .model import ModelSpec, symbol_components

__all__ = [
    "DegenerateGroundStateError",
    "SaturationError",
    "FiniteChain",
    "GroundState",
    "ScanResult",
    "CCFit",
    "SaturationRow",
    "ground_correlations",
    "ground_state",
    "entropy_profile",
    "cc_fit",
    "chord_length",
    "max_asymmetry",
    "saturation_entropy",
    "correlation_length",
    "symbol_correlation_length",
    "saturation_sweep",
    "thread_count",
]

ZERO_MODE_TOL = 1e-12
THREADS_ENV = "QUASIFREE_THREADS"


class DegenerateGroundStateError(RuntimeError):
    """The BdG spectrum has a zero mode, so the ground state is not unique."""


class SaturationError(RuntimeError):
    """Block entropy did not saturate within the allowed block length."""


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class FiniteChain:
    """``N``-site chain with open or fermionic-periodic (``b_{N+1} = b_1``) boundary."""

    model: ModelSpec
    N: int
    boundary: str = "open"

    def __post_init__(self):
        if self.boundary not in ("open", "periodic"):
            raise ValueError("boundary must be 'open' or 'periodic'")
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.boundary == "periodic" and self.N < 2 * self.model.n0:
            raise ValueError("periodic chain needs N >= 2 * range")

    def bdg_matrix(self) -> np.ndarray:
        """``[[A, B], [-B*, -A*]]``, so that ``H = 1/2 Psi^+ H_BdG Psi + 1/2 tr A``."""
        A = self.model.hop_matrix(self.N, self.boundary)
        B = self.model.pair_matrix(self.N, self.boundary)
        return np.block([[A, B], [-B.conj(), -A.conj()]])


@dataclass(frozen=True)
class GroundState:
    """Ground-state data of a finite chain.

    Attributes
    ----------
    C : ndarray
        Real antisymmetric ``2N x 2N`` majorana matrix, ``<m_a m_b> = delta_ab + i C_ab``.
    nambu : ndarray
        ``<Psi Psi^+>`` with ``Psi = (b_1..b_N, b_1^+..b_N^+)``.
    energies : ndarray
        Positive quasiparticle energies, ascending.
    energy : float
        Ground-state energy.
    """

    C: np.ndarray
    nambu: np.ndarray
    energies: np.ndarray
    energy: float

    @property
    def N(self) -> int:
        return self.C.shape[0] // 2

    def bdag_b(self) -> np.ndarray:
        N = self.N
        return self.nambu[N:, N:]

    def b_b(self) -> np.ndarray:
        N = self.N
        return self.nambu[:N, N:]


def _majorana_transform(N: int) -> np.ndarray:
    W = np.zeros((2 * N, 2 * N), dtype=complex)
    j = np.arange(N)
    W[2 * j, j] = 1.0
    W[2 * j, N + j] = 1.0
    W[2 * j + 1, j] = 1j
    W[2 * j + 1, N + j] = -1j
    return W


def ground_state(chain: FiniteChain) -> GroundState:
    """Diagonalize the BdG matrix and fill the negative-energy modes."""
    H = chain.bdg_matrix()
    eps, V = np.linalg.eigh(H)
    scale = max(1.0, float(np.max(np.abs(eps))))
    if np.max(np.abs(eps + eps[::-1])) > 1e-10 * scale:
        raise RuntimeError("BdG spectrum is not symmetric about zero")
    k = int(np.argmin(np.abs(eps)))
    if abs(eps[k]) < ZERO_MODE_TOL * scale:
        raise DegenerateGroundStateError(f"zero mode: BdG eigenvalue {eps[k]:.3e} within {ZERO_MODE_TOL:g}")
    pos = eps > 0
    Vp = V[:, pos]
    G = Vp @ Vp.conj().T
    W = _majorana_transform(chain.N)
    mm = W @ G @ W.conj().T
    C = ((mm - np.eye(2 * chain.N)) / 1j).real
    C = 0.5 * (C - C.T)
    trA = float(np.trace(chain.model.hop_matrix(chain.N, chain.boundary)).real)
    e_pos = np.sort(eps[pos])
    return GroundState(C, G, e_pos, 0.5 * trA - 0.5 * float(np.sum(e_pos)))


def ground_correlations(chain: FiniteChain) -> np.ndarray:
    """Majorana correlation matrix ``C`` of the ground state (sites interleaved ``x, y``)."""
    return ground_state(chain).C


@dataclass(frozen=True)
class CCFit:
    """Fit of ``S = c/6 x + const`` with ``x = ln((2N/pi) sin(pi L/N))``."""

    c: float
    const: float
    residual: float
    n_points: int


@dataclass
class ScanResult:
    """Entropies of the first ``L`` sites of a finite chain.

    ``dS[i] = S(L_i) - S(N - L_i)``.
    """

    N: int
    L: np.ndarray
    S: np.ndarray
    dS: np.ndarray
    boundary: str = "open"
    fit: CCFit | None = None

    def rows(self):
        return list(zip(self.L.tolist(), self.S.tolist(), self.dS.tolist()))


def _block_entropies(C: np.ndarray, Ls: Sequence[int]) -> np.ndarray:
    def one(L):
        return majorana_entropy(C[: 2 * L, : 2 * L])[1]

    n = thread_count()
    if n > 1 and len(Ls) > 1:
        with ThreadPoolExecutor(n) as ex:
            return np.array(list(ex.map(one, Ls)))
    return np.array([one(L) for L in Ls])


def entropy_profile(chain: FiniteChain, L_values: Sequence[int] | None = None) -> ScanResult:
    """``S(L, N)`` of the leftmost ``L`` sites and the mirror asymmetry ``dS``.

    Parameters
    ----------
    chain : FiniteChain
    L_values : sequence of int, optional
        Block lengths in ``[1, N-1]``; all of them by default.
    """
    N = chain.N
    Ls = np.arange(1, N) if L_values is None else np.asarray(sorted(set(int(v) for v in L_values)))
    if Ls.size == 0 or Ls[0] < 1 or Ls[-1] > N - 1:
        raise ValueError("block lengths must lie in [1, N-1]")
    C = ground_correlations(chain)
    need = sorted(set(Ls.tolist()) | set((N - Ls).tolist()))
    S_all = dict(zip(need, _block_entropies(C, need)))
    S = np.array([S_all[L] for L in Ls])
    dS = np.array([S_all[L] - S_all[N - L] for L in Ls])
    return ScanResult(N, Ls, S, dS, chain.boundary)


def chord_length(L, N):
    """``(2N/pi) sin(pi L / N)``."""
    return 2.0 * N / math.pi * np.sin(math.pi * np.asarray(L, dtype=float) / N)


def cc_fit(L, S, N: int, window: tuple[float, float] = (0.1, 0.9)) -> CCFit:
    """Least-squares fit of ``S(L, N) = c/6 ln chord(L, N) + const``.

    Only rows with ``window[0] <= L/N <= window[1]`` are used.
    """
    L = np.asarray(L, dtype=float)
    S = np.asarray(S, dtype=float)
    frac = L / N
    sel = (frac >= window[0]) & (frac <= window[1])
    if np.count_nonzero(sel) < 10:
        raise ValueError("cc_fit needs at least 10 rows in the window")
    x = np.log(chord_length(L[sel], N))
    X = np.column_stack([x, np.ones_like(x)])
    if np.linalg.matrix_rank(X) < 2:
        raise ValueError("rank-deficient fit window")
    coef, *_ = np.linalg.lstsq(X, S[sel], rcond=None)
    resid = S[sel] - X @ coef
    return CCFit(6.0 * float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2))), int(sel.sum()))


def max_asymmetry(result: ScanResult, window: tuple[float, float] = (0.0, 1.0)) -> float:
    """``max |dS|`` over rows with ``window[0] <= L/N <= window[1]``."""
    frac = result.L / result.N
    sel = (frac >= window[0]) & (frac <= window[1])
    if not np.any(sel):
        raise ValueError("no block lengths inside the window")
    return float(np.max(np.abs(result.dS[sel])))


# ---------------------------------------------------------------- saturation

def saturation_entropy(model: ModelSpec, tol: float = 1e-6, step: int = 10, L_max: int = 4000,
                       quad_tol: float = DEFAULT_TOL) -> tuple[float, int]:
    """Large-``L`` limit of ``S_L`` for a gapped chain.

    Increases ``L`` in chunks until ``|S_L - S_{L-step}| < tol``.

    Returns
    -------
    S_sat : float
    L : int
        Block length at which the criterion was met.
    """
    L_hi = 8 * step
    while True:
        Ls = np.arange(step, L_hi + 1, step)
        S = entropy_scan(model, Ls, quad_tol).S
        diffs = np.abs(np.diff(S))
        ok = np.nonzero(diffs < tol)[0]
        if ok.size:
            i = int(ok[0]) + 1
            return float(S[i]), int(Ls[i])
        if L_hi >= L_max:
            raise SaturationError(f"S_L not saturated up to L = {L_hi} (last step {diffs[-1]:.2e})")
        L_hi = min(2 * L_hi, L_max)


def _decay_fit(blocks: np.ndarray, lmax: int, lo: int, hi: int, floor: float):
    n = np.arange(lo, hi + 1)
    norms = np.linalg.norm(blocks[lmax + n], axis=(1, 2))
    keep = norms > floor
    n, y = n[keep], np.log(norms[keep])
    if n.size < 6:
        return None
    X = np.column_stack([np.ones_like(n, dtype=float), n, np.log(n)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(coef[1]), float(np.sqrt(np.mean((y - X @ coef) ** 2)))


def correlation_length(model: ModelSpec, window: tuple[int, int] = (10, 50), max_window: int = 2000,
                       quad_tol: float = DEFAULT_TOL) -> float:
    """Decay length of the two-point blocks ``Pi_n`` from a log-linear fit.

    ``ln ||Pi_n|| = a - n / xi - b ln n`` is fitted over ``n`` in the window.
    The window is doubled while the RMS residual exceeds ``1e-3``, and it is
    moved to ``[2 xi, 6 xi]`` of the current estimate until ``xi`` changes by
    less than 0.5%, since subleading corrections bias fits at ``n << xi``.
    Values below ``1000 quad_tol`` are quadrature noise and are discarded.
    Oscillating correlators (complex roots of the gap polynomial) are not
    described by this form; :func:`symbol_correlation_length` is exact there.
    """
    lo, hi = window
    floor = 1e3 * quad_tol
    xi_prev = None
    for _ in range(20):
        blocks = pi_blocks(model, hi, quad_tol)
        fit = _decay_fit(blocks, hi, lo, hi, floor)
        if fit is None:
            if lo == window[0] and hi >= max_window:
                raise SaturationError("too few resolvable correlation values for a decay fit")
            lo, hi = window[0], min(2 * hi, max_window)
            continue
        slope, resid = fit
        if slope >= 0:
            if hi >= max_window:
                raise SaturationError("correlations do not decay exponentially")
            hi = min(2 * hi, max_window)
            continue
        xi = -1.0 / slope
        stable = xi_prev is not None and abs(xi - xi_prev) <= 5e-3 * xi
        new_lo = max(window[0], int(2 * xi))
        new_hi = min(max_window, max(new_lo + 10, int(6 * xi)))
        if resid > 1e-3 and new_hi <= hi:
            new_hi = min(2 * hi, max_window)
        if (stable and resid <= 1e-3) or (new_lo, new_hi) == (lo, hi):
            return xi
        xi_prev, lo, hi = xi, new_lo, new_hi
    return xi


def symbol_correlation_length(model: ModelSpec) -> float:
    """``1 / min |ln|z||`` over the roots of the squared-gap polynomial ``delta``."""
    delta = symbol_components(model).delta
    c = delta.trimmed(1e-14 * delta.norm()).coeffs
    roots = np.roots(c[::-1])
    r = np.abs(np.log(np.abs(roots[np.abs(roots) > 0])))
    r = r[r > 1e-8]
    if r.size == 0:
        raise SaturationError("gap closes on the unit circle")
    return 1.0 / float(r.min())


@dataclass(frozen=True)
class SaturationRow:
    param: float
    S_sat: float
    xi: float
    xi_symbol: float
    L_used: int


def saturation_sweep(family: Callable[[float], ModelSpec], params: Sequence[float], tol: float = 1e-6,
                     step: int = 10, L_max: int = 4000) -> list[SaturationRow]:
    """Saturation entropy and correlation length along a path of gapped models."""
    rows = []
    for p in params:
        model = family(float(p))
        S, L = saturation_entropy(model, tol=tol, step=step, L_max=L_max)
        rows.append(SaturationRow(float(p), S, correlation_length(model), symbol_correlation_length(model), L))
    return rows
