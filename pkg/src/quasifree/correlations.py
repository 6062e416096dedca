"""Ground-state two-point functions of infinite and periodic finite chains.

Majorana operators are ``m_{2j-1} = b_j + b_j^+`` and ``m_{2j} = i (b_j - b_j^+)``,
and ``<m_a m_b> = delta_ab + i C_ab`` with ``C`` real antisymmetric.  For an
infinite chain ``C`` is block Toeplitz: the 2x2 block between sites ``j`` and
``l`` is ``Pi_{j-l}`` with

    Pi_l = 1/(2 pi) int exp(-i l t) phi(t) dt,
    phi  = i M + i P / sqrt(delta) * (b_a sx - a_s sy - b_s sz).

``M`` and ``P`` are the odd and even parts of ``sign(Lambda)``; they jump at
the zeros of the dispersion, so every integral is split there.
"""
from __future__ import annotations

import math
import threading
import warnings
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_legendre

from .model import (
    TWO_PI,
    DegenerateModelError,
    ModelSpec,
    SymbolComponents,
    TrigPoly,
    classify,
    symbol_components,
    wrap_angle,
)

__all__ = [
    "OCCUPY_NEGATIVE_ENERGY",
    "NumericalQualityWarning",
    "QuadratureError",
    "CorrelationBlock",
    "FiniteCorrelations",
    "majorana_symbol",
    "pi_block",
    "pi_blocks",
    "assemble_block_toeplitz",
    "correlation_matrix",
    "gauge_kernel",
    "gauge_occupied_intervals",
    "finite_correlations",
    "real_zeros",
]

# Ground-state filling convention: Bogoliubov modes with negative energy are
# occupied.  Flipping it maps every correlation function to its complement;
# the exact-diagonalization tests pin it down.
OCCUPY_NEGATIVE_ENERGY = True
_FILL = 1.0 if OCCUPY_NEGATIVE_ENERGY else -1.0

DEFAULT_TOL = 1e-12


class NumericalQualityWarning(UserWarning):
    """A numerical self-check exceeded its tolerance."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge."""


@dataclass(frozen=True)
class CorrelationBlock:
    """2x2 block ``Pi_l`` of the infinite-chain majorana correlation matrix."""

    l: int
    entries: np.ndarray


def majorana_symbol(comp: SymbolComponents, theta) -> np.ndarray:
    """Matrix symbol ``phi(theta)``, shape ``theta.shape + (2, 2)``."""
    s = comp.sample(theta)
    root = np.sqrt(s.delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(root > 0, s.p_step / root, 0.0)
    out = np.empty(np.shape(s.theta) + (2, 2), dtype=complex)
    out[..., 0, 0] = 1j * (s.m_step - w * s.b_s)
    out[..., 1, 1] = 1j * (s.m_step + w * s.b_s)
    out[..., 0, 1] = w * (-s.a_s + 1j * s.b_a)
    out[..., 1, 0] = w * (s.a_s + 1j * s.b_a)
    return _FILL * out


def _pieces(breaks: np.ndarray) -> list[tuple[float, float]]:
    """Cyclic partition of the circle at the sorted break angles."""
    if breaks.size == 0:
        return [(-math.pi, math.pi)]
    b = np.sort(breaks)
    ends = np.append(b[1:], b[0] + TWO_PI)
    return [(float(x), float(y)) for x, y in zip(b, ends) if y - x > 1e-15]


def _gl_piece(func, a, b, offsets, n):
    x, w = roots_legendre(n)
    half = 0.5 * (b - a)
    theta = 0.5 * (a + b) + half * x
    vals = func(theta).reshape(n, -1)
    phase = np.exp(-1j * np.multiply.outer(offsets, theta)) * (half * w)
    scale = float(np.max(np.abs(vals))) * (b - a) if vals.size else 0.0
    return phase @ vals, scale


def fourier_coefficients(func, breaks, offsets, tol=DEFAULT_TOL, max_nodes=1 << 16):
    """``1/(2 pi) int exp(-i l t) func(t) dt`` for each ``l`` in ``offsets``.

    ``func`` maps an array of angles to values of shape ``(n, ...)``; it must
    be smooth between consecutive ``breaks``.  Each piece is integrated with
    Gauss-Legendre rules of increasing order until two successive rules
    agree to ``tol``, or to the rounding floor ``64 eps sqrt(n)`` times the
    size of the piece integral when that is larger.
    """
    offsets = np.asarray(offsets)
    lmax = int(np.max(np.abs(offsets))) if offsets.size else 0
    total = None
    for a, b in _pieces(np.asarray(breaks, dtype=float)):
        n = max(24, int(0.55 * (b - a) * lmax) + 24)
        prev, _ = _gl_piece(func, a, b, offsets, n)
        while True:
            n2 = n + n // 2
            cur, scale = _gl_piece(func, a, b, offsets, n2)
            err = np.max(np.abs(cur - prev)) / TWO_PI if cur.size else 0.0
            floor = 64.0 * np.finfo(float).eps * math.sqrt(n2) * scale / TWO_PI
            n, prev = n2, cur
            if err <= max(tol, floor):
                break
            if n > max_nodes:
                raise QuadratureError(
                    f"no convergence on [{a:.6g}, {b:.6g}] with {n} nodes (error {err:.2e} > {tol:.1e})"
                )
        total = prev if total is None else total + prev
    return total / TWO_PI


def _breakpoints(model: ModelSpec) -> np.ndarray:
    point = classify(model)
    if point.degenerate:
        raise DegenerateModelError("flat band: the dispersion vanishes on an interval; ground state is degenerate")
    z = np.asarray(point.dispersion_zeros, dtype=float)
    allz = np.concatenate([z, wrap_angle(-z)]) if z.size else z
    out: list[float] = []
    for v in np.sort(allz):
        if not out or v - out[-1] > 1e-13:
            out.append(float(v))
    return np.asarray(out)


class _BlockTable:
    """Blocks ``Pi_l`` for ``|l| <= lmax``, extended on demand."""

    def __init__(self, model: ModelSpec, tol: float):
        self.model = model
        self.tol = tol
        self.comp = symbol_components(model)
        self.breaks = _breakpoints(model)
        self.lmax = -1
        self.blocks = np.zeros((0, 2, 2), dtype=complex)
        self.lock = threading.Lock()

    def _compute(self, offsets):
        func = lambda t: majorana_symbol(self.comp, t)
        return fourier_coefficients(func, self.breaks, offsets, self.tol).reshape(-1, 2, 2)

    def get(self, lmax: int) -> np.ndarray:
        with self.lock:
            if lmax > self.lmax:
                old = self.lmax
                if old < 0:
                    new = self._compute(np.arange(-lmax, lmax + 1))
                    self.blocks = new
                else:
                    lo = self._compute(np.arange(-lmax, -old))
                    hi = self._compute(np.arange(old + 1, lmax + 1))
                    self.blocks = np.concatenate([lo, self.blocks, hi])
                self.lmax = lmax
            c = self.lmax
            return self.blocks[c - lmax : c + lmax + 1]


_CACHE: "OrderedDict[tuple, _BlockTable]" = OrderedDict()
_CACHE_LOCK = threading.Lock()
_CACHE_SIZE = 32


def _table(model: ModelSpec, tol: float) -> _BlockTable:
    key = (model, float(tol))
    with _CACHE_LOCK:
        tab = _CACHE.get(key)
        if tab is not None:
            _CACHE.move_to_end(key)
            return tab
    tab = _BlockTable(model, tol)
    with _CACHE_LOCK:
        tab = _CACHE.setdefault(key, tab)
        while len(_CACHE) > _CACHE_SIZE:
            _CACHE.popitem(last=False)
    return tab


def _check_tol(tol):
    if not 0.0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")


def pi_blocks(model: ModelSpec, lmax: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Blocks ``Pi_l`` for ``l = -lmax..lmax`` as an array ``(2 lmax + 1, 2, 2)``."""
    _check_tol(tol)
    return _table(model, tol).get(int(lmax))


def pi_block(model: ModelSpec, l: int, tol: float = DEFAULT_TOL) -> CorrelationBlock:
    """Single block ``Pi_l`` of the infinite-chain correlation matrix."""
    blocks = pi_blocks(model, abs(l), tol)
    return CorrelationBlock(int(l), blocks[l + abs(l)].copy())


def assemble_block_toeplitz(blocks: np.ndarray, L: int) -> tuple[np.ndarray, float]:
    """Assemble ``C_L`` from blocks ``Pi_{-(L-1)} .. Pi_{L-1}``.

    Returns the antisymmetrized real matrix and the defect
    ``max |C + C^T|`` of the raw assembly (imaginary residue included).
    """
    lmax = (blocks.shape[0] - 1) // 2
    if lmax < L - 1:
        raise ValueError("not enough blocks for the requested size")
    idx = np.subtract.outer(np.arange(L), np.arange(L)) + lmax
    raw = blocks[idx].transpose(0, 2, 1, 3).reshape(2 * L, 2 * L)
    defect = max(float(np.max(np.abs(raw + raw.T))), float(np.max(np.abs(raw.imag))))
    C = raw.real
    return 0.5 * (C - C.T), defect


def correlation_matrix(model: ModelSpec, L: int, tol: float = DEFAULT_TOL, *, return_defect: bool = False):
    """Real antisymmetric ``2L x 2L`` majorana correlation matrix of ``L`` sites.

    Site ``j`` carries rows ``2j`` (``b + b^+``) and ``2j+1`` (``i(b - b^+)``).
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    C, defect = assemble_block_toeplitz(pi_blocks(model, L - 1, tol), L)
    if defect > 1e-8:
        warnings.warn(f"correlation matrix antisymmetry defect {defect:.2e}", NumericalQualityWarning, stacklevel=2)
    return (C, defect) if return_defect else C


ROOT_CLUSTER = 1e-6


def real_zeros(poly: TrigPoly) -> tuple[list[float], list[float]]:
    """Sign changes and touchings of a real trigonometric polynomial.

    Candidates come from the companion-matrix roots on the unit circle; sign
    changes are then polished by bracketing.  Returns angles in ``[-pi, pi)``.
    """
    f = lambda t: float(poly(t).real)
    cand = poly.unit_circle_roots(radius_tol=1e-4)
    if cand.size == 0:
        return [], []
    # a root of multiplicity k is split by about eps^(1/k); merge such clusters
    clusters: list[list[float]] = []
    for c in np.sort(cand):
        if clusters and c - clusters[-1][-1] <= ROOT_CLUSTER:
            clusters[-1].append(float(c))
        else:
            clusters.append([float(c)])
    if len(clusters) > 1 and clusters[0][0] + TWO_PI - clusters[-1][-1] <= ROOT_CLUSTER:
        clusters[0] = [v - TWO_PI for v in clusters.pop()] + clusters[0]
    pts = [float(np.mean(c)) for c in clusters]
    n = len(pts)
    ext = pts + [pts[0] + TWO_PI]
    mids = [0.5 * (ext[i] + ext[i + 1]) for i in range(n)]
    signs = [np.sign(f(m)) for m in mids]
    crossings, touchings = [], []
    for i in range(n):
        left_mid = mids[i - 1] - (TWO_PI if i == 0 else 0.0)
        right_mid = mids[i]
        sl, sr = signs[i - 1], signs[i]
        if sl * sr < 0:
            c = pts[i]
            d = min(1e-6, 0.5 * (c - left_mid), 0.5 * (right_mid - c))
            a, b = c - d, c + d
            if f(a) * f(b) > 0:
                a, b = left_mid, right_mid
            crossings.append(float(wrap_angle(brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))))
        else:
            touchings.append(float(wrap_angle(pts[i])))
    return sorted(crossings), sorted(touchings)


def gauge_occupied_intervals(model: ModelSpec) -> list[tuple[float, float]]:
    """Intervals of momenta occupied in the ground state of a gauge-invariant model."""
    if not model.is_gauge_invariant:
        raise ValueError("model has nonzero pairing; use the majorana path")
    a = model.hop_symbol()
    if a.norm() == 0.0:
        raise DegenerateModelError("A vanishes identically; ground state is degenerate")
    f = lambda t: float(a(t).real)
    crossings, _ = real_zeros(a)
    occupied = (lambda v: v < 0) if OCCUPY_NEGATIVE_ENERGY else (lambda v: v > 0)
    if not crossings:
        return [(-math.pi, math.pi)] if occupied(f(0.0)) else []
    out = []
    ext = crossings + [crossings[0] + TWO_PI]
    for x, y in zip(ext[:-1], ext[1:]):
        if occupied(f(wrap_angle(0.5 * (x + y)))):
            out.append((x, y))
    return out


def gauge_kernel(model: ModelSpec, L: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``L x L`` matrix ``<b_j^+ b_l>`` of an infinite gauge-invariant chain.

    The ground state fills the momenta where ``A(theta) < 0``, so each
    entry is an exact integral of ``exp(i t (j - l))`` over those intervals.
    """
    _check_tol(tol)
    if L < 1:
        raise ValueError("L must be >= 1")
    intervals = gauge_occupied_intervals(model)
    d = np.arange(-(L - 1), L)
    vals = np.zeros(d.shape, dtype=complex)
    nz = d != 0
    for a, b in intervals:
        vals[~nz] += b - a
        vals[nz] += (np.exp(1j * d[nz] * b) - np.exp(1j * d[nz] * a)) / (1j * d[nz])
    vals /= TWO_PI
    idx = np.subtract.outer(np.arange(L), np.arange(L)) + (L - 1)
    K = vals[idx]
    return 0.5 * (K + K.conj().T)


@dataclass(frozen=True)
class FiniteCorrelations:
    """Two-point functions of a fermionic-periodic chain of ``N`` sites.

    Each array is indexed by ``d = (j - l) mod N``.
    """

    N: int
    bdag_b: np.ndarray
    b_bdag: np.ndarray
    b_b: np.ndarray
    bdag_bdag: np.ndarray

    def matrix(self, kind: str) -> np.ndarray:
        """Full ``N x N`` matrix of ``<.. j .. l>`` for ``kind`` in the field names."""
        v = getattr(self, kind)
        idx = np.subtract.outer(np.arange(self.N), np.arange(self.N)) % self.N
        return v[idx]

    def majorana_matrix(self) -> np.ndarray:
        """Real antisymmetric ``2N x 2N`` majorana correlation matrix ``C``."""
        bb, bdbd = self.matrix("b_b"), self.matrix("bdag_bdag")
        bbd, bdb = self.matrix("b_bdag"), self.matrix("bdag_b")
        xx = bb + bbd + bdb + bdbd
        yy = -(bb - bbd - bdb + bdbd)
        xy = 1j * (bb - bbd + bdb - bdbd)
        yx = 1j * (bb + bbd - bdb - bdbd)
        N = self.N
        mm = np.empty((2 * N, 2 * N), dtype=complex)
        mm[0::2, 0::2], mm[1::2, 1::2] = xx, yy
        mm[0::2, 1::2], mm[1::2, 0::2] = xy, yx
        C = ((mm - np.eye(2 * N)) / 1j).real
        return 0.5 * (C - C.T)


def finite_correlations(model: ModelSpec, N: int) -> FiniteCorrelations:
    """Two-point functions of the ``N``-site fermionic-periodic chain as momentum sums.

    Momenta are ``2 pi k / N`` with ``k`` running over ``N`` consecutive
    integers centred on zero.  A mode with exactly zero energy is counted as
    half filled.
    """
    if N < 2 * model.n0:
        raise ValueError("N must be at least twice the range")
    k = np.arange(N) - N // 2
    theta = TWO_PI * k / N
    s = symbol_components(model).sample(theta)
    root = np.sqrt(s.delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(root > 0, s.p_step / root, 0.0)
    b_theta = 0.5 * (s.b_s + 1j * s.b_a)
    g_pp = 0.5 * (1 + _FILL * (s.m_step - w * s.a_s))
    g_hh = 0.5 * (1 + _FILL * (s.m_step + w * s.a_s))
    g_bb = -_FILL * w * b_theta
    g_dd = -_FILL * w * np.conj(b_theta)
    d = np.arange(N)
    ph = np.exp(1j * np.multiply.outer(d, theta)) / N
    return FiniteCorrelations(N, ph @ g_pp, ph @ g_hh, ph @ g_bb, ph @ g_dd)
