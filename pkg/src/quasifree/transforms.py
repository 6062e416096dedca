"""Maps between quadratic chains that preserve block entropy under a known rule.

Majorana form: ``H = i sum_{ab} T_ab m_a m_b`` (plus a constant) with ``T``
real antisymmetric.  ``T`` is stored per site offset ``d`` as 2x2 blocks
``t[d][a, b]``, where ``a, b = 0`` stands for ``b + b^+`` and ``1`` for
``i (b - b^+)`` of the respective site; ``t[-d] = -t[d]^T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .correlations import DEFAULT_TOL, gauge_kernel
from .entropy import gauge_entropy
from .model import ModelSpec, TrigPoly, symbol_components

__all__ = [
    "TransformError",
    "MajoranaCoupling",
    "to_majorana",
    "from_majorana",
    "selfdual_condition",
    "KWReduction",
    "kw_selfdual_reduce",
    "DirectDecoupling",
    "decouple_direct",
    "xy_ising_decouple",
    "RotationResult",
    "rotate_to_real_pairing",
    "su2_from_rotation",
]

COEFF_TOL = 1e-13


class TransformError(ValueError):
    """The model does not satisfy the preconditions of a transform."""


@dataclass(frozen=True)
class MajoranaCoupling:
    """Real antisymmetric majorana couplings of a 2-periodic chain.

    Attributes
    ----------
    blocks : ndarray, shape (2K+1, 2, 2)
        ``blocks[d + K] = t[d]`` for site offsets ``d = -K..K``.
    scale : float
        The physical Hamiltonian is ``scale * i sum T_ab m_a m_b``.
    """

    blocks: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.blocks, dtype=float)
        if t.ndim != 3 or t.shape[1:] != (2, 2) or t.shape[0] % 2 != 1:
            raise ValueError("blocks must have shape (2K+1, 2, 2)")
        if np.max(np.abs(t + t[::-1].transpose(0, 2, 1)), initial=0.0) > 1e-12 * max(1.0, np.abs(t).max()):
            raise ValueError("couplings are not antisymmetric")
        object.__setattr__(self, "blocks", t)

    @property
    def K(self) -> int:
        return (self.blocks.shape[0] - 1) // 2

    def block(self, d: int) -> np.ndarray:
        if abs(d) > self.K:
            return np.zeros((2, 2))
        return self.blocks[d + self.K]

    def matrix(self, n_sites: int) -> np.ndarray:
        """``2n x 2n`` coupling matrix of an open segment."""
        T = np.zeros((2 * n_sites, 2 * n_sites))
        for j in range(n_sites):
            for d in range(-self.K, self.K + 1):
                l = j + d
                if 0 <= l < n_sites:
                    T[2 * j : 2 * j + 2, 2 * l : 2 * l + 2] = self.block(d)
        return T

    def toeplitz_defect(self) -> tuple[float, tuple[int, int] | None]:
        """Largest violation of ``T_{a+1,b+1} = T_{a,b}`` and a witness pair (0-based)."""
        worst, witness = 0.0, None
        for d in range(-self.K - 1, self.K + 1):
            # even offset 2d: x_j x_{j+d} vs y_j y_{j+d}
            v = abs(self.block(d)[0, 0] - self.block(d)[1, 1])
            if v > worst:
                worst, witness = v, (0, 2 * d)
            # odd offset 2d+1: x_j y_{j+d} vs y_j x_{j+d+1}
            v = abs(self.block(d)[0, 1] - self.block(d + 1)[1, 0])
            if v > worst:
                worst, witness = v, (0, 2 * d + 1)
        return worst, witness

    @property
    def genuine_toeplitz(self) -> bool:
        scale = max(1.0, float(np.abs(self.blocks).max()))
        return self.toeplitz_defect()[0] <= 1e-12 * scale

    def sequence(self) -> np.ndarray:
        """``T_{0,k}`` for majorana offsets ``k = -(2K+1)..2K+1`` (genuine-Toeplitz case)."""
        K = self.K
        seq = np.zeros(4 * K + 3)
        for d in range(-K - 1, K + 1):
            if -(2 * K + 1) <= 2 * d:
                seq[2 * d + 2 * K + 1] = self.block(d)[0, 0]
            seq[2 * d + 1 + 2 * K + 1] = self.block(d)[0, 1]
        return seq


def to_majorana(model: ModelSpec) -> MajoranaCoupling:
    """Majorana couplings ``T`` with ``H = i sum T_ab m_a m_b + const``."""
    K = model.n0 - 1
    t = np.zeros((2 * K + 1, 2, 2))
    for d in range(-K, K + 1):
        a, b = model.hop_coeff(d), model.pair_coeff(d)
        t[d + K, 0, 0] = 0.25 * (a + b).imag
        t[d + K, 1, 1] = 0.25 * (a - b).imag
        t[d + K, 0, 1] = 0.25 * (b.real - a.real)
        t[d + K, 1, 0] = 0.25 * (a.real + b.real)
    return MajoranaCoupling(t)


def from_majorana(coupling: MajoranaCoupling) -> ModelSpec:
    """Inverse of :func:`to_majorana` (the ``scale`` field is folded in)."""
    K = coupling.K
    s = coupling.scale
    hop, pair = [], []
    for d in range(0, K + 1):
        t = coupling.block(d) * s
        im_a = 2.0 * (t[0, 0] + t[1, 1])
        im_b = 2.0 * (t[0, 0] - t[1, 1])
        re_a = 2.0 * (t[1, 0] - t[0, 1])
        re_b = 2.0 * (t[1, 0] + t[0, 1])
        hop.append(complex(re_a, im_a if d else 0.0))
        if d:
            pair.append(complex(re_b, im_b))
    return ModelSpec(tuple(hop), tuple(pair))


def selfdual_condition(model: ModelSpec, tol: float = 1e-12) -> bool:
    """Coefficient form of selfduality: ``B`` real and
    ``Re(B_{0,d} - A_{0,d}) = Re(A_{0,d+1} + B_{0,d+1})`` for every ``d``."""
    K = model.n0
    scale = max(1.0, max(abs(c) for c in model.hop + model.pair + (0j,)))
    if any(abs(model.pair_coeff(d).imag) > tol * scale for d in range(-K, K + 1)):
        return False
    for d in range(-K - 1, K + 1):
        lhs = (model.pair_coeff(d) - model.hop_coeff(d)).real
        rhs = (model.hop_coeff(d + 1) + model.pair_coeff(d + 1)).real
        if abs(lhs - rhs) > tol * scale:
            return False
    return True


# ------------------------------------------------------------ Kramers-Wannier

@dataclass(frozen=True)
class KWReduction:
    """Gauge-invariant chain whose ``2L``-site entropy is twice the original ``S_L``."""

    original: ModelSpec
    reduced: ModelSpec
    coupling: MajoranaCoupling

    def entropy(self, L: int, tol: float = DEFAULT_TOL) -> float:
        return 0.5 * gauge_entropy(gauge_kernel(self.reduced, 2 * L, tol))[1]

    def entropies(self, L_list, tol: float = DEFAULT_TOL) -> np.ndarray:
        Ls = np.asarray(list(L_list), dtype=int)
        K = gauge_kernel(self.reduced, 2 * int(Ls.max()), tol)
        return np.array([0.5 * gauge_entropy(K[: 2 * L, : 2 * L])[1] for L in Ls])


def kw_selfdual_reduce(model: ModelSpec) -> KWReduction:
    """Reduce a selfdual chain to a gauge-invariant chain with ``A'_{0,n} = -i T_{0,n}``.

    Selfdual means the majorana couplings are translation invariant by one
    majorana, ``T_{a+1,b+1} = T_{a,b}``.
    """
    coup = to_majorana(model)
    defect, witness = coup.toeplitz_defect()
    if defect > 1e-12 * max(1.0, float(np.abs(coup.blocks).max())):
        k = witness[1]
        a = 1 + max(0, -k)
        raise TransformError(
            f"not selfdual: T[{a},{a + k}] != T[{a + 1},{a + 1 + k}] (1-based majorana indices), "
            f"defect {defect:.3e}"
        )
    seq = coup.sequence()
    c = (seq.size - 1) // 2
    hop = [0j] + [complex(0.0, -seq[c + n]) for n in range(1, c + 1)]
    return KWReduction(model, ModelSpec(tuple(hop)), coup)


# ------------------------------------------------------------ direct decoupling

@dataclass(frozen=True)
class DirectDecoupling:
    """Two gauge-invariant chains ``-A + B`` and ``-A - B``.

    Each reproduces one majorana sublattice: ``<b_j^+ b_l>`` of the chain
    equals ``1/2 <m m>`` of the sublattice, so the sublattice entropy is
    half the chain's entropy, and ``S_L = S_L(+) + S_L(-)``.
    """

    original: ModelSpec
    plus: ModelSpec
    minus: ModelSpec

    def chain_entropy(self, which: str, L: int, tol: float = DEFAULT_TOL) -> float:
        """Entropy of the ``L``-site block of one majorana sublattice."""
        chain = {"plus": self.plus, "minus": self.minus}[which]
        return 0.5 * gauge_entropy(gauge_kernel(chain, L, tol))[1]

    def entropy(self, L: int, tol: float = DEFAULT_TOL) -> float:
        return self.chain_entropy("plus", L, tol) + self.chain_entropy("minus", L, tol)


def decouple_direct(model: ModelSpec) -> DirectDecoupling:
    """Split a chain with purely imaginary ``A`` and ``B`` into two gauge-invariant chains."""
    scale = max(1.0, max(abs(c) for c in model.hop + model.pair + (0j,)))
    bad = [f"hop[{i}]" for i, h in enumerate(model.hop) if abs(h.real) > COEFF_TOL * scale]
    bad += [f"pair[{i + 1}]" for i, p in enumerate(model.pair) if abs(p.real) > COEFF_TOL * scale]
    if bad:
        raise TransformError("A and B must be purely imaginary; real parts in " + ", ".join(bad))
    n0 = model.n0
    plus, minus = [], []
    for n in range(n0):
        a, b = complex(0, model.hop_coeff(n).imag), complex(0, model.pair_coeff(n).imag)
        plus.append(-a + b)
        minus.append(-a - b)
    return DirectDecoupling(model, ModelSpec(tuple(plus)), ModelSpec(tuple(minus)))


# ------------------------------------------------------------ XY -> two Ising

def _chain_of(site_parity: int, comp: int) -> tuple[int, int]:
    """(chain, component) of majorana ``comp`` at a site of the given parity."""
    if site_parity == 0:
        return (0, 0) if comp == 0 else (1, 0)
    return (0, 1) if comp == 1 else (1, 1)


def xy_ising_decouple(coupling: MajoranaCoupling, tol: float = 1e-12) -> tuple[MajoranaCoupling, MajoranaCoupling]:
    """Split a chain into two chains of doubled unit cell.

    Chain 1 collects ``x`` of odd sites and ``y`` of even sites (1-based),
    chain 2 the remaining majoranas; site ``i`` of each new chain is made
    of sites ``2i-1, 2i`` of the original.  Every coupling between the two
    sets must vanish.  Entropy rule: ``S_{2L} = S_L(chain 1) + S_L(chain 2)``.
    """
    K = coupling.K
    Kn = (K + 1) // 2 + 1
    out = [np.zeros((2 * Kn + 1, 2, 2)) for _ in range(2)]
    scale = max(1.0, float(np.abs(coupling.blocks).max()))
    for s in (0, 1):
        for d in range(-K, K + 1):
            t = coupling.block(d)
            s2 = s + d
            for a in (0, 1):
                for b in (0, 1):
                    v = t[a, b] * coupling.scale
                    ca, ia = _chain_of(s % 2, a)
                    cb, ib = _chain_of(s2 % 2, b)
                    if ca != cb:
                        if abs(v) > tol * scale:
                            m1 = 2 * s + a + 1
                            m2 = 2 * s2 + b + 1
                            raise TransformError(
                                f"coupling T[{m1},{m2}] = {v:.3e} links the two sublattices"
                            )
                        continue
                    dn = s2 // 2 - s // 2
                    out[ca][dn + Kn, ia, ib] = v
    return MajoranaCoupling(out[0]), MajoranaCoupling(out[1])


# ------------------------------------------------------------ rotation

@dataclass(frozen=True)
class RotationResult:
    """Outcome of :func:`rotate_to_real_pairing`.

    ``model`` is ``None`` when no rotation produces a real pairing.
    """

    reducible: bool
    model: ModelSpec | None
    axis: np.ndarray | None = None
    rotation: np.ndarray | None = None
    unitary: np.ndarray | None = None
    reason: str = ""


def _rotation_to_z(c: np.ndarray) -> np.ndarray:
    c = c / np.linalg.norm(c)
    z = np.array([0.0, 0.0, 1.0])
    v = np.cross(c, z)
    s = np.linalg.norm(v)
    cth = float(c @ z)
    if s < 1e-15:
        return np.eye(3) if cth > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx * ((1 - cth) / s**2)


_PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])


def su2_from_rotation(R: np.ndarray) -> np.ndarray:
    """``U`` with ``U (v . sigma) U^+ = (R v) . sigma``."""
    angle = math.acos(max(-1.0, min(1.0, 0.5 * (np.trace(R) - 1.0))))
    if angle < 1e-15:
        return np.eye(2, dtype=complex)
    if abs(angle - math.pi) < 1e-9:
        w, V = np.linalg.eigh(0.5 * (R + np.eye(3)))
        n = V[:, -1]
    else:
        n = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / (2 * math.sin(angle))
    ns = np.tensordot(n, _PAULI, axes=1)
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * ns


def rotate_to_real_pairing(model: ModelSpec, rel_tol: float = 1e-10) -> RotationResult:
    """Find a site-independent rotation making ``B`` real (``b_s = 0`` in the rotated frame).

    The vector ``v(theta) = (b_a, -a_s, b_s)`` is rotated so that a constant
    direction ``c`` with ``c . v = 0`` becomes the third axis.  Because
    ``a_s`` is even in ``theta`` while ``b_a`` and ``b_s`` are odd, only null
    vectors with ``c_y = 0`` give a valid chain.
    """
    comp = symbol_components(model)
    cols = [comp.b_a.coeffs, (-comp.a_s).coeffs, comp.b_s.coeffs]
    M = np.vstack([np.column_stack([c.real for c in cols]), np.column_stack([c.imag for c in cols])])
    bs_norm = np.linalg.norm(cols[2])
    ref = max(np.linalg.norm(M, 2), 1e-300)
    if bs_norm <= rel_tol * ref:
        return RotationResult(True, model, np.array([0.0, 0.0, 1.0]), np.eye(3), np.eye(2, dtype=complex))
    # restrict to c_y = 0: columns for b_a and b_s only
    M2 = M[:, [0, 2]]
    _, sv, Vt = np.linalg.svd(M2)
    if sv[-1] > rel_tol * ref:
        _, sv3, _ = np.linalg.svd(M)
        why = ("symbols are linearly independent" if sv3[-1] > rel_tol * ref
               else "only null direction mixes even and odd components")
        return RotationResult(False, None, reason=why)
    cxz = Vt[-1]
    c = np.array([cxz[0], 0.0, cxz[1]])
    if c[2] < 0:
        c = -c
    R = _rotation_to_z(c)
    new = R @ np.vstack([cols[0], cols[1], cols[2]])
    b_a, a_s_neg = new[0], new[1]
    a_s = -a_s_neg
    a_a = comp.a_a.coeffs
    a_new = TrigPoly(0.5 * (a_s - a_a)).trimmed(1e-15)
    b_new = TrigPoly(0.5j * b_a).trimmed(1e-15)
    Kn = max(a_new.K, b_new.K, 0)
    hop = [complex(a_new.coeff(n)) for n in range(0, Kn + 1)]
    hop[0] = complex(hop[0].real)
    pair = [complex(b_new.coeff(n)) for n in range(1, Kn + 1)]
    for n in range(1, Kn + 1):
        if abs(a_new.coeff(-n) - np.conj(a_new.coeff(n))) > 1e-10 * ref:
            raise ArithmeticError("rotated hopping lost hermiticity")
        if abs(b_new.coeff(-n) + b_new.coeff(n)) > 1e-10 * ref:
            raise ArithmeticError("rotated pairing lost antisymmetry")
    rotated = ModelSpec(tuple(hop), tuple(pair))
    return RotationResult(True, rotated, c, R, su2_from_rotation(R))
