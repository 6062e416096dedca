"""Closed-form large-``L`` entropy of critical gauge-invariant chains.

For a gauge-invariant chain whose hopping symbol ``A(theta)`` changes sign
at ``R`` simple zeros ``theta_1 < ... < theta_R`` in ``(0, 2 pi]``,

    S_L = R/6 ln L - 1/6 sum_{r != s, same parity} ln(1 - exp(i(theta_s - theta_r)))
                   + 1/6 sum_{r != s, other parity} ln(1 - exp(i(theta_s - theta_r)))
                   + R/6 (1 + gamma_E - 6 I_3 ln 2) + o(1).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .correlations import gauge_kernel, gauge_occupied_intervals, real_zeros
from .entropy import gauge_entropy
from .model import TWO_PI, ModelSpec

__all__ = [
    "EULER_GAMMA",
    "I3",
    "C_IS",
    "C_ISDM",
    "JumpData",
    "AsymptoteResult",
    "barnes_g_log",
    "find_symbol_zeros",
    "general_gauge_asymptote",
    "keating_mezzadri_asymptote",
    "ising_dm_entropy",
    "fisher_hartwig_log_det",
    "toeplitz_log_det",
    "recompute_i3",
]

EULER_GAMMA = 0.57721566490153286061
I3 = 0.0221603
LN2 = math.log(2.0)
C_IS = (1.0 + EULER_GAMMA + (2.0 - 6.0 * I3) * LN2) / 6.0
C_ISDM = (1.0 + EULER_GAMMA + (1.0 - 6.0 * I3) * LN2) / 3.0

BARNES_NMAX = 100_000


# ---------------------------------------------------------------- Barnes G

def barnes_g_log(z, n_max: int = BARNES_NMAX):
    """``ln G(1 + z)`` from the Weierstrass product.

    The product is truncated at ``n_max`` and the remainder
    ``sum_{n > n_max} sum_{m >= 3} (-1)^{m+1} z^m / (m n^{m-1})`` is added
    through Hurwitz zeta values.  Real ``z`` below ``-1`` gives ``ln |G|``;
    complex ``z`` gives the branch continuous from ``z = 0`` along the
    product.

    Parameters
    ----------
    z : float or complex
        ``1 + z`` must not be a non-positive integer.
    """
    zc = complex(z)
    if zc.imag == 0.0 and zc.real <= -1.0 and float(zc.real).is_integer():
        raise ValueError(f"G(1+z) vanishes at z = {zc.real:g}")
    n = np.arange(1, n_max + 1, dtype=float)
    # accurate ln(1 + w) for small |w|: the real part through log1p
    w = zc / n
    re = 0.5 * np.log1p(2.0 * w.real + np.abs(w) ** 2)
    terms = n * re - zc.real + (zc * zc).real / (2.0 * n)
    s = math.fsum(terms[::-1])
    if zc.imag != 0.0:
        im = n * np.arctan2(w.imag, 1.0 + w.real) - zc.imag + (zc * zc).imag / (2.0 * n)
        s = complex(s, math.fsum(im[::-1]))
    tail = 0.0
    for m in range(3, 40):
        t = (-1) ** (m + 1) * zc**m / m * zeta(m - 1, n_max + 1)
        tail += t
        if abs(t) < 1e-18:
            break
    out = 0.5 * zc * math.log(TWO_PI) - 0.5 * (zc + 1.0) * zc - 0.5 * EULER_GAMMA * zc * zc + s + tail
    return out.real if isinstance(z, (int, float, np.floating, np.integer)) else out


# ---------------------------------------------------------------- zeros

@dataclass(frozen=True)
class JumpData:
    """Sign changes of a gauge-invariant symbol.

    Attributes
    ----------
    zeros : tuple of float
        ``theta_1 < ... < theta_R`` in ``(0, 2 pi]``.
    """

    zeros: tuple[float, ...]

    @property
    def R(self) -> int:
        return len(self.zeros)

    def __post_init__(self):
        z = tuple(float(t) for t in self.zeros)
        if len(z) % 2:
            raise ValueError("number of jumps must be even")
        if any(not (0.0 < t <= TWO_PI) for t in z) or any(b <= a for a, b in zip(z, z[1:])):
            raise ValueError("zeros must be strictly increasing in (0, 2 pi]")
        object.__setattr__(self, "zeros", z)


@dataclass(frozen=True)
class AsymptoteResult:
    """``S_L ~ slope ln L + constant``."""

    slope: float
    constant: float
    validity: str = ""

    def predict(self, L):
        return self.slope * np.log(np.asarray(L, dtype=float)) + self.constant


def find_symbol_zeros(model: ModelSpec) -> JumpData:
    """Simple zeros of the hopping symbol of a gauge-invariant chain.

    Candidates are the unit-circle roots of the Laurent polynomial, polished
    by bracketing; touchings (even-order zeros) are rejected.
    """
    if not model.is_gauge_invariant:
        raise ValueError("model must be gauge invariant (pair = 0)")
    if model.hop[0].real < 0 and model.hop_symbol()(0.0).real < 0:
        model = model.particle_hole()
    poly = model.hop_symbol()
    if poly.norm() == 0.0:
        raise ValueError("hopping symbol vanishes identically")
    crossings, touchings = real_zeros(poly)
    if touchings:
        raise ValueError(f"double zero of A(theta) at {touchings[0]:.12g}: jump exponents do not cover it")
    deriv = poly.derivative()
    scale = poly.norm()
    for t in crossings:
        if abs(deriv(t).real) < 1e-8 * scale:
            raise ValueError(f"zero at {t:.12g} is not simple")
    z = sorted(t + TWO_PI if t <= 0.0 else t for t in crossings)
    return JumpData(tuple(z))


# ---------------------------------------------------------------- formulas

def general_gauge_asymptote(jumps: JumpData) -> AsymptoteResult:
    """Slope and constant of ``S_L`` for arbitrary (possibly asymmetric) jumps."""
    R = jumps.R
    if R < 2:
        raise ValueError("no jumps: the chain is not critical, S_L saturates")
    th = jumps.zeros
    acc = 0j
    for r in range(R):
        for s in range(r + 1, R):
            sign = -1.0 if (r - s) % 2 == 0 else 1.0
            # (r, s) and (s, r) are complex conjugates
            w = cmath.log(1 - cmath.exp(1j * (th[s] - th[r]))) + cmath.log(1 - cmath.exp(1j * (th[r] - th[s])))
            acc += sign * w / 6.0
    if abs(acc.imag) > 1e-12:
        raise ArithmeticError(f"imaginary residue {acc.imag:.3e} in the jump sum")
    const = acc.real + R / 6.0 * ((1.0 + EULER_GAMMA) - 6.0 * I3 * LN2)
    return AsymptoteResult(R / 6.0, const, f"critical gauge-invariant chain, R = {R}")


def keating_mezzadri_asymptote(jumps: JumpData, tol: float = 1e-9) -> AsymptoteResult:
    """Same asymptote for zero sets symmetric under ``theta -> -theta``.

    Uses the zeros ``0 < theta_1 < ... < theta_{R/2} < pi`` of the upper half
    circle:

        S_L = R/6 ln L + R/6 K - R I_3 ln 2,
        K = 1 + gamma_E + (2/R) sum_r ln|1 - exp(2 i theta_r)|
              - (4/R) sum_{s<r} (-1)^{r+s} ln|(1 - exp(i(theta_r - theta_s))) / (1 - exp(i(theta_r + theta_s)))|.
    """
    R = jumps.R
    if R < 2:
        raise ValueError("no jumps: the chain is not critical")
    th = np.array(jumps.zeros)
    if np.any(np.abs(th - math.pi) < tol) or np.any(np.abs(th - TWO_PI) < tol):
        raise ValueError("zeros at 0 or pi are their own mirror images; use general_gauge_asymptote")
    upper = th[th < math.pi]
    lower = np.sort(TWO_PI - th[th > math.pi])
    if upper.size != lower.size or np.max(np.abs(upper - lower), initial=0.0) > tol:
        raise ValueError("zero set is not symmetric under theta -> -theta")
    k = 1.0 + EULER_GAMMA
    k += 2.0 / R * sum(math.log(abs(1 - cmath.exp(2j * t))) for t in upper)
    for r in range(upper.size):
        for s in range(r):
            num = abs(1 - cmath.exp(1j * (upper[r] - upper[s])))
            den = abs(1 - cmath.exp(1j * (upper[r] + upper[s])))
            k -= 4.0 / R * (-1) ** (r + s) * math.log(num / den)
    return AsymptoteResult(R / 6.0, R / 6.0 * k - R * LN2 * I3, f"reflection-symmetric zeros, R = {R}")


def ising_dm_entropy(D: float, check: bool = True) -> AsymptoteResult:
    """Asymptote of the critical Ising chain with DM coupling ``D`` (``gamma = h = 1``).

    ``|D| > 1``: ``S_L = ln L / 3 + ln(1 - 1/D^2) / 12 + C_ISDM``;
    ``|D| <= 1``: ``S_L = ln L / 6 + C_IS``.

    With ``check`` the closed form is compared with half the general
    asymptote of the selfdual reduction at ``2L``.
    """
    if abs(D) > 1.0:
        res = AsymptoteResult(1.0 / 3.0, math.log(1.0 - 1.0 / D**2) / 12.0 + C_ISDM, "critical Ising-DM, |D| > 1")
    else:
        res = AsymptoteResult(1.0 / 6.0, C_IS, "critical Ising-DM, |D| <= 1")
    if check and abs(abs(D) - 1.0) > 1e-9:
        from .model import nn_model
        from .transforms import kw_selfdual_reduce

        dual = general_gauge_asymptote(find_symbol_zeros(kw_selfdual_reduce(nn_model(1.0, 1.0, D)).reduced))
        slope, const = 0.5 * dual.slope, 0.5 * (dual.constant + dual.slope * LN2)
        if abs(slope - res.slope) > 1e-15 or abs(const - res.constant) > 1e-9:
            raise ArithmeticError(
                f"closed form ({res.slope}, {res.constant}) disagrees with selfdual route ({slope}, {const})"
            )
    return res


# ---------------------------------------------------------------- determinants

def toeplitz_log_det(model: ModelSpec, lam: complex, L: int) -> complex:
    """``ln det(lam - (2K_L - 1))`` for the gauge-invariant kernel ``K_L``."""
    K = gauge_kernel(model, L)
    sign, logabs = np.linalg.slogdet(lam * np.eye(L) - (2.0 * K - np.eye(L)))
    return complex(logabs + cmath.log(sign))


def fisher_hartwig_log_det(model: ModelSpec, lam: complex, L: int) -> complex:
    """Large-``L`` asymptote of :func:`toeplitz_log_det` (debugging aid).

    The symbol ``lam + 1 - 2 occ(theta)`` is written as a constant times a
    product of pure jumps ``t_beta(theta - theta_r)``; the determinant is then

        L V0 - sum beta_r^2 ln L + sum_{r<s} 2 beta_r beta_s ln|e^{i theta_r} - e^{i theta_s}|
             + sum_r ln G(1 + beta_r) G(1 - beta_r).

    The result is defined modulo ``2 pi i``.
    """
    intervals = gauge_occupied_intervals(model)
    if not intervals or (len(intervals) == 1 and intervals[0][1] - intervals[0][0] >= TWO_PI - 1e-14):
        raise ValueError("no jumps: symbol is constant")
    occ = lambda t: any(a <= (t - a) % TWO_PI + a < b for a, b in intervals)
    p = lambda t: lam + 1.0 - 2.0 * occ(t)
    jumps = sorted({a % TWO_PI for a, _ in intervals} | {b % TWO_PI for _, b in intervals})
    eps = 1e-9
    beta = []
    for t in jumps:
        beta.append(0.5j / math.pi * cmath.log(p(t + eps) / p(t - eps)))
    beta = np.array(beta)
    # V0 = ln p(t) + i sum beta_r (pi - ((t - t_r) mod 2 pi)), constant in t
    vals = []
    ext = jumps + [jumps[0] + TWO_PI]
    for a, b in zip(ext[:-1], ext[1:]):
        t = 0.5 * (a + b)
        phase = sum(br * (math.pi - ((t - tr) % TWO_PI)) for br, tr in zip(beta, jumps))
        vals.append(cmath.log(p(t)) + 1j * phase)
    v0 = vals[0]
    for v in vals[1:]:
        d = (v - v0) / (2j * math.pi)
        if abs(d - round(d.real)) > 1e-8:
            raise ArithmeticError("jump factorization is inconsistent")
    out = L * v0 - np.sum(beta**2) * math.log(L)
    for r in range(len(jumps)):
        for s in range(r + 1, len(jumps)):
            out += 2.0 * beta[r] * beta[s] * math.log(abs(cmath.exp(1j * jumps[r]) - cmath.exp(1j * jumps[s])))
        out += barnes_g_log(complex(beta[r])) + barnes_g_log(complex(-beta[r]))
    return complex(out)


# ---------------------------------------------------------------- I_3

def recompute_i3(L: int = 800) -> float:
    """Estimate ``I_3`` from exact entropies of the half-filled hopping chain.

    The constant of ``S_L - ln L / 3`` is extrapolated from ``L/2`` and ``L``
    assuming ``L^-2`` corrections and matched to the ``R = 2``, ``theta = pm pi/2``
    asymptote.
    """
    model = ModelSpec((0.0, -1.0))
    K = gauge_kernel(model, L)
    c = []
    for n in (L // 2, L):
        c.append(gauge_entropy(K[:n, :n])[1] - math.log(n) / 3.0)
    c_inf = c[1] + (c[1] - c[0]) / 3.0
    return ((1.0 + EULER_GAMMA) / 3.0 + LN2 / 3.0 - c_inf) / (2.0 * LN2)
