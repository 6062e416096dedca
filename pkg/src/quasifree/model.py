"""Translation-invariant quadratic fermion chains and their symbols.

A model is the Hamiltonian

    H = sum_{ij} A_ij b_i^+ b_j + 1/2 B_ij b_i^+ b_j^+ - 1/2 conj(B_ij) b_i b_j

with ``A`` hermitian Toeplitz and ``B`` antisymmetric Toeplitz, both of finite
range.  All functions on the circle follow the convention

    A(theta) = sum_n exp(-i n theta) A_{0,n}.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "TrigPoly",
    "ModelSpec",
    "SymbolComponents",
    "SymbolSample",
    "PhasePoint",
    "DegenerateModelError",
    "symbol_components",
    "eval_components",
    "classify",
    "nn_model",
    "nn_phase_region",
    "asymmetric_range3_model",
]

TWO_PI = 2.0 * math.pi


class DegenerateModelError(ValueError):
    """Raised when the one-particle dispersion vanishes on an interval."""


class TrigPoly:
    """Finite Fourier series ``f(theta) = sum_{n=-K}^{K} c_n exp(-i n theta)``.

    Parameters
    ----------
    coeffs : array_like
        Complex coefficients ``c_{-K}, ..., c_K`` (odd length).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex).ravel()
        if c.size % 2 != 1:
            raise ValueError("coefficient array must have odd length")
        self.coeffs = c

    @property
    def K(self) -> int:
        return (self.coeffs.size - 1) // 2

    @classmethod
    def from_mapping(cls, mapping: dict[int, complex]) -> "TrigPoly":
        K = max((abs(n) for n in mapping), default=0)
        c = np.zeros(2 * K + 1, dtype=complex)
        for n, v in mapping.items():
            c[n + K] += v
        return cls(c)

    def coeff(self, n: int) -> complex:
        K = self.K
        return complex(self.coeffs[n + K]) if abs(n) <= K else 0j

    def padded(self, K: int) -> np.ndarray:
        """Coefficients zero-padded to half-width ``K``."""
        if K < self.K:
            raise ValueError("cannot truncate")
        pad = K - self.K
        return np.pad(self.coeffs, (pad, pad))

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        n = np.arange(-self.K, self.K + 1)
        return np.exp(-1j * np.multiply.outer(theta, n)) @ self.coeffs

    def _binary(self, other, op):
        if not isinstance(other, TrigPoly):
            other = TrigPoly([other])
        K = max(self.K, other.K)
        return TrigPoly(op(self.padded(K), other.padded(K)))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return TrigPoly(-self.coeffs)

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            return TrigPoly(np.convolve(self.coeffs, other.coeffs))
        return TrigPoly(self.coeffs * other)

    __rmul__ = __mul__

    def reflect(self) -> "TrigPoly":
        """``theta -> f(-theta)``."""
        return TrigPoly(self.coeffs[::-1])

    def conj(self) -> "TrigPoly":
        """Pointwise complex conjugate."""
        return TrigPoly(np.conj(self.coeffs[::-1]))

    def derivative(self) -> "TrigPoly":
        n = np.arange(-self.K, self.K + 1)
        return TrigPoly(-1j * n * self.coeffs)

    def trimmed(self, tol: float = 0.0) -> "TrigPoly":
        """Drop outer coefficients with modulus ``<= tol``."""
        c = self.coeffs
        K = self.K
        while K > 0 and abs(c[0]) <= tol and abs(c[-1]) <= tol:
            c = c[1:-1]
            K -= 1
        return TrigPoly(c)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def unit_circle_roots(self, radius_tol: float = 1e-6) -> np.ndarray:
        """Angles of the roots of ``z^K f`` (``z = exp(-i theta)``) near ``|z| = 1``.

        Returned sorted in ``[-pi, pi)``.  Multiplicities are kept, so a
        double zero shows up twice (up to rounding).
        """
        c = self.trimmed(1e-15 * max(self.norm(), 1e-300)).coeffs
        if c.size == 1:
            return np.empty(0)
        roots = np.roots(c[::-1])
        roots = roots[np.abs(np.abs(roots) - 1.0) < radius_tol]
        return np.sort(wrap_angle(-np.angle(roots)))

    def __repr__(self):
        return f"TrigPoly(K={self.K}, coeffs={self.coeffs!r})"


def wrap_angle(theta):
    """Map angles into ``[-pi, pi)``."""
    return (np.asarray(theta) + math.pi) % TWO_PI - math.pi


def _as_complex_tuple(values) -> tuple[complex, ...]:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)) and len(v) == 2:
            v = complex(float(v[0]), float(v[1]))
        out.append(complex(v))
    return tuple(out)


@dataclass(frozen=True)
class ModelSpec:
    """Finite-range Toeplitz coefficients of a quadratic chain.

    Parameters
    ----------
    hop : sequence of complex
        ``hop[l] = A_{0,l}`` for ``l = 0..n0-1``.  ``A_{0,-l}`` is the
        conjugate; ``hop[0]`` must be real.
    pair : sequence of complex
        ``pair[l-1] = B_{0,l}`` for ``l = 1..n0-1``; ``B_{0,-l} = -B_{0,l}``.
    """

    hop: tuple[complex, ...]
    pair: tuple[complex, ...] = ()

    def __post_init__(self):
        hop = _as_complex_tuple(self.hop)
        pair = _as_complex_tuple(self.pair)
        if not hop:
            hop = (0j,)
        if abs(hop[0].imag) > 0.0:
            raise ValueError(f"hop[0] must be real (hermiticity), got {hop[0]!r}")
        vals = np.array(hop + pair, dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "hop", hop)
        object.__setattr__(self, "pair", pair)

    @property
    def n0(self) -> int:
        """Range: couplings vanish at distance ``>= n0``."""
        return max(len(self.hop), len(self.pair) + 1)

    @property
    def is_gauge_invariant(self) -> bool:
        return all(p == 0 for p in self.pair)

    def hop_coeff(self, n: int) -> complex:
        """``A_{0,n}`` for any integer ``n``."""
        if 0 <= n < len(self.hop):
            return self.hop[n]
        if 0 < -n < len(self.hop):
            return self.hop[-n].conjugate()
        return 0j

    def pair_coeff(self, n: int) -> complex:
        """``B_{0,n}`` for any integer ``n``."""
        if 1 <= n <= len(self.pair):
            return self.pair[n - 1]
        if 1 <= -n <= len(self.pair):
            return -self.pair[-n - 1]
        return 0j

    def hop_symbol(self) -> TrigPoly:
        K = self.n0 - 1
        return TrigPoly([self.hop_coeff(n) for n in range(-K, K + 1)])

    def pair_symbol(self) -> TrigPoly:
        K = self.n0 - 1
        return TrigPoly([self.pair_coeff(n) for n in range(-K, K + 1)])

    def hop_matrix(self, N: int, boundary: str = "open") -> np.ndarray:
        return _toeplitz(self.hop_coeff, self.n0, N, boundary)

    def pair_matrix(self, N: int, boundary: str = "open") -> np.ndarray:
        return _toeplitz(self.pair_coeff, self.n0, N, boundary)

    # simple model-to-model operations
    def scaled(self, s: float) -> "ModelSpec":
        return ModelSpec(tuple(s * h for h in self.hop), tuple(s * p for p in self.pair))

    def particle_hole(self) -> "ModelSpec":
        """Model after the local relabelling ``b_i -> b_i^+``."""
        hop = (-self.hop[0].real,) + tuple(-h.conjugate() for h in self.hop[1:])
        return ModelSpec(hop, tuple(-p.conjugate() for p in self.pair))

    def reflected(self) -> "ModelSpec":
        """Model after the site reflection ``i -> -i``."""
        return ModelSpec(tuple(h.conjugate() for h in self.hop), tuple(-p for p in self.pair))

    def real_hopping(self) -> "ModelSpec":
        """Same model with ``A`` replaced by its real part."""
        return ModelSpec(tuple(complex(h.real) for h in self.hop), self.pair)

    def model_hash(self) -> str:
        """Short stable digest of the coefficients."""
        payload = json.dumps(
            {"hop": [[h.real, h.imag] for h in self.hop], "pair": [[p.real, p.imag] for p in self.pair]},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _toeplitz(coeff, n0, N, boundary):
    if boundary not in ("open", "periodic"):
        raise ValueError(f"unknown boundary {boundary!r}")
    M = np.zeros((N, N), dtype=complex)
    for n in range(-(n0 - 1), n0):
        c = coeff(n)
        if c == 0:
            continue
        for i in range(N):
            j = i + n
            if 0 <= j < N:
                M[i, j] += c
            elif boundary == "periodic":
                M[i, j % N] += c
    return M


@dataclass(frozen=True)
class SymbolSample:
    """Values of the symbol components at an array of angles."""

    theta: np.ndarray
    a_s: np.ndarray
    a_a: np.ndarray
    b_s: np.ndarray
    b_a: np.ndarray
    delta: np.ndarray
    lam: np.ndarray
    m_step: np.ndarray
    p_step: np.ndarray


@dataclass(frozen=True)
class SymbolComponents:
    """Real circle functions derived from a model, stored as Fourier series.

    ``a_s = A(t) + A(-t)``, ``a_a = A(-t) - A(t)``, ``b_s = 2 Re B(t)``,
    ``b_a = 2 Im B(t)`` and ``delta = a_s^2 + b_s^2 + b_a^2``.
    """

    a: TrigPoly
    b: TrigPoly
    a_s: TrigPoly
    a_a: TrigPoly
    b_s: TrigPoly
    b_a: TrigPoly
    delta: TrigPoly
    # lam(t) * lam(-t) = -gap_product / 4; vanishes identically for flat bands
    gap_product: TrigPoly = field(repr=False)

    def sample(self, theta) -> SymbolSample:
        theta = np.asarray(theta, dtype=float)
        a_s = self.a_s(theta).real
        a_a = self.a_a(theta).real
        b_s = self.b_s(theta).real
        b_a = self.b_a(theta).real
        delta = a_s**2 + b_s**2 + b_a**2
        root = np.sqrt(delta)
        lam_p = 0.5 * (a_a + root)
        lam_m = 0.5 * (-a_a + root)
        sp, sm = np.sign(lam_p), np.sign(lam_m)
        return SymbolSample(
            theta, a_s, a_a, b_s, b_a, delta, lam_p, 0.5 * (sp - sm), 0.5 * (sp + sm)
        )

    def dispersion(self, theta):
        """``Lambda(theta) = (a_a + sqrt(delta)) / 2``."""
        theta = np.asarray(theta, dtype=float)
        a_s = self.a_s(theta).real
        b_s = self.b_s(theta).real
        b_a = self.b_a(theta).real
        return 0.5 * (self.a_a(theta).real + np.sqrt(a_s**2 + b_s**2 + b_a**2))

    @property
    def scale(self) -> float:
        return max(self.a.norm(), self.b.norm(), 1e-300)


def symbol_components(model: ModelSpec) -> SymbolComponents:
    a = model.hop_symbol()
    b = model.pair_symbol()
    ar = a.reflect()
    a_s = a + ar
    a_a = ar - a
    b_s = b + b.conj()
    b_a = (b - b.conj()) * (-1j)
    delta = a_s * a_s + b_s * b_s + b_a * b_a
    gap = a_a * a_a - delta
    return SymbolComponents(a, b, a_s, a_a, b_s, b_a, delta, gap)


def eval_components(model: ModelSpec, theta) -> SymbolSample:
    """Evaluate all symbol components at ``theta`` (scalar or array)."""
    return symbol_components(model).sample(theta)


@dataclass(frozen=True)
class PhasePoint:
    """Classification of a model.

    Attributes
    ----------
    critical : bool
        The dispersion reaches zero somewhere on the circle.
    reflection_breaking : bool
        The dispersion is negative on an interval, so the ground state
        occupies an asymmetric set of momenta.
    dispersion_zeros : tuple of float
        Sign changes and touchings of the dispersion in ``[-pi, pi)``.
    negative_region : tuple of (float, float)
        Intervals inside ``[-pi, pi)`` where the dispersion is negative.
    degenerate : bool
        Flat band: the dispersion vanishes on an interval.
    crossings : tuple of float
        Subset of ``dispersion_zeros`` where the sign changes.
    """

    critical: bool
    reflection_breaking: bool
    dispersion_zeros: tuple[float, ...]
    negative_region: tuple[tuple[float, float], ...]
    degenerate: bool = False
    crossings: tuple[float, ...] = ()


ZERO_TOL = 1e-10


def _dedupe_angles(values, tol):
    out: list[float] = []
    for v in sorted(values):
        if out and abs(v - out[-1]) < tol:
            continue
        out.append(v)
    if len(out) > 1 and (out[0] + TWO_PI - out[-1]) < tol:
        out.pop()
    return out


def _golden_min(f, a, b, tol=1e-13):
    """Golden-section search for a minimum of ``f`` on ``[a, b]``.

    Derivative-free and reliable for the V-shaped minima of ``|.|``-type
    kinks, where parabolic steps stall.
    """
    g = 0.5 * (math.sqrt(5.0) - 1.0)
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return float(x), f(x)


def classify(model: ModelSpec, grid_size: int | None = None) -> PhasePoint:
    """Locate the zeros of the dispersion and classify the model.

    Parameters
    ----------
    model : ModelSpec
    grid_size : int, optional
        Number of scan points on the circle, at least ``4 (2 n0 + 1)``.
    """
    floor = 4 * (2 * model.n0 + 1)
    if grid_size is None:
        grid_size = max(2048, 64 * (2 * model.n0 + 1))
    if grid_size < floor:
        raise ValueError(f"grid_size must be >= {floor}")
    comp = symbol_components(model)
    scale = comp.scale

    if np.all(np.abs(comp.gap_product.coeffs) <= 1e-13 * scale**2):
        return PhasePoint(True, False, (), (), degenerate=True)

    lam = comp.dispersion
    theta = -math.pi + TWO_PI * np.arange(grid_size) / grid_size
    vals = lam(theta)
    h = TWO_PI / grid_size
    f = lambda t: float(lam(t))
    zero_tol = 1e-9 * scale

    crossings: list[float] = []
    touchings: list[float] = []
    nxt = np.roll(vals, -1)
    for i in np.nonzero(vals == 0.0)[0]:
        # exact zero at a grid point: a crossing if neighbours differ in sign
        if np.sign(vals[i - 1]) * np.sign(nxt[i]) < 0:
            crossings.append(float(theta[i]))
        else:
            touchings.append(float(theta[i]))
    for i in np.nonzero(vals * nxt < 0)[0]:
        a = theta[i]
        fa, fb = f(a), f(a + h)
        if fa * fb < 0:
            crossings.append(float(brentq(f, a, a + h, xtol=1e-14, rtol=4 * np.finfo(float).eps)))
        else:
            # rounding puts the sign change at an endpoint
            crossings.append(float(a if abs(fa) <= abs(fb) else a + h))
    prv = np.roll(vals, 1)
    for i in np.nonzero((vals > 0) & (vals <= prv) & (vals <= nxt))[0]:
        x, fx = _golden_min(f, theta[i] - h, theta[i] + h)
        if fx <= zero_tol:
            touchings.append(x)
    crossings = [float(wrap_angle(c)) for c in _dedupe_angles([float(wrap_angle(c)) for c in crossings], 1e-9)]
    touchings = [
        t for t in _dedupe_angles([float(wrap_angle(t)) for t in touchings], 1e-7)
        if all(abs(wrap_angle(t - c)) > 1e-7 for c in crossings)
    ]
    zeros = tuple(sorted(crossings + touchings))
    critical = bool(zeros) or bool(np.min(vals) <= 0.0)

    negative: list[tuple[float, float]] = []
    cs = sorted(crossings)
    for k, a in enumerate(cs):
        b = cs[k + 1] if k + 1 < len(cs) else cs[0] + TWO_PI
        if f(wrap_angle(0.5 * (a + b))) < 0:
            if b <= math.pi:
                negative.append((a, b))
            else:
                negative.append((a, math.pi))
                negative.append((-math.pi, b - TWO_PI))
    negative.sort()
    return PhasePoint(
        critical=critical,
        reflection_breaking=bool(negative),
        dispersion_zeros=zeros,
        negative_region=tuple(negative),
        degenerate=False,
        crossings=tuple(sorted(crossings)),
    )


def nn_model(gamma: float, h: float, D: float) -> ModelSpec:
    """Nearest-neighbour XY chain in a transverse field with DM coupling.

    The spin chain ``sum (1+g) sx sx + (1-g) sy sy + D (sx sy - sy sx) + h sz``
    maps to a quadratic fermion chain; the returned coefficients are those of
    one half of it,

        sum (1-iD) b_j^+ b_{j+1} + h.c. + g (b_j^+ b_{j+1}^+ - b_j b_{j+1}) - 2h b_j^+ b_j,

    whose dispersion is ``Lambda/2 = D sin t + sqrt((cos t - h)^2 + g^2 sin^2 t)``.
    """
    return ModelSpec(hop=(complex(-2.0 * h), complex(1.0, -D)), pair=(complex(gamma),))


def asymmetric_range3_model() -> ModelSpec:
    """Critical range-3 chain with complex hopping and pairing.

    ``A_{0,0} = 12``, ``A_{0,1} = 7+28i``, ``A_{0,2} = 4+5i``,
    ``B_{0,1} = -(11-10i)``, ``B_{0,2} = -(3-4i)``.  Its left and right
    blocks carry measurably different entropies on open chains.
    """
    p1, p2 = 11 + 10j, 3 + 4j
    return ModelSpec(hop=(12.0, 7 + 28j, 4 + 5j), pair=(-p1.conjugate(), -p2.conjugate()))


def nn_region_label(gamma: float, h: float, D: float, rtol: float = 1e-12) -> str:
    """Analytic phase label from ``D'^2 = D^2 + 1 - gamma^2``."""
    dp2 = D * D + 1.0 - gamma * gamma
    if dp2 >= 1.0 - rtol and h * h <= dp2 * (1 + rtol):
        return "region-i"
    if math.isclose(abs(h), 1.0, rel_tol=rtol, abs_tol=rtol):
        return "|h|=1"
    return "non-critical"


def nn_phase_region(gamma: float, h: float, D: float, grid_size: int | None = None):
    """Classify a nearest-neighbour model and attach the analytic region label.

    Returns
    -------
    point : PhasePoint
    label : {"region-i", "|h|=1", "non-critical"}
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    return classify(nn_model(gamma, h, D), grid_size), nn_region_label(gamma, h, D)
