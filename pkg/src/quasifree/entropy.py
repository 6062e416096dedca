"""Von Neumann entropy of a block from its correlation data."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import xlogy

from .correlations import DEFAULT_TOL, assemble_block_toeplitz, gauge_kernel, pi_blocks
from .model import ModelSpec

__all__ = [
    "EntropyDomainError",
    "EntropySolverError",
    "EntropySpectrum",
    "EntropyCurve",
    "e_func",
    "binary_entropy",
    "majorana_entropy",
    "gauge_entropy",
    "entropy_scan",
    "gauge_entropy_scan",
    "max_entropy",
    "CLAMP_SLACK",
]

CLAMP_SLACK = 1e-9


class EntropyDomainError(ValueError):
    """Spectral values outside ``[0, 1]`` by more than the clamp slack."""


class EntropySolverError(RuntimeError):
    """The eigensolver failed."""


def e_func(x, nu):
    """``e(x, nu) = -(x+nu)/2 ln((x+nu)/2) - (x-nu)/2 ln((x-nu)/2)``, ``0 ln 0 = 0``."""
    x = np.asarray(x, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0) or np.any(nu > x):
        raise EntropyDomainError("e(x, nu) requires 0 <= nu <= x")
    p = 0.5 * (x + nu)
    q = 0.5 * (x - nu)
    out = -xlogy(p, p) - xlogy(q, q)
    return float(out) if out.ndim == 0 else out


def binary_entropy(lam):
    lam = np.asarray(lam, dtype=float)
    return -xlogy(lam, lam) - xlogy(1.0 - lam, 1.0 - lam)


def _clamp(values: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> tuple[np.ndarray, float]:
    over = float(max(0.0, lo - values.min(initial=lo), values.max(initial=hi) - hi))
    if over > CLAMP_SLACK:
        raise EntropyDomainError(f"spectral value outside [{lo}, {hi}] by {over:.3e}")
    return np.clip(values, lo, hi), over


@dataclass(frozen=True)
class EntropySpectrum:
    """Spectral data entering the entropy.

    Attributes
    ----------
    values : ndarray
        ``nu_j`` (majorana path) or ``lambda_j`` (gauge path), in ``[0, 1]``.
    path : {"majorana", "gauge"}
    overshoot : float
        Largest excursion outside ``[0, 1]`` before clamping.
    """

    values: np.ndarray
    path: str
    overshoot: float = 0.0


def _eigvalsh(M: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        try:
            cond = np.linalg.cond(M)
        except np.linalg.LinAlgError:
            cond = float("nan")
        raise EntropySolverError(f"eigensolver failed ({exc}); size {M.shape[0]}, condition {cond:.3e}") from exc


def majorana_entropy(C: np.ndarray) -> tuple[EntropySpectrum, float]:
    """Entropy of a block from its real antisymmetric ``2L x 2L`` matrix ``C``.

    The ``nu_j`` are the singular values of ``C``, read off from the doubly
    degenerate eigenvalues of ``C^T C``.
    """
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    if C.ndim != 2 or n != C.shape[1] or n % 2:
        raise ValueError("C must be a square matrix of even size")
    ev = _eigvalsh(C.T @ C)
    ev, over = _clamp(ev)
    nu2 = ev.reshape(-1, 2).mean(axis=1)
    nu = np.sqrt(nu2)
    spec = EntropySpectrum(nu, "majorana", over)
    return spec, float(np.sum(e_func(1.0, nu)))


def gauge_entropy(kernel: np.ndarray) -> tuple[EntropySpectrum, float]:
    """Entropy of a block from its hermitian kernel ``<b_j^+ b_l>``."""
    K = np.asarray(kernel)
    if np.max(np.abs(K - K.conj().T), initial=0.0) > 1e-10:
        raise ValueError("kernel must be hermitian")
    lam, over = _clamp(_eigvalsh(K))
    return EntropySpectrum(lam, "gauge", over), float(np.sum(binary_entropy(lam)))


@dataclass
class EntropyCurve:
    """Block entropies ``S_L`` with provenance."""

    L: np.ndarray
    S: np.ndarray
    method: str
    model_hash: str = ""
    spectra: list = field(default_factory=list, repr=False)

    def to_csv(self, header: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["L", "S_L", "method", "model_hash"])
        for L, S in zip(self.L, self.S):
            w.writerow([int(L), f"{S:.12g}", self.method, self.model_hash])
        return buf.getvalue()


def _check_ascending(L_list) -> np.ndarray:
    Ls = np.asarray(list(L_list), dtype=int)
    if Ls.size == 0 or np.any(Ls < 1) or np.any(np.diff(Ls) <= 0):
        raise ValueError("L_list must be a non-empty ascending list of positive integers")
    return Ls


def entropy_scan(model: ModelSpec, L_list: Iterable[int], tol: float = DEFAULT_TOL) -> EntropyCurve:
    """``S_L`` of the infinite chain for each requested block length.

    All blocks up to the largest offset are integrated once; each ``C_L``
    is the top-left corner of the largest one.
    """
    Ls = _check_ascending(L_list)
    C, _ = assemble_block_toeplitz(pi_blocks(model, int(Ls[-1]) - 1, tol), int(Ls[-1]))
    S = np.empty(Ls.size)
    for i, L in enumerate(Ls):
        _, S[i] = majorana_entropy(C[: 2 * L, : 2 * L])
    return EntropyCurve(Ls, S, "exact-thermo", model.model_hash())


def gauge_entropy_scan(model: ModelSpec, L_list: Iterable[int], tol: float = DEFAULT_TOL) -> EntropyCurve:
    """Same as :func:`entropy_scan` through the gauge-invariant kernel."""
    Ls = _check_ascending(L_list)
    K = gauge_kernel(model, int(Ls[-1]), tol)
    S = np.array([gauge_entropy(K[:L, :L])[1] for L in Ls])
    return EntropyCurve(Ls, S, "exact-thermo", model.model_hash())


def max_entropy(L: int) -> float:
    """``L ln 2``, the entropy of a maximally mixed block."""
    return L * math.log(2.0)
