import math

import mpmath
import numpy as np
import pytest

from quasifree.asymptotics import (
    C_IS,
    C_ISDM,
    EULER_GAMMA,
    I3,
    AsymptoteResult,
    JumpData,
    barnes_g_log,
    find_symbol_zeros,
    fisher_hartwig_log_det,
    general_gauge_asymptote,
    ising_dm_entropy,
    keating_mezzadri_asymptote,
    recompute_i3,
    toeplitz_log_det,
)
from quasifree.entropy import gauge_entropy_scan
from quasifree.model import ModelSpec, nn_model
from quasifree.transforms import kw_selfdual_reduce


@pytest.mark.parametrize("z", [0.0, 0.3, -0.3, 1.0, 1.7, 3.0, -1.5, 0.4j, 0.2 + 0.3j, -0.45 - 0.1j])
def test_barnes_g_against_mpmath(z):
    ref = complex(mpmath.log(mpmath.barnesg(1 + z)))
    got = barnes_g_log(z)
    if isinstance(z, float):
        assert isinstance(got, float)
        assert abs(got - ref.real) < 1e-12
    else:
        assert abs(got - ref) < 1e-12


@pytest.mark.parametrize("z", [0.2, 0.7, 1.3, 0.25 + 0.4j])
def test_barnes_g_recurrence(z):
    # G(z + 2) = Gamma(z + 1) G(z + 1)
    lhs = barnes_g_log(complex(z) + 1)
    rhs = complex(mpmath.loggamma(complex(z) + 1)) + barnes_g_log(complex(z))
    assert abs(lhs - rhs) < 1e-12


def test_barnes_g_pole():
    with pytest.raises(ValueError):
        barnes_g_log(-2.0)


def test_constants():
    assert EULER_GAMMA == float(mpmath.euler)
    assert I3 == 0.0221603
    assert C_IS == pytest.approx(0.478558, abs=5e-7)
    assert C_ISDM == pytest.approx(0.726067, abs=5e-7)
    # R = 2 at theta = pm pi/2 gives the gauge form of C_IsDM
    res = general_gauge_asymptote(JumpData((math.pi / 2, 3 * math.pi / 2)))
    assert res.slope == 1 / 3
    assert res.constant == pytest.approx(C_ISDM, abs=1e-15)


def test_jump_data_validation():
    with pytest.raises(ValueError):
        JumpData((1.0,))
    with pytest.raises(ValueError):
        JumpData((2.0, 1.0))
    with pytest.raises(ValueError):
        JumpData((0.0, 1.0))


def test_find_symbol_zeros():
    j = find_symbol_zeros(ModelSpec((-1.0, -1.0)))  # -1 - 2 cos t
    assert np.allclose(j.zeros, [2 * math.pi / 3, 4 * math.pi / 3], atol=1e-13)
    with pytest.raises(ValueError):
        find_symbol_zeros(nn_model(1, 1, 0))
    with pytest.raises(ValueError, match="double zero"):
        find_symbol_zeros(ModelSpec((2.0, -1.0)))


@pytest.mark.parametrize("hop", [(0.3, -1.0, -1.2), (0.1, -1.0, -0.2, 0.9), (-0.5, -1.0), (0.2, -1.0, 0.3)])
def test_symmetric_form_matches_general(hop):
    j = find_symbol_zeros(ModelSpec(hop))
    a, b = general_gauge_asymptote(j), keating_mezzadri_asymptote(j)
    assert a.slope == b.slope
    assert abs(a.constant - b.constant) < 1e-13


def test_symmetric_form_rejects_asymmetric_zeros():
    j = find_symbol_zeros(ModelSpec((0.3, -1.0 + 0.4j, -0.5)))
    with pytest.raises(ValueError, match="not symmetric"):
        keating_mezzadri_asymptote(j)


def test_asymptote_predicts_exact_entropy():
    m = ModelSpec((0.4, -1.0 + 0.3j, 0.5 - 0.2j))
    res = general_gauge_asymptote(find_symbol_zeros(m))
    S = gauge_entropy_scan(m, [100, 200, 400]).S
    dev = np.abs(S - res.predict([100, 200, 400]))
    assert dev[-1] < 1e-3 and dev[-1] < dev[0]


@pytest.mark.parametrize("D", [0.3, 0.5, 2.0, 3.0, -2.5])
def test_ising_dm_closed_form_is_half_of_dual(D):
    res = ising_dm_entropy(D, check=False)
    dual = general_gauge_asymptote(find_symbol_zeros(kw_selfdual_reduce(nn_model(1, 1, D)).reduced))
    for L in (10.0, 1000.0):
        assert res.predict(L) == pytest.approx(0.5 * dual.predict(2 * L), abs=1e-9)
    assert res.slope == 0.5 * dual.slope


def test_ising_dm_values():
    assert ising_dm_entropy(2.0).constant == pytest.approx(math.log(0.75) / 12 + C_ISDM, abs=1e-15)
    assert ising_dm_entropy(0.5).constant == C_IS
    assert isinstance(ising_dm_entropy(1.0), AsymptoteResult)


@pytest.mark.parametrize("lam", [3.0, 1.5, 2.0 + 1.0j])
def test_fisher_hartwig_determinant_converges(lam):
    m = ModelSpec((-1.0, -1.0))
    diffs = []
    for L in (16, 32, 64):
        d = toeplitz_log_det(m, lam, L) - fisher_hartwig_log_det(m, lam, L)
        # the asymptote is defined modulo 2 pi i
        d = complex(d.real, (d.imag + math.pi) % (2 * math.pi) - math.pi)
        diffs.append(abs(d))
    assert diffs[-1] < 2e-3
    assert diffs[2] < diffs[0]


def test_fisher_hartwig_asymmetric_symbol():
    m = ModelSpec((0.3, -1.0 + 0.5j, -1.2 + 0.2j))
    # four jumps: corrections decay like 1/L with oscillations at small L
    errs = [abs(toeplitz_log_det(m, 3.0, L) - fisher_hartwig_log_det(m, 3.0, L)) for L in (32, 128, 512)]
    assert errs[-1] < 1e-4 and errs[2] < errs[1] < errs[0]


def test_recompute_i3():
    assert recompute_i3() == pytest.approx(I3, abs=1e-6)
