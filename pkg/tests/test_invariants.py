"""Cross-module invariants checked on random model ensembles."""
import math

import numpy as np
import pytest
import scipy.linalg

from conftest import random_model
from quasifree.asymptotics import (
    C_IS,
    C_ISDM,
    EULER_GAMMA,
    I3,
    find_symbol_zeros,
    general_gauge_asymptote,
)
from quasifree.correlations import correlation_matrix, finite_correlations, gauge_kernel
from quasifree.entropy import entropy_scan, gauge_entropy, gauge_entropy_scan, majorana_entropy
from quasifree.finite import FiniteChain, entropy_profile, ground_state, saturation_entropy
from quasifree.model import ModelSpec, classify, eval_components, nn_model
from quasifree.oracle import free_fermion_spectrum, spin_hamiltonian
from quasifree.transforms import (
    MajoranaCoupling,
    decouple_direct,
    from_majorana,
    kw_selfdual_reduce,
    rotate_to_real_pairing,
    selfdual_condition,
    to_majorana,
    xy_ising_decouple,
)

GRID = np.linspace(-math.pi, math.pi, 1001)


def _models(seed, n, **kw):
    rng = np.random.default_rng(seed)
    return [random_model(rng, int(rng.integers(2, 4)), **kw) for _ in range(n)]


def _noncritical(seed, n):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        m = random_model(rng, int(rng.integers(2, 4)))
        # a large on-site term gaps the spectrum; the scale keeps some reflection-odd hopping
        m = ModelSpec((m.hop[0] + 6.0 * np.sign(m.hop[0].real),) + m.hop[1:], m.pair)
        if not classify(m).critical:
            out.append(m)
    return out


# ------------------------------------------------------------------ model core

def test_gap_function_identity_and_sign():
    for m in _models(1, 20):
        c = eval_components(m, GRID)
        assert np.all(c.delta >= 0)
        assert np.max(np.abs(c.delta - (c.a_s**2 + c.b_s**2 + c.b_a**2))) <= 1e-12 * max(1.0, c.delta.max())


def test_real_models_never_break_reflection():
    for m in _models(2, 50, complex_hop=False):
        assert not classify(m).reflection_breaking


def test_reflection_breaking_implies_critical():
    for m in _models(3, 30):
        pt = classify(m)
        assert not pt.reflection_breaking or pt.critical


def test_noncritical_symbol_ignores_imaginary_hopping():
    for m in _noncritical(4, 50):
        a, b = eval_components(m, GRID), eval_components(m.real_hopping(), GRID)
        assert np.all(a.m_step == 0)
        assert np.max(np.abs(a.p_step - b.p_step)) <= 1e-12
        assert np.max(np.abs(a.delta - b.delta)) <= 1e-12 * max(1.0, a.delta.max())


def test_classification_under_reflection():
    for m in _models(5, 20):
        a, b = classify(m), classify(m.reflected())
        assert a.critical == b.critical and a.reflection_breaking == b.reflection_breaking
        za = np.sort(np.mod(-np.asarray(a.dispersion_zeros), 2 * math.pi))
        zb = np.sort(np.mod(np.asarray(b.dispersion_zeros), 2 * math.pi))
        assert za.shape == zb.shape and np.allclose(za, zb, atol=1e-8)


def test_dispersion_examples():
    t = np.linspace(-3, 3, 13)
    assert np.allclose(eval_components(nn_model(1, 0, 0), t).lam, 2.0, atol=1e-14)
    lam = eval_components(nn_model(1, 1, 2), t).lam
    assert np.allclose(lam / 2, 2 * np.sin(t) + np.sqrt(2 - 2 * np.cos(t)), atol=1e-13)
    h = 0.7
    assert np.allclose(ModelSpec((-h, 1.0)).hop_symbol()(t), 2 * np.cos(t) - h, atol=1e-14)


# ------------------------------------------------------------------ correlations

def test_gauge_kernel_hermitian_with_spectrum_in_unit_interval():
    for m in _models(6, 10, pairing=False):
        K = gauge_kernel(m, 20)
        assert np.max(np.abs(K - K.conj().T)) < 1e-13
        w = np.linalg.eigvalsh(K)
        assert w.min() > -1e-10 and w.max() < 1 + 1e-10


def test_gauge_and_majorana_paths_agree_on_random_models():
    for m in _models(7, 10, pairing=False):
        Ls = [1, 7, 20]
        assert np.max(np.abs(entropy_scan(m, Ls).S - gauge_entropy_scan(m, Ls).S)) < 1e-9


def test_real_models_have_mirror_symmetric_profiles():
    for m in _models(8, 5, complex_hop=False):
        assert np.max(np.abs(entropy_profile(FiniteChain(m, 24)).dS)) < 1e-10


def test_empty_and_full_bands():
    assert np.allclose(gauge_kernel(ModelSpec((-3.0, 1.0)), 4), np.eye(4), atol=1e-14)
    assert np.allclose(gauge_kernel(ModelSpec((3.0, 1.0)), 4), 0, atol=1e-14)


def test_current_carrying_kernel_is_complex_hermitian():
    K = gauge_kernel(ModelSpec((0.5, -1.0 + 0.5j)), 6)
    assert np.max(np.abs(K - K.conj().T)) < 1e-13
    assert abs(K[0, 1].imag) > 1e-3


def test_single_site_ising_blocks():
    # strong field: the on-site pair is fully correlated
    assert abs(abs(correlation_matrix(nn_model(1, 50, 0), 1)[0, 1]) - 1) < 2e-4
    # zero field: the correlated pair is y_j, x_{j+1}
    C = correlation_matrix(nn_model(1, 0, 0), 2)
    assert abs(C[0, 1]) < 1e-12 and abs(abs(C[1, 2]) - 1) < 1e-12


def test_two_site_open_chain():
    st = ground_state(FiniteChain(ModelSpec((0.0, -1.0)), 2))
    G = st.bdag_b()
    assert G[0, 0].real == pytest.approx(0.5, abs=1e-15)
    assert G[0, 1].real == pytest.approx(0.5, abs=1e-15)
    assert majorana_entropy(st.C[:2, :2])[1] == pytest.approx(math.log(2), abs=1e-14)


def test_large_periodic_chain_matches_thermodynamic_limit():
    m = ModelSpec((0.3, -1.0 + 0.4j, 0.2), (0.5, 0.2j))
    C = correlation_matrix(m, 6)
    assert np.max(np.abs(finite_correlations(m, 4096).majorana_matrix()[:12, :12] - C)) < 1e-6


def test_pairing_expectation_antisymmetric():
    for m in _models(9, 3):
        bb = ground_state(FiniteChain(m, 10)).b_b()
        assert np.max(np.abs(bb + bb.T)) < 1e-13


# ------------------------------------------------------------------ entropy

def test_particle_hole_invariance_of_infinite_chain():
    for m in _models(10, 5):
        Ls = [1, 5, 20]
        assert np.max(np.abs(entropy_scan(m, Ls).S - entropy_scan(m.particle_hole(), Ls).S)) < 1e-10


def test_saturation_is_monotone_and_bounded():
    for m in _noncritical(11, 5):
        S = entropy_scan(m, range(1, 201)).S
        assert np.all(np.diff(S) >= -1e-10)
        assert abs(S[-1] - S[-2]) < 1e-6


def test_singular_values_against_independent_svd():
    rng = np.random.default_rng(12)
    for _ in range(20):
        n = int(rng.integers(1, 12))
        X = rng.normal(size=(2 * n, 2 * n))
        C = X - X.T
        C /= 1.01 * np.linalg.norm(C, 2)
        spec, _ = majorana_entropy(C)
        sv = scipy.linalg.svd(C, compute_uv=False, lapack_driver="gesvd")
        # singular values of a real antisymmetric matrix come in equal pairs
        assert np.max(np.abs(np.sort(spec.values) - np.sort(sv[::2]))) < 1e-10


def test_entropy_examples():
    assert gauge_entropy(np.eye(4))[1] == 0.0
    assert gauge_entropy(0.5 * np.eye(3))[1] == pytest.approx(3 * math.log(2), abs=1e-14)
    S100 = entropy_scan(nn_model(1, 1, 0), [100]).S[0]
    assert S100 == pytest.approx(math.log(100) / 6 + C_IS, abs=1e-3)
    m = ModelSpec((0.0, -1.0))
    curve = entropy_scan(m, range(50, 401, 10))
    assert np.polyfit(np.log(curve.L), curve.S, 1)[0] == pytest.approx(1 / 3, abs=0.01)
    assert entropy_scan(m, [1]).S[0] == majorana_entropy(correlation_matrix(m, 1))[1]


def test_xx_block_against_finite_chain():
    # periodic rings with N = 2 mod 4 avoid a zero mode at the Fermi points;
    # the finite-size shift follows the chord length, about -0.085 at N = 26
    m = ModelSpec((0.0, -1.0))
    L = 10
    S_inf = entropy_scan(m, [L]).S[0]
    assert abs(S_inf - gauge_entropy(gauge_kernel(m, L))[1]) < 1e-9
    for N in (26, 50):
        C = ground_state(FiniteChain(m, N, "periodic")).C
        dev = majorana_entropy(C[: 2 * L, : 2 * L])[1] - S_inf
        shift = math.log(N / (math.pi * L) * math.sin(math.pi * L / N)) / 3
        assert abs(dev - shift) < 2e-3
    assert abs(dev) <= 0.05


# ------------------------------------------------------------------ asymptotics

def _critical_gauge_models(seed, n):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        n0 = int(rng.integers(2, 4))
        hop = rng.normal(size=n0) + 1j * rng.normal(size=n0)
        hop[0] = rng.normal()
        m = ModelSpec(tuple(hop))
        try:
            jumps = find_symbol_zeros(m)
        except ValueError:
            continue
        if len(jumps.zeros) not in (2, 4):
            continue
        gaps = np.diff(np.concatenate([jumps.zeros, [jumps.zeros[0] + 2 * math.pi]]))
        if gaps.min() >= 0.3:
            out.append((m, jumps))
    return out


def test_asymptote_against_exact_on_ten_models():
    Ls = [100, 200, 400]
    models = _critical_gauge_models(13, 10)
    assert {len(j.zeros) for _, j in models} == {2, 4}
    for m, jumps in models:
        dev = np.abs(gauge_entropy_scan(m, Ls).S - general_gauge_asymptote(jumps).predict(Ls))
        assert dev[-1] < 0.02 and dev[2] < dev[1] < dev[0]


def test_asymptote_constants_are_real():
    for _, jumps in _critical_gauge_models(14, 5):
        assert isinstance(general_gauge_asymptote(jumps).constant, float)


def test_closed_form_constants():
    ln2 = math.log(2)
    assert C_IS == pytest.approx((1 + EULER_GAMMA) / 6 + ln2 / 3 - ln2 * I3, abs=1e-12)
    assert C_ISDM == pytest.approx((1 + EULER_GAMMA) / 3 + ln2 / 3 - 2 * ln2 * I3, abs=1e-12)
    assert C_IS == pytest.approx(0.5 * C_ISDM + ln2 / 6, abs=1e-12)


def test_asymptote_scaling_in_l():
    res = general_gauge_asymptote(find_symbol_zeros(ModelSpec((-1.0, 1.0))))
    assert res.slope == 1 / 3
    assert res.predict(200.0) - res.predict(100.0) == pytest.approx(math.log(2) / 3, abs=1e-14)


def test_xx_constants_against_numerics():
    for h in (0.0, 1.0):
        m = ModelSpec((-h, 1.0))
        res = general_gauge_asymptote(find_symbol_zeros(m))
        assert abs(gauge_entropy_scan(m, [500]).S[0] - res.predict(500)) < 0.01


def test_dual_zeros_of_ising_dm():
    zeros = find_symbol_zeros(kw_selfdual_reduce(nn_model(1, 1, 2)).reduced).zeros
    assert np.allclose(zeros, [math.pi / 3, math.pi, 5 * math.pi / 3, 2 * math.pi], atol=1e-10)


def test_no_asymptote_for_gapped_band():
    jumps = find_symbol_zeros(ModelSpec((-3.0, 1.0)))
    assert jumps.zeros == ()
    with pytest.raises(ValueError, match="not critical"):
        general_gauge_asymptote(jumps)


# ------------------------------------------------------------------ transforms

def test_coupling_patterns():
    for m in _models(15, 5, complex_hop=False):
        t = to_majorana(m).blocks
        assert np.all(t[:, 0, 0] == 0) and np.all(t[:, 1, 1] == 0)
    for m in _models(16, 5, imaginary=True):
        t = to_majorana(m).blocks
        assert np.all(t[:, 0, 1] == 0) and np.all(t[:, 1, 0] == 0)


def test_ising_dm_couplings():
    D = 2.0
    seq = to_majorana(nn_model(1, 1, D)).sequence()
    c = (seq.size - 1) // 2
    assert seq[c + 1] == pytest.approx(0.5, abs=1e-15)
    assert seq[c + 2] == pytest.approx(-D / 4, abs=1e-15)
    assert np.all(seq[c + 3 :] == 0)


def test_selfdual_predicate_equals_toeplitz_flag():
    models = _models(17, 50) + [nn_model(1, 1, D) for D in (0.0, 0.3, 2.0)] + [nn_model(1, 0.9, 0)]
    for m in models:
        assert selfdual_condition(m) == to_majorana(m).genuine_toeplitz


def test_every_transform_preserves_entropy_by_its_rule():
    Ls = [10, 20, 50]
    red = kw_selfdual_reduce(nn_model(1, 1, 0.7))
    assert np.max(np.abs(red.entropies(Ls) - entropy_scan(red.original, Ls).S)) < 1e-6
    m = _models(18, 1, imaginary=True)[0]
    dd = decouple_direct(m)
    assert max(abs(dd.entropy(L) - S) for L, S in zip(Ls, entropy_scan(m, Ls).S)) < 1e-6
    xy = nn_model(0.0, 0.0, 0.0)
    c1, c2 = (from_majorana(c) for c in xy_ising_decouple(to_majorana(xy)))
    S2 = entropy_scan(xy, [2 * L for L in Ls]).S
    assert np.max(np.abs(S2 - entropy_scan(c1, Ls).S - entropy_scan(c2, Ls).S)) < 1e-6
    rot = ModelSpec((0.5, -1.0), (0.7 * np.exp(0.4j),))
    assert np.max(np.abs(entropy_scan(rot, Ls).S - entropy_scan(rotate_to_real_pairing(rot).model, Ls).S)) < 1e-6


def test_imaginary_hopping_without_pairing_splits_evenly():
    m = ModelSpec((0.0, 0.8j, -0.3j))
    dd = decouple_direct(m)
    assert dd.plus == dd.minus
    assert dd.chain_entropy("plus", 15) == pytest.approx(0.5 * entropy_scan(m, [15]).S[0], abs=1e-10)


def test_off_critical_ising_is_not_selfdual():
    assert not selfdual_condition(nn_model(1, 0.9, 0))


def test_xy_critical_slope_is_twice_ising():
    Ls = np.arange(100, 401, 20)
    xy = entropy_scan(nn_model(0.0, 0.0, 0.0), Ls).S
    ising = entropy_scan(nn_model(1.0, 1.0, 0.0), Ls).S
    a_xy, a_is = np.polyfit(np.log(Ls), xy, 1)[0], np.polyfit(np.log(Ls), ising, 1)[0]
    assert a_xy == pytest.approx(1 / 3, abs=1e-3)
    assert a_xy == pytest.approx(2 * a_is, abs=1e-3)


def test_coupling_matrix_antisymmetric_and_real():
    for m in _models(19, 3):
        T = to_majorana(m).matrix(7)
        assert T.dtype == float and np.array_equal(T, -T.T)
        MajoranaCoupling(to_majorana(m).blocks)


# ------------------------------------------------------------------ finite chain

def test_bdg_spectrum_symmetric():
    for m in _models(20, 5):
        for bc in ("open", "periodic"):
            e = np.linalg.eigvalsh(FiniteChain(m, 9, bc).bdg_matrix())
            assert np.max(np.abs(e + e[::-1])) < 1e-10


def test_finite_chain_approaches_infinite_chain():
    m = ModelSpec((0.4, -1.0 + 0.3j, 0.5 - 0.2j), (0.6, 0.1j))
    S_inf = entropy_scan(m, [6]).S[0]
    devs = []
    for N in (24, 48, 96):
        C = ground_state(FiniteChain(m, N, "periodic")).C
        devs.append(abs(majorana_entropy(C[:12, :12])[1] - S_inf))
    assert devs[2] < devs[0] and devs[2] < 1e-2


def test_deep_gapped_saturation_is_small():
    S, _ = saturation_entropy(nn_model(1, 5, 0))
    assert S < 0.05


# ------------------------------------------------------------------ oracle

@pytest.mark.parametrize("N", [2, 4, 8])
def test_spectral_match_up_to_eight_sites(N):
    m = _models(21 + N, 1)[0]
    ed = np.linalg.eigvalsh(spin_hamiltonian(m, N))
    assert np.max(np.abs(ed - free_fermion_spectrum(m, N))) < 1e-8
