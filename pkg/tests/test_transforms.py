import numpy as np
import pytest

from conftest import random_model
from quasifree.entropy import entropy_scan
from quasifree.model import ModelSpec, nn_model
from quasifree.transforms import (
    MajoranaCoupling,
    TransformError,
    decouple_direct,
    from_majorana,
    kw_selfdual_reduce,
    rotate_to_real_pairing,
    selfdual_condition,
    su2_from_rotation,
    to_majorana,
    xy_ising_decouple,
)


@pytest.mark.parametrize("seed", range(5))
def test_majorana_round_trip(seed):
    m = random_model(np.random.default_rng(seed), 3)
    back = from_majorana(to_majorana(m))
    ref = np.array(m.hop + m.pair)
    got = np.array(back.hop + back.pair)
    assert np.max(np.abs(got - ref)) <= 1e-15 * np.max(np.abs(ref)) * 4


def test_majorana_matrix_matches_bdg_hamiltonian(rng):
    # H = i sum T m m up to a constant, with b^+ = (x + i y) / 2 per site
    m = random_model(rng, 2)
    N = 6
    T = to_majorana(m).matrix(N)
    A, B = m.hop_matrix(N, "open"), m.pair_matrix(N, "open")
    bd = np.zeros((N, 2 * N), dtype=complex)
    for j in range(N):
        bd[j, 2 * j], bd[j, 2 * j + 1] = 0.5, 0.5j
    b = bd.conj()
    Q = bd.T @ A @ b + 0.5 * bd.T @ B @ bd - 0.5 * b.T @ B.conj() @ b
    assert np.max(np.abs(0.5 * (Q - Q.T) - 1j * T)) < 1e-13


def test_coupling_validation():
    with pytest.raises(ValueError):
        MajoranaCoupling(np.zeros((2, 2, 2)))
    t = np.zeros((3, 2, 2))
    t[2, 0, 1] = 1.0
    with pytest.raises(ValueError, match="antisymmetric"):
        MajoranaCoupling(t)


def test_selfdual_condition():
    assert selfdual_condition(nn_model(1, 1, 2))
    assert selfdual_condition(nn_model(1, 1, 0))
    assert not selfdual_condition(nn_model(1, 0.5, 2))
    assert not selfdual_condition(ModelSpec((-1.0, -1.0), (1j,)))


@pytest.mark.parametrize("seed", range(4))
def test_selfdual_condition_agrees_with_toeplitz_test(seed):
    rng = np.random.default_rng(100 + seed)
    # build selfdual couplings directly from a majorana sequence and compare
    seq = rng.normal(size=4)
    K = 2
    t = np.zeros((2 * K + 1, 2, 2))
    for d in range(0, K + 1):
        if 2 * d < len(seq) and d:
            t[d + K, 0, 0] = t[d + K, 1, 1] = seq[2 * d - 1]
    t[K, 0, 1] = seq[0]
    t[K + 1, 0, 1] = seq[2]
    t[K + 1, 1, 0] = seq[0]
    t[K + 2, 1, 0] = seq[2]
    t[K, 1, 0] = -seq[0]
    for d in range(1, K + 1):
        t[K - d] = -t[K + d].T
    m = from_majorana(MajoranaCoupling(t))
    assert to_majorana(m).genuine_toeplitz
    assert selfdual_condition(m)
    kw_selfdual_reduce(m)


def test_kw_rejects_non_selfdual_with_witness():
    with pytest.raises(TransformError, match=r"T\[\d+,\d+\] != T\[\d+,\d+\]"):
        kw_selfdual_reduce(nn_model(1, 0.5, 0))


@pytest.mark.parametrize("D", [0.0, 0.5, 2.0])
def test_kw_entropy_rule(D):
    m = nn_model(1, 1, D)
    red = kw_selfdual_reduce(m)
    assert red.reduced.pair == ()
    Ls = [4, 12, 30]
    assert np.max(np.abs(red.entropies(Ls) - entropy_scan(m, Ls).S)) < 1e-9
    assert red.entropy(12) == pytest.approx(red.entropies([12])[0], abs=1e-14)


def test_decouple_requires_imaginary_coefficients():
    with pytest.raises(TransformError, match=r"hop\[1\]"):
        decouple_direct(ModelSpec((0.0, 1.0 + 1j), (0.5j,)))
    with pytest.raises(TransformError, match=r"pair\[1\]"):
        decouple_direct(ModelSpec((0.0, 1j), (0.5,)))
    with pytest.raises(TransformError, match=r"hop\[0\]"):
        decouple_direct(ModelSpec((0.3, 1j), (0.5j,)))


@pytest.mark.parametrize("seed", range(3))
def test_decouple_entropy_rule(seed):
    m = random_model(np.random.default_rng(200 + seed), 3, imaginary=True)
    dd = decouple_direct(m)
    for L in (3, 11, 25):
        assert dd.entropy(L) == pytest.approx(entropy_scan(m, [L]).S[0], abs=1e-9)


@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0])
def test_xy_two_ising_rule(gamma):
    m = nn_model(gamma, 0, 0)
    c1, c2 = xy_ising_decouple(to_majorana(m))
    m1, m2 = from_majorana(c1), from_majorana(c2)
    S = entropy_scan(m, [20, 40]).S
    S1, S2 = entropy_scan(m1, [10, 20]).S, entropy_scan(m2, [10, 20]).S
    assert np.max(np.abs(S - S1 - S2)) < 1e-9


def test_xy_two_ising_rejects_linking_field():
    with pytest.raises(TransformError, match="links the two sublattices"):
        xy_ising_decouple(to_majorana(nn_model(1, 0.5, 0)))


@pytest.mark.parametrize("m", [
    ModelSpec((0.5, -1.0), (0.7 * np.exp(0.4j),)),
    ModelSpec((0.5, -1.0, 0.3), (0.7j, 0.2j)),
    ModelSpec((0.5, -1.0 + 0.2j), (0.7j,)),
])
def test_rotation_reducible_preserves_entropy(m):
    r = rotate_to_real_pairing(m)
    assert r.reducible
    assert all(abs(p.imag) < 1e-12 for p in r.model.pair)
    Ls = [5, 20]
    assert np.max(np.abs(entropy_scan(m, Ls).S - entropy_scan(r.model, Ls).S)) < 1e-10


def test_rotation_irreducible():
    r = rotate_to_real_pairing(ModelSpec((0.3, -1 + 0.4j, 0.2), (0.5 + 0.1j, 0.3j)))
    assert not r.reducible and r.model is None and r.reason


def test_rotation_already_real_is_identity():
    m = nn_model(1, 0.5, 0.3)
    r = rotate_to_real_pairing(m)
    assert r.model == m and np.array_equal(r.rotation, np.eye(3))


def test_su2_from_rotation(rng):
    from quasifree.transforms import _PAULI

    for _ in range(5):
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(Q) < 0:
            Q = -Q
        U = su2_from_rotation(Q)
        v = rng.normal(size=3)
        lhs = U @ np.tensordot(v, _PAULI, axes=1) @ U.conj().T
        rhs = np.tensordot(Q @ v, _PAULI, axes=1)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


@pytest.mark.parametrize("scale", [0.01, 3.0, 250.0])
def test_entropy_invariant_under_positive_scaling(scale):
    m = random_model(np.random.default_rng(7), 3)
    Ls = [4, 16]
    assert np.max(np.abs(entropy_scan(m, Ls).S - entropy_scan(m.scaled(scale), Ls).S)) < 1e-10
