import math

import numpy as np
import pytest
import scipy.optimize
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ste_entangle.dynamics import XState
from ste_entangle.entanglement import (
    SIGMA_YY,
    concurrence,
    concurrence_general,
    concurrence_x,
    is_entangled_x,
    is_x_shaped,
    negativity,
    partial_transpose,
    wootters_lambdas,
    wootters_margin,
)

BELL_PSI = np.zeros((4, 4))
BELL_PSI[1, 1] = BELL_PSI[2, 2] = BELL_PSI[1, 2] = BELL_PSI[2, 1] = 0.5

unit = st.floats(0.0, 1.0)


@st.composite
def x_states(draw):
    w = np.array([draw(unit) for _ in range(4)]) + 1e-9
    a, b, c, d = w / w.sum()
    e = draw(unit) * math.sqrt(b * c)
    return XState(float(a), float(b), float(c), float(d), float(e))


@st.composite
def pure_states(draw):
    re = np.array([draw(st.floats(-1, 1)) for _ in range(4)])
    im = np.array([draw(st.floats(-1, 1)) for _ in range(4)])
    v = re + 1j * im
    nrm = np.linalg.norm(v)
    assume(nrm > 1e-3)
    return v / nrm


def random_density(rng, rank=4):
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def naive_concurrence(rho):
    r = rho @ SIGMA_YY @ rho.conj() @ SIGMA_YY
    lam = np.sort(np.sqrt(np.clip(np.linalg.eigvals(r).real, 0.0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


# --- examples ----------------------------------------------------------------


def test_bell_state():
    assert concurrence_general(BELL_PSI) == pytest.approx(1.0, abs=1e-14)
    assert concurrence_x(XState(0, 0.5, 0.5, 0, 0.5)) == 1.0
    assert negativity(BELL_PSI) == pytest.approx(1.0, abs=1e-14)


def test_phi_plus_is_maximally_entangled():
    v = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert concurrence_general(np.outer(v, v)) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("k", range(4))
def test_product_basis_states_are_separable(k):
    rho = np.zeros((4, 4))
    rho[k, k] = 1.0
    assert concurrence_general(rho) == 0.0
    assert concurrence(rho) == 0.0
    assert negativity(rho) == 0.0


def test_maximally_mixed_margin():
    assert wootters_margin(np.eye(4) / 4) == pytest.approx(-0.5, abs=1e-15)
    assert concurrence_general(np.eye(4) / 4) == 0.0


def test_x_coherence_capped_by_populations():
    # E > sqrt(BC) is unphysical but the formula caps it at sqrt(BC)
    assert concurrence_x(XState(0.0, 0.25, 0.75, 0.0, 0.9)) == pytest.approx(2 * math.sqrt(0.25 * 0.75))


def test_emergence_condition():
    assert is_entangled_x(XState(0.1, 0.4, 0.4, 0.1, 0.3))
    assert not is_entangled_x(XState(0.1, 0.4, 0.4, 0.1, 0.1))
    assert not is_entangled_x(XState(0.1, 0.4, 0.4, 0.1, 0.1 + 1e-14))


def test_x_formula_vectorizes():
    x = XState(np.array([0.0, 0.25]), np.array([0.5, 0.25]), np.array([0.5, 0.25]), np.array([0.0, 0.25]), np.array([0.5, 0.0]))
    assert np.array_equal(concurrence_x(x), [1.0, 0.0])


def test_partial_transpose_involution_and_stack():
    rng = np.random.default_rng(7)
    stack = np.array([random_density(rng) for _ in range(3)])
    assert np.allclose(partial_transpose(partial_transpose(stack)), stack)
    pt = partial_transpose(BELL_PSI)
    assert pt[0, 3] == 0.5 and pt[1, 2] == 0.0
    assert negativity(stack).shape == (3,)


def test_werner_threshold():
    psi = np.array([0, 1, -1, 0]) / math.sqrt(2)
    singlet = np.outer(psi, psi)

    def werner(p):
        return p * singlet + (1 - p) * np.eye(4) / 4

    root = scipy.optimize.brentq(lambda p: wootters_margin(werner(p)), 0.1, 0.9, xtol=1e-15)
    assert root == pytest.approx(1 / 3, abs=1e-12)
    # concurrence of a Werner state is (3p - 1) / 2
    for p in (0.5, 0.8, 1.0):
        assert concurrence_general(werner(p)) == pytest.approx((3 * p - 1) / 2, abs=1e-14)


@pytest.mark.parametrize(
    "rho, reason",
    [
        (np.eye(3) / 3, "shape"),
        (np.diag([0.5, 0.5, 0.5, 0.0]), "trace"),
        (np.diag([1.2, -0.2, 0.0, 0.0]), "positive"),
        (np.array([[0.5, 0.1, 0, 0], [0.3, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]), "Hermitian"),
    ],
)
def test_invalid_density_matrices_rejected(rho, reason):
    with pytest.raises(ValueError, match=reason):
        concurrence_general(rho)


def test_dispatch_uses_x_formula_only_for_x_states():
    v = np.array([1, 0, 0, 1]) / math.sqrt(2)
    phi = np.outer(v, v)
    assert not is_x_shaped(phi) and is_x_shaped(BELL_PSI)
    assert concurrence(np.array([phi, BELL_PSI])) == pytest.approx([1.0, 1.0], abs=1e-14)


# --- properties --------------------------------------------------------------


@settings(max_examples=300, deadline=None)
@given(x=x_states())
def test_x_formula_matches_general(x):
    assert abs(concurrence_x(x) - concurrence_general(x.to_matrix())) < 1e-12


@settings(max_examples=200, deadline=None)
@given(x=x_states())
def test_x_concurrence_bounds_and_sign(x):
    c = concurrence_x(x)
    assert 0.0 <= c <= 1.0
    assert (c > 0) == (min(x.E, math.sqrt(x.B * x.C)) > math.sqrt(x.A * x.D))


@settings(max_examples=200, deadline=None)
@given(psi=pure_states())
def test_pure_state_oracle(psi):
    expected = abs(psi.conj() @ SIGMA_YY @ psi.conj())
    assert abs(concurrence_general(np.outer(psi, psi.conj())) - expected) < 1e-12
    # negativity of a pure state equals its concurrence too
    assert abs(negativity(np.outer(psi, psi.conj())) - expected) < 1e-12


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 4))
def test_local_unitary_invariance_and_bounds(seed, rank):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, rank)
    u1 = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    u2 = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    u = np.kron(u1, u2)
    c = concurrence_general(rho)
    assert 0.0 <= c <= 1.0
    assert abs(concurrence_general(u @ rho @ u.conj().T) - c) < 1e-12
    lam = wootters_lambdas(rho)
    assert np.all(np.diff(lam) <= 0) and lam[-1] >= 0


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_full_rank_agrees_with_naive_eigenvalues(seed):
    rho = random_density(np.random.default_rng(seed))
    assert abs(concurrence_general(rho) - naive_concurrence(rho)) < 1e-9


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 4))
def test_negativity_never_exceeds_concurrence(seed, rank):
    rho = random_density(np.random.default_rng(seed), rank)
    neg, c = negativity(rho), concurrence_general(rho)
    assert neg <= c + 1e-12
    assert (neg > 1e-12) == (c > 1e-12) or min(neg, c) < 1e-9


def test_rank_deficient_zero_is_exact():
    # |EG> with a small EE admixture inside a pure state: exact concurrence 2|ab|
    a, b = 1e-5, math.sqrt(1 - 1e-10)
    psi = np.array([0, b, a, 0])
    assert concurrence_general(np.outer(psi, psi)) == pytest.approx(2 * a * b, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(x=x_states())
def test_concurrence_invariant_under_atom_swap(x):
    swapped = XState(x.A, x.C, x.B, x.D, x.E)
    assert concurrence_x(swapped) == concurrence_x(x)
    swap = [0, 2, 1, 3]
    rho = x.to_matrix()
    assert abs(concurrence_general(rho[np.ix_(swap, swap)]) - concurrence_general(rho)) < 1e-12
