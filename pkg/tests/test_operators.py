import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lschain.errors import SingularRestrictionError, SupportError
from lschain.operators import (
    IntervalSupport,
    LocalOperator,
    ReducedResolvent,
    act_left,
    act_right,
    embed_matrix,
    kronecker_sum,
    matrix_exponential,
    neumann_reduced_resolvent,
    reduced_resolvent,
    tensor_embed,
    vacuum_projectors,
    weighted_norm,
)

TOL = 1e-12


def random_matrix(rng, dim):
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


intervals = st.builds(IntervalSupport, st.integers(1, 6), st.integers(0, 4))


@given(intervals, intervals)
def test_containment_is_consistent_with_site_sets(a, b):
    sa = set(range(a.left, a.right + 1))
    sb = set(range(b.left, b.right + 1))
    assert a.contains(b) == (sb <= sa)
    assert a.strictly_contains(b) == (sb < sa)
    assert a.intersects(b) == bool(sa & sb)


def test_embed_single_site_into_two_sites():
    op = LocalOperator(IntervalSupport(1, 0), np.diag([1.0, 2.0]))
    out = tensor_embed(op, IntervalSupport(1, 1), d=2)
    np.testing.assert_array_equal(out.matrix, np.diag([1, 1, 2, 2]))
    out = tensor_embed(LocalOperator(IntervalSupport(2, 0), np.diag([1.0, 2.0])), IntervalSupport(1, 1), d=2)
    np.testing.assert_array_equal(out.matrix, np.diag([1, 2, 1, 2]))


def test_embed_outside_target_raises():
    op = LocalOperator(IntervalSupport(3, 1), np.eye(4))
    with pytest.raises(SupportError):
        tensor_embed(op, IntervalSupport(1, 1), d=2)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 2), st.integers(0, 1000))
def test_act_left_and_right_match_kron_embedding(op_sites, left_pad, right_pad, seed):
    d = 2
    rng = np.random.default_rng(seed)
    total = op_sites + left_pad + right_pad
    op = random_matrix(rng, d**op_sites)
    x = random_matrix(rng, d**total)
    big = embed_matrix(op, IntervalSupport(1 + left_pad, op_sites - 1), IntervalSupport(1, total - 1), d)
    np.testing.assert_allclose(act_left(op, left_pad, op_sites, x, total, d), big @ x, atol=1e-12)
    np.testing.assert_allclose(act_right(op, left_pad, op_sites, x, total, d), x @ big, atol=1e-12)


def test_kronecker_sum_spectrum():
    h = np.diag([0.0, 1.0, 3.0])
    ev = np.sort(np.linalg.eigvalsh(kronecker_sum(h, 2)))
    expected = np.sort([a + b for a in (0, 1, 3) for b in (0, 1, 3)])
    np.testing.assert_allclose(ev, expected, atol=TOL)


def test_vacuum_projectors_are_complementary(spin3):
    proj = vacuum_projectors(IntervalSupport(1, 2), spin3)
    np.testing.assert_allclose(proj.p_minus + proj.p_plus, np.eye(8), atol=TOL)
    np.testing.assert_allclose(proj.p_minus @ proj.p_minus, proj.p_minus, atol=TOL)
    np.testing.assert_allclose(proj.p_minus @ proj.p_plus, 0, atol=TOL)


def test_weighted_norm_of_identity_is_one(spin3):
    op = LocalOperator(IntervalSupport(1, 1), np.eye(4))
    assert weighted_norm(op, spin3) == pytest.approx(1.0, abs=TOL)


def test_matrix_exponential_of_antihermitian_is_unitary():
    rng = np.random.default_rng(1)
    a = random_matrix(rng, 6)
    u = matrix_exponential(a - a.conj().T)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(6), atol=1e-12)


def test_matrix_exponential_diagonal():
    np.testing.assert_allclose(matrix_exponential(np.diag([0.0, 1.0, -2.0])), np.diag(np.exp([0, 1, -2])))


def test_reduced_resolvent_inverts_on_excited_block(spin3):
    rng = np.random.default_rng(2)
    sup = IntervalSupport(1, 1)
    proj = vacuum_projectors(sup, spin3)
    g = spin3.h0(1) + 0.01 * proj.p_plus @ random_matrix(rng, 4) @ proj.p_plus
    r = reduced_resolvent(LocalOperator(sup, g), 0.0, 0.1, proj).matrix
    lhs = r @ proj.p_plus @ (g - 0.1 * np.eye(4)) @ proj.p_plus
    np.testing.assert_allclose(lhs, proj.p_plus, atol=1e-12)
    np.testing.assert_allclose(r @ proj.p_minus, 0, atol=TOL)


def test_reduced_resolvent_adjoint_apply(spin3):
    rng = np.random.default_rng(3)
    g = spin3.h0(1) + 0.05 * random_matrix(rng, 4)
    g[0, 1:] = 0
    g[1:, 0] = 0
    rr = ReducedResolvent(g, g[0, 0], 0.0, spin3.vacuum(1))
    x = rng.normal(size=4) + 0j
    np.testing.assert_allclose(rr.apply_adjoint(x), rr.matrix().conj().T @ x, atol=1e-12)


def test_reduced_resolvent_singular_restriction(spin3):
    g = spin3.h0(1)
    with pytest.raises(SingularRestrictionError):
        ReducedResolvent(g, 0.0, 1.0, spin3.vacuum(1))


def test_neumann_series_single_term_for_free_hamiltonian(spin3):
    h0 = spin3.h0(2)
    vac = spin3.vacuum(2)
    r, terms, ratio = neumann_reduced_resolvent(h0, h0, 0.0, 0.3j, vac)
    direct = ReducedResolvent(h0, 0.0, 0.3j, vac).matrix()
    assert ratio == 0.0
    assert terms == 2
    np.testing.assert_allclose(r, direct, atol=1e-14)
