import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from photmol.errors import InvalidTruncation, SpaceMismatch
from photmol.hilbert import (
    ORDERING,
    Operator,
    add,
    annihilation_a,
    annihilation_b,
    commutator,
    dagger,
    expectation_matrix_element,
    identity,
    make_space,
    matmul,
    scale,
    sigma_minus,
)

cutoffs = st.integers(min_value=1, max_value=5)


@pytest.mark.parametrize("na, nb, dim", [(6, 6, 98), (1, 1, 8), (10, 10, 242), (2, 3, 24)])
def test_dimension(na, nb, dim):
    sp = make_space(na, nb)
    assert sp.dim == dim
    assert sp.dims == (na + 1, nb + 1, 2)


@pytest.mark.parametrize("na, nb", [(0, 3), (3, 0), (-1, 2), (1.5, 2)])
def test_invalid_truncation(na, nb):
    with pytest.raises(InvalidTruncation):
        make_space(na, nb)


def test_index_formula():
    sp = make_space(3, 2)
    assert sp.index_of(0, 0, 0) == 0
    assert sp.index_of(0, 0, 1) == 1
    assert sp.index_of(0, 1, 0) == 2
    assert sp.index_of(1, 0, 0) == 6
    assert sp.index_of(2, 1, 1) == (2 * 3 + 1) * 2 + 1
    with pytest.raises(IndexError):
        sp.index_of(4, 0, 0)


@given(cutoffs, cutoffs)
def test_basis_round_trip(na, nb):
    sp = make_space(na, nb)
    for i in range(sp.dim):
        assert sp.index_of(*sp.state_of(i)) == i
    m, n, x = sp.quantum_numbers()
    assert [sp.state_of(i) for i in range(sp.dim)] == list(zip(m, n, x))


def test_ladder_actions():
    sp = make_space(3, 3)
    a, s = annihilation_a(sp), sigma_minus(sp)
    np.testing.assert_array_equal(a.apply(sp.basis_vector(1, 0, 0)), sp.basis_vector(0, 0, 0))
    np.testing.assert_allclose(a.apply(sp.basis_vector(2, 0, 0)), math.sqrt(2) * sp.basis_vector(1, 0, 0), atol=0)
    assert not np.any(s.apply(sp.basis_vector(0, 0, 0)))
    np.testing.assert_array_equal(s.apply(sp.basis_vector(2, 1, 1)), sp.basis_vector(2, 1, 0))
    b = annihilation_b(sp)
    np.testing.assert_allclose(b.apply(sp.basis_vector(1, 3, 1)), math.sqrt(3) * sp.basis_vector(1, 2, 1), atol=0)


@given(cutoffs, cutoffs)
def test_sparsity_pattern(na, nb):
    sp = make_space(na, nb)
    a, b, s = annihilation_a(sp), annihilation_b(sp), sigma_minus(sp)
    assert np.count_nonzero(s.matrix) == (na + 1) * (nb + 1)
    for op, k in ((a, 0), (b, 1)):
        rows, cols = np.nonzero(op.matrix)
        for r, c in zip(rows, cols):
            sr, sc = sp.state_of(r), sp.state_of(c)
            assert sr[k] == sc[k] - 1
            assert [v for i, v in enumerate(sr) if i != k] == [v for i, v in enumerate(sc) if i != k]
            assert op.matrix[r, c] == pytest.approx(math.sqrt(sc[k]))


def test_operator_algebra_examples():
    sp = make_space(4, 2)
    a = annihilation_a(sp)
    np.testing.assert_array_equal(dagger(dagger(a)).matrix, a.matrix)
    num = matmul(dagger(a), a)
    i = sp.index_of(3, 0, 0)
    assert expectation_matrix_element(num, i, i) == pytest.approx(3.0)
    assert np.count_nonzero(num.matrix - np.diag(np.diag(num.matrix))) == 0
    x = add(a, dagger(a)).matrix
    np.testing.assert_array_equal(x, x.conj().T)
    np.testing.assert_array_equal(scale(2j, a).matrix, 2j * a.matrix)
    np.testing.assert_array_equal((a + a.H).matrix, x)
    np.testing.assert_array_equal((a - a).matrix, np.zeros_like(x))
    np.testing.assert_array_equal((3 * a).matrix, (a * 3).matrix)


def test_space_mismatch():
    a1, a2 = annihilation_a(make_space(2, 2)), annihilation_a(make_space(3, 2))
    for fn in (add, matmul, commutator):
        with pytest.raises(SpaceMismatch):
            fn(a1, a2)
    with pytest.raises(SpaceMismatch):
        Operator(make_space(1, 1), np.eye(3))


@given(cutoffs, cutoffs)
def test_commutation_relations(na, nb):
    sp = make_space(na, nb)
    a, b, s = annihilation_a(sp), annihilation_b(sp), sigma_minus(sp)
    m, n, _ = sp.quantum_numbers()
    below = m < na
    comm = commutator(a, a.H).matrix
    # sqrt(k)**2 rounds in the last bit
    np.testing.assert_allclose(comm[np.ix_(below, below)], np.eye(below.sum()), rtol=0, atol=1e-14)
    comm_b = commutator(b, b.H).matrix
    below_b = n < nb
    np.testing.assert_allclose(comm_b[np.ix_(below_b, below_b)], np.eye(below_b.sum()), rtol=0, atol=1e-14)
    assert not np.any(commutator(a, b).matrix)
    assert not np.any(commutator(a, s).matrix)
    assert not np.any(commutator(b, s).matrix)
    assert not np.any((s @ s).matrix)


def test_operators_are_read_only():
    a = annihilation_a(make_space(2, 2))
    with pytest.raises(ValueError):
        a.matrix[0, 0] = 1.0


def test_json_dump_round_trip():
    sp = make_space(2, 3)
    op = annihilation_b(sp) + 0.5j * sigma_minus(sp) + identity(sp)
    data = json.loads(op.to_json())
    assert data["dims"] == [3, 4, 2]
    assert data["ordering"] == ORDERING
    assert len(data["nonzeros"]) == np.count_nonzero(op.matrix)
    back = Operator.from_json(op.to_json())
    assert back.space == sp
    np.testing.assert_array_equal(back.matrix, op.matrix)
