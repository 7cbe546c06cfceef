import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from compident.errors import BadSize, IndexOutOfRange, MinorLimitExceeded, NotSquare
from compident.linalg import (
    PolyMatrix,
    berkowitz,
    charpoly_coeffs,
    det_mod_p,
    determinant,
    determinant_berkowitz,
    generic_rank,
    maximal_minors,
    rank_mod_p,
    select,
    submatrix,
)
from compident.poly import LAMBDA, MODULUS, ParamId, SparsePoly, evaluate

VARS = [ParamId(1, k) for k in range(2, 6)]


def leibniz(rows):
    """Determinant as the signed sum over permutations (independent oracle)."""
    n = len(rows)
    total = 0
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = -1 if inv % 2 else 1
        for i, j in enumerate(perm):
            term = term * rows[i][j]
        total = total + term
    return total


def rank_fractions(rows):
    a = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    ncols = len(a[0]) if a else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(a)) if a[i][col]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        for i in range(len(a)):
            if i != rank and a[i][col]:
                f = a[i][col] / a[rank][col]
                a[i] = [p - f * q for p, q in zip(a[i], a[rank])]
        rank += 1
    return rank


def random_poly_matrix(rng, n, density=0.7):
    def entry():
        if rng.random() > density:
            return SparsePoly.zero()
        f = SparsePoly.const(rng.randint(-3, 3))
        for v in rng.sample(VARS, rng.randint(0, 2)):
            f = f + rng.randint(-2, 2) * SparsePoly.var(v)
        return f

    return PolyMatrix([[entry() for _ in range(n)] for _ in range(n)])


int_matrices = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=n, max_size=n)
)


@settings(max_examples=100, deadline=None)
@given(int_matrices)
def test_determinant_matches_leibniz_on_integer_matrices(rows):
    m = PolyMatrix(rows)
    assert determinant(m) == leibniz(rows)
    assert determinant_berkowitz(m) == leibniz(rows)
    assert det_mod_p(rows) == leibniz(rows) % MODULUS


@pytest.mark.parametrize("seed", range(40))
def test_determinant_routes_agree_on_polynomial_matrices(seed):
    rng = random.Random(seed)
    m = random_poly_matrix(rng, rng.randint(1, 5))
    expected = leibniz(m.rows())
    assert determinant(m) == expected
    assert determinant_berkowitz(m) == expected


@settings(max_examples=60, deadline=None)
@given(int_matrices)
def test_charpoly_by_interpolation(rows):
    """det(t I - M) at integer t equals the polynomial read off symbolically."""
    n = len(rows)
    coeffs = charpoly_coeffs(PolyMatrix(rows))
    for t in range(n + 1):
        shifted = [[(t if i == j else 0) - rows[i][j] for j in range(n)] for i in range(n)]
        value = t**n + sum(int(coeffs[k].constant_value() if coeffs[k] else 0) * t**k for k in range(n))
        assert value == leibniz(shifted)


def test_berkowitz_vector_matches_charpoly():
    rng = random.Random(5)
    m = random_poly_matrix(rng, 4)
    vec = berkowitz(m)
    assert vec[0] == 1
    assert list(reversed(vec[1:])) == charpoly_coeffs(m)


def test_charpoly_rejects_lambda_entries():
    lam = SparsePoly.var(LAMBDA)
    with pytest.raises(ValueError):
        charpoly_coeffs(PolyMatrix([[lam]]))


def test_shape_errors():
    m = PolyMatrix([[1, 2, 3], [4, 5, 6]])
    with pytest.raises(NotSquare):
        determinant(m)
    with pytest.raises(NotSquare):
        berkowitz(m)
    with pytest.raises(IndexOutOfRange):
        submatrix(m, {2}, ())
    with pytest.raises(IndexOutOfRange):
        submatrix(m, (), {-1})
    with pytest.raises(ValueError):
        PolyMatrix([[1, 2], [3]])
    with pytest.raises(BadSize):
        maximal_minors(m, 3)


def test_submatrix_and_select():
    m = PolyMatrix([[1, 2, 3], [4, 5, 6], [7, 8, 10]])
    assert submatrix(m, {0}, {0}) == PolyMatrix([[5, 6], [8, 10]])
    assert select(m, [0, 2], [1, 2]) == PolyMatrix([[2, 3], [8, 10]])
    assert m.transpose().transpose() == m
    assert determinant(PolyMatrix([])) == 1


@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 5).flatmap(
        lambda c: st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c), min_size=1, max_size=5)
    )
)
def test_rank_mod_p_matches_rational_rank(rows):
    assert rank_mod_p(rows) == rank_fractions(rows)


def test_generic_rank_of_symbolic_matrices():
    x, y = SparsePoly.var(VARS[0]), SparsePoly.var(VARS[1])
    full = PolyMatrix([[x, y], [y, x]])
    assert generic_rank(full).rank == 2
    # rows proportional over the function field, though no entry is constant
    low = PolyMatrix([[x, y], [x * y, y * y], [x * x, x * y]])
    est = generic_rank(low, trials=4, rng=1)
    assert est.rank == 1 and est.trials == 4 and est.hits == 4
    with pytest.raises(ValueError):
        generic_rank(full, trials=0)


def test_generic_rank_is_seed_deterministic():
    m = random_poly_matrix(random.Random(3), 4)
    assert generic_rank(m, rng=11) == generic_rank(m, rng=11)


def test_maximal_minors_enumeration_and_limit():
    m = PolyMatrix([[1, 0], [0, 1], [1, 1]])
    minors = maximal_minors(m, 2)
    assert [(mn.rows, mn.cols) for mn in minors] == [((0, 1), (0, 1)), ((0, 2), (0, 1)), ((1, 2), (0, 1))]
    assert [mn.value for mn in minors] == [1, 1, -1]
    with pytest.raises(MinorLimitExceeded):
        maximal_minors(m, 2, limit=2)


def test_matrix_evaluation():
    x = SparsePoly.var(VARS[0])
    m = PolyMatrix([[x, 1], [x * x, 0]])
    assert m.evaluate({VARS[0]: 3}) == [[3, 1], [9, 0]]
    assert evaluate(determinant(m), {VARS[0]: 3}) == -9
