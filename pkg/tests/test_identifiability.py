import math
import random

import pytest

from _helpers import random_models
from compident.coeffs import coefficient_map, jacobian
from compident.errors import (
    BadSize,
    EdgeNotInModel,
    NoSingleMinor,
    NotBidirectionalTree,
    PreconditionViolated,
    RankDeficient,
)
from compident.identifiability import (
    BY_THEOREM,
    INCONCLUSIVE,
    LOCALLY_IDENTIFIABLE,
    NOT_STRONGLY_CONNECTED,
    UNIDENTIFIABLE,
    catenary_divisibility_check,
    catenary_recover,
    check_submodel,
    factor_multiplicity,
    family_closed_form,
    identifiability_degree,
    is_generically_locally_identifiable,
    rooted_trees,
    singular_locus_equation,
    tree_multiplicity_procedure,
    vandermonde_check,
    vandermonde_matrix,
    verify_family_singular_locus,
    verify_tree_conjecture,
)
from compident.linalg import determinant, rank_mod_p
from compident.model import CompartmentModel, bidirectional_tree, family, parse_model
from compident.poly import MODULUS, FieldPoint, ParamId, SparsePoly, evaluate, parse_poly, rename, same_up_to_scalar

EX32 = parse_model('{"n": 4, "edges": [[1,2],[2,1],[2,3],[3,2],[3,4],[4,1]], "in": [1], "out": [1], "leak": [1]}')
EX32_EQUATION = parse_poly(
    "a1_2*a1_4*a2_1^2*a3_2"
    "*(a1_2*a1_4 - a1_4^2 - a1_2*a2_3 + a1_4*a2_3 + a1_4*a3_2 - a1_2*a4_3 + a1_4*a4_3 - a3_2*a4_3)"
    "*(a1_2*a2_3 + a1_2*a4_3 + a3_2*a4_3)"
)


def P(i, j):
    return ParamId(i, j)


def v(i, j):
    return SparsePoly.var(ParamId(i, j))


# -- verdicts ------------------------------------------------------------------


@pytest.mark.parametrize("kind, n", [("catenary", 4), ("cycle", 5), ("mammillary", 4)])
def test_families_are_locally_identifiable(kind, n):
    rep = is_generically_locally_identifiable(family(kind, n))
    assert rep.verdict == LOCALLY_IDENTIFIABLE
    assert rep.generic_rank == rep.param_count
    assert rep.coeff_count == 2 * n - 1


def test_too_many_parameters_is_unidentifiable():
    full = CompartmentModel(3, frozenset((j, i) for j in range(1, 4) for i in range(1, 4) if i != j))
    rep = is_generically_locally_identifiable(full)
    assert rep.verdict == UNIDENTIFIABLE and rep.generic_rank <= 5
    with pytest.raises(RankDeficient):
        singular_locus_equation(full)


def test_no_leak_violates_precondition():
    cat = CompartmentModel(3, family("catenary", 3).edges, leaks=frozenset({1, 2, 3}))
    verdicts = []
    for leaks in ([1, 2, 3], [1, 2], [1]):
        verdicts.append(is_generically_locally_identifiable(cat.with_leaks(leaks)).verdict)
    assert verdicts == [UNIDENTIFIABLE, UNIDENTIFIABLE, LOCALLY_IDENTIFIABLE]
    with pytest.raises(PreconditionViolated):
        is_generically_locally_identifiable(cat.with_leaks([]))


# -- singular locus -------------------------------------------------------------


def test_example_four_compartment_equation():
    res = singular_locus_equation(EX32)
    assert res.provenance == "square-determinant"
    assert same_up_to_scalar(res.equation, EX32_EQUATION)
    mult = {str(f): k for f, k in res.factor_report}
    assert mult["a2_1"] == 2 and mult["a1_2"] == 1 and mult["a3_2"] == 1 and mult["a1_4"] == 1


def test_small_family_equations():
    assert singular_locus_equation(family("mammillary", 2)).equation == v(1, 2)
    res = singular_locus_equation(family("cycle", 3))
    assert res.provenance == "selected-minor"
    assert same_up_to_scalar(res.equation, v(3, 2) * v(1, 3) * (v(3, 2) - v(1, 3)))
    assert res.all_divisible


def test_equation_is_normalized():
    for kind, n in [("mammillary", 3), ("cycle", 4), ("catenary", 3)]:
        f = singular_locus_equation(family(kind, n)).equation
        assert f.leading_coefficient() > 0
        assert math.gcd(*[int(c) for c in f.coefficients()]) == 1


def test_table_coincidence_at_two_compartments():
    cat = singular_locus_equation(family("catenary", 2)).equation
    mam = singular_locus_equation(family("mammillary", 2)).equation
    assert cat == mam == family_closed_form("catenary", 2) == family_closed_form("mammillary", 2) == v(1, 2)


def test_factor_multiplicity_examples():
    cat4 = singular_locus_equation(family("catenary", 4)).equation
    assert factor_multiplicity(cat4, v(1, 2)) == 3
    assert factor_multiplicity(cat4, v(0, 1)) == 0
    mam3 = singular_locus_equation(family("mammillary", 3)).equation
    assert factor_multiplicity(mam3, v(1, 2) - v(1, 3)) == 2
    assert factor_multiplicity(SparsePoly.zero(), v(1, 2)) == math.inf


def test_no_single_minor_carries_minors():
    err = NoSingleMinor("none", ["m1", "m2"])
    assert err.minors == ["m1", "m2"]


def _full_rank_at(jac, point, m):
    return rank_mod_p(jac.evaluate(point), MODULUS) == m


@pytest.mark.parametrize("kind, n", [("mammillary", 3), ("cycle", 3), ("catenary", 3)])
def test_verdict_soundness_at_random_and_structured_points(kind, n):
    model = family(kind, n)
    jac = jacobian(coefficient_map(model))
    f = singular_locus_equation(model).equation
    rng = random.Random(17)
    for _ in range(20):
        pt = FieldPoint.random(model.params, rng)
        if evaluate(f, pt):
            assert _full_rank_at(jac, pt, model.param_count)
    # points on the locus: make one factor of f vanish
    factor = {"mammillary": (P(1, 3), P(1, 2)), "cycle": (P(1, 3), P(3, 2)), "catenary": (P(1, 2), None)}[kind]
    for _ in range(20):
        vals = FieldPoint.random(model.params, rng).values
        vals = dict(vals)
        src, dst = factor
        vals[src] = vals[dst] if dst else 0
        pt = FieldPoint(vals)
        assert evaluate(f, pt) == 0
        assert not _full_rank_at(jac, pt, model.param_count)


# -- submodels -------------------------------------------------------------------


def test_submodel_examples():
    one = check_submodel(EX32, [(3, 2)])
    assert one.theorem_verdict == BY_THEOREM
    assert one.direct.verdict == LOCALLY_IDENTIFIABLE
    two = check_submodel(EX32, [(2, 1), (3, 2)])
    assert two.theorem_verdict == INCONCLUSIVE
    assert two.direct.verdict == LOCALLY_IDENTIFIABLE
    none = check_submodel(EX32, [])
    assert none.theorem_verdict == BY_THEOREM


def test_submodel_errors_and_disconnection():
    with pytest.raises(EdgeNotInModel):
        check_submodel(EX32, [(1, 3)])
    rep = check_submodel(EX32, [(4, 1)])
    assert rep.theorem_verdict == NOT_STRONGLY_CONNECTED and rep.direct is None


def test_theorem_verdict_never_contradicted():
    checked = 0
    candidates = [
        m.with_leaks([1])
        for m in random_models(21, 300, n_max=5, density=0.25, n_min=3)
    ]
    for model in [m for m in candidates if m.param_count <= 2 * m.n - 1][:60]:
        try:
            f = singular_locus_equation(model).equation
        except (RankDeficient, NoSingleMinor):
            continue
        for e in sorted(model.edges):
            rep = check_submodel(model, [e], equation=f)
            if rep.theorem_verdict == BY_THEOREM:
                assert rep.direct.verdict == LOCALLY_IDENTIFIABLE
                checked += 1
    assert checked > 10


def test_cycle_coefficients_symmetric_under_transpositions():
    rng = random.Random(2)
    for n in (3, 4, 5):
        cm = coefficient_map(family("cycle", n))
        rates = [P(k + 1, k) for k in range(2, n)] + [P(1, n)]
        x, y = rng.sample(rates, 2)
        swapped = [rename(f, {x: y, y: x}) for f in cm.rows()]
        assert swapped == cm.rows()


# -- trees -----------------------------------------------------------------------


def test_tree_procedure_examples():
    assert tree_multiplicity_procedure(family("catenary", 4)) == {
        P(1, 2): 3, P(2, 3): 2, P(3, 4): 1, P(2, 1): 2, P(3, 2): 1, P(4, 3): 0,
    }
    assert tree_multiplicity_procedure(family("mammillary", 4)) == {
        P(1, 2): 1, P(1, 3): 1, P(1, 4): 1, P(2, 1): 0, P(3, 1): 0, P(4, 1): 0,
    }
    seven = tree_multiplicity_procedure(bidirectional_tree({2: 1, 3: 2, 4: 3, 5: 2, 6: 1, 7: 6}))
    assert seven[P(1, 2)] == 4 and seven[P(2, 1)] == 3


def test_tree_procedure_rejects_non_trees():
    with pytest.raises(NotBidirectionalTree):
        tree_multiplicity_procedure(family("cycle", 3))
    with pytest.raises(PreconditionViolated):
        tree_multiplicity_procedure(family("catenary", 3).with_leaks([2]))


def test_rooted_tree_counts():
    # number of rooted unlabeled trees on n vertices
    assert [len(rooted_trees(n)) for n in range(1, 8)] == [1, 1, 2, 4, 9, 20, 48]
    with pytest.raises(BadSize):
        rooted_trees(0)


def test_tree_conjecture_small_trees():
    for n in (2, 3, 4):
        for parents in rooted_trees(n):
            assert verify_tree_conjecture(bidirectional_tree(parents)).all_match
    two = verify_tree_conjecture(family("catenary", 2))
    assert two.equation == v(1, 2)
    assert {p: o for p, _, o in two.entries} == {P(1, 2): 1, P(2, 1): 0}
    mam = verify_tree_conjecture(family("mammillary", 4))
    assert all(obs == (1 if p.target == 1 else 0) for p, _, obs in mam.entries)


# -- family checks ---------------------------------------------------------------


def test_family_verification():
    assert verify_family_singular_locus("mammillary", 3).status == "match"
    assert verify_family_singular_locus("cycle", 4).status == "match"
    cat = verify_family_singular_locus("catenary", 4)
    assert cat.status == "conjecture-match"
    assert cat.computed == parse_poly("a1_2^3*a2_1^2*a2_3^2*a3_2*a3_4")
    with pytest.raises(BadSize):
        verify_family_singular_locus("cycle", 9)


def test_catenary_divisibility():
    for n in (2, 3, 4, 5):
        assert catenary_divisibility_check(n)["ok"]
    assert catenary_divisibility_check(3, equation=v(1, 2))["ok"] is False
    with pytest.raises(BadSize):
        catenary_divisibility_check(9)


def test_vandermonde():
    assert vandermonde_matrix(3).rows() == [[1, 1], [v(1, 3), v(1, 2)]]
    assert determinant(vandermonde_matrix(2)) == 1
    assert all(vandermonde_check(n) for n in range(2, 7))
    with pytest.raises(BadSize):
        vandermonde_check(1)


# -- identifiability degree ------------------------------------------------------


@pytest.mark.parametrize("kind, n, expected", [("cycle", 3, 2), ("mammillary", 3, 2), ("catenary", 4, 1)])
def test_degree_examples(kind, n, expected):
    rep = identifiability_degree(kind, n, samples=20, seed=0)
    assert rep.degree == expected == rep.expected
    assert rep.ok and len(rep.observed_degrees) == 20


def test_degree_is_seed_deterministic():
    a = identifiability_degree("cycle", 4, samples=5, seed=3)
    b = identifiability_degree("cycle", 4, samples=5, seed=3)
    assert a == b


def test_degree_input_checks():
    with pytest.raises(BadSize):
        identifiability_degree("cycle", 2, samples=1)
    with pytest.raises(ValueError):
        identifiability_degree("cycle", 3, samples=0)
    with pytest.raises(ValueError):
        identifiability_degree("tree", 3)


def test_catenary_recovery_is_exact():
    cm = coefficient_map(family("catenary", 5))
    rng = random.Random(4)
    for _ in range(10):
        point = {p: rng.randint(1, 10**4) for p in cm.params}
        rows = [evaluate(f, point) for f in cm.rows()]
        assert catenary_recover(rows[:5], rows[5:]) == point
