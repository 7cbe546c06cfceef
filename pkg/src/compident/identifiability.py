"""Identifiability verdicts, singular-locus equations and the family checks built on them."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import mpmath

from .coeffs import CoefficientMap, coefficient_map, jacobian
from .errors import (
    BadSize,
    DegenerateSample,
    EdgeNotInModel,
    NoSingleMinor,
    NotBidirectionalTree,
    NotDivisible,
    PreconditionViolated,
    RankDeficient,
)
from .linalg import MINOR_LIMIT, PolyMatrix, determinant, generic_rank, maximal_minors
from .model import CompartmentModel, bidirectional_tree, family, is_strongly_connected, tree_parents
from .poly import (
    ParamId,
    SparsePoly,
    elementary_symmetric,
    evaluate,
    exact_divide,
    multilinear_partial,
    multiplicity,
    primitive,
    product,
    rename,
    same_up_to_scalar,
    substitute_zero,
)

LOCALLY_IDENTIFIABLE = "locally-identifiable"
UNIDENTIFIABLE = "unidentifiable"

ROOT_TOL = 1e-9
SAMPLE_RANGE = (1, 10**4)
MAX_REDRAWS = 10


def a(i: int, j: int) -> SparsePoly:
    """The parameter variable ``a_{ij}`` (flow ``j -> i``; ``i = 0`` is a leak)."""
    return SparsePoly.var(ParamId(i, j))


# -- generic local identifiability --------------------------------------------


@dataclass(frozen=True)
class IdentifiabilityReport:
    param_count: int
    coeff_count: int
    generic_rank: int
    verdict: str
    trials: int

    @property
    def identifiable(self) -> bool:
        return self.verdict == LOCALLY_IDENTIFIABLE

    def to_dict(self) -> dict:
        return {
            "param_count": self.param_count,
            "coeff_count": self.coeff_count,
            "generic_rank": self.generic_rank,
            "verdict": self.verdict,
            "trials": self.trials,
        }


def is_generically_locally_identifiable(
    model: CompartmentModel, trials: int = 3, rng: random.Random | int | None = 0
) -> IdentifiabilityReport:
    """Compare the generic rank of the coefficient-map Jacobian with the parameter count."""
    cm = coefficient_map(model)
    jac = jacobian(cm)
    est = generic_rank(jac, trials, rng)
    verdict = LOCALLY_IDENTIFIABLE if est.rank == model.param_count else UNIDENTIFIABLE
    return IdentifiabilityReport(model.param_count, jac.nrows, est.rank, verdict, trials)


# -- singular locus -------------------------------------------------------------


@dataclass(frozen=True)
class SingularLocusResult:
    equation: SparsePoly
    provenance: str  # "square-determinant" or "selected-minor"
    row_set: tuple | None = None  # row labels of the selected minor
    factor_report: tuple = ()  # (factor, multiplicity) pairs, cofactor last
    all_divisible: bool | None = None  # every nonzero minor is a polynomial multiple
    all_rational_multiples: bool | None = None  # every nonzero minor is c * equation, c rational
    nonzero_minors: int | None = None

    def to_dict(self) -> dict:
        out = {
            "equation": str(self.equation),
            "provenance": self.provenance,
            "row_set": list(self.row_set) if self.row_set is not None else None,
            "factors": [[str(f), m] for f, m in self.factor_report],
        }
        if self.all_divisible is not None:
            out["all_divisible"] = self.all_divisible
            out["all_rational_multiples"] = self.all_rational_multiples
            out["nonzero_minors"] = self.nonzero_minors
        return out


def singular_locus_equation(
    model: CompartmentModel,
    trials: int = 3,
    rng: random.Random | int | None = 0,
    limit: int = MINOR_LIMIT,
) -> SingularLocusResult:
    """Normalized equation of the locus where the Jacobian drops rank.

    A square Jacobian gives its determinant.  Otherwise every maximal minor
    is computed and the one that exactly divides all the others is chosen;
    :class:`NoSingleMinor` carries the full list when no minor qualifies.
    """
    cm = coefficient_map(model)
    jac = jacobian(cm)
    m = model.param_count
    if generic_rank(jac, trials, rng).rank < m:
        raise RankDeficient(f"Jacobian has generic rank below {m}; the model is not identifiable")
    labels = cm.row_labels()
    if jac.nrows == m:
        eq = primitive(determinant(jac))
        return SingularLocusResult(eq, "square-determinant", None, factor_report(eq))
    minors = maximal_minors(jac, m, limit)
    nonzero = [mn for mn in minors if not mn.is_zero]
    candidates = sorted(nonzero, key=lambda mn: (mn.value.total_degree(), len(mn.value), mn.rows))
    for cand in candidates:
        scalar = True
        for other in nonzero:
            if other is cand:
                continue
            try:
                q = exact_divide(other.value, cand.value)
            except NotDivisible:
                break
            scalar = scalar and q.is_constant()
        else:
            eq = primitive(cand.value)
            rows = tuple(labels[r] for r in cand.rows)
            return SingularLocusResult(
                eq, "selected-minor", rows, factor_report(eq), True, scalar, len(nonzero)
            )
    raise NoSingleMinor("no maximal minor divides all the others", minors)


def factor_report(f: SparsePoly) -> tuple:
    """Split off parameter variables and differences of two parameters.

    ``(x - y) | f`` exactly when ``f`` vanishes after renaming ``y`` to ``x``,
    which is tested before any division.  Whatever is left over is reported as
    a final cofactor with multiplicity 1 (unless it is a constant).
    """
    if f.is_zero():
        return ()
    out = []
    rest = f
    vs = f.variables()
    for v in vs:
        k = multiplicity(rest, SparsePoly.var(v))
        if k:
            rest = exact_divide(rest, SparsePoly.var(v) ** k)
            out.append((SparsePoly.var(v), k))
    for x, y in itertools.combinations(vs, 2):
        if rename(rest, {y: x}).is_zero():
            diff = SparsePoly.var(x) - SparsePoly.var(y)
            k = multiplicity(rest, diff)
            rest = exact_divide(rest, diff**k)
            out.append((diff, k))
    if not rest.is_constant():
        out.append((primitive(rest), 1))
    return tuple(out)


def factor_multiplicity(f: SparsePoly, factor: SparsePoly) -> float | int:
    """Largest ``p`` with ``factor**p | f`` (``math.inf`` for ``f = 0``)."""
    return multiplicity(f, factor)


# -- submodels -------------------------------------------------------------------

BY_THEOREM = "identifiable-by-theorem"
INCONCLUSIVE = "inconclusive"
NOT_STRONGLY_CONNECTED = "not-strongly-connected"


@dataclass(frozen=True)
class SubmodelReport:
    deleted: tuple  # ParamIds
    theorem_verdict: str
    direct: IdentifiabilityReport | None
    direct_error: str | None = None

    def to_dict(self) -> dict:
        return {
            "deleted": [p.name for p in self.deleted],
            "theorem_verdict": self.theorem_verdict,
            "direct": self.direct.to_dict() if self.direct else None,
            "direct_error": self.direct_error,
        }


def check_submodel(
    model: CompartmentModel,
    delete_edges: Iterable,
    equation: SparsePoly | None = None,
    trials: int = 3,
    rng: random.Random | int | None = 0,
) -> SubmodelReport:
    """Screen an edge deletion with the singular-locus equation, then check directly.

    Deleting edges keeps identifiability when the reduced graph is still
    strongly connected and the equation does not vanish once the deleted
    parameters are set to zero.  The theorem never certifies the opposite, so
    a vanishing equation only gives ``inconclusive``.
    """
    edges = [tuple(e) for e in delete_edges]
    for e in edges:
        if e not in model.edges:
            raise EdgeNotInModel(f"edge {e[0]}->{e[1]} is not in the model")
    deleted = tuple(sorted(model.param_of_edge(e) for e in edges))
    sub = model.delete_edges(edges)
    if not is_strongly_connected(sub):
        return SubmodelReport(deleted, NOT_STRONGLY_CONNECTED, None, "the reduced graph is not strongly connected")
    if equation is None:
        equation = singular_locus_equation(model, trials, rng).equation
    verdict = BY_THEOREM if substitute_zero(equation, deleted) else INCONCLUSIVE
    try:
        direct = is_generically_locally_identifiable(sub, trials, rng)
    except PreconditionViolated as exc:
        return SubmodelReport(deleted, verdict, None, str(exc))
    return SubmodelReport(deleted, verdict, direct)


# -- trees -----------------------------------------------------------------------


def tree_multiplicity_procedure(model: CompartmentModel) -> dict:
    """Predicted exponent of every edge parameter in a bidirectional tree's equation.

    Edges pointing away from compartment 1 get the sum, over the child's own
    outgoing tree edges, of (label + 1); leaf edges get 0.  Edges pointing
    toward 1 get 1 plus the labels of the edges arriving at their source.
    """
    parents = tree_parents(model)
    if parents is None:
        raise NotBidirectionalTree("the model is not a bidirectional tree rooted at compartment 1")
    if model.inputs != {1} or model.outputs != {1} or model.leaks != {1}:
        raise PreconditionViolated("the tree procedure needs In = Out = Leak = {1}")
    children: dict = {v: [] for v in range(1, model.n + 1)}
    for c, p in parents.items():
        children[p].append(c)

    @lru_cache(maxsize=None)
    def away(v: int) -> int:  # label of parent(v) -> v
        return sum(away(k) + 1 for k in children[v])

    @lru_cache(maxsize=None)
    def toward(v: int) -> int:  # label of v -> parent(v)
        return 1 + sum(toward(k) for k in children[v])

    labels = {}
    for c, p in parents.items():
        labels[ParamId(c, p)] = away(c)
        labels[ParamId(p, c)] = toward(c)
    return dict(sorted(labels.items()))


@dataclass(frozen=True)
class TreeConjectureReport:
    parents: dict
    entries: tuple  # (param, predicted, observed)
    equation: SparsePoly

    @property
    def all_match(self) -> bool:
        return all(p == o for _, p, o in self.entries)

    @property
    def mismatches(self) -> list:
        return [e for e in self.entries if e[1] != e[2]]

    def to_dict(self) -> dict:
        return {
            "parents": {str(k): v for k, v in sorted(self.parents.items())},
            "equation": str(self.equation),
            "edges": [
                {"param": p.name, "predicted": pred, "observed": obs, "match": pred == obs}
                for p, pred, obs in self.entries
            ],
            "all_match": self.all_match,
        }


def verify_tree_conjecture(model: CompartmentModel, trials: int = 3, rng=0) -> TreeConjectureReport:
    labels = tree_multiplicity_procedure(model)
    f = singular_locus_equation(model, trials, rng).equation
    entries = tuple((p, k, multiplicity(f, SparsePoly.var(p))) for p, k in labels.items())
    return TreeConjectureReport(tree_parents(model), entries, f)


def _canonical(children: dict, v: int) -> str:
    return "(" + "".join(sorted(_canonical(children, k) for k in children[v])) + ")"


def rooted_trees(n: int) -> list:
    """One parent map per isomorphism class of rooted trees on ``n`` vertices (root 1).

    Walks all labelings with ``parent(v) < v`` and keeps the first of each
    canonical shape, so the representatives are deterministic.
    """
    if n < 1:
        raise BadSize("a tree needs at least one vertex")
    seen: dict = {}
    for choice in itertools.product(*(range(1, v) for v in range(2, n + 1))):
        parents = dict(zip(range(2, n + 1), choice))
        children: dict = {v: [] for v in range(1, n + 1)}
        for c, p in parents.items():
            children[p].append(c)
        seen.setdefault(_canonical(children, 1), parents)
    return [seen[k] for k in sorted(seen)]


def tree_models(n: int) -> list:
    return [bidirectional_tree(p) for p in rooted_trees(n)]


# -- family closed forms ---------------------------------------------------------


def family_closed_form(kind: str, n: int) -> SparsePoly:
    """The product formula predicted for a family's singular-locus equation."""
    if kind == "mammillary":
        xs = [a(1, j) for j in range(2, n + 1)]
        pairs = [(x - y) ** 2 for x, y in itertools.combinations(xs, 2)]
        return product(xs) * product(pairs)
    if kind == "cycle":
        xs = [a(k + 1, k) for k in range(2, n)] + [a(1, n)]
        pairs = [x - y for x, y in itertools.combinations(xs, 2)]
        return product(xs) * product(pairs)
    if kind == "catenary":
        f = a(1, 2) ** (n - 1)
        for k in range(2, n):
            f = f * (a(k, k - 1) * a(k, k + 1)) ** (n - k)
        return f
    raise ValueError(f"unknown family {kind!r}")


@dataclass(frozen=True)
class FamilyCheck:
    kind: str
    n: int
    status: str  # match / mismatch, or conjecture-match / conjecture-mismatch for catenary
    expected: SparsePoly
    computed: SparsePoly
    provenance: str

    @property
    def ok(self) -> bool:
        return self.status.endswith("match") and "mismatch" not in self.status

    def to_dict(self) -> dict:
        return {
            "family": self.kind,
            "n": self.n,
            "status": self.status,
            "expected": str(self.expected),
            "computed": str(self.computed),
            "provenance": self.provenance,
        }


def verify_family_singular_locus(kind: str, n: int, trials: int = 3, rng=0) -> FamilyCheck:
    if n > 8:
        raise BadSize("family checks are limited to n <= 8")
    res = singular_locus_equation(family(kind, n), trials, rng)
    expected = family_closed_form(kind, n)
    same = same_up_to_scalar(res.equation, expected)
    status = "match" if same else "mismatch"
    if kind == "catenary":
        status = "conjecture-" + status
    return FamilyCheck(kind, n, status, primitive(expected), res.equation, res.provenance)


def catenary_divisibility_check(n: int, equation: SparsePoly | None = None) -> dict:
    """Check that ``a21`` and ``a12 a23 ... a_{n-1,n}`` divide the catenary equation.

    For ``n = 2`` there is no ``a23``-type factor and ``a21`` should not occur
    at all, matching the exponent ``n - 2 = 0``.
    """
    if not 2 <= n <= 8:
        raise BadSize("catenary divisibility checks need 2 <= n <= 8")
    f = equation if equation is not None else singular_locus_equation(family("catenary", n)).equation
    chain = product(a(k, k + 1) for k in range(1, n))
    out = {"n": n, "equation": str(f)}
    if n == 2:
        out["a2_1"] = multiplicity(f, a(2, 1)) == 0
    else:
        out["a2_1"] = multiplicity(f, a(2, 1)) >= 1
    out["chain"] = _divides(chain, f)
    out["ok"] = out["a2_1"] and out["chain"]
    return out


def _divides(g: SparsePoly, f: SparsePoly) -> bool:
    try:
        exact_divide(f, g)
    except NotDivisible:
        return False
    return True


def vandermonde_matrix(n: int) -> PolyMatrix:
    """``M[j][k] = E_j`` of the mammillary exchange rates with ``a_{1,k+2}`` left out."""
    xs = [a(1, k) for k in range(2, n + 1)]
    cols = []
    for k in range(len(xs)):
        es = elementary_symmetric(xs[:k] + xs[k + 1 :])
        cols.append(es)
    return PolyMatrix([[cols[k][j] for k in range(len(xs))] for j in range(len(xs))])


def vandermonde_check(n: int) -> bool:
    if not 2 <= n <= 8:
        raise BadSize("vandermonde_check needs 2 <= n <= 8")
    xs = [a(1, k) for k in range(2, n + 1)]
    det = determinant(vandermonde_matrix(n))
    vdm = product(x - y for x, y in itertools.combinations(xs, 2))
    return det == vdm or det == -vdm


# -- identifiability degree ------------------------------------------------------


@dataclass(frozen=True)
class DegreeSample:
    index: int
    params: dict  # ParamId -> int
    degree: int
    contains_truth: bool
    redraws: int


@dataclass(frozen=True)
class DegreeReport:
    n: int
    family: str
    sample_count: int
    observed_degrees: tuple
    expected: int
    samples: tuple = field(default=(), repr=False)

    @property
    def degree(self) -> int | None:
        vals = set(self.observed_degrees)
        return vals.pop() if len(vals) == 1 else None

    @property
    def ok(self) -> bool:
        return self.degree == self.expected and all(s.contains_truth for s in self.samples)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "sample_count": self.sample_count,
            "observed_degrees": list(self.observed_degrees),
            "expected": self.expected,
            "degree": self.degree,
            "contains_truth": all(s.contains_truth for s in self.samples),
            "redraws": sum(s.redraws for s in self.samples),
        }


@lru_cache(maxsize=None)
def _family_coefficients(kind: str, n: int) -> CoefficientMap:
    return coefficient_map(family(kind, n))


def _draw(params: tuple, rng: random.Random) -> dict:
    lo, hi = SAMPLE_RANGE
    values = rng.sample(range(lo, hi + 1), len(params))
    return dict(zip(params, values))


def _roots(elem: list) -> list:
    """Roots of ``x^m - E_1 x^{m-1} + E_2 x^{m-2} - ...`` from ``elem = [E_0=1, E_1, ..., E_m]``."""
    coeffs = [(-1) ** k * e for k, e in enumerate(elem)]
    with mpmath.workdps(50):
        roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
    return [complex(r) for r in roots]


def _distinct(roots: list) -> bool:
    return all(abs(x - y) > ROOT_TOL * max(1.0, abs(x)) for x, y in itertools.combinations(roots, 2))


def _consistent(cm: CoefficientMap, point: dict, target: list) -> bool:
    for f, t in zip(cm.rows(), target):
        v = evaluate(f, point)
        if abs(v - t) > ROOT_TOL * max(1.0, abs(t)):
            return False
    return True


def _same_multiset(found: list, truth: list) -> bool:
    left = list(found)
    for t in truth:
        hit = next((r for r in left if abs(r - t) <= ROOT_TOL * max(1.0, abs(t))), None)
        if hit is None:
            return False
        left.remove(hit)
    return True


def _cycle_fiber(cm: CoefficientMap, n: int, sample: dict) -> tuple:
    target = [evaluate(f, sample) for f in cm.rows()]
    c, d = target[:n], target[n:]
    a01 = Fraction(c[0], d[0])
    a21 = c[n - 1] - d[n - 2] - a01
    cyc = [ParamId(k + 1, k) for k in range(2, n)] + [ParamId(1, n)]
    elem = [1] + [d[n - 1 - k] for k in range(1, n)]  # E_k = d_{n-1-k}
    roots = _roots(elem)
    if not _distinct(roots):
        raise DegenerateSample("repeated roots among the cycle rates")
    fiber = 0
    for perm in itertools.permutations(roots):
        point = {ParamId(0, 1): float(a01), ParamId(2, 1): float(a21), **dict(zip(cyc, perm))}
        fiber += _consistent(cm, point, target)
    truth = (
        a01 == sample[ParamId(0, 1)]
        and a21 == sample[ParamId(2, 1)]
        and _same_multiset(roots, [sample[p] for p in cyc])
    )
    return fiber, truth


def _mammillary_fiber(cm: CoefficientMap, n: int, sample: dict) -> tuple:
    target = [evaluate(f, sample) for f in cm.rows()]
    c, d = target[:n], target[n:]
    spokes = [ParamId(1, j) for j in range(2, n + 1)]
    unknowns = [ParamId(0, 1)] + [ParamId(j, 1) for j in range(2, n + 1)]
    elem = [1] + [d[n - 1 - k] for k in range(1, n)]
    roots = _roots(elem)
    if not _distinct(roots):
        raise DegenerateSample("repeated roots among the exchange rates")
    # c_i is affine in the unknowns once the spoke rates are fixed
    lin = [[multilinear_partial(f, u) for u in unknowns] for f in cm.c]
    base = [substitute_zero(f, unknowns) for f in cm.c]
    fiber = 0
    truth = False
    for perm in itertools.permutations(roots):
        spoke = dict(zip(spokes, perm))
        with mpmath.workdps(50):
            mat = mpmath.matrix([[evaluate(g, spoke) for g in row] for row in lin])
            rhs = mpmath.matrix([c[i] - evaluate(base[i], spoke) for i in range(n)])
            try:
                sol = mpmath.lu_solve(mat, rhs)
            except ZeroDivisionError:
                continue
        point = {**spoke, **{u: complex(sol[k]) for k, u in enumerate(unknowns)}}
        if _consistent(cm, point, target):
            fiber += 1
            truth = truth or all(
                abs(point[p] - sample[p]) <= ROOT_TOL * sample[p] for p in spokes + unknowns
            )
    return fiber, truth


def catenary_recover(c: list, d: list) -> dict:
    """Invert the catenary coefficient map exactly by a continued-fraction expansion.

    With ``P_1 = det(lam I - A)`` and ``P_2`` the same for compartments
    ``2..n``, the tridiagonal structure gives
    ``P_k = (lam + alpha_k) P_{k+1} - beta_k P_{k+2}``; repeated division
    recovers every ``alpha_k`` and ``beta_k``, and the rates follow from the
    last compartment upward.  Every step is forced, so the preimage is unique.
    """
    n = len(c)
    polys = [[Fraction(x) for x in c] + [Fraction(1)], [Fraction(x) for x in d] + [Fraction(1)]]
    alpha, beta = [], []
    for _ in range(n):
        p, q = polys[-2], polys[-1]
        # p = (lam + al) q - be r, with p monic of degree deg q + 1
        al = p[-2] - q[-2] if len(q) > 1 else p[-2]
        rem = [x for x in p]
        shifted = [Fraction(0)] + q  # lam * q
        for i, x in enumerate(shifted):
            rem[i] -= x
        for i, x in enumerate(q):
            rem[i] -= al * x
        rem = rem[: len(q) - 1]
        alpha.append(al)
        if len(q) == 1:
            break
        be = -rem[-1]
        if be == 0:
            raise DegenerateSample("zero product of exchange rates in the recovery")
        beta.append(be)
        polys.append([x / -be for x in rem])
    out = {ParamId(n - 1, n): alpha[n - 1]} if n > 1 else {}
    for k in range(n - 1, 0, -1):  # compartments n-1 .. 1
        back = out[ParamId(k, k + 1)]
        if back == 0:
            raise DegenerateSample("zero exchange rate in the recovery")
        fwd = beta[k - 1] / back
        out[ParamId(k + 1, k)] = fwd
        if k > 1:
            out[ParamId(k - 1, k)] = alpha[k - 1] - fwd
        else:
            out[ParamId(0, 1)] = alpha[0] - fwd
    return out


def _catenary_fiber(cm: CoefficientMap, n: int, sample: dict) -> tuple:
    target = [evaluate(f, sample) for f in cm.rows()]
    got = catenary_recover(target[:n], target[n:])
    truth = all(got[p] == sample[p] for p in cm.params)
    ok = [evaluate(f, got) for f in cm.rows()] == target
    return (1 if ok else 0), truth


_EXPECTED = {
    "cycle": lambda n: math.factorial(n - 1),
    "mammillary": lambda n: math.factorial(n - 1),
    "catenary": lambda n: 1,
}
_FIBER = {"cycle": _cycle_fiber, "mammillary": _mammillary_fiber, "catenary": _catenary_fiber}


def identifiability_degree(kind: str, n: int, samples: int = 20, seed: int = 0) -> DegreeReport:
    """Count preimages of the coefficient map at random integer parameter points."""
    if kind not in _FIBER:
        raise ValueError(f"unknown family {kind!r}")
    if samples < 1:
        raise ValueError("need at least one sample")
    family(kind, n)  # size validation
    cm = _family_coefficients(kind, n)
    rng = random.Random(seed)
    rows = []
    for idx in range(samples):
        for redraw in range(MAX_REDRAWS + 1):
            point = _draw(cm.params, rng)
            try:
                deg, truth = _FIBER[kind](cm, n, point)
                break
            except DegenerateSample:
                continue
        else:
            raise DegenerateSample(f"sample {idx}: still degenerate after {MAX_REDRAWS} redraws")
        rows.append(DegreeSample(idx, point, deg, truth, redraw))
    return DegreeReport(
        n, kind, samples, tuple(s.degree for s in rows), _EXPECTED[kind](n), tuple(rows)
    )
