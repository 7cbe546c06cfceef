"""Input-output coefficient maps, via spanning incoming forests or via determinants.

With input and output in compartment 1 the input-output equation reads

    y^(n) + c_{n-1} y^(n-1) + ... + c_0 y = u^(n-1) + d_{n-2} u^(n-2) + ... + d_0 u

where ``c_i`` sums the edge-label products of the ``(n-i)``-edge spanning
incoming forests of the leak-augmented graph and ``d_i`` does the same for the
``(n-i-1)``-edge forests of the graph with compartment 1 folded into the sink.
The determinant route reads the same numbers off ``det(lam I - A)`` and
``det(lam I - A_11)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import IndexOutOfRange, PreconditionViolated
from .linalg import PolyMatrix, charpoly_coeffs, submatrix
from .model import CompartmentModel, compartmental_matrix, is_strongly_connected
from .poly import ParamId, SparsePoly, multilinear_partial, partial_derivative, poly_sum, product

SINK = 0


@dataclass(frozen=True)
class LabeledDigraph:
    """Directed graph whose edges ``(src, dst)`` carry nonzero polynomial labels."""

    vertices: frozenset
    labels: Mapping  # (src, dst) -> SparsePoly

    def __post_init__(self):
        for (src, dst), lab in self.labels.items():
            if src not in self.vertices or dst not in self.vertices:
                raise ValueError(f"edge {src}->{dst} leaves the vertex set")
            if lab.is_zero():
                raise ValueError(f"edge {src}->{dst} has a zero label")
            if src == SINK and SINK in self.vertices:
                raise ValueError("the sink vertex 0 has no outgoing edges")

    @property
    def edges(self) -> list:
        return sorted(self.labels)

    def out_edges(self, v: int) -> list:
        return [e for e in self.edges if e[0] == v]


@dataclass(frozen=True)
class Forest:
    """Edge subset of a labeled digraph (sorted edge tuple)."""

    edges: tuple
    graph: LabeledDigraph

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class CoefficientMap:
    c: tuple  # c_0 .. c_{n-1}
    d: tuple  # d_0 .. d_{n-2}
    params: tuple  # canonical column order

    @property
    def n(self) -> int:
        return len(self.c)

    def rows(self) -> list:
        return list(self.c) + list(self.d)

    def row_labels(self) -> list:
        return [f"c{i}" for i in range(len(self.c))] + [f"d{i}" for i in range(len(self.d))]

    def __eq__(self, other):
        if not isinstance(other, CoefficientMap):
            return NotImplemented
        return self.c == other.c and self.d == other.d and self.params == other.params

    def __hash__(self):
        return hash((self.c, self.d, self.params))


# -- graphs ---------------------------------------------------------------------


def leak_augmented(model: CompartmentModel) -> LabeledDigraph:
    labels = {(j, i): SparsePoly.var(ParamId(i, j)) for j, i in model.edges}
    for j in model.leaks:
        labels[(j, SINK)] = SparsePoly.var(ParamId(0, j))
    return LabeledDigraph(frozenset(range(model.n + 1)), labels)


def graph_tilde_i(model: CompartmentModel, i: int) -> LabeledDigraph:
    """Delete compartment ``i``; flows into ``i`` become (or merge into) leaks."""
    if not 1 <= i <= model.n:
        raise IndexOutOfRange(f"compartment {i} outside 1..{model.n}")
    g = leak_augmented(model)
    labels = {e: lab for e, lab in g.labels.items() if i not in e}
    for j, k in model.edges:
        if k != i:
            continue
        a = SparsePoly.var(ParamId(i, j))
        labels[(j, SINK)] = labels[(j, SINK)] + a if (j, SINK) in labels else a
    return LabeledDigraph(g.vertices - {i}, labels)


# -- forests --------------------------------------------------------------------


class _UndoUnionFind:
    def __init__(self, items):
        self.parent = {v: v for v in items}
        self.size = {v: 1 for v in items}
        self.history = []

    def find(self, v):
        while self.parent[v] != v:
            v = self.parent[v]
        return v

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.history.append((ra, rb))
        return True

    def undo(self):
        ra, rb = self.history.pop()
        self.parent[rb] = rb
        self.size[ra] -= self.size[rb]


def enumerate_forests(g: LabeledDigraph, k: int) -> list:
    """All spanning incoming forests of ``g`` with exactly ``k`` edges.

    Backtracks over vertices, giving each at most one outgoing edge, and keeps
    the undirected shadow acyclic with an undoable union-find.
    """
    if k < 0:
        return []
    order = sorted(g.vertices)
    choices = [g.out_edges(v) for v in order]
    # suffix counts of vertices that could still contribute an edge
    avail = [0] * (len(order) + 1)
    for idx in range(len(order) - 1, -1, -1):
        avail[idx] = avail[idx + 1] + (1 if choices[idx] else 0)
    uf = _UndoUnionFind(order)
    out = []
    chosen: list = []

    def walk(idx: int):
        need = k - len(chosen)
        if need == 0:
            out.append(Forest(tuple(sorted(chosen)), g))
            return
        if avail[idx] < need:
            return
        for e in choices[idx]:
            if uf.union(*e):
                chosen.append(e)
                walk(idx + 1)
                chosen.pop()
                uf.undo()
        walk(idx + 1)

    walk(0)
    out.sort(key=lambda f: f.edges)
    return out


def forest_product(f: Forest) -> SparsePoly:
    return product(f.graph.labels[e] for e in f.edges)


def forest_polynomial(g: LabeledDigraph, k: int) -> SparsePoly:
    return poly_sum(forest_product(f) for f in enumerate_forests(g, k))


# -- coefficient maps -----------------------------------------------------------


def check_io_preconditions(model: CompartmentModel) -> None:
    if set(model.inputs) != {1} or set(model.outputs) != {1}:
        raise PreconditionViolated("input and output must both be exactly compartment 1")
    if not model.leaks:
        raise PreconditionViolated("the model needs at least one leak")
    if not is_strongly_connected(model):
        raise PreconditionViolated("the model graph is not strongly connected")


def coefficients_via_forests(model: CompartmentModel) -> CoefficientMap:
    check_io_preconditions(model)
    n = model.n
    g = leak_augmented(model)
    g1 = graph_tilde_i(model, 1)
    c = tuple(forest_polynomial(g, n - i) for i in range(n))
    d = tuple(forest_polynomial(g1, n - i - 1) for i in range(n - 1))
    return CoefficientMap(c, d, model.params)


def coefficients_via_charpoly(model: CompartmentModel) -> CoefficientMap:
    check_io_preconditions(model)
    a = compartmental_matrix(model)
    c = tuple(charpoly_coeffs(a))
    d = tuple(charpoly_coeffs(submatrix(a, {0}, {0})))
    return CoefficientMap(c, d, model.params)


def coefficient_map(model: CompartmentModel, method: str = "forests") -> CoefficientMap:
    if method == "forests":
        return coefficients_via_forests(model)
    if method == "charpoly":
        return coefficients_via_charpoly(model)
    raise ValueError(f"unknown method {method!r}")


def jacobian(cm: CoefficientMap, params: Iterable[ParamId] | None = None, check: bool = True) -> PolyMatrix:
    """Rows ``c_0..c_{n-1}, d_0..d_{n-2}``; columns in canonical parameter order.

    Entries use the multilinear shortcut (keep terms containing the variable,
    set it to 1); with ``check`` each entry is compared with the formal partial.
    """
    params = cm.params if params is None else tuple(params)
    grid = []
    for f in cm.rows():
        row = []
        for v in params:
            entry = multilinear_partial(f, v)
            if check and entry != partial_derivative(f, v):
                raise ArithmeticError(f"{f} is not multilinear in {v}")
            row.append(entry)
        grid.append(row)
    return PolyMatrix(grid)
