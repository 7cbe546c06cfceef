"""Linear compartment models: definition, validation, standard families, graphs."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from .errors import BadSize, InvalidModel, MalformedInput, NotATree
from .linalg import PolyMatrix
from .poly import ParamId, SparsePoly

FAMILIES = ("catenary", "cycle", "mammillary")


@dataclass(frozen=True)
class CompartmentModel:
    """Directed graph on compartments ``1..n`` with input, output and leak sets.

    An edge ``(j, i)`` is a flow ``j -> i`` carrying the parameter ``a_{ij}``;
    a leak at ``j`` carries ``a_{0j}``.
    """

    n: int
    edges: frozenset
    inputs: frozenset = frozenset({1})
    outputs: frozenset = frozenset({1})
    leaks: frozenset = frozenset({1})

    def __post_init__(self):
        for name in ("edges", "inputs", "outputs", "leaks"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if not isinstance(self.n, int) or self.n < 1:
            raise InvalidModel(f"n must be a positive integer, got {self.n!r}")
        for e in self.edges:
            j, i = e
            for v in e:
                if not 1 <= v <= self.n:
                    raise InvalidModel(f"edge {j}->{i}: vertex {v} outside 1..{self.n}")
            if j == i:
                raise InvalidModel(f"self-loop {j}->{i} is not allowed")
        for name in ("inputs", "outputs", "leaks"):
            for v in getattr(self, name):
                if not 1 <= v <= self.n:
                    raise InvalidModel(f"{name}: vertex {v} outside 1..{self.n}")

    @classmethod
    def build(cls, n: int, edges: Iterable, inputs=(1,), outputs=(1,), leaks=(1,)) -> "CompartmentModel":
        """Like the constructor but rejects duplicate edges in ``edges``."""
        edges = [tuple(e) for e in edges]
        seen = set()
        for e in edges:
            if e in seen:
                raise InvalidModel(f"duplicate edge {e[0]}->{e[1]}")
            seen.add(e)
        return cls(n, frozenset(edges), frozenset(inputs), frozenset(outputs), frozenset(leaks))

    @cached_property
    def params(self) -> tuple:
        """All parameters in canonical (target, source) order."""
        ps = [ParamId(i, j) for j, i in self.edges] + [ParamId(0, j) for j in self.leaks]
        return tuple(sorted(ps))

    def param_of_edge(self, edge) -> ParamId:
        j, i = edge
        return ParamId(i, j)

    @property
    def param_count(self) -> int:
        return len(self.edges) + len(self.leaks)

    def sorted_edges(self) -> list:
        return sorted(self.edges)

    def successors(self, v: int) -> list:
        return sorted(i for j, i in self.edges if j == v)

    def delete_edges(self, edges: Iterable) -> "CompartmentModel":
        gone = {tuple(e) for e in edges}
        return CompartmentModel(self.n, self.edges - gone, self.inputs, self.outputs, self.leaks)

    def with_leaks(self, leaks: Iterable[int]) -> "CompartmentModel":
        return CompartmentModel(self.n, self.edges, self.inputs, self.outputs, frozenset(leaks))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": [list(e) for e in self.sorted_edges()],
            "in": sorted(self.inputs),
            "out": sorted(self.outputs),
            "leak": sorted(self.leaks),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


_SCHEMA_KEYS = {"n", "edges", "in", "out", "leak"}


def parse_model(text: str) -> CompartmentModel:
    """Parse and validate the model JSON document.

    ``{"n": 2, "edges": [[1, 2], [2, 1]], "in": [1], "out": [1], "leak": [1]}``
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return model_from_dict(doc)


def model_from_dict(doc) -> CompartmentModel:
    if not isinstance(doc, dict):
        raise MalformedInput("model document must be a JSON object")
    missing = _SCHEMA_KEYS - doc.keys()
    if missing:
        raise MalformedInput(f"missing keys: {sorted(missing)}")
    extra = doc.keys() - _SCHEMA_KEYS
    if extra:
        raise MalformedInput(f"unknown keys: {sorted(extra)}")
    n = doc["n"]
    if not _is_int(n):
        raise MalformedInput(f"'n' must be an integer, got {n!r}")
    edges = doc["edges"]
    if not isinstance(edges, list):
        raise MalformedInput("'edges' must be a list")
    for idx, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(_is_int(v) for v in e)):
            raise MalformedInput(f"edges[{idx}] must be a pair of integers, got {e!r}")
    sets = {}
    for key in ("in", "out", "leak"):
        vals = doc[key]
        if not isinstance(vals, list):
            raise MalformedInput(f"'{key}' must be a list")
        for idx, v in enumerate(vals):
            if not _is_int(v):
                raise MalformedInput(f"{key}[{idx}] must be an integer, got {v!r}")
        sets[key] = vals
    return CompartmentModel.build(n, edges, sets["in"], sets["out"], sets["leak"])


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def family(kind: str, n: int) -> CompartmentModel:
    """Catenary (path), cycle or mammillary (star) model with In = Out = Leak = {1}."""
    if kind == "catenary":
        if n < 2:
            raise BadSize("catenary models need n >= 2")
        edges = [(k, k + 1) for k in range(1, n)] + [(k + 1, k) for k in range(1, n)]
    elif kind == "mammillary":
        if n < 2:
            raise BadSize("mammillary models need n >= 2")
        edges = [(1, k) for k in range(2, n + 1)] + [(k, 1) for k in range(2, n + 1)]
    elif kind == "cycle":
        if n < 3:
            raise BadSize("cycle models need n >= 3")
        edges = [(k, k + 1) for k in range(1, n)] + [(n, 1)]
    else:
        raise ValueError(f"unknown family {kind!r}; expected one of {FAMILIES}")
    return CompartmentModel.build(n, edges)


def bidirectional_tree(parents: Mapping[int, int]) -> CompartmentModel:
    """Tree rooted at 1 from a child -> parent map, every edge in both directions."""
    parents = {int(c): int(p) for c, p in parents.items()}
    n = len(parents) + 1
    if set(parents) != set(range(2, n + 1)):
        raise NotATree(f"children must be exactly 2..{n}, got {sorted(parents)}")
    for c, p in parents.items():
        if not 1 <= p <= n or p == c:
            raise NotATree(f"invalid parent {p} for {c}")
    for c in parents:
        seen = {c}
        v = c
        while v != 1:
            v = parents[v]
            if v in seen:
                raise NotATree(f"cycle through vertex {v}")
            seen.add(v)
    edges = [(p, c) for c, p in parents.items()] + [(c, p) for c, p in parents.items()]
    return CompartmentModel.build(n, edges)


def tree_parents(model: CompartmentModel) -> dict | None:
    """Child -> parent map when the model is a bidirectional tree rooted at 1, else ``None``."""
    undirected = {frozenset(e) for e in model.edges}
    if len(undirected) != model.n - 1 or len(model.edges) != 2 * (model.n - 1):
        return None
    if any((i, j) not in model.edges for j, i in model.edges):
        return None
    parents = {}
    frontier = [1]
    seen = {1}
    while frontier:
        v = frontier.pop()
        for w in model.successors(v):
            if w not in seen:
                seen.add(w)
                parents[w] = v
                frontier.append(w)
    return parents if len(seen) == model.n else None


# -- connectivity ---------------------------------------------------------------


def _reachable(adj: Mapping[int, Iterable[int]], start: int, allowed) -> set:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj.get(v, ()):
            if w in allowed and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def _strongly_connected(edges, vertices) -> bool:
    vertices = set(vertices)
    if len(vertices) <= 1:
        return True
    fwd: dict = {}
    bwd: dict = {}
    for j, i in edges:
        if j in vertices and i in vertices:
            fwd.setdefault(j, []).append(i)
            bwd.setdefault(i, []).append(j)
    root = min(vertices)
    return _reachable(fwd, root, vertices) == vertices and _reachable(bwd, root, vertices) == vertices


def is_strongly_connected(model: CompartmentModel) -> bool:
    return _strongly_connected(model.edges, range(1, model.n + 1))


def is_inductively_strongly_connected(model: CompartmentModel) -> bool:
    """Search for an ordering from 1 whose every prefix induces a strongly connected graph."""
    full = frozenset(range(1, model.n + 1))
    failed: set = set()

    def extend(prefix: frozenset) -> bool:
        if prefix == full:
            return True
        if prefix in failed:
            return False
        for v in sorted(full - prefix):
            nxt = prefix | {v}
            if _strongly_connected(model.edges, nxt) and extend(nxt):
                return True
        failed.add(prefix)
        return False

    return extend(frozenset({1}))


def compartmental_matrix(model: CompartmentModel) -> PolyMatrix:
    """``A[i][j] = a_{ij}`` off the diagonal; ``-(leak + outflows)`` on it (0-based indices)."""
    n = model.n
    grid = [[SparsePoly.zero()] * n for _ in range(n)]
    for j, i in model.edges:
        a = SparsePoly.var(ParamId(i, j))
        grid[i - 1][j - 1] = grid[i - 1][j - 1] + a
        grid[j - 1][j - 1] = grid[j - 1][j - 1] - a
    for j in model.leaks:
        grid[j - 1][j - 1] = grid[j - 1][j - 1] - SparsePoly.var(ParamId(0, j))
    return PolyMatrix(grid)
