"""Seeded random models and brute-force oracles shared by the test modules."""

import itertools
import random

import networkx as nx

from compident.coeffs import LabeledDigraph
from compident.model import CompartmentModel, is_strongly_connected


def random_model(rng: random.Random, n_max: int = 6, density: float = 0.3, n_min: int = 2) -> CompartmentModel:
    """Strongly connected model with In = Out = {1} and a nonempty random leak set."""
    n = rng.randint(n_min, n_max)
    while True:
        order = list(range(1, n + 1))
        rng.shuffle(order)
        edges = {(order[k], order[(k + 1) % n]) for k in range(n)} if n > 1 else set()
        for j in range(1, n + 1):
            for i in range(1, n + 1):
                if i != j and rng.random() < density:
                    edges.add((j, i))
        leaks = {v for v in range(1, n + 1) if rng.random() < 0.3} or {rng.randint(1, n)}
        model = CompartmentModel(n, frozenset(edges), leaks=frozenset(leaks))
        if is_strongly_connected(model):
            return model


def random_models(seed: int, count: int, **kw) -> list:
    rng = random.Random(seed)
    return [random_model(rng, **kw) for _ in range(count)]


def brute_force_forests(g: LabeledDigraph, k: int) -> list:
    """Every k-edge subset with out-degree <= 1 whose undirected shadow is a forest."""
    out = []
    for subset in itertools.combinations(g.edges, k):
        sources = [e[0] for e in subset]
        if len(set(sources)) != len(sources):
            continue
        shadow = nx.MultiGraph()
        shadow.add_nodes_from(g.vertices)
        shadow.add_edges_from(subset)
        if nx.is_forest(shadow):
            out.append(tuple(sorted(subset)))
    return sorted(out)
