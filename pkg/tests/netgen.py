"""Random network generators shared by the test modules."""

from __future__ import annotations

import networkx as nx
import numpy as np

from beliefrev import Evidence, build_network, find_cutset
from beliefrev import oracle


def _random_rows(rng, card, n_rows, zero_prob):
    rows = rng.dirichlet(np.ones(card), size=n_rows)
    if zero_prob:
        mask = rng.random(rows.shape) < zero_prob
        # keep at least one positive entry per row
        mask[np.arange(n_rows), rng.integers(0, card, n_rows)] = False
        rows = np.where(mask, 0.0, rows)
        rows /= rows.sum(axis=1, keepdims=True)
    return rows


def network_from_edges(rng, n, edges, cards, *, zero_prob=0.0, noisy_or_prob=0.0, name="rand"):
    parents = {v: [] for v in range(n)}
    for a, b in edges:
        parents[b].append(a)
    variables = []
    for v in range(n):
        pars = sorted(parents[v])
        entry = {"name": f"v{v}", "cardinality": int(cards[v]), "parents": [f"v{p}" for p in pars]}
        binary = cards[v] == 2 and all(cards[p] == 2 for p in pars)
        if pars and binary and rng.random() < noisy_or_prob:
            entry["noisyor"] = rng.uniform(0.05, 0.95, len(pars)).tolist()
        else:
            n_rows = int(np.prod([cards[p] for p in pars], dtype=int))
            entry["cpt"] = _random_rows(rng, int(cards[v]), n_rows, zero_prob).reshape(-1).tolist()
        variables.append(entry)
    return build_network({"name": name, "variables": variables})


def random_tree(rng, n, *, max_card=3, zero_prob=0.0, noisy_or_prob=0.0):
    """Singly-connected network: a random spanning tree with random link directions."""
    cards = rng.integers(2, max_card + 1, n)
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v) if rng.random() < 0.5 else (v, u))
    return network_from_edges(rng, n, edges, cards, zero_prob=zero_prob, noisy_or_prob=noisy_or_prob)


def random_loopy(rng, n, extra, *, max_card=3, zero_prob=0.0):
    """Tree plus ``extra`` links, all oriented along a random node ranking."""
    cards = rng.integers(2, max_card + 1, n)
    rank = rng.permutation(n)
    extra = min(extra, n * (n - 1) // 2 - (n - 1))
    links = set()
    for v in range(1, n):
        links.add(frozenset((int(rng.integers(0, v)), v)))
    while len(links) < n - 1 + extra:
        a, b = (int(x) for x in rng.choice(n, 2, replace=False))
        links.add(frozenset((a, b)))
    edges = []
    for link in links:
        a, b = sorted(link, key=lambda x: rank[x])
        edges.append((a, b))
    return network_from_edges(rng, n, sorted(edges), cards, zero_prob=zero_prob)


def random_evidence(rng, net, max_observed=3, virtual_prob=0.0):
    """Observations on up to ``max_observed`` nodes with nonzero probability."""
    while True:
        k = int(rng.integers(0, min(max_observed, len(net)) + 1))
        nodes = rng.choice(len(net), k, replace=False)
        obs = {int(v): int(rng.integers(0, net.card(int(v)))) for v in nodes}
        virt = {}
        for v in range(len(net)):
            if v not in obs and rng.random() < virtual_prob:
                virt[v] = rng.uniform(0.1, 1.0, net.card(v))
        ev = Evidence(obs, virt)
        if np.isfinite(oracle.log_evidence(net, ev)):
            return ev


def loopy_case(rng, max_nodes=12, max_cutset=3):
    while True:
        n = int(rng.integers(5, max_nodes + 1))
        net = random_loopy(rng, n, int(rng.integers(1, 4)))
        ev = random_evidence(rng, net)
        cut = find_cutset(net, ev)
        if 0 < len(cut) <= max_cutset:
            return net, ev, cut


def split_at_link(net, u, x):
    """Nodes on the parent side and on the child side of the link u -> x."""
    g = net.undirected_graph()
    g.remove_edge(u, x)
    child_side = nx.node_connected_component(g, x)
    return set(range(len(net))) - child_side, child_side


def restrict(ev, nodes):
    return Evidence(
        {v: s for v, s in ev.observations.items() if v in nodes},
        {v: w for v, w in ev.virtual_findings.items() if v in nodes},
    )
