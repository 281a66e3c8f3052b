"""Loop-cutset conditioning for multiply-connected networks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import networkx as nx
import numpy as np

from .model import (
    ContradictionError,
    Evidence,
    Network,
    NetworkError,
    classify_topology,
    effective_graph,
    log_joint_probability,
)
from .revise import Interpretation, RevisionResult, revise


def cycle_nodes(g: nx.Graph) -> set[int]:
    """Nodes lying on at least one undirected cycle."""
    out: set[int] = set()
    for comp in nx.biconnected_components(g):
        if len(comp) > 2:
            out |= comp
    return out


def find_cutset(net: Network, ev: Evidence | None = None) -> list[int]:
    """Greedy cycle cutset.

    Observed variables are already clamped.  Repeatedly clamp the node of
    highest degree (ties: lowest id) among cycle nodes whose clamping cuts
    at least one link on a cycle.  Not minimal in general.
    """
    ev = ev or Evidence()
    clamped = set(ev.observations)
    chosen: list[int] = []
    while True:
        g = effective_graph(net, clamped)
        on_cycle = cycle_nodes(g)
        if not on_cycle:
            break
        useful = [
            v for v in on_cycle
            if v not in clamped and any(c in on_cycle for c in net.children[v])
        ]
        # every undirected cycle of a DAG has a node with a child on the cycle
        v = min(useful, key=lambda v: (-g.degree(v), v))
        chosen.append(v)
        clamped.add(v)
    assert classify_topology(net, clamped).singly_connected
    return sorted(chosen)


@dataclass
class CutsetPlan:
    cutset: list[int]
    instantiations: list[tuple[int, ...]] = field(default_factory=list)
    interpretations: list[Interpretation | None] = field(default_factory=list)
    log_scores: list[float] = field(default_factory=list)
    runs: list[RevisionResult | None] = field(default_factory=list)
    winner: int = -1

    @property
    def best(self) -> Interpretation:
        return self.interpretations[self.winner]

    def scores(self) -> list[float]:
        return [math.exp(s) if s > -math.inf else 0.0 for s in self.log_scores]


def condition_and_revise(
    net: Network,
    ev: Evidence | None = None,
    cutset: Sequence[int] | None = None,
    *,
    annotate: bool = False,
) -> CutsetPlan:
    """Best interpretation over all instantiations of the cutset.

    Each instantiation is clamped and solved by max-product propagation;
    the complete candidates are then compared by their chain-rule joint
    probability.  Ties go to the lexicographically smaller instantiation.
    """
    ev = ev or Evidence()
    cut = sorted(find_cutset(net, ev) if cutset is None else cutset)
    clash = set(cut) & set(ev.observations)
    if clash:
        names = [net.variables[v].name for v in sorted(clash)]
        raise NetworkError(f"cutset variable(s) {names} already observed")
    topo = classify_topology(net, set(cut) | set(ev.observations))
    if not topo.singly_connected:
        raise NetworkError(
            f"not a cycle cutset: {topo.cycles} cycle(s) remain after clamping"
        )
    plan = CutsetPlan(cut)
    best = -math.inf
    for inst in itertools.product(*(range(net.card(v)) for v in cut)):
        # a clamped variable's virtual weight is constant per instantiation;
        # it is dropped while propagating and restored when scoring
        cond = Evidence(
            {**ev.observations, **dict(zip(cut, inst))},
            {k: w for k, w in ev.virtual_findings.items() if k not in cut},
        )
        try:
            run = revise(net, cond, annotate=annotate)
            score = log_joint_probability(net, ev, run.interpretation.assignment)
            interp = replace(run.interpretation, log_joint=score)
        except ContradictionError:
            run, interp, score = None, None, -math.inf
        plan.runs.append(run)
        plan.instantiations.append(tuple(inst))
        plan.interpretations.append(interp)
        plan.log_scores.append(score)
        if score > best:
            best, plan.winner = score, len(plan.log_scores) - 1
    if plan.winner < 0:
        raise ContradictionError("contradictory evidence: every cutset instantiation is impossible")
    return plan


def threshold_sweep(
    net: Network,
    ev: Evidence | None,
    var: int | str,
    lo: float,
    hi: float,
    resolution: float = 1e-4,
    *,
    cutset: Sequence[int] | None = None,
    grid: int = 64,
    descending: bool = False,
) -> list[float]:
    """Prior values of a binary root at which the winning interpretation changes.

    The interval is scanned on a uniform grid and every bracket whose ends
    disagree is bisected down to ``resolution``; switches narrower than
    the grid spacing are missed.  ``descending`` scans from ``hi`` to ``lo``.
    """
    v = net.index(var)
    if not lo < hi:
        raise ValueError("sweep range must satisfy lo < hi")
    if cutset is None:
        cutset = find_cutset(net, ev)

    def winner(p: float) -> tuple[int, ...]:
        return condition_and_revise(net.with_prior(v, p), ev, cutset).best.assignment

    points = np.linspace(lo, hi, grid + 1)
    if descending:
        points = points[::-1]
    found = []
    prev_p, prev_w = points[0], winner(points[0])
    for p in points[1:]:
        w = winner(p)
        if w != prev_w:
            a, b, wa = prev_p, p, prev_w
            while abs(b - a) > resolution:
                mid = 0.5 * (a + b)
                if winner(mid) == wa:
                    a = mid
                else:
                    b = mid
            found.append(float(0.5 * (a + b)))
        prev_p, prev_w = p, w
    return sorted(found)
