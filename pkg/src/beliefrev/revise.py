"""Max-product belief revision and extraction of the most likely interpretation.

Per-node functions use the conventions of :mod:`beliefrev.update` but
maximize instead of summing; results are normalized to max 1 (log max 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import noisyor
from .model import (
    ContradictionError,
    Evidence,
    Network,
    WorkingView,
    absorb_evidence,
    log_joint_probability,
)
from .propagation import (
    Kernel,
    MessageStore,
    Propagation,
    Trace,
    broadcast_family,
    run_to_equilibrium,
)


def _normalize(v: np.ndarray) -> tuple[np.ndarray, float]:
    c = float(np.max(v))
    if c == -np.inf:
        raise ContradictionError("contradictory evidence: every state has zero weight")
    return v - c, c


def _log(x: float) -> float:
    return float(np.log(x)) if x > 0 else -np.inf


class MaxProduct(Kernel):
    name = "revise"
    pi_kind = "pi*"
    lambda_kind = "lambda*"

    def reduce(self, a, axis):
        return np.max(a, axis=axis)

    def normalize(self, v):
        return _normalize(v)

    @staticmethod
    def wide_gate(view: WorkingView, v: int):
        """Noisy-OR data when the gate is too wide to tabulate, else None."""
        gate = view.gate(v)
        if gate is None or len(gate[0]) <= noisyor.ENUMERATION_LIMIT:
            return None
        return gate

    def causal(self, view, v, pis):
        gate = self.wide_gate(view, v)
        if gate is None:
            return super().causal(view, v, pis)
        q, base = gate
        ratio, scale = _supports(pis)
        _, f_neg = noisyor.optimal_false_set(ratio, q)
        _, f_pos = noisyor.greedy_true_set(ratio, q, base)
        return np.array([_log(base * f_neg), _log(f_pos)]) + scale.sum()

    def lambda_to_parent(self, view, v, i, pis, lam_total):
        gate = self.wide_gate(view, v)
        if gate is None:
            return super().lambda_to_parent(view, v, i, pis, lam_total)
        q, base = gate
        ratio, scale = _supports(pis)
        others = [k for k in range(len(q)) if k != i]
        out = np.empty(2)
        for state, extra in ((0, 1.0), (1, q[i])):
            b = base * extra
            _, f_neg = noisyor.optimal_false_set(ratio[others], q[others])
            _, f_pos = noisyor.greedy_true_set(ratio[others], q[others], b)
            out[state] = max(lam_total[0] + _log(b * f_neg), lam_total[1] + _log(f_pos))
        return out + scale[others].sum()

    def family_argmax(self, view, v, pis, lam_total, fixed: Mapping[int, int]) -> tuple[int, ...]:
        """Best joint state of (v, open parents of v) with ``fixed`` axes held.

        Axis 0 is ``v`` itself; axis k+1 is its k-th open parent.  Ties go
        to the lowest state indices, earlier axes first.
        """
        gate = self.wide_gate(view, v)
        if gate is None:
            f = broadcast_family(view.log_table(v), pis, lam_total)
            idx = tuple(fixed.get(a, slice(None)) for a in range(f.ndim))
            sub = f[idx]
            free = [a for a in range(f.ndim) if a not in fixed]
            if not free:
                return tuple(fixed[a] for a in range(f.ndim))
            loc = np.unravel_index(int(np.argmax(sub)), sub.shape)
            out = dict(fixed)
            out.update(zip(free, (int(s) for s in loc)))
            return tuple(out[a] for a in range(f.ndim))
        q, base = gate
        ratio, _ = _supports(pis)
        n = len(q)
        free = [k for k in range(n) if k + 1 not in fixed]
        b = base
        for k in range(n):
            if fixed.get(k + 1) == 1:
                b *= q[k]
        best = None
        for x in ([fixed[0]] if 0 in fixed else [0, 1]):
            if x == 0:
                chosen, f = noisyor.optimal_false_set(ratio[free], q[free])
                val = lam_total[0] + _log(b * f)
            else:
                chosen, f = noisyor.greedy_true_set(ratio[free], q[free], b)
                val = lam_total[1] + _log(f)
            if best is None or val > best[0]:
                best = (val, x, chosen)
        _, x, chosen = best
        states = [x] + [0] * n
        for k in range(n):
            if k + 1 in fixed:
                states[k + 1] = fixed[k + 1]
        for pos, k in enumerate(free):
            states[k + 1] = 1 if pos in chosen else 0
        return tuple(states)


def _supports(pis: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Per binary parent: normalized TRUE weight and log total weight."""
    a = np.array(pis, dtype=float).reshape(-1, 2)
    scale = np.logaddexp(a[:, 0], a[:, 1])
    ratio = np.exp(a[:, 1] - scale)
    return ratio, scale


MAX_PRODUCT = MaxProduct()


def f_product(log_table, pi_msgs, lambda_msgs) -> np.ndarray:
    """log F(x, u_1..u_n) = sum_j log lambda*_j(x) + log P(x|u) + sum_i log pi*_i(u_i)."""
    lam = np.sum(lambda_msgs, axis=0) if len(lambda_msgs) else None
    return broadcast_family(np.asarray(log_table), pi_msgs, lam)


def lambda_star_message(log_table, pi_msgs, lambda_msgs, target: int) -> np.ndarray:
    """lambda*_x(u_target): max of F over x and the other parents, with the
    target's own support left out."""
    lam = np.sum(lambda_msgs, axis=0) if len(lambda_msgs) else None
    f = broadcast_family(np.asarray(log_table), pi_msgs, lam, skip=target)
    axes = tuple(a for a in range(f.ndim) if a != target + 1)
    return _normalize(np.max(f, axis=axes))[0]


def bel_star(log_table, pi_msgs, lambda_msgs) -> tuple[np.ndarray, tuple[tuple[int, ...], ...]]:
    """Max-marginal BEL*(x) and, for every x, the maximizing parent configuration."""
    f = f_product(log_table, pi_msgs, lambda_msgs)
    if f.ndim == 1:
        return _normalize(f)[0], tuple(() for _ in range(f.shape[0]))
    flat = f.reshape(f.shape[0], -1)
    best = np.argmax(flat, axis=1)
    back = tuple(
        tuple(int(s) for s in np.unravel_index(int(b), f.shape[1:])) for b in best
    )
    return _normalize(flat.max(axis=1))[0], back


def pi_star_message(log_table, pi_msgs, lambda_msgs, exclude: int | None = None) -> np.ndarray:
    """pi*_y(x) = BEL*(x) with child y's message left out of the product."""
    others = [m for j, m in enumerate(lambda_msgs) if j != exclude]
    lam = np.sum(others, axis=0) if others else 0.0
    f = broadcast_family(np.asarray(log_table), pi_msgs)
    causal = np.max(f, axis=tuple(range(1, f.ndim))) if f.ndim > 1 else f
    return _normalize(lam + causal)[0]


@dataclass
class BoundaryConditions:
    """Messages fixed by the network periphery and the evidence (log space)."""

    local_lambda: dict[int, np.ndarray] = field(default_factory=dict)
    root_pi: dict[int, np.ndarray] = field(default_factory=dict)
    evidence_pi: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    anticipatory: tuple[int, ...] = ()


def boundary_init(net: Network, ev: Evidence | None = None) -> BoundaryConditions:
    view = absorb_evidence(net, ev)
    out = BoundaryConditions()
    for v in range(len(net)):
        out.local_lambda[v] = view.log_local[v]
        if not net.parents[v]:
            out.root_pi[v] = _normalize(view.log_table(v))[0]
        if v in view.clamped:
            for c in net.children[v]:
                out.evidence_pi[(v, c)] = view.log_local[v]
    out.anticipatory = tuple(
        v for v in range(len(net))
        if not net.children[v] and v not in view.clamped and v not in view.evidence.virtual_findings
    )
    return out


@dataclass
class Interpretation:
    """A complete assignment with its joint log-probability log P(w, e)."""

    assignment: tuple[int, ...]
    log_joint: float
    log_posterior: float | None = None
    backpointers: dict[int, tuple[tuple[int, ...], ...]] = field(default_factory=dict)

    @property
    def joint(self) -> float:
        return float(np.exp(self.log_joint))

    def with_normalizer(self, log_evidence: float) -> Interpretation:
        return Interpretation(
            self.assignment, self.log_joint, self.log_joint - log_evidence, self.backpointers
        )

    def named(self, net: Network) -> dict[str, str]:
        return {
            v.name: v.state_labels[s] for v, s in zip(net.variables, self.assignment)
        }


def extract_mpe(prop: Propagation) -> Interpretation:
    """Globally consistent argmax: pivot first, then outward in distribute order."""
    view, store = prop.view, prop.store
    kernel = prop.kernel
    if not isinstance(kernel, MaxProduct):
        raise ValueError("extract_mpe needs a max-product equilibrium")
    n = len(view)
    assign: dict[int, int] = {}
    back: dict[int, tuple[tuple[int, ...], ...]] = {}

    def family_inputs(v):
        pis = [store.pi[(u, v)] for u in view.parents[v]]
        lam_total = view.log_local[v] + sum(
            (store.lam[(c, v)] for c in view.children[v]), np.zeros(view.net.card(v))
        )
        return pis, lam_total

    def settle(v):
        pis, lam_total = family_inputs(v)
        members = (v,) + view.parents[v]
        fixed = {a: assign[m] for a, m in enumerate(members) if m in assign}
        states = kernel.family_argmax(view, v, pis, lam_total, fixed)
        for m, s in zip(members, states):
            assign.setdefault(m, s)
        if kernel.wide_gate(view, v) is None:
            _, back[v] = bel_star(view.log_table(v), pis, [lam_total])

    for pivot in prop.schedule.pivots:
        settle(pivot)
    for _, w in prop.schedule.distribute:
        settle(w)
    missing = [v for v in range(n) if v not in assign]
    if missing:
        raise RuntimeError(f"extraction left nodes {missing} unassigned")
    assignment = tuple(assign[v] for v in range(n))
    score = log_joint_probability(view.net, view.evidence, assignment)
    return Interpretation(assignment, score, None, back)


@dataclass
class RevisionResult:
    interpretation: Interpretation
    store: MessageStore
    trace: Trace
    propagation: Propagation

    @property
    def message_log_max(self) -> float:
        """log of the unnormalized BEL* maximum, summed over components."""
        return float(sum(self.store.belief_scale[p] for p in self.propagation.schedule.pivots))

    def bel_star(self, var: int) -> np.ndarray:
        return np.exp(self.store.belief[var])

    def bel_star_ratio(self, var: int) -> float:
        b = self.store.belief[var]
        return float(np.exp(b[1] - b[0])) if b[0] > -np.inf else float("inf")


def revise(
    net: Network,
    ev: Evidence | None = None,
    *,
    order: str = "two-phase",
    pivot: int | None = None,
    annotate: bool = False,
    **kw,
) -> RevisionResult:
    """Most likely interpretation of the evidence on a singly-connected view."""
    view = absorb_evidence(net, ev)
    prop = run_to_equilibrium(
        view, MAX_PRODUCT, order=order, pivot=pivot, annotate=annotate, **kw
    )
    return RevisionResult(extract_mpe(prop), prop.store, prop.trace, prop)
