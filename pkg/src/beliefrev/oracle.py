"""Brute-force ground truth by full joint enumeration.

Deliberately naive: every answer comes from the complete joint table,
with no caching, elimination ordering or message passing.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterator

import numpy as np

from .model import (
    ContradictionError,
    Evidence,
    Network,
    StateSpaceError,
    log_joint_probability,
)
from .revise import Interpretation

MAX_STATES = 2**24


def state_count(net: Network) -> int:
    return math.prod(net.cardinalities)


def _check_size(net: Network) -> None:
    size = state_count(net)
    if size > MAX_STATES:
        raise StateSpaceError(f"joint state space has {size} states (limit {MAX_STATES})")


def enumerate_joint(net: Network, ev: Evidence | None = None) -> Iterator[tuple[tuple[int, ...], float]]:
    """Every assignment consistent with the observations, with its weight
    P(w) times the virtual-finding weights, in lexicographic order."""
    _check_size(net)
    ev = ev or Evidence()
    ranges = [
        [ev.observations[v]] if v in ev.observations else range(net.card(v))
        for v in range(len(net))
    ]
    for assignment in itertools.product(*ranges):
        p = 1.0
        for v in range(len(net)):
            idx = (assignment[v],) + tuple(assignment[u] for u in net.parents[v])
            p *= float(net.table(v)[idx])
        for v, w in ev.virtual_findings.items():
            p *= float(w[assignment[v]])
        yield assignment, p


def joint_log_table(net: Network, ev: Evidence | None = None) -> np.ndarray:
    """Dense log P(w, e) over all variables (axis i = variable i)."""
    _check_size(net)
    ev = ev or Evidence()
    n = len(net)
    total = np.zeros(net.cardinalities)
    for v in range(n):
        axes = [v] + list(net.parents[v])
        t = net.log_table(v)
        # reorder the family table into ascending variable order, then broadcast
        order = np.argsort(axes)
        t = np.transpose(t, order)
        shape = [1] * n
        for a in axes:
            shape[a] = net.card(a)
        total = total + t.reshape(shape)
    with np.errstate(divide="ignore"):
        for v, state in ev.observations.items():
            mask = np.full(net.card(v), -np.inf)
            mask[state] = 0.0
            shape = [1] * n
            shape[v] = -1
            total = total + mask.reshape(shape)
        for v, w in ev.virtual_findings.items():
            shape = [1] * n
            shape[v] = -1
            total = total + np.log(w).reshape(shape)
    return total


def _logsumexp(a: np.ndarray, axis=None) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else out.reshape(())


def log_evidence(net: Network, ev: Evidence | None = None) -> float:
    return float(_logsumexp(joint_log_table(net, ev)))


def exact_bel(net: Network, ev: Evidence | None, var: int) -> np.ndarray:
    """P(var | e) by marginalizing the joint."""
    joint = joint_log_table(net, ev)
    others = tuple(a for a in range(len(net)) if a != var)
    marg = _logsumexp(joint, axis=others) if others else joint
    z = _logsumexp(marg)
    if not np.isfinite(z):
        raise ContradictionError("zero-probability evidence")
    return np.exp(marg - z)


def exact_beliefs(net: Network, ev: Evidence | None = None) -> list[np.ndarray]:
    """P(x | e) for every variable from a single joint table."""
    joint = joint_log_table(net, ev)
    z = _logsumexp(joint)
    if not np.isfinite(z):
        raise ContradictionError("zero-probability evidence")
    out = []
    for var in range(len(net)):
        others = tuple(a for a in range(len(net)) if a != var)
        marg = _logsumexp(joint, axis=others) if others else joint
        out.append(np.exp(marg - z))
    return out


def exact_max_marginal(net: Network, ev: Evidence | None, var: int) -> np.ndarray:
    """log max_{w : X = x} P(w, e) for every state x of ``var``."""
    joint = joint_log_table(net, ev)
    others = tuple(a for a in range(len(net)) if a != var)
    return np.max(joint, axis=others) if others else joint


def exact_mpe(net: Network, ev: Evidence | None = None) -> Interpretation:
    """Most probable complete assignment; ties go to the lexicographically
    smallest one."""
    joint = joint_log_table(net, ev)
    if not np.any(joint > -np.inf):
        raise ContradictionError("zero-probability evidence")
    flat = int(np.argmax(joint))
    assignment = tuple(int(s) for s in np.unravel_index(flat, joint.shape))
    score = log_joint_probability(net, ev, assignment)
    return Interpretation(assignment, score, score - float(_logsumexp(joint)))


def mpe_margin(net: Network, ev: Evidence | None = None) -> float:
    """Log gap between the best and second-best complete assignments."""
    flat = np.sort(joint_log_table(net, ev).reshape(-1))
    if flat.size < 2 or flat[-2] == -np.inf:
        return np.inf
    return float(flat[-1] - flat[-2])
