"""Sum-product belief updating.

The per-node functions take log-space inputs: ``log_table`` with axes
(x, parent_1, ..., parent_n), ``pi_msgs`` one vector per parent and
``lambda_msgs`` one vector per child (a node's own evidence weight counts
as one more child).  Results are log vectors normalized to sum 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .model import ContradictionError, Evidence, Network, absorb_evidence
from .propagation import (
    Kernel,
    MessageStore,
    Propagation,
    Trace,
    broadcast_family,
    run_to_equilibrium,
)


def _normalize(v: np.ndarray) -> tuple[np.ndarray, float]:
    c = float(logsumexp(v))
    if c == -np.inf:
        raise ContradictionError("contradictory evidence: normalizer is zero")
    return v - c, c


class SumProduct(Kernel):
    name = "update"
    pi_kind = "pi"
    lambda_kind = "lambda"

    def reduce(self, a, axis):
        return logsumexp(a, axis=axis)

    def normalize(self, v):
        return _normalize(v)


SUM_PRODUCT = SumProduct()


def node_belief(log_table, pi_msgs, lambda_msgs) -> np.ndarray:
    """BEL(x) = alpha prod_j lambda_j(x) sum_u P(x|u) prod_i pi_i(u_i)."""
    lam = np.sum(lambda_msgs, axis=0) if len(lambda_msgs) else 0.0
    f = broadcast_family(np.asarray(log_table), pi_msgs)
    causal = logsumexp(f, axis=tuple(range(1, f.ndim))) if f.ndim > 1 else f
    return _normalize(lam + causal)[0]


def lambda_message(log_table, pi_msgs, lambda_msgs, target: int) -> np.ndarray:
    """Diagnostic message lambda_x(u_target), summing over x and the other parents."""
    lam = np.sum(lambda_msgs, axis=0) if len(lambda_msgs) else None
    f = broadcast_family(np.asarray(log_table), pi_msgs, lam, skip=target)
    axes = tuple(a for a in range(f.ndim) if a != target + 1)
    return _normalize(logsumexp(f, axis=axes))[0]


def pi_message(log_table, pi_msgs, lambda_msgs, exclude: int | None = None) -> np.ndarray:
    """Causal message to the child whose diagnostic message is ``lambda_msgs[exclude]``."""
    others = [m for j, m in enumerate(lambda_msgs) if j != exclude]
    lam = np.sum(others, axis=0) if others else 0.0
    f = broadcast_family(np.asarray(log_table), pi_msgs)
    causal = logsumexp(f, axis=tuple(range(1, f.ndim))) if f.ndim > 1 else f
    return _normalize(lam + causal)[0]


@dataclass
class UpdateResult:
    beliefs: dict[int, np.ndarray]
    log_evidence: float
    store: MessageStore
    trace: Trace
    propagation: Propagation

    def belief(self, var: int) -> np.ndarray:
        return self.beliefs[var]


def update_beliefs(
    net: Network, ev: Evidence | None = None, *, order: str = "two-phase", **kw
) -> UpdateResult:
    """Posterior marginals P(x|e) at every node of a singly-connected view."""
    view = absorb_evidence(net, ev)
    prop = run_to_equilibrium(view, SUM_PRODUCT, order=order, **kw)
    store = prop.store
    beliefs = {v: np.exp(store.belief[v]) for v in range(len(net))}
    log_e = sum(store.belief_scale[p] for p in prop.schedule.pivots)
    return UpdateResult(beliefs, float(log_e), store, prop.trace, prop)
