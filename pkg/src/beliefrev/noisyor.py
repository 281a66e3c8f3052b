"""Closed-form max-product computations for noisy-OR gates.

A gate with suppressors ``q`` has P(+x | parents in I TRUE) = 1 - prod_{i in I} q_i.
Parent supports enter as scalars ``pi_k`` in [0, 1], the normalized weight
of TRUE in the incoming causal message.  ``base_q`` is the product of the
suppressors of parents already fixed TRUE (e.g. clamped by evidence).

Subset optimizers return ``(I, factor)`` where ``factor`` is the part of F
that depends on the choice of I.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ENUMERATION_LIMIT = 10
EXHAUSTIVE_LIMIT = 20


@dataclass
class OrWorkspace:
    """State of the greedy TRUE-case search."""

    pi: np.ndarray
    q: np.ndarray
    base_q: float = 1.0
    chosen: set[int] = field(default_factory=set)
    merits: dict[int, float] = field(default_factory=dict)

    @property
    def q_product(self) -> float:
        return self.base_q * math.prod(self.q[i] for i in self.chosen)

    def factor(self) -> float:
        return true_factor(self.chosen, self.pi, self.q, self.base_q)


def or_probability(true_parents: Iterable[int], q: Sequence[float]) -> float:
    """P(+x) when exactly the given parents are TRUE."""
    return 1.0 - math.prod(q[i] for i in true_parents)


def _prior_product(chosen, pi) -> float:
    return math.prod(pi[i] if i in chosen else 1.0 - pi[i] for i in range(len(pi)))


def false_factor(chosen, pi, q, base_q: float = 1.0) -> float:
    return base_q * math.prod(q[i] for i in chosen) * _prior_product(chosen, pi)


def true_factor(chosen, pi, q, base_q: float = 1.0) -> float:
    return (1.0 - base_q * math.prod(q[i] for i in chosen)) * _prior_product(chosen, pi)


def optimal_false_set(pi: Sequence[float], q: Sequence[float]) -> tuple[frozenset[int], float]:
    """Exact maximizer of the -x branch.

    Each parent contributes independently: TRUE multiplies by ``q_k pi_k``,
    FALSE by ``1 - pi_k``.  Ties go to FALSE.
    """
    chosen = frozenset(k for k in range(len(pi)) if q[k] * pi[k] > 1.0 - pi[k])
    factor = math.prod(
        q[k] * pi[k] if k in chosen else 1.0 - pi[k] for k in range(len(pi))
    )
    return chosen, factor


def merit(q_product: float, pi_k: float, q_k: float) -> float:
    """Multiplicative change of the +x branch when parent k joins the TRUE set.

    ``q_product`` must be < 1 (the current TRUE set already enables the gate).
    """
    if q_product >= 1.0:
        raise ValueError("merit undefined for an ineffective TRUE set (Q_I = 1)")
    if pi_k >= 1.0:
        return math.inf
    return pi_k / (1.0 - pi_k) * (1.0 - q_k * q_product) / (1.0 - q_product)


def seed_merit(pi_k: float, q_k: float) -> float:
    """Merit of a lone parent when nothing enables the gate yet.

    This is the limit of :func:`merit` times (1 - Q_I) as Q_I -> 1, i.e.
    ``(1 - q_k) pi_k / (1 - pi_k)``.
    """
    if pi_k >= 1.0:
        return math.inf if q_k < 1.0 else 0.0
    return (1.0 - q_k) * pi_k / (1.0 - pi_k)


def greedy_true_set(
    pi: Sequence[float], q: Sequence[float], base_q: float = 1.0
) -> tuple[frozenset[int], float]:
    """Greedy maximizer of the +x branch."""
    ws = OrWorkspace(np.asarray(pi, float), np.asarray(q, float), base_q)
    n = len(ws.pi)
    ws.chosen = {i for i in range(n) if ws.pi[i] >= 0.5}
    if ws.q_product >= 1.0:
        outside = [i for i in range(n) if i not in ws.chosen]
        if outside:
            best = max(outside, key=lambda i: (seed_merit(ws.pi[i], ws.q[i]), -i))
            if seed_merit(ws.pi[best], ws.q[best]) > 0.0:
                ws.chosen.add(best)
    candidates = [i for i in range(n) if i not in ws.chosen]
    while candidates:
        qp = ws.q_product
        if qp >= 1.0:
            break
        ws.merits = {k: merit(qp, ws.pi[k], ws.q[k]) for k in candidates}
        improving = [k for k in candidates if ws.merits[k] > 1.0]
        if not improving:
            break
        best = max(improving, key=lambda k: (ws.merits[k], -k))
        ws.chosen.add(best)
        candidates = [k for k in improving if k != best]
    return frozenset(ws.chosen), ws.factor()


def exhaustive_true_set(
    pi: Sequence[float], q: Sequence[float], base_q: float = 1.0
) -> tuple[frozenset[int], float]:
    """Exact +x maximizer by enumerating all subsets (ties: fewest, then lowest)."""
    n = len(pi)
    if n > EXHAUSTIVE_LIMIT:
        raise ValueError(f"exhaustive search limited to {EXHAUSTIVE_LIMIT} parents, got {n}")
    best_set, best = frozenset(), true_factor((), pi, q, base_q)
    for r in range(1, n + 1):
        for subset in itertools.combinations(range(n), r):
            val = true_factor(subset, pi, q, base_q)
            if val > best:
                best_set, best = frozenset(subset), val
    return best_set, best


def best_true_set(pi, q, base_q: float = 1.0, exact: bool | None = None):
    if exact is None:
        exact = len(pi) <= ENUMERATION_LIMIT
    return (exhaustive_true_set if exact else greedy_true_set)(pi, q, base_q)


def or_branch_maxima(lam, pi, q, base_q: float = 1.0, exact: bool | None = None):
    """Maxima of F(-x, .) and F(+x, .) over the open parents.

    ``lam`` is the gate's own diagnostic weight (children and evidence)
    as a 2-vector in standard space.  Returns ``((set_false, f_false),
    (set_true, f_true))`` with the parent-support normalizers left out.
    """
    s_false, f_false = optimal_false_set(pi, q)
    s_true, f_true = best_true_set(pi, q, base_q, exact)
    return (s_false, lam[0] * base_q * f_false), (s_true, lam[1] * f_true)


def or_lambda_star(
    lam: Sequence[float],
    pi: Sequence[float],
    q: Sequence[float],
    target: int,
    base_q: float = 1.0,
    exact: bool | None = None,
) -> np.ndarray:
    """Max-product diagnostic message from a gate to parent ``target``.

    Returns the ``(FALSE, TRUE)`` vector scaled to max 1; the target's own
    support is excluded.
    """
    pi = np.asarray(pi, float)
    q = np.asarray(q, float)
    others = [k for k in range(len(pi)) if k != target]
    pi_o, q_o = pi[others], q[others]
    out = np.empty(2)
    for state, extra in ((0, 1.0), (1, q[target])):
        b = base_q * extra
        (_, f_neg), (_, f_pos) = or_branch_maxima(lam, pi_o, q_o, b, exact)
        out[state] = max(f_neg, f_pos)
    m = out.max()
    return out / m if m > 0 else out


def or_bel_star(lam, pi, q, base_q: float = 1.0, exact: bool | None = None) -> np.ndarray:
    """Max-marginal of the gate itself, scaled to max 1."""
    (_, f_neg), (_, f_pos) = or_branch_maxima(lam, pi, q, base_q, exact)
    out = np.array([f_neg, f_pos])
    m = out.max()
    return out / m if m > 0 else out
