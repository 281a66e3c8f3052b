"""Message storage, scheduling and the equilibrium driver.

All messages are kept in log space (``-inf`` for exact zeros).  A kernel
decides how parent configurations are combined (sum for updating, max for
revision) and how messages are normalized.  Each stored message also keeps
the log of the constant removed by normalization, accumulated over the
sub-network the message summarizes, so unnormalized quantities can be
recovered at the end of a run.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .model import ContradictionError, TopologyError, WorkingView

Edge = tuple[int, int]

ASYNC_TOL = 1e-12


def exclusive_sums(vectors: Sequence[np.ndarray]) -> list[np.ndarray]:
    """For each position, the sum of all other vectors (prefix/suffix, no
    subtraction, so ``-inf`` entries are handled exactly)."""
    n = len(vectors)
    if n == 0:
        return []
    zero = np.zeros_like(vectors[0])
    prefix = [zero]
    for v in vectors[:-1]:
        prefix.append(prefix[-1] + v)
    out = [None] * n
    suffix = zero
    for i in range(n - 1, -1, -1):
        out[i] = prefix[i] + suffix
        suffix = suffix + vectors[i]
    return out


def broadcast_family(log_table: np.ndarray, pi_msgs, lam_total=None, skip: int | None = None):
    """log F over (x, parents...): table plus child support plus parent supports."""
    f = log_table
    nd = log_table.ndim
    if lam_total is not None:
        f = f + np.reshape(lam_total, (-1,) + (1,) * (nd - 1))
    for i, pi in enumerate(pi_msgs):
        if i == skip:
            continue
        shape = [1] * nd
        shape[i + 1] = -1
        f = f + np.reshape(pi, shape)
    return f


class Kernel:
    """Combination rule shared by the updating and revision engines."""

    name = "kernel"
    pi_kind = "pi"
    lambda_kind = "lambda"

    def reduce(self, a: np.ndarray, axis) -> np.ndarray:
        raise NotImplementedError

    def normalize(self, v: np.ndarray) -> tuple[np.ndarray, float]:
        raise NotImplementedError

    def causal(self, view: WorkingView, v: int, pis: Sequence[np.ndarray]) -> np.ndarray:
        """Parent-combined term over x: combine_u P(x|u) prod_i pi_x(u_i)."""
        f = broadcast_family(view.log_table(v), pis)
        if f.ndim == 1:
            return f
        return self.reduce(f, tuple(range(1, f.ndim)))

    def lambda_to_parent(
        self, view: WorkingView, v: int, i: int, pis: Sequence[np.ndarray], lam_total: np.ndarray
    ) -> np.ndarray:
        f = broadcast_family(view.log_table(v), pis, lam_total, skip=i)
        axes = tuple(a for a in range(f.ndim) if a != i + 1)
        return self.reduce(f, axes)


def _check(vec: np.ndarray, v: int, what: str) -> None:
    if not np.any(vec > -np.inf):
        raise ContradictionError(f"contradictory evidence: {what} at node {v} is all zero", v)


@dataclass
class MessageStore:
    """Per-link messages plus per-node beliefs, all in log space."""

    kernel: str
    pi: dict[Edge, np.ndarray] = field(default_factory=dict)
    lam: dict[Edge, np.ndarray] = field(default_factory=dict)
    scale: dict[Edge, float] = field(default_factory=dict)
    belief: dict[int, np.ndarray] = field(default_factory=dict)
    belief_scale: dict[int, float] = field(default_factory=dict)

    @classmethod
    def initial(cls, view: WorkingView, kernel: Kernel) -> MessageStore:
        store = cls(kernel.name)
        for x in range(len(view)):
            for u in view.parents[x]:
                store.pi[(u, x)] = np.zeros(view.net.card(u))
                store.lam[(x, u)] = np.zeros(view.net.card(u))
                store.scale[(u, x)] = 0.0
                store.scale[(x, u)] = 0.0
        return store

    def message(self, src: int, dst: int) -> np.ndarray:
        if (src, dst) in self.pi:
            return self.pi[(src, dst)]
        return self.lam[(src, dst)]

    def set_message(self, src: int, dst: int, vec: np.ndarray, scale: float) -> None:
        if (src, dst) in self.pi:
            self.pi[(src, dst)] = vec
        else:
            self.lam[(src, dst)] = vec
        self.scale[(src, dst)] = scale

    def edges(self) -> list[Edge]:
        return sorted(self.scale)

    def values(self, src: int, dst: int) -> np.ndarray:
        return np.exp(self.message(src, dst))

    def copy(self) -> MessageStore:
        return MessageStore(
            self.kernel,
            dict(self.pi),
            dict(self.lam),
            dict(self.scale),
            dict(self.belief),
            dict(self.belief_scale),
        )


@dataclass(frozen=True)
class TraceEvent:
    step: int
    node: int
    src: int
    dst: int
    kind: str
    before: tuple[float, ...] | None
    after: tuple[float, ...]
    reinforces: bool | None = None

    def to_record(self, view: WorkingView | None = None) -> dict:
        rec = {
            "step": self.step,
            "node": self.node,
            "from": self.src,
            "to": self.dst,
            "kind": self.kind,
            "before": list(self.before) if self.before is not None else None,
            "after": list(self.after),
        }
        if view is not None:
            names = view.net.variables
            rec["node"] = names[self.node].name
            rec["from"] = names[self.src].name
            rec["to"] = names[self.dst].name
            r = message_ratio(self.kind, self.after)
            if r is not None:
                rec["ratio"] = r
        if self.reinforces is not None:
            rec["reinforces"] = self.reinforces
        return rec


@dataclass
class Trace:
    events: list[TraceEvent] = field(default_factory=list)
    activations: list[int] = field(default_factory=list)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def replay(self) -> dict[Edge, np.ndarray]:
        """Final message values (standard space) obtained by replaying events."""
        out: dict[Edge, np.ndarray] = {}
        for ev in self.events:
            out[(ev.src, ev.dst)] = np.asarray(ev.after)
        return out

    def messages(self, src: int, dst: int) -> list[TraceEvent]:
        return [e for e in self.events if e.src == src and e.dst == dst]

    def to_text(self, view: WorkingView) -> str:
        names = view.net.variables
        lines = []
        for ev in self.events:
            msg = ",".join(f"{x:.6g}" for x in ev.after)
            line = (
                f"step={ev.step} edge={names[ev.src].name}->{names[ev.dst].name} "
                f"kind={ev.kind} msg=[{msg}]"
            )
            r = message_ratio(ev.kind, ev.after)
            if r is not None:
                line += f" ratio={format_ratio(r)}"
            if ev.reinforces:
                line += " reinforces=1"
            lines.append(line)
        return "\n".join(lines) + ("\n" if lines else "")

    def to_json(self, view: WorkingView) -> str:
        return json.dumps([ev.to_record(view) for ev in self.events], indent=1)


def message_ratio(kind: str, values: Sequence[float]) -> float | None:
    """Display ratio for binary messages.

    Diagnostic messages give lambda(+)/lambda(-), causal messages the
    normalized weight pi(+)/(pi(+) + pi(-)).  Non-binary messages have none.
    """
    if len(values) != 2:
        return None
    neg, pos = float(values[0]), float(values[1])
    if kind.startswith("lambda"):
        return pos / neg if neg > 0 else float("inf")
    total = pos + neg
    return pos / total if total > 0 else float("inf")


def format_ratio(r: float) -> str:
    return "inf" if np.isinf(r) else f"{r:.4g}"


@dataclass(frozen=True)
class Schedule:
    pivots: tuple[int, ...]
    collect: tuple[Edge, ...]
    distribute: tuple[Edge, ...]
    activations: tuple[tuple[str, int], ...]
    tree_parent: dict[int, int | None]


def _bfs(view: WorkingView, start: int) -> dict[int, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in sorted(view.neighbors(v)):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def default_pivot(view: WorkingView, component: Sequence[int]) -> int:
    """Lowest id among the nodes of maximal eccentricity in the component."""
    ecc = {v: max(_bfs(view, v).values()) for v in component}
    top = max(ecc.values())
    return min(v for v in component if ecc[v] == top)


def schedule(view: WorkingView, pivot: int | None = None) -> Schedule:
    """Two-phase order: collect toward each component's pivot, then distribute."""
    pivots, collect, distribute, acts = [], [], [], []
    tree_parent: dict[int, int | None] = {}
    collect_acts, distribute_acts = [], []
    for comp in view.components():
        root = pivot if pivot is not None and pivot in comp else default_pivot(view, comp)
        pivots.append(root)
        depth = {root: 0}
        tree_parent[root] = None
        order = [root]
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in sorted(view.neighbors(v)):
                if w not in depth:
                    depth[w] = depth[v] + 1
                    tree_parent[w] = v
                    order.append(w)
                    queue.append(w)
        for v in sorted((v for v in order if v != root), key=lambda v: (-depth[v], v)):
            collect.append((v, tree_parent[v]))
            collect_acts.append(("collect", v))
        for v in order:
            distribute_acts.append(("distribute", v))
            for w in sorted(view.neighbors(v)):
                if tree_parent.get(w) == v:
                    distribute.append((v, w))
    acts = collect_acts + distribute_acts
    return Schedule(tuple(pivots), tuple(collect), tuple(distribute), tuple(acts), tree_parent)


@dataclass
class Propagation:
    view: WorkingView
    kernel: Kernel
    store: MessageStore
    trace: Trace
    schedule: Schedule


class _Runner:
    def __init__(self, view: WorkingView, kernel: Kernel, annotate: bool = False):
        self.view = view
        self.kernel = kernel
        self.store = MessageStore.initial(view, kernel)
        self.trace = Trace()
        self.annotate = annotate
        self.step = 0

    def inputs(self, v: int):
        view, store = self.view, self.store
        pis = [store.pi[(u, v)] for u in view.parents[v]]
        lams = [view.log_local[v]] + [store.lam[(c, v)] for c in view.children[v]]
        return pis, lams

    def belief_of(self, v: int) -> np.ndarray:
        pis, lams = self.inputs(v)
        return sum(lams) + self.kernel.causal(self.view, v, pis)

    def activate(self, v: int, targets: Sequence[int], with_belief: bool) -> float:
        """Recompute belief and outgoing messages of ``v``; return the largest change."""
        view, store, kernel = self.view, self.store, self.kernel
        self.trace.activations.append(v)
        pis, lams = self.inputs(v)
        scale_in = {u: store.scale[(u, v)] for u in view.parents[v]}
        scale_in.update({c: store.scale[(c, v)] for c in view.children[v]})
        total_scale = sum(scale_in.values())
        lam_ex = exclusive_sums(lams)
        lam_total = lam_ex[0] + lams[0] if lams else None
        causal = kernel.causal(view, v, pis)
        change = 0.0
        if with_belief:
            raw = lam_total + causal
            _check(raw, v, "belief")
            bel, c = kernel.normalize(raw)
            old = store.belief.get(v)
            old_scale = store.belief_scale.get(v)
            store.belief[v] = bel
            store.belief_scale[v] = c + total_scale
            if old is not None:
                change = max(change, _diff(old, bel), abs(old_scale - store.belief_scale[v]))
            else:
                change = np.inf
        for w in targets:
            if w in view.parents[v]:
                i = view.parents[v].index(w)
                raw = kernel.lambda_to_parent(view, v, i, pis, lam_total)
                kind = kernel.lambda_kind
            else:
                j = view.children[v].index(w)
                raw = lam_ex[j + 1] + causal
                kind = kernel.pi_kind
            _check(raw, v, f"message to node {w}")
            msg, c = kernel.normalize(raw)
            scale = c + total_scale - scale_in[w]
            old = store.message(v, w)
            old_scale = store.scale[(v, w)]
            reinforces = None
            if self.annotate:
                before_arg = int(np.argmax(self.belief_of(w)))
            store.set_message(v, w, msg, scale)
            if self.annotate:
                reinforces = before_arg == int(np.argmax(self.belief_of(w)))
            prev = self.trace_last(v, w)
            self.step += 1
            self.trace.events.append(
                TraceEvent(
                    self.step, v, v, w, kind,
                    prev, tuple(np.exp(msg).tolist()), reinforces,
                )
            )
            change = max(change, _diff(old, msg), abs(old_scale - scale))
        return change

    def trace_last(self, src: int, dst: int):
        for ev in reversed(self.trace.events):
            if ev.src == src and ev.dst == dst:
                return ev.after
        return None


def _diff(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.exp(a) - np.exp(b)))) if a.size else 0.0


def resolve_kernel(kernel) -> Kernel:
    if isinstance(kernel, Kernel):
        return kernel
    if kernel == "update":
        from .update import SUM_PRODUCT

        return SUM_PRODUCT
    if kernel == "revise":
        from .revise import MAX_PRODUCT

        return MAX_PRODUCT
    raise ValueError(f"unknown kernel {kernel!r}")


def run_to_equilibrium(
    view: WorkingView,
    kernel: Kernel | str,
    *,
    order: str = "two-phase",
    pivot: int | None = None,
    rng: np.random.Generator | None = None,
    annotate: bool = False,
    max_sweeps: int = 10_000,
) -> Propagation:
    """Propagate messages until every link holds its fixed-point value.

    ``order="two-phase"`` runs one collect and one distribute sweep per
    component.  ``order="async"`` activates every node in a random
    permutation each sweep, sending to all neighbors, until a sweep moves
    no message by more than 1e-12.
    """
    kern = resolve_kernel(kernel)
    topo = view.topology()
    if not topo.singly_connected:
        raise TopologyError(
            f"multiply-connected ({topo.cycles} independent cycles): "
            "condition on a cycle cutset first"
        )
    sched = schedule(view, pivot)
    runner = _Runner(view, kern, annotate)
    if order == "two-phase":
        for v in (v for phase, v in sched.activations if phase == "collect"):
            runner.activate(v, [sched.tree_parent[v]], with_belief=False)
        for v in (v for phase, v in sched.activations if phase == "distribute"):
            kids = [w for w in sorted(view.neighbors(v)) if sched.tree_parent.get(w) == v]
            runner.activate(v, kids, with_belief=True)
    elif order == "async":
        rng = rng if rng is not None else np.random.default_rng(0)
        n = len(view)
        for _ in range(max_sweeps):
            change = 0.0
            for v in rng.permutation(n):
                v = int(v)
                change = max(change, runner.activate(v, sorted(view.neighbors(v)), True))
            if change <= ASYNC_TOL:
                break
        else:
            raise RuntimeError(f"no equilibrium after {max_sweeps} sweeps")
    else:
        raise ValueError(f"unknown order {order!r}")
    return Propagation(view, kern, runner.store, runner.trace, sched)
