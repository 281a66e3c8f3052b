"""Networks, conditional distributions, evidence and topology.

Binary variables use state 0 for FALSE and state 1 for TRUE, so every
printed vector over a binary variable reads ``(P(-x), P(+x))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

NORMALIZATION_TOL = 1e-12
ROUNDING_TOL = 1e-14
BINARY_STATES = ("FALSE", "TRUE")


class NetworkError(ValueError):
    """Malformed network description or evidence."""


class ContradictionError(ArithmeticError):
    """Evidence has probability zero under the model."""

    def __init__(self, message: str, node: int | None = None):
        super().__init__(message)
        self.node = node


class StateSpaceError(ValueError):
    """A brute-force computation would exceed its size limit."""


class TopologyError(ValueError):
    """Exact propagation was asked to run over a loop."""


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    cardinality: int
    state_labels: tuple[str, ...]

    def state_index(self, token: str | int) -> int:
        """Resolve a state label (or a decimal index) to its index."""
        if isinstance(token, (int, np.integer)):
            idx = int(token)
        elif token in self.state_labels:
            return self.state_labels.index(token)
        elif str(token).lstrip("-").isdigit():
            idx = int(token)
        else:
            raise NetworkError(f"variable {self.name!r} has no state {token!r}")
        if not 0 <= idx < self.cardinality:
            raise NetworkError(
                f"state index {idx} out of range for {self.name!r} "
                f"(cardinality {self.cardinality})"
            )
        return idx


@dataclass(frozen=True, eq=False)
class TableCpd:
    """Full conditional table with axes ``(child, parent_1, ..., parent_n)``."""

    table: np.ndarray

    def __post_init__(self):
        arr = np.array(self.table, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "table", arr)

    def __eq__(self, other):
        return (
            isinstance(other, TableCpd)
            and self.table.shape == other.table.shape
            and np.array_equal(self.table, other.table)
        )

    __hash__ = None

    def to_table(self, parent_cards: Sequence[int]) -> TableCpd:
        return self


@dataclass(frozen=True)
class NoisyOrCpd:
    """Noisy-OR gate without a leak term.

    ``strengths`` are the link strengths ``c_i = 1 - q_i``, aligned with
    the parent order; ``suppressors`` are the ``q_i``.
    """

    strengths: tuple[float, ...]

    @property
    def suppressors(self) -> np.ndarray:
        return 1.0 - np.asarray(self.strengths, dtype=float)

    def to_table(self, parent_cards: Sequence[int] | None = None) -> TableCpd:
        n = len(self.strengths)
        q = self.suppressors
        table = np.empty((2,) + (2,) * n)
        for config in np.ndindex(*((2,) * n)):
            p_false = float(np.prod(q[np.asarray(config, dtype=bool)]))
            table[(0,) + config] = p_false
            table[(1,) + config] = 1.0 - p_false
        return TableCpd(table)


Cpd = TableCpd | NoisyOrCpd


@dataclass(frozen=True)
class Topology:
    singly_connected: bool
    cycles: int
    edges: int
    nodes: int
    components: int

    def __str__(self):
        if self.singly_connected:
            return "SinglyConnected"
        return f"MultiplyConnected(cycles={self.cycles})"


@dataclass(frozen=True, eq=False)
class Network:
    name: str
    variables: tuple[Variable, ...]
    parents: tuple[tuple[int, ...], ...]
    cpds: tuple[Cpd, ...]
    comments: tuple[str, ...] = ()

    def __len__(self):
        return len(self.variables)

    def __eq__(self, other):
        return (
            isinstance(other, Network)
            and self.name == other.name
            and self.variables == other.variables
            and self.parents == other.parents
            and self.cpds == other.cpds
        )

    __hash__ = None

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids: list[list[int]] = [[] for _ in self.variables]
        for child, pars in enumerate(self.parents):
            for p in pars:
                kids[p].append(child)
        return tuple(tuple(k) for k in kids)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {v.name: v.id for v in self.variables}

    def index(self, name: str | int) -> int:
        if isinstance(name, (int, np.integer)):
            if not 0 <= int(name) < len(self.variables):
                raise NetworkError(f"no variable with id {name}")
            return int(name)
        try:
            return self._index[name]
        except KeyError:
            raise NetworkError(f"unknown variable {name!r}") from None

    def card(self, var: int) -> int:
        return self.variables[var].cardinality

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, c) for c, pars in enumerate(self.parents) for p in pars]

    def table(self, var: int) -> np.ndarray:
        """Probability table of ``var`` with axes (child, parents...)."""
        return self._tables[var]

    @cached_property
    def _tables(self) -> tuple[np.ndarray, ...]:
        return tuple(
            cpd.to_table([self.card(p) for p in pars]).table
            for cpd, pars in zip(self.cpds, self.parents)
        )

    def log_table(self, var: int) -> np.ndarray:
        return self._log_tables[var]

    @cached_property
    def _log_tables(self) -> tuple[np.ndarray, ...]:
        with np.errstate(divide="ignore"):
            return tuple(np.log(t) for t in self._tables)

    def is_noisy_or(self, var: int) -> bool:
        return isinstance(self.cpds[var], NoisyOrCpd)

    def state_name(self, var: int, state: int) -> str:
        return self.variables[var].state_labels[state]

    def with_prior(self, var: str | int, p_true: float) -> Network:
        """Copy of the network with a binary root's P(TRUE) replaced."""
        v = self.index(var)
        if self.parents[v] or self.card(v) != 2:
            raise NetworkError(
                f"{self.variables[v].name!r} is not a binary root variable"
            )
        if not 0.0 <= p_true <= 1.0:
            raise NetworkError(f"prior {p_true} outside [0, 1]")
        cpds = list(self.cpds)
        cpds[v] = TableCpd(np.array([1.0 - p_true, p_true]))
        return Network(self.name, self.variables, self.parents, tuple(cpds), self.comments)

    def undirected_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(len(self.variables)))
        g.add_edges_from(self.edges())
        return g


def _default_labels(card: int) -> tuple[str, ...]:
    if card == 2:
        return BINARY_STATES
    return tuple(str(i) for i in range(card))


def build_network(description: Mapping[str, Any]) -> Network:
    """Validate a parsed network description and build a :class:`Network`.

    ``description`` holds ``name``, optional ``comments`` and a ``variables`` list.
    Each variable entry has ``name``, ``cardinality`` and optionally
    ``states`` and ``parents``, plus exactly one of ``cpt`` (flat list with
    the child state varying fastest and the last parent next), ``noisyor``
    (link strengths ``c_i``) or ``prior`` (P(TRUE) of a binary root).
    An optional ``line`` key is used to prefix error messages.
    """
    entries = list(description.get("variables", ()))
    variables: list[Variable] = []
    index: dict[str, int] = {}

    def where(entry: Mapping[str, Any]) -> str:
        line = entry.get("line")
        return f"line {line}: " if line is not None else ""

    for i, entry in enumerate(entries):
        name = entry["name"]
        if name in index:
            raise NetworkError(f"{where(entry)}duplicate variable name {name!r}")
        card = int(entry.get("cardinality", len(entry.get("states") or ()) or 2))
        if card < 2:
            raise NetworkError(f"{where(entry)}{name!r} needs cardinality >= 2")
        labels = tuple(entry.get("states") or _default_labels(card))
        if len(labels) != card:
            raise NetworkError(
                f"{where(entry)}{name!r} declares {card} states but names {len(labels)}"
            )
        if len(set(labels)) != card:
            raise NetworkError(f"{where(entry)}{name!r} has duplicate state labels")
        index[name] = i
        variables.append(Variable(i, name, card, labels))

    parents: list[tuple[int, ...]] = []
    for entry in entries:
        pars = []
        for pname in entry.get("parents") or ():
            if pname not in index:
                raise NetworkError(
                    f"{where(entry)}{entry['name']!r} has unknown parent {pname!r}"
                )
            pars.append(index[pname])
        if len(set(pars)) != len(pars):
            raise NetworkError(f"{where(entry)}{entry['name']!r} lists a parent twice")
        parents.append(tuple(pars))

    cpds: list[Cpd] = []
    for i, entry in enumerate(entries):
        cpds.append(_build_cpd(entry, variables, parents[i], where(entry)))

    g = nx.DiGraph()
    g.add_nodes_from(range(len(variables)))
    g.add_edges_from((p, c) for c, pars in enumerate(parents) for p in pars)
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        names = [variables[u].name for u, _ in cycle] + [variables[cycle[0][0]].name]
        raise NetworkError("cycle detected: " + " -> ".join(names))

    return Network(
        name=description.get("name", "net"),
        variables=tuple(variables),
        parents=tuple(parents),
        cpds=tuple(cpds),
        comments=tuple(description.get("comments", ())),
    )


def _build_cpd(entry, variables, pars, where) -> Cpd:
    name = entry["name"]
    card = next(v.cardinality for v in variables if v.name == name)
    kinds = [k for k in ("cpt", "noisyor", "prior") if entry.get(k) is not None]
    if len(kinds) != 1:
        raise NetworkError(
            f"{where}{name!r} needs exactly one distribution (cpt, noisyor or prior)"
        )
    kind = kinds[0]
    parent_cards = [variables[p].cardinality for p in pars]

    if kind == "prior":
        if pars or card != 2:
            raise NetworkError(f"{where}prior shorthand needs a binary root, got {name!r}")
        p = float(entry["prior"])
        if not 0.0 <= p <= 1.0:
            raise NetworkError(f"{where}prior of {name!r} outside [0, 1]")
        return TableCpd(np.array([1.0 - p, p]))

    if kind == "noisyor":
        strengths = tuple(float(c) for c in entry["noisyor"])
        if card != 2 or any(pc != 2 for pc in parent_cards):
            raise NetworkError(
                f"{where}noisy-OR on {name!r} requires binary child and parents"
            )
        if len(strengths) != len(pars):
            raise NetworkError(
                f"{where}noisy-OR on {name!r} has {len(strengths)} strengths "
                f"for {len(pars)} parents"
            )
        if any(not 0.0 <= c <= 1.0 for c in strengths):
            raise NetworkError(f"{where}noisy-OR strengths of {name!r} outside [0, 1]")
        return NoisyOrCpd(strengths)

    flat = np.asarray(entry["cpt"], dtype=float)
    expected = card * int(np.prod(parent_cards, dtype=int))
    if flat.size != expected:
        raise NetworkError(
            f"{where}cpt of {name!r} has {flat.size} entries, expected {expected}"
        )
    rows = flat.reshape(tuple(parent_cards) + (card,))
    if np.any(rows < 0) or np.any(rows > 1):
        raise NetworkError(f"{where}cpt of {name!r} has entries outside [0, 1]")
    sums = rows.sum(axis=-1, keepdims=True)
    if np.any(np.abs(sums - 1.0) > NORMALIZATION_TOL):
        raise NetworkError(f"{where}cpt rows of {name!r} do not sum to 1")
    # rows already exact to rounding are kept as written so that printing
    # and re-parsing is a fixed point
    rows = np.where(np.abs(sums - 1.0) > ROUNDING_TOL, rows / sums, rows)
    return TableCpd(np.moveaxis(rows, -1, 0))


def flat_cpt(cpd: TableCpd) -> np.ndarray:
    """Flatten a table into file order (child fastest, last parent next)."""
    return np.moveaxis(cpd.table, 0, -1).reshape(-1)


def classify_topology(net: Network, clamped: Iterable[int] = ()) -> Topology:
    """Count independent undirected cycles, optionally after clamping.

    Clamping a variable cuts the links to its children: an instantiated
    node separates its children from everything else, but it still couples
    its own parents.
    """
    g = effective_graph(net, clamped)
    e, n = g.number_of_edges(), g.number_of_nodes()
    c = nx.number_connected_components(g)
    cycles = e - n + c
    return Topology(cycles == 0, cycles, e, n, c)


def effective_graph(net: Network, clamped: Iterable[int] = ()) -> nx.Graph:
    cut = set(clamped)
    g = nx.Graph()
    g.add_nodes_from(range(len(net)))
    g.add_edges_from((p, c) for p, c in net.edges() if p not in cut)
    return g


@dataclass(frozen=True)
class Evidence:
    """Specific observations plus virtual findings (likelihood weights)."""

    observations: Mapping[int, int] = field(default_factory=dict)
    virtual_findings: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        obs = {int(k): int(v) for k, v in self.observations.items()}
        virt = {
            int(k): np.asarray(v, dtype=float) for k, v in self.virtual_findings.items()
        }
        both = set(obs) & set(virt)
        if both:
            raise NetworkError(f"variable(s) {sorted(both)} both observed and virtual")
        for var, w in virt.items():
            if w.ndim != 1 or np.any(w < 0) or not np.any(w > 0):
                raise NetworkError(
                    f"virtual finding on variable {var} needs nonnegative weights "
                    "with at least one positive entry"
                )
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "virtual_findings", virt)

    @classmethod
    def from_names(
        cls,
        net: Network,
        observations: Mapping[str, str | int] | None = None,
        virtual: Mapping[str, Sequence[float]] | None = None,
    ) -> Evidence:
        obs = {}
        for name, state in (observations or {}).items():
            v = net.index(name)
            obs[v] = net.variables[v].state_index(state)
        virt = {net.index(name): np.asarray(w, float) for name, w in (virtual or {}).items()}
        return cls(obs, virt)

    def with_observations(self, extra: Mapping[int, int]) -> Evidence:
        clash = set(extra) & (set(self.observations) | set(self.virtual_findings))
        if clash:
            raise NetworkError(f"variable(s) {sorted(clash)} observed twice")
        return Evidence({**self.observations, **extra}, self.virtual_findings)

    def validate(self, net: Network) -> None:
        for var, state in self.observations.items():
            if not 0 <= var < len(net):
                raise NetworkError(f"evidence on unknown variable id {var}")
            if not 0 <= state < net.card(var):
                raise NetworkError(
                    f"observed state {state} out of range for {net.variables[var].name!r}"
                )
        for var, w in self.virtual_findings.items():
            if not 0 <= var < len(net):
                raise NetworkError(f"evidence on unknown variable id {var}")
            if w.shape != (net.card(var),):
                raise NetworkError(
                    f"virtual finding on {net.variables[var].name!r} has "
                    f"{w.size} weights, expected {net.card(var)}"
                )


class WorkingView:
    """A network with evidence absorbed.

    Observed variables keep their own family (with an indicator as local
    diagnostic weight) but their links to children are cut; each child's
    table is sliced at the observed state. Virtual findings become fixed
    local weights. ``parents``/``children`` describe the remaining links.
    """

    def __init__(self, net: Network, evidence: Evidence):
        evidence.validate(net)
        self.net = net
        self.evidence = evidence
        self.clamped: dict[int, int] = dict(evidence.observations)
        n = len(net)
        self.parents: tuple[tuple[int, ...], ...] = tuple(
            tuple(p for p in net.parents[v] if p not in self.clamped) for v in range(n)
        )
        kids: list[list[int]] = [[] for _ in range(n)]
        for v in range(n):
            for p in self.parents[v]:
                kids[p].append(v)
        self.children: tuple[tuple[int, ...], ...] = tuple(tuple(k) for k in kids)
        locals_ = []
        with np.errstate(divide="ignore"):
            for v in range(n):
                lam = np.zeros(net.card(v))
                if v in self.clamped:
                    lam = np.full(net.card(v), -np.inf)
                    lam[self.clamped[v]] = 0.0
                elif v in evidence.virtual_findings:
                    lam = np.log(evidence.virtual_findings[v])
                lam.setflags(write=False)
                locals_.append(lam)
        self.log_local: tuple[np.ndarray, ...] = tuple(locals_)
        self._tables: dict[int, np.ndarray] = {}

    def __len__(self):
        return len(self.net)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.parents[v] + self.children[v]

    def _slice(self, v: int) -> tuple:
        return (slice(None),) + tuple(
            self.clamped[p] if p in self.clamped else slice(None)
            for p in self.net.parents[v]
        )

    def log_table(self, v: int) -> np.ndarray:
        """Log table over (v, unclamped parents), sliced at clamped parents."""
        if v not in self._tables:
            t = self.net.log_table(v)[self._slice(v)]
            t.setflags(write=False)
            self._tables[v] = t
        return self._tables[v]

    def gate(self, v: int) -> tuple[np.ndarray, float] | None:
        """Noisy-OR data for ``v``: suppressors of open parents and the
        product of suppressors of parents clamped TRUE."""
        cpd = self.net.cpds[v]
        if not isinstance(cpd, NoisyOrCpd):
            return None
        q = cpd.suppressors
        base = 1.0
        open_q = []
        for p, qi in zip(self.net.parents[v], q):
            if p in self.clamped:
                if self.clamped[p] == 1:
                    base *= qi
            else:
                open_q.append(qi)
        return np.asarray(open_q), base

    def graph(self) -> nx.Graph:
        return effective_graph(self.net, self.clamped)

    def topology(self) -> Topology:
        return classify_topology(self.net, self.clamped)

    def components(self) -> list[list[int]]:
        comps = nx.connected_components(self.graph())
        return sorted((sorted(c) for c in comps), key=lambda c: c[0])


def absorb_evidence(net: Network, ev: Evidence | None = None) -> WorkingView:
    return WorkingView(net, ev or Evidence())


def log_joint_probability(net: Network, ev: Evidence | None, assignment: Sequence[int]) -> float:
    """Chain-rule log P(w, e) of a complete assignment.

    Virtual findings contribute their weights; an assignment that disagrees
    with an observation scores ``-inf``.
    """
    ev = ev or Evidence()
    for var, state in ev.observations.items():
        if assignment[var] != state:
            return -np.inf
    total = 0.0
    for v in range(len(net)):
        idx = (assignment[v],) + tuple(assignment[p] for p in net.parents[v])
        total += float(net.log_table(v)[idx])
    with np.errstate(divide="ignore"):
        for var, w in ev.virtual_findings.items():
            total += float(np.log(w[assignment[var]]))
    return total
