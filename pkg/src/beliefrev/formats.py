"""Line-oriented network (``.bn``) and evidence (``.ev``) files.

Network directives::

    net <name>
    var <name> <cardinality> [state names...]
    parents <var> <p1> ...
    cpt <var> <probabilities...>      # child state fastest, last parent next
    noisyor <var> <c1> ... <cn>       # link strengths c_i = 1 - q_i
    prior <var> <p_true>              # binary roots only

Evidence directives::

    obs <var> <state>                 # state label or index
    virtual <var> <w1> ... <wk>       # repeated lines multiply elementwise

``#`` starts a comment.  Comment lines before the first directive of a
network file are kept as its header and printed back.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .model import (
    BINARY_STATES,
    Evidence,
    Network,
    NetworkError,
    NoisyOrCpd,
    build_network,
    flat_cpt,
)


class FormatError(NetworkError):
    """Syntax error in a network or evidence file."""


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].split()
        if body:
            yield lineno, body


def _floats(tokens, lineno):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise FormatError(f"line {lineno}: {exc}") from None


def parse_network(text: str) -> Network:
    header: list[str] = []
    for raw in text.splitlines():
        stripped = raw.strip()
        if stripped.startswith("#"):
            body = stripped[1:]
            header.append(body[1:] if body.startswith(" ") else body)
        elif stripped:
            break
    name = None
    entries: dict[str, dict] = {}
    for lineno, toks in _tokens(text):
        head, args = toks[0], toks[1:]
        if head == "net":
            if len(args) != 1:
                raise FormatError(f"line {lineno}: net takes one name")
            name = args[0]
        elif head == "var":
            if len(args) < 2:
                raise FormatError(f"line {lineno}: var needs a name and a cardinality")
            vname, card = args[0], args[1]
            if vname in entries:
                raise FormatError(f"line {lineno}: duplicate variable name {vname!r}")
            try:
                k = int(card)
            except ValueError:
                raise FormatError(f"line {lineno}: bad cardinality {card!r}") from None
            states = args[2:] or None
            if states is not None and len(states) != k:
                raise FormatError(
                    f"line {lineno}: {vname!r} declares {k} states but names {len(states)}"
                )
            entries[vname] = {"name": vname, "cardinality": k, "states": states, "line": lineno}
        elif head in ("parents", "cpt", "noisyor", "prior"):
            if not args:
                raise FormatError(f"line {lineno}: {head} needs a variable")
            vname = args[0]
            if vname not in entries:
                raise FormatError(f"line {lineno}: {head} for undeclared variable {vname!r}")
            entry = entries[vname]
            if head == "parents":
                if "parents" in entry:
                    raise FormatError(f"line {lineno}: parents of {vname!r} given twice")
                entry["parents"] = args[1:]
                continue
            if any(entry.get(k) is not None for k in ("cpt", "noisyor", "prior")):
                raise FormatError(f"line {lineno}: {vname!r} has more than one distribution")
            values = _floats(args[1:], lineno)
            if head == "prior":
                if len(values) != 1:
                    raise FormatError(f"line {lineno}: prior takes one probability")
                values = values[0]
            entry[head] = values
            entry["line"] = lineno
        else:
            raise FormatError(f"line {lineno}: unknown directive {head!r}")
    for entry in entries.values():
        if all(entry.get(k) is None for k in ("cpt", "noisyor", "prior")):
            raise FormatError(
                f"line {entry['line']}: {entry['name']!r} has no distribution directive"
            )
    try:
        return build_network(
            {"name": name or "net", "comments": header, "variables": list(entries.values())}
        )
    except FormatError:
        raise
    except NetworkError as exc:
        raise FormatError(str(exc)) from None


def _num(x: float) -> str:
    return repr(float(x))


def format_network(net: Network) -> str:
    """Canonical text form; ``parse_network`` of it gives an equal network."""
    lines = [f"# {c}" if c else "#" for c in net.comments]
    lines.append(f"net {net.name}")
    for v in net.variables:
        lines.append("")
        decl = f"var {v.name} {v.cardinality}"
        default = BINARY_STATES if v.cardinality == 2 else tuple(str(i) for i in range(v.cardinality))
        if v.state_labels != default:
            decl += " " + " ".join(v.state_labels)
        lines.append(decl)
        pars = net.parents[v.id]
        if pars:
            lines.append(f"parents {v.name} " + " ".join(net.variables[p].name for p in pars))
        cpd = net.cpds[v.id]
        if isinstance(cpd, NoisyOrCpd):
            lines.append(f"noisyor {v.name} " + " ".join(_num(c) for c in cpd.strengths))
        elif not pars and v.cardinality == 2:
            lines.append(f"prior {v.name} {_num(cpd.table[1])}")
        else:
            lines.append(f"cpt {v.name} " + " ".join(_num(p) for p in flat_cpt(cpd)))
    return "\n".join(lines) + "\n"


def parse_evidence(text: str, net: Network) -> Evidence:
    obs: dict[int, int] = {}
    virt: dict[int, np.ndarray] = {}
    for lineno, toks in _tokens(text):
        head, args = toks[0], toks[1:]
        try:
            if head == "obs":
                if len(args) != 2:
                    raise FormatError(f"line {lineno}: obs takes a variable and a state")
                v = net.index(args[0])
                if v in obs:
                    raise FormatError(f"line {lineno}: variable {args[0]!r} observed twice")
                obs[v] = net.variables[v].state_index(args[1])
            elif head == "virtual":
                if len(args) < 2:
                    raise FormatError(f"line {lineno}: virtual needs a variable and weights")
                v = net.index(args[0])
                w = np.asarray(_floats(args[1:], lineno))
                if w.size != net.card(v):
                    raise FormatError(
                        f"line {lineno}: {args[0]!r} needs {net.card(v)} weights, got {w.size}"
                    )
                virt[v] = virt[v] * w if v in virt else w
            else:
                raise FormatError(f"line {lineno}: unknown directive {head!r}")
        except FormatError:
            raise
        except NetworkError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    try:
        return Evidence(obs, virt)
    except NetworkError as exc:
        raise FormatError(str(exc)) from None


def format_evidence(ev: Evidence, net: Network) -> str:
    lines = []
    for v, s in sorted(ev.observations.items()):
        lines.append(f"obs {net.variables[v].name} {net.state_name(v, s)}")
    for v, w in sorted(ev.virtual_findings.items()):
        lines.append(f"virtual {net.variables[v].name} " + " ".join(_num(x) for x in w))
    return "\n".join(lines) + ("\n" if lines else "")


def bundled_names() -> list[str]:
    root = resources.files("beliefrev") / "data"
    return sorted(p.name for p in root.iterdir() if p.name.endswith((".bn", ".ev")))


def read_text(path: str | Path) -> str:
    """Read a file, falling back to the bundled data directory by name."""
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8")
    res = resources.files("beliefrev") / "data" / p.name
    if res.is_file():
        return res.read_text(encoding="utf-8")
    raise FileNotFoundError(f"no such file: {path}")


def load_network(path: str | Path) -> Network:
    return parse_network(read_text(path))


def load_evidence(path: str | Path, net: Network) -> Evidence:
    return parse_evidence(read_text(path), net)
