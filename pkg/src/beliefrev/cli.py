"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 contradictory evidence,
3 state space too large.  ``--net``/``--evidence`` accept a path or the
name of a bundled file (``fig3-sec4.bn``, ``fig3-sec5.bn``, ``fig3.ev``,
``fig3-d1-true.ev``, ``fig3-d1-false.ev``).

Trace files hold one event per line::

    step=<n> edge=<from>-><to> kind=<pi|lambda|pi*|lambda*> msg=[v1,...] [ratio=<r>] [reinforces=1]

``ratio`` appears for binary links: lambda(+)/lambda(-) for diagnostic
messages and pi(+)/(pi(+)+pi(-)) for causal ones.  A ``.json`` trace path
writes a list of records with keys ``step node from to kind before after``
and, where defined, ``ratio`` and ``reinforces``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import oracle
from .cutset import condition_and_revise, find_cutset, threshold_sweep
from .formats import load_evidence, load_network
from .model import (
    ContradictionError,
    Evidence,
    Network,
    NetworkError,
    StateSpaceError,
    TopologyError,
    absorb_evidence,
)
from .propagation import format_ratio
from .revise import Interpretation, RevisionResult
from .update import update_beliefs

EXIT_OK, EXIT_INPUT, EXIT_CONTRADICTION, EXIT_SIZE = 0, 1, 2, 3
POSTERIOR_STATES = 2**20


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _belief_items(net: Network, var: int, values: np.ndarray) -> list[tuple[str, float]]:
    v = net.variables[var]
    if v.state_labels == ("FALSE", "TRUE"):
        return [(f"BEL(+{v.name})", values[1]), (f"BEL(-{v.name})", values[0])]
    return [(f"BEL({v.name}={lab})", values[i]) for i, lab in enumerate(v.state_labels)]


def _assignment_text(net: Network, assignment: Sequence[int], skip=()) -> str:
    return " ".join(
        f"{v.name}={v.state_labels[s]}"
        for v, s in zip(net.variables, assignment)
        if v.id not in skip
    )


def _score_text(log_p: float) -> str:
    if log_p == -math.inf:
        return "0 (ln=-inf)"
    return f"{math.exp(log_p):.4e} (ln={log_p:.6f})"


def _load(args) -> tuple[Network, Evidence]:
    net = load_network(args.net)
    ev = load_evidence(args.evidence, net) if args.evidence else Evidence()
    return net, ev


def cmd_update(args) -> int:
    net, ev = _load(args)
    view = absorb_evidence(net, ev)
    if not view.topology().singly_connected:
        raise TopologyError("multiply-connected: use revise --condition or oracle")
    res = update_beliefs(net, ev)
    if args.trace:
        _write_trace(args.trace, [(None, res.trace, res.propagation.view)])
    if args.json:
        out = {
            "net": net.name,
            "log_evidence": res.log_evidence,
            "beliefs": {
                v.name: {lab: float(res.beliefs[v.id][i]) for i, lab in enumerate(v.state_labels)}
                for v in net.variables
            },
        }
        print(json.dumps(out, indent=2))
        return EXIT_OK
    print(f"net {net.name}: {view.topology()}")
    print(f"log P(e) = {res.log_evidence:.6f}")
    for v in net.variables:
        items = _belief_items(net, v.id, res.beliefs[v.id])
        print("  ".join(f"{k}={val:.6f}" for k, val in items))
    return EXIT_OK


def _ratios(net: Network, run: RevisionResult) -> dict[str, float]:
    return {
        v.name: run.bel_star_ratio(v.id) for v in net.variables if v.cardinality == 2
    }


def cmd_revise(args) -> int:
    net, ev = _load(args)
    view = absorb_evidence(net, ev)
    topo = view.topology()
    if args.condition is None:
        if not topo.singly_connected:
            raise TopologyError(
                "multiply-connected: use --condition auto or --condition v1,v2,..."
            )
        cutset: list[int] = []
    elif args.condition == "auto":
        cutset = find_cutset(net, ev)
    else:
        cutset = [net.index(name) for name in args.condition.split(",") if name]
    plan = condition_and_revise(net, ev, cutset, annotate=bool(args.trace))
    run = plan.runs[plan.winner]
    best = plan.best
    post = None
    # the posterior needs the normalizer; only pay for it on small networks
    if oracle.state_count(net) <= POSTERIOR_STATES:
        post = best.log_joint - oracle.log_evidence(net, ev)
    if args.trace:
        runs = []
        for inst, r in zip(plan.instantiations, plan.runs):
            if r is not None:
                label = _inst_label(net, cutset, inst) if cutset else None
                runs.append((label, r.trace, r.propagation.view))
        _write_trace(args.trace, runs)
    if args.json:
        out = {
            "net": net.name,
            "cutset": [net.variables[v].name for v in cutset],
            "candidates": [
                {
                    "instantiation": {
                        net.variables[v].name: net.state_name(v, s) for v, s in zip(cutset, inst)
                    },
                    "assignment": interp.named(net) if interp else None,
                    "score": math.exp(score) if score > -math.inf else 0.0,
                    "log_score": score if score > -math.inf else None,
                }
                for inst, interp, score in zip(
                    plan.instantiations, plan.interpretations, plan.log_scores
                )
            ],
            "assignment": best.named(net),
            "log_joint": best.log_joint,
            "joint": best.joint,
            "log_posterior": post,
            "bel_star_ratios": {
                k: (None if math.isinf(r) else r) for k, r in _ratios(net, run).items()
            },
        }
        print(json.dumps(out, indent=2))
        return EXIT_OK
    print(f"net {net.name}: {topo}")
    if cutset:
        print("cutset: " + " ".join(net.variables[v].name for v in cutset))
        for inst, interp, score in zip(plan.instantiations, plan.interpretations, plan.log_scores):
            label = _inst_label(net, cutset, inst)
            w = _assignment_text(net, interp.assignment, cutset) if interp else "impossible"
            print(f"  [{label}] score={_score_text(score)}  w*: {w}")
    print("interpretation: " + _assignment_text(net, best.assignment))
    print(f"P(w*,e) = {_score_text(best.log_joint)}")
    if post is not None:
        print(f"P(w*|e) = {math.exp(post):.6g}")
    print(
        "BEL*(+x)/BEL*(-x): "
        + " ".join(f"{k}={format_ratio(r)}" for k, r in _ratios(net, run).items())
    )
    return EXIT_OK


def _inst_label(net: Network, cutset, inst) -> str:
    return " ".join(f"{net.variables[v].name}={net.state_name(v, s)}" for v, s in zip(cutset, inst))


def _write_trace(path: str, runs) -> None:
    if path.endswith(".json"):
        # a single unconditioned run is written as a bare event list
        if len(runs) == 1 and runs[0][0] is None:
            text = runs[0][1].to_json(runs[0][2])
        else:
            text = json.dumps(
                [
                    {"instantiation": label, "events": json.loads(trace.to_json(view))}
                    for label, trace, view in runs
                ],
                indent=1,
            )
    else:
        parts = []
        for label, trace, view in runs:
            if label:
                parts.append(f"# instantiation {label}\n")
            parts.append(trace.to_text(view))
        text = "".join(parts)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_oracle(args) -> int:
    net, ev = _load(args)
    query = args.query
    if query == "mpe":
        mpe: Interpretation = oracle.exact_mpe(net, ev)
        if args.json:
            print(json.dumps({
                "assignment": mpe.named(net),
                "log_joint": mpe.log_joint,
                "joint": mpe.joint,
                "log_posterior": mpe.log_posterior,
            }, indent=2))
        else:
            print("interpretation: " + _assignment_text(net, mpe.assignment))
            print(f"P(w*,e) = {_score_text(mpe.log_joint)}")
            print(f"P(w*|e) = {math.exp(mpe.log_posterior):.6g}")
        return EXIT_OK
    if query.startswith("bel:"):
        var = net.index(query[4:])
        bel = oracle.exact_bel(net, ev, var)
        if args.json:
            v = net.variables[var]
            print(json.dumps({v.name: {lab: float(bel[i]) for i, lab in enumerate(v.state_labels)}}, indent=2))
        else:
            print("  ".join(f"{k}={val:.6f}" for k, val in _belief_items(net, var, bel)))
        return EXIT_OK
    raise NetworkError(f"unknown query {query!r} (use bel:<var> or mpe)")


def cmd_sweep(args) -> int:
    net, ev = _load(args)
    if not args.param.startswith("prior:"):
        raise NetworkError("--param must be prior:<var>")
    var = net.index(args.param[6:])
    try:
        lo, hi = (float(x) for x in args.range.split(","))
    except ValueError:
        raise NetworkError("--range must be a,b") from None
    descending = lo > hi
    lo, hi = min(lo, hi), max(lo, hi)
    descending = descending or args.descending
    if args.condition in (None, "auto"):
        cutset = find_cutset(net, ev)
    else:
        cutset = [net.index(n) for n in args.condition.split(",") if n]
    points = threshold_sweep(
        net, ev, var, lo, hi, args.resolution, cutset=cutset, descending=descending
    )
    if args.json:
        print(json.dumps({
            "param": args.param,
            "range": [lo, hi],
            "descending": descending,
            "switch_points": points,
        }, indent=2))
    elif points:
        for p in points:
            print(f"switch {args.param} at {p:.6f}")
    else:
        print("no switch in range")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="beliefrev", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--net", required=True, help="network file (.bn)")
        p.add_argument("--evidence", help="evidence file (.ev)")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("update", help="posterior beliefs by sum-product propagation")
    common(p)
    p.add_argument("--trace", help="write the message log to this file")
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("revise", help="most likely interpretation by max-product propagation")
    common(p)
    p.add_argument("--condition", help="'auto' or a comma-separated cutset")
    p.add_argument("--trace", help="write the message log to this file")
    p.set_defaults(func=cmd_revise)

    p = sub.add_parser("oracle", help="exact answers by joint enumeration")
    common(p)
    p.add_argument("--query", required=True, help="bel:<var> or mpe")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="find prior values where the interpretation switches")
    common(p)
    p.add_argument("--param", required=True, help="prior:<var>")
    p.add_argument("--range", required=True, help="a,b (b<a sweeps downward)")
    p.add_argument("--resolution", type=float, default=1e-4)
    p.add_argument("--descending", action="store_true")
    p.add_argument("--condition", help="'auto' (default) or a comma-separated cutset")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ContradictionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRADICTION
    except StateSpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (NetworkError, TopologyError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
