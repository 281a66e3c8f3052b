"""Belief updating and belief revision by message passing in Bayesian networks."""

from .cutset import CutsetPlan, condition_and_revise, find_cutset, threshold_sweep
from .formats import format_network, load_evidence, load_network, parse_evidence, parse_network
from .model import (
    ContradictionError,
    Evidence,
    Network,
    NetworkError,
    NoisyOrCpd,
    StateSpaceError,
    TableCpd,
    TopologyError,
    Variable,
    absorb_evidence,
    build_network,
    classify_topology,
    log_joint_probability,
)
from .revise import Interpretation, extract_mpe, revise
from .update import update_beliefs

__all__ = [
    "ContradictionError",
    "CutsetPlan",
    "Evidence",
    "Interpretation",
    "Network",
    "NetworkError",
    "NoisyOrCpd",
    "StateSpaceError",
    "TableCpd",
    "TopologyError",
    "Variable",
    "absorb_evidence",
    "build_network",
    "classify_topology",
    "condition_and_revise",
    "extract_mpe",
    "find_cutset",
    "format_network",
    "load_evidence",
    "load_network",
    "log_joint_probability",
    "parse_evidence",
    "parse_network",
    "revise",
    "threshold_sweep",
    "update_beliefs",
]
