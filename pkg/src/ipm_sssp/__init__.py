"""Incremental (1+eps)-approximate single-source shortest paths.

Library layout:

* :mod:`ipm_sssp.graph` -- insertion-only directed multigraph, sign conventions
* :mod:`ipm_sssp.oracle` -- exact shortest-path ground truth (Dijkstra)
* :mod:`ipm_sssp.barrier` -- the high-power barrier, potential, and parameters
* :mod:`ipm_sssp.solver` -- exact min-ratio cycle steps with dual certificates
* :mod:`ipm_sssp.detector` -- barrier descent flagging distance drops per band
* :mod:`ipm_sssp.engine` -- recursive scales/contraction; the user-facing API
* :mod:`ipm_sssp.cli` -- stream driver, generator, verifier, benchmarks
"""

from .barrier import IpmParams, PotentialContext
from .detector import DangerDetector, InsertionReport
from .engine import (
    DegreeReducedSssp,
    EngineConfig,
    ExactSssp,
    SsspEngine,
    degree_reduce,
    make_sssp,
)
from .graph import DynamicGraph, EdgeKind
from .oracle import ShortestPathTree, dijkstra, total_distance
from .solver import Applied, Certified, DualCertificate, SolverMirror, brute_force_min_ratio

__all__ = [
    "Applied",
    "Certified",
    "DangerDetector",
    "DegreeReducedSssp",
    "DualCertificate",
    "DynamicGraph",
    "EdgeKind",
    "EngineConfig",
    "ExactSssp",
    "InsertionReport",
    "IpmParams",
    "PotentialContext",
    "ShortestPathTree",
    "SolverMirror",
    "SsspEngine",
    "brute_force_min_ratio",
    "degree_reduce",
    "dijkstra",
    "make_sssp",
    "total_distance",
]

__version__ = "0.1.0"
