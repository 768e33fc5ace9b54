"""Line and circle networks, and ranking of their most critical edge sets."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from itertools import combinations, repeat
from math import comb
from typing import List, Optional, Sequence, Tuple
import logging

import networkx as nx
import numpy as np

from .config import config
from .errors import StabilityRadiusError
from .models import CriticalEdgeResult, EdgeRanking
from .problem import ProblemInstance, SparsityPattern
from .solver import SolverConfig, multistart

logger = logging.getLogger(__name__)

MAX_PATTERNS = 10_000

Entry = Tuple[int, int]


class Topology(str, Enum):
    LINE = "line"
    CIRCLE = "circle"


class EntryClass(str, Enum):
    SELF_LOOPS = "self"
    OFF_DIAGONAL = "offdiag"
    ANY = "any"


@dataclass
class NetworkSpec:
    """Undirected network with uniform self-loop and edge weights."""
    topology: Topology
    node_count: int
    self_weight: float = -2.5
    edge_weight: float = 1.0

    def __post_init__(self):
        self.topology = Topology(self.topology)
        if self.node_count < 2:
            raise ValueError(f"A network needs at least 2 nodes, got {self.node_count}")

    def graph(self) -> nx.Graph:
        if self.topology is Topology.LINE:
            return nx.path_graph(self.node_count)
        return nx.cycle_graph(self.node_count)

    def state_matrix(self) -> np.ndarray:
        """self_weight * I + edge_weight * adjacency."""
        n = self.node_count
        adjacency = nx.to_numpy_array(self.graph(), nodelist=range(n))
        return self.self_weight * np.eye(n) + self.edge_weight * adjacency


@dataclass
class EdgePatternQuery:
    """How many entries may be perturbed at once, and which ones."""
    budget: int
    entry_class: EntryClass = EntryClass.ANY

    def __post_init__(self):
        self.entry_class = EntryClass(self.entry_class)
        if self.budget < 1:
            raise ValueError(f"budget must be at least 1, got {self.budget}")


def build_network(spec: NetworkSpec) -> ProblemInstance:
    """Problem with B = C = I and an all-zero pattern, to be set per query.

    Args:
        spec: The network

    Returns:
        A ProblemInstance whose A is the network's state matrix. An unstable
        network is logged, not rejected.
    """
    n = spec.node_count
    inst = ProblemInstance(
        spec.state_matrix(), np.eye(n), np.eye(n), SparsityPattern.zeros(n, n)
    )
    check = inst.check_a1()
    if not check:
        logger.warning(f"{spec.topology.value} network with n={n} is unstable: {check.detail}")
    return inst


def admissible_entries(spec: NetworkSpec, entry_class: EntryClass) -> List[Entry]:
    """Perturbable entries of A: self loops and/or both directions of every edge."""
    entries: List[Entry] = []
    if entry_class in (EntryClass.SELF_LOOPS, EntryClass.ANY):
        entries.extend((i, i) for i in range(spec.node_count))
    if entry_class in (EntryClass.OFF_DIAGONAL, EntryClass.ANY):
        for i, j in spec.graph().edges():
            entries.extend([(i, j), (j, i)])
    return sorted(set(entries))


def enumerate_patterns(spec: NetworkSpec, query: EdgePatternQuery) -> List[Tuple[Entry, ...]]:
    """Every choice of query.budget admissible entries.

    Args:
        spec: The network
        query: Budget and entry class

    Returns:
        Entry tuples in lexicographic order

    Raises:
        ValueError: If the budget exceeds the admissible entries or the
            number of patterns exceeds MAX_PATTERNS
    """
    entries = admissible_entries(spec, query.entry_class)
    if query.budget > len(entries):
        raise ValueError(
            f"budget {query.budget} exceeds the {len(entries)} admissible entries"
        )
    count = comb(len(entries), query.budget)
    if count > MAX_PATTERNS:
        raise ValueError(f"{count} patterns exceed the limit of {MAX_PATTERNS}")
    return list(combinations(entries, query.budget))


def evaluate_pattern(
    base: ProblemInstance, entries: Tuple[Entry, ...], cfg: SolverConfig
) -> CriticalEdgeResult:
    """Stability radius for one pattern; failures are recorded on the result.

    Args:
        base: Network problem from build_network
        entries: Free entries of the pattern
        cfg: Solver settings for the multistart

    Returns:
        The radius, frequency and perturbation, or an error message
    """
    pattern = SparsityPattern.from_entries(base.m, base.p, entries)
    inst = base.with_pattern(pattern)
    try:
        result = multistart(inst, cfg)
    except StabilityRadiusError as e:
        return CriticalEdgeResult(entries, None, None, None, str(e))
    if result.best is None:
        return CriticalEdgeResult(entries, None, None, None, "no valid minimum")
    best = result.best
    return CriticalEdgeResult(entries, best.fnorm, best.omega, best.delta)


def group_ties(
    results: Sequence[CriticalEdgeResult], tie_tol: float = config.TIE_TOL
) -> List[List[CriticalEdgeResult]]:
    """Group sorted results whose radius is within tie_tol of the group's first member."""
    groups: List[List[CriticalEdgeResult]] = []
    for result in results:
        if groups and abs(result.sr - groups[-1][0].sr) <= tie_tol:
            groups[-1].append(result)
        else:
            groups.append([result])
    return groups


def rank_critical_edges(
    spec: NetworkSpec,
    query: EdgePatternQuery,
    cfg: Optional[SolverConfig] = None,
    jobs: int = 1,
    tie_tol: float = config.TIE_TOL,
) -> EdgeRanking:
    """Stability radius of every admissible pattern, most critical first.

    Each pattern runs the complex-pair search and the omega = 0 variant and
    keeps the smaller valid radius.

    Args:
        spec: The network
        query: Budget and entry class of the patterns
        cfg: Solver settings; defaults to the global config with
            NETWORK_STARTS starts
        jobs: Worker processes over patterns
        tie_tol: Radii within this distance are tied

    Returns:
        Solved patterns sorted by radius, their tie groups, and the
        patterns that failed
    """
    cfg = cfg or replace(SolverConfig.from_config(), multistart_count=config.NETWORK_STARTS)
    cfg = replace(cfg, omega_zero_mode=True, weighted_reconstruction=True, jobs=1)
    base = build_network(spec)
    patterns = enumerate_patterns(spec, query)
    logger.info(
        f"Ranking {len(patterns)} patterns on a {spec.topology.value} network "
        f"with {spec.node_count} nodes"
    )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            evaluated = list(executor.map(evaluate_pattern, repeat(base), patterns, repeat(cfg)))
    else:
        evaluated = [evaluate_pattern(base, entries, cfg) for entries in patterns]

    results, failures = [], []
    for result in evaluated:
        if result.sr is None:
            logger.error(f"Pattern {list(result.entries)} failed: {result.error}")
            failures.append(result)
        else:
            results.append(result)
    results.sort(key=lambda r: (r.sr, r.entries))
    groups = group_ties(results, tie_tol)
    if results:
        logger.info(
            f"Most critical: {list(results[0].entries)} with radius {results[0].sr:.6g} "
            f"({len(groups[0])} tied)"
        )
    return EdgeRanking(results=results, tie_groups=groups, failures=failures)
