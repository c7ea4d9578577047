"""Spectral distributions, exact sampling, and transport-feasibility checks.

A distribution q (epsilon, delta)-approximates p when q's mass can be split
so that every target point x_j receives at least (1 - delta) p_j from within
distance epsilon.  That is a transportation feasibility question, decided
here exactly by max flow on integer-scaled capacities.  Total variation is
deliberately NOT the acceptance notion: two distributions can sit at TV
distance 1 while every point moved only epsilon.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .circuits import BasisLabel
from .errors import DimensionMismatch, MetricMismatch
from .linalg import hermitian_eig, unitary_eig

DEDUP_TOL = 1e-9
WEIGHT_SUM_TOL = 1e-9
WEIGHT_FLOOR = 1e-12
# Capacities become 64-bit integers at this scale before the flow solve;
# one integer unit is therefore the 1e-12 feasibility slack.
FLOW_SCALE = 10**12
FEASIBILITY_SLACK_UNITS = 1
EDGE_DISTANCE_TOL = 1e-12
MIN_EMPIRICAL_SAMPLES = 1000
EMPIRICAL_SLACK_FACTOR = 3.0

METRICS = ("absolute", "circular")


def point_distance(a: float, b: float, metric: str) -> float:
    d = abs(a - b)
    if metric == "circular":
        d = d % 1.0
        d = min(d, 1.0 - d)
    return d


@dataclass
class SpectralDistribution:
    """Finitely supported distribution over spectral values.

    points is a list of (value, weight); metric is "absolute" for eigenvalue
    lines and "circular" for phases in [0, 1).
    """

    points: list[tuple[float, float]]
    metric: str

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        total = sum(w for _, w in self.points)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total}, not 1")
        if any(w < -WEIGHT_FLOOR for _, w in self.points):
            raise ValueError("negative weight")

    def values(self) -> list[float]:
        return [v for v, _ in self.points]

    def weights(self) -> list[float]:
        return [w for _, w in self.points]


def make_distribution(
    values, weights, metric: str, dedup_tol: float = DEDUP_TOL
) -> SpectralDistribution:
    """Build a distribution, merging values closer than dedup_tol.

    Zero-weight values are dropped.  Under the circular metric the first and
    last clusters merge across the wrap point when they touch.
    """
    pairs = [(float(v), float(w)) for v, w in zip(values, weights) if w > WEIGHT_FLOOR]
    if not pairs:
        raise ValueError("distribution has no mass")
    pairs.sort()
    clusters: list[list[tuple[float, float]]] = [[pairs[0]]]
    for v, w in pairs[1:]:
        if v - clusters[-1][-1][0] <= dedup_tol:
            clusters[-1].append((v, w))
        else:
            clusters.append([(v, w)])
    wrapped = False
    if metric == "circular" and len(clusters) > 1:
        gap = (clusters[0][0][0] + 1.0) - clusters[-1][-1][0]
        if gap <= dedup_tol:
            clusters[0] = [(v - 1.0, w) for v, w in clusters[-1]] + clusters[0]
            clusters.pop()
            wrapped = True
    points = []
    for cluster in clusters:
        mass = sum(w for _, w in cluster)
        value = sum(v * w for v, w in cluster) / mass
        if wrapped:
            value %= 1.0
            wrapped = False
        points.append((value, mass))
    return SpectralDistribution(points, metric)


def exact_distribution(matrix: np.ndarray, b: BasisLabel, kind: str) -> SpectralDistribution:
    """Ground-truth spectral law of measuring `matrix` in state |b>.

    Eigenvalues are merged across degenerate eigenspaces, so each weight is
    the full projector expectation <b|P|b>.  kind "hermitian" yields values
    on the real line; kind "unitary" yields phases in [0, 1).
    """
    matrix = np.asarray(matrix, dtype=complex)
    dim = matrix.shape[0]
    qubit_dim = 2**b.qubit_count
    if dim % qubit_dim != 0:
        raise DimensionMismatch(
            f"matrix dimension {dim} does not contain a {b.qubit_count}-qubit register"
        )
    clock_dim = dim // qubit_dim
    if b.clock_index >= clock_dim:
        raise DimensionMismatch("label clock index outside matrix clock register")
    row = b.basis_index() * clock_dim + b.clock_index
    if kind == "hermitian":
        dec = hermitian_eig(matrix)
        values = dec.eigenvalues
        metric = "absolute"
    elif kind == "unitary":
        dec = unitary_eig(matrix)
        values = dec.phases()
        metric = "circular"
    else:
        raise ValueError("kind must be 'hermitian' or 'unitary'")
    weights = np.abs(dec.eigenvectors[row, :]) ** 2
    return make_distribution(values, weights, metric)


def exact_sampler(dist: SpectralDistribution, rng: np.random.Generator) -> float:
    """One inverse-CDF draw from the distribution."""
    cum = np.cumsum(dist.weights())
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return dist.points[min(idx, len(dist.points) - 1)][0]


def sample_values(dist: SpectralDistribution, count: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized i.i.d. draws; same law as repeated exact_sampler calls."""
    cum = np.cumsum(dist.weights())
    idx = np.searchsorted(cum, rng.random(count) * cum[-1], side="right")
    vals = np.array(dist.values())
    return vals[np.minimum(idx, len(vals) - 1)]


def total_variation(p: SpectralDistribution, q: SpectralDistribution) -> float:
    if p.metric != q.metric:
        raise MetricMismatch("distributions use different metrics")
    tagged = [(v, w, 0.0) for v, w in p.points] + [(v, 0.0, w) for v, w in q.points]
    tagged.sort()
    gaps = []
    i = 0
    while i < len(tagged):
        j = i + 1
        pw, qw = tagged[i][1], tagged[i][2]
        while j < len(tagged) and tagged[j][0] - tagged[j - 1][0] <= DEDUP_TOL:
            pw += tagged[j][1]
            qw += tagged[j][2]
            j += 1
        gaps.append(abs(pw - qw))
        i = j
    # fsum keeps disjoint supports at exactly 1.0
    return math.fsum(gaps) / 2.0


# ---------------------------------------------------------------------------
# transport feasibility

@dataclass
class ApproxCheckInstance:
    """Does `candidate` (epsilon, delta)-approximate `target`?"""

    candidate: SpectralDistribution
    target: SpectralDistribution
    epsilon: float
    delta: float


@dataclass
class FlowNetwork:
    """Bipartite transport network: supplies feed demands along edges."""

    supplies: list[float]
    demands: list[float]
    edges: list[tuple[int, int]]


class _Dinic:
    """Max flow on integer capacities; exact with Python integers."""

    def __init__(self, node_count: int):
        self.adj: list[list[int]] = [[] for _ in range(node_count)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, capacity: int) -> int:
        edge_id = len(self.to)
        self.adj[u].append(edge_id)
        self.to.append(v)
        self.cap.append(capacity)
        self.adj[v].append(edge_id + 1)
        self.to.append(u)
        self.cap.append(0)
        return edge_id

    def _levels(self, source: int, sink: int) -> list[int] | None:
        level = [-1] * len(self.adj)
        level[source] = 0
        frontier = [source]
        while frontier:
            nxt = []
            for u in frontier:
                for eid in self.adj[u]:
                    v = self.to[eid]
                    if self.cap[eid] > 0 and level[v] < 0:
                        level[v] = level[u] + 1
                        nxt.append(v)
            frontier = nxt
        return level if level[sink] >= 0 else None

    def max_flow(self, source: int, sink: int) -> int:
        total = 0
        while True:
            level = self._levels(source, sink)
            if level is None:
                return total
            cursor = [0] * len(self.adj)

            def push(u: int, limit: int) -> int:
                if u == sink:
                    return limit
                while cursor[u] < len(self.adj[u]):
                    eid = self.adj[u][cursor[u]]
                    v = self.to[eid]
                    if self.cap[eid] > 0 and level[v] == level[u] + 1:
                        sent = push(v, min(limit, self.cap[eid]))
                        if sent > 0:
                            self.cap[eid] -= sent
                            self.cap[eid ^ 1] += sent
                            return sent
                    cursor[u] += 1
                return 0

            while True:
                sent = push(source, sum(self.cap[eid] for eid in self.adj[source]))
                if sent == 0:
                    break
                total += sent


def _solve_network(net: FlowNetwork) -> tuple[int, int, dict[tuple[int, int], int]]:
    """Returns (flow, total demand, per-edge flow), all in integer units."""
    n_src, n_dst = len(net.supplies), len(net.demands)
    source = n_src + n_dst
    sink = source + 1
    dinic = _Dinic(n_src + n_dst + 2)
    supply_int = [round(s * FLOW_SCALE) for s in net.supplies]
    demand_int = [round(d * FLOW_SCALE) for d in net.demands]
    for i, s in enumerate(supply_int):
        dinic.add_edge(source, i, s)
    for j, d in enumerate(demand_int):
        dinic.add_edge(n_src + j, sink, d)
    edge_ids = {}
    for i, j in net.edges:
        edge_ids[(i, j)] = dinic.add_edge(i, n_src + j, supply_int[i])
    flow = dinic.max_flow(source, sink)
    per_edge = {
        pair: dinic.cap[eid ^ 1] for pair, eid in edge_ids.items() if dinic.cap[eid ^ 1] > 0
    }
    return flow, sum(demand_int), per_edge


def max_flow(net: FlowNetwork) -> float:
    """Exact max-flow value of the network, in mass units."""
    flow, _, _ = _solve_network(net)
    return flow / FLOW_SCALE


def _transport(
    candidate: SpectralDistribution,
    target: SpectralDistribution,
    epsilon: float,
    delta: float,
) -> tuple[bool, int, dict[tuple[int, int], int]]:
    if candidate.metric != target.metric:
        raise MetricMismatch(
            f"candidate uses {candidate.metric}, target uses {target.metric}"
        )
    if not (0 <= delta <= 1):
        raise ValueError("delta must lie in [0, 1]")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    edges = [
        (i, j)
        for i, (qv, _) in enumerate(candidate.points)
        for j, (pv, _) in enumerate(target.points)
        if point_distance(qv, pv, target.metric) <= epsilon + EDGE_DISTANCE_TOL
    ]
    net = FlowNetwork(
        supplies=candidate.weights(),
        demands=[(1.0 - delta) * w for w in target.weights()],
        edges=edges,
    )
    flow, demand_total, per_edge = _solve_network(net)
    feasible = demand_total - flow <= FEASIBILITY_SLACK_UNITS
    return feasible, flow, per_edge


def approx_check(
    inst: ApproxCheckInstance,
) -> tuple[bool, list[tuple[int, int, float]] | None]:
    """Decide (epsilon, delta)-approximation; feasible cases carry a witness.

    The witness is a list of (candidate index, target index, mass) rows that
    fully decompose the candidate weights.  Mass may legitimately sit outside
    every epsilon-ball: only the in-ball rows count toward each target's
    (1 - delta) p_j requirement.
    """
    feasible, _, per_edge = _transport(
        inst.candidate, inst.target, inst.epsilon, inst.delta
    )
    if not feasible:
        return False, None
    witness = [(i, j, units / FLOW_SCALE) for (i, j), units in sorted(per_edge.items())]
    routed = Counter()
    for i, _, mass in witness:
        routed[i] += mass
    for i, (_, qw) in enumerate(inst.candidate.points):
        leftover = qw - routed[i]
        if leftover > 0:
            witness.append((i, 0, leftover))
    return True, witness


def empirical_feasibility(
    samples,
    target: SpectralDistribution,
    epsilon: float,
    delta: float,
    slack: float | None = None,
) -> tuple[bool, float, float]:
    """Transport check of an empirical sample against a target law.

    delta is widened by a fluctuation slack, by default
    EMPIRICAL_SLACK_FACTOR * sqrt(log(#target points) / #samples).
    Returns (feasible, slack used, flow value).
    """
    n = len(samples)
    if n < MIN_EMPIRICAL_SAMPLES:
        raise ValueError(f"need at least {MIN_EMPIRICAL_SAMPLES} samples, got {n}")
    if slack is None:
        slack = EMPIRICAL_SLACK_FACTOR * math.sqrt(
            math.log(max(len(target.points), 2)) / n
        )
    counts = Counter(float(v) for v in samples)
    candidate = make_distribution(
        list(counts.keys()), [c / n for c in counts.values()], target.metric
    )
    feasible, flow, _ = _transport(
        candidate, target, epsilon, min(delta + slack, 1.0)
    )
    return feasible, slack, flow / FLOW_SCALE


def empirical_approx_check(
    samples,
    target: SpectralDistribution,
    epsilon: float,
    delta: float,
    slack: float | None = None,
) -> bool:
    feasible, _, _ = empirical_feasibility(samples, target, epsilon, delta, slack)
    return feasible
