"""
Hardness-instance generators: metric and moment-curve constructions from Partial
Vertex Cover, and the planar construction from Grid Tiling with inequalities.
"""
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import ceil, isqrt
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple, Union

import networkx as nx
from pydantic import BaseModel, ValidationError

from .errors import DomainError, InfeasiblePerturbationError, InstanceSizeError, ParameterError
from .geometry import Point, Sphere, circumsphere, moment_point, squared_distance
from .instances import Client, ClusteringInstance, MetricInstance
from .radical_sum import (
    Ordering,
    RadicalSum,
    ceil_sqrt_ratio,
    compare_radical_sums,
    enclosure,
    exact_fraction,
    lower_rational,
    rational_between,
)
from .settings import settings

logger = logging.getLogger(__name__)

Z_STAR = moment_point(1, 4)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 1..n."""

    n: int
    edges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 0:
            raise DomainError(f"vertex count must be nonnegative, got {self.n}")
        normalized = set()
        for i, j in self.edges:
            if i == j:
                raise DomainError(f"self-loop at vertex {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise DomainError(f"edge ({i}, {j}) outside vertices 1..{self.n}")
            edge = (min(i, j), max(i, j))
            if edge in normalized:
                raise DomainError(f"duplicate edge {edge}")
            normalized.add(edge)
        object.__setattr__(self, "edges", tuple(sorted(normalized)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @classmethod
    def from_edge_list(cls, text: str) -> "Graph":
        lines = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
        if not lines or len(lines[0]) != 2:
            raise DomainError("edge list must start with a 'n m' header")
        try:
            n, m = int(lines[0][0]), int(lines[0][1])
            edges = [(int(a), int(b)) for a, b in lines[1:]]
        except ValueError as e:
            raise DomainError(f"malformed edge list: {e}") from e
        if len(edges) != m:
            raise DomainError(f"header announces {m} edges, found {len(edges)}")
        return cls(n, tuple(edges))

    def to_edge_list(self) -> str:
        rows = [f"{self.n} {self.m}"] + [f"{i} {j}" for i, j in self.edges]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "Graph":
        labels = {node: index for index, node in enumerate(sorted(graph.nodes()), start=1)}
        return cls(len(labels), tuple((labels[u], labels[v]) for u, v in graph.edges()))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(1, self.n + 1))
        graph.add_edges_from(self.edges)
        return graph


def read_graph(path: Union[str, Path]) -> Graph:
    return Graph.from_edge_list(Path(path).read_text(encoding="utf-8"))


class GridTilingDocument(BaseModel):
    n: int
    k: int
    sets: List[List[List[List[int]]]]


@dataclass(frozen=True)
class GridTilingInstance:
    """k x k cells; sets[i-1][j-1] holds the admissible pairs (u, v) of cell (i, j)."""

    n: int
    k: int
    sets: Tuple[Tuple[FrozenSet[Tuple[int, int]], ...], ...]

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise DomainError(f"grid tiling needs n, k >= 1, got n={self.n}, k={self.k}")
        rows = tuple(tuple(frozenset(tuple(pair) for pair in cell) for cell in row) for row in self.sets)
        if len(rows) != self.k or any(len(row) != self.k for row in rows):
            raise DomainError(f"expected a {self.k}x{self.k} array of sets")
        for i, row in enumerate(rows, start=1):
            for j, cell in enumerate(row, start=1):
                if not cell:
                    raise DomainError(f"set S({i},{j}) is empty")
                for u, v in cell:
                    if not (1 <= u <= self.n and 1 <= v <= self.n):
                        raise DomainError(f"pair ({u},{v}) in S({i},{j}) outside [{self.n}]x[{self.n}]")
        object.__setattr__(self, "sets", rows)

    def cell(self, i: int, j: int) -> FrozenSet[Tuple[int, int]]:
        return self.sets[i - 1][j - 1]

    def to_json(self) -> str:
        document = GridTilingDocument(
            n=self.n,
            k=self.k,
            sets=[[[list(pair) for pair in sorted(cell)] for cell in row] for row in self.sets],
        )
        return document.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GridTilingInstance":
        try:
            document = GridTilingDocument.model_validate_json(text)
        except ValidationError as e:
            raise DomainError(f"malformed grid tiling document: {e}") from e
        return cls(document.n, document.k, tuple(tuple(frozenset(tuple(p) for p in cell) for cell in row)
                                                 for row in document.sets))


def read_gridtiling(path: Union[str, Path]) -> GridTilingInstance:
    return GridTilingInstance.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class EdgeRecord:
    edge: Tuple[int, int]
    center: Point
    squared_radius: Fraction
    multiplicity: int
    penalty: Optional[RadicalSum] = None
    epsilon_band: Optional[Tuple[Fraction, Fraction]] = None


@dataclass(frozen=True)
class ReductionCertificate:
    kind: str
    records: Tuple[EdgeRecord, ...]
    epsilon: RadicalSum
    delta: Fraction
    mu: RadicalSum
    n_q: int
    nu: Fraction
    nu_low: RadicalSum
    nu_high: RadicalSum
    k: int
    s: int
    extra: Dict[str, Any] = field(default_factory=dict, hash=False)


def _pairs(value: RadicalSum) -> List[List[str]]:
    return value.to_pairs()


def _certificate_meta(cert: ReductionCertificate) -> Dict[str, Any]:
    return {
        "epsilon": _pairs(cert.epsilon),
        "delta": str(cert.delta),
        "mu": _pairs(cert.mu),
        "n_q": cert.n_q,
        "nu": str(cert.nu),
        "nu_low": _pairs(cert.nu_low),
        "nu_high": _pairs(cert.nu_high),
        "edges": [
            {
                "edge": list(r.edge),
                "center": [str(c) for c in r.center],
                "squared_radius": str(r.squared_radius),
                "multiplicity": r.multiplicity,
            }
            for r in cert.records
        ],
        **cert.extra,
    }


def _check_pvc_parameters(graph: Graph, k: int, s: int, need_edges: bool):
    if need_edges and graph.m == 0:
        raise ParameterError("the construction needs at least one edge")
    if not 0 <= s <= graph.m:
        raise ParameterError(f"s={s} outside 0..{graph.m}")
    if not 0 <= k <= graph.n:
        raise ParameterError(f"k={k} outside 0..{graph.n}")


def reduce_pvc_metric(graph: Graph, k: int, s: int) -> Tuple[MetricInstance, int, Fraction]:
    """One candidate per vertex, one client per edge, distances 1 (incident) or 3, closed under shortest paths."""
    _check_pvc_parameters(graph, k, s, need_edges=False)
    n, m = graph.n, graph.m
    layout = nx.Graph()
    layout.add_nodes_from(range(n + m))
    for e, (u, v) in enumerate(graph.edges):
        for z in range(1, n + 1):
            layout.add_edge(z - 1, n + e, weight=1 if z in (u, v) else 3)
    lengths = dict(nx.all_pairs_dijkstra_path_length(layout, weight="weight"))
    size = n + m
    matrix = tuple(
        tuple(Fraction(lengths[a].get(b, 0 if a == b else 3 * size)) for b in range(size))
        for a in range(size)
    )
    nu = Fraction(s + 3 * (m - s))
    meta = {"reduction": "metric", "n": n, "m": m, "k": k, "s": s, "edges": [list(e) for e in graph.edges]}
    inst = MetricInstance(matrix, tuple(range(n)), tuple(range(n, n + m)), nu, meta)
    return inst, k, nu


def replication_counts(squared_radii: Sequence[Fraction], delta: Fraction) -> Tuple[int, List[int], RadicalSum]:
    """
    n_q = ceil(1/delta) copies at the largest radius r_q; every other edge gets
    the smallest count n with n * r >= n_q * r_q.
    """
    if delta <= 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if not squared_radii or min(squared_radii) <= 0:
        raise DomainError("squared radii must be positive")
    inverse = 1 / exact_fraction(delta)
    n_q = int(ceil(inverse))
    largest = max(squared_radii)
    counts = [ceil_sqrt_ratio(n_q * n_q * largest, radius) for radius in squared_radii]
    mu = RadicalSum.sqrt(largest) * n_q
    return n_q, counts, mu


def check_certificate(cert: ReductionCertificate) -> List[str]:
    """Violations of mu <= n*r <= (1+delta)*mu, compared on squares."""
    mu_squared = (cert.mu * cert.mu).to_rational()
    upper = (1 + cert.delta) ** 2 * mu_squared
    problems = []
    for record in cert.records:
        value = record.multiplicity ** 2 * record.squared_radius
        if value < mu_squared or value > upper:
            problems.append(f"edge {record.edge}: n^2 r^2 = {value} outside [{mu_squared}, {upper}]")
    return problems


def _relative_margin(center: Point, squared_radius: Fraction, other: Point) -> RadicalSum:
    # d(c, v) / r - 1
    return RadicalSum.sqrt(squared_distance(center, other) / squared_radius) - 1


@lru_cache(maxsize=256)
def _pvc3d_layout(graph: Graph):
    spheres = []
    for i, j in graph.edges:
        points = [moment_point(2 * i, 3), moment_point(2 * i + 1, 3), moment_point(2 * j, 3), moment_point(2 * j + 1, 3)]
        spheres.append(circumsphere(points))
    candidates = [moment_point(2 * v, 3) for v in range(1, graph.n + 1)]
    smallest: Optional[RadicalSum] = None
    for (i, j), sphere in zip(graph.edges, spheres):
        for v in range(1, graph.n + 1):
            if v in (i, j):
                continue
            margin = _relative_margin(sphere.center, sphere.squared_radius, candidates[v - 1])
            if smallest is None or compare_radical_sums(margin, smallest) is Ordering.LESS:
                smallest = margin
    if smallest is None:
        theta = Fraction(1, 2)
    else:
        theta = min(Fraction(1, 2), lower_rational(smallest) / 2)
    m = graph.m
    delta = theta / (2 * m * (1 + theta))
    n_q, counts, mu = replication_counts([sp.squared_radius for sp in spheres], delta)
    return candidates, spheres, theta, delta, n_q, counts, mu


def reduce_pvc_3d_penalties(graph: Graph, k: int, s: int) -> Tuple[ClusteringInstance, int, Fraction, ReductionCertificate]:
    """
    Candidates at (2i, (2i)^2, (2i)^3); one weighted client per edge at the center
    of the sphere through both endpoints and their dummy points at 2i+1.

    The penalty r_ij + epsilon/n_ij with epsilon = theta*mu keeps every
    non-adjacent candidate out of reach.
    """
    _check_pvc_parameters(graph, k, s, need_edges=True)
    candidates, spheres, theta, delta, n_q, counts, mu = _pvc3d_layout(graph)
    m = graph.m
    epsilon = mu * theta
    records, clients = [], []
    for edge, sphere, count in zip(graph.edges, spheres, counts):
        penalty = sphere.radius + epsilon / count
        records.append(EdgeRecord(edge, sphere.center, sphere.squared_radius, count, penalty))
        clients.append(Client(sphere.center, count, penalty))
    yes_upper = mu * ((1 + delta) * m + (m - s) * theta)
    no_lower = mu * (m + (m - s + 1) * theta)
    nu = rational_between(yes_upper, no_lower)
    cert = ReductionCertificate(
        kind="pvc3d", records=tuple(records), epsilon=epsilon, delta=delta, mu=mu, n_q=n_q,
        nu=nu, nu_low=yes_upper, nu_high=no_lower, k=k, s=s, extra={"theta": str(theta)},
    )
    meta = {"reduction": "pvc3d", "n": graph.n, "m": m, "k": k, "s": s, **_certificate_meta(cert)}
    inst = ClusteringInstance(3, 1, tuple(candidates), tuple(clients), RadicalSum.rational(nu), meta)
    logger.info(f"3D penalties instance: {graph.n} candidates, {m} clients, nu={nu}")
    return inst, k, nu, cert


class PerturbedCenter(NamedTuple):
    center: Point
    squared_radius: Fraction
    achieved: Tuple[Fraction, Fraction]


def _bisector_direction(v_i: Point, v_j: Point, z: Point) -> Point:
    normal = v_j - v_i
    away = v_i - z
    # project (v_i - z) onto the hyperplane orthogonal to the bisector normal
    direction = away - normal.scaled(away.dot(normal) / normal.dot(normal))
    if direction.dot(direction) == 0:
        raise InfeasiblePerturbationError("no direction inside the bisector hyperplane moves away from z")
    return direction


def _sqrt_floor(value: Fraction, scale_bits: int = 32) -> Fraction:
    scale = 1 << scale_bits
    return Fraction(isqrt(value.numerator * scale * scale // value.denominator), scale)


def _peak_step(c: Point, v_i: Point, direction: Point) -> Fraction:
    """Rational step t <= r / |d|; the ratio d(c + t d, z)^2 / d(c + t d, v_i)^2 increases up to r / |d|."""
    step = _sqrt_floor(squared_distance(c, v_i) / direction.dot(direction))
    if step == 0:
        raise InfeasiblePerturbationError("circumradius too small against the perturbation direction")
    return step


def perturbation_reach(c: Point, v_i: Point, v_j: Point, z: Point, others: Sequence[Point]) -> Fraction:
    """
    Excess d(c', z)^2 / r'^2 - 1 reachable along the bisector direction while
    every other candidate stays at least as far from c' as z.
    """
    direction = _bisector_direction(v_i, v_j, z)
    t = _peak_step(c, v_i, direction)
    for _ in range(settings.perturb_iterations):
        moved = c + direction.scaled(t)
        radius = squared_distance(moved, v_i)
        to_z = squared_distance(moved, z)
        if to_z > radius and all(squared_distance(moved, other) >= to_z for other in others):
            return to_z / radius - 1
        t /= 2
    raise InfeasiblePerturbationError("every step along the bisector brings another candidate closer than z")


def perturb_center(c: Point, v_i: Point, v_j: Point, z: Point, others: Sequence[Point],
                   epsilon_target: Fraction, edge_count: int = 1) -> PerturbedCenter:
    """
    Slide c inside the bisector hyperplane of v_i, v_j until d(c', z) / r'
    lies in [1 + eps, 1 + eps(1 + 1/(4m))], where r' = d(c', v_i).

    c must be equidistant from v_i, v_j and z.
    """
    epsilon_target = Fraction(epsilon_target)
    base_radius = squared_distance(c, v_i)
    if epsilon_target == 0:
        return PerturbedCenter(c, base_radius, (Fraction(0), Fraction(0)))
    if epsilon_target < 0:
        raise DomainError(f"epsilon must be nonnegative, got {epsilon_target}")
    direction = _bisector_direction(v_i, v_j, z)
    low_target = (1 + epsilon_target) ** 2
    high_target = (1 + epsilon_target * (1 + Fraction(1, 4 * edge_count))) ** 2

    def ratio(t: Fraction) -> Fraction:
        moved = c + direction.scaled(t)
        return squared_distance(moved, z) / squared_distance(moved, v_i)

    lo, hi = Fraction(0), _peak_step(c, v_i, direction)
    if ratio(hi) < low_target:
        raise InfeasiblePerturbationError(f"ratio never reaches (1+{epsilon_target})^2")
    iterations = 0
    t = hi
    while not low_target <= ratio(t) <= high_target:
        if ratio(t) < low_target:
            lo = t
        else:
            hi = t
        t = (lo + hi) / 2
        iterations += 1
        if iterations > settings.perturb_iterations:
            raise InfeasiblePerturbationError(f"bisection did not land in the band for eps={epsilon_target}")
    moved = c + direction.scaled(t)
    radius = squared_distance(moved, v_i)
    if squared_distance(moved, v_j) != radius:
        raise InfeasiblePerturbationError("perturbed center left the bisector hyperplane")
    for other in others:
        if squared_distance(moved, other) < low_target * radius:
            raise InfeasiblePerturbationError(f"candidate {other} falls inside the enlarged ball")
    achieved = RadicalSum.sqrt(ratio(t)) - 1
    return PerturbedCenter(moved, radius, enclosure(achieved, settings.precision_start_bits))


def check_perturbed_center(record: EdgeRecord, candidates: Sequence[Point], epsilon: Fraction, edge_count: int) -> List[str]:
    """The three perturbation guarantees, re-checked with exact squared comparisons."""
    i, j = record.edge
    v_i, v_j = candidates[i], candidates[j]
    r2 = record.squared_radius
    problems = []
    if squared_distance(record.center, v_i) != r2 or squared_distance(record.center, v_j) != r2:
        problems.append(f"edge {record.edge}: not equidistant from its endpoints")
    low = (1 + epsilon) ** 2 * r2
    high = (1 + epsilon * (1 + Fraction(1, 4 * edge_count))) ** 2 * r2
    if not low <= squared_distance(record.center, Z_STAR) <= high:
        problems.append(f"edge {record.edge}: z* outside the distance band")
    for v in range(1, len(candidates)):
        if v not in (i, j) and squared_distance(record.center, candidates[v]) < low:
            problems.append(f"edge {record.edge}: candidate {v} inside the enlarged ball")
    return problems


@lru_cache(maxsize=256)
def _pvc4d_layout(graph: Graph):
    # index 0 is z*, index v is the vertex v
    candidates = [Z_STAR] + [moment_point(2 * v, 4) for v in range(1, graph.n + 1)]
    spheres: List[Sphere] = []
    for i, j in graph.edges:
        spheres.append(circumsphere([Z_STAR, candidates[i], moment_point(2 * i + 1, 4),
                                     candidates[j], moment_point(2 * j + 1, 4)]))
    epsilon = Fraction(1, 4)
    for (i, j), sphere in zip(graph.edges, spheres):
        others = [candidates[v] for v in range(1, graph.n + 1) if v not in (i, j)]
        for other in others:
            gap = squared_distance(sphere.center, other) / sphere.squared_radius - 1
            epsilon = min(epsilon, gap / 8)
        # (1 + eps(1 + 1/4m))^2 - 1 <= 8 eps for eps <= 1
        reach = perturbation_reach(sphere.center, candidates[i], candidates[j], Z_STAR, others)
        epsilon = min(epsilon, reach / 8)
    m = graph.m
    for attempt in range(settings.perturb_retries):
        try:
            perturbed = []
            for (i, j), sphere in zip(graph.edges, spheres):
                others = [candidates[v] for v in range(1, graph.n + 1) if v not in (i, j)]
                perturbed.append(perturb_center(sphere.center, candidates[i], candidates[j], Z_STAR,
                                                others, epsilon, m))
            return candidates, spheres, perturbed, epsilon
        except InfeasiblePerturbationError as e:
            logger.warning(f"Perturbation failed at eps={epsilon} ({e}); halving")
            epsilon /= 2
    raise InfeasiblePerturbationError(f"no feasible perturbation after {settings.perturb_retries} attempts")


def reduce_pvc_4d(graph: Graph, k: int, s: int) -> Tuple[ClusteringInstance, int, Fraction, ReductionCertificate]:
    """
    Candidates z* = (1,1,1,1) and (2i, ..., (2i)^4); one client per edge at the
    perturbed center c'_ij, plus ceil(m * mu) clients at z* so that any good
    solution opens z*.
    """
    _check_pvc_parameters(graph, k, s, need_edges=True)
    candidates, spheres, perturbed, epsilon = _pvc4d_layout(graph)
    m = graph.m
    delta = epsilon / (2 * m * (1 + epsilon))
    n_q, counts, mu = replication_counts([p.squared_radius for p in perturbed], delta)
    largest = max(p.squared_radius for p in perturbed)
    z_weight = ceil_sqrt_ratio(m * m * n_q * n_q * largest, 1)
    records, clients = [], []
    for edge, p, count in zip(graph.edges, perturbed, counts):
        records.append(EdgeRecord(edge, p.center, p.squared_radius, count, None, p.achieved))
        clients.append(Client(p.center, count))
    clients.append(Client(Z_STAR, z_weight))
    band_top = epsilon * (1 + Fraction(1, 4 * m))
    yes_upper = mu * ((1 + delta) * (s + (m - s) * (1 + band_top)))
    no_lower = mu * (m + (m - s + 1) * epsilon)
    nu = rational_between(yes_upper, no_lower)
    cert = ReductionCertificate(
        kind="pvc4d", records=tuple(records), epsilon=RadicalSum.rational(epsilon), delta=delta, mu=mu,
        n_q=n_q, nu=nu, nu_low=yes_upper, nu_high=no_lower, k=k + 1, s=s,
        extra={"z_star_weight": z_weight, "source_k": k},
    )
    meta = {"reduction": "pvc4d", "n": graph.n, "m": m, "k": k, "s": s, **_certificate_meta(cert)}
    inst = ClusteringInstance(4, 1, tuple(candidates), tuple(clients), RadicalSum.rational(nu), meta)
    logger.info(f"4D instance: {len(candidates)} candidates, z* weight {z_weight}, nu={nu}")
    return inst, k + 1, nu, cert


# Grid tiling

def _half_step_offsets(n: int) -> Counter:
    """
    Client offsets from a candidate, in units of eps/2: odd (X, Y) with
    X^2 + Y^2 < (2/eps)^2. Counted by the value X^2 + Y^2.
    """
    limit = 4 * n ** 6
    reach = 2 * n ** 3
    counts: Counter = Counter()
    for x in range(-reach + 1, reach, 2):
        for y in range(-reach + 1, reach, 2):
            norm = x * x + y * y
            if norm < limit:
                counts[norm] += 1
    return counts


def _savings(norms: Counter, eps: Fraction) -> RadicalSum:
    # sum of (1 - dist) over the clients a disk serves; dist = (eps/2) * sqrt(norm)
    total = RadicalSum.rational(sum(norms.values()))
    return total - RadicalSum.from_terms((weight * eps / 2, norm) for norm, weight in norms.items())


def _pair_norms(n: int, dx: int, dy: int) -> Counter:
    """Nearest-center norms over the union of two disks whose centers differ by (dx, dy) eps."""
    limit = 4 * n ** 6
    reach = 2 * n ** 3
    best: Dict[Tuple[int, int], int] = {}
    for x in range(-reach + 1, reach, 2):
        for y in range(-reach + 1, reach, 2):
            norm = x * x + y * y
            if norm >= limit:
                continue
            for point in ((x, y), (x + 2 * dx, y + 2 * dy)):
                if point not in best or norm < best[point]:
                    best[point] = norm
    return Counter(best.values())


def grid_candidates(gt: GridTilingInstance) -> List[Tuple[int, int, int, int, Point]]:
    eps = Fraction(1, gt.n ** 3)
    found = []
    for i in range(1, gt.k + 1):
        for j in range(1, gt.k + 1):
            for u, v in sorted(gt.cell(i, j)):
                found.append((i, j, u, v, Point.of(2 * i - 1 + eps * (u - 1), 2 * j - 1 + eps * (v - 1))))
    return found


def grid_threshold_bracket(gt: GridTilingInstance, candidates: Sequence[Point]) -> Tuple[RadicalSum, RadicalSum, int]:
    """(disjoint-disk cost, lower bound for any overlapping or incomplete solution, client count)."""
    n, k = gt.n, gt.k
    eps = Fraction(1, n ** 3)
    per_side = 2 * k * n ** 3 + n - 1
    total = RadicalSum.rational(per_side * per_side)
    single = _savings(_half_step_offsets(n), eps)
    disjoint = total - single * (k * k)
    lower = total - single * (k * k - 1)
    if k * k >= 2:
        offsets = set()
        for a, b in combinations(candidates, 2):
            if squared_distance(a, b) < 4:
                dx, dy = (a[0] - b[0]) / eps, (a[1] - b[1]) / eps
                offsets.add(max((int(dx), int(dy)), (int(-dx), int(-dy))))
        best_pair: Optional[RadicalSum] = None
        for dx, dy in sorted(offsets):
            pair = _savings(_pair_norms(n, dx, dy), eps)
            if best_pair is None or compare_radical_sums(pair, best_pair) is Ordering.GREATER:
                best_pair = pair
        if best_pair is not None:
            overlapping = total - single * (k * k - 2) - best_pair
            if compare_radical_sums(overlapping, lower) is Ordering.LESS:
                lower = overlapping
    return disjoint, lower, per_side * per_side


def check_grid_geometry(inst: ClusteringInstance, gt: GridTilingInstance) -> List[str]:
    """Unit disks stay inside the client square; candidates of non-neighboring cells are >= 2 apart."""
    eps = Fraction(1, gt.n ** 3)
    side = 2 * gt.k + eps * (gt.n - 1)
    cells = inst.meta.get("cells", [])
    problems = []
    for index, p in enumerate(inst.candidates):
        if not (p[0] - 1 >= 0 and p[1] - 1 >= 0 and p[0] + 1 <= side and p[1] + 1 <= side):
            problems.append(f"candidate {index} at {p}: unit disk leaves the client square")
    for a, b in combinations(range(len(inst.candidates)), 2):
        (i1, j1), (i2, j2) = cells[a][:2], cells[b][:2]
        if abs(i1 - i2) + abs(j1 - j2) >= 2 and squared_distance(inst.candidates[a], inst.candidates[b]) < 4:
            problems.append(f"candidates {a} and {b} from non-neighboring cells are closer than 2")
    return problems


def reduce_gridtiling_2d(gt: GridTilingInstance, client_cap: Optional[int] = None) -> Tuple[ClusteringInstance, int, Fraction]:
    """
    Unit-penalty clients on the eps-lattice (eps = 1/n^3) shifted by eps/2, so
    no client sits at distance exactly 1 from a candidate and every pair of
    overlapping unit disks shares a client strictly inside both.
    """
    n, k = gt.n, gt.k
    cap = settings.grid_client_cap if client_cap is None else client_cap
    eps = Fraction(1, n ** 3)
    per_side = 2 * k * n ** 3 + n - 1
    if per_side * per_side > cap:
        raise InstanceSizeError(per_side * per_side, cap)
    placed = grid_candidates(gt)
    candidates = [p for *_, p in placed]
    disjoint, overlapping, _ = grid_threshold_bracket(gt, candidates)
    nu = rational_between(disjoint, overlapping)
    one = RadicalSum.rational(1)
    coordinates = [eps * a + eps / 2 for a in range(per_side)]
    clients = [Client(Point.of(x, y), 1, one) for x in coordinates for y in coordinates]
    meta = {
        "reduction": "gridtiling",
        "n": n,
        "k": k,
        "epsilon": str(eps),
        "nu": str(nu),
        "nu_low": _pairs(disjoint),
        "nu_high": _pairs(overlapping),
        "nu_low_approx": float(disjoint),
        "nu_high_approx": float(overlapping),
        "cells": [[i, j, u, v] for i, j, u, v, _ in placed],
        "ties": 0,
    }
    inst = ClusteringInstance(2, 1, tuple(candidates), tuple(clients), RadicalSum.rational(nu), meta)
    logger.info(f"Grid tiling instance: {len(candidates)} candidates, {len(clients)} clients, nu={nu}")
    return inst, k * k, nu


def certificate_to_json(cert: ReductionCertificate) -> str:
    return json.dumps({"kind": cert.kind, "k": cert.k, "s": cert.s, **_certificate_meta(cert)}, indent=2)
