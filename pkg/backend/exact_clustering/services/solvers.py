"""
Exact solvers: exhaustive search and the planar separating-curve recursion.
"""
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import combinations, permutations
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegeneracyError, DimensionError, ParameterError, PreconditionError, UnservableError
from .geometry import IndexedPredicates, Point, Side, circumsphere, cocircular, orientation
from .instances import (
    AnyInstance,
    ClusteringInstance,
    MetricInstance,
    Solution,
    metric_solution_cost,
    solution_cost,
)
from .radical_sum import Ordering, RadicalSum, compare_radical_sums
from .settings import settings

logger = logging.getLogger(__name__)

Cost = Optional[Union[RadicalSum, Fraction]]


@dataclass(frozen=True)
class SeparatingCurve:
    """Closed polygon c1, p1, c2, p2, ..., c_r, p_r through candidates and equidistant points."""

    vertices: Tuple[Point, ...]
    centers: Tuple[int, ...]
    equidistant: Tuple[int, ...]

    def __post_init__(self):
        if len(self.centers) < 2 or len(self.centers) != len(self.equidistant):
            raise PreconditionError("a separating curve alternates at least two centers with equidistant points")
        if len(self.vertices) != 2 * len(self.centers):
            raise PreconditionError("vertex list does not alternate centers and equidistant points")

    @property
    def length(self) -> int:
        return len(self.centers)

    @property
    def key(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(zip(self.centers, self.equidistant))


@dataclass(frozen=True)
class SolveReport:
    solution: Solution
    cost: Union[RadicalSum, Fraction]
    nodes_explored: int = 0
    curves_enumerated: int = 0
    max_curve_length: int = 0
    source: str = "brute"
    perturbed: bool = False

    def to_dict(self) -> Dict:
        cost = self.cost
        return {
            "solution": self.solution.indices,
            "cost": cost.to_pairs() if isinstance(cost, RadicalSum) else str(cost),
            "cost_approx": float(cost),
            "nodes_explored": self.nodes_explored,
            "curves_enumerated": self.curves_enumerated,
            "max_curve_length": self.max_curve_length,
            "source": self.source,
            "perturbed": self.perturbed,
        }


def _is_better(cost: Cost, best: Cost) -> bool:
    if cost is None:
        return False
    if best is None:
        return True
    return compare_radical_sums(RadicalSum.coerce(cost), RadicalSum.coerce(best)) is Ordering.LESS


def _pad(opened: FrozenSet[int], k: int, count: int, forced: FrozenSet[int]) -> FrozenSet[int]:
    """Top up to k centers with the lowest unused indices; cost never increases."""
    padded = set(opened)
    for index in range(count):
        if len(padded) >= k:
            break
        if index not in padded and index not in forced:
            padded.add(index)
    return frozenset(padded)


def curve_length_bound(k: int) -> int:
    """floor(sqrt(4.5 k))"""
    return math.isqrt(9 * k // 2)


def brute_force_solve(inst: AnyInstance, k: int, forced_open: Iterable[int] = frozenset()) -> SolveReport:
    """
    Enumerate every subset of at most k candidates.

    Ties go to the first subset in (size, lexicographic index) order.
    """
    count = len(inst.candidates)
    if k < 0 or k > count:
        raise ParameterError(f"k={k} outside 0..{count}")
    forced = frozenset(forced_open)
    inst.check_indices(forced)
    best_set, best_cost, nodes = None, None, 0
    for size in range(k + 1):
        for subset in combinations(range(count), size):
            opened = frozenset(subset) | forced
            nodes += 1
            if isinstance(inst, MetricInstance):
                if not opened:
                    continue
                cost = metric_solution_cost(inst, Solution(opened))
            else:
                try:
                    cost = inst.distances.cost(sorted(opened))
                except UnservableError:
                    continue
            if _is_better(cost, best_cost):
                best_set, best_cost = frozenset(subset), cost
    if best_set is None:
        raise UnservableError("no subset of candidates serves every client")
    logger.debug(f"Brute force over {count} candidates, k={k}: {nodes} subsets")
    return SolveReport(
        solution=Solution(_pad(best_set, k, count, forced)),
        cost=best_cost,
        nodes_explored=nodes,
        source="brute",
    )


def _equidistant(candidates: Sequence[Point]) -> List[Point]:
    found: Dict[Point, None] = {}
    for a, b, c in combinations(candidates, 3):
        if orientation(a, b, c) == 0:
            continue
        found.setdefault(circumsphere([a, b, c]).center, None)
    return list(found)


def equidistant_points(candidates: Sequence[Point]) -> List[Point]:
    """Circumcenters of all non-collinear candidate triples, deduplicated."""
    if len(candidates) < 3:
        raise PreconditionError(f"need at least 3 candidates, got {len(candidates)}")
    for c in candidates:
        if c.dimension != 2:
            raise DimensionError("equidistant points are planar")
    return _equidistant(candidates)


def _center_cycles(centers: Sequence[int], length: int) -> Iterator[Tuple[int, ...]]:
    # rotation fixed by putting the smallest center first, reflection by c2 < c_last
    for first_position, first in enumerate(centers):
        rest = centers[first_position + 1:]
        for tail in permutations(rest, length - 1):
            if length >= 3 and tail[0] > tail[-1]:
                continue
            yield (first,) + tail


def _curves_for_cycle(pred: IndexedPredicates, cycle: Sequence[int], equidistant: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """Depth-first choice of the equidistant points between consecutive centers."""
    length = len(cycle)
    chosen: List[int] = []
    edges: List[Tuple[int, int]] = []

    def fits(a: int, b: int, closing: bool) -> bool:
        # new edge a->b against the polyline built so far
        if edges and pred.folds_back(edges[-1][0], a, b):
            return False
        last = len(edges) - 1
        for index, (u, v) in enumerate(edges):
            if index == last or (closing and index == 0):
                continue
            if pred.segments_intersect(u, v, a, b):
                return False
        return True

    def extend(position: int) -> Iterator[Tuple[int, ...]]:
        center, following = cycle[position], cycle[(position + 1) % length]
        closing = position == length - 1
        for p in equidistant:
            if p in chosen:
                continue
            if length == 2 and closing and p < chosen[0]:
                continue
            if not fits(center, p, False):
                continue
            edges.append((center, p))
            if fits(p, following, closing) and (not closing or not pred.folds_back(p, following, edges[0][1])):
                edges.append((p, following))
                chosen.append(p)
                if closing:
                    yield tuple(chosen)
                else:
                    yield from extend(position + 1)
                chosen.pop()
                edges.pop()
            edges.pop()

    yield from extend(0)


def _interleave(cycle: Sequence[int], points: Sequence[int]) -> List[int]:
    vertices = []
    for c, p in zip(cycle, points):
        vertices.extend((c, p))
    return vertices


def enumerate_separating_curves(candidates: Sequence[Point], P: Sequence[Point], max_len: int) -> Iterator[SeparatingCurve]:
    """Every simple alternating curve with 2..max_len centers, once per rotation/reflection class."""
    if max_len < 1:
        raise PreconditionError(f"max_len must be at least 1, got {max_len}")
    pred = IndexedPredicates(list(candidates) + list(P))
    center_ids = list(range(len(candidates)))
    point_ids = list(range(len(candidates), len(candidates) + len(P)))
    for length in range(2, min(max_len, len(candidates)) + 1):
        for cycle in _center_cycles(center_ids, length):
            for chosen in _curves_for_cycle(pred, cycle, point_ids):
                vertices = tuple(pred.points[v] for v in _interleave(cycle, chosen))
                yield SeparatingCurve(
                    vertices=vertices,
                    centers=tuple(cycle),
                    equidistant=tuple(p - len(candidates) for p in chosen),
                )


@dataclass
class _Outcome:
    opened: FrozenSet[int]
    cost: Cost
    source: str


class _PlanarSearch:
    """One recursion of the curve-splitting solver with its own memo and counters."""

    def __init__(self, inst: ClusteringInstance, base_k: int):
        self.inst = inst
        self.table = inst.distances
        self.base_k = base_k
        self.memo: Dict[Tuple, _Outcome] = {}
        self.nodes = 0
        self.curves = 0
        self.max_length = 0

    def cost(self, opened: Iterable[int], clients: FrozenSet[int]) -> Cost:
        try:
            return self.table.cost(sorted(opened), clients)
        except UnservableError:
            return None

    def brute(self, cands: FrozenSet[int], clients: FrozenSet[int], k: int, forced: FrozenSet[int]) -> _Outcome:
        best = _Outcome(frozenset(), None, "base")
        ordered = sorted(cands)
        for size in range(min(k, len(ordered)) + 1):
            for subset in combinations(ordered, size):
                cost = self.cost(forced.union(subset), clients)
                if _is_better(cost, best.cost):
                    best = _Outcome(frozenset(subset), cost, "base")
        return best

    def greedy(self, cands: FrozenSet[int], clients: FrozenSet[int], k: int, forced: FrozenSet[int]) -> _Outcome:
        chosen: set = set()
        cost = self.cost(forced, clients)
        for _ in range(min(k, len(cands))):
            step_best, step_cost = None, None
            for c in sorted(cands - chosen):
                trial = self.cost(forced | chosen | {c}, clients)
                if _is_better(trial, step_cost):
                    step_best, step_cost = c, trial
            if step_best is None:
                break
            chosen.add(step_best)
            cost = step_cost
        return _Outcome(frozenset(chosen), cost, "fallback")

    def solve(self, cands: FrozenSet[int], clients: FrozenSet[int], k: int, forced: FrozenSet[int]) -> _Outcome:
        key = (cands, clients, k, forced)
        if key in self.memo:
            return self.memo[key]
        self.nodes += 1
        if not clients:
            outcome = _Outcome(frozenset(), RadicalSum.zero(), "base")
        elif k <= self.base_k or len(cands) <= k:
            outcome = self.brute(cands, clients, k, forced)
        else:
            outcome = self.greedy(cands, clients, k, forced)
            pred, center_ids, point_ids = self.predicates(cands, clients)
            for length, cycle in self.cycles(center_ids, k):
                found = self.evaluate_cycle(pred, point_ids, cands, clients, k, forced, length, cycle)
                if found is not None and _is_better(found.cost, outcome.cost):
                    outcome = found
        self.memo[key] = outcome
        return outcome

    def predicates(self, cands: FrozenSet[int], clients: FrozenSet[int]):
        """Index layout: candidates, then clients, then equidistant points."""
        ordered = sorted(cands)
        candidate_points = [self.inst.candidates[c] for c in ordered]
        client_points = [self.inst.clients[a].location for a in sorted(clients)]
        equidistant = _equidistant(candidate_points)
        pred = IndexedPredicates(candidate_points + client_points + equidistant)
        offset = len(candidate_points) + len(client_points)
        return pred, list(range(len(ordered))), list(range(offset, offset + len(equidistant)))

    @staticmethod
    def cycles(center_ids: List[int], k: int) -> Iterator[Tuple[int, Tuple[int, ...]]]:
        for length in range(2, min(curve_length_bound(k), k, len(center_ids)) + 1):
            if _split_range(k, length):
                for cycle in _center_cycles(center_ids, length):
                    yield length, cycle

    def evaluate_cycle(self, pred: IndexedPredicates, point_ids: List[int], cands: FrozenSet[int],
                       clients: FrozenSet[int], k: int, forced: FrozenSet[int],
                       length: int, cycle: Tuple[int, ...]) -> Optional[_Outcome]:
        ordered_cands = sorted(cands)
        ordered_clients = sorted(clients)
        client_offset = len(ordered_cands)
        curve_centers = frozenset(ordered_cands[i] for i in cycle)
        rest = [i for i in range(len(ordered_cands)) if ordered_cands[i] not in curve_centers]
        splits = _split_range(k, length)
        best: Optional[_Outcome] = None
        seen = set()
        for chosen in _curves_for_cycle(pred, cycle, point_ids):
            self.curves += 1
            self.max_length = max(self.max_length, length)
            polygon = _interleave(cycle, chosen)
            inside_cands, outside_cands = set(), set()
            for i in rest:
                side = pred.locate(polygon, i)
                if side is not Side.OUTSIDE:
                    inside_cands.add(ordered_cands[i])
                if side is not Side.INSIDE:
                    outside_cands.add(ordered_cands[i])
            inside_clients, outside_clients = set(), set()
            for j, a in enumerate(ordered_clients):
                if pred.locate(polygon, client_offset + j) is Side.OUTSIDE:
                    outside_clients.add(a)
                else:
                    inside_clients.add(a)
            signature = (frozenset(inside_cands), frozenset(outside_cands), frozenset(inside_clients))
            if signature in seen:
                continue
            seen.add(signature)
            logger.debug(f"Curve {polygon} splits {len(inside_clients)}/{len(outside_clients)} clients")
            inner_forced = forced | curve_centers
            for k_inside in splits:
                inner = self.solve(frozenset(inside_cands), frozenset(inside_clients), k_inside, inner_forced)
                outer = self.solve(frozenset(outside_cands), frozenset(outside_clients),
                                   k - length - k_inside, inner_forced)
                union = curve_centers | inner.opened | outer.opened
                cost = self.cost(forced | union, clients)
                if _is_better(cost, None if best is None else best.cost):
                    best = _Outcome(union, cost, "curve")
            if k == length:
                # only k'=0 remains: every valid curve opens exactly the curve centers
                break
        return best


def _split_range(k: int, length: int) -> range:
    low = max(0, -(-k // 3) - length)
    high = min(2 * k // 3, k - length)
    return range(low, high + 1)


def exact_planar_solve(inst: ClusteringInstance, k: int, forced_open: Iterable[int] = frozenset(),
                       base_k: Optional[int] = None, jobs: Optional[int] = None) -> SolveReport:
    """
    Separating-curve recursion for planar instances.

    Above the base threshold, every simple curve alternating at most
    floor(sqrt(4.5k)) candidates with equidistant points splits the instance;
    each side is solved recursively with the curve centers forced open, and the
    best split competes with a greedy solution.
    """
    if inst.dimension != 2:
        raise DimensionError(f"planar solver needs dimension 2, got {inst.dimension}")
    count = len(inst.candidates)
    if k < 0 or k > count:
        raise ParameterError(f"k={k} outside 0..{count}")
    forced = frozenset(forced_open)
    inst.check_indices(forced)
    base_k = settings.base_k if base_k is None else base_k
    jobs = settings.jobs if jobs is None else jobs
    cands = frozenset(range(count)) - forced
    clients = frozenset(range(len(inst.clients)))

    search = _PlanarSearch(inst, base_k)
    if jobs <= 1 or k <= base_k or len(cands) <= k:
        outcome = search.solve(cands, clients, k, forced)
        nodes, curves, longest = search.nodes, search.curves, search.max_length
    else:
        outcome, nodes, curves, longest = _parallel_top_level(inst, base_k, jobs, cands, clients, k, forced)

    if outcome.cost is None:
        raise UnservableError("no subset of candidates serves every client")
    solution = Solution(_pad(outcome.opened, k, count, forced))
    cost = solution_cost(inst, solution, forced)
    logger.info(f"Planar solve k={k}: {nodes} nodes, {curves} curves, source={outcome.source}")
    return SolveReport(
        solution=solution,
        cost=cost,
        nodes_explored=nodes,
        curves_enumerated=curves,
        max_curve_length=longest,
        source=outcome.source,
    )


def greedy_solution(inst: ClusteringInstance, k: int, forced_open: Iterable[int] = frozenset()) -> SolveReport:
    """Add the candidate with the largest cost drop, k times. Upper bound only."""
    count = len(inst.candidates)
    if k < 0 or k > count:
        raise ParameterError(f"k={k} outside 0..{count}")
    forced = frozenset(forced_open)
    inst.check_indices(forced)
    search = _PlanarSearch(inst, settings.base_k)
    outcome = search.greedy(frozenset(range(count)) - forced, frozenset(range(len(inst.clients))), k, forced)
    if outcome.cost is None:
        raise UnservableError("greedy selection leaves a client without center or penalty")
    solution = Solution(_pad(outcome.opened, k, count, forced))
    return SolveReport(solution=solution, cost=solution_cost(inst, solution, forced), source="fallback")


def _parallel_top_level(inst: ClusteringInstance, base_k: int, jobs: int, cands: FrozenSet[int],
                        clients: FrozenSet[int], k: int, forced: FrozenSet[int]):
    root = _PlanarSearch(inst, base_k)
    root.nodes = 1
    outcome = root.greedy(cands, clients, k, forced)
    pred, center_ids, point_ids = root.predicates(cands, clients)
    tasks = list(_PlanarSearch.cycles(center_ids, k))
    lock = threading.Lock()
    totals = {"nodes": root.nodes, "curves": 0, "longest": 0}

    def run(task):
        length, cycle = task
        worker = _PlanarSearch(inst, base_k)
        found = worker.evaluate_cycle(pred, point_ids, cands, clients, k, forced, length, cycle)
        with lock:
            totals["nodes"] += worker.nodes
            totals["curves"] += worker.curves
            totals["longest"] = max(totals["longest"], worker.max_length)
        return found

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(run, tasks))
    # merge in enumeration order so the winner does not depend on scheduling
    for found in results:
        if found is not None and _is_better(found.cost, outcome.cost):
            outcome = found
    return outcome, totals["nodes"], totals["curves"], totals["longest"]


def _candidates_degenerate(points: Sequence[Point]) -> bool:
    return any(cocircular(*quad) for quad in combinations(points, 4))


def perturb_if_degenerate(inst: ClusteringInstance, seed: Optional[int] = None) -> Tuple[ClusteringInstance, bool]:
    """Jitter candidates by a tiny seeded rational offset when four of them are cocircular."""
    if inst.dimension != 2:
        raise DimensionError(f"perturbation is planar, got dimension {inst.dimension}")
    if not _candidates_degenerate(inst.candidates):
        return inst, False
    seed = settings.seed if seed is None else seed
    gaps = [
        abs(a[axis] - b[axis])
        for a, b in combinations(inst.candidates, 2)
        for axis in (0, 1)
        if a[axis] != b[axis]
    ]
    gap = min(gaps) if gaps else Fraction(1)
    rng = np.random.default_rng(seed)
    resolution = 1024
    for attempt in range(settings.perturb_retries):
        rho = gap / (4 * resolution * 2 ** attempt)
        offsets = rng.integers(-resolution, resolution + 1, size=(len(inst.candidates), 2))
        moved = [
            Point((p[0] + Fraction(int(dx)) * rho / resolution, p[1] + Fraction(int(dy)) * rho / resolution))
            for p, (dx, dy) in zip(inst.candidates, offsets)
        ]
        if not _candidates_degenerate(moved):
            logger.info(f"Candidates perturbed by at most {rho} after {attempt + 1} attempt(s)")
            return inst.with_candidates(moved), True
        logger.warning(f"Perturbation attempt {attempt + 1} left a cocircular quadruple")
    raise DegeneracyError(f"candidates stay cocircular after {settings.perturb_retries} perturbations")


def solve_planar_resolved(inst: ClusteringInstance, k: int, forced_open: Iterable[int] = frozenset(),
                          base_k: Optional[int] = None, jobs: Optional[int] = None,
                          seed: Optional[int] = None) -> SolveReport:
    """Perturb if needed, solve, then price the chosen centers on the original coordinates."""
    work, perturbed = perturb_if_degenerate(inst, seed)
    report = exact_planar_solve(work, k, forced_open, base_k=base_k, jobs=jobs)
    if not perturbed:
        return report
    return replace(report, cost=solution_cost(inst, report.solution, forced_open), perturbed=True)
