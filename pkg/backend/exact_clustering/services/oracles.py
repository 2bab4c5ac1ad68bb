"""
Source-problem oracles and the verification harness that checks each reduction
end to end on families of small instances.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel

from .errors import DomainError, IndeterminateComparisonError, ParameterError
from .geometry import Point, Side, circumsphere, moment_point, moment_sphere_polynomial, sign_changes, sphere_side
from .instances import Client, ClusteringInstance, decide, dump_instance
from .radical_sum import Ordering, RadicalSum, compare_radical_sums
from .reductions import (
    Graph,
    GridTilingInstance,
    check_certificate,
    check_grid_geometry,
    check_perturbed_center,
    reduce_gridtiling_2d,
    reduce_pvc_3d_penalties,
    reduce_pvc_4d,
    reduce_pvc_metric,
)
from .settings import settings
from .solvers import _candidates_degenerate, brute_force_solve, solve_planar_resolved

logger = logging.getLogger(__name__)

REDUCTION_KINDS = ("metric", "pvc3d", "pvc4d", "gridtiling")


def solve_pvc(graph: Graph, k: int, s: int) -> bool:
    """Can k vertices cover at least s edges?"""
    if s <= 0:
        return True
    k = min(max(k, 0), graph.n)
    for chosen in combinations(range(1, graph.n + 1), k):
        picked = set(chosen)
        covered = sum(1 for i, j in graph.edges if i in picked or j in picked)
        if covered >= s:
            return True
    return False


def _tilings(gt: GridTilingInstance, fits: Callable[[int, int], bool]) -> Optional[Dict[Tuple[int, int], Tuple[int, int]]]:
    """Depth-first search over cells in row-major order; fits compares neighbor coordinates."""
    cells = [(i, j) for i in range(1, gt.k + 1) for j in range(1, gt.k + 1)]
    chosen: Dict[Tuple[int, int], Tuple[int, int]] = {}

    def place(position: int) -> bool:
        if position == len(cells):
            return True
        i, j = cells[position]
        for u, v in sorted(gt.cell(i, j)):
            if i > 1 and not fits(chosen[(i - 1, j)][0], u):
                continue
            if j > 1 and not fits(chosen[(i, j - 1)][1], v):
                continue
            chosen[(i, j)] = (u, v)
            if place(position + 1):
                return True
            del chosen[(i, j)]
        return False

    return dict(chosen) if place(0) else None


def solve_gridtiling_inequality(gt: GridTilingInstance) -> bool:
    """First coordinates non-decreasing along i, second coordinates non-decreasing along j."""
    return _tilings(gt, lambda before, after: before <= after) is not None


def solve_gridtiling(gt: GridTilingInstance) -> bool:
    """Equality variant: first coordinates agree along i, second coordinates agree along j."""
    return _tilings(gt, lambda before, after: before == after) is not None


class CaseFamily(BaseModel):
    max_vertices: int = 5
    max_k: int = 2
    connected_only: bool = False
    random_graphs: int = 0
    random_vertices: int = 6
    edge_probability: float = 0.5
    grid_n: int = 2
    grid_k: int = 2
    singletons: bool = True
    random_grids: int = 0
    max_set_size: int = 2
    limit: Optional[int] = None
    seed: int = 0


class CaseRecord(BaseModel):
    descriptor: str
    source_answer: bool
    reduced_answer: bool
    match: bool


class CheckTally(BaseModel):
    samples: int = 0
    violations: int = 0


class VerificationReport(BaseModel):
    kind: str
    cases: List[CaseRecord] = []
    property_checks: Dict[str, CheckTally] = {}
    ties: int = 0
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(case.match for case in self.cases) and all(
            tally.violations == 0 for tally in self.property_checks.values()
        )

    @property
    def mismatches(self) -> List[CaseRecord]:
        return [case for case in self.cases if not case.match]

    def tally(self, name: str, ok: bool):
        entry = self.property_checks.setdefault(name, CheckTally())
        entry.samples += 1
        if not ok:
            entry.violations += 1


def graph_cases(family: CaseFamily, need_edges: bool) -> Iterator[Tuple[str, Graph]]:
    """Atlas graphs up to max_vertices, then seeded random graphs."""
    for index, atlas_graph in enumerate(nx.graph_atlas_g()):
        if atlas_graph.number_of_nodes() == 0 or atlas_graph.number_of_nodes() > family.max_vertices:
            continue
        if family.connected_only and not nx.is_connected(atlas_graph):
            continue
        if need_edges and atlas_graph.number_of_edges() == 0:
            continue
        yield f"atlas{index}", Graph.from_networkx(atlas_graph)
    rng = np.random.default_rng(family.seed)
    made = 0
    while made < family.random_graphs:
        n = family.random_vertices
        edges = tuple(
            (i, j) for i, j in combinations(range(1, n + 1), 2) if rng.random() < family.edge_probability
        )
        if need_edges and not edges:
            continue
        yield f"random{made}", Graph(n, edges)
        made += 1


def gridtiling_cases(family: CaseFamily) -> Iterator[Tuple[str, GridTilingInstance]]:
    """Every singleton-set instance for (grid_n, grid_k) unless disabled, then seeded random instances."""
    n, k = family.grid_n, family.grid_k
    pairs = [(u, v) for u in range(1, n + 1) for v in range(1, n + 1)]
    if family.singletons:
        for index, picks in enumerate(product(pairs, repeat=k * k)):
            rows = tuple(tuple(frozenset([picks[(i * k) + j]]) for j in range(k)) for i in range(k))
            yield f"singleton{index}", GridTilingInstance(n, k, rows)
    rng = np.random.default_rng(family.seed)
    for index in range(family.random_grids):
        rows = []
        for _ in range(k):
            row = []
            for _ in range(k):
                size = int(rng.integers(1, family.max_set_size + 1))
                chosen = rng.choice(len(pairs), size=min(size, len(pairs)), replace=False)
                row.append(frozenset(pairs[int(c)] for c in chosen))
            rows.append(tuple(row))
        yield f"random{index}", GridTilingInstance(n, k, tuple(rows))


def _limited(cases: Iterable, limit: Optional[int]) -> Iterator:
    for index, case in enumerate(cases):
        if limit is not None and index >= limit:
            return
        yield case


def _optimum(inst, k: int, cache: Dict, key) -> RadicalSum:
    if key not in cache:
        cache[key] = RadicalSum.coerce(brute_force_solve(inst, k).cost)
    return cache[key]


def _abort_case(error: IndeterminateComparisonError, descriptor: str, inst) -> IndeterminateComparisonError:
    error.case = descriptor
    error.instance = None if inst is None else dump_instance(inst)
    logger.error(f"Aborting on {descriptor}: {error}")
    return error


def _verify_graph_case(kind: str, name: str, graph: Graph, family: CaseFamily, report: VerificationReport):
    # optimum depends on (graph, k) only; the threshold carries s
    optima: Dict = {}
    for k in range(1, min(family.max_k, graph.n) + 1):
        for s in range(0, graph.m + 1):
            descriptor = f"{name} n={graph.n} m={graph.m} k={k} s={s}"
            inst = None
            try:
                expected = solve_pvc(graph, k, s)
                if kind == "metric":
                    inst, k_out, nu = reduce_pvc_metric(graph, k, s)
                    cert = None
                elif kind == "pvc3d":
                    inst, k_out, nu, cert = reduce_pvc_3d_penalties(graph, k, s)
                else:
                    inst, k_out, nu, cert = reduce_pvc_4d(graph, k, s)
                optimum = _optimum(inst, k_out, optima, k_out)
                verdict = compare_radical_sums(optimum, RadicalSum.rational(nu))
                if verdict is Ordering.EQUAL:
                    report.ties += 1
                answer = verdict is not Ordering.GREATER
                report.cases.append(CaseRecord(
                    descriptor=descriptor, source_answer=expected, reduced_answer=answer, match=expected == answer,
                ))
                if cert is None:
                    continue
                if s == 0:
                    report.tally("certificate", not check_certificate(cert))
                if kind == "pvc4d":
                    if s == 0:
                        candidates = inst.candidates
                        epsilon = cert.epsilon.to_rational()
                        for record in cert.records:
                            report.tally("perturbation",
                                         not check_perturbed_center(record, candidates, epsilon, graph.m))
                    if expected:
                        forced = brute_force_solve(inst, k_out - 1, forced_open={0})
                        report.tally("z_star_opened",
                                     compare_radical_sums(RadicalSum.coerce(forced.cost), optimum) is Ordering.EQUAL)
            except IndeterminateComparisonError as e:
                raise _abort_case(e, descriptor, inst)


def _verify_grid_case(name: str, gt: GridTilingInstance, report: VerificationReport):
    descriptor = f"{name} n={gt.n} k={gt.k}"
    inst = None
    try:
        expected = solve_gridtiling_inequality(gt)
        inst, k_out, nu = reduce_gridtiling_2d(gt)
        report.tally("geometry", not check_grid_geometry(inst, gt))
        low = RadicalSum.from_pairs(inst.meta["nu_low"])
        high = RadicalSum.from_pairs(inst.meta["nu_high"])
        report.tally("bracket", compare_radical_sums(low, high) is Ordering.LESS)
        answer = decide(inst, k_out)
    except IndeterminateComparisonError as e:
        raise _abort_case(e, descriptor, inst)
    report.cases.append(CaseRecord(
        descriptor=descriptor, source_answer=expected, reduced_answer=answer, match=expected == answer,
    ))


def verify_reduction(kind: str, family: Optional[CaseFamily] = None, jobs: Optional[int] = None) -> VerificationReport:
    """Run the source oracle and the reduced decision on every case and compare."""
    if kind not in REDUCTION_KINDS:
        raise ParameterError(f"unknown reduction {kind!r}; expected one of {', '.join(REDUCTION_KINDS)}")
    family = family or CaseFamily()
    jobs = jobs or settings.jobs
    started = time.perf_counter()
    if kind == "gridtiling":
        cases = list(_limited(gridtiling_cases(family), family.limit))
    else:
        cases = list(_limited(graph_cases(family, need_edges=kind != "metric"), family.limit))

    def work(case) -> VerificationReport:
        name, source = case
        partial = VerificationReport(kind=kind)
        if kind == "gridtiling":
            _verify_grid_case(name, source, partial)
        else:
            _verify_graph_case(kind, name, source, family, partial)
        return partial

    logger.info(f"Verifying {kind} on {len(cases)} source instances with {jobs} job(s)")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            partials = list(pool.map(work, cases))
    else:
        partials = [work(case) for case in cases]
    report = VerificationReport(kind=kind)
    for partial in partials:
        _merge(report, partial)
    report.wall_time = time.perf_counter() - started
    logger.info(f"{kind}: {len(report.cases)} cases, {len(report.mismatches)} mismatches, {report.ties} ties")
    return report


def _merge(into: VerificationReport, other: VerificationReport):
    into.cases.extend(other.cases)
    into.ties += other.ties
    for name, tally in other.property_checks.items():
        entry = into.property_checks.setdefault(name, CheckTally())
        entry.samples += tally.samples
        entry.violations += tally.violations


# Moment-curve sphere sign pattern

def _expected_sides(dim: int) -> List[Side]:
    # interval (t_a, t_{a+1}) for a = 1..dim, then the tail past t_{dim+1}
    if dim == 4:
        return [Side.OUTSIDE, Side.INSIDE, Side.OUTSIDE, Side.INSIDE, Side.OUTSIDE]
    return [Side.INSIDE, Side.OUTSIDE, Side.INSIDE, Side.OUTSIDE]


def _random_rational(rng: np.random.Generator) -> Fraction:
    return Fraction(int(rng.integers(1, 10 ** 4 + 1)), int(rng.integers(1, 10 ** 4 + 1)))


def _sample_between(rng: np.random.Generator, lo: Fraction, hi: Fraction) -> Fraction:
    resolution = 10 ** 4
    return lo + (hi - lo) * Fraction(int(rng.integers(1, resolution + 1)), resolution + 1)


def verify_descartes(dim: int, trials: int, samples_per_interval: int = 5, seed: Optional[int] = None) -> VerificationReport:
    """
    Random spheres through dim+1 moment-curve points with parameters in (0, 100):
    every sampled curve point must fall on the predicted side.
    """
    if dim not in (3, 4):
        raise DomainError(f"moment-curve pattern is checked in dimensions 3 and 4, got {dim}")
    rng = np.random.default_rng(settings.seed if seed is None else seed)
    started = time.perf_counter()
    report = VerificationReport(kind=f"descartes{dim}")
    sides = _expected_sides(dim)
    for trial in range(trials):
        values = set()
        while len(values) < dim + 1:
            t = _random_rational(rng)
            if t < 100:
                values.add(t)
        ts = sorted(values)
        sphere = circumsphere([moment_point(t, dim) for t in ts])
        coefficients = moment_sphere_polynomial(sphere)
        roots_vanish = all(
            sum((c * t ** (len(coefficients) - 1 - power) for power, c in enumerate(coefficients)), Fraction(0)) == 0
            for t in ts
        )
        report.tally("polynomial_roots", roots_vanish and sign_changes(coefficients) >= dim + 1)
        bounds = list(zip(ts, ts[1:])) + [(ts[-1], 2 * ts[-1])]
        mismatched = False
        for (lo, hi), side in zip(bounds, sides):
            for _ in range(samples_per_interval):
                t = _sample_between(rng, lo, hi)
                observed = sphere_side(sphere, moment_point(t, dim))
                ok = observed is side
                report.tally("side_pattern", ok)
                mismatched = mismatched or not ok
        report.cases.append(CaseRecord(
            descriptor=f"trial{trial} t=({', '.join(str(t) for t in ts)})",
            source_answer=True, reduced_answer=not mismatched, match=not mismatched,
        ))
    report.wall_time = time.perf_counter() - started
    return report


# Planar solver against exhaustive search

def random_planar_instance(rng: np.random.Generator, max_candidates: int, max_clients: int, k: int,
                           power: int = 1, penalties: bool = False, coordinate_range: int = 100) -> ClusteringInstance:
    """Integer coordinates in [0, coordinate_range]; candidate sets with a cocircular quadruple are redrawn."""
    while True:
        count = int(rng.integers(max(k, 1), max_candidates + 1))
        candidates = [tuple(int(x) for x in rng.integers(0, coordinate_range + 1, size=2)) for _ in range(count)]
        points = [Point.of(*p) for p in candidates]
        if not _candidates_degenerate(points):
            break
    clients = []
    for _ in range(int(rng.integers(1, max_clients + 1))):
        location = Point.of(*(int(x) for x in rng.integers(0, coordinate_range + 1, size=2)))
        weight = int(rng.integers(1, 4))
        penalty = RadicalSum.rational(int(rng.integers(1, coordinate_range + 1))) if penalties else None
        clients.append(Client(location, weight, penalty))
    return ClusteringInstance(2, power, tuple(points), tuple(clients))


@dataclass
class _EquivalenceCase:
    name: str
    inst: ClusteringInstance
    k: int


def verify_oracle_equivalence(instances: int, max_candidates: int = 8, max_clients: int = 10, k: int = 3,
                              seed: Optional[int] = None, jobs: Optional[int] = None) -> VerificationReport:
    """The planar recursion and exhaustive search must agree on the optimal cost."""
    rng = np.random.default_rng(settings.seed if seed is None else seed)
    started = time.perf_counter()
    cases = []
    for index in range(instances):
        power = 1 + index % 2
        penalties = (index // 2) % 2 == 1
        inst = random_planar_instance(rng, max_candidates, max_clients, k, power, penalties)
        cases.append(_EquivalenceCase(f"random{index} p={power} penalties={penalties}", inst, min(k, len(inst.candidates))))

    def run(case: _EquivalenceCase) -> CaseRecord:
        exhaustive = brute_force_solve(case.inst, case.k)
        planar = solve_planar_resolved(case.inst, case.k, jobs=1)
        same = compare_radical_sums(RadicalSum.coerce(exhaustive.cost), RadicalSum.coerce(planar.cost)) is Ordering.EQUAL
        if not same:
            logger.error(f"{case.name}: exhaustive {exhaustive.cost} vs planar {planar.cost}")
        return CaseRecord(descriptor=f"{case.name} k={case.k} via {planar.source}",
                          source_answer=True, reduced_answer=same, match=same)

    jobs = jobs or settings.jobs
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run, cases))
    else:
        records = [run(case) for case in cases]
    report = VerificationReport(kind="oracle-equivalence", cases=records)
    report.wall_time = time.perf_counter() - started
    return report
