"""
Clustering instances, exact cost evaluation and the JSON instance format.
"""
import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, Field, ValidationError

from .errors import DimensionError, DomainError, MissingThresholdError, ParameterError, UnservableError
from .geometry import SUPPORTED_DIMENSIONS, Point, squared_distance
from .radical_sum import Ordering, RadicalSum, compare_radical_sums

logger = logging.getLogger(__name__)

CostValue = RadicalSum


@dataclass(frozen=True)
class Client:
    location: Point
    weight: int = 1
    penalty: Optional[RadicalSum] = None

    def __post_init__(self):
        if not isinstance(self.weight, int) or self.weight < 1:
            raise DomainError(f"client weight must be a positive integer, got {self.weight!r}")
        if self.penalty is not None:
            penalty = RadicalSum.coerce(self.penalty)
            if penalty <= 0:
                raise DomainError(f"client penalty must be positive, got {penalty}")
            object.__setattr__(self, "penalty", penalty)


@dataclass(frozen=True)
class Solution:
    open: FrozenSet[int]

    @classmethod
    def of(cls, indices: Iterable[int]) -> "Solution":
        return cls(frozenset(indices))

    @property
    def indices(self) -> List[int]:
        return sorted(self.open)


@dataclass(frozen=True)
class ClusteringInstance:
    dimension: int
    power: int
    candidates: Tuple[Point, ...]
    clients: Tuple[Client, ...]
    threshold: Optional[RadicalSum] = None
    meta: Dict[str, Any] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.dimension not in SUPPORTED_DIMENSIONS:
            raise DimensionError(f"unsupported dimension {self.dimension}")
        if not isinstance(self.power, int) or self.power < 1:
            raise DomainError(f"power must be an integer >= 1, got {self.power!r}")
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "clients", tuple(self.clients))
        for p in list(self.candidates) + [c.location for c in self.clients]:
            if p.dimension != self.dimension:
                raise DimensionError(f"point {p} does not have dimension {self.dimension}")
        if self.threshold is not None:
            object.__setattr__(self, "threshold", RadicalSum.coerce(self.threshold))

    @cached_property
    def distances(self) -> "DistanceTable":
        return DistanceTable(self)

    def with_threshold(self, threshold) -> "ClusteringInstance":
        return replace(self, threshold=RadicalSum.coerce(threshold))

    def with_candidates(self, candidates: Sequence[Point]) -> "ClusteringInstance":
        return replace(self, candidates=tuple(candidates))

    def check_indices(self, indices: Iterable[int]):
        for i in indices:
            if not 0 <= i < len(self.candidates):
                raise ParameterError(f"candidate index {i} out of range 0..{len(self.candidates) - 1}")


class DistanceTable:
    """Squared client/candidate distances and which candidates beat each penalty."""

    def __init__(self, instance: ClusteringInstance):
        self.instance = instance
        self.power = instance.power
        self._penalty_squares: Dict[int, Optional[Fraction]] = {}
        # reach[c] lists (client, squared distance) for clients that prefer c to their penalty
        self.reach: List[List[Tuple[int, Fraction]]] = []
        for candidate in instance.candidates:
            row = []
            for a, client in enumerate(instance.clients):
                d2 = squared_distance(candidate, client.location)
                if self._beats_penalty(a, client, d2):
                    row.append((a, d2))
            self.reach.append(row)
        logger.debug(f"Distance table built for {len(instance.candidates)} candidates "
                     f"and {len(instance.clients)} clients")

    def _beats_penalty(self, a: int, client: Client, d2: Fraction) -> bool:
        if client.penalty is None:
            return True
        if client.penalty.is_rational:
            if a not in self._penalty_squares:
                self._penalty_squares[a] = client.penalty.to_rational() ** 2
            return d2 ** self.power < self._penalty_squares[a]
        return compare_radical_sums(power_of_distance(d2, self.power), client.penalty) is Ordering.LESS

    def nearest(self, open_indices: Iterable[int], clients: Optional[Iterable[int]] = None) -> Dict[int, Fraction]:
        allowed = None if clients is None else set(clients)
        best: Dict[int, Fraction] = {}
        for c in open_indices:
            for a, d2 in self.reach[c]:
                if allowed is not None and a not in allowed:
                    continue
                current = best.get(a)
                if current is None or d2 < current:
                    best[a] = d2
        return best

    def cost(self, open_indices: Iterable[int], clients: Optional[Iterable[int]] = None) -> RadicalSum:
        client_indices = range(len(self.instance.clients)) if clients is None else sorted(set(clients))
        best = self.nearest(open_indices, client_indices if clients is not None else None)
        served: Counter = Counter()
        penalized: Counter = Counter()
        for a in client_indices:
            client = self.instance.clients[a]
            d2 = best.get(a)
            if d2 is not None:
                served[d2] += client.weight
            elif client.penalty is None:
                raise UnservableError(f"client {a} at {client.location} has no open center and no penalty")
            else:
                penalized[client.penalty] += client.weight
        total = RadicalSum.from_terms(_power_terms(served, self.power))
        for penalty, weight in penalized.items():
            total = total + penalty * weight
        return total


def _power_terms(served: Counter, power: int):
    for d2, weight in served.items():
        if power % 2:
            yield weight * d2 ** ((power - 1) // 2), d2
        else:
            yield weight * d2 ** (power // 2), 1


def power_of_distance(d2: Fraction, power: int) -> RadicalSum:
    """dist**power given the squared distance."""
    return RadicalSum.from_terms(_power_terms(Counter({d2: 1}), power))


def solution_cost(inst: ClusteringInstance, sol: Solution, forced_open: Iterable[int] = frozenset()) -> CostValue:
    """Sum over clients of weight * min(dist to nearest open center ** p, penalty)."""
    opened = set(sol.open) | set(forced_open)
    inst.check_indices(opened)
    return inst.distances.cost(sorted(opened))


@dataclass(frozen=True)
class MetricInstance:
    matrix: Tuple[Tuple[Fraction, ...], ...]
    candidates: Tuple[int, ...]
    clients: Tuple[int, ...]
    threshold: Optional[Fraction] = None
    meta: Dict[str, Any] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        matrix = tuple(tuple(Fraction(v) for v in row) for row in self.matrix)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "clients", tuple(self.clients))
        if self.threshold is not None:
            object.__setattr__(self, "threshold", Fraction(self.threshold))
        self.validate()

    def validate(self):
        n = len(self.matrix)
        for i, row in enumerate(self.matrix):
            if len(row) != n:
                raise DomainError(f"matrix row {i} has {len(row)} entries, expected {n}")
            if row[i] != 0:
                raise DomainError(f"nonzero diagonal entry at {i}")
            for j, value in enumerate(row):
                if value < 0 or value != self.matrix[j][i]:
                    raise DomainError(f"entry ({i}, {j}) breaks symmetry or nonnegativity")
        for i in range(n):
            for j in range(n):
                for m in range(n):
                    if self.matrix[i][j] > self.matrix[i][m] + self.matrix[m][j]:
                        raise DomainError(f"triangle inequality fails for ({i}, {m}, {j})")
        for index in list(self.candidates) + list(self.clients):
            if not 0 <= index < n:
                raise DomainError(f"point index {index} outside the matrix")

    def check_indices(self, indices: Iterable[int]):
        for i in indices:
            if not 0 <= i < len(self.candidates):
                raise ParameterError(f"candidate index {i} out of range 0..{len(self.candidates) - 1}")

    def with_threshold(self, threshold) -> "MetricInstance":
        return replace(self, threshold=Fraction(threshold))


def metric_solution_cost(inst: MetricInstance, sol: Solution, forced_open: Iterable[int] = frozenset()) -> Fraction:
    opened = sorted(set(sol.open) | set(forced_open))
    if not opened:
        raise ParameterError("metric cost needs at least one open candidate")
    inst.check_indices(opened)
    rows = [inst.matrix[inst.candidates[c]] for c in opened]
    return sum((min(row[a] for row in rows) for a in inst.clients), Fraction(0))


AnyInstance = Union[ClusteringInstance, MetricInstance]


def decide(inst: AnyInstance, k: int, solver: str = "brute", **options) -> bool:
    """True iff some solution with at most k centers costs at most the threshold."""
    from .solvers import brute_force_solve, solve_planar_resolved

    if inst.threshold is None:
        raise MissingThresholdError("instance has no threshold")
    if solver == "brute":
        report = brute_force_solve(inst, k)
    elif solver == "planar":
        report = solve_planar_resolved(inst, k, **options)
    else:
        raise ParameterError(f"unknown solver {solver!r}")
    verdict = compare_radical_sums(RadicalSum.coerce(report.cost), RadicalSum.coerce(inst.threshold))
    return verdict is not Ordering.GREATER


# JSON documents

class ClientDocument(BaseModel):
    coords: List[str]
    weight: int = 1
    penalty: Optional[List[List[str]]] = None


class InstanceDocument(BaseModel):
    dimension: int
    power: int
    candidates: List[List[str]]
    clients: List[ClientDocument]
    threshold: Optional[List[List[str]]] = None
    meta: Dict[str, Any] = Field(default_factory=dict)


class MetricDocument(BaseModel):
    matrix: List[List[str]]
    candidates: List[int]
    clients: List[int]
    threshold: Optional[str] = None
    meta: Dict[str, Any] = Field(default_factory=dict)


def _point_strings(p: Point) -> List[str]:
    return [str(c) for c in p]


def to_document(inst: AnyInstance) -> Union[InstanceDocument, MetricDocument]:
    if isinstance(inst, MetricInstance):
        return MetricDocument(
            matrix=[[str(v) for v in row] for row in inst.matrix],
            candidates=list(inst.candidates),
            clients=list(inst.clients),
            threshold=None if inst.threshold is None else str(inst.threshold),
            meta=inst.meta,
        )
    return InstanceDocument(
        dimension=inst.dimension,
        power=inst.power,
        candidates=[_point_strings(p) for p in inst.candidates],
        clients=[
            ClientDocument(
                coords=_point_strings(c.location),
                weight=c.weight,
                penalty=None if c.penalty is None else c.penalty.to_pairs(),
            )
            for c in inst.clients
        ],
        threshold=None if inst.threshold is None else inst.threshold.to_pairs(),
        meta=inst.meta,
    )


def from_document(document: Union[InstanceDocument, MetricDocument]) -> AnyInstance:
    if isinstance(document, MetricDocument):
        return MetricInstance(
            matrix=tuple(tuple(Fraction(v) for v in row) for row in document.matrix),
            candidates=tuple(document.candidates),
            clients=tuple(document.clients),
            threshold=None if document.threshold is None else Fraction(document.threshold),
            meta=dict(document.meta),
        )
    return ClusteringInstance(
        dimension=document.dimension,
        power=document.power,
        candidates=tuple(Point(tuple(Fraction(v) for v in coords)) for coords in document.candidates),
        clients=tuple(
            Client(
                location=Point(tuple(Fraction(v) for v in c.coords)),
                weight=c.weight,
                penalty=None if c.penalty is None else RadicalSum.from_pairs(c.penalty),
            )
            for c in document.clients
        ),
        threshold=None if document.threshold is None else RadicalSum.from_pairs(document.threshold),
        meta=dict(document.meta),
    )


def dump_instance(inst: AnyInstance) -> str:
    return to_document(inst).model_dump_json(indent=2)


def load_instance(text: str) -> AnyInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DomainError(f"instance is not valid JSON: {e}") from e
    try:
        if isinstance(data, dict) and "matrix" in data:
            return from_document(MetricDocument.model_validate(data))
        return from_document(InstanceDocument.model_validate(data))
    except ValidationError as e:
        raise DomainError(f"malformed instance document: {e}") from e


def read_instance(path: Union[str, Path]) -> AnyInstance:
    return load_instance(Path(path).read_text(encoding="utf-8"))


def write_instance(inst: AnyInstance, path: Union[str, Path]):
    Path(path).write_text(dump_instance(inst) + "\n", encoding="utf-8")
    logger.info(f"Instance written to {path}")
