#!/usr/bin/env python3
"""
Test script for instance validation, cost evaluation and the JSON format
"""
import sys
import os
from fractions import Fraction

import pytest

# Add the current directory to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from services.errors import DimensionError, DomainError, MissingThresholdError, ParameterError, UnservableError
from services.geometry import Point
from services.instances import (
    Client,
    ClusteringInstance,
    MetricInstance,
    Solution,
    decide,
    dump_instance,
    load_instance,
    metric_solution_cost,
    read_instance,
    solution_cost,
    write_instance,
)
from services.radical_sum import RadicalSum


def P(*coords):
    return Point.of(*coords)


def two_clients(power=1, penalty=None):
    clients = (Client(P(0, 0), 1, penalty), Client(P(4, 0), 1, penalty))
    return ClusteringInstance(2, power, (P(0, 0), P(4, 0), P(2, 0)), clients)


def test_median_cost_of_a_middle_center():
    inst = two_clients()
    assert solution_cost(inst, Solution.of([2])) == RadicalSum.rational(4)
    assert solution_cost(inst, Solution.of([0, 1])).is_zero


def test_means_cost_is_rational():
    inst = two_clients(power=2)
    assert solution_cost(inst, Solution.of([2])) == RadicalSum.rational(8)


def test_penalty_caps_the_contribution():
    inst = ClusteringInstance(2, 1, (P(2, 0),), (Client(P(0, 0), 3, RadicalSum.rational(1)),))
    assert solution_cost(inst, Solution.of([0])) == RadicalSum.rational(3)
    assert solution_cost(inst, Solution.of([])) == RadicalSum.rational(3)


def test_irrational_distances_stay_exact():
    inst = ClusteringInstance(2, 1, (P(1, 1),), (Client(P(0, 0), 2), Client(P(2, 0))))
    assert solution_cost(inst, Solution.of([0])) == RadicalSum.from_terms([(3, 2)])


def test_removing_a_penalty_never_lowers_the_cost():
    with_penalty = ClusteringInstance(2, 1, (P(5, 0),), (Client(P(0, 0), 1, RadicalSum.sqrt(7)),))
    without = ClusteringInstance(2, 1, (P(5, 0),), (Client(P(0, 0)),))
    assert solution_cost(with_penalty, Solution.of([0])) <= solution_cost(without, Solution.of([0]))


def test_weights_match_duplicated_clients():
    weighted = ClusteringInstance(2, 1, (P(1, 2),), (Client(P(0, 0), 3),))
    duplicated = ClusteringInstance(2, 1, (P(1, 2),), tuple(Client(P(0, 0)) for _ in range(3)))
    assert solution_cost(weighted, Solution.of([0])) == solution_cost(duplicated, Solution.of([0]))


def test_unservable_and_bad_indices():
    inst = two_clients()
    with pytest.raises(UnservableError):
        solution_cost(inst, Solution.of([]))
    with pytest.raises(ParameterError):
        solution_cost(inst, Solution.of([7]))


def test_validation():
    with pytest.raises(DimensionError):
        ClusteringInstance(2, 1, (P(0, 0, 0),), ())
    with pytest.raises(DomainError):
        ClusteringInstance(2, 0, (P(0, 0),), ())
    with pytest.raises(DomainError):
        Client(P(0, 0), 0)
    with pytest.raises(DomainError):
        Client(P(0, 0), 1, RadicalSum.rational(-1))


def triangle_metric(threshold=None):
    # candidates 0..2 are the vertices of K3, clients 3..5 its edges (1,2), (1,3), (2,3)
    incident = {3: (0, 1), 4: (0, 2), 5: (1, 2)}
    size = 6
    matrix = [[Fraction(0)] * size for _ in range(size)]
    for a in range(size):
        for b in range(size):
            if a == b:
                continue
            if a < 3 and b < 3:
                matrix[a][b] = Fraction(2)
            elif a >= 3 and b >= 3:
                matrix[a][b] = Fraction(2)
            else:
                vertex, edge = (a, b) if a < 3 else (b, a)
                matrix[a][b] = Fraction(1 if vertex in incident[edge] else 3)
    return MetricInstance(tuple(map(tuple, matrix)), (0, 1, 2), (3, 4, 5), threshold)


def test_metric_cost():
    inst = triangle_metric()
    assert metric_solution_cost(inst, Solution.of([0])) == 5
    assert metric_solution_cost(inst, Solution.of([0, 1, 2])) == 3


def test_metric_validation_catches_triangle_violation():
    matrix = ((0, 1, 5), (1, 0, 1), (5, 1, 0))
    with pytest.raises(DomainError):
        MetricInstance(matrix, (0,), (1, 2))
    with pytest.raises(DomainError):
        MetricInstance(((0, 1), (2, 0)), (0,), (1,))


def test_decide():
    inst = two_clients().with_threshold(4)
    assert decide(inst, 1)
    assert not decide(two_clients().with_threshold(Fraction(39, 10)), 1)
    assert decide(triangle_metric(threshold=5), 1)
    with pytest.raises(MissingThresholdError):
        decide(two_clients(), 1)


def test_json_round_trip_is_byte_identical(tmp_path):
    inst = ClusteringInstance(
        3, 1,
        (Point.of(2, 4, 8), Point.of(Fraction(1, 3), 0, 7)),
        (Client(Point.of(1, 1, 1), 4, RadicalSum.sqrt(Fraction(3, 2)) + Fraction(1, 5)),),
        threshold=RadicalSum.sqrt(12),
        meta={"reduction": "manual", "k": 1},
    )
    text = dump_instance(inst)
    assert load_instance(text) == inst
    assert dump_instance(load_instance(text)) == text
    path = tmp_path / "inst.json"
    write_instance(inst, path)
    assert read_instance(path) == inst


def test_metric_json_round_trip():
    inst = triangle_metric(threshold=5)
    text = dump_instance(inst)
    assert '"matrix"' in text
    assert load_instance(text) == inst


def test_malformed_documents():
    with pytest.raises(DomainError):
        load_instance("{not json")
    with pytest.raises(DomainError):
        load_instance('{"dimension": 2}')


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
