#!/usr/bin/env python3
"""
Test script for the hardness-instance generators
"""
import sys
import os
import json
from fractions import Fraction

import networkx as nx
import pytest

# Add the current directory to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from services.errors import DomainError, InfeasiblePerturbationError, InstanceSizeError, ParameterError
from services.geometry import Point, circumsphere, moment_point, squared_distance
from services.instances import decide, dump_instance, load_instance
from services.radical_sum import Ordering, RadicalSum, compare_radical_sums
from services.reductions import (
    Z_STAR,
    Graph,
    GridTilingInstance,
    certificate_to_json,
    check_certificate,
    check_grid_geometry,
    check_perturbed_center,
    grid_candidates,
    perturb_center,
    perturbation_reach,
    read_graph,
    reduce_gridtiling_2d,
    reduce_pvc_3d_penalties,
    reduce_pvc_4d,
    reduce_pvc_metric,
    replication_counts,
)

EDGE = Graph(2, ((1, 2),))
TRIANGLE = Graph(3, ((1, 2), (1, 3), (2, 3)))


def grid(n, k, cells):
    return GridTilingInstance(n, k, tuple(tuple(frozenset(cell) for cell in row) for row in cells))


def test_edge_list_parsing(tmp_path):
    graph = Graph.from_edge_list("3 2\n# path\n2 1\n2 3\n")
    assert graph.n == 3
    assert graph.edges == ((1, 2), (2, 3))
    assert Graph.from_edge_list(graph.to_edge_list()) == graph
    path = tmp_path / "path.txt"
    path.write_text(graph.to_edge_list())
    assert read_graph(path) == graph


@pytest.mark.parametrize("text", [
    "",
    "3 2\n1 2\n",
    "2 1\n1 1\n",
    "2 2\n1 2\n2 1\n",
    "2 1\n1 3\n",
    "2 1\nx y\n",
])
def test_edge_list_errors(text):
    with pytest.raises(DomainError):
        Graph.from_edge_list(text)


def test_networkx_conversion_relabels_from_one():
    graph = Graph.from_networkx(nx.path_graph(3))
    assert graph == Graph(3, ((1, 2), (2, 3)))
    assert sorted(graph.to_networkx().edges()) == [(1, 2), (2, 3)]


def test_metric_reduction_on_a_triangle():
    inst, k, nu = reduce_pvc_metric(TRIANGLE, 1, 2)
    assert k == 1
    assert nu == 5
    assert len(inst.candidates) == 3 and len(inst.clients) == 3
    assert inst.matrix[0][3] == 1 and inst.matrix[2][3] == 3
    assert decide(inst, k)
    _, _, tight = reduce_pvc_metric(TRIANGLE, 1, 3)
    assert tight == 3
    assert not decide(inst.with_threshold(tight), 1)
    assert inst.meta["reduction"] == "metric"


def test_metric_reduction_parameter_checks():
    with pytest.raises(ParameterError):
        reduce_pvc_metric(TRIANGLE, 1, 4)
    with pytest.raises(ParameterError):
        reduce_pvc_metric(TRIANGLE, 5, 1)


def test_replication_counts():
    n_q, counts, mu = replication_counts([Fraction(4), Fraction(1)], Fraction(1, 2))
    assert n_q == 2
    assert counts == [2, 4]
    assert mu == RadicalSum.rational(4)
    n_q, counts, _ = replication_counts([Fraction(3)] * 3, Fraction(1, 10))
    assert n_q == 10
    assert counts == [10, 10, 10]
    with pytest.raises(DomainError):
        replication_counts([Fraction(1)], Fraction(0))


def test_three_dimensional_single_edge_layout():
    inst, k, nu, cert = reduce_pvc_3d_penalties(EDGE, 1, 1)
    assert inst.candidates == (moment_point(2, 3), moment_point(4, 3))
    sphere = circumsphere([moment_point(t, 3) for t in (2, 3, 4, 5)])
    assert inst.clients[0].location == sphere.center
    assert cert.records[0].squared_radius == sphere.squared_radius
    assert cert.extra["theta"] == "1/2"
    assert check_certificate(cert) == []
    assert decide(inst, k)


def test_three_dimensional_triangle_decisions():
    yes, k, _, cert = reduce_pvc_3d_penalties(TRIANGLE, 1, 2)
    assert check_certificate(cert) == []
    assert compare_radical_sums(cert.nu_low, RadicalSum.rational(cert.nu)) is Ordering.LESS
    assert compare_radical_sums(RadicalSum.rational(cert.nu), cert.nu_high) is Ordering.LESS
    assert decide(yes, k)
    no, k, _, _ = reduce_pvc_3d_penalties(TRIANGLE, 1, 3)
    assert not decide(no, k)
    for client, record in zip(yes.clients, cert.records):
        assert client.weight == record.multiplicity
        assert compare_radical_sums(client.penalty, record.penalty) is Ordering.EQUAL
    assert type(cert.n_q) is int
    assert all(type(record.multiplicity) is int for record in cert.records)


def test_three_dimensional_needs_an_edge():
    with pytest.raises(ParameterError):
        reduce_pvc_3d_penalties(Graph(3, ()), 1, 0)


def test_perturb_center_without_epsilon_is_identity():
    v_i, v_j = moment_point(2, 4), moment_point(4, 4)
    sphere = circumsphere([Z_STAR, v_i, moment_point(3, 4), v_j, moment_point(5, 4)])
    moved = perturb_center(sphere.center, v_i, v_j, Z_STAR, [], 0)
    assert moved.center == sphere.center
    assert moved.squared_radius == sphere.squared_radius
    with pytest.raises(DomainError):
        perturb_center(sphere.center, v_i, v_j, Z_STAR, [], Fraction(-1, 4))


def test_perturbed_center_lands_in_the_band():
    v_i, v_j = moment_point(2, 4), moment_point(4, 4)
    sphere = circumsphere([Z_STAR, v_i, moment_point(3, 4), v_j, moment_point(5, 4)])
    reach = perturbation_reach(sphere.center, v_i, v_j, Z_STAR, [])
    assert 0 < reach < Fraction(1, 100)
    epsilon = reach / 8
    moved = perturb_center(sphere.center, v_i, v_j, Z_STAR, [], epsilon)
    assert squared_distance(moved.center, v_i) == squared_distance(moved.center, v_j)
    assert moved.center != sphere.center
    ratio = squared_distance(moved.center, Z_STAR) / moved.squared_radius
    assert (1 + epsilon) ** 2 <= ratio <= (1 + epsilon * Fraction(5, 4)) ** 2
    with pytest.raises(InfeasiblePerturbationError):
        perturb_center(sphere.center, v_i, v_j, Z_STAR, [], Fraction(1, 4))


def test_four_dimensional_single_edge():
    inst, k, nu, cert = reduce_pvc_4d(EDGE, 1, 1)
    assert k == 2
    assert inst.candidates[0] == Z_STAR
    assert inst.candidates[1] == moment_point(2, 4)
    assert inst.clients[-1].location == Z_STAR
    assert inst.clients[-1].weight == cert.extra["z_star_weight"]
    assert check_certificate(cert) == []
    epsilon = cert.epsilon.to_rational()
    for record in cert.records:
        assert check_perturbed_center(record, inst.candidates, epsilon, EDGE.m) == []
    assert decide(inst, k)
    empty, k0, _, _ = reduce_pvc_4d(EDGE, 0, 1)
    assert k0 == 1
    assert not decide(empty, k0)


def test_four_dimensional_path():
    path = Graph(3, ((1, 2), (2, 3)))
    inst, k, _, cert = reduce_pvc_4d(path, 1, 2)
    assert check_certificate(cert) == []
    assert decide(inst, k)
    inst, k, _, _ = reduce_pvc_4d(Graph(4, ((1, 2), (3, 4))), 1, 2)
    assert not decide(inst, k)


def test_four_dimensional_path_on_four_vertices():
    graph = Graph(4, ((1, 2), (1, 4), (2, 3)))
    inst, k, _, cert = reduce_pvc_4d(graph, 1, 1)
    assert check_certificate(cert) == []
    assert decide(inst, k)
    inst, k, _, _ = reduce_pvc_4d(graph, 1, 2)
    assert decide(inst, k)
    inst, k, _, _ = reduce_pvc_4d(graph, 1, 3)
    assert not decide(inst, k)


def test_certificate_json_is_parseable():
    _, _, _, cert = reduce_pvc_3d_penalties(EDGE, 1, 1)
    document = json.loads(certificate_to_json(cert))
    assert document["kind"] == "pvc3d"
    assert document["edges"][0]["edge"] == [1, 2]


def test_gridtiling_document_round_trip(tmp_path):
    gt = grid(2, 2, [[{(1, 2), (2, 2)}, {(1, 1)}], [{(2, 1)}, {(1, 2)}]])
    assert GridTilingInstance.from_json(gt.to_json()) == gt
    with pytest.raises(DomainError):
        GridTilingInstance.from_json('{"n": 2}')
    with pytest.raises(DomainError):
        grid(2, 1, [[set()]])
    with pytest.raises(DomainError):
        grid(2, 1, [[{(3, 1)}]])


def test_grid_candidates_sit_in_their_cells():
    gt = grid(2, 2, [[{(2, 2)}, {(1, 1)}], [{(1, 1)}, {(2, 1)}]])
    placed = grid_candidates(gt)
    assert placed[0][:4] == (1, 1, 2, 2)
    assert placed[0][4] == Point.of(Fraction(9, 8), Fraction(9, 8))
    assert placed[3][4].coords == (Fraction(25, 8), Fraction(3))


def test_gridtiling_single_cell_is_yes():
    inst, k, nu = reduce_gridtiling_2d(grid(1, 1, [[{(1, 1)}]]))
    assert k == 1
    assert len(inst.clients) == 4
    assert check_grid_geometry(inst, grid(1, 1, [[{(1, 1)}]])) == []
    assert 8 < nu * nu and nu < 4
    assert decide(inst, k)


def test_gridtiling_yes_and_no():
    yes_gt = grid(2, 2, [[{(1, 1)}, {(1, 1)}], [{(1, 1)}, {(1, 1)}]])
    yes, k, _ = reduce_gridtiling_2d(yes_gt)
    assert len(yes.clients) == 33 * 33
    assert check_grid_geometry(yes, yes_gt) == []
    assert decide(yes, k)

    no_gt = grid(2, 2, [[{(2, 2)}, {(2, 2)}], [{(1, 1)}, {(2, 2)}]])
    no, k, _ = reduce_gridtiling_2d(no_gt)
    assert check_grid_geometry(no, no_gt) == []
    low = RadicalSum.from_pairs(no.meta["nu_low"])
    high = RadicalSum.from_pairs(no.meta["nu_high"])
    assert compare_radical_sums(low, high) is Ordering.LESS
    assert not decide(no, k)


def test_gridtiling_instance_survives_json():
    gt = grid(1, 1, [[{(1, 1)}]])
    inst, _, _ = reduce_gridtiling_2d(gt)
    assert load_instance(dump_instance(inst)) == inst


def test_gridtiling_respects_the_client_cap():
    gt = grid(2, 2, [[{(1, 1)}, {(1, 1)}], [{(1, 1)}, {(1, 1)}]])
    with pytest.raises(InstanceSizeError):
        reduce_gridtiling_2d(gt, client_cap=100)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
