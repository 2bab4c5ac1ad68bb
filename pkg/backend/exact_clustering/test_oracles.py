#!/usr/bin/env python3
"""
Test script for the source-problem oracles and the verification harness
"""
import sys
import os

import numpy as np
import pytest

# Add the current directory to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from services.errors import DomainError, IndeterminateComparisonError, ParameterError
from services.instances import load_instance
from services.oracles import (
    CaseFamily,
    graph_cases,
    gridtiling_cases,
    random_planar_instance,
    solve_gridtiling,
    solve_gridtiling_inequality,
    solve_pvc,
    verify_descartes,
    verify_reduction,
)
from services.reductions import Graph, GridTilingInstance
from services.solvers import _candidates_degenerate

TRIANGLE = Graph(3, ((1, 2), (1, 3), (2, 3)))


def grid(n, k, cells):
    return GridTilingInstance(n, k, tuple(tuple(frozenset(cell) for cell in row) for row in cells))


def test_partial_vertex_cover():
    assert solve_pvc(TRIANGLE, 1, 2)
    assert not solve_pvc(TRIANGLE, 1, 3)
    assert solve_pvc(TRIANGLE, 2, 3)
    assert solve_pvc(TRIANGLE, 0, 0)
    assert not solve_pvc(Graph(4, ((1, 2), (3, 4))), 1, 2)


def test_grid_tiling_variants():
    staircase = grid(2, 2, [[{(1, 1)}, {(1, 2)}], [{(2, 1)}, {(2, 2)}]])
    assert solve_gridtiling_inequality(staircase)
    assert not solve_gridtiling(staircase)
    flat = grid(2, 2, [[{(1, 1)}, {(1, 1)}], [{(1, 1)}, {(1, 1)}]])
    assert solve_gridtiling_inequality(flat)
    assert solve_gridtiling(flat)
    falling = grid(2, 2, [[{(2, 2)}, {(2, 2)}], [{(1, 1)}, {(2, 2)}]])
    assert not solve_gridtiling_inequality(falling)


def test_grid_tiling_search_uses_every_choice():
    # (1, 2) is tried first in S(1,1) and fails against S(1,2)
    choices = grid(2, 2, [[{(2, 1), (1, 2)}, {(2, 1)}], [{(2, 1)}, {(2, 2)}]])
    assert solve_gridtiling_inequality(choices)
    blocked = grid(2, 2, [[{(2, 2)}, {(1, 1)}], [{(2, 1)}, {(2, 2)}]])
    assert not solve_gridtiling_inequality(blocked)


def test_graph_case_families():
    family = CaseFamily(max_vertices=3)
    assert len(list(graph_cases(family, need_edges=False))) == 7
    assert len(list(graph_cases(family, need_edges=True))) == 4
    connected = CaseFamily(max_vertices=3, connected_only=True)
    assert len(list(graph_cases(connected, need_edges=True))) == 3
    randomized = CaseFamily(max_vertices=2, random_graphs=2, random_vertices=4, seed=3)
    names = [name for name, _ in graph_cases(randomized, need_edges=True)]
    assert names[-2:] == ["random0", "random1"]


def test_gridtiling_case_families():
    assert len(list(gridtiling_cases(CaseFamily(grid_n=2, grid_k=2)))) == 256
    cases = list(gridtiling_cases(CaseFamily(grid_n=1, grid_k=2, random_grids=3)))
    assert len(cases) == 4
    assert all(gt.k == 2 for _, gt in cases)


def test_metric_reduction_matches_the_oracle():
    report = verify_reduction("metric", CaseFamily(max_vertices=3, max_k=2), jobs=1)
    assert report.cases
    assert report.passed
    assert report.mismatches == []


def test_three_dimensional_reduction_matches_the_oracle():
    report = verify_reduction("pvc3d", CaseFamily(max_vertices=3, max_k=1), jobs=2)
    assert report.passed
    assert report.property_checks["certificate"].samples == 4
    assert report.property_checks["certificate"].violations == 0


def test_four_dimensional_reduction_matches_the_oracle():
    report = verify_reduction("pvc4d", CaseFamily(max_vertices=3, max_k=1, connected_only=True), jobs=1)
    assert report.passed
    assert report.property_checks["perturbation"].samples == 1 + 2 + 3
    assert report.property_checks["z_star_opened"].violations == 0


def test_four_dimensional_reduction_on_four_vertices():
    report = verify_reduction("pvc4d", CaseFamily(max_vertices=4, max_k=1, connected_only=True), jobs=1)
    # (m + 1) thresholds per connected graph with edges on at most four vertices
    assert len(report.cases) == 2 + 3 + 4 + (4 + 4 + 5 + 5 + 6 + 7)
    assert report.passed
    assert report.property_checks["certificate"].violations == 0


def test_gridtiling_reduction_matches_the_oracle():
    report = verify_reduction("gridtiling", CaseFamily(grid_n=1, grid_k=2, random_grids=1), jobs=1)
    assert len(report.cases) == 2
    assert report.passed
    assert report.property_checks["bracket"].violations == 0
    sampled = verify_reduction("gridtiling", CaseFamily(grid_n=2, grid_k=2, limit=2), jobs=1)
    assert len(sampled.cases) == 2
    assert sampled.passed


def test_random_grids_can_run_without_singletons():
    family = CaseFamily(grid_n=3, grid_k=2, singletons=False, random_grids=3, seed=4)
    names = [name for name, _ in gridtiling_cases(family)]
    assert names == ["random0", "random1", "random2"]
    report = verify_reduction("gridtiling", CaseFamily(grid_n=1, grid_k=1, singletons=False, random_grids=2), jobs=1)
    assert [case.descriptor for case in report.cases] == ["random0 n=1 k=1", "random1 n=1 k=1"]
    assert report.passed


def test_indeterminate_case_is_reported(monkeypatch):
    def indeterminate(a, b, max_bits=None):
        raise IndeterminateComparisonError(a, b, 64)

    monkeypatch.setattr("services.oracles.compare_radical_sums", indeterminate)
    with pytest.raises(IndeterminateComparisonError) as caught:
        verify_reduction("metric", CaseFamily(max_vertices=2, max_k=1), jobs=1)
    assert caught.value.case.startswith("atlas")
    assert caught.value.case.endswith("k=1 s=0")
    assert load_instance(caught.value.instance).meta["reduction"] == "metric"


def test_unknown_reduction_is_rejected():
    with pytest.raises(ParameterError):
        verify_reduction("pvc5d")


@pytest.mark.parametrize("dim", [3, 4])
def test_moment_curve_sides(dim):
    report = verify_descartes(dim, trials=4, samples_per_interval=3, seed=1)
    assert report.passed
    assert report.property_checks["polynomial_roots"].samples == 4
    assert report.property_checks["side_pattern"].samples == 4 * (dim + 1) * 3
    assert len(report.cases) == 4


def test_moment_curve_sides_other_dimensions():
    with pytest.raises(DomainError):
        verify_descartes(5, trials=1)


def test_random_planar_instances_are_generic():
    rng = np.random.default_rng(17)
    for _ in range(10):
        inst = random_planar_instance(rng, 7, 5, 3, penalties=True)
        assert 3 <= len(inst.candidates) <= 7
        assert 1 <= len(inst.clients) <= 5
        assert not _candidates_degenerate(inst.candidates)
        assert all(client.penalty is not None for client in inst.clients)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
