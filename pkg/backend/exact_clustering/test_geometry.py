#!/usr/bin/env python3
"""
Test script for exact geometric predicates
"""
import sys
import os
from fractions import Fraction

import numpy as np
import pytest

# Add the current directory to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from services.errors import DimensionError, DomainError, PreconditionError, SingularSystemError
from services.geometry import (
    IndexedPredicates,
    Point,
    Side,
    circumsphere,
    cocircular,
    distance,
    moment_point,
    moment_sphere_polynomial,
    orientation,
    point_vs_polygon,
    polyline_is_simple,
    segments_intersect,
    sign_changes,
    sphere_side,
    squared_distance,
    winding_number,
)
from services.radical_sum import RadicalSum


def P(*coords):
    return Point.of(*coords)


def test_points_are_exact():
    assert moment_point(2, 3) == P(2, 4, 8)
    assert moment_point(Fraction(1, 2), 2) == P(Fraction(1, 2), Fraction(1, 4))
    assert P("1/3", 2).coords == (Fraction(1, 3), Fraction(2))
    with pytest.raises(DomainError):
        P(0.5, 1)
    with pytest.raises(DimensionError):
        P(1)
    with pytest.raises(DomainError):
        moment_point(0, 3)


def test_distance_is_a_radical():
    assert squared_distance(P(0, 0), P(3, 4)) == 25
    assert distance(P(0, 0), P(1, 1)) == RadicalSum.sqrt(2)
    with pytest.raises(DimensionError):
        squared_distance(P(0, 0), P(0, 0, 0))


def test_circumsphere_of_moment_points_is_equidistant():
    points = [moment_point(t, 3) for t in (2, 3, 4, 5)]
    sphere = circumsphere(points)
    assert all(squared_distance(sphere.center, p) == sphere.squared_radius for p in points)


def test_circumsphere_random_inputs_have_zero_residual():
    rng = np.random.default_rng(11)
    for _ in range(60):
        dim = int(rng.integers(2, 5))
        points = [Point(tuple(Fraction(int(rng.integers(-50, 51)), int(rng.integers(1, 8))) for _ in range(dim)))
                  for _ in range(dim + 1)]
        try:
            sphere = circumsphere(points)
        except SingularSystemError:
            continue
        for p in points:
            assert squared_distance(sphere.center, p) == sphere.squared_radius


def test_circumsphere_rejects_bad_input():
    with pytest.raises(SingularSystemError):
        circumsphere([P(0, 0), P(1, 1), P(2, 2)])
    with pytest.raises(DimensionError):
        circumsphere([P(0, 0), P(1, 0)])


def test_moment_sphere_sides_in_four_dimensions():
    sphere = circumsphere([moment_point(t, 4) for t in (1, 2, 3, 4, 5)])
    assert sphere_side(sphere, moment_point(Fraction(5, 2), 4)) is Side.INSIDE
    assert sphere_side(sphere, moment_point(Fraction(3, 2), 4)) is Side.OUTSIDE
    assert sphere_side(sphere, moment_point(Fraction(7, 2), 4)) is Side.OUTSIDE
    assert sphere_side(sphere, moment_point(Fraction(9, 2), 4)) is Side.INSIDE
    assert sphere_side(sphere, moment_point(6, 4)) is Side.OUTSIDE
    assert sphere_side(sphere, moment_point(3, 4)) is Side.ON


def test_moment_sphere_sides_in_three_dimensions():
    sphere = circumsphere([moment_point(t, 3) for t in (1, 2, 3, 4)])
    assert sphere_side(sphere, moment_point(Fraction(1, 2), 3)) is Side.OUTSIDE
    assert sphere_side(sphere, moment_point(Fraction(3, 2), 3)) is Side.INSIDE
    assert sphere_side(sphere, moment_point(Fraction(5, 2), 3)) is Side.OUTSIDE
    assert sphere_side(sphere, moment_point(Fraction(7, 2), 3)) is Side.INSIDE
    assert sphere_side(sphere, moment_point(5, 3)) is Side.OUTSIDE


def test_moment_sphere_polynomial_pattern():
    ts = (1, 2, 3, 4, 5)
    sphere = circumsphere([moment_point(t, 4) for t in ts])
    a, b, c, d = sphere.center
    coeffs = moment_sphere_polynomial(sphere)
    assert coeffs[:8] == [1, 0, 1, 0, 1 - 2 * d, -2 * c, 1 - 2 * b, -2 * a]
    degree = len(coeffs) - 1
    for t in ts:
        assert sum(coef * Fraction(t) ** (degree - i) for i, coef in enumerate(coeffs)) == 0
    assert sign_changes(coeffs) >= len(ts)


def test_sign_changes_skips_zeros():
    assert sign_changes([1, 0, -1, 0, 1]) == 2
    assert sign_changes([1, 2, 3]) == 0


def test_orientation_and_segments():
    assert orientation(P(0, 0), P(1, 0), P(0, 1)) == 1
    assert orientation(P(0, 0), P(0, 1), P(1, 0)) == -1
    assert orientation(P(0, 0), P(1, 1), P(2, 2)) == 0
    assert segments_intersect(P(0, 0), P(2, 2), P(0, 2), P(2, 0))
    assert segments_intersect(P(0, 0), P(1, 0), P(1, 0), P(2, 5))
    assert not segments_intersect(P(0, 0), P(1, 0), P(0, 1), P(1, 1))
    assert segments_intersect(P(0, 0), P(2, 0), P(1, 0), P(3, 0))


def test_cocircular():
    assert cocircular(P(0, 0), P(1, 0), P(0, 1), P(1, 1))
    assert not cocircular(P(0, 0), P(2, 0), P(0, 2), P(3, 3))
    assert cocircular(P(0, 0), P(1, 1), P(2, 2), P(3, 3))


SQUARE = [P(0, 0), P(4, 0), P(4, 4), P(0, 4)]


def test_point_vs_polygon():
    assert point_vs_polygon(SQUARE, P(2, 2)) is Side.INSIDE
    assert point_vs_polygon(SQUARE, P(4, 2)) is Side.ON
    assert point_vs_polygon(SQUARE, P(0, 0)) is Side.ON
    assert point_vs_polygon(SQUARE, P(5, 5)) is Side.OUTSIDE
    assert point_vs_polygon(SQUARE, P(-1, 2)) is Side.OUTSIDE


def test_non_simple_polygons_are_rejected():
    bowtie = [P(0, 0), P(2, 2), P(2, 0), P(0, 2)]
    assert not polyline_is_simple(bowtie)
    with pytest.raises(PreconditionError):
        point_vs_polygon(bowtie, P(1, 1))
    with pytest.raises(PreconditionError):
        polyline_is_simple([P(0, 0), P(1, 0)])
    assert not polyline_is_simple([P(0, 0), P(2, 0), P(1, 0)])


def test_classification_agrees_with_winding_number():
    rng = np.random.default_rng(3)
    polygon = [P(0, 0), P(6, 0), P(6, 6), P(3, 2), P(0, 6)]
    assert polyline_is_simple(polygon)
    for _ in range(200):
        p = P(int(rng.integers(-1, 8)), int(rng.integers(-1, 8)))
        side = point_vs_polygon(polygon, p)
        if side is Side.ON:
            continue
        assert (winding_number(polygon, p) != 0) == (side is Side.INSIDE)


def test_indexed_predicates_match_plain_ones():
    points = SQUARE + [P(2, 2), P(4, 2), P(5, 5), P(2, 0)]
    pred = IndexedPredicates(points)
    cycle = [0, 1, 2, 3]
    assert pred.locate(cycle, 4) is Side.INSIDE
    assert pred.locate(cycle, 5) is Side.ON
    assert pred.locate(cycle, 6) is Side.OUTSIDE
    assert pred.locate(cycle, 7) is Side.ON
    assert pred.orient(0, 1, 2) == orientation(points[0], points[1], points[2])
    assert pred.orient(2, 1, 0) == -pred.orient(0, 1, 2)
    assert pred.segments_intersect(0, 2, 1, 3)
    assert pred.folds_back(0, 7, 1) is False
    assert pred.folds_back(0, 1, 7)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
