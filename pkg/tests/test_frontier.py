from __future__ import annotations

import numpy as np
import pytest

from conftest import random_case
from lced.fixtures import toy_a, toy_b, toy_c
from lced.frontier import FrontierPoint, check_dominance, exact_frontier, scan_frontier
from lced.nash import disagreement_points

TOY_B_NORMS = (5000.0, 100.0)


def test_toy_a_scan_is_one_point():
    pts = scan_frontier(toy_a(), [0.0, 0.5, 1.0])
    assert [(p.cost, p.emissions) for p in pts] == [(500.0, 50.0)] * 3


def test_toy_b_scan():
    pts = scan_frontier(toy_b(), [0.75, 0.25], TOY_B_NORMS)
    assert [p.lam for p in pts] == [0.25, 0.75]
    assert (pts[0].cost, pts[0].emissions) == pytest.approx((5000.0, 20.0))
    assert (pts[1].cost, pts[1].emissions) == pytest.approx((1000.0, 100.0))


def test_scan_rejects_bad_weight():
    with pytest.raises(ValueError):
        scan_frontier(toy_a(), [1.2])


def test_exact_toy_a():
    fr = exact_frontier(toy_a())
    assert fr.breakpoints == (0.0, 1.0)
    assert [(s.cost, s.emissions) for s in fr.segments] == [(500.0, 50.0)]


def test_exact_toy_b():
    fr = exact_frontier(toy_b(), TOY_B_NORMS)
    assert fr.breakpoints == pytest.approx((0.0, 0.5, 1.0))
    assert [(s.cost, s.emissions) for s in fr.segments] == pytest.approx([(5000.0, 20.0), (1000.0, 100.0)])
    assert fr.on_breakpoint(0.5) and not fr.on_breakpoint(0.5 + 1e-6)


def test_exact_toy_c_matches_dense_scan():
    case = toy_c()
    norms = disagreement_points(case).norms
    fr = exact_frontier(case, norms)
    assert len(fr.segments) >= 3
    lams = np.linspace(0, 1, 1001)
    for p in scan_frontier(case, lams, norms):
        if fr.on_breakpoint(p.lam, 1e-9):
            continue
        cost, em = fr.at(p.lam)
        assert cost == pytest.approx(p.cost, rel=1e-6)
        assert em == pytest.approx(p.emissions, rel=1e-6)
        assert fr.value(p.lam) == pytest.approx(p.scalarized, rel=1e-9)
    # every segment vertex shows up somewhere on the grid
    seen = {(round(p.cost, 6), round(p.emissions, 6)) for p in scan_frontier(case, lams, norms)}
    assert {(round(s.cost, 6), round(s.emissions, 6)) for s in fr.segments} <= seen


def test_segments_monotone_and_value_continuous(rng):
    for _ in range(5):
        case = random_case(rng, horizon=2)
        fr = exact_frontier(case, disagreement_points(case).norms)
        for a, b in zip(fr.segments, fr.segments[1:]):
            assert b.cost <= a.cost * (1 + 1e-9) + 1e-9
            assert b.emissions >= a.emissions * (1 - 1e-9) - 1e-9
            assert a.alpha + a.beta * a.lam_hi == pytest.approx(b.alpha + b.beta * b.lam_lo, abs=1e-7)
        assert check_dominance(fr.segments) == []


def test_cross_optimality(rng):
    case = random_case(rng, horizon=2)
    norms = disagreement_points(case).norms
    pts = scan_frontier(case, np.linspace(0, 1, 11), norms)
    for p in pts:
        for q in pts:
            other = p.lam * q.cost / norms[0] + (1 - p.lam) * q.emissions / norms[1]
            assert p.scalarized <= other + 1e-9


def test_dominance_examples():
    assert check_dominance([(1000, 100), (5000, 20)]) == []
    assert check_dominance([(1000, 100), (999, 100)]) == [(0, 1)]
    pts = [FrontierPoint(0.1, 10.0, 5.0, 0.0), FrontierPoint(0.2, 10.0 * (1 + 1e-8), 5.0, 0.0)]
    assert check_dominance(pts) == []


def test_toy_c_scan_non_dominated():
    case = toy_c()
    pts = scan_frontier(case, np.linspace(0, 1, 21), disagreement_points(case).norms)
    assert check_dominance(pts) == []
