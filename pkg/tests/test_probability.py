from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from hyperlo.errors import BudgetExceeded, InvalidConfiguration
from hyperlo.probability import (
    Family,
    Model,
    OperatorSpec,
    crossover_point,
    improvement_table,
    optimal_operator,
    p_improve,
    p_improve_exact_mbitflip,
    p_improve_leading,
    p_improve_mbitflip_exact,
    p_improve_rls,
    p_improve_rls_array,
    region_bounds,
)


def test_one_and_two_flip_closed_forms():
    n = 9
    for i in range(n):
        assert p_improve_exact_mbitflip(1, i, n) == Fraction(1, n)
        assert p_improve_exact_mbitflip(2, i, n) == Fraction(2 * (n - i - 1), n * n)
        assert p_improve_leading(2, i, n) == pytest.approx(2 * (n - i - 1) / n**2)


def test_three_flips_exceed_dominant_term_when_triples_can_cancel():
    # at i=0 a triple (0, j, j) improves too, which the dominant term ignores
    exact = p_improve_exact_mbitflip(3, 0, 5)
    assert float(exact) > p_improve_leading(3, 0, 5)


def test_last_state_cannot_be_improved_by_two_flips():
    assert p_improve_exact_mbitflip(2, 4, 5) == 0


def test_rls_examples():
    # RLS_2 at n=6, i=2: one flip at 2, the other in {3, 4, 5}: 3 of 15 pairs
    assert p_improve_rls(2, 2, 6) == pytest.approx(3 / 15)
    assert p_improve_rls(2, 5, 6) == 0.0
    assert p_improve_rls(1, 3, 6) == pytest.approx(1 / 6)


def test_counting_series_matches_enumeration():
    for n in range(3, 9):
        for m in range(1, 5):
            for i in range(n):
                assert p_improve_mbitflip_exact(m, i, n) == p_improve_exact_mbitflip(m, i, n)


def test_counting_series_vectorised_agrees_with_scalar():
    n, m = 40, 4
    arr = p_improve_mbitflip_exact(m, np.arange(n), n)
    for i in (0, 7, 39):
        assert arr[i] == pytest.approx(float(p_improve_mbitflip_exact(m, i, n)), rel=1e-12)


def test_enumeration_budget_guard():
    with pytest.raises(BudgetExceeded):
        p_improve_exact_mbitflip(5, 0, 100, budget=10**6)


def test_invalid_states_rejected():
    with pytest.raises(InvalidConfiguration):
        p_improve_leading(1, 5, 5)
    with pytest.raises(InvalidConfiguration):
        p_improve_exact_mbitflip(0, 0, 5)


def test_crossover_of_one_and_two_flips_is_half_n():
    n = 1000
    assert crossover_point(1, 2, n) == pytest.approx(n / 2 - 1)
    with pytest.raises(InvalidConfiguration):
        crossover_point(2, 2, n)


def test_regions_partition_states_and_follow_argmax():
    n = 97
    for k in range(1, 6):
        covered = [i for _, lo, hi in region_bounds(n, k) for i in range(lo, hi + 1)]
        assert sorted(covered) == list(range(n))
        for m, lo, hi in region_bounds(n, k):
            for i in range(lo, hi + 1):
                assert optimal_operator(i, n, k) == m
                best = max(p_improve_leading(j, i, n) for j in range(1, k + 1))
                assert p_improve_leading(m, i, n) == pytest.approx(best, rel=1e-12)


def test_rls_and_dominant_term_differ_by_order_one_over_n_squared():
    for n in (200, 400, 800):
        i = np.arange(n)
        gap = np.abs(p_improve_rls_array(2, i, n) - p_improve_leading(2, i, n))
        assert gap.max() * n * n <= 4.0


def test_dispatch_and_table_shapes():
    n = 30
    ops = [OperatorSpec(Family.BITFLIP, 3), OperatorSpec(Family.RLS, 2), OperatorSpec(Family.SBM, rate=1 / n)]
    lead = improvement_table(ops, n, Model.LEADING)
    exact = improvement_table(ops, n, Model.EXACT)
    assert lead.shape == exact.shape == (3, n)
    assert np.all(exact[0] >= lead[0] - 1e-15)
    assert p_improve(ops[2], 0, n) == pytest.approx(1 / n)
    assert ops[0].label == "3BitFlip" and ops[1].label == "RLS_2"
    assert math.isclose(float(np.sum(lead[1])), sum(p_improve_rls(2, i, n) for i in range(n)))
