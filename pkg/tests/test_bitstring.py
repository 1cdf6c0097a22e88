from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from hyperlo.bitstring import (
    BitString,
    leading_ones,
    mbitflip,
    mbitflip_positions,
    rls_flip,
    rls_positions,
    sbm_positions,
    standard_bit_mutation,
)
from hyperlo.errors import InvalidConfiguration


@pytest.mark.parametrize(
    "text, expected",
    [("0", 0), ("1", 1), ("1101", 2), ("0111", 0), ("1111", 4), ("1110", 3)],
)
def test_leading_ones_counts_prefix(text, expected):
    assert leading_ones(BitString.from_str(text)) == expected


def test_bitstring_is_immutable_copy():
    raw = np.array([1, 0, 1], dtype=np.uint8)
    x = BitString(raw)
    raw[0] = 0
    assert str(x) == "101"
    with pytest.raises(ValueError):
        x.bits[0] = 0


def test_bitstring_rejects_bad_values():
    with pytest.raises(InvalidConfiguration):
        BitString(np.array([0, 2]))
    with pytest.raises(InvalidConfiguration):
        BitString(np.array([], dtype=np.uint8))


def test_hamming_is_a_metric_on_samples():
    rng = np.random.default_rng(3)
    xs = [BitString.random(12, rng) for _ in range(6)]
    for a in xs:
        assert a.hamming(a) == 0
        for b in xs:
            assert a.hamming(b) == b.hamming(a)
            for c in xs:
                assert a.hamming(c) <= a.hamming(b) + b.hamming(c)


def test_equal_strings_hash_equal():
    assert BitString.from_str("0110") == BitString.from_str("0110")
    assert hash(BitString.from_str("0110")) == hash(BitString.from_str("0110"))
    assert BitString.from_str("0110") != BitString.from_str("0111")


def test_repeated_draw_cancels():
    x = BitString.from_str("0000")
    assert x.toggled(np.array([2, 2])) == x
    assert str(x.toggled(np.array([1, 2, 2]))) == "0100"


def test_two_bitflip_on_three_bits_matches_enumeration():
    # 9 ordered pairs: 3 cancel to no change, each unordered pair appears twice
    rng = np.random.default_rng(11)
    x = BitString.from_str("000")
    draws = 45_000
    counts = Counter(str(mbitflip(x, 2, rng)) for _ in range(draws))
    assert set(counts) == {"000", "110", "101", "011"}
    assert counts["000"] / draws == pytest.approx(3 / 9, abs=0.01)
    for key in ("110", "101", "011"):
        assert counts[key] / draws == pytest.approx(2 / 9, abs=0.01)


def test_rls_pairs_are_distinct_and_uniform():
    rng = np.random.default_rng(5)
    draws = 30_000
    counts = Counter()
    for _ in range(draws):
        pos = rls_positions(4, 2, rng)
        assert len(set(pos.tolist())) == 2
        counts[tuple(sorted(pos.tolist()))] += 1
    assert len(counts) == 6
    for v in counts.values():
        assert v / draws == pytest.approx(1 / 6, abs=0.012)


def test_rls_flip_changes_exactly_m_bits():
    rng = np.random.default_rng(2)
    x = BitString.random(20, rng)
    for m in (1, 3, 20):
        assert rls_flip(x, m, rng).hamming(x) == m


def test_position_samplers_reject_bad_arguments():
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidConfiguration):
        mbitflip_positions(5, 0, rng)
    with pytest.raises(InvalidConfiguration):
        rls_positions(3, 4, rng)
    with pytest.raises(InvalidConfiguration):
        sbm_positions(5, 0.0, rng)
    with pytest.raises(InvalidConfiguration):
        sbm_positions(5, 1.0, rng)


def test_standard_bit_mutation_flip_count_is_binomial():
    rng = np.random.default_rng(9)
    n, rate = 50, 0.1
    x = BitString.ones(n)
    flips = np.array([standard_bit_mutation(x, rate, rng).hamming(x) for _ in range(4000)])
    assert flips.mean() == pytest.approx(n * rate, rel=0.05)
    assert flips.var() == pytest.approx(n * rate * (1 - rate), rel=0.1)
