"""Temporal-bin index tests against the frozen fifteen-segment layout."""

from __future__ import annotations

import numpy as np
import pytest

from trajseek.core import DomainError, TimeInterval
from trajseek.index import build_index, candidate_range, interaction_count

from fixtures import (
    FIFTEEN_BIN_ENDS,
    FIFTEEN_BIN_RANGES,
    FIFTEEN_BIN_STARTS,
    FIFTEEN_GRID_STARTS,
    SIXTY_SINGLE_BATCH_COUNT,
    store_from_extents,
)
from test_core import random_store


def test_four_bin_layout_matches_frozen_values(four_bin_index):
    idx = four_bin_index
    assert idx.m == 4
    assert idx.bin_width == 3.0
    assert (idx.t0, idx.t_max) == (0.0, 12.0)
    assert tuple((b.first, b.last) for b in idx.bins) == FIFTEEN_BIN_RANGES
    assert tuple(b.start for b in idx.bins) == FIFTEEN_BIN_STARTS
    assert tuple(b.end for b in idx.bins) == FIFTEEN_BIN_ENDS


def test_grid_start_rule_snaps_bin_starts(fifteen_store):
    idx = build_index(fifteen_store, 4, extent_rule="grid_start")
    assert tuple(b.start for b in idx.bins) == FIFTEEN_GRID_STARTS
    assert tuple(b.end for b in idx.bins) == FIFTEEN_BIN_ENDS
    assert tuple((b.first, b.last) for b in idx.bins) == FIFTEEN_BIN_RANGES


def test_whole_store_batch_count(four_bin_index):
    q = TimeInterval(0.1, 12.0)
    assert candidate_range(four_bin_index, q) == (0, 14)
    assert interaction_count(four_bin_index, 60, q) == SIXTY_SINGLE_BATCH_COUNT


@pytest.mark.parametrize(
    "interval, expected",
    [
        ((0.1, 5.2), (0, 8)),
        ((4.8, 6.1), (0, 8)),
        ((5.7, 9.1), (0, 11)),
        ((8.0, 9.2), (9, 11)),
        ((8.5, 10.5), (9, 14)),
        ((11.5, 12.0), (12, 14)),
        ((12.1, 15.0), None),
        ((-3.0, -0.1), None),
    ],
)
def test_candidate_ranges_on_four_bins(four_bin_index, interval, expected):
    got = candidate_range(four_bin_index, TimeInterval(*interval))
    assert got == expected


def test_single_bin_index_always_returns_everything(fifteen_store):
    idx = build_index(fifteen_store, 1)
    assert candidate_range(idx, TimeInterval(11.9, 30.0)) == (0, 14)
    assert candidate_range(idx, TimeInterval(12.1, 30.0)) is None
    assert interaction_count(idx, 10, TimeInterval(0.0, 0.0)) == 150


def test_membership_boundaries_clamp_into_last_bin():
    store = store_from_extents([(0.0, 0.5), (3.0, 3.5), (6.0, 6.5), (12.0, 12.0)])
    idx = build_index(store, 4)
    assert idx.bin_of(0.0) == 0
    assert idx.bin_of(3.0) == 1
    assert idx.bin_of(11.99) == 3
    assert idx.bin_of(12.0) == 3
    assert (idx.bins[3].first, idx.bins[3].last) == (3, 3)


def test_empty_bins_are_skipped_but_range_stays_contiguous():
    # No segment starts inside [4, 8), yet a query interval spanning the
    # hole must still return one contiguous ordinal range.
    store = store_from_extents([(0.0, 1.0), (1.5, 3.0), (9.0, 10.0), (10.5, 12.0)])
    idx = build_index(store, 3)
    empty = [b for b in idx.bins if b.empty]
    assert len(empty) == 1 and empty[0].count == 0
    assert candidate_range(idx, TimeInterval(2.0, 9.5)) == (0, 3)
    assert candidate_range(idx, TimeInterval(2.9, 3.1)) == (0, 1)
    assert candidate_range(idx, TimeInterval(5.0, 7.0)) is None


def test_zero_width_store_collapses_into_first_bin():
    store = store_from_extents([(2.0, 2.0), (2.0, 2.0)])
    idx = build_index(store, 5)
    assert idx.bin_width == 0.0
    assert (idx.bins[0].first, idx.bins[0].last) == (0, 1)
    assert candidate_range(idx, TimeInterval(2.0, 2.0)) == (0, 1)
    assert candidate_range(idx, TimeInterval(2.1, 3.0)) is None


@pytest.mark.parametrize("bad_m", [0, -1])
def test_invalid_bin_count_is_rejected(fifteen_store, bad_m):
    with pytest.raises(DomainError):
        build_index(fifteen_store, bad_m)


def test_unknown_extent_rule_is_rejected(fifteen_store):
    with pytest.raises(DomainError):
        build_index(fifteen_store, 4, extent_rule="mystery")


def naive_candidate_range(idx, q):
    lo = hi = None
    for b in idx.bins:
        if b.empty:
            continue
        if b.start <= q.end and b.end >= q.begin:
            lo = b.first if lo is None else min(lo, b.first)
            hi = b.last if hi is None else max(hi, b.last)
    return None if lo is None else (lo, hi)


def test_candidate_range_matches_naive_bin_scan():
    rng = np.random.default_rng(21)
    store = random_store(rng, 300)
    for m in (1, 7, 33, 128):
        idx = build_index(store, m)
        for _ in range(200):
            b = rng.uniform(-1.0, 13.0)
            q = TimeInterval(b, b + rng.uniform(0.0, 4.0))
            assert candidate_range(idx, q) == naive_candidate_range(idx, q)


def test_candidate_range_covers_every_overlapping_entry():
    rng = np.random.default_rng(22)
    store = random_store(rng, 400)
    for m in (1, 5, 40, 500):
        idx = build_index(store, m)
        for _ in range(120):
            b = rng.uniform(-1.0, 13.0)
            q = TimeInterval(b, b + rng.uniform(0.0, 5.0))
            overlapping = np.nonzero((store.te >= q.begin) & (store.ts <= q.end))[0]
            span = candidate_range(idx, q)
            if overlapping.size == 0:
                continue
            assert span is not None
            lo, hi = span
            assert lo <= overlapping.min() and overlapping.max() <= hi


def test_interaction_count_scales_with_batch_size(four_bin_index):
    q = TimeInterval(8.0, 9.2)
    assert interaction_count(four_bin_index, 1, q) == 3
    assert interaction_count(four_bin_index, 10, q) == 30
    assert interaction_count(four_bin_index, 10, TimeInterval(20.0, 21.0)) == 0
