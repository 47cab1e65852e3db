"""Tests for query-batch planning strategies.

The small four-bin scene from ``fixtures`` gives hand-checkable
interaction counts for the periodic planner, and the set-splitting
planners are validated against their literal quadratic-rescan
variants on randomized scenes.
"""

from __future__ import annotations

import numpy as np
import pytest

from fixtures import (
    SIXTY_GROUP_COUNTS,
    SIXTY_GROUP_COUNTS_GRID,
    SIXTY_GROUP_TOTAL,
    SIXTY_GROUP_TOTAL_GRID,
    SIXTY_SINGLE_BATCH_COUNT,
    store_from_extents,
)
from test_core import random_store
from trajseek.core import DomainError
from trajseek.index import build_index, interaction_count
from trajseek.planner import (
    BatchPlan,
    QueryBatch,
    greedy_max,
    greedy_min,
    num_interactions,
    periodic,
    setsplit_fixed,
    setsplit_max,
    setsplit_minmax,
)


def scene(seed: int, n_entries: int, n_queries: int, m: int):
    """Build a random entry index plus query store for differentials."""
    rng = np.random.default_rng(seed)
    entries = random_store(rng, n_entries)
    queries = random_store(rng, n_queries, first_traj=10_000)
    return build_index(entries, m), queries


class TestPeriodic:
    def test_six_batches_of_ten_match_hand_counts(self, sixty_queries, four_bin_index):
        plan = periodic(sixty_queries, 10, four_bin_index)
        assert plan.sizes() == [10] * 6
        assert tuple(b.interactions for b in plan.batches) == SIXTY_GROUP_COUNTS
        assert plan.total_interactions == SIXTY_GROUP_TOTAL

    def test_single_batch_touches_whole_store(self, sixty_queries, four_bin_index):
        plan = periodic(sixty_queries, 60, four_bin_index)
        assert plan.sizes() == [60]
        assert plan.total_interactions == SIXTY_SINGLE_BATCH_COUNT

    def test_grid_start_extents_inflate_counts(self, fifteen_store, sixty_queries):
        index = build_index(fifteen_store, 4, extent_rule="grid_start")
        plan = periodic(sixty_queries, 10, index)
        assert tuple(b.interactions for b in plan.batches) == SIXTY_GROUP_COUNTS_GRID
        assert plan.total_interactions == SIXTY_GROUP_TOTAL_GRID

    def test_remainder_batch_is_shorter(self, sixty_queries, four_bin_index):
        plan = periodic(sixty_queries, 25, four_bin_index)
        assert plan.sizes() == [25, 25, 10]

    def test_oversized_s_clamps_to_one_batch(self, sixty_queries, four_bin_index):
        plan = periodic(sixty_queries, 10_000, four_bin_index)
        assert plan.sizes() == [60]

    def test_batch_extent_spans_member_queries(self, sixty_queries, four_bin_index):
        plan = periodic(sixty_queries, 10, four_bin_index)
        for batch in plan.batches:
            segs = [sixty_queries.segment(i) for i in range(batch.lo, batch.hi + 1)]
            assert batch.extent.begin == min(s.start.t for s in segs)
            assert batch.extent.end == max(s.end.t for s in segs)

    def test_counts_agree_with_index_lookup(self, sixty_queries, four_bin_index):
        plan = periodic(sixty_queries, 10, four_bin_index)
        for batch in plan.batches:
            assert batch.interactions == interaction_count(
                four_bin_index, batch.size, batch.extent
            )

    @pytest.mark.parametrize("s", [0, -3])
    def test_nonpositive_size_rejected(self, sixty_queries, four_bin_index, s):
        with pytest.raises(DomainError):
            periodic(sixty_queries, s, four_bin_index)

    def test_empty_query_set_rejected(self, four_bin_index):
        empty = store_from_extents([])
        with pytest.raises(DomainError):
            periodic(empty, 10, four_bin_index)


class TestSetSplitFixed:
    @pytest.mark.parametrize("k", [1, 2, 5, 17, 80])
    def test_incremental_matches_literal_rescan(self, k):
        index, queries = scene(41, 300, 80, 16)
        fast = setsplit_fixed(queries, index, k)
        slow = setsplit_fixed(queries, index, k, literal=True)
        assert fast.sizes() == slow.sizes()
        assert fast.total_interactions == slow.total_interactions

    def test_reaches_requested_batch_count(self):
        index, queries = scene(42, 250, 64, 12)
        for k in (1, 4, 16, 64):
            assert len(setsplit_fixed(queries, index, k).batches) == k

    def test_count_above_n_yields_singletons(self):
        index, queries = scene(43, 100, 12, 8)
        plan = setsplit_fixed(queries, index, 50)
        assert plan.sizes() == [1] * 12

    def test_total_interactions_shrink_with_more_batches(self):
        index, queries = scene(44, 400, 90, 20)
        totals = [setsplit_fixed(queries, index, k).total_interactions for k in (1, 3, 9, 30, 90)]
        assert totals == sorted(totals, reverse=True)
        assert totals[0] == 90 * 400

    def test_single_batch_covers_whole_store(self):
        index, queries = scene(45, 150, 40, 10)
        plan = setsplit_fixed(queries, index, 1)
        assert plan.total_interactions == 40 * 150

    def test_nonpositive_count_rejected(self):
        index, queries = scene(46, 50, 10, 4)
        with pytest.raises(DomainError):
            setsplit_fixed(queries, index, 0)


class TestSetSplitMinMax:
    def test_incremental_matches_literal_rescan(self):
        index, queries = scene(47, 300, 96, 16)
        fast = setsplit_minmax(queries, index, 5, 18)
        slow = setsplit_minmax(queries, index, 5, 18, literal=True)
        assert fast.sizes() == slow.sizes()
        assert fast.total_interactions == slow.total_interactions

    @pytest.mark.parametrize("seed,lo,hi", [(48, 3, 12), (49, 8, 8), (50, 1, 25)])
    def test_sizes_respect_bounds(self, seed, lo, hi):
        index, queries = scene(seed, 280, 75, 14)
        sizes = setsplit_minmax(queries, index, lo, hi).sizes()
        # The floor pass can push one neighbor past the cap when it
        # absorbs an undersized batch, but never by more than lo - 1.
        assert all(s <= hi + lo - 1 for s in sizes)
        assert sum(1 for s in sizes if s < lo) == 0 or len(sizes) == 1

    def test_min_one_never_triggers_floor_pass(self):
        index, queries = scene(51, 200, 60, 10)
        capped = setsplit_minmax(queries, index, 1, 9)
        assert max(capped.sizes()) <= 9

    def test_inverted_bounds_rejected(self):
        index, queries = scene(52, 50, 10, 4)
        with pytest.raises(DomainError):
            setsplit_minmax(queries, index, 10, 5)
        with pytest.raises(DomainError):
            setsplit_minmax(queries, index, 0, 5)


class TestSetSplitMax:
    def test_is_minmax_with_floor_of_one(self):
        index, queries = scene(53, 260, 70, 12)
        a = setsplit_max(queries, index, 11)
        b = setsplit_minmax(queries, index, 1, 11)
        assert a.sizes() == b.sizes()
        assert a.total_interactions == b.total_interactions

    def test_incremental_matches_literal_rescan(self):
        index, queries = scene(54, 260, 70, 12)
        fast = setsplit_max(queries, index, 7)
        slow = setsplit_max(queries, index, 7, literal=True)
        assert fast.sizes() == slow.sizes()

    def test_cap_is_strict(self):
        index, queries = scene(55, 300, 85, 18)
        for cap in (1, 5, 20):
            assert max(setsplit_max(queries, index, cap).sizes()) <= cap

    def test_nonpositive_cap_rejected(self):
        index, queries = scene(56, 50, 10, 4)
        with pytest.raises(DomainError):
            setsplit_max(queries, index, 0)


class TestGreedy:
    """Single-pass greedy splitting over a scene with no free merges.

    Ten queries sit in ten disjoint temporal bins, so every adjacent
    merge strictly increases the interaction total and the pass is
    driven purely by the size bound.
    """

    @staticmethod
    def ladder():
        entries = store_from_extents([(float(i), i + 0.5) for i in range(10)])
        index = build_index(entries, 10)
        queries = store_from_extents(
            [(i + 0.1, i + 0.2) for i in range(10)], traj_ids=range(50, 60)
        )
        return index, queries

    def test_min_variant_stops_at_bound(self):
        index, queries = self.ladder()
        assert greedy_min(queries, index, 3).sizes() == [3, 3, 3, 1]

    def test_max_variant_overshoots_by_one(self):
        index, queries = self.ladder()
        assert greedy_max(queries, index, 3).sizes() == [4, 4, 2]

    def test_bound_one_min_keeps_singletons(self):
        index, queries = self.ladder()
        assert greedy_min(queries, index, 1).sizes() == [1] * 10

    def test_free_merges_never_raise_the_total(self):
        index, queries = scene(57, 350, 90, 6)
        singles = periodic(queries, 1, index)
        merged = greedy_min(queries, index, 1)
        assert merged.total_interactions == singles.total_interactions
        assert len(merged.batches) <= len(singles.batches)

    def test_variants_bracket_the_bound(self):
        index, queries = scene(58, 300, 80, 40)
        lo = greedy_min(queries, index, 8)
        hi = greedy_max(queries, index, 8)
        assert all(s >= 8 for s in lo.sizes()[:-1])
        assert len(hi.batches) <= len(lo.batches)

    def test_nonpositive_bound_rejected(self):
        index, queries = self.ladder()
        with pytest.raises(DomainError):
            greedy_min(queries, index, 0)
        with pytest.raises(DomainError):
            greedy_max(queries, index, -2)


class TestPlanValidation:
    @pytest.mark.parametrize(
        "planner",
        [
            lambda q, i: periodic(q, 7, i),
            lambda q, i: setsplit_fixed(q, i, 9),
            lambda q, i: setsplit_minmax(q, i, 3, 10),
            lambda q, i: setsplit_max(q, i, 6),
            lambda q, i: greedy_min(q, i, 4),
            lambda q, i: greedy_max(q, i, 4),
        ],
        ids=["periodic", "fixed", "minmax", "max", "greedy_min", "greedy_max"],
    )
    def test_every_planner_partitions_contiguously(self, planner):
        index, queries = scene(59, 220, 66, 14)
        plan = planner(queries, index)
        cursor = 0
        for batch in plan.batches:
            assert batch.lo == cursor
            assert batch.hi >= batch.lo
            cursor = batch.hi + 1
        assert cursor == len(queries)
        assert plan.total_interactions == sum(b.interactions for b in plan.batches)

    def test_gap_between_batches_rejected(self, sixty_queries, four_bin_index):
        good = periodic(sixty_queries, 30, four_bin_index)
        a, b = good.batches
        shifted = QueryBatch(lo=b.lo + 1, hi=b.hi, extent=b.extent, first=b.first, last=b.last)
        with pytest.raises(DomainError):
            BatchPlan(queries=sixty_queries, batches=(a, shifted))

    def test_short_cover_rejected(self, sixty_queries, four_bin_index):
        good = periodic(sixty_queries, 30, four_bin_index)
        with pytest.raises(DomainError):
            BatchPlan(queries=sixty_queries, batches=good.batches[:1])

    def test_empty_plan_rejected(self, sixty_queries):
        with pytest.raises(DomainError):
            BatchPlan(queries=sixty_queries, batches=())

    def test_num_interactions_matches_index_math(self):
        index, queries = scene(60, 180, 48, 9)
        plan = setsplit_max(queries, index, 10)
        for batch in plan.batches:
            assert batch.interactions == num_interactions(batch, index)
