"""Reference implementations used to validate the indexed search.

The brute-force search runs the pair geometry over every (query, entry)
pair with no index, no batching, and no worker pool; it exercises the
same geometry as the kernel on purpose, so differences against
:func:`trajseek.engine.run_search` isolate indexing, batching, or
parallelism bugs rather than solver bugs (the solver has its own
sampling-based validation).  The interaction recount walks every bin
of an index without the contiguity shortcut.
"""

from __future__ import annotations

from .core import ResultSet, SegmentStore, pair_intervals
from .index import TemporalIndex
from .planner import BatchPlan

# Queries per mesh slab; keeps the all-entries mesh within memory while
# preserving query-major output order.
_SLAB = 64


def brute_force_search(store: SegmentStore, queries: SegmentStore, d: float) -> ResultSet:
    """Evaluate every query against every entry segment.

    Returns:
        All hits in query-major order (all hits of query ordinal 0
        first, each query's hits in entry-ordinal order).
    """
    pieces: list[ResultSet] = []
    n = len(queries)
    for lo in range(0, n, _SLAB):
        hi = min(lo + _SLAB, n) - 1
        batch = queries.view(lo, hi)
        hits = pair_intervals(batch, store, d)
        pieces.append(ResultSet(
            batch.traj[hits.row_idx], batch.seg[hits.row_idx],
            store.traj[hits.col_idx], store.seg[hits.col_idx],
            hits.t_begin, hits.t_end,
        ))
    return ResultSet.concatenate(pieces)


def count_interactions_naive(index: TemporalIndex, plan: BatchPlan) -> list[int]:
    """Per-batch interaction counts by exhaustive bin scanning.

    For each batch, every bin of the index is tested for closed-interval
    overlap with the batch extent; the candidate span then runs from the
    smallest first ordinal to the largest last ordinal over the
    qualifying bins.  No sortedness or contiguity assumptions.

    Returns:
        One interaction count per batch, in plan order.
    """
    counts: list[int] = []
    for batch in plan.batches:
        extent = batch.extent
        first = None
        last = None
        for b in index.bins:
            if b.empty:
                continue
            if b.start <= extent.end and b.end >= extent.begin:
                first = b.first if first is None else min(first, b.first)
                last = b.last if last is None else max(last, b.last)
        if first is None:
            counts.append(0)
        else:
            counts.append(batch.size * (last - first + 1))
    return counts
