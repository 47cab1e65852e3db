"""Batch search kernel and whole-plan execution.

The kernel treats every candidate entry segment as one logical worker
that walks the whole query batch in order, rejecting each pair on
temporal overlap before doing any spatial arithmetic.  Logical workers
are mapped onto a bounded pool: candidates are split into contiguous
chunks of fixed size and chunks run on a thread pool (array math
releases the GIL).  Chunk boundaries do not depend on the worker count
and chunk outputs are reassembled in chunk order, so a run's output is
identical for any worker count.

Hits are appended to a result accumulator that grows on demand; the
query/entry pair of a hit also records the time interval of proximity.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .core import DomainError, PairHits, ResultSet, SegmentStore, pair_intervals
from .index import TemporalIndex, candidate_range
from .planner import BatchPlan

# Pairs evaluated per chunk; fixed so chunking (and therefore output
# order) is independent of the worker count.
_CHUNK_PAIR_BUDGET = 1 << 20


@dataclass
class BatchTrace:
    """Per-batch accounting within one search run."""

    ordinal: int
    queries: int
    candidates: int
    interactions: int
    hits: int
    kernel_seconds: float


@dataclass
class SearchStats:
    """Counters and timings accumulated over a search.

    ``interactions_computed`` counts evaluated (query, candidate) pairs
    and always equals temporal_misses + spatial_misses + hits.
    """

    interactions_computed: int = 0
    temporal_misses: int = 0
    spatial_misses: int = 0
    hits: int = 0
    kernel_seconds: float = 0.0
    overhead_seconds: float = 0.0
    assembly_seconds: float = 0.0
    total_seconds: float = 0.0
    per_batch: list[BatchTrace] = field(default_factory=list)

    def wasteful_fraction(self) -> float:
        """Share of computed interactions that produced no hit."""
        if self.interactions_computed == 0:
            return 0.0
        return (self.temporal_misses + self.spatial_misses) / self.interactions_computed


def resolve_workers(workers: int | None) -> int:
    """Effective worker count: explicit value, else machine parallelism."""
    if workers is None:
        return max(1, os.cpu_count() or 1)
    if workers < 1:
        raise DomainError(f"workers={workers} must be >= 1")
    return workers


def _candidate_chunks(first: int, last: int, batch_size: int) -> list[tuple[int, int]]:
    total = last - first + 1
    per_chunk = max(1, _CHUNK_PAIR_BUDGET // max(1, batch_size))
    return [(lo, min(lo + per_chunk - 1, last)) for lo in range(first, last + 1, per_chunk)]


def _run_chunks(store, batch, chunks, d, workers, noop):
    def work(span: tuple[int, int]) -> PairHits | None:
        if noop:
            store.view(span[0], span[1])
            return None
        return pair_intervals(store.view(span[0], span[1]), batch, d)

    if workers <= 1 or len(chunks) <= 1:
        return [work(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
        return list(pool.map(work, chunks))


def execute_batch(
    store: SegmentStore,
    batch: SegmentStore,
    span: tuple[int, int],
    d: float,
    *,
    workers: int | None = None,
    _noop: bool = False,
) -> tuple[ResultSet, SearchStats]:
    """Evaluate one query batch against a candidate ordinal range.

    Args:
        store: entry segment store.
        batch: query segments of this batch (sorted by start time).
        span: inclusive (first, last) candidate ordinals within store.
        d: distance threshold.
        workers: worker pool size; None uses machine parallelism.

    Returns:
        Result set for the batch plus that batch's stats.  The result
        content equals the pairwise double loop; item order follows the
        candidate-major chunk layout and carries no meaning.
    """
    t_start = time.perf_counter()
    workers = resolve_workers(workers)
    first, last = int(span[0]), int(span[1])
    if not (0 <= first <= last < len(store)):
        raise DomainError(f"candidate span {span} outside store of {len(store)} segments")
    if len(batch) == 0:
        raise DomainError("query batch is empty")

    chunks = _candidate_chunks(first, last, len(batch))
    parts = _run_chunks(store, batch, chunks, d, workers, _noop)

    stats = SearchStats()
    pieces: list[ResultSet] = []
    for (lo, _hi), hits in zip(chunks, parts):
        if hits is None:
            continue
        entry_ord = hits.row_idx + lo
        pieces.append(ResultSet(
            batch.traj[hits.col_idx], batch.seg[hits.col_idx],
            store.traj[entry_ord], store.seg[entry_ord],
            hits.t_begin, hits.t_end,
        ))
        stats.temporal_misses += hits.temporal_misses
        stats.spatial_misses += hits.spatial_misses
        stats.hits += len(hits)
    stats.interactions_computed = 0 if _noop else (last - first + 1) * len(batch)
    result = ResultSet.concatenate(pieces)
    stats.kernel_seconds = stats.total_seconds = time.perf_counter() - t_start
    return result, stats


def run_search(
    store: SegmentStore,
    index: TemporalIndex,
    plan: BatchPlan,
    d: float,
    *,
    workers: int | None = None,
) -> tuple[ResultSet, SearchStats]:
    """Execute a whole batch plan against the store, batch by batch.

    For each batch in plan order: compute the batch extent, look up the
    candidate range, and run the kernel; batches whose extent overlaps
    no bin contribute nothing but still appear in the per-batch trace.

    Returns:
        The combined result set and run-wide stats.  The result content
        is invariant under the choice of plan for a fixed query set.
    """
    t_start = time.perf_counter()
    workers = resolve_workers(workers)
    queries = plan.queries
    stats = SearchStats()
    pieces: list[ResultSet] = []
    kernel_total = 0.0
    assembly = 0.0
    for ordinal, batch in enumerate(plan.batches):
        view = queries.view(batch.lo, batch.hi)
        extent = queries.range_extent(batch.lo, batch.hi)
        span = candidate_range(index, extent)
        if span is None:
            stats.per_batch.append(BatchTrace(ordinal, len(view), 0, 0, 0, 0.0))
            continue
        result, bstats = execute_batch(store, view, span, d, workers=workers)
        t_asm = time.perf_counter()
        pieces.append(result)
        assembly += time.perf_counter() - t_asm
        kernel_total += bstats.kernel_seconds
        stats.interactions_computed += bstats.interactions_computed
        stats.temporal_misses += bstats.temporal_misses
        stats.spatial_misses += bstats.spatial_misses
        stats.hits += bstats.hits
        stats.per_batch.append(BatchTrace(
            ordinal, len(view), span[1] - span[0] + 1,
            bstats.interactions_computed, bstats.hits, bstats.kernel_seconds,
        ))
    t_asm = time.perf_counter()
    combined = ResultSet.concatenate(pieces)
    assembly += time.perf_counter() - t_asm

    stats.kernel_seconds = kernel_total
    stats.assembly_seconds = assembly
    stats.total_seconds = time.perf_counter() - t_start
    stats.overhead_seconds = max(0.0, stats.total_seconds - kernel_total - assembly)
    return combined, stats


def launch_overhead_pass(
    store: SegmentStore,
    batch: SegmentStore,
    span: tuple[int, int],
    *,
    workers: int | None = None,
) -> float:
    """Kernel invocation with the pair arithmetic elided.

    Used by response-time calibration to measure the fixed cost of
    launching a batch of the given shape (slicing, chunk dispatch,
    result reassembly) without any per-pair work.

    Returns:
        Wall seconds for the empty pass.
    """
    _, stats = execute_batch(store, batch, span, 0.0, workers=workers, _noop=True)
    return stats.kernel_seconds
