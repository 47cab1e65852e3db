"""Query-batch planners.

A batch plan partitions a start-time-sorted query set into contiguous
batches.  Batching trades kernel launches against wasted work: every
query in a batch is evaluated against every candidate of the batch's
combined temporal extent, so stretching a batch over sparse gaps
multiplies interactions.  Planners differ in how they weigh that trade:

* ``periodic``: fixed-size batches, remainder kept as a final short batch.
* ``setsplit_fixed``: start from singletons, repeatedly merge the
  adjacent pair whose merge adds the fewest interactions, until a target
  batch count is reached.
* ``setsplit_minmax`` / ``setsplit_max``: merge cheapest-first while a
  merge stays within a maximum batch size, then grow batches below a
  minimum size into their cheaper neighbor.
* ``greedy_min`` / ``greedy_max``: one forward pass performing merges
  that add no interactions, then one forward pass growing batches up to
  (or just past) a size bound.

The merge loops re-evaluate only the two pairs adjacent to a performed
merge, keyed by merge cost in a heap; ties break toward the earliest
pair, matching a full rescan that keeps the first strict minimum.  A
``literal`` switch selects the quadratic rescan variant for
differential testing.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, SegmentStore, TimeInterval
from .index import TemporalIndex, candidate_range


@dataclass(frozen=True)
class QueryBatch:
    """One contiguous run of query ordinals with its cached index lookup.

    ``first``/``last`` are the candidate ordinals the batch's extent
    selects from the indexed store, or None when no bin overlaps.
    """

    lo: int
    hi: int
    extent: TimeInterval
    first: int | None
    last: int | None

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def candidates(self) -> int:
        return 0 if self.first is None else self.last - self.first + 1

    @property
    def interactions(self) -> int:
        return self.size * self.candidates


@dataclass(frozen=True)
class BatchPlan:
    """An ordered partition of a query set into batches."""

    queries: SegmentStore
    batches: tuple[QueryBatch, ...]

    def __post_init__(self) -> None:
        n = len(self.queries)
        if not self.batches:
            raise DomainError("a plan needs at least one batch")
        expect = 0
        for b in self.batches:
            if b.lo != expect or b.hi < b.lo:
                raise DomainError(f"batches do not partition 0..{n - 1} contiguously")
            expect = b.hi + 1
        if expect != n:
            raise DomainError(f"batches cover 0..{expect - 1} but the query set has {n} segments")

    @property
    def total_interactions(self) -> int:
        return sum(b.interactions for b in self.batches)

    def sizes(self) -> list[int]:
        return [b.size for b in self.batches]


def num_interactions(batch: QueryBatch, index: TemporalIndex) -> int:
    """Interactions the batch incurs against the given index.

    Recomputed from the batch extent; equals ``batch.interactions``
    when the batch was planned against the same index.
    """
    span = candidate_range(index, batch.extent)
    if span is None:
        return 0
    return batch.size * (span[1] - span[0] + 1)


# ── planner internals ───────────────────────────────────────────────────────


class _Node:
    """Mutable batch under construction, linked to its neighbors."""

    __slots__ = ("lo", "hi", "begin", "end", "first", "last", "ints",
                 "prev", "next", "version", "dead")

    def __init__(self, lo, hi, begin, end, first, last, ints):
        self.lo = lo
        self.hi = hi
        self.begin = begin
        self.end = end
        self.first = first
        self.last = last
        self.ints = ints
        self.prev: _Node | None = None
        self.next: _Node | None = None
        self.version = 0
        self.dead = False

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


def _span_lookup(index, begin, end, size):
    span = candidate_range(index, TimeInterval(begin, end))
    if span is None:
        return None, None, 0
    return span[0], span[1], size * (span[1] - span[0] + 1)


def _merged_shape(a: _Node, b: _Node) -> tuple[float, float, int]:
    return a.begin, max(a.end, b.end), a.size + b.size


def _merged_ints(index: TemporalIndex, a: _Node, b: _Node) -> tuple[int, int | None, int | None]:
    begin, end, size = _merged_shape(a, b)
    first, last, ints = _span_lookup(index, begin, end, size)
    return ints, first, last


def _merge(a: _Node, b: _Node, first, last, ints) -> _Node:
    a.hi = b.hi
    a.end = max(a.end, b.end)
    a.first = first
    a.last = last
    a.ints = ints
    a.next = b.next
    if b.next is not None:
        b.next.prev = a
    b.dead = True
    a.version += 1
    return a


def _singleton_nodes(queries: SegmentStore, index: TemporalIndex) -> list[_Node]:
    nodes: list[_Node] = []
    prev: _Node | None = None
    for i in range(len(queries)):
        begin = float(queries.ts[i])
        end = float(queries.te[i])
        first, last, ints = _span_lookup(index, begin, end, 1)
        node = _Node(i, i, begin, end, first, last, ints)
        node.prev = prev
        if prev is not None:
            prev.next = node
        nodes.append(node)
        prev = node
    return nodes


def _emit(queries: SegmentStore, head: _Node | None, nodes: list[_Node]) -> BatchPlan:
    live = []
    node = head if head is not None else next(n for n in nodes if not n.dead)
    while node.prev is not None:
        node = node.prev
    while node is not None:
        live.append(node)
        node = node.next
    batches = tuple(
        QueryBatch(n.lo, n.hi, TimeInterval(n.begin, n.end), n.first, n.last)
        for n in live
    )
    return BatchPlan(queries, batches)


def _check_queries(queries: SegmentStore) -> None:
    if len(queries) == 0:
        raise DomainError("query set is empty")


# ── periodic ────────────────────────────────────────────────────────────────


def periodic(queries: SegmentStore, s: int, index: TemporalIndex | None = None) -> BatchPlan:
    """Fixed-size batches of s consecutive queries; the remainder stays
    as a final batch of fewer than s queries.

    The candidate lookup is filled in when an index is supplied and left
    unresolved otherwise (search execution resolves ranges itself).
    """
    _check_queries(queries)
    if s < 1:
        raise DomainError(f"batch size s={s} must be >= 1")
    n = len(queries)
    offsets = np.arange(0, n, s)
    ends = np.maximum.reduceat(queries.te, offsets)
    batches = []
    for k, lo in enumerate(offsets):
        lo = int(lo)
        hi = min(lo + s, n) - 1
        extent = TimeInterval(float(queries.ts[lo]), float(ends[k]))
        first = last = None
        if index is not None:
            span = candidate_range(index, extent)
            if span is not None:
                first, last = span
        batches.append(QueryBatch(lo, hi, extent, first, last))
    return BatchPlan(queries, tuple(batches))


# ── cheapest-merge family ───────────────────────────────────────────────────


def _push_pair(heap, seq, index, a: _Node, b: _Node, max_size: int | None) -> int:
    if max_size is not None and a.size + b.size > max_size:
        return seq
    ints, first, last = _merged_ints(index, a, b)
    delta = ints - (a.ints + b.ints)
    heapq.heappush(heap, (delta, a.lo, seq, a, b, a.version, b.version, ints, first, last))
    return seq + 1


def _cheapest_merges(nodes, index, *, stop_count: int | None, max_size: int | None) -> int:
    """Repeatedly merge the minimum-cost adjacent pair.

    Stops when the live batch count reaches ``stop_count`` or, with
    ``stop_count`` None, when no (size-legal) merge remains.  Returns
    the final live count.
    """
    heap: list = []
    seq = 0
    for a in nodes:
        if a.next is not None:
            seq = _push_pair(heap, seq, index, a, a.next, max_size)
    count = len(nodes)
    while heap and (stop_count is None or count > stop_count):
        delta, _lo, _seq, a, b, va, vb, ints, first, last = heapq.heappop(heap)
        if a.dead or b.dead or a.version != va or b.version != vb or a.next is not b:
            continue
        a = _merge(a, b, first, last, ints)
        count -= 1
        if a.prev is not None:
            seq = _push_pair(heap, seq, index, a.prev, a, max_size)
        if a.next is not None:
            seq = _push_pair(heap, seq, index, a, a.next, max_size)
    return count


def _cheapest_merges_literal(nodes, index, *, stop_count: int | None, max_size: int | None) -> int:
    """Full-rescan variant: each round re-evaluates every adjacent pair
    and merges the first strict minimum.  Quadratic; testing only."""
    count = len(nodes)
    head = next(n for n in nodes if not n.dead)
    while stop_count is None or count > stop_count:
        best = None
        a = head
        while a is not None and a.next is not None:
            b = a.next
            if max_size is None or a.size + b.size <= max_size:
                ints, first, last = _merged_ints(index, a, b)
                delta = ints - (a.ints + b.ints)
                if best is None or delta < best[0]:
                    best = (delta, a, b, ints, first, last)
            a = a.next
        if best is None:
            break
        _, a, b, ints, first, last = best
        merged = _merge(a, b, first, last, ints)
        if merged.prev is None:
            head = merged
        count -= 1
    return count


def setsplit_fixed(
    queries: SegmentStore, index: TemporalIndex, num_batches: int, *, literal: bool = False
) -> BatchPlan:
    """Merge cheapest adjacent pairs until exactly num_batches remain.

    Starts from singleton batches; each round merges the adjacent pair
    whose merge increases total interactions the least (earliest pair on
    ties).  A query set of num_batches or fewer queries comes back as
    singletons.
    """
    _check_queries(queries)
    if num_batches < 1:
        raise DomainError(f"num_batches={num_batches} must be >= 1")
    nodes = _singleton_nodes(queries, index)
    merger = _cheapest_merges_literal if literal else _cheapest_merges
    merger(nodes, index, stop_count=num_batches, max_size=None)
    return _emit(queries, None, nodes)


def setsplit_minmax(
    queries: SegmentStore,
    index: TemporalIndex,
    min_size: int,
    max_size: int,
    *,
    literal: bool = False,
) -> BatchPlan:
    """Cheapest-first merging within a size ceiling, then a floor pass.

    Phase 1 performs minimum-cost merges, skipping any merge that would
    exceed max_size, until no legal merge remains.  Phase 2 walks the
    batches in order and merges each batch smaller than min_size into
    whichever neighbor yields the fewer merged interactions (a missing
    neighbor counts as infinitely many; equal costs go right).  Phase 2
    may push a batch past max_size; callers can count such batches.
    """
    _check_queries(queries)
    if min_size < 1:
        raise DomainError(f"min_size={min_size} must be >= 1")
    if max_size < min_size:
        raise DomainError(f"max_size={max_size} must be >= min_size={min_size}")
    nodes = _singleton_nodes(queries, index)
    merger = _cheapest_merges_literal if literal else _cheapest_merges
    merger(nodes, index, stop_count=None, max_size=max_size)

    # Floor pass: everything left of the cursor is already >= min_size
    # and can only grow, so one forward walk suffices.
    node = next(n for n in nodes if not n.dead)
    while node.prev is not None:
        node = node.prev
    while node is not None:
        if node.size >= min_size:
            node = node.next
            continue
        left, right = node.prev, node.next
        if left is None and right is None:
            break
        left_ints = _merged_ints(index, left, node) if left is not None else None
        right_ints = _merged_ints(index, node, right) if right is not None else None
        li = left_ints[0] if left_ints is not None else math.inf
        ri = right_ints[0] if right_ints is not None else math.inf
        if li < ri:
            node = _merge(left, node, left_ints[1], left_ints[2], left_ints[0])
        else:
            node = _merge(node, right, right_ints[1], right_ints[2], right_ints[0])
    return _emit(queries, None, nodes)


def setsplit_max(
    queries: SegmentStore, index: TemporalIndex, max_size: int, *, literal: bool = False
) -> BatchPlan:
    """Ceiling-only variant: minmax with the floor dropped to 1."""
    return setsplit_minmax(queries, index, 1, max_size, literal=literal)


# ── single-pass greedy family ───────────────────────────────────────────────


def _greedy_free_pass(nodes, index) -> None:
    # Merge while the merge is free (adds no interactions), without
    # advancing; sparse regions collapse in one forward walk.
    node = nodes[0]
    while node is not None and node.next is not None:
        b = node.next
        ints, first, last = _merged_ints(index, node, b)
        if ints == node.ints + b.ints:
            _merge(node, b, first, last, ints)
        else:
            node = node.next


def greedy_min(queries: SegmentStore, index: TemporalIndex, bound: int) -> BatchPlan:
    """Free merges, then grow batches to at least ``bound`` queries.

    Phase 2 merges a batch with its successor while the batch has fewer
    than bound queries; the final batch may stay smaller for lack of a
    successor.
    """
    _check_queries(queries)
    if bound < 1:
        raise DomainError(f"bound={bound} must be >= 1")
    nodes = _singleton_nodes(queries, index)
    _greedy_free_pass(nodes, index)
    node = nodes[0] if not nodes[0].dead else next(n for n in nodes if not n.dead)
    while node.prev is not None:
        node = node.prev
    while node is not None and node.next is not None:
        if node.size < bound:
            ints, first, last = _merged_ints(index, node, node.next)
            _merge(node, node.next, first, last, ints)
        else:
            node = node.next
    return _emit(queries, None, nodes)


def greedy_max(queries: SegmentStore, index: TemporalIndex, bound: int) -> BatchPlan:
    """Free merges, then grow batches until they exceed ``bound``.

    Phase 2 merges a batch with its successor while the batch has at
    most bound queries, advancing once it exceeds the bound, so batch
    sizes overshoot the bound by up to one merge.
    """
    _check_queries(queries)
    if bound < 1:
        raise DomainError(f"bound={bound} must be >= 1")
    nodes = _singleton_nodes(queries, index)
    _greedy_free_pass(nodes, index)
    node = nodes[0] if not nodes[0].dead else next(n for n in nodes if not n.dead)
    while node.prev is not None:
        node = node.prev
    while node is not None and node.next is not None:
        if node.size > bound:
            node = node.next
        else:
            ints, first, last = _merged_ints(index, node, node.next)
            _merge(node, node.next, first, last, ints)
    return _emit(queries, None, nodes)
