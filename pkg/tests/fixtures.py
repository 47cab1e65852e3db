"""Hand-built segment stores with frozen expected values.

The fifteen-segment store and the sixty-query store below are small
enough to index and count by hand.  The expected bin layouts and
interaction counts were derived once on paper and are asserted exactly;
any change in binning or counting semantics must fail these numbers.
"""

from __future__ import annotations

import numpy as np

from trajseek.core import SegmentStore

# Temporal extents (start, end) of the fifteen entry segments, already
# ordered by start time.  Segment k becomes trajectory k, segment 0.
FIFTEEN_EXTENTS = (
    (0.0, 1.7),
    (0.6, 1.5),
    (0.7, 1.3),
    (1.9, 3.7),
    (2.5, 7.5),
    (2.8, 4.6),
    (3.9, 5.5),
    (4.1, 5.8),
    (4.8, 6.2),
    (6.5, 9.4),
    (7.0, 7.8),
    (8.3, 11.0),
    (9.3, 11.5),
    (10.4, 12.0),
    (11.6, 11.9),
)

# Expected four-bin layout of the fifteen-segment store: ordinal ranges,
# then per-bin extents under each extent rule.
FIFTEEN_BIN_RANGES = ((0, 5), (6, 8), (9, 11), (12, 14))
FIFTEEN_BIN_STARTS = (0.0, 3.9, 6.5, 9.3)
FIFTEEN_BIN_ENDS = (7.5, 6.2, 11.0, 12.0)
FIFTEEN_GRID_STARTS = (0.0, 3.0, 6.0, 9.0)

# Temporal extents of the six ten-query groups making up the sixty-query
# store, and the interaction counts they produce against the four-bin
# index above.
SIXTY_GROUP_EXTENTS = (
    (0.1, 5.2),
    (4.8, 6.1),
    (5.7, 9.1),
    (8.0, 9.2),
    (8.5, 10.5),
    (11.5, 12.0),
)
SIXTY_GROUP_COUNTS = (90, 90, 120, 30, 60, 30)
SIXTY_GROUP_TOTAL = 420
SIXTY_GROUP_COUNTS_GRID = (90, 120, 150, 60, 60, 30)
SIXTY_GROUP_TOTAL_GRID = 510
SIXTY_SINGLE_BATCH_COUNT = 900


def store_from_extents(extents, traj_ids=None) -> SegmentStore:
    """Build a store whose segments have the given temporal extents.

    Spatial coordinates are synthetic (a short unit step along x from
    x = ordinal) since only the time axis matters to the index tests.
    """
    n = len(extents)
    if traj_ids is None:
        traj_ids = range(n)
    ts = np.array([a for a, _ in extents], dtype=np.float64)
    te = np.array([b for _, b in extents], dtype=np.float64)
    xs = np.arange(n, dtype=np.float64)
    zero = np.zeros(n, dtype=np.float64)
    return SegmentStore(
        np.asarray(list(traj_ids), dtype=np.int64),
        zero.astype(np.int64),
        xs,
        zero,
        zero,
        ts,
        xs + 1.0,
        zero,
        zero,
        te,
    )


def fifteen_segment_store() -> SegmentStore:
    """The fifteen-segment entry store behind the frozen bin layout."""
    return store_from_extents(FIFTEEN_EXTENTS)


def sixty_query_store() -> SegmentStore:
    """Sixty query segments in six groups of ten.

    Within a group the first nine queries are millisecond slivers at the
    group's start and the tenth stretches to the group's end, so each
    group's batch extent equals the group extent exactly while the
    per-query spans stay tiny and strictly ordered.
    """
    extents = []
    traj_ids = []
    for g, (begin, end) in enumerate(SIXTY_GROUP_EXTENTS):
        for k in range(9):
            start = begin + k * 1e-3
            extents.append((start, start + 1e-3))
            traj_ids.append(g)
        extents.append((begin + 9e-3, end))
        traj_ids.append(g)
    return store_from_extents(extents, traj_ids)
