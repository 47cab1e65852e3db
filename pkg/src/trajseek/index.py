"""Temporal binning index over a sorted segment store.

The store's time line [t0, t_max] is divided into m equal-width bins;
a segment belongs to the bin containing its start time (the final bin
also takes t_max itself).  Because the store is sorted by start time,
each bin's members occupy one contiguous ordinal range, so a bin is
fully described by its temporal extent and its first/last ordinals.

For a query interval the index returns a single contiguous candidate
ordinal range spanning every bin whose extent overlaps the query.
Overlapping bins that are non-contiguous get bridged, which makes the
range a conservative superset; completeness is what matters, since the
search kernel re-checks every candidate pair exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, SegmentStore, TimeInterval

DEFAULT_BIN_COUNT = 10_000

_EXTENT_RULES = ("member_extents", "grid_start")


@dataclass(frozen=True)
class TemporalBin:
    """One bin: temporal extent plus the member ordinal range.

    Empty bins carry ``None`` in every field; they can never contribute
    candidates and are skipped by lookups.
    """

    start: float | None
    end: float | None
    first: int | None
    last: int | None

    @property
    def empty(self) -> bool:
        return self.first is None

    @property
    def count(self) -> int:
        return 0 if self.first is None else self.last - self.first + 1


@dataclass(frozen=True, eq=False, repr=False)
class TemporalIndex:
    """Equal-width temporal bins over one segment store.

    ``extent_rule`` selects how a non-empty bin's temporal extent is
    derived.  The default ``member_extents`` uses the observed
    [min member start, max member end]; ``grid_start`` replaces the
    observed start with the bin's grid boundary t0 + j*width.  The two
    rules admit different (but always complete) candidate ranges; the
    default gives the tighter one.
    """

    m: int
    bin_width: float
    t0: float
    t_max: float
    extent_rule: str
    bins: tuple[TemporalBin, ...]
    # Parallel arrays over non-empty bins only, for fast lookup.
    _ne_start: np.ndarray
    _ne_end: np.ndarray
    _ne_first: np.ndarray
    _ne_last: np.ndarray

    def bin_of(self, t: float) -> int:
        """Index of the bin whose time range contains t."""
        if not self.t0 <= t <= self.t_max:
            raise DomainError(f"t={t!r} outside indexed range [{self.t0!r}, {self.t_max!r}]")
        if self.bin_width == 0.0:
            return 0
        j = int((t - self.t0) // self.bin_width)
        return min(j, self.m - 1)


def build_index(
    store: SegmentStore, m: int = DEFAULT_BIN_COUNT, *, extent_rule: str = "member_extents"
) -> TemporalIndex:
    """Build the m-bin temporal index for a store in one sorted pass.

    Args:
        store: non-empty segment store (sorted by construction).
        m: number of bins, m >= 1.
        extent_rule: ``member_extents`` or ``grid_start``.

    Returns:
        The index; every segment ordinal is covered by exactly one bin.
    """
    if m < 1:
        raise DomainError(f"bin count m={m} must be >= 1")
    if extent_rule not in _EXTENT_RULES:
        raise DomainError(f"unknown extent rule {extent_rule!r}; expected one of {_EXTENT_RULES}")
    n = len(store)
    if n == 0:
        raise DomainError("cannot index an empty store")

    t0 = store.t0
    t_max = store.t_max
    width = (t_max - t0) / m
    if width > 0.0:
        assign = np.minimum((store.ts - t0) // width, m - 1).astype(np.int64)
    else:
        assign = np.zeros(n, dtype=np.int64)

    # Sorted start times make bin assignment non-decreasing, so each
    # bin's members are one ordinal run found with two binary searches.
    firsts = np.searchsorted(assign, np.arange(m), side="left")
    lasts = np.searchsorted(assign, np.arange(m), side="right") - 1
    nonempty = lasts >= firsts

    ne_idx = np.nonzero(nonempty)[0]
    ne_first = firsts[ne_idx].astype(np.int64)
    ne_last = lasts[ne_idx].astype(np.int64)
    if extent_rule == "member_extents":
        ne_start = store.ts[ne_first].astype(np.float64)
    else:
        ne_start = t0 + ne_idx * width
    ne_end = np.maximum.reduceat(store.te, ne_first) if len(ne_idx) else np.empty(0)
    # reduceat reduces to the next boundary; runs are exactly the bins
    # because assignment is non-decreasing, so this is max end per bin.

    bins: list[TemporalBin] = []
    k = 0
    for j in range(m):
        if nonempty[j]:
            bins.append(TemporalBin(float(ne_start[k]), float(ne_end[k]),
                                    int(ne_first[k]), int(ne_last[k])))
            k += 1
        else:
            bins.append(TemporalBin(None, None, None, None))

    return TemporalIndex(
        m=m, bin_width=float(width), t0=t0, t_max=t_max, extent_rule=extent_rule,
        bins=tuple(bins),
        _ne_start=ne_start, _ne_end=np.asarray(ne_end, dtype=np.float64),
        _ne_first=ne_first, _ne_last=ne_last,
    )


def candidate_range(index: TemporalIndex, q: TimeInterval) -> tuple[int, int] | None:
    """Contiguous candidate ordinal range for a query interval.

    A bin qualifies when its closed extent intersects the closed query
    interval.  The answer spans from the first ordinal of the lowest
    qualifying bin to the last ordinal of the highest qualifying bin;
    non-qualifying bins sandwiched between them are included, keeping
    the range contiguous.

    Returns:
        Inclusive (first, last) ordinals, or None when no bin qualifies.
    """
    starts = index._ne_start
    if starts.shape[0] == 0:
        return None
    # Bins are start-sorted: everything past hi starts after the query.
    hi = int(np.searchsorted(starts, q.end, side="right"))
    if hi == 0:
        return None
    reach = index._ne_end[:hi] >= q.begin
    if not reach.any():
        return None
    k_lo = int(np.argmax(reach))
    k_hi = hi - 1 - int(np.argmax(reach[::-1]))
    return int(index._ne_first[k_lo]), int(index._ne_last[k_hi])


def interaction_count(index: TemporalIndex, batch_size: int, q: TimeInterval) -> int:
    """Number of pair evaluations a batch of the given size would incur.

    Every query in a batch is tested against every candidate of the
    batch's combined extent, so the count is batch_size times the
    candidate range size (zero when no bin qualifies).
    """
    if batch_size < 0:
        raise DomainError(f"batch_size={batch_size} must be >= 0")
    span = candidate_range(index, q)
    if span is None:
        return 0
    return batch_size * (span[1] - span[0] + 1)
