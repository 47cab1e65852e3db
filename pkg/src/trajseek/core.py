"""Domain types and segment-pair proximity geometry.

A trajectory is a polyline in space-time: consecutive sample points
(x, y, z, t) joined by straight segments, with linear motion assumed
within each segment.  The primitive question answered here is, for two
segments and a distance threshold d, over which time interval the two
moving points are within d of each other.

Everything in this module is pure: no clocks, no randomness, no I/O.
Scalar functions operate on single segments; :func:`pair_intervals` is
the vectorized all-pairs form used by the search kernel and the
brute-force oracle.  Both paths perform the same arithmetic in the same
order so their hit decisions agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np


class DomainError(ValueError):
    """Raised when an argument violates a documented precondition."""


class FormatError(ValueError):
    """Raised when serialized data cannot be parsed or fails validation."""


# ── domain types ────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class SpacetimePoint:
    """A sample point: spatial position plus timestamp."""

    x: float
    y: float
    z: float
    t: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "z", "t"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"non-finite coordinate {name}={v!r}")


@dataclass(frozen=True)
class TimeInterval:
    """A closed time interval [begin, end]; begin == end is a single instant."""

    begin: float
    end: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.begin) and math.isfinite(self.end)):
            raise DomainError(f"non-finite interval ({self.begin!r}, {self.end!r})")
        if self.begin > self.end:
            raise DomainError(f"interval begin {self.begin!r} > end {self.end!r}")

    @property
    def length(self) -> float:
        return self.end - self.begin

    def contains(self, t: float) -> bool:
        return self.begin <= t <= self.end

    def overlaps(self, other: "TimeInterval") -> bool:
        return self.begin <= other.end and other.begin <= self.end


@dataclass(frozen=True)
class TrajectorySegment:
    """One directed polyline edge of a trajectory.

    ``seg_id`` numbers segments within their trajectory in temporal
    order.  Zero temporal extent (start.t == end.t) is legal and marks a
    waypoint that interacts with other segments only at that instant; a
    waypoint's position is its start position.
    """

    traj_id: int
    seg_id: int
    start: SpacetimePoint
    end: SpacetimePoint

    def __post_init__(self) -> None:
        if self.end.t < self.start.t:
            raise DomainError(
                f"segment ({self.traj_id},{self.seg_id}) ends at t={self.end.t!r} "
                f"before it starts at t={self.start.t!r}"
            )

    @property
    def extent(self) -> TimeInterval:
        return TimeInterval(self.start.t, self.end.t)


@dataclass(frozen=True)
class ResultItem:
    """One search hit: a (query segment, entry segment) pair and the
    closed time interval during which they are within the threshold."""

    query_traj_id: int
    query_seg_id: int
    entry_traj_id: int
    entry_seg_id: int
    interval: TimeInterval


# ── segment store ───────────────────────────────────────────────────────────


_FIELDS = ("traj", "seg", "xs", "ys", "zs", "ts", "xe", "ye", "ze", "te")


class SegmentStore:
    """An ordered, immutable collection of trajectory segments.

    Segments are kept in structure-of-arrays form and sorted by
    non-decreasing start time; the position of a segment in that order
    is its ordinal.  Ordinal ranges are what the temporal index and the
    search kernel exchange, so sortedness is validated (or established)
    at construction and never changes afterwards.
    """

    __slots__ = ("traj", "seg", "xs", "ys", "zs", "ts", "xe", "ye", "ze", "te")

    def __init__(
        self,
        traj: np.ndarray,
        seg: np.ndarray,
        xs: np.ndarray,
        ys: np.ndarray,
        zs: np.ndarray,
        ts: np.ndarray,
        xe: np.ndarray,
        ye: np.ndarray,
        ze: np.ndarray,
        te: np.ndarray,
        *,
        validate: bool = True,
        presorted: bool = False,
    ) -> None:
        traj = np.asarray(traj, dtype=np.int64)
        seg = np.asarray(seg, dtype=np.int64)
        cols = [np.asarray(a, dtype=np.float64) for a in (xs, ys, zs, ts, xe, ye, ze, te)]
        n = traj.shape[0]
        if any(a.shape != (n,) for a in [seg, *cols]):
            raise DomainError("segment store columns must share one length")
        if validate:
            stacked = np.concatenate(cols) if n else np.empty(0)
            if n and not np.isfinite(stacked).all():
                raise DomainError("segment store contains non-finite coordinates")
            if n and (cols[7] < cols[3]).any():
                bad = int(np.argmax(cols[7] < cols[3]))
                raise DomainError(f"segment at input row {bad} ends before it starts")
        if not presorted and n and (np.diff(cols[3]) < 0).any():
            order = np.argsort(cols[3], kind="stable")
            traj = traj[order]
            seg = seg[order]
            cols = [a[order] for a in cols]
        object.__setattr__(self, "traj", traj)
        object.__setattr__(self, "seg", seg)
        for name, col in zip(_FIELDS[2:], cols):
            object.__setattr__(self, name, col)

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("SegmentStore is immutable")

    # construction ----------------------------------------------------------

    @classmethod
    def from_segments(cls, segments: Iterable[TrajectorySegment]) -> "SegmentStore":
        segs = list(segments)
        n = len(segs)
        traj = np.fromiter((s.traj_id for s in segs), np.int64, n)
        seg = np.fromiter((s.seg_id for s in segs), np.int64, n)
        cols = {}
        for name, get in (
            ("xs", lambda s: s.start.x), ("ys", lambda s: s.start.y),
            ("zs", lambda s: s.start.z), ("ts", lambda s: s.start.t),
            ("xe", lambda s: s.end.x), ("ye", lambda s: s.end.y),
            ("ze", lambda s: s.end.z), ("te", lambda s: s.end.t),
        ):
            cols[name] = np.fromiter((get(s) for s in segs), np.float64, n)
        return cls(traj, seg, **cols)

    # basic accessors -------------------------------------------------------

    def __len__(self) -> int:
        return int(self.traj.shape[0])

    def segment(self, ordinal: int) -> TrajectorySegment:
        """Materialize the segment at the given ordinal."""
        i = int(ordinal)
        if not 0 <= i < len(self):
            raise DomainError(f"ordinal {ordinal} outside store of {len(self)} segments")
        return TrajectorySegment(
            int(self.traj[i]),
            int(self.seg[i]),
            SpacetimePoint(float(self.xs[i]), float(self.ys[i]), float(self.zs[i]), float(self.ts[i])),
            SpacetimePoint(float(self.xe[i]), float(self.ye[i]), float(self.ze[i]), float(self.te[i])),
        )

    def __iter__(self) -> Iterator[TrajectorySegment]:
        return (self.segment(i) for i in range(len(self)))

    @property
    def t0(self) -> float:
        """Earliest start time in the store."""
        if not len(self):
            raise DomainError("empty store has no temporal extent")
        return float(self.ts[0])

    @property
    def t_max(self) -> float:
        """Latest end time in the store."""
        if not len(self):
            raise DomainError("empty store has no temporal extent")
        return float(self.te.max())

    def view(self, lo: int, hi: int) -> "SegmentStore":
        """A zero-copy view of ordinals lo..hi inclusive (still sorted)."""
        if not (0 <= lo <= hi < len(self)):
            raise DomainError(f"view ({lo},{hi}) outside store of {len(self)} segments")
        sl = slice(lo, hi + 1)
        return SegmentStore(
            self.traj[sl], self.seg[sl],
            self.xs[sl], self.ys[sl], self.zs[sl], self.ts[sl],
            self.xe[sl], self.ye[sl], self.ze[sl], self.te[sl],
            validate=False, presorted=True,
        )

    def range_extent(self, lo: int, hi: int) -> TimeInterval:
        """Temporal extent [min start, max end] of ordinals lo..hi inclusive."""
        if not (0 <= lo <= hi < len(self)):
            raise DomainError(f"range ({lo},{hi}) outside store of {len(self)} segments")
        return TimeInterval(float(self.ts[lo]), float(self.te[lo : hi + 1].max()))


# ── result set ──────────────────────────────────────────────────────────────


class ResultSet:
    """Hits produced by a search, in structure-of-arrays form.

    Item order is an implementation detail; comparisons between runs
    should go through :meth:`canonical_order`.
    """

    __slots__ = ("query_traj", "query_seg", "entry_traj", "entry_seg", "t_begin", "t_end")

    def __init__(self, query_traj, query_seg, entry_traj, entry_seg, t_begin, t_end) -> None:
        self.query_traj = np.asarray(query_traj, dtype=np.int64)
        self.query_seg = np.asarray(query_seg, dtype=np.int64)
        self.entry_traj = np.asarray(entry_traj, dtype=np.int64)
        self.entry_seg = np.asarray(entry_seg, dtype=np.int64)
        self.t_begin = np.asarray(t_begin, dtype=np.float64)
        self.t_end = np.asarray(t_end, dtype=np.float64)

    @classmethod
    def empty(cls) -> "ResultSet":
        z = np.empty(0, dtype=np.int64)
        f = np.empty(0, dtype=np.float64)
        return cls(z, z, z, z, f, f)

    @classmethod
    def concatenate(cls, parts: Iterable["ResultSet"]) -> "ResultSet":
        parts = [p for p in parts if len(p)]
        if not parts:
            return cls.empty()
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in cls.__slots__))

    def __len__(self) -> int:
        return int(self.query_traj.shape[0])

    def items(self) -> Iterator[ResultItem]:
        for i in range(len(self)):
            yield ResultItem(
                int(self.query_traj[i]), int(self.query_seg[i]),
                int(self.entry_traj[i]), int(self.entry_seg[i]),
                TimeInterval(float(self.t_begin[i]), float(self.t_end[i])),
            )

    def canonical_order(self) -> "ResultSet":
        """A copy sorted by (query ids, entry ids, interval)."""
        order = np.lexsort((self.t_end, self.t_begin, self.entry_seg,
                            self.entry_traj, self.query_seg, self.query_traj))
        return ResultSet(*(getattr(self, f)[order] for f in self.__slots__))

    def key_array(self) -> np.ndarray:
        """Canonically ordered (n, 6) array for whole-set comparisons."""
        c = self.canonical_order()
        return np.column_stack([
            c.query_traj.astype(np.float64), c.query_seg.astype(np.float64),
            c.entry_traj.astype(np.float64), c.entry_seg.astype(np.float64),
            c.t_begin, c.t_end,
        ])


# ── scalar geometry ─────────────────────────────────────────────────────────


def position_at(segment: TrajectorySegment, t: float) -> tuple[float, float, float]:
    """Linearly interpolated position of the segment's moving point at time t.

    At the exact endpoint times the stored endpoint positions are
    returned unchanged, so clipping a segment to its own extent is an
    identity.  A zero-extent segment reports its start position.

    Raises:
        DomainError: if t lies outside the segment's temporal extent.
    """
    t0, t1 = segment.start.t, segment.end.t
    if t < t0 or t > t1:
        raise DomainError(f"t={t!r} outside segment extent [{t0!r}, {t1!r}]")
    if t1 == t0 or t == t0:
        return (segment.start.x, segment.start.y, segment.start.z)
    if t == t1:
        return (segment.end.x, segment.end.y, segment.end.z)
    f = (t - t0) / (t1 - t0)
    return (
        segment.start.x + f * (segment.end.x - segment.start.x),
        segment.start.y + f * (segment.end.y - segment.start.y),
        segment.start.z + f * (segment.end.z - segment.start.z),
    )


def temporal_intersection(
    a: TrajectorySegment, b: TrajectorySegment
) -> tuple[TrajectorySegment, TrajectorySegment] | None:
    """Clip both segments to their shared time span.

    Returns the pair re-interpolated onto [max start, min end], or None
    when the extents do not overlap.  Extents that merely touch yield a
    degenerate shared instant.  Applying the function to its own output
    reproduces that output exactly.
    """
    ta = max(a.start.t, b.start.t)
    tb = min(a.end.t, b.end.t)
    if ta > tb:
        return None

    def clip(s: TrajectorySegment) -> TrajectorySegment:
        if s.start.t == ta and s.end.t == tb:
            return s
        px = position_at(s, ta)
        qx = position_at(s, tb)
        return TrajectorySegment(
            s.traj_id, s.seg_id,
            SpacetimePoint(px[0], px[1], px[2], ta),
            SpacetimePoint(qx[0], qx[1], qx[2], tb),
        )

    return clip(a), clip(b)


_SPAN_TOL = 1e-9


def threshold_interval(
    a: TrajectorySegment, b: TrajectorySegment, d: float
) -> TimeInterval | None:
    """Closed time interval during which the two moving points are within d.

    Both segments must span the same time interval (produce them with
    :func:`temporal_intersection`).  With u the offset at the span's
    start and w the relative displacement over the span, squared
    distance in normalized time is the quadratic
    q(lambda) = |w|^2 lambda^2 + 2(u.w) lambda + |u|^2; the interval is
    the solution of q(lambda) <= d^2 intersected with [0, 1], mapped
    back to absolute time.  Working in normalized time avoids dividing
    by the span, so arbitrarily short spans stay finite.  Inequalities
    are closed: grazing contact at exactly d counts, as a single
    instant if need be.

    Args:
        a: first segment, already clipped.
        b: second segment spanning the same interval (tolerance 1e-9).
        d: distance threshold, d >= 0.

    Returns:
        The proximity interval, or None if the pair never comes within d.

    Raises:
        DomainError: if d < 0 or the spans disagree beyond tolerance.
    """
    if d < 0 or not math.isfinite(d):
        raise DomainError(f"threshold d={d!r} must be finite and non-negative")
    if abs(a.start.t - b.start.t) > _SPAN_TOL or abs(a.end.t - b.end.t) > _SPAN_TOL:
        raise DomainError(
            f"segments span [{a.start.t!r},{a.end.t!r}] and "
            f"[{b.start.t!r},{b.end.t!r}]; clip them to a common interval first"
        )
    ta = max(a.start.t, b.start.t)
    tb = min(a.end.t, b.end.t)
    span = tb - ta
    d2 = d * d

    ux = a.start.x - b.start.x
    uy = a.start.y - b.start.y
    uz = a.start.z - b.start.z
    cc = ux * ux + uy * uy + uz * uz

    if span == 0.0:
        return TimeInterval(ta, tb) if cc <= d2 else None

    wx = (a.end.x - a.start.x) - (b.end.x - b.start.x)
    wy = (a.end.y - a.start.y) - (b.end.y - b.start.y)
    wz = (a.end.z - a.start.z) - (b.end.z - b.start.z)

    aa = wx * wx + wy * wy + wz * wz
    bb = 2.0 * (ux * wx + uy * wy + uz * wz)

    if aa == 0.0:
        # Zero relative displacement: constant separation over the span.
        return TimeInterval(ta, tb) if cc <= d2 else None

    disc = bb * bb - 4.0 * aa * (cc - d2)
    if disc < 0.0:
        return None
    sd = math.sqrt(disc)
    # Sign-aware form: qq is the root numerator with no cancellation.
    qq = -0.5 * (bb + sd) if bb >= 0.0 else -0.5 * (bb - sd)
    r1 = qq / aa
    r2 = (cc - d2) / qq if qq != 0.0 else r1
    lo = min(r1, r2)
    hi = max(r1, r2)
    if lo > 1.0 or hi < 0.0:
        return None
    begin = ta if lo <= 0.0 else ta + lo * span
    end = tb if hi >= 1.0 else ta + hi * span
    return TimeInterval(begin, end)


# ── vectorized pair kernel ──────────────────────────────────────────────────


@dataclass(frozen=True)
class PairHits:
    """Hits of an all-pairs proximity evaluation.

    ``row_idx``/``col_idx`` index into the two stores handed to
    :func:`pair_intervals`; hits are emitted row-major, so all hits of
    row 0 come first.  Miss counters partition the non-hit pairs.
    """

    row_idx: np.ndarray
    col_idx: np.ndarray
    t_begin: np.ndarray
    t_end: np.ndarray
    temporal_misses: int
    spatial_misses: int

    def __len__(self) -> int:
        return int(self.row_idx.shape[0])


def pair_intervals(rows: SegmentStore, cols: SegmentStore, d: float) -> PairHits:
    """Evaluate every (row segment, col segment) pair against threshold d.

    Vectorized equivalent of running :func:`temporal_intersection`
    followed by :func:`threshold_interval` on each pair: the arithmetic
    mirrors the scalar functions operation for operation, so hit
    decisions and interval endpoints agree exactly.  Pairs whose extents
    do not overlap are rejected before any spatial arithmetic.

    Args:
        rows: segments forming the first axis of the pair mesh.
        cols: segments forming the second axis.
        d: distance threshold, d >= 0.

    Returns:
        PairHits with one entry per pair whose proximity interval is
        non-empty.
    """
    if d < 0 or not math.isfinite(d):
        raise DomainError(f"threshold d={d!r} must be finite and non-negative")
    nr, nc = len(rows), len(cols)
    empty = np.empty(0, dtype=np.int64)
    emptyf = np.empty(0, dtype=np.float64)
    if nr == 0 or nc == 0:
        return PairHits(empty, empty, emptyf, emptyf, 0, 0)

    ta = np.maximum(rows.ts[:, None], cols.ts[None, :])
    tb = np.minimum(rows.te[:, None], cols.te[None, :])
    overlap = ta <= tb
    n_overlap = int(np.count_nonzero(overlap))
    temporal_misses = nr * nc - n_overlap
    if n_overlap == 0:
        return PairHits(empty, empty, emptyf, emptyf, temporal_misses, 0)

    ri, ci = np.nonzero(overlap)
    ta = ta[ri, ci]
    tb = tb[ri, ci]
    span = tb - ta

    def clipped(store: SegmentStore, idx: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, ...]:
        ts = store.ts[idx]
        te = store.te[idx]
        ext = te - ts
        denom = np.where(ext == 0.0, 1.0, ext)
        f = (t - ts) / denom
        out = []
        for s, e in ((store.xs, store.xe), (store.ys, store.ye), (store.zs, store.ze)):
            s = s[idx]
            e = e[idx]
            p = s + f * (e - s)
            p = np.where((ext == 0.0) | (t == ts), s, np.where(t == te, e, p))
            out.append(p)
        return tuple(out)

    rax, ray, raz = clipped(rows, ri, ta)
    rbx, rby, rbz = clipped(rows, ri, tb)
    cax, cay, caz = clipped(cols, ci, ta)
    cbx, cby, cbz = clipped(cols, ci, tb)

    ux = rax - cax
    uy = ray - cay
    uz = raz - caz
    cc = ux * ux + uy * uy + uz * uz
    d2 = d * d

    wx = (rbx - rax) - (cbx - cax)
    wy = (rby - ray) - (cby - cay)
    wz = (rbz - raz) - (cbz - caz)

    aa = wx * wx + wy * wy + wz * wz
    bb = 2.0 * (ux * wx + uy * wy + uz * wz)

    const = aa == 0.0
    disc = bb * bb - 4.0 * aa * (cc - d2)
    has_root = disc >= 0.0
    sd = np.sqrt(np.where(has_root, disc, 0.0))
    qq = np.where(bb >= 0.0, -0.5 * (bb + sd), -0.5 * (bb - sd))
    safe_aa = np.where(const, 1.0, aa)
    safe_qq = np.where(qq == 0.0, 1.0, qq)
    r1 = qq / safe_aa
    r2 = np.where(qq == 0.0, r1, (cc - d2) / safe_qq)
    lo = np.minimum(r1, r2)
    hi = np.maximum(r1, r2)

    # Constant-separation pairs hit over the whole span or not at all.
    lo = np.where(const, 0.0, lo)
    hi = np.where(const, 1.0, hi)
    hit = np.where(
        const,
        cc <= d2,
        has_root & (lo <= 1.0) & (hi >= 0.0),
    )

    begin = np.where(lo <= 0.0, ta, ta + lo * span)
    end = np.where(hi >= 1.0, tb, ta + hi * span)

    keep = np.nonzero(hit)[0]
    spatial_misses = n_overlap - keep.shape[0]
    return PairHits(
        ri[keep], ci[keep], begin[keep], end[keep],
        temporal_misses, spatial_misses,
    )
