"""Synthetic trajectory datasets and CSV persistence.

Trajectories are 3-D random walks sampled once per time unit: each axis
takes an independent normal step scaled by ``step_scale``, starting
from a uniform position inside a cube of side ``arena``.  Profiles
differ in how trajectory start times (and for ``exp``, lengths) are
distributed, which shapes how segments pile up along the time line:

* ``uniform``: start times uniform over a window.
* ``normal``: start times normal, rejected into a window.
* ``normal5``: start times from one of five normal components chosen
  uniformly per trajectory; component means sit at the midpoints of
  five equal sub-windows and share a std of one twentieth of the window.
* ``exp``: per-trajectory point counts exponential (rejected into a
  range, rounded), start times uniform over a short early window, which
  yields a dense head and a long sparse tail.

All randomness flows through one seeded generator, so a profile plus a
seed pins the dataset byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .core import DomainError, FormatError, SegmentStore

PROFILE_KINDS = ("uniform", "normal", "normal5", "exp")

CSV_HEADER = ["traj_id", "seg_id", "x_s", "y_s", "z_s", "t_s", "x_e", "y_e", "z_e", "t_e"]


@dataclass(frozen=True)
class GenProfile:
    """Dataset recipe; field applicability depends on ``kind``.

    ``timesteps`` is the number of sample points per trajectory (one
    less segment than points); the ``exp`` kind draws it per trajectory
    from an exponential with mean ``exp_mean`` rejected into
    [steps_min, steps_max] instead.  ``start_window`` bounds start times
    for every kind; ``normal`` kinds reject into it, ``uniform`` and
    ``exp`` draw uniformly from it.
    """

    kind: str
    trajectories: int
    seed: int
    timesteps: int = 400
    start_window: tuple[float, float] = (0.0, 100.0)
    normal_mean: float = 200.0
    normal_std: float = 200.0
    exp_mean: float = 70.0
    steps_min: int = 2
    steps_max: int = 1000
    step_scale: float = 1.0
    arena: float = 100.0

    def __post_init__(self) -> None:
        if self.kind not in PROFILE_KINDS:
            raise DomainError(f"unknown profile kind {self.kind!r}; expected one of {PROFILE_KINDS}")
        if self.trajectories < 1:
            raise DomainError(f"trajectories={self.trajectories} must be >= 1")
        if self.timesteps < 2:
            raise DomainError(f"timesteps={self.timesteps} must be >= 2 (one segment)")
        if self.steps_min < 2:
            raise DomainError(f"steps_min={self.steps_min} must be >= 2")
        if self.steps_max < self.steps_min:
            raise DomainError(f"steps_max={self.steps_max} must be >= steps_min")
        if self.start_window[1] < self.start_window[0]:
            raise DomainError(f"start_window {self.start_window} is inverted")
        if self.exp_mean <= 0 or self.step_scale <= 0 or self.arena <= 0:
            raise DomainError("exp_mean, step_scale and arena must be positive")


def make_profile(kind: str, trajectories: int, seed: int, **overrides) -> GenProfile:
    """Profile with per-kind default start windows applied.

    ``normal``/``normal5`` default to a (0, 400) window; ``exp``
    defaults to (0, 20); ``uniform`` keeps (0, 100).
    """
    profile = GenProfile(kind=kind, trajectories=trajectories, seed=seed)
    if kind in ("normal", "normal5") and "start_window" not in overrides:
        profile = replace(profile, start_window=(0.0, 400.0))
    if kind == "exp" and "start_window" not in overrides:
        profile = replace(profile, start_window=(0.0, 20.0))
    return replace(profile, **overrides) if overrides else profile


def _reject_into(rng: np.random.Generator, draw, lo: float, hi: float, n: int) -> np.ndarray:
    out = np.empty(n, dtype=np.float64)
    have = 0
    while have < n:
        cand = draw(rng, n - have)
        cand = cand[(cand >= lo) & (cand <= hi)]
        out[have : have + cand.shape[0]] = cand
        have += cand.shape[0]
    return out


def _start_times(profile: GenProfile, rng: np.random.Generator) -> np.ndarray:
    lo, hi = profile.start_window
    n = profile.trajectories
    if profile.kind in ("uniform", "exp"):
        return rng.uniform(lo, hi, n)
    if profile.kind == "normal":
        return _reject_into(
            rng, lambda r, k: r.normal(profile.normal_mean, profile.normal_std, k), lo, hi, n
        )
    # normal5: five components at sub-window midpoints, shared narrow std.
    span = hi - lo
    means = lo + span * (2 * np.arange(5) + 1) / 10.0
    std = span / 20.0
    component = rng.integers(0, 5, n)
    starts = np.empty(n, dtype=np.float64)
    for k in range(5):
        mask = component == k
        cnt = int(mask.sum())
        if cnt:
            starts[mask] = _reject_into(rng, lambda r, m: r.normal(means[k], std, m), lo, hi, cnt)
    return starts


def _point_counts(profile: GenProfile, rng: np.random.Generator) -> np.ndarray:
    if profile.kind != "exp":
        return np.full(profile.trajectories, profile.timesteps, dtype=np.int64)
    raw = _reject_into(
        rng, lambda r, k: r.exponential(profile.exp_mean, k),
        float(profile.steps_min), float(profile.steps_max), profile.trajectories,
    )
    return np.rint(raw).astype(np.int64)


def generate(profile: GenProfile) -> SegmentStore:
    """Materialize the profile into a sorted segment store.

    Each trajectory contributes points - 1 segments with unit time per
    step; segment ids number steps within their trajectory.
    """
    rng = np.random.default_rng(profile.seed)
    starts = _start_times(profile, rng)
    counts = _point_counts(profile, rng)

    total_pts = int(counts.sum())
    total_segs = total_pts - profile.trajectories
    traj = np.empty(total_segs, dtype=np.int64)
    seg = np.empty(total_segs, dtype=np.int64)
    ts = np.empty(total_segs, dtype=np.float64)
    te = np.empty(total_segs, dtype=np.float64)
    pos_cols = [np.empty(total_segs, dtype=np.float64) for _ in range(6)]

    at = 0
    for i in range(profile.trajectories):
        n_pts = int(counts[i])
        n_seg = n_pts - 1
        origin = rng.uniform(0.0, profile.arena, 3)
        steps = rng.normal(0.0, profile.step_scale, (n_pts - 1, 3))
        pts = origin + np.vstack([np.zeros(3), np.cumsum(steps, axis=0)])
        times = starts[i] + np.arange(n_pts, dtype=np.float64)
        sl = slice(at, at + n_seg)
        traj[sl] = i
        seg[sl] = np.arange(n_seg)
        ts[sl] = times[:-1]
        te[sl] = times[1:]
        for ax in range(3):
            pos_cols[ax][sl] = pts[:-1, ax]
            pos_cols[3 + ax][sl] = pts[1:, ax]
        at += n_seg

    return SegmentStore(
        traj, seg, pos_cols[0], pos_cols[1], pos_cols[2], ts,
        pos_cols[3], pos_cols[4], pos_cols[5], te, validate=False,
    )


def sample_queries(source: SegmentStore, num_traj: int, seed: int) -> SegmentStore:
    """Select whole trajectories from a source store, without replacement.

    The selected trajectories' segments come back as a fresh sorted
    store; trajectory and segment ids are preserved.
    """
    ids = np.unique(source.traj)
    if num_traj < 1 or num_traj > ids.shape[0]:
        raise DomainError(
            f"num_traj={num_traj} must be in 1..{ids.shape[0]} (distinct trajectories)"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(ids, size=num_traj, replace=False)
    mask = np.isin(source.traj, chosen)
    return SegmentStore(
        source.traj[mask], source.seg[mask],
        source.xs[mask], source.ys[mask], source.zs[mask], source.ts[mask],
        source.xe[mask], source.ye[mask], source.ze[mask], source.te[mask],
        validate=False,
    )


# ── CSV persistence ─────────────────────────────────────────────────────────


def save(store: SegmentStore, path: str) -> None:
    """Write the store as CSV, one segment per row in ordinal order.

    Floats are written in shortest round-trip form, so save followed by
    load reproduces the store exactly.
    """
    ids = (store.traj, store.seg)
    floats = (store.xs, store.ys, store.zs, store.ts, store.xe, store.ye, store.ze, store.te)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for i in range(len(store)):
            row = [str(int(c[i])) for c in ids] + [repr(float(c[i])) for c in floats]
            fh.write(",".join(row) + "\n")


def load(path: str, *, strict: bool = False) -> SegmentStore:
    """Read a segment CSV back into a store.

    Rows failing validation (wrong arity, non-numeric fields, t_e < t_s,
    non-finite values) raise FormatError naming the offending line.
    Rows may arrive unsorted; they are sorted by start time unless
    ``strict`` is set, in which case unsorted input is an error.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if header != CSV_HEADER:
            raise FormatError(f"{path}: bad header {header!r}")
        rows: list[tuple] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 10:
                raise FormatError(f"{path}:{lineno}: expected 10 fields, got {len(row)}")
            try:
                vals = (int(row[0]), int(row[1]), *(float(v) for v in row[2:]))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(v) for v in vals[2:]):
                raise FormatError(f"{path}:{lineno}: non-finite coordinate")
            if vals[9] < vals[5]:
                raise FormatError(
                    f"{path}:{lineno}: segment ends at t={vals[9]!r} before it starts at t={vals[5]!r}"
                )
            rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: no segments")
    arr = np.asarray(rows, dtype=np.float64)
    ts = arr[:, 5]
    if strict and (np.diff(ts) < 0).any():
        bad = int(np.argmax(np.diff(ts) < 0)) + 3
        raise FormatError(f"{path}:{bad}: rows not sorted by t_s (strict mode)")
    return SegmentStore(
        arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64),
        arr[:, 2], arr[:, 3], arr[:, 4], arr[:, 5],
        arr[:, 6], arr[:, 7], arr[:, 8], arr[:, 9],
        validate=False,
    )
