"""Calibrated response-time model and batch-size recommendation.

Search response time splits into a kernel part and a host part.  The
kernel part is modeled from four benchmarked cost surfaces, each a grid
of measured wall times over (queries per batch, candidates): the cost
of a batch whose interactions all hit, all miss temporally, or all miss
spatially, plus the fixed cost of launching a batch at all.  A real
batch mixes the three outcomes, so its predicted kernel time combines
the three pure surfaces at the batch's outcome fractions and subtracts
the twice-counted launch cost:

    kernel(i, c) = all_hit(h*i, c) + temporal(m_t*i, c)
                 + spatial(m_s*i, c) - 2 * launch(i, c)

with i interactions, c candidates, and (h, m_t, m_s) the outcome mix.
The temporal-miss fraction is exact (it only needs extent comparisons);
the hit fraction comes from a sampled per-epoch profile; the spatial
fraction is the remainder.

The host part is a per-batch invocation overhead that follows a power
law in batch size, offset + scale * s**exponent, plus a result-transfer
term linear in predicted result bytes.  Both are calibrated from
synthetic workloads on the running machine.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .core import DomainError, FormatError, SegmentStore, TimeInterval
from .engine import execute_batch, launch_overhead_pass, run_search
from .index import TemporalIndex, build_index, candidate_range
from .planner import BatchPlan, periodic

log = logging.getLogger(__name__)

RESULT_ITEM_BYTES = 48  # four int64 ids plus two float64 interval bounds

DEFAULT_QUERY_AXIS = (1, 5, 10, 20, 40, 60, 100, 150, 200, 300)
DEFAULT_EPOCHS = 50


# ── power-law fitting ───────────────────────────────────────────────────────


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of t = offset + scale * s**exponent."""

    offset: float
    scale: float
    exponent: float
    rss: float
    degenerate: bool

    def evaluate(self, s: float) -> float:
        return self.offset + self.scale * s**self.exponent


def _lstsq_at(c: float, s: np.ndarray, t: np.ndarray) -> tuple[float, float, float]:
    x = np.column_stack([np.ones_like(s), s**c])
    coef, _, _, _ = np.linalg.lstsq(x, t, rcond=None)
    rss = float(((x @ coef - t) ** 2).sum())
    return float(coef[0]), float(coef[1]), rss


def fit_power_law(s_values, times) -> PowerLawFit:
    """Fit t = offset + scale * s**exponent to samples.

    The exponent is found by scanning a coarse grid (offset and scale by
    linear least squares at each grid point) and then shrinking the best
    bracket by golden-section search; noiseless samples round-trip to
    high precision.  Constant samples fit with scale approximately zero
    and are reported as degenerate, since any exponent matches them.

    Args:
        s_values: batch sizes, positive, at least three distinct.
        times: measured values, same length.

    Returns:
        The fit with its residual sum of squares.
    """
    s = np.asarray(s_values, dtype=np.float64)
    t = np.asarray(times, dtype=np.float64)
    if s.shape != t.shape or s.ndim != 1:
        raise DomainError("s_values and times must be 1-D and equally long")
    if s.shape[0] < 3 or np.unique(s).shape[0] < 3:
        raise DomainError("need at least three distinct sample sizes")
    if (s <= 0).any():
        raise DomainError("sample sizes must be positive")

    grid = np.concatenate([np.linspace(-4.0, -0.02, 100), np.linspace(0.02, 4.0, 100)])
    best_k = 0
    best = None
    for k, c in enumerate(grid):
        _, _, rss = _lstsq_at(float(c), s, t)
        if best is None or rss < best:
            best = rss
            best_k = k

    lo = grid[max(0, best_k - 1)]
    hi = grid[min(grid.shape[0] - 1, best_k + 1)]
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    x1 = b - phi * (b - a)
    x2 = a + phi * (b - a)
    f1 = _lstsq_at(x1, s, t)[2]
    f2 = _lstsq_at(x2, s, t)[2]
    while b - a > 1e-12:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = _lstsq_at(x1, s, t)[2]
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = _lstsq_at(x2, s, t)[2]
    c = 0.5 * (a + b)
    offset, scale, rss = _lstsq_at(c, s, t)
    spread = float(np.abs(scale * s**c).max())
    degenerate = spread <= 1e-12 * max(1.0, float(np.abs(t).max()))
    return PowerLawFit(offset, scale, c, rss, degenerate)


# ── hit-rate profile ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class EpochRate:
    """Hit fraction observed for one temporal epoch.

    ``sampled`` is False when no batch midpoint fell in the epoch and
    the rate was backfilled with the profile-wide mean.
    """

    interval: TimeInterval
    rate: float
    sampled: bool


@dataclass(frozen=True)
class HitRateProfile:
    """Per-epoch hit fractions for one (store, query distribution, d).

    Epochs tile the store's temporal extent; a batch is attributed to
    the epoch containing its extent midpoint.
    """

    t0: float
    t_max: float
    d: float
    sample_batch_size: int
    epochs: tuple[EpochRate, ...]
    global_rate: float
    trials: int
    converged: bool

    @property
    def num_epochs(self) -> int:
        return len(self.epochs)

    def rate_at(self, t: float) -> float:
        """Hit fraction of the epoch containing t (clamped at the ends)."""
        width = (self.t_max - self.t0) / self.num_epochs
        if width <= 0.0:
            return self.epochs[0].rate
        j = int((t - self.t0) // width)
        j = min(max(j, 0), self.num_epochs - 1)
        return self.epochs[j].rate


def constant_hit_rate_profile(
    store: SegmentStore, d: float, rate: float, *, sample_batch_size: int = 1
) -> HitRateProfile:
    """Single-epoch profile with one fixed hit fraction (mostly for tests)."""
    interval = TimeInterval(store.t0, store.t_max)
    return HitRateProfile(
        store.t0, store.t_max, d, sample_batch_size,
        (EpochRate(interval, rate, True),), rate, 0, True,
    )


def _batch_windows(pool: SegmentStore, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Extent begin/end for every length-s window of consecutive queries."""
    n = len(pool)
    if n < s:
        raise DomainError(f"query pool of {n} segments has no batch of size {s}")
    windows = np.lib.stride_tricks.sliding_window_view(pool.te, s)
    ends = windows.max(axis=1)
    begins = pool.ts[: n - s + 1]
    return begins, ends


def estimate_hit_rates(
    store: SegmentStore,
    index: TemporalIndex,
    pool: SegmentStore,
    s: int,
    d: float,
    *,
    num_epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    max_rounds: int = 60,
    tolerance: float = 0.05,
    workers: int | None = None,
) -> HitRateProfile:
    """Sample per-epoch hit fractions from a representative query pool.

    The store's extent is cut into ``num_epochs`` equal epochs.  Each
    round draws, for every epoch that owns at least one length-s window
    of consecutive pool queries (by extent midpoint), one such window at
    random and runs it through the kernel, accumulating hits and
    interactions per epoch.  Rounds stop as soon as the profile predicts
    the pool's own total result count within ``tolerance`` of its true
    value (measured once up front), or at ``max_rounds``, in which case
    the profile is marked not converged.

    Epochs that own no window keep the profile-wide mean rate and are
    flagged unsampled.
    """
    if num_epochs < 1:
        raise DomainError(f"num_epochs={num_epochs} must be >= 1")
    if s < 1:
        raise DomainError(f"sample batch size s={s} must be >= 1")
    t0 = store.t0
    t_max = store.t_max
    width = (t_max - t0) / num_epochs

    pool_plan = periodic(pool, s, index)
    true_result, _ = run_search(store, index, pool_plan, d, workers=workers)
    true_hits = len(true_result)
    plan_ints = np.array([b.interactions for b in pool_plan.batches], dtype=np.float64)
    plan_mids = np.array(
        [0.5 * (b.extent.begin + b.extent.end) for b in pool_plan.batches], dtype=np.float64
    )

    begins, ends = _batch_windows(pool, s)
    mids = 0.5 * (begins + ends)
    if width > 0.0:
        window_epoch = np.clip(((mids - t0) // width).astype(np.int64), 0, num_epochs - 1)
    else:
        window_epoch = np.zeros(mids.shape[0], dtype=np.int64)
    offsets_by_epoch = [np.nonzero(window_epoch == e)[0] for e in range(num_epochs)]

    rng = np.random.default_rng(seed)
    hits_acc = np.zeros(num_epochs, dtype=np.float64)
    ints_acc = np.zeros(num_epochs, dtype=np.float64)

    def current_rates() -> tuple[np.ndarray, float]:
        total_i = float(ints_acc.sum())
        mean = float(hits_acc.sum()) / total_i if total_i > 0 else 0.0
        rates = np.where(ints_acc > 0, hits_acc / np.maximum(ints_acc, 1.0), mean)
        return rates, mean

    def predicted_total(rates: np.ndarray, mean: float) -> float:
        if width > 0.0:
            ep = np.clip(((plan_mids - t0) // width).astype(np.int64), 0, num_epochs - 1)
            return float((rates[ep] * plan_ints).sum())
        return float(mean * plan_ints.sum())

    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        for e in range(num_epochs):
            offs = offsets_by_epoch[e]
            if offs.shape[0] == 0:
                continue
            o = int(offs[rng.integers(0, offs.shape[0])])
            extent = TimeInterval(float(begins[o]), float(ends[o]))
            span = candidate_range(index, extent)
            if span is None:
                continue
            _, stats = execute_batch(store, pool.view(o, o + s - 1), span, d, workers=workers)
            hits_acc[e] += stats.hits
            ints_acc[e] += stats.interactions_computed
        rates, mean = current_rates()
        predicted = predicted_total(rates, mean)
        if true_hits == 0 or abs(predicted - true_hits) <= tolerance * true_hits:
            converged = True
            break
    if not converged:
        log.warning("hit-rate estimation did not converge in %d rounds", max_rounds)

    rates, mean = current_rates()
    epochs = tuple(
        EpochRate(
            TimeInterval(t0 + e * width, t_max if e == num_epochs - 1 else t0 + (e + 1) * width),
            float(rates[e]),
            bool(ints_acc[e] > 0),
        )
        for e in range(num_epochs)
    )
    return HitRateProfile(t0, t_max, d, s, epochs, mean, rounds, converged)


# ── interaction mix ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class InteractionMix:
    """Outcome fractions of a batch's interactions; they sum to one.

    When the sampled hit fraction and the exact temporal-miss fraction
    leave no room for a non-negative remainder, the hit fraction is cut
    back and ``clamped`` is set.
    """

    hit: float
    temporal_miss: float
    spatial_miss: float
    clamped: bool

    def __post_init__(self) -> None:
        for name in ("hit", "temporal_miss", "spatial_miss"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"fraction {name}={v!r} outside [0, 1]")
        if abs(self.hit + self.temporal_miss + self.spatial_miss - 1.0) > 1e-12:
            raise DomainError("interaction mix fractions must sum to 1")


def temporal_miss_fraction(store: SegmentStore, span: tuple[int, int], batch: SegmentStore) -> float:
    """Exact share of (query, candidate) pairs with disjoint extents."""
    first, last = int(span[0]), int(span[1])
    if not (0 <= first <= last < len(store)):
        raise DomainError(f"candidate span {span} outside store of {len(store)} segments")
    nb = len(batch)
    if nb == 0:
        raise DomainError("query batch is empty")
    total = (last - first + 1) * nb
    misses = 0
    step = max(1, (1 << 20) // nb)
    for lo in range(first, last + 1, step):
        hi = min(lo + step - 1, last)
        ta = np.maximum(store.ts[lo : hi + 1, None], batch.ts[None, :])
        tb = np.minimum(store.te[lo : hi + 1, None], batch.te[None, :])
        misses += int(np.count_nonzero(ta > tb))
    return misses / total


def interaction_mix(
    store: SegmentStore,
    span: tuple[int, int],
    batch: SegmentStore,
    profile: HitRateProfile,
) -> InteractionMix:
    """Outcome mix for one batch: exact temporal misses, profiled hits,
    spatial misses as the remainder (clamped into range if need be)."""
    t_miss = temporal_miss_fraction(store, span, batch)
    extent = batch.range_extent(0, len(batch) - 1)
    hit = profile.rate_at(0.5 * (extent.begin + extent.end))
    spatial = 1.0 - hit - t_miss
    clamped = False
    if spatial < 0.0:
        spatial = 0.0
        hit = 1.0 - t_miss
        clamped = True
    return InteractionMix(hit, t_miss, spatial, clamped)


# ── benchmark surfaces ──────────────────────────────────────────────────────


@dataclass(frozen=True)
class SurfaceGrid:
    """Benchmark grid: queries-per-batch axis and candidates axis."""

    q_axis: tuple[int, ...]
    c_axis: tuple[int, ...]

    def __post_init__(self) -> None:
        for name, axis in (("q_axis", self.q_axis), ("c_axis", self.c_axis)):
            if len(axis) < 2:
                raise DomainError(f"{name} needs at least two points")
            if any(v < 1 for v in axis):
                raise DomainError(f"{name} values must be >= 1")
            if any(b <= a for a, b in zip(axis, axis[1:])):
                raise DomainError(f"{name} must be strictly increasing")


def default_grid(c_max: int, c_min: int = 16, points: int = 10) -> SurfaceGrid:
    """Default query axis with a log-spaced candidates axis up to c_max."""
    if c_max <= c_min:
        raise DomainError(f"c_max={c_max} must exceed c_min={c_min}")
    c_axis = np.unique(np.rint(np.geomspace(c_min, c_max, points)).astype(np.int64))
    return SurfaceGrid(DEFAULT_QUERY_AXIS, tuple(int(v) for v in c_axis))


_SURFACE_NAMES = ("all_hit", "temporal_miss", "spatial_miss", "launch")


@dataclass(frozen=True, eq=False, repr=False)
class BenchSurfaces:
    """Measured kernel cost surfaces over the benchmark grid, in seconds.

    Lookups interpolate bilinearly in (queries, candidates) space with
    edge clamping; interactions map to the query axis through
    q = i / c.  A lookup at a measured grid point returns the measured
    value exactly.
    """

    q_axis: np.ndarray
    c_axis: np.ndarray
    all_hit: np.ndarray
    temporal_miss: np.ndarray
    spatial_miss: np.ndarray
    launch: np.ndarray
    noisy_points: int

    def __post_init__(self) -> None:
        nq, nc = self.q_axis.shape[0], self.c_axis.shape[0]
        for name in _SURFACE_NAMES:
            grid = getattr(self, name)
            if grid.shape != (nq, nc):
                raise DomainError(f"surface {name} shape {grid.shape} != ({nq}, {nc})")
            if (grid < 0).any():
                raise DomainError(f"surface {name} has negative times")
        if (np.diff(self.q_axis) <= 0).any() or (np.diff(self.c_axis) <= 0).any():
            raise DomainError("surface axes must be strictly increasing")

    def lookup(self, surface: str, interactions: float, candidates: float) -> float:
        """Interpolated cost of a batch with the given interactions and
        candidate count on one surface."""
        if surface not in _SURFACE_NAMES:
            raise DomainError(f"unknown surface {surface!r}")
        if candidates <= 0:
            raise DomainError(f"candidates={candidates!r} must be positive")
        if interactions < 0:
            raise DomainError(f"interactions={interactions!r} must be >= 0")
        grid = getattr(self, surface)
        q = interactions / candidates
        return _bilinear(self.q_axis, self.c_axis, grid, q, candidates)


def _bilinear(q_axis: np.ndarray, c_axis: np.ndarray, grid: np.ndarray, q: float, c: float) -> float:
    q = min(max(q, float(q_axis[0])), float(q_axis[-1]))
    c = min(max(c, float(c_axis[0])), float(c_axis[-1]))
    qi = int(np.searchsorted(q_axis, q, side="right")) - 1
    ci = int(np.searchsorted(c_axis, c, side="right")) - 1
    qi = min(qi, q_axis.shape[0] - 2)
    ci = min(ci, c_axis.shape[0] - 2)
    fq = (q - q_axis[qi]) / (q_axis[qi + 1] - q_axis[qi])
    fc = (c - c_axis[ci]) / (c_axis[ci + 1] - c_axis[ci])
    top = grid[qi, ci] * (1.0 - fc) + grid[qi, ci + 1] * fc
    bot = grid[qi + 1, ci] * (1.0 - fc) + grid[qi + 1, ci + 1] * fc
    return float(top * (1.0 - fq) + bot * fq)


def _pure_workload(case: str, q: int, c: int) -> tuple[SegmentStore, SegmentStore, float]:
    """Synthetic (store, batch, d) whose interactions all share one outcome."""
    zeros_c = np.zeros(c)
    zeros_q = np.zeros(q)

    def store_of(n, x0, x1, t0, t1):
        z = np.zeros(n)
        return SegmentStore(
            np.arange(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
            np.full(n, x0), z, z, np.full(n, t0),
            np.full(n, x1), z, z, np.full(n, t1),
            validate=False, presorted=True,
        )

    del zeros_c, zeros_q
    if case == "all_hit":
        # Stationary entries, queries sweeping past within d: every pair
        # hits through the quadratic path over the full shared span.
        return store_of(c, 0.0, 0.0, 0.0, 1.0), store_of(q, -0.5, 0.5, 0.0, 1.0), 2.0
    if case == "temporal_miss":
        return store_of(c, 0.0, 0.0, 0.0, 1.0), store_of(q, 0.0, 0.0, 2.0, 3.0), 1.0
    if case == "spatial_miss":
        return store_of(c, 0.0, 0.0, 0.0, 1.0), store_of(q, 1.0e6, 1.0e6 + 1.0, 0.0, 1.0), 1.0
    raise DomainError(f"unknown workload case {case!r}")


def calibrate_surfaces(
    grid: SurfaceGrid, *, reps: int = 3, workers: int | None = None
) -> BenchSurfaces:
    """Measure the four cost surfaces on the running machine.

    Every grid point is measured ``reps`` times and the median kept; a
    point whose spread exceeds half its median is measured once more and
    counted in ``noisy_points``.  Launch cost uses a kernel pass with
    the pair arithmetic elided, forcing the candidate span explicitly so
    the batch shape matches the other cases.
    """
    if reps < 1:
        raise DomainError(f"reps={reps} must be >= 1")
    nq, nc = len(grid.q_axis), len(grid.c_axis)
    grids = {name: np.zeros((nq, nc)) for name in _SURFACE_NAMES}
    noisy = 0

    for qi, q in enumerate(grid.q_axis):
        for ci, c in enumerate(grid.c_axis):
            span = (0, c - 1)
            for name in _SURFACE_NAMES:
                if name == "launch":
                    store, batch, _ = _pure_workload("temporal_miss", q, c)
                    samples = [
                        launch_overhead_pass(store, batch, span, workers=workers)
                        for _ in range(reps)
                    ]
                else:
                    store, batch, d = _pure_workload(name, q, c)
                    samples = []
                    for _ in range(reps):
                        _, stats = execute_batch(store, batch, span, d, workers=workers)
                        samples.append(stats.kernel_seconds)
                med = float(np.median(samples))
                if reps >= 2 and med > 0 and (max(samples) - min(samples)) > 0.5 * med:
                    extra = (
                        launch_overhead_pass(store, batch, span, workers=workers)
                        if name == "launch"
                        else execute_batch(store, batch, span, d, workers=workers)[1].kernel_seconds
                    )
                    samples.append(extra)
                    med = float(np.median(samples))
                    noisy += 1
                grids[name][qi, ci] = med

    return BenchSurfaces(
        np.asarray(grid.q_axis, dtype=np.float64),
        np.asarray(grid.c_axis, dtype=np.float64),
        grids["all_hit"], grids["temporal_miss"], grids["spatial_miss"], grids["launch"],
        noisy,
    )


# ── host overhead model ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class HostOverheadModel:
    """Per-run host costs for one query-set size bucket.

    Invocation overhead follows offset + scale * s**exponent (seconds as
    a function of batch size); result transfer adds
    ``transfer_per_byte`` seconds per predicted result byte.
    """

    n_queries: int
    offset: float
    scale: float
    exponent: float
    transfer_per_byte: float
    item_bytes: int = RESULT_ITEM_BYTES

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise DomainError(f"scale={self.scale!r} must be positive")
        if self.exponent >= 0:
            raise DomainError(f"exponent={self.exponent!r} must be negative")
        if self.transfer_per_byte < 0:
            raise DomainError(f"transfer_per_byte={self.transfer_per_byte!r} must be >= 0")
        if self.item_bytes < 1 or self.n_queries < 1:
            raise DomainError("item_bytes and n_queries must be >= 1")

    def evaluate(self, s: int, result_bytes: float) -> float:
        return self.offset + self.scale * float(s) ** self.exponent + self.transfer_per_byte * result_bytes


def nearest_host_model(models: tuple[HostOverheadModel, ...], n_queries: int) -> HostOverheadModel:
    """Model whose calibration bucket is closest to the query-set size."""
    if not models:
        raise DomainError("no host models available")
    return min(models, key=lambda m: abs(m.n_queries - n_queries))


def _overhead_workload(n_queries: int, n_entries: int, all_hit: bool) -> tuple[SegmentStore, SegmentStore, float]:
    def spread_store(n, x, drift):
        starts = np.linspace(0.0, 1.0, n, endpoint=False)
        z = np.zeros(n)
        return SegmentStore(
            np.arange(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
            np.full(n, x), z, z, starts,
            np.full(n, x + drift), z, z, starts + 1.0,
            validate=False, presorted=True,
        )

    store = spread_store(n_entries, 0.0, 0.0)
    batch = spread_store(n_queries, 0.0 if all_hit else 1.0e6, 1.0)
    return store, batch, 4.0 if all_hit else 1.0


def calibrate_host(
    n_queries: int,
    s_values,
    *,
    n_entries: int = 512,
    reps: int = 3,
    m: int = 64,
    workers: int | None = None,
) -> HostOverheadModel:
    """Calibrate the host model for one query-set size bucket.

    Invocation overhead is measured by running a zero-hit workload of
    ``n_queries`` queries at each batch size and fitting the power law
    to the non-kernel loop time.  The transfer coefficient comes from an
    all-hit workload's result accumulation time per byte.
    """
    s_arr = sorted({int(v) for v in s_values})
    if len(s_arr) < 3:
        raise DomainError("need at least three distinct batch sizes to calibrate")

    store, batch, d = _overhead_workload(n_queries, n_entries, all_hit=False)
    idx = build_index(store, m)
    overheads = []
    for s in s_arr:
        plan = periodic(batch, s, idx)
        samples = []
        for _ in range(reps):
            _, stats = run_search(store, idx, plan, d, workers=workers)
            samples.append(stats.overhead_seconds)
        overheads.append(float(np.median(samples)))
    fit = fit_power_law(s_arr, overheads)
    if fit.degenerate or fit.scale <= 0 or fit.exponent >= 0:
        raise DomainError(
            f"host overhead did not follow a decaying power law "
            f"(scale={fit.scale!r}, exponent={fit.exponent!r})"
        )

    store, batch, d = _overhead_workload(min(n_queries, 2048), n_entries, all_hit=True)
    idx = build_index(store, m)
    plan = periodic(batch, 128, idx)
    rates = []
    for _ in range(reps):
        result, stats = run_search(store, idx, plan, d, workers=workers)
        produced = len(result) * RESULT_ITEM_BYTES
        if produced:
            rates.append(stats.assembly_seconds / produced)
    transfer = float(np.median(rates)) if rates else 0.0

    return HostOverheadModel(n_queries, fit.offset, fit.scale, fit.exponent, max(0.0, transfer))


# ── prediction ──────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Prediction:
    """Predicted response time of one batch-size choice."""

    s: int
    host_seconds: float
    kernel_seconds: float
    total_seconds: float
    result_bytes: float
    predicted_hits: float
    clamped_batches: int


def predict(
    s: int,
    queries: SegmentStore,
    store: SegmentStore,
    index: TemporalIndex,
    surfaces: BenchSurfaces,
    profile: HitRateProfile,
    host_model: HostOverheadModel,
    d: float,
) -> Prediction:
    """Predict the response time of a periodic plan with batch size s.

    Per batch, the kernel term combines the three pure-outcome surfaces
    at the batch's mix and subtracts the doubly counted launch cost;
    negative combinations clamp to zero.  The host term applies the
    bucket's power law at s plus the transfer cost of predicted result
    bytes.  Batches with no candidates contribute nothing, mirroring
    execution.
    """
    if abs(d - profile.d) > 1e-12 * max(1.0, abs(d)):
        log.warning("profile was estimated at d=%r but prediction uses d=%r", profile.d, d)
    plan = periodic(queries, s, index)
    kernel = 0.0
    hits = 0.0
    clamped = 0
    for batch in plan.batches:
        if batch.first is None:
            continue
        i = float(batch.interactions)
        c = float(batch.candidates)
        mix = interaction_mix(store, (batch.first, batch.last), queries.view(batch.lo, batch.hi), profile)
        t = (
            surfaces.lookup("all_hit", mix.hit * i, c)
            + surfaces.lookup("temporal_miss", mix.temporal_miss * i, c)
            + surfaces.lookup("spatial_miss", mix.spatial_miss * i, c)
            - 2.0 * surfaces.lookup("launch", i, c)
        )
        if t < 0.0:
            log.warning("clamping negative kernel prediction %.3g s at batch %d", t, batch.lo)
            t = 0.0
            clamped += 1
        kernel += t
        hits += mix.hit * i
    result_bytes = host_model.item_bytes * hits
    host = host_model.evaluate(s, result_bytes)
    return Prediction(s, host, kernel, host + kernel, result_bytes, hits, clamped)


def recommend_batch_size(
    s_candidates,
    queries: SegmentStore,
    store: SegmentStore,
    index: TemporalIndex,
    surfaces: BenchSurfaces,
    profile: HitRateProfile,
    host_model: HostOverheadModel,
    d: float,
) -> tuple[int, list[Prediction]]:
    """Predict every candidate batch size and pick the fastest.

    Ties go to the smaller batch size.  Returns the winner plus all
    predictions in candidate order.
    """
    sizes = sorted({int(v) for v in s_candidates})
    if not sizes:
        raise DomainError("no candidate batch sizes given")
    predictions = [
        predict(s, queries, store, index, surfaces, profile, host_model, d) for s in sizes
    ]
    best = min(predictions, key=lambda p: (p.total_seconds, p.s))
    return best.s, predictions


# ── serialization ───────────────────────────────────────────────────────────


_FORMAT_TAG = "trajseek-perfmodel"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PerfModel:
    """Container for whatever calibration artifacts exist so far."""

    surfaces: BenchSurfaces | None = None
    profile: HitRateProfile | None = None
    host_models: tuple[HostOverheadModel, ...] = ()


def _fmt(v: float) -> str:
    return repr(float(v))


def save_model(model: PerfModel, path: str) -> None:
    """Write the model as a versioned key-value text document."""
    lines = [f"{_FORMAT_TAG} {_FORMAT_VERSION}"]
    if model.surfaces is not None:
        sf = model.surfaces
        lines.append("[surfaces]")
        lines.append("q_axis = " + " ".join(_fmt(v) for v in sf.q_axis))
        lines.append("c_axis = " + " ".join(_fmt(v) for v in sf.c_axis))
        lines.append(f"noisy_points = {sf.noisy_points}")
        for name in _SURFACE_NAMES:
            lines.append(f"grid {name}")
            for row in getattr(sf, name):
                lines.append("  " + " ".join(_fmt(v) for v in row))
    if model.profile is not None:
        p = model.profile
        lines.append("[hit_rates]")
        lines.append(f"t0 = {_fmt(p.t0)}")
        lines.append(f"t_max = {_fmt(p.t_max)}")
        lines.append(f"d = {_fmt(p.d)}")
        lines.append(f"sample_batch_size = {p.sample_batch_size}")
        lines.append(f"global_rate = {_fmt(p.global_rate)}")
        lines.append(f"trials = {p.trials}")
        lines.append(f"converged = {'true' if p.converged else 'false'}")
        for e in p.epochs:
            flag = "sampled" if e.sampled else "backfilled"
            lines.append(f"epoch {_fmt(e.interval.begin)} {_fmt(e.interval.end)} {_fmt(e.rate)} {flag}")
    for hm in model.host_models:
        lines.append(f"[host {hm.n_queries}]")
        lines.append(f"offset = {_fmt(hm.offset)}")
        lines.append(f"scale = {_fmt(hm.scale)}")
        lines.append(f"exponent = {_fmt(hm.exponent)}")
        lines.append(f"transfer_per_byte = {_fmt(hm.transfer_per_byte)}")
        lines.append(f"item_bytes = {hm.item_bytes}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> PerfModel:
    """Parse a model document written by :func:`save_model`.

    Raises:
        FormatError: on version mismatch or malformed content.
    """
    with open(path) as fh:
        raw = [ln.rstrip("\n") for ln in fh]
    if not raw:
        raise FormatError(f"{path}: empty model document")
    head = raw[0].split()
    if len(head) != 2 or head[0] != _FORMAT_TAG or head[1] != str(_FORMAT_VERSION):
        raise FormatError(f"{path}: unsupported header {raw[0]!r}")

    surfaces = None
    profile = None
    hosts: list[HostOverheadModel] = []

    i = 1
    n = len(raw)

    def parse_kv(line: str) -> tuple[str, str]:
        if "=" not in line:
            raise FormatError(f"{path}: expected key = value, got {line!r}")
        k, v = line.split("=", 1)
        return k.strip(), v.strip()

    try:
        while i < n:
            line = raw[i].strip()
            if not line:
                i += 1
                continue
            if line == "[surfaces]":
                i += 1
                kv = {}
                for _ in range(3):
                    k, v = parse_kv(raw[i].strip())
                    kv[k] = v
                    i += 1
                q_axis = np.array([float(v) for v in kv["q_axis"].split()])
                c_axis = np.array([float(v) for v in kv["c_axis"].split()])
                grids = {}
                for name in _SURFACE_NAMES:
                    if raw[i].strip() != f"grid {name}":
                        raise FormatError(f"{path}: expected 'grid {name}', got {raw[i]!r}")
                    i += 1
                    rows = []
                    for _ in range(q_axis.shape[0]):
                        rows.append([float(v) for v in raw[i].split()])
                        i += 1
                    grids[name] = np.array(rows)
                surfaces = BenchSurfaces(
                    q_axis, c_axis, grids["all_hit"], grids["temporal_miss"],
                    grids["spatial_miss"], grids["launch"], int(kv["noisy_points"]),
                )
            elif line == "[hit_rates]":
                i += 1
                kv = {}
                for _ in range(7):
                    k, v = parse_kv(raw[i].strip())
                    kv[k] = v
                    i += 1
                epochs = []
                while i < n and raw[i].strip().startswith("epoch "):
                    parts = raw[i].split()
                    epochs.append(EpochRate(
                        TimeInterval(float(parts[1]), float(parts[2])),
                        float(parts[3]), parts[4] == "sampled",
                    ))
                    i += 1
                profile = HitRateProfile(
                    float(kv["t0"]), float(kv["t_max"]), float(kv["d"]),
                    int(kv["sample_batch_size"]), tuple(epochs),
                    float(kv["global_rate"]), int(kv["trials"]), kv["converged"] == "true",
                )
            elif line.startswith("[host "):
                n_queries = int(line[len("[host "):-1])
                i += 1
                kv = {}
                for _ in range(5):
                    k, v = parse_kv(raw[i].strip())
                    kv[k] = v
                    i += 1
                hosts.append(HostOverheadModel(
                    n_queries, float(kv["offset"]), float(kv["scale"]),
                    float(kv["exponent"]), float(kv["transfer_per_byte"]), int(kv["item_bytes"]),
                ))
            else:
                raise FormatError(f"{path}: unexpected line {line!r}")
    except (IndexError, KeyError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: malformed model document ({exc})") from None
    return PerfModel(surfaces, profile, tuple(hosts))
