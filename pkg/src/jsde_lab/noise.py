"""Reproducible driving noise: Brownian increments plus marked jump events.

A :class:`NoiseRealization` is a pure record of random draws — Brownian
increments on the union of the base grid with the jump times, and the two
marked event streams (compensated small jumps, interlaced large jumps).  All
randomness comes from a counter-based generator keyed by ``(seed, stream)``:

* stream 0 — Brownian increments,
* stream 1 — small-jump (compensated) events,
* stream 2 — large-jump events.

Enlarging one stream never perturbs the others, which is what coupling and
refinement studies need.  Multi-resolution coupling goes through
:meth:`NoiseRealization.coarsen`: sample once at the finest step, then
aggregate increments upward so every resolution rides the same Brownian path.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .model import in_bands

SMALL = "small"
LARGE = "large"

_MASK64 = (1 << 64) - 1


def splitmix64(z):
    """One step of the splitmix64 mixer (public-domain finalizer)."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_path_seed(master_seed, path_index):
    """Per-path seed: master XOR the hashed path index.

    Documented splitting rule so parallel runs are independent of
    scheduling order.
    """
    return (int(master_seed) & _MASK64) ^ splitmix64(int(path_index) + 1)


def _stream(seed, stream):
    # Build the key as uint64 explicitly: a plain list with an int above
    # 2**63 is promoted to float64, which rounds away the low bits and
    # collapses nearby seeds onto one stream.
    key = np.array([int(seed) & _MASK64, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class JumpEvent:
    """A single marked jump: ``source`` is ``"small"`` (compensated stream)
    or ``"large"`` (interlaced stream)."""

    time: float
    mark: float
    source: str


class NoiseRealization:
    """Immutable record of one realization of the driving noise.

    ``base_grid`` is the requested uniform-ish grid ``0 = t_0 < ... < t_m = T``;
    internally the Brownian increments live on the union of the base grid with
    all event times (the jump-adapted grid the integrator walks), and
    :attr:`brownian_increments` exposes the per-base-step sums.
    """

    def __init__(self, horizon, base_grid, union_times, union_increments,
                 jump_events, compensator_rate, seed):
        self.horizon = float(horizon)
        self.base_grid = np.asarray(base_grid, dtype=float)
        self.union_times = np.asarray(union_times, dtype=float)
        self.union_increments = np.asarray(union_increments, dtype=float)
        self.jump_events = tuple(jump_events)
        self.compensator_rate = float(compensator_rate)
        self.seed = int(seed)

    @property
    def brownian_increments(self):
        """One increment per base-grid step (sums of the union increments)."""
        cum = np.concatenate([[0.0], np.cumsum(self.union_increments)])
        idx = np.searchsorted(self.union_times, self.base_grid)
        return np.diff(cum[idx])

    def events_from(self, source):
        return tuple(e for e in self.jump_events if e.source == source)

    def coarsen(self, factor):
        """The same noise on a base grid thinned by ``factor``.

        Events are untouched; Brownian increments are regrouped (exact sums),
        so paths simulated at different resolutions share one Brownian motion
        and one event stream.
        """
        factor = int(factor)
        m = len(self.base_grid) - 1
        if factor < 1 or m % factor != 0:
            raise DomainError(
                f"coarsening factor {factor} does not divide the "
                f"{m}-step base grid"
            )
        coarse = self.base_grid[::factor]
        times = np.unique(np.concatenate(
            [coarse, [e.time for e in self.jump_events]]))
        cum = np.concatenate([[0.0], np.cumsum(self.union_increments)])
        idx = np.searchsorted(self.union_times, times)
        return NoiseRealization(self.horizon, coarse, times,
                                np.diff(cum[idx]), self.jump_events,
                                self.compensator_rate, self.seed)

    def dump_csv(self, path):
        """Debug/replay dump: (time, kind, value) — per-base-step Brownian
        increments tagged by their step's right endpoint, then the events."""
        rows = []
        binc = self.brownian_increments
        for t, v in zip(self.base_grid[1:], binc):
            rows.append((t, "brownian_increment", v))
        for e in self.jump_events:
            rows.append((e.time, f"{e.source}_jump", e.mark))
        rows.sort(key=lambda r: r[0])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "kind", "value"])
            for t, kind, v in rows:
                w.writerow([f"{t:.17g}", kind, f"{v:.17g}"])


def _base_grid(horizon, base_step):
    n = int(math.ceil(horizon / base_step - 1e-12))
    grid = np.arange(n + 1, dtype=float) * base_step
    grid[-1] = horizon
    if n >= 2 and grid[-1] <= grid[-2]:
        grid = np.delete(grid, -2)
    return grid


def _draw_events(measure, horizon, seed, stream, source):
    if measure is None or measure.total_mass == 0.0:
        return []
    rng = _stream(seed, stream)
    lam = measure.total_mass * horizon
    count = int(rng.poisson(lam))
    times = np.sort(rng.random(count)) * horizon
    times = np.maximum(times, np.nextafter(0.0, 1.0))
    marks = measure.sample(rng, count)
    return [JumpEvent(float(t), float(u), source)
            for t, u in zip(times, marks)]


def sample_noise(model, horizon, base_step, seed):
    """Draw one :class:`NoiseRealization` for a model.

    Event counts are Poisson with rate (total mass x horizon); marks come
    from the normalized measure (inverse-CDF for density pieces, categorical
    for atoms); Brownian increments are centered Gaussians with variance
    equal to the step width.  Everything is a deterministic function of
    ``seed`` through the per-stream counters.
    """
    horizon = float(horizon)
    base_step = float(base_step)
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    if not 0 < base_step <= horizon:
        raise DomainError("need 0 < base_step <= horizon")
    nu1, nu2 = model.nu1, model.nu2
    if nu1 is not None and not nu1.is_finite:
        raise DomainError(
            "small-jump measure has infinite mass; apply truncate_small_jumps "
            "before sampling"
        )
    if nu2 is not None and not nu2.is_finite:
        restricted = nu2.restricted(model.u3)
        if not restricted.is_finite:
            raise DomainError("large-jump measure has infinite mass even "
                              "restricted to the interlacing sub-support")
        nu2 = restricted

    events = _draw_events(nu1, horizon, seed, 1, SMALL)
    events += _draw_events(nu2, horizon, seed, 2, LARGE)
    events.sort(key=lambda e: e.time)

    grid = _base_grid(horizon, base_step)
    union = np.unique(np.concatenate([grid, [e.time for e in events]]))
    dts = np.diff(union)
    rng0 = _stream(seed, 0)
    dW = rng0.standard_normal(len(dts)) * np.sqrt(dts)

    rate = 0.0 if nu1 is None else nu1.total_mass
    return NoiseRealization(horizon, grid, union, dW, events, rate, seed)


def truncate_small_jumps(model_measure, epsilon):
    """Restrict a mark measure to ``|u| >= epsilon``.

    Returns ``(measure, compensator_rate)``.  ``epsilon = 0`` keeps a finite
    measure unchanged (no truncation needed); negative thresholds are domain
    errors, and so is a retained mass that is still infinite.
    """
    from .model import Band  # local import keeps module load order flat

    epsilon = float(epsilon)
    if epsilon < 0:
        raise DomainError("truncation threshold must be nonnegative")
    if epsilon == 0.0:
        if not model_measure.is_finite:
            raise DomainError("retained mass is infinite at epsilon = 0; "
                              "choose a positive threshold")
        return model_measure, model_measure.total_mass
    bands = (Band(-math.inf, -epsilon, closed_lo=False, closed_hi=True),
             Band(epsilon, math.inf, closed_lo=True, closed_hi=False))
    kept = model_measure.restricted(bands)
    if not kept.is_finite:
        raise DomainError(
            f"retained mass is still infinite at epsilon = {epsilon:g}"
        )
    return kept, kept.total_mass


def split_large_jumps(noise, u3):
    """Partition the large-jump events by mark membership in ``u3``.

    Returns ``(inside, outside)``, both time-sorted; their union is the
    realization's large-jump list.  ``u3 = None`` means the full support.
    """
    large = noise.events_from(LARGE)
    if not large:
        return (), ()
    marks = np.array([e.mark for e in large])
    mask = in_bands(u3, marks)
    inside = tuple(e for e, m in zip(large, mask) if m)
    outside = tuple(e for e, m in zip(large, mask) if not m)
    return inside, outside
