"""Jump-adapted Euler scheme with optional drift taming and explosion capture.

The path is advanced on the union of the base grid with the event times.  At
an event time the continuous Euler step is applied first (that value is the
left limit) and the jump increment lands on top of it.  The compensated
small-jump stream contributes its compensation as an explicit drift
``-integral c1(x, u) nu1(du)`` per step; taming, when on, replaces the raw
drift increment ``b(x) dt`` by ``b(x) dt / (1 + |b(x)| dt)`` and touches
nothing else.  Explosion is operationalized as the first recorded state with
``|X| >= R``; the path is truncated there.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, NumericalDomainError
from .model import in_bands
from .noise import LARGE, SMALL

TAMING_MODES = ("off", "drift_tamed")


@dataclass(frozen=True)
class SchemeConfig:
    base_step: float
    explosion_radius: float = 1e6
    taming: str = "off"
    restrict_to_u3: bool = False

    def __post_init__(self):
        if self.base_step <= 0:
            raise DomainError("base_step must be positive")
        if self.explosion_radius <= 0:
            raise DomainError("explosion_radius must be positive")
        if self.taming not in TAMING_MODES:
            raise DomainError(
                f"taming must be one of {TAMING_MODES}, got {self.taming!r}"
            )


@dataclass(frozen=True)
class PathResult:
    times: np.ndarray
    states: np.ndarray
    exploded: bool
    exit_time: Optional[float]
    realization_seed: int
    kinds: tuple = ()

    def state_at_end(self):
        return float(self.states[-1])


def _coeff(value, where, name):
    v = float(value)
    if not np.isfinite(v):
        raise NumericalDomainError(
            f"{name} is non-finite at state {where!r}", state=where
        )
    return v


def _continuous_step(x, dt, dw, model, tamed):
    """One Euler advance over a jump-free interval; returns the new state."""
    b = _coeff(model.b(x), x, "drift b")
    sig = _coeff(model.sigma(x), x, "diffusion sigma")
    comp = _coeff(model.c1_mean(x), x, "compensation drift") \
        if model.nu1 is not None else 0.0
    b_inc = b * dt / (1.0 + abs(b) * dt) if tamed else b * dt
    return x + (b_inc - comp * dt) + sig * dw


def _events_by_time(noise):
    table = {}
    for e in noise.jump_events:
        table.setdefault(e.time, []).append(e)
    return table


def simulate(model, noise, scheme, x0):
    """Run the scheme over one noise realization from initial state ``x0``."""
    base = noise.base_grid
    steps = np.diff(base)
    if steps[:-1].size and np.max(np.abs(steps[:-1] - scheme.base_step)) > 1e-9 * scheme.base_step:
        raise DomainError(
            "scheme base_step does not match the noise base grid"
        )
    radius = scheme.explosion_radius
    tamed = scheme.taming == "drift_tamed"
    events = _events_by_time(noise)
    u3 = model.u3

    x = float(x0)
    times, states, kinds = [0.0], [x], ["grid"]
    exploded, exit_time = False, None
    if abs(x) >= radius:
        return PathResult(np.array(times), np.array(states), True, 0.0,
                          noise.seed, ("exit",))

    ut = noise.union_times
    for i in range(len(ut) - 1):
        t_next = ut[i + 1]
        dt = t_next - ut[i]
        x = _continuous_step(x, dt, noise.union_increments[i], model, tamed)
        kind = "grid"
        for e in events.get(t_next, ()):
            if e.source == SMALL:
                x = x + _coeff(model.c1(x, e.mark), x, "jump c1")
                kind = "small_jump"
            else:
                if scheme.restrict_to_u3 and not bool(in_bands(u3, e.mark)):
                    continue
                x = x + _coeff(model.c2(x, e.mark), x, "jump c2")
                kind = "large_jump"
        if not np.isfinite(x):
            raise NumericalDomainError(
                f"state became non-finite at t = {t_next:g}", state=x
            )
        times.append(float(t_next))
        states.append(x)
        if abs(x) >= radius:
            exploded, exit_time = True, float(t_next)
            kinds.append("exit")
            break
        kinds.append(kind)

    return PathResult(np.asarray(times), np.asarray(states), exploded,
                      exit_time, noise.seed, tuple(kinds))


def first_exit_time(path, radius):
    """Earliest recorded time with ``|state| >= radius`` (or None)."""
    if radius <= 0:
        raise DomainError("radius must be positive")
    hits = np.flatnonzero(np.abs(path.states) >= radius)
    return float(path.times[hits[0]]) if hits.size else None


def _nu1_functional(model, f, fp, x):
    """The two small-jump functionals of the expansion at state ``x``:
    ``integral {f(x+c1) - f(x) - f'(x) c1} dnu1`` and
    ``integral {f(x+c1) - f(x)} dnu1``."""
    if model.nu1 is None:
        return 0.0, 0.0
    u, w = model.nu1.nodes_and_weights()
    if u.size == 0:
        return 0.0, 0.0
    c = np.asarray(model.c1(x, u), dtype=float)
    fx = f(x)
    shifted = np.asarray(f(x + c), dtype=float)
    j2 = float(np.dot(shifted - fx, w))
    j1 = j2 - fp(x) * float(np.dot(c, w))
    return j1, j2


def ito_levy_apply(f, path, model, noise, tamed=False):
    """March the transformed process ``Y = f(X)`` term-by-term.

    ``f`` is a triple ``(f, f', f'')`` of scalar callables.  The Y-path is
    built on the X-path's grid from the expansion: continuous drift
    ``f'b + (1/2) sigma^2 f'' + integral{f(x+c1)-f(x)-f'c1} dnu1
    - integral{f(x+c1)-f(x)} dnu1`` (the last term is the per-step
    compensation of the small-jump events), diffusion ``f' sigma dW``, and
    exact increments ``f(x- + c) - f(x-)`` at events.  The left limit at an
    event is reconstructed with the same continuous update the integrator
    used, so pass ``tamed=True`` when the X-path was drift-tamed.
    """
    fn, fp, fpp = f
    events = _events_by_time(noise)
    idx = np.searchsorted(noise.union_times, path.times)
    y = float(fn(path.states[0]))
    ys = [y]
    for i in range(len(path.times) - 1):
        x = float(path.states[i])
        dt = path.times[i + 1] - path.times[i]
        dw = float(noise.union_increments[idx[i]])
        b = _coeff(model.b(x), x, "drift b")
        b_eff = b / (1.0 + abs(b) * dt) if tamed else b
        sig = _coeff(model.sigma(x), x, "diffusion sigma")
        j1, j2 = _nu1_functional(model, fn, fp, x)
        drift = fp(x) * b_eff + 0.5 * sig * sig * fpp(x) + j1 - j2
        y = y + drift * dt + fp(x) * sig * dw
        evs = events.get(float(path.times[i + 1]), ())
        if evs:
            xm = _continuous_step(x, dt, dw, model, tamed)
            for e in evs:
                c = model.c1(xm, e.mark) if e.source == SMALL \
                    else model.c2(xm, e.mark)
                y = y + (float(fn(xm + c)) - float(fn(xm)))
                xm = xm + c
        if not np.isfinite(y):
            raise NumericalDomainError(
                f"transformed state became non-finite at t = "
                f"{path.times[i + 1]:g}", state=y
            )
        ys.append(float(y))
    return PathResult(path.times.copy(), np.asarray(ys), path.exploded,
                      path.exit_time, path.realization_seed, path.kinds)


def dump_path_csv(path, model, scheme, filepath):
    """Path dump: metadata line, then (time, state, event_kind) rows."""
    with open(filepath, "w", newline="") as fh:
        fh.write(f"# model={model.label} seed={path.realization_seed} "
                 f"h={scheme.base_step:.17g} R={scheme.explosion_radius:.17g}\n")
        w = csv.writer(fh)
        w.writerow(["time", "state", "event_kind"])
        kinds = path.kinds or ("grid",) * len(path.times)
        for t, s, k in zip(path.times, path.states, kinds):
            w.writerow([f"{t:.17g}", f"{s:.17g}", k])
