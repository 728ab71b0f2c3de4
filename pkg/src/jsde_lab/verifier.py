"""Grid-based falsification checkers for the standing conditions.

Every checker samples a documented grid and returns an
:class:`AssumptionReport` with verdict ``no_violation_found`` or
``violated`` — it can refute a universally-quantified condition on its grid
but never prove one.  Violated verdicts carry the worst witness, re-confirmed
through an independent scalar code path (plain float arithmetic plus Simpson
integration instead of the vectorized Gauss-Legendre evaluation).

Assumption ids:

* ``A22`` — modulus admissibility: positivity, nondecrease, midpoint
  concavity, and the small-argument divergence certificate for the
  reciprocal integral.
* ``A23`` — growth envelope: the one-sided second-moment growth bound
  ``2xb + sigma^2 + int |c1|^2 dnu1 + 2 int_{U3} |c2|^2 dnu2 <=
  mu [x^2 Upsilon(x^2) + 1]`` plus the envelope's own conditions.
* ``A24`` — local one-sided/Hoelder-type conditions with exponent ``alpha``
  on gaps up to ``delta0`` (``alpha = 0`` routes to the Lipschitz-style
  condition set of A25 with the one modulus in both roles).
* ``A25`` — corollary conditions: drift plus large-jump first-moment bound
  against ``rho_1``, diffusion plus small-jump second-moment bound against
  ``rho_2``, and a monotonicity scan of ``c1`` in the state.
* ``A26`` — non-confluence: global gap conditions evaluated through
  ``rho(|x-y|^-alpha)`` and the jump separation requirement
  ``|x - y + c_i(x,u) - c_i(y,u)| > delta |x-y|``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson

from .analysis import omega_build
from .errors import CatalogError, DomainError, NumericalDomainError
from .model import (GAMMA, Band, builtin_growth, builtin_modulus,
                    scale_modulus)

NO_VIOLATION = "no_violation_found"
VIOLATED = "violated"

DEFAULT_TOLERANCE = 1e-9
DIVERGENCE_RATIO_MIN = 0.9    # per-decade decrement ratio; catalog >= 0.916
GROWTH_RATIO_MIN = 0.75       # growth-(ii) decade increments; catalog >= 0.887

# frozen designated-check constants (grid suprema of the growth ratios with
# the empty interlacing sub-support; the first is exact, attained at -sqrt(e))
MU_EXAMPLE_31 = (math.e + 3.0 * math.sqrt(math.e)) / (math.e + 1.0)
MU_EXAMPLE_41 = 0.5566420945681


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

@dataclass
class ConditionResult:
    name: str
    verdict: str
    worst: Optional[dict] = None
    note: Optional[str] = None

    def to_dict(self):
        out = {"name": self.name, "verdict": self.verdict}
        if self.worst is not None:
            out["worst"] = self.worst
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class AssumptionReport:
    assumption_id: str
    verdict: str
    worst_witness: Optional[dict]
    grid_spec: str
    tolerance: float
    conditions: tuple = ()
    notes: tuple = ()

    def to_dict(self):
        return {
            "assumption_id": self.assumption_id,
            "verdict": self.verdict,
            "worst_witness": self.worst_witness,
            "grid_spec": self.grid_spec,
            "tolerance": self.tolerance,
            "conditions": [c.to_dict() for c in self.conditions],
            "notes": list(self.notes),
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)


def _tol_line(rhs, tolerance):
    return tolerance + tolerance * np.abs(rhs)


def _condition_from_arrays(name, inputs, lhs, rhs, tolerance, note=None):
    """Reduce vectorized lhs/rhs samples to a ConditionResult (max slack,
    ties to the lowest index)."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    slack = lhs - rhs
    i = int(np.argmax(slack))
    worst = {k: float(np.asarray(v).reshape(-1)[i]) for k, v in inputs.items()}
    worst.update(lhs=float(lhs.reshape(-1)[i]), rhs=float(rhs.reshape(-1)[i]),
                 slack=float(slack.reshape(-1)[i]))
    bad = slack.reshape(-1)[i] > _tol_line(rhs.reshape(-1)[i], tolerance)
    return ConditionResult(name, VIOLATED if bad else NO_VIOLATION,
                           worst=worst, note=note)


def _assemble(assumption_id, conditions, grid_spec, tolerance, notes=()):
    violated = [c for c in conditions if c.verdict == VIOLATED]
    worst = None
    if violated:
        worst = max(violated, key=lambda c: c.worst["slack"]).worst
    return AssumptionReport(
        assumption_id=assumption_id,
        verdict=VIOLATED if violated else NO_VIOLATION,
        worst_witness=worst,
        grid_spec=grid_spec,
        tolerance=tolerance,
        conditions=tuple(conditions),
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairGrid:
    """Sampling spec for pair conditions: every anchor is paired with
    ``anchor -+ gap`` in both directions; pairs leaving ``interval`` (when
    set, strict) are dropped."""

    anchors: np.ndarray
    gaps: np.ndarray
    interval: Optional[tuple] = None
    label: str = ""

    @staticmethod
    def default(gap_max, lo=-10.0, hi=10.0, n_anchors=101, n_gaps=401,
                gap_min=1e-6):
        return PairGrid(
            anchors=np.linspace(lo, hi, n_anchors),
            gaps=np.geomspace(gap_min, gap_max, n_gaps),
            label=(f"{n_anchors} anchors in [{lo:g},{hi:g}] x {n_gaps} "
                   f"log-spaced gaps in [{gap_min:g},{gap_max:g}], "
                   "both directions"),
        )

    def pairs(self, gap_cap=None):
        gaps = np.asarray(self.gaps, dtype=float)
        if np.any(gaps <= 0):
            raise DomainError("pair grid contains a non-positive gap")
        if gap_cap is not None and gaps.max() > gap_cap * (1 + 1e-12):
            raise DomainError(
                f"pair grid gap {gaps.max():g} exceeds the condition's "
                f"admissible range {gap_cap:g}"
            )
        x = np.repeat(np.asarray(self.anchors, dtype=float), gaps.size)
        d = np.tile(gaps, np.asarray(self.anchors).size)
        xs = np.concatenate([x, x])
        ys = np.concatenate([x - d, x + d])
        if self.interval is not None:
            lo, hi = self.interval
            keep = (xs > lo) & (xs < hi) & (ys > lo) & (ys < hi)
            xs, ys = xs[keep], ys[keep]
        keep = xs != ys
        return xs[keep], ys[keep]

    def describe(self):
        base = self.label or (f"{len(self.anchors)} anchors x "
                              f"{len(self.gaps)} gaps, both directions")
        if self.interval is not None:
            base += f", clipped to ({self.interval[0]:g},{self.interval[1]:g})"
        return base


def _mark_grid(measure, n=101):
    """Uniform mark scan over the support hull (pieces plus atoms)."""
    los, his = [], []
    for lo, hi, _ in measure.pieces:
        los.append(lo)
        his.append(hi)
    for u, _ in measure.atoms:
        los.append(u)
        his.append(u)
    if not los:
        return np.zeros(0)
    lo, hi = min(los), max(his)
    if lo == hi:
        return np.array([lo])
    return np.linspace(lo, hi, n)


# ---------------------------------------------------------------------------
# measure integrals (vectorized + independent scalar re-evaluation)
# ---------------------------------------------------------------------------

def _pair_measure_integral(measure, integrand, x, y, extra=None):
    """``integral integrand(|c(x,u) - c(y,u)| ...) dmeasure`` over pair arrays.

    ``integrand(cx, cy, u)`` receives (pairs, marks)-shaped coefficient
    values and must return the same shape.
    """
    if measure is None:
        return np.zeros_like(x)
    u, w = measure.nodes_and_weights()
    if u.size == 0:
        return np.zeros_like(x)
    vals = integrand(x[:, None], y[:, None], u[None, :])
    if not np.all(np.isfinite(vals)):
        i = int(np.argmax(~np.isfinite(vals).all(axis=1)))
        raise NumericalDomainError(
            f"mark integral failed to evaluate at x = {x[i]:g}",
            state=float(x[i]),
        )
    return vals @ w


def _scalar_measure_integral(measure, g):
    """Simpson-on-uniform-nodes integral of ``g`` against the measure —
    deliberately a different quadrature from the Gauss-Legendre fast path."""
    if measure is None:
        return 0.0
    total = 0.0
    for lo, hi, dens in measure.pieces:
        us = np.linspace(lo, hi, 4097)
        vals = np.asarray(g(us), dtype=float) * np.asarray(dens(us), dtype=float)
        total += float(simpson(vals, x=us))
    for u0, w0 in measure.atoms:
        total += w0 * float(np.asarray(g(np.array([u0])), dtype=float)[0])
    return total


def _reconfirm(condition, recompute):
    """Attach an independent re-evaluation of the worst witness."""
    if condition.verdict != VIOLATED or condition.worst is None:
        return condition
    lhs, rhs = recompute(condition.worst)
    condition.worst["reconfirmed"] = bool(
        lhs - rhs > _tol_line(rhs, DEFAULT_TOLERANCE))
    condition.worst["recomputed_lhs"] = float(lhs)
    condition.worst["recomputed_rhs"] = float(rhs)
    return condition


# ---------------------------------------------------------------------------
# A22 — modulus admissibility
# ---------------------------------------------------------------------------

def check_modulus(modulus, points=None, tolerance=DEFAULT_TOLERANCE):
    """Positivity, nondecrease, midpoint concavity (when claimed), and the
    reciprocal-integral divergence certificate."""
    if points is None:
        points = np.geomspace(1e-12, 1.0, 601)
    points = np.asarray(points, dtype=float)
    vals = np.asarray(modulus.rho(points), dtype=float)
    conditions = []
    notes = []

    def rho1(t):
        return float(np.asarray(modulus.rho(np.array([t])), dtype=float)[0])

    conditions.append(_reconfirm(
        _condition_from_arrays(
            "positivity", {"x": points}, -vals, np.zeros_like(vals),
            tolerance),
        lambda w: (-rho1(w["x"]), 0.0)))

    conditions.append(_reconfirm(
        _condition_from_arrays(
            "nondecrease", {"x": points[:-1], "x_next": points[1:]},
            vals[:-1], vals[1:], tolerance),
        lambda w: (rho1(w["x"]), rho1(w["x_next"]))))

    if modulus.concave:
        sub = points[::6]
        xi, xj = np.meshgrid(sub, sub, indexing="ij")
        xi, xj = xi.reshape(-1), xj.reshape(-1)
        mid = 0.5 * (xi + xj)
        lhs = 0.5 * (np.asarray(modulus.rho(xi), dtype=float)
                     + np.asarray(modulus.rho(xj), dtype=float))
        rhs = np.asarray(modulus.rho(mid), dtype=float)
        conditions.append(_reconfirm(
            _condition_from_arrays(
                "midpoint_concavity", {"x": xi, "y": xj}, lhs, rhs,
                tolerance),
            lambda w: (0.5 * (rho1(w["x"]) + rho1(w["y"])),
                       rho1(0.5 * (w["x"] + w["y"])))))
    else:
        notes.append("concavity not claimed; midpoint check skipped")

    base = min(modulus.domain_hint, 1.0)
    try:
        om = omega_build(modulus, base)
        decades = om.decade_values(12)
        gains = -np.diff(decades)
        ratio = gains[-1] / gains[-2] if gains[-2] > 0 else 0.0
        ok = bool(np.all(gains > 0)) and ratio >= DIVERGENCE_RATIO_MIN
        worst = {
            "base_point": base,
            "decade_values": [float(v) for v in decades],
            "decrement_ratio": float(ratio),
            "lhs": float(DIVERGENCE_RATIO_MIN - ratio),
            "rhs": 0.0,
            "slack": float(DIVERGENCE_RATIO_MIN - ratio),
        }
        if not ok:
            # independent path: dense trapezoid integrals of 1/rho over the
            # last two probed decades
            g = []
            for k in (11, 12):
                rs = np.geomspace(base * 10.0 ** (-k),
                                  base * 10.0 ** (-(k - 1)), 200001)
                g.append(float(np.trapezoid(
                    1.0 / np.asarray(modulus.rho(rs), dtype=float), rs)))
            re_ratio = g[1] / g[0] if g[0] > 0 else 0.0
            worst["reconfirmed"] = bool(
                not (g[0] > 0 and g[1] > 0)
                or re_ratio < DIVERGENCE_RATIO_MIN)
            worst["recomputed_ratio"] = float(re_ratio)
        conditions.append(ConditionResult(
            "reciprocal_divergence",
            NO_VIOLATION if ok else VIOLATED,
            worst=worst,
            note=("certificate: per-decade decrements of the reciprocal "
                  f"transform stay positive with tail ratio >= "
                  f"{DIVERGENCE_RATIO_MIN}"),
        ))
    except DomainError as exc:
        probe = np.geomspace(1e-12, base, 101)
        pv = np.asarray(modulus.rho(probe), dtype=float)
        conditions.append(ConditionResult(
            "reciprocal_divergence", VIOLATED,
            worst={"lhs": 1.0, "rhs": 0.0, "slack": 1.0, "error": str(exc),
                   "reconfirmed": bool(np.min(pv) <= 0
                                       or not np.all(np.isfinite(pv)))},
            note="transform construction failed"))

    grid_spec = (f"{points.size} log-spaced points in "
                 f"[{points.min():g},{points.max():g}]; divergence probed "
                 "over 12 decades below the base point")
    return _assemble("A22", conditions, grid_spec, tolerance, notes)


# ---------------------------------------------------------------------------
# A23 — growth envelope
# ---------------------------------------------------------------------------

def _growth_lhs(model, x):
    x = np.asarray(x, dtype=float)
    b = np.asarray(model.b(x), dtype=float)
    sig = np.asarray(model.sigma(x), dtype=float)
    for name, arr in (("drift", b), ("diffusion", sig)):
        if not np.all(np.isfinite(arr)):
            i = int(np.argmax(~np.isfinite(arr)))
            raise NumericalDomainError(
                f"{name} evaluation failed at x = {x[i]:g}", state=float(x[i]))
    lhs = 2.0 * x * b + sig ** 2
    if model.nu1 is not None:
        lhs = lhs + _pair_measure_integral(
            model.nu1, lambda xs, ys, u: np.abs(
                np.asarray(model.c1(xs, u), dtype=float)) ** 2, x, x)
    u3_measure = None if model.nu2 is None else model.nu2.restricted(model.u3)
    if u3_measure is not None:
        lhs = lhs + 2.0 * _pair_measure_integral(
            u3_measure, lambda xs, ys, u: np.abs(
                np.asarray(model.c2(xs, u), dtype=float)) ** 2, x, x)
    return lhs


def _growth_decade_increments(upsilon, k_max=12):
    glx, glw = np.polynomial.legendre.leggauss(81)
    incs = []
    for k in range(1, k_max + 1):
        a, b = (k - 1) * math.log(10.0), k * math.log(10.0)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        v = mid + half * glx
        s = np.exp(v)
        incs.append(half * float(np.dot(glw, s / (s * np.asarray(
            upsilon(s), dtype=float) + 1.0))))
    return np.asarray(incs)


def check_growth(model, upsilon, mu, anchors=None,
                 tolerance=DEFAULT_TOLERANCE):
    """One-sided growth bound against ``mu [x^2 Upsilon(x^2) + 1]`` plus the
    envelope's own divergence certificate; the unboundedness condition is
    reported as a note (the constant envelope is itself a cataloged case)."""
    if mu < 0:
        raise DomainError("mu must be nonnegative")
    if anchors is None:
        anchors = np.linspace(-10.0, 10.0, 101)
    anchors = np.asarray(anchors, dtype=float)
    conditions = []
    notes = []

    lhs = _growth_lhs(model, anchors)
    rhs = mu * (anchors ** 2 * np.asarray(upsilon(anchors ** 2), dtype=float)
                + 1.0)
    cond = _condition_from_arrays(
        "growth_bound", {"x": anchors}, lhs, rhs, tolerance)

    def recompute(w):
        x = w["x"]
        l = 2.0 * x * float(model.b(x)) + float(model.sigma(x)) ** 2
        l += _scalar_measure_integral(
            model.nu1, lambda u: np.abs(np.asarray(model.c1(x, u))) ** 2)
        u3m = None if model.nu2 is None else model.nu2.restricted(model.u3)
        l += 2.0 * _scalar_measure_integral(
            u3m, lambda u: np.abs(np.asarray(model.c2(x, u))) ** 2)
        r = mu * (x * x * float(np.asarray(upsilon(x * x))) + 1.0)
        return l, r

    conditions.append(_reconfirm(cond, recompute))

    incs = _growth_decade_increments(upsilon)
    ratio = incs[-1] / incs[-2] if incs[-2] > 0 else 0.0
    ok = ratio >= GROWTH_RATIO_MIN and bool(np.all(np.isfinite(incs)))
    worst = {"decade_increments": [float(v) for v in incs],
             "increment_ratio": float(ratio),
             "lhs": float(GROWTH_RATIO_MIN - ratio), "rhs": 0.0,
             "slack": float(GROWTH_RATIO_MIN - ratio)}
    if not ok:
        # independent path: trapezoid integrals of 1/(s Upsilon(s) + 1)
        # over the last two probed decades
        g = []
        for k in (11, 12):
            s = np.geomspace(10.0 ** (k - 1), 10.0 ** k, 200001)
            g.append(float(np.trapezoid(
                1.0 / (s * np.asarray(upsilon(s), dtype=float) + 1.0), s)))
        re_ratio = g[1] / g[0] if g[0] > 0 else 0.0
        worst["reconfirmed"] = bool(not np.all(np.isfinite(g))
                                    or re_ratio < GROWTH_RATIO_MIN)
        worst["recomputed_ratio"] = float(re_ratio)
    conditions.append(ConditionResult(
        "reciprocal_growth_divergence",
        NO_VIOLATION if ok else VIOLATED,
        worst=worst,
        note=("certificate: decade increments of the reciprocal growth "
              f"integral keep a tail ratio >= {GROWTH_RATIO_MIN}")))

    tail = np.asarray(upsilon(np.geomspace(10.0, 1e9, 17)), dtype=float)
    if tail[-1] <= tail[0] * (1.0 + 1e-9):
        notes.append("envelope appears bounded on the sampled tail; the "
                     "constant envelope is an accepted cataloged case, so "
                     "unboundedness is noted, not enforced")

    grid_spec = (f"{anchors.size} anchors in [{anchors.min():g},"
                 f"{anchors.max():g}]; envelope divergence probed over 12 "
                 "decades")
    return _assemble("A23", conditions, grid_spec, tolerance, notes)


def growth_ratio_supremum(model, upsilon, anchors=None):
    """Grid supremum of LHS/RHS-at-mu=1 — the smallest admissible ``mu`` on
    the grid (used to calibrate experiment presets)."""
    if anchors is None:
        anchors = np.linspace(-10.0, 10.0, 101)
    anchors = np.asarray(anchors, dtype=float)
    lhs = _growth_lhs(model, anchors)
    rhs = anchors ** 2 * np.asarray(upsilon(anchors ** 2), dtype=float) + 1.0
    ratio = lhs / rhs
    i = int(np.argmax(ratio))
    return float(ratio[i]), float(anchors[i])


# ---------------------------------------------------------------------------
# A25 — corollary conditions (also the alpha = 0 route of A24)
# ---------------------------------------------------------------------------

def _corollary_conditions(model, rho1, rho2, delta0, grid, tolerance,
                          include_monotonicity):
    if delta0 <= 0:
        raise DomainError("delta0 must be positive")
    if grid is None:
        grid = PairGrid.default(delta0)
    x, y = grid.pairs(gap_cap=delta0)
    d = np.abs(x - y)
    conditions = []

    bx = np.asarray(model.b(x), dtype=float)
    by = np.asarray(model.b(y), dtype=float)
    u3_measure = None if model.nu2 is None else model.nu2.restricted(model.u3)
    lhs1 = (x - y) * (bx - by) + _pair_measure_integral(
        u3_measure,
        lambda xs, ys, u: np.abs(np.asarray(model.c2(xs, u), dtype=float)
                                 - np.asarray(model.c2(ys, u), dtype=float)),
        x, y)
    rhs1 = d * np.asarray(rho1.rho(d), dtype=float)
    cond1 = _condition_from_arrays(
        "drift_plus_large_jump_first_moment", {"x": x, "y": y, "gap": d},
        lhs1, rhs1, tolerance)

    def recompute1(w):
        xx, yy = w["x"], w["y"]
        l = (xx - yy) * (float(model.b(xx)) - float(model.b(yy)))
        l += _scalar_measure_integral(
            u3_measure, lambda u: np.abs(np.asarray(model.c2(xx, u))
                                         - np.asarray(model.c2(yy, u))))
        return l, abs(xx - yy) * float(np.asarray(rho1.rho(abs(xx - yy))))

    conditions.append(_reconfirm(cond1, recompute1))

    sx = np.asarray(model.sigma(x), dtype=float)
    sy = np.asarray(model.sigma(y), dtype=float)
    lhs2 = (sx - sy) ** 2 + _pair_measure_integral(
        model.nu1,
        lambda xs, ys, u: (np.asarray(model.c1(xs, u), dtype=float)
                           - np.asarray(model.c1(ys, u), dtype=float)) ** 2,
        x, y)
    rhs2 = np.asarray(rho2.rho(d), dtype=float)
    cond2 = _condition_from_arrays(
        "diffusion_plus_small_jump_second_moment", {"x": x, "y": y, "gap": d},
        lhs2, rhs2, tolerance)

    def recompute2(w):
        xx, yy = w["x"], w["y"]
        l = (float(model.sigma(xx)) - float(model.sigma(yy))) ** 2
        l += _scalar_measure_integral(
            model.nu1, lambda u: (np.asarray(model.c1(xx, u))
                                  - np.asarray(model.c1(yy, u))) ** 2)
        return l, float(np.asarray(rho2.rho(abs(xx - yy))))

    conditions.append(_reconfirm(cond2, recompute2))

    if include_monotonicity and model.nu1 is not None:
        marks = _mark_grid(model.nu1)
        anchors = np.sort(np.unique(np.asarray(grid.anchors, dtype=float)))
        c = np.asarray(model.c1(anchors[:, None], marks[None, :]), dtype=float)
        lhs = c[:-1, :].reshape(-1)
        rhs = c[1:, :].reshape(-1)
        xi = np.repeat(anchors[:-1], marks.size)
        xj = np.repeat(anchors[1:], marks.size)
        uu = np.tile(marks, anchors.size - 1)
        cond3 = _condition_from_arrays(
            "c1_monotone_in_state", {"x": xi, "x_next": xj, "mark": uu},
            lhs, rhs, tolerance,
            note="scan: c1(x, u) must be nondecreasing in x for each "
                 "sampled mark")

        def recompute3(w):
            return (float(np.asarray(model.c1(w["x"], w["mark"]))),
                    float(np.asarray(model.c1(w["x_next"], w["mark"]))))

        conditions.append(_reconfirm(cond3, recompute3))

    return conditions, grid


def check_corollary_conditions(model, rho1, rho2, delta0, grid=None,
                               tolerance=DEFAULT_TOLERANCE):
    """Drift/large-jump condition against ``rho_1``, diffusion/small-jump
    condition against ``rho_2``, and the c1 monotonicity scan."""
    conditions, grid = _corollary_conditions(
        model, rho1, rho2, delta0, grid, tolerance, True)
    return _assemble("A25", conditions, grid.describe(), tolerance)


# ---------------------------------------------------------------------------
# A24 — local alpha-indexed conditions
# ---------------------------------------------------------------------------

def check_local_conditions(model, modulus, alpha, delta0, grid=None,
                           tolerance=DEFAULT_TOLERANCE):
    """Local conditions with exponent ``alpha`` on gaps in ``(0, delta0]``.

    ``alpha = 0`` is routed to the Lipschitz-style condition set (the
    corollary inequalities with the one modulus in both roles, monotonicity
    scan excluded) and reported under this assumption id.
    """
    if delta0 <= 0:
        raise DomainError("delta0 must be positive")
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    if alpha == 0:
        conditions, grid = _corollary_conditions(
            model, modulus, modulus, delta0, grid, tolerance, False)
        return _assemble(
            "A24", conditions, grid.describe(), tolerance,
            notes=("alpha = 0 routed to the Lipschitz-style condition set "
                   "(one modulus in both roles)",))

    if grid is None:
        grid = PairGrid.default(delta0)
    x, y = grid.pairs(gap_cap=delta0)
    d = np.abs(x - y)
    rho_da = np.asarray(modulus.rho(d ** alpha), dtype=float)
    conditions = []

    bx = np.asarray(model.b(x), dtype=float)
    by = np.asarray(model.b(y), dtype=float)
    sx = np.asarray(model.sigma(x), dtype=float)
    sy = np.asarray(model.sigma(y), dtype=float)
    lhs1 = np.maximum((x - y) * (bx - by), (sx - sy) ** 2)
    rhs1 = d ** (2.0 - alpha) * rho_da
    cond1 = _condition_from_arrays(
        "drift_or_diffusion_local", {"x": x, "y": y, "gap": d},
        lhs1, rhs1, tolerance)

    def recompute1(w):
        xx, yy = w["x"], w["y"]
        gap = abs(xx - yy)
        l = max((xx - yy) * (float(model.b(xx)) - float(model.b(yy))),
                (float(model.sigma(xx)) - float(model.sigma(yy))) ** 2)
        return l, gap ** (2.0 - alpha) * float(np.asarray(
            modulus.rho(gap ** alpha)))

    conditions.append(_reconfirm(cond1, recompute1))

    def jump_condition(name, measure, cfunc):
        def integrand(xs, ys, u):
            dc = np.abs(np.asarray(cfunc(xs, u), dtype=float)
                        - np.asarray(cfunc(ys, u), dtype=float))
            gap = np.abs(xs - ys)
            return np.maximum(dc ** alpha, gap ** (alpha - 1.0) * dc)

        lhs = _pair_measure_integral(measure, integrand, x, y)
        cond = _condition_from_arrays(
            name, {"x": x, "y": y, "gap": d}, lhs, rho_da, tolerance)

        def recompute(w):
            xx, yy = w["x"], w["y"]
            gap = abs(xx - yy)

            def g(u):
                dc = np.abs(np.asarray(cfunc(xx, u), dtype=float)
                            - np.asarray(cfunc(yy, u), dtype=float))
                return np.maximum(dc ** alpha, gap ** (alpha - 1.0) * dc)

            return (_scalar_measure_integral(measure, g),
                    float(np.asarray(modulus.rho(gap ** alpha))))

        return _reconfirm(cond, recompute)

    if model.nu1 is not None:
        conditions.append(jump_condition(
            "small_jump_local", model.nu1, model.c1))
    u3_measure = None if model.nu2 is None else model.nu2.restricted(model.u3)
    if u3_measure is not None and u3_measure.total_mass > 0:
        conditions.append(jump_condition(
            "large_jump_local", u3_measure, model.c2))

    return _assemble("A24", conditions, grid.describe(), tolerance)


# ---------------------------------------------------------------------------
# A26 — non-confluence conditions
# ---------------------------------------------------------------------------

def check_nonconfluence_conditions(model, modulus, alpha, delta, grid=None,
                                   tolerance=DEFAULT_TOLERANCE,
                                   affine_k=None):
    """Global gap conditions through ``rho(|x-y|^-alpha)`` plus the jump
    separation requirement.

    The separation condition quantifies over all pairs per mark and is
    checked by sampling (falsification only); for affine jump maps
    ``c(x, u) = k(u) x`` pass ``affine_k`` — the condition then reduces to
    ``|1 + k(u)| > delta`` scanned densely over marks.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    if grid is None:
        grid = PairGrid.default(20.0)
    x, y = grid.pairs()
    d = np.abs(x - y)
    rho_inv = np.asarray(modulus.rho(d ** (-alpha)), dtype=float)
    conditions = []

    bx = np.asarray(model.b(x), dtype=float)
    by = np.asarray(model.b(y), dtype=float)
    cond1 = _condition_from_arrays(
        "drift_global", {"x": x, "y": y, "gap": d},
        (x - y) * (bx - by), d ** (2.0 + alpha) * rho_inv, tolerance)
    conditions.append(_reconfirm(cond1, lambda w: (
        (w["x"] - w["y"]) * (float(model.b(w["x"])) - float(model.b(w["y"]))),
        abs(w["x"] - w["y"]) ** (2.0 + alpha)
        * float(np.asarray(modulus.rho(abs(w["x"] - w["y"]) ** (-alpha)))))))

    sx = np.asarray(model.sigma(x), dtype=float)
    sy = np.asarray(model.sigma(y), dtype=float)
    cond2 = _condition_from_arrays(
        "diffusion_global", {"x": x, "y": y, "gap": d},
        (sx - sy) ** 2, d ** (2.0 + alpha) * rho_inv, tolerance)
    conditions.append(_reconfirm(cond2, lambda w: (
        (float(model.sigma(w["x"])) - float(model.sigma(w["y"]))) ** 2,
        abs(w["x"] - w["y"]) ** (2.0 + alpha)
        * float(np.asarray(modulus.rho(abs(w["x"] - w["y"]) ** (-alpha)))))))

    for name, measure, cfunc in (("small_jump_first_moment", model.nu1,
                                  model.c1),
                                 ("large_jump_first_moment", model.nu2,
                                  model.c2)):
        if measure is None:
            continue
        lhs = _pair_measure_integral(
            measure,
            lambda xs, ys, u, cf=cfunc: np.abs(
                np.asarray(cf(xs, u), dtype=float)
                - np.asarray(cf(ys, u), dtype=float)),
            x, y)
        cond = _condition_from_arrays(
            name, {"x": x, "y": y, "gap": d},
            lhs, d ** (1.0 + alpha) * rho_inv, tolerance)

        def recompute(w, cf=cfunc, ms=measure):
            xx, yy = w["x"], w["y"]
            l = _scalar_measure_integral(
                ms, lambda u: np.abs(np.asarray(cf(xx, u))
                                     - np.asarray(cf(yy, u))))
            gap = abs(xx - yy)
            return l, gap ** (1.0 + alpha) * float(np.asarray(
                modulus.rho(gap ** (-alpha))))

        conditions.append(_reconfirm(cond, recompute))

    conditions.append(_separation_condition(
        model, delta, grid, tolerance, affine_k))

    return _assemble("A26", conditions, grid.describe(), tolerance)


def _window_mass(measure, u, frac=1e-3):
    if measure is None:
        return 0.0
    hull = _mark_grid(measure, 2)
    if hull.size == 0:
        return 0.0
    w = max((hull.max() - hull.min()) * frac, 1e-12)
    return float(measure.mass_in((Band(u - w, u + w,
                                       closed_lo=True, closed_hi=True),)))


def _separation_condition(model, delta, grid, tolerance, affine_k):
    sources = [("small", model.nu1, model.c1), ("large", model.nu2, model.c2)]
    worst = None
    for tag, measure, cfunc in sources:
        if measure is None:
            continue
        if affine_k is not None:
            marks = _mark_grid(measure, 1001)
            margin = np.abs(1.0 + np.asarray(affine_k(marks), dtype=float))
            lhs = delta - margin          # violated when >= 0 (margin <= delta)
            i = int(np.argmax(lhs))
            cand = {"mark": float(marks[i]), "source": tag,
                    "lhs": float(lhs[i]), "rhs": 0.0, "slack": float(lhs[i]),
                    "factor": float(margin[i]),
                    "mark_window_mass": _window_mass(measure, float(marks[i]))}
        else:
            marks = _mark_grid(measure, 101)
            xs = np.asarray(grid.anchors, dtype=float)[::2]
            gaps = np.asarray(grid.gaps, dtype=float)[::8]
            x = np.repeat(xs, gaps.size)
            y = x - np.tile(gaps, xs.size)
            cx = np.asarray(cfunc(x[:, None], marks[None, :]), dtype=float)
            cy = np.asarray(cfunc(y[:, None], marks[None, :]), dtype=float)
            moved = np.abs((x - y)[:, None] + cx - cy)
            lhs = delta * np.abs(x - y)[:, None] - moved
            flat = int(np.argmax(lhs))
            pi, mi = divmod(flat, marks.size)
            cand = {"mark": float(marks[mi]), "source": tag,
                    "x": float(x[pi]), "y": float(y[pi]),
                    "lhs": float(lhs[pi, mi]), "rhs": 0.0,
                    "slack": float(lhs[pi, mi]),
                    "mark_window_mass": _window_mass(measure,
                                                     float(marks[mi]))}
        if worst is None or cand["slack"] > worst["slack"]:
            worst = cand
    if worst is None:
        return ConditionResult("jump_separation", NO_VIOLATION,
                               note="no jump measures present")
    bad = worst["slack"] > tolerance
    note = ("separation is falsification-only: a bad mark is reported with "
            "the measure mass in a small window around it")
    if affine_k is not None:
        note = ("affine shortcut: |1 + k(u)| > delta scanned over a dense "
                "mark grid; " + note)
    cond = ConditionResult("jump_separation",
                           VIOLATED if bad else NO_VIOLATION,
                           worst=worst, note=note)
    if bad:
        if affine_k is not None:
            cond.worst["reconfirmed"] = bool(
                delta - abs(1.0 + float(np.asarray(affine_k(worst["mark"]))))
                > tolerance)
        else:
            mdl = dict((t, c) for t, _, c in sources)[worst["source"]]
            xx, yy, uu = worst["x"], worst["y"], worst["mark"]
            moved = abs(xx - yy + float(np.asarray(mdl(xx, uu)))
                        - float(np.asarray(mdl(yy, uu))))
            cond.worst["reconfirmed"] = bool(
                delta * abs(xx - yy) - moved > tolerance)
    return cond


# ---------------------------------------------------------------------------
# designated preset checks
# ---------------------------------------------------------------------------

def designated_checks(model, tolerance=DEFAULT_TOLERANCE):
    """The frozen per-preset condition sets.

    * ``example_31`` — growth bound with the logarithmic envelope at
      ``mu = (e + 3 sqrt(e)) / (e + 1)`` (the exact supremum, attained at
      ``-sqrt(e)``), plus the corollary conditions with ``rho_1`` the
      (-x ln x)-modulus (the drift's own increment bound) and ``rho_2`` three
      times the identity, on pairs inside ``(0, 1/e)``.
    * ``example_41`` — growth bound with the constant envelope at the frozen
      supremum, the alpha = 0 local route, and the non-confluence set at
      ``alpha = 0, delta = 0.5`` with the affine separation shortcut.
    """
    if model.label == "example_31":
        inv_e = 1.0 / math.e
        grid = PairGrid(
            anchors=np.linspace(1e-6, inv_e - 1e-6, 101),
            gaps=np.geomspace(1e-6, inv_e - 2e-6, 401),
            interval=(0.0, inv_e),
            label="101 anchors x 401 log-spaced gaps, both directions",
        )
        return [
            check_growth(model, builtin_growth("log"), MU_EXAMPLE_31,
                         tolerance=tolerance),
            check_corollary_conditions(
                model, builtin_modulus("neg_x_log_x"),
                scale_modulus(builtin_modulus("identity"), 3.0),
                delta0=inv_e, grid=grid, tolerance=tolerance),
        ]
    if model.label == "example_41":
        five_id = scale_modulus(builtin_modulus("identity"), 5.0)
        grid26 = PairGrid(
            anchors=np.linspace(-5.0, 5.0, 101),
            gaps=np.geomspace(1e-6, 10.0, 401),
            label="101 anchors in [-5,5] x 401 log-spaced gaps, "
                  "both directions",
        )
        return [
            check_growth(model, builtin_growth("one"), MU_EXAMPLE_41,
                         tolerance=tolerance),
            check_local_conditions(model, five_id, alpha=0.0, delta0=1.0,
                                   tolerance=tolerance),
            check_nonconfluence_conditions(
                model, five_id, alpha=0.0, delta=0.5, grid=grid26,
                tolerance=tolerance,
                affine_k=lambda u: GAMMA * np.abs(np.asarray(u, dtype=float))),
        ]
    raise CatalogError(
        f"no designated checks for model {model.label!r}; known: "
        "['example_31', 'example_41']")


# ---------------------------------------------------------------------------
# presentation
# ---------------------------------------------------------------------------

def reports_to_json(reports, indent=2):
    return json.dumps([r.to_dict() for r in reports], indent=indent)


def format_report_table(reports):
    """condition -> verdict -> worst slack, one row per checked condition."""
    rows = [("condition", "verdict", "worst slack")]
    for rep in reports:
        for cond in rep.conditions:
            slack = ("" if cond.worst is None
                     else f"{cond.worst['slack']:.6g}")
            rows.append((f"{rep.assumption_id}:{cond.name}", cond.verdict,
                         slack))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
