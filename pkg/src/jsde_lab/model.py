"""Model data for one-dimensional jump SDEs.

A model instance is a :class:`CoefficientSet`: drift ``b``, diffusion
``sigma``, a compensated small-jump coefficient ``c1`` with mark measure
``nu1``, and an uncompensated large-jump coefficient ``c2`` with finite mark
measure ``nu2`` (optionally restricted to a sub-band ``u3``).

The module also carries two catalogs used throughout the laboratory:

* concavity moduli ``rho`` (nondecreasing, concave, vanishing at 0, with a
  divergent integral of ``1/rho`` at 0), used by the pathwise-uniqueness
  machinery, and
* growth envelopes ``Upsilon`` (nondecreasing, >= 1), used by the moment
  bound.

All callables here are numpy-vectorized: they accept scalars or arrays and
return the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import CatalogError, DomainError

__all__ = [
    "Band",
    "MarkMeasure",
    "CoefficientSet",
    "Modulus",
    "GrowthFunction",
    "builtin_modulus",
    "builtin_growth",
    "scale_modulus",
    "affine_modulus",
    "preset_example_31",
    "preset_example_41",
    "preset",
    "MODULUS_CATALOG",
    "GROWTH_CATALOG",
    "PRESET_CATALOG",
    "GAMMA",
]

_GL_NODES = 64
_CDF_TABLE = 4097


# ---------------------------------------------------------------------------
# mark measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Band:
    """Half-open-by-default interval of marks, ``lo < u <= hi``."""

    lo: float
    hi: float
    closed_lo: bool = False
    closed_hi: bool = True

    def contains(self, u):
        u = np.asarray(u)
        left = (u >= self.lo) if self.closed_lo else (u > self.lo)
        right = (u <= self.hi) if self.closed_hi else (u < self.hi)
        return left & right


def _as_bands(u3):
    if u3 is None:
        return None
    if isinstance(u3, Band):
        return (u3,)
    return tuple(u3)


def in_bands(u3, marks):
    """Vectorized membership of marks in a band set (None = everything)."""
    marks = np.asarray(marks, dtype=float)
    if u3 is None:
        return np.ones(marks.shape, dtype=bool)
    out = np.zeros(marks.shape, dtype=bool)
    for band in _as_bands(u3):
        out |= band.contains(marks)
    return out


class MarkMeasure:
    """A finite (or explicitly infinite) measure on real marks.

    Supported forms: a list of density pieces ``(lo, hi, d)`` with ``d`` a
    nonnegative vectorized density, and/or a list of atoms ``(u, w)`` with
    weights ``w > 0``.  Pieces straddling 0 are split there so piecewise
    quadrature never integrates across the ``|u|`` kink.
    """

    def __init__(self, pieces=(), atoms=(), label="", total_mass=None):
        split = []
        for lo, hi, dens in pieces:
            lo, hi = float(lo), float(hi)
            if hi <= lo:
                raise DomainError(f"empty density piece [{lo}, {hi}]")
            if lo < 0.0 < hi:
                split.append((lo, 0.0, dens))
                split.append((0.0, hi, dens))
            else:
                split.append((lo, hi, dens))
        self.pieces = tuple(split)
        self.atoms = tuple((float(u), float(w)) for u, w in atoms)
        for u, w in self.atoms:
            if w <= 0.0:
                raise DomainError(f"atom at {u} has non-positive weight {w}")
        self.label = label
        if total_mass is None:
            total_mass = self._quadrature_mass()
        self.total_mass = float(total_mass)
        self._nw = None
        self._sampler = None

    def _quadrature_mass(self):
        m = sum(w for _, w in self.atoms)
        for lo, hi, dens in self.pieces:
            val, _ = quad(lambda u: float(np.asarray(dens(u))), lo, hi, limit=200)
            m += val
        return m

    @property
    def is_finite(self):
        return math.isfinite(self.total_mass)

    def nodes_and_weights(self):
        """Quadrature atoms: ``integral g dnu ~= sum w_i g(u_i)``.

        Gauss-Legendre nodes per density piece (weights folded with the
        density values), plus the exact atoms.
        """
        if self._nw is None:
            xs, ws = [], []
            gl_x, gl_w = np.polynomial.legendre.leggauss(_GL_NODES)
            for lo, hi, dens in self.pieces:
                mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
                u = mid + half * gl_x
                xs.append(u)
                ws.append(half * gl_w * np.asarray(dens(u), dtype=float))
            for u, w in self.atoms:
                xs.append(np.array([u]))
                ws.append(np.array([w]))
            if xs:
                self._nw = (np.concatenate(xs), np.concatenate(ws))
            else:
                self._nw = (np.zeros(0), np.zeros(0))
        return self._nw

    def integrate(self, g):
        """Integrate a vectorized function of the mark against the measure."""
        u, w = self.nodes_and_weights()
        if u.size == 0:
            return 0.0
        return float(np.dot(np.asarray(g(u), dtype=float), w))

    def restricted(self, bands):
        """Measure restricted to a band set (used for sub-support masses)."""
        if bands is None:
            return self
        bands = _as_bands(bands)
        pieces, atoms = [], []
        for lo, hi, dens in self.pieces:
            for band in bands:
                a, b = max(lo, band.lo), min(hi, band.hi)
                if b > a:
                    pieces.append((a, b, dens))
        for u, w in self.atoms:
            if bool(in_bands(bands, u)):
                atoms.append((u, w))
        return MarkMeasure(pieces, atoms, label=f"{self.label}|restricted")

    def mass_in(self, bands):
        if bands is None:
            return self.total_mass
        return self.restricted(bands).total_mass

    def _build_sampler(self):
        # categorical over (pieces..., atoms...) by mass, inverse-CDF within
        # a piece via a tabulated normalized CDF
        comp_mass, tables = [], []
        for lo, hi, dens in self.pieces:
            grid = np.linspace(lo, hi, _CDF_TABLE)
            vals = np.maximum(np.asarray(dens(grid), dtype=float), 0.0)
            cdf = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid))])
            comp_mass.append(cdf[-1])
            tables.append((grid, cdf / cdf[-1] if cdf[-1] > 0 else cdf))
        for u, w in self.atoms:
            comp_mass.append(w)
            tables.append(u)
        comp_mass = np.asarray(comp_mass, dtype=float)
        return comp_mass / comp_mass.sum(), tables

    def sample(self, rng, size):
        """Draw ``size`` marks from the normalized measure."""
        if not self.is_finite:
            raise DomainError(
                "cannot sample marks from an infinite measure; apply "
                "truncate_small_jumps first"
            )
        if size == 0:
            return np.zeros(0)
        if self._sampler is None:
            self._sampler = self._build_sampler()
        probs, tables = self._sampler
        comp = rng.choice(len(probs), size=size, p=probs)
        out = np.empty(size, dtype=float)
        for k, table in enumerate(tables):
            mask = comp == k
            if not np.any(mask):
                continue
            if isinstance(table, tuple):
                grid, cdf = table
                out[mask] = np.interp(rng.random(int(mask.sum())), cdf, grid)
            else:
                out[mask] = table
        return out


def lebesgue(lo, hi, label=""):
    return MarkMeasure(pieces=[(lo, hi, lambda u: np.ones_like(np.asarray(u, dtype=float)))],
                       label=label or f"lebesgue[{lo},{hi}]")


# ---------------------------------------------------------------------------
# concavity moduli
# ---------------------------------------------------------------------------

class Modulus:
    """Nondecreasing nonnegative modulus ``rho`` on ``[0, inf)``.

    ``domain_hint`` is the upper edge of the interval on which the closed
    form is the natural one; beyond it the catalog entries continue with the
    constant value at the edge (which preserves nondecrease and concavity).

    ``log_weight(ell)`` evaluates ``exp(-ell) / rho(exp(-ell))`` stably even
    where ``exp(-ell)`` underflows; it is the integrand of ``ds / rho(s)``
    after the substitution ``s = exp(-ell)`` and is what makes the deep
    small-argument machinery (a-sequence, psi-family) workable far below
    float range.
    """

    def __init__(self, rho, domain_hint, label, concave=True,
                 closed_form_omega=None, log_weight=None,
                 log_weight_breaks=()):
        self.rho = rho
        self.domain_hint = float(domain_hint)
        self.label = label
        self.concave = bool(concave)
        self.closed_form_omega = closed_form_omega
        self._log_weight = log_weight
        self.log_weight_breaks = tuple(log_weight_breaks)

    def __call__(self, x):
        return self.rho(x)

    def __repr__(self):
        return f"Modulus({self.label!r})"

    def log_weight(self, ell):
        ell = np.asarray(ell, dtype=float)
        if self._log_weight is not None:
            return self._log_weight(ell)
        x = np.exp(-ell)
        if np.any(x == 0.0):
            raise DomainError(
                f"modulus {self.label!r} has no stable log-domain form and "
                f"exp(-ell) underflows at ell={float(np.max(ell)):g}"
            )
        return x / np.asarray(self.rho(x), dtype=float)


def scale_modulus(modulus, c):
    """``c * rho`` — still a valid modulus for ``c > 0``."""
    c = float(c)
    if c <= 0:
        raise DomainError("modulus scale must be positive")
    cf = None
    if modulus.closed_form_omega is not None:
        fwd, inv = modulus.closed_form_omega
        cf = (lambda t, tb: fwd(t, tb) / c, lambda y, tb: inv(c * y, tb))
    return Modulus(
        rho=lambda x, _m=modulus, _c=c: _c * np.asarray(_m.rho(x), dtype=float),
        domain_hint=modulus.domain_hint,
        label=f"{c:g}*{modulus.label}",
        concave=modulus.concave,
        closed_form_omega=cf,
        log_weight=lambda ell, _m=modulus, _c=c: _m.log_weight(ell) / _c,
        log_weight_breaks=modulus.log_weight_breaks,
    )


def affine_modulus(k1, k2, modulus, label=None):
    """``k1 * x + k2 * rho(x)`` — concave with a divergent reciprocal integral
    whenever ``rho`` has one (or ``k1 > 0``)."""
    k1, k2 = float(k1), float(k2)
    if k1 < 0 or k2 < 0 or k1 + k2 == 0:
        raise DomainError("affine modulus needs nonnegative k1, k2, not both 0")

    def rho0(x, _m=modulus):
        x = np.asarray(x, dtype=float)
        return k1 * x + k2 * np.asarray(_m.rho(x), dtype=float)

    def w0(ell, _m=modulus):
        # 1 / (k1 + k2 / W(ell)) with W = exp(-ell)/rho(exp(-ell))
        w = np.asarray(_m.log_weight(ell), dtype=float)
        return 1.0 / (k1 + k2 / w)

    return Modulus(
        rho=rho0,
        domain_hint=modulus.domain_hint,
        label=label or f"{k1:g}*x+{k2:g}*{modulus.label}",
        concave=modulus.concave,
        log_weight=w0 if k2 > 0 else (lambda ell: np.full_like(np.asarray(ell, dtype=float), 1.0 / k1)),
        log_weight_breaks=modulus.log_weight_breaks if k2 > 0 else (),
    )


def _identity_modulus():
    def rho(x):
        return np.asarray(x, dtype=float) + 0.0

    def _inv(y, tb):
        with np.errstate(over="ignore"):
            return tb * np.exp(y)

    cf = (lambda t, tb: np.log(t / tb), _inv)
    return Modulus(rho, domain_hint=math.inf, label="identity",
                   closed_form_omega=cf,
                   log_weight=lambda ell: np.ones_like(np.asarray(ell, dtype=float)))


def _neg_x_log_x_modulus():
    edge = 1.0 / math.e          # argmax of -x ln x
    peak = 1.0 / math.e

    def rho(x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, peak)
        inner = (x > 0) & (x <= edge)
        xv = np.where(inner, x, 0.5)
        out = np.where(inner, -xv * np.log(xv), out)
        return np.where(x <= 0, 0.0, out)

    def w(ell):
        ell = np.asarray(ell, dtype=float)
        safe = np.maximum(ell, 1.0)
        return np.where(ell >= 1.0, 1.0 / safe, np.exp(1.0 - ell) * (ell < 1.0))

    return Modulus(rho, domain_hint=edge, label="neg_x_log_x", log_weight=w,
                   log_weight_breaks=(1.0,))


def _solve_l_star():
    # argmax of x*ln(ln(1/x)) sits where ln(L) = 1/L, L = ln(1/x)
    return brentq(lambda L: math.log(L) - 1.0 / L, 1.2, 3.0, xtol=1e-15, rtol=8.9e-16)


_L_STAR = _solve_l_star()
_X_STAR = math.exp(-_L_STAR)
_X_STAR_VALUE = _X_STAR / _L_STAR      # x* * ln(L*) with ln(L*) = 1/L*


def _x_log_log_modulus():
    def rho(x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, _X_STAR_VALUE)
        inner = (x > 0) & (x <= _X_STAR)
        xv = np.where(inner, x, 0.5 * _X_STAR)
        out = np.where(inner, xv * np.log(np.log(1.0 / xv)), out)
        return np.where(x <= 0, 0.0, out)

    def w(ell):
        ell = np.asarray(ell, dtype=float)
        safe = np.maximum(ell, _L_STAR)
        inner = 1.0 / (np.log(safe))
        outer = np.exp(-np.minimum(ell, 700.0)) / _X_STAR_VALUE
        return np.where(ell >= _L_STAR, inner, outer)

    return Modulus(rho, domain_hint=_X_STAR, label="x_log_log", log_weight=w,
                   log_weight_breaks=(_L_STAR,))


def _one_minus_x_pow_x_modulus():
    edge = 1.0 / math.e          # argmax of 1 - x^x
    peak = 1.0 - math.exp(-1.0 / math.e)

    def rho(x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, peak)
        inner = (x > 0) & (x <= edge)
        xv = np.where(inner, x, 0.5)
        out = np.where(inner, -np.expm1(xv * np.log(xv)), out)
        return np.where(x <= 0, 0.0, out)

    def w(ell):
        # exp(-ell) / (1 - exp(-t)) with t = ell*exp(-ell); for tiny t the
        # ratio collapses to 1/ell exactly at double precision
        ell = np.asarray(ell, dtype=float)
        outer = np.exp(-np.minimum(ell, 700.0)) / peak
        safe = np.maximum(ell, 1.0)
        t = safe * np.exp(-safe)
        small = t < 1e-12
        denom = np.where(small, 1.0, -np.expm1(-t))
        inner = np.where(small, 1.0 / safe, np.exp(-safe) / denom)
        return np.where(ell >= 1.0, inner, outer)

    return Modulus(rho, domain_hint=edge, label="one_minus_x_pow_x", log_weight=w,
                   log_weight_breaks=(1.0,))


MODULUS_CATALOG = {
    "identity": _identity_modulus,
    "neg_x_log_x": _neg_x_log_x_modulus,
    "x_log_log": _x_log_log_modulus,
    "one_minus_x_pow_x": _one_minus_x_pow_x_modulus,
}


def builtin_modulus(name):
    """Look up a modulus by catalog key.

    Keys: ``identity`` (rho(x) = x), ``neg_x_log_x`` (-x ln x up to 1/e),
    ``x_log_log`` (x ln(-ln x) up to its argmax), ``one_minus_x_pow_x``
    (1 - x^x up to 1/e).  Bounded entries continue rightwards with their
    edge value.
    """
    try:
        return MODULUS_CATALOG[name]()
    except KeyError:
        raise CatalogError(
            f"unknown modulus {name!r}; valid keys: {sorted(MODULUS_CATALOG)}"
        ) from None


# ---------------------------------------------------------------------------
# growth envelopes
# ---------------------------------------------------------------------------

class GrowthFunction:
    """Nondecreasing envelope ``Upsilon >= 1`` with an explicit derivative.

    ``kinks`` lists points where the piecewise definition switches; finite
    difference checks exclude them.
    """

    def __init__(self, upsilon, upsilon_prime, label, kinks=()):
        self.upsilon = upsilon
        self.upsilon_prime = upsilon_prime
        self.label = label
        self.kinks = tuple(kinks)

    def __call__(self, x):
        return self.upsilon(x)

    def __repr__(self):
        return f"GrowthFunction({self.label!r})"


def _growth_one():
    return GrowthFunction(
        upsilon=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        upsilon_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        label="one",
    )


def _growth_log():
    e = math.e

    def ups(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= e, 1.0, np.log(np.maximum(x, e)))

    def dups(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= e, 0.0, 1.0 / np.maximum(x, e))

    return GrowthFunction(ups, dups, label="log", kinks=(e,))


def _growth_log_loglog():
    e2 = math.e ** 2
    floor = 2.0 * math.log(2.0)      # value at x = e^2

    def ups(x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, e2)
        return np.where(x <= e2, floor, np.log(xs) * np.log(np.log(xs)))

    def dups(x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, e2)
        return np.where(x <= e2, 0.0, (np.log(np.log(xs)) + 1.0) / xs)

    return GrowthFunction(ups, dups, label="log_loglog", kinks=(e2,))


GROWTH_CATALOG = {
    "one": _growth_one,
    "log": _growth_log,
    "log_loglog": _growth_log_loglog,
}


def builtin_growth(name):
    """Look up a growth envelope by catalog key: ``one``, ``log``,
    ``log_loglog``.  The two unbounded entries are constant left of the point
    where their natural form reaches 1 (``e`` and ``e^2``)."""
    try:
        return GROWTH_CATALOG[name]()
    except KeyError:
        raise CatalogError(
            f"unknown growth function {name!r}; valid keys: {sorted(GROWTH_CATALOG)}"
        ) from None


# ---------------------------------------------------------------------------
# coefficient sets and presets
# ---------------------------------------------------------------------------

class CoefficientSet:
    """One jump-SDE model: drift, diffusion, jump coefficients, mark measures.

    Parameters
    ----------
    b, sigma : vectorized callables of the state.
    c1, c2 : vectorized callables ``(state, mark) -> jump size``; ``c1`` is
        driven by the compensated measure ``nu1``, ``c2`` by the finite
        measure ``nu2``.
    nu1, nu2 : MarkMeasure.
    u3 : optional band (or tuple of bands) restricting ``nu2``; the mass
        outside must be finite, which is automatic here since ``nu2`` itself
        is finite.
    c1_mean : optional closed form of the compensation drift
        ``x -> integral c1(x, u) nu1(du)``; computed by quadrature when
        absent.
    """

    def __init__(self, b, sigma, c1, c2, nu1, nu2, u3=None, label="",
                 c1_mean=None):
        self.b = b
        self.sigma = sigma
        self.c1 = c1
        self.c2 = c2
        self.nu1 = nu1
        self.nu2 = nu2
        self.u3 = _as_bands(u3)
        self.label = label
        self._c1_mean = c1_mean

    def __repr__(self):
        return f"CoefficientSet({self.label!r})"

    def c1_mean(self, x):
        """Compensation drift: the nu1-average jump size at state ``x``."""
        if self._c1_mean is not None:
            return self._c1_mean(x)
        u, w = self.nu1.nodes_and_weights()
        if u.size == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        x = np.asarray(x, dtype=float)
        vals = np.asarray(self.c1(x[..., None], u), dtype=float)
        return vals @ w

    def u3_mass(self):
        return self.nu2.mass_in(self.u3)


GAMMA = math.sqrt(1.5)    # makes gamma^2 * second moment of lebesgue[-1,1] = 1


def preset_example_31():
    """Built-in model: logarithmic drift with square-root noise.

    Drift ``-|x| ln|x|`` (0 at 0), diffusion ``sqrt|x|``, small jumps of size
    ``sqrt|x|`` on marks ``|u| <= 1`` (unit Lebesgue density, compensated),
    and multiplicative large jumps ``gamma |u| x`` on marks in ``(1, 2]``
    (unit density, mass 1).  ``gamma = sqrt(3/2)`` normalizes the second
    moment of the small-jump coefficient family.

    The interlacing sub-support is empty: the large-jump measure is finite,
    so every large jump is handled by interlacing and the reduced equation
    carries none.  (A linear-in-gap large-jump term inside the local
    conditions would otherwise defeat every admissible modulus.)
    """
    def b(x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        safe = np.where(ax > 0, ax, 1.0)
        return np.where(ax > 0, -ax * np.log(safe), 0.0)

    def sigma(x):
        return np.sqrt(np.abs(np.asarray(x, dtype=float)))

    def c1(x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return np.sqrt(np.abs(x)) * np.ones_like(u)

    def c2(x, u):
        return GAMMA * np.abs(np.asarray(u, dtype=float)) * np.asarray(x, dtype=float)

    return CoefficientSet(
        b=b, sigma=sigma, c1=c1, c2=c2,
        nu1=lebesgue(-1.0, 1.0, label="nu1:unit[-1,1]"),
        nu2=lebesgue(1.0, 2.0, label="nu2:unit(1,2]"),
        u3=(),
        label="example_31",
        c1_mean=lambda x: 2.0 * np.sqrt(np.abs(np.asarray(x, dtype=float))),
    )


def preset_example_41():
    """Built-in model: cubic-plus-cube-root dissipative drift, linear noise.

    Drift ``-(x^3 + cbrt(x))`` (real signed cube root), diffusion ``2x``, and
    multiplicative jumps ``gamma |u| x`` driven by both measures: compensated
    on marks ``|u| <= 1``, uncompensated on ``(1, 2]``.  The interlacing
    sub-support is empty, as in the sibling preset.
    """
    def b(x):
        x = np.asarray(x, dtype=float)
        return -(x ** 3 + np.cbrt(x))

    def sigma(x):
        return 2.0 * np.asarray(x, dtype=float)

    def cj(x, u):
        return GAMMA * np.abs(np.asarray(u, dtype=float)) * np.asarray(x, dtype=float)

    return CoefficientSet(
        b=b, sigma=sigma, c1=cj, c2=cj,
        nu1=lebesgue(-1.0, 1.0, label="nu1:unit[-1,1]"),
        nu2=lebesgue(1.0, 2.0, label="nu2:unit(1,2]"),
        u3=(),
        label="example_41",
        c1_mean=lambda x: GAMMA * np.asarray(x, dtype=float),
    )


PRESET_CATALOG = {
    "example_31": preset_example_31,
    "example_41": preset_example_41,
}


def preset(name):
    """Look up a built-in model by name."""
    try:
        return PRESET_CATALOG[name]()
    except KeyError:
        raise CatalogError(
            f"unknown preset {name!r}; valid keys: {sorted(PRESET_CATALOG)}"
        ) from None
