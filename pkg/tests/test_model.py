import math

import numpy as np
import pytest
from scipy.integrate import quad

from jsde_lab.errors import CatalogError, DomainError
from jsde_lab.model import (GAMMA, GROWTH_CATALOG, MODULUS_CATALOG, Band,
                            MarkMeasure, affine_modulus, builtin_growth,
                            builtin_modulus, in_bands, lebesgue, preset,
                            scale_modulus)


# ---------------------------------------------------------------------------
# bands and measures
# ---------------------------------------------------------------------------

def test_band_half_open_semantics():
    band = Band(1.0, 2.0)
    assert not band.contains(1.0)
    assert band.contains(2.0)
    assert band.contains(1.5)
    closed = Band(1.0, 2.0, closed_lo=True, closed_hi=False)
    assert closed.contains(1.0) and not closed.contains(2.0)


def test_in_bands_none_is_everything():
    marks = np.array([-5.0, 0.0, 7.0])
    assert in_bands(None, marks).all()
    sel = in_bands((Band(0.0, 1.0), Band(6.0, 8.0)), marks)
    assert sel.tolist() == [False, False, True]


def test_lebesgue_mass_and_integrate():
    nu = lebesgue(-1.0, 1.0)
    assert nu.total_mass == pytest.approx(2.0, rel=1e-12)
    # straddling pieces are split at 0, so the |u| kink is never crossed
    assert len(nu.pieces) == 2
    assert nu.integrate(np.abs) == pytest.approx(1.0, rel=1e-12)
    assert nu.integrate(lambda u: u * u) == pytest.approx(2.0 / 3.0, rel=1e-10)


def test_measure_atoms():
    nu = MarkMeasure(atoms=[(1.0, 0.5), (2.0, 0.25)])
    assert nu.total_mass == pytest.approx(0.75)
    assert nu.integrate(lambda u: u) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        MarkMeasure(atoms=[(1.0, 0.0)])
    with pytest.raises(DomainError):
        MarkMeasure(pieces=[(2.0, 1.0, lambda u: np.ones_like(u))])


def test_measure_restriction():
    nu = lebesgue(1.0, 2.0)
    assert nu.restricted(None) is nu
    assert nu.restricted(()).total_mass == 0.0
    half = nu.restricted((Band(1.0, 1.5),))
    assert half.total_mass == pytest.approx(0.5, rel=1e-10)
    assert nu.mass_in((Band(1.0, 1.25),)) == pytest.approx(0.25, rel=1e-10)


def test_nodes_and_weights_sum_to_mass():
    nu = MarkMeasure(
        pieces=[(-1.0, 1.0, lambda u: np.ones_like(np.asarray(u)))],
        atoms=[(1.5, 0.5)],
    )
    u, w = nu.nodes_and_weights()
    assert np.all(w > 0)
    assert w.sum() == pytest.approx(nu.total_mass, rel=1e-12)
    u2, w2 = nu.nodes_and_weights()
    assert u2 is u and w2 is w       # cached


def test_measure_sampling_reproducible():
    nu = lebesgue(1.0, 2.0)
    a = nu.sample(np.random.Generator(np.random.Philox(key=[7, 0])), 100)
    b = nu.sample(np.random.Generator(np.random.Philox(key=[7, 0])), 100)
    assert np.array_equal(a, b)
    assert np.all((a > 1.0) & (a <= 2.0))


# ---------------------------------------------------------------------------
# modulus catalog
# ---------------------------------------------------------------------------

def test_modulus_catalog_names():
    assert set(MODULUS_CATALOG) == {"identity", "neg_x_log_x", "x_log_log",
                                    "one_minus_x_pow_x"}
    with pytest.raises(CatalogError, match="identity"):
        builtin_modulus("lipschitz")


def test_identity_modulus_values():
    rho = builtin_modulus("identity")
    x = np.geomspace(1e-10, 1.0, 11)
    assert np.allclose(rho(x), x)
    assert rho.concave


def test_catalog_positive_nondecreasing_on_hint():
    for name in MODULUS_CATALOG:
        rho = builtin_modulus(name)
        x = np.geomspace(1e-12, min(rho.domain_hint, 1.0), 301)
        vals = np.asarray(rho(x), dtype=float)
        assert np.all(vals > 0), name
        assert np.all(np.diff(vals) >= -1e-15 * vals[1:]), name


def test_scale_and_affine_modulus():
    rho = builtin_modulus("identity")
    assert scale_modulus(rho, 3.0)(0.5) == pytest.approx(1.5)
    combo = affine_modulus(2.0, 3.0, rho)
    assert combo(0.5) == pytest.approx(2.0 * 0.5 + 3.0 * 0.5)
    with pytest.raises(DomainError):
        scale_modulus(rho, -1.0)


# ---------------------------------------------------------------------------
# growth catalog
# ---------------------------------------------------------------------------

def test_growth_catalog_names():
    assert set(GROWTH_CATALOG) == {"one", "log", "log_loglog"}
    with pytest.raises(CatalogError):
        builtin_growth("quadratic")


def test_growth_one_is_constant():
    ups = builtin_growth("one")
    assert np.allclose(ups(np.array([0.0, 5.0, 1e6])), 1.0)


def test_growth_log_values_and_kink():
    ups = builtin_growth("log")
    assert ups(1.0) == pytest.approx(1.0)          # clamped below e
    assert ups(math.e) == pytest.approx(1.0)
    assert ups(math.e ** 2) == pytest.approx(2.0)
    assert ups.kinks == (math.e,)


def test_growth_prime_matches_finite_difference():
    for name in ("log", "log_loglog"):
        ups = builtin_growth(name)
        for x in (15.0, 40.0):
            fd = (float(ups(x + 1e-6)) - float(ups(x - 1e-6))) / 2e-6
            assert float(ups.upsilon_prime(x)) == pytest.approx(fd, rel=1e-6)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def test_preset_names():
    with pytest.raises(CatalogError, match="example_31"):
        preset("example_99")


def test_gamma_normalizes_second_moment():
    nu1 = preset("example_31").nu1
    second = nu1.integrate(lambda u: u * u)
    assert GAMMA ** 2 * second == pytest.approx(1.0, rel=1e-10)


def test_example_31_coefficients():
    m = preset("example_31")
    assert m.label == "example_31"
    assert m.u3 == ()
    assert float(np.asarray(m.b(0.0))) == 0.0
    assert float(np.asarray(m.b(0.5))) == pytest.approx(-0.5 * math.log(0.5))
    assert float(np.asarray(m.b(-0.5))) == pytest.approx(-0.5 * math.log(0.5))
    assert float(np.asarray(m.sigma(4.0))) == pytest.approx(2.0)
    # closed-form compensation drift against direct quadrature
    for xv in (0.25, 1.0, 3.0):
        direct, _ = quad(lambda u: math.sqrt(abs(xv)), -1.0, 1.0)
        assert float(np.asarray(m.c1_mean(xv))) == pytest.approx(direct,
                                                                 rel=1e-10)


def test_example_41_coefficients():
    m = preset("example_41")
    assert m.u3 == ()
    assert float(np.asarray(m.b(2.0))) == pytest.approx(-(8.0 + 2.0 ** (1 / 3)))
    assert float(np.asarray(m.b(-2.0))) == pytest.approx(8.0 + 2.0 ** (1 / 3))
    assert float(np.asarray(m.sigma(3.0))) == pytest.approx(6.0)
    assert float(np.asarray(m.c1(2.0, -0.5))) == pytest.approx(GAMMA * 0.5 * 2.0)
    assert m.nu2.total_mass == pytest.approx(1.0, rel=1e-10)


def test_c1_mean_quadrature_fallback():
    from jsde_lab.model import CoefficientSet
    m = CoefficientSet(
        b=lambda x: -np.asarray(x, dtype=float),
        sigma=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        c1=lambda x, u: np.asarray(u, dtype=float) ** 2
        * np.ones_like(np.asarray(x, dtype=float)),
        c2=None, nu1=lebesgue(-1.0, 1.0), nu2=None, label="quadratic-jumps",
    )
    assert float(np.asarray(m.c1_mean(1.0))) == pytest.approx(2.0 / 3.0,
                                                              rel=1e-8)
