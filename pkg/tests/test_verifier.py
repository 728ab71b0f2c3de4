"""Tests for the assumption verifier: certificates on the cataloged presets
and falsification witnesses on deliberately broken models."""

import json

import numpy as np
import pytest

from jsde_lab.errors import CatalogError, DomainError
from jsde_lab.model import (
    CoefficientSet,
    GAMMA,
    affine_modulus,
    builtin_growth,
    preset,
    builtin_modulus,
    lebesgue,
    scale_modulus,
)
from jsde_lab.verifier import (
    NO_VIOLATION,
    VIOLATED,
    PairGrid,
    check_corollary_conditions,
    check_growth,
    check_local_conditions,
    check_modulus,
    check_nonconfluence_conditions,
    designated_checks,
    format_report_table,
    growth_ratio_supremum,
    reports_to_json,
)


def _zeros(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _small_grid(lo=-3.0, hi=3.0, gap_max=1.0, interval=None):
    return PairGrid(anchors=np.linspace(lo, hi, 31),
                    gaps=np.geomspace(1e-5, gap_max, 41),
                    interval=interval, label="test grid")


def _linear_model():
    return CoefficientSet(
        b=lambda x: -np.asarray(x, dtype=float),
        sigma=lambda x: 0.5 * np.asarray(x, dtype=float),
        c1=None, c2=None, nu1=None, nu2=None, label="linear",
    )


# ---------------------------------------------------------------------------
# A22 modulus admissibility
# ---------------------------------------------------------------------------

def test_check_modulus_identity_passes():
    rep = check_modulus(builtin_modulus("identity"))
    assert rep.assumption_id == "A22"
    assert rep.verdict == NO_VIOLATION
    assert all(c.verdict == NO_VIOLATION for c in rep.conditions)


def test_check_modulus_sqrt_violated_and_reconfirmed():
    # sqrt has a convergent reciprocal integral at 0+: inadmissible.
    from jsde_lab.model import Modulus
    sqrt = Modulus(lambda r: np.sqrt(np.asarray(r, dtype=float)),
                   domain_hint=np.inf, label="sqrt")
    rep = check_modulus(sqrt)
    assert rep.verdict == VIOLATED
    bad = [c for c in rep.conditions if c.verdict == VIOLATED]
    assert bad
    # at least one violated condition carries an independent reconfirmation
    assert any(c.worst.get("reconfirmed") is True for c in bad
               if c.worst is not None)


# ---------------------------------------------------------------------------
# A23 growth bound
# ---------------------------------------------------------------------------

def test_check_growth_linear_passes():
    rep = check_growth(_linear_model(), builtin_growth("one"), mu=2.0)
    assert rep.assumption_id == "A23"
    assert rep.verdict == NO_VIOLATION


def test_check_growth_cubic_violated_with_witness():
    m = CoefficientSet(
        b=lambda x: np.asarray(x, dtype=float) ** 3,
        sigma=_zeros, c1=None, c2=None, nu1=None, nu2=None, label="cubic",
    )
    rep = check_growth(m, builtin_growth("one"), mu=1.0)
    assert rep.verdict == VIOLATED
    cond = next(c for c in rep.conditions if c.name == "growth_bound")
    assert cond.verdict == VIOLATED
    w = cond.worst
    # witness: 2 x b(x) = 2 x^4 against mu (x^2 + 1), reconfirmed pointwise
    assert w["lhs"] > w["rhs"]
    assert w["reconfirmed"] is True
    assert w["recomputed_lhs"] == pytest.approx(2.0 * w["x"] ** 4, rel=1e-12)


def test_check_growth_rejects_negative_mu():
    with pytest.raises(DomainError):
        check_growth(_linear_model(), builtin_growth("one"), mu=-1.0)


def test_growth_ratio_supremum_linear_drift():
    # b = x, sigma = 0: ratio 2x^2 / (x^2 + 1) peaks at the grid edges.
    m = CoefficientSet(b=lambda x: np.asarray(x, dtype=float),
                       sigma=_zeros, c1=None, c2=None, nu1=None, nu2=None)
    sup = growth_ratio_supremum(m, builtin_growth("one"),
                                anchors=np.linspace(-10, 10, 201))
    # 2x*x / (x^2+1) -> sup 2*100/101 on this grid
    sup_val, sup_arg = sup
    assert sup_val == pytest.approx(200.0 / 101.0, rel=1e-9)
    assert abs(sup_arg) == pytest.approx(10.0)


# ---------------------------------------------------------------------------
# A25 corollary conditions
# ---------------------------------------------------------------------------

def test_corollary_anti_monotone_c1_violated():
    # c1 decreasing in the state reverses the monotonicity scan.
    m = CoefficientSet(
        b=_zeros, sigma=_zeros,
        c1=lambda x, u: -np.asarray(x, dtype=float)
        * np.ones_like(np.asarray(u, dtype=float)),
        c2=None, nu1=lebesgue(0.0, 1.0), nu2=None, label="anti-monotone",
    )
    rep = check_corollary_conditions(
        m, builtin_modulus("identity"), builtin_modulus("identity"),
        delta0=1.0, grid=_small_grid(0.1, 2.0, 0.5))
    assert rep.assumption_id == "A25"
    names = {c.name: c.verdict for c in rep.conditions}
    assert names["c1_monotone_in_state"] == VIOLATED


def test_corollary_zero_model_passes():
    m = CoefficientSet(b=_zeros, sigma=_zeros, c1=None, c2=None,
                       nu1=None, nu2=None)
    rep = check_corollary_conditions(
        m, builtin_modulus("identity"), builtin_modulus("identity"),
        delta0=1.0, grid=_small_grid())
    assert rep.verdict == NO_VIOLATION


# ---------------------------------------------------------------------------
# A24 local conditions
# ---------------------------------------------------------------------------

def test_local_alpha_zero_routes_to_lipschitz_set():
    rep = check_local_conditions(
        _linear_model(), scale_modulus(builtin_modulus("identity"), 5.0),
        alpha=0.0, delta0=1.0, grid=_small_grid())
    assert rep.assumption_id == "A24"
    assert rep.verdict == NO_VIOLATION
    assert any("alpha = 0" in n for n in rep.notes)
    # monotonicity scan is excluded on this route
    assert all(c.name != "c1_monotone_in_state" for c in rep.conditions)


def test_local_positive_alpha_super_linear_drift_violated():
    m = CoefficientSet(
        b=lambda x: 8.0 * np.asarray(x, dtype=float) ** 3,
        sigma=_zeros, c1=None, c2=None, nu1=None, nu2=None,
    )
    rep = check_local_conditions(
        m, builtin_modulus("identity"), alpha=1.0, delta0=0.5,
        grid=_small_grid(1.0, 3.0, 0.4))
    assert rep.verdict == VIOLATED


def test_local_validation():
    with pytest.raises(DomainError):
        check_local_conditions(_linear_model(), builtin_modulus("identity"),
                               alpha=-1.0, delta0=1.0)
    with pytest.raises(DomainError):
        check_local_conditions(_linear_model(), builtin_modulus("identity"),
                               alpha=1.0, delta0=0.0)


# ---------------------------------------------------------------------------
# A26 nonconfluence conditions
# ---------------------------------------------------------------------------

def test_nonconfluence_annihilating_jump_violated():
    # c(x, u) = -x collapses x + c(x) to zero: separation fails.
    m = CoefficientSet(
        b=_zeros, sigma=_zeros,
        c1=lambda x, u: -np.asarray(x, dtype=float)
        * np.ones_like(np.asarray(u, dtype=float)),
        c2=None, nu1=lebesgue(-1.0, 1.0), nu2=None, label="annihilating",
    )
    rep = check_nonconfluence_conditions(
        m, builtin_modulus("identity"), alpha=0.0, delta=0.5,
        grid=_small_grid(), affine_k=lambda u: -np.ones_like(
            np.asarray(u, dtype=float)))
    assert rep.assumption_id == "A26"
    names = {c.name: c.verdict for c in rep.conditions}
    assert names["jump_separation"] == VIOLATED


def test_nonconfluence_scaled_mark_passes():
    m = preset("example_41")
    rep = check_nonconfluence_conditions(
        m, scale_modulus(builtin_modulus("identity"), 5.0), alpha=0.0,
        delta=0.5, grid=_small_grid(-5.0, 5.0, 2.0),
        affine_k=lambda u: GAMMA * np.abs(np.asarray(u, dtype=float)))
    assert rep.verdict == NO_VIOLATION


def test_nonconfluence_validation():
    with pytest.raises(DomainError):
        check_nonconfluence_conditions(
            _linear_model(), builtin_modulus("identity"), alpha=1.0,
            delta=0.0)


# ---------------------------------------------------------------------------
# designated check lists and report plumbing
# ---------------------------------------------------------------------------

def test_designated_ids_log_drift_preset():
    reports = designated_checks(preset("example_31"))
    assert [r.assumption_id for r in reports] == ["A23", "A25"]
    assert all(r.verdict == NO_VIOLATION for r in reports)


def test_designated_ids_cube_root_preset():
    reports = designated_checks(preset("example_41"))
    assert [r.assumption_id for r in reports] == ["A23", "A24", "A26"]
    assert all(r.verdict == NO_VIOLATION for r in reports)


def test_designated_unknown_model():
    m = _linear_model()
    with pytest.raises(CatalogError):
        designated_checks(m)


def test_reports_json_roundtrip():
    rep = check_modulus(builtin_modulus("identity"))
    data = json.loads(reports_to_json([rep]))
    assert isinstance(data, list) and len(data) == 1
    d = data[0]
    assert d["assumption_id"] == "A22"
    assert d["verdict"] == NO_VIOLATION
    assert [c["name"] for c in d["conditions"]] == [
        c.name for c in rep.conditions]


def test_format_report_table_mentions_ids_and_verdicts():
    m = CoefficientSet(
        b=lambda x: np.asarray(x, dtype=float) ** 3,
        sigma=_zeros, c1=None, c2=None, nu1=None, nu2=None,
    )
    good = check_growth(_linear_model(), builtin_growth("one"), mu=2.0)
    bad = check_growth(m, builtin_growth("one"), mu=1.0)
    table = format_report_table([good, bad])
    assert "A23" in table
    assert NO_VIOLATION in table and VIOLATED in table


def test_affine_modulus_in_local_check():
    # rho(r) = 2 r + 1 is a valid comparison scale for a bounded-slope drift
    m = CoefficientSet(
        b=lambda x: np.tanh(np.asarray(x, dtype=float)),
        sigma=_zeros, c1=None, c2=None, nu1=None, nu2=None,
    )
    rep = check_local_conditions(
        m, affine_modulus(2.0, 1.0, builtin_modulus("identity")), alpha=1.0,
        delta0=1.0,
        grid=_small_grid(-2.0, 2.0, 0.9))
    assert rep.verdict == NO_VIOLATION
