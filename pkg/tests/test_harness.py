"""Tests for the experiment harness: ladder validation, runners on cheap
models, file outputs, budget caps, and the condition prechecks."""

import numpy as np
import pytest

from jsde_lab.errors import (
    AssumptionViolationError,
    DomainError,
    ResourceLimitError,
    UsageError,
)
from jsde_lab.harness import (
    DEFAULT_SEED,
    ExperimentConfig,
    run_convergence,
    run_experiment,
    run_explosion,
    run_nonconfluence,
    run_uniqueness,
)
from jsde_lab.model import CoefficientSet, builtin_growth


def _contraction_model():
    """b = -x, no noise: X(t) solves the deterministic decay exactly."""
    return CoefficientSet(
        b=lambda x: -np.asarray(x, dtype=float),
        sigma=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        c1=None, c2=None, nu1=None, nu2=None, label="contraction",
    )


def _noisy_model(coef=0.3):
    return CoefficientSet(
        b=lambda x: -np.asarray(x, dtype=float),
        sigma=lambda x: coef * np.ones_like(np.asarray(x, dtype=float)),
        c1=None, c2=None, nu1=None, nu2=None, label="ou",
    )


def _cfg(model, **kw):
    kw.setdefault("paths", 8)
    kw.setdefault("growth", builtin_growth("one"))
    kw.setdefault("mu", 3.0)
    return ExperimentConfig(model=model, **kw)


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_config_ladders_normalized():
    cfg = ExperimentConfig(model=_contraction_model(),
                           step_ladder=(2.0 ** -6, 2.0 ** -4, 2.0 ** -5),
                           radius_ladder=(50.0, 10.0),
                           epsilon_ladder=(1e-4, 1e-6))
    assert cfg.step_ladder == (2.0 ** -4, 2.0 ** -5, 2.0 ** -6)
    assert cfg.radius_ladder == (10.0, 50.0)
    assert cfg.epsilon_ladder == (1e-6, 1e-4)


@pytest.mark.parametrize("kw", [
    {"paths": 0},
    {"paths": 2.5},
    {"horizon": 0.0},
    {"horizon": float("inf")},
    {"alpha": -1.0},
    {"x0": float("nan")},
    {"y0": float("inf")},
    {"threads": 0},
    {"budget_cap": 0},
    {"delta": 0.0},
    {"step_ladder": ()},
    {"step_ladder": (0.25, 0.25)},
])
def test_config_rejects_bad_values(kw):
    with pytest.raises(DomainError):
        ExperimentConfig(model=_contraction_model(), **kw)


def test_unknown_experiment_kind():
    with pytest.raises(UsageError, match="unknown experiment kind"):
        run_experiment("diffusion", _cfg(_contraction_model()))


# ---------------------------------------------------------------------------
# explosion
# ---------------------------------------------------------------------------

def test_explosion_contraction_never_exits():
    cfg = _cfg(_contraction_model(), radius_ladder=(2.0, 5.0),
               step_ladder=(2.0 ** -4, 2.0 ** -6), x0=1.0)
    summary = run_explosion(cfg)
    assert summary.kind == "explosion"
    for row in summary.ladder:
        assert row["exceedance_frequency"] == 0.0
    bound_row = summary.extras["bound_row"]
    assert bound_row["satisfied_within_3se"] is True
    assert bound_row["mc_mean"] <= bound_row["bound"]


def test_explosion_frequencies_monotone_in_radius():
    cfg = _cfg(_noisy_model(3.0), paths=64, radius_ladder=(0.5, 1.5, 4.0),
               step_ladder=(2.0 ** -6,), x0=0.0, mu=12.0)
    summary = run_explosion(cfg)
    freqs = [row["exceedance_frequency"] for row in summary.ladder]
    assert freqs == sorted(freqs, reverse=True)
    assert freqs[0] > 0.0


def test_explosion_growth_precheck_blocks_cubic_drift():
    m = CoefficientSet(
        b=lambda x: np.asarray(x, dtype=float) ** 3,
        sigma=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        c1=None, c2=None, nu1=None, nu2=None, label="cubic",
    )
    cfg = _cfg(m, paths=2, step_ladder=(2.0 ** -4,))
    with pytest.raises(AssumptionViolationError) as exc:
        run_explosion(cfg)
    assert exc.value.reports
    assert exc.value.reports[0].assumption_id == "A23"

    cfg2 = _cfg(m, paths=2, step_ladder=(2.0 ** -4,), skip_checks=True,
                radius_ladder=(10.0,))
    summary = run_explosion(cfg2)       # runs regardless, may explode
    assert summary.extras["growth_check"] is None


# ---------------------------------------------------------------------------
# uniqueness
# ---------------------------------------------------------------------------

def test_uniqueness_contraction_slope_near_one():
    cfg = _cfg(_contraction_model(), paths=4,
               step_ladder=(2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6,
                            2.0 ** -8))
    summary = run_uniqueness(cfg)
    assert summary.extras["strictly_decreasing"] is True
    # deterministic Euler: first-order decay, slightly inflated by the
    # finite reference level
    assert 0.9 <= summary.extras["slope"] <= 1.6
    assert summary.ladder[-1]["is_reference"] is True
    assert summary.ladder[-1]["mean_gap_pow_alpha"] == 0.0


def test_uniqueness_requires_nested_ladder():
    cfg = _cfg(_contraction_model(),
               step_ladder=(0.3, 0.11, 2.0 ** -5))
    with pytest.raises(DomainError, match="nested grids"):
        run_uniqueness(cfg)


def test_uniqueness_requires_three_levels_and_positive_alpha():
    with pytest.raises(DomainError, match=">= 3"):
        run_uniqueness(_cfg(_contraction_model(),
                            step_ladder=(2.0 ** -4, 2.0 ** -5)))
    with pytest.raises(DomainError, match="alpha > 0"):
        run_uniqueness(_cfg(_contraction_model(), alpha=0.0))


# ---------------------------------------------------------------------------
# nonconfluence
# ---------------------------------------------------------------------------

def test_nonconfluence_requires_second_start():
    cfg = _cfg(_contraction_model(), step_ladder=(2.0 ** -4,))
    with pytest.raises(UsageError, match="y0"):
        run_nonconfluence(cfg)
    with pytest.raises(DomainError, match="x0 != y0"):
        run_nonconfluence(_cfg(_contraction_model(), x0=1.0, y0=1.0,
                               step_ladder=(2.0 ** -4,)))


def test_nonconfluence_contraction_control():
    # identical noise, linear drift: the gap decays deterministically to
    # (1 - h)^(T/h) ~ exp(-T), never reaching zero
    cfg = _cfg(_contraction_model(), paths=4, x0=0.0, y0=1.0,
               step_ladder=(2.0 ** -8,), modulus="identity", alpha=1.0,
               delta=0.5)
    summary = run_nonconfluence(cfg)
    assert summary.extras["min_distance"] == pytest.approx(np.exp(-1.0),
                                                           abs=1e-2)
    for row in summary.ladder:
        assert row["fraction_below"] == 0.0
    constants = summary.extras["constants"]
    assert constants["K"] == 6.0          # delta^-1 (1 + 2)
    assert constants["K_prime"] == 4.0


def test_nonconfluence_unknown_model_needs_explicit_modulus():
    cfg = _cfg(_contraction_model(), x0=0.0, y0=1.0,
               step_ladder=(2.0 ** -4,))
    with pytest.raises(UsageError, match="designated"):
        run_nonconfluence(cfg)


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

def test_convergence_deterministic_first_order():
    cfg = _cfg(_contraction_model(), paths=2,
               step_ladder=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6, 2.0 ** -7))
    summary = run_convergence(cfg)
    order = summary.extras["order"]
    # the finite reference (4x finer) inflates the fitted order slightly
    # above the analytic value 1; see the analysis notes
    assert 0.9 <= order["estimate"] <= 1.25
    assert order["ci_low"] <= order["estimate"] <= order["ci_high"]


def test_convergence_exact_branch():
    # zero coefficients: every level reproduces x0 exactly
    m = CoefficientSet(
        b=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        sigma=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        c1=None, c2=None, nu1=None, nu2=None, label="frozen",
    )
    cfg = _cfg(m, paths=2,
               step_ladder=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6, 2.0 ** -7))
    summary = run_convergence(cfg)
    assert summary.extras["order"]["estimate"] == "exact"


def test_convergence_requires_four_levels():
    with pytest.raises(DomainError, match=">= 4"):
        run_convergence(_cfg(_contraction_model(),
                             step_ladder=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6)))


# ---------------------------------------------------------------------------
# outputs, reproducibility, budget
# ---------------------------------------------------------------------------

def test_written_outputs_are_byte_identical(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        cfg = _cfg(_noisy_model(), paths=6, step_ladder=(2.0 ** -5,),
                   radius_ladder=(5.0, 25.0), output_dir=out)
        run_explosion(cfg)
    assert (out1 / "data.csv").read_bytes() == (out2 / "data.csv").read_bytes()
    assert (out1 / "summary.json").read_bytes() \
        == (out2 / "summary.json").read_bytes()
    header = (out1 / "data.csv").read_text().splitlines()[0]
    assert header.startswith("path_index,seed,exit_time_R5")


def test_different_seed_changes_data(tmp_path):
    outs = []
    for seed in (DEFAULT_SEED, DEFAULT_SEED + 1):
        out = tmp_path / str(seed)
        cfg = _cfg(_noisy_model(), paths=6, step_ladder=(2.0 ** -5,),
                   master_seed=seed, output_dir=out)
        run_explosion(cfg)
        outs.append((out / "data.csv").read_bytes())
    assert outs[0] != outs[1]


def test_budget_cap_enforced():
    cfg = _cfg(_contraction_model(), paths=100, step_ladder=(2.0 ** -10,),
               budget_cap=1000)
    with pytest.raises(ResourceLimitError, match="exceeds budget_cap"):
        run_explosion(cfg)


def test_threads_option_matches_serial():
    base = dict(paths=6, step_ladder=(2.0 ** -5,), radius_ladder=(5.0,))
    s1 = run_explosion(_cfg(_noisy_model(), **base))
    s2 = run_explosion(_cfg(_noisy_model(), threads=2, **base))
    assert s1.data_rows == s2.data_rows
