import math

import numpy as np
import pytest

from jsde_lab.errors import DomainError, NumericalDomainError
from jsde_lab.integrator import (SchemeConfig, dump_path_csv,
                                 first_exit_time, ito_levy_apply, simulate)
from jsde_lab.model import Band, CoefficientSet, MarkMeasure, lebesgue, preset
from jsde_lab.noise import sample_noise


def _zeros(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _drift_only(b, label="drift-only"):
    return CoefficientSet(b=b, sigma=_zeros, c1=None, c2=None,
                          nu1=None, nu2=None, label=label)


def test_scheme_config_validation():
    with pytest.raises(DomainError):
        SchemeConfig(base_step=0.0)
    with pytest.raises(DomainError):
        SchemeConfig(base_step=2.0 ** -4, explosion_radius=-1.0)
    with pytest.raises(DomainError):
        SchemeConfig(base_step=2.0 ** -4, taming="soft")


def test_zero_model_stays_put():
    model = _drift_only(_zeros, label="zero")
    noise = sample_noise(model, 1.0, 2.0 ** -4, seed=1)
    path = simulate(model, noise, SchemeConfig(base_step=2.0 ** -4), 1.5)
    assert np.all(path.states == 1.5)
    assert not path.exploded


def test_deterministic_euler_recursion():
    model = _drift_only(lambda x: -np.asarray(x, dtype=float))
    h = 2.0 ** -6
    noise = sample_noise(model, 1.0, h, seed=1)
    path = simulate(model, noise, SchemeConfig(base_step=h), 1.0)
    # explicit Euler on dx = -x dt is exactly (1 - h)^k
    assert path.state_at_end() == pytest.approx((1.0 - h) ** 64, rel=1e-13)
    assert abs(path.state_at_end() - math.exp(-1.0)) < h


def test_explosion_detection_and_exit_time():
    model = _drift_only(lambda x: np.asarray(x, dtype=float) ** 3)
    h = 2.0 ** -4
    noise = sample_noise(model, 1.0, h, seed=1)
    path = simulate(model, noise, SchemeConfig(base_step=h,
                                               explosion_radius=100.0), 3.0)
    assert path.exploded
    assert path.exit_time is not None
    assert first_exit_time(path, 100.0) == pytest.approx(path.exit_time)
    # the state is frozen at explosion, not propagated to inf
    assert np.all(np.isfinite(path.states))
    with pytest.raises(DomainError):
        first_exit_time(path, 0.0)


def test_taming_bounds_single_step_drift():
    model = _drift_only(lambda x: -np.asarray(x, dtype=float) ** 3)
    h = 2.0 ** -2
    noise = sample_noise(model, 1.0, h, seed=1)
    wild = simulate(model, noise, SchemeConfig(base_step=h), 3.0)
    tamed = simulate(model, noise, SchemeConfig(base_step=h,
                                                taming="drift_tamed"), 3.0)
    # untamed explicit Euler overshoots 3 -> 3 - 27/4 and oscillates bigger;
    # the tamed per-step drift increment |b|h/(1+|b|h) stays below 1
    assert np.max(np.abs(tamed.states)) <= 3.0
    assert np.max(np.abs(wild.states)) > np.max(np.abs(tamed.states))
    assert abs(tamed.states[1] - tamed.states[0]) < 1.0


def test_compensated_small_jumps():
    # c1 = 1 on an atom of weight 2: continuous drift is -2 per unit time,
    # each event adds +1; terminal = x0 - 2*T + #events, exactly.
    nu1 = MarkMeasure(atoms=[(0.5, 2.0)])
    model = CoefficientSet(
        b=_zeros, sigma=_zeros,
        c1=lambda x, u: np.ones_like(np.asarray(u, dtype=float)
                                     * np.asarray(x, dtype=float)),
        c2=None, nu1=nu1, nu2=None, label="unit-jumps",
    )
    h = 2.0 ** -5
    noise = sample_noise(model, 1.0, h, seed=7)
    path = simulate(model, noise, SchemeConfig(base_step=h), 0.0)
    n_events = len(noise.events_from("small"))
    assert n_events > 0
    assert path.state_at_end() == pytest.approx(-2.0 + n_events, abs=1e-12)


def test_large_jumps_applied_at_event_times():
    nu2 = MarkMeasure(atoms=[(1.5, 3.0)])
    model = CoefficientSet(
        b=_zeros, sigma=_zeros, c1=None, c2=lambda x, u: 0.0 * np.asarray(
            x, dtype=float) + np.asarray(u, dtype=float),
        nu1=None, nu2=nu2, label="atom-jumps",
    )
    h = 2.0 ** -4
    noise = sample_noise(model, 1.0, h, seed=11)
    path = simulate(model, noise, SchemeConfig(base_step=h), 0.0)
    events = noise.events_from("large")
    assert path.state_at_end() == pytest.approx(1.5 * len(events), abs=1e-12)
    if events:
        t0 = events[0].time
        before = path.states[path.times < t0]
        assert np.allclose(before, 0.0)


def test_restrict_to_u3_drops_outside_events():
    model = preset("example_31")
    # carry the large jumps only on marks in (1, 1.5]
    restricted = CoefficientSet(
        b=model.b, sigma=model.sigma, c1=model.c1, c2=model.c2,
        nu1=model.nu1, nu2=model.nu2, u3=(Band(1.0, 1.5),),
        label="example_31-u3",
    )
    h = 2.0 ** -5
    noise = sample_noise(restricted, 1.0, h, seed=23)
    scheme = SchemeConfig(base_step=h, restrict_to_u3=True)
    full_scheme = SchemeConfig(base_step=h)
    a = simulate(restricted, noise, scheme, 1.0)
    b = simulate(restricted, noise, full_scheme, 1.0)
    inside = [e for e in noise.events_from("large") if 1.0 < e.mark <= 1.5]
    outside = [e for e in noise.events_from("large") if e.mark > 1.5]
    assert len(inside) + len(outside) == len(noise.events_from("large"))
    if outside:
        assert not np.array_equal(a.states, b.states)


def test_non_finite_coefficient_raises():
    def log_drift(x):
        with np.errstate(invalid="ignore"):
            return np.log(np.asarray(x, dtype=float))

    model = _drift_only(log_drift)
    h = 2.0 ** -4
    noise = sample_noise(model, 1.0, h, seed=1)
    with pytest.raises(NumericalDomainError):
        simulate(model, noise, SchemeConfig(base_step=h), -1.0)


def test_path_times_match_union_grid():
    model = preset("example_41")
    h = 2.0 ** -5
    noise = sample_noise(model, 1.0, h, seed=3)
    path = simulate(model, noise, SchemeConfig(base_step=h,
                                               taming="drift_tamed"), 1.0)
    assert np.array_equal(path.times, noise.union_times)
    assert len(path.kinds) == len(path.times)
    assert path.realization_seed == noise.seed


def test_ito_identity_function_reproduces_path():
    model = preset("example_41")
    h = 2.0 ** -6
    noise = sample_noise(model, 1.0, h, seed=17)
    path = simulate(model, noise, SchemeConfig(base_step=h,
                                               taming="drift_tamed"), 1.0)
    f = (lambda x: x, lambda x: 1.0, lambda x: 0.0)
    y = ito_levy_apply(f, path, model, noise, tamed=True)
    assert np.allclose(y.states, path.states, rtol=1e-10, atol=1e-12)


def test_ito_square_converges_on_drift_model():
    model = _drift_only(lambda x: -np.asarray(x, dtype=float))
    f = (lambda x: x * x, lambda x: 2.0 * x, lambda x: 2.0)
    sups = []
    for h in (2.0 ** -6, 2.0 ** -7):
        noise = sample_noise(model, 1.0, h, seed=29)
        path = simulate(model, noise, SchemeConfig(base_step=h), 1.0)
        y = ito_levy_apply(f, path, model, noise)
        sups.append(float(np.max(np.abs(y.states - path.states ** 2))))
    assert sups[0] < 0.01
    assert sups[1] < 0.6 * sups[0]    # first-order shrink, deterministic


def test_dump_path_csv(tmp_path):
    model = preset("example_31")
    h = 2.0 ** -4
    scheme = SchemeConfig(base_step=h)
    noise = sample_noise(model, 1.0, h, seed=2)
    path = simulate(model, noise, scheme, 1.0)
    target = tmp_path / "path.csv"
    dump_path_csv(path, model, scheme, str(target))
    lines = target.read_text().strip().splitlines()
    assert lines[0].startswith("# model=example_31 seed=2")
    assert lines[1] == "time,state,event_kind"
    assert len(lines) == 2 + len(path.times)
