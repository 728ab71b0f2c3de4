"""Monte Carlo experiments over the simulation stack.

Four experiment kinds, all reproducible path-for-path from a master seed
regardless of thread count:

* ``explosion`` — exit-frequency decay across a radius ladder plus a
  moment-bound comparison row against the analysis module.
* ``uniqueness`` — common-noise resolution coupling: each ladder step is
  integrated on a coarsening of one fine noise realization, and the decay of
  the terminal gaps is the uniqueness surrogate (no exact solutions exist,
  so inter-resolution gaps stand in for the gap between two solutions).
* ``nonconfluence`` — two starts driven by identical noise; reports the
  minimum inter-path grid distance and threshold exceedance fractions.
* ``convergence`` — strong-order fit against a reference four times finer
  than the finest ladder level, with a per-path regression interval.

Experiments that exhibit almost-sure statements report frequencies with
standard errors; they are evidence at desk scale, never proofs.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import moment_bound, nonconfluence_constants, phi_growth
from .errors import (AssumptionViolationError, DomainError,
                     ResourceLimitError, UsageError)
from .integrator import TAMING_MODES, SchemeConfig, first_exit_time, simulate
from .model import (GAMMA, CoefficientSet, builtin_growth, builtin_modulus,
                    preset, scale_modulus)
from .noise import derive_path_seed, sample_noise
from .verifier import (MU_EXAMPLE_31, MU_EXAMPLE_41, NO_VIOLATION, PairGrid,
                       check_growth, check_nonconfluence_conditions,
                       growth_ratio_supremum)

DEFAULT_SEED = 1729
DEFAULT_BUDGET = 200_000_000

# per-preset experiment defaults: drift taming and the designated growth
# envelope (name, constant)
PRESET_TAMING = {"example_31": "off", "example_41": "drift_tamed"}
PRESET_GROWTH = {"example_31": ("log", MU_EXAMPLE_31),
                 "example_41": ("one", MU_EXAMPLE_41)}


def _sorted_ladder(values, name, descending=False):
    vals = tuple(float(v) for v in values)
    if not vals:
        raise DomainError(f"{name} must be nonempty")
    if any(not math.isfinite(v) or v <= 0 for v in vals):
        raise DomainError(f"{name} entries must be positive and finite")
    if len(set(vals)) != len(vals):
        raise DomainError(f"{name} entries must be distinct")
    return tuple(sorted(vals, reverse=descending))


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared experiment configuration.

    ``step_ladder`` is normalized coarse-to-fine, ``radius_ladder`` and
    ``epsilon_ladder`` ascending.  Unset entries (``taming``, ``growth``,
    ``mu``, nonconfluence check parameters) resolve to per-preset defaults
    at run time.
    """

    model: object
    horizon: float = 1.0
    step_ladder: tuple = (2.0 ** -4, 2.0 ** -5, 2.0 ** -6, 2.0 ** -7,
                          2.0 ** -8, 2.0 ** -9)
    paths: int = 1000
    master_seed: int = DEFAULT_SEED
    radius_ladder: tuple = (10.0, 50.0, 250.0)
    epsilon_ladder: tuple = (1e-6, 5e-6, 2.5e-5, 1.25e-4, 6.25e-4)
    alpha: float = 1.0
    x0: float = 1.0
    y0: object = None
    output_dir: object = None
    growth: object = None
    mu: object = None
    taming: object = None
    modulus: object = None
    delta: float = 0.5
    m_bound: object = None
    skip_checks: bool = False
    threads: object = None
    budget_cap: int = DEFAULT_BUDGET
    explosion_radius: float = 1e6

    def __post_init__(self):
        if not isinstance(self.paths, int) or self.paths < 1:
            raise DomainError("paths must be an integer >= 1")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise DomainError("horizon must be positive and finite")
        object.__setattr__(self, "step_ladder", _sorted_ladder(
            self.step_ladder, "step_ladder", descending=True))
        object.__setattr__(self, "radius_ladder", _sorted_ladder(
            self.radius_ladder, "radius_ladder"))
        object.__setattr__(self, "epsilon_ladder", _sorted_ladder(
            self.epsilon_ladder, "epsilon_ladder"))
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise DomainError("alpha must be nonnegative and finite")
        if not math.isfinite(self.x0):
            raise DomainError("x0 must be finite")
        if self.y0 is not None and not math.isfinite(float(self.y0)):
            raise DomainError("y0 must be finite")
        if self.threads is not None and (not isinstance(self.threads, int)
                                         or self.threads < 1):
            raise DomainError("threads must be an integer >= 1")
        if self.budget_cap < 1:
            raise DomainError("budget_cap must be positive")
        if self.delta <= 0:
            raise DomainError("delta must be positive")

    def echo(self, model_label):
        out = {
            "model": model_label,
            "horizon": self.horizon,
            "step_ladder": list(self.step_ladder),
            "paths": self.paths,
            "master_seed": self.master_seed,
            "radius_ladder": list(self.radius_ladder),
            "epsilon_ladder": list(self.epsilon_ladder),
            "alpha": self.alpha,
            "x0": self.x0,
            "y0": self.y0,
            "delta": self.delta,
            "skip_checks": self.skip_checks,
            "budget_cap": self.budget_cap,
            "explosion_radius": self.explosion_radius,
        }
        if self.mu is not None:
            out["mu"] = float(self.mu)
        return out


@dataclass
class ExperimentSummary:
    kind: str
    config: dict
    ladder: list
    extras: dict = field(default_factory=dict)
    data_header: tuple = ()
    data_rows: list = field(default_factory=list)

    def to_dict(self):
        out = {"kind": self.kind, "config": self.config,
               "ladder": self.ladder}
        out.update(self.extras)
        return out

    def write(self, output_dir):
        """Write ``summary.json`` and ``data.csv``; returns their paths."""
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        summary_path = out / "summary.json"
        summary_path.write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        data_path = out / "data.csv"
        with open(data_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.data_header)
            for row in self.data_rows:
                writer.writerow([_fmt_cell(v) for v in row])
        return summary_path, data_path


def _fmt_cell(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _mean_se(values):
    arr = np.asarray(values, dtype=float)
    arr = arr[np.isfinite(arr)]
    n = int(arr.size)
    if n == 0:
        return float("nan"), float("nan"), 0
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se, n


def _resolve_model(spec):
    if isinstance(spec, CoefficientSet):
        return spec
    if isinstance(spec, str):
        return preset(spec)
    raise UsageError("model must be a CoefficientSet or a preset name")


def _resolve_taming(config, model):
    taming = config.taming
    if taming is None:
        taming = PRESET_TAMING.get(model.label, "off")
    if taming not in TAMING_MODES:
        raise UsageError(f"taming must be one of {TAMING_MODES}")
    return taming


def _resolve_growth(config, model):
    """Growth envelope and constant for the explosion pre-check: explicit
    config values win, then preset defaults, then a constant envelope with
    the constant calibrated from the checker grid."""
    growth = config.growth
    mu = config.mu
    notes = []
    if growth is None:
        if model.label in PRESET_GROWTH:
            name, preset_mu = PRESET_GROWTH[model.label]
            growth = builtin_growth(name)
            if mu is None:
                mu = preset_mu
        else:
            growth = builtin_growth("one")
            notes.append("no growth envelope configured; using the constant "
                         "envelope")
    elif isinstance(growth, str):
        growth = builtin_growth(growth)
    if mu is None:
        sup, arg = growth_ratio_supremum(model, growth)
        mu = sup * (1.0 + 1e-9) + 1e-12
        notes.append(f"mu calibrated from the checker grid supremum "
                     f"{sup:.12g} at x = {arg:g}")
    return growth, float(mu), notes


def _threads(config):
    if config.threads is not None:
        return config.threads
    return max(1, os.cpu_count() or 1)


def _map_paths(fn, n, threads):
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def _charge_budget(config, steps_per_path, what):
    total = config.paths * steps_per_path
    if total > config.budget_cap:
        raise ResourceLimitError(
            f"{what}: {config.paths} paths x {steps_per_path} grid steps "
            f"= {total} exceeds budget_cap {config.budget_cap}")


def _steps(horizon, h):
    return int(math.ceil(horizon / h - 1e-12))


def _write_if_configured(summary, config):
    if config.output_dir is not None:
        summary.write(config.output_dir)
    return summary


# ---------------------------------------------------------------------------
# explosion
# ---------------------------------------------------------------------------

def run_explosion(config):
    """Exit frequencies over the radius ladder, with the moment-bound row.

    One simulation per path at the largest radius; exits at the smaller radii
    are read off the stored trajectory, which also enforces per-path
    monotonicity in the radius exactly.
    """
    model = _resolve_model(config.model)
    taming = _resolve_taming(config, model)
    growth, mu, notes = _resolve_growth(config, model)
    h = config.step_ladder[-1]
    _charge_budget(config, _steps(config.horizon, h), "explosion")

    check_echo = None
    if not config.skip_checks:
        report = check_growth(model, growth, mu)
        if report.verdict != NO_VIOLATION:
            raise AssumptionViolationError(
                f"growth condition violated for model {model.label!r} with "
                f"envelope {growth.label!r}, mu = {mu:g}; pass "
                "skip_checks=True to run regardless", reports=(report,))
        check_echo = {"assumption_id": report.assumption_id,
                      "verdict": report.verdict,
                      "growth": growth.label, "mu": mu}

    radii = config.radius_ladder
    scheme = SchemeConfig(base_step=h, explosion_radius=radii[-1],
                          taming=taming)

    def one(i):
        seed = derive_path_seed(config.master_seed, i)
        noise = sample_noise(model, config.horizon, h, seed)
        path = simulate(model, noise, scheme, config.x0)
        exits = [first_exit_time(path, r) for r in radii]
        return seed, exits, path.state_at_end()

    results = _map_paths(one, config.paths, _threads(config))

    ladder = []
    for j, r in enumerate(radii):
        hits = [1.0 if res[1][j] is not None else 0.0 for res in results]
        mean, se, n = _mean_se(hits)
        ladder.append({"radius": r, "exceedance_frequency": mean,
                       "se": se, "n": n})

    # per-path monotonicity: exit at a larger radius implies an exit at every
    # smaller radius no later
    for seed, exits, _ in results:
        prev = None
        for t in reversed(exits):        # largest radius first
            if t is not None and prev is not None and t > prev:
                raise AssertionError(
                    f"radius monotonicity violated for seed {seed}")
            if t is not None:
                prev = t

    phis = [phi_growth(growth, res[2] ** 2) for res in results]
    phi_mean, phi_se, phi_n = _mean_se(phis)
    if model.nu2 is None or model.u3 is None:
        m_rate = 0.0          # no large jumps, or none handled by interlacing
    else:
        m_rate = (model.nu2.total_mass
                  - model.nu2.restricted(model.u3).total_mass)
    bound = moment_bound(growth, mu, m_rate, config.x0 ** 2, config.horizon)
    bound_row = {
        "mc_mean": phi_mean, "mc_se": phi_se, "n": phi_n,
        "bound": bound, "interlaced_rate": m_rate,
        "growth": growth.label, "mu": mu,
        "satisfied_within_3se": (bool(phi_mean <= bound + 3.0 * phi_se)
                                 if math.isfinite(bound)
                                 and math.isfinite(phi_mean) else None),
    }

    header = ["path_index", "seed"] + [f"exit_time_R{r:g}" for r in radii] \
        + ["phi_final"]
    rows = []
    for i, (seed, exits, xT) in enumerate(results):
        rows.append([i, seed]
                    + [float("inf") if t is None else t for t in exits]
                    + [phis[i]])

    summary = ExperimentSummary(
        kind="explosion",
        config=config.echo(model.label),
        ladder=ladder,
        extras={"bound_row": bound_row, "step": h, "taming": taming,
                "growth_check": check_echo, "notes": notes},
        data_header=tuple(header),
        data_rows=rows,
    )
    return _write_if_configured(summary, config)


# ---------------------------------------------------------------------------
# uniqueness
# ---------------------------------------------------------------------------

def run_uniqueness(config):
    """Terminal-gap decay across resolutions under one noise realization
    per path.  The finest ladder level doubles as the reference, so its gap
    is exactly zero; the log-log slope is fitted over the coarser levels."""
    model = _resolve_model(config.model)
    taming = _resolve_taming(config, model)
    if config.alpha <= 0:
        raise DomainError("uniqueness requires alpha > 0")
    ladder = config.step_ladder
    if len(ladder) < 3:
        raise DomainError("uniqueness requires a step ladder with >= 3 "
                          "levels")
    h_ref = ladder[-1]
    factors = []
    for h in ladder:
        f = round(h / h_ref)
        if f < 1 or abs(h - f * h_ref) > 1e-9 * h_ref:
            raise DomainError(
                f"step {h:g} is not an integer multiple of the finest step "
                f"{h_ref:g}; resolution coupling needs nested grids")
        factors.append(int(f))
    _charge_budget(config, sum(_steps(config.horizon, h) for h in ladder),
                   "uniqueness")

    schemes = [SchemeConfig(base_step=h,
                            explosion_radius=config.explosion_radius,
                            taming=taming) for h in ladder]

    def one(i):
        seed = derive_path_seed(config.master_seed, i)
        noise = sample_noise(model, config.horizon, h_ref, seed)
        ref = simulate(model, noise, schemes[-1], config.x0)
        gaps, coupled = [], True
        for scheme, f in zip(schemes, factors):
            level_noise = noise if f == 1 else noise.coarsen(f)
            p = simulate(model, level_noise, scheme, config.x0)
            coupled = coupled and (p.realization_seed == ref.realization_seed)
            if p.exploded or ref.exploded:
                gaps.append(float("nan"))
            else:
                gaps.append(abs(p.state_at_end() - ref.state_at_end())
                            ** config.alpha)
        return seed, gaps, coupled

    results = _map_paths(one, config.paths, _threads(config))
    if not all(res[2] for res in results):
        raise AssertionError("noise coupling across resolutions broke: a "
                             "level consumed a different realization")

    ladder_rows = []
    for j, h in enumerate(ladder):
        mean, se, n = _mean_se([res[1][j] for res in results])
        ladder_rows.append({"step": h, "mean_gap_pow_alpha": mean, "se": se,
                            "n": n, "is_reference": j == len(ladder) - 1})

    fit_h = [row["step"] for row in ladder_rows
             if not row["is_reference"] and row["mean_gap_pow_alpha"] > 0]
    fit_m = [row["mean_gap_pow_alpha"] for row in ladder_rows
             if not row["is_reference"] and row["mean_gap_pow_alpha"] > 0]
    slope = None
    if len(fit_h) >= 2:
        slope = float(np.polyfit(np.log(fit_h), np.log(fit_m), 1)[0])
    means = [row["mean_gap_pow_alpha"] for row in ladder_rows]
    strictly_decreasing = all(a > b for a, b in zip(means, means[1:]))

    header = ["path_index", "seed"] + [f"gap_pow_alpha_h{h:.10g}"
                                       for h in ladder]
    rows = [[i, res[0]] + list(res[1]) for i, res in enumerate(results)]

    summary = ExperimentSummary(
        kind="uniqueness",
        config=config.echo(model.label),
        ladder=ladder_rows,
        extras={"slope": slope, "levels_in_fit": len(fit_h),
                "strictly_decreasing": strictly_decreasing,
                "reference_step": h_ref, "taming": taming,
                "coupling": "one realization per path, coarsened per level"},
        data_header=tuple(header),
        data_rows=rows,
    )
    return _write_if_configured(summary, config)


# ---------------------------------------------------------------------------
# nonconfluence
# ---------------------------------------------------------------------------

def _nonconfluence_precheck(config, model):
    """Designated parameters for the presets; explicit config otherwise."""
    modulus = config.modulus
    if isinstance(modulus, str):
        modulus = builtin_modulus(modulus)
    if modulus is None:
        if model.label == "example_41":
            modulus = scale_modulus(builtin_modulus("identity"), 5.0)
            grid = PairGrid(anchors=np.linspace(-5.0, 5.0, 101),
                            gaps=np.geomspace(1e-6, 10.0, 401),
                            label="designated nonconfluence grid")
            return check_nonconfluence_conditions(
                model, modulus, alpha=0.0, delta=0.5, grid=grid,
                affine_k=lambda u: GAMMA * np.abs(np.asarray(u,
                                                             dtype=float)))
        raise UsageError(
            f"model {model.label!r} has no designated nonconfluence check; "
            "provide modulus=... (with alpha/delta) or set skip_checks=True")
    return check_nonconfluence_conditions(model, modulus, alpha=config.alpha,
                                          delta=config.delta)


def run_nonconfluence(config):
    """Minimum inter-path distance of two starts under identical noise."""
    model = _resolve_model(config.model)
    taming = _resolve_taming(config, model)
    if config.y0 is None:
        raise UsageError("nonconfluence requires y0 (the second start)")
    y0 = float(config.y0)
    if y0 == config.x0:
        raise DomainError("nonconfluence requires x0 != y0")
    h = config.step_ladder[-1]
    _charge_budget(config, 2 * _steps(config.horizon, h), "nonconfluence")

    check_echo = None
    if not config.skip_checks:
        report = _nonconfluence_precheck(config, model)
        if report.verdict != NO_VIOLATION:
            raise AssumptionViolationError(
                f"nonconfluence conditions violated for model "
                f"{model.label!r}; pass skip_checks=True to run regardless",
                reports=(report,))
        check_echo = {"assumption_id": report.assumption_id,
                      "verdict": report.verdict}

    scheme = SchemeConfig(base_step=h,
                          explosion_radius=config.explosion_radius,
                          taming=taming)

    def one(i):
        seed = derive_path_seed(config.master_seed, i)
        noise = sample_noise(model, config.horizon, h, seed)
        px = simulate(model, noise, scheme, config.x0)
        py = simulate(model, noise, scheme, y0)
        if px.exploded or py.exploded:
            return seed, float("nan"), True
        if not np.array_equal(px.times, py.times):
            raise AssertionError("common-noise grids diverged between the "
                                 "two starts")
        return seed, float(np.min(np.abs(px.states - py.states))), False

    results = _map_paths(one, config.paths, _threads(config))
    mins = np.asarray([r[1] for r in results], dtype=float)
    excluded = int(sum(1 for r in results if r[2]))
    finite = mins[np.isfinite(mins)]

    ladder_rows = []
    for eps in config.epsilon_ladder:
        hits = (finite < eps).astype(float)
        mean, se, n = _mean_se(hits)
        ladder_rows.append({"epsilon": eps, "fraction_below": mean,
                            "se": se, "n": n})

    m_bound = config.m_bound
    if m_bound is None:
        masses = [m.total_mass for m in (model.nu1, model.nu2)
                  if m is not None and m.is_finite]
        m_bound = max(masses) if masses else 0.0
    constants = nonconfluence_constants(config.alpha, config.delta,
                                        m_bound)._asdict()
    constants.update(alpha=config.alpha, delta=config.delta,
                     m_bound=float(m_bound))

    summary = ExperimentSummary(
        kind="nonconfluence",
        config=config.echo(model.label),
        ladder=ladder_rows,
        extras={"min_distance": (float(np.min(finite)) if finite.size
                                 else float("nan")),
                "initial_gap": abs(config.x0 - y0),
                "excluded_exploded_paths": excluded,
                "constants": constants, "step": h, "taming": taming,
                "condition_check": check_echo,
                "coupling": "one realization per path, shared by both "
                            "starts"},
        data_header=("path_index", "seed", "min_distance"),
        data_rows=[[i, r[0], r[1]] for i, r in enumerate(results)],
    )
    return _write_if_configured(summary, config)


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

def run_convergence(config):
    """Strong-order diagnostic: terminal errors against a reference four
    times finer than the finest ladder level; order estimated per path and
    aggregated with a normal confidence interval."""
    model = _resolve_model(config.model)
    taming = _resolve_taming(config, model)
    ladder = config.step_ladder
    if len(ladder) < 4:
        raise DomainError("convergence requires a step ladder with >= 4 "
                          "levels")
    h_ref = ladder[-1] / 4.0
    factors = []
    for h in ladder:
        f = round(h / h_ref)
        if abs(h - f * h_ref) > 1e-9 * h_ref:
            raise DomainError(
                f"step {h:g} is not an integer multiple of the reference "
                f"step {h_ref:g}")
        factors.append(int(f))
    _charge_budget(config,
                   _steps(config.horizon, h_ref)
                   + sum(_steps(config.horizon, h) for h in ladder),
                   "convergence")

    ref_scheme = SchemeConfig(base_step=h_ref,
                              explosion_radius=config.explosion_radius,
                              taming=taming)
    schemes = [SchemeConfig(base_step=h,
                            explosion_radius=config.explosion_radius,
                            taming=taming) for h in ladder]

    def one(i):
        seed = derive_path_seed(config.master_seed, i)
        noise = sample_noise(model, config.horizon, h_ref, seed)
        ref = simulate(model, noise, ref_scheme, config.x0)
        errors = []
        for scheme, f in zip(schemes, factors):
            p = simulate(model, noise.coarsen(f), scheme, config.x0)
            if p.exploded or ref.exploded:
                errors.append(float("nan"))
            else:
                errors.append(abs(p.state_at_end() - ref.state_at_end()))
        return seed, errors

    results = _map_paths(one, config.paths, _threads(config))

    ladder_rows = []
    for j, h in enumerate(ladder):
        mean, se, n = _mean_se([res[1][j] for res in results])
        ladder_rows.append({"step": h, "mean_error": mean, "se": se, "n": n})

    slopes = []
    log_h = np.log(np.asarray(ladder))
    for seed, errors in results:
        e = np.asarray(errors, dtype=float)
        keep = np.isfinite(e) & (e > 0)
        if int(keep.sum()) >= 2:
            slopes.append(float(np.polyfit(log_h[keep],
                                           np.log(e[keep]), 1)[0]))
    all_zero = all(
        np.isfinite(res[1]).all() and np.all(np.asarray(res[1]) == 0.0)
        for res in results)
    if all_zero:
        order = {"estimate": "exact", "n_regressed": 0}
    else:
        mean, se, n = _mean_se(slopes)
        order = {"estimate": mean, "ci_low": mean - 1.96 * se,
                 "ci_high": mean + 1.96 * se, "se": se, "n_regressed": n}

    header = ["path_index", "seed"] + [f"error_h{h:.10g}" for h in ladder]
    rows = [[i, res[0]] + list(res[1]) for i, res in enumerate(results)]

    summary = ExperimentSummary(
        kind="convergence",
        config=config.echo(model.label),
        ladder=ladder_rows,
        extras={"order": order, "reference_step": h_ref, "taming": taming},
        data_header=tuple(header),
        data_rows=rows,
    )
    return _write_if_configured(summary, config)


RUNNERS = {
    "explosion": run_explosion,
    "uniqueness": run_uniqueness,
    "nonconfluence": run_nonconfluence,
    "convergence": run_convergence,
}


def run_experiment(kind, config):
    if kind not in RUNNERS:
        raise UsageError(f"unknown experiment kind {kind!r}; choose from "
                         f"{sorted(RUNNERS)}")
    return RUNNERS[kind](config)
