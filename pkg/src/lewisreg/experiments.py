"""Experiment orchestration: seeded trial runners, acceptance presets, sweeps.

Every experiment is deterministic given its config seed: instances, plans,
and per-trial realizations all draw from seeds derived with `rng.derive`.
Reports are JSON-ready dicts wrapped in a stable, versioned schema.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, rng
from .lewis import lewis_weights
from .linalg import weighted_lp_loss
from .instances import gen_random, sign_recovery_experiment
from .oracle import active_solve
from .sampling import BERNOULLI_L1, POISSON_LP, plan_l1, plan_lp, plan_uniform, realize, support_size_bound
from .solvers import DEGENERATE, approx_transfer_bound, solve_weighted_l1, solve_weighted_lp
from .verify import BetaSample, cross_term_check, embedding_check, ruc_check

SCHEMA_VERSION = 1

FAMILIES = ("l1-endtoend", "lp-endtoend", "embed", "ruc", "cross", "coin")

# Tuned-once constants used by the acceptance presets (see tests/test_acceptance.py):
# c_u 0.45 puts the expected L1 support near 2.2 d/eps^2-ish without clamping,
# c_m 0.5 keeps the Poisson budget in the low thousands at the preset sizes.
DEFAULT_C_U = 0.45
DEFAULT_C_M = 0.5


@dataclass
class ExperimentConfig:
    family: str = "l1-endtoend"
    preset: str = ""
    n: int = 2000
    d: int = 5
    p: float = 1.0
    eps: float = 0.25
    delta: float = 0.1
    scheme: str = BERNOULLI_L1
    c_u: float = DEFAULT_C_U
    c_m: float = DEFAULT_C_M
    trials: int = 20
    seed: int = 1
    noise_std: float = 1.0
    n_outliers: int = 0
    outlier_scale: float = 1e4
    m_target: float | None = None   # overrides the sample-size formulas
    budget: int | None = None       # query budget; None derives a Bernstein bound
    budget_delta: float = 0.005
    pass_fraction_required: float = 0.9
    directions: int = 40
    coin_m_small: int = 25
    coin_m_large: int = 250_000
    coin_eps: float = 0.02
    threads: int = 1
    out: str | None = None

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n <= 0 or self.d <= 0 or self.trials < 0:
            raise ValueError("n, d must be positive and trials nonnegative")
        if not 0.0 < self.eps < 1.0 or not 0.0 < self.delta < 1.0:
            raise ValueError("eps and delta must be in (0, 1)")
        if not 1.0 <= self.p <= 2.0:
            raise ValueError("p must be in [1, 2]")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class ExperimentReport:
    config: dict
    trials: list
    aggregates: dict
    passed: bool
    wall_time_s: float
    schema_version: int = SCHEMA_VERSION
    tool_version: str = __version__

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(dataclasses.asdict(self), indent=indent, sort_keys=True)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    config.validate()
    t0 = time.perf_counter()
    runner = _RUNNERS[config.family]
    records, aggregates, passed = runner(config)
    return ExperimentReport(
        config=dataclasses.asdict(config),
        trials=records,
        aggregates=aggregates,
        passed=passed,
        wall_time_s=time.perf_counter() - t0,
    )


def _map_trials(config: ExperimentConfig, fn, count: int) -> list:
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(t) for t in range(count)]


def _build_l1_pieces(config: ExperimentConfig):
    gen = gen_random(
        config.n, config.d,
        noise_std=config.noise_std,
        n_outliers=config.n_outliers,
        outlier_scale=config.outlier_scale,
        p=config.p,
        seed=rng.derive(config.seed, 0x01),
    )
    inst = gen.instance
    lw = lewis_weights(inst.A, 1.0)
    u_override = None
    if config.m_target is not None:
        u_override = lw.gamma * float(np.sum(lw.w)) / config.m_target
    plan = plan_l1(lw.w, gamma=lw.gamma, eps=config.eps, delta=config.delta,
                   d=config.d, u_override=u_override, c_u=config.c_u)
    return gen, inst, plan


def _build_lp_pieces(config: ExperimentConfig):
    gen = gen_random(
        config.n, config.d,
        noise_std=config.noise_std,
        n_outliers=config.n_outliers,
        outlier_scale=config.outlier_scale,
        p=config.p,
        seed=rng.derive(config.seed, 0x01),
    )
    inst = gen.instance
    lw = lewis_weights(inst.A, config.p)
    plan = plan_lp(lw.w, gamma=lw.gamma, eps=config.eps, delta=config.delta,
                   d=config.d, p=config.p, m_override=config.m_target,
                   c_m=config.c_m)
    return gen, inst, plan


def _full_minimizer(inst):
    y = inst.reveal_hidden_labels()
    if inst.p == 1.0:
        return solve_weighted_l1(inst.A, y)
    return solve_weighted_lp(inst.A, y, inst.p, tol=1e-10)


def _endtoend(config: ExperimentConfig) -> tuple[list, dict, bool]:
    build = _build_l1_pieces if config.family == "l1-endtoend" else _build_lp_pieces
    _, inst, plan = build(config)
    full = _full_minimizer(inst)
    L_star = full.objective
    y = inst.reveal_hidden_labels()
    bound = approx_transfer_bound(config.eps)
    budget = config.budget
    if budget is None:
        budget = math.ceil(support_size_bound(plan, config.budget_delta))

    def one(t: int) -> dict:
        outcome = active_solve(inst, plan, rng.derive(config.seed, 0x02, t))
        queries = outcome.ledger.count
        if outcome.result.status == DEGENERATE:
            return {"trial": t, "queries": queries, "ratio": math.inf,
                    "within_budget": queries <= budget, "passed": False}
        loss = weighted_lp_loss(inst.A, y, outcome.result.beta, p=inst.p)
        ratio = loss / L_star if L_star > 0 else (1.0 if loss == 0 else math.inf)
        ok = ratio <= bound and queries <= budget
        return {"trial": t, "queries": queries, "ratio": ratio,
                "within_budget": queries <= budget, "passed": bool(ok)}

    records = _map_trials(config, one, config.trials)
    ratios = np.array([r["ratio"] for r in records]) if records else np.array([])
    queries = np.array([r["queries"] for r in records]) if records else np.array([])
    npass = sum(r["passed"] for r in records)
    frac = npass / config.trials if config.trials else 1.0
    aggregates = {
        "optimal_loss": L_star,
        "ratio_bound": bound,
        "budget": budget,
        "expected_support": plan.expected_support,
        "pass_count": npass,
        "pass_fraction": frac,
        "median_ratio": float(np.median(ratios)) if records else None,
        "query_quantiles": {
            "min": int(queries.min()), "median": float(np.median(queries)),
            "max": int(queries.max()),
        } if records else None,
    }
    return records, aggregates, frac >= config.pass_fraction_required


def _embed(config: ExperimentConfig) -> tuple[list, dict, bool]:
    A = rng.normal_matrix(rng.derive(config.seed, 0x01), config.n, config.d)
    lw = lewis_weights(A, config.p if config.p < 2.0 else 1.0)
    if config.scheme == POISSON_LP:
        plan = plan_lp(lw.w, gamma=lw.gamma, eps=config.eps, delta=config.delta,
                       d=config.d, p=config.p, m_override=config.m_target,
                       c_m=config.c_m)
    elif config.scheme == "uniform":
        plan = plan_uniform(config.n, int(config.m_target or config.n // 10))
    else:
        u_override = None
        if config.m_target is not None:
            u_override = lw.gamma * float(np.sum(lw.w)) / config.m_target
        plan = plan_l1(lw.w, gamma=lw.gamma, eps=config.eps, delta=config.delta,
                       d=config.d, u_override=u_override, c_u=config.c_u)

    def one(t: int) -> dict:
        sketch = realize(plan, rng.derive(config.seed, 0x02, t))
        rep = embedding_check(A, sketch, config.p, config.eps,
                              directions=config.directions,
                              seed=rng.derive(config.seed, 0x03, t))
        return {"trial": t, "support": sketch.support_size,
                "max_ratio_dev": rep.max_ratio_dev, "passed": rep.passed}

    records = _map_trials(config, one, config.trials)
    npass = sum(r["passed"] for r in records)
    frac = npass / config.trials if config.trials else 1.0
    aggregates = {
        "expected_support": plan.expected_support,
        "pass_count": npass,
        "pass_fraction": frac,
        "median_deviation": float(np.median([r["max_ratio_dev"] for r in records]))
        if records else None,
    }
    return records, aggregates, frac >= config.pass_fraction_required


def _ruc(config: ExperimentConfig) -> tuple[list, dict, bool]:
    _, inst, plan = _build_l1_pieces(config)
    full = _full_minimizer(inst)

    def one(t: int) -> dict:
        sketch = realize(plan, rng.derive(config.seed, 0x02, t))
        spec = BetaSample(directions=config.directions,
                          seed=rng.derive(config.seed, 0x03, t))
        trial = ruc_check(inst, sketch, full.beta, spec, config.eps, config.delta)
        return {
            "trial": t,
            "queries": sketch.support_size,
            "delta_value": trial.delta_value,
            "max_rel_violation": trial.max_rel_violation,
            "max_uncorrected": trial.max_uncorrected,
            "passed": bool(trial.max_rel_violation <= config.eps),
            "uncorrected_exceeds": bool(trial.max_uncorrected > config.eps),
        }

    records = _map_trials(config, one, config.trials)
    corr = np.array([r["max_rel_violation"] for r in records])
    unc = np.array([r["max_uncorrected"] for r in records])
    npass = int(np.sum(corr <= config.eps)) if records else 0
    frac = npass / config.trials if config.trials else 1.0
    unc_frac = float(np.mean(unc > config.eps)) if records else 0.0
    aggregates = {
        "expected_support": plan.expected_support,
        "pass_count": npass,
        "pass_fraction": frac,
        "median_violation": float(np.median(corr)) if records else None,
        "uncorrected_exceed_fraction": unc_frac,
    }
    return records, aggregates, frac >= config.pass_fraction_required


def _cross(config: ExperimentConfig) -> tuple[list, dict, bool]:
    if not 1.0 < config.p < 2.0:
        raise ValueError("cross-term experiments need p in (1, 2)")
    gen, inst, plan = _build_lp_pieces(config)
    full = _full_minimizer(inst)
    y_centered = inst.reveal_hidden_labels() - inst.A @ full.beta

    def one(t: int) -> dict:
        sketch = realize(plan, rng.derive(config.seed, 0x02, t))
        spec = BetaSample(directions=config.directions,
                          seed=rng.derive(config.seed, 0x03, t))
        rep = cross_term_check(inst.A, y_centered, sketch, config.p, spec,
                               m=plan.m, gamma=plan.gamma, delta=config.delta)
        return {"trial": t, "support": sketch.support_size,
                "max_ratio": rep.max_ratio, "fitted_c": rep.fitted_c}

    records = _map_trials(config, one, config.trials)
    ratios = np.array([r["max_ratio"] for r in records])
    aggregates = {
        "m": plan.m,
        "expected_support": plan.expected_support,
        "median_max_ratio": float(np.median(ratios)) if records else None,
        "median_fitted_c": float(np.median([r["fitted_c"] for r in records]))
        if records else None,
    }
    return records, aggregates, True


def _coin(config: ExperimentConfig) -> tuple[list, dict, bool]:
    eps = config.coin_eps
    n_prime = max(config.coin_m_large, config.coin_m_small)
    rate_small = sign_recovery_experiment(
        n_prime, eps, config.coin_m_small, config.trials,
        seed=rng.derive(config.seed, 0x05),
    )
    rate_large = sign_recovery_experiment(
        n_prime, eps, config.coin_m_large, config.trials,
        seed=rng.derive(config.seed, 0x06),
    )
    records = [
        {"m_queries": config.coin_m_small, "win_rate": rate_small},
        {"m_queries": config.coin_m_large, "win_rate": rate_large},
    ]
    passed = rate_small <= 0.75 and rate_large >= 0.99
    aggregates = {"win_rate_small": rate_small, "win_rate_large": rate_large}
    return records, aggregates, passed


_RUNNERS = {
    "l1-endtoend": _endtoend,
    "lp-endtoend": _endtoend,
    "embed": _embed,
    "ruc": _ruc,
    "cross": _cross,
    "coin": _coin,
}

SWEEP_AXES = ("m", "eps", "c_u")


def sweep(config: ExperimentConfig, axis: str, values) -> list[ExperimentReport]:
    """One report per axis value; values must be sorted ascending."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    values = list(values)
    if values != sorted(values):
        raise ValueError("sweep values must be sorted ascending")
    reports = []
    for v in values:
        c = dataclasses.replace(config)
        if axis == "m":
            c.m_target = float(v)
        elif axis == "eps":
            c.eps = float(v)
        else:
            c.c_u = float(v)
        reports.append(run_experiment(c))
    return reports


def sweep_summary(axis: str, values, reports, metric: str) -> list[dict]:
    rows = []
    for v, rep in zip(values, reports):
        rows.append({axis: v, metric: rep.aggregates.get(metric),
                     "pass_fraction": rep.aggregates.get("pass_fraction")})
    return rows


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x); nan if underdetermined."""
    lx = np.log(np.asarray(xs, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    lx = lx - lx.mean()
    denom = float(np.sum(lx * lx))
    if lx.size < 2 or denom == 0.0:
        return math.nan
    return float(np.sum(lx * (ly - ly.mean())) / denom)


def preset_config(name: str, **overrides) -> ExperimentConfig:
    """Named acceptance experiments with frozen parameters."""
    presets = {
        "l1-accept": dict(
            family="l1-endtoend", n=20_000, d=10, p=1.0, eps=0.25, delta=0.1,
            trials=100, seed=1, noise_std=1.0, n_outliers=1, outlier_scale=1e4,
            pass_fraction_required=0.9,
        ),
        "lp-accept": dict(
            family="lp-endtoend", n=20_000, d=6, p=1.5, eps=0.3, delta=0.1,
            scheme=POISSON_LP, trials=100, seed=1, noise_std=1.0,
            pass_fraction_required=0.85,
        ),
        "embed-accept": dict(
            family="embed", n=10_000, d=5, p=1.0, eps=0.25, delta=0.1,
            trials=100, seed=1, directions=100, pass_fraction_required=0.9,
        ),
        "ruc-accept": dict(
            family="ruc", n=20_000, d=10, p=1.0, eps=0.25, delta=0.1,
            trials=100, seed=1, noise_std=1.0, n_outliers=1, outlier_scale=1e4,
            directions=30, pass_fraction_required=0.9,
        ),
        "coin-accept": dict(
            family="coin", trials=2000, seed=1, coin_eps=0.02,
            coin_m_small=25, coin_m_large=250_000,
        ),
        "scaling-ruc": dict(
            family="ruc", n=40_000, d=5, p=1.0, eps=0.25, delta=0.1,
            trials=20, seed=1, noise_std=1.0, n_outliers=1, outlier_scale=1e4,
            directions=20,
        ),
        "scaling-cross": dict(
            family="cross", n=10_000, d=5, p=1.5, eps=0.3, delta=0.1,
            scheme=POISSON_LP, trials=30, seed=1, noise_std=1.0,
            directions=20,
        ),
    }
    if name not in presets:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(presets)}")
    params = dict(presets[name])
    params.update(overrides)
    return ExperimentConfig(preset=name, **params)
