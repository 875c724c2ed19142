"""Desk-scale studies that turn the analytical guarantees into checks.

Every study is deterministic given its configuration and seed, re-verifies
its preconditions numerically before running, and reports raw points plus
a JSON-able summary.  Rate fits are least squares on log10-log10 points
with the RMS fit residual reported alongside the slope.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    EvolveResult,
    IntegratorConfig,
    PicardError,
    SystemSpec,
    evolve,
)
from .functionals import (
    NoncavitationBounds,
    check_noncavitation,
    difference_energy,
    smallness_threshold,
)
from .presets import random_bandlimited
from .spectral import sobolev_norm, _x_over_tanh
from .state import Params, WaveState, weighted_pair_norm

COMPARISON_NORMS = ("L2xH12", "H1xH12", "HskappaxHs")


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep around a base run configuration."""

    base_config: object  # RunConfig
    sweep_param: str
    values: tuple
    comparison_norm: str | None = None

    def __post_init__(self):
        if self.sweep_param not in ("kappa", "mu", "n", "dt", "amplitude"):
            raise ValueError(f"unknown sweep parameter {self.sweep_param!r}")
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 2:
            raise ValueError("sweep needs at least 2 values")
        diffs = np.diff(vals)
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep values must be strictly monotone")
        if self.comparison_norm is not None and self.comparison_norm not in COMPARISON_NORMS:
            raise ValueError(
                f"comparison_norm must be one of {COMPARISON_NORMS}, "
                f"got {self.comparison_norm!r}"
            )
        object.__setattr__(self, "values", vals)


@dataclass
class RateReport:
    study: str
    param_values: list
    errors: list
    fitted_order: float
    residual: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.extra.get("pass", True))

    def summary(self):
        return {
            "study": self.study,
            "fitted_order": self.fitted_order,
            "residual": self.residual,
            "pass": self.passed,
            **{k: v for k, v in self.extra.items() if k != "pass"},
        }


def _pmap(fn, items, workers=1):
    """Map preserving order; independent sweep points may run concurrently."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def fit_rate(params, errors):
    """Least-squares slope of log10(error) against log10(param) plus RMS residual."""
    params = np.asarray(params, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(params) < 3:
        raise ValueError("rate fitting needs at least 3 points")
    if np.any(errors <= 0):
        raise ValueError("rate fitting needs positive errors")
    x = np.log10(params)
    y = np.log10(errors)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(math.sqrt(np.mean(resid**2)))


def _pair_difference_norms(a: WaveState, b: WaveState):
    theta = a.eta - b.eta
    ws = [va - vb for va, vb in zip(a.vel, b.vel)]
    return theta, ws


def low_capillarity_error(a: WaveState, b: WaveState) -> float:
    """sqrt(||theta||_L2^2 + ||K^-1 w||_L2^2), the zero-surface-tension metric."""
    theta, ws = _pair_difference_norms(a, b)
    kinv2 = _x_over_tanh(a.grid.xi_norm)
    total = float(np.sum(np.abs(theta.coeffs) ** 2))
    for w in ws:
        total += float(np.sum(kinv2 * np.abs(w.coeffs) ** 2))
    return math.sqrt(total)


def _comparison_error(name, a, b, s, kappa):
    theta, ws = _pair_difference_norms(a, b)
    if name == "L2xH12":
        total = sobolev_norm(theta, 0.0) ** 2
        total += sum(sobolev_norm(w, 0.5) ** 2 for w in ws)
        return math.sqrt(total)
    if name == "H1xH12":
        total = sobolev_norm(theta, 1.0) ** 2
        total += sum(sobolev_norm(w, 0.5) ** 2 for w in ws)
        return math.sqrt(total)
    if name == "HskappaxHs":
        diff = WaveState(theta, tuple(ws), time=a.time)
        return weighted_pair_norm(diff, s, kappa)
    raise ValueError(f"unknown comparison norm {name!r}")


def _sup_error(result_a: EvolveResult, result_b: EvolveResult, metric) -> float:
    sa, sb = result_a.trajectory.states, result_b.trajectory.states
    if len(sa) != len(sb):
        raise RuntimeError("trajectories sampled at different cadences")
    return max(metric(x, y) for x, y in zip(sa, sb))


def kappa_limit_study(sweep: SweepSpec, workers=1) -> RateReport:
    """Convergence rate of the solution as the surface tension vanishes.

    Runs the zero-surface-tension system once, each kappa in the sweep, and
    fits the order of sup-in-time error decay (guaranteed at least 1/2 up
    to constants)."""
    base = sweep.base_config
    if sweep.sweep_param != "kappa":
        raise ValueError("kappa_limit_study needs a kappa sweep")
    kappas = sweep.values
    if len(kappas) < 3:
        raise ValueError("kappa_limit_study needs at least 3 sweep values")
    if any(not (0 < k <= 1) for k in kappas):
        raise ValueError("kappa sweep values must lie in (0, 1]")
    if base.mu != 0:
        raise ValueError("kappa_limit_study runs the unregularized system")
    grid = base.grid()
    u0 = base.initial_state(grid)
    cfg = base.integrator()

    def run(kappa):
        params = Params(kappa=kappa, mu=0.0, p=base.p, s=base.s)
        spec = SystemSpec(grid.dim, params, regularized=False)
        res = evolve(u0, spec, cfg, base.T, base.report_every)
        if res.blown_up:
            raise RuntimeError(f"kappa={kappa:g} run blew up at t={res.blowup_time}")
        return res

    reference = run(0.0)
    results = _pmap(run, kappas, workers)
    errors = []
    points = []
    for kappa, res in zip(kappas, results):
        err = _sup_error(res, reference, low_capillarity_error)
        point = {"kappa": kappa, "error": err}
        if sweep.comparison_norm:
            point[sweep.comparison_norm] = _sup_error(
                res,
                reference,
                lambda a, b: _comparison_error(sweep.comparison_norm, a, b, base.s, kappa),
            )
        errors.append(err)
        points.append(point)
    order, resid = fit_rate(kappas, errors)
    report = RateReport("kappa_limit", list(kappas), errors, order, resid)
    report.extra["points"] = points
    report.extra["pass"] = order >= 0.45 and resid < 0.1
    return report


def mu_limit_study(sweep: SweepSpec, r=None, workers=1) -> RateReport:
    """Cauchy behavior of the viscous approximations as mu decreases.

    Errors against the mu = 0 run, measured in the (r+1/2, r) Sobolev pair
    for r < s, must decrease strictly along the sweep; the fitted order is
    reported without asserting a value."""
    base = sweep.base_config
    if sweep.sweep_param != "mu":
        raise ValueError("mu_limit_study needs a mu sweep")
    mus = sweep.values
    if any(not (0 < m < 1) for m in mus) or any(b <= a for a, b in zip(mus[1:], mus)):
        raise ValueError("mu sweep values must be strictly decreasing in (0, 1)")
    if base.p != 1.0:
        raise ValueError("mu_limit_study fixes p = 1")
    if base.kappa <= 0:
        raise ValueError("mu_limit_study needs kappa > 0")
    if r is None:
        r = base.study.get("r", max(0.5, base.s - 0.5))
    r = float(r)
    if not (0 < r < base.s or r == base.s):
        raise ValueError(f"mu_limit_study needs 0 < r <= s, got r={r}")
    grid = base.grid()
    u0 = base.initial_state(grid)
    cfg = base.integrator()
    fallback = False

    def run(mu):
        nonlocal fallback
        params = Params(kappa=base.kappa, mu=mu, p=1.0, s=base.s)
        spec = SystemSpec(grid.dim, params, regularized=mu > 0)
        try:
            return evolve(u0, spec, cfg, base.T, base.report_every)
        except PicardError:
            fallback = True
            alt = IntegratorConfig(
                method="exponential_rk4",
                dt=cfg.dt,
                dealias=cfg.dealias,
                blowup_ceiling=cfg.blowup_ceiling,
            )
            return evolve(u0, spec, alt, base.T, base.report_every)

    reference = run(0.0)

    def metric(a, b):
        theta, ws = _pair_difference_norms(a, b)
        total = sobolev_norm(theta, r + 0.5) ** 2
        total += sum(sobolev_norm(w, r) ** 2 for w in ws)
        return math.sqrt(total)

    errors = [
        _sup_error(res, reference, metric) for res in _pmap(run, mus, workers)
    ]
    order, resid = fit_rate(mus, errors) if len(mus) >= 3 else (math.nan, math.nan)
    report = RateReport("mu_limit", list(mus), errors, order, resid)
    decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    report.extra["strictly_decreasing"] = decreasing
    report.extra["r"] = r
    report.extra["fallback_integrator"] = fallback
    report.extra["pass"] = decreasing
    return report


@dataclass
class TableReport:
    study: str
    rows: list
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        active = [r for r in self.rows if not r.get("skipped")]
        return bool(active) and all(r.get("ok", False) for r in active)

    def summary(self):
        return {
            "study": self.study,
            "pass": self.passed,
            "rows": len(self.rows),
            "skipped": sum(1 for r in self.rows if r.get("skipped")),
            **self.extra,
        }


def invariant_region_test(
    data, params: Params, T, cfg: IntegratorConfig, epsilon=None, report_every=None
) -> TableReport:
    """Small data stays small: norms gated at eps/2 never reach eps.

    Each datum's H_kappa^1 x H^(1/2) norm is computed (not assumed); data
    above eps/2 are flagged as precondition violations and skipped.  Both
    the conservative and, when params.mu > 0, the viscous flow are run."""
    eps = smallness_threshold(epsilon)
    report_every = report_every or max(T / 20.0, cfg.dt)
    rows = []
    for i, u0 in enumerate(data):
        gate = weighted_pair_norm(u0, 0.5, params.kappa)
        row = {"index": i, "gate_norm": gate, "epsilon": eps}
        if gate > 0.5 * eps * (1 + 1e-12):
            row["skipped"] = True
            row["reason"] = "initial norm exceeds epsilon/2"
            rows.append(row)
            continue
        variants = [("mu0", Params(kappa=params.kappa, mu=0.0, p=params.p, s=params.s))]
        if params.mu > 0:
            variants.append(("mu", params))
        ok = True
        for label, pv in variants:
            spec = SystemSpec(u0.dim, pv, regularized=pv.mu > 0)
            res = evolve(u0, spec, cfg, T, report_every)
            peak = max(
                weighted_pair_norm(st, 0.5, params.kappa) for st in res.trajectory.states
            )
            row[f"max_norm_{label}"] = peak
            row[f"ok_{label}"] = (not res.blown_up) and peak <= eps
            ok = ok and row[f"ok_{label}"]
        row["ok"] = ok
        rows.append(row)
    return TableReport("invariant_region", rows, {"epsilon": eps})


def dissipation_test(
    data, params: Params, T, cfg: IntegratorConfig, delta=0.1, report_every=None
) -> TableReport:
    """Viscosity makes the Hamiltonian non-increasing for small data.

    Hamiltonian increases below 1e-10 relative are counted as roundoff;
    the mu = 0 control run must instead conserve to 1e-8 relative."""
    if not (params.mu > 0 and params.p == 1.0):
        raise ValueError("dissipation_test needs mu > 0 and p = 1")
    report_every = report_every or max(T / 20.0, cfg.dt)
    rows = []
    for i, u0 in enumerate(data):
        size = sobolev_norm(u0.eta, 0.0) + math.sqrt(
            sum(sobolev_norm(v, 0.5) ** 2 for v in u0.vel)
        )
        row = {"index": i, "data_size": size, "delta": delta}
        if size > delta:
            row["skipped"] = True
            row["reason"] = "data size exceeds delta"
            rows.append(row)
            continue
        spec = SystemSpec(u0.dim, params, regularized=True)
        res = evolve(u0, spec, cfg, T, report_every)
        series = [rep.hamiltonian for rep in res.reports]
        tol = 1e-10 * max(abs(series[0]), 1e-300)
        row["monotone"] = all(b <= a + tol for a, b in zip(series, series[1:]))
        row["total_drop"] = series[0] - series[-1]

        ctrl_params = Params(kappa=params.kappa, mu=0.0, p=params.p, s=params.s)
        ctrl = evolve(u0, SystemSpec(u0.dim, ctrl_params, False), cfg, T, report_every)
        ctrl_series = [rep.hamiltonian for rep in ctrl.reports]
        drift = max(abs(h - ctrl_series[0]) for h in ctrl_series)
        row["control_drift"] = drift / max(abs(ctrl_series[0]), 1e-300)
        row["ok"] = row["monotone"] and row["control_drift"] <= 1e-8
        rows.append(row)
    return TableReport("dissipation", rows, {"delta": delta})


@dataclass
class StabilityReport:
    sizes: list
    sup_energies: list
    slope: float
    slope_residual: float
    growth_rates: list
    r: float

    @property
    def passed(self):
        rates = [a for a in self.growth_rates if math.isfinite(a)]
        if len(rates) != len(self.growth_rates):
            return False
        spread_ok = True
        if len(rates) > 1:
            lo, hi = min(rates), max(rates)
            spread_ok = (hi - lo) <= 0.5 * max(abs(lo), abs(hi), 1e-6)
        monotone = all(b < a for a, b in zip(self.sup_energies, self.sup_energies[1:]))
        return spread_ok and monotone and abs(self.slope - 2.0) <= 0.2

    def summary(self):
        return {
            "study": "stability",
            "slope": self.slope,
            "slope_residual": self.slope_residual,
            "growth_rates": self.growth_rates,
            "pass": self.passed,
        }


def stability_test(
    u0: WaveState,
    sizes,
    r,
    params: Params,
    T,
    cfg: IntegratorConfig,
    seed=0,
    report_every=None,
) -> StabilityReport:
    """Continuous dependence via the difference energy.

    Perturbs the datum along a fixed random band-limited direction at the
    given sizes, evolves all runs, and checks that sup_t E^r scales
    quadratically in the perturbation size while the fitted exponential
    growth rate of E^r(t) stays comparable across sizes."""
    r = float(r)
    if not (0 < r <= params.s - 0.5):
        raise ValueError(f"stability_test needs r in (0, s - 1/2], got {r}")
    sizes = [float(s_) for s_ in sizes]
    if any(b >= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("perturbation sizes must be strictly decreasing")
    report_every = report_every or max(T / 20.0, cfg.dt)
    direction = random_bandlimited(u0.grid, seed=seed, band=4, amplitude=1.0)
    dnorm = weighted_pair_norm(direction, params.s, params.kappa)
    spec = SystemSpec(u0.dim, params, regularized=params.mu > 0)
    base = evolve(u0, spec, cfg, T, report_every)

    sups = []
    rates = []
    for size in sizes:
        scale = size / dnorm
        pert = WaveState(
            u0.eta + scale * direction.eta,
            tuple(v + scale * d for v, d in zip(u0.vel, direction.vel)),
            time=u0.time,
        )
        res = evolve(pert, spec, cfg, T, report_every)
        series = [
            difference_energy(a, b, r, params)
            for a, b in zip(res.trajectory.states, base.trajectory.states)
        ]
        sups.append(max(series))
        times = np.asarray(base.trajectory.times) - base.trajectory.times[0]
        logs = np.log(np.maximum(series, 1e-300))
        rate = float(np.polyfit(times, logs, 1)[0]) if len(times) > 1 else math.nan
        rates.append(rate)
    slope, resid = fit_rate(sizes, sups)
    return StabilityReport(sizes, sups, slope, resid, rates, r)


@dataclass(frozen=True)
class ExistenceEstimate:
    T0: float
    T1: float
    T2: float
    data_norm: float


def existence_time_estimate(u0: WaveState, params: Params, constants: dict) -> ExistenceEstimate:
    """Heuristic existence horizon from the a priori estimate.

    T1 = log(1 + 1/(1 + C1 (1+kappa) C0 N^2)) / (C1 (1+kappa)) with N the
    weighted data norm; for s > 3/2 additionally T2 = h0 / (C2 (N + N^2))
    gated on non-cavitation of the datum within (h0, H0); otherwise T2 = 1.
    The constants are user supplied (they are not constructive); T0 is
    non-increasing in kappa and in the data norm, never a certified bound."""
    constants = dict(constants)
    C0 = float(constants.pop("C0", 1.0))
    C1 = float(constants.pop("C1"))
    C2 = float(constants.pop("C2", 1.0))
    h0 = constants.pop("h0", None)
    H0 = constants.pop("H0", None)
    if constants:
        raise ValueError(f"unknown constants: {', '.join(sorted(constants))}")
    if C0 <= 0 or C1 <= 0 or C2 <= 0:
        raise ValueError("constants C0, C1, C2 must be positive")
    N = weighted_pair_norm(u0, params.s, params.kappa)
    fac = C1 * (1.0 + params.kappa)
    T1 = math.log(1.0 + 1.0 / (1.0 + fac * C0 * N * N)) / fac
    if params.s > 1.5:
        if h0 is None or H0 is None:
            raise ValueError("s > 3/2 needs non-cavitation bounds h0, H0")
        res = check_noncavitation(u0, NoncavitationBounds(float(h0), float(H0)))
        if not res.ok:
            raise ValueError(
                f"datum violates non-cavitation: eta range "
                f"[{res.eta_min:.3g}, {res.eta_max:.3g}] vs [{res.lower:.3g}, {res.upper:.3g}]"
            )
        T2 = math.inf if N == 0 else float(h0) / (C2 * (N + N * N))
    else:
        T2 = 1.0
    return ExistenceEstimate(min(T1, T2), T1, T2, N)


@dataclass
class GrowthBoundReport:
    kind: str
    constants: dict
    margin: float
    dominated: bool

    def summary(self):
        return {
            "study": "growth_bound",
            "kind": self.kind,
            "constants": self.constants,
            "margin": self.margin,
            "pass": self.dominated,
        }


def growth_bound_monitor(result: EvolveResult, s, params: Params) -> GrowthBoundReport:
    """Fit a regularity-persistence envelope over a norm history.

    For s < 1 the envelope is exp(C1 exp(C2 t)) with C2 = 1 + kappa and C1
    the smallest constant dominating the history; for s >= 1 it is
    N(0) exp(C (1+kappa)(t + int ||u||_{s-1/4}^2)).  Domination fails only
    when the run blew up or the constants are not finite."""
    s = float(s)
    states = result.trajectory.states
    t0 = states[0].time
    times = np.asarray([st.time - t0 for st in states])
    y = np.asarray([weighted_pair_norm(st, s, params.kappa) for st in states])
    if result.blown_up or not np.all(np.isfinite(y)):
        return GrowthBoundReport("blown_up", {}, math.inf, False)
    floor = 1e-300
    if s < 1.0:
        C2 = 1.0 + params.kappa
        C1 = float(np.max(np.exp(-C2 * times) * np.log(np.maximum(y, floor))))
        envelope = np.exp(min(C1, 700.0) * np.exp(C2 * times)) if C1 > 0 else np.ones_like(y)
        if C1 <= 0:
            # History never exceeds 1: any arbitrarily small C1 > 0 dominates.
            C1 = 0.0
            envelope = np.ones_like(y)
        margin = float(np.min(envelope / np.maximum(y, floor)))
        return GrowthBoundReport(
            "double_exponential", {"C1": C1, "C2": C2}, margin, math.isfinite(C1)
        )
    norms_quarter = np.asarray(
        [weighted_pair_norm(st, s - 0.25, params.kappa) for st in states]
    )
    integral = np.concatenate(
        [[0.0], np.cumsum(0.5 * np.diff(times) * (norms_quarter[1:] ** 2 + norms_quarter[:-1] ** 2))]
    )
    y0 = max(y[0], floor)
    denom = (1.0 + params.kappa) * (times + integral)
    with np.errstate(divide="ignore", invalid="ignore"):
        cs = np.where(denom > 0, np.log(np.maximum(y, floor) / y0) / np.where(denom > 0, denom, 1.0), -math.inf)
    C = float(max(np.max(cs), 0.0))
    envelope = y0 * np.exp(C * denom)
    margin = float(np.min(envelope / np.maximum(y, floor)))
    return GrowthBoundReport(
        "exponential_integral", {"C": C, "kappa": params.kappa}, margin, math.isfinite(C)
    )


def small_data_family(grid, kappa, count=10, epsilon=None, seed=0, band=6) -> list:
    """Random band-limited states rescaled to gate norm epsilon/2."""
    eps = smallness_threshold(epsilon)
    family = []
    for i in range(count):
        raw = random_bandlimited(grid, seed=seed + i, band=band, amplitude=1.0)
        norm = weighted_pair_norm(raw, 0.5, kappa)
        scale = 0.5 * eps / norm
        family.append(
            WaveState(
                scale * raw.eta, tuple(scale * v for v in raw.vel), time=raw.time
            )
        )
    return family


def conservation_check(u0: WaveState, params: Params, T, cfg, report_every=None) -> TableReport:
    """Relative drift of the invariants along the conservative flow."""
    spec = SystemSpec(u0.dim, params, regularized=False)
    report_every = report_every or max(T / 20.0, cfg.dt)
    res = evolve(u0, spec, cfg, T, report_every)
    h = [rep.hamiltonian for rep in res.reports]
    drift_h = max(abs(x - h[0]) for x in h) / max(abs(h[0]), 1e-300)
    row = {"drift_hamiltonian": drift_h, "blown_up": res.blown_up}
    if u0.dim == 1:
        mom = [rep.momentum for rep in res.reports]
        drift_i = max(abs(x - mom[0]) for x in mom) / (1.0 + abs(mom[0]))
        row["drift_momentum"] = drift_i
        row["ok"] = (not res.blown_up) and drift_h <= 1e-8 and drift_i <= 1e-8
    else:
        row["ok"] = (not res.blown_up) and drift_h <= 1e-7
    return TableReport("conservation", [row])
