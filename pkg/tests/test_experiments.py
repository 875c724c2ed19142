import math

import numpy as np
import pytest

from wbwaves.config import config_from_dict
from wbwaves.dynamics import IntegratorConfig, SystemSpec, evolve
from wbwaves.experiments import (
    ExistenceEstimate,
    SweepSpec,
    conservation_check,
    dissipation_test,
    existence_time_estimate,
    fit_rate,
    growth_bound_monitor,
    invariant_region_test,
    kappa_limit_study,
    low_capillarity_error,
    mu_limit_study,
    small_data_family,
    stability_test,
)
from wbwaves.presets import random_bandlimited, single_mode
from wbwaves.spectral import Grid
from wbwaves.state import Params, WaveState


def base_config(**overrides):
    raw = {
        "system": "wb1d",
        "grid": {"n": 64},
        "params": {"kappa": 1.0, "s": 2.0},
        "initial_data": {"preset": "single_mode", "amplitude": 0.05, "mode": 1},
        "integrator": {"dt": 5e-3},
        "T": 1.0,
        "report_every": 0.25,
        "seed": 3,
    }
    raw.update(overrides)
    return config_from_dict(raw)


class TestSweepSpec:
    def test_monotone_required(self):
        cfg = base_config()
        with pytest.raises(ValueError, match="monotone"):
            SweepSpec(cfg, "kappa", (0.1, 0.3, 0.2))

    def test_two_values_rejected_for_rate_fit(self):
        cfg = base_config()
        sweep = SweepSpec(cfg, "kappa", (0.1, 0.01))
        with pytest.raises(ValueError, match="3"):
            kappa_limit_study(sweep)

    def test_unknown_param(self):
        with pytest.raises(ValueError, match="sweep parameter"):
            SweepSpec(base_config(), "gamma", (1, 2, 3))


class TestFitRate:
    def test_recovers_exact_power_law(self):
        params = [1e-1, 1e-2, 1e-3, 1e-4]
        errors = [3.0 * p**1.7 for p in params]
        order, resid = fit_rate(params, errors)
        assert order == pytest.approx(1.7, abs=1e-12)
        assert resid < 1e-12

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            fit_rate([1.0, 0.1], [1.0, 0.1])


class TestKappaLimit:
    def test_self_comparison_is_zero(self):
        g = Grid(64)
        u = random_bandlimited(g, seed=1, band=4, amplitude=0.05)
        assert low_capillarity_error(u, u) == 0.0

    def test_rate_and_monotonicity_in_horizon(self):
        cfg = base_config(T=2.0, report_every=0.5)
        sweep = SweepSpec(cfg, "kappa", (1e-1, 1e-2, 1e-3))
        report = kappa_limit_study(sweep)
        assert report.fitted_order >= 0.45
        assert report.residual < 0.1
        # doubling the horizon increases every error
        cfg2 = base_config(T=4.0, report_every=0.5)
        report2 = kappa_limit_study(SweepSpec(cfg2, "kappa", (1e-1, 1e-2, 1e-3)))
        assert all(b > a for a, b in zip(report.errors, report2.errors))

    def test_regularized_base_rejected(self):
        cfg = base_config(
            system="wb1d_regularized", params={"kappa": 1.0, "mu": 0.1, "s": 2.0}
        )
        with pytest.raises(ValueError, match="unregularized"):
            kappa_limit_study(SweepSpec(cfg, "kappa", (0.1, 0.01, 0.001)))


class TestMuLimit:
    def test_errors_strictly_decreasing(self):
        cfg = base_config(T=1.0)
        report = mu_limit_study(SweepSpec(cfg, "mu", (1e-1, 1e-2, 1e-3)), r=1.0)
        assert report.extra["strictly_decreasing"]
        assert report.passed
        assert all(e > 0 for e in report.errors)

    def test_increasing_sweep_rejected(self):
        cfg = base_config()
        with pytest.raises(ValueError, match="decreasing"):
            mu_limit_study(SweepSpec(cfg, "mu", (1e-3, 1e-2, 1e-1)))


class TestInvariantRegion:
    def test_zero_datum_passes(self):
        g = Grid(64)
        report = invariant_region_test(
            [WaveState.zero(g)], Params(kappa=1.0), T=0.5, cfg=IntegratorConfig(dt=5e-3)
        )
        assert report.passed

    def test_small_family_passes(self):
        g = Grid(64)
        family = small_data_family(g, kappa=1.0, count=3, seed=11, band=4)
        report = invariant_region_test(
            family, Params(kappa=1.0, mu=0.2), T=2.0, cfg=IntegratorConfig(dt=5e-3)
        )
        assert report.passed
        for row in report.rows:
            assert row["gate_norm"] <= 0.025 * (1 + 1e-9)
            assert row["ok_mu0"] and row["ok_mu"]

    def test_large_datum_flagged_not_failed(self):
        g = Grid(64)
        big = single_mode(g, 10.0)
        family = small_data_family(g, kappa=1.0, count=1, seed=12, band=4) + [big]
        report = invariant_region_test(
            family, Params(kappa=1.0), T=0.5, cfg=IntegratorConfig(dt=5e-3)
        )
        assert report.passed  # the large datum is skipped, not failed
        assert report.rows[-1]["skipped"]
        assert report.summary()["skipped"] == 1


class TestDissipation:
    def test_family_dissipates_and_control_conserves(self):
        g = Grid(64)
        family = small_data_family(g, kappa=0.5, count=2, seed=21, band=4)
        report = dissipation_test(
            family, Params(kappa=0.5, mu=0.2, p=1.0), T=2.0, cfg=IntegratorConfig(dt=2e-3)
        )
        assert report.passed
        for row in report.rows:
            assert row["monotone"]
            assert row["total_drop"] > 0
            assert row["control_drift"] <= 1e-8

    def test_zero_datum(self):
        g = Grid(32)
        report = dissipation_test(
            [WaveState.zero(g)], Params(kappa=1.0, mu=0.2, p=1.0), T=0.5,
            cfg=IntegratorConfig(dt=5e-3),
        )
        assert report.passed

    def test_requires_viscosity(self):
        g = Grid(32)
        with pytest.raises(ValueError, match="mu > 0"):
            dissipation_test([WaveState.zero(g)], Params(kappa=1.0), T=0.5,
                             cfg=IntegratorConfig())

    def test_oversized_datum_skipped(self):
        g = Grid(64)
        report = dissipation_test(
            [single_mode(g, 5.0)], Params(kappa=1.0, mu=0.2, p=1.0), T=0.5,
            cfg=IntegratorConfig(dt=5e-3), delta=0.1,
        )
        assert report.rows[0]["skipped"]


class TestStability:
    def test_zero_perturbation_stays_zero(self):
        g = Grid(64)
        u0 = single_mode(g, 0.05)
        params = Params(kappa=1.0, s=1.5)
        spec = SystemSpec(1, params)
        res = evolve(u0, spec, IntegratorConfig(dt=5e-3), T=0.5, report_every=0.1)
        from wbwaves.functionals import difference_energy

        for st in res.trajectory.states:
            assert difference_energy(st, st, 0.5, params) == 0.0

    def test_quadratic_scaling(self):
        g = Grid(64)
        u0 = single_mode(g, 0.05)
        report = stability_test(
            u0, [1e-2, 1e-3, 1e-4], r=0.5, params=Params(kappa=1.0, s=1.5),
            T=1.0, cfg=IntegratorConfig(dt=5e-3), seed=5,
        )
        assert abs(report.slope - 2.0) <= 0.2
        assert report.passed

    def test_r_range_validated(self):
        g = Grid(32)
        with pytest.raises(ValueError, match="r in"):
            stability_test(single_mode(g, 0.01), [1e-2, 1e-3], r=2.0,
                           params=Params(kappa=1.0, s=1.0), T=0.1,
                           cfg=IntegratorConfig(dt=5e-3))


class TestExistenceTime:
    def test_limit_as_norm_vanishes(self):
        g = Grid(32)
        est = existence_time_estimate(
            WaveState.zero(g), Params(kappa=1.0, s=1.0), {"C1": 2.0}
        )
        want = math.log(2.0) / (2.0 * 2.0)
        assert est.T1 == pytest.approx(want, rel=1e-12)
        assert est.T0 == min(est.T1, 1.0)

    def test_monotone_in_amplitude(self):
        g = Grid(64)
        params = Params(kappa=1.0, s=1.0)
        t_values = []
        for amp in (0.05, 0.1, 0.2):
            est = existence_time_estimate(single_mode(g, amp), params, {"C1": 2.0})
            t_values.append(est.T0)
        assert t_values[0] > t_values[1] > t_values[2]

    def test_monotone_in_kappa(self):
        g = Grid(64)
        u0 = single_mode(g, 0.1)
        est0 = existence_time_estimate(u0, Params(kappa=0.0, s=1.0), {"C1": 2.0})
        est1 = existence_time_estimate(u0, Params(kappa=1.0, s=1.0), {"C1": 2.0})
        assert est1.T0 <= est0.T0

    def test_high_regularity_needs_noncavitation(self):
        g = Grid(64)
        deep = single_mode(g, 1.5)  # min eta = -1.5 < h - 1 for any valid h
        with pytest.raises(ValueError, match="non-cavitation"):
            existence_time_estimate(deep, Params(kappa=1.0, s=2.0),
                                    {"C1": 2.0, "C2": 1.0, "h0": 0.5, "H0": 2.0})
        ok = single_mode(g, 0.2)
        est = existence_time_estimate(ok, Params(kappa=1.0, s=2.0),
                                      {"C1": 2.0, "C2": 1.0, "h0": 0.5, "H0": 2.0})
        assert isinstance(est, ExistenceEstimate) and est.T0 > 0


class TestGrowthBound:
    def test_constant_history_dominated(self):
        g = Grid(64)
        u0 = single_mode(g, 0.05)
        spec = SystemSpec(1, Params(kappa=1.0, s=0.75))
        res = evolve(u0, spec, IntegratorConfig(dt=5e-3), T=2.0, report_every=0.25)
        report = growth_bound_monitor(res, s=0.75, params=spec.params)
        assert report.dominated
        assert report.kind == "double_exponential"
        assert report.margin >= 1.0 - 1e-9

    def test_high_regularity_envelope(self):
        g = Grid(64)
        u0 = single_mode(g, 0.05)
        spec = SystemSpec(1, Params(kappa=1.0, s=1.5))
        res = evolve(u0, spec, IntegratorConfig(dt=5e-3), T=2.0, report_every=0.25)
        report = growth_bound_monitor(res, s=1.5, params=spec.params)
        assert report.dominated
        assert report.kind == "exponential_integral"

    def test_blowup_not_dominated(self):
        g = Grid(64)
        u0 = single_mode(g, 40.0)
        spec = SystemSpec(1, Params(kappa=1.0, s=1.0))
        cfg = IntegratorConfig(method="reference_rk4", dt=0.05, blowup_ceiling=50.0)
        res = evolve(u0, spec, cfg, T=5.0, report_every=0.05)
        assert res.blown_up
        report = growth_bound_monitor(res, s=1.0, params=spec.params)
        assert not report.dominated


class TestConservationCheck:
    def test_reference_run(self):
        g = Grid(128)
        report = conservation_check(
            single_mode(g, 0.1), Params(kappa=1.0, s=0.5), T=1.0,
            cfg=IntegratorConfig(dt=1e-3), report_every=0.25,
        )
        assert report.passed
        assert report.rows[0]["drift_hamiltonian"] <= 1e-8


class TestDeterminism:
    def test_family_and_study_deterministic(self):
        g = Grid(64)
        fam1 = small_data_family(g, kappa=1.0, count=2, seed=7, band=4)
        fam2 = small_data_family(g, kappa=1.0, count=2, seed=7, band=4)
        for a, b in zip(fam1, fam2):
            assert np.array_equal(a.eta.values, b.eta.values)
        r1 = invariant_region_test(fam1, Params(kappa=1.0), T=0.3, cfg=IntegratorConfig(dt=5e-3))
        r2 = invariant_region_test(fam2, Params(kappa=1.0), T=0.3, cfg=IntegratorConfig(dt=5e-3))
        assert r1.rows == r2.rows
