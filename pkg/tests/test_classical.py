import math
import warnings

import numpy as np
import pytest

from dwell import ExperimentConfig, DomainError, get_preset
from dwell import classical


@pytest.fixture(scope="module")
def l_orbit():
    return classical.integrate_orbit(get_preset("L"))


class TestPotentialShape:
    def setup_method(self):
        self.config = get_preset("L")
        self.r = self.config.frequency_ratio
        self.d = self.config.d_zpf

    def test_barrier_and_well_depth(self):
        assert classical.evaluate_potential(0.0, self.config) == 0.0
        # V(d) = -m omega^2 d^2 / 4, which is -D^2/(8R) in hbar omega_dw
        assert classical.evaluate_potential(self.d, self.config) == pytest.approx(
            -self.d**2 / (8.0 * self.r), rel=1e-14)

    def test_curvature_landmarks(self):
        assert classical.evaluate_curvature(0.0, self.config) == pytest.approx(-1.0)
        assert classical.evaluate_curvature(self.d, self.config) == pytest.approx(2.0)
        assert classical.evaluate_curvature(math.sqrt(2) * self.d, self.config) \
            == pytest.approx(5.0, rel=1e-12)

    def test_force_vanishes_at_minimum(self):
        assert classical.evaluate_force(self.d, self.config) == pytest.approx(0.0, abs=1e-15)

    def test_max_curvature_on_orbit(self, l_orbit):
        # exact algebra: V''(x_out) = (5 - 3 u0^2) m omega^2, just below the
        # bound 5 m omega^2 which is attained only as x0/d -> 0
        u0 = 0.1
        x_turn = l_orbit.events.x_out * self.d
        assert classical.evaluate_curvature(x_turn, self.config) == pytest.approx(
            5.0 - 3.0 * u0**2, rel=1e-7)
        sampled_max = np.max(classical.evaluate_curvature(l_orbit.x_zpf_units, self.config))
        assert sampled_max <= 5.0 + 1e-9


class TestOrbitIntegration:
    def test_fixed_point_at_minimum(self):
        _, u, v = classical.integrate_from(1.0, 0.0, 1e-3, 5.0)
        assert np.max(np.abs(u - 1.0)) == 0.0
        assert np.max(np.abs(v)) == 0.0

    def test_period_within_3pct_of_formula(self, l_orbit):
        formula = classical.period_approx(get_preset("L"))
        assert abs(l_orbit.t_max - formula) / formula < 0.03

    def test_formula_agreement_improves_toward_small_start(self):
        errors = []
        for u0 in (0.2, 0.1, 0.05):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                config = ExperimentConfig(100.0, 1.0, 1e4, u0)
            traj = classical.integrate_orbit(config)
            formula = classical.period_approx(config)
            errors.append(abs(traj.t_max - formula) / traj.t_max)
        assert errors[0] > errors[1] > errors[2]

    def test_turning_point_matches_energy_conservation(self, l_orbit):
        exact = math.sqrt(2.0 - 0.1**2)
        assert abs(l_orbit.events.x_out - exact) < 1e-6

    def test_orbit_closes(self, l_orbit):
        assert l_orbit.events.closure_error < 1e-8

    def test_energy_drift_bounded(self, l_orbit):
        assert l_orbit.events.energy_drift < 1e-8

    def test_energy_band_non_drifting_ten_periods(self):
        traj = classical.integrate_orbit(get_preset("M"), n_periods=10)
        e = 0.5 * traj.v**2 + 0.5 * (-traj.u**2 + 0.5 * traj.u**4)
        scale = max(abs(e[0]), 0.25)
        band = np.abs(e - e[0]) / scale
        period_samples = int(round(2 * traj.t_max / traj.dt))
        first = np.max(band[:period_samples])
        last = np.max(band[-period_samples:])
        assert np.max(band) < 1e-6  # bounded
        assert last < 2.0 * first + 1e-12  # no secular growth

    def test_t_max_converges_under_refinement(self, l_orbit):
        fine = classical.integrate_orbit(get_preset("L"), dt=1e-4)
        assert abs(fine.t_max - l_orbit.t_max) / l_orbit.t_max < 1e-4

    def test_matches_adaptive_reference(self, l_orbit):
        t, u_ref, _ = classical.integrate_orbit_reference(get_preset("L"))
        inside = t <= l_orbit.times[-1]
        u_vv, _ = l_orbit.interpolate(t[inside])
        assert np.max(np.abs(u_vv - u_ref[inside])) < 1e-7

    def test_t_d_crossing(self, l_orbit):
        # interpolated position at t_d equals d
        u_at_td, _ = l_orbit.interpolate(l_orbit.t_d)
        assert u_at_td == pytest.approx(1.0, abs=1e-8)

    def test_oversized_step_rejected(self):
        with pytest.raises(DomainError):
            classical.integrate_orbit(get_preset("L"), dt=0.1)

    def test_momentum_conversion(self, l_orbit):
        config = get_preset("L")
        np.testing.assert_allclose(
            l_orbit.p_zpf_units,
            l_orbit.v * config.d_zpf / config.frequency_ratio)


class TestPeriodFormula:
    def test_value(self):
        config = get_preset("L")
        assert classical.period_approx(config) == pytest.approx(4.0355, abs=1e-3)

    def test_halving_start_adds_log2(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            c1 = ExperimentConfig(100.0, 1.0, 1e4, 0.1)
            c2 = ExperimentConfig(100.0, 1.0, 1e4, 0.05)
        assert (classical.period_approx(c2) - classical.period_approx(c1)
                == pytest.approx(math.log(2.0), rel=1e-12))

    def test_formula_inversion_outside_validity(self):
        # omega t_max = 1 would require x0/d = 4 sqrt(2)/e ~ 2.08 > 1:
        # outside the domain, and the formula guards against it
        from dwell.params import period_formula
        u0_for_unit_time = 4.0 * math.sqrt(2.0) / math.e
        assert u0_for_unit_time > 1.0
        with pytest.raises(DomainError):
            period_formula(u0_for_unit_time)


class TestExports:
    def test_csv_and_events_roundtrip(self, tmp_path, l_orbit):
        csv_path = tmp_path / "orbit.csv"
        l_orbit.export_csv(csv_path, stride=100)
        header = csv_path.read_text().splitlines()[0]
        assert header.split(",") == ["t_omega_dw", "x_over_d", "p_over_m_omega_d",
                                     "x_over_xzpf", "p_over_pzpf"]
        events_path = tmp_path / "events.json"
        l_orbit.export_events_json(events_path)
        import json
        events = json.loads(events_path.read_text())
        assert events["t_max"] == pytest.approx(l_orbit.t_max)
        assert "config_hash" in events

    def test_csv_deterministic(self, tmp_path, l_orbit):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        l_orbit.export_csv(p1, stride=500)
        l_orbit.export_csv(p2, stride=500)
        assert p1.read_bytes() == p2.read_bytes()

    def test_interpolation_outside_span_rejected(self, l_orbit):
        with pytest.raises(DomainError):
            l_orbit.interpolate(l_orbit.times[-1] + 1.0)
