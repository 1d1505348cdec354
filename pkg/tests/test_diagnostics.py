import math

import numpy as np
import pytest
from scipy.integrate import quad

from entroflow.diagnostics import (area, compute_record, entropy,
                                   length, logk_dirichlet, noise_floor,
                                   fit_decay_rate, read_csv, run_monitors,
                                   seminorm, velocity_l2sq, write_csv,
                                   CSV_HEADER)
from entroflow.errors import NotApplicableError
from entroflow.flow import FlowState, StepperConfig, evolve
from entroflow.spectral import GridFunction, PeriodicGrid, integrate
from entroflow.support import SupportGrid, circle_support, ellipse_support


def support(fn, omega=1, n=64):
    g = PeriodicGrid(omega=omega, n=n)
    return SupportGrid(GridFunction(g, fn(g.nodes)))


def two_mode(n=64):
    return support(lambda th: 1 + 0.2 * np.cos(2 * th), n=n)


class TestFunctionals:
    def test_entropy_unit_circle(self):
        assert entropy(circle_support(PeriodicGrid(1, 32), 1.0)) == pytest.approx(
            0.0, abs=1e-13)

    def test_entropy_radius_two(self):
        # constant k = 1/2: integral of log k = -2 pi log 2
        val = entropy(circle_support(PeriodicGrid(1, 32), 2.0))
        assert val == pytest.approx(-2 * math.pi * math.log(2), abs=1e-12)

    def test_entropy_two_mode_closed_form(self):
        # integral of log(1 - c cos x) over a period is 2 pi log((1+sqrt(1-c^2))/2);
        # with w = 1 - 0.6 cos 2theta this gives entropy = -2 pi log 0.9
        val = entropy(two_mode())
        assert val == pytest.approx(-2 * math.pi * math.log(0.9), abs=1e-12)

    def test_entropy_ellipse_quadrature_oracle(self):
        s = ellipse_support(PeriodicGrid(1, 256), 2.0, 1.0)
        # independent quadrature: 1/k = h'' + h = a^2 b^2 / h^3 for the ellipse
        h = lambda t: math.sqrt(4 * math.cos(t)**2 + math.sin(t)**2)
        oracle, err = quad(lambda t: math.log(h(t)**3 / 4.0), 0.0, 2 * math.pi,
                           limit=400, epsabs=1e-13, epsrel=1e-13)
        assert err < 1e-9
        assert entropy(s) == pytest.approx(oracle, abs=1e-10)

    def test_length(self):
        assert length(circle_support(PeriodicGrid(3, 24), 2.0)) == pytest.approx(
            12 * math.pi)
        assert length(two_mode()) == pytest.approx(2 * math.pi, abs=1e-12)

    def test_length_ellipse_elliptic_integral(self):
        # frozen from 4 a E(m), m = 1 - b^2/a^2 (scipy.special.ellipe)
        s = ellipse_support(PeriodicGrid(1, 256), 2.0, 1.0)
        assert length(s) == pytest.approx(9.688448220547675, abs=1e-10)

    def test_area(self):
        assert area(circle_support(PeriodicGrid(1, 32), 1.0)) == pytest.approx(
            math.pi)
        assert area(circle_support(PeriodicGrid(1, 32), 3.0)) == pytest.approx(
            9 * math.pi)
        # 0.5*(2.04 pi - 0.16 pi) = 0.94 pi
        assert area(two_mode()) == pytest.approx(0.94 * math.pi, abs=1e-12)

    def test_area_needs_omega1(self):
        with pytest.raises(NotApplicableError):
            area(circle_support(PeriodicGrid(2, 32), 1.0))

    def test_velocity_l2sq_circles(self):
        assert velocity_l2sq(circle_support(PeriodicGrid(1, 32), 2.0)) == \
            pytest.approx(2 * math.pi / 4, abs=1e-12)
        assert velocity_l2sq(circle_support(PeriodicGrid(3, 24), 1.0)) == \
            pytest.approx(6 * math.pi, abs=1e-12)

    def test_velocity_l2sq_two_mode_quadrature(self):
        # frozen adaptive-quadrature value of int (k'' + k)^2 for
        # k = 1/(1 - 0.6 cos 2theta)
        assert velocity_l2sq(two_mode(n=128)) == pytest.approx(
            133.0728333490793, rel=1e-10)

    def test_seminorms(self):
        c = circle_support(PeriodicGrid(1, 32), 2.0)
        assert seminorm(c, 0) == pytest.approx(8 * math.pi)
        for p in (1, 2, 3, 4):
            assert abs(seminorm(c, p)) < 1e-20
        assert seminorm(two_mode(), 2) == pytest.approx(0.64 * math.pi, abs=1e-12)
        with pytest.raises(ValueError):
            seminorm(c, 9)

    def test_seminorm_matches_parseval(self):
        s = support(lambda th: 1 + 0.1 * np.cos(2 * th) + 0.02 * np.sin(5 * th))
        n = s.n
        c = np.fft.rfft(s.values)
        xi = s.grid.wavenumbers
        w = np.full(n // 2 + 1, 2.0)
        w[0] = w[-1] = 1.0
        for p in range(5):
            parseval = s.grid.period / n**2 * np.sum(w * (xi**p * np.abs(c))**2)
            direct = seminorm(s, p)
            assert direct == pytest.approx(parseval, rel=1e-10, abs=1e-18)

    def test_logk_dirichlet(self):
        assert logk_dirichlet(circle_support(PeriodicGrid(1, 32), 2.0)) < 1e-22
        # closed form: int (1.2 sin 2t)^2/(1-0.6 cos 2t)^2 dt = 2 pi exactly
        assert logk_dirichlet(two_mode(n=128)) == pytest.approx(
            2 * math.pi, rel=1e-10)

    def test_logk_scale_invariance(self):
        s = two_mode()
        for lam in (0.3, 7.5):
            s2 = SupportGrid(GridFunction(s.grid, lam * s.values))
            assert logk_dirichlet(s2) == pytest.approx(logk_dirichlet(s),
                                                       rel=1e-12)

    def test_scale_behavior(self):
        s = two_mode()
        lam = 1.7
        s2 = SupportGrid(GridFunction(s.grid, lam * s.values))
        assert length(s2) == pytest.approx(lam * length(s), rel=1e-13)
        assert area(s2) == pytest.approx(lam**2 * area(s), rel=1e-13)
        assert entropy(s2) - entropy(s) == pytest.approx(
            -2 * math.pi * math.log(lam), rel=1e-12)


class TestRecordsAndCsv:
    def test_record_fields(self):
        s = two_mode()
        r = compute_record(s, 0.5, 1e-4)
        assert r.t == 0.5
        assert r.kmin == pytest.approx(0.625)
        assert r.kmax == pytest.approx(2.5)
        assert r.margin == pytest.approx(0.4)
        assert r.area == pytest.approx(0.94 * math.pi)
        assert len(r.h_seminorms) == 5

    def test_csv_round_trip(self, tmp_path):
        s = two_mode()
        recs = [compute_record(s, t, 1e-4) for t in (0.0, 0.1)]
        p = tmp_path / "d.csv"
        write_csv(recs, p)
        with open(p) as fh:
            assert fh.readline().strip() == CSV_HEADER
        back = read_csv(p)
        assert back[1].t == recs[1].t
        assert back[0].h_seminorms == pytest.approx(recs[0].h_seminorms)

    def test_csv_area_empty_for_omega2(self, tmp_path):
        s = circle_support(PeriodicGrid(2, 16), 1.0)
        recs = [compute_record(s, 0.0, 0.0)]
        p = tmp_path / "d.csv"
        write_csv(recs, p)
        line = open(p).readlines()[1]
        assert ",," in line
        assert read_csv(p)[0].area is None


class TestMonitors:
    def test_circle_run_all_pass(self):
        st = FlowState(support=circle_support(PeriodicGrid(1, 16), 1.0))
        tr = evolve(st, 0.5, StepperConfig(), monitor_every=0.01)
        rep = run_monitors(tr)
        assert rep.passed
        statuses = {c.name: c.status for c in rep.checks}
        assert statuses["M1"] == "pass"
        assert statuses["M8"] == "pass"

    def test_omega2_area_not_applicable(self):
        st = FlowState(support=circle_support(PeriodicGrid(2, 16), 1.0))
        tr = evolve(st, 0.2, StepperConfig(), monitor_every=0.01)
        rep = run_monitors(tr)
        assert rep["M8"].status == "not-applicable"
        assert rep.passed

    def test_ellipse_dissipation_residual(self):
        s = ellipse_support(PeriodicGrid(1, 48), 1.3, 1.0)
        tr = evolve(FlowState(support=s), 0.05, StepperConfig(),
                    monitor_every=1e-3)
        rep = run_monitors(tr)
        assert rep["M1"].status == "pass"
        assert rep["M1"].slack <= 1e-3

    def test_two_records_not_applicable(self):
        st = FlowState(support=circle_support(PeriodicGrid(1, 16), 1.0))
        tr = evolve(st, 0.1, StepperConfig())
        rep = run_monitors(tr)
        assert all(c.status == "not-applicable" for c in rep.checks)

    def test_rescaled_monitors(self):
        g = PeriodicGrid(1, 32)
        s = ellipse_support(g, 1.3, 1.0)
        L0 = integrate(s.h)
        s_norm = SupportGrid(GridFunction(g, s.values / L0))
        cfg = StepperConfig(scheme="semi_implicit", dt_init=5e-4, max_dt=2e-3)
        tr = evolve(FlowState(support=s_norm, variant="rescaled_chainrule"),
                    0.5, cfg, monitor_every=5e-3)
        rep = run_monitors(tr)
        assert rep["M12-length"].status == "pass"
        assert rep["M12-convexity"].status == "pass"
        for p in (1, 2, 3, 4):
            assert rep[f"M12-decay-h{p}"].status == "pass"

    def test_unnormalized_rescaled_bracket_not_applicable(self):
        # bracket facts presume unit initial rescaled length
        s = ellipse_support(PeriodicGrid(1, 32), 1.3, 1.0)
        cfg = StepperConfig(scheme="semi_implicit", dt_init=5e-4, max_dt=2e-3)
        tr = evolve(FlowState(support=s, variant="rescaled_chainrule"),
                    0.05, cfg, monitor_every=5e-3)
        rep = run_monitors(tr)
        assert rep["M12-length"].status == "not-applicable"
        assert rep["M12-convexity"].status == "not-applicable"
        assert rep.passed

    def test_report_json(self, tmp_path):
        st = FlowState(support=circle_support(PeriodicGrid(1, 16), 1.0))
        tr = evolve(st, 0.2, StepperConfig(), monitor_every=0.01)
        rep = run_monitors(tr)
        p = tmp_path / "monitors.json"
        rep.to_json(p)
        import json
        data = json.loads(open(p).read())
        assert data["M1"]["status"] == "pass"
        assert set(data["M1"]) == {"status", "slack", "worst_t", "note"}


class TestFitting:
    def test_fit_decay_rate_clean_exponential(self):
        t = np.linspace(0, 5, 200)
        v = 3.0 * np.exp(-2.0 * t)
        rate, used = fit_decay_rate(t, v)
        assert rate == pytest.approx(2.0, rel=1e-8)
        assert used >= 5

    def test_fit_ignores_plateau(self):
        t = np.linspace(0, 10, 400)
        v = np.maximum(np.exp(-3.0 * t), 1e-12)
        rate, _ = fit_decay_rate(t, v)
        assert rate == pytest.approx(3.0, rel=1e-2)

    def test_noise_floor_of_live_series(self):
        v = np.exp(-np.linspace(0, 3, 50))
        assert noise_floor(v) < np.min(v)
