import json
import math

import numpy as np
import pytest

from entroflow.cli import ExitStatus, RunConfig, build_initial_support, main
from entroflow.errors import ConfigError


def fast_config(tmp_path, **over):
    data = {
        "omega": 1, "n": 16,
        "variant": "unscaled",
        "initial": {"kind": "circle", "r": 1.0},
        "t_end": 0.05,
        "stepper": {"dt_init": 1e-3, "safety": 0.9, "max_dt": 1e308,
                    "guard_ratio": 0.2, "scheme": "explicit_rk4",
                    "stabilization_coeff": 1.0},
        "monitor_every": 0.01,
        "output_dir": str(tmp_path / "out"),
        "seed": 0,
    }
    data.update(over)
    return data


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


class TestConfig:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"omega": 1, "bogus": 2})

    def test_unknown_stepper_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"stepper": {"dt": 1.0}})

    def test_unknown_initial_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"initial": {"kind": "circle", "r": 1, "x": 2}})

    def test_round_trip(self, tmp_path):
        cfg = RunConfig.from_dict(fast_config(tmp_path))
        p = tmp_path / "eff.json"
        cfg.write_json(p)
        cfg2 = RunConfig.from_json(p)
        assert cfg2.to_dict() == cfg.to_dict()

    def test_initial_builders(self, tmp_path):
        cfg = RunConfig.from_dict(fast_config(
            tmp_path, initial={"kind": "ellipse", "a": 1.3, "b": 1.0}))
        s = build_initial_support(cfg)
        assert s.n == 16
        cfg = RunConfig.from_dict(fast_config(
            tmp_path, initial={"kind": "fourier", "constant": 1.0,
                               "modes": [[2, 0.1, 0.0]]}))
        assert build_initial_support(cfg).values[0] == pytest.approx(1.1)


class TestSimulate:
    def test_circle_run_artifacts(self, tmp_path):
        cfgp = write_config(tmp_path, fast_config(tmp_path))
        assert main(["simulate", "--config", str(cfgp)]) == 0
        out = tmp_path / "out"
        assert (out / "diagnostics.csv").exists()
        assert (out / "monitors.json").exists()
        assert (out / "effective_config.json").exists()
        snaps = sorted(out.glob("snapshot_*.txt"))
        assert len(snaps) == 6
        lines = snaps[-1].read_text().splitlines()
        assert lines[0] == "# omega=1"
        assert lines[1] == "# n=16"
        h = float(lines[4])
        assert h == pytest.approx(math.sqrt(1 + 2 * 0.05), abs=1e-10)
        pts = np.loadtxt(out / "points_000005.txt")
        assert pts.shape == (16, 2)

    def test_invalid_initial_exit1(self, tmp_path):
        data = fast_config(tmp_path, initial={
            "kind": "fourier", "constant": 1.0, "modes": [[2, 0.8, 0.0]]})
        cfgp = write_config(tmp_path, data)
        assert main(["simulate", "--config", str(cfgp)]) == 1

    def test_unknown_config_key_exit1(self, tmp_path):
        data = fast_config(tmp_path)
        data["typo"] = True
        cfgp = write_config(tmp_path, data)
        assert main(["simulate", "--config", str(cfgp)]) == 1

    def test_missing_curve_file_exit4(self, tmp_path):
        data = fast_config(tmp_path, initial={"kind": "curve_file",
                                              "path": str(tmp_path / "nope.txt")})
        cfgp = write_config(tmp_path, data)
        assert main(["simulate", "--config", str(cfgp)]) == 4

    def test_flag_overrides(self, tmp_path):
        cfgp = write_config(tmp_path, fast_config(tmp_path))
        out2 = tmp_path / "other"
        assert main(["simulate", "--config", str(cfgp), "--out", str(out2),
                     "--n", "32", "--t-end", "0.02"]) == 0
        eff = json.loads((out2 / "effective_config.json").read_text())
        assert eff["n"] == 32
        assert eff["t_end"] == 0.02

    def test_determinism(self, tmp_path):
        a = fast_config(tmp_path, n=32, monitor_every=1e-3,
                        output_dir=str(tmp_path / "a"),
                        initial={"kind": "ellipse", "a": 1.3, "b": 1.0})
        b = dict(a, output_dir=str(tmp_path / "b"))
        assert main(["simulate", "--config", str(write_config(tmp_path, a, "a.json"))]) == 0
        assert main(["simulate", "--config", str(write_config(tmp_path, b, "b.json"))]) == 0
        csv_a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
        csv_b = (tmp_path / "b" / "diagnostics.csv").read_bytes()
        assert csv_a == csv_b
        mon_a = (tmp_path / "a" / "monitors.json").read_bytes()
        mon_b = (tmp_path / "b" / "monitors.json").read_bytes()
        assert mon_a == mon_b

    def test_support_file_initial(self, tmp_path):
        sup = tmp_path / "h.txt"
        sup.write_text("".join("1.0\n" for _ in range(16)))
        data = fast_config(tmp_path,
                           initial={"kind": "support_file", "path": str(sup)})
        cfgp = write_config(tmp_path, data)
        assert main(["simulate", "--config", str(cfgp)]) == 0

    def test_curve_file_initial(self, tmp_path):
        # the polygonal sup carries O((pi/m)^2) noise that fourth-derivative
        # diagnostics amplify, so the polyline must be dense
        phi = np.arange(32768) * 2 * math.pi / 32768
        pts = np.stack([1.3 * np.cos(phi), np.sin(phi)], axis=1)
        cf = tmp_path / "curve.txt"
        np.savetxt(cf, pts)
        data = fast_config(tmp_path, n=32, monitor_every=1e-3,
                           initial={"kind": "curve_file", "path": str(cf)})
        cfgp = write_config(tmp_path, data)
        assert main(["simulate", "--config", str(cfgp)]) == 0


class TestRescaled:
    def test_rescaled_paper_stationary(self, tmp_path):
        data = fast_config(tmp_path, variant="rescaled_paper", t_end=0.2,
                           monitor_every=0.05)
        data["stepper"]["scheme"] = "semi_implicit"
        data["stepper"]["max_dt"] = 1e-3
        cfgp = write_config(tmp_path, data)
        assert main(["rescaled", "--config", str(cfgp)]) == 0
        out = tmp_path / "out"
        assert (out / "decay_rates.json").exists()
        last = sorted(out.glob("snapshot_*.txt"))[-1]
        vals = [float(x) for x in last.read_text().splitlines()[4:]]
        assert max(abs(v - 1.0) for v in vals) < 1e-12

    def test_chainrule_fixed_point(self, tmp_path):
        data = fast_config(tmp_path, variant="rescaled_chainrule", t_end=0.01,
                           monitor_every=0.002,
                           initial={"kind": "circle", "r": 1.0 / (2 * math.pi)})
        cfgp = write_config(tmp_path, data)
        assert main(["rescaled", "--config", str(cfgp)]) == 0
        last = sorted((tmp_path / "out").glob("snapshot_*.txt"))[-1]
        vals = [float(x) for x in last.read_text().splitlines()[4:]]
        assert max(abs(v - 1 / (2 * math.pi)) for v in vals) < 1e-12

    def test_unscaled_variant_rejected(self, tmp_path):
        data = fast_config(tmp_path)
        cfgp = write_config(tmp_path, data)
        cfg = RunConfig.from_json(cfgp)
        from entroflow.cli import cmd_rescaled
        assert cmd_rescaled(cfg) == ExitStatus.VALIDATION


class TestCrosscheck:
    def test_circle_base(self, tmp_path):
        data = fast_config(tmp_path, n=64)
        cfgp = write_config(tmp_path, data)
        assert main(["crosscheck", "--config", str(cfgp), "--seed", "3"]) == 0
        table = (tmp_path / "out" / "crosscheck.csv").read_text().splitlines()
        assert table[0] == "check,residual,threshold,pass"
        assert any(row.startswith("concentric_velocity") for row in table)
        assert all(row.rsplit(",", 1)[1] == "1" for row in table[1:])

    def test_ellipse_base(self, tmp_path):
        # the 1e-8 residual thresholds presume the n = 256 working resolution
        data = fast_config(tmp_path, n=256,
                           initial={"kind": "ellipse", "a": 2.0, "b": 1.0})
        cfgp = write_config(tmp_path, data)
        assert main(["crosscheck", "--config", str(cfgp)]) == 0

    def test_unsupported_base(self, tmp_path):
        data = fast_config(tmp_path, initial={
            "kind": "fourier", "constant": 1.0, "modes": [[2, 0.1, 0.0]]})
        cfgp = write_config(tmp_path, data)
        assert main(["crosscheck", "--config", str(cfgp)]) == 1


class TestVerifyAndPlots:
    def test_verify_circle_suite(self, capsys):
        assert main(["verify", "circle"]) == 0
        out = capsys.readouterr().out
        assert "PASS criterion-01" in out

    def test_plots(self, tmp_path):
        cfgp = write_config(tmp_path, fast_config(tmp_path))
        main(["simulate", "--config", str(cfgp)])
        csv = tmp_path / "out" / "diagnostics.csv"
        gp = tmp_path / "plots.gp"
        assert main(["plots", str(csv), "--out", str(gp)]) == 0
        assert "gnuplot" in gp.read_text()

    def test_plots_missing_csv(self, tmp_path):
        assert main(["plots", str(tmp_path / "nope.csv")]) == 4
