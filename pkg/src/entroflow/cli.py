"""Command-line front end: simulate, rescaled, crosscheck, verify, plots.

Configuration is a JSON object with exactly the RunConfig keys; command-line
flags override file values and unknown keys are rejected.  Exit codes:
0 success, 1 validation failure, 2 flow breakdown, 3 monitor/residual
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from . import graph, verify
from .diagnostics import fit_decay_rate, run_monitors, write_csv
from .errors import (ConfigError, CurveIngestionError, EntroflowError,
                     FlowBreakdownError, NotLocallyConvexError)
from .flow import (VARIANTS, FlowState, StepperConfig, evolve, write_snapshot)
from .spectral import PeriodicGrid
from .support import (SupportGrid, circle_support, ellipse_support,
                      fourier_support, read_curve_file, read_support_file,
                      reconstruct, support_from_curve)


class ExitStatus(IntEnum):
    OK = 0
    VALIDATION = 1
    BREAKDOWN = 2
    MONITOR = 3
    IO = 4


_STEPPER_KEYS = {"dt_init", "safety", "max_dt", "guard_ratio", "scheme",
                 "stabilization_coeff"}
_CONFIG_KEYS = {"omega", "n", "variant", "initial", "t_end", "stepper",
                "monitor_every", "output_dir", "seed"}
_INITIAL_KINDS = {
    "circle": {"r"},
    "ellipse": {"a", "b"},
    "fourier": {"constant", "modes"},
    "curve_file": {"path"},
    "support_file": {"path"},
}


@dataclass
class RunConfig:
    omega: int = 1
    n: int = 48
    variant: str = "unscaled"
    initial: dict = field(default_factory=lambda: {"kind": "circle", "r": 1.0})
    t_end: float = 1.0
    stepper: StepperConfig = field(default_factory=StepperConfig)
    monitor_every: float = 0.01
    output_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.omega < 1 or int(self.omega) != self.omega:
            raise ConfigError("omega must be a positive integer")
        kind = self.initial.get("kind")
        if kind not in _INITIAL_KINDS:
            raise ConfigError(f"initial.kind must be one of {sorted(_INITIAL_KINDS)}")
        extra = set(self.initial) - _INITIAL_KINDS[kind] - {"kind"}
        if extra:
            raise ConfigError(f"unknown initial keys {sorted(extra)}")
        missing = _INITIAL_KINDS[kind] - set(self.initial)
        if missing:
            raise ConfigError(f"initial.{kind} requires keys {sorted(missing)}")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        extra = set(data) - _CONFIG_KEYS
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        kwargs = dict(data)
        if "stepper" in kwargs:
            sdata = kwargs["stepper"]
            sextra = set(sdata) - _STEPPER_KEYS
            if sextra:
                raise ConfigError(f"unknown stepper keys {sorted(sextra)}")
            kwargs["stepper"] = StepperConfig(**sdata)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["stepper"]["max_dt"]):
            d["stepper"]["max_dt"] = 1e308
        return d

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_initial_support(cfg: RunConfig) -> SupportGrid:
    grid = PeriodicGrid(omega=cfg.omega, n=cfg.n)
    init = cfg.initial
    kind = init["kind"]
    if kind == "circle":
        return circle_support(grid, init["r"])
    if kind == "ellipse":
        if cfg.omega != 1:
            raise ConfigError("ellipse initial data requires omega = 1")
        return ellipse_support(grid, init["a"], init["b"])
    if kind == "fourier":
        return fourier_support(grid, init["constant"],
                               [tuple(m) for m in init["modes"]])
    if kind == "curve_file":
        pts = read_curve_file(init["path"])
        return support_from_curve(pts, cfg.omega, n=cfg.n)
    if kind == "support_file":
        s = read_support_file(init["path"], cfg.omega)
        if s.n != cfg.n:
            raise ConfigError(
                f"support file has {s.n} lines but config requests n={cfg.n}")
        return s
    raise ConfigError(f"unhandled initial kind {kind}")


def _emit_artifacts(cfg: RunConfig, tr, outdir: Path):
    write_csv(tr.records, outdir / "diagnostics.csv")
    for i, st in enumerate(tr.states):
        write_snapshot(outdir / f"snapshot_{i:06d}.txt", st)
        pts = reconstruct(st.support).points
        np.savetxt(outdir / f"points_{i:06d}.txt", pts, fmt="%.17g")
    cfg.write_json(outdir / "effective_config.json")


def cmd_simulate(cfg: RunConfig) -> ExitStatus:
    outdir = Path(cfg.output_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output dir: {exc}", file=sys.stderr)
        return ExitStatus.IO
    try:
        s0 = build_initial_support(cfg)
    except (NotLocallyConvexError, CurveIngestionError, ConfigError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return ExitStatus.VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return ExitStatus.IO
    state = FlowState(support=s0, time=0.0, variant=cfg.variant)
    try:
        tr = evolve(state, cfg.t_end, cfg.stepper, monitor_every=cfg.monitor_every)
    except FlowBreakdownError as exc:
        print(f"flow breakdown: {exc}", file=sys.stderr)
        if exc.last_state is not None:
            write_snapshot(outdir / "breakdown_state.txt", exc.last_state)
        return ExitStatus.BREAKDOWN
    _emit_artifacts(cfg, tr, outdir)
    report = run_monitors(tr)
    report.to_json(outdir / "monitors.json")
    return ExitStatus.OK if report.passed else ExitStatus.MONITOR


def cmd_rescaled(cfg: RunConfig) -> ExitStatus:
    if cfg.variant == "unscaled":
        print("error: rescaled command requires a rescaled variant",
              file=sys.stderr)
        return ExitStatus.VALIDATION
    status = cmd_simulate(cfg)
    if status not in (ExitStatus.OK, ExitStatus.MONITOR):
        return status
    # decay-rate fits and final roundness on top of the plain artifacts
    outdir = Path(cfg.output_dir)
    from .diagnostics import read_csv
    recs = read_csv(outdir / "diagnostics.csv")
    t = np.array([r.t for r in recs])
    rates = {}
    for p in (1, 2, 3, 4):
        series = np.array([r.h_seminorms[p] for r in recs])
        rate, used = fit_decay_rate(t, series)
        rates[f"h{p}"] = {"rate": rate, "records_used": used}
    from .flow import read_snapshot
    last = read_snapshot(sorted(outdir.glob("snapshot_*.txt"))[-1])
    h = last.support.values
    payload = {"fitted_decay_rates": rates,
               "final_sup_deviation_from_mean": float(np.max(np.abs(h - h.mean())))}
    with open(outdir / "decay_rates.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status


def cmd_crosscheck(cfg: RunConfig, draws: int = 20) -> ExitStatus:
    outdir = Path(cfg.output_dir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output dir: {exc}", file=sys.stderr)
        return ExitStatus.IO
    kind = cfg.initial.get("kind")
    try:
        if kind == "circle":
            base = graph.scene_circle(cfg.initial["r"], cfg.n)
        elif kind == "ellipse":
            base = graph.scene_ellipse(cfg.initial["a"], cfg.initial["b"], cfg.n)
        else:
            print("error: crosscheck supports circle or ellipse bases",
                  file=sys.stderr)
            return ExitStatus.VALIDATION
        s0 = build_initial_support(cfg)
    except (EntroflowError, OSError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return ExitStatus.VALIDATION

    rows = []

    def add(name, value, threshold):
        rows.append((name, value, threshold, value <= threshold))

    b0 = graph.build_bundle(base)
    add("bundle_rho0", b0.max_direct_residual, 1e-8)
    sp0 = graph.operator_split(base)
    add("split_rho0", sp0.residual, 1e-8)
    if kind == "circle":
        half = base.with_rho(np.full(cfg.n, 0.5 * cfg.initial["r"]))
        v = graph.velocity_graph(half)
        expect = 1.0 / (1.5 * cfg.initial["r"])
        add("concentric_velocity", float(np.max(np.abs(v - expect))), 1e-10)
    for i in range(draws):
        sc = base.with_rho(graph.band_limited_rho(base, seed=cfg.seed * 1000 + i))
        add(f"bundle_seed{i}", graph.build_bundle(sc).max_direct_residual, 1e-8)
        add(f"split_seed{i}", graph.operator_split(sc).residual, 1e-8)
    add("parametrization_identity", graph.check_parametrization_identity(s0), 1e-9)

    with open(outdir / "crosscheck.csv", "w") as fh:
        fh.write("check,residual,threshold,pass\n")
        for name, value, threshold, ok in rows:
            fh.write(f"{name},{value:.17g},{threshold:.3g},{int(ok)}\n")
    cfg.write_json(outdir / "effective_config.json")
    bad = [r for r in rows if not r[3]]
    for name, value, threshold, _ in bad:
        print(f"residual failure: {name} = {value:.3e} > {threshold:.1e}",
              file=sys.stderr)
    return ExitStatus.OK if not bad else ExitStatus.MONITOR


def cmd_verify(suite: str) -> ExitStatus:
    try:
        results = verify.run_suite(suite)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ExitStatus.VALIDATION
    return ExitStatus.OK if all(r.passed for r in results) else ExitStatus.MONITOR


GNUPLOT_TEMPLATE = """\
# gnuplot script generated by entroflow; run: gnuplot -p {name}
set datafile separator ','
set key autotitle columnhead
set xlabel 't'
set logscale y
plot '{csv}' using 1:5 with lines title '||F||_2^2', \\
     '{csv}' using 1:7 with lines title '||h_theta||_2^2', \\
     '{csv}' using 1:11 with lines title 'int sigma^2'
"""


def cmd_plots(csv_path: str, out_path: str) -> ExitStatus:
    csv = Path(csv_path)
    if not csv.exists():
        print(f"error: {csv} not found", file=sys.stderr)
        return ExitStatus.IO
    script = Path(out_path)
    script.write_text(GNUPLOT_TEMPLATE.format(name=script.name, csv=csv))
    return ExitStatus.OK


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="entroflow",
        description="support-function flow laboratory for convex planar curves")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--t-end", type=float, dest="t_end")
        p.add_argument("--variant", choices=VARIANTS)

    for name in ("simulate", "rescaled", "crosscheck"):
        common(sub.add_parser(name))
    pv = sub.add_parser("verify")
    pv.add_argument("suite", choices=sorted(verify.SUITES))
    pp = sub.add_parser("plots")
    pp.add_argument("csv")
    pp.add_argument("--out", default="plots.gp")
    return ap


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_json(args.config) if args.config else RunConfig()
    if args.out is not None:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.n is not None:
        cfg.n = args.n
    if args.t_end is not None:
        cfg.t_end = args.t_end
    if args.variant is not None:
        cfg.variant = args.variant
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "verify":
        return int(cmd_verify(args.suite))
    if args.command == "plots":
        return int(cmd_plots(args.csv, args.out))
    try:
        cfg = _load_config(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return int(ExitStatus.VALIDATION)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return int(ExitStatus.IO)
    if args.command == "simulate":
        return int(cmd_simulate(cfg))
    if args.command == "rescaled":
        if cfg.variant == "unscaled":
            cfg.variant = "rescaled_chainrule"
        return int(cmd_rescaled(cfg))
    if args.command == "crosscheck":
        return int(cmd_crosscheck(cfg))
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
