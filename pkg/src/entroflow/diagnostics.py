"""Monitored functionals of the flow and the identity/inequality checks.

Every scalar the analysis controls is computed spectrally from a support
grid; run_monitors then re-checks the proved identities and inequalities on
a recorded trajectory, using centered differences on the record cadence so
the checks stay independent of the time stepper.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotApplicableError
from .spectral import deriv, integrate
from .support import SupportGrid, curvature, radius_of_curvature_values

SMALLNESS_FRACTION = 22.0  # threshold 1/(22*omega*pi) for the sigma energy


def entropy(s: SupportGrid) -> float:
    """integral of log k dtheta."""
    k = curvature(s)
    return integrate(k.copy_with(np.log(k.values)))


def length(s: SupportGrid) -> float:
    """integral of h dtheta (= integral of 1/k dtheta by periodicity)."""
    return integrate(s.h)


def area(s: SupportGrid) -> float:
    """Enclosed area (embedded interpretation), A = 1/2 integral h*(h_thth+h)."""
    if s.omega != 1:
        raise NotApplicableError("area is defined for omega = 1 only")
    w = radius_of_curvature_values(s.h)
    return 0.5 * integrate(s.h.copy_with(s.values * w))


def velocity_l2sq(s: SupportGrid) -> float:
    """integral of F^2 dtheta with F = k_thth + k."""
    k = curvature(s)
    f = deriv(k, 2).values + k.values
    return integrate(k.copy_with(f * f))


def seminorm(s: SupportGrid, p: int) -> float:
    """integral of (d^p h / dtheta^p)^2 dtheta for 0 <= p <= 8."""
    if not 0 <= p <= 8:
        raise ValueError("seminorm order p must satisfy 0 <= p <= 8")
    d = deriv(s.h, p).values
    return integrate(s.h.copy_with(d * d))


def logk_dirichlet(s: SupportGrid) -> float:
    """Scale-invariant integral of (k_theta)^2 / k^2 dtheta."""
    k = curvature(s)
    kp = deriv(k, 1).values
    return integrate(k.copy_with((kp / k.values) ** 2))


@dataclass
class DiagnosticsRecord:
    t: float
    entropy: float
    length: float
    area: float | None
    f_l2sq: float
    h_seminorms: tuple
    logk_dirichlet: float
    kmin: float
    kmax: float
    kgrad_inf: float
    k_l1: float
    margin: float
    dt_used: float


def compute_record(s: SupportGrid, t: float, dt_used: float) -> DiagnosticsRecord:
    k = curvature(s)
    kv = k.values
    f = deriv(k, 2).values + kv
    kp = deriv(k, 1).values
    return DiagnosticsRecord(
        t=t,
        entropy=integrate(k.copy_with(np.log(kv))),
        length=integrate(s.h),
        area=(area(s) if s.omega == 1 else None),
        f_l2sq=integrate(k.copy_with(f * f)),
        h_seminorms=tuple(seminorm(s, p) for p in range(5)),
        logk_dirichlet=integrate(k.copy_with((kp / kv) ** 2)),
        kmin=float(np.min(kv)),
        kmax=float(np.max(kv)),
        kgrad_inf=float(np.max(np.abs(kp))),
        k_l1=integrate(k),
        margin=float(np.min(radius_of_curvature_values(s.h))),
        dt_used=dt_used,
    )


CSV_HEADER = ("t,entropy,length,area,f_l2sq,h0,h1,h2,h3,h4,"
              "logk_dirichlet,kmin,kmax,kgrad_inf,k_l1,margin,dt")


def write_csv(records, path):
    """Full-double-precision CSV time series; area empty when omega != 1."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            a = "" if r.area is None else f"{r.area:.17g}"
            cols = [f"{r.t:.17g}", f"{r.entropy:.17g}", f"{r.length:.17g}", a,
                    f"{r.f_l2sq:.17g}"]
            cols += [f"{v:.17g}" for v in r.h_seminorms]
            cols += [f"{r.logk_dirichlet:.17g}", f"{r.kmin:.17g}",
                     f"{r.kmax:.17g}", f"{r.kgrad_inf:.17g}", f"{r.k_l1:.17g}",
                     f"{r.margin:.17g}", f"{r.dt_used:.17g}"]
            fh.write(",".join(cols) + "\n")


def read_csv(path):
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header in {path}")
        for line in fh:
            parts = line.strip().split(",")
            records.append(DiagnosticsRecord(
                t=float(parts[0]), entropy=float(parts[1]), length=float(parts[2]),
                area=(None if parts[3] == "" else float(parts[3])),
                f_l2sq=float(parts[4]),
                h_seminorms=tuple(float(p) for p in parts[5:10]),
                logk_dirichlet=float(parts[10]), kmin=float(parts[11]),
                kmax=float(parts[12]), kgrad_inf=float(parts[13]),
                k_l1=float(parts[14]), margin=float(parts[15]),
                dt_used=float(parts[16])))
    return records


# ---------------------------------------------------------------------------
# monitor suite

@dataclass
class CheckResult:
    name: str
    status: str           # "pass" | "fail" | "not-applicable"
    slack: float = math.nan
    worst_t: float = math.nan
    note: str = ""


@dataclass
class MonitorReport:
    checks: list = field(default_factory=list)

    def add(self, name, status, slack=math.nan, worst_t=math.nan, note=""):
        self.checks.append(CheckResult(name, status, slack, worst_t, note))

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_dict(self):
        return {c.name: {"status": c.status,
                         "slack": None if math.isnan(c.slack) else c.slack,
                         "worst_t": None if math.isnan(c.worst_t) else c.worst_t,
                         "note": c.note}
                for c in self.checks}

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _cd_first(t, x):
    """Centered first differences at interior record times (nonuniform-safe)."""
    t, x = np.asarray(t), np.asarray(x)
    return (x[2:] - x[:-2]) / (t[2:] - t[:-2])


def _cd_second(t, x):
    t, x = np.asarray(t), np.asarray(x)
    dt1 = t[1:-1] - t[:-2]
    dt2 = t[2:] - t[1:-1]
    return 2.0 * (x[:-2] * dt2 - x[1:-1] * (dt1 + dt2) + x[2:] * dt1) \
        / (dt1 * dt2 * (dt1 + dt2))


def _worst(t_interior, residual):
    j = int(np.argmax(residual))
    return float(residual[j]), float(t_interior[j])


@dataclass
class MonitorTolerances:
    identity_rel: float = 1e-3       # centered-difference identity residuals
    inequality_slack: float = 1e-6   # inequalities: violation <= slack * scale
    h2_slope_rel: float = 1e-3       # the exact (||h||^2)' = 4*omega*pi law


def _length_upper_bound(t, L0, c1, omega):
    wpi = omega * math.pi
    return L0 + 4.0 * wpi**2 / c1 * (np.sqrt(4.0 * wpi**2 + t * c1**2) - 2.0 * wpi)


def rescaled_length_cap(c1_rescaled: float, tau_max: float, omega: int) -> float:
    """sup over scale-invariant time tau of (length upper bound)/phi.

    Intrinsic form of the bound: with c1_eta = integral of k dtheta at the
    first rescaled record, the unscaled c1 satisfies c1 = c1_eta / L0 and L0
    cancels from the ratio.
    """
    wpi = omega * math.pi
    tau = np.linspace(0.0, max(tau_max, 1.0), 20001)
    upper = 1.0 + 4.0 * wpi**2 / c1_rescaled * (
        np.sqrt(4.0 * wpi**2 + tau * c1_rescaled**2) - 2.0 * wpi)
    ratio = upper / np.sqrt(1.0 + 8.0 * wpi**2 * tau)
    return float(max(np.max(ratio), math.sqrt(2.0) * wpi))


def noise_floor(values) -> float:
    """Estimate the round-off plateau of a decaying positive series.

    Sits a factor 30 above the median of the final quarter; falls back to a
    tiny relative floor when that would disqualify nearly everything (series
    still decaying at the end).
    """
    v = np.asarray(values, dtype=float)
    tail = v[-max(5, len(v) // 4):]
    floor = max(30.0 * float(np.median(tail)), float(np.max(v)) * 1e-28, 1e-300)
    if np.count_nonzero(v > floor) < 5:
        floor = max(float(np.max(v)) * 1e-28, 1e-300)
    return floor


def fit_decay_rate(t, values, floor=None):
    """Least-squares exponential rate over the last half of the series.

    Samples at or below the noise floor are excluded; if fewer than five
    remain the window is extended backwards.  The default floor sits just
    above the final plateau, so a series that has collapsed to round-off is
    fitted on its live decaying segment.  Returns (rate, n_used).
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if floor is None:
        floor = noise_floor(v)
    start = len(t) // 2
    while True:
        sel = (np.arange(len(t)) >= start) & (v > floor)
        if np.count_nonzero(sel) >= 5 or start == 0:
            break
        start = max(0, start - max(1, len(t) // 10))
    tt, vv = t[sel], v[sel]
    if len(tt) < 2 or np.ptp(tt) == 0.0:
        return math.nan, int(len(tt))
    slope = np.polyfit(tt, np.log(vv), 1)[0]
    return float(-slope), int(len(tt))


def run_monitors(tr, tol: MonitorTolerances | None = None) -> MonitorReport:
    """Evaluate every proved identity/inequality on a recorded trajectory."""
    tol = tol or MonitorTolerances()
    rep = MonitorReport()
    recs = tr.records
    if len(recs) < 3:
        for name in ("M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8", "M9",
                     "M10", "M11"):
            rep.add(name, "not-applicable", note="fewer than 3 records")
        return rep

    t = np.array([r.t for r in recs])
    ti = t[1:-1]
    omega = tr.states[0].grid.omega
    wpi = omega * math.pi
    rescaled = tr.variant != "unscaled"

    ent = np.array([r.entropy for r in recs])
    L = np.array([r.length for r in recs])
    fl2 = np.array([r.f_l2sq for r in recs])
    k1 = np.array([r.k_l1 for r in recs])
    sig = np.array([r.logk_dirichlet for r in recs])
    h0 = np.array([r.h_seminorms[0] for r in recs])
    h1 = np.array([r.h_seminorms[1] for r in recs])
    kmin = np.array([r.kmin for r in recs])
    kmax = np.array([r.kmax for r in recs])
    kginf = np.array([r.kgrad_inf for r in recs])

    # extra integrals from snapshots (needed by M4/M7)
    diss = np.empty(len(recs))  # integral of (1/2) k k_thth^2 + (1/3) k^3
    for i, st in enumerate(tr.states):
        k = curvature(st.support)
        ktt = deriv(k, 2).values
        diss[i] = integrate(k.copy_with(0.5 * k.values * ktt**2
                                        + k.values**3 / 3.0))

    if not rescaled:
        # M1: entropy dissipation  SE' = -||F||_2^2
        resid = np.abs(_cd_first(t, ent) + fl2[1:-1]) / np.maximum(fl2[1:-1], 1e-300)
        s, wt = _worst(ti, resid)
        rep.add("M1", "pass" if s <= tol.identity_rel else "fail", s, wt)

        # M2: ||F||_2^2 nonincreasing
        viol = np.diff(fl2) - tol.inequality_slack * np.max(fl2)
        j = int(np.argmax(viol))
        rep.add("M2", "pass" if viol[j] <= 0 else "fail",
                float(np.max(np.diff(fl2))), float(t[j + 1]))

        # M3: L' = integral k > 0 and L nondecreasing
        resid = np.abs(_cd_first(t, L) - k1[1:-1]) / np.maximum(k1[1:-1], 1e-300)
        s, wt = _worst(ti, resid)
        ok = s <= tol.identity_rel and np.all(k1 > 0) \
            and np.all(np.diff(L) >= -tol.inequality_slack * np.max(L))
        rep.add("M3", "pass" if ok else "fail", s, wt)

        # M4: concavity with the dissipation bound
        lhs = _cd_second(t, L)
        rhs = -diss[1:-1]
        viol = lhs - rhs - tol.identity_rel * np.abs(rhs) \
            - tol.inequality_slack * np.max(np.abs(rhs))
        s, wt = _worst(ti, viol)
        rep.add("M4", "pass" if s <= 0 else "fail", s, wt)

        # M5: length bracketing with c1 frozen at the first record
        c1 = k1[0]
        lower = np.sqrt(L[0]**2 + 8.0 * wpi**2 * (t - t[0]))
        upper = _length_upper_bound(t - t[0], L[0], c1, omega)
        slack = tol.inequality_slack * np.max(L)
        ok = np.all(L >= lower - slack) and np.all(L <= upper + slack)
        worst = float(min(np.min(L - lower), np.min(upper - L)))
        j = int(np.argmin(np.minimum(L - lower, upper - L)))
        rep.add("M5", "pass" if ok else "fail", worst, float(t[j]))

        # M6: entropy bracketing
        lower = 2.0 * wpi * np.log(2.0 * wpi / L)
        slackv = tol.inequality_slack * max(1.0, float(np.max(np.abs(ent))))
        ok = np.all(ent >= lower - slackv) and np.all(ent <= ent[0] + slackv)
        worst = float(min(np.min(ent - lower), np.min(ent[0] - ent)))
        j = int(np.argmin(np.minimum(ent - lower, ent[0] - ent)))
        rep.add("M6", "pass" if ok else "fail", worst, float(t[j]))

        # M7: integral bound on k_l1 plus accumulated dissipation
        cumdiss = np.concatenate([[0.0], np.cumsum(
            0.5 * (diss[1:] + diss[:-1]) * np.diff(t))])
        viol = k1 + cumdiss - c1 - tol.inequality_slack * c1
        s, wt = _worst(t, viol)
        rep.add("M7", "pass" if s <= 0 else "fail", s, wt)

        # M8: area law (omega = 1 only)
        if omega == 1:
            A = np.array([r.area for r in recs])
            resid = np.abs(_cd_first(t, A) - 2.0 * math.pi - sig[1:-1]) / (2.0 * math.pi)
            s, wt = _worst(ti, resid)
            growth = A - A[0] - 2.0 * math.pi * (t - t[0])
            ok = s <= tol.identity_rel and np.all(growth >= -1e-6)
            rep.add("M8", "pass" if ok else "fail", s, wt)
        else:
            rep.add("M8", "not-applicable", note="omega != 1")

        # M9: the two support-seminorm laws
        resid1 = np.abs(_cd_first(t, h1) + 2.0 * sig[1:-1]) / np.maximum(
            np.abs(2.0 * sig[1:-1]), 1e-12 * max(1.0, float(np.max(h1))))
        slope = _cd_first(t, h0)
        resid0 = np.abs(slope - 4.0 * wpi) / (4.0 * wpi)
        s = max(float(np.max(resid1)), float(np.max(resid0)))
        wt = float(ti[int(np.argmax(np.maximum(resid1, resid0)))])
        ok = float(np.max(resid0)) <= tol.h2_slope_rel \
            and float(np.max(resid1)) <= tol.identity_rel
        rep.add("M9", "pass" if ok else "fail", s, wt)
    else:
        for name in ("M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8", "M9"):
            rep.add(name, "not-applicable", note="unscaled-flow monitor")

    # M10: smallness of the sigma energy is preserved (any variant)
    thresh = 1.0 / (SMALLNESS_FRACTION * wpi)
    below = np.nonzero(sig <= thresh)[0]
    if len(below) == 0:
        rep.add("M10", "pass", note="threshold never reached")
    else:
        j0 = int(below[0])
        tail = sig[j0:]
        viol = np.diff(tail) - tol.inequality_slack * thresh
        if len(viol) == 0 or np.max(viol) <= 0:
            rep.add("M10", "pass", float(np.max(np.diff(tail), initial=-np.inf)),
                    float(t[j0]))
        else:
            j = int(np.argmax(viol))
            rep.add("M10", "fail", float(viol[j]), float(t[j0 + j + 1]))

    # M11: geometric gradient inequality from the convexity-preservation proof
    rhs = 2.0 * np.log1p(kginf * wpi / kmin)
    viol = rhs - L - tol.inequality_slack * np.max(L)
    s, wt = _worst(t, viol)
    rep.add("M11", "pass" if s <= 0 else "fail", s, wt)

    if rescaled:
        normalized = abs(L[0] - 1.0) <= 1e-6
        if tr.variant == "rescaled_chainrule" and normalized:
            # the bracket facts presume unit initial rescaled length
            a = 8.0 * wpi**2
            tau_max = math.expm1(a * (t[-1] - t[0])) / a
            cL = rescaled_length_cap(k1[0], tau_max, omega)
            slack = tol.inequality_slack * max(1.0, cL)
            ok = np.all(L >= 1.0 - slack) and np.all(L <= cL + slack)
            worst = float(min(np.min(L - 1.0), np.min(cL - L)))
            j = int(np.argmin(np.minimum(L - 1.0, cL - L)))
            rep.add("M12-length", "pass" if ok else "fail", worst, float(t[j]),
                    note=f"c_L={cL:.4g}")
            klo, khi = wpi / (2.0 * cL), 8.0 * wpi
        else:
            why = ("paper-literal variant" if tr.variant != "rescaled_chainrule"
                   else "initial rescaled length not normalized to 1")
            rep.add("M12-length", "not-applicable", note=why)
            klo, khi = None, None

        # monotone decay of the first four seminorms after the transient
        for p in (1, 2, 3, 4):
            series = np.array([r.h_seminorms[p] for r in recs])
            floor = noise_floor(series)
            start = len(series) // 2
            tail = series[start:]
            live = tail > floor
            grow = np.diff(tail) - tol.inequality_slack * np.max(series)
            grow = grow[live[:-1] & live[1:]]
            mono_ok = len(grow) == 0 or np.max(grow) <= 0
            rate, used = fit_decay_rate(t, series, floor=floor)
            ok = mono_ok and (math.isnan(rate) or rate > 0)
            rep.add(f"M12-decay-h{p}", "pass" if ok else "fail",
                    rate, note=f"fitted rate over {used} records")

        if klo is None:
            rep.add("M12-convexity", "not-applicable",
                    note="bracket needs the normalized chain-rule run")
        else:
            good = (kmin >= klo) & (kmax <= khi)
            idx = np.nonzero(good)[0]
            if len(idx) == 0:
                rep.add("M12-convexity", "fail", note="never entered the bracket")
            else:
                stay = bool(np.all(good[idx[0]:]))
                rep.add("M12-convexity", "pass" if stay else "fail",
                        float(np.min(np.minimum(kmin - klo, khi - kmax)[idx[0]:])),
                        float(t[idx[0]]),
                        note=f"bracket [{klo:.4g}, {khi:.4g}]")
    return rep
