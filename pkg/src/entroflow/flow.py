"""Time integration of the support-function flow h_t = k_thth + k.

Variants: "unscaled" is the flow itself; "rescaled_chainrule" is the exact
normalization h_t = k_thth + k - 4*omega^2*pi^2*h in the slow time with
d/dt_slow = phi^2 d/dt, phi = sqrt(L0^2 + 8*omega^2*pi^2*t), whose constant
fixed point is h = 1/(2*omega*pi); "rescaled_paper" is the literal variant
h_t = k_thth + k - h with fixed point h = 1, kept for comparison.

The explicit scheme is classical RK4 with the step bound
dt <= safety * 2.7 / (max(k)^2 * ximax^4), ximax = n/(2*omega), from the
frozen-coefficient linearization -k^2 * d^4/dtheta^4 and the RK4 real-axis
stability interval.  The semi-implicit scheme damps a constant-coefficient
fourth-derivative shift implicitly (diagonal in mode space) and is
unconditionally linearly stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import compute_record
from .errors import FlowBreakdownError, StepRejectedError
from .spectral import GridFunction, PeriodicGrid, deriv
from .support import SupportGrid, curvature

VARIANTS = ("unscaled", "rescaled_chainrule", "rescaled_paper")
SCHEMES = ("explicit_rk4", "semi_implicit")

RK4_REAL_AXIS = 2.7       # RK4 real-axis stability bound 2.79, rounded down
MAX_HALVINGS = 40

try:  # optional compiled fast path; the numpy route below is the reference
    import numba
    _HAVE_NUMBA = True
except Exception:  # pragma: no cover
    numba = None
    _HAVE_NUMBA = False


@dataclass
class StepperConfig:
    dt_init: float = 1e-3
    safety: float = 0.9
    max_dt: float = math.inf
    guard_ratio: float = 0.2
    scheme: str = "explicit_rk4"
    stabilization_coeff: float = 1.0

    def __post_init__(self):
        if self.dt_init <= 0:
            raise ValueError("dt_init must be positive")
        if not 0.0 < self.safety <= 1.0:
            raise ValueError("safety must lie in (0, 1]")
        if self.max_dt <= 0:
            raise ValueError("max_dt must be positive")
        if not 0.0 < self.guard_ratio < 1.0:
            raise ValueError("guard_ratio must lie in (0, 1)")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.stabilization_coeff < 0:
            raise ValueError("stabilization_coeff must be >= 0")


@dataclass
class FlowState:
    support: SupportGrid
    time: float = 0.0
    variant: str = "unscaled"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")

    @property
    def grid(self) -> PeriodicGrid:
        return self.support.grid


@dataclass
class Trajectory:
    variant: str
    states: list = field(default_factory=list)
    records: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    def record_series(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def final(self) -> FlowState:
        return self.states[-1]


def variant_shift(variant: str, omega: int) -> float:
    """Coefficient lam of the -lam*h term in the right-hand side."""
    if variant == "unscaled":
        return 0.0
    if variant == "rescaled_paper":
        return 1.0
    if variant == "rescaled_chainrule":
        return 4.0 * omega**2 * math.pi**2
    raise ValueError(f"unknown variant {variant!r}")


def rhs_unscaled(s: SupportGrid) -> GridFunction:
    """Flow velocity F = k_thth + k."""
    k = curvature(s)
    return k.copy_with(deriv(k, 2).values + k.values)


def rhs_rescaled(s: SupportGrid, variant: str) -> GridFunction:
    """Rescaled velocity k_thth + k - lam*h for the requested variant."""
    if variant not in ("rescaled_chainrule", "rescaled_paper"):
        raise ValueError("variant must be a rescaled variant")
    lam = variant_shift(variant, s.omega)
    f = rhs_unscaled(s)
    return f.copy_with(f.values - lam * s.values)


def rhs_for_variant(s: SupportGrid, variant: str) -> GridFunction:
    if variant == "unscaled":
        return rhs_unscaled(s)
    return rhs_rescaled(s, variant)


# ---------------------------------------------------------------------------
# spectral workspace (dense circulant operator for small grids)

_WORKSPACES: dict = {}


class _Workspace:
    def __init__(self, grid: PeriodicGrid):
        n, period = grid.n, grid.period
        xi = 2.0 * np.pi * np.fft.rfftfreq(n, d=period / n)
        e0 = np.zeros(n)
        e0[0] = 1.0
        col = np.fft.irfft(-xi**2 * np.fft.rfft(e0), n=n)
        D2 = np.empty((n, n))
        for j in range(n):
            D2[:, j] = np.roll(col, j)
        self.D2I = np.ascontiguousarray(D2 + np.eye(n))
        self.xi = xi
        self.xi4 = xi**4
        self.ximax4 = (n / (2.0 * grid.omega))**4


def workspace(grid: PeriodicGrid) -> _Workspace:
    key = (grid.omega, grid.n)
    if key not in _WORKSPACES:
        _WORKSPACES[key] = _Workspace(grid)
    return _WORKSPACES[key]


# ---------------------------------------------------------------------------
# explicit RK4 span integrator (numpy reference; numba-compiled when present)

def _rk4_span_py(h, t, t_stop, D2I, lam, c_stab, max_dt, guard_ratio):
    """Advance to t_stop with adaptive guarded RK4 steps.

    Returns (h, t, dt_last, status): status 0 = reached t_stop,
    2 = breakdown (margin loss or 40 halvings).
    """
    dt_last = 0.0
    tol = 1e-14 * max(1.0, abs(t_stop))
    while t_stop - t > tol:
        w = D2I @ h
        margin = np.min(w)
        if not margin > 0.0:
            return h, t, dt_last, 2
        dt = c_stab * margin * margin
        if dt > max_dt:
            dt = max_dt
        rem = t_stop - t
        if dt > rem:
            dt = rem
        halvings = 0
        while True:
            f1 = D2I @ (1.0 / w) - lam * h
            h2 = h + (0.5 * dt) * f1
            f2 = D2I @ (1.0 / (D2I @ h2)) - lam * h2
            h3 = h + (0.5 * dt) * f2
            f3 = D2I @ (1.0 / (D2I @ h3)) - lam * h3
            h4 = h + dt * f3
            f4 = D2I @ (1.0 / (D2I @ h4)) - lam * h4
            hn = h + (dt / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
            wn = D2I @ hn
            mn = np.min(wn)
            if np.isfinite(mn) and mn >= guard_ratio * margin:
                h = hn
                t = t + dt
                dt_last = dt
                break
            dt *= 0.5
            halvings += 1
            if halvings > MAX_HALVINGS:
                return h, t, dt_last, 2
    return h, t, dt_last, 0


if _HAVE_NUMBA:
    _rk4_span_jit = numba.njit(cache=True)(_rk4_span_py)
else:  # pragma: no cover
    _rk4_span_jit = None


def _rk4_span(h, t, t_stop, D2I, lam, c_stab, max_dt, guard_ratio):
    if _rk4_span_jit is not None:
        return _rk4_span_jit(h, t, t_stop, D2I, lam, c_stab, max_dt, guard_ratio)
    return _rk4_span_py(h, t, t_stop, D2I, lam, c_stab, max_dt, guard_ratio)


def _semi_implicit_attempt(h, dt, ws, lam, stab_coeff):
    """One linearly stabilized step; returns (h_new, margin_new)."""
    w = ws.D2I @ h
    kmax = 1.0 / np.min(w)
    c = stab_coeff * kmax * kmax
    rhs = ws.D2I @ (1.0 / w) - lam * h
    hhat = np.fft.rfft(h)
    denom = 1.0 + dt * c * ws.xi4
    hn = np.fft.irfft(hhat + dt * np.fft.rfft(rhs) / denom, n=len(h))
    wn = ws.D2I @ hn
    return hn, float(np.min(wn))


def step(state: FlowState, dt: float, cfg: StepperConfig) -> FlowState:
    """One accepted integrator step of size exactly dt.

    Raises StepRejectedError when the convexity guard fails; the caller is
    expected to halve dt and retry.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = state.support
    ws = workspace(s.grid)
    lam = variant_shift(state.variant, s.omega)
    h = s.values
    w = ws.D2I @ h
    margin = float(np.min(w))
    if cfg.scheme == "explicit_rk4":
        f1 = ws.D2I @ (1.0 / w) - lam * h
        h2 = h + (0.5 * dt) * f1
        f2 = ws.D2I @ (1.0 / (ws.D2I @ h2)) - lam * h2
        h3 = h + (0.5 * dt) * f2
        f3 = ws.D2I @ (1.0 / (ws.D2I @ h3)) - lam * h3
        h4 = h + dt * f3
        f4 = ws.D2I @ (1.0 / (ws.D2I @ h4)) - lam * h4
        hn = h + (dt / 6.0) * (f1 + 2.0 * f2 + 2.0 * f3 + f4)
        margin_new = float(np.min(ws.D2I @ hn))
    else:
        hn, margin_new = _semi_implicit_attempt(h, dt, ws, lam, cfg.stabilization_coeff)
    if not (np.isfinite(margin_new) and margin_new >= cfg.guard_ratio * margin):
        raise StepRejectedError(
            f"convexity guard: margin {margin_new:.6g} < "
            f"{cfg.guard_ratio} * {margin:.6g} at dt={dt:.3g}",
            dt=dt, margin_before=margin, margin_after=margin_new)
    support = SupportGrid(GridFunction(s.grid, hn))
    return FlowState(support=support, time=state.time + dt, variant=state.variant)


def _event_times(t0: float, t_end: float, monitor_every, snap_times):
    events = {t_end}
    if monitor_every is not None and monitor_every > 0:
        m = int(math.floor((t_end - t0) / monitor_every + 1e-9))
        events.update(t0 + j * monitor_every for j in range(1, m + 1))
    if snap_times is not None:
        events.update(float(t) for t in snap_times if t0 < t <= t_end)
    out = sorted(events)
    # merge events closer than time round-off
    merged = [out[0]]
    for t in out[1:]:
        if t - merged[-1] > 1e-13 * max(1.0, abs(t_end)):
            merged.append(t)
    return merged


def evolve(state: FlowState, t_end: float, cfg: StepperConfig,
           monitor_every: float | None = None,
           snap_times=None) -> Trajectory:
    """Advance the flow to t_end with adaptive steps and a convexity guard.

    Snapshots and diagnostics records are emitted at the start, at every
    multiple of monitor_every, at each requested snap_time, and at t_end.
    Raises FlowBreakdownError (with the last valid state attached) if the
    step size underflows after 40 halvings.
    """
    if t_end <= state.time:
        raise ValueError("t_end must exceed the state time")
    s = state.support
    ws = workspace(s.grid)
    lam = variant_shift(state.variant, s.omega)
    c_stab = cfg.safety * RK4_REAL_AXIS / ws.ximax4

    traj = Trajectory(variant=state.variant)
    h = s.values.copy()
    t = state.time
    dt_last = 0.0

    def emit(h_now, t_now, dt_now):
        sup = SupportGrid(GridFunction(s.grid, h_now.copy()))
        st = FlowState(support=sup, time=t_now, variant=state.variant)
        traj.states.append(st)
        traj.records.append(compute_record(sup, t_now, dt_now))

    emit(h, t, 0.0)
    dt_si = min(cfg.dt_init, cfg.max_dt)
    for t_stop in _event_times(state.time, t_end, monitor_every, snap_times):
        if cfg.scheme == "explicit_rk4":
            h, t, dt_last, status = _rk4_span(
                h, t, t_stop, ws.D2I, lam, c_stab, cfg.max_dt, cfg.guard_ratio)
            if status != 0:
                last = FlowState(
                    support=SupportGrid(GridFunction(s.grid, h), validate=False),
                    time=t, variant=state.variant)
                raise FlowBreakdownError(
                    f"step size underflow at t={t:.6g} "
                    f"(margin {np.min(ws.D2I @ h):.3g})", last_state=last)
        else:
            tol = 1e-14 * max(1.0, abs(t_stop))
            while t_stop - t > tol:
                clipped = dt_si > t_stop - t
                dt_try = min(dt_si, t_stop - t)
                margin = float(np.min(ws.D2I @ h))
                halvings = 0
                while True:
                    hn, mn = _semi_implicit_attempt(
                        h, dt_try, ws, lam, cfg.stabilization_coeff)
                    if np.isfinite(mn) and mn >= cfg.guard_ratio * margin:
                        h, t = hn, t + dt_try
                        dt_last = dt_try
                        break
                    dt_try *= 0.5
                    halvings += 1
                    if halvings > MAX_HALVINGS:
                        last = FlowState(
                            support=SupportGrid(GridFunction(s.grid, h), validate=False),
                            time=t, variant=state.variant)
                        raise FlowBreakdownError(
                            f"step size underflow at t={t:.6g}", last_state=last)
                if halvings:
                    dt_si = max(dt_try, 1e-15)
                elif not clipped:
                    dt_si = min(dt_si * 1.2, cfg.max_dt)
        t = t_stop
        emit(h, t, dt_last)
    return traj


# ---------------------------------------------------------------------------
# rescaling

def scale_factor(t: float, L0: float, omega: int) -> float:
    """phi(t) = sqrt(L0^2 + 8 omega^2 pi^2 t)."""
    return math.sqrt(L0**2 + 8.0 * omega**2 * math.pi**2 * t)


def slow_time(t: float, L0: float, omega: int) -> float:
    """t_slow = log(1 + 8 omega^2 pi^2 t / L0^2) / (8 omega^2 pi^2)."""
    a = 8.0 * omega**2 * math.pi**2
    return math.log1p(a * t / L0**2) / a


def unscaled_time(t_slow: float, L0: float, omega: int) -> float:
    """Inverse of slow_time."""
    a = 8.0 * omega**2 * math.pi**2
    return L0**2 * math.expm1(a * t_slow) / a


def rescale_trajectory(tr: Trajectory, L0: float) -> Trajectory:
    """Map an unscaled trajectory to (h/phi, t_slow) snapshots.

    The result solves the chain-rule rescaled equation exactly, so it can be
    compared state-by-state with a direct rescaled integration.
    """
    if tr.variant != "unscaled":
        raise ValueError("rescale_trajectory expects an unscaled trajectory")
    out = Trajectory(variant="rescaled_chainrule")
    for st, rec in zip(tr.states, tr.records):
        omega = st.grid.omega
        phi = scale_factor(st.time, L0, omega)
        h_eta = st.support.values / phi
        sup = SupportGrid(GridFunction(st.grid, h_eta))
        t_eta = slow_time(st.time, L0, omega)
        out.states.append(FlowState(support=sup, time=t_eta,
                                    variant="rescaled_chainrule"))
        out.records.append(compute_record(sup, t_eta, rec.dt_used / phi**2))
    return out


# ---------------------------------------------------------------------------
# snapshot files

def write_snapshot(path, state: FlowState):
    with open(path, "w") as fh:
        fh.write(f"# omega={state.grid.omega}\n")
        fh.write(f"# n={state.grid.n}\n")
        fh.write(f"# t={state.time:.17g}\n")
        fh.write(f"# variant={state.variant}\n")
        for v in state.support.values:
            fh.write(f"{v:.17g}\n")


def read_snapshot(path) -> FlowState:
    meta = {}
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                meta[key.strip()] = val.strip()
            else:
                vals.append(float(line))
    grid = PeriodicGrid(omega=int(meta["omega"]), n=int(meta["n"]))
    sup = SupportGrid(GridFunction(grid, np.array(vals)))
    return FlowState(support=sup, time=float(meta["t"]), variant=meta["variant"])
