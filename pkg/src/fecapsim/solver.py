"""Implicit transient solver for the FeCap equivalent circuit.

Topology (hard-wired): ferroelectric branch (layer capacitance, polarization
displacement source, Poole-Frenkel leakage) in series with the interface
branch (layer capacitance, Fowler-Nordheim leakage) in series with the
depletion element, whose potential is an algebraic function of the state.

Each time step solves, by damped Newton iteration with a finite-difference
Jacobian, for the internal split (V_fe, V_int) - plus the terminal voltage
V_appl under current drive - such that the voltage loop closes and the two
branch currents match. The polarization state is advanced semi-implicitly:
the exact exponential solution of the rate equation over the step, with
rates frozen at the trial end-of-step field. On Newton failure the step is
halved and the two halves solved recursively.

Everything is vectorized over a device axis: a batch of n independent
devices advances in one pass, and a single device is just n = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .params import DeviceParams, ParamsBatch
from .physics import (
    c_layer,
    j_fn,
    j_pf,
    p_step,
    phi_depl,
    polarization,
    transition_rates,
)
from .waveform import CURRENT, VOLTAGE, Waveform

# Reference area for the default KCL tolerance scaling.
_TOL_I_REF_AREA = 25e-12  # m^2
# Largest Newton update per unknown per iteration, volts.
_MAX_NEWTON_STEP = 50.0
# Relative finite-difference perturbation for the Jacobian.
_FD_RELATIVE = 1e-7
# Damping halvings tried before an iteration is declared non-improving.
_N_DAMP = 6


@dataclass
class SolverConfig:
    """Integration and Newton-iteration settings.

    ``newton_tol_i = None`` scales the default 1e-12 A tolerance by
    device area / 25 um^2 at solve time.
    """

    dt: float = 1e-7
    newton_tol_v: float = 1e-9
    newton_tol_i: Optional[float] = None
    max_newton_iters: int = 20
    max_step_halvings: int = 12
    p_init: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if self.newton_tol_v <= 0.0:
            raise ValueError("newton_tol_v must be > 0")
        if self.newton_tol_i is not None and self.newton_tol_i <= 0.0:
            raise ValueError("newton_tol_i must be > 0")
        if not 0.0 <= self.p_init <= 1.0:
            raise ValueError("p_init must be in [0, 1]")
        if self.max_newton_iters < 1 or self.max_step_halvings < 0:
            raise ValueError("iteration limits out of range")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class DeviceState:
    """Dynamic state of one device at time ``t``."""

    p: float
    v_fe: float
    v_int: float
    t: float = 0.0


class StepFailureError(RuntimeError):
    """Newton failed to converge after all step halvings."""

    def __init__(self, t: float, dt: float, loop_residual: float, kcl_residual: float,
                 device_indices=()):
        self.t = t
        self.dt = dt
        self.loop_residual = loop_residual
        self.kcl_residual = kcl_residual
        self.device_indices = tuple(int(i) for i in device_indices)
        msg = (f"step to t={t:.6e} s failed at dt={dt:.3e} s "
               f"(|loop|={loop_residual:.3e} V, |KCL|={kcl_residual:.3e} A")
        if self.device_indices:
            msg += f", devices {self.device_indices[:8]}"
        super().__init__(msg + ")")


@dataclass
class SolveStats:
    """Aggregate work counters for one transient run."""

    steps: int = 0
    newton_iters: int = 0
    halvings: int = 0

    def merge(self, other: "SolveStats"):
        self.steps += other.steps
        self.newton_iters += other.newton_iters
        self.halvings += other.halvings


class _State(NamedTuple):
    p: np.ndarray
    v_fe: np.ndarray
    v_int: np.ndarray
    v_app: np.ndarray

    def gather(self, idx) -> "_State":
        return _State(self.p[idx], self.v_fe[idx], self.v_int[idx], self.v_app[idx])

    def scatter(self, idx, sub: "_State") -> "_State":
        p, v_fe, v_int, v_app = (a.copy() for a in self)
        p[idx], v_fe[idx], v_int[idx], v_app[idx] = sub
        return _State(p, v_fe, v_int, v_app)


class _StepAux(NamedTuple):
    """Per-device diagnostics of a converged (or trial) step."""

    p_n: np.ndarray
    phi: np.ndarray
    j_pf: np.ndarray
    j_fn: np.ndarray
    j_pol: np.ndarray
    i_term: np.ndarray
    r_loop: np.ndarray
    r_kcl: np.ndarray

    def gather(self, idx):
        return _StepAux(*(a[idx] for a in self))

    def scatter(self, idx, sub):
        out = [a.copy() for a in self]
        for a, s in zip(out, sub):
            a[idx] = s
        return _StepAux(*out)


_TS_COLUMNS = ("t", "v_appl", "i", "p", "pol", "v_fe", "v_int",
               "phi_depl", "j_pf", "j_fn")
_TS_EXTRAS = ("j_pol", "loop_residual", "kcl_residual")


@dataclass
class TimeSeries:
    """Recorded transient of one device (SI units).

    ``j_pol``, ``loop_residual`` and ``kcl_residual`` are solver diagnostics
    carried alongside the contractual columns.
    """

    t: np.ndarray
    v_appl: np.ndarray
    i: np.ndarray
    p: np.ndarray
    pol: np.ndarray
    v_fe: np.ndarray
    v_int: np.ndarray
    phi_depl: np.ndarray
    j_pf: np.ndarray
    j_fn: np.ndarray
    j_pol: np.ndarray = None
    loop_residual: np.ndarray = None
    kcl_residual: np.ndarray = None
    stats: SolveStats = field(default_factory=SolveStats)

    def __len__(self):
        return self.t.size

    def charge(self) -> np.ndarray:
        """Cumulative terminal charge by trapezoidal integration, coulombs."""
        if self.t.size < 2:
            return np.zeros_like(self.t)
        dq = 0.5 * (self.i[1:] + self.i[:-1]) * np.diff(self.t)
        return np.concatenate([[0.0], np.cumsum(dq)])


@dataclass
class TimeSeriesBatch:
    """Recorded transient of a device batch; column arrays are (rows, n)."""

    t: np.ndarray
    v_appl: np.ndarray
    i: np.ndarray
    p: np.ndarray
    pol: np.ndarray
    v_fe: np.ndarray
    v_int: np.ndarray
    phi_depl: np.ndarray
    j_pf: np.ndarray
    j_fn: np.ndarray
    j_pol: np.ndarray
    loop_residual: np.ndarray
    kcl_residual: np.ndarray
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def n_devices(self) -> int:
        return self.p.shape[1]

    def device(self, i: int) -> TimeSeries:
        cols = {name: getattr(self, name)[:, i] for name in _TS_COLUMNS + _TS_EXTRAS
                if name != "t"}
        return TimeSeries(t=self.t.copy(), stats=self.stats, **cols)


def _tolerances(pb: ParamsBatch, cfg: SolverConfig, m: int) -> np.ndarray:
    tol_i = (cfg.newton_tol_i if cfg.newton_tol_i is not None
             else 1e-12 * pb.area / _TOL_I_REF_AREA)
    tol = np.empty((pb.n, m))
    tol[:, 0] = cfg.newton_tol_v
    tol[:, 1] = tol_i
    if m == 3:
        tol[:, 2] = tol_i
    return tol


def _make_step_fun(pb: ParamsBatch, prev: _State, dt: float, drive_end, mode: str):
    """Residuals of the implicit step as a function of the unknown vector.

    Unknowns: (V_fe, V_int) under voltage drive, (V_fe, V_int, V_appl) under
    current drive. Residual components: voltage loop (V), internal-node KCL
    (A), and in current mode the terminal-current mismatch (A).
    """
    c_fe = c_layer(pb.eps_fe, pb.t_fe)
    c_int = c_layer(pb.eps_int, pb.t_int)
    inv_dt = 1.0 / dt
    p_prev, v_fe_prev, v_int_prev = prev.p, prev.v_fe, prev.v_int

    def fun(x):
        v_fe = x[:, 0]
        v_int = x[:, 1]
        v_app = drive_end if mode == VOLTAGE else x[:, 2]
        e_fe = v_fe / pb.t_fe
        rates = transition_rates(e_fe, pb)
        p_n = p_step(p_prev, rates, dt)
        phi = phi_depl(p_n, v_fe, pb, e_fe)
        jpf = j_pf(e_fe, pb)
        jfn = j_fn(v_int / pb.t_int, pb)
        j_pol = 2.0 * pb.P_s * (p_n - p_prev) * inv_dt
        j_fe = c_fe * (v_fe - v_fe_prev) * inv_dt + j_pol + jpf
        j_int = c_int * (v_int - v_int_prev) * inv_dt + jfn
        r_loop = v_app - v_fe - v_int - phi
        r_kcl = pb.area * (j_fe - j_int)
        if mode == VOLTAGE:
            r = np.stack([r_loop, r_kcl], axis=1)
        else:
            r = np.stack([r_loop, r_kcl, pb.area * j_int - drive_end], axis=1)
        aux = _StepAux(p_n, phi, jpf, jfn, j_pol, pb.area * j_int, r_loop, r_kcl)
        return r, aux

    return fun


def _solve_linear(jac: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched 2x2/3x3 solve by Cramer's rule; shapes (n,m,m) and (n,m)."""
    m = rhs.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        if m == 2:
            a, b = jac[:, 0, 0], jac[:, 0, 1]
            c, d = jac[:, 1, 0], jac[:, 1, 1]
            det = a * d - b * c
            x0 = (rhs[:, 0] * d - rhs[:, 1] * b) / det
            x1 = (a * rhs[:, 1] - c * rhs[:, 0]) / det
            return np.stack([x0, x1], axis=1)
        a, b, c = jac[:, 0, 0], jac[:, 0, 1], jac[:, 0, 2]
        d, e, f = jac[:, 1, 0], jac[:, 1, 1], jac[:, 1, 2]
        g, h, k = jac[:, 2, 0], jac[:, 2, 1], jac[:, 2, 2]
        det = a * (e * k - f * h) - b * (d * k - f * g) + c * (d * h - e * g)
        r0, r1, r2 = rhs[:, 0], rhs[:, 1], rhs[:, 2]
        x0 = (r0 * (e * k - f * h) - b * (r1 * k - f * r2) + c * (r1 * h - e * r2)) / det
        x1 = (a * (r1 * k - f * r2) - r0 * (d * k - f * g) + c * (d * r2 - r1 * g)) / det
        x2 = (a * (e * r2 - r1 * h) - b * (d * r2 - r1 * g) + r0 * (d * h - e * g)) / det
        return np.stack([x0, x1, x2], axis=1)


def _scaled_norm(r: np.ndarray, tol: np.ndarray) -> np.ndarray:
    return np.max(np.abs(r) / tol, axis=1)


def _merge_aux(take: np.ndarray, new, old):
    return type(old)(*(np.where(take, a_new, a_old) for a_new, a_old in zip(new, old)))


def _newton(fun, x0: np.ndarray, tol: np.ndarray, max_iters: int):
    """Damped Newton on the batched residual system.

    Returns (x, converged mask, iterations, residuals, aux); converged
    devices are frozen while the rest keep iterating.
    """
    n, m = x0.shape
    x = x0.copy()
    r, aux = fun(x)
    norm = _scaled_norm(r, tol)
    conv = norm <= 1.0
    iters = 0
    jac = None
    jac_age = 0
    while iters < max_iters and not conv.all():
        iters += 1
        if jac is None or jac_age >= 2:
            delta = _FD_RELATIVE * np.maximum(np.abs(x), 1.0)
            jac = np.empty((n, m, m))
            for j in range(m):
                xp = x.copy()
                xp[:, j] += delta[:, j]
                rp, _ = fun(xp)
                jac[:, :, j] = (rp - r) / delta[:, j][:, None]
            jac_age = 0
        dx = _solve_linear(jac, -r)
        dx = np.where(np.isfinite(dx), dx, 0.0)
        np.clip(dx, -_MAX_NEWTON_STEP, _MAX_NEWTON_STEP, out=dx)
        dx[conv] = 0.0

        alpha = np.ones(n)
        accepted = conv.copy()
        for _ in range(_N_DAMP + 1):
            if accepted.all():
                break
            x_t = np.where(accepted[:, None], x, x + alpha[:, None] * dx)
            r_t, aux_t = fun(x_t)
            norm_t = _scaled_norm(r_t, tol)
            take = ((norm_t < norm) | (norm_t <= 1.0)) & ~accepted
            if take.any():
                x = np.where(take[:, None], x_t, x)
                r = np.where(take[:, None], r_t, r)
                norm = np.where(take, norm_t, norm)
                aux = _merge_aux(take, aux_t, aux)
                accepted |= take
            alpha = np.where(accepted, alpha, 0.5 * alpha)
        conv = norm <= 1.0
        if not accepted.any():
            if jac_age == 0:
                # Fresh Jacobian and no device improved at any damping:
                # hand over to step halving.
                break
            jac = None
            continue
        jac_age += 1
    return x, conv, iters, r, aux


def _initial_state(pb: ParamsBatch, v_app0: np.ndarray, p_init) -> _State:
    """Internal split consistent with the drive at t = 0.

    Convention: the interface capacitor starts discharged (V_int = 0) and
    V_fe absorbs the depolarization potential of the preset polarization,
    i.e. V_fe solves V_fe + phi_depl(p0, V_fe) = V_appl(0). Solved by
    bracketed bisection, which is immune to the piecewise denominator floor.
    """
    p0 = np.broadcast_to(np.asarray(p_init, dtype=np.float64), (pb.n,)).copy()

    def g(v):
        return v + phi_depl(p0, v, pb, v / pb.t_fe) - v_app0

    lo = v_app0 - 25.0
    hi = v_app0 + 25.0
    glo, ghi = g(lo), g(hi)
    for _ in range(8):
        bad = glo * ghi > 0.0
        if not bad.any():
            break
        lo = np.where(bad, lo - 50.0, lo)
        hi = np.where(bad, hi + 50.0, hi)
        glo, ghi = g(lo), g(hi)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        neg = (gm < 0.0) == (glo < 0.0)
        lo = np.where(neg, mid, lo)
        glo = np.where(neg, gm, glo)
        hi = np.where(neg, hi, mid)
    v_fe0 = 0.5 * (lo + hi)
    v_int0 = np.zeros(pb.n)
    return _State(p0, v_fe0, v_int0, v_app0.astype(np.float64).copy())


def _advance(pb: ParamsBatch, st: _State, t0: float, dt: float, drive_at,
             mode: str, cfg: SolverConfig, depth: int, stats: SolveStats,
             cols: np.ndarray):
    """Advance every device by exactly *dt*, halving locally on failure."""
    drive_end = np.broadcast_to(np.asarray(drive_at(t0 + dt, cols), dtype=np.float64),
                                (pb.n,))
    fun = _make_step_fun(pb, st, dt, drive_end, mode)
    if mode == VOLTAGE:
        x0 = np.stack([st.v_fe, st.v_int], axis=1)
        m = 2
    else:
        x0 = np.stack([st.v_fe, st.v_int, st.v_app], axis=1)
        m = 3
    tol = _tolerances(pb, cfg, m)
    x, conv, iters, r, aux = _newton(fun, x0, tol, cfg.max_newton_iters)
    stats.steps += 1
    stats.newton_iters += iters

    v_app_new = drive_end if mode == VOLTAGE else x[:, 2]
    st_new = _State(aux.p_n.copy(), x[:, 0].copy(), x[:, 1].copy(),
                    np.asarray(v_app_new, dtype=np.float64).copy())
    if conv.all():
        return st_new, aux

    if depth <= 0:
        bad = np.flatnonzero(~conv)
        raise StepFailureError(
            t=t0 + dt, dt=dt,
            loop_residual=float(np.max(np.abs(r[bad, 0]))),
            kcl_residual=float(np.max(np.abs(r[bad, 1]))),
            device_indices=cols[bad],
        )

    stats.halvings += 1
    bad = np.flatnonzero(~conv)
    sub_pb = pb.slice(bad)
    sub_st = st.gather(bad)
    sub_cols = cols[bad]
    half = 0.5 * dt
    st_a, _ = _advance(sub_pb, sub_st, t0, half, drive_at, mode, cfg,
                       depth - 1, stats, sub_cols)
    st_b, aux_b = _advance(sub_pb, st_a, t0 + half, half, drive_at, mode, cfg,
                           depth - 1, stats, sub_cols)
    return st_new.scatter(bad, st_b), aux.scatter(bad, aux_b)


def _record_row(out: dict, row: int, t: float, st: _State, aux: _StepAux):
    out["t"][row] = t
    out["v_appl"][row] = st.v_app
    out["i"][row] = aux.i_term
    out["p"][row] = st.p
    out["v_fe"][row] = st.v_fe
    out["v_int"][row] = st.v_int
    out["phi_depl"][row] = aux.phi
    out["j_pf"][row] = aux.j_pf
    out["j_fn"][row] = aux.j_fn
    out["j_pol"][row] = aux.j_pol
    out["loop_residual"][row] = aux.r_loop
    out["kcl_residual"][row] = aux.r_kcl


def run_transient_batch(pb: ParamsBatch, wf: Waveform,
                        cfg: Optional[SolverConfig] = None,
                        init: Optional[_State] = None) -> TimeSeriesBatch:
    """Integrate a batch of independent devices over one drive waveform.

    The base time grid subdivides every waveform breakpoint interval by the
    configured dt; failed steps are halved locally (per device) up to
    ``max_step_halvings`` levels. Rows are recorded on the base grid every
    ``record_every`` steps, always including the first and last instants.

    ``init`` continues from a known state (e.g. the previous drive phase);
    without it the internal voltages are solved self-consistently from the
    drive value at the first instant with p = ``cfg.p_init``.
    """
    cfg = cfg or SolverConfig()
    if wf.values.ndim == 2 and wf.values.shape[1] not in (1, pb.n):
        raise ValueError("waveform device axis does not match batch size")
    grid = wf.time_grid(cfg.dt)
    n = pb.n
    cols_all = np.arange(n)

    def drive_at(t, cols):
        v = wf.value_at(t, cols if wf.values.ndim == 2 else None)
        return np.broadcast_to(np.asarray(v, dtype=np.float64), (len(cols),))

    if init is not None:
        st = _State(*(np.asarray(a, dtype=np.float64).copy() for a in init))
    else:
        v_drive0 = drive_at(grid[0], cols_all)
        v_app0 = v_drive0 if wf.mode == VOLTAGE else np.zeros(n)
        st = _initial_state(pb, v_app0, cfg.p_init)

    n_steps = grid.size - 1
    rec_idx = [0] + [k for k in range(1, n_steps + 1)
                     if k % cfg.record_every == 0 or k == n_steps]
    rec_set = set(rec_idx)
    n_rows = len(rec_idx)
    out = {name: np.empty((n_rows, n)) for name in _TS_COLUMNS + _TS_EXTRAS}
    out["t"] = np.empty(n_rows)
    stats = SolveStats()

    e_fe0 = st.v_fe / pb.t_fe
    aux0 = _StepAux(
        p_n=st.p,
        phi=phi_depl(st.p, st.v_fe, pb, e_fe0),
        j_pf=j_pf(e_fe0, pb),
        j_fn=j_fn(st.v_int / pb.t_int, pb),
        j_pol=np.zeros(n),
        i_term=pb.area * j_fn(st.v_int / pb.t_int, pb),
        r_loop=st.v_app - st.v_fe - st.v_int - phi_depl(st.p, st.v_fe, pb, e_fe0),
        r_kcl=np.zeros(n),
    )
    _record_row(out, 0, grid[0], st, aux0)

    row = 1
    for k in range(1, n_steps + 1):
        t0, t1 = grid[k - 1], grid[k]
        st, aux = _advance(pb, st, t0, t1 - t0, drive_at, wf.mode, cfg,
                           cfg.max_step_halvings, stats, cols_all)
        if k in rec_set:
            _record_row(out, row, t1, st, aux)
            row += 1

    out["pol"] = polarization(out["p"], _BroadcastRows(pb))
    return TimeSeriesBatch(stats=stats, **out)


class _BroadcastRows:
    """Expose batch parameter arrays broadcastable against (rows, n) data."""

    def __init__(self, pb: ParamsBatch):
        self._pb = pb

    def __getattr__(self, name):
        return getattr(self._pb, name)[None, :]


def batch_final_state(ts: TimeSeriesBatch) -> _State:
    """State at the last recorded row, for continuing into a next phase."""
    return _State(ts.p[-1].copy(), ts.v_fe[-1].copy(), ts.v_int[-1].copy(),
                  ts.v_appl[-1].copy())


def run_transient(params: DeviceParams, wf: Waveform,
                  cfg: Optional[SolverConfig] = None) -> TimeSeries:
    """Single-device transient; see :func:`run_transient_batch`."""
    pb = ParamsBatch.from_params(params, 1)
    batch = run_transient_batch(pb, wf, cfg)
    return batch.device(0)


def solve_timestep(state: DeviceState, dt: float, drive_value: float,
                   params: DeviceParams, cfg: Optional[SolverConfig] = None,
                   mode: str = VOLTAGE) -> DeviceState:
    """Advance one device by *dt* under a constant drive value.

    Newton iteration on the implicit step; on non-convergence the step is
    halved and retried, up to ``max_step_halvings`` levels deep. Raises
    :class:`StepFailureError` if the budget is exhausted.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    cfg = cfg or SolverConfig()
    pb = ParamsBatch.from_params(params, 1)
    st = _State(
        p=np.array([state.p], dtype=np.float64),
        v_fe=np.array([state.v_fe], dtype=np.float64),
        v_int=np.array([state.v_int], dtype=np.float64),
        v_app=np.array([drive_value if mode == VOLTAGE else 0.0]),
    )
    stats = SolveStats()

    def drive_at(t, cols):
        return np.full(len(cols), drive_value)

    new, _aux = _advance(pb, st, state.t, dt, drive_at, mode, cfg,
                         cfg.max_step_halvings, stats, np.arange(1))
    return DeviceState(p=float(new.p[0]), v_fe=float(new.v_fe[0]),
                       v_int=float(new.v_int[0]), t=state.t + dt)


def step_residual(state_next: DeviceState, state_prev: DeviceState, dt: float,
                  drive_value: float, params: DeviceParams,
                  mode: str = VOLTAGE, v_appl_trial: float = 0.0):
    """Residuals of a trial step, in the solver's own discretization.

    Returns (loop residual V, KCL residual A) under voltage drive, plus the
    terminal-current residual (A) under current drive, where *v_appl_trial*
    supplies the trial terminal voltage. The trial p inside ``state_next``
    is ignored; p is always advanced from ``state_prev`` by the exponential
    update at the trial field, exactly as the solver does.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    pb = ParamsBatch.from_params(params, 1)
    prev = _State(
        p=np.array([state_prev.p], dtype=np.float64),
        v_fe=np.array([state_prev.v_fe], dtype=np.float64),
        v_int=np.array([state_prev.v_int], dtype=np.float64),
        v_app=np.array([0.0]),
    )
    drive_end = np.array([drive_value], dtype=np.float64)
    fun = _make_step_fun(pb, prev, dt, drive_end, mode)
    if mode == VOLTAGE:
        x = np.array([[state_next.v_fe, state_next.v_int]])
    else:
        x = np.array([[state_next.v_fe, state_next.v_int, v_appl_trial]])
    r, _aux = fun(x)
    return tuple(float(v) for v in r[0])
