"""Time stepping for the spectrum and the spectrum-condensate system.

The reduced equation evolves the bounded variable V = X*F by V_t = Q_N(V).
The coupled system additionally carries the condensate density n, which
multiplies the collision term (V_tau = n Q_N(V)) and absorbs the number flux
the spectrum sends through the origin (n' = -n * flux).  The flux is priced
with the same moment-rule weights that define the spectrum's number integral
(:func:`moments_flux.moment_rule_weights`): the condensate gains exactly what
the resolved spectrum loses, stage by stage, so n + M_half is conserved to
rounding at any resolution instead of drifting at the boundary-closure error.
The internal clock t = ∫ n dσ is accumulated alongside with the same
Runge-Kutta weights, so (tau, t_internal) stay consistent to integrator order.

Steps are explicit fourth-order Runge-Kutta with a stability bound derived
from the local loss-term coefficient (:func:`stable_dt`).  The collision
quadrature is plan-based — a static point set bound to the grid — so a step
costs one monotone-cubic coefficient build per stage plus vectorized
polynomial evaluation.  Build the plan once per run and pass it in; the
``plan=None`` slow path rebuilds it on every call.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import PchipInterpolator

from . import _quad
from .collision import TailModel
from .errors import (DivergenceError, NonmonotoneError, NumericsError,
                     StabilityError)
from .grid_space import (CutoffProfile, Grid, GridFunction, _panel_weights,
                         extrapolate_origin, make_log_grid)
from .moments_flux import moment, moment_rule_weights

__all__ = [
    "CoupledState",
    "Trajectory",
    "TRAJECTORY_COLUMNS",
    "make_collision_plan",
    "stable_dt",
    "step_reduced",
    "step_coupled",
    "run_scenario",
    "time_maps",
]

TRAJECTORY_COLUMNS = ("tau", "t_internal", "n", "lambda_hat",
                      "M_half", "M_threehalf", "flux")


@dataclass(frozen=True)
class CoupledState:
    """Spectrum V = X*F plus condensate density and the two clocks.

    ``t_internal`` is the transformed time ∫_0^tau n dσ; the steppers keep
    it consistent with ``tau`` to integrator order.
    """

    v: GridFunction
    n: float
    tau: float = 0.0
    t_internal: float = 0.0

    def __post_init__(self) -> None:
        n = float(self.n)
        tau = float(self.tau)
        t = float(self.t_internal)
        if not np.isfinite(n) or not (n > 0.0):
            raise ValueError(f"condensate density must be positive, got {n!r}")
        if not np.isfinite(tau) or tau < 0.0:
            raise ValueError(f"tau must be a nonnegative time, got {tau!r}")
        if not np.isfinite(t) or t < 0.0:
            raise ValueError(f"t_internal must be nonnegative, got {t!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "t_internal", t)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "tau": self.tau,
            "t_internal": self.t_internal,
            "theta": self.v.theta,
            "rho": self.v.rho,
            "nodes": self.v.grid.nodes.tolist(),
            "values": self.v.values.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoupledState":
        nodes = np.asarray(data["nodes"], dtype=float)
        grid = Grid(nodes=nodes, weights=_panel_weights(nodes),
                    x_max=float(nodes[-1]))
        v = GridFunction(grid, np.asarray(data["values"], dtype=float),
                         theta=data.get("theta"), rho=data.get("rho"))
        return cls(v=v, n=data["n"], tau=data["tau"],
                   t_internal=data["t_internal"])

    def save(self, path) -> None:
        """Checkpoint the full state as a JSON document."""
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "CoupledState":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Trajectory:
    """Immutable record of a run: one row per output step, final state attached.

    Columns are :data:`TRAJECTORY_COLUMNS`, in order.
    """

    data: np.ndarray
    final_state: CoupledState

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(TRAJECTORY_COLUMNS):
            raise ValueError(
                f"trajectory rows need {len(TRAJECTORY_COLUMNS)} columns")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, TRAJECTORY_COLUMNS.index(name)]
        except ValueError:
            raise ValueError(f"unknown trajectory column {name!r}") from None

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
            for row in self.data:
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def make_collision_plan(grid, tail: TailModel | None = None, *,
                        n_gl: int = 5, per_decade: float = 3.0,
                        stride: int = 1) -> _quad.QnPlan:
    """Collision quadrature bound to a grid, reusable across steps."""
    return _quad.QnPlan(grid, tail, n_gl=n_gl, per_decade=per_decade,
                        stride=max(1, int(stride)))


def stable_dt(v: GridFunction, tail: TailModel | None = None,
              c_stab: float = 0.5) -> float:
    """Step bound c_stab / max_X D(X) for the reduced equation.

    D(X) = 2 X^{-1/2} ∫_{X/2}^∞ |F(Y)| dY estimates the diagonal of the
    collision operator's derivative (its local loss coefficient).  For the
    coupled system divide the returned bound by the current condensate
    density, since the collision term there is n * Q_N.  Heavy tails (small
    exponent) make the bound conservative; that is deliberate.
    """
    c_stab = float(c_stab)
    if not (c_stab > 0.0):
        raise ValueError(f"c_stab must be positive, got {c_stab!r}")
    nodes = v.grid.nodes
    f = np.abs(v.values) / nodes
    incr = 0.5 * (f[1:] + f[:-1]) * np.diff(nodes)
    cum = np.concatenate([np.cumsum(incr[::-1])[::-1], [0.0]])
    if tail is not None and tail.amplitude != 0.0:
        cum = cum + abs(tail.amplitude) * nodes[-1] ** (-tail.exponent) / tail.exponent
    half = 0.5 * nodes
    ih = np.interp(half, nodes, cum)
    below = half < nodes[0]
    if np.any(below):
        # below the grid V extends as a constant, so F = V_1/Y there
        ih[below] += abs(float(v.values[0])) * np.log(nodes[0] / half[below])
    dmax = float(np.max(2.0 * ih / np.sqrt(nodes)))
    if dmax == 0.0:
        return float("inf")
    return c_stab / dmax


def _sign_flip_guard(before: np.ndarray, after: np.ndarray) -> None:
    if not np.all(before > 0.0):
        return
    flips = int(np.count_nonzero(after < 0.0))
    if flips > 0.05 * after.size:
        raise StabilityError(
            f"time step flipped the sign of {flips}/{after.size} nodes of a "
            "positive state; reduce dt below the stable_dt bound")


def step_reduced(v: GridFunction, dt: float, tail: TailModel | None = None, *,
                 plan: _quad.QnPlan | None = None, n_gl: int = 5,
                 per_decade: float = 3.0, stride: int = 1) -> GridFunction:
    """One explicit RK4 step of V_t = Q_N(V) at every node.

    Raises :class:`StabilityError` when the step flips the sign of more
    than 5% of the nodes of a previously positive state.
    """
    dt = float(dt)
    if not np.isfinite(dt) or dt <= 0.0:
        raise ValueError(f"dt must be a positive time, got {dt!r}")
    if plan is None:
        plan = make_collision_plan(v.grid, tail, n_gl=n_gl,
                                   per_decade=per_decade, stride=stride)
    v0 = v.values
    k1 = plan(v0)
    k2 = plan(v0 + 0.5 * dt * k1)
    k3 = plan(v0 + 0.5 * dt * k2)
    k4 = plan(v0 + dt * k3)
    out = v0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _sign_flip_guard(v0, out)
    return v.with_values(out)


def step_coupled(state: CoupledState, dtau: float,
                 tail: TailModel | None = None, *,
                 plan: _quad.QnPlan | None = None,
                 weights: np.ndarray | None = None,
                 n_gl: int = 5, per_decade: float = 3.0,
                 stride: int = 1) -> CoupledState:
    """One shared RK4 step of V_tau = n Q_N(V), n' = -n * flux(V/X).

    The flux at every stage is the moment-rule functional w @ Q_N — the
    number the resolved spectrum loses under that stage's collision values,
    priced by the same quadrature weights that define moment(F, 1/2).  The
    condensate therefore absorbs exactly the spectrum's number loss and
    n + M_half is invariant to rounding; precompute ``weights`` with
    :func:`moments_flux.moment_rule_weights` (grid, 1/2) to amortize.  All
    three unknowns — V, n and the internal clock — advance through the same
    stage values, which also keeps d(ln n)/dtau equal to minus the recorded
    flux.
    """
    dtau = float(dtau)
    if not np.isfinite(dtau) or dtau <= 0.0:
        raise ValueError(f"dtau must be a positive time, got {dtau!r}")
    grid = state.v.grid
    if plan is None:
        plan = make_collision_plan(grid, tail, n_gl=n_gl,
                                   per_decade=per_decade, stride=stride)
    if weights is None:
        weights = moment_rule_weights(grid, 0.5)

    def rhs(vals, n):
        q = plan(vals)
        return n * q, -n * float(weights @ q)

    v0 = state.v.values
    n0 = state.n
    k1v, k1n = rhs(v0, n0)
    k2v, k2n = rhs(v0 + 0.5 * dtau * k1v, n0 + 0.5 * dtau * k1n)
    k3v, k3n = rhs(v0 + 0.5 * dtau * k2v, n0 + 0.5 * dtau * k2n)
    k4v, k4n = rhs(v0 + dtau * k3v, n0 + dtau * k3n)
    v1 = v0 + (dtau / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    n1 = n0 + (dtau / 6.0) * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
    _sign_flip_guard(v0, v1)
    if not (n1 > 0.0):
        raise StabilityError(
            f"condensate density went nonpositive (n = {n1:.6g} after a tau "
            f"step of {dtau:g})")
    # same RK weights applied to dt/dtau = n
    t1 = state.t_internal + (dtau / 6.0) * (
        n0 + 2.0 * (n0 + 0.5 * dtau * k1n) + 2.0 * (n0 + 0.5 * dtau * k2n)
        + (n0 + dtau * k3n))
    return CoupledState(v=state.v.with_values(v1), n=n1,
                        tau=state.tau + dtau, t_internal=t1)


def _initial_values(spec, grid, phi: CutoffProfile | None) -> np.ndarray:
    """Node samples of the initial V from a small declarative description."""
    spec = dict(spec or {})
    kind = str(spec.get("kind", "cutoff"))
    x = grid.nodes
    if kind == "cutoff":
        if phi is None:
            raise ValueError("initial data 'cutoff' needs a cutoff profile")
        return np.asarray(phi(x), dtype=float)
    if kind == "rayleigh-jeans":
        return np.full(grid.n, float(spec.get("amplitude", 1.0)))
    if kind in ("bump", "rj-bump"):
        center = float(spec.get("center", 1.0))
        width = float(spec.get("width", 0.5))
        if center <= 0.0 or width <= 0.0:
            raise ValueError("bump center and width must be positive")
        amp_key = "bump_amplitude" if kind == "rj-bump" else "amplitude"
        amp = float(spec.get(amp_key, 0.1))
        u = (np.log(x) - np.log(center)) / width
        out = np.zeros(grid.n)
        inside = np.abs(u) < 1.0
        out[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        if kind == "rj-bump":
            out += float(spec.get("amplitude", 1.0))
        return out
    raise ValueError(f"unknown initial data kind {kind!r}")


def run_scenario(config) -> Trajectory:
    """Integrate an evolve-* scenario and record the observable trace.

    ``config`` is duck-typed (the command line driver passes its validated
    ScenarioConfig): ``scenario`` ("evolve-reduced" or "evolve-coupled"),
    ``grid`` = (x_min, x_max, n), ``cutoff`` = (R, base) or a CutoffProfile
    or None, ``tail`` = (c, q) or a TailModel or None, ``initial`` = optional
    mapping with a ``kind`` of cutoff | rayleigh-jeans | bump | rj-bump,
    ``integrator`` = optional mapping (keys below), ``out`` = optional
    output directory.

    Integrator keys, all optional: ``dt`` (fixed step; default is the
    :func:`stable_dt` bound, recomputed each output block and divided by n
    in coupled runs), ``c_stab``, ``horizon`` (tau cap, default 0.25),
    ``lambda_drift`` (early stop when the measured origin amplitude drifts
    by this fraction; default 0.1 for coupled runs, off for reduced ones),
    ``output_every`` (steps per recorded row, default 10), ``n0`` (initial
    condensate density, coupled only), ``origin_fit_r``, and the quadrature
    knobs ``qn_n_gl``, ``qn_per_decade``, ``qn_stride``.

    Each recorded row holds (tau, t_internal, n, lambda_hat, M_half,
    M_threehalf, flux); ``lambda_hat`` is measured by
    :func:`grid_space.extrapolate_origin`, never evolved.  A moment that
    diverges under the declared tail is recorded as NaN rather than
    aborting the run.  With an output
    directory set, ``trajectory.csv`` and ``checkpoint.json`` are written —
    also on numerical failure, where they hold the last good state before
    the error is re-raised.  While the measured origin amplitude is
    positive, the condensate density must increase across every accepted
    step; a decrease raises :class:`NonmonotoneError`.
    """
    scenario = str(config.scenario)
    if scenario not in ("evolve-reduced", "evolve-coupled"):
        raise ValueError(
            f"run_scenario handles the evolve-* scenarios, got {scenario!r}")
    coupled = scenario == "evolve-coupled"

    x_min, x_max, n_nodes = config.grid
    grid = make_log_grid(float(x_min), float(x_max), int(n_nodes))
    cut = getattr(config, "cutoff", None)
    if cut is None or isinstance(cut, CutoffProfile):
        phi = cut
    else:
        phi = CutoffProfile(*cut)
    tl = getattr(config, "tail", None)
    if tl is not None and not isinstance(tl, TailModel):
        tl = TailModel(*tl)
    integ = dict(getattr(config, "integrator", None) or {})

    horizon = float(integ.get("horizon", 0.25))
    if not np.isfinite(horizon) or horizon <= 0.0:
        raise ValueError(f"horizon must be a positive time, got {horizon!r}")
    drift = integ.get("lambda_drift", 0.10 if coupled else None)
    drift = None if drift is None else float(drift)
    out_every = int(integ.get("output_every", 10))
    if out_every < 1:
        raise ValueError(f"output_every must be at least 1, got {out_every}")
    c_stab = float(integ.get("c_stab", 0.5))
    dt_fixed = integ.get("dt")
    fit_r = float(integ.get("origin_fit_r", 0.25))
    n0 = float(integ.get("n0", 1.0)) if coupled else 1.0

    plan = make_collision_plan(
        grid, tl, n_gl=int(integ.get("qn_n_gl", 5)),
        per_decade=float(integ.get("qn_per_decade", 3.0)),
        stride=int(integ.get("qn_stride", 2)))
    w_half = moment_rule_weights(grid, 0.5)

    state = CoupledState(v=GridFunction(grid, _initial_values(
        getattr(config, "initial", None), grid, phi)), n=n0)
    out_dir = getattr(config, "out", None)
    rows: list[tuple] = []

    def safe_moment(f_gf: GridFunction, p: float) -> float:
        # a diverging diagnostic (e.g. the energy moment under a heavy
        # declared tail) must not abort the run; the column goes NaN
        try:
            return moment(f_gf, p, tl)
        except DivergenceError:
            return float("nan")

    def observe(st: CoupledState) -> float:
        lam = extrapolate_origin(st.v, fit_r)
        f_gf = st.v.with_values(st.v.values / grid.nodes)
        rows.append((st.tau, st.t_internal, st.n, lam,
                     safe_moment(f_gf, 0.5), safe_moment(f_gf, 1.5),
                     float(w_half @ plan(st.v.values))))
        return lam

    eps = 1.0 - 1e-9
    try:
        lam0 = lam_last = observe(state)
        while state.tau < horizon * eps:
            if dt_fixed is not None:
                dt = float(dt_fixed)
            else:
                dt = stable_dt(state.v, tl, c_stab) / (state.n if coupled else 1.0)
                dt = min(dt, horizon)
            for _ in range(out_every):
                if state.tau >= horizon * eps:
                    break
                step = min(dt, horizon - state.tau)
                prev_n = state.n
                if coupled:
                    state = step_coupled(state, step, tl, plan=plan,
                                         weights=w_half)
                    if lam_last > 0.0 and state.n <= prev_n:
                        raise NonmonotoneError(
                            "condensate density failed to increase while the "
                            f"origin amplitude is positive (n: {prev_n:.12g} "
                            f"-> {state.n:.12g} at tau = {state.tau:.6g})")
                else:
                    v1 = step_reduced(state.v, step, tl, plan=plan)
                    state = CoupledState(v=v1, n=1.0, tau=state.tau + step,
                                         t_internal=state.t_internal + step)
            lam_last = observe(state)
            if drift is not None and abs(lam_last - lam0) > drift * abs(lam0):
                break
    except NumericsError:
        if out_dir is not None:
            _write_outputs(rows, state, out_dir)
        raise

    trajectory = Trajectory(np.asarray(rows, dtype=float), state)
    if out_dir is not None:
        _write_outputs(rows, state, out_dir)
    return trajectory


def _write_outputs(rows, state: CoupledState, out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    Trajectory(np.asarray(rows, dtype=float), state).to_csv(
        os.path.join(out_dir, "trajectory.csv"))
    state.save(os.path.join(out_dir, "checkpoint.json"))


def _trace(trace, name: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        abscissae, values = trace
    except (TypeError, ValueError):
        raise ValueError(
            f"{name} trace must be a pair (abscissae, values)") from None
    a = np.asarray(abscissae, dtype=float)
    v = np.asarray(values, dtype=float)
    if a.ndim != 1 or a.shape != v.shape or a.size < 2:
        raise ValueError(f"{name} trace needs matching 1-d arrays "
                         "with at least two samples")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(v))):
        raise ValueError(f"{name} trace contains non-finite entries")
    if np.any(np.diff(a) <= 0.0):
        raise NonmonotoneError(
            f"{name} trace abscissae must be strictly increasing")
    return a, v


def time_maps(lambda_trace, n_trace):
    """Time-change maps from sampled traces: (tau_of_t, t_of_tau, taubar_of_t).

    ``n_trace`` samples n(tau) on a strictly increasing tau ladder;
    ``lambda_trace`` samples λ(t) on a strictly increasing t ladder; each is
    a pair (abscissae, values).  t(tau) = ∫ n dσ and τ̄(t) = ∫ λ ds are
    accumulated by trapezoid from the first sample on; the inverse map is
    monotone-cubic interpolation of the accumulated pairs, so composing
    tau_of_t with t_of_tau is exact at the trace knots.  Nonpositive trace
    values would break strict monotonicity of the maps and raise
    :class:`NonmonotoneError`.
    """
    t_s, lam = _trace(lambda_trace, "lambda")
    tau_s, nv = _trace(n_trace, "n")
    if np.any(nv <= 0.0):
        raise NonmonotoneError("n trace must be positive for t(tau) to be "
                               "strictly increasing")
    if np.any(lam <= 0.0):
        raise NonmonotoneError("lambda trace must be positive for taubar(t) "
                               "to be strictly increasing")
    t_cum = cumulative_trapezoid(nv, tau_s, initial=0.0)
    if np.any(np.diff(t_cum) <= 0.0):
        raise NonmonotoneError("accumulated t(tau) is not strictly increasing")
    taubar = cumulative_trapezoid(lam, t_s, initial=0.0)
    return (_bounded_map(t_cum, tau_s), _bounded_map(tau_s, t_cum),
            _bounded_map(t_s, taubar))


def _bounded_map(x: np.ndarray, y: np.ndarray):
    """Monotone-cubic map defined on [x0, xn]; NaN outside.

    Queries within rounding distance of the ends snap onto them, so a
    composed pair of maps survives the last-ulp spill of its partner.
    """
    interp = PchipInterpolator(x, y, extrapolate=False)
    lo, hi = float(x[0]), float(x[-1])
    tol = 64.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0)

    def evaluate(q):
        q = np.asarray(q, dtype=float)
        q = np.where(np.abs(q - hi) <= tol, hi, q)
        q = np.where(np.abs(q - lo) <= tol, lo, q)
        return interp(q)

    return evaluate
