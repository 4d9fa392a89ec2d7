"""Moment integrals and the δ-regularized number-flux splitting.

The flux across the spectral cut X = δ is evaluated in weak (double
integral) form rather than by integrating the pointwise collision value
against √X: the flux constant survives only through cancellations that
the pointwise quadrature destroys near the origin.  The two pieces

    a1 : exchange over 0 < Y < X (X > δ),
    a2 : exchange over Y > X > δ,

both vanish identically on the equilibrium power law, and their sum is
the flux integral ∫_δ Q̃(F,F) √X dX.  The δ → 0 limit is taken by
Richardson extrapolation over a geometric δ ladder.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from . import _quad
from .collision import TailModel
from .errors import DivergenceError
from .grid_space import GridFunction

__all__ = ["moment", "moment_rule_weights", "a_delta_split", "flux_integral",
           "richardson_extrapolate"]


def moment(F: GridFunction, power: float, tail: TailModel | None = None) -> float:
    """∫_0^∞ F(X) X^power dX with closed-form closures beyond the grid.

    Interior panels integrate a cubic spline of V(X) X^power in log X
    (V = X F the bounded variable); above the last node the tail model
    F ≈ c X^{-1-q} applies.  Below the first node V is extended by the
    two-node model a + b sqrt(X) — exact for constant data, and shaped so
    that the sub-grid mass tracks the collision operator's near-origin
    sqrt(X) mode (which keeps the number budget of evolving spectra closed
    at the cut instead of drifting at O(x_min)).
    """
    p = float(power)
    nodes = F.grid.nodes
    v = nodes * F.values
    u = np.log(nodes)
    spl = CubicSpline(u, v * np.exp(p * u))
    val = float(spl.integrate(u[0], u[-1]))

    # (0, x_min]: ∫ (a + b sqrt(X)) X^{p-1} dX, finite only for p > 0
    if v[0] != 0.0:
        if p <= 0.0:
            raise DivergenceError(
                f"moment of order {p} diverges at the origin "
                f"(V({nodes[0]:g}) = {v[0]:g} extends below the grid)")
        r1 = np.sqrt(nodes[0])
        b = (float(v[1]) - float(v[0])) / (np.sqrt(nodes[1]) - r1)
        a = float(v[0]) - b * r1
        val += a * nodes[0] ** p / p + b * nodes[0] ** (p + 0.5) / (p + 0.5)

    if tail is not None and tail.amplitude != 0.0:
        c = float(tail.amplitude)
        q = float(tail.exponent)
        if q <= p:
            raise DivergenceError(
                f"moment of order {p} diverges in the tail X^{{-1-{q}}}")
        val += c * nodes[-1] ** (p - q) / (q - p)
    return val


def moment_rule_weights(grid, power: float) -> np.ndarray:
    """Weight vector w with w @ v = moment(F, power) for v = X·F on ``grid``.

    The moment rule is a fixed linear functional of the node values; the
    weights make that explicit, so a time derivative of a moment can be
    priced on the rate field by the *identical* quadrature (spline panels
    plus the two-node origin closure).  Coupled evolution relies on this:
    feeding the condensate with w @ Q_N keeps n + w @ V constant to
    rounding, because both sides of the exchange use one rule.

    The weights carry the generic (v[0] ≠ 0) origin branch and no tail
    term; fields that vanish at the first two nodes see a zero closure
    automatically.
    """
    p = float(power)
    if p <= 0.0:
        raise DivergenceError(
            f"moment rule of order {p} has no finite origin closure")
    nodes = grid.nodes
    u = np.log(nodes)
    w = np.asarray(CubicSpline(u, np.diag(np.exp(p * u))).integrate(u[0], u[-1]),
                   dtype=float)
    r1 = np.sqrt(nodes[0])
    dr = np.sqrt(nodes[1]) - r1
    c_a = nodes[0] ** p / p
    c_b = nodes[0] ** (p + 0.5) / (p + 0.5)
    w[0] += c_a * (1.0 + r1 / dr) - c_b / dr
    w[1] += c_b / dr - c_a * r1 / dr
    return w


def _flux_field(F, tail, knots):
    """Geometry field + pointwise-F evaluator for the double integrals."""
    if isinstance(F, (_quad.SampledField, _quad.CallableField)):
        return F, F, False
    if isinstance(F, GridFunction):
        tail_c = 0.0 if tail is None else float(tail.amplitude)
        tail_q = 1.0 if tail is None else float(tail.exponent)
        vf = _quad.SampledField(F.grid.nodes, F.grid.nodes * F.values,
                                tail_c, tail_q)
        return vf, (lambda z: vf(z) / z), False
    if callable(F):
        extra = tuple(knots) or tuple(getattr(F, "knots", ()))
        if not extra:
            raise ValueError("callable spectra need explicit knots for the "
                             "panel decomposition")
        tail_c = 0.0 if tail is None else float(tail.amplitude)
        tail_q = 1.0 if tail is None else float(tail.exponent)
        geo = _quad.CallableField(F, knots=extra, tail_c=tail_c,
                                  tail_q=tail_q,
                                  support_top=getattr(F, "support_top", None))
        return geo, F, True
    raise TypeError(f"cannot interpret {type(F).__name__} as a spectrum")


def a_delta_split(F, delta: float, tail: TailModel | None = None, *,
                  knots=(), n_gl: int = 7,
                  per_decade: float = 4.0) -> tuple[float, float]:
    """Two-piece flux splitting (a1, a2) at cut δ.

    Sampled spectra evaluate through the shared V interpolant; callable
    spectra are integrated with knot-graded panels (their behavior between
    knots is unknown, so both endpoint neighborhoods of every panel group
    are refined geometrically).
    """
    geo, f_eval, graded = _flux_field(F, tail, knots)
    plan = _quad.FluxPlan(geo, float(delta), n_gl=n_gl,
                          per_decade=per_decade, graded=graded)
    return plan.evaluate(f_eval)


def flux_integral(F, delta: float, tail: TailModel | None = None, *,
                  knots=(), n_gl: int = 7, per_decade: float = 4.0) -> float:
    """∫_δ^∞ Q̃(F,F)(X) √X dX in weak form; exactly a1 + a2 of the split."""
    a1, a2 = a_delta_split(F, delta, tail, knots=knots, n_gl=n_gl,
                           per_decade=per_decade)
    return a1 + a2


def richardson_extrapolate(deltas, values) -> tuple[float, float]:
    """(limit, observed_order) from samples A(δ) on a geometric δ ladder.

    Fits the tail of the sequence A(δ) = A0 + C δ^p: the observed order p
    comes from successive difference ratios, the limit from summing the
    implied geometric series.  Requires at least 3 samples; a difference
    ratio ≥ 1 means the ladder is not converging and raises ValueError.
    """
    d = np.asarray(deltas, dtype=float)
    v = np.asarray(values, dtype=float)
    if d.shape != v.shape or d.ndim != 1 or d.size < 3:
        raise ValueError("need matching 1-d ladders with at least 3 samples")
    if np.any(d <= 0.0) or np.any(np.diff(d) >= 0.0):
        raise ValueError("deltas must be positive and strictly decreasing")
    r = d[1:] / d[:-1]
    if not np.allclose(r, r[0], rtol=1e-8):
        raise ValueError("delta ladder must be geometric")

    diffs = np.diff(v)
    if diffs[-1] == 0.0 or diffs[-2] == 0.0:
        return float(v[-1]), float("inf")
    rho = diffs[-1] / diffs[-2]
    if not abs(rho) < 1.0:
        raise ValueError(
            f"sequence not converging: difference ratio {rho:.3g}")
    order = float(np.log(abs(rho)) / np.log(r[0]))
    limit = float(v[-1] + diffs[-1] * rho / (1.0 - rho))
    return limit, order
