"""Linearization of the collision operator around a condensate plateau.

Writing the bounded-variable data as f = lam*phi + g, with phi a smooth
cutoff profile which is 1 near the origin, the quadratic collision value
splits into

    Q_N(f)(X) = lam^2 Q_N(phi)(X)
              + lam   [ L(g) + T1(g, phi) + T2(g, phi) ](X)
              + Q_N(g)(X),

where L is the phi-independent principal part, T1 carries the cutoff
correction through chi = phi - 1 (supported where kernel arguments leave
the plateau), and T2 collects the polarization terms weighted by g(Y)/Y.
The cross coefficient is exactly 1 in this normalization; it is exposed as
``CONVENTION_FACTOR`` and as an argument of :func:`decomposition_residual`
so the identity can be probed against the alternative factor 2 that a
doubled operator normalization would produce.
"""

from __future__ import annotations

import numpy as np

from . import _quad
from .collision import TailModel, qn_phi
from .grid_space import CutoffProfile, GridFunction

__all__ = [
    "CONVENTION_FACTOR",
    "ell",
    "t1",
    "t2",
    "ell_phi",
    "decomposition_residual",
]

# Cross-term coefficient of the quadratic/linear split in this operator
# normalization.  Fixed by the decomposition identity; see module docstring.
CONVENTION_FACTOR = 1.0

_ETA = 1e-10
_SPAN = 1e4


def _field_and_fx(g, tail, x):
    field = _quad.as_field(g, tail)
    return field, float(field(x))


def _pair_value(field, fx, x, kern, lo, hi, knots, n_gl, per_decade):
    """∫_lo^hi (g(Y) - g(X)) kern(Y) dY by knot-aligned panels."""
    kn = np.asarray(knots, dtype=float)
    edges = _quad.build_edges(lo, hi, kn[(kn > lo) & (kn < hi)], per_decade)
    y, w = _quad.panel_points(edges, n_gl)
    return float(w @ ((field(y) - fx) * kern(y)))


def _far_tail(field, fx, x, yhi, sign=1.0):
    """Closed-form remainder of ∫_yhi^∞ (g(Y)-g(X)) (1/(Y-X) - 1/(X+Y)) dY.

    The constant part integrates exactly; the power tail c Y^{-q} uses the
    large-Y kernel 2X/Y^2 (relative error O((X/yhi)^2)).
    """
    c = field.tail_c
    q = field.tail_q
    rem = -fx * np.log((yhi + x) / (yhi - x))
    if c != 0.0:
        rem += c * 2.0 * x * yhi ** (-q - 1.0) / (q + 1.0)
    return sign * rem


def ell(g, x: float, tail: TailModel | None = None, *,
        n_gl: int = 7, per_decade: float = 4.0) -> float:
    """Principal linear part: X^{-1/2} ∫ (g(Y)-g(X)) (1/|X-Y| - 1/(X+Y)) dY.

    The integrand is bounded (difference quotient at the |X-Y| kink, O(Y)
    near the origin) and decays like Y^{-2}; the integral over (yhi, ∞) is
    closed in exact form.
    """
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x!r}")
    field, fx = _field_and_fx(g, tail, x)
    top = field.x_max if np.isfinite(field.x_max) else x
    yhi = _SPAN * (x + top)

    def kern(y):
        return 1.0 / np.abs(x - y) - 1.0 / (x + y)

    knots = np.concatenate([np.asarray(field.knots, dtype=float), [x]])
    lo = _ETA * min(x, field.x_min if field.x_min > 0 else x)
    val = _pair_value(field, fx, x, kern, lo, yhi, knots, n_gl, per_decade)
    val += _far_tail(field, fx, x, yhi, sign=1.0)
    return float(val / np.sqrt(x))


def t1(g, phi: CutoffProfile, x: float, tail: TailModel | None = None, *,
       n_gl: int = 7, per_decade: float = 4.0) -> float:
    """Cutoff correction with chi = phi - 1:

    X^{-1/2} ∫ (g(Y)-g(X)) (chi(|X-Y|)/|X-Y| - chi(X+Y)/(X+Y)) dY.

    chi vanishes on the plateau, so for X < R/4 the window
    Y in (0, R/2 - X) contributes nothing and is skipped outright — data
    supported in the plateau with g(X) = 0 yields an exact zero.
    """
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x!r}")
    field, fx = _field_and_fx(g, tail, x)
    R = phi.R
    top = field.x_max if np.isfinite(field.x_max) else x
    yhi = _SPAN * (x + top + R)

    def kern(y):
        chi_a = phi(np.abs(x - y)) - 1.0
        chi_s = phi(x + y) - 1.0
        return chi_a / np.abs(x - y) - chi_s / (x + y)

    knots = np.concatenate([
        np.asarray(field.knots, dtype=float),
        [x, x + 0.5 * R, x + R, abs(x - 0.5 * R), abs(x - R),
         0.5 * R - x, R - x],
    ])
    if x < 0.25 * R:
        lo = 0.5 * R - x  # both kernel arguments sit on the plateau below
    else:
        lo = _ETA * min(x, field.x_min if field.x_min > 0 else x)
    val = _pair_value(field, fx, x, kern, lo, yhi, knots, n_gl, per_decade)
    val += _far_tail(field, fx, x, yhi, sign=-1.0)
    return float(val / np.sqrt(x))


def t2(g, phi: CutoffProfile, x: float, tail: TailModel | None = None, *,
       n_gl: int = 7, per_decade: float = 4.0) -> float:
    """Polarization terms weighted by g(Y)/Y:

    X^{-1/2} ∫ (g(Y)/Y) [ sign(X-Y)(phi(|X-Y|) - phi(X))
                          + phi(X+Y) - phi(X) ] dY.

    The bracket cancels to O(Y^2) as Y -> 0 (regularizing g(Y)/Y) and
    vanishes identically for Y >= X + R, so the quadrature runs on the
    bounded active region only.
    """
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x!r}")
    field, _ = _field_and_fx(g, tail, x)
    R = phi.R
    phx = float(phi(x))

    def integrand(y):
        br = (np.sign(x - y) * (phi(np.abs(x - y)) - phx)
              + phi(x + y) - phx)
        return field(y) / y * br

    knots = np.concatenate([
        np.asarray(field.knots, dtype=float),
        [x, x + 0.5 * R, abs(x - 0.5 * R), abs(x - R),
         0.5 * R - x, R - x],
    ])
    hi = x + R
    lo = _ETA * min(x, field.x_min if field.x_min > 0 else x)
    kn = knots[(knots > lo) & (knots < hi)]
    edges = _quad.build_edges(lo, hi, kn, per_decade)
    y, w = _quad.panel_points(edges, n_gl)
    val = float(w @ integrand(y))
    return float(val / np.sqrt(x))


def ell_phi(g, phi: CutoffProfile, x: float, tail: TailModel | None = None, *,
            n_gl: int = 7, per_decade: float = 4.0) -> float:
    """Full linearized operator around the plateau: L + T1 + T2."""
    kw = dict(n_gl=n_gl, per_decade=per_decade)
    return (ell(g, x, tail, **kw)
            + t1(g, phi, x, tail, **kw)
            + t2(g, phi, x, tail, **kw))


def decomposition_residual(lam: float, g: GridFunction, phi: CutoffProfile,
                           x: float, tail: TailModel | None = None,
                           convention_factor: float = CONVENTION_FACTOR, *,
                           n_gl: int = 8, per_decade: float = 4.0) -> float:
    """Raw defect of the quadratic/linear split at X:

        Q_N(lam*phi + g)(X) - [ lam^2 Q_N(phi)(X)
                                + factor * lam * (L + T1 + T2)(g)(X)
                                + Q_N(g)(X) ].

    All terms share one interpolant for g and the exact profile for phi,
    so the returned number reflects quadrature consistency of the identity
    rather than interpolation differences.
    """
    lam = float(lam)
    x = float(x)
    sg = _quad.as_field(g, tail)
    R = phi.R

    support = np.inf if sg.tail_c != 0.0 else max(sg.x_max, R)
    f_field = _quad.CallableField(
        lambda z: lam * phi(z) + sg(z),
        knots=np.concatenate([sg.knots, [0.5 * R, R]]),
        tail_c=sg.tail_c, tail_q=sg.tail_q,
        support_top=support)

    lhs = _quad.qn_value(f_field, x, n_gl=n_gl, per_decade=per_decade)
    kw = dict(n_gl=n_gl, per_decade=per_decade)
    cross = (ell(sg, x, tail, **kw)
             + t1(sg, phi, x, tail, **kw)
             + t2(sg, phi, x, tail, **kw))
    rhs = (lam * lam * qn_phi(phi, x)
           + float(convention_factor) * lam * cross
           + _quad.qn_value(sg, x, n_gl=n_gl, per_decade=per_decade))
    return float(lhs - rhs)
