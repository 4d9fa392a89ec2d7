"""Isotropic three-wave collision operators on the energy half-line.

The central object is the quadratic collision value

    qtilde(F)(X) = X^{-1/2} ∫_{X/2}^∞ [ F(|X-Y|)(F(Y) - F(X))
                                         + sign(Y-X) F(X) F(Y) ] dY

acting on isotropic spectral densities F, normalized so that the weak-form
flux split of :mod:`moments_flux` satisfies a1 + a2 = ∫ qtilde(F) sqrt(X) dX
exactly.  Equilibrium power laws F = c/X are annihilated pointwise; the
implementation evaluates the integrand in a difference form that preserves
this cancellation in floating point (see :mod:`_quad`).

`q_n` is the same operator transported to bounded variables g = X*F, i.e.
q_n(g)(X) = X * qtilde(g/·)(X), evaluated over the two regions (0, X/2) and
(X, ∞) that the symmetrized integral folds onto.

`qtilde_q` is the quantum (Bose) variant whose gain/loss structure makes
Bose-Einstein data 1/(e^X - 1) stationary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _quad
from .errors import DivergenceError
from .grid_space import CutoffProfile, GridFunction, weighted_norm

__all__ = [
    "TailModel",
    "qtilde",
    "qtilde_q",
    "q_n",
    "qn_phi",
    "qn_lipschitz_gap",
    "c_phi",
]


@dataclass(frozen=True)
class TailModel:
    """Power-law closure beyond the last grid node: F(Y) ≈ c Y^{-1-q}.

    Equivalently, in bounded variables, g(Y) = Y F(Y) ≈ c Y^{-q}.  The
    exponent must be positive so that F(Y)/Y-type tails are integrable;
    values arbitrarily close to zero are allowed (use e.g. q = 1e-12 to
    emulate an equilibrium tail).
    """

    amplitude: float
    exponent: float

    def __post_init__(self) -> None:
        c = float(self.amplitude)
        q = float(self.exponent)
        if not np.isfinite(c):
            raise ValueError(f"tail amplitude must be finite, got {c!r}")
        if not (q > 0.0) or not np.isfinite(q):
            raise ValueError(f"tail exponent must be positive, got {q!r}")
        object.__setattr__(self, "amplitude", c)
        object.__setattr__(self, "exponent", q)


ZERO_TAIL = TailModel(0.0, 1.0)


def _v_field(F, tail, knots=()):
    """Field for g = X*F from F given as samples or as a callable."""
    values = getattr(F, "values", None)
    if values is not None:
        tc = 0.0 if tail is None else tail.amplitude
        tq = 1.0 if tail is None else tail.exponent
        return _quad.SampledField(F.grid.nodes, F.grid.nodes * values, tc, tq)
    if callable(F):
        tc = 0.0 if tail is None else tail.amplitude
        tq = 1.0 if tail is None else tail.exponent
        extra = tuple(knots) or tuple(getattr(F, "knots", ()))
        return _quad.CallableField(
            lambda z: z * np.asarray(F(z), dtype=float),
            knots=extra, tail_c=tc, tail_q=tq,
            support_top=getattr(F, "support_top", None))
    raise TypeError(f"cannot interpret {type(F).__name__} as a spectral density")


def qtilde(F, x: float, tail: TailModel | None = None, *,
           n_gl: int = 7, per_decade: float = 4.0) -> float:
    """Collision value of the classical operator at X.

    ``F`` may be a GridFunction of density samples or a plain vectorized
    callable (optionally carrying ``knots``/``support_top`` attributes for
    quadrature alignment).  ``tail`` closes the integral beyond the last
    node.  Evaluation points are expected at grid nodes when sampled data
    is supplied, but any X > 0 is accepted.
    """
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x!r}")
    field = _v_field(F, tail)
    return _quad.qn_value(field, x, n_gl=n_gl, per_decade=per_decade) / x


def q_n(g: GridFunction, x: float, tail: TailModel | None = None, *,
        n_gl: int = 7, per_decade: float = 4.0) -> float:
    """Collision value in bounded variables: q_n(g) = X * qtilde(g/·).

    Evaluated over the folded inner region (0, X/2) and the region (X, ∞)
    of the symmetrized integral (the four elementary terms pair into two
    brackets per region; see :func:`_quad.qn_parts`).  Raises
    :class:`DivergenceError` when the samples grow toward the origin, since
    then g/X fails the bounded-variable premise.
    """
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x!r}")
    field = _quad.as_field(g, tail)
    _origin_check(field)
    return _quad.qn_value(field, x, n_gl=n_gl, per_decade=per_decade)


def _origin_check(field) -> None:
    values = getattr(field, "values", None)
    if values is None or values.size < 8:
        return
    head = np.abs(values[:8])
    if np.any(head == 0.0):
        return
    x = field.nodes[:8]
    slope = np.polyfit(np.log(x), np.log(head), 1)[0]
    if slope < -0.1 and head[0] > 10.0 * head[-1]:
        raise DivergenceError(
            "samples grow toward the origin (fitted slope "
            f"{slope:.3g}); the bounded-variable operator requires X*F bounded"
        )


def qtilde_q(F, x: float, tail: TailModel | None = None, *,
             n_gl: int = 7, per_decade: float = 4.0) -> float:
    """Quantum (Bose) collision value at X.

    X^{-1/2} ∫_0^X [F(X-Y)F(Y) - F(X)(1 + F(X-Y) + F(Y))] dY
      + 2 X^{-1/2} ∫_X^∞ [F(Y)(1 + F(Y-X) + F(X)) - F(Y-X)F(X)] dY.

    The first integrand is symmetric under Y <-> X-Y, so it is folded onto
    (0, X/2) and grouped as F(Y)(F(X-Y) - F(X)) - F(X)(1 + F(X-Y)), which
    is bounded; the second is grouped as F(Y)(1 + F(X)) + F(Y-X)(F(Y)-F(X)),
    also bounded.  Bose-Einstein data satisfies the detailed-balance
    identity pointwise, so it is annihilated up to quadrature error.
    """
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x!r}")
    field = _v_field(F, tail)

    def f_of(z):
        return field(z) / z

    fx = float(field(x)) / x
    knots = np.asarray(field.knots, dtype=float)

    half = 0.5 * x
    kin = np.concatenate([knots, x - knots])
    edges = _quad.build_edges(_quad._ETA * half, half,
                              kin[(kin > 0) & (kin < half)], per_decade)
    y, w = _quad.panel_points(edges, n_gl)
    fy = f_of(y)
    fxy = f_of(x - y)
    inner = w @ (fy * (fxy - fx) - fx * (1.0 + fxy))

    hi = _quad._outer_cut(field, x)
    kout = np.concatenate([knots, x + knots, [2.0 * x]])
    zk = kout[(kout > x * (1.0 + 1e-13)) & (kout < hi)] - x
    z_edges = _quad.build_edges(_quad._ETA * x, hi - x, zk, per_decade)
    z, w = _quad.panel_points(z_edges, n_gl)
    fy = f_of(x + z)
    fz = f_of(z)
    outer = w @ (fy * (1.0 + fx) + fz * (fy - fx))

    return float((2.0 * inner + 2.0 * outer) / np.sqrt(x))


def c_phi(phi: CutoffProfile) -> float:
    """Plateau constant of the cutoff source: the small-X limit of
    qn_phi(X)/sqrt(X) equals c_phi(phi) = (∫_{1/2}^1 base(z)^2 z^{-2} dz - 2)/R."""
    edges = np.linspace(0.5, 1.0, 17)
    z, w = _quad.panel_points(edges, 12)
    b = phi.base_profile(z)
    integral = float(w @ (b * b / (z * z)))
    return (integral - 2.0) / phi.R


def qn_phi(phi: CutoffProfile, x: float, *,
           n_gl: int = 10, per_decade: float = 5.0) -> float:
    """Collision value of the cutoff profile itself, Q_N(φ)(X).

    Piecewise strategy: exact zero for X ≥ 2R (the integrand has empty
    support there); for X < R/2 a reduced representation in χ = 1 - φ whose
    three pieces live on bounded intervals

        J1 = ∫_{X+R/2}^{X+R} χ(Y-X) χ(Y) / ((Y-X) Y) dY
        J2 = ∫_{R/2}^{X+R} (χ(Y-X) - χ(Y)) / (X Y) dY
        J3 = ∫_{R/2}^{X+R} χ(Y) / (Y (Y-X)) dY

    with Q_N(φ)(X) = sqrt(X) (J1 + J2 - J3) — the plateau part of φ drops
    out identically and the far tails of the pieces cancel exactly; and the
    generic difference-form quadrature in between.
    """
    x = float(x)
    if x <= 0.0:
        raise ValueError(f"evaluation point must be positive, got {x!r}")
    R = phi.R
    if x >= 2.0 * R:
        return 0.0
    if x >= 0.5 * R:
        field = _quad.CallableField(lambda z: phi(z), knots=(0.5 * R, R),
                                    tail_c=0.0, tail_q=1.0, support_top=R)
        return _quad.qn_value(field, x, n_gl=n_gl, per_decade=per_decade)

    def chi(z):
        return 1.0 - phi(z)

    def quad(fn, a, b, kn):
        e = _quad.build_edges(a, b, kn, per_decade)
        p, w = _quad.panel_points(e, n_gl)
        return float(w @ fn(p))

    j1 = quad(lambda y: chi(y - x) * chi(y) / ((y - x) * y),
              x + 0.5 * R, x + R, (R,))
    j2 = quad(lambda y: (chi(y - x) - chi(y)) / (x * y),
              0.5 * R, x + R, (R, x + 0.5 * R))
    j3 = quad(lambda y: chi(y) / (y * (y - x)),
              0.5 * R, x + R, (R, x + 0.5 * R))
    return float(np.sqrt(x) * (j1 + j2 - j3))


def qn_lipschitz_gap(g: GridFunction, h: GridFunction,
                     tail: TailModel | None = None, *,
                     n_gl: int = 5, per_decade: float = 3.0) -> float:
    """Measured Lipschitz quotient of the bounded-variable operator.

    With weight tags g, h in the space X^{-r}(1+X)^{r+q} (so theta = -r and
    rho = r + q on both inputs), returns

        ||q_n(g) - q_n(h)||_{1/2-r, r+q}
        -------------------------------------------------
        ||g - h||_{-r, r+q} (||g||_{-r, r+q} + ||h||_{-r, r+q})

    Raises ZeroDivisionError for identical inputs.
    """
    if g.theta is None or g.rho is None:
        raise ValueError("g must carry weight tags (theta, rho)")
    if (h.theta, h.rho) != (g.theta, g.rho):
        raise ValueError("g and h must carry identical weight tags")
    if g.grid is not h.grid and not np.array_equal(g.grid.nodes, h.grid.nodes):
        raise ValueError("g and h must share a grid")
    r = -g.theta
    q = g.rho + g.theta
    if not (0.0 < r < 0.5):
        raise ValueError(f"weight tags imply r = {r!r}, need 0 < r < 1/2")

    plan = _quad.QnPlan(g.grid, tail, n_gl=n_gl, per_decade=per_decade)
    qn_g = plan(g.values)
    qn_h = plan(h.values)

    den_diff = weighted_norm(GridFunction(g.grid, g.values - h.values), -r, r + q)
    den_size = (weighted_norm(g, -r, r + q) + weighted_norm(h, -r, r + q))
    den = den_diff * den_size
    if den == 0.0:
        raise ZeroDivisionError("identical inputs: Lipschitz quotient undefined")
    num = weighted_norm(GridFunction(g.grid, qn_g - qn_h), 0.5 - r, r + q)
    return float(num / den)
