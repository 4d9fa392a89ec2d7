"""Segment-summed adaptive-quadrature oracles for qtilde/ell/t1/t2.

The oracles integrate the defining one-variable formulas with scipy's
adaptive Gauss-Kronrod rule, summed between every interpolation knot and
kernel kink, sharing the package's own field model (PCHIP of the bounded
variable V = X*F for the collision; PCHIP of g itself for the linear
operators).  They are independent of the package's panel quadrature.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from three_wave_kinetics import _quad


def collision_field(g):
    """The bounded-variable interpolant V = X*F the collision rate uses."""
    grid = g.grid
    return _quad.SampledField(grid.nodes, grid.nodes * g.values, 0.0, 1.0)


def linear_field(g):
    """The direct interpolant of g the linear operators use."""
    return _quad.as_field(g, None)


def _sum_quad(f, lo, hi, kinks):
    pts = [lo, hi]
    pts.extend(float(k) for k in kinks if lo < k < hi)
    pts = sorted(set(pts))
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
        total += val
    return total


def oracle_qtilde(v_field, x):
    """x^{-1/2} int_{x/2}^inf [F(|x-y|)(F(y)-F(x)) + sign(y-x)F(x)F(y)] dy
    with F(z) = V(z)/z evaluated through the bounded-variable interpolant."""
    knots = np.asarray(v_field.knots, dtype=float)
    top = knots[-1]
    fx = float(v_field(x)) / x

    def F(z):
        return float(v_field(z)) / z

    def integrand(y):
        return F(abs(x - y)) * (F(y) - fx) + np.sign(y - x) * fx * F(y)

    kinks = set(knots)
    kinks.update(x - knots)
    kinks.update(x + knots)
    kinks.add(x)
    return _sum_quad(integrand, x / 2.0, x + top, sorted(kinks)) / np.sqrt(x)


def oracle_ell(field, x):
    fx = float(field(x))
    knots = np.asarray(field.knots, dtype=float)
    top = knots[-1]

    def integrand(y):
        return (field(y) - fx) * (1.0 / abs(x - y) - 1.0 / (x + y))

    A = max(top, 2.0 * x)
    val = _sum_quad(integrand, 0.0, A, sorted(set(knots) | {x}))
    # beyond every knot: field(y) = 0 (no tail), kernel integrates exactly
    val += fx * np.log((A - x) / (A + x))
    return val / np.sqrt(x)


def oracle_t1(field, phi, x):
    fx = float(field(x))
    knots = np.asarray(field.knots, dtype=float)
    top = knots[-1]
    R = phi.R

    def chi(z):
        return phi(z) - 1.0

    def integrand(y):
        return (field(y) - fx) * (chi(abs(x - y)) / abs(x - y)
                                  - chi(x + y) / (x + y))

    kinks = set(knots) | {x}
    for edge in (R / 2.0, R):
        kinks.update({x - edge, x + edge, edge - x})
    A = max(top, 2.0 * x, x + R)
    val = _sum_quad(integrand, 0.0, A, sorted(kinks))
    # tail: field = 0 and chi = -1 at every reached argument
    val += -fx * np.log((A - x) / (A + x))
    return val / np.sqrt(x)


def oracle_t2(field, phi, x):
    phx = float(phi(x))
    knots = np.asarray(field.knots, dtype=float)
    top = knots[-1]
    R = phi.R

    def integrand(y):
        return (field(y) / y) * (np.sign(x - y) * (phi(abs(x - y)) - phx)
                                 + phi(x + y) - phx)

    kinks = set(knots) | {x}
    for edge in (R / 2.0, R):
        kinks.update({x - edge, x + edge, edge - x})
    return _sum_quad(integrand, 0.0, top, sorted(kinks)) / np.sqrt(x)
