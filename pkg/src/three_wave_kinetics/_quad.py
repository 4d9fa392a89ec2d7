"""Internal quadrature and field-interpolation machinery.

Sampled fields are interpolated monotone-cubically (PCHIP) in u = ln X,
extended by a constant below the grid (X*F is bounded at the origin) and by
the power-law tail model c X^{-q} above it.  Integrands assembled from such
fields are piecewise smooth between *knots* — the grid nodes, their images
under the changes of variable in play, and any cutoff edges — so panel
Gauss-Legendre rules whose edges are aligned with the knots converge fast
and never place a quadrature node on a kink (in particular never at Y = X).

The collision integrand is evaluated in a "difference form" that vanishes
identically — in floating point, not merely analytically — when the sampled
field is exactly constant.  This is what keeps equilibrium data stationary
to rounding instead of to quadrature tolerance.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import StabilityError

__all__ = [
    "panel_points",
    "build_edges",
    "graded_edges",
    "SampledField",
    "CallableField",
    "as_field",
    "qn_parts",
    "qn_value",
    "QnPlan",
    "FluxPlan",
]

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}

# Relative width of the sliver left unresolved at an integrable endpoint.
_ETA = 1e-10
# Multiple of the top knot out to which tail panels extend.
_TAILSPAN = 1e4


def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    try:
        return _GL_CACHE[n]
    except KeyError:
        xw = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = xw
        return xw


def panel_points(edges: np.ndarray, n_gl: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights of order ``n_gl`` on every panel."""
    x, w = _leggauss(n_gl)
    lo = edges[:-1]
    hi = edges[1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = (mid[:, None] + half[:, None] * x).ravel()
    wts = (half[:, None] * w).ravel()
    return pts, wts


def build_edges(a: float, b: float, knots=(), per_decade: float = 4.0) -> np.ndarray:
    """Sorted panel edges on [a, b]: in-range knots become edges and any gap
    wider than 10^(1/per_decade) in ratio is subdivided geometrically."""
    if not (0.0 < a < b):
        raise ValueError(f"need 0 < a < b, got ({a!r}, {b!r})")
    pts = [a, b]
    for k in np.atleast_1d(np.asarray(knots, dtype=float)).ravel():
        if a < k < b:
            pts.append(float(k))
    pts = np.array(sorted(pts))
    keep = np.empty(pts.size, dtype=bool)
    keep[0] = True
    keep[1:] = np.diff(pts) > 1e-13 * pts[1:]
    pts = pts[keep]
    if abs(pts[-1] - b) > 1e-13 * b:
        pts = np.append(pts, b)
    ratio_max = 10.0 ** (1.0 / per_decade)
    out = [pts[0]]
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi > lo * ratio_max:
            m = int(np.ceil(np.log(hi / lo) / np.log(ratio_max)))
            out.extend(np.geomspace(lo, hi, m + 1)[1:])
        else:
            out.append(hi)
    return np.array(out)


def graded_edges(a: float, b: float, n_side: int = 12, eta: float = 1e-12) -> np.ndarray:
    """Edges on [a, b] clustering geometrically toward both endpoints.

    Robust default for integrals whose integrand may carry integrable
    (logarithmic or algebraic) endpoint singularities of unknown strength.
    """
    h = b - a
    if h <= 0.0:
        raise ValueError("empty interval")
    f = np.geomspace(eta, 0.5, n_side)
    left = a + h * f
    right = b - h * f[::-1]
    return np.concatenate([[a], left, right[1:], [b]])


class SampledField:
    """Node samples interpolated in log X; constant below, power tail above."""

    def __init__(self, nodes: np.ndarray, values: np.ndarray,
                 tail_c: float = 0.0, tail_q: float = 1.0):
        self.nodes = np.asarray(nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.u = np.log(self.nodes)
        self.x_min = float(self.nodes[0])
        self.x_max = float(self.nodes[-1])
        self.tail_c = float(tail_c)
        self.tail_q = float(tail_q)
        # scipy's harmonic-mean slope formula divides by zero on flat runs
        # (the result is discarded); keep that noise out of caller errstate.
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            self._pchip = PchipInterpolator(self.u, self.values, extrapolate=False)

    @property
    def knots(self) -> np.ndarray:
        return self.nodes

    @property
    def support_top(self) -> float:
        return np.inf if self.tail_c != 0.0 else self.x_max

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        out = np.empty_like(z)
        below = z < self.x_min
        above = z > self.x_max
        mid = ~(below | above)
        out[below] = self.values[0]
        if np.any(above):
            if self.tail_c == 0.0:
                out[above] = 0.0
            else:
                out[above] = self.tail_c * z[above] ** (-self.tail_q)
        if np.any(mid):
            out[mid] = self._pchip(np.log(z[mid]))
        return float(out[0]) if scalar else out


class CallableField:
    """Adapter giving a plain callable the field interface used internally."""

    def __init__(self, fn, knots=(), tail_c: float = 0.0, tail_q: float = 1.0,
                 support_top: float | None = None):
        self._fn = fn
        self._knots = np.asarray(sorted({float(k) for k in knots}), dtype=float)
        self.tail_c = float(tail_c)
        self.tail_q = float(tail_q)
        self.x_min = float(self._knots[0]) if self._knots.size else 0.0
        self.x_max = float(self._knots[-1]) if self._knots.size else np.inf
        self._support_top = support_top

    @property
    def knots(self) -> np.ndarray:
        return self._knots

    @property
    def support_top(self) -> float:
        if self._support_top is not None:
            return float(self._support_top)
        return np.inf

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        out = np.asarray(self._fn(np.atleast_1d(z)), dtype=float)
        return float(out[0]) if scalar else out


def as_field(obj, tail=None, knots=()):
    """Coerce GridFunction-like samples or a callable to the field interface."""
    if isinstance(obj, (SampledField, CallableField)):
        return obj
    tail_c = 0.0 if tail is None else float(tail.amplitude)
    tail_q = 1.0 if tail is None else float(tail.exponent)
    values = getattr(obj, "values", None)
    if values is not None:
        return SampledField(obj.grid.nodes, values, tail_c, tail_q)
    if callable(obj):
        extra = tuple(knots) or tuple(getattr(obj, "knots", ()))
        return CallableField(obj, knots=extra, tail_c=tail_c, tail_q=tail_q,
                             support_top=getattr(obj, "support_top", None))
    raise TypeError(f"cannot interpret {type(obj).__name__} as a field")


def _outer_cut(field, x: float) -> float:
    """Upper integration limit for the region Y > X of the collision integral."""
    top = field.support_top
    if field.tail_c == 0.0 and np.isfinite(top):
        return x + top
    base = top if np.isfinite(top) else field.x_max
    if not np.isfinite(base):
        base = x
    return (x + base) * _TAILSPAN


def qn_parts(field, x: float, n_gl: int = 7, per_decade: float = 4.0,
             knots_override=None):
    """Static quadrature layout for the collision value at one point X.

    Returns (a_pts, b_pts, k1, k2) for the difference form

        Q_N(g)(X) = sqrt(X) * sum [ k1 * g(a) * (g(b) - g(X))
                                  + k2 * g(X) * (g(b) - g(a)) ]

    where the inner region (0, X/2) contributes points with (a, b) =
    (Y, X - Y) and k2 < 0, and the region (X, ∞) contributes points with
    (a, b) = (Y - X, Y) and k2 > 0.  Both brackets vanish identically when
    g is constant, so equilibrium data is annihilated to rounding.
    """
    x = float(x)
    knots = np.asarray(field.knots if knots_override is None else knots_override,
                       dtype=float)

    # --- inner region (0, X/2); a = Y, b = X - Y --------------------------
    half = 0.5 * x
    kin = np.concatenate([knots, x - knots])
    edges = build_edges(_ETA * half, half, kin[(kin > 0) & (kin < half)], per_decade)
    y, w = panel_points(edges, n_gl)
    a_in = y
    b_in = x - y
    k1_in = w / (y * b_in)
    k2_in = -w / (x * b_in)

    # --- region (X, ∞); a = Y - X, b = Y ----------------------------------
    hi = _outer_cut(field, x)
    kout = np.concatenate([knots, x + knots, [2.0 * x]])
    z_knots = kout[(kout > x * (1.0 + 1e-13)) & (kout < hi)] - x
    z_edges = build_edges(_ETA * x, hi - x, z_knots, per_decade)
    z, w = panel_points(z_edges, n_gl)
    b_out = x + z
    k1_out = w / (z * b_out)
    k2_out = w / (x * b_out)

    a_pts = np.concatenate([a_in, z])
    b_pts = np.concatenate([b_in, b_out])
    k1 = np.concatenate([k1_in, k1_out])
    k2 = np.concatenate([k2_in, k2_out])
    return a_pts, b_pts, k1, k2


def qn_value(field, x: float, n_gl: int = 7, per_decade: float = 4.0) -> float:
    """Collision value at one point, accurate path (fresh layout each call)."""
    a_pts, b_pts, k1, k2 = qn_parts(field, x, n_gl, per_decade)
    fa = field(a_pts)
    fb = field(b_pts)
    fx = float(field(x))
    acc = k1 @ (fa * (fb - fx)) + fx * (k2 @ (fb - fa))
    return float(np.sqrt(x) * acc)


class _CoeffEval:
    """Evaluate a PCHIP-in-log-X field at a *fixed* point set from raw
    spline coefficients; the interval search happens once, at plan build."""

    def __init__(self, nodes: np.ndarray, pts: np.ndarray,
                 tail_c: float, tail_q: float):
        u_breaks = np.log(nodes)
        x_min = nodes[0]
        x_max = nodes[-1]
        self.below = pts < x_min
        self.above = pts > x_max
        mid = ~(self.below | self.above)
        self.mid = mid
        u = np.log(pts[mid])
        idx = np.clip(np.searchsorted(u_breaks, u) - 1, 0, u_breaks.size - 2)
        self.idx = idx
        self.du = u - u_breaks[idx]
        if tail_c == 0.0:
            self.tail_vals = np.zeros(int(self.above.sum()))
        else:
            self.tail_vals = tail_c * pts[self.above] ** (-tail_q)
        self.size = pts.size

    def __call__(self, coeffs: np.ndarray, values: np.ndarray) -> np.ndarray:
        out = np.empty(self.size)
        out[self.below] = values[0]
        out[self.above] = self.tail_vals
        du = self.du
        idx = self.idx
        out[self.mid] = (((coeffs[0][idx] * du + coeffs[1][idx]) * du
                          + coeffs[2][idx]) * du + coeffs[3][idx])
        return out


def pchip_coeffs(u_nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return PchipInterpolator(u_nodes, values, extrapolate=False).c


class QnPlan:
    """Precomputed collision quadrature for *every* node of a grid.

    Build once per (grid, tail, resolution); evaluating with fresh node
    values then costs one PCHIP construction plus vectorized polynomial
    evaluation at a static point set — this is the time-stepping hot path.
    ``stride`` thins the knot set used for panel edges (the interpolant is
    still the full-resolution one); stride 1 is the accurate setting.
    """

    def __init__(self, grid, tail, n_gl: int = 3, per_decade: float = 3.0,
                 stride: int = 1):
        nodes = grid.nodes
        tail_c = 0.0 if tail is None else float(tail.amplitude)
        tail_q = 1.0 if tail is None else float(tail.exponent)
        probe = SampledField(nodes, np.ones_like(nodes), tail_c, tail_q)
        knots = nodes[::max(1, int(stride))]
        if knots[-1] != nodes[-1]:
            knots = np.append(knots, nodes[-1])
        a_all, b_all, k1_all, k2_all, seg = [], [], [], [], [0]
        total = 0
        for x in nodes:
            a_pts, b_pts, k1, k2 = qn_parts(probe, float(x), n_gl, per_decade,
                                            knots_override=knots)
            a_all.append(a_pts)
            b_all.append(b_pts)
            k1_all.append(k1)
            k2_all.append(k2)
            total += a_pts.size
            seg.append(total)
        self.grid = grid
        self.tail = tail
        self.a = np.concatenate(a_all)
        self.b = np.concatenate(b_all)
        self.k1 = np.concatenate(k1_all)
        self.k2 = np.concatenate(k2_all)
        self.seg = np.array(seg[:-1])
        self.counts = np.diff(np.append(self.seg, self.a.size))
        self.sqrt_x = np.sqrt(nodes)
        self.u_nodes = np.log(nodes)
        self._eval_a = _CoeffEval(nodes, self.a, tail_c, tail_q)
        self._eval_b = _CoeffEval(nodes, self.b, tail_c, tail_q)

    def __call__(self, values: np.ndarray, coeffs: np.ndarray | None = None) -> np.ndarray:
        """Collision values at all grid nodes for the sampled field ``values``."""
        if coeffs is None:
            if not np.all(np.isfinite(values)):
                raise StabilityError(
                    "collision evaluation received non-finite field values; "
                    "the time step that produced them is unstable")
            coeffs = pchip_coeffs(self.u_nodes, values)
        with np.errstate(over="ignore", invalid="ignore"):
            fa = self._eval_a(coeffs, values)
            fb = self._eval_b(coeffs, values)
            fx = np.repeat(values, self.counts)
            s1 = np.add.reduceat(self.k1 * fa * (fb - fx), self.seg)
            s2 = np.add.reduceat(self.k2 * (fb - fa), self.seg)
            out = self.sqrt_x * (s1 + values * s2)
        if not np.all(np.isfinite(out)):
            raise StabilityError(
                "collision values overflowed; the field is too large for "
                "the current time step")
        return out


class _FluxPiece:
    __slots__ = ("a", "b", "w", "seg", "xs", "xw", "ea", "eb", "ex")

    def __init__(self, a, b, w, seg, xs, xw):
        self.a = a
        self.b = b
        self.w = w
        self.seg = seg
        self.xs = xs
        self.xw = xw
        self.ea = self.eb = self.ex = None


class FluxPlan:
    """Precomputed iterated quadrature for the two-piece weak-form split.

    a1 integrates F(X-Y)(F(Y)-F(X)) - F(X)F(Y) over 0 < Y < X (X > δ) with
    an overall factor 1/2; a2 integrates F(Y)(F(X)+F(Y-X)) - F(X)F(Y-X)
    over Y > X > δ.  Both integrands vanish pointwise on the equilibrium
    power law, which keeps the split numerically benign as δ shrinks.
    Near-diagonal logarithmic structure (F(X-Y) as Y -> X, F(Y-X) as
    Y -> X) is resolved by relative refinement ladders toward the kink.
    """

    def __init__(self, field, delta: float, n_gl: int = 7,
                 per_decade: float = 4.0, knots_override=None,
                 graded: bool = False):
        delta = float(delta)
        if delta <= 0.0:
            raise ValueError(f"delta must be positive, got {delta!r}")
        knots = np.asarray(field.knots if knots_override is None else knots_override,
                           dtype=float)
        top = field.support_top
        open_tail = not (field.tail_c == 0.0 and np.isfinite(top))
        if not np.isfinite(top):
            top = field.x_max if np.isfinite(field.x_max) else max(knots.max(), 1.0)

        ladder = 1.0 - 10.0 ** (-np.arange(1.0, 13.5))

        def _edges(a, b, kn):
            kn = np.atleast_1d(np.asarray(kn, dtype=float))
            if graded:
                base = [a, b] + [float(k) for k in kn if a < k < b]
                base = sorted(set(base))
                segs = [graded_edges(lo, hi, n_side=10)
                        for lo, hi in zip(base[:-1], base[1:])]
                return np.unique(np.concatenate(segs))
            return build_edges(a, b, kn, per_decade)

        # ---- a1: outer X over (δ, 2·top·), inner Y over (0, X) -----------
        hi1 = 2.0 * top * (10.0 if open_tail else 1.0)
        xo, wo = panel_points(
            _edges(delta, hi1, np.concatenate([knots, 2.0 * knots])), n_gl)
        self.pc1 = self._inner_a1(xo, wo, knots, ladder, _edges, n_gl)

        # ---- a2: outer X over (δ, top·), inner Y over (X, X+top·) --------
        hi2 = top * (10.0 if open_tail else 1.0)
        xo, wo = panel_points(_edges(delta, hi2, knots), n_gl)
        self.pc2 = self._inner_a2(xo, wo, knots, ladder, _edges, n_gl,
                                  top, open_tail)
        self.delta = delta

    @staticmethod
    def _inner_a1(xo, wo, knots, ladder, _edges, n_gl):
        a_pts, b_pts, wts, seg = [], [], [], [0]
        total = 0
        for x in xo:
            kin = np.concatenate([knots, x - knots, x * ladder])
            e = _edges(_ETA * x, x * (1.0 - 1e-13), kin[(kin > 0) & (kin < x)])
            y, v = panel_points(e, n_gl)
            a_pts.append(x - y)
            b_pts.append(y)
            wts.append(v)
            total += y.size
            seg.append(total)
        return _FluxPiece(np.concatenate(a_pts), np.concatenate(b_pts),
                          np.concatenate(wts), np.array(seg[:-1]), xo, wo)

    @staticmethod
    def _inner_a2(xo, wo, knots, ladder, _edges, n_gl, top, open_tail):
        a_pts, b_pts, wts, seg = [], [], [], [0]
        total = 0
        for x in xo:
            hi = (x + top) * (100.0 if open_tail else 1.0)
            kout = np.concatenate([knots, x + knots, x * (2.0 - ladder)])
            zk = kout[(kout > x * (1.0 + 1e-13)) & (kout < hi)] - x
            e = _edges(_ETA * x, hi - x, zk)
            z, v = panel_points(e, n_gl)
            a_pts.append(z)
            b_pts.append(x + z)
            wts.append(v)
            total += z.size
            seg.append(total)
        return _FluxPiece(np.concatenate(a_pts), np.concatenate(b_pts),
                          np.concatenate(wts), np.array(seg[:-1]), xo, wo)

    def evaluate(self, f_eval) -> tuple[float, float]:
        """(a1, a2) with F evaluated by the vectorized callable ``f_eval``."""
        p = self.pc1
        fa = f_eval(p.a)
        fb = f_eval(p.b)
        fx = f_eval(p.xs)
        inner = (np.add.reduceat(p.w * fa * fb, p.seg)
                 - fx * np.add.reduceat(p.w * (fa + fb), p.seg))
        a1 = 0.5 * float(p.xw @ inner)

        p = self.pc2
        fa = f_eval(p.a)
        fb = f_eval(p.b)
        fx = f_eval(p.xs)
        inner = (np.add.reduceat(p.w * fb * fa, p.seg)
                 + fx * np.add.reduceat(p.w * (fb - fa), p.seg))
        a2 = float(p.xw @ inner)
        return a1, a2

    # -- fast path against V-form node samples (F = V/X) -------------------

    def bind(self, nodes: np.ndarray, tail) -> None:
        tail_c = 0.0 if tail is None else float(tail.amplitude)
        tail_q = 1.0 if tail is None else float(tail.exponent)
        # F = V/X tail: V ~ c X^{-q}  =>  F ~ c X^{-q-1}
        for p in (self.pc1, self.pc2):
            p.ea = _CoeffEval(nodes, p.a, tail_c, tail_q)
            p.eb = _CoeffEval(nodes, p.b, tail_c, tail_q)
            p.ex = _CoeffEval(nodes, p.xs, tail_c, tail_q)

    def eval_fast(self, values: np.ndarray, coeffs: np.ndarray) -> tuple[float, float]:
        p = self.pc1
        fa = p.ea(coeffs, values) / p.a
        fb = p.eb(coeffs, values) / p.b
        fx = p.ex(coeffs, values) / p.xs
        inner = (np.add.reduceat(p.w * fa * fb, p.seg)
                 - fx * np.add.reduceat(p.w * (fa + fb), p.seg))
        a1 = 0.5 * float(p.xw @ inner)

        p = self.pc2
        fa = p.ea(coeffs, values) / p.a
        fb = p.eb(coeffs, values) / p.b
        fx = p.ex(coeffs, values) / p.xs
        inner = (np.add.reduceat(p.w * fb * fa, p.seg)
                 + fx * np.add.reduceat(p.w * (fb - fa), p.seg))
        a2 = float(p.xw @ inner)
        return a1, a2
