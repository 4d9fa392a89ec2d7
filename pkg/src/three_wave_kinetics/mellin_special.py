"""Special functions of the linearized evolution in Mellin variables.

The chain runs: digamma ψ → the meromorphic symbol
W(ρ) = −2γ_e − 2ψ(ρ/2) − π cot(πρ/4) → the function B defined by a
contour integral of log(−W) on a vertical line Re ρ = β ∈ (0,1) and
extended by the recursion B(s) = −W(s−1) B(s−1) → the operator

    L(t, g) = (3 B(1) / (iπ³)) ∫_{Re r = β} Γ(r)/B(r) · t^{−r}
                · (∫_0^t g(ζ²) ζ^{r−1} dζ) dr,

plus the incomplete-Beta / harmonic-number bound of the singular kernel
integral used in the integrability argument (p52_bound_check).

Branch handling: the contour integrand needs a *continuous* logarithm of
−W along the line.  The phase is unwrapped outward from the node nearest
t = 0; if adjacent nodes still jump by ≥ π/2 the panel count doubles (up
to 4 times) before a jump of ≥ π is treated as a genuine tracking
failure.  The regularizing kernel 1/(1+e^{−2iπρ}) has poles at
half-integer ρ, so the raw integral changes by the constant factor
−W(1/2) when β crosses 1/2; evaluations with β > 1/2 are multiplied back
so that b_eval is single-valued across the whole window β ∈ (0,1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import roots_jacobi, roots_legendre

from .errors import (BranchTrackingError, ContourTruncationError, PoleError)

__all__ = [
    "ContourSpec",
    "digamma",
    "w_eval",
    "b_eval",
    "l_operator",
    "p52_bound_check",
]

_EULER = 0.5772156649015328606
_ZETA3 = 1.2020569031595942854
_ZETA5 = 1.0369277551433699263

# Bernoulli(2n)/(2n) for the asymptotic tail of psi
_PSI_ASYMP = (1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
              1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0)


@dataclass(frozen=True)
class ContourSpec:
    """Vertical contour Re = real_part, truncated at |Im| = half_height."""

    real_part: float
    half_height: float
    panels: int

    def __post_init__(self):
        beta = float(self.real_part)
        if not (0.0 < beta < 2.0):
            raise ValueError(f"contour abscissa must be in (0, 2), got {beta!r}")
        if not float(self.half_height) > 0.0:
            raise ValueError("contour half_height must be positive")
        if int(self.panels) < 200:
            raise ValueError(f"need at least 200 panels, got {self.panels!r}")
        object.__setattr__(self, "real_part", beta)
        object.__setattr__(self, "half_height", float(self.half_height))
        object.__setattr__(self, "panels", int(self.panels))


_BASE_CONTOUR = ContourSpec(0.45, 9.0, 800)


def digamma(z):
    """ψ(z) by recurrence shift to Re z ≥ 8 plus the asymptotic series.

    Scalar or array input; nonpositive-integer arguments are poles.
    """
    z_in = np.asarray(z, dtype=complex)
    scalar = z_in.ndim == 0
    w = np.atleast_1d(z_in).copy()

    on_pole = (np.abs(w.imag) < 1e-12) & (w.real <= 0.5) \
        & (np.abs(w.real - np.rint(w.real)) < 1e-12)
    if np.any(on_pole):
        raise PoleError(
            f"digamma pole at z = {w[on_pole][0]:g} (nonpositive integer)")

    acc = np.zeros_like(w)
    need = w.real < 8.0
    while np.any(need):
        acc[need] -= 1.0 / w[need]
        w[need] += 1.0
        need = w.real < 8.0

    inv2 = 1.0 / (w * w)
    tail = np.zeros_like(w)
    for c in reversed(_PSI_ASYMP):
        tail = (tail + c) * inv2
    out = acc + np.log(w) - 0.5 / w - tail
    if scalar:
        out = complex(out[0])
        return out.real if z_in.imag == 0 else out
    return out


def _w_series(rho):
    # Laurent cancellation at rho = 0: W is analytic with W(0) = 0
    pi2 = np.pi * np.pi
    c1 = -pi2 / 12.0
    c2 = _ZETA3 / 2.0
    c3 = -7.0 * pi2 * pi2 / 2880.0
    c4 = _ZETA5 / 8.0
    return rho * (c1 + rho * (c2 + rho * (c3 + rho * c4)))


def w_eval(rho):
    """W(ρ) = −2γ_e − 2ψ(ρ/2) − π cot(πρ/4) on the strip Re ρ ∈ (−2, 4)."""
    rho_in = np.asarray(rho, dtype=complex)
    scalar = rho_in.ndim == 0
    r = np.atleast_1d(rho_in)

    edge = (np.abs(r.imag) < 1e-12) & ((np.abs(r.real - 4.0) < 1e-12)
                                       | (np.abs(r.real + 2.0) < 1e-12))
    if np.any(edge):
        raise PoleError(f"W has a pole at rho = {r[edge][0].real:g}")
    if np.any(r.real <= -2.0) or np.any(r.real >= 4.0):
        raise ValueError("w_eval requires Re(rho) in (-2, 4)")

    out = np.empty_like(r)
    small = np.abs(r) < 1e-3
    if np.any(small):
        out[small] = _w_series(r[small])
    big = ~small
    if np.any(big):
        rb = r[big]
        out[big] = (-2.0 * _EULER - 2.0 * digamma(rb / 2.0)
                    - np.pi / np.tan(np.pi * rb / 4.0))
    if scalar:
        val = complex(out[0])
        return val.real if rho_in.imag == 0 else val
    return out


_W_HALF = None


def _w_half() -> float:
    global _W_HALF
    if _W_HALF is None:
        _W_HALF = float(np.real(w_eval(0.5)))
    return _W_HALF


def _recip_one_minus_exp(z: np.ndarray) -> np.ndarray:
    """1/(1 − e^z) without overflow: the result underflows to 0 for large
    Re z long before e^z itself overflows."""
    out = np.empty(z.shape, dtype=complex)
    big = z.real > 50.0
    out[big] = 0.0
    out[~big] = 1.0 / (1.0 - np.exp(z[~big]))
    return out


def _recip_one_plus_exp(z: np.ndarray) -> np.ndarray:
    out = np.empty(z.shape, dtype=complex)
    big = z.real > 50.0
    out[big] = 0.0
    out[~big] = 1.0 / (1.0 + np.exp(z[~big]))
    return out


def _contour_nodes(beta: float, half_height: float, n_panels: int,
                   centers=()):
    """GL panels on (−T, T), geometrically refined around each center."""
    edges = [np.linspace(-half_height, half_height, n_panels + 1)]
    for (c, scale) in centers:
        scale = max(min(scale, 1.0), 1e-8)
        ladder = c + scale * np.concatenate([-(10.0 ** np.arange(0.0, -8.5, -1.0)),
                                             10.0 ** np.arange(-8.0, 0.5, 1.0)])
        edges.append(ladder[(ladder > -half_height) & (ladder < half_height)])
    e = np.unique(np.concatenate(edges))
    xg, wg = roots_legendre(8)
    mid = 0.5 * (e[1:] + e[:-1])
    half = 0.5 * (e[1:] - e[:-1])
    t = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    order = np.argsort(t)
    return t[order], w[order]


def _log_minus_w(t: np.ndarray, beta: float):
    """Continuous log(−W(β+it)) anchored to the principal branch near t=0.

    Returns (log values, worst raw inter-node phase jump).
    """
    vals = -w_eval(beta + 1j * t)
    ang = np.angle(vals)
    raw = np.diff(ang)
    wrapped = (raw + np.pi) % (2.0 * np.pi) - np.pi
    worst = float(np.max(np.abs(wrapped))) if wrapped.size else 0.0
    phase = np.concatenate([[ang[0]], ang[0] + np.cumsum(wrapped)])
    i0 = int(np.argmin(np.abs(t)))
    k = np.rint((phase[i0] - ang[i0]) / (2.0 * np.pi))
    phase -= 2.0 * np.pi * k
    return np.log(np.abs(vals)) + 1j * phase, worst


def _b_direct(s: complex, contour: ContourSpec) -> complex:
    beta = contour.real_part
    d = s.real - beta
    scale = min(d, 1.0 - d, abs(beta - 0.5) + 1e-6)
    n = max(contour.panels // 8, 40)
    for attempt in range(5):
        t, w = _contour_nodes(beta, contour.half_height, n * 2 ** attempt,
                              centers=[(s.imag, scale), (0.0, scale)])
        logw, worst = _log_minus_w(t, beta)
        if worst < 0.5 * np.pi:
            break
    if worst >= np.pi:
        raise BranchTrackingError(
            f"ambiguous branch of log(-W): jump {worst:.3f} rad >= pi at "
            f"beta = {beta:g} after panel doubling")

    rho = beta + 1j * t
    k1 = _recip_one_minus_exp(2j * np.pi * (s - rho))
    k2 = _recip_one_plus_exp(-2j * np.pi * rho)
    integrand = logw * (k1 - k2)
    total = 1j * np.sum(w * integrand)

    tail = max(abs(integrand[0]), abs(integrand[-1])) / (2.0 * np.pi)
    if tail > 1e-10 * (1.0 + abs(total)):
        raise ContourTruncationError(
            f"contour truncation error ~{tail:.2e} at half_height "
            f"{contour.half_height:g}")
    val = np.exp(total)
    if beta > 0.5:
        # K2's pole at rho = 1/2 lies left of the line: undo its residue so
        # the two half-windows define the same function
        val *= -_w_half()
    return complex(val)


_B_POLES_MSG = "B has a pole at s = {:g}"


def b_eval(s, contour: ContourSpec | None = None) -> complex:
    """B(s) by direct contour evaluation in the strip Re s ∈ (β, β+1),
    reached by integer recursion steps B(s) = −W(s−1)·B(s−1) otherwise."""
    if contour is None:
        contour = _BASE_CONTOUR
    beta = contour.real_part
    if not beta < 1.0:
        raise ValueError("b_eval needs a contour with real_part in (0, 1)")
    s = complex(s)

    if abs(s.imag) < 1e-12:
        sr = s.real
        if abs(sr) < 1e-12 or abs(sr + 1.0) < 1e-12:
            raise PoleError(_B_POLES_MSG.format(sr))
        n4 = np.rint((sr - 1.0) / 4.0)
        if n4 >= 1 and abs(sr - (4.0 * n4 + 1.0)) < 1e-12:
            raise PoleError(_B_POLES_MSG.format(sr))

    n = int(np.floor(s.real - beta))
    s0 = s - n
    if min(s0.real - beta, beta + 1.0 - s0.real) < 1e-9:
        raise ValueError(
            f"Re s = {s.real:g} sits on the strip boundary of beta = {beta:g}")
    val = _b_direct(s0, contour)
    if n > 0:
        for k in range(n):
            val *= -w_eval(s0 + k)
    elif n < 0:
        for k in range(-n):
            f = w_eval(s + k)
            if f == 0:
                raise PoleError(_B_POLES_MSG.format((s + k).real))
            val /= -f
    return complex(val)


_B1_CACHE = None


def _b_one() -> float:
    global _B1_CACHE
    if _B1_CACHE is None:
        _B1_CACHE = float(np.real(b_eval(1.0, _BASE_CONTOUR)))
    return _B1_CACHE


def _b_line(re_s: float, ims: np.ndarray, half_height: float) -> np.ndarray:
    """B(re_s + i·ims) for a whole vertical line, sharing one log(−W) sweep.

    Used by l_operator, whose r-contour needs B at hundreds of points of
    equal real part; the branch-tracked logarithm is computed once.
    """
    shift = re_s >= 1.25
    re0 = re_s - 1.0 if shift else re_s
    # keep the line well clear of the regularizer pole at rho = 1/2
    beta = 0.25 if re0 > 0.3 else re0 / 2.0
    T = half_height + 9.0
    n_pan = max(int(2.0 * T / 0.25), 200)
    for attempt in range(5):
        t, w = _contour_nodes(beta, T, n_pan * 2 ** attempt,
                              centers=[(0.0, abs(beta - 0.5))])
        logw, worst = _log_minus_w(t, beta)
        if worst < 0.5 * np.pi:
            break
    if worst >= np.pi:
        raise BranchTrackingError(
            f"log(-W) branch tracking failed on the shared line beta={beta:g}")

    rho = beta + 1j * t
    k2 = _recip_one_plus_exp(-2j * np.pi * rho)
    out = np.empty(ims.shape, dtype=complex)
    chunk = max(1, int(2e6 / max(t.size, 1)))
    for lo in range(0, ims.size, chunk):
        hi = min(lo + chunk, ims.size)
        svals = re0 + 1j * ims[lo:hi]
        k1 = _recip_one_minus_exp(2j * np.pi * (svals[:, None] - rho[None, :]))
        out[lo:hi] = np.exp(1j * ((k1 - k2[None, :]) * logw[None, :]) @ w)
    if beta > 0.5:
        out *= -_w_half()
    if shift:
        out *= -w_eval(re0 + 1j * ims)
    return out


def _inner_mellin(g_eval, t: float, r_line: np.ndarray) -> np.ndarray:
    """∫_0^t g(ζ²) ζ^{r−1} dζ for every r on the line, as ∫ g(e^{2m}) e^{rm} dm.

    Log-uniform GL panels over 46 e-folds below ln t; the remainder below
    is closed assuming g locally constant there (negligible whenever
    Re r is not tiny).
    """
    m_top = np.log(t)
    n_pan = 575
    edges = np.linspace(m_top - 46.0, m_top, n_pan + 1)
    xg, wg = roots_legendre(10)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    m = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    wm = (half[:, None] * wg[None, :]).ravel()
    gm = np.asarray(g_eval(np.exp(2.0 * m)), dtype=float)

    out = np.empty(r_line.shape, dtype=complex)
    chunk = max(1, int(2e6 / m.size))
    for lo in range(0, r_line.size, chunk):
        hi = min(lo + chunk, r_line.size)
        ker = np.exp(r_line[lo:hi, None] * m[None, :])
        out[lo:hi] = ker @ (wm * gm)
    # sliver (0, e^{m_top-46}): g frozen at its lowest sampled argument
    a = np.exp(m_top - 46.0)
    out += gm[0] * a ** r_line / r_line
    return out


def l_operator(t: float, g_profile, contour: ContourSpec) -> float:
    """L(t, g) = (3B(1)/(iπ³)) ∫_{Re r=β} Γ(r)/B(r) t^{−r} M_g(r, t) dr
    with M_g the truncated Mellin transform ∫_0^t g(ζ²)ζ^{r−1}dζ.

    The contour supplies the abscissa β ∈ (0, 2), the truncation height and
    a floor on the node count; Γ's decay on vertical lines makes anything
    beyond |Im r| ≈ 30 invisible at double precision.
    """
    t = float(t)
    if t <= 0.0:
        raise ValueError(f"time must be positive, got {t!r}")
    beta = contour.real_part
    T = contour.half_height

    if isinstance(g_profile, (int, float)) or g_profile is None:
        raise TypeError("g_profile must be callable or a GridFunction")
    if callable(g_profile):
        g_eval = g_profile
    else:
        from . import _quad
        field = _quad.as_field(g_profile, None)
        g_eval = field

    # panel width capped by the t^{−iu} oscillation frequency |ln t|
    width = min(0.4, np.pi / max(1.0, abs(np.log(t))))
    n_pan = max(int(2.0 * T / width), max(contour.panels // 8, 100))
    edges = np.linspace(-T, T, n_pan + 1)
    xg, wg = roots_legendre(8)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    u = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    wu = (half[:, None] * wg[None, :]).ravel()

    r = beta + 1j * u
    big_g = _inner_mellin(g_eval, t, r)
    b_vals = _b_line(beta, u, T)
    integrand = _gamma(r) / b_vals * t ** (-r) * big_g

    total = np.sum(wu * integrand)
    tail = max(abs(integrand[0]), abs(integrand[-1]))
    if tail > 1e-10 * (1.0 + abs(total)):
        raise ContourTruncationError(
            f"L-contour truncation error ~{tail:.2e} at half_height {T:g}")
    # dr = i du cancels the 1/i of the prefactor
    return float(np.real(3.0 * _b_one() / np.pi ** 3 * total))


def _beta_pv(p: float) -> float:
    """Principal value of the incomplete Beta B(2; p, 0) = ∫_0^2 t^{p−1}(1−t)^{−1} dt.

    Evaluated as ∫_0^2 (t^{p−1} − 1)/(1 − t) dt (the subtracted constant
    integrates to zero in the principal-value sense); the integrand is then
    continuous at t = 1, leaving only the t^{p−1} endpoint at 0.
    """
    # ∫_0^{1/2} t^{p−1}/(1−t) dt by Gauss–Jacobi (t = (1+x)/4), minus the
    # exact ∫_0^{1/2} dt/(1−t) = ln 2
    xj, wj = roots_jacobi(60, 0.0, p - 1.0)
    tj = (1.0 + xj) / 4.0
    part0 = float(np.sum(wj / (1.0 - tj))) * 4.0 ** (-p) - np.log(2.0)

    xg, wg = roots_legendre(24)
    val = 0.0
    for (a, b) in ((0.5, 1.0), (1.0, 2.0)):
        tm = 0.5 * (a + b) + 0.5 * (b - a) * xg
        f = (tm ** (p - 1.0) - 1.0) / (1.0 - tm)
        val += 0.5 * (b - a) * float(wg @ f)
    return part0 + val


def _harmonic(z: float) -> float:
    return _EULER + float(np.real(digamma(z + 1.0)))


def p52_bound_check(a: float, b: float, xi: float) -> tuple[float, float]:
    """(lhs, bound) for the singular-kernel estimate

        ξ^a ∫_0^{2ξ} |(ζ^{−b} − ξ^{−b}) ζ^{b−a} / (ξ − ζ)| dζ ≤ C(a, b),

    C(a, b) = B_pv(2; 1−a) + B_pv(2; 1−a+b) + 2(|H(b−a)| + |H(−a)|) with
    B_pv the principal-value incomplete Beta and H the harmonic number.
    The integrand is positive and analytic except for the ζ^{−a} endpoint,
    handled with a Gauss–Jacobi rule on (0, ξ/2).
    """
    a = float(a)
    b = float(b)
    xi = float(xi)
    if not (0.0 < a < 1.0):
        raise ValueError(f"need 0 < a < 1, got {a!r}")
    if not b > 0.0:
        raise ValueError(f"need b > 0, got {b!r}")
    if not (0.0 < xi < 2.0):
        raise ValueError(f"need 0 < xi < 2, got {xi!r}")

    def smooth(z):
        # integrand / ζ^{−a} = (1 − (ζ/ξ)^b) / (ξ − ζ), analytic across ζ=ξ
        return (1.0 - (z / xi) ** b) / (xi - z)

    xj, wj = roots_jacobi(60, 0.0, -a)
    zj = (1.0 + xj) * (xi / 4.0)
    # Jacobi weight (1+x)^{−a} maps to (4ζ/ξ)^{−a}·(ξ/4 scale)
    lhs = float(np.sum(wj * smooth(zj))) * (xi / 4.0) ** (1.0 - a)

    xg, wg = roots_legendre(30)
    for (lo, hi) in ((0.5 * xi, xi), (xi, 2.0 * xi)):
        zm = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
        f = np.abs((zm ** (-b) - xi ** (-b)) * zm ** (b - a) / (xi - zm))
        lhs += 0.5 * (hi - lo) * float(wg @ f)
    lhs *= xi ** a

    bound = (_beta_pv(1.0 - a) + _beta_pv(1.0 - a + b)
             + 2.0 * (abs(_harmonic(b - a)) + abs(_harmonic(-a))))
    return lhs, bound
