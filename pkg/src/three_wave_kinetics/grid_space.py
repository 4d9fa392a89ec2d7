"""Energy grids, sampled fields, cutoff profiles and weighted-space helpers.

Everything downstream lives on the energy half-line X > 0, truncated to
(0, X_max].  Grids are log-uniform because the objects of interest behave
like power laws at both ends: X*F(X) stays bounded near the origin and
F(X) ~ c X^{-1-q} at infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitConditionError

__all__ = [
    "Grid",
    "GridFunction",
    "CutoffProfile",
    "make_log_grid",
    "weighted_norm",
    "extrapolate_origin",
]


def _panel_weights(nodes: np.ndarray) -> np.ndarray:
    """Trapezoid weights on [X_1, X_N] plus a closure of the origin sliver.

    The sliver (0, X_1] is assigned wholly to the first node (constant
    extension of the integrand), so that integrating the constant function 1
    returns X_max exactly rather than X_max - X_1.
    """
    w = np.zeros_like(nodes)
    d = np.diff(nodes)
    w[0] = 0.5 * d[0] + nodes[0]
    w[-1] = 0.5 * d[-1]
    w[1:-1] = 0.5 * (d[:-1] + d[1:])
    return w


@dataclass(frozen=True)
class Grid:
    """Strictly increasing log-uniform energy nodes with panel weights.

    ``weights`` integrate node samples over (0, X_max]; see
    :func:`_panel_weights` for the origin closure.  Instances are immutable;
    the node/weight arrays are marked read-only.
    """

    nodes: np.ndarray
    weights: np.ndarray
    x_max: float

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs a 1-d array of at least two nodes")
        if weights.shape != nodes.shape:
            raise ValueError("weights shape does not match nodes")
        if not np.all(np.isfinite(nodes)) or nodes[0] <= 0.0:
            raise ValueError("nodes must be finite and strictly positive")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        ratios = nodes[1:] / nodes[:-1]
        r0 = np.median(ratios)
        if np.max(np.abs(ratios / r0 - 1.0)) > 1e-12:
            raise ValueError("nodes are not log-uniform to 1e-12 relative")
        if np.any(weights <= 0.0):
            raise ValueError("weights must be strictly positive")
        x_max = float(self.x_max)
        if abs(nodes[-1] - x_max) > 1e-12 * x_max:
            raise ValueError("x_max must equal the last node")
        if abs(weights.sum() - x_max) > 1e-12 * x_max:
            raise ValueError("weights must integrate 1 to x_max exactly")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "x_max", x_max)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def x_min(self) -> float:
        return float(self.nodes[0])

    def integrate(self, samples: np.ndarray) -> float:
        """Weighted sum approximating ∫_0^{X_max} of a node-sampled function."""
        samples = np.asarray(samples, dtype=float)
        if samples.shape != self.nodes.shape:
            raise ValueError("sample shape does not match grid")
        return float(self.weights @ samples)


def make_log_grid(x_min: float, x_max: float, n: int) -> Grid:
    """Log-uniform grid of ``n`` nodes on [x_min, x_max], weights included."""
    x_min = float(x_min)
    x_max = float(x_max)
    n = int(n)
    if not (0.0 < x_min < x_max) or not np.isfinite(x_max):
        raise ValueError(
            f"invalid range: need 0 < x_min < x_max, got ({x_min!r}, {x_max!r})"
        )
    if n < 16:
        raise ValueError(f"need at least 16 nodes, got {n}")
    nodes = np.geomspace(x_min, x_max, n)
    nodes[0] = x_min
    nodes[-1] = x_max
    return Grid(nodes=nodes, weights=_panel_weights(nodes), x_max=x_max)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a scalar field over a :class:`Grid`.

    ``theta``/``rho`` optionally tag the weight exponents of the space the
    samples are meant to live in (sup of X^theta (1+X)^rho |g|); operators
    that need weight information read it from these tags.
    """

    grid: Grid
    values: np.ndarray
    theta: float | None = None
    rho: float | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ValueError("values shape does not match grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values, self.theta, self.rho)

    def to_csv(self, path) -> None:
        """Write ``X,value`` rows at full double precision."""
        with open(path, "w") as fh:
            fh.write("X,value\n")
            for x, v in zip(self.grid.nodes, self.values):
                fh.write(f"{x:.17g},{v:.17g}\n")

    @classmethod
    def from_csv(cls, path, theta: float | None = None, rho: float | None = None) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError("expected two columns: X,value")
        nodes = data[:, 0]
        grid = Grid(nodes=nodes, weights=_panel_weights(nodes), x_max=float(nodes[-1]))
        return cls(grid=grid, values=data[:, 1], theta=theta, rho=rho)


def _bridge_quintic(z: np.ndarray) -> np.ndarray:
    # Quintic smoothstep bridge on [1/2, 1]: C^2 with zero slope and
    # curvature at both ends, monotone in between.
    u = 2.0 * z - 1.0
    return 1.0 - u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)


_BRIDGES = {"quintic": _bridge_quintic}


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth cutoff φ: identically 1 on (0, R/2], 0 on [R, ∞), C^2 bridge between.

    ``base`` selects the bridge shape by name; the relative plateau and
    support edges are fixed at 1/2 and 1.
    """

    R: float
    base: str = "quintic"

    alpha = 0.5
    beta = 1.0

    def __post_init__(self) -> None:
        if not (float(self.R) > 1.0):
            raise ValueError(f"cutoff scale must exceed 1, got {self.R!r}")
        if self.base not in _BRIDGES:
            raise ValueError(f"unknown bridge profile {self.base!r}")
        object.__setattr__(self, "R", float(self.R))

    @property
    def plateau_edge(self) -> float:
        return self.alpha * self.R

    @property
    def support_edge(self) -> float:
        return self.beta * self.R

    @property
    def knots(self) -> tuple[float, float]:
        return (self.plateau_edge, self.support_edge)

    def base_profile(self, z):
        """The bridge in the scale-free variable z = X/R, valid on [1/2, 1]."""
        return _BRIDGES[self.base](np.asarray(z, dtype=float))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        out[x <= self.plateau_edge] = 1.0
        mid = (x > self.plateau_edge) & (x < self.support_edge)
        if np.any(mid):
            out[mid] = _BRIDGES[self.base](x[mid] / self.R)
        return float(out[0]) if scalar else out


def weighted_norm(g: GridFunction, theta: float, rho: float) -> float:
    """sup over the grid of X^theta (1+X)^rho |g(X)|."""
    x = g.grid.nodes
    theta = float(theta)
    rho = float(rho)
    return float(np.max(x ** theta * (1.0 + x) ** rho * np.abs(g.values)))


def extrapolate_origin(v: GridFunction, fit_exponent: float = 0.25) -> float:
    """Estimate lim_{X->0} v(X) from the smallest nodes.

    Fits v ≈ lam + c X^r on the eight smallest nodes (fewer on very small
    grids) by linear least squares and returns lam.  The design matrix is
    checked for conditioning: a fit exponent too close to zero makes the two
    columns collinear over a narrow node window.
    """
    r = float(fit_exponent)
    if not (0.0 < r < 0.5):
        raise ValueError(f"fit exponent must lie in (0, 1/2), got {r!r}")
    k = min(8, v.grid.n)
    if k < 4:
        raise ValueError("need at least four nodes for origin extrapolation")
    x = v.grid.nodes[:k]
    y = v.values[:k]
    a = np.column_stack([np.ones_like(x), x ** r])
    if np.linalg.cond(a) > 1e10:
        raise FitConditionError(
            "origin fit is ill conditioned; widen the node window or change "
            f"the fit exponent (cond={np.linalg.cond(a):.3g})"
        )
    coef, *_ = np.linalg.lstsq(a, y, rcond=None)
    return float(coef[0])
