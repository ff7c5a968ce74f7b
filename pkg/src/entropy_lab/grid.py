"""Orders, grid densities, quadrature and finite-difference stencils."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np

LIMIT_EPS = 1e-9
MASS_TOL = 1e-10
FLOOR = 1e-300
SUPPORT_EPS = 1e-12
MIN_NODES = 16


class DomainError(ValueError):
    """Argument outside the domain of a functional."""


class LimitBranchError(DomainError):
    """Quantity has no finite value on the p -> 1 limit branch."""


def is_one(x: float) -> bool:
    return abs(x - 1.0) < LIMIT_EPS


@dataclass(frozen=True)
class Orders:
    """Orders (p, q) of a Sharma-Mittal entropy power in dimension d.

    Construction enforces ``p > 1 - 2/d`` and ``q > 0``.  The exponents
    ``sigma_p`` and ``sigma_q`` are always derived from (p, q, d).
    """

    p: float
    q: float
    d: int = 1

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"d must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if not np.isfinite(self.p) or not np.isfinite(self.q):
            raise DomainError("p and q must be finite")
        if not self.q > 0:
            raise DomainError(f"q must be positive (q > 0 in the concavity theorem), got q={self.q}")
        if not self.p > 1.0 - 2.0 / self.d:
            raise DomainError(
                f"p must exceed 1 - 2/d = {1.0 - 2.0 / self.d:g} (concavity theorem), got p={self.p}"
            )

    @property
    def sigma_p(self) -> float:
        return 2.0 / self.d + self.p - 1.0

    @property
    def sigma_q(self) -> float:
        return 2.0 / self.d + self.q - 1.0

    @property
    def p_is_one(self) -> bool:
        return is_one(self.p)

    @property
    def q_is_one(self) -> bool:
        return is_one(self.q)

    def regime(self) -> str:
        """Name of the parameter sub-range the orders fall in.

        ``"convex"``: q >= p > 1, where the Sharma-Mittal functional is
        geodesically convex; ``"gradient-flow"``: p > max(1 - 1/d, d/(d+2));
        ``"theorem"``: only the concavity theorem's hypothesis holds.
        """
        p, q, d = self.p, self.q, self.d
        if q >= p > 1:
            return "convex"
        if p > max(1 - 1 / d, d / (d + 2)):
            return "gradient-flow"
        return "theorem"


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * pi ** (d / 2) / gamma(d / 2)


def _cell_volumes(geometry: str, nodes: np.ndarray, h: float, d: int) -> np.ndarray:
    # dual-cell volumes; equal to trapezoid weights on the line
    n = nodes.size
    if geometry == "line":
        w = np.full(n, h)
        w[0] = w[-1] = h / 2
        return w
    lo = np.clip(nodes - h / 2, 0.0, None)
    hi = nodes + h / 2
    hi[-1] = nodes[-1]
    return sphere_area(d) / d * (hi**d - lo**d)


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Probability density sampled on a uniform grid.

    ``geometry`` is ``"line"`` (nodes x_i on an interval of R) or
    ``"radial"`` (radii r_i = i*h of an isotropic density on R^d).  Values
    are renormalized to unit mass on construction; the applied factor is
    kept in ``renorm``.
    """

    nodes: np.ndarray
    values: np.ndarray
    geometry: str = "line"
    d: int = 1
    h: float = field(init=False)
    weights: np.ndarray = field(init=False, repr=False)
    renorm: float = field(init=False)

    def __post_init__(self):
        x = np.array(self.nodes, dtype=float)
        u = np.array(self.values, dtype=float)
        if x.ndim != 1 or x.shape != u.shape:
            raise DomainError("nodes and values must be 1-D arrays of equal length")
        if x.size < 3:
            raise DomainError("a grid needs at least 3 nodes")
        if self.geometry not in ("line", "radial"):
            raise DomainError(f"unknown geometry {self.geometry!r}")
        if self.geometry == "line" and self.d != 1:
            raise DomainError("line geometry is one-dimensional")
        dx = np.diff(x)
        h = float(dx.mean())
        if h <= 0 or np.max(np.abs(dx - h)) > 1e-9 * max(h, np.max(np.abs(x))):
            raise DomainError("nodes must be uniformly spaced and increasing")
        if self.geometry == "radial" and abs(x[0]) > 1e-12 * h:
            raise DomainError("radial grids start at r = 0")
        if np.any(~np.isfinite(u)) or np.any(u < 0):
            raise DomainError("density values must be finite and nonnegative")
        w = _cell_volumes(self.geometry, x, h, self.d)
        mass = float(w @ u)
        if not mass > 0:
            raise DomainError("density has zero mass")
        u = u / mass
        for a in (x, u, w):
            a.flags.writeable = False
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "values", u)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "renorm", 1.0 / mass)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def mass(self) -> float:
        return self.integrate(self.values)

    def integrate(self, f) -> float:
        return float(self.weights @ np.asarray(f, dtype=float))

    def with_values(self, values) -> "GridDensity":
        return GridDensity(self.nodes, values, self.geometry, self.d)

    def support_mask(self) -> np.ndarray:
        """Nodes whose whole 3-point stencil lies above SUPPORT_EPS * max(u)."""
        inside = self.values >= SUPPORT_EPS * self.values.max()
        ok = inside.copy()
        ok[1:] &= inside[:-1]
        ok[:-1] &= inside[1:]
        return ok


# Stencils below treat both grid ends as mirror planes (even reflection).
# This matches the zero-flux boundary of the flow solver and is exact at r = 0.


def gradient(f: np.ndarray, h: float) -> np.ndarray:
    g = np.zeros_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    return g


def second_derivative(f: np.ndarray, h: float) -> np.ndarray:
    s = np.empty_like(f)
    s[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    s[0] = 2 * (f[1] - f[0]) / h**2
    s[-1] = 2 * (f[-2] - f[-1]) / h**2
    return s


def radial_hessian_parts(f: np.ndarray, r: np.ndarray, h: float):
    """Return (f'', f'/r) with f'/r -> f''(0) at the origin."""
    f2 = second_derivative(f, h)
    f1 = gradient(f, h)
    over_r = np.empty_like(f)
    over_r[1:] = f1[1:] / r[1:]
    over_r[0] = f2[0]
    return f2, over_r
