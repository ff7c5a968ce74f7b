"""Reference densities: Gaussians, Barenblatt profiles, uniforms and mixtures."""

from __future__ import annotations

from math import exp, lgamma, log, pi, sqrt

import numpy as np

from .grid import DomainError, GridDensity


def line_nodes(L: float, n: int) -> np.ndarray:
    """Nodes of [-L, L], mirror-symmetric to the last bit."""
    h = 2.0 * L / (n - 1)
    return (np.arange(n) - (n - 1) / 2) * h


def radial_nodes(L: float, n: int) -> np.ndarray:
    return np.arange(n) * (L / (n - 1))


def _grid(L: float, n: int, d: int):
    if d == 1:
        return line_nodes(L, n), "line"
    return radial_nodes(L, n), "radial"


def gaussian(sigma2: float, d: int = 1, L: float | None = None, n: int = 2048) -> GridDensity:
    """Isotropic Gaussian of variance ``sigma2`` per coordinate.

    d = 1 uses the line [-L, L]; d > 1 a radial grid on [0, L].  L defaults
    to 8 standard deviations and may not be smaller.
    """
    if not sigma2 > 0:
        raise DomainError("sigma2 must be positive")
    s = sqrt(sigma2)
    L = 8.0 * s if L is None else float(L)
    if L < 8.0 * s * (1 - 1e-12):
        raise DomainError(f"L = {L:g} < 8 sigma = {8 * s:g}: tail mass above 1e-10")
    x, geom = _grid(L, n, d)
    u = (2 * pi * sigma2) ** (-d / 2) * np.exp(-(x**2) / (2 * sigma2))
    return GridDensity(x, u, geom, d)


def gaussian_values(x, sigma2: float, d: int = 1):
    x = np.asarray(x, dtype=float)
    return (2 * pi * sigma2) ** (-d / 2) * np.exp(-(x**2) / (2 * sigma2))


def barenblatt_exponents(p: float, d: int) -> tuple[float, float, float]:
    """``(alpha, beta, k)`` of the source-type solution of u_t = Lap u^p."""
    alpha = d / (d * (p - 1) + 2)
    beta = alpha / d
    k = alpha * (p - 1) / (2 * p * d)
    return alpha, beta, k


def barenblatt_constant(p: float, d: int, mass: float = 1.0) -> float:
    """Constant C making ``(C - k|y|^2)_+^(1/(p-1))`` carry the given mass."""
    if not p > 1:
        raise DomainError(f"Barenblatt profiles need p > 1, got p={p}")
    _, _, k = barenblatt_exponents(p, d)
    g = 1.0 / (p - 1)
    # int (1 - |z|^2)_+^g dz over R^d
    log_ball = d / 2 * log(pi) + lgamma(g + 1) - lgamma(g + 1 + d / 2)
    log_c = (log(mass) + d / 2 * log(k) - log_ball) / (g + d / 2)
    return exp(log_c)


def barenblatt_radius(p: float, d: int, t: float, mass: float = 1.0) -> float:
    _, beta, k = barenblatt_exponents(p, d)
    return sqrt(barenblatt_constant(p, d, mass) / k) * t**beta


def barenblatt_values(x, p: float, d: int, t: float, mass: float = 1.0):
    """``t^-alpha (C - k |x|^2 t^(-2 beta))_+^(1/(p-1))``."""
    if not t > 0:
        raise DomainError("Barenblatt time must be positive")
    alpha, beta, k = barenblatt_exponents(p, d)
    c = barenblatt_constant(p, d, mass)
    x = np.asarray(x, dtype=float)
    base = np.clip(c - k * x**2 * t ** (-2 * beta), 0.0, None)
    return t**-alpha * base ** (1.0 / (p - 1))


def barenblatt(
    p: float, d: int, t: float, mass: float = 1.0, n: int = 2048, L: float | None = None
) -> GridDensity:
    """Barenblatt profile at time t on a grid leaving >= 32 nodes outside the support."""
    if not p > 1:
        raise DomainError(f"Barenblatt profiles need p > 1, got p={p}")
    R = barenblatt_radius(p, d, t, mass)
    span = 2 if d == 1 else 1
    need = R / (1 - 32.0 * span / (n - 1))
    if L is None:
        L = max(1.25 * R, need)
    elif L < need:
        raise DomainError(f"L = {L:g} leaves fewer than 32 nodes beyond the support radius {R:g}")
    x, geom = _grid(L, n, d)
    return GridDensity(x, barenblatt_values(x, p, d, t, mass), geom, d)


def uniform(a: float = 0.0, b: float = 1.0, n: int = 1025) -> GridDensity:
    """Uniform density on [a, b] with the grid spanning exactly [a, b]."""
    if not b > a:
        raise DomainError("need b > a")
    x = np.linspace(a, b, n)
    return GridDensity(x, np.full(n, 1.0 / (b - a)))


def box(width: float, L: float, n: int = 2048) -> GridDensity:
    """Uniform density on [-width/2, width/2] embedded in [-L, L]."""
    if not 0 < width < 2 * L:
        raise DomainError("box width must lie in (0, 2L)")
    x = line_nodes(L, n)
    return GridDensity(x, (np.abs(x) <= width / 2 + 1e-12).astype(float) / width)


def mixture(components, L: float, n: int = 2048) -> GridDensity:
    """Gaussian mixture on [-L, L]; ``components`` holds (weight, mean, variance)."""
    x = line_nodes(L, n)
    u = np.zeros(n)
    for w, mu, s2 in components:
        if not (w > 0 and s2 > 0):
            raise DomainError("mixture weights and variances must be positive")
        u += w * gaussian_values(x - mu, s2)
    return GridDensity(x, u)
