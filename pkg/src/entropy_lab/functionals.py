"""Entropy and information functionals of grid densities.

All functionals act on :class:`GridDensity` values through the grid's
quadrature weights.  Orders within ``LIMIT_EPS`` of one switch to the
Shannon / Renyi closed forms instead of evaluating 0/0 expressions.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .grid import (
    FLOOR,
    MIN_NODES,
    DomainError,
    GridDensity,
    LimitBranchError,
    Orders,
    gradient,
    is_one,
    radial_hessian_parts,
    second_derivative,
)


def q_log(s, q: float):
    """Deformed logarithm ``(s**(1-q) - 1) / (1-q)``; ``log`` at q = 1."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise DomainError("q_log needs a positive argument")
    if is_one(q):
        out = np.log(s)
    else:
        out = np.expm1((1 - q) * np.log(s)) / (1 - q)
    return out[()] if out.ndim == 0 else out


def q_exp(s, q: float):
    """Deformed exponential ``max(1 + (1-q) s, 0)**(1/(1-q))``; ``exp`` at q = 1."""
    s = np.asarray(s, dtype=float)
    if is_one(q):
        out = np.exp(s)
    else:
        base = (1 - q) * s
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp(np.log1p(base) / (1 - q))
        cut = base <= -1
        out = np.where(cut, 0.0 if q < 1 else np.inf, out)
    return out[()] if out.ndim == 0 else out


def moment(u: GridDensity, p: float) -> float:
    """Raw moment ``M_p = int u^p``."""
    if not p > 0:
        raise DomainError(f"M_p is defined for p > 0, got p={p}")
    m = u.integrate(u.values**p)
    if not (m > 0 and np.isfinite(m)):
        raise DomainError(f"M_p degenerate (M_{p}={m})")
    return m


def e_p_moment(u: GridDensity, p: float) -> tuple[float, float]:
    """Return ``(E_p, M_p)`` with ``E_p = M_p / (p - 1)``."""
    if is_one(p):
        raise LimitBranchError("E_p has no p = 1 value; use the Shannon entropy")
    m = moment(u, p)
    return m / (p - 1), m


def shannon_entropy(u: GridDensity) -> float:
    v = u.values
    logv = np.log(np.where(v > 0, v, 1.0))
    return -u.integrate(v * logv)


def energy(u: GridDensity, p: float) -> float:
    """``E_p``, or its regularized limit ``int u log u`` when p = 1."""
    if is_one(p):
        return -shannon_entropy(u)
    return e_p_moment(u, p)[0]


def renyi_entropy(u: GridDensity, p: float) -> float:
    if not p > 0:
        raise DomainError(f"Renyi entropy needs p > 0, got p={p}")
    if is_one(p):
        return shannon_entropy(u)
    return np.log(moment(u, p)) / (1 - p)


def sharma_mittal_entropy(u: GridDensity, o: Orders) -> float:
    """``log_q`` of ``M_p**(1/(1-p))``, evaluated through the Renyi entropy."""
    r = renyi_entropy(u, o.p)
    if o.q_is_one:
        return r
    return np.expm1((1 - o.q) * r) / (1 - o.q)


def sharma_mittal_direct(u: GridDensity, o: Orders) -> float:
    """``((M_p)**((1-q)/(1-p)) - 1) / (1-q)`` straight from the moment."""
    if o.p_is_one or o.q_is_one:
        return sharma_mittal_entropy(u, o)
    m = moment(u, o.p)
    return (m ** ((1 - o.q) / (1 - o.p)) - 1) / (1 - o.q)


def tsallis_entropy(u: GridDensity, p: float) -> float:
    if is_one(p):
        return shannon_entropy(u)
    return (moment(u, p) - 1) / (1 - p)


def entropy_power(u: GridDensity, o: Orders) -> float:
    """Sharma-Mittal entropy power ``exp(sigma_q R_p)``."""
    return float(np.exp(o.sigma_q * renyi_entropy(u, o.p)))


def entropy_power_from_sm(u: GridDensity, o: Orders) -> float:
    """Same power computed as ``q_exp(S_pq, q)**sigma_q``."""
    return float(q_exp(sharma_mittal_entropy(u, o), o.q) ** o.sigma_q)


def shannon_entropy_power(u: GridDensity) -> float:
    return float(np.exp(2.0 / u.d * shannon_entropy(u)))


def renyi_entropy_power(u: GridDensity, p: float) -> float:
    """``P_p = exp(sigma_p R_p)``, the (p, p) Sharma-Mittal power."""
    return entropy_power(u, Orders(p, p, u.d))


def bc_entropy_power(u: GridDensity, p: float) -> float:
    """``B_p = exp((2/d) R_p)``, homogeneous of degree two under X -> lambda X."""
    return float(np.exp(2.0 / u.d * renyi_entropy(u, p)))


def _floored(u: GridDensity) -> np.ndarray:
    return np.maximum(u.values, FLOOR)


def e_prime(v: np.ndarray, p: float) -> np.ndarray:
    """Pressure ``e_p'(v) = p/(p-1) v**(p-1)`` up to an additive constant.

    The constant ``-p/(p-1)`` is dropped from the formula via ``expm1`` so
    the p -> 1 limit (``log v``) is reached without cancellation.
    """
    if is_one(p):
        return np.log(v)
    return p * np.expm1((p - 1) * np.log(v)) / (p - 1)


def _check_fisher_args(u: GridDensity, p: float):
    if not p > 0.5:
        raise DomainError(f"generalized Fisher information needs p > 1/2, got p={p}")
    if u.n < MIN_NODES:
        raise DomainError(f"grid too coarse: {u.n} < {MIN_NODES} nodes")


def fisher_information_forms(u: GridDensity, p: float) -> tuple[float, float]:
    """Both discrete forms ``int |grad u^p|^2 / u`` and ``int u |grad e_p'(u)|^2``."""
    _check_fisher_args(u, p)
    v = _floored(u)
    mask = u.support_mask()
    g = gradient(v**p, u.h)
    first = u.integrate(np.where(mask, g**2 / v, 0.0))
    gf = gradient(e_prime(v, p), u.h)
    second = u.integrate(np.where(mask, v * gf**2, 0.0))
    return first, second


def fisher_information(u: GridDensity, p: float) -> float:
    """Generalized Fisher information ``I_p(u) = int |grad u^p|^2 / u``."""
    return fisher_information_forms(u, p)[0]


def second_order_functional(u: GridDensity, p: float) -> Optional[float]:
    """``J_p(u) = 2 int u^p (|Hess f|^2 + (p-1)(Lap f)^2)`` with ``f = e_p'(u)``.

    Returns None when fewer than MIN_NODES nodes survive the support filter.
    """
    _check_fisher_args(u, p)
    mask = u.support_mask()
    if mask.sum() < MIN_NODES:
        return None
    v = _floored(u)
    f = e_prime(v, p)
    if u.geometry == "radial":
        f2, over_r = radial_hessian_parts(f, u.nodes, u.h)
        k = u.d - 1
        hess2 = f2**2 + k * over_r**2
        lap = f2 + k * over_r
    else:
        f2 = second_derivative(f, u.h)
        hess2, lap = f2**2, f2
    integrand = v**p * (hess2 + (p - 1) * lap**2)
    return 2 * u.integrate(np.where(mask, integrand, 0.0))


def flow_prefactor(u: GridDensity, o: Orders) -> float:
    """Nonlocal factor ``M_p**((p-q)/(1-p))`` of the Sharma-Mittal flow."""
    return float(np.exp((o.p - o.q) * renyi_entropy(u, o.p)))


def renyi_rate(u: GridDensity, o: Orders) -> float:
    """``dR_p/dt`` along the Sharma-Mittal flow: ``M_p**((2p-q-1)/(1-p)) I_p``."""
    r = renyi_entropy(u, o.p)
    return float(np.exp((2 * o.p - o.q - 1) * r) * fisher_information(u, o.p))


def q_functional(u: GridDensity, o: Orders, sigma: Optional[float] = None) -> float:
    """``Q_pq = N_pq * dR_p/dt``; ``sigma`` overrides the power's exponent."""
    s = o.sigma_q if sigma is None else sigma
    return float(np.exp(s * renyi_entropy(u, o.p)) * renyi_rate(u, o))


def dilate(u: GridDensity, lam: float) -> GridDensity:
    """Mass preserving dilation ``x -> lam**d u(lam x)``, carried by a rescaled grid."""
    if not lam > 0:
        raise DomainError("dilation factor must be positive")
    return GridDensity(u.nodes / lam, u.values * lam**u.d, u.geometry, u.d)


def s_pq_scalar(z, o: Orders):
    """``s_pq(z) = -log_q(((p-1) z)**(1/(1-p)))``."""
    z = np.asarray(z, dtype=float)
    if o.p_is_one or np.any((o.p - 1) * z <= 0):
        raise DomainError("s_pq needs (p - 1) z > 0")
    return -q_log(np.exp(np.log((o.p - 1) * z) / (1 - o.p)), o.q)


@dataclass(frozen=True)
class FunctionalSnapshot:
    t: float
    mass: float
    E_p: float
    R_p: float
    T_p: float
    S_pq: float
    N_shannon: Optional[float]
    P_p: float
    B_p: float
    N_pq: float
    I_p: Optional[float]
    J_p: Optional[float]
    Q_pq: Optional[float]
    prefactor: float

    def as_dict(self) -> dict:
        return asdict(self)


def snapshot(u: GridDensity, o: Orders, t: float = 0.0) -> FunctionalSnapshot:
    """All scalar functionals of one state.  On p = 1, ``E_p`` is ``int u log u``."""
    p = o.p
    r = renyi_entropy(u, p)
    i_p = j_p = q_pq = None
    if p > 0.5:
        i_p = fisher_information(u, p)
        j_p = second_order_functional(u, p)
        q_pq = float(np.exp((o.sigma_q + 2 * p - o.q - 1) * r) * i_p)
    return FunctionalSnapshot(
        t=float(t),
        mass=u.mass,
        E_p=energy(u, p),
        R_p=r,
        T_p=tsallis_entropy(u, p),
        S_pq=sharma_mittal_entropy(u, o),
        N_shannon=shannon_entropy_power(u),
        P_p=float(np.exp(o.sigma_p * r)),
        B_p=float(np.exp(2.0 / o.d * r)),
        N_pq=float(np.exp(o.sigma_q * r)),
        I_p=i_p,
        J_p=j_p,
        Q_pq=q_pq,
        prefactor=float(np.exp((p - o.q) * r)),
    )
