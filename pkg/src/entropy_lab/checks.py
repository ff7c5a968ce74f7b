"""Numerical checks of the production identities, concavity and the key inequality."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .functionals import dilate, fisher_information, moment, q_functional, second_order_functional
from .grid import GridDensity, Orders, is_one
from .solver import Trajectory

IDENTITY_TOL = 5e-2
INEQUALITY_TOL = 1e-8
CONCAVITY_TOL = 1e-6
DILATION_TOL = 1e-6
LINEARITY_TOL = 1e-3


@dataclass
class CheckReport:
    """Outcome of one identity or inequality check.

    Identities pass when ``max_rel_residual <= tol``; inequalities when
    ``margin_min >= -tol``.  Unused fields stay None.
    """

    check_id: str
    passed: bool
    tol: float
    max_rel_residual: Optional[float] = None
    margin_min: Optional[float] = None
    samples: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _clean(
            {
                "check_id": self.check_id,
                "pass": bool(self.passed),
                "tol": self.tol,
                "max_rel_residual": self.max_rel_residual,
                "margin_min": self.margin_min,
                "params": self.params,
                "extra": self.extra,
                "samples": self.samples,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def traj_params(traj: Trajectory, o: Orders) -> dict:
    n = traj.states[0].n if traj.states else traj.extra.get("n")
    return {"p": o.p, "q": o.q, "d": o.d, "n": n, "dt": traj.dt_max, "kind": traj.kind, "scheme": traj.spec.scheme}


def time_derivatives(t: np.ndarray, f: np.ndarray):
    """First and second derivatives at interior samples of a nonuniform series.

    Both come from the quadratic through three neighbouring samples.
    """
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    fm, f0, fp = f[:-2], f[1:-1], f[2:]
    d1 = -h2 / (h1 * (h1 + h2)) * fm + (h2 - h1) / (h1 * h2) * f0 + h1 / (h2 * (h1 + h2)) * fp
    d2 = 2 * (fm / (h1 * (h1 + h2)) - f0 / (h1 * h2) + fp / (h2 * (h1 + h2)))
    return d1, d2


def local_fit_derivatives(t: np.ndarray, f: np.ndarray, width: int = 5):
    """First and second derivatives at interior samples from local polynomial fits.

    Each fit uses ``width`` consecutive samples (degree ``width - 1``),
    centred where possible and shifted inwards next to the ends.
    """
    n = len(t)
    if n < width:
        return time_derivatives(t, f)
    d1 = np.empty(n - 2)
    d2 = np.empty(n - 2)
    for i in range(1, n - 1):
        lo = min(max(i - width // 2, 0), n - width)
        tt = t[lo : lo + width] - t[i]
        scale = np.max(np.abs(tt))
        c = np.polynomial.polynomial.polyfit(tt / scale, f[lo : lo + width], width - 1)
        d1[i - 1] = c[1] / scale
        d2[i - 1] = 2 * c[2] / scale**2
    return d1, d2


def _half_span(t):
    return (t[2:] - t[:-2]) / 2


def _interior_mask(traj: Trajectory) -> np.ndarray:
    # drop samples within two steps of t_start
    t = traj.times[1:-1]
    return t - traj.times[0] >= 2 * traj.dt_max


def _need_snapshots(traj: Trajectory):
    if len(traj.snapshots) < 8:
        raise ValueError(f"checks need >= 8 snapshots, got {len(traj.snapshots)}")


def check_production_identities(
    traj: Trajectory, o: Optional[Orders] = None, tol: float = IDENTITY_TOL, drop_prefactor: bool = False
) -> tuple[CheckReport, CheckReport]:
    """``-dE_p/dt = A I_p`` and ``-dI_p/dt = A J_p`` with ``A = M_p**((p-q)/(1-p))``.

    ``drop_prefactor`` replaces A by 1 (negative control).
    """
    _need_snapshots(traj)
    o = traj.orders if o is None else o
    t = traj.times
    E = traj.series("E_p")
    I = traj.series("I_p")
    J = traj.series("J_p")
    A = np.ones_like(t) if drop_prefactor else traj.series("prefactor")
    keep = _interior_mask(traj)
    pme = is_one(o.p - o.q + 1)
    reports = []
    for name, f, rhs in (("ProdE", E, A * I), ("ProdI", I, A * J)):
        d1, _ = time_derivatives(t, f)
        target = rhs[1:-1]
        ok = keep & np.isfinite(target) & (np.abs(target) > 0)
        res = np.abs(-d1 - target) / np.abs(target)
        samples = [
            {"t": float(tt), "lhs": float(-a), "rhs": float(b), "rel_residual": float(r)}
            for tt, a, b, r, k in zip(t[1:-1], d1, target, res, ok)
            if k
        ]
        worst = float(res[ok].max()) if ok.any() else math.nan
        reports.append(
            CheckReport(
                check_id=name + ("_PME" if pme else ""),
                passed=bool(ok.any() and worst <= tol),
                tol=tol,
                max_rel_residual=worst,
                samples=samples,
                params=traj_params(traj, o),
                extra={"drop_prefactor": drop_prefactor},
            )
        )
    return reports[0], reports[1]


def check_concavity(
    traj: Trajectory, o: Optional[Orders] = None, tol: float = CONCAVITY_TOL, tol_rel: float = 0.0
) -> CheckReport:
    """Sign of the second differences of ``N_pq(t)``, cross-checked against the Renyi form.

    A second difference is the quadratic-fit second derivative times the
    squared local half-span (the plain 3-point difference on uniform times).
    It passes when ``<= tol * max|N| + tol_rel * |N|``.  The equivalent
    condition ``-R'' >= sigma_q R'^2`` is mapped to the same scale through
    ``N'' = -|sigma_q| N (-R'' - sigma_q R'^2) sign(sigma_q)``.
    """
    _need_snapshots(traj)
    o = traj.orders if o is None else o
    t = traj.times
    N = traj.series("N_pq")
    R = traj.series("R_p")
    scale = float(np.max(np.abs(N)))
    span2 = _half_span(t) ** 2
    _, n2 = time_derivatives(t, N)
    dn = n2 * span2
    r1, r2 = local_fit_derivatives(t, R)
    sig = o.sigma_q
    ccc = math.copysign(1.0, sig) * (-r2 - sig * r1**2) if sig != 0 else np.zeros_like(r2)
    dn_ccc = -abs(sig) * N[1:-1] * ccc * span2
    keep = _interior_mask(traj)
    allow = tol * scale + tol_rel * np.abs(N[1:-1])
    margin = (allow - dn) / scale - tol
    margin_ccc = (allow - dn_ccc) / scale - tol
    passed = bool(np.all(dn[keep] <= allow[keep]))
    passed_ccc = bool(np.all(dn_ccc[keep] <= allow[keep]))
    samples = [
        {"t": float(a), "second_difference": float(b), "ccc_margin": float(c)}
        for a, b, c, k in zip(t[1:-1], dn, ccc, keep)
        if k
    ]
    return CheckReport(
        check_id="ConcavityN",
        passed=passed,
        tol=tol,
        max_rel_residual=float(np.max(dn[keep]) / scale),
        margin_min=float(np.min(margin[keep])),
        samples=samples,
        params=traj_params(traj, o),
        extra={
            "regime": o.regime(),
            "max_N": scale,
            "ccc_pass": passed_ccc,
            "ccc_margin_min": float(np.min(margin_ccc[keep])),
            "verdicts_agree": passed == passed_ccc,
        },
    )


def check_linear_power(traj: Trajectory, tol: float = LINEARITY_TOL, column: str = "N_pq") -> CheckReport:
    """Affinity of an entropy power in t: ``max |second diff| / |first diff|``."""
    _need_snapshots(traj)
    t = traj.times
    N = traj.series(column)
    d1, d2 = time_derivatives(t, N)
    span = _half_span(t)
    keep = _interior_mask(traj)
    ratio = np.abs(d2 * span**2) / np.abs(d1 * span)
    worst = float(ratio[keep].max())
    return CheckReport(
        check_id="LinearHeatN",
        passed=worst < tol,
        tol=tol,
        max_rel_residual=worst,
        samples=[{"t": float(a), "ratio": float(r)} for a, r, k in zip(t[1:-1], ratio, keep) if k],
        params=traj_params(traj, traj.orders),
    )


def key_inequality_margin(u: GridDensity, p: float) -> Optional[float]:
    """``(J_p M_p - 2 (1/d + p - 1) I_p^2) / (J_p M_p)``, None without J_p."""
    j = second_order_functional(u, p)
    if j is None:
        return None
    i = fisher_information(u, p)
    m = moment(u, p)
    jm = j * m
    return (jm - 2 * (1 / u.d + p - 1) * i**2) / jm


def check_key_inequality(traj: Trajectory, o: Optional[Orders] = None, tol: float = INEQUALITY_TOL) -> CheckReport:
    """Relative margin of ``J_p M_p >= 2 (1/d + p - 1) I_p^2`` at every snapshot."""
    o = traj.orders if o is None else o
    p = o.p
    margins, samples = [], []
    for s in traj.snapshots:
        if s.J_p is None or s.I_p is None:
            continue
        m = s.mass if o.p_is_one else (p - 1) * s.E_p
        jm = s.J_p * m
        mg = (jm - 2 * (1 / o.d + p - 1) * s.I_p**2) / jm
        margins.append(mg)
        samples.append({"t": s.t, "JM": jm, "margin": mg})
    if not margins:
        raise ValueError("J_p is absent at every snapshot")
    worst = float(min(margins))
    return CheckReport(
        check_id="KeyIneq",
        passed=worst >= -tol,
        tol=tol,
        margin_min=worst,
        samples=samples,
        params=traj_params(traj, o),
    )


def check_dilation_invariance(
    u: GridDensity, o: Orders, lambdas: Sequence[float], tol: float = DILATION_TOL, sigma: Optional[float] = None
) -> CheckReport:
    """Largest relative change of ``Q_pq`` over mass preserving dilations."""
    q0 = q_functional(u, o, sigma)
    samples = []
    for lam in lambdas:
        ql = q_functional(dilate(u, lam), o, sigma)
        samples.append({"lambda": float(lam), "Q": ql, "rel_deviation": abs(ql - q0) / abs(q0)})
    worst = max(s["rel_deviation"] for s in samples)
    return CheckReport(
        check_id="DilationQ",
        passed=worst <= tol,
        tol=tol,
        max_rel_residual=worst,
        samples=samples,
        params={"p": o.p, "q": o.q, "d": o.d, "n": u.n, "sigma": o.sigma_q if sigma is None else sigma},
    )
