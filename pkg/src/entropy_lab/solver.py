"""Conservative finite-volume solver for u_t = A(t) Lap(u^p).

``A(t) = M_p(u_t)**((p-q)/(1-p))`` gives the nonlocal Sharma-Mittal flow;
``q = p`` is the porous medium equation, ``p = q = 1`` the heat equation and
``q = 1`` the Renyi flow.  The prefactor depends on t only, so every run is a
time change of the porous medium flow; the accumulated internal time
``tau = int A dt`` is recorded alongside.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import ceil
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from .functionals import FunctionalSnapshot, snapshot
from .grid import GridDensity, Orders, is_one, sphere_area

log = logging.getLogger(__name__)

MAX_STEPS = 5_000_000
LEAK_TOL = 1e-6
NEG_TOL = 1e-12


class NumericalAbort(RuntimeError):
    """Integration stopped: instability, mass leak or step budget exhausted."""


class CFLError(NumericalAbort):
    def __init__(self, dt: float, dt_max: float):
        super().__init__(f"dt = {dt:.6g} violates the CFL bound; maximal stable dt is {dt_max:.6g}")
        self.dt_max = dt_max


@dataclass(frozen=True)
class FlowSpec:
    """Time window and stepping policy of one run.

    ``scheme="explicit"`` steps with forward Euler, either at the fixed ``dt``
    (checked against the CFL bound) or at ``cfl`` times the bound.
    ``scheme="implicit"`` uses variable-step BDF2 with steps no larger than ``dt``.
    Snapshots are taken at ``snapshots`` times whose spacing grows
    geometrically by ``snapshot_ratio`` (1 gives uniform spacing).
    """

    t_end: float
    t_start: float = 0.0
    dt: Optional[float] = None
    cfl: float = 0.4
    scheme: str = "explicit"
    snapshots: int = 64
    snapshot_ratio: float = 20.0

    def __post_init__(self):
        if not self.t_end > self.t_start >= 0:
            raise ValueError("need t_end > t_start >= 0")
        if self.scheme not in ("explicit", "implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "implicit" and not (self.dt and self.dt > 0):
            raise ValueError("implicit stepping needs a positive dt")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("CFL safety factor must lie in (0, 1]")
        if self.snapshots < 3 or self.snapshot_ratio < 1:
            raise ValueError("need >= 3 snapshots and snapshot_ratio >= 1")

    def snapshot_times(self) -> np.ndarray:
        k = self.snapshots - 1
        if self.snapshot_ratio == 1:
            steps = np.ones(k)
        else:
            steps = self.snapshot_ratio ** (np.arange(k) / max(k - 1, 1))
        cum = np.concatenate([[0.0], np.cumsum(steps)])
        t = self.t_start + (self.t_end - self.t_start) * cum / cum[-1]
        t[-1] = self.t_end
        return t


def flow_kind(o: Orders) -> str:
    if o.p_is_one and o.q_is_one:
        return "heat"
    if is_one(o.p - o.q + 1):
        return "pme"
    if o.q_is_one:
        return "renyi"
    return "sharma-mittal"


@dataclass
class Trajectory:
    spec: FlowSpec
    orders: Orders
    kind: str
    times: np.ndarray
    states: list
    snapshots: list
    tau: np.ndarray
    dt_max: float
    steps: int
    extra: dict = field(default_factory=dict)

    def series(self, name: str) -> np.ndarray:
        """Column of snapshot values; absent entries become NaN."""
        vals = [getattr(s, name) for s in self.snapshots]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)


class _Operator:
    """Flux divergence ``sum_faces a (w_j - w_i) / h`` and its matrix."""

    def __init__(self, u: GridDensity):
        self.h = u.h
        self.vol = np.array(u.weights)
        if u.geometry == "line":
            area = np.ones(u.n - 1)
        else:
            mid = u.nodes[:-1] + u.h / 2
            area = sphere_area(u.d) * mid ** (u.d - 1)
        self.c = area / u.h
        self.d = u.d

    def divergence(self, w: np.ndarray) -> np.ndarray:
        flux = self.c * np.diff(w)
        net = np.zeros_like(w)
        net[:-1] += flux
        net[1:] -= flux
        return net

    def banded(self, coef: float, diag_scale: np.ndarray, base: np.ndarray) -> np.ndarray:
        """Bands of ``diag(base) - coef * K diag(diag_scale)``."""
        n = base.size
        ab = np.zeros((3, n))
        ab[1] = base.copy()
        ab[1, :-1] += coef * self.c * diag_scale[:-1]
        ab[1, 1:] += coef * self.c * diag_scale[1:]
        ab[0, 1:] = -coef * self.c * diag_scale[1:]
        ab[2, :-1] = -coef * self.c * diag_scale[:-1]
        return ab


def _spow(x: np.ndarray, a: float) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** a


def stable_dt(u: np.ndarray, p: float, A: float, op: _Operator, cfl: float = 1.0) -> float:
    """``cfl * h^2 / (2 d p max(u^(p-1)) A)``."""
    if is_one(p):
        diff = 1.0
    elif p > 1:
        diff = p * u.max() ** (p - 1)
    else:
        diff = p * max(u.min(), 1e-300) ** (p - 1)
    return cfl * op.h**2 / (2 * op.d * diff * A)


def _implicit_solve(u_guess: np.ndarray, a: float, coef: float, rhs: np.ndarray, p: float, op: _Operator) -> np.ndarray:
    """Solve ``a V u - coef K u^p = rhs`` by Newton.

    The unknown is u for p >= 1 and w = u^p for p < 1, so the Jacobian stays
    bounded where u -> 0.
    """
    vol = op.vol
    by_w = p < 1
    x = _spow(u_guess, p) if by_w else u_guess.copy()
    scale = np.abs(rhs).max()
    for _ in range(60):
        if by_w:
            uu = _spow(x, 1 / p)
            w = x
            base = a * vol * np.abs(x) ** (1 / p - 1) / p
            dscale = np.ones_like(x)
        else:
            uu = x
            w = _spow(x, p)
            base = a * vol
            dscale = p * np.abs(x) ** (p - 1)
        res = a * vol * uu - coef * op.divergence(w) - rhs
        if np.abs(res).max() <= 1e-15 * scale:
            break
        delta = solve_banded((1, 1), op.banded(coef, dscale, base), -res)
        x = x + delta
        if np.abs(delta).max() <= 1e-14 * np.abs(x).max():
            break
    else:
        raise NumericalAbort("Newton iteration did not converge")
    return _spow(x, 1 / p) if by_w else x


class _BDF2:
    """Variable-step BDF2 with a backward Euler start.

    The prefactor is extrapolated linearly from the last two steps, which
    keeps the scheme second order in time.  A step whose BDF2 history term
    would make the right-hand side negative falls back to backward Euler.
    """

    def __init__(self, p: float, op: _Operator):
        self.p, self.op = p, op
        self.prev = None  # (u_{n-1}, A_{n-1}, dt_{n-1})

    def step(self, u: np.ndarray, A: float, dt: float) -> np.ndarray:
        op, vol = self.op, self.op.vol
        new = None
        if self.prev is not None:
            u_old, A_old, dt_old = self.prev
            w = dt / dt_old
            rhs = vol * ((1 + w) * u - w * w / (1 + w) * u_old)
            if rhs.min() >= 0:
                A_star = max(A + w * (A - A_old), 0.5 * A)
                new = _implicit_solve(u, (1 + 2 * w) / (1 + w), dt * A_star, rhs, self.p, op)
                if new.min() < -NEG_TOL:
                    new = None
        if new is None:
            new = _implicit_solve(u, 1.0, dt * A, vol * u, self.p, op)
        self.prev = (u, A, dt)
        return new


def solve_sm_flow(u0: GridDensity, o: Orders, spec: FlowSpec, keep_states: bool = True) -> Trajectory:
    """Integrate ``u_t = M_p**((p-q)/(1-p)) Lap u^p`` with zero-flux boundaries.

    The prefactor is frozen at the start of each step.  Raises
    :class:`CFLError` for a fixed explicit dt above the stability bound and
    :class:`NumericalAbort` on negative values or mass drift above 1e-6.
    """
    if u0.d != o.d:
        raise ValueError(f"density dimension {u0.d} differs from orders d = {o.d}")
    if u0.n < 64:
        raise ValueError("flows need at least 64 nodes")
    p = o.p
    op = _Operator(u0)
    t_snap = spec.snapshot_times()
    u = np.array(u0.values)
    mass0 = u0.mass
    vol = op.vol

    def prefactor(w):
        if o.p_is_one:
            vals = np.where(u > 0, u, 1.0)
            h_ent = -float(vol @ (u * np.log(vals)))
            return float(np.exp((p - o.q) * h_ent))
        return float((vol @ w) ** ((p - o.q) / (1 - p)))

    states, snaps, taus = [], [], []
    t = tau = spec.t_start
    dt_used = 0.0
    steps = 0

    def record(t_now):
        state = u0.with_values(u)
        if keep_states:
            states.append(state)
        snaps.append(snapshot(state, o, t_now))
        taus.append(tau)

    record(t)
    stepper = _BDF2(p, op)
    for t_next in t_snap[1:]:
        if spec.scheme == "implicit":
            nsub = max(1, ceil((t_next - t) / spec.dt * (1 - 1e-12)))
            dt = (t_next - t) / nsub
            for _ in range(nsub):
                A = prefactor(_spow(u, p))
                u = stepper.step(u, A, dt)
                tau += A * dt
                steps += 1
            t = t_next
            dt_used = max(dt_used, dt)
        else:
            while t < t_next:
                w = u**p
                A = prefactor(w)
                dt_max = stable_dt(u, p, A, op)
                if spec.dt is not None:
                    if spec.dt > dt_max:
                        raise CFLError(spec.dt, dt_max)
                    dt = spec.dt
                else:
                    dt = spec.cfl * dt_max
                last = t + dt >= t_next * (1 - 1e-14)
                if last:
                    dt = t_next - t
                u = u + (dt * A) * op.divergence(w) / vol
                tau += A * dt
                t = t_next if last else t + dt
                dt_used = max(dt_used, dt)
                steps += 1
                if steps > MAX_STEPS:
                    raise NumericalAbort(
                        f"explicit step budget of {MAX_STEPS} exhausted at t = {t:.6g}; use the implicit scheme"
                    )
        if u.min() < -NEG_TOL:
            raise NumericalAbort(f"negative density {u.min():.3e} at t = {t:.6g}: scheme unstable")
        u = np.clip(u, 0.0, None)
        leak = abs(float(vol @ u) - mass0)
        if leak > LEAK_TOL:
            raise NumericalAbort(f"boundary mass leak {leak:.3e} at t = {t:.6g}")
        record(t)

    log.debug("%s flow p=%g q=%g: %d steps, max dt %.3g", flow_kind(o), o.p, o.q, steps, dt_used)
    return Trajectory(
        spec=spec,
        orders=o,
        kind=flow_kind(o),
        times=np.array([s.t for s in snaps]),
        states=states,
        snapshots=snaps,
        tau=np.array(taus),
        dt_max=dt_used,
        steps=steps,
    )


def solve_pme(u0: GridDensity, p: float, spec: FlowSpec, keep_states: bool = True) -> Trajectory:
    """Porous medium equation ``u_t = Lap u^p`` (heat equation at p = 1)."""
    return solve_sm_flow(u0, Orders(p, p, u0.d), spec, keep_states)
