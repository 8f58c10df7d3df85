"""Material points, backward characteristics and gradient transport.

Velocities off the grid are direct sums of the velocity spectrum. Between
stored snapshots the vorticity spectrum (hence the velocity) is interpolated
linearly in time; this is O(dt^2) inside an RK4 scheme and is the dominant
error of backtracking at CFL-limited steps.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .evolution import SimState
from .spectral import ScalarField, stream_function

Flow = Callable[[float, np.ndarray], tuple[np.ndarray, np.ndarray]]


class CoverageError(ValueError):
    """Snapshots do not span the requested time interval."""


def _spectrum(omega) -> np.ndarray:
    if isinstance(omega, ScalarField):
        if omega.spectrum is None:
            raise ValueError("field has no spectrum")
        return omega.spectrum
    return np.asarray(omega, dtype=float)


def flow_at(omega, points, jacobian: bool = True):
    """Velocity (P, 2) and optionally its gradient (P, 2, 2), grad[p, a, b] = d u_a / d x_b."""
    a = _spectrum(omega)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    N = a.shape[0]
    kpi = np.pi * np.arange(1, N + 1)
    psi = stream_function(a)
    s1, c1 = np.sin(np.outer(pts[:, 0], kpi)), np.cos(np.outer(pts[:, 0], kpi))
    s2, c2 = np.sin(np.outer(pts[:, 1], kpi)), np.cos(np.outer(pts[:, 1], kpi))
    kk = kpi[None, :]
    kj = kpi[:, None]
    u1 = -np.einsum("pj,jk,pk->p", s1, kk * psi, c2)
    u2 = np.einsum("pj,jk,pk->p", c1, kj * psi, s2)
    u = np.stack([u1, u2], axis=-1)
    if not jacobian:
        return u, None
    d11 = -np.einsum("pj,jk,pk->p", c1, kj * kk * psi, c2)
    d12 = np.einsum("pj,jk,pk->p", s1, kk**2 * psi, s2)
    d21 = -np.einsum("pj,jk,pk->p", s1, kj**2 * psi, s2)
    grad = np.empty((len(pts), 2, 2))
    grad[:, 0, 0] = d11
    grad[:, 0, 1] = d12
    grad[:, 1, 0] = d21
    grad[:, 1, 1] = -d11
    return u, grad


def velocity_at(omega, point) -> tuple[float, float]:
    u, _ = flow_at(omega, point, jacobian=False)
    return float(u[0, 0]), float(u[0, 1])


def gradient_at(omega, points) -> np.ndarray:
    """Spectral grad(omega) at arbitrary points, shape (P, 2)."""
    a = _spectrum(omega)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    kpi = np.pi * np.arange(1, a.shape[0] + 1)
    s1, c1 = np.sin(np.outer(pts[:, 0], kpi)), np.cos(np.outer(pts[:, 0], kpi))
    s2, c2 = np.sin(np.outer(pts[:, 1], kpi)), np.cos(np.outer(pts[:, 1], kpi))
    g1 = np.einsum("pj,jk,pk->p", c1, kpi[:, None] * a, s2)
    g2 = np.einsum("pj,jk,pk->p", s1, kpi[None, :] * a, c2)
    return np.stack([g1, g2], axis=-1)


def rk4_step(x: np.ndarray, J: np.ndarray, t: float, dt: float, flow: Flow):
    """One RK4 step of dx/dt = u(t, x), dJ/dt = grad u(t, x) J (dt may be negative)."""

    def f(tt, xx, JJ):
        u, g = flow(tt, xx)
        return u, g @ JJ

    k1x, k1J = f(t, x, J)
    k2x, k2J = f(t + dt / 2, x + dt / 2 * k1x, J + dt / 2 * k1J)
    k3x, k3J = f(t + dt / 2, x + dt / 2 * k2x, J + dt / 2 * k2J)
    k4x, k4J = f(t + dt, x + dt * k3x, J + dt * k3J)
    return (x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
            J + dt / 6 * (k1J + 2 * k2J + 2 * k3J + k4J))


def interpolated_flow(t0: float, a0: np.ndarray, t1: float, a1: np.ndarray) -> Flow:
    """Flow from vorticity spectra at t0 and t1, linear in time between them."""
    span = t1 - t0

    def flow(t, x):
        theta = 0.0 if span == 0 else (t - t0) / span
        u0, g0 = flow_at(a0, x)
        if theta == 0.0:
            return u0, g0
        u1, g1 = flow_at(a1, x)
        return (1 - theta) * u0 + theta * u1, (1 - theta) * g0 + theta * g1

    return flow


@dataclass
class Tracer:
    """Material point X(t, alpha) with the forward Jacobian d X / d alpha."""

    alpha: np.ndarray
    t: float = 0.0
    x: np.ndarray | None = None
    jacobian: np.ndarray = field(default_factory=lambda: np.eye(2))
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.x is None:
            self.x = self.alpha.copy()
        if not self.history:
            self.history.append((self.t, float(self.x[0]), float(self.x[1]), self.det_j))

    @property
    def det_j(self) -> float:
        return float(np.linalg.det(self.jacobian))


def advance_tracer(tracer: Tracer, snapshots=None, dt: float | None = None,
                   flow: Flow | None = None) -> Tracer:
    """RK4-advance ``tracer``.

    ``snapshots`` is a pair ((t0, spectrum0), (t1, spectrum1)) bracketing the
    step, and the step ends at t1 unless ``dt`` says otherwise. With ``flow``
    given instead, that velocity field is used directly for a step of ``dt``.
    """
    if flow is None:
        if snapshots is None or len(snapshots) != 2 or any(s is None for s in snapshots):
            raise CoverageError("substage field missing: need snapshots at both ends of the step")
        (t0, a0), (t1, a1) = snapshots
        if not t0 - 1e-12 * max(1.0, abs(t0)) <= tracer.t < t1:
            raise CoverageError(f"tracer time {tracer.t} not inside [{t0}, {t1})")
        flow = interpolated_flow(t0, a0, t1, a1)
        end = t1 if dt is None else tracer.t + dt
    else:
        if dt is None:
            raise ValueError("dt is required with an explicit flow")
        end = tracer.t + dt
    step = end - tracer.t
    if step <= 0:
        raise ValueError("dt must be positive")
    x, J = rk4_step(tracer.x[None, :], tracer.jacobian[None], tracer.t, step, flow)
    tracer.x = x[0]
    tracer.jacobian = J[0]
    tracer.t = end
    tracer.history.append((tracer.t, float(tracer.x[0]), float(tracer.x[1]), tracer.det_j))
    return tracer


@dataclass
class SnapshotStore:
    """Time-ordered vorticity spectra retained for backtracking.

    Every accepted step is kept for t <= ``dense_until``; after that only
    every ``thin``-th step.
    """

    dense_until: float = 1.0
    thin: int = 10
    times: list = field(default_factory=list)
    spectra: list = field(default_factory=list)

    def add(self, state: SimState, force: bool = False) -> None:
        if self.times and state.t <= self.times[-1]:
            if state.t == self.times[-1]:
                return
            raise ValueError("snapshots must be added in increasing time order")
        if force or state.t <= self.dense_until or state.step_count % self.thin == 0:
            self.times.append(state.t)
            self.spectra.append(state.spectrum.copy())

    def hook(self, prev: SimState, new: SimState) -> None:
        if not self.times:
            self.add(prev, force=True)
        self.add(new)

    def covers(self, t_a: float, t_b: float) -> bool:
        lo, hi = min(t_a, t_b), max(t_a, t_b)
        tol = 1e-12 * max(1.0, hi)
        return bool(self.times) and self.times[0] <= lo + tol and hi - tol <= self.times[-1]

    def spectrum_at(self, t: float) -> np.ndarray:
        i = bisect_left(self.times, t)
        if i < len(self.times) and self.times[i] == t:
            return self.spectra[i]
        if i == 0 or i == len(self.times):
            raise CoverageError(f"t={t} outside stored snapshots")
        t0, t1 = self.times[i - 1], self.times[i]
        theta = (t - t0) / (t1 - t0)
        return (1 - theta) * self.spectra[i - 1] + theta * self.spectra[i]

    def _nodes_between(self, t_hi: float, t_lo: float) -> list:
        """Integration nodes from t_hi down to t_lo, including stored times inside."""
        i0 = bisect_right(self.times, t_lo)
        i1 = bisect_left(self.times, t_hi)
        inner = self.times[i0:i1]
        return [t_hi] + inner[::-1] + [t_lo]


def backtrack(point, t_from: float, t_to: float, store: SnapshotStore,
              jacobian: bool = False, substeps: int = 1):
    """Integrate dY/dtau = u(tau, Y) backward from (t_from, point) to tau = t_to.

    Returns Y(t_to), the position X^{-1}; with ``jacobian`` also returns
    dY(t_to)/dpoint.
    """
    pts = np.atleast_2d(np.asarray(point, dtype=float)).copy()
    J = np.broadcast_to(np.eye(2), (len(pts), 2, 2)).copy()
    if t_to > t_from:
        raise ValueError("backtrack integrates backward: t_to must not exceed t_from")
    if t_from != t_to:
        if not store.covers(t_to, t_from):
            span = (store.times[0], store.times[-1]) if store.times else None
            raise CoverageError(f"snapshots {span} do not cover [{t_to}, {t_from}]")
        nodes = store._nodes_between(t_from, t_to)
        for hi, lo in zip(nodes[:-1], nodes[1:]):
            if hi - lo <= 0:
                continue
            flow = interpolated_flow(lo, store.spectrum_at(lo), hi, store.spectrum_at(hi))
            dt = (lo - hi) / substeps
            tau = hi
            for _ in range(substeps):
                pts, J = rk4_step(pts, J, tau, dt, flow)
                tau += dt
    single = np.ndim(point) == 1
    x = pts[0] if single else pts
    if jacobian:
        return x, (J[0] if single else J)
    return x


def gradient_via_backtracking(x, t: float, store: SnapshotStore, grad0, substeps: int = 1):
    """grad omega(t, x) = (grad X^{-1})^T grad omega0(X^{-1}(t, x)).

    ``grad0`` is anything with a ``gradient(points)`` method (e.g. Omega0Spec)
    or a callable mapping (P, 2) points to (P, 2) gradients.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    g0 = grad0.gradient if hasattr(grad0, "gradient") else grad0
    if t == 0:
        out = np.asarray(g0(pts), dtype=float)
    else:
        y, J = backtrack(pts, t, 0.0, store, jacobian=True, substeps=substeps)
        out = np.einsum("pba,pb->pa", J, np.asarray(g0(y), dtype=float))
    return out[0] if np.ndim(x) == 1 else out


def tracer_hook(tracers: list[Tracer]):
    """Step hook advancing ``tracers`` across each accepted simulation step."""

    def hook(prev: SimState, new: SimState) -> None:
        snaps = ((prev.t, prev.spectrum), (new.t, new.spectrum))
        for tr in tracers:
            advance_tracer(tr, snaps)

    return hook
