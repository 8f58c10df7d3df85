"""Pseudo-spectral RK4 time stepping of the vorticity transport equation.

The state is the sine-sine spectrum, so the odd-odd symmetry class is kept
structurally. The nonlinear term -u . grad(omega) is formed on interior
quadrant nodes (it is odd-odd, hence zero on the axes) and transformed back.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .spectral import (
    Grid,
    ScalarField,
    dealias,
    ensure_spectrum,
    forward_quadrant,
    synthesize,
    velocity_coefficients,
    velocity_gradient_norm,
    wavenumbers,
)

log = logging.getLogger(__name__)

EPS_FLOOR = 1e-12


class NumericalAbort(RuntimeError):
    """Raised when the velocity exceeds the blow-up guard."""

    def __init__(self, message: str, state: "SimState"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class TimeStepConfig:
    t_end: float = 1.0
    cfl_number: float = 0.5
    dealias: bool = True
    snapshot_interval: float = 0.1
    max_dt: float = 0.01
    blowup_factor: float = 100.0
    # exponential high-mode filter; departs from inviscid dynamics when on
    filter: bool = False
    filter_order: int = 36
    filter_strength: float = 36.0

    def __post_init__(self):
        if not 0 < self.cfl_number <= 1:
            raise ValueError("cfl_number must lie in (0, 1]")
        if self.snapshot_interval <= 0:
            raise ValueError("snapshot_interval must be positive")
        if self.max_dt <= 0:
            raise ValueError("max_dt must be positive")


@dataclass(frozen=True)
class SimState:
    grid: Grid
    t: float
    spectrum: np.ndarray
    step_count: int = 0
    last_dt: float = 0.0
    int_grad_u: float = 0.0
    grad_u_norm: float = 0.0
    u0_linf: float = 0.0

    @property
    def omega(self) -> ScalarField:
        return ScalarField.from_spectrum(self.grid, self.spectrum)


def initial_state(omega: ScalarField, dealiased: bool = True, t: float = 0.0) -> SimState:
    """Simulation state from a field; projects onto the 2/3-rule modes when ``dealiased``."""
    a = ensure_spectrum(omega).copy()
    if dealiased:
        a = dealias(a)
    return SimState(omega.grid, float(t), a, grad_u_norm=velocity_gradient_norm(a),
                    u0_linf=velocity_linf(a))


def velocity_linf(spectrum: np.ndarray) -> float:
    c1, c2 = velocity_coefficients(spectrum)
    u1 = synthesize(c1, "sc", closed=True)
    u2 = synthesize(c2, "cs", closed=True)
    return float(np.sqrt(np.max(u1**2 + u2**2)))


def dealias_mask(N: int) -> np.ndarray:
    return dealias(np.ones((N, N)), 2 * N)


def rhs_spectrum(a: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Spectrum of -u . grad(omega) for the vorticity spectrum ``a``."""
    if mask is not None:
        a = a * mask
    kj, kk = wavenumbers(a.shape[0])
    c1, c2 = velocity_coefficients(a)
    u1 = synthesize(c1, "sc")
    u2 = synthesize(c2, "cs")
    w1 = synthesize(kj * a, "cs")
    w2 = synthesize(kk * a, "sc")
    out = -forward_quadrant(u1 * w1 + u2 * w2)
    if mask is not None:
        out *= mask
    return out


def rhs(omega: ScalarField, dealiased: bool = True) -> ScalarField:
    a = ensure_spectrum(omega)
    mask = dealias_mask(a.shape[0]) if dealiased else None
    return ScalarField.from_spectrum(omega.grid, rhs_spectrum(a, mask))


def cfl_dt(state: SimState, config: TimeStepConfig) -> float:
    umax = max(velocity_linf(state.spectrum), EPS_FLOOR)
    return min(config.max_dt, config.cfl_number * state.grid.h / umax)


def step_rk4(state: SimState, dt: float, *, dealiased: bool = True,
             f: Callable[[np.ndarray], np.ndarray] | None = None) -> SimState:
    """Classical four-stage RK4 on the spectral coefficients.

    ``f`` overrides the right-hand side (spectrum -> spectrum) for testing.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if f is None:
        mask = dealias_mask(state.grid.half) if dealiased else None

        def f(a):
            return rhs_spectrum(a, mask)

    a = state.spectrum
    k1 = f(a)
    k2 = f(a + 0.5 * dt * k1)
    k3 = f(a + 0.5 * dt * k2)
    k4 = f(a + dt * k3)
    new = a + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    g = velocity_gradient_norm(new)
    return replace(state, t=state.t + dt, spectrum=new, step_count=state.step_count + 1,
                   last_dt=dt, grad_u_norm=g,
                   int_grad_u=state.int_grad_u + 0.5 * dt * (state.grad_u_norm + g))


def spectral_filter(N: int, order: int, strength: float) -> np.ndarray:
    k = np.arange(1, N + 1) / (2 * N / 3)
    f1 = np.exp(-strength * np.clip(k, 0, None) ** order)
    return f1[:, None] * f1[None, :]


StepHook = Callable[[SimState, SimState], None]
Callback = Callable[[SimState], None]


def _next_snapshot(t: float, interval: float) -> float:
    # absolute multiples of the interval, so resumed runs land on the same times
    # rounded so that 3 * 0.1 lands on 0.3 as a user-supplied t_end would
    k = int(np.floor(t / interval + 1e-9)) + 1
    return round(k * interval, 12)


def run_until(state: SimState, config: TimeStepConfig,
              callbacks: Sequence[Callback] = (),
              step_hooks: Sequence[StepHook] = ()) -> SimState:
    """Advance to ``config.t_end``, calling back at every snapshot time.

    Snapshot times are multiples of ``snapshot_interval`` and are landed on
    exactly by clipping dt; ``t_end`` is always a callback time.
    """
    if config.t_end < state.t:
        raise ValueError(f"t_end={config.t_end} is before the current time {state.t}")
    if config.t_end == state.t:
        for cb in callbacks:
            cb(state)
        return state
    filt = (spectral_filter(state.grid.half, config.filter_order, config.filter_strength)
            if config.filter else None)
    u_ref = state.u0_linf or velocity_linf(state.spectrum)
    while state.t < config.t_end:
        target = min(_next_snapshot(state.t, config.snapshot_interval), config.t_end)
        dt = cfl_dt(state, config)
        landing = state.t + dt >= target - 1e-12 * max(1.0, target)
        if landing:
            dt = target - state.t
        new = step_rk4(state, dt, dealiased=config.dealias)
        if landing:
            new = replace(new, t=target)
        if filt is not None:
            a = new.spectrum * filt
            new = replace(new, spectrum=a, grad_u_norm=velocity_gradient_norm(a))
        for hook in step_hooks:
            hook(state, new)
        state = new
        umax = velocity_linf(state.spectrum)
        if umax > config.blowup_factor * u_ref:
            raise NumericalAbort(
                f"|u|_inf={umax:.3e} exceeds {config.blowup_factor:g}x initial {u_ref:.3e} "
                f"at t={state.t:.6g}; the run is under-resolved", state)
        if landing:
            log.debug("snapshot t=%.6f steps=%d", state.t, state.step_count)
            for cb in callbacks:
                cb(state)
    return state
