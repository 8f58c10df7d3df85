"""Norms, the strain integral over Q(2x), its residuals, and rate fits.

The key integral is

    I(x) = (4/pi) * int_{[2 x1, 1] x [2 x2, 1]} y1 y2 / |y|^4 * omega(y) dy

and the residuals are defined so that u1 = -(I + B1) x1 and u2 = (I + B2) x2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .evolution import SimState
from .lagrangian import Tracer, velocity_at
from .spectral import ScalarField, ensure_spectrum, quadrant, synthesize, wavenumbers

GAUSS_POINTS = 6
TAIL_TOL = 1e-4
CHUNK = 512


class HypothesisError(ValueError):
    """The point lies outside the region where the decomposition is defined."""


# --- key integral --------------------------------------------------------------

def _interp_weights(y: np.ndarray, h: float, N: int) -> np.ndarray:
    """Dense (len(y), N-1) cubic Lagrange weights onto interior nodes m*h, m = 1..N-1.

    Stencils never touch the axis or x = 1 nodes, so one-sided limits on the
    closed quadrant are used there (the nodes themselves sit on the odd seam).
    """
    c = np.floor(y / h).astype(int)
    start = np.clip(c - 1, 1, N - 4)
    W = np.zeros((len(y), N - 1))
    nodes = start[:, None] + np.arange(4)[None, :]
    xs = nodes * h
    for i in range(4):
        wi = np.ones(len(y))
        for k in range(4):
            if k != i:
                wi *= (y - xs[:, k]) / (xs[:, i] - xs[:, k])
        W[np.arange(len(y)), nodes[:, i] - 1] += wi
    return W


def _gauss_1d(a: float, h: float, N: int, order: int):
    """Gauss-Legendre nodes/weights on [a, 1] split at grid lines."""
    xg, wg = np.polynomial.legendre.leggauss(order)
    first = int(np.floor(a / h)) + 1
    cuts = np.concatenate([[a], h * np.arange(first, N), [1.0]])
    cuts = cuts[np.concatenate([[True], np.diff(cuts) > 1e-15])]
    lo, hi = cuts[:-1], cuts[1:]
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    y = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return y, w


def _check_point(x) -> tuple[float, float]:
    x1, x2 = float(x[0]), float(x[1])
    if not (0 < x1 < 0.5 and 0 < x2 < 0.5):
        raise HypothesisError(f"x = ({x1}, {x2}) is not in (0, 1/2)^2")
    return x1, x2


def key_integral(omega: ScalarField, x, order: int = GAUSS_POINTS) -> float:
    """(4/pi) times the integral of y1 y2 |y|^-4 omega over [2 x1, 1] x [2 x2, 1].

    omega is interpolated with local cubics from interior quadrant nodes and
    integrated against the exact kernel with per-cell Gauss-Legendre rules.
    """
    x1, x2 = _check_point(x)
    grid = omega.grid
    if omega.values is None:
        raise ValueError("field has no grid samples")
    q = quadrant(omega.values)
    N = grid.half
    y1, w1 = _gauss_1d(2 * x1, grid.h, N, order)
    y2, w2 = _gauss_1d(2 * x2, grid.h, N, order)
    right = q @ _interp_weights(y2, grid.h, N).T
    Y2 = y2[None, :]
    total = 0.0
    for lo in range(0, len(y1), CHUNK):
        Y1 = y1[lo:lo + CHUNK, None]
        V = _interp_weights(y1[lo:lo + CHUNK], grid.h, N) @ right
        kernel = Y1 * Y2 / (Y1 * Y1 + Y2 * Y2) ** 2
        total += np.einsum("a,ab,b->", w1[lo:lo + CHUNK], kernel * V, w2)
    return float(4 / np.pi * total)


def key_integral_exact_constant(x) -> float:
    """Closed form of the key integral for omega == 1 on the quadrant."""
    a1, a2 = 2 * float(x[0]), 2 * float(x[1])

    def G(y1, y2):
        return -0.25 * math.log(y1 * y1 + y2 * y2)

    return 4 / math.pi * (G(1, 1) - G(a1, 1) - G(1, a2) + G(a1, a2))


def b_residuals(omega: ScalarField, x, I: float | None = None) -> tuple[float, float]:
    """B1 = -u1/x1 - I, B2 = u2/x2 - I at the point x."""
    x1, x2 = _check_point(x)
    h = omega.grid.h
    if x1 <= h or x2 <= h:
        raise HypothesisError(f"x = ({x1}, {x2}) is within one grid cell of an axis")
    u1, u2 = velocity_at(omega, (x1, x2))
    if I is None:
        I = key_integral(omega, (x1, x2))
    return -u1 / x1 - I, u2 / x2 - I


def c3_estimate(B: float, x, sup_grad: float, linf_omega: float, component: int = 1) -> float:
    """|B_j| divided by its bracket 1 + min{log(1 + x_other/x_j), x_other |grad w|/|w|}."""
    xj, xo = (x[0], x[1]) if component == 1 else (x[1], x[0])
    bracket = 1 + min(math.log1p(xo / xj), xo * sup_grad / linf_omega)
    return abs(B) / bracket


# --- norms ---------------------------------------------------------------------

def sup_grad(omega) -> float:
    """Grid max of |grad omega| with spectral derivatives."""
    a = ensure_spectrum(omega) if isinstance(omega, ScalarField) else np.asarray(omega)
    kj, kk = wavenumbers(a.shape[0])
    g1 = synthesize(kj * a, "cs", closed=True)
    g2 = synthesize(kk * a, "sc", closed=True)
    return float(np.sqrt(np.max(g1 * g1 + g2 * g2)))


def energy_l2(spectrum: np.ndarray) -> float:
    """l2 norm of the velocity via Parseval."""
    kj, kk = wavenumbers(spectrum.shape[0])
    return float(np.sqrt(np.sum(spectrum**2 / (kj**2 + kk**2))))


def tail_fraction(spectrum: np.ndarray) -> float:
    """Share of sum(a^2) carried by modes with max(j, k) > n/6."""
    N = spectrum.shape[0]
    total = float(np.sum(spectrum**2))
    if total == 0:
        return 0.0
    cut = (2 * N) // 6
    core = float(np.sum(spectrum[:cut, :cut] ** 2))
    return max(total - core, 0.0) / total


# --- growth witness --------------------------------------------------------------

def log_omega0_diagonal(log_s: float, spec=None) -> float:
    """log w0(s, s); the s/log(-log s) profile unless s is past the corner zone."""
    s = math.exp(log_s)
    if spec is None or s <= spec.delta / 2:
        return log_s - math.log(math.log(-log_s))
    return math.log(float(spec.value(s, s)))


def growth_quotient(x1: float, log_s: float, spec=None, h: float | None = None) -> tuple[float, bool]:
    """log(w0(s, s) / X1) and whether X1 is resolved (X1 >= h)."""
    if x1 <= 0:
        raise ValueError(f"X1 must be positive, got {x1}")
    value = log_omega0_diagonal(log_s, spec) - math.log(x1)
    return value, (h is None or x1 >= h)


# --- fits ------------------------------------------------------------------------

@dataclass
class GrowthFit:
    window: tuple[float, float]
    rate: float
    intercept: float
    residual_rms: float
    points: int

    def lines(self) -> list[str]:
        return [f"window = {self.window[0]:.17g} {self.window[1]:.17g}",
                f"points = {self.points}",
                f"rate = {self.rate:.17g}",
                f"intercept = {self.intercept:.17g}",
                f"residual_rms = {self.residual_rms:.17g}"]


def fit_exponential(series, window: tuple[float, float] | None = None) -> GrowthFit:
    """Least-squares line through (t, ln value) for samples inside ``window``."""
    data = np.asarray(series, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("series must be a sequence of (t, value) pairs")
    t, v = data[:, 0], data[:, 1]
    if window is None:
        window = (float(t.min()), float(t.max())) if len(t) else (0.0, 0.0)
    ta, tb = window
    if not tb > ta:
        raise ValueError(f"degenerate window [{ta}, {tb}]")
    sel = (t >= ta) & (t <= tb)
    t, v = t[sel], v[sel]
    if len(t) < 3:
        raise ValueError(f"need at least 3 points in window, got {len(t)}")
    if np.any(~(v > 0)):
        raise ValueError("values must be positive for an exponential fit")
    y = np.log(v)
    A = np.stack([t, np.ones_like(t)], axis=1)
    (rate, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (rate * t + intercept)
    return GrowthFit((float(ta), float(tb)), float(rate), float(intercept),
                     float(np.sqrt(np.mean(resid**2))), int(len(t)))


def estimate_c2(times, grad_u, safety: float = 1.2) -> float:
    """C2 with |grad u|(t) <= C2 exp(C2 t) at every sample, times ``safety``."""
    t = np.asarray(times, dtype=float)
    g = np.asarray(grad_u, dtype=float)
    if len(t) >= 3 and np.ptp(t) > 0:
        rate = max(fit_exponential(np.stack([t, g], axis=1)).rate, 0.0)
    else:
        rate = 0.0
    level = float(np.exp(np.max(np.log(g) - rate * t)))
    return safety * max(level, rate, 1e-12)


# --- per-snapshot record -----------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    t: float
    linf_omega: float
    l2_u: float
    enstrophy: float
    linf_grad_omega: float
    X1: float | None = None
    X2: float | None = None
    I: float | None = None
    B1: float | None = None
    B2: float | None = None
    growth_quotient_log: float | None = None
    int_grad_u: float = 0.0
    trusted: int = 1

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [getattr(self, c) for c in self.columns()]


def record(state: SimState, tracer: Tracer | None = None, spec=None,
           log_s: float | None = None) -> DiagnosticsRecord:
    a = state.spectrum
    grid = state.grid
    omega = ScalarField.from_spectrum(grid, a)
    rec = DiagnosticsRecord(
        t=state.t,
        linf_omega=float(np.max(np.abs(omega.values))),
        l2_u=energy_l2(a),
        enstrophy=float(np.sum(a * a)),
        linf_grad_omega=sup_grad(a),
        int_grad_u=state.int_grad_u,
    )
    trusted = tail_fraction(a) <= TAIL_TOL
    if tracer is not None:
        x1, x2 = float(tracer.x[0]), float(tracer.x[1])
        rec.X1, rec.X2 = x1, x2
        if log_s is None:
            log_s = math.log(float(tracer.alpha[0]))
        if x1 > 0:
            rec.growth_quotient_log, _ = growth_quotient(x1, log_s, spec)
        trusted = trusted and x1 >= 2 * grid.h
        if 0 < x1 < 0.5 and 0 < x2 < 0.5 and min(x1, x2) > grid.h:
            rec.I = key_integral(omega, (x1, x2))
            rec.B1, rec.B2 = b_residuals(omega, (x1, x2), rec.I)
    rec.trusted = int(trusted)
    return rec
