"""Initial vorticity with a double-logarithmic corner profile, plus the constant chain.

First-quadrant profile (x1, x2 in [0, 1]), extended oddly in both variables:

    rho  = sqrt((x1^2 + x2^2) / 2)            # rho == s on the diagonal (s, s)
    P    = x1 x2 / (rho * log(-log rho))      # = sin(2 phi) rho / log(-log rho)
    chi  = step((rho - delta/2) / (delta/2))  # 0 inside rho <= delta/2, 1 for rho >= delta
    cut  = step(x / delta) * step((1 - x) / delta)
    w0   = (1 - chi) P + chi cut(x1) cut(x2)

``step`` is the quintic smoothstep, so w0 is C^2 away from the origin and C^1
at it. On [delta, 1 - delta]^2 we have rho >= delta, hence w0 == 1 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import mpmath
import numpy as np

from .spectral import (
    Grid,
    ScalarField,
    gradient,
    odd_extend,
    symmetry_violation,
    to_spectral,
)

MIN_PRECISION = 50


class UnresolvedError(ValueError):
    """The requested construction has features below the grid scale."""


class ConstraintError(ValueError):
    """A built field violates one of the initial-data constraints."""


# --- constants ---------------------------------------------------------------

@dataclass
class ConstructionParams:
    A: Any
    C3: Any
    delta: Any
    delta1: Any
    K: Any
    mode: str = "theoretical"
    delta1_branch: str = ""
    log_s: Any = None
    precision: int = MIN_PRECISION

    def __post_init__(self):
        if self.mode not in ("theoretical", "resolvable"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.delta1 <= 0.25:
            raise ValueError(f"delta1 must be <= 1/4, got {self.delta1}")
        if self.log_s is not None:
            with mpmath.workdps(self.precision):
                if self.log_s > mpmath.log(mpmath.mpf(self.delta1) / 2):
                    raise ValueError("log_s must not exceed log(delta1/2)")


def k_constant(C3) -> mpmath.mpf:
    return 1920 / mpmath.pi * mpmath.exp(8 * mpmath.sqrt(3) * C3)


def theoretical_constants(A, C3, precision: int = MIN_PRECISION) -> ConstructionParams:
    """delta, delta1 and K at ``precision`` decimal digits.

    delta  = (pi/96) exp(-4 sqrt3 (A + 2 C3))
    delta1 = min{(sqrt2/4) exp(-2 sqrt3 (A + 2 C3)), delta/2}
    """
    if precision < MIN_PRECISION:
        raise ValueError(f"precision must be >= {MIN_PRECISION} digits")
    with mpmath.workdps(precision):
        A = mpmath.mpf(A)
        C3 = mpmath.mpf(C3)
        if A < 2:
            raise ValueError(f"A must be >= 2, got {A}")
        if C3 <= 0:
            raise ValueError(f"C3 must be positive, got {C3}")
        M = A + 2 * C3
        r3 = mpmath.sqrt(3)
        delta = mpmath.pi / 96 * mpmath.exp(-4 * r3 * M)
        box = mpmath.sqrt(2) / 4 * mpmath.exp(-2 * r3 * M)
        half = delta / 2
        branch = "sqrt2/4*exp" if box < half else "delta/2"
        return ConstructionParams(A=A, C3=C3, delta=delta, delta1=min(box, half),
                                  K=k_constant(C3), mode="theoretical",
                                  delta1_branch=branch, precision=precision)


def resolvable_params(delta: float, delta1: float, s: float, A: float = 2.0,
                      C3: float = 1.0) -> ConstructionParams:
    """User-chosen grid-scale parameters; construction formulas are checked, not imposed."""
    if not 0 < delta < 0.25:
        raise ValueError(f"delta must lie in (0, 1/4), got {delta}")
    if not 0 < delta1 <= 0.25:
        raise ValueError(f"delta1 must lie in (0, 1/4], got {delta1}")
    if s <= 0:
        raise ValueError("s must be positive")
    return ConstructionParams(A=A, C3=C3, delta=delta, delta1=delta1, K=k_constant(C3),
                              mode="resolvable", log_s=float(np.log(s)))


def key_integral_lower_bound(delta, delta1):
    """(sqrt3/12) * (-ln(4 delta1^2 + 48 delta/pi)), the angular-sector bound."""
    arg = 4 * mpmath.mpf(delta1) ** 2 + 48 * mpmath.mpf(delta) / mpmath.pi
    if arg >= 1:
        raise ValueError(f"bound is vacuous: 4 delta1^2 + 48 delta/pi = {mpmath.nstr(arg, 6)} >= 1")
    return mpmath.sqrt(3) / 12 * (-mpmath.log(arg))


def sector_margin(params: ConstructionParams):
    """Lower bound on the key integral minus A + 2 C3 (nonnegative when the chain holds)."""
    with mpmath.workdps(params.precision):
        return key_integral_lower_bound(params.delta, params.delta1) - (
            mpmath.mpf(params.A) + 2 * mpmath.mpf(params.C3))


def choose_s(T, C2, params: ConstructionParams):
    """log s = min{log(delta/20) + 2 - 2e^{C2 T}, log(delta1/2) + 1 - e^{C2 T}}.

    Computed in log-space; returns an mpf at the params precision.
    """
    if T <= 0 or C2 <= 0:
        raise ValueError("T and C2 must be positive")
    with mpmath.workdps(params.precision):
        g = mpmath.exp(mpmath.mpf(C2) * mpmath.mpf(T))
        first = mpmath.log(mpmath.mpf(params.delta) / 20) + 2 - 2 * g
        second = mpmath.log(mpmath.mpf(params.delta1) / 2) + 1 - g
        return min(first, second)


def loglog_inverse_s(T, C2, params: ConstructionParams):
    """log(-log s(T)); s(T) from :func:`choose_s`, with T = 0 taken as the limit."""
    with mpmath.workdps(params.precision):
        if T == 0:
            log_s = min(mpmath.log(mpmath.mpf(params.delta) / 20),
                        mpmath.log(mpmath.mpf(params.delta1) / 2))
        else:
            log_s = choose_s(T, C2, params)
        return mpmath.log(-log_s)


def c4_constant(C2, T, params: ConstructionParams, samples: int = 400):
    """Smallest C4 with log(-log s(tau)) <= C4 (1 + tau) over tau in [0, T] (sampled)."""
    with mpmath.workdps(params.precision):
        taus = [mpmath.mpf(T) * i / samples for i in range(samples + 1)]
        return max(loglog_inverse_s(tau, C2, params) / (1 + tau) for tau in taus)


def constants_report(params: ConstructionParams, C2=None, T=None) -> dict:
    """Key/value summary of the constant chain; mp values kept at full precision."""
    with mpmath.workdps(params.precision):
        out = {
            "A": mpmath.mpf(params.A),
            "C3": mpmath.mpf(params.C3),
            "delta": mpmath.mpf(params.delta),
            "delta1": mpmath.mpf(params.delta1),
            "delta1_branch": params.delta1_branch or "user",
            "K": mpmath.mpf(params.K),
            "sector_lower_bound": key_integral_lower_bound(params.delta, params.delta1),
            "sector_margin": sector_margin(params),
            "grad_bound_20_over_delta": 20 / mpmath.mpf(params.delta),
            "K_exp_4sqrt3_A": mpmath.mpf(params.K) * mpmath.exp(4 * mpmath.sqrt(3) * mpmath.mpf(params.A)),
        }
        if C2 is not None and T is not None:
            log_s = choose_s(T, C2, params)
            C4 = c4_constant(C2, T, params)
            out.update({
                "C2": mpmath.mpf(C2),
                "T": mpmath.mpf(T),
                "log_s": log_s,
                "loglog_inv_s": mpmath.log(-log_s),
                "C4": C4,
                "C1": 1 / (2 * C4),
                "log_lower_bound_at_T": mpmath.mpf(params.A) * T - mpmath.log(C4 * (1 + mpmath.mpf(T))),
            })
        return out


# --- the initial vorticity ---------------------------------------------------

def _quintic(t):
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


def smoothstep(t):
    # evaluated from the nearer end so the result never exceeds 1 by roundoff
    t = np.clip(t, 0.0, 1.0)
    return np.where(t <= 0.5, _quintic(t), 1.0 - _quintic(1.0 - t))


def smoothstep_deriv(t):
    inside = (t > 0) & (t < 1)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * t * t * (1.0 - t) ** 2, 0.0)


def corner_profile(s):
    """s / log(-log s), zero at s = 0."""
    s = np.asarray(s, dtype=float)
    safe = np.where(s > 0, s, 0.5)
    return np.where(s > 0, s / np.log(-np.log(safe)), 0.0)


@dataclass(frozen=True)
class Omega0Spec:
    delta: float
    blend: str = field(default="quintic smoothstep: radial in rho on [delta/2, delta], axial on [0, delta] and [1-delta, 1]")

    def __post_init__(self):
        if not 0 < self.delta < 0.25:
            raise ValueError(f"delta must lie in (0, 1/4), got {self.delta}")

    @property
    def blend_inner(self) -> float:
        return self.delta / 2

    @property
    def grad_bound(self) -> float:
        return 20.0 / self.delta

    def _parts(self, x1, x2):
        d = self.delta
        rho = np.sqrt((x1 * x1 + x2 * x2) / 2)
        near = (rho > 0) & (rho < d)
        r = np.where(near, rho, 0.5 * d)
        L = np.log(-np.log(r))
        P = np.where(near, x1 * x2 / (r * L), 0.0)
        tr = (rho - d / 2) / (d / 2)
        t1, t2 = x1 / d, x2 / d
        u1, u2 = (1 - x1) / d, (1 - x2) / d
        c1 = smoothstep(t1) * smoothstep(u1)
        c2 = smoothstep(t2) * smoothstep(u2)
        return rho, near, r, L, P, tr, c1, c2

    def quadrant_value(self, x1, x2):
        """Profile on [0, 1]^2."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        _, _, _, _, P, tr, c1, c2 = self._parts(x1, x2)
        chi = smoothstep(tr)
        return (1 - chi) * P + chi * c1 * c2

    def quadrant_gradient(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        d = self.delta
        rho, near, r, L, P, tr, c1, c2 = self._parts(x1, x2)
        chi = smoothstep(tr)
        dchi = smoothstep_deriv(tr) / (d / 2)
        # q = 1/(rho L), dq/drho = -(L + 1/log rho) / (rho L)^2
        q = np.where(near, 1 / (r * L), 0.0)
        dq = np.where(near, -(L + 1 / np.log(r)) / (r * L) ** 2, 0.0)
        safe_rho = np.where(rho > 0, rho, 1.0)
        drho1 = np.where(rho > 0, x1 / (2 * safe_rho), 0.0)
        drho2 = np.where(rho > 0, x2 / (2 * safe_rho), 0.0)
        P1 = x2 * q + x1 * x2 * dq * drho1
        P2 = x1 * q + x1 * x2 * dq * drho2

        def dcut(x):
            return (smoothstep_deriv(x / d) * smoothstep((1 - x) / d)
                    - smoothstep(x / d) * smoothstep_deriv((1 - x) / d)) / d

        g1 = (1 - chi) * P1 + dchi * drho1 * (c1 * c2 - P) + chi * dcut(x1) * c2
        g2 = (1 - chi) * P2 + dchi * drho2 * (c1 * c2 - P) + chi * c1 * dcut(x2)
        return g1, g2

    def value(self, x1, x2):
        """Odd-odd periodic extension to the whole torus."""
        x1 = _wrap(x1)
        x2 = _wrap(x2)
        return np.sign(x1) * np.sign(x2) * self.quadrant_value(np.abs(x1), np.abs(x2))

    def gradient(self, points) -> np.ndarray:
        """Closed-form grad w0 at an (P, 2) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x1, x2 = _wrap(pts[:, 0]), _wrap(pts[:, 1])
        g1, g2 = self.quadrant_gradient(np.abs(x1), np.abs(x2))
        return np.stack([np.sign(x2) * g1, np.sign(x1) * g2], axis=-1)


def _wrap(x):
    x = np.asarray(x, dtype=float)
    return np.where((x >= -1) & (x < 1), x, np.mod(x + 1, 2.0) - 1)


def eval_omega0_exact(point, spec: Omega0Spec) -> float:
    x1, x2 = point
    return float(spec.value(x1, x2))


def build_omega0(spec: Omega0Spec, grid: Grid) -> ScalarField:
    if spec.delta < 8 * grid.h:
        raise UnresolvedError(
            f"delta={spec.delta} is below 8h={8 * grid.h} on n={grid.n}; "
            "use a finer grid or a larger resolvable-mode delta")
    xq = grid.xq
    q = spec.quadrant_value(xq[:, None], xq[None, :])
    field_ = to_spectral(ScalarField(grid, odd_extend(q)))
    g1, g2 = gradient(field_)
    sup = float(np.sqrt(np.max(g1**2 + g2**2)))
    if sup > spec.grad_bound:
        raise ConstraintError(f"sup|grad w0| = {sup:.6g} exceeds 20/delta = {spec.grad_bound:.6g}")
    return field_


# --- constraint report -------------------------------------------------------

@dataclass
class ConstraintResult:
    name: str
    passed: bool
    measured: float
    limit: float


@dataclass
class ConstraintReport:
    results: list[ConstraintResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failing(self) -> list[str]:
        return [r.name for r in self.results if not r.passed]

    def __getitem__(self, name: str) -> ConstraintResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def lines(self) -> list[str]:
        return [f"{r.name} = {'pass' if r.passed else 'FAIL'} measured={r.measured:.17g} limit={r.limit:.17g}"
                for r in self.results]


def verify_constraints(field_: ScalarField, spec: Omega0Spec, tol: float = 1e-12) -> ConstraintReport:
    """Check the five initial-data constraints at grid nodes."""
    grid = field_.grid
    if field_.spectrum is None:
        field_ = to_spectral(field_)
    N = grid.half
    values = field_.values
    closed = values[N:, N:]  # x in [0, 1) on both axes
    closed = np.pad(closed, ((0, 1), (0, 1)))  # x = 1 node mirrors x = -1 (zero by oddness)
    closed[-1, :-1] = values[0, N:]
    closed[:-1, -1] = values[N:, 0]
    closed[-1, -1] = values[0, 0]
    xs = grid.h * np.arange(N + 1)

    lo = float(np.min(closed))
    hi = float(np.max(closed))
    range_excess = max(-lo, hi - 1.0, 0.0)

    mask = (xs >= spec.delta) & (xs <= 1 - spec.delta)
    plateau = closed[np.ix_(mask, mask)]
    plateau_dev = float(np.max(np.abs(plateau - 1.0))) if plateau.size else 0.0

    odd = symmetry_violation(values)

    diag_m = np.nonzero(xs <= spec.delta / 2)[0]
    diag = closed[diag_m, diag_m]
    diag_dev = float(np.max(np.abs(diag - corner_profile(xs[diag_m]))))

    g1, g2 = gradient(field_)
    sup = float(np.sqrt(np.max(g1**2 + g2**2)))

    return ConstraintReport([
        ConstraintResult("range", range_excess <= tol, range_excess, tol),
        ConstraintResult("plateau", plateau_dev <= tol, plateau_dev, tol),
        ConstraintResult("oddness", odd <= tol, odd, tol),
        ConstraintResult("diagonal_profile", diag_dev <= tol, diag_dev, tol),
        ConstraintResult("gradient_bound", sup <= spec.grad_bound, sup, spec.grad_bound),
    ])


def resolvable_report(params: ConstructionParams) -> list[tuple[str, bool, str]]:
    """Which of the construction's inequalities hold with user-substituted values."""
    out = []
    d, d1 = float(params.delta), float(params.delta1)
    out.append(("delta1_le_quarter", d1 <= 0.25, f"delta1={d1:.17g}"))
    if params.log_s is not None:
        s = float(np.exp(float(params.log_s)))
        out.append(("s_le_delta1_over_2", s <= d1 / 2, f"s={s:.17g} delta1/2={d1 / 2:.17g}"))
        out.append(("s_in_corner_profile", s <= d / 2, f"s={s:.17g} delta/2={d / 2:.17g}"))
    try:
        margin = float(sector_margin(params))
        out.append(("sector_margin_nonnegative", margin >= 0, f"margin={margin:.17g}"))
    except ValueError as exc:
        out.append(("sector_margin_nonnegative", False, f"vacuous: {exc}"))
    with mpmath.workdps(params.precision):
        lhs = mpmath.mpf(params.K) * mpmath.exp(4 * mpmath.sqrt(3) * mpmath.mpf(params.A))
        out.append(("K_exp_bound_covers_20_over_delta", bool(lhs >= 20 / mpmath.mpf(d)),
                    f"K*exp(4sqrt3 A)={mpmath.nstr(lhs, 17)} 20/delta={20 / d:.17g}"))
    return out
