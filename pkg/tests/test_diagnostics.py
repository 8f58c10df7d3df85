import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from vortgrowth.diagnostics import (
    DiagnosticsRecord,
    HypothesisError,
    b_residuals,
    c3_estimate,
    energy_l2,
    estimate_c2,
    fit_exponential,
    growth_quotient,
    key_integral,
    key_integral_exact_constant,
    log_omega0_diagonal,
    record,
    sup_grad,
    tail_fraction,
)
from vortgrowth.evolution import initial_state
from vortgrowth.initial_data import Omega0Spec, build_omega0
from vortgrowth.lagrangian import Tracer
from vortgrowth.spectral import ScalarField, biot_savart, l2_vector, make_grid


def unit_quadrant_field(n):
    g = make_grid(n)
    x1, x2 = g.mesh()
    return ScalarField(g, values=np.sign(x1) * np.sign(x2))


def test_key_integral_constant_oracle():
    x = (0.25, 0.25)
    assert key_integral_exact_constant(x) == pytest.approx(2 / math.pi * math.log(1.25), rel=1e-15)
    assert key_integral(unit_quadrant_field(512), x) == pytest.approx(2 / math.pi * math.log(1.25), abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 0.49), st.floats(0.01, 0.49))
def test_key_integral_constant_anywhere(x1, x2):
    f = unit_quadrant_field(128)
    assert key_integral(f, (x1, x2)) == pytest.approx(key_integral_exact_constant((x1, x2)), abs=1e-11)


def test_key_integral_smooth_field_vs_quadrature():
    g = make_grid(256)
    f = ScalarField.from_function(g, lambda a, b: np.sin(np.pi * a) * np.sin(2 * np.pi * b))
    x = (0.1, 0.15)
    ref, _ = integrate.dblquad(
        lambda y2, y1: y1 * y2 / (y1 * y1 + y2 * y2) ** 2 * math.sin(math.pi * y1) * math.sin(2 * math.pi * y2),
        0.2, 1, 0.3, 1, epsabs=1e-13, epsrel=1e-13)
    assert key_integral(f, x) == pytest.approx(4 / math.pi * ref, abs=1e-7)


def test_key_integral_zero_and_domain():
    g = make_grid(64)
    z = ScalarField.from_spectrum(g, np.zeros((32, 32)))
    assert key_integral(z, (0.2, 0.3)) == 0
    for bad in [(0.5, 0.2), (0.0, 0.1), (-0.1, 0.2), (0.2, 0.7)]:
        with pytest.raises(HypothesisError):
            key_integral(z, bad)


def test_b_residuals():
    g = make_grid(64)
    z = ScalarField.from_spectrum(g, np.zeros((32, 32)))
    assert b_residuals(z, (0.2, 0.3)) == (0.0, 0.0)
    with pytest.raises(HypothesisError):
        b_residuals(z, (g.h / 2, 0.3))


def test_b_residuals_symmetric_on_diagonal():
    spec = Omega0Spec(0.1)
    f = build_omega0(spec, make_grid(256))
    B1, B2 = b_residuals(f, (0.05, 0.05))
    assert B1 == pytest.approx(B2, abs=1e-12)


def test_c3_estimate_bracket():
    assert c3_estimate(2.0, (0.1, 0.1), 0.0, 1.0) == pytest.approx(2.0)
    assert c3_estimate(2.0, (0.1, 0.1), 1e6, 1.0) == pytest.approx(2.0 / (1 + math.log(2)))


def test_sup_grad():
    g = make_grid(128)
    f = ScalarField.from_function(g, lambda a, b: np.sin(np.pi * a) * np.sin(np.pi * b))
    assert sup_grad(f) == pytest.approx(math.pi, rel=1e-12)
    assert sup_grad(np.zeros((64, 64))) == 0
    assert sup_grad(-3.5 * f.spectrum) == pytest.approx(3.5 * math.pi, rel=1e-12)


def test_energy_matches_grid_l2():
    rng = np.random.default_rng(1)
    g = make_grid(64)
    a = rng.standard_normal((32, 32))
    a[-1, :] = a[:, -1] = 0
    f = ScalarField.from_spectrum(g, a)
    assert energy_l2(a) == pytest.approx(l2_vector(biot_savart(f)), rel=1e-12)


def test_tail_fraction():
    a = np.zeros((48, 48))
    a[0, 0] = 1
    assert tail_fraction(a) == 0
    a[40, 0] = 1
    assert tail_fraction(a) == pytest.approx(0.5)
    assert tail_fraction(np.zeros((4, 4))) == 0


def test_fit_exact_exponential():
    t = np.linspace(0, 1, 11)
    fit = fit_exponential(np.stack([t, np.exp(2 * t)], axis=1))
    assert abs(fit.rate - 2) <= 1e-10
    assert fit.points == 11
    flat = fit_exponential(np.stack([t, np.full_like(t, 3.0)], axis=1))
    assert abs(flat.rate) < 1e-12 and flat.residual_rms < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(0.1, 10))
def test_fit_recovers_rate_and_level(rate, level):
    t = np.linspace(0, 2, 21)
    fit = fit_exponential(np.stack([t, level * np.exp(rate * t)], axis=1), (0.5, 2))
    assert fit.rate == pytest.approx(rate, abs=1e-9)
    assert math.exp(fit.intercept) == pytest.approx(level, rel=1e-9)


def test_fit_errors():
    t = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        fit_exponential(np.stack([t, -np.ones(5)], axis=1))
    with pytest.raises(ValueError):
        fit_exponential(np.stack([t, np.ones(5)], axis=1), (0.9, 1.0))
    with pytest.raises(ValueError):
        fit_exponential(np.stack([t, np.ones(5)], axis=1), (1.0, 1.0))


def test_estimate_c2_dominates_samples():
    t = np.linspace(0, 1, 11)
    g = 2.0 * np.exp(0.7 * t)
    c2 = estimate_c2(t, g)
    assert np.all(g <= c2 * np.exp(c2 * t))


def test_growth_quotient():
    log_s = math.log(0.02)
    assert log_omega0_diagonal(log_s) == pytest.approx(math.log(0.02 / math.log(-math.log(0.02))))
    val, trusted = growth_quotient(0.01, log_s, h=0.004)
    assert val == pytest.approx(math.log(0.02 / math.log(-math.log(0.02)) / 0.01)) and trusted
    assert not growth_quotient(0.001, log_s, h=0.004)[1]
    with pytest.raises(ValueError):
        growth_quotient(0.0, log_s)


def test_record_fields():
    spec = Omega0Spec(0.1)
    g = make_grid(256)
    st0 = initial_state(build_omega0(spec, g))
    rec = record(st0, Tracer(alpha=np.array([0.02, 0.02])), spec)
    assert rec.t == 0 and rec.X1 == 0.02 and rec.trusted in (0, 1)
    assert rec.I > 0 and rec.B1 == pytest.approx(rec.B2, abs=1e-12)
    assert DiagnosticsRecord.columns()[0] == "t" and len(rec.row()) == len(DiagnosticsRecord.columns())
    bare = record(st0)
    assert bare.X1 is None and bare.I is None
