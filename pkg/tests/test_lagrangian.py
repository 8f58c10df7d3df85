import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vortgrowth.evolution import TimeStepConfig, initial_state, run_until
from vortgrowth.initial_data import Omega0Spec
from vortgrowth.lagrangian import (
    CoverageError,
    SnapshotStore,
    Tracer,
    advance_tracer,
    backtrack,
    flow_at,
    gradient_at,
    gradient_via_backtracking,
    tracer_hook,
    velocity_at,
)
from vortgrowth.spectral import ScalarField, biot_savart, gradient, make_grid

from conftest import eigenfunction, smooth_spectrum


def test_velocity_at_closed_form(eig128):
    u = velocity_at(eig128, (0.25, 0.25))
    assert u == pytest.approx((-np.pi / 2, np.pi / 2), abs=1e-12)
    assert velocity_at(eig128, (0.0, 0.0)) == pytest.approx((0.0, 0.0), abs=1e-15)


def test_flow_at_matches_grid_velocity():
    g = make_grid(64)
    f = ScalarField.from_spectrum(g, smooth_spectrum(64))
    v = biot_savart(f)
    idx = [(5, 40), (33, 12), (50, 50)]
    pts = np.array([[g.x[i], g.x[j]] for i, j in idx])
    u, grad = flow_at(f, pts)
    assert np.allclose(u[:, 0], [v.u1[i, j] for i, j in idx], atol=1e-13)
    assert np.allclose(u[:, 1], [v.u2[i, j] for i, j in idx], atol=1e-13)
    assert np.allclose(grad[:, 0, 0] + grad[:, 1, 1], 0, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(-0.95, 0.95))
def test_velocity_gradient_matches_differences(x1, x2):
    a = smooth_spectrum(32)
    eps = 1e-6
    _, grad = flow_at(a, (x1, x2))
    for b, e in enumerate(np.eye(2)):
        up, _ = flow_at(a, np.array([x1, x2]) + eps * e, jacobian=False)
        dn, _ = flow_at(a, np.array([x1, x2]) - eps * e, jacobian=False)
        assert np.allclose(grad[0, :, b], (up - dn)[0] / (2 * eps), atol=1e-7)


def test_gradient_at_matches_spectral_gradient():
    g = make_grid(64)
    f = ScalarField.from_spectrum(g, smooth_spectrum(64))
    d1, d2 = gradient(f)
    got = gradient_at(f, [[g.x[10], g.x[20]]])[0]
    assert got == pytest.approx([d1[10, 20], d2[10, 20]], abs=1e-12)


def test_stagnation_tracer_stays_put(eig128):
    tr = Tracer(alpha=np.zeros(2))
    a = eig128.spectrum
    for k in range(5):
        advance_tracer(tr, ((0.1 * k, a), (0.1 * (k + 1), a)))
    assert np.all(tr.x == 0)
    assert len(tr.history) == 6


def test_advance_requires_both_snapshots(eig128):
    tr = Tracer(alpha=np.array([0.3, 0.2]))
    with pytest.raises(CoverageError):
        advance_tracer(tr, ((0.0, eig128.spectrum), None))
    with pytest.raises(CoverageError):
        advance_tracer(tr, ((0.5, eig128.spectrum), (0.6, eig128.spectrum)))


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_jacobian_incompressible_in_steady_flow(a1, a2):
    a = eigenfunction(32).spectrum
    tr = Tracer(alpha=np.array([a1, a2]))
    for k in range(100):
        advance_tracer(tr, ((0.002 * k, a), (0.002 * (k + 1), a)))
    assert abs(tr.det_j - 1) < 1e-8
    # the stream function is a first integral
    psi = lambda p: np.sin(np.pi * p[0]) * np.sin(np.pi * p[1])
    assert psi(tr.x) == pytest.approx(psi(tr.alpha), abs=1e-8)


def _smooth_run(n=64, t_end=0.5):
    g = make_grid(n)
    st0 = initial_state(ScalarField.from_spectrum(g, smooth_spectrum(n)))
    store = SnapshotStore(dense_until=10.0)
    tracers = [Tracer(alpha=np.array([0.3, 0.4])), Tracer(alpha=np.array([-0.7, 0.1]))]
    st1 = run_until(st0, TimeStepConfig(t_end=t_end), step_hooks=[store.hook, tracer_hook(tracers)])
    return st0, st1, store, tracers


def test_round_trip_and_identity():
    st0, st1, store, tracers = _smooth_run()
    for tr in tracers:
        back = backtrack(tr.x, st1.t, 0.0, store)
        assert np.max(np.abs(back - tr.alpha)) < 1e-9
        assert abs(tr.det_j - 1) < 1e-9
    p = np.array([0.2, -0.4])
    assert np.array_equal(backtrack(p, 0.3, 0.3, store), p)
    with pytest.raises(CoverageError):
        backtrack(p, 2.0, 0.0, store)
    with pytest.raises(ValueError):
        backtrack(p, 0.1, 0.3, store)


def test_backward_jacobian_inverts_forward():
    st0, st1, store, tracers = _smooth_run()
    tr = tracers[0]
    _, Jb = backtrack(tr.x, st1.t, 0.0, store, jacobian=True)
    assert np.allclose(Jb @ tr.jacobian, np.eye(2), atol=1e-9)


def test_gradient_via_backtracking_at_t0_is_exact():
    spec = Omega0Spec(0.1)
    pts = np.array([[0.03, 0.04], [0.5, 0.02]])
    got = gradient_via_backtracking(pts, 0.0, SnapshotStore(), spec)
    assert np.array_equal(got, spec.gradient(pts))


def test_gradient_transport_short_run():
    st0, st1, store, _ = _smooth_run()
    a0 = st0.spectrum
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.9, 0.9, size=(5, 2))
    got = gradient_via_backtracking(pts, st1.t, store, lambda y: gradient_at(a0, y))
    ref = gradient_at(st1.spectrum, pts)
    assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) < 1e-5


def test_store_rejects_time_reversal():
    st0, st1, store, _ = _smooth_run(t_end=0.1)
    with pytest.raises(ValueError):
        store.add(st0)


def _rotation(t, x):
    u = np.stack([-x[:, 1], x[:, 0]], axis=-1)
    grad = np.broadcast_to(np.array([[0.0, -1.0], [1.0, 0.0]]), (len(x), 2, 2))
    return u, grad


def test_rotation_circle_oracle():
    steps = 2000
    tr = Tracer(alpha=np.array([0.4, 0.0]))
    for _ in range(steps):
        advance_tracer(tr, dt=2 * np.pi / steps, flow=_rotation)
    assert abs(np.hypot(*tr.x) - 0.4) <= 1e-10
    assert np.allclose(tr.x, [0.4, 0.0], atol=1e-9)
    assert times_increasing(tr)


def times_increasing(tr):
    t = [h[0] for h in tr.history]
    return all(b > a for a, b in zip(t, t[1:]))


def test_rk4_order_in_eigenfunction_flow():
    a = eigenfunction(32).spectrum

    def final(steps):
        tr = Tracer(alpha=np.array([0.3, 0.2]))
        for k in range(steps):
            advance_tracer(tr, ((0.5 * k / steps, a), (0.5 * (k + 1) / steps, a)))
        return tr.x

    x1, x2, x3 = final(10), final(20), final(40)
    order = np.log2(np.linalg.norm(x1 - x2) / np.linalg.norm(x2 - x3))
    assert 3.7 < order < 4.3
