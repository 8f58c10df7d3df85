"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

import itertools
import math
import time

import mpmath
import numpy as np
import pytest

from vortgrowth.cli import main, upper_bound_check
from vortgrowth.diagnostics import fit_exponential, key_integral
from vortgrowth.evolution import TimeStepConfig, initial_state, run_until
from vortgrowth.initial_data import sector_margin, constants_report, theoretical_constants
from vortgrowth.io import load_checkpoint, read_csv
from vortgrowth.initial_data import Omega0Spec, build_omega0
from vortgrowth.lagrangian import (
    SnapshotStore,
    Tracer,
    backtrack,
    gradient_at,
    gradient_via_backtracking,
    tracer_hook,
)
from vortgrowth.spectral import ScalarField, make_grid, symmetry_violation

from conftest import report_criterion, smooth_spectrum

EIGEN = ["--set", "initial=eigenfunction", "--set", "n=128", "--set", "cfl_number=0.5",
         "--set", "t_end=1", "--set", "snapshot_interval=0.1"]
CONSERVE = ["--set", "n=256", "--set", "delta=0.2", "--set", "delta1=0.1", "--set", "s=0.04",
            "--set", "t_end=2", "--set", "snapshot_interval=0.1"]
MECHANISM = ["--set", "n=512", "--set", "delta=0.05", "--set", "delta1=0.05", "--set", "s=0.02",
             "--set", "t_end=1", "--set", "snapshot_interval=0.05"]


def _cli_run(root, name, args):
    out = str(root / name)
    assert main(["init", *args, "--output", out]) == 0
    code = main(["run", *args, "--output", out])
    return root / name, code


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    return {name: _cli_run(root, name, args)
            for name, args in [("eigen", EIGEN), ("conserve", CONSERVE), ("mechanism", MECHANISM)]}


def test_c01_constants_inequalities():
    t0 = time.perf_counter()
    worst_margin, worst_identity = mpmath.inf, mpmath.mpf(0)
    for A in (2, 3, 5):
        for C3 in (0.5, 1, 2):
            p = theoretical_constants(A, C3, 50)
            with mpmath.workdps(50):
                worst_margin = min(worst_margin, sector_margin(p))
                rep = constants_report(p)
                rel = abs(rep["grad_bound_20_over_delta"] / rep["K_exp_4sqrt3_A"] - 1)
                worst_identity = max(worst_identity, rel)
    elapsed = time.perf_counter() - t0
    ok = worst_margin >= 0 and worst_identity < mpmath.mpf(10) ** -45 and elapsed < 1.0
    report_criterion(1, "constants and sector margin", ok,
                     f"min margin={mpmath.nstr(worst_margin, 8)} identity rel err={mpmath.nstr(worst_identity, 3)} "
                     f"runtime={elapsed:.3f}s")
    assert ok


def test_c02_key_integral_oracle():
    g = make_grid(512)
    x1, x2 = g.mesh()
    field_ = ScalarField(g, values=np.sign(x1) * np.sign(x2))
    t0 = time.perf_counter()
    value = key_integral(field_, (0.25, 0.25))
    elapsed = time.perf_counter() - t0
    exact = 2 / math.pi * math.log(5 / 4)
    err = abs(value - exact)
    ok = err <= 1e-6 and elapsed < 1.0
    report_criterion(2, "key integral, omega = 1 at (1/4, 1/4)", ok,
                     f"I={value:.12f} exact={exact:.12f} err={err:.2e} runtime={elapsed:.3f}s")
    assert ok


def test_c03_stationary_eigenfunction(runs):
    path, code = runs["eigen"]
    first = load_checkpoint(path / "init.egl").state
    last = load_checkpoint(path / "final.egl").state
    drift = np.max(np.abs(last.omega.values - first.omega.values)) / np.max(np.abs(first.omega.values))
    _, rows = read_csv(path / "diagnostics.csv")
    cols = ["linf_omega", "l2_u", "enstrophy", "linf_grad_omega"]
    row_drift = max(abs(r[c] / rows[0][c] - 1) for r in rows for c in cols)
    ok = code == 0 and last.t == 1.0 and drift <= 1e-6 and row_drift <= 1e-6
    report_criterion(3, "stationary eigenfunction n=128, t in [0,1]", ok,
                     f"field drift={drift:.2e} diagnostics drift={row_drift:.2e} rows={len(rows)}")
    assert ok


def test_c04_conservation(runs):
    path, code = runs["conserve"]
    _, rows = read_csv(path / "diagnostics.csv")
    e0, z0, w0 = rows[0]["l2_u"] ** 2, rows[0]["enstrophy"], rows[0]["linf_omega"]
    de = max(abs(r["l2_u"] ** 2 / e0 - 1) for r in rows)
    dz = max(abs(r["enstrophy"] / z0 - 1) for r in rows)
    dw = max(abs(r["linf_omega"] / w0 - 1) for r in rows)
    final = load_checkpoint(path / "final.egl").state
    odd = symmetry_violation(final.omega.values)
    ok = code == 0 and rows[-1]["t"] == 2.0 and de <= 1e-6 and dz <= 1e-6 and dw <= 1e-3 and odd <= 1e-12
    report_criterion(4, "conservation delta=0.2 n=256 t in [0,2]", ok,
                     f"energy={de:.2e} enstrophy={dz:.2e} linf={dw:.2e} oddness={odd:.1e}")
    assert ok


@pytest.fixture(scope="module")
def transport_run():
    g = make_grid(256)
    spec = Omega0Spec(0.2)
    st0 = initial_state(build_omega0(spec, g))
    store = SnapshotStore(dense_until=2.0)
    alphas = [(0.04, 0.04), (0.3, 0.1), (0.15, 0.6), (-0.5, 0.25), (0.7, -0.8)]
    tracers = [Tracer(alpha=np.array(a)) for a in alphas]
    st1 = run_until(st0, TimeStepConfig(t_end=1.0), step_hooks=[store.hook, tracer_hook(tracers)])
    return st1, store, tracers


def test_c05_flow_map_round_trip(transport_run):
    st1, store, tracers = transport_run
    err = max(np.max(np.abs(backtrack(tr.x, st1.t, 0.0, store) - tr.alpha)) for tr in tracers)
    det_dev = max(abs(h[3] - 1) for tr in tracers for h in tr.history)
    ok = err <= 2e-6 and det_dev <= 1e-6
    report_criterion(5, "flow-map round trip n=256 t in [0,1]", ok,
                     f"position err={err:.2e} max |det J - 1|={det_dev:.2e}")
    assert ok


def test_c06_gradient_transport():
    g = make_grid(256)
    a0 = smooth_spectrum(256)
    st0 = initial_state(ScalarField.from_spectrum(g, a0))
    store = SnapshotStore(dense_until=2.0)
    st1 = run_until(st0, TimeStepConfig(t_end=1.0), step_hooks=[store.hook])
    pts = np.random.default_rng(2024).uniform(-0.95, 0.95, size=(10, 2))
    got = gradient_via_backtracking(pts, 1.0, store, lambda y: gradient_at(a0, y))
    ref = gradient_at(st1.spectrum, pts)
    rel = float(np.max(np.linalg.norm(got - ref, axis=1) / np.linalg.norm(ref, axis=1)))
    ok = rel <= 1e-3
    report_criterion(6, "gradient transport vs spectral gradient, t=1 n=256", ok,
                     f"max relative err over 10 points={rel:.2e}")
    assert ok


def test_c07_upper_bound(runs):
    details, ok = [], True
    for name, (path, code) in runs.items():
        _, rows = read_csv(path / "diagnostics.csv")
        holds, worst = upper_bound_check(rows, 0.05)
        trusted = sum(1 for r in rows if r["trusted"])
        ok = ok and holds and trusted > 0
        details.append(f"{name}: worst excess={worst:.3g} over {trusted} trusted rows")
    report_criterion(7, "upper-bound inequality on every run", ok, "; ".join(details))
    assert ok


def test_c08_mechanism(runs):
    path, code = runs["mechanism"]
    _, rows = read_csv(path / "diagnostics.csv")
    # the trusted window is the leading run of trusted rows
    window = list(itertools.takewhile(lambda r: r["trusted"], rows))
    x1 = [r["X1"] for r in window]
    gq = [r["growth_quotient_log"] for r in window]
    I = [r["I"] for r in window]
    B1 = [abs(r["B1"]) for r in window]
    fit = fit_exponential([(r["t"], r["X1"]) for r in window])
    bound = -(min(I) - max(B1)) + 0.1
    checks = {
        "X1 decreasing": all(b < a for a, b in zip(x1, x1[1:])),
        "quotient increasing": all(b > a for a, b in zip(gq, gq[1:])),
        "I > 0": min(I) > 0,
        "decay rate": fit.rate <= bound,
    }
    ok = code == 0 and len(window) >= 3 and all(checks.values())
    report_criterion(8, "mechanism delta=0.05 s=0.02 n=512", ok,
                     f"trusted window [0, {window[-1]['t']:.2f}] ({len(window)} rows), "
                     f"rate={fit.rate:.4f} <= {bound:.4f}, I_min={min(I):.4f}, |B1|_max={max(B1):.4f}, "
                     + ", ".join(f"{k}={'yes' if v else 'no'}" for k, v in checks.items()))
    assert ok


def test_c09_fit_correctness():
    t = np.arange(11) / 10
    fit = fit_exponential(np.stack([t, np.exp(2 * t)], axis=1))
    err = abs(fit.rate - 2)
    ok = err <= 1e-10
    report_criterion(9, "fit on exact e^{2t}", ok, f"rate={fit.rate:.15f} err={err:.1e}")
    assert ok


def test_c10_determinism(tmp_path):
    args = ["--set", "n=128", "--set", "delta=0.2", "--set", "delta1=0.1", "--set", "s=0.04",
            "--set", "t_end=0.5"]
    a, ca = _cli_run(tmp_path, "a", args)
    b, cb = _cli_run(tmp_path, "b", args)
    same = {name: (a / name).read_bytes() == (b / name).read_bytes()
            for name in ("diagnostics.csv", "trajectory.csv", "summary.txt", "final.egl")}
    ok = ca == cb == 0 and all(same.values())
    report_criterion(10, "determinism of repeated runs", ok,
                     ", ".join(f"{k} {'identical' if v else 'differs'}" for k, v in same.items()))
    assert ok
