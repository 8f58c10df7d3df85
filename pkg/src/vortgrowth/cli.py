"""Command-line entry point: constants | init | run | fit | plot.

Exit codes: 0 success, 1 usage error, 2 constraint or inequality failure,
3 numerical abort.
"""

from __future__ import annotations

import argparse
import logging
import math
import re
import sys
from pathlib import Path

import mpmath
import numpy as np

from . import diagnostics as diag
from .config import ConfigError, RunConfig, dump_config, load_config
from .evolution import NumericalAbort, TimeStepConfig, initial_state, run_until
from .initial_data import (
    ConstraintError,
    Omega0Spec,
    UnresolvedError,
    sector_margin,
    build_omega0,
    constants_report,
    resolvable_params,
    resolvable_report,
    theoretical_constants,
    verify_constraints,
)
from .io import (
    DIAGNOSTIC_COLUMNS,
    TRAJECTORY_COLUMNS,
    Checkpoint,
    CheckpointError,
    CsvAppender,
    atomic_write,
    load_checkpoint,
    read_csv,
    save_checkpoint,
    truncate_after,
)
from .lagrangian import Tracer, tracer_hook
from .spectral import ScalarField, make_grid

log = logging.getLogger("vortgrowth")

EXIT_OK, EXIT_USAGE, EXIT_CONSTRAINT, EXIT_ABORT = 0, 1, 2, 3
UPPER_BOUND_SLACK = 0.05


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="key = value config file")
    p.add_argument("--output", default=argparse.SUPPRESS, help="output directory")
    p.add_argument("--force", action="store_true", default=argparse.SUPPRESS,
                   help="overwrite existing outputs")
    p.add_argument("--precision", type=int, default=argparse.SUPPRESS,
                   help="decimal digits for theoretical constants")
    p.add_argument("--set", action="append", default=argparse.SUPPRESS, metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="vortgrowth", parents=[common],
                     description="Exponential vorticity-gradient growth laboratory on the 2D torus.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("constants", parents=[common], help="constant chain at high precision")
    sub.add_parser("init", parents=[common], help="build initial vorticity and checkpoint")
    run = sub.add_parser("run", parents=[common], help="evolve from a checkpoint")
    run.add_argument("--checkpoint", help="checkpoint to start from (default: <output>/init.egl)")
    run.add_argument("--resume", action="store_true", help="continue from the latest checkpoint in <output>")
    fit = sub.add_parser("fit", parents=[common], help="exponential fit of a diagnostics column")
    fit.add_argument("csv")
    fit.add_argument("--column", default="linf_grad_omega")
    fit.add_argument("--window", nargs=2, type=float, metavar=("T_A", "T_B"))
    fit.add_argument("--all-rows", action="store_true", help="include untrusted rows")
    plot = sub.add_parser("plot", parents=[common], help="emit a gnuplot script for diagnostics")
    plot.add_argument("csv")
    return parser


def _config(args) -> RunConfig:
    overrides = list(getattr(args, "set", []) or [])
    if getattr(args, "output", None):
        overrides.append(f"output = {args.output}")
    if getattr(args, "precision", None):
        overrides.append(f"precision = {args.precision}")
    return load_config(getattr(args, "config", None), overrides)


def _mp(value, digits: int) -> str:
    if isinstance(value, str):
        return value
    return mpmath.nstr(value, digits)


def _guard_outputs(paths, force: bool) -> None:
    existing = [str(p) for p in paths if Path(p).exists()]
    if existing and not force:
        raise UsageError(f"refusing to overwrite {', '.join(existing)} (use --force)")


# --- constants -----------------------------------------------------------------

def cmd_constants(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    if "mode" not in cfg.explicit:
        cfg.mode = "theoretical"
    cfg.validate(simulate=False)
    digits = cfg.precision
    if cfg.mode == "theoretical":
        params = theoretical_constants(cfg.A, cfg.C3, digits)
    else:
        params = resolvable_params(cfg.delta, cfg.delta1, cfg.s, cfg.A, cfg.C3)
        params.precision = max(digits, params.precision)
    print(f"mode = {cfg.mode}", file=out)
    print(f"precision = {digits}", file=out)
    try:
        report = constants_report(params, cfg.C2_guess, cfg.T)
    except ValueError as exc:
        print(f"sector_margin = vacuous ({exc})", file=out)
        return EXIT_CONSTRAINT
    for key, value in report.items():
        print(f"{key} = {_mp(value, digits)}", file=out)
    with mpmath.workdps(digits):
        identity = abs(report["grad_bound_20_over_delta"] - report["K_exp_4sqrt3_A"]) / report["K_exp_4sqrt3_A"]
    print(f"identity_20_over_delta_rel_err = {_mp(identity, 5)}", file=out)
    margin = sector_margin(params)
    ok = margin >= 0
    print(f"sector_margin_holds = {int(ok)}", file=out)
    return EXIT_OK if ok else EXIT_CONSTRAINT


# --- init ------------------------------------------------------------------------

def initial_field(cfg: RunConfig):
    grid = make_grid(cfg.n)
    if cfg.initial == "omega0":
        spec = Omega0Spec(cfg.delta)
        return build_omega0(spec, grid), spec
    N = grid.half
    a = np.zeros((N, N))
    if cfg.initial == "eigenfunction":
        a[0, 0] = 2 * np.pi**2
    else:
        rng = np.random.default_rng(cfg.seed)
        j = np.arange(1, N + 1)
        env = np.exp(-(j[:, None] ** 2 + j[None, :] ** 2) / 8.0)
        a = rng.standard_normal((N, N)) * env
        a[-1, :] = a[:, -1] = 0.0
    return ScalarField.from_spectrum(grid, a), None


def cmd_init(cfg: RunConfig, force: bool = False, out=None) -> int:
    out = out or sys.stdout
    cfg.validate()
    outdir = Path(cfg.output)
    ckpt, report_path = outdir / "init.egl", outdir / "init_report.txt"
    _guard_outputs([ckpt, report_path], force)
    field_, spec = initial_field(cfg)
    lines = [f"initial = {cfg.initial}", f"n = {cfg.n}"]
    ok = True
    if spec is not None:
        report = verify_constraints(field_, spec)
        ok = report.passed
        lines += report.lines()
        if not ok:
            lines.append(f"failing = {' '.join(report.failing())}")
        params = resolvable_params(cfg.delta, cfg.delta1, cfg.s, cfg.A, cfg.C3)
        for name, holds, detail in resolvable_report(params):
            lines.append(f"construction_{name} = {'holds' if holds else 'fails'} {detail}")
    state = initial_state(field_, dealiased=cfg.dealias)
    tracer = Tracer(alpha=np.array([cfg.s, cfg.s]), t=state.t)
    outdir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(ckpt, Checkpoint(state, [tracer]))
    text = "\n".join(lines) + "\n\n# config\n" + dump_config(cfg)
    atomic_write(report_path, text)
    out.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_CONSTRAINT


# --- run -------------------------------------------------------------------------

_CKPT_RE = re.compile(r"ckpt_(\d+)\.egl$")


def latest_checkpoint(outdir: Path) -> Path:
    found = sorted((int(m.group(1)), p) for p in (outdir / "checkpoints").glob("ckpt_*.egl")
                   if (m := _CKPT_RE.search(p.name)))
    if not found:
        raise UsageError(f"no checkpoints under {outdir / 'checkpoints'} to resume from")
    return found[-1][1]


def cmd_run(cfg: RunConfig, checkpoint: str | None = None, resume: bool = False,
            force: bool = False, out=None) -> int:
    out = out or sys.stdout
    cfg.validate()
    outdir = Path(cfg.output)
    diag_path, traj_path = outdir / "diagnostics.csv", outdir / "trajectory.csv"
    if resume:
        ck_path = Path(checkpoint) if checkpoint else latest_checkpoint(outdir)
    else:
        ck_path = Path(checkpoint) if checkpoint else outdir / "init.egl"
        _guard_outputs([diag_path, traj_path], force)
    if not ck_path.exists():
        raise UsageError(f"checkpoint {ck_path} not found (run 'init' first)")
    ck = load_checkpoint(ck_path)
    if ck.state.grid.n != cfg.n:
        raise UsageError(f"checkpoint grid n={ck.state.grid.n} differs from config n={cfg.n}")
    state, tracers = ck.state, ck.tracers
    tracer = tracers[0] if tracers else None
    spec = Omega0Spec(cfg.delta) if cfg.initial == "omega0" else None
    log_s = math.log(float(tracer.alpha[0])) if tracer is not None else None
    if cfg.t_end < state.t:
        raise UsageError(f"t_end={cfg.t_end} is before checkpoint time {state.t}")

    outdir.mkdir(parents=True, exist_ok=True)
    if resume:
        for p in (diag_path, traj_path):
            if p.exists():
                truncate_after(p, state.t)
    dw = CsvAppender(diag_path, DIAGNOSTIC_COLUMNS, append=resume)
    tw = CsvAppender(traj_path, TRAJECTORY_COLUMNS, append=resume)

    def write_record(st):
        dw.write(diag.record(st, tracer, spec, log_s).row())

    def write_traj(t):
        if tracer is not None:
            tw.write([t, tracer.x[0], tracer.x[1], tracer.det_j])

    if not resume:
        write_record(state)
        write_traj(state.t)

    ckpt_dir = outdir / "checkpoints"

    def on_snapshot(st):
        write_record(st)
        k = int(round(st.t / cfg.snapshot_interval))
        if k % cfg.checkpoint_every == 0 or st.t >= cfg.t_end:
            save_checkpoint(ckpt_dir / f"ckpt_{st.step_count:08d}.egl", Checkpoint(st, tracers))

    hooks = [tracer_hook(tracers), lambda prev, new: write_traj(new.t)] if tracers else []
    tsc = TimeStepConfig(t_end=cfg.t_end, cfl_number=cfg.cfl_number, dealias=cfg.dealias,
                         snapshot_interval=cfg.snapshot_interval, max_dt=cfg.max_dt,
                         blowup_factor=cfg.blowup_factor, filter=cfg.filter)
    code = EXIT_OK
    try:
        if cfg.t_end > state.t:
            state = run_until(state, tsc, callbacks=[on_snapshot], step_hooks=hooks)
    except NumericalAbort as exc:
        log.error("numerical abort: %s", exc)
        save_checkpoint(outdir / "aborted.egl", Checkpoint(exc.state, tracers))
        code = EXIT_ABORT
    finally:
        dw.close()
        tw.close()
    if code == EXIT_OK:
        save_checkpoint(outdir / "final.egl", Checkpoint(state, tracers))
    summary = summarize(diag_path)
    atomic_write(outdir / "summary.txt", "\n".join(summary["lines"]) + "\n")
    out.write("\n".join(summary["lines"]) + "\n")
    if code == EXIT_OK and not summary["upper_bound_ok"]:
        code = EXIT_CONSTRAINT
    return code


def upper_bound_check(rows: list[dict], slack: float = UPPER_BOUND_SLACK):
    """log(|grad w(t)|/|grad w0|) <= int_0^t |grad u| + slack * t on trusted rows."""
    if not rows:
        return True, 0.0
    g0 = rows[0]["linf_grad_omega"]
    worst = -math.inf
    for r in rows:
        if not r.get("trusted", 1) or g0 <= 0:
            continue
        lhs = math.log(r["linf_grad_omega"] / g0) if r["linf_grad_omega"] > 0 else -math.inf
        worst = max(worst, lhs - r["int_grad_u"] - slack * r["t"])
    return worst <= 0, worst


def summarize(diag_path) -> dict:
    _, rows = read_csv(diag_path)
    ok, worst = upper_bound_check(rows)
    lines = [f"rows = {len(rows)}", f"t_final = {rows[-1]['t']:.17g}" if rows else "t_final =",
             f"upper_bound_holds = {int(ok)}", f"upper_bound_worst_excess = {worst:.17g}"]
    if len(rows) >= 2:
        t = np.array([r["t"] for r in rows])
        igu = np.array([r["int_grad_u"] for r in rows])
        dt = np.diff(t)
        mean_gu = np.diff(igu) / np.where(dt > 0, dt, 1.0)
        mid = (t[1:] + t[:-1]) / 2
        if np.all(mean_gu > 0):
            lines.append(f"C2_estimate = {diag.estimate_c2(mid, mean_gu):.17g}")
    trusted = [r for r in rows if r.get("trusted")]
    lines.append(f"trusted_rows = {len(trusted)}")
    # reported, not asserted: the bound X2 * |grad w| <= 1 needs the theoretical s
    prod = [r["X2"] * r["linf_grad_omega"] for r in rows if r.get("X2") is not None]
    if prod:
        lines.append(f"max_X2_times_grad_omega = {max(prod):.17g}")
    return {"lines": lines, "upper_bound_ok": ok, "rows": rows}


# --- fit ---------------------------------------------------------------------------

def cmd_fit(csv_path, column: str = "linf_grad_omega", window=None, all_rows: bool = False,
            out=None) -> int:
    out = out or sys.stdout
    header, rows = read_csv(csv_path)
    if column not in header:
        raise UsageError(f"column {column!r} not in {csv_path}")
    use = [r for r in rows if r[column] is not None and (all_rows or r.get("trusted", 1))]
    series = [(r["t"], r[column]) for r in use]
    if window is None:
        if not series:
            raise UsageError("no usable rows")
        window = (series[0][0], series[-1][0])
    try:
        fit = diag.fit_exponential(series, tuple(window))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(f"column = {column}", file=out)
    for line in fit.lines():
        print(line, file=out)
    if column == "X1":
        print(f"decay = {int(fit.rate < 0)}", file=out)
    if column == "linf_grad_omega" and "int_grad_u" in header:
        ok, worst = upper_bound_check(rows)
        print(f"upper_bound_holds = {int(ok)}", file=out)
        print(f"upper_bound_worst_excess = {worst:.17g}", file=out)
        inside = [r for r in rows if window[0] <= r["t"] <= window[1]]
        if inside:
            span = inside[-1]["t"] - inside[0]["t"]
            if span > 0:
                avg = (inside[-1]["int_grad_u"] - inside[0]["int_grad_u"]) / span
                print(f"mean_grad_u_rate_bound = {avg:.17g}", file=out)
    return EXIT_OK


# --- plot --------------------------------------------------------------------------

PLOT_COLUMNS = ["t", "linf_grad_omega", "X1", "I"]


def cmd_plot(csv_path, outdir=None, force: bool = False, out=None) -> int:
    out = out or sys.stdout
    header, rows = read_csv(csv_path)
    if not rows:
        raise UsageError(f"{csv_path}: no data rows")
    missing = [c for c in PLOT_COLUMNS if c not in header]
    if missing:
        raise UsageError(f"{csv_path}: missing columns {missing}")
    outdir = Path(outdir) if outdir else Path(csv_path).parent
    data_path, script_path = outdir / "plot_data.dat", outdir / "plot.gp"
    _guard_outputs([data_path, script_path], force)
    lines = ["# " + " ".join(PLOT_COLUMNS)]
    for r in rows:
        lines.append(" ".join("?" if r[c] is None else format(r[c], ".17g") for c in PLOT_COLUMNS))
    atomic_write(data_path, "\n".join(lines) + "\n")
    script = f"""# gnuplot script; render with: gnuplot {script_path.name}
set terminal pngcairo size 900,1200
set output 'diagnostics.png'
set datafile missing '?'
set logscale y
set xlabel 't'
set multiplot layout 3,1
set title 'sup |grad omega|'
plot '{data_path.name}' using 1:2 with linespoints notitle
set title 'X1(t)'
plot '{data_path.name}' using 1:3 with linespoints notitle
set title 'key integral I(t, X(t))'
plot '{data_path.name}' using 1:4 with linespoints notitle
unset multiplot
"""
    atomic_write(script_path, script)
    print(f"wrote {script_path} and {data_path}", file=out)
    return EXIT_OK


# --- entry point ---------------------------------------------------------------------

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    force = bool(getattr(args, "force", False))
    try:
        if args.command == "fit":
            return cmd_fit(args.csv, args.column, args.window, args.all_rows)
        if args.command == "plot":
            return cmd_plot(args.csv, getattr(args, "output", None), force)
        cfg = _config(args)
        if args.command == "constants":
            return cmd_constants(cfg)
        if args.command == "init":
            return cmd_init(cfg, force)
        return cmd_run(cfg, args.checkpoint, args.resume, force)
    except (UsageError, ConfigError, CheckpointError, UnresolvedError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConstraintError as exc:
        print(f"constraint failure: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
