"""Resolution study of the strain mechanism at grid-resolvable parameters.

For each n, builds omega0, runs with a tracer at (s, s) and reports the
trusted window, the fitted decay rate of X1 and the key-integral margin.
"""

import argparse
import contextlib
import io
import itertools
import time
from pathlib import Path

from vortgrowth.cli import main as cli
from vortgrowth.diagnostics import fit_exponential
from vortgrowth.io import read_csv


def study(n, args, root):
    out = root / f"n{n}"
    sets = [f"n={n}", f"delta={args.delta}", f"delta1={args.delta1}", f"s={args.s}",
            f"t_end={args.t_end}", f"snapshot_interval={args.interval}"]
    flags = [x for kv in sets for x in ("--set", kv)] + ["--output", str(out), "--force"]
    t0 = time.perf_counter()
    with contextlib.redirect_stdout(io.StringIO()):
        if cli(["init", *flags]) != 0:
            return None
        code = cli(["run", *flags])
    elapsed = time.perf_counter() - t0
    _, rows = read_csv(out / "diagnostics.csv")
    window = list(itertools.takewhile(lambda r: r["trusted"], rows))
    fit = fit_exponential([(r["t"], r["X1"]) for r in window])
    i_min = min(r["I"] for r in window)
    b_max = max(abs(r["B1"]) for r in window)
    return dict(n=n, code=code, t_trusted=window[-1]["t"], rows=len(window), rate=fit.rate,
                I_min=i_min, B1_max=b_max, grad_ratio=rows[-1]["linf_grad_omega"] / rows[0]["linf_grad_omega"],
                seconds=elapsed)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, nargs="+", default=[512, 1024])
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--delta1", type=float, default=0.05)
    p.add_argument("--s", type=float, default=0.02)
    p.add_argument("--t-end", type=float, default=1.5)
    p.add_argument("--interval", type=float, default=0.05)
    p.add_argument("--output", default="mechanism_out")
    args = p.parse_args()
    root = Path(args.output)
    print(f"{'n':>5} {'exit':>4} {'t_trust':>8} {'rows':>5} {'rate X1':>9} {'I_min':>7} {'|B1|max':>8} "
          f"{'grad ratio':>10} {'sec':>6}")
    for n in args.n:
        r = study(n, args, root)
        if r is None:
            print(f"{n:5d}  skipped (init failed)")
            continue
        print(f"{r['n']:5d} {r['code']:4d} {r['t_trusted']:8.2f} {r['rows']:5d} {r['rate']:9.4f} "
              f"{r['I_min']:7.4f} {r['B1_max']:8.4f} {r['grad_ratio']:10.4f} {r['seconds']:6.1f}")


if __name__ == "__main__":
    main()
