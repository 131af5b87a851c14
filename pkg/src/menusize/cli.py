"""Command-line harness.

Every run writes its CSV output and a JSON manifest (flags, seed, instance
constants) into the output directory: ``--outdir``, else $MENUSIZE_OUTDIR,
else ./menusize-out. ``replay`` re-runs a manifest.

Exit codes: 0 success, 1 usage error, 2 failed precondition or audit,
3 violated internal invariant.

CSV headers:
  eval      menu,dist,menu_size,revenue_exact,mc_estimate,mc_stderr
  round     variant,epsilon,size_before,size_after,rev_before,rev_after,guarantee_slack
  certify   menu,kind,menu_size,revenue,delta,deviation_measure,certified_gap,d,z_term,a_term,quad_error
  plapprox  delta,budget,greedy_segments,min_deviation_measure
  optimize  dist,C,seed,menu_size,revenue
  oracle    dist,n_grid,lp_value,lp_residual,upper_bound
  hazard    dist,grid_n,satisfied,min_value,argmin_v1,argmin_v2
  curve     C,best_revenue,gap_vs_upper_bound,cert_exact
  witness   dist,epsilon,rev_original,rev_rounded_only,rev_nudged,loss_without_discount
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

ENV_OUTDIR = "MENUSIZE_OUTDIR"
DEFAULT_OUTDIR = "menusize-out"
MANIFEST_VERSION = 1


class UsageError(Exception):
    pass


class InvariantError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- output helpers ------------------------------------------------------------

def atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)
    return path


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    if isinstance(v, (np.floating,)):
        return repr(float(v))
    return v


def _constants():
    from .duality import instance_constants

    ic = instance_constants()
    return {"x_prime": ic.x_prime, "c_diag": ic.c_diag, "r": ic.r, "d": ic.d, "delta_max": ic.delta_max}


def _outdir(args) -> Path:
    d = args.outdir or os.environ.get(ENV_OUTDIR) or DEFAULT_OUTDIR
    return Path(d)


def _finish(args, name: str, header, rows, extra_files=()):
    out = _outdir(args)
    csv_path = atomic_write(out / f"{name}.csv", csv_text(header, rows))
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "outdir", "config")}
    manifest = {
        "version": MANIFEST_VERSION,
        "command": args.command,
        "flags": flags,
        "seed": flags.get("seed"),
        "constants": _constants(),
        "outputs": [csv_path.name] + [Path(p).name for p in extra_files],
    }
    atomic_write(out / f"{name}.manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(csv_text(header, rows))
    return 0


# -- subcommands ------------------------------------------------------------------

def cmd_eval(args):
    from .dist import parse_dist
    from .model import menu_size, read_menu
    from .revenue import revenue_exact, revenue_mc

    M = read_menu(args.menu)
    D = parse_dist(args.dist)
    rev = revenue_exact(M, D)
    mc = revenue_mc(M, D, args.mc_n, args.seed)
    row = [Path(args.menu).name, args.dist, menu_size(M), rev, mc.estimate, mc.stderr]
    return _finish(args, "eval", ["menu", "dist", "menu_size", "revenue_exact", "mc_estimate", "mc_stderr"], [row])


def cmd_round(args):
    from .dist import parse_dist
    from .model import format_menu, menu_size, read_menu
    from .revenue import revenue_exact
    from .rounding import additive_guarantee, nudge_round_additive, nudge_round_full, nudge_round_multiplicative

    M = read_menu(args.menu)
    D = parse_dist(args.dist)
    if args.variant == "additive":
        R = nudge_round_additive(M, args.epsilon)
    elif args.variant == "full":
        R = nudge_round_full(M, args.epsilon)
    else:
        if args.H is None:
            raise UsageError("--H is required for the multiplicative variant")
        R = nudge_round_multiplicative(M, args.epsilon, args.H)
    out = _outdir(args)
    menu_path = atomic_write(out / "rounded_menu.txt",
                             format_menu(R, f"{args.variant} rounding, epsilon={args.epsilon!r}"))
    r0, r1 = revenue_exact(M, D), revenue_exact(R, D)
    slack = r1 - additive_guarantee(r0, args.epsilon)
    row = [args.variant, args.epsilon, menu_size(M), menu_size(R), r0, r1, slack]
    if args.variant == "additive" and slack < -1e-10:
        raise InvariantError(f"additive rounding guarantee violated by {-slack}")
    header = ["variant", "epsilon", "size_before", "size_after", "rev_before", "rev_after", "guarantee_slack"]
    return _finish(args, "round", header, [row], [menu_path])


def cmd_certify(args):
    from .dist import beta12, iid
    from .duality import certify_gap_coarse, certify_gap_exact, instance_constants
    from .model import menu_size, read_menu
    from .revenue import revenue_exact

    M = read_menu(args.menu)
    rev = revenue_exact(M, iid(beta12()))
    if args.kind == "coarse":
        if args.delta is None:
            raise UsageError("--delta is required for the coarse certificate")
        cert = certify_gap_coarse(M, args.delta)
    else:
        cert = certify_gap_exact(M, args.quad_n)
    a = cert.audit
    nan = math.nan
    row = [Path(args.menu).name, cert.kind, menu_size(M), rev,
           cert.delta if cert.delta is not None else nan,
           cert.deviation_measure if cert.deviation_measure is not None else nan,
           cert.certified_gap, instance_constants().d,
           a.get("z_term", nan), a.get("a_term", nan), a.get("quad_error", nan)]
    if cert.certified_gap < 0:
        raise InvariantError("negative certified gap")
    header = ["menu", "kind", "menu_size", "revenue", "delta", "deviation_measure", "certified_gap", "d",
              "z_term", "a_term", "quad_error"]
    return _finish(args, "certify", header, [row])


def cmd_plapprox(args):
    from .duality import deviation_measure
    from .plapprox import adversaries, greedy_pl_approx, segment_budget

    deltas = args.deltas or list(np.logspace(math.log10(args.dmin), math.log10(args.dmax), args.num))
    rows = []
    for d in deltas:
        d = float(d)
        G = greedy_pl_approx(d)
        advs = adversaries(d, seed=args.seed)
        worst = min((deviation_measure(T, d) for _, T in advs), default=math.nan)
        rows.append([d, segment_budget(d), G.num_segments, worst])
    return _finish(args, "plapprox", ["delta", "budget", "greedy_segments", "min_deviation_measure"], rows)


def cmd_optimize(args):
    from .dist import parse_dist
    from .model import format_menu, menu_size
    from .oracle import opt_menu_search

    D = parse_dist(args.dist)
    res = opt_menu_search(D, args.C, restarts=args.restarts, seed=args.seed)
    menu_path = atomic_write(_outdir(args) / "best_menu.txt",
                             format_menu(res.menu, f"best menu found, C={args.C}, dist={args.dist}"))
    row = [args.dist, args.C, args.seed, menu_size(res.menu), res.revenue]
    return _finish(args, "optimize", ["dist", "C", "seed", "menu_size", "revenue"], [row], [menu_path])


def cmd_oracle(args):
    from .dist import parse_dist
    from .oracle import opt_grid_lp, opt_upper_bound

    D = parse_dist(args.dist)
    res = opt_grid_lp(D, args.n_grid)
    ub = opt_upper_bound(D, args.n_grid)
    mech_path = _outdir(args) / "grid_mechanism.csv"
    mech_path.parent.mkdir(parents=True, exist_ok=True)
    res.mechanism.to_csv(mech_path)
    if res.residual > 1e-8:
        raise InvariantError(f"LP solution violates constraints by {res.residual}")
    row = [args.dist, args.n_grid, res.value, res.residual, ub]
    return _finish(args, "oracle", ["dist", "n_grid", "lp_value", "lp_residual", "upper_bound"], [row], [mech_path])


def cmd_hazard(args):
    from .dist import hazard_check, parse_dist

    h = hazard_check(parse_dist(args.dist), args.grid_n)
    row = [args.dist, args.grid_n, h.satisfied, h.min_value, h.argmin.v1, h.argmin.v2]
    return _finish(args, "hazard", ["dist", "grid_n", "satisfied", "min_value", "argmin_v1", "argmin_v2"], [row])


def cmd_curve(args):
    from .dist import parse_dist
    from .oracle import curve, loglog_slope

    D = parse_dist(args.dist)
    certify = D.spec() == "iid:beta12"
    rows = curve(D, args.cmax, seed=args.seed, restarts=args.restarts, n_grid=args.n_grid, certify=certify)
    gaps = [r.gap_vs_upper_bound for r in rows]
    if any(b > a + 1e-12 for a, b in zip(gaps, gaps[1:])):
        raise InvariantError("gap to the upper bound increased with C")
    slope = loglog_slope([r.C for r in rows], gaps)
    if not -4.0 <= slope <= -0.4:
        sys.stderr.write(f"warning: log-log slope {slope:.3f} outside the band [-4, -0.4]\n")
    out = [[r.C, r.revenue, r.gap_vs_upper_bound, r.cert_exact if r.cert_exact is not None else math.nan]
           for r in rows]
    return _finish(args, "curve", ["C", "best_revenue", "gap_vs_upper_bound", "cert_exact"], out)


def cmd_witness(args):
    from .rounding import find_discount_witness, save_witness

    w = find_discount_witness(args.dists, epsilons=tuple(args.epsilons))
    if w is None:
        raise InvariantError("no discount-necessity witness found")
    path = save_witness(w, _outdir(args) / "discount_witness.json")
    row = [w.dist, w.epsilon, w.rev_original, w.rev_rounded_only, w.rev_nudged, w.loss_without_discount]
    header = ["dist", "epsilon", "rev_original", "rev_rounded_only", "rev_nudged", "loss_without_discount"]
    return _finish(args, "witness", header, [row], [path])


def cmd_plot(args):
    from .svgplot import plot_csv

    out = Path(args.out) if args.out else Path(args.csv).with_suffix(".svg")
    plot_csv(args.csv, out, args.x, args.y, args.loglog)
    sys.stdout.write(f"{out}\n")
    return 0


def cmd_selftest(args):
    from . import selftest

    failures = selftest.run(verbose=True)
    if failures:
        raise InvariantError(f"{len(failures)} self-test check(s) failed: {', '.join(failures)}")
    return 0


def cmd_replay(args):
    manifest = json.loads(Path(args.manifest).read_text())
    flags = dict(manifest["flags"])
    flags["command"] = manifest["command"]
    argv = _argv_from_flags(flags)
    if args.outdir:
        argv = ["--outdir", args.outdir] + argv
    return main(argv)


def _argv_from_flags(flags: dict) -> list[str]:
    """Rebuild a command line from manifest flags."""
    command = flags.pop("command")
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[command]
    argv = [command]
    for action in sub._actions:
        if not action.option_strings or action.dest not in flags:
            continue
        v = flags[action.dest]
        opt = action.option_strings[-1]
        if isinstance(action, argparse._StoreTrueAction):
            if v:
                argv.append(opt)
        elif v is None:
            continue
        elif isinstance(v, list):
            argv.append(opt)
            argv.extend(str(x) for x in v)
        else:
            argv.extend([opt, repr(v) if isinstance(v, float) else str(v)])
    return argv


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="menusize", description="Menu-size experiments for two-good auctions.")
    p.add_argument("--outdir", help=f"output directory (default ${ENV_OUTDIR} or ./{DEFAULT_OUTDIR})")
    p.add_argument("--config", help="key=value file supplying defaults for subcommand flags")
    sp = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sp.add_parser("eval", help="exact and Monte Carlo revenue of a menu")
    s.add_argument("--menu", required=True)
    s.add_argument("--dist", required=True)
    s.add_argument("--mc-n", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_eval)

    s = sp.add_parser("round", help="nudge-and-round a menu")
    s.add_argument("--menu", required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--variant", choices=("additive", "full", "multiplicative"), default="additive")
    s.add_argument("--H", type=float)
    s.add_argument("--dist", default="iid:uniform")
    s.set_defaults(func=cmd_round)

    s = sp.add_parser("certify", help="duality-gap certificate for two Beta(1,2) goods")
    s.add_argument("--menu", required=True)
    s.add_argument("--kind", choices=("coarse", "exact"), default="exact")
    s.add_argument("--delta", type=float)
    s.add_argument("--quad-n", type=int, default=64)
    s.set_defaults(func=cmd_certify)

    s = sp.add_parser("plapprox", help="segment budget and greedy approximation over a delta sweep")
    s.add_argument("--deltas", type=float, nargs="*")
    s.add_argument("--dmin", type=float, default=1e-9)
    s.add_argument("--dmax", type=float, default=1e-6)
    s.add_argument("--num", type=int, default=7)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_plapprox)

    s = sp.add_parser("optimize", help="search for the best menu of a given size")
    s.add_argument("--dist", required=True)
    s.add_argument("--C", type=int, required=True)
    s.add_argument("--restarts", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_optimize)

    s = sp.add_parser("oracle", help="discretized LP value and certified upper bound on OPT")
    s.add_argument("--dist", required=True)
    s.add_argument("--n-grid", type=int, default=8)
    s.set_defaults(func=cmd_oracle)

    s = sp.add_parser("hazard", help="check the hazard condition of a distribution")
    s.add_argument("--dist", required=True)
    s.add_argument("--grid-n", type=int, default=101)
    s.set_defaults(func=cmd_hazard)

    s = sp.add_parser("curve", help="best revenue and certified gap against menu size")
    s.add_argument("--dist", required=True)
    s.add_argument("--cmax", type=int, default=6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restarts", type=int, default=2)
    s.add_argument("--n-grid", type=int, default=12)
    s.set_defaults(func=cmd_curve)

    s = sp.add_parser("witness", help="find and save a menu where rounding without the discount loses > eps")
    s.add_argument("--dists", nargs="+", default=["iid:uniform", "iid:beta12", "iid:poly:" + ",".join(["0"] * 30 + ["1"])])
    s.add_argument("--epsilons", type=float, nargs="+", default=[0.2, 0.1])
    s.set_defaults(func=cmd_witness)

    s = sp.add_parser("plot", help="SVG line plot of two CSV columns")
    s.add_argument("--csv", required=True)
    s.add_argument("--x")
    s.add_argument("--y")
    s.add_argument("--loglog", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_plot)

    s = sp.add_parser("selftest", help="run the built-in invariant checks")
    s.set_defaults(func=cmd_selftest)

    s = sp.add_parser("replay", help="re-run the command recorded in a manifest")
    s.add_argument("--manifest", required=True)
    s.set_defaults(func=cmd_replay)
    return p


def load_config(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(parser, argv, cfg):
    """Config entries become defaults of the chosen subcommand; explicit flags still win."""
    sub = parser._subparsers._group_actions[0].choices
    for name, sp in sub.items():
        known = {a.dest: a for a in sp._actions}
        defaults = {}
        for k, v in cfg.items():
            if k in known:
                a = known[k]
                if a.type is not None:
                    v = a.type(v)
                if a.required:
                    a.required = False
                defaults[k] = v
        sp.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre, _ = _peek_config(argv)
        if pre:
            _apply_config(parser, argv, load_config(pre))
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return 1
    except InvariantError as e:
        sys.stderr.write(f"invariant violated: {e}\n")
        return 3
    except AssertionError as e:
        sys.stderr.write(f"invariant violated: {e}\n")
        return 3
    except (ValueError, FileNotFoundError, RuntimeError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


def _peek_config(argv):
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1], i
        if a.startswith("--config="):
            return a.split("=", 1)[1], i
    return None, None


if __name__ == "__main__":
    sys.exit(main())
