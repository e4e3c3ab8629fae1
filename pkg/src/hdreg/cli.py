"""Command-line front end: ``hdreg bench|cell|problem|theory|version``.

Exit codes: 0 success, 1 invalid arguments, 2 numerical failure. Output
files go to ``--out``, else ``$HDREG_OUTPUT_DIR``, else the config's
``output_dir``, and are named ``{subcommand}-{seed}-{hash}.{ext}``.
"""

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

import hdreg
from hdreg import bench, problems, theory
from hdreg import config as cfg
from hdreg.errors import InvalidInputError, NumericalError

OUTPUT_ENV = "HDREG_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _split(values, conv=str):
    if values is None:
        return None
    out = []
    for v in values:
        out.extend(conv(p.strip()) for p in v.split(",") if p.strip())
    return tuple(out)


def _add_grid_flags(p, single):
    nargs = {} if single else {"action": "append"}
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--problem", **nargs, help="problem name" + ("" if single else " (repeatable, comma lists ok)"))
    p.add_argument("--dim", **nargs)
    p.add_argument("--snr", **nargs)
    p.add_argument("--noise", **nargs, help="gaussian or pareto")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--basis", choices=("spectral", "coordinate"), help="noise basis")
    p.add_argument("--format", action="append", help="csv, json or md (repeatable)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="parallel worker processes")


def build_parser():
    parser = _Parser(prog="hdreg", description="Heuristic discrepancy benchmark and theory checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bench", help="run a grid of cells")
    _add_grid_flags(b, single=False)
    b.add_argument("--dry-run", action="store_true", help="list the cells without running them")
    b.add_argument("--stamp", action="store_true", help="record the current time in the JSON metadata")

    c = sub.add_parser("cell", help="run a single cell")
    _add_grid_flags(c, single=True)

    pr = sub.add_parser("problem", help="problem utilities")
    prs = pr.add_subparsers(dest="action", required=True, parser_class=_Parser)
    dump = prs.add_parser("dump", help="write K, x, y and singular values to CSV")
    dump.add_argument("--name", required=True, choices=problems.PROBLEMS)
    dump.add_argument("--dim", required=True, type=int)
    dump.add_argument("--out")

    th = sub.add_parser("theory", help="theory checks (JSON reports)")
    ths = th.add_subparsers(dest="action", required=True, parser_class=_Parser)
    tc = ths.add_parser("constants")
    tc.add_argument("--q", type=float, default=2.0)
    tc.add_argument("--eta", type=float, default=2.0)
    tc.add_argument("--epsilon", type=float, default=0.25)
    tn = ths.add_parser("concentration")
    tn.add_argument("--kind", choices=("chi2", "residual"), default="chi2")
    tn.add_argument("--M", type=int, default=50)
    tn.add_argument("--epsilon", type=float, default=0.5)
    tn.add_argument("--m-max", type=int)
    tn.add_argument("--kappa", type=int, action="append")
    tn.add_argument("--law", choices=("gaussian", "pareto"), default="gaussian")
    tn.add_argument("--dim", type=int, default=1024)
    tn.add_argument("--trials", type=int, default=10_000)
    tn.add_argument("--seed", type=int, default=0)
    tx = ths.add_parser("counterexample")
    tx.add_argument("--delta", type=float, default=1e-3)
    tb = ths.add_parser("bayes")
    tb.add_argument("--q", type=float, default=2.0)
    tb.add_argument("--eta", type=float, default=2.0)
    tb.add_argument("--mode", choices=("deterministic-one", "gaussian"), default="deterministic-one")
    tb.add_argument("--deltas", default="1e-2,1e-2.75,1e-3.5,1e-4.25,1e-5",
                    help="comma list; entries like 1e-2.75 mean 10**-2.75")
    tb.add_argument("--runs", type=int, default=50)
    tb.add_argument("--seed", type=int, default=0)
    for p in (tc, tn, tx, tb):
        p.add_argument("--out")

    sub.add_parser("version", help="print the package version")
    return parser


def _parse_delta(text):
    mant, sep, exp = text.lower().partition("e")
    if sep and "." in exp:
        return float(mant) * 10.0 ** float(exp)
    return float(text)


def _output_dir(flag, config_dir="."):
    return Path(flag or os.environ.get(OUTPUT_ENV) or config_dir)


def _write(out_dir, stem, ext, text):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.{ext}"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _short_hash(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:12]


def _resolve_config(args, single):
    conf = cfg.load_config(args.config) if args.config else cfg.Config()
    wrap = (lambda v: None if v is None else (v,)) if single else (lambda v: v)
    return cfg.override(
        conf,
        problems=_split(wrap(args.problem)),
        dims=_split(wrap(args.dim), int),
        snrs=_split(wrap(args.snr), float),
        laws=_split(wrap(args.noise)),
        runs=args.runs, tau=args.tau, seed=args.seed, noise_basis=args.basis,
        formats=_split(args.format), workers=args.workers,
    )


def _run_bench(args, single):
    conf = _resolve_config(args, single)
    if single and any(len(axis) != 1 for axis in (conf.problems, conf.dims, conf.snrs, conf.laws)):
        raise InvalidInputError("cell needs exactly one problem, dim, snr and noise law")
    if getattr(args, "dry_run", False):
        specs = bench.grid_specs(conf.problems, conf.dims, conf.snrs, conf.laws,
                                 conf.runs, conf.seed, conf.tau, conf.noise_basis)
        for s in specs:
            print(f"{s.problem},{s.law},{s.D},{bench.fmt(s.snr)},{s.runs}")
        print(f"# {len(specs)} cells")
        return 0
    timestamp = None
    if getattr(args, "stamp", False):
        import time
        timestamp = int(time.time())
    report = bench.run_grid(conf.problems, conf.dims, conf.snrs, conf.laws, conf.runs,
                            conf.seed, conf.tau, conf.noise_basis, conf.workers, timestamp)
    stem = f"{args.command}-{conf.seed}-{cfg.config_hash(conf)}"
    out_dir = _output_dir(args.out, conf.output_dir)
    for i, fmt in enumerate(conf.formats):
        text = bench.WRITERS[fmt](report)
        path = _write(out_dir, stem, fmt, text)
        if i == 0:
            sys.stdout.write(text)
        print(f"wrote {path}", file=sys.stderr)
    failed = [err for _, _, err in report.cells if err]
    for err in failed:
        print(f"cell failed: {err}", file=sys.stderr)
    return 0


def _problem_dump(args):
    prob = problems.generate(args.name, args.dim)
    out_dir = _output_dir(args.out)
    stem = f"problem-0-{_short_hash({'name': args.name, 'dim': args.dim})}"
    lines = ["j,x_true,y_true,sigma"]
    lines += [f"{j + 1},{prob.x_true[j]!r},{prob.y_true[j]!r},{prob.sigmas[j]!r}" for j in range(prob.dim)]
    vec = _write(out_dir, stem, "csv", "\n".join(lines) + "\n")
    mat = _write(out_dir, stem + "-K", "csv",
                 "\n".join(",".join(repr(float(v)) for v in row) for row in prob.forward) + "\n")
    print(f"wrote {vec}\nwrote {mat}")
    return 0


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _theory(args):
    params = {k: v for k, v in vars(args).items() if k not in ("out", "command")}
    if args.action == "constants":
        report = theory.compute_constants(args.q, args.eta, args.epsilon).to_dict()
    elif args.action == "concentration":
        if args.kind == "chi2":
            m_max = args.m_max or 50 * args.M
            freq, bound = theory.chi_square_sup_tail(args.M, args.epsilon, args.trials, m_max, args.seed)
            report = {"kind": "chi2", "M": args.M, "epsilon": args.epsilon, "trials": args.trials,
                      "m_max": m_max, "frequency": freq, "bound": bound, "below_bound": freq <= bound,
                      "note": "supremum truncated at m_max, which can only lower the frequency"}
        else:
            kappas = args.kappa or [16, 64, 256]
            freqs = [theory.residual_concentration(k, args.epsilon, args.law, args.trials, args.dim, args.seed)
                     for k in kappas]
            report = {"kind": "residual", "law": args.law, "epsilon_prime": args.epsilon,
                      "dim": args.dim, "trials": args.trials, "kappa": kappas, "frequency": freqs}
    elif args.action == "counterexample":
        report = theory.counterexample_check(args.delta)
    else:
        deltas = [_parse_delta(d) for d in args.deltas.split(",") if d.strip()]
        report = theory.bayes_rate_study(args.q, args.eta, args.mode, deltas, args.runs, args.seed)
    text = json.dumps(_json_ready(report), indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    seed = params.get("seed", 0)
    _write(_output_dir(args.out), f"theory-{args.action}-{seed}-{_short_hash(params)}", "json", text)
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "version":
            print(hdreg.__version__)
            return 0
        if args.command in ("bench", "cell"):
            return _run_bench(args, single=args.command == "cell")
        if args.command == "problem":
            return _problem_dump(args)
        return _theory(args)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    except (InvalidInputError, ValueError) as exc:
        print(f"hdreg: invalid input: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ArithmeticError) as exc:
        print(f"hdreg: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
