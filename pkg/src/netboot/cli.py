"""Command-line entry point ``netboot``.

Exit codes: 0 success, 2 invalid input or configuration, 3 degenerate
bootstrap run under ``--strict``.  ``--config file.json`` supplies defaults
for any flag of a subcommand (keys use underscores).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .bootstrap import bootstrap_ci, choose_q
from .community import bethe_hessian_k, ecv_auc_k
from .errors import DegenerateRunWarning, NetbootError
from .generators import SbmParams, generate_er, generate_sbm
from .graph import read_edge_list, write_edge_list
from .harness import DEFAULT_GRID, ExperimentConfig, analyze_networks, run_experiment, write_csv
from .harness import REALDATA_COLUMNS
from .regression import beta_uncertainty, stability_selection
from .statistics import STATISTIC_NAMES, get_statistic
from .subsampling import SCHEMES, SamplingPlan, pair_sample
from . import rng as _rng

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def read_design(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Covariates and response from a CSV with a header row.

    The response is the column named ``y`` if present, else the last column.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header and at least one data row")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=np.float64)
    yi = header.index("y") if "y" in header else len(header) - 1
    xi = [i for i in range(len(header)) if i != yi]
    return data[:, xi], data[:, yi], [header[i] for i in xi]


def _graph(args):
    return read_edge_list(args.input, one_based=args.one_based)


def _statistic(args, g):
    kwargs = {}
    if args.statistic == "cohesion_beta":
        if not args.data:
            raise ValueError("cohesion_beta needs --data")
        X, Y, _ = read_design(args.data)
        kwargs = dict(X=X, Y=Y, lambda1=args.lambda1)
    elif args.statistic == "triangle_density" and args.triples:
        kwargs = dict(triples=args.triples)
    return get_statistic(args.statistic, **kwargs)


def _emit(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_generate(args):
    if args.model == "er":
        g = generate_er(args.n, args.rho, args.seed)
    else:
        g = generate_sbm(SbmParams.equal(args.n, args.K, args.rho, args.t), args.seed)
    write_edge_list(g, args.out)
    print(f"wrote {g.m} edges on {g.n} nodes to {args.out}")


def cmd_ci(args):
    g = _graph(args)
    run = bootstrap_ci(g, _statistic(args, g), args.scheme, args.q, args.B, args.alpha, args.seed)
    _emit(run.to_dict(), args.out)


def cmd_choose_q(args):
    g = _graph(args)
    sel = choose_q(g, _statistic(args, g), args.scheme, args.candidates, args.B, args.alpha,
                   args.seed, B_inner=args.B_inner)
    if args.csv:
        rows = [dict(q=q, width=w, coverage=c, chosen=bool(q == sel.chosen))
                for q, w, c in zip(sel.candidates, sel.mean_widths, sel.coverages)]
        write_csv(args.csv, ["q", "width", "coverage", "chosen"], rows)
    _emit(sel.to_dict(), args.out)


def cmd_community(args):
    g = _graph(args)
    if args.method == "bh":
        est = bethe_hessian_k(g, k_max=args.k_max)
    else:
        pg = pair_sample(g, SamplingPlan("pair", args.q), _rng.stream(args.seed, _rng.BOOT))
        est = ecv_auc_k(pg, args.k_max)
    out = {"k_hat": est.k_hat, "method": est.method}
    if args.diagnostics:
        out["diagnostics"] = {k: np.asarray(v).tolist() if isinstance(v, np.ndarray) else v
                              for k, v in est.diagnostics.items()}
    _emit(out, args.out)


def cmd_regress(args):
    g = _graph(args)
    X, Y, names = read_design(args.data)
    res = beta_uncertainty(g, X, Y, args.scheme, args.q, args.lambda1, args.B, args.alpha,
                           args.seed, dropped=args.dropped)
    rows = res.to_rows()
    for r in rows:
        r["name"] = names[r["coordinate"]]
    cols = ["coordinate", "name", "estimate", "lower", "upper", "width"]
    if args.out:
        write_csv(args.out, cols, rows)
    else:
        _print_csv(cols, rows)


def _print_csv(cols, rows):
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([r[c] for c in cols])


def cmd_stabsel(args):
    g = _graph(args)
    X, Y, names = read_design(args.data)
    res = stability_selection(g, X, Y, args.lambda1, args.lambda2, args.scheme, args.q,
                              args.B, args.seed, n_lambda=args.n_lambda)
    rows = [dict(predictor=names[j], frequency=float(f)) for j, f in enumerate(res.frequencies)]
    if args.out:
        write_csv(args.out, ["predictor", "frequency"], rows)
    else:
        _print_csv(["predictor", "frequency"], rows)


def cmd_experiment(args):
    cfg = ExperimentConfig.from_json(args.config_file)
    paths = run_experiment(cfg, args.output_dir)
    for name, p in paths.items():
        print(f"{name}: {p}")


def cmd_realdata(args):
    graphs = [(Path(p).stem, read_edge_list(p, one_based=args.one_based)) for p in args.inputs]
    report = analyze_networks(graphs, args.schemes, args.candidates, args.B, args.B_inner,
                              args.alpha, args.seed, args.log_n)
    if args.out:
        write_csv(args.out, REALDATA_COLUMNS, report.rows())
    else:
        _print_csv(REALDATA_COLUMNS, report.rows())


def _common(p, graph=True):
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="exit 3 on a degenerate bootstrap run")
    if graph:
        p.add_argument("--input", required=True, help="edge list file")
        p.add_argument("--one-based", action="store_true", help="node ids start at 1")


def _boot(p):
    p.add_argument("--B", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.10)


def _stat(p):
    p.add_argument("--statistic", choices=STATISTIC_NAMES, default="triangle_density")
    p.add_argument("--data", help="CSV of covariates and response (cohesion_beta)")
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--triples", choices=("exact", "expected"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netboot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw an ER or SBM graph")
    _common(p, graph=False)
    p.add_argument("--model", choices=("er", "sbm"), default="er")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ci", help="percentile bootstrap interval from subsamples")
    _common(p)
    _boot(p)
    _stat(p)
    p.add_argument("--scheme", choices=SCHEMES, default="node")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--out", help="JSON output (default stdout)")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("choose-q", help="double bootstrap choice of q")
    _common(p)
    _boot(p)
    _stat(p)
    p.add_argument("--scheme", choices=SCHEMES, default="node")
    p.add_argument("--candidates", type=_floats, default=list(DEFAULT_GRID))
    p.add_argument("--B-inner", dest="B_inner", type=int)
    p.add_argument("--csv", help="per-candidate CSV output")
    p.add_argument("--out", help="JSON output (default stdout)")
    p.set_defaults(func=cmd_choose_q)

    p = sub.add_parser("community", help="estimate the number of communities")
    _common(p)
    p.add_argument("--method", choices=("bh", "ecv"), default="bh")
    p.add_argument("--q", type=float, default=0.9, help="observed pair fraction for ecv")
    p.add_argument("--k-max", dest="k_max", type=int, default=6)
    p.add_argument("--diagnostics", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_community)

    p = sub.add_parser("regress", help="intervals for cohesion regression coefficients")
    _common(p)
    _boot(p)
    p.add_argument("--data", required=True)
    p.add_argument("--scheme", choices=SCHEMES + ("naive",), default="node")
    p.add_argument("--q", type=float, default=0.1)
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--dropped", choices=("pad", "exclude"), default="pad")
    p.add_argument("--out")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("stabsel", help="stability selection with the cohesion lasso")
    _common(p)
    p.add_argument("--B", type=int, default=100)
    p.add_argument("--data", required=True)
    p.add_argument("--scheme", choices=SCHEMES, default="node")
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--lambda2", type=_floats, help="comma-separated path (default: automatic)")
    p.add_argument("--n-lambda", dest="n_lambda", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stabsel)

    p = sub.add_parser("experiment", help="run a configured experiment")
    p.add_argument("config_file", help="experiment JSON")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("realdata", help="intervals and OLS residuals for a set of networks")
    _common(p, graph=False)
    _boot(p)
    p.add_argument("inputs", nargs="+", help="edge list files")
    p.add_argument("--one-based", action="store_true")
    p.add_argument("--schemes", type=lambda s: s.split(","), default=list(SCHEMES))
    p.add_argument("--candidates", type=_floats, default=list(DEFAULT_GRID))
    p.add_argument("--B-inner", dest="B_inner", type=int)
    p.add_argument("--log-n", dest="log_n", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_realdata)
    return parser


def _apply_config(parser, argv):
    """Parse ``argv`` with ``--config`` values as defaults of the chosen subcommand."""
    argv = sys.argv[1:] if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if not a.startswith("-")), None)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if known.config and command in sub.choices and command != "experiment":
        conf = json.loads(Path(known.config).read_text())
        sp = sub.choices[command]
        dests = {a.dest for a in sp._actions}
        unknown = sorted(set(conf) - dests)
        if unknown:
            raise ValueError(f"--config: unknown keys {unknown}")
        for a in sp._actions:
            if a.dest in conf:
                a.required = False
        sp.set_defaults(**conf)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DegenerateRunWarning)
            args = _apply_config(parser, argv)
            args.func(args)
    except (NetbootError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"netboot: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in caught:
        if not issubclass(w.category, DegenerateRunWarning):
            warnings.showwarning(w.message, w.category, w.filename, w.lineno)
    if any(issubclass(w.category, DegenerateRunWarning) for w in caught):
        print("netboot: warning: degenerate bootstrap run", file=sys.stderr)
        if getattr(args, "strict", False):
            return EXIT_DEGENERATE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
