"""Command-line front end. Angles are given in degrees."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from . import coincidence as co
from . import inequalities as ineq
from . import moments as mo
from . import quadruples as qd
from . import quantum as qt
from . import simulators as sim
from .data import PairDataSet, frequencies, read_pairs, read_raw, summary, truncate_equal, write_pairs, write_raw
from .rng import RandomStream

EXIT_OK, EXIT_USAGE, EXIT_ANALYSIS = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# --- helpers ----------------------------------------------------------------------


def _angles(text: str, count: int = 4) -> list[float]:
    vals = [math.radians(float(v)) for v in text.split(",")]
    if len(vals) != count:
        raise UsageError(f"expected {count} comma-separated angles")
    return vals


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config_hash(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()


def write_manifest(prefix: str, argv: list[str], args: argparse.Namespace, outputs: list[Path]) -> Path:
    manifest = {
        "command": list(argv),
        "seed": getattr(args, "seed", None),
        "config_hash": _config_hash(args),
        "version": __version__,
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path = Path(f"{prefix}_manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _report_opts(parser) -> None:
    parser.add_argument("--out", help="output prefix; stdout when absent")
    parser.add_argument("--format", choices=["json", "csv"], default="json")


def _flatten(obj, key: str = ""):
    """(dotted key, value) rows for the csv report format."""
    if isinstance(obj, dict):
        for k in sorted(obj, key=str):
            yield from _flatten(obj[k], f"{key}.{k}" if key else str(k))
    elif isinstance(obj, (list, tuple, np.ndarray)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{key}.{i}" if key else str(i))
    else:
        yield key, obj


def _emit(obj, args, argv, name: str = "result") -> None:
    fmt = getattr(args, "format", "json")
    if fmt == "csv":
        obj = json.loads(json.dumps(obj, default=_jsonable))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(_flatten(obj))
        text = buf.getvalue()
    else:
        text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"
    if getattr(args, "out", None):
        path = Path(f"{args.out}_{name}.{fmt}")
        path.write_text(text, encoding="utf-8")
        write_manifest(args.out, argv, args, [path])
    else:
        sys.stdout.write(text)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return str(v)


# --- simulate -------------------------------------------------------------------------


def _cmd_simulate(args, argv) -> int:
    if args.n <= 0:
        raise UsageError("--n must be positive")
    a, b, c, d = _angles(args.angles)
    stream = RandomStream(args.seed)
    conds = sim.quartet_conditions(a, b, c, d)
    model = args.model
    outputs: list[Path] = []
    if model in ("timetag",):
        left, right = sim.timetag_raw(conds, args.n, args.d, args.t0, args.mode, stream)
        for tag, s in (("left", left), ("right", right)):
            p = Path(f"{args.out}_{tag}.csv")
            write_raw(p, s)
            outputs.append(p)
        write_manifest(args.out, argv, args, outputs)
        return EXIT_OK
    if model == "singlet":
        sets = sim.sample_quartet(conds, args.n, lambda cd, n, g: sim.sample_singlet(cd, n, args.q, g), stream)
    elif model == "correlated":
        cs = (args.c, -args.c, args.c, args.c)
        sets = tuple(sim.sample_correlated(cd, args.n, cv, g) for cd, cv, g in zip(conds, cs, sim.quartet_generators(stream)))
    elif model == "photon":
        sets = sim.sample_quartet(
            conds,
            args.n,
            lambda cd, n, g: sim.sample_cells(cd, n, qt.photon_cell_probabilities(args.r, cd.setting1, cd.setting2), g),
            stream,
        )
    elif model == "random":
        sets = sim.sample_quartet(conds, args.n, lambda cd, n, g: sim.sample_cells(cd, n, [0.25] * 4, g), stream)
    elif model in ("bell_toy", "bell_toy_malus"):
        sets = sim.bell_toy_quartet(conds, args.n, stream, model == "bell_toy_malus", args.counterfactual)
    elif model == "local_threshold":
        gens = sim.quartet_generators(stream)
        sets = tuple(sim.local_threshold(cd, args.n, args.d, args.t0, args.w, g) for cd, g in zip(conds, gens))
        sets = truncate_equal(*sets)
    elif model == "eeprb":
        sets = sim.eeprb_generate(*(qt.planar(v) for v in (a, b, c, d)), args.n, stream)
    elif model == "finite_lambda":
        sets, _ = sim.finite_lambda(conds, args.n, args.k, args.rule, stream)
    else:
        raise UsageError(f"unknown model {model}")
    for s, ds in enumerate(sets, start=1):
        p = Path(f"{args.out}_s{s}.csv")
        write_pairs(p, ds)
        outputs += [p, p.with_suffix(".csv.json")]
    write_manifest(args.out, argv, args, outputs)
    return EXIT_OK


# --- analyze / quadruples ---------------------------------------------------------------


def analyze_sets(sets: tuple[PairDataSet, ...]) -> dict:
    sets = truncate_equal(*sets)
    table = qd.count_table(*sets)
    sol = qd.delta_lp(table)
    corr = [summary(d).e12 for d in sets]
    delta = float(sol.delta)
    report = ineq.model_free_check(corr, delta)
    freqs = [frequencies(d) for d in sets]
    return {
        "n": table.n,
        "e1": [summary(d).e1 for d in sets],
        "e2": [summary(d).e2 for d in sets],
        "e12": corr,
        "S": report.s_chsh,
        "delta": delta,
        "delta_fraction": str(sol.delta),
        "delta_naive": float(qd.delta_naive(*sets)),
        "delta_cellwise": float(qd.delta_cellwise(table)),
        "bound": report.bound,
        "lhs_minus": report.lhs_minus,
        "lhs_plus": report.lhs_plus,
        "satisfied": report.satisfied,
        "ch_data": {f"{x},{y}": ineq.ch_data(*freqs, x, y) for x in (1, -1) for y in (1, -1)},
        "m": list(sol.m),
    }


def _load_sets(args) -> tuple[PairDataSet, ...]:
    if args.pairs:
        if len(args.pairs) != 4:
            raise UsageError("--pairs needs four files")
        return tuple(read_pairs(p) for p in args.pairs)
    if args.prefix:
        return tuple(read_pairs(f"{args.prefix}_s{s}.csv") for s in (1, 2, 3, 4))
    raise UsageError("give --prefix or --pairs")


def _cmd_analyze(args, argv) -> int:
    _emit(analyze_sets(_load_sets(args)), args, argv, "analysis")
    return EXIT_OK


def _cmd_quadruples(args, argv) -> int:
    if args.counts:
        counts = json.loads(Path(args.counts).read_text(encoding="utf-8"))
        arr = np.array(counts, dtype=np.int64).reshape(4, 4)
        table = qd.CountTable4(arr, int(arr[0].sum()))
        if args.method != "lp":
            raise UsageError("a count table supports --method lp only")
    else:
        sets = truncate_equal(*_load_sets(args))
        table = qd.count_table(*sets)
        if args.method != "lp":
            value = {
                "naive": lambda: qd.delta_naive(*sets),
                "cellwise": lambda: qd.delta_cellwise(table),
                "brute": lambda: qd.delta_bruteforce(*sets),
            }[args.method]()
            _emit({"method": args.method, "delta": float(value), "delta_fraction": str(value)}, args, argv, "quadruples")
            return EXIT_OK
    sol = qd.delta_lp(table)
    out = {
        "n": sol.n,
        "m": list(sol.m),
        "U": sol.U,
        "u": {f"{s},{x},{y}": v for (s, x, y), v in sol.u.items()},
        "delta": float(sol.delta),
        "delta_fraction": str(sol.delta),
        "delta_cellwise": float(qd.delta_cellwise(table)),
        "four_minus_two_delta": 4 - 2 * float(sol.delta),
    }
    _emit(out, args, argv, "quadruples")
    return EXIT_OK


# --- coincidence ---------------------------------------------------------------------


def _cmd_coincidence(args, argv) -> int:
    left = read_raw(args.left, 1)
    right = read_raw(args.right, 2)
    conds = None
    if args.angles:
        conds = sim.quartet_conditions(*_angles(args.angles))
    rows = co.w_scan(left, right, co.parse_grid(args.wscan), args.pairing, conds)
    header = ["W", "S"] + [f"e12_{s}" for s in range(1, 5)]
    header += [f"e1_{s}" for s in range(1, 5)] + [f"e2_{s}" for s in range(1, 5)]
    header += [f"kept_{s}" for s in range(1, 5)]
    out = Path(args.out)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(r.w), repr(r.s), *map(repr, r.e12), *map(repr, r.e1), *map(repr, r.e2), *r.pairs_kept])
    outputs = [out]
    if len(rows) >= 2:
        drift = Path(f"{out.with_suffix('')}_drift.json")
        drift.write_text(json.dumps([asdict(e) for e in co.drift_diagnostic(rows)], indent=2) + "\n", encoding="utf-8")
        outputs.append(drift)
    write_manifest(str(out.with_suffix("")), argv, args, outputs)
    return EXIT_OK


# --- fine -------------------------------------------------------------------------------


def _parse_moment_key(key: str) -> tuple[int, ...]:
    digits = key.upper().lstrip("K")
    if not digits.isdigit():
        raise UsageError(f"bad moment name {key!r}")
    return tuple(int(ch) for ch in digits)


def _cmd_fine(args, argv) -> int:
    raw = json.loads(Path(args.moments).read_text(encoding="utf-8"))
    k = {_parse_moment_key(name): float(v) for name, v in raw.items()}
    for key in ((1,), (2,), (3,), (4,), (1, 3), (1, 4), (2, 3), (2, 4)):
        if key not in k:
            raise UsageError(f"missing moment K{''.join(map(str, key))}")
    report: dict = {}
    try:
        lo, hi = mo.lemma_I_interval(k)
    except mo.NoDistributionError as exc:
        report = {"status": "empty", "error": str(exc), "violations": exc.detail}
        _emit(report, args, argv, "fine")
        return EXIT_ANALYSIS
    bivs = []
    for i, j in ((1, 3), (1, 4), (2, 3), (2, 4)):
        ok, f = mo.theorem_I(mo.MomentSet2(k[(i,)], k[(j,)], k[(i, j)]))
        if not ok:
            raise ValueError(f"no bivariate for K{i}, K{j}, K{i}{j}")
        bivs.append(f)
    table = mo.pipeline_fine(*bivs)
    km = mo.moments(table)
    report = {
        "status": "ok",
        "k34_interval": [lo, hi],
        "table": {
            "".join("+" if s == 0 else "-" for s in idx): float(table[idx]) for idx in np.ndindex(2, 2, 2, 2)
        },
        "moments": {"K" + "".join(map(str, key)): v for key, v in km.items()},
    }
    _emit(report, args, argv, "fine")
    return EXIT_OK


# --- qt -----------------------------------------------------------------------------------


def _cmd_qt(args, argv) -> int:
    if args.qt_cmd == "nogo":
        valid, eig = qt.nogo_check(args.q)
        out = {"q": args.q, "valid": valid, "eigenvalues": eig.tolist()}
    elif args.qt_cmd == "circuit":
        al, be = math.radians(args.alpha), math.radians(args.beta)
        c = qt.singlet_circuit_native(al, be) if args.transpiled else qt.singlet_circuit(al, be)
        probs = qt.circuit_probabilities(c)
        e = qt.circuit_expectations(c)
        out = {
            "probabilities": {f"{b0}{b1}": v for (b0, b1), v in probs.items()},
            "e1": e.e1,
            "e2": e.e2,
            "e12": e.e12,
            "equivalence": qt.transpile_equivalence(qt.singlet_circuit(al, be), qt.singlet_circuit_native(al, be)),
        }
    elif args.qt_cmd == "cirelson":
        best, arg = qt.cirelson_grid_search(args.points)
        out = {"max": best, "angles_deg": [math.degrees(v) for v in arg], "bound": 2 * math.sqrt(2)}
    else:
        a, b, c, d = _angles(args.angles)
        pairs = ((a, c), (a, d), (b, c), (b, d))
        corr = [qt.photon_correlation(args.r, x, y) for x, y in pairs]
        cells = [qt.photon_cell_probabilities(args.r, x, y) for x, y in pairs]
        ch = cells[0][0] - cells[3][0] - cells[2][2] - cells[1][1]
        out = {"e12": corr, "S": ineq.chsh_function(corr), "ch": ch}
    _emit(out, args, argv, "qt")
    return EXIT_OK


# --- eberhard --------------------------------------------------------------------------------


def _cmd_eberhard(args, argv) -> int:
    if len(args.counts) != 4 or len(args.trials) != 4:
        raise UsageError("need four counts and four trial numbers")
    j, upper = ineq.eberhard_counts(*args.counts, args.trials)
    out = {
        "rescaled": ineq.eberhard_rescaled(args.counts, args.trials),
        "j_over_n": j,
        "delta_upper": upper,
    }
    _emit(out, args, argv, "eberhard")
    return EXIT_OK


# --- parser ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eprb", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate four datasets or two raw streams")
    s.add_argument(
        "--model",
        required=True,
        choices=[
            "singlet",
            "correlated",
            "photon",
            "random",
            "bell_toy",
            "bell_toy_malus",
            "timetag",
            "local_threshold",
            "eeprb",
            "finite_lambda",
        ],
    )
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--angles", default="0,90,45,135", help="a,b,c,d in degrees")
    s.add_argument("--out", required=True, help="output prefix")
    s.add_argument("--q", type=float, default=1.0)
    s.add_argument("--c", type=float, default=1 / math.sqrt(2))
    s.add_argument("--r", type=float, default=-2.9)
    s.add_argument("--d", type=int, default=4)
    s.add_argument("--t0", type=float, default=1.0)
    s.add_argument("--w", type=float, default=1.0)
    s.add_argument("--mode", choices=["anti", "parallel"], default="anti")
    s.add_argument("--k", type=int, default=16)
    s.add_argument("--rule", choices=["periodic", "uniform"], default="periodic")
    s.add_argument("--counterfactual", action="store_true")
    s.set_defaults(func=_cmd_simulate)

    for name, func, helptext in (
        ("analyze", _cmd_analyze, "correlations, S and the quadruple bound"),
        ("quadruples", _cmd_quadruples, "maximum quadruple fraction"),
    ):
        a = sub.add_parser(name, help=helptext)
        a.add_argument("--prefix")
        a.add_argument("--pairs", "--in", nargs="+", dest="pairs")
        if name == "quadruples":
            a.add_argument("--counts", help="JSON 4x4 count table")
            a.add_argument("--method", choices=["lp", "naive", "cellwise", "brute"], default="lp")
        _report_opts(a)
        a.set_defaults(func=func)

    c = sub.add_parser("coincidence", help="window scan of raw streams")
    c.add_argument("--left", required=True)
    c.add_argument("--right", required=True)
    c.add_argument("--wscan", required=True, help="lo:hi:count or a comma list")
    c.add_argument("--pairing", choices=list(co.PAIRING_MODES), default="emission_indexed")
    c.add_argument("--angles")
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_coincidence)

    f = sub.add_parser("fine", help="joint distribution from four bivariates")
    f.add_argument("--moments", required=True)
    _report_opts(f)
    f.set_defaults(func=_cmd_fine)

    q = sub.add_parser("qt", help="quantum reference values")
    qs = q.add_subparsers(dest="qt_cmd", required=True, parser_class=_Parser)
    n = qs.add_parser("nogo")
    n.add_argument("--q", type=float, required=True)
    _report_opts(n)
    cc = qs.add_parser("circuit")
    cc.add_argument("--alpha", type=float, required=True)
    cc.add_argument("--beta", type=float, required=True)
    cc.add_argument("--transpiled", action="store_true")
    _report_opts(cc)
    ci = qs.add_parser("cirelson")
    ci.add_argument("--points", type=int, default=16)
    _report_opts(ci)
    ph = qs.add_parser("photon")
    ph.add_argument("--r", type=float, default=-2.9)
    ph.add_argument("--angles", default="94.4,62.4,-6.5,25.5")
    _report_opts(ph)
    q.set_defaults(func=_cmd_qt)

    e = sub.add_parser("eberhard", help="CH count bound on the quadruple fraction")
    e.add_argument("--counts", type=int, nargs=4, required=True)
    e.add_argument("--trials", type=int, nargs=4, required=True)
    _report_opts(e)
    e.set_defaults(func=_cmd_eberhard)
    return p


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValueError, ArithmeticError, qd.LPError, OSError, KeyError) as exc:
        print(f"eprb: analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


def main() -> None:
    sys.exit(run())
