"""Command-line interface: ``gapcert {certify,scan,verify,models,graph-dump}``.

Exit codes: 0 certified / all checks passed, 1 not certified, 2 runtime error
or failed check, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

from . import bounds as B
from . import certify as C
from .errors import GapCertError
from .lattice import build_chain, build_cycle, build_patch, build_torus, dump_edges, embed_patch
from .spectra import RESIDUAL_TOL
from .terms import BUILTIN_MODELS, builtin, load_term

EXIT_OK = 0
EXIT_NOT_CERTIFIED = 1
EXIT_ERROR = 2
EXIT_USAGE = 64

SUITES = ("combinatorial", "lemma1", "lemma2", "operator-inequality", "equidistribution", "all")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--model", choices=BUILTIN_MODELS, help="built-in projector term")
    g.add_argument("--term-file", help="JSON term file {d, matrix: [[[re, im], ...]]}")


def _add_solver(p):
    p.add_argument("--zero-tol", type=float, default=None,
                   help="eigenvalues <= this count as zero (default 1e-9 x number of terms)")
    p.add_argument("--residual-tol", type=float, default=RESIDUAL_TOL)
    p.add_argument("--method", choices=("auto", "dense", "krylov"), default="auto")
    p.add_argument("--seed", type=int, default=None, help="solver seed (env GAPCERT_SEED)")
    p.add_argument("--max-dim", type=int, default=C.MAX_DIM,
                   help="refuse problems with more amplitudes than this (default 2^26)")


def _add_output(p, formats=("json",)):
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("--no-timestamp", action="store_true", help="omit created_at for reproducible output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gapcert", description="Spectral-gap certificates for frustration-free chains and lattices.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("certify", help="certify a thermodynamic-limit gap from one local gap")
    _add_model(p)
    p.add_argument("--term-v-file", help="vertical term for non-isotropic 2D input")
    p.add_argument("--n", type=int, required=True, help="chain length or patch size")
    p.add_argument("--mode", choices=("oneD", "twoD"), default="oneD")
    p.add_argument("--cross-check", type=int, metavar="M", default=None,
                   help="also compute the periodic gap at this m > 2n and compare (1D only)")
    _add_solver(p)
    _add_output(p)

    p = sub.add_parser("scan", help="local gaps over a range of n against both 1D thresholds")
    _add_model(p)
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--jobs", type=int, default=1)
    _add_solver(p)
    _add_output(p, ("json", "csv"))

    p = sub.add_parser("verify", help="exact-arithmetic and Hilbert-space verification suites")
    p.add_argument("--suite", choices=SUITES, default="combinatorial")
    _add_model(p, required=False)
    p.add_argument("--n", type=int, nargs="+", default=None, help="sizes (meaning depends on suite)")
    p.add_argument("--m", type=int, nargs="+", default=None, help="periodic system sizes")
    p.add_argument("--n-max", type=int, default=None, help="upper size for sweeping suites")
    p.add_argument("--fuzz-count", type=int, default=None, help="random profiles per n")
    p.add_argument("--fuzz-seed", type=int, default=B.LEMMA_FUZZ_SEED)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="solver seed (env GAPCERT_SEED)")
    p.add_argument("--max-dim", type=int, default=C.MAX_DIM)
    _add_output(p)

    p = sub.add_parser("models", help="list built-in terms")
    _add_output(p)

    p = sub.add_parser("graph-dump", help="write a graph's edges as JSON lines")
    p.add_argument("--kind", choices=("chain", "cycle", "torus", "patchP", "patchQ"), required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--embed-m", type=int, default=None, help="embed the patch in an m x m torus")
    p.add_argument("--k", type=int, nargs=2, default=(0, 0), metavar=("X", "Y"),
                   help="center plaquette when embedding")
    p.add_argument("--output", "-o")
    return parser


def _term(args, which="model"):
    if getattr(args, "term_file", None):
        return load_term(args.term_file)
    if args.model is None:
        raise UsageError("this suite needs --model or --term-file")
    return builtin(args.model)


def _emit(args, text: str):
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _solver_kw(args) -> dict:
    return {"zero_tol": args.zero_tol, "residual_tol": args.residual_tol, "seed": args.seed,
            "method": args.method, "max_dim": args.max_dim}


def cmd_certify(args) -> int:
    if args.mode == "oneD" and args.n <= 2:
        raise UsageError(f"--n must exceed 2 for 1D certification, got {args.n}")
    if args.mode == "twoD" and (args.n <= 2 or args.n % 2):
        raise UsageError(f"--n must be an even integer > 2 for 2D certification, got {args.n}")
    if args.cross_check is not None and (args.mode != "oneD" or args.cross_check <= 2 * args.n):
        raise UsageError("--cross-check needs 1D mode and M > 2n")
    term = _term(args)
    kw = _solver_kw(args)
    if args.mode == "oneD":
        cert = C.certify_1d(term, args.n, timestamp=not args.no_timestamp, **kw)
    else:
        term_v = load_term(args.term_v_file) if args.term_v_file else None
        cert = C.certify_2d(term, term_v, args.n, timestamp=not args.no_timestamp, **kw)
    out = cert.to_dict(timestamp=not args.no_timestamp)
    if args.cross_check is not None:
        kw.pop("max_dim")
        out["cross_check"] = C.cross_check_periodic(cert, term, args.cross_check,
                                                    max_dim=args.max_dim, **kw)
    _emit(args, _json(out))
    return EXIT_OK if cert.certified else EXIT_NOT_CERTIFIED


SCAN_COLUMNS = ("n", "eps_n", "thresh_new", "thresh_knabe", "ratio", "flagged")


def cmd_scan(args) -> int:
    if args.n_min <= 2 or args.n_max < args.n_min:
        raise UsageError(f"need 2 < n-min <= n-max, got [{args.n_min}, {args.n_max}]")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    term = _term(args)
    table = C.gapless_scan(term, args.n_min, args.n_max, jobs=args.jobs, **_solver_kw(args))
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCAN_COLUMNS)
        for row in table["rows"]:
            w.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in SCAN_COLUMNS])
        _emit(args, buf.getvalue())
    else:
        _emit(args, _json(table))
    return EXIT_OK if table["flagged"] else EXIT_NOT_CERTIFIED


def _combinatorial(n_max: int) -> list:
    checks = []
    for n in range(3, n_max + 1):
        try:
            rep = B.bounds_1d(n)
            ok = n == 3 or rep["G"] < rep["threshold_knabe"]
            checks.append({"check": "1D sums, F, G", "n": n, "pass": ok,
                           "F": str(rep["F"]), "G": str(rep["G"])})
        except GapCertError as exc:
            checks.append({"check": "1D sums, F, G", "n": n, "pass": False, "error": str(exc)})
    for n in range(4, n_max + 1, 2):
        try:
            rep = B.bounds_2d(n, brute_force=n <= 40)
            checks.append({"check": "2D averages, W, f, g", "n": n, "pass": True,
                           "brute_force": n <= 40, "f": str(rep["f"]), "g": str(rep["g"])})
        except GapCertError as exc:
            checks.append({"check": "2D averages, W, f, g", "n": n, "pass": False, "error": str(exc)})
    return checks


def _lemma1(args):
    n_max = args.n_max or 20
    sizes = args.n or list(range(4, n_max + 1))
    count = 1000 if args.fuzz_count is None else args.fuzz_count
    work = [(n, count, args.fuzz_seed) for n in sizes]
    reports = _pool_map(_fuzz1, work, args.jobs)
    for rep, n in zip(reports, sizes):
        rep["canonical"] = B.verify_lemma1(B.coeffs_1d(n))["holds"] if n > 2 else None
        rep["pass"] = rep["max_violation"] is None and rep["canonical"] is not False
    return reports


def _fuzz1(a):
    return B.fuzz_lemma1(*a)


def _fuzz2(a):
    return B.fuzz_lemma2(*a)


def _pool_map(fn, work, jobs):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, work))
    return [fn(w) for w in work]


def _lemma2(args):
    sizes = args.n or [4, 6, 8]
    count = 100 if args.fuzz_count is None else args.fuzz_count
    for n in sizes:
        if n <= 2 or n % 2:
            raise UsageError(f"lemma2 sizes must be even and > 2, got {n}")
    reports = _pool_map(_fuzz2, [(n, count, args.fuzz_seed) for n in sizes], args.jobs)
    out = []
    for n, rep in zip(sizes, reports):
        canon = B.verify_lemma2(n)
        out.append({"lemma": rep["lemma"], "n": n, "profiles_tested": rep["profiles_tested"],
                    "seed": rep["seed"], "max_violation": rep["max_violation"],
                    "witnesses": rep["witnesses"], "W_ee": canon["W_ee"],
                    "max_nonadjacent": canon["max_nonadjacent"],
                    "max_nonadjacent_class": canon["max_nonadjacent_class"],
                    "adjacent_values": canon["adjacent_values"],
                    "pass": rep["max_violation"] is None and canon["holds"]})
    return out


DEFAULT_INEQUALITY_CASES = ((3, 7), (3, 8), (4, 9))


def _operator_inequality(args):
    term = _term(args)
    if args.n and args.m:
        if len(args.n) != len(args.m):
            raise UsageError("--n and --m must have the same length")
        cases = list(zip(args.n, args.m))
    else:
        cases = DEFAULT_INEQUALITY_CASES if term.d == 2 else ((3, 7),)
    for n, m in cases:
        if n <= 2 or m <= 2 * n:
            raise UsageError(f"operator inequality needs n > 2 and m > 2n, got n={n}, m={m}")
    return [C.verify_operator_inequality_1d(term, n, m, max_dim=args.max_dim, seed=args.seed)
            for n, m in cases]


def _equidistribution(args):
    term = _term(args)
    sizes = args.m or ([4, 5, 6] if term.d == 2 else [4])
    for m in sizes:
        if m < 3:
            raise UsageError(f"cycle length must be >= 3, got {m}")
    return [C.verify_energy_equidistribution(term, m) for m in sizes]


def cmd_verify(args) -> int:
    suites = SUITES[:-1] if args.suite == "all" else (args.suite,)
    if args.n_max is not None and args.n_max < 3:
        raise UsageError("--n-max must be at least 3")
    report = {}
    for suite in suites:
        if suite == "combinatorial":
            report[suite] = _combinatorial(args.n_max or 50)
        elif suite == "lemma1":
            report[suite] = _lemma1(args)
        elif suite == "lemma2":
            report[suite] = _lemma2(args)
        elif suite == "operator-inequality":
            if args.suite == "all" and args.model is None and args.term_file is None:
                args.model = "heisenberg_fm"
            report[suite] = _operator_inequality(args)
        elif suite == "equidistribution":
            report[suite] = _equidistribution(args)
    passed = all(item["pass"] for items in report.values() for item in items)
    report["summary"] = {s: ("PASS" if all(i["pass"] for i in report[s]) else "FAIL") for s in suites}
    report["result"] = "PASS" if passed else "FAIL"
    _emit(args, _json(report))
    return EXIT_OK if passed else EXIT_ERROR


def cmd_models(args) -> int:
    rows = []
    for name in BUILTIN_MODELS:
        t = builtin(name)
        rows.append({"name": name, "d": t.d, "rank": t.rank, "real": t.is_real, "sha256": t.sha256()})
    _emit(args, _json(rows))
    return EXIT_OK


def cmd_graph_dump(args) -> int:
    builders = {"chain": build_chain, "cycle": build_cycle, "torus": build_torus,
                "patchP": lambda s: build_patch(s, "P"), "patchQ": lambda s: build_patch(s, "Q")}
    graph = builders[args.kind](args.size)
    if args.embed_m is not None:
        if not args.kind.startswith("patch"):
            raise UsageError("--embed-m applies to patches only")
        graph = embed_patch(graph, build_torus(args.embed_m), tuple(args.k))
    buf = io.StringIO()
    dump_edges(graph, buf)
    _emit(args, buf.getvalue())
    return EXIT_OK


COMMANDS = {"certify": cmd_certify, "scan": cmd_scan, "verify": cmd_verify,
            "models": cmd_models, "graph-dump": cmd_graph_dump}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gapcert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GapCertError, OSError) as exc:
        print(f"gapcert: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
