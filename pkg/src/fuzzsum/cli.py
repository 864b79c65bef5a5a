"""Command-line front end.

    fuzzsum transform --builtin abel_not_cesaro --method abel --x 0.999 --ref "interval 0 2"
    fuzzsum classify --builtin es_not_ep --param p=1 --param s=3
    fuzzsum verify all

Every failure prints one line ``error:<kind>: <reason>`` to stderr and exits
with 2 (configuration or parse error), 3 (evaluation error) or 4 (a
summability inclusion that must hold was violated).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis, seqlang, verify
from .fuzzy_core import (
    DEFAULT_M,
    FuzzyError,
    FuzzyNumber,
    GridMismatchError,
    InvalidFuzzyNumberError,
    InvalidInputError,
    crisp,
    from_alpha_cuts,
    metric_D,
    triangular,
)
from .sequences import BUILTINS, builtin, from_seqdef
from .transforms import (
    ABEL_GRID,
    BOREL_GRID,
    TransformParams,
    abel_eval,
    borel_eval,
    cesaro_means,
    euler_means,
    partial_sums,
)

SCHEMA_VERSION = 1
EXIT_CONFIG = 2
EXIT_EVAL = 3
EXIT_CONSISTENCY = 4
METHODS = ("terms", "partial", "cesaro", "euler", "abel", "borel")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# -- formatting -------------------------------------------------------------


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _json_string(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch in '"\\':
            out.append("\\" + ch)
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def to_json(obj, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits and non-finite floats as null."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return _json_string(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_string(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def write_atomic(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


# -- inputs -----------------------------------------------------------------


def default_M() -> int:
    raw = os.environ.get("FUZZSUM_DEFAULT_M")
    if raw is None or raw == "":
        return DEFAULT_M
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"FUZZSUM_DEFAULT_M must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"FUZZSUM_DEFAULT_M must be a positive integer, got {raw!r}")
    return value


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None


def _numbers(text: str) -> list[float]:
    return [_number(t) for t in text.replace(",", " ").split()]


def parse_params(pairs: list[str], value: str | None) -> dict:
    params = {}
    for pair in pairs or []:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects KEY=VALUE, got {pair!r}")
        params[key.strip().replace("-", "_")] = _number(raw)
    if value is not None:
        nums = _numbers(value)
        if len(nums) not in (1, 3):
            raise ConfigError("--value expects one number or a triple a,b,c")
        params["value"] = nums[0] if len(nums) == 1 else tuple(nums)
    return params


def load_sequence(args):
    """The sequence and its echo for ``config_echo``."""
    if args.builtin is not None:
        params = parse_params(args.param, args.value)
        seq = builtin(args.builtin, params)
        return seq, {"builtin": args.builtin, "params": {k: _echo(v) for k, v in sorted(params.items())}}
    if args.param or args.value is not None:
        raise ConfigError("--param and --value only apply to --builtin sequences")
    if args.dsl_file is not None:
        try:
            source = Path(args.dsl_file).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot read {args.dsl_file}: {exc}") from None
    else:
        source = args.dsl
    d = seqlang.parse(source)
    return from_seqdef(d), {"dsl": seqlang.format_seqdef(d)}


def _echo(v):
    return list(v) if isinstance(v, tuple) else v


def parse_ref(text: str, M: int) -> FuzzyNumber:
    """Reference fuzzy number from the command line.

    ``triangular a b c``, ``trapezoid a b c d``, ``interval a b``, ``crisp r``
    or a bare number; a trailing ``flattened`` replaces every cut by the
    support.  Anything else is read as a DSL definition (the ``seq`` keyword
    may be omitted) and evaluated at its first index.
    """
    words = text.split()
    flat = bool(words) and words[-1] == "flattened"
    if flat:
        words = words[:-1]
    u = _shape(words, M)
    if u is None:
        if flat:
            raise ConfigError("'flattened' applies to triangular, trapezoid, interval or crisp references")
        source = text if text.lstrip().startswith("seq") else "seq " + text
        d = seqlang.parse(source)
        return seqlang.eval_term(d, d.start, M)
    if flat:
        return from_alpha_cuts(np.full(M + 1, u.lo[0]), np.full(M + 1, u.hi[0]))
    return u


def _shape(words, M):
    if not words:
        raise ConfigError("empty reference")
    kind, rest = words[0], words[1:]
    shapes = {"triangular": 3, "trapezoid": 4, "interval": 2, "crisp": 1}
    if kind not in shapes:
        try:
            return crisp(float(kind), M) if len(words) == 1 else None
        except ValueError:
            return None
    if len(rest) != shapes[kind]:
        raise ConfigError(f"{kind} reference needs {shapes[kind]} numbers, got {len(rest)}")
    v = [_number(w) for w in rest]
    if kind == "triangular":
        return triangular(*v, M)
    if kind == "crisp":
        return crisp(v[0], M)
    if kind == "interval":
        a, b = v
        if not a <= b:
            raise ConfigError(f"interval needs a <= b, got {a} > {b}")
        return from_alpha_cuts(np.full(M + 1, a), np.full(M + 1, b))
    a, b, c, d = v
    if not a <= b <= c <= d:
        raise ConfigError(f"trapezoid needs a <= b <= c <= d, got {v}")
    alpha = np.arange(M + 1) / M
    return from_alpha_cuts(a + (b - a) * alpha, d - (d - c) * alpha)


def _alphas(values) -> list[float]:
    for a in values:
        if not 0 <= a <= 1:
            raise ConfigError(f"alpha levels must lie in [0, 1], got {a}")
    return list(values)


def _cut_columns(alphas):
    return [c for a in alphas for c in (f"lo@{a:g}", f"hi@{a:g}")]


def _cut_values(u: FuzzyNumber | None, alphas) -> dict:
    out = {}
    for a in alphas:
        lo, hi = u.cut(a) if u is not None else (None, None)
        out[f"lo@{a:g}"] = lo
        out[f"hi@{a:g}"] = hi
    return out


def _transform_params(args, grid_kind: str | None = None) -> TransformParams:
    kw = {"p": args.p, "trunc_tol": args.trunc_tol, "max_terms": args.max_terms}
    if getattr(args, "orders", None):
        kw["euler_orders"] = tuple(args.orders)
    if grid_kind and args.x:
        kw[f"{grid_kind}_grid"] = tuple(sorted(args.x))
    return TransformParams(**kw)


# -- commands ---------------------------------------------------------------


def cmd_transform(args) -> tuple[str, int]:
    M = args.M if args.M is not None else default_M()
    seq, source = load_sequence(args)
    alphas = _alphas(args.alpha)
    ref = parse_ref(args.ref, M) if args.ref is not None else None
    method = args.method
    rows = []
    if method in ("abel", "borel"):
        params = _transform_params(args, method)
        grid = params.abel_grid if method == "abel" else params.borel_grid
        evaluate = abel_eval if method == "abel" else borel_eval
        key = "x"
        extra = ["terms_used", "converged", "cap_hit", "diverged", "precision_bits", "warning"]
        for x in grid:
            v, rep = evaluate(seq, x, params, M)
            row = {"x": x, **_cut_values(v, alphas)}
            if ref is not None:
                row["D_ref"] = metric_D(v, ref) if v is not None else None
            row.update(
                terms_used=rep.terms_used,
                converged=rep.converged,
                cap_hit=rep.cap_hit,
                diverged=rep.diverged,
                precision_bits=rep.precision_bits,
                warning=rep.warning or "",
            )
            rows.append(row)
    else:
        params = _transform_params(args)
        N = args.N
        if method == "terms":
            values = seq.terms(N, M)
        elif method == "partial":
            values = partial_sums(seq, N, M)
        elif method == "cesaro":
            values = cesaro_means(seq, N, M)
        else:
            values = euler_means(seq, params.p, N, M)
        key, extra = "n", []
        for n, v in enumerate(values):
            row = {"n": n, **_cut_values(v, alphas)}
            if ref is not None:
                row["D_ref"] = metric_D(v, ref)
            rows.append(row)
    columns = [key] + _cut_columns(alphas) + (["D_ref"] if ref is not None else []) + extra
    echo = {
        "command": "transform",
        "source": source,
        "method": method,
        "M": M,
        "N": args.N if method not in ("abel", "borel") else None,
        "p": params.p,
        "x": list(params.abel_grid if method == "abel" else params.borel_grid) if method in ("abel", "borel") else None,
        "alpha": alphas,
        "ref": args.ref,
        "trunc_tol": params.trunc_tol,
        "max_terms": params.max_terms,
    }
    if args.format == "csv":
        return to_csv(columns, rows), 0
    return to_json({"schema_version": SCHEMA_VERSION, "config_echo": echo, "rows": rows}) + "\n", 0


def _report_dict(rep: analysis.SummabilityReport, alphas) -> dict:
    limit = None
    if rep.limit_estimate is not None:
        cuts = [rep.limit_estimate.cut(a) for a in alphas]
        limit = {"alpha": alphas, "lo": [c[0] for c in cuts], "hi": [c[1] for c in cuts]}
    return {
        "method": rep.method,
        "verdict": rep.verdict,
        "limit_estimate": limit,
        "diagnostics": [[label, value] for label, value in rep.diagnostics],
        "conditions": dict(rep.conditions),
    }


def cmd_classify(args) -> tuple[str, int]:
    M = args.M if args.M is not None else default_M()
    seq, source = load_sequence(args)
    alphas = _alphas(args.alpha)
    params = _transform_params(args)
    reports = analysis.classify(seq, params, M, N=args.N, euler_N=args.euler_N, tol=args.tol)
    violations = analysis.consistency_violations(reports)
    echo = {
        "command": "classify",
        "source": source,
        "M": M,
        "N": args.N,
        "euler_N": args.euler_N,
        "tol": args.tol,
        "p": params.p,
        "euler_orders": list(params.euler_orders) if params.euler_orders else None,
        "abel_grid": list(params.abel_grid),
        "borel_grid": list(params.borel_grid),
        "alpha": alphas,
        "trunc_tol": params.trunc_tol,
        "max_terms": params.max_terms,
    }
    if args.format == "csv":
        columns = ["method", "verdict"] + _cut_columns(alphas) + ["diagnostics", "conditions"]
        rows = []
        for rep in reports:
            row = {"method": rep.method, "verdict": rep.verdict, **_cut_values(rep.limit_estimate, alphas)}
            row["diagnostics"] = ";".join(f"{k}={fmt(v)}" for k, v in rep.diagnostics)
            row["conditions"] = ";".join(f"{k}={fmt(v)}" for k, v in rep.conditions.items())
            rows.append(row)
        text = to_csv(columns, rows)
    else:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "config_echo": echo,
            "reports": [_report_dict(r, alphas) for r in reports],
            "consistency_violations": violations,
        }
        text = to_json(doc) + "\n"
    return text, (EXIT_CONSISTENCY if violations else 0)


def cmd_verify(args) -> tuple[str, int]:
    lines = []
    failed = 0
    current = None
    for suite, check in verify.run(args.suite):
        if suite != current:
            lines.append(f"# {suite}")
            current = suite
        lines.append(check.line())
        failed += not check.passed
    total = sum(1 for line in lines if not line.startswith("#"))
    lines.append(f"{total - failed}/{total} checks passed")
    return "\n".join(lines) + "\n", (1 if failed else 0)


# -- argument parsing -------------------------------------------------------


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _nonnegative_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return v


def _add_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=BUILTINS, help="builtin sequence family")
    src.add_argument("--dsl", help="inline sequence definition")
    src.add_argument("--dsl-file", help="file holding a sequence definition")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="builtin parameter (repeatable)")
    p.add_argument("--value", help="value of the constant builtin: r or a,b,c")


def _add_common(p):
    p.add_argument("--M", type=_positive_int, help="alpha-grid size (default: $FUZZSUM_DEFAULT_M or 64)")
    p.add_argument("--p", type=float, default=1.0, help="Euler order")
    p.add_argument("--alpha", type=float, nargs="+", default=[0.0, 0.5, 1.0], help="alpha levels to report")
    p.add_argument("--trunc-tol", type=float, default=1e-12, help="power series truncation threshold")
    p.add_argument("--max-terms", type=_positive_int, default=100_000, help="power series term cap")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="write here (atomically) instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fuzzsum", description="Summability methods for sequences of fuzzy numbers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("transform", help="tabulate a transform of a sequence")
    _add_source(t)
    t.add_argument("--method", choices=METHODS, default="terms")
    t.add_argument("--N", type=_nonnegative_int, default=10, help="largest index for sequence transforms")
    t.add_argument("--x", type=float, nargs="+", help="abscissae for abel/borel (default: built-in grid)")
    t.add_argument("--ref", help="reference fuzzy number; adds a D_ref column")
    _add_common(t)
    t.set_defaults(run=cmd_transform)

    c = sub.add_parser("classify", help="summability verdicts for every method")
    _add_source(c)
    c.add_argument("--N", type=_positive_int, default=400, help="length for ordinary and Cesaro checks")
    c.add_argument("--euler-N", type=_positive_int, default=100, help="length for Euler checks")
    c.add_argument("--tol", type=float, default=1e-2, help="limit detection tolerance")
    c.add_argument("--orders", type=float, nargs="+", help="Euler orders to classify besides --p")
    _add_common(c)
    c.set_defaults(run=cmd_classify)

    v = sub.add_parser("verify", help="run theorem checks")
    v.add_argument("suite", choices=("all",) + verify.SUITES)
    v.add_argument("--output", help="write here (atomically) instead of stdout")
    v.set_defaults(run=cmd_verify)
    return parser


def _fail(kind: str, message, code: int) -> int:
    text = " ".join(str(message).split())
    print(f"error:{kind}: {text}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        text, code = args.run(args)
        write_atomic(text, args.output)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except seqlang.ParseError as exc:
        return _fail("parse", exc, EXIT_CONFIG)
    except (seqlang.EvaluationError, InvalidFuzzyNumberError, OverflowError) as exc:
        return _fail("eval", exc, EXIT_EVAL)
    except (InvalidInputError, GridMismatchError) as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except FuzzyError as exc:
        return _fail("eval", exc, EXIT_EVAL)
    except OSError as exc:
        return _fail("io", exc, EXIT_CONFIG)
    if code == EXIT_CONSISTENCY:
        return _fail("consistency", "inclusion checks failed; see consistency_violations", code)
    return code


if __name__ == "__main__":
    sys.exit(main())
