"""Command-line front end.

Exit codes: 0 ok, 1 verification failure, 2 usage or input error, 3 numeric failure.
Diagnostics go to stderr prefixed with ``E:``.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .circuit import (
    CircuitFormatError,
    EvaluationCapExceeded,
    QuditSpec,
    evaluate_circuit,
    matrix_comment_spec,
    parse_circuit,
    parse_matrix,
    serialize_circuit,
    serialize_matrix,
)
from .components import PlacementError
from .cost import CostParams, lower_bound, model_gcx_count
from .numerics import NumericalError, haar_random_unitary, phase_distance
from .synth import RearrangementError, SynthesisOptions, synthesis_report, synthesize
from . import tables

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class CommandConfig:
    command: str
    args: argparse.Namespace


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mvqsd", description="Qudit unitary synthesis into GCX/GCZ circuits.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="synthesize a circuit from a matrix file")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--d", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--mode", choices=("full", "structured"), default="full")
    s.add_argument("--scheme", choices=("paper", "fallback"), default="paper")
    s.add_argument("--report")

    v = sub.add_parser("verify", help="check a circuit against a matrix up to global phase")
    v.add_argument("--circuit", required=True)
    v.add_argument("--against", required=True)
    v.add_argument("--tol", type=float, default=1e-7)

    c = sub.add_parser("count", help="model GCX count")
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--mode", choices=("paper", "achieved"), default="paper")
    c.add_argument("--scheme", choices=("paper", "fallback"), default="paper")

    b = sub.add_parser("bound", help="lower bound on the two-qudit gate count")
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--n", type=int, required=True)

    t = sub.add_parser("tables", help="render the count tables and errata")
    t.add_argument("--format", choices=("md", "csv", "json"), default="md")
    t.add_argument("--out")

    r = sub.add_parser("randu", help="write a Haar-random unitary")
    r.add_argument("--d", type=int, required=True)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--out", required=True)
    return p


def _spec_for(dim: int, text: str, d: Optional[int], n: Optional[int]) -> QuditSpec:
    if d is not None and n is not None:
        spec = QuditSpec(n, d)
    elif (spec := matrix_comment_spec(text)) is None:
        options = [QuditSpec(k, b) for b in range(2, dim + 1) for k in range(2, 64) if b**k == dim]
        if d is not None:
            options = [o for o in options if o.d == d]
        if n is not None:
            options = [o for o in options if o.n == n]
        if len(options) != 1:
            raise UsageError(f"cannot infer qudit shape for dimension {dim}; pass --d and --n")
        spec = options[0]
    if spec.dim != dim:
        raise UsageError(f"matrix dimension {dim} does not match d^n = {spec.d}^{spec.n}")
    return spec


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _cmd_synth(a) -> int:
    text = Path(a.inp).read_text(encoding="utf-8")
    w = parse_matrix(text)
    spec = _spec_for(w.shape[0], text, a.d, a.n)
    opts = SynthesisOptions(mode=a.mode, rotation_scheme=a.scheme)
    result = synthesize(w, spec, opts)
    if a.mode == "structured":
        _write(a.out, json.dumps(result.to_json(), indent=1, sort_keys=True) + "\n")
        if a.report:
            _write(a.report, json.dumps({"schema": 1, "mode": "structured", "residual": result.residual,
                                         "budget": result.to_json()["budget"]}, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    _write(a.out, serialize_circuit(result))
    rep = synthesis_report(result, w, opts.cap)
    if a.report:
        _write(a.report, json.dumps(rep.to_json(), indent=2, sort_keys=True) + "\n")
    print(f"elementary_total {rep.counts['elementary_total']}")
    if rep.residual is not None:
        print(f"residual {rep.residual:.3e}")
    return EXIT_OK


def _cmd_verify(a) -> int:
    circ = parse_circuit(Path(a.circuit).read_text(encoding="utf-8"))
    w = parse_matrix(Path(a.against).read_text(encoding="utf-8"))
    if w.shape[0] != circ.spec.dim:
        raise UsageError(f"matrix dimension {w.shape[0]} != circuit dimension {circ.spec.dim}")
    err = phase_distance(evaluate_circuit(circ), w)
    ok = err <= a.tol
    print(f"{'PASS' if ok else 'FAIL'} residual {err:.3e} tol {a.tol:.1e}")
    if not ok:
        print(f"E: verification failed: residual {err:.3e} > {a.tol:.1e}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VERIFY


def _cmd_count(a) -> int:
    _check_dn(a.d, a.n)
    print(model_gcx_count(a.d, a.n, CostParams(mode=a.mode, scheme=a.scheme)))
    return EXIT_OK


def format_bound(d: int, n: int) -> str:
    v = lower_bound(d, n)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{float(v):.10g} = {v}"


def _cmd_bound(a) -> int:
    _check_dn(a.d, a.n)
    print(format_bound(a.d, a.n))
    return EXIT_OK


def _cmd_tables(a) -> int:
    text = tables.render(a.format)
    if a.out:
        _write(a.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_randu(a) -> int:
    spec = QuditSpec(a.n, a.d)
    u = haar_random_unitary(spec.dim, a.seed)
    _write(a.out, serialize_matrix(u, comment=f"qudits {spec.n} dim {spec.d}"))
    return EXIT_OK


def _check_dn(d: int, n: int) -> None:
    if d < 2 or n < 1:
        raise UsageError("need --d >= 2 and --n >= 1")


COMMANDS = {
    "synth": _cmd_synth,
    "verify": _cmd_verify,
    "count": _cmd_count,
    "bound": _cmd_bound,
    "tables": _cmd_tables,
    "randu": _cmd_randu,
}


def run_command(argv: Optional[list] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"E: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, RearrangementError, PlacementError, EvaluationCapExceeded) as exc:
        print(f"E: numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CircuitFormatError, OSError, ValueError) as exc:
        print(f"E: input: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
