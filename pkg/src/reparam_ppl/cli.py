"""Command-line entry point: `reparam-ppl COMMAND ...`.

Exit codes: 0 success, 1 rejected input or failed check, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import cases, emit, proofgen, rng, semantics
from .errors import PPLError
from .frontend import load_program
from .reparam import slices, translate_program

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _header(cmd: str, seed: int | None = None) -> str:
    parts = [f"reparam-ppl {cmd}", f"generator={rng.GENERATOR_ID}"]
    if seed is not None:
        parts.append(f"seed={seed}")
    return " ".join(parts)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _compile(args, certify: bool = True):
    program = load_program(_read(args.input))
    return program, translate_program(program, hoist=not getattr(args, "no_hoist", False),
                                      certify=certify)


def _pick_model(program, name: str | None) -> str:
    if name is None:
        return program.order[-1]
    if name not in program:
        raise UsageError(f"no model named `{name}`")
    return name


def _print_rows(rows, header: str, tsv: bool) -> int:
    sys.stdout.write(cases.format_report(rows, header, tsv))
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


# -- commands --------------------------------------------------------------------------

def cmd_compile(args) -> int:
    try:
        cfg = emit.EmitConfig(prefix=args.prefix, certs=not args.no_certs,
                              decimal=args.decimal_constants)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _, table = _compile(args, certify=not args.no_certs)
    out = Path(args.out) if args.out else Path(args.input).with_suffix(".lean")
    out.write_text(emit.emit_file(table, cfg, header=f"generated from {Path(args.input).name}"))
    print(f"wrote {out}")
    for entry in table:
        if entry.cert is None:
            print(f"cert {entry.fn.name}: skipped")
        else:
            ok = proofgen.check_cert(entry.cert, entry.fn, table)
            print(f"cert {entry.fn.name}: {'ok' if ok else 'INVALID'} "
                  f"(size {proofgen.cert_size(entry.cert)})")
    return EXIT_OK


def cmd_check(args) -> int:
    program, table = _compile(args)
    failures = 0
    for entry in table:
        targets = [(entry.fn.name, entry.fn)]
        targets += [(f"{entry.fn.name}[{s.var}]", s)
                    for s in slices(program[entry.model.name], table, entry.hoisted)]
        for label, target in targets:
            try:
                cert = proofgen.derive_cert(target, table)
                res = proofgen.check_cert(cert, target, table)
            except PPLError as exc:
                res = proofgen.CertCheck(False, "root", str(exc))
            if res:
                print(f"PASS  cert {label}")
            else:
                failures += 1
                print(f"FAIL  cert {label}  at {res.path}: {res.reason}")
        if entry.cert is not None:
            sys.stdout.write(proofgen.emit_cert_lemma(entry.cert, entry.fn.name,
                                                      decimal=args.decimal_constants))
    return EXIT_OK if failures == 0 else EXIT_FAIL


def cmd_sample(args) -> int:
    program, table = _compile(args)
    name = _pick_model(program, args.model)
    dim = table[name].demand
    print(f"# {_header('sample', args.seed)} model={name}")
    for row in rng.uniform_rows(args.seed, args.trials, dim):
        print(semantics.format_value(semantics.run_sampler(program[name], row, program)))
    return EXIT_OK


def cmd_equiv(args) -> int:
    program, table = _compile(args)
    print(f"# {_header('equiv', args.seed)} trials={args.trials}")
    if args.trials == 0:
        print("warning: no trials", file=sys.stderr)
        return EXIT_OK
    total = 0
    for name in program.order:
        n, examples = semantics.check_coupling(program[name], table[name].fn, program, table,
                                               args.trials, args.seed)
        total += n
        print(f"{'PASS' if n == 0 else 'FAIL'}  {name}  mismatches={n}/{args.trials}")
        for m in examples:
            print(f"  stream={semantics.format_value(m.stream)} "
                  f"sampler={semantics.format_value(m.sampled)} "
                  f"pure={semantics.format_value(m.pure)}")
    return EXIT_OK if total == 0 else EXIT_FAIL


def cmd_oracle(args) -> int:
    program, table = _compile(args)
    name = _pick_model(program, args.model)
    fn = table[name].fn
    if args.event is not None:
        event = semantics.parse_event(args.event)
        p = semantics.pushforward_exact(fn, event, table)
        print(f"{semantics.format_event(event)}\t{p.numerator}/{p.denominator}")
        return EXIT_OK
    try:
        measure = semantics.giry_enumerate(program[name], program)
    except PPLError:
        measure = semantics.pushforward_measure(fn, table)
    sys.stdout.write(measure.serialize())
    return EXIT_OK


def cmd_verify_dp(args) -> int:
    rows = cases.verify_dp(args.trials, args.seed, args.subset)
    return _print_rows(rows, _header("verify-dp", args.seed), args.tsv)


def cmd_verify_pac(args) -> int:
    n = args.n if args.n is not None else cases.pac_sample_size(args.eps, args.delta)
    try:
        setup = cases.StumpSetup(t=args.t, n=n, epsilon=args.eps, delta=args.delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = cases.verify_pac(setup, args.trials, args.seed)
    return _print_rows(rows, f"{_header('verify-pac', args.seed)} n={n}", args.tsv)


# -- argument parsing -------------------------------------------------------------------

def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reparam-ppl",
                                     description="Compile sampling programs to pure functions of uniforms.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_input(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("input", help="source file")
        p.add_argument("--no-hoist", action="store_true",
                       help="keep nested calls as calls instead of pre-sampled inputs")
        p.add_argument("--decimal-constants", action="store_true")
        return p

    def with_seed(p, trials):
        p.add_argument("--trials", type=_nonneg_int, default=trials)
        p.add_argument("--seed", type=_seed, default=0)
        return p

    p = with_input("compile", "emit Lean-style definitions and lemma skeletons")
    p.add_argument("--out", help="output path (default: input with .lean suffix)")
    p.add_argument("--no-certs", action="store_true")
    p.add_argument("--prefix", default="", help="identifier prefix for emitted names")
    p.set_defaults(func=cmd_compile)

    p = with_input("check", "derive and validate measurability certificates")
    p.set_defaults(func=cmd_check)

    p = with_seed(with_input("sample", "draw values with the forward sampler"), 10)
    p.add_argument("--model")
    p.set_defaults(func=cmd_sample)

    p = with_seed(with_input("equiv", "check sampler/translation coupling"), 10_000)
    p.set_defaults(func=cmd_equiv)

    p = with_input("oracle", "exact output distribution or event probability")
    p.add_argument("--model")
    p.add_argument("--event", help="e.g. 'v.fst.snd = 1 & v.snd.snd = 1'")
    p.set_defaults(func=cmd_oracle)

    p = with_seed(sub.add_parser("verify-dp", help="demographic parity checks"), 1_000_000)
    p.add_argument("--subset", type=_nonneg_int, default=100_000,
                   help="random inputs for the subset property")
    p.add_argument("--tsv", action="store_true")
    p.set_defaults(func=cmd_verify_dp)

    p = with_seed(sub.add_parser("verify-pac", help="decision stump PAC check"), 10_000)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--t", type=float, default=0.5, help="target threshold")
    p.add_argument("--n", type=_nonneg_int, help="training-set size (default from eps, delta)")
    p.add_argument("--tsv", action="store_true")
    p.set_defaults(func=cmd_verify_pac)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 1) == 0 and args.command in ("verify-dp", "verify-pac"):
        parser.error("--trials must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error[E_USAGE] {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PPLError as exc:
        where = getattr(args, "input", "")
        loc = f"{where}:{exc}" if exc.line else f"{where}: {exc}" if where else str(exc)
        print(f"error[{exc.code}] {loc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
