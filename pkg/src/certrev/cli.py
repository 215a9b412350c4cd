"""Command-line entry point: ``certrev <subcommand> ...``.

Exit status: 0 ok, 1 usage error, 2 configuration error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from certrev.bundle import PROOF_SCHEMES, ProofBundle, check_bundle, make_bundle
from certrev.demos import crt_demo, hcrs_demo, parse_revoked
from certrev.model import Verdict
from certrev.sim.engine import build_world, compare, cost_report, run, summary
from certrev.sim.scenario import SCHEMES, Scenario, ScenarioError, federal_assumptions, load_scenario

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3
DEFAULT_SEED = 0

BANNER = ("# model-dependent: costs follow this artifact's traffic model and message sizes; "
          "they are not a reproduction of any published dollar figure")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _scenario(args) -> Scenario:
    if args.scenario is None:
        sc = Scenario()
    else:
        try:
            sc = load_scenario(args.scenario)
        except OSError as e:
            raise ScenarioError(f"cannot read {args.scenario}: {e.strerror}") from None
        except ScenarioError as e:
            raise ScenarioError(f"{args.scenario}: {e}") from None
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    scheme = getattr(args, "scheme", None)
    if isinstance(scheme, str):
        changes["scheme"] = scheme
    return sc.replace(**changes) if changes else sc


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    result = run(sc)
    rep = cost_report(result)
    if args.format == "text":
        text = summary(result)
        if federal_assumptions(sc):
            text += "note: scenario matches the federal PKI assumption list; figures are model-dependent\n"
        text += f"yearly cost (extrapolated, model-dependent): {rep['yearly_cost']:.2f}\n"
    else:
        buf = io.StringIO()
        buf.write(BANNER + "\n")
        if federal_assumptions(sc):
            buf.write("# scenario matches the federal PKI assumption list\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scheme", "link_class", "bytes", "kilobytes", "cost"])
        for cls in ("ca_to_directory", "directory_to_user", "user_to_directory"):
            b = rep[f"{cls}_bytes"]
            w.writerow([sc.scheme, cls, b, f"{b / 1024:.3f}", f"{rep[cls + '_cost']:.6f}"])
        w.writerow([sc.scheme, "total", rep["total_bytes"], f"{rep['total_bytes'] / 1024:.3f}",
                    f"{rep['total_cost']:.6f}"])
        w.writerow([sc.scheme, "yearly_extrapolated", "", "", f"{rep['yearly_cost']:.6f}"])
        buf.write(f"# peak_request_rate={result.peak_request_rate()} validations={result.validations} "
                  f"audit_failures={len(result.failures)}\n")
        text = buf.getvalue()
    _emit(text, args.out)
    if args.ledger:
        Path(args.ledger).write_text(result.ledger.to_csv())
    if result.failures:
        print(f"error: {len(result.failures)} verdicts disagree with the authoritative state", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_compare(args) -> int:
    base = _scenario(args)
    names = args.scheme or list(SCHEMES)
    table, results = compare([base.replace(scheme=n) for n in names])
    _emit(BANNER + "\n" + table if args.format == "csv" else "".join(summary(r) for r in results), args.out)
    return EXIT_VERIFY if any(r.failures for r in results) else EXIT_OK


def cmd_demo_crt(args) -> int:
    extra: dict[str, list[int]] = {}
    for item in args.revoke:
        ca, _, serial = item.partition(":")
        if not serial.isdigit():
            raise UsageError(f"--revoke expects CA:SERIAL, got {item!r}")
        extra.setdefault(ca, []).append(int(serial))
    try:
        demo = crt_demo(extra)
    except ValueError as e:
        raise UsageError(str(e)) from None
    _emit(demo.text, args.out)
    return EXIT_OK if demo.ok else EXIT_VERIFY


def cmd_demo_hcrs(args) -> int:
    try:
        revoked = None if args.revoked is None else parse_revoked(args.revoked, args.depth)
    except ValueError as e:
        raise UsageError(str(e)) from None
    demo = hcrs_demo(revoked, args.depth)
    _emit(demo.text, args.out)
    return EXIT_OK if demo.ok else EXIT_VERIFY


def cmd_prove(args) -> int:
    sc = _scenario(args)
    if sc.scheme not in PROOF_SCHEMES:
        raise ScenarioError(f"scheme {sc.scheme!r} has no proof files; use one of {', '.join(PROOF_SCHEMES)}")
    world = build_world(sc, np.random.Generator(np.random.PCG64(sc.seed)))
    try:
        bundle = make_bundle(sc.scheme, world, args.serial, args.day,
                             chain_width=sc.chain_width, serial_bits=sc.serial_bits)
    except ValueError as e:
        raise UsageError(str(e)) from None
    Path(args.out).write_bytes(bundle.encode())
    print(f"wrote {sc.scheme} proof for serial {args.serial} day {args.day} to {args.out}")
    return EXIT_OK


def _read_bundle(path: str) -> ProofBundle | None:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e.strerror}") from None
    try:
        return ProofBundle.decode(data)
    except ValueError:
        return None


def cmd_verify(args) -> int:
    bundle = _read_bundle(args.proof)
    if bundle is None:
        print("verification: FAILED (malformed proof file)")
        return EXIT_VERIFY
    verdict = check_bundle(bundle)
    print(f"{bundle.scheme} serial {bundle.serial} day {bundle.day}: {verdict.value}")
    return EXIT_VERIFY if verdict is Verdict.INVALID else EXIT_OK


def cmd_inspect(args) -> int:
    path = Path(args.file)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e.strerror}") from None
    if data.startswith(b"CRVP"):
        bundle = _read_bundle(args.file)
        if bundle is None:
            print("malformed proof file")
            return EXIT_VERIFY
        print(f"scheme: {bundle.scheme}\nissuer: {bundle.issuer}\nserial: {bundle.serial}\n"
              f"day: {bundle.day}\nwidth: {bundle.width}\ncommitment: {bundle.commitment.hex()}\n"
              f"proof: {bundle.proof.hex()}")
        return EXIT_OK
    args.scenario = args.file
    args.seed = None
    sys.stdout.write(_scenario(args).to_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="certrev", description="Certificate revocation schemes and their traffic cost.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, scheme_many: bool = False):
        sp.add_argument("--scenario", metavar="PATH", help="scenario file (key = value lines)")
        sp.add_argument("--seed", type=int, metavar="U64", help=f"override the scenario seed (default {DEFAULT_SEED})")
        if scheme_many:
            sp.add_argument("--scheme", action="append", choices=SCHEMES, metavar="NAME",
                            help="scheme to include; repeatable (default: all)")
        else:
            sp.add_argument("--scheme", choices=SCHEMES, metavar="NAME", help="override the scenario scheme")
        sp.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
        sp.add_argument("--format", choices=("csv", "text"), default="csv")

    s = sub.add_parser("simulate", help="run one scenario and report its cost")
    common(s)
    s.add_argument("--ledger", metavar="PATH", help="also write the per-tick ledger CSV")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("compare", help="run the scenario under several schemes")
    common(s, scheme_many=True)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("demo-crt", help="trace the three-CA revocation tree example")
    s.add_argument("--revoke", action="append", default=[], metavar="CA:SERIAL",
                   help="add a revocation, e.g. CA_2:500; repeatable")
    s.add_argument("--out", metavar="PATH")
    s.set_defaults(func=cmd_demo_crt)

    s = sub.add_parser("demo-hcrs", help="trace the 16-leaf hierarchical scheme example")
    s.add_argument("--revoked", metavar="LEAVES", help='leaf labels, comma separated, "" or "all"')
    s.add_argument("--depth", type=int, default=4, choices=range(1, 11), metavar="L")
    s.add_argument("--out", metavar="PATH")
    s.set_defaults(func=cmd_demo_hcrs)

    s = sub.add_parser("prove", help="write a self-contained proof file")
    s.add_argument("--scenario", metavar="PATH")
    s.add_argument("--seed", type=int, metavar="U64")
    s.add_argument("--scheme", choices=PROOF_SCHEMES, metavar="NAME")
    s.add_argument("--serial", type=int, required=True)
    s.add_argument("--day", type=int, default=1)
    s.add_argument("--out", metavar="PATH", required=True)
    s.set_defaults(func=cmd_prove)

    s = sub.add_parser("verify", help="check a proof file")
    s.add_argument("proof", metavar="PATH")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("inspect", help="describe a proof file or a scenario file")
    s.add_argument("file", metavar="PATH")
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
