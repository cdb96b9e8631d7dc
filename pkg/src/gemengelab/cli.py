"""``gemengelab`` command line: run scenario files or built-in presets.

Exit status is 0 when every check passes, 1 when any check fails and 2 for
usage, parse or setup errors.
"""

from __future__ import annotations

import argparse
import sys

from gemengelab.errors import GemengeLabError
from gemengelab.scenario import PRESET_NAMES, SPIN_INPUTS, load_file, preset, run_scenario
from gemengelab.serialize import dumps

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _tolerance(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {key!r} needs a number, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--tol", type=_tolerance, action="append", default=[], metavar="KEY=VAL",
                        help="override a tolerance (norm, herm, orth, pos, eq, var, rec); repeatable")
    common.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    parser = argparse.ArgumentParser(prog="gemengelab", description=__doc__.splitlines()[0])
    parser.add_argument("--list-presets", action="store_true", help="print preset names and exit")
    sub = parser.add_subparsers(dest="command")
    run = sub.add_parser("run", parents=[common], help="run one or more .scn files")
    run.add_argument("files", nargs="+", metavar="FILE")
    pre = sub.add_parser("preset", parents=[common], help="run a built-in scenario")
    pre.add_argument("name", choices=PRESET_NAMES)
    pre.add_argument("--input", default=None, choices=sorted(SPIN_INPUTS),
                     help="spin input state for the Stern-Gerlach presets")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        print("\n".join(PRESET_NAMES))
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    opts = {"overrides": dict(args.tol) or None, "seed": args.seed}
    reports = []
    try:
        if args.command == "run":
            for path in args.files:
                try:
                    reports.append(run_scenario(load_file(path, **opts)))
                except GemengeLabError as exc:
                    raise GemengeLabError(f"{path}: {exc}") from None
        else:
            reports.append(run_scenario(preset(args.name, args.input, **opts)))
    except (GemengeLabError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) else exc
        print(f"gemengelab: error: {msg}", file=sys.stderr)
        return EXIT_USAGE

    text = dumps(reports[0] if len(reports) == 1 else reports)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    for r in reports:
        for c in r["checks"]:
            if not c["passed"]:
                print(f"gemengelab: {r['scenario']}: check '{c['name']}' failed: {c['detail']}", file=sys.stderr)
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
