"""Command-line front end.

Exit codes: 0 success (all properties true), 1 some property false,
2 parse/validation/file error, 3 state-space budget exhausted, 4 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from typing import List, Optional, TextIO

from . import models
from .checker import parse_props, run_script
from .engine import Session, SessionError, digest, dump_marking, run_random
from .exprlang import SourceError
from .netmodel import ModelError, flatten, parse_model, validate_model
from .report import render_checks, render_report, to_dot
from .statespace import DEFAULT_MAX_NODES, analyze, explore

EXIT_OK, EXIT_FALSE, EXIT_INVALID, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 3, 4
PROCESS_RESULTS = "Cloud_Server.Process_Results"


class UsageError(Exception):
    pass


class InputError(Exception):
    """A model, script or file could not be read or understood."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _nonneg(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def _positive(text: str) -> int:
    n = _nonneg(text)
    if n == 0:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hcpnkit", description="Hierarchical colored Petri net toolkit.")
    subs = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def model_args(sp):
        sp.add_argument("model", nargs="?", help="path to a .hcpn model")
        sp.add_argument("--builtin", metavar="NAME", help="use a bundled model: " + ", ".join(models.BUILTINS))
        sp.add_argument("--input", type=int, metavar="CODE",
                        help="command flag for the ATC model (0, 1, 2, 3 or 5)")

    def graph_args(sp):
        sp.add_argument("--max-nodes", type=_positive, default=DEFAULT_MAX_NODES, metavar="N")
        sp.add_argument("--workers", type=_positive, default=1, metavar="N",
                        help="threads used to expand each BFS level")

    sp = subs.add_parser("validate", help="parse and check a model")
    model_args(sp)

    sp = subs.add_parser("sim", help="random simulation")
    model_args(sp)
    sp.add_argument("--seed", type=_nonneg, default=0)
    sp.add_argument("--steps", type=_nonneg, default=100)
    sp.add_argument("--scenario", type=int, choices=sorted(models.SCENARIOS), default=1,
                    help="conflict scenario used to annotate cloud predictions")
    sp.add_argument("--dump", action="store_true", help="print the full marking after each step")

    sp = subs.add_parser("step", help="interactive token game")
    model_args(sp)

    for name, helptext in (("statespace", "build the occurrence graph"),
                           ("analyze", "liveness and boundedness report")):
        sp = subs.add_parser(name, help=helptext)
        model_args(sp)
        graph_args(sp)
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--dot", metavar="PATH", help="write the graph in DOT format")
        sp.add_argument("--json", metavar="PATH", help="write the JSON report")

    sp = subs.add_parser("check", help="evaluate a property script")
    model_args(sp)
    graph_args(sp)
    sp.add_argument("--props", required=True, metavar="PATH",
                    help="a .ctl file, or builtin:fig13 / builtin:fig14 / builtin:fig15")
    sp.add_argument("--format", choices=("text", "json"), default="text")
    return p


# ---------------------------------------------------------------------------


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except FileNotFoundError:
        raise InputError(f"{path}: file not found") from None
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"{path}: cannot read ({e})") from None


def _model_text(args) -> tuple:
    if args.model and args.builtin:
        raise UsageError("give either a model path or --builtin, not both")
    if not args.model and not args.builtin:
        raise UsageError("a model path or --builtin NAME is required")
    if args.builtin:
        if args.builtin not in models.BUILTINS:
            raise UsageError(f"unknown builtin {args.builtin!r}; choose from {', '.join(models.BUILTINS)}")
        if args.input is not None:
            if args.builtin != "atc_metaverse":
                raise UsageError("--input only applies to --builtin atc_metaverse")
            try:
                return models.atc_with_input(args.input), f"atc_metaverse (input {args.input})"
            except ValueError as e:
                raise UsageError(str(e)) from None
        return models.load_builtin(args.builtin), args.builtin
    if args.input is not None:
        raise UsageError("--input only applies to --builtin atc_metaverse")
    return _read(args.model), args.model


def _load(args):
    text, origin = _model_text(args)
    try:
        return flatten(parse_model(text)), origin
    except ModelError as e:
        raise InputError(f"{origin}:\n" + "\n".join(f"  {d}" for d in e.diagnostics)) from None


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hcpnkit-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_validate(args, out: TextIO) -> int:
    text, origin = _model_text(args)
    try:
        m = parse_model(text)
    except ModelError as e:
        raise InputError(f"{origin}:\n" + "\n".join(f"  {d}" for d in e.diagnostics)) from None
    diags = validate_model(m)
    if not diags and args.builtin and args.builtin.startswith("fomav_"):
        diags = models.validate_fomav_wiring(m, models.spec_for_builtin(args.builtin))
    errors = [d for d in diags if d.severity == "error"]
    for d in diags:
        out.write(f"{d}\n")
    if errors:
        return EXIT_INVALID
    out.write(f"{origin}: ok ({len(m.pages)} pages, main {m.main})\n")
    return EXIT_OK


def cmd_sim(args, out: TextIO) -> int:
    net, _ = _load(args)
    trace = run_random(net, args.seed, args.steps)
    out.write(f"seed {args.seed}, {len(trace)} step(s), initial {digest(trace.initial)}\n")
    for line, (be, after) in zip(trace.lines(), trace.steps):
        out.write(line + "\n")
        if be.transition.endswith("." + PROCESS_RESULTS) or be.transition == PROCESS_RESULTS:
            out.write(f"  recommendation (scenario {args.scenario}): "
                      f"{models.conflict_recommendation(args.scenario)}\n")
        if args.dump:
            out.write("  " + dump_marking(after).replace("\n", "\n  ") + "\n")
    if len(trace) < args.steps:
        out.write("dead marking reached\n")
    return EXIT_OK


def cmd_step(args, out: TextIO, inp: TextIO) -> int:
    net, _ = _load(args)
    session = Session(net)
    out.write("commands: <n> fire option n, u undo, m show marking, q quit\n")
    while True:
        options = session.list()
        if options:
            for i, be in enumerate(options, 1):
                out.write(f"  {i}. {be}\n")
        else:
            out.write("  (dead marking: nothing enabled)\n")
        out.write("> ")
        out.flush()
        line = inp.readline()
        if not line:
            out.write("\n")
            return EXIT_OK
        cmd = line.strip()
        try:
            if cmd == "q":
                return EXIT_OK
            if cmd == "u":
                session.undo()
                out.write("undone\n")
            elif cmd == "m":
                out.write(dump_marking(session.current) + "\n")
            elif cmd.isdigit():
                session.step(int(cmd) - 1)
                out.write(f"fired {session.fired[-1]} -> {digest(session.current)}\n")
            elif cmd:
                out.write(f"unknown command {cmd!r}\n")
        except SessionError as e:
            out.write(f"error: {e}\n")


def _explore(args, net):
    return explore(net, max_nodes=args.max_nodes, workers=args.workers)


def cmd_graph(args, out: TextIO, err: TextIO) -> int:
    net, _ = _load(args)
    g = _explore(args, net)
    report = analyze(g)
    json_text = render_report(report, "json")
    if args.dot:
        _write_atomic(args.dot, to_dot(g))
    if args.json:
        _write_atomic(args.json, json_text)
    if args.format == "json":
        out.write(json_text)
    elif args.command == "statespace":
        out.write(f"nodes: {report.nodes}, edges: {report.edges}, exhausted: "
                  f"{'yes' if report.exhausted else 'no'}\n")
    else:
        out.write(render_report(report, "text"))
    if g.exhausted:
        err.write(f"state space budget of {args.max_nodes} nodes exhausted\n")
        return EXIT_BUDGET
    return EXIT_OK


def cmd_check(args, out: TextIO, err: TextIO) -> int:
    net, _ = _load(args)
    if args.props.startswith("builtin:"):
        try:
            text = models.load_props(args.props[len("builtin:"):])
        except KeyError as e:
            raise UsageError(e.args[0]) from None
    else:
        text = _read(args.props)
    try:
        script = parse_props(text, net)
    except SourceError as e:
        raise InputError(f"{args.props}: {e}") from None
    g = _explore(args, net)
    if g.exhausted:
        err.write(f"state space budget of {args.max_nodes} nodes exhausted; "
                         "properties cannot be decided\n")
        return EXIT_BUDGET
    try:
        results = run_script(g, script)
    except ValueError as e:
        raise InputError(f"{args.props}: {e}") from None
    out.write(render_checks(results, args.format))
    return EXIT_OK if all(r.verdict for r in results) else EXIT_FALSE


def run(argv: Optional[List[str]] = None, out: TextIO | None = None, err: TextIO | None = None,
        inp: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        if args.command == "validate":
            return cmd_validate(args, out)
        if args.command == "sim":
            return cmd_sim(args, out)
        if args.command == "step":
            return cmd_step(args, out, inp or sys.stdin)
        if args.command in ("statespace", "analyze"):
            return cmd_graph(args, out, err)
        return cmd_check(args, out, err)
    except UsageError as e:
        err.write(f"usage error: {e}\n")
        parser.print_usage(err)
        return EXIT_USAGE
    except InputError as e:
        err.write(f"error: {e}\n")
        return EXIT_INVALID
    except OSError as e:
        err.write(f"error: {e}\n")
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
