"""Command line interface: `rmpst <command> PROTOCOL [options]`.

PROTOCOL is a protocol file or the name of a bundled example. Exit status is
0 on success, 1 when the analysis fails and 2 for usage or environment errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from . import corpus
from .cfsm import to_cfsm
from .core.context import GlobalContext
from .core.errors import (ChooserError, DiagnosticError, ExplorationBudgetExceeded, NotProjectable, ProjectionError,
                          RmpstError, SolverUnavailable)
from .core.printer import pretty
from .core.types import participants
from .frontend import parse_module, desugar
from .project import DEFAULT_MERGE, project
from .refine.solver import DEFAULT_BOUND, DEFAULT_TIMEOUT_MS, Checker, set_default_checker

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def load_input(spec: str, protocol: Optional[str] = None) -> tuple[str, object]:
    """(name, global type) for a file path or a bundled example name."""
    path = Path(spec)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    elif spec.lower() in corpus.NAMES:
        text = corpus.source(spec.lower())
    else:
        raise UsageError(f"{spec}: no such file or bundled protocol (bundled: {', '.join(corpus.NAMES)})")
    module = parse_module(text)
    name = protocol or module.main
    if name not in module.protocols:
        raise UsageError(f"no protocol {name} in {spec}; found {', '.join(module.protocols)}")
    return name, desugar(module, name)


def make_checker(args) -> Checker:
    solver = args.solver or os.environ.get("RMPST_SOLVER")
    timeout = args.solver_timeout or int(os.environ.get("RMPST_SOLVER_TIMEOUT", DEFAULT_TIMEOUT_MS))
    if solver == "enumerate":
        return Checker(mode="enumerate", bound=args.bound)
    return Checker(mode="solver", solver=solver, timeout_ms=timeout, bound=args.bound)


def _emit_json(args, data) -> None:
    text = json.dumps(data, indent=2, default=str)
    if args.json == "-":
        print(text)
    else:
        Path(args.json).write_text(text + "\n", encoding="utf-8")


def _roles(args, g) -> list[str]:
    roles = sorted(participants(g))
    if args.role is None:
        return roles
    if args.role not in roles:
        raise UsageError(f"role {args.role} is not a participant; roles are {', '.join(roles)}")
    return [args.role]


def cmd_check(args, name, g, checker) -> int:
    from .check import check_protocol
    rep = check_protocol(GlobalContext(), g, merge=args.merge, checker=checker)
    if args.json:
        _emit_json(args, {"protocol": name, **rep.to_dict()})
    if rep.ok:
        print(f"{name}: well-formed; roles {', '.join(rep.roles)}")
    else:
        print(f"{name}: not well-formed")
        for role, err in sorted(rep.failures.items()):
            print(f"  {role}: {err}")
    for e in rep.empty:
        print(f"warning: {e}")
    if not rep.ok or (args.strict and rep.empty):
        return EXIT_FAIL
    return EXIT_OK


def cmd_project(args, name, g, checker) -> int:
    out = {}
    for r in _roles(args, g):
        ctx, lt = project(GlobalContext(), g, r, merge=args.merge, checker=checker)
        out[r] = {"context": str(ctx), "type": pretty(lt)}
        print(f"{r}: {pretty(lt)}")
    if args.json:
        _emit_json(args, {"protocol": name, "projections": out})
    return EXIT_OK


def _machine(args, g, checker, role):
    ctx, lt = project(GlobalContext(), g, role, merge=args.merge, checker=checker)
    return to_cfsm(ctx, lt, role)


def cmd_fsm(args, name, g, checker) -> int:
    machines = {r: _machine(args, g, checker, r) for r in _roles(args, g)}
    if args.json:
        _emit_json(args, {"protocol": name, "machines": {r: m.to_dict() for r, m in machines.items()}})
    for r, m in machines.items():
        if args.dot:
            sys.stdout.write(m.to_dot())
            continue
        print(f"{r}: {len(m.states)} states, initial {m.initial}, terminal {m.terminal}")
        for s in sorted(m.states.values(), key=lambda s: s.id):
            print(f"  {s.id} {s.kind}{' ' + s.peer if s.peer else ''}  [{s.context}]")
        for t in m.transitions:
            ups = f"  {{{', '.join(f'{x} := {e}' for x, e in t.updates)}}}" if t.updates else ""
            print(f"  {t.src} -> {t.dst}  {t.peer}{t.direction}{t.label}({t.type}){ups}")
    return EXIT_OK


def cmd_gen(args, name, g, checker) -> int:
    from .codegen.generate import generate
    if args.role is None:
        raise UsageError("gen needs --role")
    src = generate(_machine(args, g, checker, args.role), name)
    if args.out:
        out = Path(args.out)
        if out.suffix != ".py":
            out.mkdir(parents=True, exist_ok=True)
            out = out / f"{name.lower()}_{args.role.lower()}.py"
        out.write_text(src, encoding="utf-8")
        print(f"wrote {out}")
    else:
        sys.stdout.write(src)
    return EXIT_OK


def cmd_trace_eq(args, name, g, checker) -> int:
    from .semantics import check_trace_equivalence
    rep = check_trace_equivalence(GlobalContext(), g, args.depth or 6, budget=args.budget, merge=args.merge,
                                  checker=checker)
    if args.json:
        _emit_json(args, {"protocol": name, **rep.to_dict()})
    if rep.equal:
        print(f"{name}: equal; global and configuration traces agree up to depth {rep.depth} ({rep.global_traces} traces)")
        print(f"note: {rep.note}")
        return EXIT_OK
    print(f"{name}: traces differ; first divergence: {rep.to_dict()['first_divergence']}")
    return EXIT_FAIL


def cmd_progress(args, name, g, checker) -> int:
    from .semantics import check_progress
    rep = check_progress(GlobalContext(), g, args.depth or 8, budget=args.budget, merge=args.merge, checker=checker)
    if args.json:
        _emit_json(args, {"protocol": name, **rep.to_dict()})
    if rep.ok:
        print(f"{name}: no stuck configuration up to depth {rep.depth} ({rep.explored} configurations)")
        return EXIT_OK
    print(f"{name}: stuck configuration after {' . '.join(rep.to_dict()['stuck_after'] or [])}")
    return EXIT_FAIL


def cmd_simulate(args, name, g, checker) -> int:
    from .simulate import simulate_strategy
    from .strategies import STRATEGIES, strategy_for
    strategy = (args.strategy or name).lower()
    if strategy_for(strategy) is None:
        raise UsageError(f"no strategy {strategy}; available: {', '.join(STRATEGIES)}")
    opts = {}
    if args.rounds is not None:
        opts["rounds"] = args.rounds
    if args.secret is not None:
        opts["secret"] = args.secret
    if args.limit is not None:
        opts["limit"] = args.limit
    res = simulate_strategy(GlobalContext(), g, strategy, args.seed, merge=args.merge, checker=checker, **opts)
    if args.json:
        _emit_json(args, {"protocol": name, **res.to_dict()})
    print(f"{name}: {res.messages} messages in {res.elapsed:.3f}s")
    for r in sorted(res.logs):
        print(f"  {r}: {' '.join(f'{p}{d}{lab}' for d, p, lab in res.logs[r])}")
    for r, e in sorted(res.errors.items()):
        print(f"  {r} failed: {e}")
    if res.replay is not None:
        verdict = "replays" if res.replay.ok else f"does not replay (stuck at {res.replay.stuck})"
        print(f"  run {verdict} against the projected configuration"
              + ("" if res.replay.terminal or not res.replay.ok else "; not terminal"))
    return EXIT_OK if res.ok else EXIT_FAIL


COMMANDS = {"check": cmd_check, "project": cmd_project, "fsm": cmd_fsm, "gen": cmd_gen, "trace-eq": cmd_trace_eq,
            "progress": cmd_progress, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("protocol", help="protocol file or bundled example name")
    common.add_argument("--name", help="protocol to use when the file declares several")
    common.add_argument("--role", help="restrict to one role")
    merge = common.add_mutually_exclusive_group()
    merge.add_argument("--full-merge", dest="merge", action="store_const", const="full",
                       help="merge differing branches for uninvolved roles (default)")
    merge.add_argument("--plain-merge", dest="merge", action="store_const", const="plain",
                       help="only merge identical branches")
    common.set_defaults(merge=DEFAULT_MERGE)
    common.add_argument("--solver", help="SMT solver executable, or 'enumerate' for bounded enumeration")
    common.add_argument("--solver-timeout", type=int, help="solver timeout in milliseconds")
    common.add_argument("--bound", type=int, default=DEFAULT_BOUND, help="enumeration bound per integer variable")
    common.add_argument("--json", nargs="?", const="-", metavar="OUT", help="write a JSON report (default stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="rmpst", description="Refined multiparty session types toolkit")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("check", parents=[common], help="check projectability and payload types")
    p.add_argument("--strict", action="store_true", help="fail when a payload type is empty")
    sub.add_parser("project", parents=[common], help="print local types")
    p = sub.add_parser("fsm", parents=[common], help="print state machines")
    p.add_argument("--dot", action="store_true", help="Graphviz output")
    p = sub.add_parser("gen", parents=[common], help="generate a Python endpoint API")
    p.add_argument("--out", help="output directory, or a .py file (default stdout)")
    for cmd, depth in (("trace-eq", 6), ("progress", 8)):
        p = sub.add_parser(cmd, parents=[common], help=f"bounded {cmd} check (default depth {depth})")
        p.add_argument("--depth", type=int)
        p.add_argument("--budget", type=int, default=50_000)
    p = sub.add_parser("simulate", parents=[common], help="run all endpoints in-process with a bundled strategy")
    p.add_argument("--strategy", help="strategy name (default: the protocol's)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rounds", type=int, help="PingPong rounds")
    p.add_argument("--secret", type=int, help="HigherLower secret")
    p.add_argument("--limit", type=int, help="HigherLower attempts")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        checker = make_checker(args)
        set_default_checker(checker)
        name, g = load_input(args.protocol, args.name)
        return COMMANDS[args.command](args, name, g, checker)
    except UsageError as e:
        print(f"rmpst: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SolverUnavailable as e:
        print(f"rmpst: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DiagnosticError as e:
        for d in e.diagnostics:
            print(f"{args.protocol}:{d}", file=sys.stderr)
        return EXIT_FAIL
    except ExplorationBudgetExceeded as e:
        print(f"rmpst: {e}; raise --budget or lower --depth", file=sys.stderr)
        return EXIT_FAIL
    except (NotProjectable, ProjectionError, ChooserError) as e:
        print(f"rmpst: {e}", file=sys.stderr)
        return EXIT_FAIL
    except RmpstError as e:
        print(f"rmpst: {e}", file=sys.stderr)
        return EXIT_FAIL
    finally:
        set_default_checker(None)


if __name__ == "__main__":
    sys.exit(main())
