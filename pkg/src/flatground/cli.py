"""Command-line front end.

    flatground [FILE ...] [--mode=MODE] [--maxNesting=K] [--show-ids] [--stats]

Files are concatenated in order; with no file the program is read from
standard input.  Exit status: 0 on success, 1 when the program is rejected,
2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Optional

from .depgraph import build_dependency_graph
from .errors import ProgramError
from .grounder import GroundProgram, Grounder
from .oracle import answer_sets, format_answer_set, naive_ground
from .parser import parse_program
from .reorder import reorder_program
from .rewriter import rewrite_program
from .syntax import print_program
from .terms import TermStore

MODES = ("parse", "rewrite", "reorder", "depgraph", "ground", "answersets")


@dataclass
class RunConfig:
    inputs: list = field(default_factory=list)
    mode: str = "ground"
    max_nesting: Optional[int] = None
    show_ids: bool = False
    oracle: bool = False
    stats: bool = False


def _nesting(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid bound {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"maxNesting must be non-negative, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flatground",
        description="Ground disjunctive logic programs with function symbols.",
    )
    parser.add_argument("inputs", nargs="*", metavar="FILE", help="program files (default: standard input)")
    parser.add_argument("--mode", choices=MODES, default="ground")
    parser.add_argument(
        "--maxNesting",
        "-maxNesting",
        dest="max_nesting",
        type=_nesting,
        metavar="K",
        help="never create terms with nesting level above K (guarantees termination)",
    )
    parser.add_argument("--show-ids", action="store_true", help="print terms as @k identifiers plus table dumps")
    parser.add_argument("--stats", action="store_true", help="print grounding statistics to standard error")
    parser.add_argument("--oracle", action="store_true", help=argparse.SUPPRESS)
    return parser


def _format_stats(stats: dict) -> str:
    lines = [f"% table {symbol}: {size} entries" for symbol, size in stats["tables"].items()]
    for key in ("invented", "committed", "rolled_back", "nesting_pruned", "instantiations", "ground_rules", "facts"):
        lines.append(f"% {key}: {stats[key]}")
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig, text: str, err=sys.stderr) -> tuple[int, str]:
    """Run one invocation on program ``text``; returns (exit status, output)."""
    try:
        program = parse_program(text)
        if cfg.mode == "parse":
            return 0, print_program(program)
        if cfg.max_nesting is None and cfg.mode in ("ground", "answersets"):
            err.write(
                "warning: no --maxNesting bound given; termination is the programmer's responsibility\n"
            )
        if cfg.oracle and cfg.mode in ("ground", "answersets"):
            reference = naive_ground(program, cfg.max_nesting)
            if cfg.mode == "ground":
                lines = sorted(f"{atom}." for atom in reference.facts)
                lines += sorted(_format_readback_rule(rule) for rule in reference.rules)
                return 0, "".join(f"{line}\n" for line in lines)
            return 0, _format_models(answer_sets(reference))
        fp = rewrite_program(program, TermStore(), cfg.max_nesting)
        if cfg.mode == "rewrite":
            return 0, str(fp)
        fp = reorder_program(fp)
        if cfg.mode == "reorder":
            return 0, str(fp)
        if cfg.mode == "depgraph":
            return 0, build_dependency_graph(fp.rules, fp.facts).to_dot()
        gp: GroundProgram = Grounder(fp.store, max_nesting=cfg.max_nesting).ground(fp)
        if cfg.stats:
            err.write(_format_stats(gp.stats))
        if cfg.mode == "ground":
            return 0, gp.format(show_ids=cfg.show_ids)
        return 0, _format_models(answer_sets(gp))
    except ProgramError as exc:
        err.write(f"error: {exc}\n")
        return 1, ""


def _format_readback_rule(rule) -> str:
    return rule.format(str)


def _format_models(models) -> str:
    return "".join(f"{line}\n" for line in sorted(format_answer_set(m) for m in models))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig(
        inputs=args.inputs,
        mode=args.mode,
        max_nesting=args.max_nesting,
        show_ids=args.show_ids,
        oracle=args.oracle,
        stats=args.stats,
    )
    chunks = []
    try:
        for path in cfg.inputs:
            with open(path, encoding="utf-8") as handle:
                chunks.append(handle.read())
    except OSError as exc:
        parser.error(str(exc))
    if not cfg.inputs:
        chunks.append(sys.stdin.read())
    status, output = run(cfg, "\n".join(chunks))
    sys.stdout.write(output)
    return status


if __name__ == "__main__":
    sys.exit(main())
