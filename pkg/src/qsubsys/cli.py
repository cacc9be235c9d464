"""Command-line interface: JSON in, JSON or aligned-text out.

Subcommands: decompose, carve, classify, grouprep, purify, verify.  Exit
codes: 0 success, 2 validation error, 3 numerical failure, 64 usage error.
All randomness flows from the single --seed through per-subcommand child
generators, so identical input and seed produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from .carver import AgentSpec, CarveError, carve, check_no_signalling, embed_representative
from .channels import StateDM, channel_from_json
from .coherence import classify_monoid
from .group_rep import adversarial_group, close_group, isotypic_decompose
from .numerics import (
    NumericalFailure,
    Tolerance,
    matrix_from_json,
    matrix_to_json,
    max_abs,
    random_density_matrix,
)
from .purification import connect_purifications, purify
from .star_algebra import block_decompose, center, commutant, generate_algebra
from .verify import run_all_checks

USAGE_ERROR = 64
VALIDATION_ERROR = 2
NUMERICAL_ERROR = 3


@dataclass(frozen=True)
class RunConfig:
    tol: Tolerance
    seed: int
    output: str  # "json" | "text"
    max_chain: int = 8
    max_words: int = 6
    max_order: int = 512

    def __post_init__(self):
        if self.max_chain <= 0 or self.max_words <= 0 or self.max_order <= 0:
            raise ValueError("resource bounds must be positive")


class InputError(ValueError):
    pass


def _read_input(path: str | None) -> dict:
    try:
        if path is None or path == "-":
            text = sys.stdin.read()
        else:
            with open(path) as fh:
                text = fh.read()
        return json.loads(text)
    except OSError as exc:
        raise InputError(f"cannot read input: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from exc


def _require(obj: dict, key: str):
    if key not in obj:
        raise InputError(f"missing required field {key!r}")
    return obj[key]


def _parse_agent(obj: dict) -> AgentSpec:
    if "agent" in obj:
        merged = {"dimension": obj.get("dimension"), **obj["agent"]}
    else:
        merged = obj
    dim = int(_require(merged, "dimension"))
    kind = _require(merged, "kind")
    try:
        return AgentSpec(
            dim, kind,
            matrices=[matrix_from_json(m) for m in merged["matrices"]]
            if "matrices" in merged else None,
            channels=[channel_from_json(c) for c in merged["channels"]]
            if "channels" in merged else None,
            monoid=merged.get("monoid"),
        )
    except (CarveError, ValueError) as exc:
        raise InputError(str(exc)) from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_decompose(obj: dict, cfg: RunConfig) -> dict:
    agent = _parse_agent(obj)
    if agent.kind != "algebra_generators":
        raise InputError("decompose expects an algebra_generators agent")
    algebra = generate_algebra(agent.matrices, dim=agent.dim, tol=cfg.tol)
    dec = block_decompose(algebra, cfg.seed, cfg.tol)
    com = commutant(algebra, cfg.tol)
    cen = center(algebra, cfg.tol)
    return {
        "blocks": [list(b) for b in dec.blocks],
        "unitary": matrix_to_json(dec.unitary),
        "algebra_dim": algebra.space_dim,
        "commutant_dim": com.space_dim,
        "center_dim": cen.space_dim,
    }


def cmd_carve(obj: dict, cfg: RunConfig) -> dict:
    agent = _parse_agent(obj)
    sub = carve(agent, seed=cfg.seed, tol=cfg.tol)
    rng = np.random.default_rng([cfg.seed, 101])
    states = [StateDM(sub.source_dim, random_density_matrix(sub.source_dim, rng))
              for _ in range(5)]
    advs = [sub.adversary.sample(rng) for _ in range(5)]
    nosig = check_no_signalling(sub, advs, states, cfg.tol)
    idem = 0.0
    for s in states:
        once = embed_representative(sub, sub.quotient(s), cfg.tol)
        twice = embed_representative(sub, sub.quotient(once), cfg.tol)
        idem = max(idem, max_abs(once.matrix - twice.matrix))
    report = sub.to_json()
    report["checks"] = {
        "no_signalling_max_deviation": float(nosig.max_deviation),
        "no_signalling_samples": nosig.checks,
        "projection_idempotence_residual": float(idem),
    }
    return report


def cmd_classify(obj: dict, cfg: RunConfig) -> dict:
    channels = [channel_from_json(c, cfg.tol) for c in _require(obj, "channels")]
    dim = int(obj.get("dimension", channels[0].dim_in))
    for c in channels:
        if c.dim_in != dim or c.dim_out != dim:
            raise InputError("all channels must be square with the stated dimension")
    report = classify_monoid(
        channels,
        contains_classical_channels=bool(obj.get("contains_classical_channels", False)),
        tol=cfg.tol)
    return report.to_json()


def cmd_grouprep(obj: dict, cfg: RunConfig) -> dict:
    gens = [matrix_from_json(m) for m in _require(obj, "generators")]
    dim = int(_require(obj, "dimension"))
    for g in gens:
        if g.shape != (dim, dim):
            raise InputError("generators must match the stated dimension")
    rep = close_group(gens, max_order=cfg.max_order, tol=cfg.tol)
    iso = isotypic_decompose(rep, seed=cfg.seed, tol=cfg.tol)
    adv = adversarial_group(iso, seed=cfg.seed, tol=cfg.tol)
    return {
        "order": rep.order,
        "irreps": [{"dim": int(da), "mult": int(db)} for da, db in iso.blocks],
        "adversarial": {
            "permutations": [list(p) for p in adv.permutations()],
            "sectors": len(adv.entries),
            "commutant_dim": adv.commutant_dim,
        },
    }


def cmd_purify(obj: dict, cfg: RunConfig, connect: bool) -> dict:
    blocks = [tuple(int(x) for x in b) for b in _require(obj, "blocks")]
    reduced = [(float(_require(r, "p")), matrix_from_json(_require(r, "rho")))
               for r in _require(obj, "reduced")]
    wit = purify(blocks, reduced, tol=cfg.tol)
    vec = wit.global_pure
    report = {"global_vector": matrix_to_json(vec.reshape(-1, 1))}
    if connect:
        second = purify(blocks, reduced, seed=np.random.default_rng([cfg.seed, 102]),
                        tol=cfg.tol)
        con = connect_purifications(blocks, vec, second.global_pure, cfg.tol)
        report["second_vector"] = matrix_to_json(second.global_pure.reshape(-1, 1))
        report["connecting_unitary"] = matrix_to_json(con.connecting_unitary)
        report["direction"] = con.direction
    return report


def cmd_verify(cfg: RunConfig) -> tuple[dict, bool]:
    results = run_all_checks(seed=cfg.seed, tol=cfg.tol)
    ordered = sorted(results, key=lambda r: r.name)
    report = {"checks": [r.to_json() for r in ordered],
              "all_passed": all(r.passed for r in results)}
    return report, report["all_passed"]


# ---------------------------------------------------------------------------
# rendering and entry point
# ---------------------------------------------------------------------------

def render_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)


def render_text(report, indent: int = 0) -> str:
    """Aligned-text view derived from the JSON report."""
    pad = "  " * indent
    lines = []
    if isinstance(report, dict):
        if set(report) == {"rows", "cols", "data"}:
            lines.append(f"{pad}<{report['rows']}x{report['cols']} matrix>")
            return "\n".join(lines)
        for key in sorted(report):
            value = report[key]
            if isinstance(value, (dict, list)):
                lines.append(f"{pad}{key}:")
                lines.append(render_text(value, indent + 1))
            else:
                lines.append(f"{pad}{key}: {value}")
    elif isinstance(report, list):
        for item in report:
            if isinstance(item, (dict, list)):
                lines.append(f"{pad}-")
                lines.append(render_text(item, indent + 1))
            else:
                lines.append(f"{pad}- {item}")
    else:
        lines.append(f"{pad}{report}")
    return "\n".join(lines)


def _add_common_flags(parser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None

    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--tol", type=float, default=default(1e-9),
                        help="max-abs equality tolerance (default 1e-9)")
    parser.add_argument("--rank-tol", type=float, default=default(1e-10),
                        help="singular-value cutoff (default 1e-10)")
    parser.add_argument("--seed", type=int, default=default(0),
                        help="run seed (default 0)")
    parser.add_argument("--output", choices=["json", "text"], default=default("json"))
    parser.add_argument("--max-chain", type=int, default=default(8))
    parser.add_argument("--max-words", type=int, default=default(6))
    parser.add_argument("--max-order", type=int, default=default(512))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsubsys",
        description="Operational subsystems of finite-dimensional quantum systems.")
    _add_common_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command")
    subparsers = []
    for name in ("decompose", "carve", "classify", "grouprep"):
        p = sub.add_parser(name)
        p.add_argument("input", nargs="?", default=None,
                       help="input JSON path (default: stdin)")
        subparsers.append(p)
    p = sub.add_parser("purify")
    p.add_argument("input", nargs="?", default=None)
    p.add_argument("--connect", action="store_true",
                   help="also emit a second purification and the connecting unitary")
    subparsers.append(p)
    subparsers.append(sub.add_parser("verify"))
    # common flags are accepted both before and after the subcommand; the
    # subparser copies use SUPPRESS defaults so they never clobber values
    # parsed at the top level
    for p in subparsers:
        _add_common_flags(p, suppress=True)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return USAGE_ERROR
    try:
        cfg = RunConfig(tol=Tolerance(args.tol, args.rank_tol), seed=args.seed,
                        output=args.output, max_chain=args.max_chain,
                        max_words=args.max_words, max_order=args.max_order)
    except ValueError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return VALIDATION_ERROR

    exit_code = 0
    try:
        if args.command == "verify":
            report, passed = cmd_verify(cfg)
            if not passed:
                exit_code = 1
        elif args.command == "decompose":
            report = cmd_decompose(_read_input(args.input), cfg)
        elif args.command == "carve":
            report = cmd_carve(_read_input(args.input), cfg)
        elif args.command == "classify":
            report = cmd_classify(_read_input(args.input), cfg)
        elif args.command == "grouprep":
            report = cmd_grouprep(_read_input(args.input), cfg)
        elif args.command == "purify":
            report = cmd_purify(_read_input(args.input), cfg, args.connect)
        else:  # pragma: no cover
            return USAGE_ERROR
    except (InputError, CarveError, ValueError) as exc:
        print(json.dumps({"error": str(exc), "kind": "validation"}), file=sys.stderr)
        return VALIDATION_ERROR
    except NumericalFailure as exc:
        print(json.dumps({"error": str(exc), "kind": "numerical"}), file=sys.stderr)
        return NUMERICAL_ERROR

    report["seed"] = cfg.seed
    report["tolerance"] = {"eq_tol": cfg.tol.eq_tol, "rank_tol": cfg.tol.rank_tol}
    if args.output == "json":
        print(render_json(report))
    else:
        print(render_text(report))
    return exit_code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
