import argparse
import json
import sys
import time

from .utils.base import EMPTY_BASE, extend, format_base, format_rule
from .utils.common import budget_from, build_config, read_input
from .utils.completeness import Provable, decide_validity
from .utils.constants import (
    EXIT_INVALID_PROOF,
    EXIT_NOT_FOUND,
    EXIT_OK,
    EXIT_PARSE_ERROR,
    FRAME_TABLE,
    START_TIME,
)
from .utils.corpus import FAIL, Corpus, report_table
from .utils.custom_exceptions import (
    BaseFormatError,
    ConfigError,
    ExceptionHandler,
    ExtractionError,
    MalformedProofError,
    ParseError,
    ProofCheckError,
    SequentError,
)
from .utils.custom_types import Config
from .utils.helpers import create_dirs
from .utils.logger import logger
from .utils.proofs import (
    Graph,
    NDProof,
    check_nd_proof,
    dump_proof,
    load_proof,
    proof_lines,
)
from .utils.prover import prove_nd
from .utils.support import default_universe, falsify_validity
from .utils.syntax import (
    ALL_CONDITIONS,
    ExtendedSequent,
    Sequent,
    format_frames,
    parse_frames,
    parse_sequent,
)

__version__ = "0.0.0"

INPUT_ERRORS = (ParseError, SequentError, BaseFormatError, ConfigError)
PROOF_ERRORS = (MalformedProofError, ProofCheckError, ExtractionError)


def write_artifact(path: str, text: str):
    create_dirs(path)
    with open(path, mode="w") as artifact:
        artifact.write(text + "\n")
    logger.info("Artifact written", path)


def claim_graph(seq: Sequent) -> Graph:
    return Graph.spanning(list(seq.context) + [seq.goal])


def emit_proof(config: Config, seq: Sequent, proof: NDProof) -> int:
    """Re-parse and re-check the proof, then print it."""
    text = dump_proof(proof)
    reloaded = load_proof(text)
    gamma = parse_frames(config["frames"])
    if reloaded != proof or not check_nd_proof(gamma, claim_graph(seq), reloaded, seq):
        logger.error("Refusing to emit a proof that does not re-check")
        return EXIT_INVALID_PROOF
    if config["format"] == "json":
        print(text)
    else:
        print("\n".join(proof_lines(proof)))
    if config["emit_proof"]:
        write_artifact(config["emit_proof"], text)
    logger.okay("Proof size", proof.size())
    return EXIT_OK


def run_prove(config: Config, source: str) -> int:
    seq = parse_sequent(read_input(source))
    gamma = parse_frames(config["frames"])
    budget = budget_from(config)
    logger.info(f"Searching for a proof of {seq} under frames {{{format_frames(gamma)}}}")
    proof = prove_nd(gamma, claim_graph(seq), seq, budget)
    if proof is None:
        logger.warn(f"Not proved within budget {budget}")
        return EXIT_NOT_FOUND
    return emit_proof(config, seq, proof)


def run_check(config: Config, proof_source: str, claim_source: str) -> int:
    proof = load_proof(read_input(proof_source))
    seq = parse_sequent(read_input(claim_source))
    gamma = parse_frames(config["frames"])
    if not check_nd_proof(gamma, claim_graph(seq), proof, seq):
        return EXIT_INVALID_PROOF
    logger.okay("Proof accepted", str(seq))
    return EXIT_OK


def run_decide(config: Config, source: str) -> int:
    seq = parse_sequent(read_input(source))
    gamma = parse_frames(config["frames"])
    budget = budget_from(config)
    logger.info(f"Deciding {seq} through the simulation base")
    decision = decide_validity(gamma, seq, budget)
    if config["emit_base"]:
        simulation = decision.simulation
        lines = [simulation.describe(rule) for rule in sorted(simulation.base.ground, key=format_rule)]
        lines += [simulation.describe(rule) for rule in sorted(simulation.base.schematic, key=format_rule)]
        write_artifact(config["emit_base"], "\n".join(lines))
    if not isinstance(decision, Provable):
        logger.warn(f"Not derivable in the simulation base within budget {budget}")
        return EXIT_NOT_FOUND
    logger.okay("Atomic derivation size", decision.derivation.size())
    return emit_proof(config, seq, decision.proof)


def run_falsify(config: Config, source: str) -> int:
    seq = parse_sequent(read_input(source))
    gamma = parse_frames(config["frames"])
    universe = default_universe(ExtendedSequent(seq.context, seq.goal), max_extra=config["pool_extra"])
    logger.info(f"Searching {len(universe.candidate_rules)} candidate rules for a countermodel of {seq}")
    verdict = falsify_validity(gamma, seq, universe, budget_from(config))
    if not verdict.falsified:
        logger.warn("No counterexample within bounds", verdict.status.value)
        return EXIT_NOT_FOUND
    witness = verdict.witness
    if config["format"] == "json":
        print(
            json.dumps(
                {
                    "status": verdict.status.value,
                    "refuted": str(witness.root),
                    "extension": [format_rule(rule) for rule in witness.extension],
                    "query": str(witness.query),
                    "reason": witness.reason,
                },
                indent=2,
            )
        )
    else:
        print(witness.describe())
    if config["emit_base"]:
        write_artifact(config["emit_base"], format_base(extend(EMPTY_BASE, witness.extension)))
    return EXIT_OK


def run_corpus(config: Config, explicit_frames: bool) -> int:
    frames = parse_frames(config["frames"]) if explicit_frames else frozenset(ALL_CONDITIONS)
    ExceptionHandler.initialize(False)
    corpus = Corpus(frames, budget_from(config), config["pool_extra"], config["seed"])
    rows = corpus.run()
    logger.divider()
    logger.report_table(report_table(rows))
    for result in rows:
        print(json.dumps(result))
    failed = [result["id"] for result in rows if result["status"] == FAIL]
    if failed:
        logger.error("Failed criteria", ", ".join(failed))
        return EXIT_NOT_FOUND
    logger.okay("All criteria passed")
    return EXIT_OK


def run_frames(config: Config) -> int:
    if config["format"] == "json":
        for key, (name, condition, axiom) in FRAME_TABLE.items():
            print(json.dumps({"code": key, "name": name, "condition": condition, "axiom": axiom}))
    else:
        for key, (name, condition, axiom) in FRAME_TABLE.items():
            print(f"{key}  {name:<13} {condition:<48} {axiom}")
    return EXIT_OK


def add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--frames", "-F", default=None, help="Comma-separated frame conditions, e.g. T,4")
    parser.add_argument("--depth", type=int, default=None, help="Maximum search depth")
    parser.add_argument("--modal-uses", type=int, default=None, help="Maximum modal case steps per branch")
    parser.add_argument("--fresh", type=int, default=None, help="Number of fresh labels available")
    parser.add_argument("--pool-extra", type=int, default=None, help="Extra rules per base extension")
    parser.add_argument("--format", choices=("json", "text"), default=None, help="Artifact format on stdout")
    parser.add_argument("--seed", type=int, default=None, help="Seed for randomized corpus sections")
    parser.add_argument("--emit-base", default=None, help="Write the constructed base to this path")
    parser.add_argument("--emit-proof", default=None, help="Write the emitted proof to this path")
    parser.add_argument("--config", "-C", default=None, help="Path to a JSON config file")


def parse_arguments(argv=None):
    parser = argparse.ArgumentParser(prog="imbes")
    parser.add_argument("--version", "-V", action="store_true", help="Display version information")
    commands = parser.add_subparsers(dest="command")

    prove = commands.add_parser("prove", help="Search for a natural deduction proof")
    prove.add_argument("sequent", help="Sequent text, a file path, or - for stdin")
    check = commands.add_parser("check", help="Check a proof object against a claim")
    check.add_argument("proof", help="Proof JSON, a file path, or - for stdin")
    check.add_argument("claim", help="Claimed sequent")
    decide = commands.add_parser("decide", help="Prove through the simulation base and extract a proof")
    decide.add_argument("sequent", help="Sequent text, a file path, or - for stdin")
    falsify = commands.add_parser("falsify", help="Search for a base that refutes validity")
    falsify.add_argument("sequent", help="Sequent text, a file path, or - for stdin")
    corpus = commands.add_parser("corpus", help="Run the regression corpus")
    frames = commands.add_parser("frames", help="List the supported frame conditions")

    for command in (prove, check, decide, falsify, corpus, frames):
        add_common_arguments(command)
    return parser, parser.parse_args(argv)


def dispatch(args, config: Config) -> int:
    if args.command == "prove":
        return run_prove(config, args.sequent)
    if args.command == "check":
        return run_check(config, args.proof, args.claim)
    if args.command == "decide":
        return run_decide(config, args.sequent)
    if args.command == "falsify":
        return run_falsify(config, args.sequent)
    if args.command == "corpus":
        return run_corpus(config, args.frames is not None)
    return run_frames(config)


def run(argv=None) -> int:
    parser, args = parse_arguments(argv)
    if args.version:
        print(f"Imbes {__version__}")
        return EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_PARSE_ERROR

    overrides = {
        "frames": args.frames,
        "depth": args.depth,
        "modal_uses": args.modal_uses,
        "fresh": args.fresh,
        "pool_extra": args.pool_extra,
        "format": args.format,
        "seed": args.seed,
        "emit_base": args.emit_base,
        "emit_proof": args.emit_proof,
    }
    try:
        config = build_config(overrides, args.config)
        return dispatch(args, config)
    except INPUT_ERRORS as error:
        logger.error(error.message)
        return EXIT_PARSE_ERROR
    except PROOF_ERRORS as error:
        logger.error(error.message)
        return EXIT_INVALID_PROOF
    except KeyboardInterrupt:
        logger.info("Keyboard interrupt by user")
        return EXIT_NOT_FOUND


def main():
    code = run()
    execution_time = time.time() - START_TIME
    logger.okay(f"Done in {round(execution_time, 3)}s ✨")
    sys.exit(code)


if __name__ == "__main__":
    main()
