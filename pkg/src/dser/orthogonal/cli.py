"""CLI handlers for the orthogonal group commands."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable

from .config import RunConfig, resolve_config
from .errors import UsageError
from .matrix import matrix_to_json
from .quadspace import QuadSetup, is_orthogonal
from .report import Report, write_report
from .ring import RingSpec

logger = logging.getLogger(__name__)


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every subcommand; unset flags fall back to --config, then defaults."""
    parser.add_argument("--ring", help="Ring: 'rationals' or 'zmod:<n>' with n odd (default zmod:5).")
    parser.add_argument("--n", type=int, help="Rank of the quadratic space Q.")
    parser.add_argument("--m", type=int, help="Number of hyperbolic planes.")
    parser.add_argument("--phi", help="Form on Q as rows separated by ';', e.g. '1 0;0 2'. Defaults to the identity.")
    parser.add_argument("--seed", type=int, help="Seed for every randomized trial (default 42).")
    parser.add_argument("--trials", type=int, help="Number of randomized trials.")
    parser.add_argument("--budget", type=int, help="Element budget for enumerations (default 2000000 or DSER_BUDGET).")
    parser.add_argument("--output", type=Path, help="Write the JSON report here instead of stdout.")
    parser.add_argument("--config", type=Path, help="YAML file with any of the settings above.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log progress at DEBUG level.")


def add_verify_relations_parser(subparsers: Any) -> None:
    """Add the 'verify-relations' subcommand parser."""
    from .relations import RELATION_IDS

    parser = subparsers.add_parser(
        "verify-relations",
        help="Check the commutator relations on random admissible cases",
        description="Evaluate both sides of every commutator relation exactly on seeded random cases.",
    )
    add_common_arguments(parser)
    parser.add_argument("--relation", choices=(*RELATION_IDS, "all"), default="all", help="Relation to check.")
    parser.add_argument(
        "--mutate",
        action="store_true",
        help="Corrupt one derived parameter per case; the run passes when every relation detects it.",
    )


def add_factor_conjugate_parser(subparsers: Any) -> None:
    """Add the 'factor-conjugate' subcommand parser."""
    from .normalizer import CLASSES

    parser = subparsers.add_parser(
        "factor-conjugate",
        help="Check the conjugation factorizations of m-subscripted generators",
        description="Compare each four-factor word against T^-1 . gen . T for random T at rank m-1.",
    )
    add_common_arguments(parser)
    parser.add_argument("--class", dest="cls", choices=(*CLASSES, "all"), default="all", help="Generator class.")


def add_reduce_parser(subparsers: Any) -> None:
    """Add the 'reduce' subcommand parser."""
    parser = subparsers.add_parser(
        "reduce",
        help="Reduce an EO element to the stabilized image",
        description="Run the rho1..rho4 reduction on a word and report the trace and residual.",
    )
    add_common_arguments(parser)
    parser.add_argument("--word", type=Path, help="Word file (JSON). Without it a random word is used.")
    parser.add_argument("--length", type=int, default=6, help="Length of the random word (default 6).")
    parser.add_argument(
        "--witness",
        action="store_true",
        help="Also build normality witnesses for --trials random indexed generators.",
    )


def add_decompose_parser(subparsers: Any) -> None:
    """Add the 'decompose' subcommand parser."""
    parser = subparsers.add_parser(
        "decompose",
        help="Reduced FDG decomposition of EO words",
        description="Decompose a word (or --trials random words) as eta . xi . mu with eta in F, xi in D, mu in G.",
    )
    add_common_arguments(parser)
    parser.add_argument("--word", type=Path, help="Word file (JSON). Without it random words are used.")
    parser.add_argument("--length", type=int, default=8, help="Length of the random words (default 8).")


def add_enumerate_parser(subparsers: Any) -> None:
    """Add the 'enumerate' subcommand parser."""
    parser = subparsers.add_parser(
        "enumerate",
        help="Enumerate O and EO over a small residue ring",
        description="Exhaustive enumeration with a normality verdict and the coset count.",
    )
    add_common_arguments(parser)
    parser.add_argument("--group", choices=("O", "EO", "both"), default="both", help="Which group to enumerate.")


def add_k1_parser(subparsers: Any) -> None:
    """Add the 'k1' subcommand parser."""
    parser = subparsers.add_parser(
        "k1",
        help="Compare O/EO at hyperbolic ranks r and r+1",
        description="Coset spaces at two consecutive ranks and the stabilization map between them.",
    )
    add_common_arguments(parser)
    levels = parser.add_mutually_exclusive_group()
    levels.add_argument("--levels", default=None, help="Consecutive ranks 'r,r+1' with r >= 1 (default 1,2).")
    levels.add_argument("--level", type=int, default=None, help="Lower rank r; same as --levels r,r+1.")


def add_check_all_parser(subparsers: Any) -> None:
    """Add the 'check-all' subcommand parser."""
    parser = subparsers.add_parser(
        "check-all",
        help="Run every acceptance check at reduced trial counts",
        description="Run each acceptance item and report a pass flag per item; exit 0 only when all pass.",
    )
    add_common_arguments(parser)


def _configure_logging(args: argparse.Namespace) -> None:
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.DEBUG, format="%(levelname)s %(name)s: %(message)s")


def _error_code(error: ValueError) -> int:
    print(f"error: {error}", file=sys.stderr)
    return 2 if isinstance(error, UsageError) else 1


def _run(args: argparse.Namespace, command: str, body: Callable[[RunConfig], tuple[bool, dict[str, Any]]], **defaults: Any) -> int:
    _configure_logging(args)
    try:
        config = resolve_config(args, **defaults)
        started = time.monotonic()
        passed, results = body(config)
    except ValueError as error:
        return _error_code(error)
    logger.debug("%s finished in %.1fs", command, time.monotonic() - started)
    report = Report(command=command, config=config.summary(), passed=passed, results=results)
    write_report(report, config.output)
    if not passed:
        print(f"warning: {command} found failures", file=sys.stderr)
    return 0 if passed else 1


def _load_word(args: argparse.Namespace):
    """Setup overrides and raw tokens of --word, or ({}, None)."""
    from .transvect import load_word_file

    if getattr(args, "word", None) is None:
        return {}, None
    overrides, tokens = load_word_file(args.word)
    if "phi" in overrides and isinstance(overrides["phi"], list):
        overrides["phi"] = [[str(x) for x in row] for row in overrides["phi"]]
    return overrides, tokens


def handle_verify_relations(args: argparse.Namespace) -> int:
    """Handle the 'verify-relations' subcommand."""
    from .relations import RELATION_IDS, resolve_commutator_convention, run_trials

    def body(config: RunConfig) -> tuple[bool, dict[str, Any]]:
        setup = config.setup()
        wanted = RELATION_IDS if args.relation == "all" else (args.relation,)
        results: dict[str, Any] = {"convention": resolve_commutator_convention()}
        checked = []
        for relation in wanted:
            report = run_trials(setup, relation, trials=config.trials, seed=config.seed, mutate=args.mutate)
            results[relation] = report.to_json()
            if report.skipped:
                print(f"warning: relation ({relation}) skipped: {report.skipped}", file=sys.stderr)
                continue
            checked.append(report.failures > 0 if args.mutate else report.passed)
        if not checked:
            raise UsageError(f"no relation can be checked with m={setup.m}")
        return all(checked), results

    return _run(args, "verify-relations", body)


def handle_factor_conjugate(args: argparse.Namespace) -> int:
    """Handle the 'factor-conjugate' subcommand."""
    from .normalizer import CLASSES, run_conj_trials

    def body(config: RunConfig) -> tuple[bool, dict[str, Any]]:
        setup = config.setup()
        if setup.m < 2:
            raise UsageError("factor-conjugate needs m >= 2")
        wanted = CLASSES if args.cls == "all" else (args.cls,)
        reports = {cls: run_conj_trials(setup, cls, trials=config.trials, seed=config.seed) for cls in wanted}
        return all(r.passed for r in reports.values()), {cls: r.to_json() for cls, r in reports.items()}

    return _run(args, "factor-conjugate", body)


def handle_reduce(args: argparse.Namespace) -> int:
    """Handle the 'reduce' subcommand."""
    from .normalizer import normality_witness, reduce_to_smaller, witness_holds
    from .transvect import random_atom, random_word, word_from_json, word_to_json

    try:
        overrides, tokens = _load_word(args)
    except ValueError as error:
        return _error_code(error)

    def body(config: RunConfig) -> tuple[bool, dict[str, Any]]:
        setup = config.setup()
        if setup.m < 2:
            raise UsageError("reduce needs m >= 2")
        if tokens is None:
            eta = random_word(setup, config.rng("reduce", "word"), args.length)
        else:
            eta = word_from_json(setup, tokens)
        trace = reduce_to_smaller(setup, eta)
        results: dict[str, Any] = {"word": word_to_json(setup.ring, eta), "trace": trace.to_json()}
        passed = results["trace"]["stabilized"] and is_orthogonal(setup, trace.residual.entries)
        if args.witness:
            holds = 0
            for trial in range(config.trials):
                g = random_atom(setup, config.rng("reduce", "witness", trial))
                holds += witness_holds(setup, eta, g, normality_witness(setup, eta, g, trace))
            results["witness"] = {"trials": config.trials, "holds": holds}
            passed = passed and holds == config.trials
        return passed, results

    return _run(args, "reduce", body, **overrides)


def handle_decompose(args: argparse.Namespace) -> int:
    """Handle the 'decompose' subcommand."""
    from .fdg import check_triple, fdg_decompose
    from .transvect import random_word, word_from_json, word_to_json

    try:
        overrides, tokens = _load_word(args)
    except ValueError as error:
        return _error_code(error)

    def body(config: RunConfig) -> tuple[bool, dict[str, Any]]:
        setup = config.setup()
        if tokens is not None:
            words = [word_from_json(setup, tokens)]
        else:
            words = [random_word(setup, config.rng("decompose", trial), args.length) for trial in range(config.trials)]
        results: dict[str, Any] = {"decompositions": []}
        passed = True
        for index, theta in enumerate(words):
            triple = fdg_decompose(setup, theta)
            certificates = check_triple(setup, theta, triple)
            passed = passed and all(certificates.values())
            entry: dict[str, Any] = {"certificates": certificates}
            if index == 0:
                entry |= {"word": word_to_json(setup.ring, theta), "triple": triple.to_json(setup)}
            results["decompositions"].append(entry)
        return passed, results

    return _run(args, "decompose", body, **overrides)


def _require_finite(setup: QuadSetup) -> None:
    if not setup.ring.is_finite:
        raise UsageError("enumeration needs a finite ring (zmod:<n>)")


def _census_json(census) -> dict[str, Any]:
    return {"order": len(census), "description": census.description, "audit": census.audit}


def handle_enumerate(args: argparse.Namespace) -> int:
    """Handle the 'enumerate' subcommand."""
    from . import grouplab

    def body(config: RunConfig) -> tuple[bool, dict[str, Any]]:
        setup = config.setup()
        _require_finite(setup)
        results: dict[str, Any] = {}
        full = elementary = None
        if args.group in ("O", "both"):
            full = grouplab.enumerate_orthogonal(setup, budget=config.budget)
            results["O"] = _census_json(full)
        if args.group in ("EO", "both"):
            elementary = grouplab.enumerate_elementary(setup, budget=config.budget)
            results["EO"] = _census_json(elementary)
        passed = True
        if full is not None and elementary is not None:
            space = grouplab.coset_space(full, elementary)
            results["normal"] = space.is_group
            results["cosets"] = space.size
            results["representatives"] = [matrix_to_json(setup.ring, r) for r in space.representative_matrices()]
            passed = len(full) % len(elementary) == 0 and grouplab.is_subgroup(elementary, full)
        if full is not None and full.audit.get("complete") is False:
            print("warning: orthogonal census could not be audited as complete", file=sys.stderr)
        return passed, results

    return _run(args, "enumerate", body)


def _k1_results(config: RunConfig, level: int) -> tuple[bool, dict[str, Any]]:
    from . import grouplab

    spaces = []
    for m in (level, level + 1):
        setup = config.setup(m)
        _require_finite(setup)
        full = grouplab.enumerate_orthogonal(setup, budget=config.budget)
        elementary = grouplab.enumerate_elementary(setup, budget=config.budget)
        spaces.append(grouplab.coset_space(full, elementary))
    report = grouplab.k1_stability_check(spaces[0], spaces[1], seed=config.seed)
    passed = report.surjective and spaces[1].is_group and report.coset_products_consistent
    return passed, report.to_json()


def parse_levels(text: str) -> tuple[int, int]:
    """Read a ``r,r+1`` pair of consecutive hyperbolic ranks.

    Raises:
        UsageError: If the pair is malformed or does not start at some r >= 1 and step by one.
    """
    parts = [part.strip() for part in text.split(",")]
    try:
        lower, upper = (int(part) for part in parts)
    except ValueError:
        raise UsageError(f"--levels expects 'r,r+1', got {text!r}") from None
    if lower < 1:
        raise UsageError("--levels needs r >= 1")
    if upper != lower + 1:
        raise UsageError(f"--levels must be consecutive, got {lower},{upper}")
    return lower, upper


def handle_k1(args: argparse.Namespace) -> int:
    """Handle the 'k1' subcommand."""
    try:
        if args.levels is not None:
            lower, _ = parse_levels(args.levels)
        elif args.level is not None:
            lower, _ = parse_levels(f"{args.level},{args.level + 1}")
        else:
            lower = 1
    except UsageError as error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    return _run(args, "k1", lambda config: _k1_results(config, lower))


# Acceptance items run by check-all. Each returns (passed, findings).

def _item_orthogonality(config: RunConfig) -> tuple[bool, dict[str, Any]]:
    from .transvect import atom_entries, random_atom

    checked = failures = 0
    for label in ("rationals", "zmod:5", "zmod:9"):
        ring = RingSpec.parse(label)
        for n in (1, 2, 3):
            for m in (1, 2, 3, 4):
                setup = QuadSetup.standard(ring, n, m)
                for trial in range(config.trials):
                    rng = config.rng("orthogonality", label, n, m, trial)
                    atom = random_atom(setup, rng, indexed=bool(trial % 2))
                    checked += 1
                    failures += not is_orthogonal(setup, atom_entries(setup, atom))
    return failures == 0, {"atoms": checked, "failures": failures}


def _item_relations(config: RunConfig) -> tuple[bool, dict[str, Any]]:
    from .relations import RELATION_IDS, run_trials

    findings: dict[str, Any] = {}
    passed = True
    for label in ("zmod:5", "zmod:9", "rationals"):
        setup = QuadSetup.standard(RingSpec.parse(label), 1, 3)
        for relation in RELATION_IDS:
            honest = run_trials(setup, relation, trials=config.trials, seed=config.seed)
            mutated = run_trials(setup, relation, trials=config.trials, seed=config.seed, mutate=True)
            ok = honest.passed and mutated.failures > 0
            passed = passed and ok
            entry = {"failures": honest.failures, "mutation_detected": mutated.failures > 0}
            if honest.variant is not None:
                entry["variant"] = honest.variant
                entry["as_stated_failures"] = honest.as_stated_failures
            findings[f"{label}:{relation}"] = entry
    return passed, findings


def _item_factorizations(config: RunConfig) -> tuple[bool, dict[str, Any]]:
    from .normalizer import CLASSES, run_conj_trials

    findings: dict[str, Any] = {}
    passed = True
    for label in ("zmod:5", "zmod:7"):
        for n, m in ((1, 2), (2, 2), (1, 3)):
            setup = QuadSetup.standard(RingSpec.parse(label), n, m)
            for cls in CLASSES:
                report = run_conj_trials(setup, cls, trials=config.trials, seed=config.seed)
                passed = passed and report.passed
                findings[f"{label}:{n}:{m}:{cls}"] = report.failures
    return passed, findings


def _item_corner(config: RunConfig) -> tuple[bool, dict[str, Any]]:
    from .fdg import reduce_corner
    from .matrix import mat_mul
    from .transvect import random_word, word_entries

    findings: dict[str, Any] = {}
    passed = True
    for label in ("zmod:9", "zmod:3"):
        ring = RingSpec.parse(label)
        for n, m in ((1, 2), (2, 3)):
            setup = QuadSetup.standard(ring, n, m)
            t = setup.p_index(m)
            good = 0
            for trial in range(config.trials):
                sigma = word_entries(setup, random_word(setup, config.rng("corner", label, n, m, trial), 8))
                rho = reduce_corner(setup, sigma)
                good += mat_mul(ring, sigma, word_entries(setup, rho.word))[t][t] == ring.one
            findings[f"{label}:{n}:{m}"] = good
            passed = passed and good == config.trials
    return passed, findings


def _item_decomposition(config: RunConfig) -> tuple[bool, dict[str, Any]]:
    from .fdg import check_triple, fdg_decompose
    from .transvect import random_word

    rings = {"zmod:3": RingSpec.modular(3), "zmod:5": RingSpec.modular(5), "q": RingSpec.rationals()}
    findings: dict[str, Any] = {}
    passed = True
    for label, ring in rings.items():
        setup = QuadSetup.standard(ring, 1, 3)
        good = 0
        for trial in range(config.trials):
            theta = random_word(setup, config.rng(f"decompose-{label}", trial), 8)
            good += all(check_triple(setup, theta, fdg_decompose(setup, theta)).values())
        findings[label] = {"verified": good, "trials": config.trials}
        passed = passed and good == config.trials
    return passed, findings


def _item_normality(config: RunConfig) -> tuple[bool, dict[str, Any]]:
    from . import grouplab
    from .normalizer import normality_witness, reduce_to_smaller, witness_holds
    from .transvect import random_atom, random_word

    setup = QuadSetup.standard(RingSpec.modular(3), 1, 2)
    full = grouplab.enumerate_orthogonal(setup, budget=config.budget)
    elementary = grouplab.enumerate_elementary(setup, budget=config.budget)
    verdict = grouplab.normality_verdict(full, elementary)
    holds = 0
    for trial in range(config.trials):
        rng = config.rng("normality", trial)
        eta = random_word(setup, rng, 6)
        g = random_atom(setup, rng)
        trace = reduce_to_smaller(setup, eta)
        holds += witness_holds(setup, eta, g, normality_witness(setup, eta, g, trace))
    findings = {"O": len(full), "EO": len(elementary), "normal": verdict, "audit": full.audit, "witnesses": holds}
    return verdict and holds == config.trials, findings


def _item_stability(config: RunConfig) -> tuple[bool, dict[str, Any]]:
    base = config.model_copy(update={"ring": "zmod:3", "n": 1, "phi": None})
    return _k1_results(base, 1)


def _item_baseline(config: RunConfig) -> tuple[bool, dict[str, Any]]:
    from . import grouplab

    setup = QuadSetup.standard(RingSpec.modular(3), 1, 1)
    full = grouplab.enumerate_orthogonal(setup, budget=config.budget)
    elementary = grouplab.enumerate_elementary(setup, budget=config.budget)
    return len(full) == 48 and 48 % len(elementary) == 0, {"O": len(full), "EO": len(elementary)}


CHECK_ITEMS: dict[str, Callable[[RunConfig], tuple[bool, dict[str, Any]]]] = {
    "generator-orthogonality": _item_orthogonality,
    "commutator-relations": _item_relations,
    "conjugation-factorizations": _item_factorizations,
    "corner-reduction": _item_corner,
    "fdg-decomposition": _item_decomposition,
    "normality-oracle": _item_normality,
    "stability-oracle": _item_stability,
    "baseline-order": _item_baseline,
}


def handle_check_all(args: argparse.Namespace) -> int:
    """Handle the 'check-all' subcommand."""
    from .relations import resolve_commutator_convention

    def body(config: RunConfig) -> tuple[bool, dict[str, Any]]:
        convention = resolve_commutator_convention()
        results: dict[str, Any] = {"convention": convention}
        passed = convention == "ghg^-1h^-1"
        for name, item in CHECK_ITEMS.items():
            started = time.monotonic()
            try:
                ok, findings = item(config)
            except ValueError as error:
                ok, findings = False, {"error": str(error)}
            seconds = round(time.monotonic() - started, 2)
            print(f"info: {name}: {'pass' if ok else 'FAIL'} ({seconds}s)", file=sys.stderr)
            results[name] = {"passed": ok, "findings": findings}
            passed = passed and ok
        return passed, results

    return _run(args, "check-all", body, trials=5)
