"""Main CLI entry point for dser."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

COMMANDS = ("verify-relations", "factor-conjugate", "reduce", "decompose", "enumerate", "k1", "check-all")


def main(argv: Sequence[str] | None = None) -> int:
    """Main entry point for the dser CLI.

    Returns 0 when every check passes, 1 on a failed check or computation
    error, and 2 on usage or configuration errors.
    """
    parser = argparse.ArgumentParser(
        prog="dser",
        description="Exact computations in the elementary orthogonal group EO(Q + H(A)^m)",
    )

    subparsers = parser.add_subparsers(
        dest="command",
        help="Available commands",
        required=True,
    )

    from .orthogonal.cli import (
        add_check_all_parser,
        add_decompose_parser,
        add_enumerate_parser,
        add_factor_conjugate_parser,
        add_k1_parser,
        add_reduce_parser,
        add_verify_relations_parser,
    )
    add_verify_relations_parser(subparsers)
    add_factor_conjugate_parser(subparsers)
    add_reduce_parser(subparsers)
    add_decompose_parser(subparsers)
    add_enumerate_parser(subparsers)
    add_k1_parser(subparsers)
    add_check_all_parser(subparsers)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)

    # Route to the appropriate handler
    if args.command == "verify-relations":
        from .orthogonal.cli import handle_verify_relations
        return handle_verify_relations(args)
    elif args.command == "factor-conjugate":
        from .orthogonal.cli import handle_factor_conjugate
        return handle_factor_conjugate(args)
    elif args.command == "reduce":
        from .orthogonal.cli import handle_reduce
        return handle_reduce(args)
    elif args.command == "decompose":
        from .orthogonal.cli import handle_decompose
        return handle_decompose(args)
    elif args.command == "enumerate":
        from .orthogonal.cli import handle_enumerate
        return handle_enumerate(args)
    elif args.command == "k1":
        from .orthogonal.cli import handle_k1
        return handle_k1(args)
    elif args.command == "check-all":
        from .orthogonal.cli import handle_check_all
        return handle_check_all(args)

    return 2


if __name__ == "__main__":
    sys.exit(main())
