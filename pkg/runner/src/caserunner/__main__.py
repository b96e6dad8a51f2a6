"""Entry point: ``python -m caserunner --protocol 1``."""

from __future__ import annotations

import argparse
import sys

from . import PROTOCOL_VERSION
from .server import DEFAULT_MEMORY_MB, serve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="caserunner",
        description="Execute entry points on encoded argument tuples over "
                    "line-delimited JSON stdio (see PROTOCOL.md).",
    )
    parser.add_argument("--protocol", type=int, default=PROTOCOL_VERSION,
                        help="wire protocol version the orchestrator expects")
    parser.add_argument("--memory-mb", type=int, default=DEFAULT_MEMORY_MB,
                        help="address-space cap for this process")
    args = parser.parse_args(argv)
    return serve(args.protocol, memory_mb=args.memory_mb)


if __name__ == "__main__":
    sys.exit(main())
