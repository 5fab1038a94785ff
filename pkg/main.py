"""Application entrypoint.

Configures logging and hands the command line to `cli.run`.
"""

from __future__ import annotations

import sys

from cli import run
from logging_config import configure_logging


def main() -> int:
    # Same log format for every command; reports stay on stdout.
    configure_logging(component="LEFSCHETZ")
    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
