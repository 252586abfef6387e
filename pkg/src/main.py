#!/usr/bin/env python3
"""
mtextremal - Development Entry Point

Runs the command line from a source checkout without installing the package.
"""

import sys
from pathlib import Path

# Add the mtextremal package to Python path
sys.path.insert(0, str(Path(__file__).parent))

from mtextremal.cli import main as cli_main


def main() -> int:
    """
    Main entry point.

    Returns:
        int: Exit code (0 when every check passes, non-zero otherwise).
    """
    try:
        return cli_main(sys.argv[1:])
    except KeyboardInterrupt:
        print("Interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
