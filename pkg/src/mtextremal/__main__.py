"""Entry point for ``python -m mtextremal``."""

import sys

from .cli import main

sys.exit(main())
