"""
mtextremal - numerical toolkit for singular Moser-Trudinger extremal problems.

Computes and verifies the weighted exponential functionals, their radial
maximizers, n-Green functions and conformal incenters, the weighted
isoperimetric chain, and the transplantations between balls and domains.

License: GPL v3.0
Version: 0.1.0
"""

__version__ = "0.1.0"
__author__ = "mtextremal developers"
__license__ = "GPL v3.0"
__description__ = "Numerical toolkit for singular Moser-Trudinger extremal problems"

from .core.checks import CheckReport, CheckRow
from .core.constants import ExponentConfig, critical_config, make_config
from .core.radial import RadialProfile, dirichlet_energy, functional_eval, moser_profile

__all__ = [
    "CheckReport",
    "CheckRow",
    "ExponentConfig",
    "RadialProfile",
    "critical_config",
    "dirichlet_energy",
    "functional_eval",
    "make_config",
    "moser_profile",
]
