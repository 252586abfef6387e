"""Numerical core: constants, radial profiles, Green functions and the transfer between ball and domain."""

# Submodules are imported as needed
