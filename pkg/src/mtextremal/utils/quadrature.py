"""
Gauss-Legendre rules shared by the radial, level-set and transplant quadratures.
"""

from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import roots_legendre


@lru_cache(maxsize=32)
def _reference_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights on [-1, 1].

    Rules are cached per order and returned read-only.

    Args:
        order: Number of nodes.

    Returns:
        Tuple of (nodes, weights).
    """
    if order < 1:
        raise ValueError(f"Quadrature order must be positive, got {order}")
    return _reference_rule(int(order))


def gauss_unit_interval(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    nodes, weights = gauss_legendre(order)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def composite_gauss(
    lower: np.ndarray,
    upper: np.ndarray,
    order: int,
    max_width: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Composite Gauss rule over a batch of intervals.

    Each interval [lower_k, upper_k] is split into ceil(width / max_width) equal
    pieces and every piece receives an ``order``-point rule.

    Args:
        lower: Interval lower ends.
        upper: Interval upper ends.
        order: Points per piece.
        max_width: Largest piece width.

    Returns:
        Tuple of (points, weights, owner) where ``owner`` is the interval index of
        each point.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    width = upper - lower
    pieces = np.maximum(1, np.ceil(np.abs(width) / max_width).astype(int))
    owner_piece = np.repeat(np.arange(lower.size), pieces)
    piece_index = np.arange(owner_piece.size) - np.repeat(np.cumsum(pieces) - pieces, pieces)
    piece_width = (width / pieces)[owner_piece]
    piece_lower = lower[owner_piece] + piece_index * piece_width

    unit_nodes, unit_weights = gauss_unit_interval(order)
    points = (piece_lower[:, None] + piece_width[:, None] * unit_nodes[None, :]).ravel()
    weights = (piece_width[:, None] * unit_weights[None, :]).ravel()
    owner = np.repeat(owner_piece, order)
    return points, weights, owner
