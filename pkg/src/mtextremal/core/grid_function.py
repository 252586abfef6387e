"""
Non-negative functions on planar grids.

A ``GridFunction`` holds node values on a boolean mask. Node (i, j) sits at
origin + h * (i, j) and stands for the cell of area h^2 around it; values vanish
outside the mask, which keeps a layer of zero nodes between the mask and the
array edge.

Gradients use the P1 interpolant on the triangulation that splits every lattice
square along its (i, j)-(i+1, j+1) diagonal. Its Dirichlet energy equals the
5-point edge sum, and its distribution function is piecewise quadratic between
node values, which makes the energy of its Schwarz symmetrization computable
by one-dimensional quadrature.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .green.domains import DomainSpec, GreenVariant
from ..utils.logging_setup import get_logger
from ..utils.quadrature import gauss_unit_interval

logger = get_logger(__name__)

WEIGHT_ORDER = 4
DISTRIBUTION_ORDER = 64


class GridFunctionError(Exception):
    """Raised when a grid function violates its invariants."""
    pass


@dataclass
class GridFunction:
    """
    Node values on a planar mask.

    Attributes:
        mask: Nodes inside the domain; must not touch the array edge.
        h: Grid spacing.
        values: Non-negative values, zero outside the mask.
        origin: Coordinates of node (0, 0).
    """
    mask: np.ndarray
    h: float
    values: np.ndarray
    origin: Optional[np.ndarray] = None

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        self.values = np.asarray(self.values, dtype=float).copy()
        self.origin = np.zeros(2) if self.origin is None else np.asarray(self.origin, dtype=float)
        self.h = float(self.h)
        self._validate()

    def _validate(self) -> None:
        if self.mask.ndim != 2 or self.values.shape != self.mask.shape:
            raise GridFunctionError("mask and values must be 2-d arrays of equal shape")
        if not self.h > 0:
            raise GridFunctionError(f"Grid spacing must be positive, got {self.h}")
        if self.mask[0, :].any() or self.mask[-1, :].any() or self.mask[:, 0].any() or self.mask[:, -1].any():
            raise GridFunctionError("mask must not touch the edge of the grid")
        if not np.all(np.isfinite(self.values)):
            raise GridFunctionError("grid values must be finite")
        if np.any(self.values < 0):
            raise GridFunctionError("grid values must be non-negative")
        if np.any(self.values[~self.mask] != 0):
            raise GridFunctionError("grid values must vanish outside the mask")

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray, np.ndarray], np.ndarray], mask: np.ndarray,
                      h: float, origin=(0.0, 0.0)) -> "GridFunction":
        """Sample func(x, y) on the mask; negative samples are clipped to zero."""
        mask = np.asarray(mask, dtype=bool)
        origin = np.asarray(origin, dtype=float)
        ii, jj = np.indices(mask.shape)
        values = np.zeros(mask.shape)
        x = origin[0] + h * ii[mask]
        y = origin[1] + h * jj[mask]
        values[mask] = np.maximum(np.asarray(func(x, y), dtype=float), 0.0)
        return cls(mask, h, values, origin)

    @classmethod
    def on_domain(cls, domain: DomainSpec, func: Callable[[np.ndarray, np.ndarray], np.ndarray],
                  h: Optional[float] = None) -> "GridFunction":
        """
        Sample func on the lattice of a planar domain.

        Planar grids reuse their own mask; two-dimensional balls get the nodes of
        hZ^2 strictly inside the ball.
        """
        if domain.variant == GreenVariant.PLANAR_GRID:
            return cls.from_function(func, domain.mask, domain.h, domain.origin)
        if domain.n != 2 or h is None:
            raise GridFunctionError("Ball domains need n = 2 and an explicit spacing")
        center = domain.offset
        count = int(math.ceil(domain.radius / h)) + 1
        steps = np.arange(-count, count + 1)
        ii, jj = np.meshgrid(steps, steps, indexing="ij")
        origin = (center[0] + h * steps[0], center[1] + h * steps[0])
        mask = (h * ii) ** 2 + (h * jj) ** 2 < domain.radius ** 2 * (1.0 - 1e-12)
        return cls.from_function(func, mask, h, origin)

    @classmethod
    def random(cls, rng: np.random.Generator, shape: Tuple[int, int] = (5, 5), h: float = 1.0,
               scale: float = 1.0) -> "GridFunction":
        """Uniform random values on every node except the outer ring."""
        mask = np.zeros(shape, dtype=bool)
        mask[1:-1, 1:-1] = True
        values = np.zeros(shape)
        values[mask] = rng.uniform(0.0, scale, int(mask.sum()))
        return cls(mask, h, values)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def volume(self) -> float:
        """Area of the domain, one cell per mask node."""
        return float(self.mask.sum()) * self.cell_area

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        ii, jj = np.indices(self.mask.shape)
        return self.origin[0] + self.h * ii, self.origin[1] + self.h * jj

    def distances(self, center) -> np.ndarray:
        x, y = self.coordinates()
        center = np.asarray(center, dtype=float)
        return np.hypot(x - center[0], y - center[1])

    def cell_weights(self, center, beta: float, order: int = WEIGHT_ORDER) -> np.ndarray:
        """
        Mean of |y - center|^(-beta) over each node's cell, zero outside the mask.

        Gauss points never hit the cell center, so a node at ``center`` stays finite.
        """
        if beta == 0.0:
            return self.mask.astype(float)
        x, y = self.coordinates()
        center = np.asarray(center, dtype=float)
        nodes, weights = gauss_unit_interval(order)
        offsets = (nodes - 0.5) * self.h
        total = np.zeros(self.mask.shape)
        for dx, wx in zip(offsets, weights):
            for dy, wy in zip(offsets, weights):
                total += wx * wy * np.hypot(x + dx - center[0], y + dy - center[1]) ** (-beta)
        return np.where(self.mask, total, 0.0)

    def energy(self) -> float:
        """Sum of squared differences over all lattice edges."""
        return float(np.sum(np.diff(self.values, axis=0) ** 2) + np.sum(np.diff(self.values, axis=1) ** 2))

    def superlevel_count(self, level: float) -> int:
        return int(np.count_nonzero(self.mask & (self.values >= level)))

    def superlevel_measure(self, level: float) -> float:
        """Area of {u >= level}, one cell per node."""
        return self.superlevel_count(level) * self.cell_area

    def integrate(self, func: Callable[[np.ndarray], np.ndarray], weights: Optional[np.ndarray] = None,
                  where: Optional[np.ndarray] = None) -> float:
        """h^2 times the sum of func(u) (times weights) over the mask or a sub-mask."""
        selected = self.mask if where is None else self.mask & where
        terms = np.asarray(func(self.values[selected]), dtype=float)
        if weights is not None:
            terms = terms * weights[selected]
        return float(np.sum(terms)) * self.cell_area

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.mask, self.h, np.where(self.mask, values, 0.0), self.origin)

    def to_json(self) -> Dict:
        return {
            "mask": self.mask.astype(int).tolist(),
            "h": self.h,
            "values": self.values.tolist(),
            "origin": self.origin.tolist(),
        }

    @classmethod
    def from_json(cls, data: Dict) -> "GridFunction":
        return cls(np.array(data["mask"], dtype=bool), float(data["h"]),
                   np.array(data["values"], dtype=float), np.array(data["origin"], dtype=float))


@dataclass
class P1Interpolant:
    """
    Piecewise linear interpolant of a grid function.

    Attributes:
        corners: Sorted corner values per triangle, shape (T, 3).
        grad2: |grad U|^2 per triangle.
        area: Area of one triangle.
    """
    corners: np.ndarray
    grad2: np.ndarray
    area: float
    _pieces: Optional[Tuple[np.ndarray, ...]] = field(default=None, repr=False)

    @classmethod
    def of(cls, u: GridFunction) -> "P1Interpolant":
        v = u.values
        a, b = v[:-1, :-1], v[1:, :-1]
        c, d = v[1:, 1:], v[:-1, 1:]
        touched = u.mask[:-1, :-1] | u.mask[1:, :-1] | u.mask[1:, 1:] | u.mask[:-1, 1:]
        a, b, c, d = a[touched], b[touched], c[touched], d[touched]
        lower = np.stack((a, b, c), axis=1)
        upper = np.stack((a, d, c), axis=1)
        h2 = u.h * u.h
        grad_lower = ((b - a) ** 2 + (c - b) ** 2) / h2
        grad_upper = ((d - a) ** 2 + (c - d) ** 2) / h2
        corners = np.sort(np.concatenate((lower, upper)), axis=1)
        return cls(corners, np.concatenate((grad_lower, grad_upper)), 0.5 * h2)

    def area_above(self, t: float) -> np.ndarray:
        """Area of {U > t} inside each triangle."""
        u0, u1, u2 = self.corners.T
        out = np.where(t < u0, self.area, 0.0)
        first = (u0 <= t) & (t < u1)
        if np.any(first):
            d1 = (u1[first] - u0[first]) * (u2[first] - u0[first])
            out[first] = self.area * (1.0 - (t - u0[first]) ** 2 / d1)
        second = (u1 <= t) & (t < u2)
        if np.any(second):
            d2 = (u2[second] - u0[second]) * (u2[second] - u1[second])
            out[second] = self.area * (u2[second] - t) ** 2 / d2
        return out

    def distribution(self, t: float) -> float:
        """|{U > t}|."""
        return float(np.sum(self.area_above(t)))

    def energy(self) -> float:
        return float(np.sum(self.grad2)) * self.area

    def energy_below(self, t: float) -> float:
        """Integral of |grad U|^2 over {U <= t}."""
        return float(np.sum(self.grad2 * (self.area - self.area_above(t))))

    def energy_above(self, t: float) -> float:
        """Integral of |grad U|^2 over {U >= t}."""
        return float(np.sum(self.grad2 * self.area_above(t)))

    def _quadratic_pieces(self) -> Tuple[np.ndarray, ...]:
        """Breakpoints and coefficients of mu(s) = c0 + c1 s + c2 s^2 per interval."""
        if self._pieces is not None:
            return self._pieces
        breaks = np.unique(self.corners)
        size = breaks.size
        c0, c1, c2 = np.zeros(size), np.zeros(size), np.zeros(size)
        u0, u1, u2 = self.corners.T
        i0, i1, i2 = (np.searchsorted(breaks, col) for col in (u0, u1, u2))
        area = self.area

        def spread(start, stop, k0, k1, k2):
            for coef, value in ((c0, k0), (c1, k1), (c2, k2)):
                np.add.at(coef, start, value)
                np.add.at(coef, stop, -value)

        spread(np.zeros_like(i0), i0, np.full(i0.size, area), np.zeros(i0.size), np.zeros(i0.size))
        rising = i1 > i0
        d1 = (u1[rising] - u0[rising]) * (u2[rising] - u0[rising])
        spread(i0[rising], i1[rising], area - area * u0[rising] ** 2 / d1,
               2.0 * area * u0[rising] / d1, -area / d1)
        falling = i2 > i1
        d2 = (u2[falling] - u0[falling]) * (u2[falling] - u1[falling])
        spread(i1[falling], i2[falling], area * u2[falling] ** 2 / d2,
               -2.0 * area * u2[falling] / d2, area / d2)

        self._pieces = (breaks, np.cumsum(c0)[:-1], np.cumsum(c1)[:-1], np.cumsum(c2)[:-1])
        return self._pieces

    def rearranged_energy(self, lower: float, upper: float) -> float:
        """
        Integral of |grad U*|^2 over {lower <= U* <= upper} for the Schwarz symmetrization U*.

        By the coarea formula this is 4 pi times the integral of mu / (-mu') over
        [lower, upper] with mu the distribution function of U.
        """
        breaks, c0, c1, c2 = self._quadratic_pieces()
        if breaks.size < 2 or upper <= lower:
            return 0.0
        lo = np.clip(breaks[:-1], lower, upper)
        hi = np.clip(breaks[1:], lower, upper)
        active = hi > lo
        if not np.any(active):
            return 0.0
        nodes, weights = gauss_unit_interval(DISTRIBUTION_ORDER)
        width = (hi - lo)[active]
        s = lo[active, None] + width[:, None] * nodes[None, :]
        mu = c0[active, None] + c1[active, None] * s + c2[active, None] * s * s
        slope = -(c1[active, None] + 2.0 * c2[active, None] * s)
        ratio = np.divide(mu, slope, out=np.zeros_like(mu), where=slope > 0)
        return 4.0 * math.pi * float(np.sum(width[:, None] * weights[None, :] * ratio))
