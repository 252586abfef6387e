"""
Domains and n-Green's functions with the singularity at the origin of the weight.

Balls B_R and shifted balls B_R + x are handled in closed form in every
dimension; planar grid domains carry a solved regular part (see ``planar``).
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..constants import sphere_measure
from ...utils.logging_setup import get_logger

logger = get_logger(__name__)

BOUNDARY_SLACK = 1e-12


class DomainError(Exception):
    """Raised for points outside a domain or malformed domain data."""
    pass


class SingularPointError(Exception):
    """Raised when a Green function is evaluated at its singularity."""
    pass


class GreenVariant(Enum):
    """Representation of a Green function."""
    CENTERED_BALL = "centered_ball"
    SHIFTED_BALL = "shifted_ball"
    PLANAR_GRID = "planar_grid"


@dataclass
class DomainSpec:
    """
    Domain containing the singularity.

    Ball variants live in R^n with the singularity at 0 and domain B_R + offset.
    Planar grids store a boolean mask whose node (i, j) sits at
    origin + h * (i, j), with the singularity at an arbitrary interior point.
    """
    variant: GreenVariant
    n: int = 2
    radius: float = 1.0
    offset: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None
    h: float = 0.0
    origin: Optional[np.ndarray] = None
    singularity: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.variant == GreenVariant.PLANAR_GRID:
            self.n = 2
            self.mask = np.asarray(self.mask, dtype=bool)
            self.origin = np.asarray(self.origin if self.origin is not None else (0.0, 0.0), dtype=float)
            self.singularity = np.asarray(self.singularity, dtype=float)
            if self.mask.ndim != 2 or not self.h > 0:
                raise DomainError("Planar grid needs a 2-d mask and positive spacing")
            return

        if not self.radius > 0:
            raise DomainError(f"Ball radius must be positive, got {self.radius}")
        offset = np.zeros(self.n) if self.offset is None else np.asarray(self.offset, dtype=float)
        if offset.shape != (self.n,):
            raise DomainError(f"Offset must have {self.n} components")
        if np.linalg.norm(offset) >= self.radius:
            raise DomainError("The singularity must lie strictly inside the ball")
        self.offset = offset
        if self.variant == GreenVariant.CENTERED_BALL and np.any(offset != 0):
            self.variant = GreenVariant.SHIFTED_BALL

    @classmethod
    def centered_ball(cls, n: int, radius: float = 1.0) -> "DomainSpec":
        return cls(GreenVariant.CENTERED_BALL, n=n, radius=radius)

    @classmethod
    def shifted_ball(cls, n: int, offset, radius: float = 1.0) -> "DomainSpec":
        """Ball B_radius + offset; a scalar offset is placed on the first axis."""
        if np.isscalar(offset):
            vector = np.zeros(n)
            vector[0] = float(offset)
            offset = vector
        return cls(GreenVariant.SHIFTED_BALL, n=n, radius=radius, offset=offset)

    @classmethod
    def planar_grid(cls, mask: np.ndarray, h: float, origin, singularity) -> "DomainSpec":
        return cls(GreenVariant.PLANAR_GRID, mask=mask, h=h, origin=origin, singularity=singularity)

    @classmethod
    def disk_grid(cls, h: float, radius: float = 1.0, singularity=(0.0, 0.0)) -> "DomainSpec":
        """Nodes of the lattice hZ^2 strictly inside the disk of the given radius."""
        count = int(math.ceil(radius / h)) + 1
        coords = np.arange(-count, count + 1) * h
        x, y = np.meshgrid(coords, coords, indexing="ij")
        mask = x ** 2 + y ** 2 < radius ** 2 * (1.0 - 1e-12)
        return cls.planar_grid(mask, h, (coords[0], coords[0]), singularity)

    @classmethod
    def square_grid(cls, h: float, half_width: float = 1.0, singularity=(0.0, 0.0)) -> "DomainSpec":
        """Interior nodes of the square (-half_width, half_width)^2."""
        count = int(round(half_width / h))
        coords = np.arange(-count, count + 1) * h
        x, y = np.meshgrid(coords, coords, indexing="ij")
        mask = (np.abs(x) < half_width - 0.5 * h) & (np.abs(y) < half_width - 0.5 * h)
        return cls.planar_grid(mask, h, (coords[0], coords[0]), singularity)

    @property
    def center(self) -> np.ndarray:
        """Center of a ball variant."""
        return self.offset

    @property
    def volume(self) -> float:
        if self.variant == GreenVariant.PLANAR_GRID:
            return float(self.mask.sum()) * self.h ** 2
        return sphere_measure(self.n) * self.radius ** self.n / self.n

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"variant": self.variant.value, "n": self.n}
        if self.variant == GreenVariant.PLANAR_GRID:
            data.update({
                "h": self.h,
                "origin": self.origin.tolist(),
                "singularity": self.singularity.tolist(),
                "mask": self.mask.astype(int).tolist(),
            })
        else:
            data.update({"radius": self.radius, "offset": self.offset.tolist()})
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "DomainSpec":
        variant = GreenVariant(data["variant"])
        if variant == GreenVariant.PLANAR_GRID:
            return cls.planar_grid(np.array(data["mask"], dtype=bool), float(data["h"]),
                                   data["origin"], data["singularity"])
        return cls(variant, n=int(data["n"]), radius=float(data["radius"]),
                   offset=np.array(data["offset"], dtype=float))


@dataclass
class PlanarField:
    """
    Solved planar Green data on a padded node lattice.

    ``regular`` holds H on every node (the boundary data outside the domain);
    ``green`` holds G = -(1/2pi) log|y - x| - H inside, 0 outside.
    """
    mask: np.ndarray
    h: float
    origin: np.ndarray
    singularity: np.ndarray
    regular: np.ndarray
    green: np.ndarray
    residual: float = 0.0

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        i = np.arange(self.mask.shape[0])
        j = np.arange(self.mask.shape[1])
        return np.meshgrid(self.origin[0] + self.h * i, self.origin[1] + self.h * j, indexing="ij")

    def locate(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Cell indices and local coordinates of points y of shape (m, 2)."""
        rel = (np.atleast_2d(y) - self.origin) / self.h
        i = np.floor(rel[:, 0]).astype(int)
        j = np.floor(rel[:, 1]).astype(int)
        i = np.clip(i, 0, self.mask.shape[0] - 2)
        j = np.clip(j, 0, self.mask.shape[1] - 2)
        return i, j, rel[:, 0] - i, rel[:, 1] - j

    def interpolate(self, values: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of a node field."""
        i, j, fx, fy = self.locate(y)
        return ((1 - fx) * (1 - fy) * values[i, j] + fx * (1 - fy) * values[i + 1, j]
                + (1 - fx) * fy * values[i, j + 1] + fx * fy * values[i + 1, j + 1])

    def inside(self, y: np.ndarray) -> np.ndarray:
        """Points whose containing cell has at least one domain node."""
        i, j, _, _ = self.locate(y)
        m = self.mask
        return m[i, j] | m[i + 1, j] | m[i, j + 1] | m[i + 1, j + 1]

    def regular_gradient(self, y: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of the central-difference gradient of H."""
        gx, gy = np.gradient(self.regular, self.h)
        return np.stack((self.interpolate(gx, y), self.interpolate(gy, y)), axis=-1)


@dataclass
class GreenFunction:
    """
    Green function of a domain with its conformal incenter.

    For ball variants the incenter is R(1 - |x/R|^2); for planar grids it is
    e^(-2 pi H(x)) read from the solved regular part.
    """
    domain: DomainSpec
    incenter: float
    field: Optional[PlanarField] = None

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def variant(self) -> GreenVariant:
        return self.domain.variant

    @property
    def c(self) -> float:
        """omega^(1/(n-1))."""
        return sphere_measure(self.n) ** (1.0 / (self.n - 1))

    @property
    def singularity(self) -> np.ndarray:
        if self.variant == GreenVariant.PLANAR_GRID:
            return self.domain.singularity
        return np.zeros(self.n)

    @property
    def is_closed_form(self) -> bool:
        return self.variant != GreenVariant.PLANAR_GRID

    def frame(self) -> Tuple[np.ndarray, float]:
        """Unit axis through the ball center and |offset|/R."""
        offset = self.domain.offset
        norm = float(np.linalg.norm(offset))
        axis = np.zeros(self.n)
        if norm > 0:
            axis = offset / norm
        else:
            axis[0] = 1.0
        return axis, norm / self.domain.radius

    def to_json(self) -> Dict[str, Any]:
        data = {"domain": self.domain.to_json(), "incenter": self.incenter}
        if self.field is not None:
            data["regular"] = self.field.regular.tolist()
            data["residual"] = self.field.residual
        return data


def _closed_parts(g: GreenFunction, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Scaled points w = y/R, the Moebius vector V = (1 - s^2) e + s w, and s = |x|/R."""
    axis, s = g.frame()
    w = np.atleast_2d(np.asarray(y, dtype=float)) / g.domain.radius
    vector = (1.0 - s * s) * axis + s * w
    return w, vector, axis, s


def _check_closed_points(g: GreenFunction, y: np.ndarray) -> np.ndarray:
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if y.shape[-1] != g.n:
        raise DomainError(f"Points must have {g.n} coordinates")
    dist = np.linalg.norm(y - g.domain.offset, axis=-1)
    if np.any(dist > g.domain.radius * (1.0 + BOUNDARY_SLACK)):
        raise DomainError("Point lies outside the domain")
    if np.any(np.linalg.norm(y, axis=-1) == 0):
        raise SingularPointError("Green function evaluated at its singularity")
    return y


def green_eval(g: GreenFunction, y) -> np.ndarray:
    """
    Evaluate G at points y (shape (n,) or (m, n)).

    Args:
        g: Green function.
        y: Points in the closed domain, different from the singularity.

    Returns:
        np.ndarray: Green values, shape (m,).

    Raises:
        DomainError: If a point lies outside the domain.
        SingularPointError: If a point is the singularity.
    """
    if g.variant == GreenVariant.PLANAR_GRID:
        return _planar_green(g, y)
    y = _check_closed_points(g, y)
    w, vector, _, _ = _closed_parts(g, y)
    values = (-np.log(np.linalg.norm(w, axis=-1)) + np.log(np.linalg.norm(vector, axis=-1))) / g.c
    return np.maximum(values, 0.0)


def green_gradient(g: GreenFunction, y) -> np.ndarray:
    """
    Gradient of G at points y.

    Returns:
        np.ndarray: Gradients, shape (m, n).
    """
    if g.variant == GreenVariant.PLANAR_GRID:
        return _planar_gradient(g, y)
    y = _check_closed_points(g, y)
    w, vector, _, s = _closed_parts(g, y)
    w_sq = np.sum(w * w, axis=-1, keepdims=True)
    v_sq = np.sum(vector * vector, axis=-1, keepdims=True)
    return (-w / w_sq + s * vector / v_sq) / (g.c * g.domain.radius)


def regular_part(g: GreenFunction, y) -> np.ndarray:
    """H(y) = -G(y) - (1/omega^(1/(n-1))) log|y - x|, continuous up to the singularity."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if g.variant == GreenVariant.PLANAR_GRID:
        return g.field.interpolate(g.field.regular, y)
    _, vector, _, _ = _closed_parts(g, y)
    return -(math.log(g.domain.radius) + np.log(np.linalg.norm(vector, axis=-1))) / g.c


def conformal_incenter(g: GreenFunction) -> float:
    """I = e^(-omega^(1/(n-1)) H(x))."""
    return g.incenter


def _planar_green(g: GreenFunction, y) -> np.ndarray:
    field = g.field
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if not np.all(field.inside(y)):
        raise DomainError("Point lies outside the planar domain")
    dist = np.linalg.norm(y - field.singularity, axis=-1)
    if np.any(dist == 0):
        raise SingularPointError("Green function evaluated at its singularity")
    values = -np.log(dist) / (2.0 * math.pi) - field.interpolate(field.regular, y)
    return np.maximum(values, 0.0)


def _planar_gradient(g: GreenFunction, y) -> np.ndarray:
    field = g.field
    y = np.atleast_2d(np.asarray(y, dtype=float))
    rel = y - field.singularity
    dist_sq = np.sum(rel * rel, axis=-1, keepdims=True)
    if np.any(dist_sq == 0):
        raise SingularPointError("Green gradient evaluated at its singularity")
    return -rel / (2.0 * math.pi * dist_sq) - field.regular_gradient(y)


def green_function(domain: DomainSpec) -> GreenFunction:
    """
    Green function of a domain.

    Ball variants are closed form; planar grids are solved by ``planar_green_solve``.

    Args:
        domain: Domain specification.

    Returns:
        GreenFunction: Green function with its incenter.
    """
    if domain.variant == GreenVariant.PLANAR_GRID:
        from .planar import planar_green_solve
        return planar_green_solve(domain)
    s = float(np.linalg.norm(domain.offset)) / domain.radius
    incenter = domain.radius * (1.0 - s * s)
    logger.debug(f"Closed-form Green function: n={domain.n}, R={domain.radius}, |x|/R={s:.6g}")
    return GreenFunction(domain, incenter)


def green_from_json(data: Dict[str, Any]) -> GreenFunction:
    """Rebuild a Green function from ``GreenFunction.to_json`` output."""
    return green_function(DomainSpec.from_json(data["domain"]))
