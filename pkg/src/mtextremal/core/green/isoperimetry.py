"""
Weighted isoperimetric checks on Green level sets.

Covers the volume lower bound in terms of the conformal incenter, the sharp
weighted isoperimetric inequality for arbitrary shapes, and the boundary
inequality along level sets of G.
"""

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.optimize import brentq

from ..checks import CheckReport
from ..constants import ExponentRangeError, critical_alpha_for, sphere_measure
from .domains import DomainError, DomainSpec, GreenFunction, GreenVariant, green_eval, green_gradient
from .level_sets import (
    LevelSetGeometry,
    transverse_measure,
    fan_weighted_volume,
    green_level_set,
    segment_quadrature,
    sphere_quadrature,
    sphere_weighted_volume,
    weighted_coarea_density,
    weighted_volume,
)
from ...utils.logging_setup import get_logger
from ...utils.quadrature import gauss_unit_interval

logger = get_logger(__name__)

RAY_ORDER = 256
POLYGON_PIECES = 64
POLYGON_ORDER = 8


class DegenerateShapeError(Exception):
    """Raised when a shape has zero volume."""
    pass


@dataclass
class PolygonShape:
    """Closed planar polygon, vertices in counterclockwise order."""
    vertices: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)

    @classmethod
    def square(cls, half_width: float = 1.0, center=(0.0, 0.0)) -> "PolygonShape":
        cx, cy = center
        w = half_width
        return cls([(cx - w, cy - w), (cx + w, cy - w), (cx + w, cy + w), (cx - w, cy + w)])

    @property
    def segments(self) -> np.ndarray:
        return np.stack((self.vertices, np.roll(self.vertices, -1, axis=0)), axis=1)


Shape = Union[LevelSetGeometry, DomainSpec, PolygonShape]


def _shape_integrals(shape: Shape, beta: float):
    """Weighted volume and the boundary integral of |y|^(-(n-1) beta / n)."""
    if isinstance(shape, PolygonShape) or (isinstance(shape, LevelSetGeometry) and shape.segments is not None):
        segments = shape.segments
        if segments.shape[0] == 0:
            raise DegenerateShapeError("Shape has no boundary")
        origin = np.zeros(2)
        if isinstance(shape, LevelSetGeometry) and shape.origin is not None:
            origin = shape.origin
        volume = fan_weighted_volume(segments, origin, beta, POLYGON_PIECES, POLYGON_ORDER)
        quad = segment_quadrature(segments, origin, POLYGON_PIECES, POLYGON_ORDER)
        boundary = quad.integrate(quad.distance ** (-beta / 2.0))
        return 2, volume, boundary

    if isinstance(shape, DomainSpec):
        if shape.variant == GreenVariant.PLANAR_GRID:
            raise DomainError("Pass a level set of the planar Green function instead of the grid")
        center, radius, n = shape.offset, shape.radius, shape.n
    else:
        center, radius, n = shape.center, shape.radius, len(shape.center)
    if not radius > 0:
        raise DegenerateShapeError("Shape has zero volume")
    volume = sphere_weighted_volume(center, radius, n, beta)
    quad = sphere_quadrature(center, radius, n)
    boundary = quad.integrate(quad.distance ** (-(n - 1) * beta / n))
    return n, volume, boundary


def alvino_check(shape: Shape, beta: float, tol: float = 1e-10) -> CheckReport:
    """
    Weighted isoperimetric inequality A <= B.

    A is the integral of |y|^(-beta) over the shape and
    B = (1/alpha_(n,beta)) (integral of |y|^(-(n-1) beta / n) over the boundary)^(n/(n-1)).

    Args:
        shape: Level set, ball domain or polygon.
        beta: Weight exponent in [0, n).
        tol: Relative slack.

    Returns:
        CheckReport: Row ``alvino`` with lhs = A, rhs = B.

    Raises:
        DegenerateShapeError: If the shape has zero volume.
    """
    n, volume, boundary = _shape_integrals(shape, beta)
    if not volume > 0:
        raise DegenerateShapeError("Shape has zero volume")
    bound = boundary ** (n / (n - 1.0)) / critical_alpha_for(n, beta)
    report = CheckReport("alvino")
    report.add_leq("alvino", beta, volume, bound, tol)
    return report


def volume_lower_bound_check(g: GreenFunction, beta: float, tol: float = 1e-10) -> CheckReport:
    """
    Weighted volume of the domain against (omega/(n-beta)) I^(n-beta).

    Args:
        g: Green function.
        beta: Weight exponent in [0, n).
        tol: Relative slack.

    Returns:
        CheckReport: Row ``volume_lower_bound`` with lhs = bound, rhs = volume; the
        gap volume - bound is kept in the notes.

    Raises:
        ExponentRangeError: If beta is outside [0, n).
    """
    if not (0.0 <= beta < g.n):
        raise ExponentRangeError(f"beta must lie in [0, {g.n}), got {beta}")
    omega = sphere_measure(g.n)
    kappa = g.n - beta
    bound = omega / kappa * g.incenter ** kappa
    volume = weighted_volume(g, green_level_set(g, 0.0), beta)
    report = CheckReport("volume_lower_bound")
    report.add_leq("volume_lower_bound", beta, bound, volume, tol)
    report.notes["gap"] = volume - bound
    return report


def ray_level_set_integral(g: GreenFunction, t: float, beta: float, order: int = RAY_ORDER) -> float:
    """
    Integral of |y|^(-beta) / |grad G| over {G = t}, located by root-finding along rays.

    Along the ray in direction u the level set sits at the root rho of
    G(rho u) = t, and dH / |grad G| = rho^(n-1) dS(u) / |u . grad G|.

    Args:
        g: Ball-variant Green function.
        t: Level.
        beta: Weight exponent.
        order: Gauss points in the meridian angle.

    Returns:
        float: The boundary integral.
    """
    if g.variant == GreenVariant.PLANAR_GRID:
        raise DomainError("Ray resampling is available for ball variants only")
    axis, _ = g.frame()
    side = np.zeros(g.n)
    side[int(np.argmin(np.abs(axis)))] = 1.0
    side -= (side @ axis) * axis
    side /= np.linalg.norm(side)
    offset, radius = g.domain.offset, g.domain.radius
    tau = g.incenter * math.exp(-g.c * t)

    nodes, weights = gauss_unit_interval(order)
    theta = math.pi * nodes
    total = 0.0
    for angle, weight in zip(theta, weights):
        direction = math.cos(angle) * axis + math.sin(angle) * side
        along = float(direction @ offset)
        reach = along + math.sqrt(along * along - float(offset @ offset) + radius * radius)

        def level_gap(rho, d=direction):
            return float(green_eval(g, rho * d)[0]) - t

        if level_gap(reach) >= 0.0:
            rho = reach
        else:
            rho = brentq(level_gap, 1e-3 * tau, reach, xtol=1e-15, rtol=1e-14)
        slope = abs(float(green_gradient(g, rho * direction)[0] @ direction))
        integrand = rho ** (g.n - 1 - beta) / slope * math.sin(angle) ** (g.n - 2)
        total += weight * integrand
    return transverse_measure(g.n) * math.pi * total


def boundary_isoperimetric_check(g: GreenFunction, beta: float, r_list: Sequence[float],
                                 tol: float = 1e-10, ray_tol: float = 1e-4,
                                 ray_check: bool = False) -> CheckReport:
    """
    Boundary inequality omega^(n/(n-1)) I^(n-beta) <= r^(-(n-beta)) int_{G=t} |y|^(-beta)/|grad G|.

    The level is t = -(1/omega^(1/(n-1))) log r; r = 1 is the domain boundary.

    Args:
        g: Green function.
        beta: Weight exponent in [0, n].
        r_list: Values in (0, 1].
        tol: Relative slack of the inequality.
        ray_tol: Agreement tolerance between meridian and ray quadratures.
        ray_check: Also recompute the right side by ray resampling (ball variants).

    Returns:
        CheckReport: Rows ``boundary_iso`` per r and optionally ``ray_agreement``.
    """
    omega = sphere_measure(g.n)
    kappa = g.n - beta
    lhs = omega ** (g.n / (g.n - 1.0)) * g.incenter ** kappa
    report = CheckReport("boundary_isoperimetric")
    trend = {}
    for r in sorted(r_list, reverse=True):
        if not (0.0 < r <= 1.0):
            raise DomainError(f"r must lie in (0, 1], got {r}")
        t = -math.log(r) / g.c
        level = green_level_set(g, t)
        if not level.resolved:
            report.notes[f"unresolved_r={r:.12g}"] = True
            continue
        density = weighted_coarea_density(level, beta)
        rhs = density / r ** kappa
        report.add_leq("boundary_iso", r, lhs, rhs, tol)
        trend[float(r)] = rhs / lhs
        if ray_check and g.is_closed_form:
            ray_rhs = ray_level_set_integral(g, t, beta) / r ** kappa
            report.add_close("ray_agreement", r, rhs, ray_rhs, ray_tol, relative=True)
    report.notes["ratio_by_r"] = trend
    return report


def shifted_ball_reduced_check(n: int, offset: float, beta: float, tol: float = 1e-10) -> CheckReport:
    """
    omega (1 - |xi|^2)^(n+1-beta) <= integral of |y|^(2-beta) over the sphere |y - xi| = 1.

    Args:
        n: Dimension.
        offset: |xi| in [0, 1).
        beta: Weight exponent.
        tol: Relative slack.

    Returns:
        CheckReport: Row ``shifted_ball_reduced``.
    """
    if not (0.0 <= offset < 1.0):
        raise DomainError(f"|xi| must lie in [0, 1), got {offset}")
    center = np.zeros(n)
    center[0] = offset
    quad = sphere_quadrature(center, 1.0, n)
    rhs = quad.integrate(quad.distance ** (2.0 - beta))
    lhs = sphere_measure(n) * (1.0 - offset ** 2) ** (n + 1.0 - beta)
    report = CheckReport("shifted_ball_reduced")
    report.add_leq("shifted_ball_reduced", offset, lhs, rhs, tol)
    return report


def weighted_volume_monotonicity(g: GreenFunction, beta: float, t_list: Sequence[float],
                                 tol: float = 1e-10) -> CheckReport:
    """
    t -> e^(alpha_(n,beta) t) int_{G>t} |y|^(-beta) is non-increasing.

    Returns:
        CheckReport: One ``weighted_volume_monotone`` row per consecutive pair of levels.
    """
    alpha = critical_alpha_for(g.n, beta)
    report = CheckReport("weighted_volume_monotonicity")
    previous = None
    for t in sorted(float(v) for v in t_list):
        level = green_level_set(g, t)
        if not level.resolved:
            continue
        value = math.exp(alpha * t) * weighted_volume(g, level, beta)
        if previous is not None:
            report.add_leq("weighted_volume_monotone", t, value, previous, tol)
        previous = value
    return report
