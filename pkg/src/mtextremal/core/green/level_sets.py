"""
Level sets {G > t} of Green functions and the integrals over them.

For ball variants every level set is a sphere, known in closed form, and
boundary integrals use an axisymmetric Gauss rule in the meridian angle. Planar
grids use marching-squares polylines with a midpoint rule per segment.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..checks import CheckReport
from ..constants import sphere_measure
from .domains import DomainError, GreenFunction, GreenVariant, green_gradient
from .planar import planar_energy_below, planar_level_segments
from ...utils.logging_setup import get_logger
from ...utils.quadrature import gauss_unit_interval

logger = get_logger(__name__)

BOUNDARY_ORDER = 4096
TIME_ORDER = 24
UNRESOLVED_CELLS = 2.0


class LevelSetError(Exception):
    """Raised for negative levels or level sets below floating-point resolution."""
    pass


class CriticalPointError(Exception):
    """Raised when |grad G| vanishes on a sampled level set."""
    pass


@dataclass
class BoundaryQuadrature:
    """Points on a hypersurface with dH weights and distances to the singularity."""
    points: np.ndarray
    weights: np.ndarray
    distance: np.ndarray
    gradient_norm: Optional[np.ndarray] = None

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(self.weights * values))


@dataclass
class LevelSetGeometry:
    """
    Boundary of {G > t}.

    Attributes:
        t: Level.
        volume: Lebesgue measure of {G > t}.
        tau: I e^(-omega^(1/(n-1)) t).
        sigma: Certificate half-width, B_(tau - sigma) inside and B_(tau + sigma) outside.
        center: Sphere center (ball variants).
        radius: Sphere radius (ball variants).
        segments: Oriented polyline (planar grids).
        resolved: False when the level set is too small for the grid.
        origin: Singularity the weights are centered at (planar grids).
    """
    t: float
    volume: float
    tau: float
    sigma: float
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    segments: Optional[np.ndarray] = None
    resolved: bool = True
    quadrature: Optional[BoundaryQuadrature] = None
    origin: Optional[np.ndarray] = None
    integrals: Dict[str, float] = field(default_factory=dict)

    @property
    def inner_radius(self) -> float:
        return self.tau - self.sigma

    @property
    def outer_radius(self) -> float:
        return self.tau + self.sigma


def _orthogonal(axis: np.ndarray) -> np.ndarray:
    other = np.zeros_like(axis)
    other[int(np.argmin(np.abs(axis)))] = 1.0
    other -= (other @ axis) * axis
    return other / np.linalg.norm(other)


def transverse_measure(n: int) -> float:
    """Measure of the unit sphere S^(n-2); 2 for n = 2."""
    return 2.0 if n == 2 else sphere_measure(n - 1)


def sphere_quadrature(center: np.ndarray, radius: float, n: int, order: int = BOUNDARY_ORDER,
                      axis: Optional[np.ndarray] = None) -> BoundaryQuadrature:
    """
    Meridian Gauss rule on the sphere |y - center| = radius for axisymmetric integrands.

    The axis runs through the origin and the center; integrands must be invariant
    under rotations about it.

    Args:
        center: Sphere center.
        radius: Sphere radius.
        n: Dimension.
        order: Gauss points in the meridian angle.
        axis: Symmetry axis (defaults to the center direction or the first axis).

    Returns:
        BoundaryQuadrature: Points, dH weights and distances to the origin.
    """
    center = np.asarray(center, dtype=float)
    if axis is None:
        norm = np.linalg.norm(center)
        axis = center / norm if norm > 0 else np.eye(n)[0]
    side = _orthogonal(axis)
    nodes, weights = gauss_unit_interval(order)
    theta = math.pi * nodes
    points = (center[None, :] + radius * (np.cos(theta)[:, None] * axis[None, :]
                                          + np.sin(theta)[:, None] * side[None, :]))
    dh = (transverse_measure(n) * radius ** (n - 1) * np.sin(theta) ** (n - 2) * math.pi * weights)
    return BoundaryQuadrature(points, dh, np.linalg.norm(points, axis=1))


def sphere_weighted_volume(center: np.ndarray, radius: float, n: int, beta: float,
                           order: int = BOUNDARY_ORDER) -> float:
    """
    Integral of |y|^(-beta) over a ball containing the origin.

    Uses polar coordinates about the origin: the ball boundary along a ray at
    angle theta from the center direction sits at k cos(theta) + sqrt(rho^2 - k^2 sin^2(theta)).

    Raises:
        DomainError: If the origin is not inside the ball.
    """
    offset = float(np.linalg.norm(center))
    if offset >= radius:
        raise DomainError("Weighted volume needs the origin inside the ball")
    nodes, weights = gauss_unit_interval(order)
    theta = math.pi * nodes
    reach = offset * np.cos(theta) + np.sqrt(radius ** 2 - (offset * np.sin(theta)) ** 2)
    kappa = n - beta
    integrand = reach ** kappa * np.sin(theta) ** (n - 2)
    return transverse_measure(n) / kappa * math.pi * float(np.sum(weights * integrand))


def segment_quadrature(segments: np.ndarray, center: np.ndarray, pieces: int = 1,
                       order: int = 1) -> BoundaryQuadrature:
    """
    Gauss rule on a planar polyline (midpoint rule for order 1).

    Args:
        segments: Array (m, 2, 2) of oriented segments.
        center: Point distances are measured from.
        pieces: Subdivisions per segment.
        order: Gauss order per piece.

    Returns:
        BoundaryQuadrature: Points, length weights and distances.
    """
    nodes, weights = gauss_unit_interval(order)
    split = (np.arange(pieces)[:, None] + nodes[None, :]).ravel() / pieces
    lam_w = np.tile(weights, pieces) / pieces
    start, end = segments[:, 0, :], segments[:, 1, :]
    points = start[:, None, :] + split[None, :, None] * (end - start)[:, None, :]
    lengths = np.linalg.norm(end - start, axis=1)
    dh = lengths[:, None] * lam_w[None, :]
    points = points.reshape(-1, 2)
    return BoundaryQuadrature(points, dh.ravel(), np.linalg.norm(points - center, axis=1))


def fan_weighted_volume(segments: np.ndarray, center: np.ndarray, beta: float,
                        pieces: int = 1, order: int = 4) -> float:
    """
    Integral of |y - center|^(-beta) over the region bounded by an oriented polyline.

    Each segment PQ contributes the signed triangle (center, P, Q), evaluated as
    cross(P, Q) / (2 - beta) times the mean of |y|^(-beta) along the segment.
    """
    nodes, weights = gauss_unit_interval(order)
    split = (np.arange(pieces)[:, None] + nodes[None, :]).ravel() / pieces
    lam_w = np.tile(weights, pieces) / pieces
    p = segments[:, 0, :] - center
    q = segments[:, 1, :] - center
    cross = p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0]
    points = p[:, None, :] + split[None, :, None] * (q - p)[:, None, :]
    mean = np.sum(lam_w[None, :] * np.linalg.norm(points, axis=2) ** (-beta), axis=1)
    return float(np.sum(cross * mean) / (2.0 - beta))


def level_sphere(g: GreenFunction, t: float) -> Tuple[np.ndarray, float]:
    """
    Center and radius of the sphere {G = t} for ball variants.

    With r = e^(-omega^(1/(n-1)) t), s = |x|/R and k = 1 - s^2 the level set of
    B_R + x is centered at R r^2 k (x/R) / (1 - r^2 s^2) with radius
    R r sqrt(|center/(R r)|^2 + k^2 / (1 - r^2 s^2)).
    """
    axis, s = g.frame()
    r = math.exp(-g.c * t)
    if r == 0.0:
        raise LevelSetError(f"Level set at t={t} is below floating-point resolution")
    k = 1.0 - s * s
    denom = 1.0 - r * r * s * s
    scaled_center = r * k * s / denom
    scaled_radius = math.sqrt(scaled_center ** 2 + k * k / denom)
    radius = g.domain.radius
    return axis * (radius * r * scaled_center), radius * r * scaled_radius


def green_level_set(g: GreenFunction, t: float, order: int = BOUNDARY_ORDER) -> LevelSetGeometry:
    """
    Level set {G = t} with its enclosed volume and certificate radii.

    Args:
        g: Green function.
        t: Level, at least 0.
        order: Boundary quadrature order for ball variants.

    Returns:
        LevelSetGeometry: Geometry with an attached boundary quadrature.

    Raises:
        LevelSetError: If t < 0.
        CriticalPointError: If |grad G| vanishes on the sampled boundary.
    """
    if not (t >= 0 and math.isfinite(t)):
        raise LevelSetError(f"Level must be a finite non-negative number, got {t}")
    tau = g.incenter * math.exp(-g.c * t)

    if g.variant == GreenVariant.PLANAR_GRID:
        return _planar_level_set(g, t, tau)

    center, radius = level_sphere(g, t)
    quad = sphere_quadrature(center, radius, g.n, order, axis=g.frame()[0])
    quad.gradient_norm = np.linalg.norm(green_gradient(g, quad.points), axis=1)
    _check_critical(quad, t)
    volume = sphere_measure(g.n) * radius ** g.n / g.n
    offset = float(np.linalg.norm(center))
    sigma = max(abs(tau - (radius - offset)), abs(radius + offset - tau))
    return LevelSetGeometry(t, volume, tau, sigma, center=center, radius=radius, quadrature=quad)


def _planar_level_set(g: GreenFunction, t: float, tau: float) -> LevelSetGeometry:
    field_ = g.field
    segments = planar_level_segments(field_, t)
    if segments.shape[0] == 0:
        return LevelSetGeometry(t, 0.0, tau, float("nan"), segments=segments, resolved=False,
                                origin=field_.singularity)
    quad = segment_quadrature(segments, field_.singularity)
    resolved = bool(np.min(quad.distance) >= UNRESOLVED_CELLS * field_.h)
    if resolved:
        quad.gradient_norm = np.linalg.norm(green_gradient(g, quad.points), axis=1)
        _check_critical(quad, t)
    volume = fan_weighted_volume(segments, field_.singularity, 0.0)
    ends = np.linalg.norm(segments.reshape(-1, 2) - field_.singularity, axis=1)
    sigma = float(np.max(np.abs(ends - tau)))
    return LevelSetGeometry(t, volume, tau, sigma, segments=segments, resolved=resolved, quadrature=quad,
                            origin=field_.singularity)


def _check_critical(quad: BoundaryQuadrature, t: float) -> None:
    bad = np.nonzero(~(quad.gradient_norm > 0))[0]
    if bad.size:
        point = quad.points[bad[0]].tolist()
        raise CriticalPointError(f"|grad G| vanishes at {point} on the level t={t}")


def gradient_flux(level: LevelSetGeometry, n: int) -> float:
    """
    Integral of |grad G|^(n-1) over the level set (1 in exact arithmetic).

    Raises:
        LevelSetError: If the level set is below the grid resolution.
    """
    if not level.resolved:
        raise LevelSetError(f"Level t={level.t} is unresolved; its flux is not computed")
    return level.quadrature.integrate(level.quadrature.gradient_norm ** (n - 1))


def weighted_coarea_density(level: LevelSetGeometry, beta: float) -> float:
    """Integral of |y|^(-beta) / |grad G| over the level set."""
    quad = level.quadrature
    return quad.integrate(quad.distance ** (-beta) / quad.gradient_norm)


def weighted_volume(g: GreenFunction, level: LevelSetGeometry, beta: float) -> float:
    """Integral of |y - x|^(-beta) over {G > t}."""
    if g.variant == GreenVariant.PLANAR_GRID:
        if level.segments is None or level.segments.shape[0] == 0:
            return 0.0
        return fan_weighted_volume(level.segments, g.field.singularity, beta)
    return sphere_weighted_volume(level.center, level.radius, g.n, beta)


def energy_below(g: GreenFunction, t: float, order: int = 1024) -> float:
    """
    Integral of |grad G|^n over {G < t}.

    Ball variants integrate the level-set flux over [0, t] by Gauss-Legendre
    (coarea formula); planar grids use node sums.
    """
    if t <= 0:
        return 0.0
    if g.variant == GreenVariant.PLANAR_GRID:
        return planar_energy_below(g, t)
    nodes, weights = gauss_unit_interval(TIME_ORDER)
    total = 0.0
    for node, weight in zip(nodes, weights):
        level = green_level_set(g, t * node, order)
        total += weight * gradient_flux(level, g.n)
    return t * total


def limit_ratios(g: GreenFunction, level: LevelSetGeometry, beta: float) -> Tuple[float, float]:
    """
    Volume ratios that tend to I^n and I^(n-beta) as t grows.

    Returns:
        Tuple[float, float]: n|{G>t}| / (omega e^(-n c t)) and
        (n-beta) int_{G>t}|y|^(-beta) / (omega e^(-(n-beta) c t)).
    """
    omega = sphere_measure(g.n)
    n = g.n
    kappa = n - beta
    volume_ratio = n * level.volume / (omega * math.exp(-n * g.c * level.t))
    weighted_ratio = kappa * weighted_volume(g, level, beta) / (omega * math.exp(-kappa * g.c * level.t))
    return volume_ratio, weighted_ratio


def verify_green_properties(g: GreenFunction, t_list: Sequence[float], beta: float = 0.0,
                            tol: float = 1e-6, limit_tol: float = 0.01,
                            asymptotic_from: float = 6.0,
                            order: int = BOUNDARY_ORDER) -> CheckReport:
    """
    Residuals of the Green function properties along a list of levels.

    Rows per t: ``energy_below`` (integral of |grad G|^n over {G < t} against t),
    ``gradient_flux`` (integral of |grad G|^(n-1) over {G = t} against 1),
    ``volume_limit`` and ``weighted_volume_limit`` (against I^n and I^(n-beta);
    asserted only for t >= asymptotic_from) and ``certificate`` (sigma/tau).
    A final row asserts that sigma/tau is non-increasing along the sorted levels.

    Args:
        g: Green function.
        t_list: Non-negative levels.
        beta: Weight exponent of the weighted limit.
        tol: Tolerance for the flux and energy rows.
        limit_tol: Relative tolerance for the limit rows.
        asymptotic_from: Smallest level at which the limits are asserted.
        order: Boundary quadrature order.

    Returns:
        CheckReport: The residual rows.
    """
    report = CheckReport("green_properties")
    incenter = g.incenter
    ratios: List[Tuple[float, float]] = []
    unresolved = 0
    for t in sorted(float(v) for v in t_list):
        level = green_level_set(g, t, order)
        if not level.resolved:
            unresolved += 1
            continue
        report.add_close("energy_below", t, energy_below(g, t, order), t, tol)
        report.add_close("gradient_flux", t, gradient_flux(level, g.n), 1.0, tol)
        volume_ratio, weighted_ratio = limit_ratios(g, level, beta)
        if t >= asymptotic_from:
            report.add_close("volume_limit", t, volume_ratio, incenter ** g.n, limit_tol, relative=True)
            report.add_close("weighted_volume_limit", t, weighted_ratio, incenter ** (g.n - beta),
                             limit_tol, relative=True)
        else:
            report.add_flag("volume_limit", t, volume_ratio, True, incenter ** g.n)
            report.add_flag("weighted_volume_limit", t, weighted_ratio, True, incenter ** (g.n - beta))
        ratio = level.sigma / level.tau
        report.add_flag("certificate", t, ratio, True)
        ratios.append((t, ratio))

    if len(ratios) > 1:
        increases = [b[1] - a[1] for a, b in zip(ratios[:-1], ratios[1:])]
        worst = max(increases)
        report.add_leq("certificate_decreasing", "max increase", worst, 0.0, 1e-12, relative=False)
    report.notes["unresolved_levels"] = unresolved
    for row in report.failing:
        logger.warning(f"Green property {row.check} failed at t={row.param}: residual {row.residual:.3e}")
    return report
