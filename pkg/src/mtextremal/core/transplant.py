"""
Ball-to-domain transplantation.

A radial profile v on B_1 becomes u(y) = v(e^(-omega^(1/(n-1)) G(y))) on the
domain. Every domain integral is reduced by the coarea formula to a one-dimensional
integral in s = omega^(1/(n-1)) G against level-set integrals tabulated once per
Green function: the flux of |grad G|^(n-1), the weighted density of
|y|^(-beta)/|grad G| and the enclosed volume.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .checks import CheckReport
from .constants import ExponentConfig, carleson_chang_level, sphere_measure
from .green.domains import GreenFunction, GreenVariant, green_eval, green_gradient
from .green.level_sets import (
    LevelSetError,
    gradient_flux,
    green_level_set,
    level_sphere,
    sphere_quadrature,
    weighted_coarea_density,
)
from .maximizer import MaximizerOptions, MaximizerResult, maximize_radial
from .radial import (
    ConcentrationReport,
    ProfileError,
    RadialProfile,
    build_plan,
    decreasing_rearrangement,
    dirichlet_energy,
    functional_eval,
    integrate_plan,
)
from ..utils.logging_setup import get_logger
from ..utils.quadrature import composite_gauss, gauss_unit_interval

logger = get_logger(__name__)

TABLE_S_MAX = 40.0
TABLE_NODES = 4001
TABLE_ORDER = 256
PLANAR_LEVELS = 120
ENERGY_ORDER = 8
ENERGY_WIDTH = 0.25
CORE_ORDER = 64


@dataclass
class CoareaTable:
    """
    Level-set integrals of a Green function as functions of s = omega^(1/(n-1)) t.

    ``density`` is W(s) / (c omega e^(-(n-beta) s)) with W the integral of
    |y|^(-beta)/|grad G| over {G = s/c}; it equals 1 on the centered unit ball and
    tends to I^(n-beta). Beyond the last node the flux is 1, the density its limit
    and the volume that of a ball of radius I e^(-s).
    """
    s: np.ndarray
    flux: np.ndarray
    density: np.ndarray
    volume: np.ndarray
    beta: float
    n: int
    incenter: float
    unresolved: int = 0

    @property
    def density_limit(self) -> float:
        return self.incenter ** (self.n - self.beta)

    def flux_at(self, s: np.ndarray) -> np.ndarray:
        return np.interp(s, self.s, self.flux, right=1.0)

    def density_at(self, s: np.ndarray) -> np.ndarray:
        return np.interp(s, self.s, self.density, right=self.density_limit)

    def volume_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        tail = sphere_measure(self.n) / self.n * (self.incenter * np.exp(-s)) ** self.n
        inside = np.interp(s, self.s, self.volume)
        return np.where(s > self.s[-1], tail, inside)


def _closed_form_table(g: GreenFunction, beta: float, s_max: float, nodes: int,
                       order: int) -> CoareaTable:
    n = g.n
    c = g.c
    omega = sphere_measure(n)
    s_grid = np.linspace(0.0, s_max, nodes)
    flux = np.empty(nodes)
    density = np.empty(nodes)
    volume = np.empty(nodes)
    axis = g.frame()[0]
    for k, s in enumerate(s_grid):
        center, radius = level_sphere(g, s / c)
        quad = sphere_quadrature(center, radius, n, order, axis=axis)
        grad = np.linalg.norm(green_gradient(g, quad.points), axis=1)
        flux[k] = quad.integrate(grad ** (n - 1))
        weighted = quad.integrate(quad.distance ** (-beta) / grad)
        density[k] = weighted / (c * omega * math.exp(-(n - beta) * s))
        volume[k] = omega / n * radius ** n
    return CoareaTable(s_grid, flux, density, volume, beta, n, g.incenter)


def _planar_table(g: GreenFunction, beta: float, levels: int) -> CoareaTable:
    c = g.c
    omega = sphere_measure(2)
    field_ = g.field
    s_res = max(0.5, math.log(g.incenter / (2.0 * field_.h)))
    s_grid = np.linspace(0.0, s_res, levels)
    flux = np.ones(levels)
    density = np.full(levels, g.incenter ** (2.0 - beta))
    volume = omega / 2.0 * (g.incenter * np.exp(-s_grid)) ** 2
    unresolved = 0
    for k, s in enumerate(s_grid):
        level = green_level_set(g, s / c)
        if not level.resolved:
            unresolved += 1
            continue
        flux[k] = gradient_flux(level, 2)
        density[k] = weighted_coarea_density(level, beta) / (c * omega * math.exp(-(2.0 - beta) * s))
        volume[k] = level.volume
    if unresolved:
        logger.info(f"{unresolved} of {levels} planar levels unresolved; using limit values there")
    return CoareaTable(s_grid, flux, density, volume, beta, 2, g.incenter, unresolved)


def coarea_table(g: GreenFunction, beta: float = 0.0, s_max: float = TABLE_S_MAX,
                 nodes: int = TABLE_NODES, order: int = TABLE_ORDER) -> CoareaTable:
    """
    Tabulate the level-set integrals of a Green function.

    Args:
        g: Green function.
        beta: Weight exponent of the density.
        s_max: Largest tabulated s for ball variants.
        nodes: Table size for ball variants.
        order: Meridian Gauss order per level for ball variants.

    Returns:
        CoareaTable: Flux, density and volume per level.
    """
    if g.variant == GreenVariant.PLANAR_GRID:
        return _planar_table(g, beta, PLANAR_LEVELS)
    return _closed_form_table(g, beta, s_max, nodes, order)


@dataclass
class TransplantedFunction:
    """u(y) = v(e^(-omega^(1/(n-1)) G(y))) for a radial profile v and a Green function."""
    source: RadialProfile
    green: GreenFunction
    table: Optional[CoareaTable] = None

    def __post_init__(self):
        if self.source.n != self.green.n:
            raise ProfileError(f"Profile dimension {self.source.n} does not match domain dimension {self.green.n}")

    def __call__(self, y) -> np.ndarray:
        radius = np.exp(-self.green.c * green_eval(self.green, y))
        return self.source.evaluate(radius)

    def coarea(self, beta: Optional[float] = None) -> CoareaTable:
        """Coarea table for beta (any cached table when beta is None)."""
        if beta is None:
            beta = self.table.beta if self.table is not None else 0.0
        if self.table is None or self.table.beta != beta:
            self.table = coarea_table(self.green, beta)
        return self.table

    def energy(self, s_max: Optional[float] = None) -> float:
        """Domain energy, optionally restricted to {G < s_max / c}."""
        return domain_energy(self.source, self.coarea(), s_max)

    def functional(self, c: ExponentConfig) -> float:
        """F over the domain by the coarea formula."""
        return domain_functional(self.source, self.coarea(c.beta), c)

    def symmetrized(self) -> RadialProfile:
        """
        Schwarz symmetrization of u.

        A profile node at radius r moves to the radius of the ball with the volume of
        {G > -log(r)/c}; the result is then rearranged on the volume-equivalent ball.
        """
        table = self.coarea()
        p = self.source
        s = -np.log(p.grid[1:])
        vol = table.volume_at(s)
        radii = np.concatenate(([0.0], (p.n * vol / sphere_measure(p.n)) ** (1.0 / p.n)))
        radii[-1] = (p.n * table.volume[0] / sphere_measure(p.n)) ** (1.0 / p.n)
        keep = [0]
        for k in range(1, radii.size):
            if radii[k] > radii[keep[-1]]:
                keep.append(k)
            elif k == radii.size - 1:
                keep[-1] = k
        image = RadialProfile(p.n, radii[keep], p.values[keep], p.core_power)
        return decreasing_rearrangement(image)


def transplant_eval(v: RadialProfile, g: GreenFunction, y) -> np.ndarray:
    """
    P(v)(y) = v(e^(-omega^(1/(n-1)) G(y))).

    Raises:
        DomainError: If a point lies outside the domain.
    """
    return TransplantedFunction(v, g)(y)


def domain_energy(v: RadialProfile, table: CoareaTable, s_max: Optional[float] = None) -> float:
    """
    omega * int |v_s|^n flux(s) ds, the energy of the transplanted function.

    Args:
        v: Radial profile.
        table: Coarea table of the domain.
        s_max: Restrict to s < s_max, i.e. to {G < s_max / c}.

    Returns:
        float: Energy.
    """
    n = v.n
    omega = sphere_measure(n)
    x = v.log_grid
    upper = np.inf if s_max is None else s_max
    # interior segment k covers s in [-x[k+1], -x[k]]
    s_lo = -x[1:]
    s_hi = np.minimum(-x[:-1], upper)
    slopes = np.diff(v.values[1:]) / np.diff(x)
    active = (s_hi > s_lo) & (slopes != 0)
    total = 0.0
    if np.any(active):
        points, weights, owner = composite_gauss(s_lo[active], s_hi[active], ENERGY_ORDER, ENERGY_WIDTH)
        slope_n = np.abs(slopes[active]) ** n
        total += omega * float(np.sum(slope_n[owner] * weights * table.flux_at(points)))

    jump = v.values[1] - v.values[0]
    if jump != 0:
        p = v.core_power
        s1 = -x[0]
        z_min = 0.0 if s_max is None or s_max == np.inf else math.exp(-p * n * max(s_max - s1, 0.0))
        if z_min < 1.0:
            nodes, weights = gauss_unit_interval(CORE_ORDER)
            z = z_min + (1.0 - z_min) * nodes
            s = s1 - np.log(z) / (p * n)
            core = float(np.sum((1.0 - z_min) * weights * table.flux_at(s)))
            total += omega * abs(jump) ** n * p ** (n - 1) / n * core
    return total


def domain_functional(v: RadialProfile, table: CoareaTable, c: ExponentConfig) -> float:
    """F over the domain of the transplanted profile: the radial plan weighted by the density."""
    if table.beta != c.beta:
        raise ProfileError("Coarea table was built for a different weight exponent")
    plan = build_plan(v, c.beta)
    density = table.density_at(-plan.log_r)
    return integrate_plan(plan, v.values, c, density=density).value


def transplant_energy_check(v: RadialProfile, g: GreenFunction, tol: float = 1e-3,
                            table: Optional[CoareaTable] = None) -> CheckReport:
    """
    Energy of the transplanted function against the energy of v.

    Returns:
        CheckReport: Row ``transplant_energy`` (relative deviation).
    """
    table = table or coarea_table(g, 0.0)
    report = CheckReport("transplant_energy")
    ball = dirichlet_energy(v)
    domain = domain_energy(v, table)
    report.add_close("transplant_energy", f"n={v.n}", domain, ball, tol, relative=True)
    report.notes["unresolved_levels"] = table.unresolved
    return report


def transplant_bound_check(v: RadialProfile, g: GreenFunction, c: ExponentConfig, tol: float = 1e-6,
                           table: Optional[CoareaTable] = None) -> CheckReport:
    """
    F_Omega(P v) >= I^(n-beta) F_B1(v).

    Returns:
        CheckReport: Row ``transplant_bound`` with lhs = I^(n-beta) F_B1(v), rhs = F_Omega(P v).
    """
    table = table or coarea_table(g, c.beta)
    ball = functional_eval(v, c)
    bound = g.incenter ** (c.n - c.beta) * ball
    domain = domain_functional(v, table, c)
    report = CheckReport("transplant_bound")
    report.add_leq("transplant_bound", f"beta={c.beta:.12g}", bound, domain, tol)
    report.notes["ratio"] = domain / bound if bound > 0 else float("nan")
    return report


def _containing_level(g: GreenFunction, radius: float) -> float:
    """Smallest s with {G > s/c} inside B_radius, by bisection on the certificate radii."""
    if g.variant == GreenVariant.PLANAR_GRID:
        margin = max(radius - 2.0 * g.field.h, g.field.h)
        return max(0.0, math.log(g.incenter / margin))

    def outer(s: float) -> float:
        center, rho = level_sphere(g, s / g.c)
        return rho + float(np.linalg.norm(center))

    lo, hi = 0.0, 1.0
    while outer(hi) > radius:
        lo, hi = hi, 2.0 * hi
        if hi > 1e4:
            raise LevelSetError(f"No level set fits inside radius {radius}")
    if outer(lo) <= radius:
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if outer(mid) > radius:
            lo = mid
        else:
            hi = mid
    return hi


def transplant_concentration(v_seq: Sequence[RadialProfile], g: GreenFunction, radii: Sequence[float],
                             tol: float = 0.05) -> List[ConcentrationReport]:
    """
    Concentration verdicts of a transplanted sequence at the singularity.

    The energy outside B_eps is bounded by the energy on {G < s/c} for a level whose
    outer certificate radius is below eps.

    Returns:
        List[ConcentrationReport]: One report per profile; the sequence verdict is the last one.
    """
    if not v_seq:
        raise ProfileError("transplant_concentration needs a non-empty sequence")
    table = coarea_table(g, 0.0)
    levels = {float(eps): _containing_level(g, eps) for eps in radii}
    reports = []
    for v in v_seq:
        total = domain_energy(v, table)
        outside = {eps: domain_energy(v, table, s) for eps, s in levels.items()}
        verdict = abs(total - 1.0) <= tol and all(e < tol for e in outside.values())
        reports.append(ConcentrationReport(total, outside, verdict, 0.0))
    return reports


def concentration_formula_report(g: GreenFunction, c: ExponentConfig,
                                 opts: Optional[MaximizerOptions] = None,
                                 result: Optional[MaximizerResult] = None) -> CheckReport:
    """
    Domain concentration level against the transplanted radial maximizer.

    The domain level is I^(n-beta) times the ball level e^(H_(n-1)) |B_1| / a; the
    transplanted maximizer exceeds it whenever the ball maximum exceeds the ball level.

    Args:
        g: Green function.
        c: Critical config.
        opts: Ascent settings when no result is given.
        result: Precomputed radial maximizer.

    Returns:
        CheckReport: Rows ``ball_gap`` and ``existence_gap``.
    """
    result = result or maximize_radial(c, None, opts)
    ball_level = carleson_chang_level(c.n) / c.ta_scale
    scale = g.incenter ** (c.n - c.beta)
    table = coarea_table(g, c.beta)
    transplanted = domain_functional(result.profile, table, c)
    report = CheckReport("concentration_formula")
    param = f"n={c.n},beta={c.beta:.12g}"
    report.add_flag("ball_gap", param, result.value, result.value > ball_level, ball_level)
    ball_positive = result.value > ball_level
    domain_level = scale * ball_level
    report.add_flag("existence_gap", param, transplanted,
                    (transplanted > domain_level) or not ball_positive, domain_level)
    report.notes.update({"domain_level": domain_level, "transplanted_value": transplanted,
                         "incenter": g.incenter})
    return report
