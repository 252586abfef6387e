"""
From concentrating domain sequences back to radial sequences on the unit ball.

Grid Schwarz symmetrization, the restricted Hardy-Littlewood and Polya-Szego
inequalities, harmonic replacement below a level, and the rebuild of a radial
profile v_i from a domain function u_i whose super-level set {u_i >= s_i} sits
between two balls around the singularity.

Domain functions come in three kinds: ``GridFunction`` on planar grids,
``RadialProfile`` centered at the singularity, and ``TransplantedFunction``.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .checks import CheckReport
from .constants import ExponentConfig
from .green.domains import DomainSpec, GreenFunction, GreenVariant, green_function
from .green.level_sets import green_level_set, level_sphere
from .green.planar import boundary_layer, solve_dirichlet
from .grid_function import GridFunction, P1Interpolant
from .radial import (
    MIN_NODES,
    RadialProfile,
    decreasing_rearrangement,
    dirichlet_energy,
    energy_outside,
    energy_where,
    integrate_plan,
    moser_profile,
    superlevel_functional,
    superlevel_plan,
)
from .transplant import TransplantedFunction, domain_energy
from ..utils.logging_setup import get_logger

logger = get_logger(__name__)

DEFAULT_REPLACEMENT_LEVEL = 1.5
CORE_SAMPLES = 16
TAIL_NODES = 32
MATCH_XTOL = 1e-12
GRID_LEVEL_CELLS = 16

DomainFunction = Union[GridFunction, RadialProfile, TransplantedFunction]


class LevelError(Exception):
    """Raised when a super-level set is empty or touches the boundary."""
    pass


class CertificateError(Exception):
    """Raised when a super-level set is not between its certificate balls."""
    pass


@dataclass
class Domain2BallParams:
    """
    Quantities of one index of the domain-to-ball rebuild.

    Attributes:
        index: Position in the sequence.
        n: Dimension.
        s: Level of the super-level set.
        rho: Certificate center radius.
        eps: Certificate half-width.
        lam: -(1/omega^(1/(n-1))) log(rho / I).
        t: Matched Green level, at least lam.
        delta: e^(-omega^(1/(n-1)) t).
        a: Radius with |{u* >= s}| = |B_a|.
    """
    index: int
    n: int
    s: float
    rho: float
    eps: float
    lam: float
    t: float
    delta: float
    a: float

    def __post_init__(self):
        values = (self.s, self.rho, self.eps, self.lam, self.t, self.delta, self.a)
        if not all(math.isfinite(v) for v in values):
            raise CertificateError(f"Non-finite parameters at index {self.index}")
        if not (0.0 < self.delta < 1.0):
            raise CertificateError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.a > 0:
            raise CertificateError(f"a must be positive, got {self.a}")
        if self.t < self.lam - 1e-12:
            raise CertificateError(f"Matched level {self.t} is below lambda {self.lam}")

    @property
    def tail_energy(self) -> float:
        """s^n / t^(n-1)."""
        return self.s ** self.n / self.t ** (self.n - 1)

    @property
    def ratio(self) -> float:
        return self.a / self.delta

    def to_json(self) -> Dict[str, Any]:
        return {
            "index": self.index, "n": self.n, "s": self.s, "rho": self.rho, "eps": self.eps,
            "lambda": self.lam, "t": self.t, "delta": self.delta, "a": self.a,
        }


@dataclass
class DomainToBallResult:
    """Rebuilt profiles, their parameters and the combined checks."""
    profiles: List[RadialProfile]
    params: List[Domain2BallParams]
    report: CheckReport


@dataclass
class SequenceManifest:
    """Replayable inputs of a domain-to-ball run."""
    domain: DomainSpec
    functions: List[DomainFunction]
    levels: List[float]
    certificates: List[Tuple[float, float]]
    green: Optional[GreenFunction] = field(default=None, repr=False)


def schwarz_symmetrize_grid(u: GridFunction) -> RadialProfile:
    """
    Radially decreasing rearrangement of a grid function on the disk of equal area.

    Cells are ordered by value (stable, ties by cell index); the k-th cell fills
    the annulus between the radii of area k h^2 and (k + 1) h^2. Each annulus gets
    nodes at interior area fractions, so the distribution function is matched to
    within one cell.

    Args:
        u: Grid function.

    Returns:
        RadialProfile: Two-dimensional profile of radius R with pi R^2 = |Omega|.
    """
    values = u.values[u.mask]
    count = values.size
    if count == 0:
        raise LevelError("Grid function has an empty mask")
    ordered = values[np.argsort(-values, kind="stable")]
    per_cell = max(1, math.ceil((MIN_NODES - 2) / count))
    fractions = (np.arange(per_cell) + 0.5) / per_cell
    area = np.repeat(np.arange(count), per_cell) + np.tile(fractions, count)
    radii = np.sqrt(area * u.cell_area / math.pi)
    outer = math.sqrt(count * u.cell_area / math.pi)
    grid = np.concatenate(([0.0], radii, [outer]))
    profile = np.concatenate(([ordered[0]], np.repeat(ordered, per_cell), [0.0]))
    return RadialProfile(2, grid, profile)


def _weighted_superlevel(p: RadialProfile, beta: float, level: float) -> float:
    """omega * integral of u r^(n-1-beta) over {u >= level}."""
    plan = superlevel_plan(p, beta, level)
    if plan.lo.size == 0:
        return 0.0
    return float(np.sum(np.exp(plan.log_weight) * np.maximum(plan.interpolate(p.values), 0.0)))


def hl_ps_check(u: Union[GridFunction, RadialProfile], thresholds: Sequence[float], beta: float = 0.0,
                center=None, rearranged: Optional[RadialProfile] = None, tol: float = 1e-8) -> CheckReport:
    """
    Restricted Hardy-Littlewood and Polya-Szego inequalities.

    (i) The integral of u |y|^(-beta) over {u >= a} is at most the same integral
    for the rearrangements. On grids the rearrangement pairs cell values and cell
    weights in decreasing order. (ii) The energy of u* on {u* <= t} and on
    {u* >= t} is at most the energy of u on the same sets; on grids both sides use
    the P1 interpolant.

    Args:
        u: Grid function or radial profile.
        thresholds: Levels a (for (i)) and t (for (ii)).
        beta: Weight exponent.
        center: Weight center for grids (origin of the plane by default).
        rearranged: Precomputed rearrangement of a radial profile.
        tol: Relative slack.

    Returns:
        CheckReport: Rows ``hardy_littlewood``, ``polya_szego_below``, ``polya_szego_above``.
    """
    report = CheckReport("hl_ps")
    levels = sorted(float(v) for v in thresholds)

    if isinstance(u, GridFunction):
        center = np.zeros(2) if center is None else np.asarray(center, dtype=float)
        f = u.values[u.mask]
        g = u.cell_weights(center, beta)[u.mask]
        f_sorted = np.sort(f)[::-1]
        g_sorted = np.sort(g)[::-1]
        for a in levels:
            selected = f >= a
            lhs = float(np.sum(f[selected] * g[selected])) * u.cell_area
            k = int(np.count_nonzero(selected))
            rhs = float(np.sum(f_sorted[:k] * g_sorted[:k])) * u.cell_area
            report.add_leq("hardy_littlewood", a, lhs, rhs, tol)
        interpolant = P1Interpolant.of(u)
        top = float(f.max()) if f.size else 0.0
        for t in levels:
            report.add_leq("polya_szego_below", t, interpolant.rearranged_energy(0.0, t),
                           interpolant.energy_below(t), tol)
            report.add_leq("polya_szego_above", t, interpolant.rearranged_energy(t, top),
                           interpolant.energy_above(t), tol)
        return report

    star = rearranged or decreasing_rearrangement(u, extra_levels=levels)
    for a in levels:
        report.add_leq("hardy_littlewood", a, _weighted_superlevel(u, beta, a),
                       _weighted_superlevel(star, beta, a), tol)
    for t in levels:
        report.add_leq("polya_szego_below", t, energy_where(star, t, "below"), energy_where(u, t, "below"), tol)
        report.add_leq("polya_szego_above", t, energy_where(star, t, "above"), energy_where(u, t, "above"), tol)
    return report


def _check_replacement_level(k: float) -> None:
    if not (1.0 <= k <= 2.0):
        raise LevelError(f"Replacement level must lie in [1, 2], got {k}")


def _crossing_radius(p: RadialProfile, cell: int, level: float) -> float:
    """Radius inside grid cell [cell, cell + 1] where the profile equals ``level``."""
    u_a, u_b = p.values[cell], p.values[cell + 1]
    frac = (level - u_a) / (u_b - u_a)
    if cell == 0:
        return float(p.grid[1] * frac ** (1.0 / p.core_power))
    x_a, x_b = math.log(p.grid[cell]), math.log(p.grid[cell + 1])
    return float(math.exp(x_a + frac * (x_b - x_a)))


def _radial_replacement(u: RadialProfile, k: float) -> RadialProfile:
    if not np.any(u.values >= k):
        raise LevelError(f"{{u >= {k}}} is empty")
    nodes = [float(r) for r in u.grid]
    for cell in range(u.grid.size - 1):
        u_a, u_b = u.values[cell], u.values[cell + 1]
        if (u_a - k) * (u_b - k) < 0:
            r_cross = _crossing_radius(u, cell, k)
            nodes.append(r_cross)
            if cell == 0:
                nodes.extend(np.geomspace(r_cross, u.grid[1], CORE_SAMPLES + 2)[1:-1].tolist())
    grid = np.unique(np.array(nodes))
    values = u.evaluate(grid)
    values[-1] = 0.0
    crossings = np.isclose(values, k, rtol=1e-12, atol=0.0)
    values[crossings] = k

    below = (values[:-1] < k) | (values[1:] < k)
    last = grid.size - 1
    core_power = u.core_power
    cell = 0
    while cell < below.size:
        if not below[cell]:
            cell += 1
            continue
        start = cell
        while cell < below.size and below[cell]:
            cell += 1
        stop = cell
        # cells start..stop-1 cover nodes start..stop
        if start == 0 and stop == last:
            raise LevelError(f"{{u >= {k}}} has empty interior")
        if start == 0:
            values[:stop] = k
            core_power = 1.0
        elif stop == last:
            log_ratio = math.log(grid[start] / grid[last])
            values[start + 1:last] = k * np.log(grid[start + 1:last] / grid[last]) / log_ratio
        else:
            values[start + 1:stop] = k
    return RadialProfile(u.n, grid, values, core_power)


def _grid_replacement(u: GridFunction, k: float) -> GridFunction:
    upper = u.mask & (u.values >= k)
    if not np.any(upper):
        raise LevelError(f"{{u >= {k}}} is empty")
    if np.any(upper & _touching(boundary_layer(u.mask))):
        raise LevelError(f"{{u >= {k}}} touches the boundary")
    unknown = u.mask & ~upper
    data = np.where(upper, u.values, 0.0)
    solved, residual = solve_dirichlet(unknown, data)
    logger.debug(f"Grid harmonic replacement at k={k}: {int(unknown.sum())} nodes, residual {residual:.3e}")
    return u.with_values(np.where(upper, u.values, solved))


def _touching(layer: np.ndarray) -> np.ndarray:
    """Nodes with a 4-neighbour in ``layer``."""
    near = np.zeros_like(layer)
    near[1:, :] |= layer[:-1, :]
    near[:-1, :] |= layer[1:, :]
    near[:, 1:] |= layer[:, :-1]
    near[:, :-1] |= layer[:, 1:]
    return near


def harmonic_replacement(u: Union[GridFunction, RadialProfile],
                         k: float = DEFAULT_REPLACEMENT_LEVEL) -> Union[GridFunction, RadialProfile]:
    """
    Replace u below the level k by the n-harmonic function with the same boundary data.

    Radial profiles get c1 log r + c2 on each component of {u < k}: the logarithmic
    interpolation between k and 0 on the outer annulus and the constant k on inner
    components. Grids keep the values on {u >= k} and solve the 5-point Laplace
    equation on the rest of the mask.

    Args:
        u: Grid function or radial profile.
        k: Level in [1, 2].

    Returns:
        Same kind as u.

    Raises:
        LevelError: If {u >= k} is empty or touches the boundary.
    """
    _check_replacement_level(k)
    if isinstance(u, GridFunction):
        return _grid_replacement(u, k)
    return _radial_replacement(u, k)


def replacement_report(u: Union[GridFunction, RadialProfile], v: Union[GridFunction, RadialProfile],
                       k: float, tol: float = 1e-8) -> CheckReport:
    """
    Energy decrease and bounds of a harmonic replacement.

    Returns:
        CheckReport: Rows ``replacement_energy``, ``replacement_lower``,
        ``replacement_upper`` and ``replacement_fixed``.
    """
    report = CheckReport("harmonic_replacement")
    if isinstance(u, GridFunction):
        below = u.mask & (u.values < k)
        upper = u.mask & (u.values >= k)
        contact = upper & _touching(below)
        bound = float(u.values[contact].max()) if np.any(contact) else k
        report.add_leq("replacement_energy", k, v.energy(), u.energy(), tol)
        below_values = v.values[below]
        fixed = float(np.max(np.abs(v.values[upper] - u.values[upper]))) if np.any(upper) else 0.0
    else:
        bound = k
        report.add_leq("replacement_energy", k, dirichlet_energy(v), dirichlet_energy(u), tol)
        on_nodes = v.evaluate(u.grid)
        below_values = on_nodes[u.values < k]
        upper = u.values >= k
        fixed = float(np.max(np.abs(on_nodes[upper] - u.values[upper]))) if np.any(upper) else 0.0
    low = float(below_values.min()) if below_values.size else 0.0
    high = float(below_values.max()) if below_values.size else 0.0
    report.add_flag("replacement_lower", k, low, low >= -tol, 0.0, tol)
    report.add_leq("replacement_upper", k, high, bound, tol, relative=False)
    report.add_close("replacement_fixed", k, fixed, 0.0, tol)
    return report


def _profile_bounds(p: RadialProfile, level: float) -> Tuple[float, float]:
    """Infimum of {u < level} and supremum of {u >= level} for a radial profile."""
    above = p.values >= level
    if not np.any(above):
        raise LevelError(f"{{u >= {level}}} is empty")
    first_below = int(np.argmax(~above))
    inner = 0.0 if first_below == 0 else _crossing_radius(p, first_below - 1, level)
    last_above = int(np.nonzero(above)[0][-1])
    if p.values[last_above] == level:
        outer = float(p.grid[last_above])
    else:
        outer = _crossing_radius(p, last_above, level)
    return inner, outer


def _superlevel_bounds(u: DomainFunction, level: float, center=None) -> Tuple[float, float]:
    """
    Radii (inner, outer) with B_inner inside {u >= level} and {u >= level} inside the closed B_outer.

    Radial profiles are centered at the singularity; transplanted functions read
    the radii from the certificate of the matching Green level sets.
    """
    if isinstance(u, GridFunction):
        center = np.zeros(2) if center is None else np.asarray(center, dtype=float)
        distance = u.distances(center)
        inside = u.mask & (u.values >= level)
        if not np.any(inside):
            raise LevelError(f"{{u >= {level}}} is empty")
        return float(distance[~inside].min()), float(distance[inside].max())
    if isinstance(u, RadialProfile):
        return _profile_bounds(u, level)
    g = u.green
    r_in, r_out = _profile_bounds(u.source, level)
    inner = 0.0
    if r_in > 0:
        inner = max(0.0, green_level_set(g, -math.log(r_in) / g.c).inner_radius)
    outer = green_level_set(g, max(0.0, -math.log(r_out) / g.c)).outer_radius
    return inner, outer


def certificates_for(u_seq: Sequence[DomainFunction], s_seq: Sequence[float],
                     center=None) -> List[Tuple[float, float]]:
    """
    Approximate-ball certificates (rho_i, eps_i) of the super-level sets {u_i >= s_i}.

    Returns:
        List[Tuple[float, float]]: rho = (inner + outer)/2 and eps = (outer - inner)/2.
    """
    certificates = []
    for u, s in zip(u_seq, s_seq):
        inner, outer = _superlevel_bounds(u, s, center)
        certificates.append((0.5 * (inner + outer), 0.5 * (outer - inner)))
    return certificates


def _check_certificate(u: DomainFunction, s: float, rho: float, eps: float, center) -> None:
    inner, outer = _superlevel_bounds(u, s, center)
    slack = 1e-12 * max(rho, 1.0)
    if rho - eps > inner + slack or outer > rho + eps + slack:
        raise CertificateError(
            f"{{u >= {s}}} spans radii [{inner:.6g}, {outer:.6g}], not inside "
            f"[{rho - eps:.6g}, {rho + eps:.6g}]")


def _certificate_outer(g: GreenFunction, t: float) -> float:
    """tau(t) + sigma(t) for the level set {G = t}."""
    tau = g.incenter * math.exp(-g.c * t)
    if g.is_closed_form:
        center, radius = level_sphere(g, t)
        offset = float(np.linalg.norm(center))
        return tau + max(abs(tau - (radius - offset)), abs(radius + offset - tau))
    sigma = green_level_set(g, t).sigma
    return tau + (sigma if math.isfinite(sigma) else 0.0)


def match_level(g: GreenFunction, rho: float, eps: float) -> Tuple[float, float]:
    """
    Solve tau(t) + sigma(t) = rho - eps for t.

    Args:
        g: Green function.
        rho: Certificate center radius.
        eps: Certificate half-width.

    Returns:
        Tuple[float, float]: (lambda, t) with t >= lambda.

    Raises:
        CertificateError: If rho - eps is not positive or no level matches.
    """
    target = rho - eps
    if not target > 0:
        raise CertificateError(f"rho - eps must be positive, got {target}")
    lam = -math.log(rho / g.incenter) / g.c

    def gap(t: float) -> float:
        return _certificate_outer(g, t) - target

    lo = max(lam, 0.0)
    if gap(lo) <= 0:
        return lam, lo
    width = 0.1
    while gap(lo + width) > 0:
        width *= 2.0
        if width > 1e3:
            raise CertificateError(f"No Green level set fits inside radius {target}")
    t = brentq(gap, lo, lo + width, xtol=MATCH_XTOL, rtol=4 * np.finfo(float).eps)
    return lam, float(t)


def _symmetrize(u: DomainFunction, level: float) -> RadialProfile:
    if isinstance(u, GridFunction):
        return schwarz_symmetrize_grid(u)
    if isinstance(u, RadialProfile):
        return decreasing_rearrangement(u, extra_levels=(level,))
    return u.symmetrized()


def _assemble(star: RadialProfile, s: float, a: float, delta: float, t: float, c: float,
              tail_nodes: int) -> RadialProfile:
    """Core u*(a r / delta) on [0, delta] and tail -(s/(c t)) log r on [delta, 1]."""
    inner = star.grid < a * (1.0 - 1e-12)
    core_grid = star.grid[inner] * (delta / a)
    core_values = star.values[inner]
    tail_grid = np.exp(np.linspace(math.log(delta), 0.0, tail_nodes))
    tail_grid[0] = delta
    tail_grid[-1] = 1.0
    tail_values = -(s / (c * t)) * np.log(tail_grid)
    tail_values[0] = s
    tail_values[-1] = 0.0
    return RadialProfile(star.n, np.concatenate((core_grid, tail_grid)),
                         np.concatenate((core_values, tail_values)), star.core_power)


def build_radial(u_seq: Sequence[DomainFunction], s_seq: Sequence[float],
                 certificates: Sequence[Tuple[float, float]], g: GreenFunction,
                 center=None, tail_nodes: int = TAIL_NODES
                 ) -> Tuple[List[RadialProfile], List[Domain2BallParams]]:
    """
    Rebuild radial profiles on B_1 from a domain sequence.

    Per index: lambda from rho, t from the matching tau + sigma = rho - eps, delta =
    e^(-omega^(1/(n-1)) t), a from {u* >= s} = B_a, and v equal to the logarithmic
    tail for |x| >= delta and to u*(a x / delta) inside.

    Args:
        u_seq: Domain functions.
        s_seq: Levels in (0, 1].
        certificates: (rho_i, eps_i) with B_(rho-eps) inside {u_i >= s_i} inside B_(rho+eps).
        g: Green function of the domain.
        center: Certificate center for grid functions (the singularity by default).
        tail_nodes: Nodes of the logarithmic tail.

    Returns:
        Tuple[List[RadialProfile], List[Domain2BallParams]]: Profiles and parameters.

    Raises:
        CertificateError: If a super-level set violates its certificate.
        LevelError: If a level is outside (0, 1] or its super-level set is empty.
    """
    if not (len(u_seq) == len(s_seq) == len(certificates)):
        raise CertificateError("Sequences, levels and certificates must have equal length")
    center = g.singularity if center is None else center
    profiles: List[RadialProfile] = []
    params: List[Domain2BallParams] = []
    for index, (u, s, (rho, eps)) in enumerate(zip(u_seq, s_seq, certificates)):
        if not (0.0 < s <= 1.0):
            raise LevelError(f"Level s must lie in (0, 1], got {s}")
        _check_certificate(u, s, rho, eps, center)
        lam, t = match_level(g, rho, eps)
        delta = math.exp(-g.c * t)
        star = _symmetrize(u, s)
        a = _profile_bounds(star, s)[1]
        profiles.append(_assemble(star, s, a, delta, t, g.c, tail_nodes))
        params.append(Domain2BallParams(index, g.n, float(s), float(rho), float(eps), lam, t, delta, a))
        logger.debug(f"Index {index}: t - lambda = {t - lam:.3e}, a/delta = {a / delta:.6g}")
    return profiles, params


def _domain_energy(u: DomainFunction) -> float:
    if isinstance(u, GridFunction):
        return u.energy()
    if isinstance(u, RadialProfile):
        return dirichlet_energy(u)
    return domain_energy(u.source, u.coarea())


def _domain_energy_split(u: DomainFunction, s: float) -> Tuple[float, float]:
    """Energies on {u < s} and {u >= s}."""
    if isinstance(u, GridFunction):
        interpolant = P1Interpolant.of(u)
        return interpolant.energy_below(s), interpolant.energy_above(s)
    if isinstance(u, RadialProfile):
        return energy_where(u, s, "below"), energy_where(u, s, "above")
    r_out = _profile_bounds(u.source, s)[1]
    table = u.coarea()
    below = domain_energy(u.source, table, -math.log(r_out))
    return below, domain_energy(u.source, table) - below


def _superlevel_domain_functional(u: DomainFunction, c: ExponentConfig, s: float, center) -> float:
    if isinstance(u, GridFunction):
        weights = u.cell_weights(center, c.beta)
        return u.integrate(lambda x: np.expm1(c.alpha * x ** c.q), weights, u.values >= s)
    if isinstance(u, RadialProfile):
        return superlevel_functional(u, c, s)
    table = u.coarea(c.beta)
    plan = superlevel_plan(u.source, c.beta, s)
    return integrate_plan(plan, u.source.values, c, density=table.density_at(-plan.log_r)).value


def energy_transfer_check(u: DomainFunction, v: RadialProfile, params: Domain2BallParams,
                          g: GreenFunction, c: Optional[ExponentConfig] = None,
                          tol: float = 1e-2, center=None) -> CheckReport:
    """
    Energy and functional transfer from u_i to the rebuilt v_i.

    Args:
        u: Domain function.
        v: Rebuilt profile.
        params: Parameters of the index.
        g: Green function.
        c: Exponent config; adds the functional comparison on the super-level sets.
        tol: Relative slack of the inequalities.
        center: Weight center for grid functions (the singularity by default).

    Returns:
        CheckReport: Rows ``step2_lower_bound``, ``tail_energy``, ``energy_decomposition``,
        ``core_energy``, ``energy_comparison``, ``continuity``, ``decay_bound`` and,
        with a config, ``superlevel_functional``.
    """
    center = g.singularity if center is None else center
    s, t, delta, n = params.s, params.t, params.delta, params.n
    report = CheckReport("energy_transfer")
    index = params.index

    total_u = _domain_energy(u)
    low_u, high_u = _domain_energy_split(u, s)
    tail_closed = params.tail_energy
    tail = energy_outside(v, delta)
    core = energy_where(v, s, "above")
    total_v = dirichlet_energy(v)

    report.add_leq("step2_lower_bound", index, tail_closed, low_u, tol)
    report.add_close("tail_energy", index, tail, tail_closed, 1e-10, relative=True)
    report.add_close("energy_decomposition", index, tail_closed + core, total_v, 1e-10, relative=True)
    report.add_leq("core_energy", index, core, high_u, tol)
    report.add_leq("energy_comparison", index, total_v, total_u, tol)

    star = _symmetrize(u, s)
    inside = float(star.evaluate(params.a)[0])
    outside = -(s / (g.c * t)) * math.log(delta)
    report.add_close("continuity", index, inside, outside, 1e-12)

    decay_radius = math.exp(-g.c * math.sqrt(t))
    if decay_radius >= delta:
        report.add_close("decay_bound", index, float(v.evaluate(decay_radius)[0]), s / math.sqrt(t),
                         1e-10, relative=True)
    else:
        report.notes["decay_bound_skipped"] = True

    if c is not None:
        scale = params.ratio ** (n - c.beta)
        lhs = _superlevel_domain_functional(u, c, s, center)
        rhs = scale * superlevel_functional(v, c, s)
        report.add_leq("superlevel_functional", index, lhs, rhs, tol)
        report.notes["functional_margin"] = rhs - lhs

    report.notes.update({
        "low_level_energy": low_u, "bound": tail_closed, "tail_energy": tail, "core_energy": core,
        "energy_u": total_u, "energy_v": total_v,
    })
    return report


def domain_to_ball_report(u_seq: Sequence[DomainFunction], s_seq: Sequence[float],
                          certificates: Sequence[Tuple[float, float]], g: GreenFunction,
                          c: Optional[ExponentConfig] = None, tol: float = 1e-2,
                          ratio_tol: float = 0.02, gap_tol: float = 0.05,
                          center=None) -> DomainToBallResult:
    """
    Full rebuild with per-index transfer checks and the sequence trends.

    The trend rows (t - lambda decreasing below ``gap_tol``, a/delta within
    ``ratio_tol`` of I at the last index) are asserted for closed-form Green
    functions and reported for planar grids.

    Returns:
        DomainToBallResult: Profiles, parameters and the combined report.
    """
    profiles, params = build_radial(u_seq, s_seq, certificates, g, center)
    report = CheckReport("domain2ball")
    for u, v, p in zip(u_seq, profiles, params):
        transfer = energy_transfer_check(u, v, p, g, c, tol, center)
        report.rows.extend(transfer.rows)
        report.notes[f"index_{p.index}"] = transfer.notes

    gaps = [p.t - p.lam for p in params]
    ratios = [p.ratio for p in params]
    report.notes.update({"params": [p.to_json() for p in params], "t_minus_lambda": gaps,
                         "ratio": ratios, "incenter": g.incenter})
    if g.is_closed_form and params:
        decreasing = all(b <= a + 1e-12 for a, b in zip(gaps[:-1], gaps[1:]))
        report.add_flag("t_minus_lambda_decreasing", len(gaps), gaps[-1], decreasing, 0.0)
        report.add_leq("t_minus_lambda_final", params[-1].index, gaps[-1], gap_tol, 0.0, relative=False)
        report.add_close("incenter_ratio", params[-1].index, ratios[-1], g.incenter, ratio_tol, relative=True)
    return DomainToBallResult(profiles, params, report)


def _sample_transplant(source: RadialProfile, g: GreenFunction):
    transplanted = TransplantedFunction(source, g)

    def sample(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        points = np.stack((x, y), axis=-1)
        values = np.full(x.shape, float(source.values[0]))
        regular = np.linalg.norm(points - g.singularity, axis=-1) > 0
        if np.any(regular):
            values[regular] = transplanted(points[regular])
        return values

    return sample


def moser_sequence(g: GreenFunction, indices: Sequence[int], epsilon: float = 1.0,
                   h: Optional[float] = None) -> Tuple[List[DomainFunction], List[float]]:
    """
    Transplanted Moser functions with default levels.

    Centered balls give radial profiles of radius R and level 1; shifted balls give
    transplanted functions and level 1; planar grids (and two-dimensional balls
    when ``h`` is set) give sampled grid functions whose level puts {u >= s} about
    sixteen cells away from the singularity.

    Returns:
        Tuple[List[DomainFunction], List[float]]: Functions and levels.
    """
    functions: List[DomainFunction] = []
    levels: List[float] = []
    domain = g.domain
    for i in indices:
        source = moser_profile(i, epsilon, g.n)
        if g.variant == GreenVariant.PLANAR_GRID or h is not None:
            grid_function = GridFunction.on_domain(domain, _sample_transplant(source, g), h)
            spacing = grid_function.h
            target = GRID_LEVEL_CELLS * spacing / g.incenter
            levels.append(min(1.0, float(source.evaluate(target)[0])))
            functions.append(grid_function)
        elif g.variant == GreenVariant.CENTERED_BALL:
            functions.append(RadialProfile(g.n, source.grid * domain.radius, source.values, source.core_power))
            levels.append(1.0)
        else:
            functions.append(TransplantedFunction(source, g))
            levels.append(1.0)
    return functions, levels


def _function_to_json(u: DomainFunction) -> Dict[str, Any]:
    if isinstance(u, GridFunction):
        return {"kind": "grid", **u.to_json()}
    if isinstance(u, RadialProfile):
        return {"kind": "radial", "profile": u.to_json()}
    return {"kind": "transplanted", "profile": u.source.to_json()}


def save_manifest(path: Path, domain: DomainSpec, u_seq: Sequence[DomainFunction], s_seq: Sequence[float],
                  certificates: Sequence[Tuple[float, float]]) -> None:
    """Write the inputs of a domain-to-ball run as JSON."""
    data = {
        "domain": domain.to_json(),
        "levels": [float(s) for s in s_seq],
        "certificates": [[float(rho), float(eps)] for rho, eps in certificates],
        "functions": [_function_to_json(u) for u in u_seq],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, sort_keys=True)


def load_manifest(path: Path) -> SequenceManifest:
    """Read a manifest written by ``save_manifest``; the Green function is rebuilt from the domain."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    domain = DomainSpec.from_json(data["domain"])
    g = green_function(domain)
    functions: List[DomainFunction] = []
    for entry in data["functions"]:
        kind = entry["kind"]
        if kind == "grid":
            functions.append(GridFunction.from_json(entry))
        elif kind == "radial":
            functions.append(RadialProfile.from_json(entry["profile"]))
        elif kind == "transplanted":
            functions.append(TransplantedFunction(RadialProfile.from_json(entry["profile"]), g))
        else:
            raise ValueError(f"Unknown function kind in manifest: {kind}")
    certificates = [(float(rho), float(eps)) for rho, eps in data["certificates"]]
    return SequenceManifest(domain, functions, [float(s) for s in data["levels"]], certificates, g)
