"""
Radial profiles on the unit ball.

A ``RadialProfile`` stores node values on a radial grid r_0 = 0 < r_1 < ... < r_M.
Between interior nodes the profile is linear in log r; on the innermost cell
[0, r_1] it is u_0 + (u_1 - u_0)(r / r_1)^p with p = ``core_power``. Moser
sequences, T_a images and Green-composed profiles are exact in this class.

Integrals are computed segment by segment: energies in closed form, the
exponential functional with composite Gauss rules in log r whose weights carry
r^(n-1-beta) exactly.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .constants import ExponentConfig, ExponentRangeError, sphere_measure
from ..utils.logging_setup import get_logger
from ..utils.quadrature import composite_gauss, gauss_unit_interval

logger = get_logger(__name__)

MIN_NODES = 16
EXP_CLAMP = 700.0
SEGMENT_ORDER = 16
SEGMENT_WIDTH = 0.25
CORE_ORDER = 64
DEFAULT_NODES = 4096
DEFAULT_LOG_MIN = -40.0
PLATEAU_LOG_FLOOR = math.log(1e-300)


class ProfileError(Exception):
    """Raised when a radial profile violates its invariants."""
    pass


@dataclass
class RadialProfile:
    """
    Radial function sampled on a grid starting at r = 0.

    Attributes:
        n: Dimension.
        grid: Strictly increasing radii, grid[0] == 0.
        values: Non-negative node values, values[-1] == 0.
        core_power: Exponent p of the innermost cell.
    """
    n: int
    grid: np.ndarray
    values: np.ndarray
    core_power: float = 1.0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float).copy()
        self.values = np.asarray(self.values, dtype=float).copy()
        self.core_power = float(self.core_power)
        self._validate()

    def _validate(self) -> None:
        if self.n < 2:
            raise ProfileError(f"Profile dimension must be >= 2, got {self.n}")
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ProfileError("grid and values must be 1-d arrays of equal length")
        if self.grid.size < MIN_NODES:
            raise ProfileError(f"Profile needs at least {MIN_NODES} nodes, got {self.grid.size}")
        if self.grid[0] != 0.0:
            raise ProfileError("grid must start at r = 0")
        if not np.all(np.diff(self.grid) > 0):
            raise ProfileError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ProfileError("profile values must be finite")
        if np.any(self.values < 0):
            raise ProfileError("profile values must be non-negative")
        if self.values[-1] != 0.0:
            raise ProfileError("profile must vanish at the outer radius")
        if not self.core_power > 0:
            raise ProfileError(f"core_power must be positive, got {self.core_power}")

    @property
    def radius(self) -> float:
        return float(self.grid[-1])

    @property
    def log_grid(self) -> np.ndarray:
        """log r for nodes 1..M."""
        return np.log(self.grid[1:])

    def evaluate(self, r) -> np.ndarray:
        """
        Evaluate the profile at radii r (0 beyond the outer radius).

        Args:
            r: Scalar or array of radii.

        Returns:
            np.ndarray: Profile values.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        r1 = self.grid[1]
        core = r <= r1
        if np.any(core):
            frac = np.clip(r[core] / r1, 0.0, 1.0) ** self.core_power
            out[core] = self.values[0] + (self.values[1] - self.values[0]) * frac
        outer = (~core) & (r < self.radius)
        if np.any(outer):
            out[outer] = np.interp(np.log(r[outer]), self.log_grid, self.values[1:])
        return out

    def resample(self, grid: np.ndarray) -> "RadialProfile":
        """Profile with the same node-wise values on another grid."""
        grid = np.asarray(grid, dtype=float)
        values = self.evaluate(grid)
        values[-1] = 0.0
        return RadialProfile(self.n, grid, values, core_power=1.0)

    def scaled(self, factor: float) -> "RadialProfile":
        return RadialProfile(self.n, self.grid, self.values * factor, self.core_power)

    def normalized(self, target: float = 1.0) -> "RadialProfile":
        """
        Rescale the values so the Dirichlet energy equals ``target``.

        Raises:
            ProfileError: If the profile has zero energy.
        """
        energy = dirichlet_energy(self)
        if energy <= 0:
            raise ProfileError("Cannot normalise a profile with zero energy")
        return self.scaled((target / energy) ** (1.0 / self.n))

    def to_json(self) -> Dict:
        return {
            "n": self.n,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "core_power": self.core_power,
        }

    @classmethod
    def from_json(cls, data: Dict) -> "RadialProfile":
        return cls(int(data["n"]), np.array(data["grid"]), np.array(data["values"]),
                   float(data.get("core_power", 1.0)))

    def save_json(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, sort_keys=True)

    def save_csv(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["r", "u"])
            for r, u in zip(self.grid, self.values):
                writer.writerow([f"{r:.17g}", f"{u:.17g}"])


@dataclass
class FunctionalValue:
    """Functional value with the exponent clamp flag."""
    value: float
    overflow: bool = False


@dataclass
class ConcentrationReport:
    """Energy distribution of one profile of a sequence."""
    energy_total: float
    energy_outside: Dict[float, float] = field(default_factory=dict)
    concentrated: bool = False
    center: float = 0.0


@dataclass
class QuadraturePlan:
    """
    Quadrature points of the weighted radial integral.

    The integral of f(u(r)) r^(n-1-beta) over the covered radii, times omega, is
    sum(exp(log_weight) * f(u_q)) with u_q = (1 - phi) u[lo] + phi u[lo + 1].
    """
    lo: np.ndarray
    phi: np.ndarray
    log_weight: np.ndarray
    log_r: np.ndarray

    def interpolate(self, values: np.ndarray) -> np.ndarray:
        return values[self.lo] * (1.0 - self.phi) + values[self.lo + 1] * self.phi


def default_grid(nodes: int = DEFAULT_NODES, log_min: float = DEFAULT_LOG_MIN,
                 radius: float = 1.0) -> np.ndarray:
    """Zero followed by ``nodes - 1`` radii log-spaced from e^log_min to ``radius``."""
    inner = np.exp(np.linspace(log_min, 0.0, nodes - 1)) * radius
    inner[-1] = radius
    return np.concatenate(([0.0], inner))


def from_function(n: int, func, grid: Optional[np.ndarray] = None,
                  core_power: float = 1.0) -> RadialProfile:
    """Sample ``func`` on a grid; the outer value is forced to zero."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    values = np.maximum(np.asarray(func(grid), dtype=float), 0.0)
    values[-1] = 0.0
    return RadialProfile(n, grid, values, core_power)


def random_profile(n: int, rng: np.random.Generator, nodes: int = 64,
                   log_min: float = -8.0) -> RadialProfile:
    """
    Random unit-energy profile whose maximum sits on a plateau at the origin.

    Args:
        n: Dimension.
        rng: numpy random generator.
        nodes: Number of grid nodes.
        log_min: log of the smallest positive radius.

    Returns:
        RadialProfile: Unit-energy profile.
    """
    grid = default_grid(nodes, log_min)
    values = np.empty(nodes)
    values[:2] = 1.0
    values[2:-1] = rng.uniform(0.0, 1.0, nodes - 3)
    values[-1] = 0.0
    return RadialProfile(n, grid, values).normalized()


def _segment_slopes(p: RadialProfile) -> Tuple[np.ndarray, np.ndarray]:
    dx = np.diff(p.log_grid)
    return np.diff(p.values[1:]) / dx, dx


def _core_energy_factor(p: RadialProfile, omega: float) -> float:
    return omega * p.core_power ** (p.n - 1) / p.n


def dirichlet_energy(p: RadialProfile) -> float:
    """
    n-Dirichlet energy omega * int |u'|^n r^(n-1) dr, exact per segment.

    Args:
        p: Radial profile.

    Returns:
        float: Energy.
    """
    omega = sphere_measure(p.n)
    slopes, dx = _segment_slopes(p)
    interior = omega * float(np.sum(np.abs(slopes) ** p.n * dx))
    core = _core_energy_factor(p, omega) * abs(p.values[1] - p.values[0]) ** p.n
    return interior + core


def energy_outside(p: RadialProfile, radius: float) -> float:
    """Energy of the profile on {r > radius}."""
    omega = sphere_measure(p.n)
    slopes, dx = _segment_slopes(p)
    x = p.log_grid
    log_eps = math.log(radius) if radius > 0 else -np.inf
    overlap = np.clip(x[1:] - np.maximum(x[:-1], log_eps), 0.0, dx)
    total = omega * float(np.sum(np.abs(slopes) ** p.n * overlap))
    r1 = p.grid[1]
    if radius < r1:
        inner = (max(radius, 0.0) / r1) ** (p.core_power * p.n)
        total += _core_energy_factor(p, omega) * abs(p.values[1] - p.values[0]) ** p.n * (1.0 - inner)
    return total


def _interval_where(u_a: np.ndarray, u_b: np.ndarray, level: float, mode: str
                    ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Parameter sub-interval of [0, 1] on which a linear function satisfies a comparison.

    u runs linearly from u_a (param 0) to u_b (param 1). ``mode`` is one of
    'gt', 'ge', 'lt', 'le' (u compared against ``level``).
    """
    u_a = np.asarray(u_a, dtype=float)
    u_b = np.asarray(u_b, dtype=float)
    slope = u_b - u_a
    upper = mode in ("gt", "ge")
    flat = slope == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = np.clip(np.where(flat, 0.0, (level - u_a) / np.where(flat, 1.0, slope)), 0.0, 1.0)

    rising = slope > 0
    if upper:
        lo = np.where(rising, cross, 0.0)
        hi = np.where(rising, 1.0, cross)
    else:
        lo = np.where(rising, 0.0, cross)
        hi = np.where(rising, cross, 1.0)

    if mode == "gt":
        flat_holds = u_a > level
    elif mode == "ge":
        flat_holds = u_a >= level
    elif mode == "lt":
        flat_holds = u_a < level
    else:
        flat_holds = u_a <= level
    lo = np.where(flat, 0.0, lo)
    hi = np.where(flat, np.where(flat_holds, 1.0, 0.0), hi)
    return lo, hi


def _level_spans(p: RadialProfile, level: float, mode: str):
    """Interior theta spans and the core zeta span where the comparison holds."""
    interior = _interval_where(p.values[1:-1], p.values[2:], level, mode)
    core_lo, core_hi = _interval_where(np.array([p.values[0]]), np.array([p.values[1]]), level, mode)
    return interior, (float(core_lo[0]), float(core_hi[0]))


def _radius_spans(p: RadialProfile, radius: Optional[float]):
    segments = p.grid.size - 2
    if radius is None or radius >= p.radius:
        return (np.zeros(segments), np.ones(segments)), (0.0, 1.0)
    x = p.log_grid
    hi = np.clip((math.log(radius) - x[:-1]) / np.diff(x), 0.0, 1.0) if radius > 0 else np.zeros(segments)
    core_hi = min(1.0, (radius / p.grid[1]) ** p.core_power) if radius > 0 else 0.0
    return (np.zeros(segments), hi), (0.0, core_hi)


def build_plan(p: RadialProfile, beta: float, interior_span=None, core_span=None) -> QuadraturePlan:
    """
    Quadrature plan for omega * int f(u) r^(n-1-beta) dr.

    Args:
        p: Profile whose grid defines the segments.
        beta: Weight exponent.
        interior_span: Optional (lo, hi) parameter arrays restricting each interior segment.
        core_span: Optional (lo, hi) restriction of the innermost cell in the variable (r/r_1)^p.

    Returns:
        QuadraturePlan: Points, basis weights and log-weights.
    """
    n = p.n
    kappa = n - beta
    log_omega = math.log(sphere_measure(n))
    x = p.log_grid
    segments = x.size - 1
    th_lo, th_hi = interior_span if interior_span is not None else (np.zeros(segments), np.ones(segments))

    seg = np.nonzero(th_hi > th_lo)[0]
    lo_parts: List[np.ndarray] = []
    phi_parts: List[np.ndarray] = []
    logw_parts: List[np.ndarray] = []
    logr_parts: List[np.ndarray] = []

    if seg.size:
        dx = x[seg + 1] - x[seg]
        xa = x[seg] + th_lo[seg] * dx
        xb = x[seg] + th_hi[seg] * dx
        points, weights, owner = composite_gauss(xa, xb, SEGMENT_ORDER, SEGMENT_WIDTH)
        s = seg[owner]
        lo_parts.append(s + 1)
        phi_parts.append((points - x[s]) / (x[s + 1] - x[s]))
        logw_parts.append(log_omega + kappa * points + np.log(weights))
        logr_parts.append(points)

    z_lo, z_hi = core_span if core_span is not None else (0.0, 1.0)
    if z_hi > z_lo:
        power = p.core_power
        m = max(1, math.ceil(kappa / power))
        expo = m * power / kappa
        w_a, w_b = z_lo ** (1.0 / expo), z_hi ** (1.0 / expo)
        nodes, weights = gauss_unit_interval(CORE_ORDER)
        w = w_a + (w_b - w_a) * nodes
        log_r1 = math.log(p.grid[1])
        lo_parts.append(np.zeros(w.size, dtype=int))
        phi_parts.append(w ** expo)
        logw_parts.append(log_omega + kappa * log_r1 - math.log(kappa) + math.log(m)
                          + (m - 1) * np.log(w) + np.log((w_b - w_a) * weights))
        logr_parts.append(log_r1 + m * np.log(w) / kappa)

    if not lo_parts:
        empty = np.zeros(0)
        return QuadraturePlan(np.zeros(0, dtype=int), empty, empty, empty)
    return QuadraturePlan(
        lo=np.concatenate(lo_parts).astype(int),
        phi=np.concatenate(phi_parts),
        log_weight=np.concatenate(logw_parts),
        log_r=np.concatenate(logr_parts),
    )


def _check_dimensions(p: RadialProfile, c: ExponentConfig) -> None:
    if p.n != c.n:
        raise ProfileError(f"Profile dimension {p.n} does not match config dimension {c.n}")


def integrate_plan(plan: QuadraturePlan, values: np.ndarray, c: ExponentConfig,
                   density: Optional[np.ndarray] = None) -> FunctionalValue:
    """
    Sum of (e^(alpha u^q) - 1) over a plan in log space with the exponent clamp.

    Args:
        plan: Quadrature plan.
        values: Node values.
        c: Exponent config (alpha and q).
        density: Optional extra factor per quadrature point.

    Returns:
        FunctionalValue: Sum and overflow flag.
    """
    if plan.lo.size == 0:
        return FunctionalValue(0.0, False)
    u = np.maximum(plan.interpolate(values), 0.0)
    expo = c.alpha * u ** c.q
    log_weight = plan.log_weight if density is None else plan.log_weight + np.log(density)
    arg = log_weight + expo
    overflow = bool(np.any(arg > EXP_CLAMP))
    term = np.empty_like(arg)
    small = expo <= 50.0
    term[small] = np.exp(log_weight[small]) * np.expm1(expo[small])
    big = ~small
    term[big] = np.exp(np.minimum(arg[big], EXP_CLAMP)) - np.exp(log_weight[big])
    return FunctionalValue(float(np.sum(term)), overflow)


def evaluate_functional(p: RadialProfile, c: ExponentConfig,
                        radius: Optional[float] = None) -> FunctionalValue:
    """
    Weighted functional with overflow metadata.

    Args:
        p: Profile.
        c: Exponent config.
        radius: Restrict the integral to the ball of this radius.

    Returns:
        FunctionalValue: omega * int (e^(alpha u^q) - 1) r^(n-1-beta) dr and the clamp flag.
    """
    _check_dimensions(p, c)
    interior, core = _radius_spans(p, radius)
    result = integrate_plan(build_plan(p, c.beta, interior, core), p.values, c)
    if result.overflow:
        logger.warning(f"Exponent clamped at {EXP_CLAMP} while evaluating the functional")
    return result


def functional_eval(p: RadialProfile, c: ExponentConfig, radius: Optional[float] = None) -> float:
    """
    omega * int_0^1 (e^(alpha u^(n/(n-1))) - 1) r^(n-1-beta) dr.

    J is recovered with alpha = alpha_n and beta = 0.
    """
    return evaluate_functional(p, c, radius).value


def superlevel_plan(p: RadialProfile, beta: float, level: float) -> QuadraturePlan:
    """Quadrature plan covering {u >= level} only."""
    interior, core = _level_spans(p, level, "ge")
    return build_plan(p, beta, interior, core)


def superlevel_functional(p: RadialProfile, c: ExponentConfig, level: float) -> float:
    """Functional restricted to {u >= level}."""
    _check_dimensions(p, c)
    return integrate_plan(superlevel_plan(p, c.beta, level), p.values, c).value


def functional_gradient(p: RadialProfile, c: ExponentConfig,
                        plan: Optional[QuadraturePlan] = None) -> np.ndarray:
    """
    Gradient of the discrete functional with respect to the node values.

    Args:
        p: Profile.
        c: Exponent config.
        plan: Precomputed plan for p's grid and c.beta.

    Returns:
        np.ndarray: dF/du_k for every node.
    """
    _check_dimensions(p, c)
    plan = plan or build_plan(p, c.beta)
    u = np.maximum(plan.interpolate(p.values), 0.0)
    arg = np.minimum(plan.log_weight + c.alpha * u ** c.q, EXP_CLAMP)
    local = np.exp(arg) * c.alpha * c.q * u ** (c.q - 1.0)
    size = p.values.size
    grad = np.bincount(plan.lo, weights=local * (1.0 - plan.phi), minlength=size)
    grad += np.bincount(plan.lo + 1, weights=local * plan.phi, minlength=size)
    return grad


def energy_where(p: RadialProfile, level: float, side: str) -> float:
    """
    Energy on {u < level} (side='below') or {u >= level} (side='above').

    Args:
        p: Profile.
        level: Threshold.
        side: 'below' or 'above'.

    Returns:
        float: Restricted energy.
    """
    mode = "lt" if side == "below" else "ge"
    omega = sphere_measure(p.n)
    slopes, dx = _segment_slopes(p)
    (lo, hi), (c_lo, c_hi) = _level_spans(p, level, mode)
    total = omega * float(np.sum(np.abs(slopes) ** p.n * dx * (hi - lo)))
    total += (_core_energy_factor(p, omega) * abs(p.values[1] - p.values[0]) ** p.n
              * (c_hi ** p.n - c_lo ** p.n))
    return total


def superlevel_measure(p: RadialProfile, level: float, strict: bool = True) -> float:
    """Lebesgue measure of {u > level} (or {u >= level} when not strict)."""
    mode = "gt" if strict else "ge"
    omega = sphere_measure(p.n)
    n = p.n
    x = p.log_grid
    (lo, hi), (c_lo, c_hi) = _level_spans(p, level, mode)
    dx = np.diff(x)
    xa = x[:-1] + lo * dx
    xb = x[:-1] + hi * dx
    total = float(np.sum(np.where(hi > lo, np.exp(n * xb) - np.exp(n * xa), 0.0)))
    if c_hi > c_lo:
        total += p.grid[1] ** n * (c_hi ** (n / p.core_power) - c_lo ** (n / p.core_power))
    return omega / n * total


def _measure_radius(measure: float, n: int) -> float:
    return (n * max(measure, 0.0) / sphere_measure(n)) ** (1.0 / n)


def transform_Ta(p: RadialProfile, a: float) -> RadialProfile:
    """
    (T_a u)(r) = a^((n-1)/n) u(r^(1/a)), resampled on the grid r_k^a.

    Args:
        p: Profile.
        a: Positive parameter.

    Returns:
        RadialProfile: Transformed profile; the core power becomes p/a.

    Raises:
        ExponentRangeError: If a <= 0.
    """
    if not a > 0:
        raise ExponentRangeError(f"T_a requires a > 0, got {a}")
    grid = p.grid ** a
    return RadialProfile(p.n, grid, a ** ((p.n - 1.0) / p.n) * p.values, p.core_power / a)


def moser_profile(i: int, epsilon: float, n: int, ramp_nodes: int = 64,
                  outer_nodes: int = 32) -> RadialProfile:
    """
    Moser concentrating profile: plateau i, logarithmic ramp, zero beyond epsilon.

    Args:
        i: Positive index.
        epsilon: Support radius in (0, 1].
        n: Dimension.
        ramp_nodes: Nodes on the logarithmic ramp (both breakpoints included).
        outer_nodes: Nodes on [epsilon, 1] when epsilon < 1.

    Returns:
        RadialProfile: Exact representation with unit energy.

    Raises:
        ExponentRangeError: If i < 1, epsilon is outside (0, 1] or the plateau radius underflows.
    """
    if int(i) != i or i < 1:
        raise ExponentRangeError(f"Moser index must be a positive integer, got {i}")
    if not (0.0 < epsilon <= 1.0):
        raise ExponentRangeError(f"epsilon must lie in (0, 1], got {epsilon}")
    c = sphere_measure(n) ** (1.0 / (n - 1))
    log_eps = math.log(epsilon)
    log_a = log_eps - c * i ** (n / (n - 1.0))
    if log_a < PLATEAU_LOG_FLOOR:
        raise ExponentRangeError(f"Plateau radius e^{log_a:.1f} underflows for i={i}, n={n}")

    ramp_logs = np.linspace(log_a, log_eps, ramp_nodes)
    ramp_values = -(ramp_logs - log_eps) / (c * i ** (1.0 / (n - 1)))
    ramp_values[0] = float(i)
    ramp_values[-1] = 0.0
    grid_parts = [np.array([0.0]), np.exp(ramp_logs)]
    value_parts = [np.array([float(i)]), ramp_values]
    if epsilon < 1.0:
        outer = np.exp(np.linspace(log_eps, 0.0, outer_nodes + 1)[1:])
        outer[-1] = 1.0
        grid_parts.append(outer)
        value_parts.append(np.zeros(outer.size))
    grid = np.concatenate(grid_parts)
    values = np.concatenate(value_parts)
    if grid.size < MIN_NODES:
        raise ProfileError(f"Moser grid has only {grid.size} nodes")
    return RadialProfile(n, grid, values)


def moser_index_limit(epsilon: float, n: int) -> int:
    """
    Largest Moser index whose plateau radius is representable for this support.

    Raises:
        ExponentRangeError: If epsilon is outside (0, 1].
    """
    if not (0.0 < epsilon <= 1.0):
        raise ExponentRangeError(f"epsilon must lie in (0, 1], got {epsilon}")
    c = sphere_measure(n) ** (1.0 / (n - 1))
    room = (math.log(epsilon) - PLATEAU_LOG_FLOOR) / c
    i = int(room ** ((n - 1.0) / n))
    # guard the floor against rounding at the edge
    while i > 0 and math.log(epsilon) - c * i ** (n / (n - 1.0)) < PLATEAU_LOG_FLOOR:
        i -= 1
    return i


def moser_plateau_limit(c: ExponentConfig, epsilon: float) -> float:
    """
    Limit of the functional on the Moser plateau ball at criticality.

    Equals omega eps^(n-beta) / (n-beta); for n - beta = 1 this is omega eps^(n-beta).
    """
    kappa = c.n - c.beta
    return c.omega * epsilon ** kappa / kappa


def plateau_radius(i: int, epsilon: float, n: int) -> float:
    """Radius epsilon e^(-omega^(1/(n-1)) i^(n/(n-1))) of the Moser plateau."""
    c = sphere_measure(n) ** (1.0 / (n - 1))
    return epsilon * math.exp(-c * i ** (n / (n - 1.0)))


def decreasing_rearrangement(p: RadialProfile, extra_levels: Iterable[float] = (),
                             refine: int = 8) -> RadialProfile:
    """
    Equimeasurable radially non-increasing rearrangement.

    The distribution function of the piecewise profile is evaluated exactly at
    every node value, at ``extra_levels`` and at ``refine - 1`` intermediate levels
    between consecutive node values. Each level t contributes the nodes
    (rho(|{u > t}|), t) and (rho(|{u >= t}|), t), so plateaus are kept flat and
    superlevel sets at those levels have exactly the input measure.

    Args:
        p: Profile.
        extra_levels: Additional levels that must appear as nodes.
        refine: Levels per gap between node values.

    Returns:
        RadialProfile: Non-increasing profile on the same outer radius.
    """
    top = float(p.values.max())
    base = np.unique(np.concatenate((p.values, [lv for lv in extra_levels if 0.0 <= lv <= top])))[::-1]

    while True:
        levels = [base[0]]
        for upper, lower in zip(base[:-1], base[1:]):
            if upper != base[0] and refine > 1:
                levels.extend(np.linspace(upper, lower, refine + 1)[1:-1])
            levels.append(lower)
        radii: List[float] = []
        values: List[float] = []
        for t in levels:
            for strict in (True, False):
                rho = _measure_radius(superlevel_measure(p, t, strict), p.n)
                if radii and rho <= radii[-1] * (1.0 + 1e-14) + 1e-300:
                    continue
                radii.append(rho)
                values.append(t)
        if radii[0] != 0.0:
            radii.insert(0, 0.0)
            values.insert(0, top)
        radii[-1] = p.radius
        values[-1] = 0.0
        if len(radii) >= MIN_NODES or refine > 1024:
            break
        refine *= 2

    core_power = p.core_power if p.values[1] <= p.values[0] and p.values[0] == top else 1.0
    return RadialProfile(p.n, np.array(radii), np.array(values), core_power)


def concentration_metric(seq: Sequence[RadialProfile], radii: Sequence[float],
                         tol: float = 0.05) -> List[ConcentrationReport]:
    """
    Energy totals and energies outside test radii for a sequence.

    A profile is marked concentrated when its total energy is within tol of 1 and
    its energy outside every test radius is below tol; the sequence verdict is the
    verdict of its last report.

    Args:
        seq: Non-empty profile sequence.
        radii: Test radii in (0, 1).
        tol: Verdict tolerance.

    Returns:
        List[ConcentrationReport]: One report per profile.
    """
    if not seq:
        raise ProfileError("concentration_metric needs a non-empty sequence")
    reports = []
    for profile in seq:
        total = dirichlet_energy(profile)
        outside = {float(eps): energy_outside(profile, eps) for eps in radii}
        verdict = abs(total - 1.0) <= tol and all(v < tol for v in outside.values())
        reports.append(ConcentrationReport(total, outside, verdict, 0.0))
    return reports
