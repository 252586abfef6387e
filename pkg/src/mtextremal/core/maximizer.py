"""
Radial maximization of the weighted functional.

Projected-gradient ascent on the node values of a radial profile, constrained
to the unit energy sphere, plus the Moser-family concentration level and the
gap between the two.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .checks import CheckReport
from .constants import AdmissibilityError, ExponentConfig, ExponentRangeError, carleson_chang_level, critical_config
from .radial import (
    ProfileError,
    RadialProfile,
    build_plan,
    decreasing_rearrangement,
    default_grid,
    dirichlet_energy,
    from_function,
    functional_eval,
    functional_gradient,
    integrate_plan,
    moser_index_limit,
    moser_profile,
    random_profile,
    transform_Ta,
)
from ..utils.logging_setup import get_logger

logger = get_logger(__name__)


@dataclass
class MaximizerOptions:
    """Ascent settings."""
    nodes: int = 512
    log_min: float = -40.0
    max_iter: int = 5000
    rearrange_every: int = 25
    step_init: float = 0.05
    step_max: float = 0.5
    step_min: float = 1e-14
    stall_window: int = 50
    stall_tol: float = 1e-10
    restarts: int = 0
    seed: Optional[int] = None


@dataclass
class MaximizerResult:
    """
    Best profile found by the ascent.

    ``seed_values`` holds the functional of each provided seed as given (scaled
    down to unit energy when its energy exceeds 1); ``value`` is never below them.
    """
    profile: RadialProfile
    value: float
    energy: float
    iterations: int
    converged: bool
    trace: List[float] = field(default_factory=list)
    seed_values: List[float] = field(default_factory=list)


@dataclass
class ConcentrationLevel:
    """
    Extrapolated Moser-family limits and the closed-form reference.

    ``family_params`` lists the supports scanned and, per support, the index
    range actually evaluated.
    """
    estimate: float
    reference: float
    family_params: Dict[str, Any]
    limits: Dict[float, float] = field(default_factory=dict)
    values: Dict[float, List[float]] = field(default_factory=dict)


def working_grid(c: ExponentConfig, opts: MaximizerOptions) -> np.ndarray:
    """
    Grid on which the ascent runs.

    For beta > 0 the log range is stretched by 1/a so the grid is the T_(1/a)
    image of the unweighted grid.
    """
    return default_grid(opts.nodes, opts.log_min / c.ta_scale)


def default_seeds(c: ExponentConfig, opts: MaximizerOptions) -> List[RadialProfile]:
    """Truncated logarithms min(-log r, L) on the working grid, several plateau depths."""
    grid = working_grid(c, opts)
    seeds = []
    for depth in (0.5, 1.0, 2.0, 3.0, 4.0, 6.0):
        scaled = depth / c.ta_scale

        def ramp(r, top=scaled):
            with np.errstate(divide="ignore"):
                return np.minimum(-np.log(r), top)

        seeds.append(from_function(c.n, ramp, grid))
    return seeds


def _stiffness(p: RadialProfile) -> sparse.csr_matrix:
    """Quadratic energy form of the n = 2 case on the profile's grid, free nodes only."""
    dx = np.diff(p.log_grid)
    weights = np.concatenate(([0.5 * p.core_power], 1.0 / dx))
    size = p.grid.size
    main = np.zeros(size)
    main[:-1] += weights
    main[1:] += weights
    matrix = sparse.diags([main, -weights, -weights], [0, 1, -1], shape=(size, size), format="csr")
    return matrix[:-1, :-1].tocsc()


class RadialAscent:
    """
    Sobolev-preconditioned projected-gradient ascent for one config.

    The working grid and quadrature plan are fixed for the run; every trial
    point is clipped to non-negative values, pinned to zero at r = 1 and scaled
    back to unit energy.
    """

    def __init__(self, c: ExponentConfig, opts: MaximizerOptions):
        self.c = c
        self.opts = opts
        self.logger = logger
        self.grid = working_grid(c, opts)
        template = RadialProfile(c.n, self.grid, np.concatenate((np.ones(self.grid.size - 1), [0.0])))
        self.plan = build_plan(template, c.beta)
        self.stiffness = _stiffness(template)

    def project(self, values: np.ndarray) -> Optional[RadialProfile]:
        values = np.maximum(values, 0.0)
        values[-1] = 0.0
        try:
            profile = RadialProfile(self.c.n, self.grid, values)
            if dirichlet_energy(profile) <= 0:
                return None
            return profile.normalized()
        except ProfileError:
            return None

    def value(self, profile: RadialProfile) -> float:
        result = integrate_plan(self.plan, profile.values, self.c)
        return -math.inf if result.overflow else result.value

    def direction(self, profile: RadialProfile) -> Optional[np.ndarray]:
        grad = functional_gradient(profile, self.c, self.plan)[:-1]
        d = spsolve(self.stiffness, grad)
        u = profile.values[:-1]
        ku = self.stiffness @ u
        d = d - (d @ ku) / (u @ ku) * u
        norm_sq = d @ (self.stiffness @ d)
        if not norm_sq > 0:
            return None
        return np.concatenate((d / math.sqrt(norm_sq), [0.0]))

    def rearranged(self, profile: RadialProfile) -> Optional[RadialProfile]:
        return self.project(decreasing_rearrangement(profile, refine=1).resample(self.grid).values)

    def run(self, start: RadialProfile, start_value: float) -> MaximizerResult:
        opts = self.opts
        current, value = start, start_value
        trace = [value]
        step = opts.step_init
        converged = False
        iteration = 0

        for iteration in range(1, opts.max_iter + 1):
            direction = self.direction(current)
            if direction is None:
                converged = True
                break

            accepted = False
            while step >= opts.step_min:
                trial = self.project(current.values + step * direction)
                if trial is not None:
                    trial_value = self.value(trial)
                    if trial_value > value:
                        current, value = trial, trial_value
                        accepted = True
                        step = min(2.0 * step, opts.step_max)
                        break
                step *= 0.5
            if not accepted:
                converged = True
                break

            if iteration % opts.rearrange_every == 0:
                candidate = self.rearranged(current)
                if candidate is not None:
                    candidate_value = self.value(candidate)
                    if candidate_value >= value:
                        current, value = candidate, candidate_value

            trace.append(value)
            if len(trace) > opts.stall_window:
                previous = trace[-1 - opts.stall_window]
                if value - previous <= opts.stall_tol * abs(value):
                    converged = True
                    break
            if iteration % 500 == 0:
                self.logger.debug(f"ascent iteration {iteration}: value={value:.12g} step={step:.3g}")

        return MaximizerResult(current, value, dirichlet_energy(current), iteration, converged, trace)


def _seed_candidate(seed: RadialProfile) -> Optional[RadialProfile]:
    """The seed on its own grid, scaled down onto the unit energy ball if needed."""
    energy = dirichlet_energy(seed)
    if energy <= 0:
        return None
    return seed.normalized() if energy > 1.0 else seed


def maximize_radial(c: ExponentConfig, seeds: Optional[Sequence[RadialProfile]] = None,
                    opts: Optional[MaximizerOptions] = None) -> MaximizerResult:
    """
    Maximize the functional over radial profiles of unit energy.

    Seeds are resampled on the working grid and scaled to unit energy; the ascent
    starts from the best of them. Extra restarts from random perturbations of the
    best seed run only when ``opts.restarts`` is positive and ``opts.seed`` is set.
    Resampling can lose a seed's breakpoints, so each seed is also evaluated on
    its own grid and returned unchanged when the ascent ends below it.

    Args:
        c: Admissible config.
        seeds: Starting profiles (defaults to truncated logarithms).
        opts: Ascent settings.

    Returns:
        MaximizerResult: Best profile, its value and energy, and the ascent trace.

    Raises:
        ProfileError: If a seed has the wrong dimension or no seed has positive energy.
    """
    opts = opts or MaximizerOptions()
    seeds = list(seeds) if seeds else default_seeds(c, opts)
    ascent = RadialAscent(c, opts)

    starts = []
    originals = []
    for seed in seeds:
        if seed.n != c.n:
            raise ProfileError(f"Seed dimension {seed.n} does not match config dimension {c.n}")
        candidate = _seed_candidate(seed)
        if candidate is None:
            continue
        originals.append((functional_eval(candidate, c), candidate))
        projected = ascent.project(seed.resample(ascent.grid).values)
        if projected is not None:
            starts.append((ascent.value(projected), projected))
    if not originals:
        raise ProfileError("No seed with positive energy")

    seed_value, seed_profile = max(originals, key=lambda item: item[0])
    result = MaximizerResult(seed_profile, seed_value, dirichlet_energy(seed_profile), 0, True, [seed_value])
    if starts:
        best_value, best_start = max(starts, key=lambda item: item[0])
        logger.info(f"Maximizing (n={c.n}, alpha={c.alpha:.6g}, beta={c.beta:.6g}) "
                    f"from {len(starts)} seeds, best resampled seed value {best_value:.12g}")
        runs = [ascent.run(best_start, best_value)]

        if opts.restarts > 0 and opts.seed is not None:
            rng = np.random.default_rng(opts.seed)
            for _ in range(opts.restarts):
                noise = 1.0 + 0.1 * rng.standard_normal(ascent.grid.size)
                restart = ascent.project(best_start.values * noise)
                if restart is not None:
                    runs.append(ascent.run(restart, ascent.value(restart)))

        best_run = max(runs, key=lambda item: item.value)
        if best_run.value >= seed_value or not math.isfinite(seed_value):
            result = best_run
        else:
            logger.warning(f"Ascent ended at {best_run.value:.12g}, below the seed value "
                           f"{seed_value:.12g}; returning the seed")
            result.iterations = best_run.iterations
            result.converged = best_run.converged
            result.trace = best_run.trace + [seed_value]

    result.seed_values = [v for v, _ in originals]
    logger.info(f"Ascent finished after {result.iterations} iterations: value={result.value:.12g}, "
                f"converged={result.converged}")
    return result


def _extrapolate(h: Sequence[float], f: Sequence[float]) -> float:
    """Value at h = 0 of the quadratic through three points; falls back to the last value."""
    h = list(h)
    if len(set(h)) < 3:
        return float(f[-1])
    total = 0.0
    for k in range(3):
        weight = 1.0
        for j in range(3):
            if j != k:
                weight *= -h[j] / (h[k] - h[j])
        total += weight * f[k]
    return total


def concentration_level(c: ExponentConfig, eps_list: Sequence[float] = (1.0,),
                        i_max: int = 8) -> ConcentrationLevel:
    """
    Moser-family concentration level at criticality.

    Args:
        c: Critical config.
        eps_list: Support radii of the Moser families.
        i_max: Largest index evaluated (at least 3). Capped per epsilon at the
            largest index whose plateau radius is representable.

    Returns:
        ConcentrationLevel: Sup of the per-epsilon limits, e^(H_(n-1)) |B_1|
        (divided by a = 1 - beta/n when beta > 0) and the scanned family.

    Raises:
        AdmissibilityError: If the config is not critical.
        ExponentRangeError: If an epsilon leaves fewer than three representable indices.
    """
    if not c.critical:
        raise AdmissibilityError("concentration_level requires a critical config")
    i_max = max(3, int(i_max))
    rate = c.c
    limits: Dict[float, float] = {}
    values: Dict[float, List[float]] = {}
    indices: Dict[float, List[int]] = {}
    for eps in eps_list:
        top = min(i_max, moser_index_limit(eps, c.n))
        if top < 3:
            raise ExponentRangeError(f"Only {top} representable Moser indices for eps={eps}, n={c.n}")
        if top < i_max:
            logger.warning(f"Moser index capped at {top} for eps={eps}, n={c.n} (requested {i_max})")
        sequence = [functional_eval(moser_profile(i, eps, c.n), c) for i in range(1, top + 1)]
        h = [math.exp(-rate * i ** c.q) for i in range(top - 2, top + 1)]
        limits[float(eps)] = _extrapolate(h, sequence[-3:])
        values[float(eps)] = sequence
        indices[float(eps)] = [1, top]
        logger.debug(f"Moser family eps={eps}: limit {limits[float(eps)]:.12g}")
    reference = carleson_chang_level(c.n) / c.ta_scale
    family = {"eps": [float(eps) for eps in eps_list], "indices": indices}
    return ConcentrationLevel(max(limits.values()), reference, family, limits, values)


def gap_report(c: ExponentConfig, opts: Optional[MaximizerOptions] = None,
               seeds: Optional[Sequence[RadialProfile]] = None) -> CheckReport:
    """
    Compare the radial maximum against the concentration level.

    The margin max - reference is asserted positive at criticality; for
    subcritical configs the reference is reported and flagged not applicable.

    Args:
        c: Config with n = 2 or 3.
        opts: Ascent settings.
        seeds: Optional seeds for the ascent.

    Returns:
        CheckReport: Rows ``gap_margin`` (and ``moser_limit``) plus notes with the trace.
    """
    report = CheckReport("gap_report")
    reference = carleson_chang_level(c.n) / c.ta_scale
    param = f"n={c.n},alpha={c.alpha:.12g},beta={c.beta:.12g}"
    result = maximize_radial(c, seeds, opts)
    report.notes.update({
        "max_value": result.value,
        "reference": reference,
        "iterations": result.iterations,
        "converged": result.converged,
        "trace": result.trace,
    })
    if not c.critical:
        report.notes["applicable"] = False
        report.add_flag("gap_not_applicable", param, result.value, True, reference)
        return report

    level = concentration_level(c)
    report.notes["applicable"] = True
    report.notes["moser_level"] = level.estimate
    report.add_leq("moser_limit", param, level.estimate, reference, 0.01)
    report.add_flag("gap_margin", param, result.value, result.value - reference > 0, reference)
    if not report.passed:
        logger.warning(f"Gap check failed for {param}: max {result.value:.12g} vs {reference:.12g}")
    return report


def gradient_check(c: ExponentConfig, rng: np.random.Generator, cases: int = 10,
                   tol: float = 1e-5, nodes: int = 64) -> CheckReport:
    """
    Analytic functional gradient against central differences on random profiles.

    Each case compares the gradients on the free nodes with value above the step
    size; the residual is the max-norm error relative to the max-norm gradient.
    """
    report = CheckReport("gradient_check")
    for case in range(cases):
        p = random_profile(c.n, rng, nodes)
        plan = build_plan(p, c.beta)
        analytic = functional_gradient(p, c, plan)
        numeric = np.zeros_like(analytic)
        for k in range(p.values.size - 1):
            step = 1e-6 * max(1.0, p.values[k])
            if p.values[k] <= step:
                numeric[k] = analytic[k]
                continue
            up = p.values.copy()
            down = p.values.copy()
            up[k] += step
            down[k] -= step
            numeric[k] = (integrate_plan(plan, up, c).value - integrate_plan(plan, down, c).value) / (2 * step)
        scale = float(np.max(np.abs(analytic[:-1])))
        error = float(np.max(np.abs(numeric[:-1] - analytic[:-1])))
        report.add_leq("gradient_fd", f"case={case}", error / max(scale, 1e-300), 0.0, tol, relative=False)
    return report


def ta_duality_check(c: ExponentConfig, rng: np.random.Generator, cases: int = 50,
                     tol: float = 1e-6, energy_tol: float = 1e-10) -> CheckReport:
    """
    F(u) = J(T_a u) / a with a = 1 - beta/n, and T_a preserves the energy.

    Args:
        c: Critical config with beta > 0.
        rng: Random generator for the profiles.
        cases: Number of random profiles.
        tol: Relative tolerance of the functional identity.
        energy_tol: Tolerance of the energy invariance.

    Returns:
        CheckReport: Rows ``ta_duality`` and ``ta_energy`` per case.

    Raises:
        AdmissibilityError: If c is not critical.
    """
    if not c.critical:
        raise AdmissibilityError("T_a duality relates critical configs only")
    a = c.ta_scale
    unweighted = critical_config(c.n, 0.0)
    report = CheckReport("ta_duality")
    for case in range(cases):
        p = random_profile(c.n, rng)
        image = transform_Ta(p, a)
        weighted = functional_eval(p, c)
        report.add_close("ta_duality", f"case={case}", weighted, functional_eval(image, unweighted) / a,
                         tol, relative=True)
        report.add_close("ta_energy", f"case={case}", dirichlet_energy(image), dirichlet_energy(p), energy_tol)
    return report
