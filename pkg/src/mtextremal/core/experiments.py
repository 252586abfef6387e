"""
Experiment pipelines behind the command-line commands.

Each pipeline takes an ``ExperimentConfig`` and returns a ``CheckReport``;
``run`` wraps the report in a ``RunRecord`` and archives it.
"""

import math
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from .checks import CheckReport
from .constants import ExponentConfig, critical_alpha_for, critical_config, make_config
from .domain2ball import (
    DEFAULT_REPLACEMENT_LEVEL,
    certificates_for,
    domain_to_ball_report,
    harmonic_replacement,
    hl_ps_check,
    load_manifest,
    moser_sequence,
    replacement_report,
    save_manifest,
)
from .green import (
    DomainSpec,
    GreenVariant,
    alvino_check,
    boundary_isoperimetric_check,
    green_function,
    green_level_set,
    shifted_ball_reduced_check,
    verify_green_properties,
    volume_lower_bound_check,
    weighted_volume_monotonicity,
)
from .green.planar import comparison_principle_check, harnack_ratio, maximum_principle_check
from .grid_function import GridFunction
from .maximizer import MaximizerOptions, concentration_level, gap_report, gradient_check, ta_duality_check
from .radial import (
    RadialProfile,
    concentration_metric,
    dirichlet_energy,
    functional_eval,
    moser_plateau_limit,
    moser_profile,
    plateau_radius,
    random_profile,
)
from .run_record import RunRecord, load_records, git_blob_digest, utc_timestamp, write_record
from .transplant import (
    concentration_formula_report,
    transplant_bound_check,
    transplant_concentration,
    transplant_energy_check,
)
from ..config.experiment_config import ExperimentConfig
from ..utils.logging_setup import get_logger

logger = get_logger(__name__)

MOSER_INDICES = range(1, 11)
CONCENTRATION_RADII = (0.25,)
GRADIENT_CASES = 10
DUALITY_CASES = 50
SYMMETRIZATION_THRESHOLDS = (0.0, 0.25, 0.5, 0.75)
MANIFEST_NAME = "domain2ball_manifest.json"


class UsageError(Exception):
    """Raised for unknown commands and invalid option values."""
    pass


def _rng(config: ExperimentConfig) -> np.random.Generator:
    """Seeded generator; unseeded suites use seed 0."""
    return np.random.default_rng(config.seed if config.seed is not None else 0)


def _variant_tolerance(config: ExperimentConfig, variant: GreenVariant) -> float:
    if variant == GreenVariant.CENTERED_BALL:
        return config.tolerance("closed_form")
    if variant == GreenVariant.SHIFTED_BALL:
        return config.tolerance("quadrature")
    return config.tolerance("grid")


def radial_max_pipeline(config: ExperimentConfig) -> CheckReport:
    """Radial maximum against the concentration level, plus gradient and duality suites."""
    c = config.exponent_config()
    res = config.resolution
    opts = MaximizerOptions(nodes=res.nodes, log_min=res.log_min, max_iter=res.max_iter,
                            restarts=res.restarts, seed=config.seed)
    report = gap_report(c, opts)
    rng = _rng(config)
    report.extend(gradient_check(c, rng, GRADIENT_CASES, config.tolerance("gradient")))
    if c.critical and c.beta > 0:
        report.extend(ta_duality_check(c, rng, DUALITY_CASES, config.tolerance("quadrature"),
                                       config.tolerance("closed_form")))
    return report


def moser_pipeline(config: ExperimentConfig) -> CheckReport:
    """Unit energy, plateau values and concentration of the Moser family."""
    c = config.exponent_config()
    report = CheckReport("moser")
    kappa = c.n - c.beta
    for eps in config.eps_list:
        sequence = []
        for i in MOSER_INDICES:
            p = moser_profile(i, eps, c.n)
            sequence.append(p)
            param = f"i={i},eps={eps:.12g}"
            report.add_close("moser_energy", param, dirichlet_energy(p), 1.0, config.tolerance("closed_form"))
            if c.critical:
                rho = plateau_radius(i, eps, c.n)
                exact = moser_plateau_limit(c, eps) * -math.expm1(-kappa * c.c * i ** c.q)
                report.add_close("moser_plateau", param, functional_eval(p, c, radius=rho), exact,
                                 config.tolerance("quadrature"), relative=True)
        if c.critical:
            top = sequence[2]
            rho = plateau_radius(3, eps, c.n)
            report.add_close("moser_plateau_limit", f"i=3,eps={eps:.12g}", functional_eval(top, c, radius=rho),
                             moser_plateau_limit(c, eps), 1e-4, relative=False)
        verdicts = concentration_metric(sequence, [r * eps for r in CONCENTRATION_RADII],
                                        config.tolerance("concentration"))
        last = verdicts[-1]
        report.add_flag("moser_concentration", f"eps={eps:.12g}", max(last.energy_outside.values()),
                        last.concentrated, 0.0, config.tolerance("concentration"))

    if c.critical:
        level = concentration_level(c, config.eps_list, config.resolution.i_max)
        param = f"n={c.n},beta={c.beta:.12g}"
        report.add_leq("moser_limit", param, level.estimate, level.reference, 0.01)
        report.notes["limits"] = {f"{eps:.12g}": v for eps, v in level.limits.items()}
        report.notes["family_params"] = level.family_params
        report.notes["reference"] = level.reference
    return report


def green_verify_pipeline(config: ExperimentConfig) -> CheckReport:
    """Green function properties, plus solver principles on planar domains."""
    domain = config.domain.to_domain(config.n)
    g = green_function(domain)
    report = verify_green_properties(g, config.t_levels, config.beta,
                                     tol=_variant_tolerance(config, domain.variant),
                                     order=config.resolution.boundary_order)
    report.notes["incenter"] = g.incenter
    if domain.variant == GreenVariant.SHIFTED_BALL:
        offset = float(np.linalg.norm(domain.offset)) / domain.radius
        report.notes["incenter_closed_form"] = domain.radius * (1.0 - offset ** 2)

    if domain.variant == GreenVariant.PLANAR_GRID:
        field = g.field
        solver_tol = config.tolerance("solver")
        report.extend(maximum_principle_check(field.regular, field.mask, solver_tol))
        x, y = field.coordinates()
        lower = np.where(field.mask, 0.0, field.regular)
        upper = lower + (x - field.singularity[0]) ** 2
        report.extend(comparison_principle_check(field.mask, lower, upper, solver_tol))
        report.notes["harnack_ratio"] = harnack_ratio(g)
        report.notes["solver_residual"] = field.residual
    return report


def iso_check_pipeline(config: ExperimentConfig) -> CheckReport:
    """Volume bound, boundary inequality, weighted isoperimetry and monotone volume."""
    domain = config.domain.to_domain(config.n)
    g = green_function(domain)
    tol = _variant_tolerance(config, domain.variant)
    report = CheckReport("iso_check")
    for beta in config.betas:
        report.extend(volume_lower_bound_check(g, beta, tol))
        report.extend(boundary_isoperimetric_check(g, beta, config.r_levels, tol))
        report.extend(weighted_volume_monotonicity(g, beta, config.t_levels, tol))
        for t in config.t_levels:
            level = green_level_set(g, t)
            if level.resolved:
                report.extend(alvino_check(level, beta, tol))
        if domain.variant == GreenVariant.SHIFTED_BALL:
            offset = float(np.linalg.norm(domain.offset)) / domain.radius
            report.extend(shifted_ball_reduced_check(config.n, offset, beta, tol))
    return report


def _random_exponent(config: ExperimentConfig, rng: np.random.Generator) -> ExponentConfig:
    """Weight drawn in [0, 1], capped so the configured alpha stays admissible."""
    if config.alpha is None:
        return critical_config(config.n, float(rng.uniform(0.0, 1.0)))
    beta_max = min(1.0, config.n * (1.0 - config.alpha / critical_alpha_for(config.n, 0.0)))
    return make_config(config.n, config.alpha, float(rng.uniform(0.0, max(beta_max, 0.0))))


def _random_domain(config: ExperimentConfig, rng: np.random.Generator, case: int,
                   configured: DomainSpec) -> DomainSpec:
    """
    Ball with a random singularity offset; planar grids are kept as configured.

    Case 0 is the centered ball, where the transplanted bound is an equality.
    """
    base = config.domain
    if base.kind not in ("centered_ball", "shifted_ball"):
        return configured
    if case == 0:
        return DomainSpec.centered_ball(config.n, base.radius)
    offset = float(rng.uniform(0.0, config.resolution.max_offset)) * base.radius
    return DomainSpec.shifted_ball(config.n, offset, base.radius)


def transplant_pipeline(config: ExperimentConfig) -> CheckReport:
    """
    Energy preservation, the transplanted functional bound and concentration.

    Every case draws a profile v, a singularity offset |x| and a weight beta;
    the energy and the bound are checked on the resulting domain.
    """
    domain = config.domain.to_domain(config.n)
    g = green_function(domain)
    c = config.exponent_config()
    rng = _rng(config)
    report = CheckReport("transplant")
    for case in range(config.resolution.transplant_cases):
        v = random_profile(config.n, rng)
        case_domain = _random_domain(config, rng, case, domain)
        case_c = _random_exponent(config, rng)
        case_g = g if case_domain is domain else green_function(case_domain)
        offset = 0.0 if case_domain.offset is None else float(np.linalg.norm(case_domain.offset))
        energy_tol = config.tolerance("transplant_energy" if case_g.is_closed_form else "transplant_grid")

        case_report = CheckReport("transplant_case")
        case_report.extend(transplant_energy_check(v, case_g, energy_tol))
        bound = transplant_bound_check(v, case_g, case_c, config.tolerance("theorem"))
        case_report.extend(bound)
        if case_domain.variant == GreenVariant.CENTERED_BALL:
            case_report.add_close("transplant_equality", f"beta={case_c.beta:.12g}", bound.notes["ratio"], 1.0,
                                  config.tolerance("theorem"))
        for row in case_report.rows:
            row.param = f"case={case},offset={offset:.12g},{row.param}"
        report.rows.extend(case_report.rows)

    sequence = [moser_profile(i, 1.0, config.n) for i in MOSER_INDICES]
    verdicts = transplant_concentration(sequence, g, CONCENTRATION_RADII, config.tolerance("concentration"))
    last = verdicts[-1]
    report.add_flag("transplant_concentration", "eps=1", max(last.energy_outside.values()),
                    last.concentrated, 0.0, config.tolerance("concentration"))
    if c.critical:
        res = config.resolution
        opts = MaximizerOptions(nodes=res.nodes, log_min=res.log_min, max_iter=res.max_iter,
                                restarts=res.restarts, seed=config.seed)
        report.extend(concentration_formula_report(g, c, opts))
    return report


def symmetrization_report(config: ExperimentConfig, beta: float) -> CheckReport:
    """Rearrangement inequalities on random small grids."""
    rng = _rng(config)
    report = CheckReport("symmetrization")
    for case in range(config.resolution.symmetrization_cases):
        u = GridFunction.random(rng)
        center = (np.asarray(u.values.shape) // 2) * u.h
        case_report = hl_ps_check(u, SYMMETRIZATION_THRESHOLDS, beta, center=center,
                                  tol=config.tolerance("symmetrization"))
        for row in case_report.rows:
            row.param = f"case={case},{row.param}"
        report.rows.extend(case_report.rows)
    return report


def domain2ball_pipeline(config: ExperimentConfig, out_dir: Optional[Path] = None) -> CheckReport:
    """
    Harmonic replacement and the radial rebuild of a concentrating sequence.

    The sequence is read from ``config.manifest`` when set, otherwise it is the
    Moser family sampled on the configured domain; the generated sequence is
    saved as a manifest next to the results.
    """
    c = config.exponent_config()
    if config.manifest:
        manifest = load_manifest(Path(config.manifest))
        g = green_function(manifest.domain)
        u_seq, s_seq, certificates = manifest.functions, manifest.levels, manifest.certificates
        domain = manifest.domain
    else:
        domain = config.domain.to_domain(config.n)
        g = green_function(domain)
        u_seq, s_seq = moser_sequence(g, config.indices, config.eps_list[0], config.resolution.sample_h)
        center = g.singularity if domain.variant == GreenVariant.PLANAR_GRID else None
        certificates = certificates_for(u_seq, s_seq, center)
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            save_manifest(Path(out_dir) / MANIFEST_NAME, domain, u_seq, s_seq, certificates)

    center = g.singularity if domain.variant == GreenVariant.PLANAR_GRID else None
    result = domain_to_ball_report(u_seq, s_seq, certificates, g, c,
                                   tol=config.tolerance("energy_transfer"),
                                   ratio_tol=config.tolerance("transplant_grid"),
                                   gap_tol=config.tolerance("concentration"), center=center)
    report = result.report

    for index, u in enumerate(u_seq):
        if isinstance(u, (GridFunction, RadialProfile)) and float(np.max(u.values)) > DEFAULT_REPLACEMENT_LEVEL:
            v = harmonic_replacement(u)
            replaced = replacement_report(u, v, DEFAULT_REPLACEMENT_LEVEL, config.tolerance("solver"))
            for row in replaced.rows:
                row.param = f"index={index},{row.param}"
            report.rows.extend(replaced.rows)

    report.extend(symmetrization_report(config, config.beta))
    return report


PIPELINES: Dict[str, Callable[[ExperimentConfig], CheckReport]] = {
    "radial-max": radial_max_pipeline,
    "moser": moser_pipeline,
    "green-verify": green_verify_pipeline,
    "iso-check": iso_check_pipeline,
    "transplant": transplant_pipeline,
}


def run(command: str, config: ExperimentConfig, out_dir: Optional[Path] = None) -> RunRecord:
    """
    Run one command and archive its record.

    Args:
        command: Command name.
        config: Experiment configuration.
        out_dir: Output directory; ``config.out`` when None.

    Returns:
        RunRecord: Rows, notes and verdict of the run.

    Raises:
        UsageError: If the command is unknown or is ``report``.
    """
    if command not in PIPELINES and command != "domain2ball":
        raise UsageError(f"Unknown command '{command}'")
    config = config.model_copy(update={"command": command})
    out_dir = Path(out_dir or config.out)

    started = utc_timestamp()
    logger.info(f"Running {command} (config {config.config_hash()[:12]})")
    if command == "domain2ball":
        report = domain2ball_pipeline(config, out_dir)
    else:
        report = PIPELINES[command](config)
    canonical = config.canonical_json()
    record = RunRecord(
        command=command,
        config_hash=config.config_hash(),
        input_digest=git_blob_digest(canonical),
        rows=report.rows,
        notes=report.notes,
        seed=config.seed,
        started=started,
        finished=utc_timestamp(),
    )
    write_record(record, out_dir)
    logger.info(f"{command} finished: {record.verdict} ({len(record.failing)} failing of {len(record.rows)})")
    return record


def gather(out_dir: Path) -> List[RunRecord]:
    """Records archived in an output directory."""
    records = load_records(out_dir)
    if not records:
        raise UsageError(f"No run records in {out_dir}")
    return records
