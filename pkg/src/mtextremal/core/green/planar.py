"""
Planar Green functions on masked grids.

The regular part H solves the discrete Laplace equation with boundary data
-(1/2 pi) log|y - x| on the nodes adjacent to the mask. Level sets are traced
by marching squares on q = e^(-2 pi G), which stays finite at the singularity.
"""

import math
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.linalg import spsolve

from ..checks import CheckReport
from .domains import DomainError, DomainSpec, GreenFunction, GreenVariant, PlanarField
from ...utils.logging_setup import get_logger

logger = get_logger(__name__)

PAD = 2
SOLVER_RESIDUAL = 1e-10

_NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1))

# Edge pairs per marching-squares case; corners a=(i,j), b=(i+1,j), c=(i+1,j+1), d=(i,j+1),
# edges 0=ab, 1=bc, 2=cd, 3=da. Saddles (5, 10) are resolved separately.
_CASE_EDGES = {
    1: ((3, 0),), 2: ((0, 1),), 3: ((3, 1),), 4: ((1, 2),), 6: ((0, 2),), 7: ((3, 2),),
    8: ((2, 3),), 9: ((0, 2),), 11: ((1, 2),), 12: ((1, 3),), 13: ((0, 1),), 14: ((3, 0),),
}
_SADDLE_EDGES = {
    (5, True): ((0, 1), (2, 3)), (5, False): ((3, 0), (1, 2)),
    (10, True): ((3, 0), (1, 2)), (10, False): ((0, 1), (2, 3)),
}


class TopologyError(Exception):
    """Raised when a planar mask is not connected."""
    pass


class PlacementError(Exception):
    """Raised when the singularity is not strictly inside a planar mask."""
    pass


def boundary_layer(mask: np.ndarray) -> np.ndarray:
    """Nodes outside the mask with a 4-neighbour inside it."""
    return ndimage.binary_dilation(mask) & ~mask


def solve_dirichlet(mask: np.ndarray, boundary: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Discrete harmonic extension of boundary data with the 5-point Laplacian.

    Args:
        mask: Unknown nodes; must not touch the array edge.
        boundary: Values on every node; those outside the mask are the Dirichlet data.

    Returns:
        Tuple[np.ndarray, float]: Field equal to the solution on the mask and to the data
        elsewhere, and the max-norm residual of the linear system.

    Raises:
        DomainError: If the mask touches the array edge.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any():
        raise DomainError("Mask must not touch the edge of the grid")

    index = -np.ones(mask.shape, dtype=int)
    count = int(mask.sum())
    index[mask] = np.arange(count)
    ii, jj = np.nonzero(mask)
    rows = [index[ii, jj]]
    cols = [index[ii, jj]]
    vals = [np.full(count, 4.0)]
    rhs = np.zeros(count)
    for di, dj in _NEIGHBOURS:
        ni, nj = ii + di, jj + dj
        inner = mask[ni, nj]
        rows.append(index[ii[inner], jj[inner]])
        cols.append(index[ni[inner], nj[inner]])
        vals.append(-np.ones(int(inner.sum())))
        np.add.at(rhs, index[ii[~inner], jj[~inner]], boundary[ni[~inner], nj[~inner]])

    matrix = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                               shape=(count, count))
    solution = spsolve(matrix.tocsc(), rhs)
    residual = float(np.max(np.abs(matrix @ solution - rhs))) if count else 0.0

    result = np.array(boundary, dtype=float, copy=True)
    result[mask] = solution
    logger.debug(f"Dirichlet solve on {count} nodes, residual {residual:.3e}")
    return result, residual


def _check_placement(mask: np.ndarray, origin: np.ndarray, h: float, point: np.ndarray) -> None:
    rel = (point - origin) / h
    i, j = int(math.floor(rel[0])), int(math.floor(rel[1]))
    on_node = np.allclose(rel, np.round(rel), atol=1e-12)
    if on_node:
        i, j = int(round(rel[0])), int(round(rel[1]))
        nodes = [(i, j)] + [(i + di, j + dj) for di, dj in _NEIGHBOURS]
    else:
        nodes = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
    for a, b in nodes:
        if not (0 <= a < mask.shape[0] and 0 <= b < mask.shape[1]) or not mask[a, b]:
            raise PlacementError(f"Singularity {point.tolist()} is not strictly inside the mask")


def planar_green_solve(domain: DomainSpec) -> GreenFunction:
    """
    Green function of a planar grid domain.

    Args:
        domain: Planar grid specification.

    Returns:
        GreenFunction: Discrete Green function with its incenter.

    Raises:
        TopologyError: If the mask is not connected.
        PlacementError: If the singularity is not strictly interior.
    """
    if domain.variant != GreenVariant.PLANAR_GRID:
        raise DomainError("planar_green_solve needs a planar grid domain")
    mask = np.pad(domain.mask, PAD)
    origin = domain.origin - PAD * domain.h
    _, components = ndimage.label(mask)
    if components != 1:
        raise TopologyError(f"Mask has {components} connected components")
    _check_placement(mask, origin, domain.h, domain.singularity)

    field = PlanarField(mask, domain.h, origin, domain.singularity,
                        np.zeros(mask.shape), np.zeros(mask.shape))
    x, y = field.coordinates()
    dist = np.hypot(x - domain.singularity[0], y - domain.singularity[1])
    with np.errstate(divide="ignore"):
        fundamental = -np.log(dist) / (2.0 * math.pi)
    data = np.where(mask, 0.0, fundamental)
    regular, residual = solve_dirichlet(mask, data)
    if residual > SOLVER_RESIDUAL:
        logger.warning(f"Planar Green solve residual {residual:.3e} above {SOLVER_RESIDUAL}")
    with np.errstate(invalid="ignore"):
        green = np.where(mask, fundamental - regular, 0.0)
    field.regular = regular
    field.green = green
    field.residual = residual

    h_at_x = float(field.interpolate(regular, domain.singularity[None, :])[0])
    incenter = math.exp(-2.0 * math.pi * h_at_x)
    logger.info(f"Planar Green function solved on {int(mask.sum())} nodes, incenter {incenter:.6g}")
    return GreenFunction(domain, incenter, field)


def _radius_field(field: PlanarField) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(-2.0 * math.pi * field.green)


def planar_level_segments(field: PlanarField, t: float) -> np.ndarray:
    """
    Marching-squares boundary of {G > t}.

    Args:
        field: Solved planar field.
        t: Level.

    Returns:
        np.ndarray: Segments of shape (m, 2, 2), each oriented with {G > t} on its left.
    """
    q = _radius_field(field)
    level = math.exp(-2.0 * math.pi * t)
    qa, qb, qc, qd = q[:-1, :-1], q[1:, :-1], q[1:, 1:], q[:-1, 1:]
    inside = [qa < level, qb < level, qc < level, qd < level]
    case = inside[0] * 1 + inside[1] * 2 + inside[2] * 4 + inside[3] * 8
    center_inside = (qa + qb + qc + qd) / 4.0 < level

    corners = {0: (0, 0), 1: (1, 0), 2: (1, 1), 3: (0, 1)}
    values = (qa, qb, qc, qd)
    edge_ends = {0: (0, 1), 1: (1, 2), 2: (2, 3), 3: (3, 0)}

    def crossing(ci, cj, edge):
        p, r = edge_ends[edge]
        vp = values[p][ci, cj]
        vr = values[r][ci, cj]
        frac = np.clip((level - vp) / np.where(vr == vp, 1.0, vr - vp), 0.0, 1.0)
        start = np.array(corners[p], dtype=float)
        end = np.array(corners[r], dtype=float)
        local = start[None, :] + frac[:, None] * (end - start)[None, :]
        return np.stack((ci + local[:, 0], cj + local[:, 1]), axis=-1)

    pieces = []
    for code, edges in _CASE_EDGES.items():
        ci, cj = np.nonzero(case == code)
        for e1, e2 in edges:
            pieces.append((ci, cj, crossing(ci, cj, e1), crossing(ci, cj, e2)))
    for (code, center), edges in _SADDLE_EDGES.items():
        ci, cj = np.nonzero((case == code) & (center_inside == center))
        for e1, e2 in edges:
            pieces.append((ci, cj, crossing(ci, cj, e1), crossing(ci, cj, e2)))

    pieces = [piece for piece in pieces if piece[0].size]
    if not pieces:
        return np.zeros((0, 2, 2))
    ci = np.concatenate([p[0] for p in pieces])
    cj = np.concatenate([p[1] for p in pieces])
    start = np.concatenate([p[2] for p in pieces])
    end = np.concatenate([p[3] for p in pieces])

    # orientation: q must decrease towards the left normal
    mid = 0.5 * (start + end)
    fx = mid[:, 0] - ci
    fy = mid[:, 1] - cj
    dqx = (1 - fy) * (qb[ci, cj] - qa[ci, cj]) + fy * (qc[ci, cj] - qd[ci, cj])
    dqy = (1 - fx) * (qd[ci, cj] - qa[ci, cj]) + fx * (qc[ci, cj] - qb[ci, cj])
    direction = end - start
    flip = (-direction[:, 1] * dqx + direction[:, 0] * dqy) > 0
    start[flip], end[flip] = end[flip].copy(), start[flip].copy()

    segments = np.stack((start, end), axis=1) * field.h + field.origin
    return segments


def planar_energy_below(g: GreenFunction, t: float) -> float:
    """Cell sum of |grad G|^2 h^2 over domain nodes with G < t."""
    field = g.field
    x, y = field.coordinates()
    rx, ry = x - field.singularity[0], y - field.singularity[1]
    hx, hy = np.gradient(field.regular, field.h)
    below = field.mask & (field.green < t)
    dist_sq = rx[below] ** 2 + ry[below] ** 2
    gx = -rx[below] / (2.0 * math.pi * dist_sq) - hx[below]
    gy = -ry[below] / (2.0 * math.pi * dist_sq) - hy[below]
    return float(np.sum(gx ** 2 + gy ** 2) * field.h ** 2)


def maximum_principle_check(values: np.ndarray, mask: np.ndarray, tol: float = 1e-8,
                            name: str = "maximum_principle") -> CheckReport:
    """
    Discrete harmonic fields attain their extrema on the boundary layer.

    Args:
        values: Field on all nodes.
        mask: Interior nodes.
        tol: Allowed overshoot.
        name: Report name.

    Returns:
        CheckReport: Rows for the maximum and the minimum.
    """
    report = CheckReport(name)
    layer = boundary_layer(mask)
    report.add_leq("interior_max", "max", float(values[mask].max()), float(values[layer].max()),
                   tol, relative=False)
    report.add_leq("interior_min", "min", -float(values[mask].min()), -float(values[layer].min()),
                   tol, relative=False)
    return report


def comparison_principle_check(mask: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                               tol: float = 1e-8) -> CheckReport:
    """
    Ordered boundary data give ordered discrete harmonic extensions.

    Args:
        mask: Interior nodes.
        lower: Boundary data, lower on the boundary layer.
        upper: Boundary data, upper on the boundary layer.
        tol: Allowed violation.

    Returns:
        CheckReport: Boundary ordering and interior ordering rows.
    """
    report = CheckReport("comparison_principle")
    layer = boundary_layer(mask)
    gap_boundary = float(np.min(upper[layer] - lower[layer]))
    low, _ = solve_dirichlet(mask, lower)
    high, _ = solve_dirichlet(mask, upper)
    gap_interior = float(np.min(high[mask] - low[mask]))
    report.add_flag("boundary_order", "min(upper-lower)", gap_boundary, gap_boundary >= 0.0, 0.0)
    report.add_leq("interior_order", "min(upper-lower)", -gap_interior, 0.0, tol, relative=False)
    return report


def harnack_ratio(g: GreenFunction, depth: int = 8) -> Optional[float]:
    """
    sup/inf of G over nodes at least ``depth`` cells from the boundary and the singularity.

    Returns:
        Optional[float]: The ratio, or None when no node qualifies.
    """
    field = g.field
    interior = ndimage.distance_transform_edt(field.mask) >= depth
    x, y = field.coordinates()
    far = np.hypot(x - field.singularity[0], y - field.singularity[1]) >= depth * field.h
    region = interior & far
    if not region.any():
        return None
    values = field.green[region]
    return float(values.max() / values.min())
