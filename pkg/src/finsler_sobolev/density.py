"""Constructive smoothing pipelines for Sobolev fields.

Two pipelines realize the density-of-smooth-functions arguments as
executable procedures:

* interior: truncate a field by a Lipschitz cutoff of the forward
  distance (phi_j = phi * f(d(x0, .) - j)), split it by a partition of
  unity over charts, mollify each piece in chart coordinates, and
  reassemble.  Rows record the order-1 Sobolev errors against the
  original field, the truncation tail bound, and a Leibniz-type
  gradient bound.

* boundary: on a half-ball D = {|x| <= R} cap {x1 <= 0}, translate the
  field inward by 1/m along the axis normal to the flat face, then
  mollify with radius 1/(4m) so the approximant is smooth up to the
  face.  Rows record the mollification-stage errors against the
  translated target (the quantity the half-ball argument drives to
  zero, second order in 1/m for smooth fields) together with the
  translation errors against the original field, which decay first
  order in 1/m.

Mollification is flat convolution in chart coordinates with the
unit-mass bump J_eps(x) = eps^-n J(x/eps), J(x) = c_n exp(-1/(1-|x|^2)).
"""

from dataclasses import dataclass
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy import integrate as _scipy_integrate
from scipy.interpolate import LinearNDInterpolator, RegularGridInterpolator
from scipy.ndimage import binary_dilation
from scipy.signal import fftconvolve
from scipy.spatial import Delaunay

from .distance import distance_field
from .domains import (
    BoxRegion,
    CapRegion,
    christoffels_of_k,
    make_field,
    osculating_field,
    partition_of_unity,
    sphere_chart_coords,
)
from .sobolev import gradient_magnitude, hessian_magnitude, lp_norm

# the truncation profile has |slope| <= 1 everywhere it is differentiable
CUTOFF_LIPSCHITZ = 1.0
# discrete gradients near cutoff kinks and the K-norm/dual-norm gap can
# overshoot the continuum Leibniz estimate by a few percent
LEIBNIZ_SLACK = 0.05


def cutoff(t):
    """Piecewise-linear profile: 1 for t <= 0, 1 - t on (0, 1), 0 for t >= 1."""
    return np.clip(1.0 - np.asarray(t, dtype=float), 0.0, 1.0)


def truncate(phi, dist, j):
    """phi_j = phi * cutoff(d(x0, .) - j); support confined to {d < j + 1}."""
    if phi.domain is not dist.domain:
        raise ValueError("field and distance field live on different domains")
    factor = cutoff(dist.values - j)
    values = phi.values * factor
    mask = phi.support_mask & (factor > 0.0)
    return make_field(phi.domain, np.where(mask, values, 0.0), mask)


@lru_cache(maxsize=None)
def _bump_normalizer(n):
    """c_n with integral of c_n exp(-1/(1-|x|^2)) over the unit n-ball = 1."""
    surface = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[n]
    radial, _ = _scipy_integrate.quad(
        lambda r: r ** (n - 1) * math.exp(-1.0 / (1.0 - r * r)),
        0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200,
    )
    return 1.0 / (surface * radial)


def mollifier_kernel(x, eps):
    """J_eps(x) = eps^-n c_n exp(-1/(1 - |x/eps|^2)), zero for |x| >= eps."""
    if eps <= 0.0:
        raise ValueError("mollifier radius must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim == 1:
        x = x[None, :]
        squeeze = True
    else:
        squeeze = False
    n = x.shape[-1]
    c = _bump_normalizer(n)
    s2 = ((x / eps) ** 2).sum(axis=-1)
    out = np.zeros(s2.shape)
    inside = s2 < 1.0
    out[inside] = eps ** (-n) * c * np.exp(-1.0 / (1.0 - s2[inside]))
    return float(out[0]) if squeeze else out


def _grid_kernel(domain, eps):
    """Sampled mollifier on grid offsets, normalized to unit discrete mass."""
    h = domain.spacing
    radii = [int(math.ceil(eps / hk)) for hk in h]
    axes = [np.arange(-r, r + 1) * hk for r, hk in zip(radii, h)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    vals = mollifier_kernel(pts, eps).reshape(grids[0].shape)
    cell = float(np.prod(h))
    vals *= cell
    mass = vals.sum()
    if mass <= 0.0:
        raise ValueError("mollifier kernel has no support on this grid")
    return vals / mass


def mollify(u, eps):
    """Discrete convolution J_eps * u on a box grid, zero-extended.

    Requires eps >= 2 grid spacings so the kernel is resolved; the
    sampled kernel is renormalized to unit mass, which preserves
    constants and the L^p contraction exactly.  Support grows by at
    most eps.
    """
    dom = u.domain
    if dom.kind != "box":
        raise ValueError("mollify operates on box-chart fields")
    if eps < 2.0 * float(np.max(dom.spacing)):
        raise ValueError(
            f"mollification radius {eps:.4g} under-resolved: need at least two "
            f"grid spacings ({2.0 * float(np.max(dom.spacing)):.4g})"
        )
    kernel = _grid_kernel(dom, eps)
    grid = u.grid()
    smooth = fftconvolve(grid, kernel, mode="same")
    support = binary_dilation(
        u.support_mask.reshape(dom.shape), structure=kernel > 0.0
    )
    smooth = np.where(support, smooth, 0.0)
    return make_field(dom, smooth.ravel(), support.ravel())


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApproximationRow:
    """One stage of a smoothing pipeline.

    lp/grad/hk errors are the pipeline's primary errors: against the
    original field for the interior pipeline, against the translated
    target for the boundary pipeline (whose translation errors against
    the original field are recorded in shift_lp/shift_hk).
    """

    stage: float
    epsilon: float
    lp_error: float
    grad_error: float
    hk_error: float
    support_radius: float
    tail_lhs: float | None = None
    tail_rhs: float | None = None
    tail_ok: bool | None = None
    leibniz_lhs: float | None = None
    leibniz_rhs: float | None = None
    leibniz_ok: bool | None = None
    shift_lp_error: float | None = None
    shift_hk_error: float | None = None
    total_lp_error: float | None = None
    total_hk_error: float | None = None
    interior_support: bool | None = None
    epsilon_clamped: bool = False


@dataclass(frozen=True)
class ApproximationReport:
    pipeline: str
    p: float
    k: int
    rows: tuple
    verdict: bool
    tolerance: float
    unsupported_by_theorem: bool = False
    truncated_sequence: bool = False

    def hk_errors(self):
        return [r.hk_error for r in self.rows]


def _strictly_decreasing(seq):
    return all(b < a for a, b in zip(seq, seq[1:]))


def _decreasing_until_below(seq, tol):
    ok = True
    for a, b in zip(seq, seq[1:]):
        if b >= a and a >= tol:
            ok = False
    return ok and seq[-1] < tol


# ---------------------------------------------------------------------------
# Interior pipeline
# ---------------------------------------------------------------------------


def _default_charts(domain):
    if domain.kind == "box":
        lo, hi = domain.lower, domain.upper
        width = hi - lo
        split = lo[0] + 0.5 * width[0]
        pad = 0.1 * width
        a_hi = hi + pad
        a_hi[0] = split + 0.25 * width[0]
        b_lo = lo - pad
        b_lo[0] = split - 0.25 * width[0]
        return [BoxRegion(lo - pad, a_hi), BoxRegion(b_lo, hi + pad)]
    centers = np.vstack([np.eye(3), -np.eye(3)])
    return [CapRegion(c, 1.25) for c in centers]


def _support_edge_distance(domain, mask):
    """Distance from a support mask to the chart/domain edge."""
    if not np.any(mask):
        return math.inf
    coords = domain.node_coords()[mask]
    if domain.kind == "box":
        lo = (coords - domain.lower).min()
        hi = (domain.upper - coords).min()
        return float(min(lo, hi))
    return math.inf  # closed surface: no edge


def _cap_margin(domain, chart, mask):
    if not np.any(mask):
        return chart.radius
    c = np.asarray(chart.center, dtype=float)
    c = c / np.linalg.norm(c)
    ang = np.arccos(np.clip(domain.node_coords()[mask] @ c, -1.0, 1.0))
    return float(chart.radius - ang.max())


class _CapChartGrid:
    """Regular grid in a cap's tangent chart with mesh <-> grid transfer."""

    def __init__(self, domain, chart):
        self.domain = domain
        self.chart = chart
        c = np.asarray(chart.center, dtype=float)
        self.center_vertex = domain.nearest_node(c)
        edges = np.linalg.norm(
            domain.vertices[domain.triangles[:, 0]]
            - domain.vertices[domain.triangles[:, 1]],
            axis=1,
        )
        self.h = 0.5 * float(np.median(edges))
        ang = np.arccos(np.clip(domain.vertices @ (c / np.linalg.norm(c)), -1.0, 1.0))
        self.inside = ang < chart.radius
        self.near = ang < chart.radius + 4.0 * self.h
        self.uv_near = sphere_chart_coords(domain, self.center_vertex,
                                           domain.vertices[self.near])
        self.uv_inside = sphere_chart_coords(domain, self.center_vertex,
                                             domain.vertices[self.inside])
        half = chart.radius + 2.0 * self.h
        m = 2 * int(math.ceil(half / self.h)) + 1
        self.axis = np.linspace(-half, half, m)
        self.spacing = np.array([self.axis[1] - self.axis[0]] * 2)
        self.tri = Delaunay(self.uv_near)
        gu, gv = np.meshgrid(self.axis, self.axis, indexing="ij")
        self.grid_pts = np.column_stack([gu.ravel(), gv.ravel()])

    def to_grid(self, values):
        interp = LinearNDInterpolator(self.tri, values[self.near], fill_value=0.0)
        return interp(self.grid_pts).reshape(len(self.axis), len(self.axis))

    def to_mesh(self, grid_values):
        interp = RegularGridInterpolator(
            (self.axis, self.axis), grid_values, bounds_error=False, fill_value=0.0
        )
        out = np.zeros(self.domain.node_count)
        out[self.inside] = interp(self.uv_inside)
        return out

    def mollify_grid(self, grid_values, eps):
        h = self.spacing[0]
        radius = int(math.ceil(eps / h))
        offs = np.arange(-radius, radius + 1) * h
        ku, kv = np.meshgrid(offs, offs, indexing="ij")
        pts = np.column_stack([ku.ravel(), kv.ravel()])
        kern = mollifier_kernel(pts, eps).reshape(ku.shape) * h * h
        kern /= kern.sum()
        return fftconvolve(grid_values, kern, mode="same")


def approximate_interior(phi, metric, domain, x0, j_sequence, epsilon_sequence,
                         p=2.0, k=1, charts=None, osc=None, dist=None,
                         tolerance=1e-2):
    """Truncate-partition-mollify pipeline; rows report order-k errors.

    Non-reversible metrics are allowed for exploration but flagged: the
    induced distance is asymmetric and no density guarantee applies.
    """
    if len(j_sequence) != len(epsilon_sequence):
        raise ValueError("j and epsilon sequences must have equal length")
    if k != 1:
        raise ValueError("the interior pipeline reports order-1 errors")
    unsupported = not metric.reversible
    if unsupported:
        warnings.warn("metric is not reversible; no density guarantee applies",
                      stacklevel=2)
    if osc is None:
        osc = osculating_field(metric, domain)
    if dist is None:
        dist = distance_field(metric, domain, x0)
    if charts is None:
        charts = _default_charts(domain)
    pou = partition_of_unity(domain, charts)

    grad_phi_max = float(np.max(gradient_magnitude(phi, osc).values))
    phi_max = float(np.max(np.abs(phi.values)))

    cap_grids = None
    if domain.kind == "icosphere":
        cap_grids = [_CapChartGrid(domain, ch) for ch in charts]

    rows = []
    for j, eps_req in zip(j_sequence, epsilon_sequence):
        phi_j = truncate(phi, dist, j)

        # pair the mollification radius with the room the support leaves
        if domain.kind == "box":
            edge = _support_edge_distance(domain, phi_j.support_mask)
            eps = min(float(eps_req), edge / 2.0)
            min_eps = 2.0 * float(np.max(domain.spacing))
        else:
            margins = []
            for alpha, ch in zip(pou.weights, charts):
                piece_mask = phi_j.support_mask & (alpha.values > 0.0)
                margins.append(_cap_margin(domain, ch, piece_mask))
            eps = min(float(eps_req), min(margins) / 2.0)
            min_eps = 2.0 * max(g.spacing[0] for g in cap_grids)
        clamped = False
        if eps < min_eps:
            eps = min_eps
            clamped = True

        if domain.kind == "box":
            acc = np.zeros(domain.node_count)
            acc_mask = np.zeros(domain.node_count, dtype=bool)
            for alpha in pou.weights:
                piece = make_field(domain, alpha.values * phi_j.values,
                                   alpha.support_mask & phi_j.support_mask)
                smooth = mollify(piece, eps)
                acc += smooth.values
                acc_mask |= smooth.support_mask
            approx = make_field(domain, np.where(acc_mask, acc, 0.0), acc_mask)
        else:
            acc = np.zeros(domain.node_count)
            for alpha, grid in zip(pou.weights, cap_grids):
                piece_vals = alpha.values * phi_j.values
                if not np.any(piece_vals):
                    continue
                g = grid.to_grid(piece_vals)
                g = grid.mollify_grid(g, eps)
                acc += grid.to_mesh(g)
            approx = make_field(domain, acc, np.ones(domain.node_count, dtype=bool))

        diff = make_field(domain, approx.values - phi.values,
                          np.ones(domain.node_count, dtype=bool))
        lp_err = lp_norm(diff, osc, p)
        grad_err = lp_norm(gradient_magnitude(diff, osc), osc, p)
        hk_err = lp_err + grad_err

        tail_lhs = lp_norm(make_field(domain, phi_j.values - phi.values,
                                      np.ones(domain.node_count, dtype=bool)), osc, p)
        outside = dist.values >= j
        tail_rhs = 2.0 * lp_norm(
            make_field(domain, np.where(outside, phi.values, 0.0),
                       np.ones(domain.node_count, dtype=bool)), osc, p)
        tail_ok = tail_lhs <= tail_rhs * (1.0 + 1e-8)

        leib_lhs = float(np.max(gradient_magnitude(phi_j, osc).values))
        leib_rhs = grad_phi_max + phi_max * CUTOFF_LIPSCHITZ
        leib_ok = leib_lhs <= leib_rhs * (1.0 + LEIBNIZ_SLACK)

        supported = approx.support_mask
        interior = not bool(np.any(supported & domain.boundary_mask))
        sup_rad = float(np.max(dist.values[supported])) if np.any(supported) else 0.0

        rows.append(ApproximationRow(
            stage=float(j), epsilon=float(eps), lp_error=lp_err,
            grad_error=grad_err, hk_error=hk_err, support_radius=sup_rad,
            tail_lhs=tail_lhs, tail_rhs=tail_rhs, tail_ok=tail_ok,
            leibniz_lhs=leib_lhs, leibniz_rhs=leib_rhs, leibniz_ok=leib_ok,
            interior_support=interior, epsilon_clamped=clamped,
        ))

    errors = [r.hk_error for r in rows]
    verdict = _strictly_decreasing(errors) and errors[-1] < tolerance
    return ApproximationReport(
        pipeline="interior", p=float(p), k=1, rows=tuple(rows), verdict=verdict,
        tolerance=float(tolerance), unsupported_by_theorem=unsupported,
    )


# ---------------------------------------------------------------------------
# Boundary pipeline
# ---------------------------------------------------------------------------


def _shift_axis0(grid, cells_float):
    """Sample grid at index (i - cells_float) along axis 0, edge-filled."""
    m = grid.shape[0]
    pos = np.arange(m) - cells_float
    lo = np.clip(np.floor(pos).astype(int), 0, m - 1)
    hi = np.clip(lo + 1, 0, m - 1)
    frac = np.clip(pos - np.floor(pos), 0.0, 1.0)
    frac[pos <= 0] = 0.0
    frac[pos >= m - 1] = 0.0
    return (1.0 - frac)[:, None] * grid[lo] + frac[:, None] * grid[hi]


def half_ball_mask(domain, radius=1.0, face=0.0):
    """Nodes of the half-ball {|x| <= radius} cap {x1 <= face}."""
    coords = domain.node_coords()
    return (np.linalg.norm(coords, axis=1) <= radius) & (coords[:, 0] <= face + 1e-12)


def _masked_lp(values, mask, osc, p):
    w = osc.domain.quadrature_weights()
    return float(np.sum((np.abs(values) ** p) * osc.sigma * w * mask)) ** (1.0 / p)


def _masked_hk_terms(diff_field, mask, osc, k, p):
    terms = [_masked_lp(diff_field.values, mask, osc, p)]
    if k >= 1:
        terms.append(_masked_lp(gradient_magnitude(diff_field, osc).values,
                                mask, osc, p))
    if k >= 2:
        terms.append(_masked_lp(hessian_magnitude(diff_field, osc).values,
                                mask, osc, p))
    return terms


def approximate_boundary(phi, m_sequence, p=2.0, k=1, radius=1.0, osc=None,
                         tolerance=1e-2):
    """Translate-and-mollify pipeline on a half-ball.

    phi lives on a box grid covering the half-ball D = {|x| <= radius,
    x1 <= 0} with extra room on the left (the field's own values extend
    it past D, so translated samples stay defined).  For each m the
    target u_m(x) = phi(x1 - 1/m, x') is mollified with eps = 1/(4m);
    stage errors (approximant vs u_m, the convergence the half-ball
    argument controls) and translation errors (u_m vs phi, first order
    in 1/m) are reported over D.
    """
    dom = phi.domain
    if dom.kind != "box":
        raise ValueError("the boundary pipeline runs on box grids")
    if dom.dimension != 2:
        raise ValueError("the boundary pipeline is two-dimensional")
    if dom.upper[0] < -1e-12:
        raise ValueError("the grid must reach the flat face x1 = 0")
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    need_left = radius + 1.0 / float(min(m_sequence)) + 0.5
    if dom.lower[0] > -need_left + 0.25:
        warnings.warn("little room left of the half-ball; translated samples "
                      "will be edge-filled", stacklevel=2)
    if osc is None:
        from .metrics import EuclideanMetric

        metric = EuclideanMetric(2)
        osc = osculating_field(metric, dom)
    if k >= 2 and osc.christoffels is None:
        osc = christoffels_of_k(osc, dom)

    mask = half_ball_mask(dom, radius=radius)
    h1 = float(dom.spacing[0])
    ones = np.ones(dom.node_count, dtype=bool)

    rows = []
    truncated = False
    for m in m_sequence:
        shift = 1.0 / float(m)
        if shift < 2.0 * h1:
            truncated = True
            break
        eps = shift / 4.0
        clamped = False
        if eps < 2.0 * float(np.max(dom.spacing)):
            eps = 2.0 * float(np.max(dom.spacing))
            clamped = True
        target_grid = _shift_axis0(phi.grid(), shift / h1)
        target = make_field(dom, target_grid.ravel(), ones)
        approx = mollify(make_field(dom, target.values, ones), eps)

        stage_diff = make_field(dom, approx.values - target.values, ones)
        stage_terms = _masked_hk_terms(stage_diff, mask, osc, k, p)
        shift_diff = make_field(dom, target.values - phi.values, ones)
        shift_terms = _masked_hk_terms(shift_diff, mask, osc, k, p)
        total_diff = make_field(dom, approx.values - phi.values, ones)
        total_terms = _masked_hk_terms(total_diff, mask, osc, k, p)

        coords = dom.node_coords()[approx.support_mask]
        sup_rad = float(np.max(np.linalg.norm(coords, axis=1))) if len(coords) else 0.0

        rows.append(ApproximationRow(
            stage=float(m), epsilon=float(eps),
            lp_error=stage_terms[0],
            grad_error=stage_terms[1] if k >= 1 else 0.0,
            hk_error=float(sum(stage_terms)),
            support_radius=sup_rad,
            shift_lp_error=shift_terms[0],
            shift_hk_error=float(sum(shift_terms)),
            total_lp_error=total_terms[0],
            total_hk_error=float(sum(total_terms)),
            epsilon_clamped=clamped,
        ))

    if not rows:
        raise ValueError("every m in the sequence is too large for the grid")
    errors = [r.hk_error for r in rows]
    verdict = _decreasing_until_below(errors, tolerance)
    return ApproximationReport(
        pipeline="boundary", p=float(p), k=int(k), rows=tuple(rows),
        verdict=verdict, tolerance=float(tolerance),
        truncated_sequence=truncated,
    )
