"""L^p and Sobolev norms weighted by the Busemann volume.

Derivative magnitudes are taken with respect to the osculating metric:

    |grad phi|^2  = K^{ij} d_i phi d_j phi
    |Hess phi|^2  = K^{ia} K^{jb} H_ij H_ab,
    H_ij = d_i d_j phi - Gamma^k_ij d_k phi

and the order-k norm is the sum over derivative orders l <= k of
|| |D^l phi| ||_{L^p(dv_F)}.  The p-power combination
(sum_l term^p)^{1/p} is returned alongside for the equivalence check;
derivative orders above two are out of scope.

Box grids use second-order finite differences (one-sided at faces);
icospheres use per-triangle linear gradients averaged to vertices, and
per-vertex chart least-squares quadratic fits for Hessians.
"""

from dataclasses import dataclass

import numpy as np

from .domains import (
    grid_gradient,
    grid_hessian,
    integrate,
    make_field,
    sphere_chart_coords,
)

MAX_ORDER = 2


@dataclass(frozen=True)
class SobolevReport:
    """Per-order derivative norms and their two total combinations."""

    p: float
    k: int
    terms: tuple
    total: float
    total_variant: float


def lp_norm(field_obj, osc, p):
    """(integral of |field|^p against dv_F)^(1/p)."""
    if p < 1:
        raise ValueError("p must be at least 1")
    power = make_field(
        field_obj.domain,
        np.abs(field_obj.values) ** p,
        support_mask=np.ones(field_obj.domain.node_count, dtype=bool),
    )
    return float(integrate(power, osc)) ** (1.0 / p)


def gradient_vectors(field_obj, osc=None):
    """Per-node coordinate gradient (box) or frame gradient (icosphere)."""
    dom = field_obj.domain
    if dom.kind == "box":
        grads = grid_gradient(dom, field_obj.grid())
        return grads.reshape(dom.node_count, dom.dimension)
    if dom.kind == "icosphere":
        return _sphere_vertex_gradients(dom, field_obj.values)
    raise ValueError(f"unsupported domain kind {dom.kind!r}")


def gradient_magnitude(field_obj, osc):
    """Per-node sqrt(K^{ij} d_i phi d_j phi) as a ScalarField."""
    grads = gradient_vectors(field_obj)
    sq = np.einsum("ni,nij,nj->n", grads, osc.k_upper, grads)
    vals = np.sqrt(np.maximum(sq, 0.0))
    return make_field(field_obj.domain, vals,
                      support_mask=np.ones(field_obj.domain.node_count, dtype=bool))


def covariant_hessians(field_obj, osc):
    """Per-node covariant Hessian H_ij = d_i d_j phi - Gamma^k_ij d_k phi."""
    if osc.christoffels is None:
        raise ValueError("missing Christoffel symbols; call christoffels_of_k first")
    dom = field_obj.domain
    if dom.kind == "box":
        n = dom.dimension
        hess = grid_hessian(dom, field_obj.grid()).reshape(dom.node_count, n, n)
        grads = gradient_vectors(field_obj)
    elif dom.kind == "icosphere":
        hess, grads = _sphere_vertex_hessians(dom, field_obj.values)
    else:
        raise ValueError(f"unsupported domain kind {dom.kind!r}")
    correction = np.einsum("nkij,nk->nij", osc.christoffels, grads)
    return hess - correction


def hessian_magnitude(field_obj, osc):
    """Per-node sqrt(K^{ia} K^{jb} H_ij H_ab) as a ScalarField."""
    h = covariant_hessians(field_obj, osc)
    sq = np.einsum("nia,njb,nij,nab->n", osc.k_upper, osc.k_upper, h, h)
    vals = np.sqrt(np.maximum(sq, 0.0))
    return make_field(field_obj.domain, vals,
                      support_mask=np.ones(field_obj.domain.node_count, dtype=bool))


def hkp_norm(field_obj, osc, k, p):
    """Sobolev report with per-order terms for k in {0, 1, 2}."""
    if k > MAX_ORDER:
        raise ValueError(f"derivative order {k} unsupported (max {MAX_ORDER})")
    if k < 0:
        raise ValueError("k must be nonnegative")
    if p < 1:
        raise ValueError("p must be at least 1")
    terms = [lp_norm(field_obj, osc, p)]
    if k >= 1:
        terms.append(lp_norm(gradient_magnitude(field_obj, osc), osc, p))
    if k >= 2:
        terms.append(lp_norm(hessian_magnitude(field_obj, osc), osc, p))
    total = float(sum(terms))
    total_variant = float(sum(t**p for t in terms)) ** (1.0 / p)
    return SobolevReport(p=float(p), k=int(k), terms=tuple(terms),
                         total=total, total_variant=total_variant)


# ---------------------------------------------------------------------------
# Icosphere derivative stencils
# ---------------------------------------------------------------------------


def _sphere_vertex_gradients(dom, values):
    """Frame components of per-triangle linear gradients averaged to vertices.

    The constant ambient gradient of the linear interpolant on triangle
    (p1, p2, p3) is (1/2A) sum_i f_i (n x e_i), e_i the edge opposite
    vertex i.  Vertex gradients are area-weighted one-ring averages
    projected to the vertex tangent plane.
    """
    tris = dom.triangles
    v = dom.vertices
    f = values
    p1, p2, p3 = v[tris[:, 0]], v[tris[:, 1]], v[tris[:, 2]]
    normal = np.cross(p2 - p1, p3 - p1)
    double_area = np.linalg.norm(normal, axis=1)
    unit_n = normal / double_area[:, None]
    grad = (
        f[tris[:, 0], None] * np.cross(unit_n, p3 - p2)
        + f[tris[:, 1], None] * np.cross(unit_n, p1 - p3)
        + f[tris[:, 2], None] * np.cross(unit_n, p2 - p1)
    ) / double_area[:, None]

    acc = np.zeros((dom.node_count, 3))
    wsum = np.zeros(dom.node_count)
    area = dom.triangle_areas
    for kcol in range(3):
        np.add.at(acc, tris[:, kcol], grad * area[:, None])
        np.add.at(wsum, tris[:, kcol], area)
    acc /= wsum[:, None]
    # project to tangent planes and express in frames
    radial = np.einsum("vi,vi->v", acc, v)
    acc -= radial[:, None] * v
    return np.column_stack([
        np.einsum("vi,vi->v", acc, dom.frame_e1),
        np.einsum("vi,vi->v", acc, dom.frame_e2),
    ])


def _sphere_vertex_hessians(dom, values):
    """Chart Hessians by weighted quadratic fits over two-ring stencils."""
    count = dom.node_count
    hess = np.empty((count, 2, 2))
    grads = np.empty((count, 2))
    for vtx in range(count):
        ring = dom.two_ring(vtx)
        pts = dom.vertices[ring]
        uv = sphere_chart_coords(dom, vtx, pts)
        du, dv = uv[:, 0], uv[:, 1]
        a_mat = np.column_stack([
            np.ones(len(ring)), du, dv,
            0.5 * du * du, du * dv, 0.5 * dv * dv,
        ])
        rhs = values[ring] - values[vtx]
        # constant term pinned by subtracting the center value
        coef, *_ = np.linalg.lstsq(a_mat[:, 1:], rhs, rcond=None)
        grads[vtx] = coef[:2]
        hess[vtx] = np.array([[coef[2], coef[3]], [coef[3], coef[4]]])
    return hess, grads
