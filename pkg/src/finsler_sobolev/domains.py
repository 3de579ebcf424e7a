"""Discrete domains, per-node fields, partitions of unity, and volume data.

Two domain kinds: uniform box grids in chart coordinates, and
triangulated unit spheres with per-vertex orthonormal tangent frames.
Fields are immutable per-node value arrays; derived volume data
(Busemann density sigma_F, osculating matrices K and their inverses,
finite-difference Christoffel symbols of K) is computed per node and
cached on an OsculatingField.
"""

from dataclasses import dataclass, field, replace
import io
import math

import numpy as np

from . import indicatrix
from .metrics import EuclideanMetric, RiemannianMetric

FRAME_ORTHO_TOL = 1e-12


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoxChart:
    """Uniform grid on a coordinate box; nodes flattened in C order."""

    lower: np.ndarray
    upper: np.ndarray
    shape: tuple
    spacing: np.ndarray
    axes: tuple
    boundary_mask: np.ndarray
    kind: str = "box"

    @property
    def dimension(self):
        return len(self.shape)

    @property
    def node_count(self):
        return int(np.prod(self.shape))

    def node_coords(self):
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def node_index(self, multi_index):
        return int(np.ravel_multi_index(multi_index, self.shape))

    def nearest_node(self, point):
        point = np.asarray(point, dtype=float)
        idx = tuple(
            int(round(c)) for c in np.clip(
                (point - self.lower) / self.spacing,
                0, np.asarray(self.shape) - 1,
            )
        )
        return self.node_index(idx)

    def quadrature_weights(self):
        """Trapezoid product weights: cell measure per node."""
        w = 1.0
        for m, h in zip(self.shape, self.spacing):
            axis_w = np.full(m, h)
            axis_w[0] *= 0.5
            axis_w[-1] *= 0.5
            w = np.multiply.outer(w, axis_w)
        return np.asarray(w).ravel()


@dataclass(frozen=True)
class IcoSphere:
    """Subdivided icosahedron projected to the unit sphere.

    Carries consistently outward-oriented triangles, per-vertex
    orthonormal tangent frames (e1, e2, built by Gram-Schmidt against
    the position normal), lumped vertex quadrature weights (one third of
    incident triangle area) and one/two-ring adjacency.
    """

    level: int
    vertices: np.ndarray
    triangles: np.ndarray
    frame_e1: np.ndarray
    frame_e2: np.ndarray
    triangle_areas: np.ndarray
    vertex_weights: np.ndarray
    one_ring: tuple
    boundary_mask: np.ndarray
    kind: str = "icosphere"

    @property
    def dimension(self):
        return 2

    @property
    def node_count(self):
        return len(self.vertices)

    def node_coords(self):
        return self.vertices

    def nearest_node(self, point):
        p = np.asarray(point, dtype=float)
        p = p / np.linalg.norm(p)
        return int(np.argmax(self.vertices @ p))

    def quadrature_weights(self):
        return self.vertex_weights

    def two_ring(self, v):
        ring = set(self.one_ring[v])
        for u in self.one_ring[v]:
            ring.update(self.one_ring[u])
        ring.discard(v)
        return sorted(ring)

    def to_frame(self, v, ambient):
        """Project an ambient 3-vector into vertex v's tangent frame."""
        return np.array([ambient @ self.frame_e1[v], ambient @ self.frame_e2[v]])

    def from_frame(self, v, coeffs):
        return coeffs[0] * self.frame_e1[v] + coeffs[1] * self.frame_e2[v]


def build_box_chart(lower, upper, nodes):
    """Uniform grid; boundary mask true on all faces."""
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    shape = tuple(int(m) for m in np.atleast_1d(nodes))
    if not (len(lower) == len(upper) == len(shape)):
        raise ValueError("lower, upper, and nodes must agree in dimension")
    if np.any(upper <= lower):
        raise ValueError("degenerate box: upper must exceed lower componentwise")
    if any(m < 3 for m in shape):
        raise ValueError("need at least 3 nodes per axis")
    axes = tuple(np.linspace(lo, hi, m) for lo, hi, m in zip(lower, upper, shape))
    spacing = np.array([(hi - lo) / (m - 1) for lo, hi, m in zip(lower, upper, shape)])
    boundary = np.zeros(shape, dtype=bool)
    for axis in range(len(shape)):
        sl = [slice(None)] * len(shape)
        sl[axis] = 0
        boundary[tuple(sl)] = True
        sl[axis] = -1
        boundary[tuple(sl)] = True
    return BoxChart(
        lower=lower,
        upper=upper,
        shape=shape,
        spacing=spacing,
        axes=axes,
        boundary_mask=boundary.ravel(),
    )


_ICO_T = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
        [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
        [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
    ],
    dtype=float,
)
_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=int,
)


def build_icosphere(subdivision):
    """Icosphere with 10 * 4^level + 2 vertices on the unit sphere."""
    if not 0 <= subdivision <= 7:
        raise ValueError("subdivision level must lie in [0, 7]")
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdivision):
        midpoint = {}
        new_faces = []

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in midpoint:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    vertices = np.array(verts)
    triangles = np.array(faces, dtype=int)

    # enforce outward orientation
    centroids = vertices[triangles].mean(axis=1)
    normals = np.cross(
        vertices[triangles[:, 1]] - vertices[triangles[:, 0]],
        vertices[triangles[:, 2]] - vertices[triangles[:, 0]],
    )
    flip = np.einsum("ti,ti->t", normals, centroids) < 0.0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    cross = np.cross(
        vertices[triangles[:, 1]] - vertices[triangles[:, 0]],
        vertices[triangles[:, 2]] - vertices[triangles[:, 0]],
    )
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    weights = np.zeros(len(vertices))
    for k in range(3):
        np.add.at(weights, triangles[:, k], areas / 3.0)

    helper = np.tile(np.array([0.0, 0.0, 1.0]), (len(vertices), 1))
    near_pole = np.abs(vertices[:, 2]) > 0.9
    helper[near_pole] = np.array([1.0, 0.0, 0.0])
    e1 = helper - (np.einsum("vi,vi->v", helper, vertices))[:, None] * vertices
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(vertices, e1)

    ring = [set() for _ in range(len(vertices))]
    for a, b, c in triangles:
        ring[a].update((b, c))
        ring[b].update((a, c))
        ring[c].update((a, b))
    one_ring = tuple(tuple(sorted(r)) for r in ring)

    return IcoSphere(
        level=subdivision,
        vertices=vertices,
        triangles=triangles,
        frame_e1=e1,
        frame_e2=e2,
        triangle_areas=areas,
        vertex_weights=weights,
        one_ring=one_ring,
        boundary_mask=np.zeros(len(vertices), dtype=bool),
    )


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarField:
    """Per-node real values with a support mask (mask False => value 0)."""

    domain: object
    values: np.ndarray
    support_mask: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.domain.node_count:
            raise ValueError("field length does not match domain node count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        if np.any(self.values[~self.support_mask] != 0.0):
            raise ValueError("values must vanish outside the support mask")

    def grid(self):
        """Values reshaped to the box grid (box domains only)."""
        return self.values.reshape(self.domain.shape)


def make_field(domain, values, support_mask=None):
    values = np.asarray(values, dtype=float).ravel()
    if support_mask is None:
        support_mask = values != 0.0
    else:
        support_mask = np.asarray(support_mask, dtype=bool).ravel()
        values = np.where(support_mask, values, 0.0)
    return ScalarField(domain=domain, values=values, support_mask=support_mask)


def field_from_function(domain, fn):
    coords = domain.node_coords()
    values = np.asarray([fn(c) for c in coords], dtype=float)
    return make_field(domain, values)


# ---------------------------------------------------------------------------
# Partition of unity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoxRegion:
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class CapRegion:
    """Geodesic cap on the unit sphere: center direction and radius (rad)."""

    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class PartitionOfUnity:
    charts: tuple
    weights: tuple  # ScalarField per chart; sums to one at every node


class CoverageError(ValueError):
    def __init__(self, node_indices):
        self.node_indices = list(node_indices)
        preview = ", ".join(str(i) for i in self.node_indices[:8])
        suffix = "..." if len(self.node_indices) > 8 else ""
        super().__init__(
            f"{len(self.node_indices)} nodes are covered by no chart: [{preview}{suffix}]"
        )


def _bump(t):
    """exp(-1/(1-t^2)) on |t| < 1, zero outside; smooth and compactly supported."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def chart_bump(domain, chart):
    """Raw bump weights of one chart at every node."""
    coords = domain.node_coords()
    if isinstance(chart, BoxRegion):
        lo = np.asarray(chart.lower, dtype=float)
        hi = np.asarray(chart.upper, dtype=float)
        center = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        t = (coords - center) / half
        vals = np.ones(len(coords))
        for k in range(coords.shape[1]):
            vals *= _bump(t[:, k])
        return vals
    if isinstance(chart, CapRegion):
        c = np.asarray(chart.center, dtype=float)
        c = c / np.linalg.norm(c)
        ang = np.arccos(np.clip(coords @ c, -1.0, 1.0))
        return _bump(ang / chart.radius)
    raise ValueError(f"unsupported chart type {type(chart).__name__}")


def partition_of_unity(domain, charts):
    """Normalized smooth bump weights subordinate to the given charts.

    Every node must lie strictly inside at least one chart; otherwise a
    CoverageError lists the offending nodes.
    """
    bumps = np.stack([chart_bump(domain, ch) for ch in charts])
    total = bumps.sum(axis=0)
    uncovered = np.nonzero(total <= 0.0)[0]
    if len(uncovered):
        raise CoverageError(uncovered)
    alphas = bumps / total
    weights = tuple(make_field(domain, a) for a in alphas)
    return PartitionOfUnity(charts=tuple(charts), weights=weights)


# ---------------------------------------------------------------------------
# Osculating volume data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OsculatingField:
    """Per-node sigma_F, K^ij (SPD), its inverse K_ij, optional Christoffels."""

    domain: object
    sigma: np.ndarray
    k_upper: np.ndarray
    k_lower: np.ndarray
    christoffels: np.ndarray | None = None

    def __post_init__(self):
        if np.any(self.sigma <= 0.0):
            raise ValueError("sigma_F must be positive")


def _x_for_node(domain, coords, i):
    return coords[i]


def osculating_field(metric, domain, sphere_nodes=indicatrix.DEFAULT_SPHERE_NODES,
                     method="auto", scheme="auto"):
    """Busemann density and osculating matrices at every node.

    method "auto" uses closed forms for Euclidean and Riemannian kinds
    (K = g^{-1}, sigma_F = sqrt(det g) pointwise) and sphere quadrature
    otherwise; "quadrature" forces the quadrature path for any kind.  On
    icospheres the metric is evaluated in vertex tangent-frame
    coordinates with the ambient vertex position passed through as x.
    """
    n = domain.dimension
    if metric.dimension != n:
        raise ValueError("metric dimension does not match domain dimension")
    count = domain.node_count
    coords = domain.node_coords()

    if method == "auto" and isinstance(metric, EuclideanMetric):
        sigma = np.ones(count)
        eye = np.broadcast_to(np.eye(n), (count, n, n)).copy()
        return OsculatingField(domain=domain, sigma=sigma, k_upper=eye,
                               k_lower=eye.copy())
    if method == "auto" and isinstance(metric, RiemannianMetric):
        k_upper = np.empty((count, n, n))
        k_lower = np.empty((count, n, n))
        sigma = np.empty(count)
        if metric.constant_in_x:
            g = metric.g(coords[0])
            k_lower[:] = g
            k_upper[:] = np.linalg.inv(g)
            sigma[:] = math.sqrt(np.linalg.det(g))
        else:
            for i in range(count):
                g = metric.g(coords[i])
                k_lower[i] = g
                k_upper[i] = np.linalg.inv(g)
                sigma[i] = math.sqrt(np.linalg.det(g))
        return OsculatingField(domain=domain, sigma=sigma, k_upper=k_upper,
                               k_lower=k_lower)
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")

    ball = indicatrix.unit_ball_volume(n)
    k_upper = np.empty((count, n, n))
    sigma = np.empty(count)
    if metric.constant_in_x:
        mom = indicatrix.indicatrix_moments(metric, coords[0], sphere_nodes, scheme)
        k = (n + 2) * mom.second_moments / mom.volume
        k_upper[:] = k
        sigma[:] = ball / mom.volume
    else:
        for i in range(count):
            mom = indicatrix.indicatrix_moments(metric, coords[i], sphere_nodes, scheme)
            k_upper[i] = (n + 2) * mom.second_moments / mom.volume
            sigma[i] = ball / mom.volume
    k_lower = np.linalg.inv(k_upper)
    return OsculatingField(domain=domain, sigma=sigma, k_upper=k_upper,
                           k_lower=k_lower)


# ---------------------------------------------------------------------------
# Finite differences and Christoffel symbols
# ---------------------------------------------------------------------------


def grid_gradient(domain, grid_values):
    """Second-order gradient on a box grid (one-sided at boundaries).

    Returns an array of shape grid_shape + (n,).
    """
    grads = np.gradient(grid_values, *domain.spacing, edge_order=2)
    if domain.dimension == 1:
        grads = [grads]
    return np.stack(grads, axis=-1)


def _d2_axis(grid_values, h, axis):
    """Second derivative along one axis: compact interior stencil, one-sided
    4-point stencils at the two boundary slices (all second order)."""
    f = np.moveaxis(grid_values, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h**2
    out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def grid_hessian(domain, grid_values):
    """Second-order Hessian on a box grid: shape grid_shape + (n, n)."""
    n = domain.dimension
    shape = grid_values.shape
    hess = np.empty(shape + (n, n))
    first = grid_gradient(domain, grid_values)
    for i in range(n):
        hess[..., i, i] = _d2_axis(grid_values, domain.spacing[i], i)
        for j in range(i + 1, n):
            mixed = np.gradient(first[..., i], domain.spacing[j], axis=j, edge_order=2)
            hess[..., i, j] = mixed
            hess[..., j, i] = mixed
    return hess


def christoffels_of_k(osc, domain):
    """Levi-Civita symbols of the osculating metric K by finite differences.

    Gamma^k_ij = (1/2) K^{kl} (d_i K_lj + d_j K_li - d_l K_ij).  Central
    differences with second-order one-sided stencils at box boundaries;
    on icospheres, per-vertex tangent charts with least-squares fits of
    the pulled-back metric.  Returns a new OsculatingField.
    """
    n = domain.dimension
    if domain.kind == "box":
        shape = domain.shape
        k_lower = osc.k_lower.reshape(shape + (n, n))
        dk = np.empty(shape + (n, n, n))  # [..., l, i, j] = d_l K_ij
        for l in range(n):
            dk[..., l, :, :] = np.gradient(
                k_lower, domain.spacing[l], axis=l, edge_order=2
            )
        term = (
            np.einsum("...ilj->...lij", dk)
            + np.einsum("...jli->...lij", dk)
            - np.einsum("...lij->...lij", dk)
        )
        k_up = osc.k_upper.reshape(shape + (n, n))
        gamma = 0.5 * np.einsum("...kl,...lij->...kij", k_up, term)
        gamma = gamma.reshape(domain.node_count, n, n, n)
        return replace(osc, christoffels=gamma)
    if domain.kind == "icosphere":
        gamma = _sphere_christoffels(osc, domain)
        return replace(osc, christoffels=gamma)
    raise ValueError(f"unsupported domain kind {domain.kind!r}")


def sphere_chart_coords(domain, center_vertex, points):
    """Azimuthal-equidistant chart coordinates of sphere points around a vertex."""
    p = domain.vertices[center_vertex]
    cosang = np.clip(points @ p, -1.0, 1.0)
    ang = np.arccos(cosang)
    tangent = points - cosang[:, None] * p
    norms = np.linalg.norm(tangent, axis=1)
    safe = norms > 1e-14
    unit = np.zeros_like(points)
    unit[safe] = tangent[safe] / norms[safe, None]
    u = ang * (unit @ domain.frame_e1[center_vertex])
    v = ang * (unit @ domain.frame_e2[center_vertex])
    return np.column_stack([u, v])


def sphere_point_from_chart(domain, center_vertex, uv):
    """Inverse of sphere_chart_coords (exp map along the chart direction)."""
    p = domain.vertices[center_vertex]
    uv = np.asarray(uv, dtype=float)
    r = np.linalg.norm(uv, axis=-1)
    direction = (
        uv[..., :1] * domain.frame_e1[center_vertex]
        + uv[..., 1:2] * domain.frame_e2[center_vertex]
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r[..., None] > 0, direction / np.where(r[..., None] > 0, r[..., None], 1.0), 0.0)
    return np.cos(r)[..., None] * p + np.sin(r)[..., None] * unit


def _chart_jacobian(domain, center_vertex, uv):
    """3x2 Jacobian of chart -> sphere at chart coords uv (exp map on S^2)."""
    e1 = domain.frame_e1[center_vertex]
    e2 = domain.frame_e2[center_vertex]
    p = domain.vertices[center_vertex]
    r = float(np.hypot(uv[0], uv[1]))
    if r < 1e-12:
        return np.column_stack([e1, e2])
    d = (uv[0] * e1 + uv[1] * e2) / r
    dr_du = np.array([uv[0], uv[1]]) / r
    dd_du = (np.column_stack([e1, e2]) - np.outer(d, dr_du)) / r
    jac = (
        np.outer(-np.sin(r) * p + np.cos(r) * d, dr_du)
        + np.sin(r) * dd_du
    )
    return jac


def _ambient_k_lower(osc, domain):
    """K_ij as ambient 3x3 tensors acting on tangent vectors."""
    e = np.stack([domain.frame_e1, domain.frame_e2], axis=-1)  # (V, 3, 2)
    return np.einsum("vai,vij,vbj->vab", e, osc.k_lower, e)


def _sphere_christoffels(osc, domain):
    """Per-vertex chart Christoffels from a linear fit of the pulled-back K."""
    k3 = _ambient_k_lower(osc, domain)
    count = domain.node_count
    gamma = np.zeros((count, 2, 2, 2))
    for v in range(count):
        ring = domain.two_ring(v)
        pts = domain.vertices[ring]
        uv = sphere_chart_coords(domain, v, pts)
        g_samples = np.empty((len(ring), 2, 2))
        for s, w in enumerate(ring):
            jac = _chart_jacobian(domain, v, uv[s])
            g_samples[s] = jac.T @ k3[w] @ jac
        # linear model G_ab(u) = G_ab(0) + c1 u + c2 v per component
        a_mat = np.column_stack([np.ones(len(ring)), uv[:, 0], uv[:, 1]])
        dg = np.zeros((2, 2, 2))  # [l, i, j] = d_l G_ij at the center
        for i in range(2):
            for j in range(i, 2):
                coef, *_ = np.linalg.lstsq(a_mat, g_samples[:, i, j], rcond=None)
                dg[0, i, j] = dg[0, j, i] = coef[1]
                dg[1, i, j] = dg[1, j, i] = coef[2]
        term = (
            np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
        )
        gamma[v] = 0.5 * np.einsum("kl,lij->kij", osc.k_upper[v], term)
    return gamma


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def integrate(field_obj, osc):
    """Integral of a field against dv_F = sigma_F * cell measure."""
    if field_obj.domain is not osc.domain:
        raise ValueError("field and osculating data live on different domains")
    w = field_obj.domain.quadrature_weights()
    return float(np.sum(field_obj.values * osc.sigma * w))


# ---------------------------------------------------------------------------
# CSV serialization (versioned container consumed by the CLI)
# ---------------------------------------------------------------------------

SCHEMA_VERSION = 1


def field_to_csv(field_obj):
    dom = field_obj.domain
    buf = io.StringIO()
    if dom.kind == "box":
        shape = "x".join(str(m) for m in dom.shape)
        lo = ";".join(format(v, ".17g") for v in dom.lower)
        hi = ";".join(format(v, ".17g") for v in dom.upper)
        buf.write(f"schema={SCHEMA_VERSION},kind=box,shape={shape},lower={lo},upper={hi}\n")
    else:
        buf.write(f"schema={SCHEMA_VERSION},kind=icosphere,level={dom.level}\n")
    coords = dom.node_coords()
    dim = coords.shape[1]
    cols = ",".join(f"x{k+1}" for k in range(dim))
    buf.write(f"node,{cols},value,support\n")
    for i in range(dom.node_count):
        cs = ",".join(format(c, ".17g") for c in coords[i])
        buf.write(
            f"{i},{cs},{format(field_obj.values[i], '.17g')},{int(field_obj.support_mask[i])}\n"
        )
    return buf.getvalue()


def field_from_csv(text, domain):
    lines = text.strip().splitlines()
    header = dict(item.split("=", 1) for item in lines[0].split(","))
    if int(header["schema"]) != SCHEMA_VERSION:
        raise ValueError(f"unsupported field schema {header['schema']}")
    if header["kind"] != domain.kind:
        raise ValueError(
            f"field kind {header['kind']!r} does not match domain kind {domain.kind!r}"
        )
    if domain.kind == "box":
        shape = tuple(int(m) for m in header["shape"].split("x"))
        if shape != tuple(domain.shape):
            raise ValueError("field grid shape does not match domain")
    else:
        if int(header["level"]) != domain.level:
            raise ValueError("icosphere level does not match domain")
    values = np.zeros(domain.node_count)
    mask = np.zeros(domain.node_count, dtype=bool)
    for line in lines[2:]:
        parts = line.split(",")
        i = int(parts[0])
        values[i] = float(parts[-2])
        mask[i] = bool(int(parts[-1]))
    return make_field(domain, values, mask)
