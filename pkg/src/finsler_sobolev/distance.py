"""Integral lengths, geodesics, and forward distance fields.

The distance d(x0, x) = inf over piecewise-smooth curves of the integral
length int F(sigma, dsigma/dt) dt is generally asymmetric.  It is
realized here as a shortest path on a directed graph whose edge p -> q
carries the weight F(midpoint, q - p): a 16-neighbor stencil (primitive
lattice offsets of Chebyshev radius 2) on box grids keeps the
metrication error below 3 percent; icospheres use triangle edges plus
one-ring diagonals.  Graph relaxation handles asymmetric weights
directly, which is why it is preferred over anisotropic fast marching.
"""

from dataclasses import dataclass
from itertools import product
import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _dijkstra

from .metrics import fundamental_tensor

STENCIL_RADIUS = 2


@dataclass(frozen=True)
class DistanceField:
    """Forward distances d(x0, node); inf marks unreachable nodes."""

    domain: object
    source: int
    values: np.ndarray
    stencil: str

    def __post_init__(self):
        if self.values[self.source] != 0.0:
            raise ValueError("distance at the source node must be zero")
        if np.any(self.values < 0.0):
            raise ValueError("distances must be nonnegative")

    @property
    def unreachable(self):
        return ~np.isfinite(self.values)


@dataclass(frozen=True)
class GeodesicPath:
    points: np.ndarray
    truncated: bool


def curve_length(metric, polyline):
    """Midpoint-rule integral length: sum of F(midpoint, segment)."""
    pts = np.asarray(polyline, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("polyline needs at least two points")
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        step = b - a
        if not np.any(step):
            continue
        total += float(metric.value(0.5 * (a + b), step))
    return total


def geodesic_spray(metric, x, y):
    """Spray coefficients G with geodesic equation x'' + 2 G(x, x') = 0.

    G^i = (1/4) g^{il} ( [F^2]_{x^k y^l} y^k - [F^2]_{x^l} ), with
    x-derivatives by central differences (they vanish identically for
    metrics constant in x).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise ValueError("spray undefined at y = 0")
    n = metric.dimension
    if metric.constant_in_x:
        return np.zeros(n)
    g = fundamental_tensor(metric, x, y).matrix

    h = 1e-5 * (1.0 + float(np.linalg.norm(x)))

    def df2_dy(xp):
        return 2.0 * fundamental_tensor(metric, xp, y).matrix @ y

    def f2(xp):
        return float(metric.value(xp, y)) ** 2

    mixed = np.empty((n, n))  # [k, l] = [F^2]_{x^k y^l}
    grad_x = np.empty(n)
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        mixed[k] = (df2_dy(x + e) - df2_dy(x - e)) / (2.0 * h)
        grad_x[k] = (f2(x + e) - f2(x - e)) / (2.0 * h)
    rhs = y @ mixed - grad_x
    try:
        coeff = np.linalg.solve(g, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular fundamental tensor along the spray") from exc
    return 0.25 * coeff


def integrate_geodesic(metric, x0, v0, horizon, dt, bounds=None):
    """Classical fourth-order integration of the spray equation.

    bounds, if given, is a (lower, upper) coordinate box; leaving it
    truncates the path and flags the result.
    """
    if dt > horizon / 100.0:
        raise ValueError("dt must not exceed horizon/100")
    x = np.asarray(x0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    steps = int(round(horizon / dt))
    pts = [x.copy()]
    truncated = False

    def acc(xp, vp):
        return -2.0 * geodesic_spray(metric, xp, vp)

    for _ in range(steps):
        k1x, k1v = v, acc(x, v)
        k2x, k2v = v + 0.5 * dt * k1v, acc(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
        k3x, k3v = v + 0.5 * dt * k2v, acc(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
        k4x, k4v = v + dt * k3v, acc(x + dt * k3x, v + dt * k3v)
        x = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if bounds is not None:
            lo, hi = bounds
            if np.any(x < lo) or np.any(x > hi):
                truncated = True
                break
        pts.append(x.copy())
    return GeodesicPath(points=np.array(pts), truncated=truncated)


def _primitive_offsets(n, radius=STENCIL_RADIUS):
    offsets = []
    for off in product(range(-radius, radius + 1), repeat=n):
        if not any(off):
            continue
        if math.gcd(*(abs(o) for o in off)) != 1:
            continue
        offsets.append(off)
    return np.array(offsets, dtype=int)


def _box_edges(metric, domain):
    shape = np.asarray(domain.shape)
    n = domain.dimension
    coords = domain.node_coords()
    offsets = _primitive_offsets(n)
    rows, cols, weights = [], [], []
    multi = np.stack(np.unravel_index(np.arange(domain.node_count), domain.shape), axis=-1)
    for off in offsets:
        target = multi + off
        valid = np.all((target >= 0) & (target < shape), axis=1)
        src = np.nonzero(valid)[0]
        dst = np.ravel_multi_index(tuple(target[valid].T), domain.shape)
        step = off * domain.spacing
        if metric.constant_in_x:
            w = float(metric.value(coords[0], step))
            weights.append(np.full(len(src), w))
        else:
            mids = 0.5 * (coords[src] + coords[dst])
            w = np.array([metric.value(m, step) for m in mids], dtype=float)
            weights.append(w)
        rows.append(src)
        cols.append(dst)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(weights)


def _sphere_edges(metric, domain):
    pairs = set()
    for v in range(domain.node_count):
        for u in domain.one_ring[v]:
            pairs.add((v, u))
        for u in domain.two_ring(v):
            pairs.add((v, u))
    pairs = np.array(sorted(pairs), dtype=int)
    p = domain.vertices[pairs[:, 0]]
    q = domain.vertices[pairs[:, 1]]
    mid = p + q
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    arc = np.arccos(np.clip(np.einsum("ei,ei->e", p, q), -1.0, 1.0))
    chord = q - p
    tangent = chord - np.einsum("ei,ei->e", chord, mid)[:, None] * mid
    tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
    helper = np.tile(np.array([0.0, 0.0, 1.0]), (len(mid), 1))
    near_pole = np.abs(mid[:, 2]) > 0.9
    helper[near_pole] = np.array([1.0, 0.0, 0.0])
    e1 = helper - np.einsum("ei,ei->e", helper, mid)[:, None] * mid
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(mid, e1)
    y = np.column_stack([
        np.einsum("ei,ei->e", tangent, e1),
        np.einsum("ei,ei->e", tangent, e2),
    ])
    if metric.constant_in_x:
        f = np.asarray(metric.value(mid[0], y), dtype=float)
    else:
        f = np.array([metric.value(m, yy) for m, yy in zip(mid, y)], dtype=float)
    return pairs[:, 0], pairs[:, 1], arc * f


def distance_field(metric, domain, source):
    """Forward distances from a source node by Dijkstra relaxation.

    Edge weights respect asymmetry: weight(p -> q) = F(midpoint, q - p).
    """
    if domain.kind == "box":
        rows, cols, weights = _box_edges(metric, domain)
        stencil = "box-16" if domain.dimension == 2 else f"box-r{STENCIL_RADIUS}"
    elif domain.kind == "icosphere":
        rows, cols, weights = _sphere_edges(metric, domain)
        stencil = "icosphere-2ring"
    else:
        raise ValueError(f"unsupported domain kind {domain.kind!r}")
    if np.any(weights <= 0.0):
        raise ValueError("nonpositive edge weight; metric is not positive")
    n = domain.node_count
    graph = csr_matrix((weights, (rows, cols)), shape=(n, n))
    dist = _dijkstra(graph, directed=True, indices=source)
    return DistanceField(domain=domain, source=int(source), values=dist, stencil=stencil)


def forward_ball_mask(dist, radius):
    """Strict forward ball {d(x0, .) < r} as a boolean node mask."""
    return dist.values < radius
