"""Weak Poisson problems on closed discrete surfaces.

The operator is the divergence-form realization associated to the
osculating metric K and the Busemann volume: the bilinear form

    a(u, v) = int K^{ij} d_i u d_j v dv_F

is assembled with piecewise-linear elements on triangles, with K and
sigma_F evaluated once per triangle at the barycenter.  It is symmetric
positive semidefinite with the constants as kernel, so Delta u = f
(sign convention Delta = div grad, a(u, v) = -int (Delta u) v dv_F) is
solvable exactly when int f dv_F = 0; the solution is gauge-fixed to
dv_F-mean zero.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import cg as _cg

from .density import approximate_interior
from .domains import integrate, make_field

COMPATIBILITY_RTOL = 1e-8


@dataclass(frozen=True)
class WeakProblem:
    """Right-hand side and volume data for Delta u = f on a closed surface."""

    domain: object
    osc: object
    f: object  # ScalarField
    p: float = 2.0

    def compatibility_residual(self):
        total = compatibility_check(self.f, self.osc)
        scale = integrate(
            make_field(self.domain, np.abs(self.f.values),
                       np.ones(self.domain.node_count, dtype=bool)),
            self.osc,
        )
        return abs(total) / (scale + 1e-300)


@dataclass(frozen=True)
class SolveReport:
    u: object  # ScalarField, dv_F-mean zero
    weak_residuals: tuple
    iterations: int
    final_residual: float
    converged: bool


def compatibility_check(f, osc):
    """int f dv_F; must vanish for solvability on a closed surface."""
    if f.domain.kind != "icosphere":
        raise ValueError("compatibility is defined on closed surfaces only")
    return integrate(
        make_field(f.domain, f.values, np.ones(f.domain.node_count, dtype=bool)),
        osc,
    )


def assemble_weak_laplacian(domain, osc):
    """Sparse symmetric PSD stiffness matrix of a(u, v) on a closed surface."""
    if domain.kind != "icosphere":
        raise ValueError("assembly requires a closed triangulated surface")
    tris = domain.triangles
    verts = domain.vertices

    # ambient K as 3x3 tangent tensors, averaged to barycenters
    e = np.stack([domain.frame_e1, domain.frame_e2], axis=-1)  # (V, 3, 2)
    k3 = np.einsum("vai,vij,vbj->vab", e, osc.k_upper, e)
    k_tri = (k3[tris[:, 0]] + k3[tris[:, 1]] + k3[tris[:, 2]]) / 3.0
    sigma_tri = osc.sigma[tris].mean(axis=1)

    p1, p2, p3 = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    normal = np.cross(p2 - p1, p3 - p1)
    double_area = np.linalg.norm(normal, axis=1)
    unit_n = normal / double_area[:, None]
    area = 0.5 * double_area

    # constant gradients of the three hat functions on each triangle
    grads = np.stack([
        np.cross(unit_n, p3 - p2),
        np.cross(unit_n, p1 - p3),
        np.cross(unit_n, p2 - p1),
    ], axis=1) / double_area[:, None, None]

    contracted = np.einsum("tai,tij,tbj->tab", grads, k_tri, grads)
    element = contracted * (sigma_tri * area)[:, None, None]

    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    vals = element.ravel()
    n = domain.node_count
    mat = coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return 0.5 * (mat + mat.T)


def _random_bump_fields(domain, count, seed):
    """Smooth compactly supported test functions on the sphere."""
    rng = np.random.default_rng(seed)
    fields = []
    for _ in range(count):
        center = rng.standard_normal(3)
        center /= np.linalg.norm(center)
        rad = rng.uniform(0.5, 1.2)
        ang = np.arccos(np.clip(domain.vertices @ center, -1.0, 1.0))
        t = ang / rad
        vals = np.zeros(domain.node_count)
        inside = t < 1.0
        vals[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
        fields.append(make_field(domain, vals))
    return fields


def solve_dirichlet(problem, tol=1e-10, max_iter=5000, test_functions=10, seed=7):
    """Conjugate-gradient solve of a(u, .) = -int f . dv_F, mean-zero gauge.

    The weak identity int u Delta' chi dv_F = int f chi dv_F is probed
    afterwards against random smooth bump fields chi (self-adjointness
    makes the adjoint operator coincide with the operator itself).
    """
    res = problem.compatibility_residual()
    if res >= COMPATIBILITY_RTOL:
        raise ValueError(
            f"compatibility violated: |int f dv_F| relative residual {res:.3e}"
        )
    domain = problem.domain
    osc = problem.osc
    a_mat = assemble_weak_laplacian(domain, osc)
    w = domain.quadrature_weights() * osc.sigma
    b = -(problem.f.values * w)
    b = b - b.mean()  # project roundoff off the constants

    iterations = 0

    def count_iter(_):
        nonlocal iterations
        iterations += 1

    u, info = _cg(a_mat, b, rtol=tol, atol=0.0, maxiter=max_iter,
                  callback=count_iter)
    converged = info == 0
    final_residual = float(np.linalg.norm(a_mat @ u - b) / np.linalg.norm(b))

    vol = float(np.sum(w))
    u = u - float(np.sum(u * w)) / vol
    u_field = make_field(domain, u, np.ones(domain.node_count, dtype=bool))

    residuals = []
    for chi in _random_bump_fields(domain, test_functions, seed):
        lhs = float(u @ (a_mat @ chi.values))          # a(u, chi)
        rhs = -float(np.sum(problem.f.values * chi.values * w))
        residuals.append(abs(lhs - rhs))

    return SolveReport(
        u=u_field,
        weak_residuals=tuple(residuals),
        iterations=iterations,
        final_residual=final_residual,
        converged=bool(converged),
    )


def smooth_approximate_solution(report, metric, epsilon_sequence, p=2.0,
                                osc=None, tolerance=0.5):
    """Smooth the solved field by the interior pipeline on the closed surface.

    Compactness makes the distance cutoff inactive (j beyond the
    diameter), so the mollification stage carries the approximation.
    """
    domain = report.u.domain
    j = [float(len(epsilon_sequence) * 10 + 10)] * len(epsilon_sequence)
    return approximate_interior(
        report.u, metric, domain, x0=0,
        j_sequence=j, epsilon_sequence=list(epsilon_sequence),
        p=p, osc=osc, tolerance=tolerance,
    )
