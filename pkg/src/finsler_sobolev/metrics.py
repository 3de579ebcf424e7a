"""Finsler metric kinds and pointwise tangent-space computations.

A Finsler norm F(x, y) is positively 1-homogeneous in y, positive for
y != 0, and strongly convex: the fundamental tensor

    g_ij(x, y) = (1/2) d^2(F^2) / dy^i dy^j

is positive definite away from y = 0.  Five kinds are supported:
Euclidean, Riemannian, Randers (|b|_a < 1), a perturbed-reversible
family that is reversible but not Riemannian, and user-supplied
evaluators differentiated by central differences.

All evaluators are pure functions of (x, y) with no shared mutable
state, so they are safe to call concurrently.
"""

from dataclasses import dataclass

import numpy as np

HOMOGENEITY_RTOL_ANALYTIC = 1e-10
HOMOGENEITY_RTOL_CUSTOM = 1e-6
REVERSIBILITY_RTOL = 1e-8
CONVEXITY_EIG_FLOOR = 1e-10
RANDERS_B_LIMIT = 1.0 - 1e-9

# Custom metrics are differentiated with step 1e-4 * max(|y|, 1): large
# enough to dominate roundoff in F^2 values of order one, small enough
# to keep the truncation error of central differences near 1e-8.
_FD_STEP_SCALE = 1e-4


def _as_matrix_fn(value, n, name):
    """Accept a constant SPD matrix or a callable point -> matrix."""
    if callable(value):
        return value, False
    mat = np.array(value, dtype=float)
    if mat.shape != (n, n):
        raise ValueError(f"{name} must be {n}x{n}, got {mat.shape}")
    return (lambda x, _m=mat: _m), True


def _as_vector_fn(value, n, name):
    if callable(value):
        return value, False
    vec = np.array(value, dtype=float)
    if vec.shape != (n,):
        raise ValueError(f"{name} must have length {n}, got {vec.shape}")
    return (lambda x, _v=vec: _v), True


class FinslerMetric:
    """Base class: a validated Finsler norm on n-dimensional tangent spaces.

    ``value(x, y)`` accepts a single vector ``(n,)`` or a batch
    ``(..., n)`` and returns the corresponding scalars.  ``x`` is passed
    through to parameter callables; on surface domains it is the ambient
    node position while ``y`` holds tangent-frame coordinates.
    """

    kind = "abstract"

    def __init__(self, dimension, reversible, constant_in_x):
        if dimension < 1:
            raise ValueError("dimension must be a positive integer")
        self.dimension = int(dimension)
        self.reversible = bool(reversible)
        self.constant_in_x = bool(constant_in_x)

    # -- evaluation ----------------------------------------------------

    def value(self, x, y):
        raise NotImplementedError

    def _check_y(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.dimension:
            raise ValueError(
                f"vector dimension {y.shape[-1]} does not match metric "
                f"dimension {self.dimension}"
            )
        return y

    def fundamental_tensor_matrix(self, x, y):
        """g_ij = (1/2) Hessian of F^2 in y; central differences by default."""
        return _fd_fundamental_matrix(self, x, y)

    def homogeneity_rtol(self):
        return HOMOGENEITY_RTOL_CUSTOM if self.kind == "custom" else HOMOGENEITY_RTOL_ANALYTIC

    # -- construction-time validation -----------------------------------

    def _validate(self, sample_points=None):
        n = self.dimension
        if sample_points is None:
            sample_points = [np.zeros(n)]
        dirs = _unit_directions(n, 64)
        rng = np.random.default_rng(20240 + n)
        lams = rng.uniform(0.1, 10.0, size=dirs.shape[0])
        rtol = self.homogeneity_rtol()
        for x in sample_points:
            f = np.asarray(self.value(x, dirs), dtype=float)
            if np.any(f <= 0.0):
                bad = dirs[np.argmin(f)]
                raise ValueError(f"metric is not positive at direction {bad}")
            f_scaled = np.asarray(self.value(x, dirs * lams[:, None]), dtype=float)
            if np.any(np.abs(f_scaled - lams * f) > rtol * lams * f):
                raise ValueError("metric is not positively 1-homogeneous")
            if self.reversible:
                f_neg = np.asarray(self.value(x, -dirs), dtype=float)
                if np.any(np.abs(f_neg - f) > rtol * np.maximum(f, f_neg)):
                    raise ValueError(
                        "metric claims reversibility but F(x,-y) != F(x,y)"
                    )


class EuclideanMetric(FinslerMetric):
    """F(x, y) = |y|."""

    kind = "euclidean"

    def __init__(self, dimension):
        super().__init__(dimension, reversible=True, constant_in_x=True)
        self._validate()

    def value(self, x, y):
        y = self._check_y(y)
        return np.sqrt((y * y).sum(axis=-1))

    def fundamental_tensor_matrix(self, x, y):
        return np.eye(self.dimension)


class RiemannianMetric(FinslerMetric):
    """F(x, y) = sqrt(g_ij(x) y^i y^j) for an SPD matrix field g."""

    kind = "riemannian"

    def __init__(self, dimension, g, sample_points=None):
        self._g_fn, const = _as_matrix_fn(g, dimension, "g")
        super().__init__(dimension, reversible=True, constant_in_x=const)
        pts = sample_points if sample_points is not None else [np.zeros(dimension)]
        for x in pts:
            mat = self.g(x)
            if not np.allclose(mat, mat.T, atol=1e-12):
                raise ValueError("g must be symmetric")
            if np.linalg.eigvalsh(mat)[0] <= 0.0:
                raise ValueError("g must be positive definite")
        self._validate(pts)

    def g(self, x):
        return np.asarray(self._g_fn(x), dtype=float)

    def value(self, x, y):
        y = self._check_y(y)
        mat = self.g(x)
        return np.sqrt(np.einsum("...i,ij,...j->...", y, mat, y))

    def fundamental_tensor_matrix(self, x, y):
        return self.g(x)


class RandersMetric(FinslerMetric):
    """F(x, y) = sqrt(a_ij y^i y^j) + b_i y^i with a-dual norm |b|_a < 1.

    Positivity of F for y != 0 is equivalent to |b|_a < 1, so larger
    drift covectors are rejected at construction.
    """

    kind = "randers"

    def __init__(self, dimension, a, b, sample_points=None):
        self._a_fn, a_const = _as_matrix_fn(a, dimension, "a")
        self._b_fn, b_const = _as_vector_fn(b, dimension, "b")
        super().__init__(dimension, reversible=False, constant_in_x=a_const and b_const)
        pts = sample_points if sample_points is not None else [np.zeros(dimension)]
        for x in pts:
            amat = self.a(x)
            bvec = self.b(x)
            if np.linalg.eigvalsh(amat)[0] <= 0.0:
                raise ValueError("a must be positive definite")
            b_norm = float(np.sqrt(bvec @ np.linalg.solve(amat, bvec)))
            if b_norm >= RANDERS_B_LIMIT:
                raise ValueError(
                    f"Randers drift |b|_a = {b_norm:.12g} >= 1; F would lose positivity"
                )
        self._validate(pts)

    def a(self, x):
        return np.asarray(self._a_fn(x), dtype=float)

    def b(self, x):
        return np.asarray(self._b_fn(x), dtype=float)

    def value(self, x, y):
        y = self._check_y(y)
        amat = self.a(x)
        bvec = self.b(x)
        alpha = np.sqrt(np.einsum("...i,ij,...j->...", y, amat, y))
        return alpha + y @ bvec

    def fundamental_tensor_matrix(self, x, y):
        y = self._check_y(np.asarray(y, dtype=float))
        amat = self.a(x)
        bvec = self.b(x)
        ay = amat @ y
        alpha = float(np.sqrt(y @ ay))
        if alpha == 0.0:
            raise ValueError("fundamental tensor undefined at y = 0")
        ell = ay / alpha
        f = alpha + float(bvec @ y)
        lb = ell + bvec
        return (f / alpha) * (amat - np.outer(ell, ell)) + np.outer(lb, lb)


class PerturbedReversibleMetric(FinslerMetric):
    """Reversible, non-Riemannian family on R^n (n >= 2):

        F(y)^2 = |y|^2 + lam * (y_1 y_2)^2 / |y|^2,   F(0) = 0.

    The perturbation is even in y and 1-homogeneous after the square
    root; it is smooth away from y = 0 and strongly convex for
    lam <= 0.5, which is re-validated numerically at construction.
    """

    kind = "perturbed-reversible"

    def __init__(self, dimension, lam):
        if dimension < 2:
            raise ValueError("perturbed-reversible metric needs dimension >= 2")
        if not 0.0 <= lam <= 0.5:
            raise ValueError("lam must lie in [0, 0.5]")
        self.lam = float(lam)
        super().__init__(dimension, reversible=True, constant_in_x=True)
        self._validate()
        report = check_strong_convexity(self, np.zeros(dimension), directions=128)
        if not report.passed:
            raise ValueError(
                f"perturbation lam={lam} breaks strong convexity "
                f"(min eigenvalue {report.min_eigenvalue:.3e})"
            )

    def value(self, x, y):
        y = self._check_y(y)
        q = (y * y).sum(axis=-1)
        p = (y[..., 0] * y[..., 1]) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            f2 = np.where(q > 0.0, q + self.lam * p / np.where(q > 0.0, q, 1.0), 0.0)
        return np.sqrt(f2)

    def fundamental_tensor_matrix(self, x, y):
        y = self._check_y(np.asarray(y, dtype=float))
        n = self.dimension
        q = float(y @ y)
        if q == 0.0:
            raise ValueError("fundamental tensor undefined at y = 0")
        lam = self.lam
        p = (y[0] * y[1]) ** 2
        dp = np.zeros(n)
        dp[0] = 2.0 * y[0] * y[1] ** 2
        dp[1] = 2.0 * y[0] ** 2 * y[1]
        ddp = np.zeros((n, n))
        ddp[0, 0] = 2.0 * y[1] ** 2
        ddp[1, 1] = 2.0 * y[0] ** 2
        ddp[0, 1] = ddp[1, 0] = 4.0 * y[0] * y[1]
        eye = np.eye(n)
        g = eye + 0.5 * lam * ddp / q
        g -= lam * (np.outer(dp, y) + np.outer(y, dp)) / q**2
        g -= lam * p * eye / q**2
        g += 4.0 * lam * p * np.outer(y, y) / q**3
        return g


class CustomMetric(FinslerMetric):
    """Wraps a user evaluator (x, y) -> F; derivatives by central differences."""

    kind = "custom"

    def __init__(self, dimension, evaluator, reversible=False,
                 constant_in_x=False, sample_points=None):
        self._f = evaluator
        super().__init__(dimension, reversible=reversible, constant_in_x=constant_in_x)
        self._validate(sample_points)

    def value(self, x, y):
        y = self._check_y(y)
        if y.ndim == 1:
            return float(self._f(x, y))
        flat = y.reshape(-1, self.dimension)
        out = np.fromiter((self._f(x, v) for v in flat), dtype=float, count=len(flat))
        return out.reshape(y.shape[:-1])


@dataclass(frozen=True)
class FundamentalTensor:
    """Symmetric matrix g_ij(x, y) at a base point and direction."""

    x: np.ndarray
    y: np.ndarray
    matrix: np.ndarray

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True)
class ConvexityReport:
    passed: bool
    min_eigenvalue: float
    worst_direction: np.ndarray


def _fd_fundamental_matrix(metric, x, y):
    y = np.asarray(y, dtype=float)
    n = metric.dimension
    h = _FD_STEP_SCALE * max(float(np.linalg.norm(y)), 1.0)

    def f2(v):
        return float(metric.value(x, v)) ** 2

    g = np.empty((n, n))
    center = f2(y)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        g[i, i] = (f2(y + ei) - 2.0 * center + f2(y - ei)) / h**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            mixed = (
                f2(y + ei + ej) - f2(y + ei - ej) - f2(y - ei + ej) + f2(y - ei - ej)
            ) / (4.0 * h**2)
            g[i, j] = g[j, i] = mixed
    return 0.5 * g


def _unit_directions(n, count):
    """Deterministic unit directions: uniform angles (n=2), Fibonacci (n=3)."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if n == 3:
        return fibonacci_sphere(count)
    rng = np.random.default_rng(7 * n)
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def fibonacci_sphere(count):
    """Spherical Fibonacci point set on S^2 (near-uniform, deterministic)."""
    k = np.arange(count)
    z = 1.0 - (2.0 * k + 1.0) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    golden = np.pi * (3.0 - np.sqrt(5.0))
    phi = golden * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


# -- module-level operations ------------------------------------------------


def eval_F(metric, x, y):
    """Evaluate F(x, y); exactly zero iff y = 0."""
    y = np.asarray(y, dtype=float)
    val = metric.value(x, y)
    return float(val) if np.ndim(val) == 0 else val


def fundamental_tensor(metric, x, y):
    """Half Hessian of F^2 in y, as a FundamentalTensor; y must be nonzero."""
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        raise ValueError("fundamental tensor undefined at y = 0 (F not differentiable)")
    mat = metric.fundamental_tensor_matrix(x, y)
    mat = 0.5 * (mat + mat.T)
    return FundamentalTensor(x=np.asarray(x, dtype=float), y=y, matrix=mat)


def check_strong_convexity(metric, x, directions=64):
    """Smallest fundamental-tensor eigenvalue over unit-sphere samples.

    Passes iff every sampled eigenvalue exceeds 1e-10.
    """
    if directions < 16:
        raise ValueError("need at least 16 sample directions")
    dirs = _unit_directions(metric.dimension, directions)
    min_eig = np.inf
    worst = dirs[0]
    for d in dirs:
        g = metric.fundamental_tensor_matrix(x, d)
        eig = float(np.linalg.eigvalsh(0.5 * (g + g.T))[0])
        if eig < min_eig:
            min_eig = eig
            worst = d
    return ConvexityReport(
        passed=bool(min_eig > CONVEXITY_EIG_FLOOR),
        min_eigenvalue=min_eig,
        worst_direction=np.asarray(worst),
    )


def check_reversibility(metric, x, directions=64):
    """True iff max relative asymmetry |F(x,w) - F(x,-w)| over samples < 1e-8."""
    dirs = _unit_directions(metric.dimension, directions)
    f_pos = np.asarray(metric.value(x, dirs), dtype=float)
    f_neg = np.asarray(metric.value(x, -dirs), dtype=float)
    rel = np.abs(f_pos - f_neg) / np.maximum(f_pos, f_neg)
    return bool(np.max(rel) < REVERSIBILITY_RTOL)


def make_metric(kind, dimension, **params):
    """Factory used by configuration parsing."""
    kind = kind.lower()
    if kind == "euclidean":
        return EuclideanMetric(dimension)
    if kind == "riemannian":
        return RiemannianMetric(dimension, params["g"])
    if kind == "randers":
        return RandersMetric(dimension, params["a"], params["b"])
    if kind == "perturbed-reversible":
        return PerturbedReversibleMetric(dimension, params["lam"])
    raise ValueError(f"unknown metric kind {kind!r}")
