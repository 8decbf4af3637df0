"""Closed-form model manifolds and the registry used by the CLI.

The fleet covers the locally symmetric spaces (Euclidean, sphere, hyperbolic
space in the hyperboloid model, SPD matrices with the affine-invariant
connection, SO(3) with the symmetric Cartan-Schouten connection) plus one
deliberately non-symmetric chart metric, ``bump2d``, whose curvature varies
with position.  Registry names: "euclidean-n", "sphere-n", "hyperbolic-n",
"spd-n", "so3", "bump2d".
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import null_space

from .chart import (
    ChartConnection,
    ChartSpace,
    ODESolverConfig,
    ShootingConfig,
    christoffels_from_metric,
    conformal_christoffel,
)
from .core import (
    ConnectionSpace,
    CutLocus,
    LogBranch,
    NotSPD,
    Point,
    ToleranceConfig,
    Unsupported,
)

__all__ = [
    "Euclidean",
    "Sphere",
    "Hyperbolic",
    "SPD",
    "RotationGroup",
    "BumpMetric2D",
    "make_space",
    "make_chart",
    "registry_names",
    "sphere_ops",
    "spd_ops",
    "lie_group_ops",
    "bump_metric_ops",
    "euclidean_ops",
    "hyperbolic_ops",
]


# ---------------------------------------------------------------------------
# Euclidean space
# ---------------------------------------------------------------------------

class Euclidean(ConnectionSpace):
    """Flat R^n: geodesics are straight lines, transport is the identity."""

    locally_symmetric = True

    def __init__(self, n: int, tolerances: ToleranceConfig | None = None):
        super().__init__(tolerances)
        self.dim = n
        self.ambient_dim = n
        self.name = f"euclidean-{n}"
        self.validity_radius = 2.0

    def _exp(self, x, v):
        return x + v

    def _log(self, x, y):
        return y - x

    def _transport(self, x, u, y):
        return u.copy()

    def _curvature(self, x, u, v, w):
        return np.zeros_like(u)

    def _nabla_curvature(self, x, direction, u, v, w):
        return np.zeros_like(u)

    def _inner(self, x, u, v):
        return float(u @ v)

    def _tangent_basis(self, x):
        return np.eye(self.dim)

    def random_point(self, rng):
        return Point(rng.standard_normal(self.dim), self.name)


# ---------------------------------------------------------------------------
# Sphere
# ---------------------------------------------------------------------------

class Sphere(ConnectionSpace):
    """Unit n-sphere embedded in R^{n+1}, constant curvature +1.

    Antipodal points are each other's cut locus; the log map raises CutLocus
    there.  exp is defined globally.
    """

    locally_symmetric = True
    _ANTIPODE_TOL = 1e-8

    def __init__(self, n: int, tolerances: ToleranceConfig | None = None):
        super().__init__(tolerances)
        self.dim = n
        self.ambient_dim = n + 1
        self.name = f"sphere-{n}"
        self.injectivity_radius = math.pi
        self.validity_radius = math.pi

    def membership_residual(self, p):
        return abs(float(np.linalg.norm(p.coords)) - 1.0)

    def tangency_residual(self, v):
        return abs(float(v.base.coords @ v.components))

    def _exp(self, x, v):
        theta = float(np.linalg.norm(v))
        y = math.cos(theta) * x + (math.sin(theta) / theta) * v
        return y / np.linalg.norm(y)

    def _log(self, x, y):
        c = float(np.clip(x @ y, -1.0, 1.0))
        u = y - c * x
        nr = float(np.linalg.norm(u))
        theta = math.atan2(nr, c)
        if theta > math.pi - self._ANTIPODE_TOL:
            raise CutLocus("log at an antipodal point is undefined")
        if nr == 0.0:
            return np.zeros_like(x)
        return (theta / nr) * u

    def _transport(self, x, u, y):
        w = self._log(x, y)
        theta = float(np.linalg.norm(w))
        if theta == 0.0:
            return u.copy()
        e = w / theta
        ue = float(u @ e)
        out = u + ue * ((math.cos(theta) - 1.0) * e - math.sin(theta) * x)
        return out - (out @ y) * y

    def _curvature(self, x, u, v, w):
        return (v @ w) * u - (u @ w) * v

    def _nabla_curvature(self, x, direction, u, v, w):
        # constant-curvature space: the curvature tensor is covariantly constant
        return np.zeros_like(u)

    def _inner(self, x, u, v):
        return float(u @ v)

    def _tangent_basis(self, x):
        return null_space(x[None, :])

    def random_point(self, rng):
        x = rng.standard_normal(self.ambient_dim)
        return Point(x / np.linalg.norm(x), self.name)

    def geodesic_symmetry(self, m, p):
        # point reflection through m extends past the cut locus of the log map
        self._check_point(m)
        self._check_point(p)
        return Point(2.0 * float(m.coords @ p.coords) * m.coords - p.coords,
                     self.name)


# ---------------------------------------------------------------------------
# Hyperbolic space (hyperboloid model)
# ---------------------------------------------------------------------------

def _mink(a, b) -> float:
    return float(a[1:] @ b[1:] - a[0] * b[0])


class Hyperbolic(ConnectionSpace):
    """Hyperbolic n-space on the upper hyperboloid <x, x> = -1, x0 > 0.

    The hyperboloid model keeps exp/log closed forms numerically stable near
    the base point (log uses asinh of the tangential Minkowski norm, which has
    no cancellation for small distances).  Curvature is constant -1; there is
    no cut locus.
    """

    locally_symmetric = True

    def __init__(self, n: int, tolerances: ToleranceConfig | None = None):
        super().__init__(tolerances)
        self.dim = n
        self.ambient_dim = n + 1
        self.name = f"hyperbolic-{n}"
        self.validity_radius = 2.0

    def membership_residual(self, p):
        x = p.coords
        if x[0] <= 0.0:
            return math.inf
        return abs(_mink(x, x) + 1.0)

    def tangency_residual(self, v):
        return abs(_mink(v.base.coords, v.components))

    def _exp(self, x, v):
        theta = math.sqrt(max(_mink(v, v), 0.0))
        if theta == 0.0:
            return x.copy()
        y = math.cosh(theta) * x + (math.sinh(theta) / theta) * v
        return y / math.sqrt(-_mink(y, y))

    def _log(self, x, y):
        c = -_mink(x, y)
        u = y - c * x
        nr = math.sqrt(max(_mink(u, u), 0.0))
        if nr == 0.0:
            return np.zeros_like(x)
        return (math.asinh(nr) / nr) * u

    def _transport(self, x, u, y):
        w = self._log(x, y)
        theta = math.sqrt(max(_mink(w, w), 0.0))
        if theta == 0.0:
            return u.copy()
        e = w / theta
        ue = _mink(u, e)
        out = u + ue * ((math.cosh(theta) - 1.0) * e + math.sinh(theta) * x)
        return out + _mink(y, out) * y

    def _curvature(self, x, u, v, w):
        return -(_mink(v, w) * u - _mink(u, w) * v)

    def _nabla_curvature(self, x, direction, u, v, w):
        return np.zeros_like(u)

    def _inner(self, x, u, v):
        return _mink(u, v)

    def _tangent_basis(self, x):
        basis = []
        for i in range(self.ambient_dim):
            cand = np.zeros(self.ambient_dim)
            cand[i] = 1.0
            cand = cand + _mink(x, cand) * x  # project onto the tangent space
            for b in basis:
                cand = cand - _mink(b, cand) * b
            nr = math.sqrt(max(_mink(cand, cand), 0.0))
            if nr > 1e-9:
                basis.append(cand / nr)
            if len(basis) == self.dim:
                break
        return np.column_stack(basis)

    def random_point(self, rng):
        y = 0.5 * rng.standard_normal(self.dim)
        x = np.concatenate([[math.sqrt(1.0 + float(y @ y))], y])
        return Point(x, self.name)

    def geodesic_symmetry(self, m, p):
        self._check_point(m)
        self._check_point(p)
        x = -p.coords - 2.0 * _mink(m.coords, p.coords) * m.coords
        return Point(x, self.name)


# ---------------------------------------------------------------------------
# SPD matrices with the affine-invariant connection
# ---------------------------------------------------------------------------

def _sym(m):
    return 0.5 * (m + m.T)


def _eigh_spd(m, what="matrix"):
    w, vecs = np.linalg.eigh(_sym(m))
    if w.min() <= 0.0:
        raise NotSPD(f"{what} has a non-positive eigenvalue ({w.min():.3e})")
    return w, vecs


def _sqrt_pair(p):
    w, vecs = _eigh_spd(p, "base point")
    s = np.sqrt(w)
    return (vecs * s) @ vecs.T, (vecs / s) @ vecs.T


def _expm_sym(s):
    w, vecs = np.linalg.eigh(_sym(s))
    return (vecs * np.exp(w)) @ vecs.T


def _logm_spd(p, what="matrix"):
    w, vecs = _eigh_spd(p, what)
    return (vecs * np.log(w)) @ vecs.T


class SPD(ConnectionSpace):
    """Symmetric positive-definite n x n matrices, affine-invariant metric.

    Points and tangent vectors are stored as flattened n x n arrays; tangent
    vectors are symmetric matrices.  exp/log conjugate the matrix exponential
    and logarithm by P^{+-1/2}; transport P -> Q multiplies by the square
    root of Q P^{-1} on both sides.  The space is a Hadamard manifold: no cut
    locus, infinite injectivity radius.
    """

    locally_symmetric = True

    def __init__(self, n: int, tolerances: ToleranceConfig | None = None):
        super().__init__(tolerances)
        self.n = n
        self.dim = n * (n + 1) // 2
        self.ambient_dim = n * n
        self.name = f"spd-{n}"
        self.validity_radius = 2.0

    def _mat(self, x):
        return x.reshape(self.n, self.n)

    def membership_residual(self, p):
        m = self._mat(p.coords)
        res = float(np.linalg.norm(m - m.T))
        w = np.linalg.eigvalsh(_sym(m))
        return res + max(0.0, -float(w.min()))

    def tangency_residual(self, v):
        m = self._mat(v.components)
        return float(np.linalg.norm(m - m.T))

    def _exp(self, x, v):
        p, V = self._mat(x), self._mat(v)
        ps, pis = _sqrt_pair(p)
        inner = _expm_sym(pis @ V @ pis)
        return _sym(ps @ inner @ ps).ravel()

    def _log(self, x, y):
        p, q = self._mat(x), self._mat(y)
        ps, pis = _sqrt_pair(p)
        inner = _logm_spd(pis @ q @ pis, "target point")
        return _sym(ps @ inner @ ps).ravel()

    def _transport(self, x, u, y):
        p, q, U = self._mat(x), self._mat(y), self._mat(u)
        ps, pis = _sqrt_pair(p)
        delta = _logm_spd(pis @ q @ pis, "target point")
        e = ps @ _expm_sym(0.5 * delta) @ pis
        return _sym(e @ U @ e.T).ravel()

    def _curvature(self, x, u, v, w):
        ps, pis = _sqrt_pair(self._mat(x))
        a = pis @ self._mat(u) @ pis
        b = pis @ self._mat(v) @ pis
        c = pis @ self._mat(w) @ pis
        ab = a @ b - b @ a
        br = ab @ c - c @ ab
        return (ps @ (-0.25 * br) @ ps).ravel()

    def _nabla_curvature(self, x, direction, u, v, w):
        return np.zeros_like(u)

    def _inner(self, x, u, v):
        p = self._mat(x)
        a = np.linalg.solve(p, self._mat(u))
        b = np.linalg.solve(p, self._mat(v))
        return float(np.trace(a @ b))

    def _tangent_basis(self, x):
        ps, _ = _sqrt_pair(self._mat(x))
        cols = []
        for i in range(self.n):
            for j in range(i, self.n):
                f = np.zeros((self.n, self.n))
                if i == j:
                    f[i, i] = 1.0
                else:
                    f[i, j] = f[j, i] = 1.0 / math.sqrt(2.0)
                cols.append((ps @ f @ ps).ravel())
        return np.column_stack(cols)

    def random_point(self, rng):
        s = 0.5 * _sym(rng.standard_normal((self.n, self.n)))
        return Point(_expm_sym(s).ravel(), self.name)

    def geodesic_symmetry(self, m, p):
        self._check_point(m)
        self._check_point(p)
        mm, pm = self._mat(m.coords), self._mat(p.coords)
        _eigh_spd(pm, "point")
        out = mm @ np.linalg.solve(pm, mm)
        return Point(_sym(out).ravel(), self.name)


# ---------------------------------------------------------------------------
# SO(3) with the symmetric Cartan-Schouten connection
# ---------------------------------------------------------------------------

def _hat(w):
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def _vee(m):
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def _rodrigues(w):
    theta = float(np.linalg.norm(w))
    k = _hat(w)
    if theta < 1e-8:
        a = 1.0 - theta * theta / 6.0
        b = 0.5 - theta * theta / 24.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * k + b * (k @ k)


_BRANCH_TOL = 1e-6


def _rotation_log(r):
    """Rotation vector of r; raises LogBranch within 1e-6 of angle pi."""
    a = _vee(r - r.T) / 2.0  # sin(theta) * axis
    s = float(np.linalg.norm(a))
    c = 0.5 * (float(np.trace(r)) - 1.0)
    theta = math.atan2(s, c)
    if theta > math.pi - _BRANCH_TOL:
        raise LogBranch("rotation angle at the cut locus (pi)")
    if theta < 1e-8:
        return a * (1.0 + theta * theta / 6.0)
    return (theta / s) * a


class RotationGroup(ConnectionSpace):
    """SO(3) with the symmetric Cartan-Schouten connection.

    Points are rotation matrices (flattened, 9 entries); tangent vectors at R
    are ambient matrices R @ Omega with Omega skew.  Geodesics through R are
    translated one-parameter subgroups R expm(t Omega); the geodesic symmetry
    is s_g(h) = g h^{-1} g, and transport along the geodesic from R to
    S = R expm(X) conjugates the body components by expm(X/2) on both sides.
    The bi-invariant metric <U, V> = tr(U^T V) / 2 makes geodesic distance
    equal the rotation angle, so the injectivity radius is pi.
    """

    locally_symmetric = True

    def __init__(self, tolerances: ToleranceConfig | None = None):
        super().__init__(tolerances)
        self.dim = 3
        self.ambient_dim = 9
        self.name = "so3"
        self.injectivity_radius = math.pi
        self.validity_radius = math.pi

    def _mat(self, x):
        return x.reshape(3, 3)

    def membership_residual(self, p):
        r = self._mat(p.coords)
        return float(np.linalg.norm(r.T @ r - np.eye(3))) + abs(
            float(np.linalg.det(r)) - 1.0)

    def tangency_residual(self, v):
        body = self._mat(v.base.coords).T @ self._mat(v.components)
        return float(np.linalg.norm(body + body.T)) / 2.0

    def _body(self, x, v):
        """Skew body components R^T V of a tangent matrix at R."""
        a = self._mat(x).T @ self._mat(v)
        return 0.5 * (a - a.T)

    def _exp(self, x, v):
        r = self._mat(x)
        return (r @ _rodrigues(_vee(self._body(x, v)))).ravel()

    def _log(self, x, y):
        r, s = self._mat(x), self._mat(y)
        w = _rotation_log(r.T @ s)
        return (r @ _hat(w)).ravel()

    def _transport(self, x, u, y):
        r, s = self._mat(x), self._mat(y)
        w = _rotation_log(r.T @ s)
        half = _rodrigues(0.5 * w)
        return (r @ half @ self._body(x, u) @ half).ravel()

    def _curvature(self, x, u, v, w):
        r = self._mat(x)
        a, b, c = self._body(x, u), self._body(x, v), self._body(x, w)
        ab = a @ b - b @ a
        br = ab @ c - c @ ab
        return (r @ (-0.25 * br)).ravel()

    def _nabla_curvature(self, x, direction, u, v, w):
        return np.zeros_like(u)

    def _inner(self, x, u, v):
        return 0.5 * float(np.tensordot(self._mat(u), self._mat(v)))

    def _tangent_basis(self, x):
        r = self._mat(x)
        cols = [(r @ _hat(e)).ravel() for e in np.eye(3)]
        return np.column_stack(cols)

    def random_point(self, rng):
        a = rng.standard_normal((3, 3))
        q, rr = np.linalg.qr(a)
        q = q * np.sign(np.diag(rr))
        if np.linalg.det(q) < 0.0:
            q[:, [0, 1]] = q[:, [1, 0]]
        return Point(q.ravel(), self.name)

    def geodesic_symmetry(self, m, p):
        self._check_point(m)
        self._check_point(p)
        g, h = self._mat(m.coords), self._mat(p.coords)
        return Point((g @ h.T @ g).ravel(), self.name)


# ---------------------------------------------------------------------------
# Bump metric: the non-symmetric test bed
# ---------------------------------------------------------------------------

class BumpMetric2D(ChartSpace):
    """Conformal chart metric g = exp(2 f) (dx^2 + dy^2) with f = beta x^2.

    Gauss curvature K = -exp(-2f) Laplacian(f) = -2 beta exp(-2 beta x^2) is
    non-constant for beta != 0, so the covariant derivative of the curvature
    does not vanish: this is the space on which ladder schemes show their
    genuine truncation error.  Working box |x|, |y| <= 1.
    """

    def __init__(self, beta: float = 1.0,
                 tolerances: ToleranceConfig | None = None,
                 solver: ODESolverConfig | None = None,
                 shooting: ShootingConfig | None = None):
        self.beta = float(beta)
        beta_ = self.beta

        def grad_f(x):
            return np.array([2.0 * beta_ * x[0], 0.0])

        def metric(x):
            return math.exp(2.0 * beta_ * x[0] * x[0]) * np.eye(2)

        conn = ChartConnection(
            dim=2,
            christoffel=conformal_christoffel(grad_f),
            chart_bounds=(np.array([-2.0, -2.0]), np.array([2.0, 2.0])),
        )
        super().__init__(
            "bump2d", conn, metric=metric, tolerances=tolerances,
            solver=solver, shooting=shooting,
            anchor=np.array([0.3, 0.1]), sample_halfwidth=0.5,
            validity_radius=0.5, locally_symmetric=(beta_ == 0.0),
        )
        self.injectivity_radius = math.nan if beta_ != 0.0 else math.inf

    def gauss_curvature(self, x) -> float:
        """Closed-form K(x) = -2 beta exp(-2 beta x^2) for cross-checks."""
        x = np.asarray(x, dtype=float)
        return -2.0 * self.beta * math.exp(-2.0 * self.beta * x[0] * x[0])


# ---------------------------------------------------------------------------
# Registries
# ---------------------------------------------------------------------------

def euclidean_ops(n, tolerances=None):
    return Euclidean(n, tolerances)


def sphere_ops(n, tolerances=None):
    if n < 1:
        raise ValueError("sphere dimension must be at least 1")
    return Sphere(n, tolerances)


def hyperbolic_ops(n, tolerances=None):
    if n < 1:
        raise ValueError("hyperbolic dimension must be at least 1")
    return Hyperbolic(n, tolerances)


def spd_ops(n, tolerances=None):
    if n < 2:
        raise ValueError("SPD dimension must be at least 2")
    return SPD(n, tolerances)


def lie_group_ops(tolerances=None):
    return RotationGroup(tolerances)


def bump_metric_ops(beta=1.0, tolerances=None, solver=None, shooting=None):
    return BumpMetric2D(beta, tolerances, solver, shooting)


_FAMILIES = {
    "euclidean": euclidean_ops,
    "sphere": sphere_ops,
    "hyperbolic": hyperbolic_ops,
    "spd": spd_ops,
}


def registry_names() -> tuple[str, ...]:
    return ("euclidean-n", "sphere-n", "hyperbolic-n", "spd-n", "so3", "bump2d")


def make_space(name: str, tolerances: ToleranceConfig | None = None,
               solver: ODESolverConfig | None = None) -> ConnectionSpace:
    """Build a registered manifold from its name, e.g. "sphere-2"."""
    if name == "so3":
        return lie_group_ops(tolerances)
    if name == "bump2d":
        return bump_metric_ops(1.0, tolerances=tolerances, solver=solver)
    family, sep, num = name.rpartition("-")
    if sep and family in _FAMILIES:
        try:
            n = int(num)
        except ValueError:
            raise ValueError(f"bad dimension in manifold name {name!r}")
        return _FAMILIES[family](n, tolerances)
    raise ValueError(
        f"unknown manifold {name!r}; expected one of {registry_names()}")


# -- chart registry: numerical realizations of the fleet on charts -----------

def _stereographic_sphere_chart():
    # plane chart of the unit 2-sphere, projection from the north pole;
    # pullback metric 4 (dx^2 + dy^2) / (1 + r^2)^2
    def grad_f(x):
        r2 = float(x @ x)
        return -2.0 * x / (1.0 + r2)

    return ChartConnection(dim=2, christoffel=conformal_christoffel(grad_f))


def _poincare_ball_chart():
    # unit-disc chart of the hyperbolic plane, metric 4 (dx^2+dy^2)/(1-r^2)^2
    def grad_f(x):
        r2 = float(x @ x)
        return 2.0 * x / (1.0 - r2)

    return ChartConnection(
        dim=2, christoffel=conformal_christoffel(grad_f),
        chart_bounds=(np.array([-0.999, -0.999]), np.array([0.999, 0.999])),
    )


def _spd2_entry_chart():
    # coordinates (p11, p12, p22); the affine-invariant geodesic equation
    # P'' = P' P^{-1} P' gives G(U, V) = -(U P^{-1} V + V P^{-1} U) / 2
    basis = [np.array([[1.0, 0.0], [0.0, 0.0]]),
             np.array([[0.0, 1.0], [1.0, 0.0]]),
             np.array([[0.0, 0.0], [0.0, 1.0]])]

    def christoffel(x):
        p = np.array([[x[0], x[1]], [x[1], x[2]]])
        pinv = np.linalg.inv(p)
        g = np.empty((3, 3, 3))
        for i, ei in enumerate(basis):
            for j, ej in enumerate(basis):
                m = -0.5 * (ei @ pinv @ ej + ej @ pinv @ ei)
                g[:, i, j] = (m[0, 0], m[0, 1], m[1, 1])
        return g

    return ChartConnection(dim=3, christoffel=christoffel)


def _so3_rotation_vector_chart():
    # exponential coordinates; metric pulled back from the bi-invariant one,
    # g(theta) = J_r(theta)^T J_r(theta) with J_r the right Jacobian of SO(3)
    def right_jacobian(w):
        theta = float(np.linalg.norm(w))
        k = _hat(w)
        if theta < 1e-6:
            return np.eye(3) - 0.5 * k + (k @ k) / 6.0
        a = (1.0 - math.cos(theta)) / (theta * theta)
        b = (theta - math.sin(theta)) / (theta ** 3)
        return np.eye(3) - a * k + b * (k @ k)

    def metric(w):
        j = right_jacobian(np.asarray(w, dtype=float))
        return j.T @ j

    return ChartConnection(
        dim=3, christoffel=christoffels_from_metric(metric),
        chart_bounds=(np.full(3, -2.5), np.full(3, 2.5)),
    ), metric, right_jacobian


def make_chart(name: str):
    """Built-in ChartConnection instances for cross-validation and the CLI.

    Names: "flat-n" (zero symbols), "bump2d", "sphere2-stereographic",
    "hyperbolic2-ball", "spd2-entries", "so3-rotvec".
    """
    if name == "bump2d":
        return BumpMetric2D().conn
    if name == "sphere2-stereographic":
        return _stereographic_sphere_chart()
    if name == "hyperbolic2-ball":
        return _poincare_ball_chart()
    if name == "spd2-entries":
        return _spd2_entry_chart()
    if name == "so3-rotvec":
        return _so3_rotation_vector_chart()[0]
    family, sep, num = name.rpartition("-")
    if sep and family == "flat":
        n = int(num)
        return ChartConnection(dim=n, christoffel=lambda x: np.zeros((n, n, n)))
    raise ValueError(f"unknown chart {name!r}")
