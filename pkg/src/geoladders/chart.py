"""Numerical connection engine driven by Christoffel symbols.

Given a chart and a callable producing the symbols G^k_ij at a point, this
module integrates the geodesic equation, inverts it by shooting, solves the
parallel-transport ODE along geodesics, and assembles the curvature tensor
and its covariant derivative from central finite differences.

``ChartSpace`` adapts the engine to the ``ConnectionSpace`` contract so
chart-defined manifolds compose with the ladder schemes and the analysis
tools exactly like the closed-form model manifolds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .core import (
    ConnectionSpace,
    DomainEscape,
    GeodesicSegment,
    MaxStepsExceeded,
    NoConvergence,
    Point,
    TangentVector,
    ToleranceConfig,
    Unsupported,
)

__all__ = [
    "ChartConnection",
    "ODESolverConfig",
    "ShootingConfig",
    "ChartSpace",
    "geodesic_flow",
    "log_shooting",
    "transport_ode",
    "curvature_components",
    "nabla_curvature_components",
    "christoffels_from_metric",
    "conformal_christoffel",
]

_EPS = np.finfo(float).eps
# optimum for first derivatives of smooth functions by central differences
_FD_STEP = _EPS ** (1.0 / 3.0)


@dataclass(frozen=True)
class ODESolverConfig:
    """Integrator selection for geodesic and transport ODEs.

    ``adaptive`` uses an embedded Runge-Kutta 4(5) pair with local error
    control; ``rk4`` is the classical fixed-step scheme (step = initial_step)
    for bit-reproducible sweeps.
    """

    method: str = "adaptive"
    initial_step: float = 1.0 / 256.0
    rel_tol: float = 1e-12
    abs_tol: float = 1e-12
    max_steps: int = 100_000

    def __post_init__(self):
        if self.method not in ("adaptive", "rk4"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.initial_step <= 0.0:
            raise ValueError("initial_step must be positive")


@dataclass(frozen=True)
class ShootingConfig:
    """Damped-Newton settings for the boundary-value geodesic solve."""

    max_iters: int = 100
    residual_tol: float = 1e-11
    damping: float = 1.0
    jacobian_fd_step: float = 1e-5

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")


@dataclass(frozen=True)
class ChartConnection:
    """A torsion-free affine connection defined numerically on a chart.

    ``christoffel(x)`` returns the array G[k, i, j] = G^k_ij at chart point x.
    Symbols are symmetrized in (i, j) on every query; asymmetry beyond 1e-12
    triggers a warning since it would mean a connection with torsion.
    """

    dim: int
    christoffel: Callable[[np.ndarray], np.ndarray]
    chart_bounds: tuple | None = None  # (lo, hi) arrays, inclusive box

    def gamma(self, x: np.ndarray) -> np.ndarray:
        g = np.asarray(self.christoffel(x), dtype=float)
        if g.shape != (self.dim, self.dim, self.dim):
            raise ValueError(
                f"christoffel returned shape {g.shape}, expected "
                f"{(self.dim, self.dim, self.dim)}"
            )
        gt = np.swapaxes(g, 1, 2)
        asym = float(np.max(np.abs(g - gt))) if g.size else 0.0
        if asym > 1e-12:
            warnings.warn(
                f"christoffel symbols asymmetric by {asym:.3e}; symmetrizing "
                "(torsion is not supported)",
                RuntimeWarning,
                stacklevel=2,
            )
        return 0.5 * (g + gt)

    def in_bounds(self, x: np.ndarray) -> bool:
        if self.chart_bounds is None:
            return True
        lo, hi = self.chart_bounds
        return bool(np.all(x >= lo) and np.all(x <= hi))


def _check_bounds(conn: ChartConnection, positions: np.ndarray):
    """positions: (dim, n) array of visited chart points."""
    if conn.chart_bounds is None:
        return
    lo, hi = conn.chart_bounds
    below = positions < np.asarray(lo)[:, None]
    above = positions > np.asarray(hi)[:, None]
    if below.any() or above.any():
        raise DomainEscape("trajectory left the chart bounds")


def _integrate(conn: ChartConnection, rhs, z0: np.ndarray, t: float,
               solver: ODESolverConfig) -> np.ndarray:
    if t == 0.0:
        return z0.copy()
    if t < 0.0:
        raise ValueError("integration time must be non-negative")
    d = conn.dim
    if solver.method == "rk4":
        n = int(math.ceil(t / solver.initial_step))
        if n > solver.max_steps:
            raise MaxStepsExceeded(
                f"{n} fixed steps exceed the budget of {solver.max_steps}"
            )
        h = t / n
        z = z0.copy()
        for _ in range(n):
            k1 = rhs(0.0, z)
            k2 = rhs(0.0, z + 0.5 * h * k1)
            k3 = rhs(0.0, z + 0.5 * h * k2)
            k4 = rhs(0.0, z + h * k3)
            z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not conn.in_bounds(z[:d]):
                raise DomainEscape("trajectory left the chart bounds")
        return z
    sol = solve_ivp(rhs, (0.0, t), z0, method="RK45",
                    rtol=solver.rel_tol, atol=solver.abs_tol)
    if not sol.success:
        raise MaxStepsExceeded(f"adaptive integrator failed: {sol.message}")
    if sol.t.size - 1 > solver.max_steps:
        raise MaxStepsExceeded(
            f"{sol.t.size - 1} adaptive steps exceed the budget of "
            f"{solver.max_steps}")
    _check_bounds(conn, sol.y[:d])
    return sol.y[:, -1]


def geodesic_flow(conn: ChartConnection, x, v, t: float = 1.0,
                  solver: ODESolverConfig | None = None):
    """Integrate the geodesic equation x'' + G(x)(x', x') = 0.

    Returns the (position, velocity) pair at time t.
    """
    solver = solver or ODESolverConfig()
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    d = conn.dim
    if not conn.in_bounds(x):
        raise DomainEscape("initial point outside the chart bounds")

    def rhs(_, z):
        pos, vel = z[:d], z[d:]
        gam = conn.gamma(pos)
        acc = -np.einsum("kij,i,j->k", gam, vel, vel)
        return np.concatenate([vel, acc])

    z = _integrate(conn, rhs, np.concatenate([x, v]), t, solver)
    return z[:d], z[d:]


def log_shooting(conn: ChartConnection, x, y,
                 cfg: ShootingConfig | None = None,
                 solver: ODESolverConfig | None = None):
    """Solve exp_x(v) = y for v by damped Newton on the endpoint residual.

    The initial guess is the chart difference y - x, which converges inside
    convex normal neighborhoods.  Returns (v, iterations); raises
    NoConvergence with the final residual attached otherwise.
    """
    cfg = cfg or ShootingConfig()
    solver = solver or ODESolverConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = conn.dim

    def endpoint(vel):
        # a trial velocity that stalls the integrator or escapes the chart is
        # a shooting failure, not silent garbage
        try:
            return geodesic_flow(conn, x, vel, 1.0, solver)[0]
        except (MaxStepsExceeded, DomainEscape) as err:
            raise NoConvergence(f"shooting trial failed: {err}") from err

    v = y - x
    res = endpoint(v) - y
    rnorm = float(np.linalg.norm(res))
    for it in range(1, cfg.max_iters + 1):
        if rnorm <= cfg.residual_tol:
            return v, it - 1
        jac = np.empty((d, d))
        h = cfg.jacobian_fd_step * max(1.0, float(np.linalg.norm(v)))
        for k in range(d):
            dv = np.zeros(d)
            dv[k] = h
            jac[:, k] = (endpoint(v + dv) - endpoint(v - dv)) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError:
            raise NoConvergence("singular shooting Jacobian", residual=rnorm)
        alpha = cfg.damping
        for _ in range(5):
            v_try = v - alpha * step
            res_try = endpoint(v_try) - y
            r_try = float(np.linalg.norm(res_try))
            if r_try < rnorm:
                break
            alpha *= 0.5
        v, res, rnorm = v_try, res_try, r_try
    if rnorm <= cfg.residual_tol:
        return v, cfg.max_iters
    raise NoConvergence(
        f"shooting stalled after {cfg.max_iters} iterations "
        f"(residual {rnorm:.3e})",
        residual=rnorm,
    )


def transport_ode(conn: ChartConnection, u, x, v=None, t: float = 1.0,
                  solver: ODESolverConfig | None = None):
    """Transport u along a geodesic: u' + G(x)(x', u) = 0.

    The carrier may be given either as a ``GeodesicSegment`` (as produced by
    the flow or the shooting solver) or as a start point plus initial
    velocity; the transport is integrated jointly with the geodesic so the
    curve and the vector stay consistent.  Returns
    (u_t, position_t, velocity_t).
    """
    solver = solver or ODESolverConfig()
    if isinstance(x, GeodesicSegment):
        v = x.initial_velocity.components
        x = x.start.coords
    elif v is None:
        raise ValueError("transport_ode needs a GeodesicSegment or (x, v)")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    d = conn.dim

    def rhs(_, z):
        pos, vel, vec = z[:d], z[d:2 * d], z[2 * d:]
        gam = conn.gamma(pos)
        acc = -np.einsum("kij,i,j->k", gam, vel, vel)
        du = -np.einsum("kij,i,j->k", gam, vel, vec)
        return np.concatenate([vel, acc, du])

    z = _integrate(conn, rhs, np.concatenate([x, v, u]), t, solver)
    return z[2 * d:], z[:d], z[d:2 * d]


# ---------------------------------------------------------------------------
# Curvature from finite differences
# ---------------------------------------------------------------------------

def _fd_gamma_grad(conn: ChartConnection, x: np.ndarray, h: float) -> np.ndarray:
    """dG[m, k, i, j] = d_m G^k_ij by central differences."""
    d = conn.dim
    out = np.empty((d, d, d, d))
    for m in range(d):
        dx = np.zeros(d)
        dx[m] = h
        if not (conn.in_bounds(x + dx) and conn.in_bounds(x - dx)):
            raise DomainEscape("finite-difference stencil left the chart bounds")
        out[m] = (conn.gamma(x + dx) - conn.gamma(x - dx)) / (2.0 * h)
    return out


def curvature_components(conn: ChartConnection, x, fd_step: float | None = None
                         ) -> np.ndarray:
    """Curvature tensor R[l, i, j, k] = R^l_ijk at chart point x.

    R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik, with the
    Christoffel derivatives taken by central differences.  The result is
    antisymmetrized in (i, j), which the exact tensor satisfies, so the skew
    symmetry holds to the last bit.
    """
    x = np.asarray(x, dtype=float)
    h = fd_step if fd_step is not None else _FD_STEP * max(1.0, float(np.max(np.abs(x))))
    dg = _fd_gamma_grad(conn, x, h)
    g = conn.gamma(x)
    r = (np.einsum("iljk->lijk", dg)
         - np.einsum("jlik->lijk", dg)
         + np.einsum("lim,mjk->lijk", g, g)
         - np.einsum("ljm,mik->lijk", g, g))
    return 0.5 * (r - np.einsum("ljik->lijk", r))


def nabla_curvature_components(conn: ChartConnection, x,
                               fd_step: float | None = None,
                               curvature_fd_step: float | None = None
                               ) -> np.ndarray:
    """Covariant derivative DR[m, l, i, j, k] = (nabla_m R)^l_ijk at x.

    Assembled as d_m R^l_ijk plus one Christoffel correction per tensor index:
    +G^l_ma R^a_ijk for the upper slot and -G^a_m* R...a... for each of the
    three lower slots.  The outer finite-difference step is wider than the
    one inside R so the nested differencing stays above the noise of the
    inner stencil.
    """
    x = np.asarray(x, dtype=float)
    scale = max(1.0, float(np.max(np.abs(x))))
    h = fd_step if fd_step is not None else 5e-4 * scale
    d = conn.dim
    dr = np.empty((d, d, d, d, d))
    for m in range(d):
        dx = np.zeros(d)
        dx[m] = h
        rp = curvature_components(conn, x + dx, curvature_fd_step)
        rm = curvature_components(conn, x - dx, curvature_fd_step)
        dr[m] = (rp - rm) / (2.0 * h)
    g = conn.gamma(x)
    r = curvature_components(conn, x, curvature_fd_step)
    dr += np.einsum("lma,aijk->mlijk", g, r)
    dr -= np.einsum("ami,lajk->mlijk", g, r)
    dr -= np.einsum("amj,liak->mlijk", g, r)
    dr -= np.einsum("amk,lija->mlijk", g, r)
    return dr


# ---------------------------------------------------------------------------
# Christoffel builders
# ---------------------------------------------------------------------------

def conformal_christoffel(grad_f: Callable[[np.ndarray], np.ndarray]):
    """Symbols of a conformal metric g = exp(2 f) * euclidean.

    G^k_ij = f_i d_jk + f_j d_ik - f_k d_ij, needing only the gradient of f.
    """

    def christoffel(x):
        df = np.asarray(grad_f(np.asarray(x, dtype=float)), dtype=float)
        eye = np.eye(df.size)
        return (np.einsum("i,jk->kij", df, eye)
                + np.einsum("j,ik->kij", df, eye)
                - np.einsum("k,ij->kij", df, eye))

    return christoffel


def christoffels_from_metric(metric: Callable[[np.ndarray], np.ndarray],
                             fd_step: float | None = None):
    """Levi-Civita symbols of a chart metric, by central differences.

    G^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij).
    """

    def christoffel(x):
        x = np.asarray(x, dtype=float)
        d = x.size
        h = fd_step if fd_step is not None else _FD_STEP * max(1.0, float(np.max(np.abs(x))))
        dg = np.empty((d, d, d))
        for m in range(d):
            dx = np.zeros(d)
            dx[m] = h
            dg[m] = (np.asarray(metric(x + dx), dtype=float)
                     - np.asarray(metric(x - dx), dtype=float)) / (2.0 * h)
        ginv = np.linalg.inv(np.asarray(metric(x), dtype=float))
        # lower-index symbols: G_kij = 1/2 (d_i g_kj + d_j g_ki - d_k g_ij)
        lower = 0.5 * (np.einsum("ikj->kij", dg)
                       + np.einsum("jki->kij", dg)
                       - np.einsum("kij->kij", dg))
        return np.einsum("kl,lij->kij", ginv, lower)

    return christoffel


# ---------------------------------------------------------------------------
# ConnectionSpace adapter
# ---------------------------------------------------------------------------

class ChartSpace(ConnectionSpace):
    """A ConnectionSpace realized numerically from a ChartConnection.

    The log map is solved by shooting, the transport oracle is the transport
    ODE at the configured tolerances, and curvature callbacks contract the
    finite-difference tensors.
    """

    has_closed_form_transport = False

    def __init__(self, name: str, connection: ChartConnection,
                 metric: Callable[[np.ndarray], np.ndarray] | None = None,
                 tolerances: ToleranceConfig | None = None,
                 solver: ODESolverConfig | None = None,
                 shooting: ShootingConfig | None = None,
                 anchor=None,
                 sample_halfwidth: float = 0.5,
                 validity_radius: float = 0.5,
                 locally_symmetric: bool = False):
        super().__init__(tolerances)
        tol = self.tolerances
        self.name = name
        self.conn = connection
        self.dim = connection.dim
        self.ambient_dim = connection.dim
        self.metric = metric
        self.has_metric = metric is not None
        self.locally_symmetric = locally_symmetric
        self.injectivity_radius = math.nan  # unknown for a generic chart
        self.validity_radius = validity_radius
        self.solver = solver or ODESolverConfig(
            rel_tol=tol.ode_rel_tol, abs_tol=tol.ode_abs_tol)
        self.shooting = shooting or ShootingConfig(
            max_iters=tol.max_shooting_iters,
            residual_tol=max(10.0 * tol.ode_rel_tol, 1e-11),
        )
        #: canonical interior base point used by experiment sweeps
        self.anchor = (np.zeros(self.dim) if anchor is None
                       else np.asarray(anchor, dtype=float))
        self.sample_halfwidth = sample_halfwidth

    # -- kernels --------------------------------------------------------------

    def _exp(self, x, v):
        return geodesic_flow(self.conn, x, v, 1.0, self.solver)[0]

    def _log(self, x, y):
        return log_shooting(self.conn, x, y, self.shooting, self.solver)[0]

    def log_stats(self, p: Point, q: Point):
        self._check_point(p)
        self._check_point(q)
        if np.array_equal(p.coords, q.coords):
            return TangentVector(p, np.zeros(self.ambient_dim)), 0
        v, iters = log_shooting(self.conn, p.coords, q.coords,
                                self.shooting, self.solver)
        return TangentVector(p, v), iters

    def _transport(self, x, u, y):
        v = log_shooting(self.conn, x, y, self.shooting, self.solver)[0]
        return transport_ode(self.conn, u, x, v, 1.0, self.solver)[0]

    def _curvature(self, x, u, v, w):
        r = curvature_components(self.conn, x)
        return np.einsum("lijk,i,j,k->l", r, u, v, w)

    def _nabla_curvature(self, x, direction, u, v, w):
        dr = nabla_curvature_components(self.conn, x)
        return np.einsum("mlijk,m,i,j,k->l", dr, direction, u, v, w)

    def _inner(self, x, u, v):
        if self.metric is None:
            raise Unsupported(f"{self.name} has no metric")
        return float(u @ np.asarray(self.metric(x), dtype=float) @ v)

    def _tangent_basis(self, x):
        if self.metric is None:
            return np.eye(self.dim)
        g = np.asarray(self.metric(x), dtype=float)
        w, vecs = np.linalg.eigh(g)
        return vecs @ np.diag(1.0 / np.sqrt(w)) @ vecs.T

    # -- helpers ---------------------------------------------------------------

    def membership_residual(self, p: Point) -> float:
        return 0.0 if self.conn.in_bounds(p.coords) else math.inf

    def random_point(self, rng: np.random.Generator) -> Point:
        chart = rng.uniform(-self.sample_halfwidth, self.sample_halfwidth, self.dim)
        return Point(chart, self.name)

    def anchor_point(self) -> Point:
        return Point(self.anchor.copy(), self.name)
