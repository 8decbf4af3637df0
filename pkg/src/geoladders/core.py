"""Core data model for numerical geometry on affine connection spaces.

Points, tangent vectors and geodesic segments are thin wrappers around plain
float arrays.  ``ConnectionSpace`` is the contract every manifold in this
package implements: exponential and log maps, parallel transport along
geodesics, midpoints, geodesic symmetries, and (optionally) the curvature
tensor and its covariant derivative.  All operations are pure functions of
their inputs; spaces are immutable after construction and safe to share.
"""

from __future__ import annotations

import abc
import math
import numbers
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeometryError",
    "InvalidBase",
    "DomainEscape",
    "MaxStepsExceeded",
    "NoConvergence",
    "CutLocus",
    "LogBranch",
    "NotSPD",
    "Unsupported",
    "InsufficientData",
    "ConfigError",
    "ToleranceConfig",
    "Point",
    "TangentVector",
    "GeodesicSegment",
    "ConnectionSpace",
]


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class GeometryError(Exception):
    """Base class for numerical-geometry failures."""


class InvalidBase(GeometryError):
    """A tangent vector was used at a point other than its base."""


class DomainEscape(GeometryError):
    """An integration or finite-difference stencil left the chart."""


class MaxStepsExceeded(GeometryError):
    """The ODE integrator hit its step budget before reaching the end time."""


class NoConvergence(GeometryError):
    """Boundary-value geodesic solve failed; final residual attached."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CutLocus(GeometryError):
    """The log map was requested at or beyond the cut locus."""


class LogBranch(GeometryError):
    """Matrix log requested on the branch cut (rotation angle at pi)."""


class NotSPD(GeometryError):
    """An input matrix has a non-positive eigenvalue."""


class Unsupported(GeometryError):
    """The space does not provide the requested capability."""


class InsufficientData(GeometryError):
    """Not enough usable data points for a convergence fit."""


class ConfigError(GeometryError):
    """Invalid experiment configuration."""


# ---------------------------------------------------------------------------
# Tolerances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances shared across a space's operations.

    Defaults sit roughly two orders of magnitude above double-precision
    noise accumulated over ~1e3 arithmetic operations.
    """

    membership_tol: float = 1e-9
    log_tol: float = 1e-10
    exactness_tol: float = 1e-10
    ode_rel_tol: float = 1e-12
    ode_abs_tol: float = 1e-12
    max_shooting_iters: int = 100

    def __post_init__(self):
        for name in ("membership_tol", "log_tol", "exactness_tol",
                     "ode_rel_tol", "ode_abs_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_shooting_iters < 1:
            raise ValueError("max_shooting_iters must be at least 1")


# ---------------------------------------------------------------------------
# Points and tangent vectors
# ---------------------------------------------------------------------------

def _as_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    return arr


@dataclass(frozen=True, eq=False)
class Point:
    """A location on a manifold, in chart or embedding coordinates."""

    coords: np.ndarray
    space_id: str

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_float_array(self.coords))

    def __repr__(self):
        return f"Point({np.array2string(self.coords, precision=6)}, {self.space_id!r})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector: base point plus a component array of equal length."""

    base: Point
    components: np.ndarray

    def __post_init__(self):
        comps = _as_float_array(self.components)
        if comps.shape != self.base.coords.shape:
            raise InvalidBase(
                f"components of length {comps.size} do not match base of "
                f"length {self.base.coords.size}"
            )
        object.__setattr__(self, "components", comps)

    @property
    def component_norm(self) -> float:
        """Euclidean norm of the raw components (chart/embedding level)."""
        return float(np.linalg.norm(self.components))

    def _require_same_base(self, other: "TangentVector"):
        if self.base.space_id != other.base.space_id or not np.allclose(
            self.base.coords, other.base.coords, rtol=0.0, atol=1e-8
        ):
            raise InvalidBase("cannot combine vectors from different tangent spaces")

    def __add__(self, other):
        self._require_same_base(other)
        return TangentVector(self.base, self.components + other.components)

    def __sub__(self, other):
        self._require_same_base(other)
        return TangentVector(self.base, self.components - other.components)

    def __mul__(self, scalar):
        if not isinstance(scalar, numbers.Real):
            return NotImplemented
        return TangentVector(self.base, float(scalar) * self.components)

    __rmul__ = __mul__

    def __neg__(self):
        return TangentVector(self.base, -self.components)

    def __repr__(self):
        return (
            f"TangentVector({np.array2string(self.components, precision=6)}"
            f" at {np.array2string(self.base.coords, precision=6)})"
        )


@dataclass(frozen=True, eq=False)
class GeodesicSegment:
    """A geodesic encoded by its endpoints and the initial velocity.

    Consistency: ``exp(start, initial_velocity) == end`` within log tolerance.
    """

    start: Point
    end: Point
    initial_velocity: TangentVector


# ---------------------------------------------------------------------------
# The connection-space contract
# ---------------------------------------------------------------------------

class ConnectionSpace(abc.ABC):
    """A manifold with an affine connection (torsion-free).

    Subclasses implement the private kernels ``_exp``/``_log``/``_transport``
    on raw coordinate arrays; the public wrappers handle ``Point`` /
    ``TangentVector`` packing, base-point validation and degenerate inputs
    (``exp(p, 0) == p`` exactly, ``log(p, p) == 0`` without shooting).

    Capability flags (``has_metric``, ``has_curvature``, ...) are truthful:
    every flagged capability is backed by a working operation.
    """

    name: str = "abstract"
    dim: int = 0
    ambient_dim: int = 0
    has_metric: bool = True
    has_closed_form_transport: bool = True
    has_curvature: bool = True
    locally_symmetric: bool = False
    injectivity_radius: float = math.inf
    #: radius of the neighborhood in which exp/log round trips are supported
    validity_radius: float = math.inf

    def __init__(self, tolerances: ToleranceConfig | None = None):
        self.tolerances = tolerances if tolerances is not None else ToleranceConfig()

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"

    # -- kernels on raw arrays ---------------------------------------------

    @abc.abstractmethod
    def _exp(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def _log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        ...

    @abc.abstractmethod
    def _transport(self, x: np.ndarray, u: np.ndarray, y: np.ndarray) -> np.ndarray:
        ...

    def _inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
        raise Unsupported(f"{self.name} has no metric")

    def _curvature(self, x, u, v, w) -> np.ndarray:
        raise Unsupported(f"{self.name} has no curvature capability")

    def _nabla_curvature(self, x, direction, u, v, w) -> np.ndarray:
        raise Unsupported(f"{self.name} has no curvature-derivative capability")

    def _tangent_basis(self, x: np.ndarray) -> np.ndarray:
        raise Unsupported(f"{self.name} has no tangent basis helper")

    # -- validation helpers --------------------------------------------------

    def point(self, coords) -> Point:
        """Wrap raw coordinates as a Point owned by this space."""
        arr = _as_float_array(coords)
        if arr.size != self.ambient_dim:
            raise ValueError(
                f"{self.name} expects {self.ambient_dim} coordinates, got {arr.size}"
            )
        return Point(arr, self.name)

    def tangent(self, p: Point, components) -> TangentVector:
        self._check_point(p)
        return TangentVector(p, components)

    def _check_point(self, p: Point):
        if p.space_id != self.name:
            raise InvalidBase(f"point belongs to {p.space_id!r}, not {self.name!r}")
        if p.coords.size != self.ambient_dim:
            raise InvalidBase(
                f"point has {p.coords.size} coordinates, expected {self.ambient_dim}"
            )

    def _check_base(self, v: TangentVector, p: Point):
        self._check_point(v.base)
        if not np.allclose(v.base.coords, p.coords, rtol=0.0, atol=1e-8):
            raise InvalidBase("tangent vector is not based at the given point")

    def membership_residual(self, p: Point) -> float:
        """How far the point is from satisfying the space's membership constraint."""
        return 0.0

    def tangency_residual(self, v: TangentVector) -> float:
        """How far the vector is from the tangent space at its base."""
        return 0.0

    # -- geometry ------------------------------------------------------------

    def exp(self, p: Point, v: TangentVector) -> Point:
        """Geodesic endpoint at time 1 starting from p with velocity v."""
        self._check_point(p)
        self._check_base(v, p)
        if not v.components.any():
            return p
        return Point(self._exp(p.coords, v.components), self.name)

    def log(self, p: Point, q: Point) -> TangentVector:
        """Initial velocity of the geodesic from p reaching q at time 1."""
        self._check_point(p)
        self._check_point(q)
        if np.array_equal(p.coords, q.coords):
            return TangentVector(p, np.zeros(self.ambient_dim))
        return TangentVector(p, self._log(p.coords, q.coords))

    def log_stats(self, p: Point, q: Point) -> tuple[TangentVector, int]:
        """Log map plus an iteration count (0 for closed-form spaces)."""
        return self.log(p, q), 0

    def transport(self, u: TangentVector, q: Point) -> TangentVector:
        """Parallel transport of u along the geodesic from its base to q."""
        self._check_point(q)
        p = u.base
        self._check_point(p)
        if np.array_equal(p.coords, q.coords):
            return TangentVector(q, u.components.copy())
        return TangentVector(q, self._transport(p.coords, u.components, q.coords))

    def geodesic(self, p: Point, q: Point) -> GeodesicSegment:
        return GeodesicSegment(p, q, self.log(p, q))

    def midpoint(self, p: Point, q: Point) -> Point:
        """Point at parameter 1/2 on the geodesic [p, q] (exponential barycenter)."""
        return self.exp(p, 0.5 * self.log(p, q))

    def geodesic_symmetry(self, m: Point, p: Point) -> Point:
        """Reverse p through m along the connecting geodesic: exp_m(-log_m(p))."""
        return self.exp(m, -self.log(m, p))

    def curvature(self, p: Point, u: TangentVector, v: TangentVector,
                  w: TangentVector) -> TangentVector:
        """Curvature tensor R(u, v)w at p.

        Convention: R(u, v)w = nabla_u nabla_v w - nabla_v nabla_u w
        - nabla_[u,v] w, i.e. the component formula
        R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik.
        """
        if not self.has_curvature:
            raise Unsupported(f"{self.name} has no curvature capability")
        self._check_point(p)
        for vec in (u, v, w):
            self._check_base(vec, p)
        return TangentVector(
            p, self._curvature(p.coords, u.components, v.components, w.components)
        )

    def nabla_curvature(self, p: Point, direction: TangentVector,
                        u: TangentVector, v: TangentVector,
                        w: TangentVector) -> TangentVector:
        """Covariant derivative (nabla_direction R)(u, v)w at p."""
        if not self.has_curvature:
            raise Unsupported(f"{self.name} has no curvature capability")
        self._check_point(p)
        for vec in (direction, u, v, w):
            self._check_base(vec, p)
        return TangentVector(
            p,
            self._nabla_curvature(
                p.coords, direction.components, u.components,
                v.components, w.components,
            ),
        )

    # -- metric --------------------------------------------------------------

    def inner(self, u: TangentVector, v: TangentVector) -> float:
        if not self.has_metric:
            raise Unsupported(f"{self.name} has no metric")
        u._require_same_base(v)
        return self._inner(u.base.coords, u.components, v.components)

    def norm(self, u: TangentVector) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))

    def dist(self, p: Point, q: Point) -> float:
        return self.norm(self.log(p, q))

    # -- sampling helpers ------------------------------------------------------

    def tangent_basis(self, p: Point) -> np.ndarray:
        """Columns form a metric-orthonormal basis of the tangent space at p."""
        self._check_point(p)
        return self._tangent_basis(p.coords)

    def random_point(self, rng: np.random.Generator) -> Point:
        raise Unsupported(f"{self.name} has no point sampler")

    def random_direction(self, rng: np.random.Generator, p: Point) -> TangentVector:
        """Uniform unit-norm direction in the tangent space at p."""
        basis = self.tangent_basis(p)
        z = rng.standard_normal(basis.shape[1])
        z /= np.linalg.norm(z)
        return TangentVector(p, basis @ z)
