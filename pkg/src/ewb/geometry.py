"""Geodesic metric spaces used as decision sets.

Points are plain numpy arrays and a :class:`Space` knows how to interpret
them. Public methods validate their inputs; the underscore-prefixed methods
are batched over leading axes and skip validation, for use in inner loops.

Five spaces are provided:

========================  =====================  =====  =========
kind                      point                  p      kappa
========================  =====================  =====  =========
``euclidean``             vector in a ball       d      0
``sphere``                unit 3-vector in cap   2      1
``hyperbolic``            hyperboloid 3-vector   2      -1
``spd``                   k x k SPD matrix       k(k+1)/2  0
``quantile``              nondecreasing K-vector K      0
========================  =====================  =====  =========

The prior (reference measure) of each space is its normalized volume
measure on the bounded domain: uniform on the ball, area on the cap,
hyperbolic area on the disk, Lebesgue measure in log-matrix coordinates on
a box for SPD, and the uniform law on the monotone part of a box for
quantile vectors.
"""

import math

import numpy as np

from .exceptions import DomainError, GeodesicError
from .rng import as_generator

GEODESIC_RTOL = 1e-8
COMPARISON_ATOL = 1e-9


def _expand(t, point_ndim):
    t = np.asarray(t, dtype=float)
    return t.reshape(t.shape + (1,) * point_ndim)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise DomainError("geodesic parameter must lie in [0, 1]")
    return t


def _sinc(x):
    """sin(x)/x with a series branch near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0 + x**4 / 120.0, np.sin(safe) / safe)


def _sinhc(x):
    """sinh(x)/x with a series branch near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0 + x**4 / 120.0, np.sinh(safe) / safe)


class Space:
    """Base class for a bounded geodesic metric space with a prior.

    Attributes
    ----------
    kind : str
    p : float
        Dimension parameter used by the measure-contraction bounds.
    kappa : float
        Curvature bound claimed by the space (lower bound; for the flat and
        hyperbolic spaces it is also an upper bound).
    diameter : float
    params : dict
        Domain parameters (radius, cap angle, box size, ...).
    """

    kind = None
    point_shape = ()
    riemannian = False
    flat = False

    def __init__(self, p, kappa, diameter, params):
        self.p = float(p)
        self.kappa = float(kappa)
        self.diameter = float(diameter)
        self.params = dict(params)
        if not self.p > 0:
            raise DomainError("p must be positive")
        if self.kappa > 0:
            if self.p <= 1:
                raise DomainError("positive curvature requires p > 1")
            limit = math.pi * math.sqrt((self.p - 1.0) / self.kappa)
            if self.diameter > limit * (1.0 + 1e-12):
                raise DomainError(f"diameter {self.diameter} exceeds {limit} for kappa > 0")

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.kind, tuple(sorted(self.params.items())), self.p))

    # -- validation -----------------------------------------------------
    def _check_shape(self, x):
        x = np.asarray(x, dtype=float)
        k = len(self.point_shape)
        if x.shape[x.ndim - k:] != self.point_shape or x.ndim < k:
            raise TypeError(
                f"{self.kind} points have shape {self.point_shape}, got {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise DomainError("point has non-finite coordinates")
        return x

    def _check_manifold(self, x):
        """Raise DomainError if ``x`` violates the point invariants."""

    def validate(self, x):
        """Return ``x`` as a float array or raise TypeError/DomainError."""
        x = self._check_shape(x)
        self._check_manifold(x)
        return x

    def contains(self, x, tol=1e-9):
        """Whether (each of) ``x`` lies in the domain, batched."""
        raise NotImplementedError

    # -- metric ---------------------------------------------------------
    def _dist(self, x, y):
        raise NotImplementedError

    def _geodesic(self, x, y, t):
        raise NotImplementedError

    def _sample(self, n, rng):
        raise NotImplementedError

    def distance(self, x, y):
        return self._dist(self.validate(x), self.validate(y))

    def sq_dist(self, x, y):
        return self._dist(x, y) ** 2

    def geodesic(self, x, y, t):
        x = self.validate(x)
        y = self.validate(y)
        t = _check_t(t)
        self._check_geodesic_pair(x, y)
        return self._geodesic(x, y, t)

    def _check_geodesic_pair(self, x, y):
        pass

    def _endpoints(self, x, y, t, g):
        te = _expand(t, len(self.point_shape))
        x, y, g = np.broadcast_arrays(x, y, g)
        return np.where(te == 0.0, x, np.where(te == 1.0, y, g))

    def sample(self, n, seed=None):
        n = int(n)
        if n < 1:
            raise DomainError("sample size must be at least 1")
        return self._sample(n, as_generator(seed))

    def grid(self, n):
        """Roughly ``n`` points covering a two-dimensional domain."""
        raise NotImplementedError(f"{self.kind} does not provide a dense grid")

    # -- serialization --------------------------------------------------
    def to_dict(self):
        return {
            "kind": self.kind,
            "p": self.p,
            "kappa": self.kappa,
            "diameter": self.diameter,
            "params": dict(self.params),
        }


class FlatSpace(Space):
    """A space isometric to a convex subset of Euclidean space via a chart."""

    flat = True

    def to_flat(self, x):
        raise NotImplementedError

    def from_flat(self, v):
        raise NotImplementedError

    def _dist(self, x, y):
        return np.linalg.norm(self.to_flat(x) - self.to_flat(y), axis=-1)

    def _geodesic(self, x, y, t):
        te = np.asarray(t, dtype=float)[..., None]
        fx = self.to_flat(x)
        fy = self.to_flat(y)
        g = self.from_flat((1.0 - te) * fx + te * fy)
        return self._endpoints(x, y, t, g)


class EuclideanBall(FlatSpace):
    """Closed Euclidean ball of radius ``radius`` centred at the origin."""

    kind = "euclidean"

    def __init__(self, dim=2, radius=1.0, p=None):
        dim = int(dim)
        if dim < 1 or not radius > 0:
            raise DomainError("euclidean ball needs dim >= 1 and radius > 0")
        self.dim = dim
        self.radius = float(radius)
        self.point_shape = (dim,)
        p = dim if p is None else p
        if p < dim:
            raise DomainError("p must be at least the ambient dimension")
        super().__init__(p, 0.0, 2.0 * self.radius, {"dim": dim, "radius": self.radius})

    def to_flat(self, x):
        return np.asarray(x, dtype=float)

    def from_flat(self, v):
        return np.asarray(v, dtype=float)

    def contains(self, x, tol=1e-9):
        return np.linalg.norm(x, axis=-1) <= self.radius * (1.0 + tol)

    def _sample(self, n, rng):
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(n) ** (1.0 / self.dim)
        return g * r[:, None]

    def grid(self, n):
        if self.dim != 2:
            return super().grid(n)
        return _disk_grid(n, self.radius)

    def _sample_ball(self, x, R, n, rng):
        """Uniform draws from the ambient ball B(x, R) (not clipped to the
        space) and the ratio of its volume to the volume of the space."""
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = R * rng.random(n) ** (1.0 / self.dim)
        return np.asarray(x, dtype=float) + g * r[:, None], (R / self.radius) ** self.dim


class QuantileSpace(FlatSpace):
    """1-D probability measures as quantile vectors on a uniform grid.

    Entry ``i`` is the quantile function at ``(i + 1/2) / K``. The metric is
    the 2-Wasserstein distance, i.e. the root mean square difference of the
    quantile vectors. The domain is the set of nondecreasing vectors with
    entries in ``[low, high]``.
    """

    kind = "quantile"

    def __init__(self, K=16, low=0.0, high=1.0, p=None):
        K = int(K)
        if K < 1 or not high > low:
            raise DomainError("quantile space needs K >= 1 and high > low")
        self.K = K
        self.low = float(low)
        self.high = float(high)
        self.point_shape = (K,)
        p = K if p is None else p
        super().__init__(p, 0.0, self.high - self.low, {"K": K, "low": self.low, "high": self.high})

    def to_flat(self, x):
        return np.asarray(x, dtype=float) / math.sqrt(self.K)

    def from_flat(self, v):
        return np.asarray(v, dtype=float) * math.sqrt(self.K)

    def _check_manifold(self, x):
        if np.any(np.diff(x, axis=-1) < -1e-12):
            raise DomainError("quantile vectors must be nondecreasing")

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        span = (self.high - self.low) * tol
        mono = np.all(np.diff(x, axis=-1) >= -1e-12, axis=-1)
        box = np.all((x >= self.low - span) & (x <= self.high + span), axis=-1)
        return mono & box

    def _sample(self, n, rng):
        # sorted i.i.d. uniforms have exactly the law of box-uniform vectors
        # conditioned on monotonicity
        u = np.sort(rng.random((n, self.K)), axis=1)
        return self.low + (self.high - self.low) * u


def _sym_from_vech(v, k):
    iu = np.triu_indices(k)
    m = np.zeros(v.shape[:-1] + (k, k))
    scale = np.where(iu[0] == iu[1], 1.0, 1.0 / math.sqrt(2.0))
    m[..., iu[0], iu[1]] = v * scale
    m[..., iu[1], iu[0]] = v * scale
    return m


def _vech_from_sym(m, k):
    iu = np.triu_indices(k)
    scale = np.where(iu[0] == iu[1], 1.0, math.sqrt(2.0))
    return m[..., iu[0], iu[1]] * scale


def sym_logm(a):
    w, v = np.linalg.eigh(a)
    return (v * np.log(w)[..., None, :]) @ np.swapaxes(v, -1, -2)


def sym_expm(s):
    w, v = np.linalg.eigh(s)
    return (v * np.exp(w)[..., None, :]) @ np.swapaxes(v, -1, -2)


class SPDSpace(FlatSpace):
    """k x k symmetric positive-definite matrices, log-Euclidean metric.

    ``d(A, B) = ||log A - log B||_F``. The chart is the half-vectorized
    matrix logarithm with off-diagonal entries scaled by sqrt(2), which is a
    Frobenius isometry. The domain is the box ``[-scale, scale]^p`` in that
    chart.
    """

    kind = "spd"

    def __init__(self, k=2, scale=1.0):
        k = int(k)
        if k < 1 or not scale > 0:
            raise DomainError("spd space needs k >= 1 and scale > 0")
        self.k = k
        self.scale = float(scale)
        self.point_shape = (k, k)
        p = k * (k + 1) // 2
        super().__init__(p, 0.0, 2.0 * self.scale * math.sqrt(p), {"k": k, "scale": self.scale})

    def to_flat(self, x):
        return _vech_from_sym(sym_logm(np.asarray(x, dtype=float)), self.k)

    def from_flat(self, v):
        return sym_expm(_sym_from_vech(np.asarray(v, dtype=float), self.k))

    def _check_manifold(self, x):
        if np.max(np.abs(x - np.swapaxes(x, -1, -2)), initial=0.0) > 1e-10 * (1.0 + np.max(np.abs(x))):
            raise DomainError("spd points must be symmetric")
        if np.any(np.linalg.eigvalsh(x) <= 0.0):
            raise DomainError("spd points must be positive definite")

    def contains(self, x, tol=1e-9):
        v = self.to_flat(x)
        return np.all(np.abs(v) <= self.scale * (1.0 + tol), axis=-1)

    def _sample(self, n, rng):
        v = rng.uniform(-self.scale, self.scale, size=(n, int(self.p)))
        return self.from_flat(v)


class RiemannianSpace(Space):
    """A curved two-dimensional model space with closed-form Exp/Log maps."""

    riemannian = True
    point_shape = (3,)
    origin = None

    def _inner(self, u, v):
        raise NotImplementedError

    def norm(self, v):
        return np.sqrt(np.maximum(self._inner(v, v), 0.0))

    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def _geodesic(self, x, y, t):
        te = _expand(t, 1)
        g = self.exp(x, te * self.log(x, y))
        return self._endpoints(x, y, t, g)

    def _tangent_at_origin(self, a, b):
        raise NotImplementedError

    def grid(self, n):
        pts = _disk_grid(n, self._grid_radius())
        return self.exp(self.origin, self._tangent_at_origin(pts[:, 0], pts[:, 1]))


class SphereCap(RiemannianSpace):
    """Closed cap of angular radius ``angle`` < pi/2 around (0, 0, 1)."""

    kind = "sphere"
    origin = np.array([0.0, 0.0, 1.0])

    def __init__(self, angle=0.6):
        angle = float(angle)
        if not 0.0 < angle < math.pi / 2:
            raise DomainError("cap angle must lie in (0, pi/2)")
        self.angle = angle
        super().__init__(2.0, 1.0, 2.0 * angle, {"angle": angle})

    def _check_manifold(self, x):
        if np.any(np.abs(np.linalg.norm(x, axis=-1) - 1.0) > 1e-12):
            raise DomainError("sphere points must have unit norm")

    def contains(self, x, tol=1e-9):
        return self._dist(self.origin, x) <= self.angle * (1.0 + tol)

    def _check_geodesic_pair(self, x, y):
        if np.any(self._dist(x, y) > math.pi - 1e-9):
            raise GeodesicError("antipodal points have no unique geodesic")

    def _inner(self, u, v):
        return np.sum(u * v, axis=-1)

    def _dist(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        a = x - y
        b = x + y
        return 2.0 * np.arctan2(np.sqrt(np.sum(a * a, axis=-1)), np.sqrt(np.sum(b * b, axis=-1)))

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        theta = self._dist(x, y)
        u = y - self._inner(x, y)[..., None] * x
        return u / _sinc(theta)[..., None]

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        n = self.norm(v)
        out = np.cos(n)[..., None] * x + _sinc(n)[..., None] * v
        return out / np.linalg.norm(out, axis=-1, keepdims=True)

    def _sample(self, n, rng):
        c = 1.0 - rng.random(n) * (1.0 - math.cos(self.angle))
        s = np.sqrt(np.maximum(1.0 - c * c, 0.0))
        phi = rng.uniform(0.0, 2.0 * math.pi, n)
        return np.stack([s * np.cos(phi), s * np.sin(phi), c], axis=1)

    def _sample_ball(self, x, R, n, rng):
        """Uniform draws from the spherical cap B(x, R), R < pi, and the
        ratio of its area to the area of the space."""
        x = np.asarray(x, dtype=float)
        e = np.eye(3)[np.argmin(np.abs(x))]
        e1 = e - np.dot(e, x) * x
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(x, e1)
        c = 1.0 - rng.random(n) * (1.0 - math.cos(R))
        s = np.sqrt(np.maximum(1.0 - c * c, 0.0))
        phi = rng.uniform(0.0, 2.0 * math.pi, n)
        pts = c[:, None] * x + s[:, None] * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        return pts, (1.0 - math.cos(R)) / (1.0 - math.cos(self.angle))

    def _grid_radius(self):
        return self.angle

    def _tangent_at_origin(self, a, b):
        return np.stack([a, b, np.zeros_like(a)], axis=-1)

    def from_polar(self, theta, phi):
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        return np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
        )


def minkowski(u, v):
    return -u[..., 0] * v[..., 0] + np.sum(u[..., 1:] * v[..., 1:], axis=-1)


class HyperbolicDisk(RiemannianSpace):
    """Hyperbolic disk of radius ``radius`` (curvature -1), hyperboloid model.

    Points ``x`` satisfy ``<x, x>_M = -1`` and ``x[0] > 0`` where
    ``<u, v>_M = -u0 v0 + u1 v1 + u2 v2``.
    """

    kind = "hyperbolic"
    origin = np.array([1.0, 0.0, 0.0])

    def __init__(self, radius=1.0):
        radius = float(radius)
        if not radius > 0:
            raise DomainError("disk radius must be positive")
        self.radius = radius
        super().__init__(2.0, -1.0, 2.0 * radius, {"radius": radius})

    def _check_manifold(self, x):
        if np.any(x[..., 0] <= 0.0):
            raise DomainError("hyperboloid points need x0 > 0")
        q = minkowski(x, x)
        if np.any(np.abs(q + 1.0) > 1e-10 * np.maximum(1.0, x[..., 0] ** 2)):
            raise DomainError("hyperboloid points need Minkowski norm -1")

    def contains(self, x, tol=1e-9):
        return self._dist(self.origin, x) <= self.radius * (1.0 + tol)

    def _inner(self, u, v):
        return minkowski(u, v)

    def _project(self, x):
        x = np.array(x, dtype=float, copy=True)
        x[..., 0] = np.sqrt(1.0 + np.sum(x[..., 1:] ** 2, axis=-1))
        return x

    def _dist(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d = x - y
        chord = np.sqrt(np.maximum(minkowski(d, d), 0.0))
        return 2.0 * np.arcsinh(chord / 2.0)

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dist = self._dist(x, y)
        u = y + minkowski(x, y)[..., None] * x
        return u / _sinhc(dist)[..., None]

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        n = self.norm(v)
        return self._project(np.cosh(n)[..., None] * x + _sinhc(n)[..., None] * v)

    def _sample(self, n, rng):
        rho = np.arccosh(1.0 + rng.random(n) * (math.cosh(self.radius) - 1.0))
        phi = rng.uniform(0.0, 2.0 * math.pi, n)
        return self.from_polar(rho, phi)

    def from_polar(self, rho, phi):
        rho = np.asarray(rho, dtype=float)
        phi = np.asarray(phi, dtype=float)
        return np.stack(
            [np.cosh(rho), np.sinh(rho) * np.cos(phi), np.sinh(rho) * np.sin(phi)], axis=-1
        )

    def _grid_radius(self):
        return self.radius

    def _tangent_at_origin(self, a, b):
        return np.stack([np.zeros_like(a), a, b], axis=-1)

    def to_poincare(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 1:] / (1.0 + x[..., :1])

    def from_poincare(self, z):
        z = np.asarray(z, dtype=float)
        s = np.sum(z * z, axis=-1, keepdims=True)
        if np.any(s >= 1.0):
            raise DomainError("Poincare points must lie in the open unit disk")
        return np.concatenate([1.0 + s, 2.0 * z], axis=-1) / (1.0 - s)


def _disk_grid(n, radius):
    m = max(2, int(math.ceil(math.sqrt(4.0 * n / math.pi))))
    axis = np.linspace(-radius, radius, m)
    a, b = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([a.ravel(), b.ravel()], axis=1)
    return pts[np.linalg.norm(pts, axis=1) <= radius]


SPACE_KINDS = {
    "euclidean": EuclideanBall,
    "sphere": SphereCap,
    "hyperbolic": HyperbolicDisk,
    "spd": SPDSpace,
    "quantile": QuantileSpace,
}


def space_from_dict(d):
    """Build a space from its JSON descriptor.

    ``params`` carries the constructor arguments. ``p`` may be overridden
    for the Euclidean and quantile spaces; ``kappa`` and ``diameter``, when
    present, must agree with the derived values.
    """
    kind = d.get("kind")
    if kind not in SPACE_KINDS:
        raise DomainError(f"unknown space kind {kind!r}")
    params = dict(d.get("params", {}))
    if "p" in d and kind in ("euclidean", "quantile"):
        params.setdefault("p", d["p"])
    space = SPACE_KINDS[kind](**params)
    for field in ("p", "kappa", "diameter"):
        if field in d and not math.isclose(float(d[field]), getattr(space, field), rel_tol=1e-12):
            raise DomainError(f"space descriptor {field}={d[field]} disagrees with {getattr(space, field)}")
    return space


def default_space(kind):
    return SPACE_KINDS[kind]()


# -- module-level operations ------------------------------------------------


def distance(space, x, y):
    """Geodesic distance between ``x`` and ``y``."""
    return space.distance(x, y)


def geodesic_point(space, x, y, t):
    """Point at fraction ``t`` along the geodesic from ``x`` to ``y``."""
    return space.geodesic(x, y, t)


def homothety(space, center, y, eps):
    """Contract ``y`` toward ``center`` with ratio ``eps``."""
    return space.geodesic(center, y, eps)


def sample_prior(space, n, seed=None):
    return space.sample(n, seed)


def s_kappa(kappa, r):
    """sin(r sqrt(k))/sqrt(k), r, or sinh(r sqrt(-k))/sqrt(-k) by the sign of k."""
    kappa = float(kappa)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("s_kappa needs r >= 0")
    x = kappa * r * r
    series = r * (1.0 - x / 6.0 + x * x / 120.0)
    if kappa > 0:
        k = math.sqrt(kappa)
        exact = np.sin(r * k) / k
    elif kappa < 0:
        k = math.sqrt(-kappa)
        exact = np.sinh(r * k) / k
    else:
        exact = r
    out = np.where(np.abs(x) < 1e-8, series, exact)
    return out if out.ndim else float(out)


def model_diameter(kappa):
    return math.pi / math.sqrt(kappa) if kappa > 0 else math.inf


def comparison_distance(kappa, side_px, side_py, side_xy, t):
    """Distance from the apex to the point at fraction ``t`` on the opposite
    side of the comparison triangle in the constant-curvature plane.

    Parameters
    ----------
    kappa : float
        Curvature of the model plane.
    side_px, side_py, side_xy : array_like
        Side lengths d(p, x), d(p, y), d(x, y).
    t : array_like
        Position along the side from x (t=0) to y (t=1).
    """
    kappa = float(kappa)
    a, b, c, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (side_px, side_py, side_xy, t)))
    if np.any(t < 0) or np.any(t > 1):
        raise DomainError("t must lie in [0, 1]")
    slack = 1e-9 * (1.0 + a + b + c)
    if np.any(a > b + c + slack) or np.any(b > a + c + slack) or np.any(c > a + b + slack):
        raise DomainError("side lengths violate the triangle inequality")
    if kappa > 0 and np.any(a + b + c >= 2.0 * model_diameter(kappa)):
        raise DomainError("triangle perimeter too large for the model sphere")

    if kappa == 0.0:
        sq = (1.0 - t) * a * a + t * b * b - t * (1.0 - t) * c * c
        d = np.sqrt(np.maximum(sq, 0.0))
    else:
        k = math.sqrt(abs(kappa))
        degenerate = c * k < 1e-12
        cs = np.where(degenerate, 1.0, c)
        if kappa > 0:
            num = np.sin(k * (1.0 - t) * cs) * np.cos(k * a) + np.sin(k * t * cs) * np.cos(k * b)
            val = np.where(degenerate, (1.0 - t) * np.cos(k * a) + t * np.cos(k * b), num / np.sin(k * cs))
            d = np.arccos(np.clip(val, -1.0, 1.0)) / k
        else:
            num = np.sinh(k * (1.0 - t) * cs) * np.cosh(k * a) + np.sinh(k * t * cs) * np.cosh(k * b)
            val = np.where(degenerate, (1.0 - t) * np.cosh(k * a) + t * np.cosh(k * b), num / np.sinh(k * cs))
            d = np.arccosh(np.maximum(val, 1.0)) / k
    d = np.where(t == 0.0, a, np.where(t == 1.0, b, d))
    return d if d.ndim else float(d)
