"""Lower convex envelope of the characteristic-curve surface.

``sigma(rbar, z)`` is affine in the plane coordinates ``(u, z)`` with
``u = (1 - z) rbar``, so convex mixtures of facet states are convex
combinations in ``(u, z)``. The hull is therefore taken over
``(u, z, value)``; in these coordinates the facet is the triangle with
corners ``(-1, 0)``, ``(1, 0)`` and ``(0, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .exceptions import DomainError, EnvelopeError
from .states import FacetCoords, check_facet, facet_to_plane, plane_to_facet

BARY_TOL = 1e-12
# sliver triangles along the straight r=1 edges lose a few digits in lam
LOCATE_TOL = 1e-9
_KEY_DIGITS = 12
_COVER_TOL = 1e-9


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class _TriangleLocator:
    """Uniform bucket grid over triangle bounding boxes."""

    def __init__(self, pts, tri):
        self.pts, self.tri = pts, tri
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        self.lo = lo
        nb = max(1, int(np.sqrt(len(tri))))
        self.nb = nb
        self.cell = np.where(hi - lo > 0, (hi - lo) / nb, 1.0)
        corners = pts[tri]
        blo = self._bucket(corners.min(axis=1))
        bhi = self._bucket(corners.max(axis=1))
        buckets = [[] for _ in range(nb * nb)]
        for t, (a, b) in enumerate(zip(blo, bhi)):
            for i in range(a[0], b[0] + 1):
                for j in range(a[1], b[1] + 1):
                    buckets[i * nb + j].append(t)
        self.buckets = [np.array(b, dtype=np.int64) for b in buckets]
        self.corners = corners

    def _bucket(self, p):
        b = np.floor((np.atleast_2d(p) - self.lo) / self.cell).astype(np.int64)
        return np.clip(b, 0, self.nb - 1)

    def barycentric(self, t, p):
        # sub-triangle areas stay accurate on slivers, where inverting the edge matrix does not
        c = self.corners[t] - p
        lam = np.column_stack([_cross(c[:, 1], c[:, 2]), _cross(c[:, 2], c[:, 0]), _cross(c[:, 0], c[:, 1])])
        return lam / lam.sum(axis=1, keepdims=True)

    def locate(self, p, tol=LOCATE_TOL):
        """Return ``(triangle, barycentric)`` for point ``p`` or ``(None, None)``."""
        p = np.asarray(p, dtype=float)
        cand = self.buckets[int(self._bucket(p)[0] @ np.array([self.nb, 1]))]
        for pool in (cand, np.arange(len(self.tri))):
            if pool.size == 0:
                continue
            lam = self.barycentric(pool, p)
            k = int(np.argmax(lam.min(axis=1)))
            if lam[k].min() >= -tol:
                return int(pool[k]), lam[k]
        return None, None


@dataclass
class ConvexSurface:
    """Triangulated lower convex hull.

    ``points`` are the deduplicated sample locations (plane coordinates),
    ``triangles`` index into them and ``planes[t] = (a, b, c)`` gives the
    supporting plane ``a u + b z + c`` of triangle ``t``.
    """

    points: np.ndarray
    values: np.ndarray
    triangles: np.ndarray
    planes: np.ndarray
    xi: np.ndarray | None = None
    facet: bool = True
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._locator = _TriangleLocator(self.points, self.triangles)
        self._index = {_key(p): i for i, p in enumerate(self.points)}

    @property
    def vertices(self):
        """Indices of the samples that are hull vertices."""
        return np.unique(self.triangles)

    def _to_plane(self, p):
        if not self.facet:
            return np.asarray(p, dtype=float)
        rbar, z = float(p[0]), float(p[1])
        check_facet(rbar, z)
        return np.array(facet_to_plane(rbar, z))

    def _locate(self, q):
        t, lam = self._locator.locate(q)
        if t is None:
            raise DomainError(f"point {tuple(q)} lies outside the hull domain")
        return t, lam

    def evaluate_plane(self, q):
        q = np.asarray(q, dtype=float)
        t, _ = self._locate(q)
        # the supporting plane is better conditioned than barycentrics on sliver triangles
        a, b, c = self.planes[t]
        return float(a * q[0] + b * q[1] + c)

    def evaluate(self, p):
        return self.evaluate_plane(self._to_plane(p))

    def evaluate_many(self, a, b):
        """Vectorized evaluation; ``(a, b)`` are ``(rbar, z)`` arrays for facet surfaces."""
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        out = np.empty(a.shape)
        for idx in np.ndindex(a.shape):
            out[idx] = self.evaluate((a[idx], b[idx]))
        return out

    def decomposition_witness(self, p):
        """Vertex argmins with barycentric weights realizing the envelope at ``p``.

        Returns a list of ``(weight, xi, FacetCoords)``. A query that hits a
        sample whose value equals the envelope returns that sample alone.
        """
        if self.xi is None:
            raise EnvelopeError("surface carries no argmin parameters")
        if not self.facet:
            raise EnvelopeError("witnesses need facet coordinates")
        q = self._to_plane(p)
        t, lam = self._locate(q)
        value = float(lam @ self.values[self.triangles[t]])
        hit = self._index.get(_key(q))
        if hit is not None and abs(self.values[hit] - value) <= BARY_TOL:
            return [(1.0, self.xi[hit].copy(), _facet(self.points[hit]))]
        out = []
        for w, v in zip(lam, self.triangles[t]):
            if w > BARY_TOL:
                out.append((float(w), self.xi[v].copy(), _facet(self.points[v])))
        total = sum(w for w, *_ in out)
        return [(w / total, x, f) for w, x, f in out]

    def midpoint_violation(self, rng, count=1000):
        """Largest ``f((p+q)/2) - (f(p)+f(q))/2`` over random sample pairs (<= 0 if convex)."""
        i = rng.integers(len(self.points), size=(count, 2))
        p, q = self.points[i[:, 0]], self.points[i[:, 1]]
        lhs = np.array([self.evaluate_plane(m) for m in 0.5 * (p + q)])
        rhs = 0.5 * (np.array([self.evaluate_plane(x) for x in p]) + np.array([self.evaluate_plane(x) for x in q]))
        return float(np.max(lhs - rhs))


def _facet(q):
    r, z = plane_to_facet(*q)
    return FacetCoords(float(r), float(z))


def _key(q):
    return (round(float(q[0]), _KEY_DIGITS) + 0.0, round(float(q[1]), _KEY_DIGITS) + 0.0)


def _dedup(pts, values, xi):
    best = {}
    for i, p in enumerate(pts):
        k = _key(p)
        j = best.get(k)
        if j is None or values[i] < values[j]:
            best[k] = i
    keep = np.array(sorted(best.values()))
    return pts[keep], values[keep], (None if xi is None else xi[keep])


def _lower_hull(pts, values):
    if len(pts) < 3:
        raise EnvelopeError("need at least three samples")
    if np.linalg.matrix_rank(pts - pts.mean(axis=0), tol=1e-12) < 2:
        raise EnvelopeError("samples are collinear in the plane")
    if not np.all(np.isfinite(values)):
        raise EnvelopeError("non-finite sample values")
    # a point far above the centroid keeps the hull full-dimensional for flat data
    span = float(np.ptp(values)) + 1.0
    top = np.array([[*pts.mean(axis=0), values.max() + 10.0 * span]])
    cloud = np.vstack([np.column_stack([pts, values]), top])
    try:
        hull = ConvexHull(cloud, qhull_options="Qt Qbb Qc")
    except QhullError as exc:
        raise EnvelopeError(f"hull construction failed: {exc}") from None
    lower = hull.equations[:, 2] < -1e-10
    tri = hull.simplices[lower]
    if np.any(tri == len(pts)):
        raise EnvelopeError("internal error: auxiliary point on the lower hull")
    a = pts[tri]
    area = 0.5 * ((a[:, 1, 0] - a[:, 0, 0]) * (a[:, 2, 1] - a[:, 0, 1]) - (a[:, 2, 0] - a[:, 0, 0]) * (a[:, 1, 1] - a[:, 0, 1]))
    tri = tri[np.abs(area) > 1e-15]
    covered = float(np.abs(area).sum())
    domain = ConvexHull(pts).volume
    if abs(covered - domain) > _COVER_TOL * max(1.0, domain):
        raise EnvelopeError(f"lower faces cover area {covered!r}, domain area {domain!r}")
    # orient counter-clockwise
    a = pts[tri]
    cw = ((a[:, 1, 0] - a[:, 0, 0]) * (a[:, 2, 1] - a[:, 0, 1]) - (a[:, 2, 0] - a[:, 0, 0]) * (a[:, 1, 1] - a[:, 0, 1])) < 0
    tri[cw] = tri[cw][:, [0, 2, 1]]
    lhs = np.concatenate([pts[tri], np.ones(tri.shape + (1,))], axis=2)
    planes = np.linalg.solve(lhs, values[tri][..., None])[..., 0]
    return tri, planes


def lower_envelope_points(pts, values, xi=None, facet=False, meta=None):
    """Lower convex envelope of arbitrary samples ``values`` at 2D ``pts``."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    values = np.asarray(values, dtype=float).ravel()
    if xi is not None:
        xi = np.asarray(xi).reshape(-1, 6)
    pts, values, xi = _dedup(pts, values, xi)
    tri, planes = _lower_hull(pts, values)
    return ConvexSurface(pts, values, tri, planes, xi=xi, facet=facet, meta=dict(meta or {}))


def lower_envelope(surface):
    """Convex envelope of a mirrored characteristic-curve :class:`~qutrit_roof.curve.Surface`."""
    rb, z = surface.rbar, surface.z
    if rb.size < 2 or z.size < 2:
        raise EnvelopeError("surface needs at least two nodes per axis")
    if rb[0] > -1.0 + 1e-12 or rb[-1] < 1.0 - 1e-12 or z[0] > 1e-12 or z[-1] < 1.0 - 1e-12:
        raise EnvelopeError(
            f"surface must cover rbar in [-1, 1] and z in [0, 1]; got rbar in [{rb[0]}, {rb[-1]}], z in [{z[0]}, {z[-1]}]"
        )
    r, zz, v, xi = surface.points()
    pts = np.column_stack([(1.0 - zz) * r, zz])
    return lower_envelope_points(pts, v, xi=xi, facet=True, meta={"source_nodes": int(r.size)})


def evaluate(c, p):
    """Envelope value at facet point ``p = (rbar, z)``."""
    return c.evaluate(p)


def decomposition_witness(c, p):
    return c.decomposition_witness(p)
