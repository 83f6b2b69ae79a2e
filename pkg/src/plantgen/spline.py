"""B-spline basis evaluation, curves, tensor-product surfaces, and tessellation.

All surfaces here are non-rational (every weight is 1), so evaluation is a
plain double sum of basis products times control points. Knot vectors are
clamped by construction: the first and last knots repeat degree+1 times, so
surfaces interpolate their corner control points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError

# Cross products below this norm are treated as zero-area triangles.
_DEGENERATE_CROSS_EPS = 1e-12


def clamped_uniform_knots(n_ctrl: int, degree: int) -> np.ndarray:
    """Clamped uniform knot vector on [0, 1] for `n_ctrl` control points.

    Length is n_ctrl + degree + 1 with degree+1 repeated end knots and
    uniformly spaced interior knots.
    """
    if degree < 0:
        raise ValidationError("degree must be non-negative")
    if n_ctrl < degree + 1:
        raise ValidationError(
            f"need at least degree+1={degree + 1} control points, got {n_ctrl}"
        )
    n_interior = n_ctrl - degree - 1
    interior = np.arange(1, n_interior + 1) / (n_interior + 1)
    knots = np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])
    knots.flags.writeable = False
    return knots


def validate_knots(knots: np.ndarray, degree: int, n_ctrl: int | None = None) -> np.ndarray:
    """Check knot-vector invariants; returns the knots as a float array."""
    knots = np.asarray(knots, dtype=float)
    if knots.ndim != 1:
        raise ValidationError("knot vector must be one-dimensional")
    if degree < 0:
        raise ValidationError("degree must be non-negative")
    if knots.size < 2 * (degree + 1):
        raise ValidationError(
            f"knot vector needs at least {2 * (degree + 1)} entries, got {knots.size}"
        )
    if not np.all(np.isfinite(knots)):
        raise ValidationError("knot vector contains non-finite values")
    if np.any(np.diff(knots) < 0):
        raise ValidationError("knot vector must be non-decreasing")
    if n_ctrl is not None and knots.size != n_ctrl + degree + 1:
        raise ValidationError(
            f"knot count {knots.size} inconsistent with {n_ctrl} control points "
            f"and degree {degree} (expected {n_ctrl + degree + 1})"
        )
    return knots


def find_span(knots: np.ndarray, degree: int, u: float) -> int:
    """Index i of the knot span [knots[i], knots[i+1]) containing u.

    The final span is treated as closed so the right domain endpoint is valid.
    """
    n = len(knots) - degree - 2  # highest control-point index
    if u >= knots[n + 1]:
        # Right endpoint: walk back to the last non-empty span.
        span = n
        while span > degree and knots[span] == knots[span + 1]:
            span -= 1
        return span
    if u <= knots[degree]:
        return degree
    return int(np.searchsorted(knots, u, side="right")) - 1


def basis_functions(knots: np.ndarray, degree: int, u: float) -> list[tuple[int, float]]:
    """The degree+1 potentially nonzero basis values N_{i,degree}(u).

    Returns (index, value) pairs. Values are non-negative and sum to 1;
    0/0 combinations in the recursion contribute nothing.

    Raises DomainError if u lies outside [knots[degree], knots[n+1]].
    """
    knots = validate_knots(knots, degree)
    n = len(knots) - degree - 2
    lo, hi = knots[degree], knots[n + 1]
    if not (lo <= u <= hi):
        raise DomainError(f"parameter {u} outside domain [{lo}, {hi}]")

    span = find_span(knots, degree, u)
    values = np.zeros(degree + 1)
    values[0] = 1.0
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    for j in range(1, degree + 1):
        left[j] = u - knots[span + 1 - j]
        right[j] = knots[span + j] - u
        saved = 0.0
        for r in range(j):
            denom = right[r + 1] + left[j - r]
            tmp = values[r] / denom
            values[r] = saved + right[r + 1] * tmp
            saved = left[j - r] * tmp
        values[j] = saved
    return [(span - degree + i, float(values[i])) for i in range(degree + 1)]


def basis_row(knots: np.ndarray, degree: int, n_ctrl: int, u: float) -> np.ndarray:
    """Dense length-n_ctrl row of all basis values at u."""
    row = np.zeros(n_ctrl)
    for i, value in basis_functions(knots, degree, u):
        row[i] = value
    return row


@dataclass(frozen=True)
class BSplineCurve:
    """Polynomial B-spline curve: degree, clamped knots, 3D control points (cm)."""

    degree: int
    knots: np.ndarray
    control_points: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.control_points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValidationError("control_points must have shape (n, 3)")
        if self.degree < 1:
            raise ValidationError("curve degree must be at least 1 for geometry use")
        knots = validate_knots(self.knots, self.degree, pts.shape[0])
        pts.flags.writeable = False
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "control_points", pts)

    def evaluate(self, u: float) -> np.ndarray:
        point = np.zeros(3)
        for i, value in basis_functions(self.knots, self.degree, u):
            point += value * self.control_points[i]
        return point


@dataclass(frozen=True)
class BSplineSurface:
    """Tensor-product B-spline surface with uniform unit weights.

    control_grid has shape (n_u, n_v, 3) in cm; knot vectors are clamped so
    S(0,0) and S(1,1) interpolate corner control points.
    """

    degree_u: int
    degree_v: int
    knots_u: np.ndarray
    knots_v: np.ndarray
    control_grid: np.ndarray
    name: str = ""

    def __post_init__(self):
        grid = np.ascontiguousarray(np.asarray(self.control_grid, dtype=float))
        if grid.ndim != 3 or grid.shape[2] != 3:
            raise ValidationError("control_grid must have shape (n_u, n_v, 3)")
        if not np.all(np.isfinite(grid)):
            raise ValidationError(f"surface {self.name!r}: non-finite control point")
        ku = validate_knots(self.knots_u, self.degree_u, grid.shape[0])
        kv = validate_knots(self.knots_v, self.degree_v, grid.shape[1])
        grid.flags.writeable = False
        object.__setattr__(self, "knots_u", ku)
        object.__setattr__(self, "knots_v", kv)
        object.__setattr__(self, "control_grid", grid)

    @classmethod
    def from_grid(cls, grid: np.ndarray, degree_u: int, degree_v: int, name: str = "") -> "BSplineSurface":
        """Surface over `grid` with clamped uniform knots in both directions."""
        grid = np.asarray(grid, dtype=float)
        return cls(
            degree_u=degree_u,
            degree_v=degree_v,
            knots_u=clamped_uniform_knots(grid.shape[0], degree_u),
            knots_v=clamped_uniform_knots(grid.shape[1], degree_v),
            control_grid=grid,
            name=name,
        )

    @property
    def n_ctrl_u(self) -> int:
        return self.control_grid.shape[0]

    @property
    def n_ctrl_v(self) -> int:
        return self.control_grid.shape[1]

    def is_closed_u(self) -> bool:
        """True when the last control row duplicates the first (seam-closed sweep)."""
        return bool(np.array_equal(self.control_grid[0], self.control_grid[-1]))

    def evaluate(self, u: float, v: float) -> np.ndarray:
        """Point S(u, v) via the local (degree_u+1)x(degree_v+1) sum."""
        bu = basis_functions(self.knots_u, self.degree_u, u)
        bv = basis_functions(self.knots_v, self.degree_v, v)
        point = np.zeros(3)
        for i, nu in bu:
            for j, nv in bv:
                point += nu * nv * self.control_grid[i, j]
        return point


def evaluate_surface(surface: BSplineSurface, u: float, v: float) -> np.ndarray:
    return surface.evaluate(u, v)


@dataclass
class TriangleMesh:
    """Indexed triangle mesh with per-triangle unit normals (coordinates in cm)."""

    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray
    degenerate_count: int = 0
    name: str = ""

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        self.triangles = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        self.normals = np.ascontiguousarray(np.asarray(self.normals, dtype=float))
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValidationError("vertices must have shape (n, 3)")
        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)
        ):
            raise ValidationError("triangle index out of range")
        if not np.all(np.isfinite(self.vertices)):
            raise ValidationError("mesh contains non-finite vertex coordinates")

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def merged_with(self, other: "TriangleMesh") -> "TriangleMesh":
        offset = len(self.vertices)
        return TriangleMesh(
            vertices=np.vstack([self.vertices, other.vertices]),
            triangles=np.vstack([self.triangles, other.triangles + offset])
            if other.triangles.size
            else self.triangles.copy(),
            normals=np.vstack([self.normals, other.normals]),
            degenerate_count=self.degenerate_count + other.degenerate_count,
            name=self.name,
        )


def _triangle_normals(vertices: np.ndarray, triangles: np.ndarray) -> tuple[np.ndarray, int]:
    """Unit normals per triangle; degenerate ones get a neighbor-averaged normal."""
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    cross = np.cross(b - a, c - a)
    lengths = np.linalg.norm(cross, axis=1)
    degenerate = lengths < _DEGENERATE_CROSS_EPS
    normals = np.zeros_like(cross)
    ok = ~degenerate
    normals[ok] = cross[ok] / lengths[ok, None]

    n_degen = int(degenerate.sum())
    if n_degen:
        # Average normals of non-degenerate triangles sharing a vertex.
        accum = np.zeros((len(vertices), 3))
        for t in np.flatnonzero(ok):
            for vi in triangles[t]:
                accum[vi] += normals[t]
        fallback = normals[ok].mean(axis=0) if ok.any() else np.array([0.0, 0.0, 1.0])
        if np.linalg.norm(fallback) < 1e-12:
            fallback = np.array([0.0, 0.0, 1.0])
        fallback /= np.linalg.norm(fallback)
        for t in np.flatnonzero(degenerate):
            nsum = accum[triangles[t]].sum(axis=0)
            norm = np.linalg.norm(nsum)
            normals[t] = nsum / norm if norm > 1e-12 else fallback
    return normals, n_degen


def tessellate(
    surface: BSplineSurface,
    sample_u: int,
    sample_v: int,
    closed_u: bool = False,
) -> TriangleMesh:
    """Sample the surface on a uniform (sample_u x sample_v) parameter grid.

    Produces 2*(sample_u-1)*(sample_v-1) triangles. With closed_u the final
    u column must coincide bit-exactly with the first; it is welded away and
    the triangle strip wraps around the seam.
    """
    if sample_u < 2 or sample_v < 2:
        raise ValidationError("need at least 2 samples in each direction")

    us = np.linspace(0.0, 1.0, sample_u)
    vs = np.linspace(0.0, 1.0, sample_v)
    bu = np.array([basis_row(surface.knots_u, surface.degree_u, surface.n_ctrl_u, u) for u in us])
    bv = np.array([basis_row(surface.knots_v, surface.degree_v, surface.n_ctrl_v, v) for v in vs])
    points = np.einsum("ai,bj,ijk->abk", bu, bv, surface.control_grid)

    n_cols = sample_u
    if closed_u:
        if not np.array_equal(points[0], points[-1]):
            raise ValidationError(
                f"surface {surface.name!r}: u-seam columns differ, cannot weld"
            )
        points = points[:-1]
        n_cols = sample_u - 1

    vertices = points.reshape(-1, 3)

    def vid(a: int, b: int) -> int:
        return (a % n_cols) * sample_v + b

    triangles = np.empty((2 * (sample_u - 1) * (sample_v - 1), 3), dtype=np.int64)
    t = 0
    for a in range(sample_u - 1):
        for b in range(sample_v - 1):
            v00, v10 = vid(a, b), vid(a + 1, b)
            v01, v11 = vid(a, b + 1), vid(a + 1, b + 1)
            triangles[t] = (v00, v10, v11)
            triangles[t + 1] = (v00, v11, v01)
            t += 2

    normals, n_degen = _triangle_normals(vertices, triangles)
    return TriangleMesh(
        vertices=vertices,
        triangles=triangles,
        normals=normals,
        degenerate_count=n_degen,
        name=surface.name,
    )
