"""Rotations, frame transport, curved-centerline integration, and sweep surfaces.

Centerlines for stems, petioles, and petiolules are integrated turtle-style:
at each step the tangent is rotated by kappa*ds about the active bending axes,
then the position advances by the new tangent. Frames are propagated by
parallel transport, which keeps them twist-free along the curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spline import BSplineSurface, clamped_uniform_knots

_PARALLEL_EPS = 1e-10  # cross-product norm below which tangents count as parallel


def _unit(v: np.ndarray, what: str = "vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise ValidationError(f"{what} has zero length")
    return v / norm


def rotation_matrix(axis: np.ndarray, theta: float) -> np.ndarray:
    """Rotation by theta (rad) about a unit axis: I + sin(t)[a]x + (1-cos(t))[a]x^2."""
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if abs(norm - 1.0) > 1e-6:
        raise ValidationError(f"rotation axis norm {norm:.3g} too far from 1")
    axis = axis / norm
    ax, ay, az = axis
    skew = np.array([[0.0, -az, ay], [az, 0.0, -ax], [-ay, ax, 0.0]])
    return np.eye(3) + np.sin(theta) * skew + (1.0 - np.cos(theta)) * (skew @ skew)


def rotate_about_axis(axis: np.ndarray, theta: float, x: np.ndarray) -> np.ndarray:
    """Rotate vector x by theta about axis (normalized if within 1e-6 of unit)."""
    return rotation_matrix(axis, theta) @ np.asarray(x, dtype=float)


def azimuth_axis(phi_deg: float) -> np.ndarray:
    """Bending-plane axis for azimuth phi: (-sin phi, cos phi, 0).

    Azimuth 0 deg bends toward +y, 90 deg toward -x.
    """
    phi = np.deg2rad(phi_deg)
    return np.array([-np.sin(phi), np.cos(phi), 0.0])


@dataclass(frozen=True)
class Frame:
    """Right-handed orthonormal (tangent, normal, binormal) triple."""

    t: np.ndarray
    n: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        for name in ("t", "n", "b"):
            v = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            if v.shape != (3,):
                raise ValidationError(f"frame axis {name} must be a 3-vector")
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise ValidationError(f"frame axis {name} is not unit length")
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        if abs(float(self.t @ self.n)) > 1e-9 or abs(float(self.t @ self.b)) > 1e-9 \
                or abs(float(self.n @ self.b)) > 1e-9:
            raise ValidationError("frame axes are not pairwise orthogonal")
        if float(np.cross(self.t, self.n) @ self.b) <= 0.0:
            raise ValidationError("frame is not right-handed")

    def rotated(self, axis: np.ndarray, theta: float) -> "Frame":
        rot = rotation_matrix(axis, theta)
        return Frame(rot @ self.t, rot @ self.n, rot @ self.b)


@dataclass(frozen=True)
class KappaTerm:
    """One curvature contribution: magnitude, bending axis, and active span.

    kappa is in rad/cm. The axis comes either from an azimuth angle in the
    global xy-plane or from an explicit unit vector. The term is active at
    step fractions s with span[0] <= s <= span[1], inclusive at both ends.
    """

    kappa: float
    azimuth_deg: float | None = None
    axis: np.ndarray | None = None
    span: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.kappa < 0:
            raise ValidationError("kappa must be non-negative")
        s0, s1 = self.span
        if not (0.0 <= s0 <= s1 <= 1.0):
            raise ValidationError(f"span {self.span} must satisfy 0 <= s0 <= s1 <= 1")
        if (self.azimuth_deg is None) == (self.axis is None):
            raise ValidationError("specify exactly one of azimuth_deg or axis")
        if self.axis is not None:
            axis = _unit(self.axis, "kappa axis")
            axis.flags.writeable = False
            object.__setattr__(self, "axis", axis)

    def bend_axis(self) -> np.ndarray:
        if self.axis is not None:
            return self.axis
        return azimuth_axis(self.azimuth_deg)


def integrate_centerline(
    origin: np.ndarray,
    initial_tangent: np.ndarray,
    length: float,
    n_seg: int,
    terms: list[KappaTerm] | None = None,
) -> np.ndarray:
    """Integrate a curved centerline: n_seg+1 points, each step of length ds.

    At step fraction s = k/n_seg every active term rotates the tangent by
    kappa*ds about its axis (in listed order), then the position advances by
    the rotated tangent.
    """
    if length <= 0:
        raise ValidationError("length must be positive")
    if n_seg < 1:
        raise ValidationError("n_seg must be at least 1")
    terms = terms or []

    ds = length / n_seg
    point = np.asarray(origin, dtype=float).copy()
    tangent = _unit(initial_tangent, "initial tangent")
    points = np.empty((n_seg + 1, 3))
    points[0] = point

    rotations = [(rotation_matrix(term.bend_axis(), term.kappa * ds), term.span) for term in terms]
    for k in range(n_seg):
        s = k / n_seg
        for rot, (s0, s1) in rotations:
            if s0 <= s <= s1:
                tangent = rot @ tangent
        tangent /= np.linalg.norm(tangent)
        point = point + tangent * ds
        points[k + 1] = point
    return points


def _polyline_tangents(points: np.ndarray) -> np.ndarray:
    """Per-vertex unit tangents: central differences inside, one-sided at the ends."""
    tangents = np.empty_like(points)
    tangents[0] = points[1] - points[0]
    tangents[-1] = points[-1] - points[-2]
    if len(points) > 2:
        tangents[1:-1] = points[2:] - points[:-2]
    norms = np.linalg.norm(tangents, axis=1)
    if np.any(norms < 1e-12):
        raise ValidationError("consecutive centerline points coincide")
    return tangents / norms[:, None]


def parallel_transport(points: np.ndarray, initial_normal: np.ndarray) -> list[Frame]:
    """Twist-minimizing frames along a polyline.

    The first normal is initial_normal projected orthogonal to the first
    tangent; each subsequent normal is rotated by the angle between
    consecutive tangents about their cross product. Near-parallel tangents
    copy the previous normal.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3 or len(points) < 2:
        raise ValidationError("need at least two 3D points")
    tangents = _polyline_tangents(points)

    normal = np.asarray(initial_normal, dtype=float)
    normal = normal - (normal @ tangents[0]) * tangents[0]
    norm = np.linalg.norm(normal)
    if norm < 1e-9:
        raise ValidationError("initial normal is parallel to the first tangent")
    normal = normal / norm

    frames = [Frame(tangents[0], normal, np.cross(tangents[0], normal))]
    for i in range(1, len(points)):
        t_prev, t_cur = tangents[i - 1], tangents[i]
        axis = np.cross(t_prev, t_cur)
        axis_norm = np.linalg.norm(axis)
        if axis_norm >= _PARALLEL_EPS:
            angle = np.arccos(np.clip(t_prev @ t_cur, -1.0, 1.0))
            normal = rotation_matrix(axis / axis_norm, angle) @ normal
        # Re-orthogonalize against the current tangent to absorb float drift.
        normal = normal - (normal @ t_cur) * t_cur
        normal /= np.linalg.norm(normal)
        frames.append(Frame(t_cur, normal, np.cross(t_cur, normal)))
    return frames


@dataclass(frozen=True)
class FramedCenterline:
    """Polyline with per-vertex radius, parallel-transport frame, and arclength."""

    points: np.ndarray
    radii: np.ndarray
    frames: list[Frame]
    arclength: np.ndarray

    def __post_init__(self):
        points = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        radii = np.ascontiguousarray(np.asarray(self.radii, dtype=float))
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValidationError("points must have shape (n, 3)")
        if len(points) < 2:
            raise ValidationError("centerline needs at least two points")
        if len(radii) != len(points) or len(self.frames) != len(points):
            raise ValidationError("points, radii, and frames must have equal length")
        if np.any(radii <= 0):
            raise ValidationError("radii must be positive")
        arclength = np.ascontiguousarray(np.asarray(self.arclength, dtype=float))
        if len(arclength) != len(points) or np.any(np.diff(arclength) <= 0):
            raise ValidationError("arclength must be strictly increasing per vertex")
        for arr in (points, radii, arclength):
            arr.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "arclength", arclength)

    @classmethod
    def build(
        cls,
        points: np.ndarray,
        radii: np.ndarray,
        initial_normal: np.ndarray = (1.0, 0.0, 0.0),
    ) -> "FramedCenterline":
        points = np.asarray(points, dtype=float)
        radii = np.asarray(radii, dtype=float)
        if radii.ndim == 0:
            radii = np.full(len(points), float(radii))
        seglen = np.linalg.norm(np.diff(points, axis=0), axis=1)
        arclength = np.concatenate([[0.0], np.cumsum(seglen)])
        frames = parallel_transport(points, np.asarray(initial_normal, dtype=float))
        return cls(points=points, radii=radii, frames=frames, arclength=arclength)

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    def locate(self, fraction: float) -> tuple[np.ndarray, int]:
        """Interpolated point at an arclength fraction plus the nearest vertex index."""
        if not (0.0 <= fraction <= 1.0):
            raise ValidationError(f"arclength fraction {fraction} outside [0, 1]")
        target = fraction * self.length
        hi = int(np.searchsorted(self.arclength, target))
        hi = min(max(hi, 1), len(self.points) - 1)
        lo = hi - 1
        seg = self.arclength[hi] - self.arclength[lo]
        w = (target - self.arclength[lo]) / seg
        point = (1.0 - w) * self.points[lo] + w * self.points[hi]
        nearest = lo if w < 0.5 else hi
        return point, nearest


def sweep_surface(
    centerline: FramedCenterline,
    ring_samples: int,
    degree_u: int = 2,
    degree_v: int = 3,
    name: str = "",
) -> BSplineSurface:
    """Closed circular sweep along the centerline.

    Control grid is (ring_samples+1) x (n_points): ring u carries angle
    2*pi*u/ring_samples; the final ring row is a bit-exact copy of row 0 so
    the seam closes. Degrees default to 2 circumferential, 3 axial (capped by
    the available control counts).
    """
    if ring_samples < 4:
        raise ValidationError("ring_samples must be at least 4")
    n_rings = len(centerline.points)
    normals = np.array([f.n for f in centerline.frames])
    binormals = np.array([f.b for f in centerline.frames])

    grid = np.empty((ring_samples + 1, n_rings, 3))
    for u in range(ring_samples):
        theta = 2.0 * np.pi * u / ring_samples
        offset = np.cos(theta) * normals + np.sin(theta) * binormals
        grid[u] = centerline.points + centerline.radii[:, None] * offset
    grid[ring_samples] = grid[0]

    return BSplineSurface(
        degree_u=min(degree_u, ring_samples),
        degree_v=min(degree_v, n_rings - 1),
        knots_u=clamped_uniform_knots(ring_samples + 1, min(degree_u, ring_samples)),
        knots_v=clamped_uniform_knots(n_rings, min(degree_v, n_rings - 1)),
        control_grid=grid,
        name=name,
    )


def attachment_frame(
    centerline: FramedCenterline,
    fraction: float,
    azimuth_deg: float = 0.0,
    pitch_deg: float = 0.0,
    roll_deg: float = 0.0,
) -> tuple[np.ndarray, Frame]:
    """Branch attachment point and oriented frame at an arclength fraction.

    Starting from the transported frame at the nearest vertex: rotate by
    azimuth about the tangent, by pitch about the rotated binormal, then by
    roll about the resulting outward normal. With all angles zero this
    returns the transported frame unchanged.
    """
    point, idx = centerline.locate(fraction)
    frame = centerline.frames[idx]
    az, pitch, roll = np.deg2rad([azimuth_deg, pitch_deg, roll_deg])
    if az:
        frame = frame.rotated(frame.t, az)
    if pitch:
        frame = frame.rotated(frame.b, pitch)
    if roll:
        frame = frame.rotated(frame.n, roll)
    return point, frame
