"""Leaf and leaflet control-point grids plus all blade deformations.

A blade starts as a flat grid in local coordinates (x along the midrib,
y transverse, z normal) built from a width profile, then picks up skew,
longitudinal bend, camber, twist, V-fold, hinge bends, and finally (for
grasses) a hard graft onto the stem surface. The application order is fixed:
width -> skew/bend -> camber -> twist -> V-fold -> hinges -> graft/blend,
with the graft last so stem contact is never disturbed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .frames import FramedCenterline, rotation_matrix

MONOCOT = "monocot"
DICOT = "dicot"


def smoothstep(x: float | np.ndarray) -> float | np.ndarray:
    """Cubic ramp x^2 (3 - 2x), clamped to [0, 1] outside the unit interval."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def monocot_width(u: float | np.ndarray, w0: float, taper_p: float) -> float | np.ndarray:
    """Grass-blade width: tapers from w0 at the base to zero at the tip."""
    u = np.asarray(u, dtype=float)
    return w0 * (1.0 - u**taper_p)


def dicot_width(
    u: float | np.ndarray,
    w_max: float,
    alpha: float,
    beta: float,
    a_apex: float = 0.0,
    a_base: float = 0.0,
) -> float | np.ndarray:
    """Beta-function width profile with apex sharpening and base rounding.

    The base profile w_max * u^alpha * (1-u)^beta is rescaled so its maximum
    equals w_max (analytic peak at u = alpha/(alpha+beta) when both exponents
    are positive, dense-grid fallback otherwise), then modulated near the tip
    and base by the ramp terms.
    """
    if alpha <= 0 or beta <= 0:
        # No interior analytic peak; normalize on a dense grid instead.
        grid = np.linspace(0.0, 1.0, 4096)
        peak = np.max(grid**alpha * (1.0 - grid) ** beta)
    else:
        u_star = alpha / (alpha + beta)
        peak = u_star**alpha * (1.0 - u_star) ** beta
    if peak <= 0:
        raise ValidationError("width profile collapses for these exponents")

    u = np.asarray(u, dtype=float)
    base = w_max * u**alpha * (1.0 - u) ** beta / peak
    f_tip = np.maximum(0.0, (u - 0.8) / 0.2)
    f_base = np.maximum(0.0, (0.15 - u) / 0.15)
    return base * (1.0 - 0.35 * a_apex * f_tip) * (1.0 + 0.20 * a_base * f_base)


@dataclass(frozen=True)
class HingeSpec:
    """Localized bend: pivot position u0, angle, frame-axis selector, ramp width."""

    u0: float
    angle_deg: float
    axis: str = "B"
    smooth: float = 0.02

    def __post_init__(self):
        if not (0.0 <= self.u0 <= 1.0):
            raise ValidationError(f"hinge u0 {self.u0} outside [0, 1]")
        if self.smooth <= 0:
            raise ValidationError("hinge smooth width must be positive")
        if self.axis not in ("T", "N", "B"):
            raise ValidationError(f"hinge axis {self.axis!r} must be one of T, N, B")


@dataclass(frozen=True)
class LeafParams:
    """All morphological knobs for one blade or leaflet.

    `width` is the base width for monocots and the maximum width for dicots.
    Angles are in radians; lengths in cm.
    """

    length: float
    width: float
    taper_p: float = 1.2
    alpha: float = 2.0
    beta: float = 2.5
    a_apex: float = 0.0
    a_base: float = 0.0
    skew: float = 0.0
    bend: float = 0.0
    camber: float = 0.0
    camber_pow: float = 1.4
    twist: float = 0.0
    fold: float = 0.0
    fold_pow: float = 1.0
    fold_env_pow: float = 1.0
    midrib_offset: float = 0.0
    width_bias_left: float = 1.0
    width_bias_right: float = 1.0
    hinges: tuple[HingeSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.length <= 0:
            raise ValidationError("leaf length must be positive")
        if self.width <= 0:
            raise ValidationError("leaf width must be positive")
        if self.taper_p <= 0:
            raise ValidationError("taper exponent must be positive")
        if self.camber_pow <= 0:
            raise ValidationError("camber_pow must be positive")
        object.__setattr__(self, "hinges", tuple(self.hinges))


@dataclass(frozen=True)
class LeafGrid:
    """Control-point matrix (m_u x m_v x 3) with its normalized sample coordinates."""

    points: np.ndarray
    u_samples: np.ndarray
    v_samples: np.ndarray

    def __post_init__(self):
        points = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        u = np.ascontiguousarray(np.asarray(self.u_samples, dtype=float))
        v = np.ascontiguousarray(np.asarray(self.v_samples, dtype=float))
        if points.ndim != 3 or points.shape[2] != 3:
            raise ValidationError("leaf grid points must have shape (m_u, m_v, 3)")
        m_u, m_v = points.shape[:2]
        if m_u < 4:
            raise ValidationError(f"need at least 4 longitudinal rows, got {m_u}")
        if m_v < 3:
            raise ValidationError(f"need at least 3 transverse columns, got {m_v}")
        if m_v % 2 == 0:
            raise ValidationError(f"transverse count {m_v} must be odd (midrib column)")
        if len(u) != m_u or len(v) != m_v:
            raise ValidationError("sample coordinates must match grid dimensions")
        if u[0] != 0.0 or u[-1] != 1.0 or np.any(np.diff(u) <= 0):
            raise ValidationError("u samples must increase strictly from 0 to 1")
        if not np.allclose(v + v[::-1], 0.0, atol=1e-12):
            raise ValidationError("v samples must be symmetric about 0")
        for arr in (points, u, v):
            arr.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "u_samples", u)
        object.__setattr__(self, "v_samples", v)

    @property
    def m_u(self) -> int:
        return self.points.shape[0]

    @property
    def m_v(self) -> int:
        return self.points.shape[1]

    @property
    def mid_col(self) -> int:
        return self.points.shape[1] // 2

    def with_points(self, points: np.ndarray) -> "LeafGrid":
        return LeafGrid(points=points, u_samples=self.u_samples, v_samples=self.v_samples)


def _midrib_tangents(points: np.ndarray, mid_col: int) -> np.ndarray:
    """Unit tangents of the midrib column, central differences inside."""
    mid = points[:, mid_col]
    tangents = np.empty_like(mid)
    tangents[0] = mid[1] - mid[0]
    tangents[-1] = mid[-1] - mid[-2]
    if len(mid) > 2:
        tangents[1:-1] = mid[2:] - mid[:-2]
    norms = np.linalg.norm(tangents, axis=1)
    # Collapsed rows (e.g. the tip) fall back to the previous tangent.
    for i in range(len(mid)):
        if norms[i] < 1e-12:
            tangents[i] = tangents[i - 1] if i > 0 else np.array([1.0, 0.0, 0.0])
            norms[i] = np.linalg.norm(tangents[i])
    return tangents / norms[:, None]


def build_leaf_grid(params: LeafParams, m_u: int, m_v: int, family: str) -> LeafGrid:
    """Construct a blade grid in local coordinates and apply smooth deformations.

    Returns the grid after width profile, skew, longitudinal bend, camber,
    twist, and V-fold. Hinges and grafting are separate passes.
    """
    if family not in (MONOCOT, DICOT):
        raise ValidationError(f"unknown family {family!r}")
    u = np.linspace(0.0, 1.0, m_u)
    v = np.linspace(-1.0, 1.0, m_v)

    if family == MONOCOT:
        widths = monocot_width(u, params.width, params.taper_p)
    else:
        widths = dicot_width(u, params.width, params.alpha, params.beta,
                             params.a_apex, params.a_base)
    rel_width = widths / params.width

    bias = np.where(v < 0, params.width_bias_left,
                    np.where(v > 0, params.width_bias_right, 1.0))
    mid_col = m_v // 2

    points = np.zeros((m_u, m_v, 3))
    env = np.sin(np.pi * u)
    points[:, :, 0] = (params.length * u)[:, None]
    points[:, :, 1] = (v * bias)[None, :] * widths[:, None] / 2.0
    # Midrib offset fades with the local width so collapsed rows stay collapsed.
    points[:, mid_col, 1] += params.midrib_offset * rel_width
    points[:, :, 1] += (params.skew * params.width * env)[:, None]
    points[:, :, 2] += (params.bend * params.length * env)[:, None]

    if params.camber != 0.0:
        decay = (1.0 - np.abs(v)) ** params.camber_pow
        points[:, :, 2] += params.camber * params.length * env[:, None] * decay[None, :]

    if params.twist != 0.0:
        tangents = _midrib_tangents(points, mid_col)
        for i in range(m_u):
            rot = rotation_matrix(tangents[i], params.twist * u[i])
            pivot = points[i, mid_col].copy()
            points[i] = pivot + (points[i] - pivot) @ rot.T

    if params.fold != 0.0:
        tangents = _midrib_tangents(points, mid_col)
        fold_env = env**params.fold_env_pow
        for i in range(m_u):
            pivot = points[i, mid_col].copy()
            for j in range(m_v):
                if v[j] == 0.0:
                    continue
                theta = (params.fold * np.sign(v[j]) * abs(v[j]) ** params.fold_pow
                         * fold_env[i])
                rot = rotation_matrix(tangents[i], theta)
                points[i, j] = pivot + rot @ (points[i, j] - pivot)

    return LeafGrid(points=points, u_samples=u, v_samples=v)


def _row_frame(points: np.ndarray, u: np.ndarray, mid_col: int, i0: int):
    """(tangent, normal, binormal) of row i0: binormal is the droop axis."""
    tangent = _midrib_tangents(points, mid_col)[i0]
    row_dir = None
    for i in range(i0, -1, -1):
        d = points[i, -1] - points[i, 0]
        if np.linalg.norm(d) > 1e-12:
            row_dir = d
            break
    if row_dir is None:
        row_dir = np.array([0.0, 1.0, 0.0])
    row_dir = row_dir - (row_dir @ tangent) * tangent
    if np.linalg.norm(row_dir) < 1e-12:
        row_dir = np.array([0.0, 1.0, 0.0])
    row_dir = row_dir / np.linalg.norm(row_dir)
    normal = np.cross(row_dir, tangent)
    normal /= np.linalg.norm(normal)
    binormal = np.cross(tangent, normal)
    return tangent, normal, binormal


def apply_hinges(grid: LeafGrid, hinges) -> LeafGrid:
    """Rotate rows distal to each hinge about per-column pivots.

    Rows at u >= u0 rotate by smoothstep((u - u0)/smooth) * angle about the
    selected frame axis at the pivot row; rows past the transition rotate by
    the full angle, so distal tangents turn by exactly the hinge angle.
    Hinges apply sequentially in list order.
    """
    points = grid.points.copy()
    u = grid.u_samples
    for hinge in hinges:
        if hinge.u0 >= 1.0:
            continue  # no rows distal to the pivot
        i0 = int(np.searchsorted(u, hinge.u0, side="left"))
        if i0 >= grid.m_u:
            continue
        tangent, normal, binormal = _row_frame(points, u, grid.mid_col, i0)
        axis = {"T": tangent, "N": normal, "B": binormal}[hinge.axis]
        theta = np.deg2rad(hinge.angle_deg)
        pivots = points[i0].copy()
        for i in range(i0, grid.m_u):
            w = float(smoothstep((u[i] - hinge.u0) / hinge.smooth))
            if w == 0.0:
                continue
            rot = rotation_matrix(axis, w * theta)
            points[i] = pivots + (points[i] - pivots) @ rot.T
    return grid.with_points(points)


def sample_culm_at_height(culm: FramedCenterline, z: float):
    """Interpolated (point, radius, normal, binormal) of the culm at height z.

    Requires the culm's z coordinates to increase monotonically; raises when
    z falls outside the culm extent.
    """
    zs = culm.points[:, 2]
    if np.any(np.diff(zs) <= 0):
        raise ValidationError("culm centerline is not height-monotone")
    if not (zs[0] <= z <= zs[-1]):
        raise ValidationError(
            f"graft height {z:.3f} cm outside culm extent [{zs[0]:.3f}, {zs[-1]:.3f}]"
        )
    hi = min(max(int(np.searchsorted(zs, z)), 1), len(zs) - 1)
    lo = hi - 1
    w = (z - zs[lo]) / (zs[hi] - zs[lo])
    point = (1.0 - w) * culm.points[lo] + w * culm.points[hi]
    radius = float((1.0 - w) * culm.radii[lo] + w * culm.radii[hi])

    tangent = (1.0 - w) * culm.frames[lo].t + w * culm.frames[hi].t
    tangent /= np.linalg.norm(tangent)
    normal = (1.0 - w) * culm.frames[lo].n + w * culm.frames[hi].n
    normal -= (normal @ tangent) * tangent
    normal /= np.linalg.norm(normal)
    binormal = np.cross(tangent, normal)
    return point, radius, normal, binormal


def hard_graft(
    grid: LeafGrid,
    culm: FramedCenterline,
    z_node: float,
    n_graft: int,
    delta_z_axial: float,
    phi_leaf_deg: float,
    arc_span_deg: float,
    delta_r: float,
) -> LeafGrid:
    """Replace the first n_graft rows with circular-arc samples on the culm.

    Graft row g sits at height z_node + g*dz/(n_graft-1); its m_v points fan
    across arc_span_deg centered on phi_leaf_deg at radius r_culm + delta_r,
    measured in the culm's local cross-section plane.
    """
    if n_graft < 2:
        raise ValidationError("n_graft must be at least 2 (row spacing divides by n_graft-1)")
    if n_graft >= grid.m_u:
        raise ValidationError(f"n_graft {n_graft} must leave free rows (m_u={grid.m_u})")

    m_v = grid.m_v
    points = grid.points.copy()
    half_span = np.deg2rad(arc_span_deg) / 2.0
    phi_leaf = np.deg2rad(phi_leaf_deg)
    for g in range(n_graft):
        z_g = z_node + g * delta_z_axial / (n_graft - 1)
        center, radius, normal, binormal = sample_culm_at_height(culm, z_g)
        j = np.arange(m_v)
        phi = phi_leaf + (2.0 * j / (m_v - 1) - 1.0) * half_span
        ring = (radius + delta_r) * (np.cos(phi)[:, None] * normal
                                     + np.sin(phi)[:, None] * binormal)
        points[g] = center + ring
    return grid.with_points(points)


def soft_blend(
    grid: LeafGrid,
    u_attach: float,
    n_graft: int,
    culm_ring_rows: np.ndarray,
) -> LeafGrid:
    """Blend post-graft rows toward culm-ring geometry near the attachment.

    Rows i >= n_graft with u_i < u_attach are interpolated between their free
    positions and culm_ring_rows[i] with weight 1 - smoothstep(u_i/u_attach);
    at u_attach the blend weight reaches zero (pure leaf geometry).
    """
    if not (0.0 < u_attach <= 1.0):
        raise ValidationError("u_attach must lie in (0, 1]")
    culm_ring_rows = np.asarray(culm_ring_rows, dtype=float)
    if culm_ring_rows.shape != grid.points.shape:
        raise ValidationError("culm_ring_rows must match the grid shape")
    points = grid.points.copy()
    for i in range(n_graft, grid.m_u):
        u_i = grid.u_samples[i]
        if u_i >= u_attach:
            break
        alpha = 1.0 - float(smoothstep(u_i / u_attach))
        points[i] = (1.0 - alpha) * points[i] + alpha * culm_ring_rows[i]
    return grid.with_points(points)
