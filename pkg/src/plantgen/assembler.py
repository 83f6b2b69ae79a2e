"""Whole-plant assembly: stem construction, branch/leaf placement, naming.

Stage 1 integrates the stem/culm centerline internode by internode (each
internode's arclength equals its node-height difference), transports frames,
and sweeps the stem surface. Stage 2 attaches organs per node: grass blades
hard-grafted onto the culm, or petiole -> petiolule -> leaflet hierarchies
for dicots. Identical descriptors always produce bit-identical models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import DicotNode, MonocotNode, PlantDescriptor
from .errors import ValidationError
from .frames import (
    Frame,
    FramedCenterline,
    KappaTerm,
    attachment_frame,
    azimuth_axis,
    integrate_centerline,
    sweep_surface,
)
from .leaf import (
    DICOT,
    MONOCOT,
    LeafGrid,
    LeafParams,
    apply_hinges,
    build_leaf_grid,
    hard_graft,
    sample_culm_at_height,
    soft_blend,
    smoothstep,
)
from .spline import BSplineSurface

_BRANCH_N_SEG = 16  # integration steps for petioles and petiolules


@dataclass(frozen=True)
class PlantModel:
    """Ordered named organ surfaces plus provenance and bounds."""

    surfaces: tuple[tuple[str, BSplineSurface], ...]
    family: str
    fingerprint: str
    bbox_min: np.ndarray
    bbox_max: np.ndarray

    def __post_init__(self):
        paths = [path for path, _ in self.surfaces]
        if len(set(paths)) != len(paths):
            raise ValidationError("organ paths must be unique")

    @property
    def n_surfaces(self) -> int:
        return len(self.surfaces)

    def surface(self, path: str) -> BSplineSurface:
        for p, s in self.surfaces:
            if p == path:
                return s
        raise KeyError(path)


def surface_census(model: PlantModel) -> dict[str, int]:
    """Counts per organ type (culm/stalk/leaf/petiole/petiolule/leaflet)."""
    census: dict[str, int] = {}
    for path, _ in model.surfaces:
        last = path.split("/")[-1]
        organ = last.rstrip("0123456789").split("_")[0]
        census[organ] = census.get(organ, 0) + 1
    return census


def _node_terms(node) -> list[KappaTerm]:
    if node.kappa_terms:
        return [
            KappaTerm(kappa=t.kappa, azimuth_deg=t.azimuth_deg, span=t.span)
            for t in node.kappa_terms
        ]
    if node.kappa != 0.0:
        return [KappaTerm(kappa=abs(node.kappa), azimuth_deg=node.bend_az_deg)]
    return []


def _build_stem(pd: PlantDescriptor) -> FramedCenterline:
    """Integrate the stem/culm centerline and attach radii and frames."""
    position = np.zeros(3)
    tangent = np.array([0.0, 0.0, 1.0])
    points = [position[None, :]]
    prev_z = 0.0
    for node in pd.nodes:
        length = node.z - prev_z
        seg = integrate_centerline(position, tangent, length, pd.n_seg, _node_terms(node))
        points.append(seg[1:])
        tangent = seg[-1] - seg[-2]
        tangent /= np.linalg.norm(tangent)
        position = seg[-1]
        prev_z = node.z

    if pd.family == MONOCOT and pd.apical_extension > 0:
        seg = integrate_centerline(position, tangent, pd.apical_extension, 8, [])
        points.append(seg[1:])

    pts = np.vstack(points)
    seglen = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seglen)])
    node_arcs = np.array([node.z for node in pd.nodes])
    node_radii = np.array([node.diameter_mm / 20.0 for node in pd.nodes])  # mm dia -> cm radius
    radii = np.interp(arc, node_arcs, node_radii)
    return FramedCenterline.build(pts, radii)


def _frame_at_height(culm: FramedCenterline, z: float) -> tuple[np.ndarray, float, Frame]:
    point, radius, normal, binormal = sample_culm_at_height(culm, z)
    tangent = np.cross(normal, binormal)
    return point, radius, Frame(tangent, normal, binormal)


def _oriented(frame: Frame, azimuth_deg: float, pitch_deg: float, roll_deg: float) -> Frame:
    az, pitch, roll = np.deg2rad([azimuth_deg, pitch_deg, roll_deg])
    if az:
        frame = frame.rotated(frame.t, az)
    if pitch:
        frame = frame.rotated(frame.b, pitch)
    if roll:
        frame = frame.rotated(frame.n, roll)
    return frame


def _grid_to_world(grid: LeafGrid, anchor: np.ndarray, frame: Frame) -> LeafGrid:
    """Map local blade coordinates (x midrib, y transverse, z normal) to world.

    The midrib leaves along the frame tangent; local +y follows the binormal
    and the blade normal maps to -N so a horizontal blade faces upward.
    """
    basis = np.column_stack([frame.t, frame.b, -frame.n])
    return grid.with_points(anchor + grid.points @ basis.T)


def _leaf_params(leaf, family: str) -> LeafParams:
    common = dict(
        length=leaf.length,
        width=leaf.width,
        skew=leaf.skew,
        bend=leaf.bend,
        camber=leaf.camber,
        camber_pow=leaf.camber_pow,
        twist=float(np.deg2rad(leaf.twist_deg)),
        midrib_offset=leaf.midrib_offset,
        width_bias_left=leaf.width_bias_left,
        width_bias_right=leaf.width_bias_right,
    )
    if family == MONOCOT:
        return LeafParams(taper_p=leaf.width_pow, hinges=leaf.hinges, **common)
    return LeafParams(
        alpha=leaf.alpha,
        beta=leaf.beta,
        a_apex=leaf.a_apex,
        a_base=leaf.a_base,
        fold=float(np.deg2rad(leaf.fold_deg)),
        fold_pow=leaf.fold_pow,
        fold_env_pow=leaf.fold_env_pow,
        **common,
    )


def _culm_ring_rows(grid: LeafGrid, culm: FramedCenterline, phi_leaf_deg: float,
                    arc_span_deg: float, delta_r: float) -> np.ndarray:
    """Culm-surface arc rows aligned with each grid row (for soft blending)."""
    zs = culm.points[:, 2]
    rows = np.empty_like(grid.points)
    half_span = np.deg2rad(arc_span_deg) / 2.0
    phi_leaf = np.deg2rad(phi_leaf_deg)
    j = np.arange(grid.m_v)
    offsets = 2.0 * j / (grid.m_v - 1) - 1.0
    for i in range(grid.m_u):
        z = float(np.clip(grid.points[i, :, 2].mean(), zs[0], zs[-1]))
        center, radius, normal, binormal = sample_culm_at_height(culm, z)
        phi = phi_leaf + offsets * half_span
        rows[i] = center + (radius + delta_r) * (
            np.cos(phi)[:, None] * normal + np.sin(phi)[:, None] * binormal
        )
    return rows


def _build_monocot_leaf(node: MonocotNode, culm: FramedCenterline) -> BSplineSurface:
    leaf = node.leaf
    grid = build_leaf_grid(_leaf_params(leaf, MONOCOT), leaf.ctrl_u, leaf.ctrl_v, MONOCOT)
    grid = apply_hinges(grid, leaf.hinges)

    point, radius, frame = _frame_at_height(culm, node.z)
    oriented = _oriented(frame, node.leaf_az_deg, node.leaf_pitch_deg, 0.0)
    outward = oriented.n if node.leaf_pitch_deg == 0.0 else None
    # Anchor sits on the culm surface at the leaf azimuth (pre-pitch direction).
    az = np.deg2rad(node.leaf_az_deg)
    radial = np.cos(az) * frame.n + np.sin(az) * frame.b
    anchor = point + (radius + leaf.graft_radial_offset) * radial
    grid = _grid_to_world(grid, anchor, oriented)

    grid = hard_graft(
        grid, culm,
        z_node=node.z,
        n_graft=leaf.n_graft,
        delta_z_axial=leaf.graft_dz,
        phi_leaf_deg=node.leaf_az_deg,
        arc_span_deg=leaf.graft_arc_deg,
        delta_r=leaf.graft_radial_offset,
    )
    if leaf.blend_u > 0.0:
        rings = _culm_ring_rows(grid, culm, node.leaf_az_deg,
                                leaf.graft_arc_deg, leaf.graft_radial_offset)
        grid = soft_blend(grid, leaf.blend_u, leaf.n_graft, rings)

    return BSplineSurface.from_grid(
        grid.points,
        degree_u=min(3, leaf.ctrl_u - 1),
        degree_v=min(3, leaf.ctrl_v - 1),
        name=f"node{node.index:02d}/leaf",
    )


def _branch_centerline(anchor: np.ndarray, frame: Frame, length: float,
                       kappa: float, bend_az_deg: float | None,
                       radius: float, tip_taper: float) -> FramedCenterline:
    """Petiole/petiolule centerline: curvature defaults to the local droop axis."""
    if kappa != 0.0:
        if bend_az_deg is None:
            terms = [KappaTerm(kappa=abs(kappa), axis=frame.b)]
        else:
            terms = [KappaTerm(kappa=abs(kappa), azimuth_deg=bend_az_deg)]
    else:
        terms = []
    pts = integrate_centerline(anchor, frame.t, length, _BRANCH_N_SEG, terms)
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    radii = radius * (1.0 + (tip_taper - 1.0) * arc / arc[-1])
    return FramedCenterline.build(pts, radii, initial_normal=frame.n)


def _build_dicot_node(node: DicotNode, stalk: FramedCenterline, ring_samples: int,
                      out: list[tuple[str, BSplineSurface]]) -> None:
    if node.petiole_count < 1:
        return
    point, radius, stalk_frame = _frame_at_height(stalk, node.z)
    for p_idx in range(node.petiole_count):
        prefix = f"node{node.index:02d}/petiole{p_idx}"
        az = node.petiole_az_deg + 360.0 * p_idx / node.petiole_count
        base_frame = _oriented(stalk_frame, az, node.petiole_pitch_deg, node.petiole_roll_deg)
        radial = (np.cos(np.deg2rad(az)) * stalk_frame.n
                  + np.sin(np.deg2rad(az)) * stalk_frame.b)
        anchor = point + radius * radial

        petiole = node.petiole
        pet_cl = _branch_centerline(
            anchor, base_frame, petiole.length, petiole.kappa, petiole.bend_az_deg,
            petiole.diameter_mm / 20.0, petiole.tip_taper,
        )
        out.append((prefix, sweep_surface(pet_cl, ring_samples, name=prefix)))

        pls = node.petiolules
        slots = (
            ("T", "terminal", 0.0, 0.0, pls.length_terminal),
            ("L", "left", 90.0, pls.yaw_deg, pls.length_lateral),
            ("R", "right", -90.0, pls.yaw_deg, pls.length_lateral),
        )
        for tag, slot, slot_az, slot_pitch, length in slots:
            name = f"{prefix}/petiolule_{tag}"
            _, tip_frame = attachment_frame(pet_cl, 1.0, slot_az, slot_pitch, 0.0)
            plu_cl = _branch_centerline(
                pet_cl.points[-1], tip_frame, length, pls.kappa, None,
                pls.diameter_mm / 20.0, pls.tip_taper,
            )
            out.append((name, sweep_surface(plu_cl, ring_samples, name=name)))

            leaflet = node.leaflets[slot]
            if not leaflet.enable:
                continue
            grid = build_leaf_grid(_leaf_params(leaflet, DICOT),
                                   leaflet.ctrl_u, leaflet.ctrl_v, DICOT)
            _, lf_frame = attachment_frame(
                plu_cl, 1.0, leaflet.yaw_deg, leaflet.pitch_deg, leaflet.roll_deg
            )
            grid = _grid_to_world(grid, plu_cl.points[-1], lf_frame)
            lf_name = f"{name}/leaflet"
            out.append((lf_name, BSplineSurface.from_grid(
                grid.points,
                degree_u=min(3, leaflet.ctrl_u - 1),
                degree_v=min(3, leaflet.ctrl_v - 1),
                name=lf_name,
            )))


def generate_plant(pd: PlantDescriptor) -> PlantModel:
    """Run the full assembly for a resolved descriptor.

    Raises ValidationError with the failing organ path prefixed when any
    organ-level construction rejects its inputs.
    """
    stem_name = "culm" if pd.family == MONOCOT else "stalk"
    try:
        stem = _build_stem(pd)
        surfaces: list[tuple[str, BSplineSurface]] = [
            (stem_name, sweep_surface(stem, pd.ring_samples, name=stem_name))
        ]
    except ValidationError as exc:
        raise ValidationError(f"{stem_name}: {exc}") from exc

    for node in pd.nodes:
        if pd.family == MONOCOT:
            if not node.leaf.enable:
                continue
            path = f"node{node.index:02d}/leaf"
            try:
                surfaces.append((path, _build_monocot_leaf(node, stem)))
            except ValidationError as exc:
                raise ValidationError(f"{path}: {exc}") from exc
        else:
            try:
                _build_dicot_node(node, stem, pd.ring_samples, surfaces)
            except ValidationError as exc:
                raise ValidationError(f"node{node.index:02d}: {exc}") from exc

    grids = [s.control_grid.reshape(-1, 3) for _, s in surfaces]
    stacked = np.vstack(grids)
    return PlantModel(
        surfaces=tuple(surfaces),
        family=pd.family,
        fingerprint=pd.fingerprint,
        bbox_min=stacked.min(axis=0),
        bbox_max=stacked.max(axis=0),
    )
