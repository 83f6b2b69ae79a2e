"""Plant Descriptor (PD) parsing, validation, and parameter resolution.

A PD is a human-readable YAML document holding every architectural and
morphological parameter of one plant. Parsing produces a RawDescriptor that
mirrors the document (scalars stay scalars, lists stay lists); resolution
expands it into per-node parameter records with the precedence
per-organ > per-node > global > built-in default.

Unknown keys are rejected with their dotted location: a silent typo in a
fitted model would quietly corrupt the geometry. Node override indices are
0-based positions into node-z. See docs/pd_schema.md for the full schema.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace

import yaml

from .errors import DescriptorError
from .leaf import DICOT, MONOCOT, HingeSpec

KAPPA_UNITS = ("rad/cm", "per_m")

# Built-in defaults (global level of the inheritance chain).
STEM_DEFAULTS = {
    "stem-diameter-mm": 20.0,
    "stalk-kappa": 0.0,
    "stalk-bend-az-deg": 0.0,
    "stem-ring-samples": 8,
    "n-seg": 64,
    "apical-extension": 5.0,
}

LEAF_DEFAULTS = {
    "ctrl_u": 9,
    "ctrl_v": 5,
    "length": 60.0,
    "width": 8.0,
    "width_pow": 1.2,
    "camber": 0.018,
    "camber_pow": 1.4,
    "bend": 0.2,
    "skew": 0.0,
    "twist-deg": 0.0,
    "midrib-offset": 0.0,
    "width-bias-left": 1.0,
    "width-bias-right": 1.0,
    "enable": True,
    "n-graft": 2,
    "graft-dz": 2.0,
    "graft-arc-deg": 60.0,
    "graft-radial-offset": 0.05,
    "blend-u": 0.0,
    "leaf-bend-hinges": (),
}

PETIOLE_DEFAULTS = {
    "length": 10.0,
    "diameter-mm": 3.0,
    "kappa": 0.0,
    "bend-az-deg": None,
    "tip-taper": 1.0,
}

PETIOLULE_DEFAULTS = {
    "length-terminal": 3.0,
    "length-lateral": 2.0,
    "yaw-deg": 45.0,
    "diameter-mm": 1.5,
    "kappa": 0.0,
    "tip-taper": 1.0,
}

LEAFLET_DEFAULTS = {
    "ctrl_u": 9,
    "ctrl_v": 5,
    "length": 9.0,
    "width": 5.0,
    "alpha": 2.0,
    "beta": 2.5,
    "a_apex": 0.5,
    "a_base": 0.3,
    "camber": 0.02,
    "camber_pow": 1.4,
    "bend": -0.1,
    "skew": 0.0,
    "twist-deg": 0.0,
    "fold-deg": 15.0,
    "fold_pow": 1.0,
    "fold_env_pow": 1.0,
    "midrib-offset": 0.0,
    "width-bias-left": 1.0,
    "width-bias-right": 1.0,
    "yaw-deg": 0.0,
    "pitch-deg": 0.0,
    "roll-deg": 0.0,
    "enable": True,
}

# Value kinds for schema tables.
_FLOAT, _INT, _BOOL, _STR, _HINGES, _OPT_FLOAT = range(6)

LEAF_SCHEMA = {
    "ctrl_u": _INT, "ctrl_v": _INT, "length": _FLOAT, "width": _FLOAT,
    "width_pow": _FLOAT, "camber": _FLOAT, "camber_pow": _FLOAT, "bend": _FLOAT,
    "skew": _FLOAT, "twist-deg": _FLOAT, "midrib-offset": _FLOAT,
    "width-bias-left": _FLOAT, "width-bias-right": _FLOAT, "enable": _BOOL,
    "n-graft": _INT, "graft-dz": _FLOAT, "graft-arc-deg": _FLOAT,
    "graft-radial-offset": _FLOAT, "blend-u": _FLOAT, "leaf-bend-hinges": _HINGES,
}

LEAFLET_SCHEMA = {
    "ctrl_u": _INT, "ctrl_v": _INT, "length": _FLOAT, "width": _FLOAT,
    "alpha": _FLOAT, "beta": _FLOAT, "a_apex": _FLOAT, "a_base": _FLOAT,
    "camber": _FLOAT, "camber_pow": _FLOAT, "bend": _FLOAT, "skew": _FLOAT,
    "twist-deg": _FLOAT, "fold-deg": _FLOAT, "fold_pow": _FLOAT,
    "fold_env_pow": _FLOAT, "midrib-offset": _FLOAT, "width-bias-left": _FLOAT,
    "width-bias-right": _FLOAT, "yaw-deg": _FLOAT, "pitch-deg": _FLOAT,
    "roll-deg": _FLOAT, "enable": _BOOL,
}

PETIOLE_SCHEMA = {
    "length": _FLOAT, "diameter-mm": _FLOAT, "kappa": _FLOAT,
    "bend-az-deg": _OPT_FLOAT, "tip-taper": _FLOAT,
}

PETIOLULE_SCHEMA = {
    "length-terminal": _FLOAT, "length-lateral": _FLOAT, "yaw-deg": _FLOAT,
    "diameter-mm": _FLOAT, "kappa": _FLOAT, "tip-taper": _FLOAT,
}

_LEAFLET_SLOTS = ("terminal", "left", "right")


@dataclass
class RawDescriptor:
    """Typed mirror of a PD document. Unset keys are None (filled at resolve)."""

    node_z: list[float]
    family: str | None = None
    outfile: str | None = None
    seed: int | None = None
    kappa_unit: str | None = None
    apical_extension: float | None = None
    stem_diameter_mm: float | list[float] | None = None
    stalk_kappa: float | list[float] | None = None
    stalk_bend_az_deg: float | list[float] | None = None
    stalk_kappa_terms: dict[int, list[dict]] | None = None
    stem_ring_samples: int | None = None
    n_seg: int | None = None
    # Monocot leaf placement.
    leaf_az_deg: float | list[float] | None = None
    leaf_pitch_deg: float | list[float] | None = None
    leaf_enable: bool | list[bool] | None = None
    leaves_globals: dict | None = None
    # Dicot branch placement.
    petiole_az_deg: float | list[float] | None = None
    petiole_pitch_deg: float | list[float] | None = None
    petiole_roll_deg: float | list[float] | None = None
    petiole_count: int | list[int] | None = None
    petioles_globals: dict | None = None
    petiolules_globals: dict | None = None
    leaflets_globals: dict | None = None
    nodes: dict[int, dict] = field(default_factory=dict)

    @property
    def resolved_family(self) -> str:
        return self.family or MONOCOT


@dataclass(frozen=True)
class KappaTermSpec:
    """Raw multi-axis curvature term for one internode."""

    kappa: float
    azimuth_deg: float
    span: tuple[float, float] = (0.0, 1.0)


@dataclass(frozen=True)
class LeafSettings:
    ctrl_u: int
    ctrl_v: int
    length: float
    width: float
    width_pow: float
    camber: float
    camber_pow: float
    bend: float
    skew: float
    twist_deg: float
    midrib_offset: float
    width_bias_left: float
    width_bias_right: float
    enable: bool
    n_graft: int
    graft_dz: float
    graft_arc_deg: float
    graft_radial_offset: float
    blend_u: float
    hinges: tuple[HingeSpec, ...]


@dataclass(frozen=True)
class LeafletSettings:
    ctrl_u: int
    ctrl_v: int
    length: float
    width: float
    alpha: float
    beta: float
    a_apex: float
    a_base: float
    camber: float
    camber_pow: float
    bend: float
    skew: float
    twist_deg: float
    fold_deg: float
    fold_pow: float
    fold_env_pow: float
    midrib_offset: float
    width_bias_left: float
    width_bias_right: float
    yaw_deg: float
    pitch_deg: float
    roll_deg: float
    enable: bool


@dataclass(frozen=True)
class PetioleSettings:
    length: float
    diameter_mm: float
    kappa: float
    bend_az_deg: float | None
    tip_taper: float


@dataclass(frozen=True)
class PetioluleSettings:
    length_terminal: float
    length_lateral: float
    yaw_deg: float
    diameter_mm: float
    kappa: float
    tip_taper: float


@dataclass(frozen=True)
class MonocotNode:
    index: int
    z: float
    diameter_mm: float
    kappa: float
    bend_az_deg: float
    kappa_terms: tuple[KappaTermSpec, ...]
    leaf_az_deg: float
    leaf_pitch_deg: float
    leaf: LeafSettings


@dataclass(frozen=True)
class DicotNode:
    index: int
    z: float
    diameter_mm: float
    kappa: float
    bend_az_deg: float
    kappa_terms: tuple[KappaTermSpec, ...]
    petiole_az_deg: float
    petiole_pitch_deg: float
    petiole_roll_deg: float
    petiole_count: int
    petiole: PetioleSettings
    petiolules: PetioluleSettings
    leaflets: dict[str, LeafletSettings]


@dataclass(frozen=True)
class PlantDescriptor:
    """Fully resolved parameter tree: every node carries a complete record."""

    family: str
    seed: int
    outfile: str | None
    apical_extension: float
    ring_samples: int
    n_seg: int
    nodes: tuple
    fingerprint: str
    lint_warnings: tuple[str, ...] = ()

    @property
    def node_z(self) -> list[float]:
        return [n.z for n in self.nodes]


# ---------------------------------------------------------------------------
# Parsing


def _err(msg: str, loc: str) -> DescriptorError:
    return DescriptorError(msg, location=loc)


def _as_float(value, loc: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _err(f"expected a number, got {type(value).__name__}", loc)
    value = float(value)
    if value != value or value in (float("inf"), float("-inf")):
        raise _err("value must be finite", loc)
    return value


def _as_int(value, loc: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _err(f"expected an integer, got {type(value).__name__}", loc)
    return value


def _as_bool(value, loc: str) -> bool:
    if not isinstance(value, bool):
        raise _err(f"expected a boolean, got {type(value).__name__}", loc)
    return value


def _as_str(value, loc: str) -> str:
    if not isinstance(value, str):
        raise _err(f"expected a string, got {type(value).__name__}", loc)
    return value


def _scalar_or_list(value, loc: str, kind=_FLOAT):
    conv = {_FLOAT: _as_float, _INT: _as_int, _BOOL: _as_bool}[kind]
    if isinstance(value, list):
        return [conv(item, f"{loc}[{i}]") for i, item in enumerate(value)]
    return conv(value, loc)


def _parse_hinges(value, loc: str) -> tuple[HingeSpec, ...]:
    if not isinstance(value, list):
        raise _err("expected a list of hinge mappings", loc)
    hinges = []
    for i, item in enumerate(value):
        hloc = f"{loc}[{i}]"
        if not isinstance(item, dict):
            raise _err("hinge entry must be a mapping", hloc)
        known = {"u0", "angle-deg", "axis", "smooth"}
        for key in item:
            if key not in known:
                raise _err(f"unknown hinge key {key!r}", hloc)
        if "u0" not in item or "angle-deg" not in item:
            raise _err("hinge needs at least u0 and angle-deg", hloc)
        try:
            hinges.append(HingeSpec(
                u0=_as_float(item["u0"], f"{hloc}.u0"),
                angle_deg=_as_float(item["angle-deg"], f"{hloc}.angle-deg"),
                axis=_as_str(item.get("axis", "B"), f"{hloc}.axis"),
                smooth=_as_float(item.get("smooth", 0.02), f"{hloc}.smooth"),
            ))
        except DescriptorError:
            raise
        except ValueError as exc:
            raise _err(str(exc), hloc) from exc
    return tuple(hinges)


def _parse_section(value, schema: dict, loc: str) -> dict:
    """Validate one parameter mapping against a schema table."""
    if not isinstance(value, dict):
        raise _err("expected a mapping", loc)
    out = {}
    for key, raw in value.items():
        kloc = f"{loc}.{key}"
        if key not in schema:
            raise _err(f"unknown key {key!r}", kloc)
        kind = schema[key]
        if kind == _FLOAT:
            out[key] = _as_float(raw, kloc)
        elif kind == _INT:
            out[key] = _as_int(raw, kloc)
        elif kind == _BOOL:
            out[key] = _as_bool(raw, kloc)
        elif kind == _HINGES:
            out[key] = _parse_hinges(raw, kloc)
        elif kind == _OPT_FLOAT:
            out[key] = None if raw is None else _as_float(raw, kloc)
        else:
            raise _err(f"unhandled schema kind for {key!r}", kloc)
    return out


def _parse_globals_wrapper(value, schema: dict, loc: str) -> dict:
    """Sections like `leaves:` hold a single `globals:` mapping."""
    if not isinstance(value, dict):
        raise _err("expected a mapping with a 'globals' entry", loc)
    for key in value:
        if key != "globals":
            raise _err(f"unknown key {key!r} (only 'globals' is allowed here)", f"{loc}.{key}")
    return _parse_section(value.get("globals", {}), schema, f"{loc}.globals")


def _parse_kappa_terms(value, loc: str) -> dict[int, list[dict]]:
    if not isinstance(value, dict):
        raise _err("expected a mapping of internode index to term list", loc)
    out: dict[int, list[dict]] = {}
    for key, terms in value.items():
        kloc = f"{loc}.{key}"
        idx = _as_int(key, kloc)
        if not isinstance(terms, list):
            raise _err("expected a list of curvature terms", kloc)
        parsed = []
        for i, term in enumerate(terms):
            tloc = f"{kloc}[{i}]"
            if not isinstance(term, dict):
                raise _err("curvature term must be a mapping", tloc)
            for tkey in term:
                if tkey not in ("kappa", "az-deg", "span"):
                    raise _err(f"unknown key {tkey!r}", f"{tloc}.{tkey}")
            span = term.get("span", [0.0, 1.0])
            if not (isinstance(span, list) and len(span) == 2):
                raise _err("span must be a two-element list", f"{tloc}.span")
            parsed.append({
                "kappa": _as_float(term.get("kappa", 0.0), f"{tloc}.kappa"),
                "az-deg": _as_float(term.get("az-deg", 0.0), f"{tloc}.az-deg"),
                "span": [_as_float(span[0], f"{tloc}.span[0]"),
                         _as_float(span[1], f"{tloc}.span[1]")],
            })
        out[idx] = parsed
    return out


_REQUIRED_KEYS = ("node-z",)

_COMMON_TOP = {
    "family", "outfile", "seed", "units", "apical-extension", "node-z",
    "stem-diameter-mm", "stalk-kappa", "stalk-bend-az-deg", "stalk-kappa-terms",
    "stem-ring-samples", "n-seg", "nodes",
}
_MONOCOT_TOP = _COMMON_TOP | {"leaf-az-deg", "leaf-pitch-deg", "leaf-enable", "leaves"}
_DICOT_TOP = _COMMON_TOP | {
    "petiole-az-deg", "petiole-pitch-deg", "petiole-roll-deg", "petiole-count",
    "petioles", "petiolules", "leaflets",
}

_DICOT_NODE_SECTIONS = {
    "petiole": PETIOLE_SCHEMA,
    "petiolules": PETIOLULE_SCHEMA,
    "leaflets": LEAFLET_SCHEMA,
    "leaflet-terminal": LEAFLET_SCHEMA,
    "leaflet-left": LEAFLET_SCHEMA,
    "leaflet-right": LEAFLET_SCHEMA,
}


def parse_descriptor(text: str) -> RawDescriptor:
    """Parse a PD YAML document into a typed RawDescriptor.

    Raises DescriptorError with a line/column position on YAML syntax errors
    and with a dotted key location on schema violations.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1} column {mark.column + 1}: " if mark else ""
        raise DescriptorError(f"YAML syntax error: {where}{exc}") from exc

    if doc is None:
        raise DescriptorError(
            "empty document; required keys: " + ", ".join(_REQUIRED_KEYS)
        )
    if not isinstance(doc, dict):
        raise DescriptorError("descriptor must be a YAML mapping")

    family = MONOCOT
    if "family" in doc:
        family = _as_str(doc["family"], "family")
        if family not in (MONOCOT, DICOT):
            raise _err(f"family must be {MONOCOT!r} or {DICOT!r}", "family")

    allowed = _MONOCOT_TOP if family == MONOCOT else _DICOT_TOP
    for key in doc:
        if key not in allowed:
            raise _err(f"unknown key {key!r} for family {family!r}", key)
    for key in _REQUIRED_KEYS:
        if key not in doc:
            raise DescriptorError(
                f"missing required key {key!r}; required keys: "
                + ", ".join(_REQUIRED_KEYS)
            )

    node_z_raw = doc["node-z"]
    if not isinstance(node_z_raw, list) or not node_z_raw:
        raise _err("expected a non-empty list of heights (cm)", "node-z")
    node_z = [_as_float(z, f"node-z[{i}]") for i, z in enumerate(node_z_raw)]

    raw = RawDescriptor(node_z=node_z, family=doc.get("family"))
    if "outfile" in doc:
        raw.outfile = _as_str(doc["outfile"], "outfile")
    if "seed" in doc:
        raw.seed = _as_int(doc["seed"], "seed")
    if "units" in doc:
        units = doc["units"]
        if not isinstance(units, dict):
            raise _err("expected a mapping", "units")
        for key in units:
            if key != "kappa":
                raise _err(f"unknown key {key!r}", f"units.{key}")
        if "kappa" in units:
            unit = _as_str(units["kappa"], "units.kappa")
            if unit not in KAPPA_UNITS:
                raise _err(f"curvature unit must be one of {KAPPA_UNITS}", "units.kappa")
            raw.kappa_unit = unit
    if "apical-extension" in doc:
        raw.apical_extension = _as_float(doc["apical-extension"], "apical-extension")
    if "stem-diameter-mm" in doc:
        raw.stem_diameter_mm = _scalar_or_list(doc["stem-diameter-mm"], "stem-diameter-mm")
    if "stalk-kappa" in doc:
        raw.stalk_kappa = _scalar_or_list(doc["stalk-kappa"], "stalk-kappa")
    if "stalk-bend-az-deg" in doc:
        raw.stalk_bend_az_deg = _scalar_or_list(doc["stalk-bend-az-deg"], "stalk-bend-az-deg")
    if "stalk-kappa-terms" in doc:
        raw.stalk_kappa_terms = _parse_kappa_terms(doc["stalk-kappa-terms"], "stalk-kappa-terms")
    if "stem-ring-samples" in doc:
        raw.stem_ring_samples = _as_int(doc["stem-ring-samples"], "stem-ring-samples")
    if "n-seg" in doc:
        raw.n_seg = _as_int(doc["n-seg"], "n-seg")

    if family == MONOCOT:
        if "leaf-az-deg" in doc:
            raw.leaf_az_deg = _scalar_or_list(doc["leaf-az-deg"], "leaf-az-deg")
        if "leaf-pitch-deg" in doc:
            raw.leaf_pitch_deg = _scalar_or_list(doc["leaf-pitch-deg"], "leaf-pitch-deg")
        if "leaf-enable" in doc:
            raw.leaf_enable = _scalar_or_list(doc["leaf-enable"], "leaf-enable", _BOOL)
        if "leaves" in doc:
            raw.leaves_globals = _parse_globals_wrapper(doc["leaves"], LEAF_SCHEMA, "leaves")
    else:
        if "petiole-az-deg" in doc:
            raw.petiole_az_deg = _scalar_or_list(doc["petiole-az-deg"], "petiole-az-deg")
        if "petiole-pitch-deg" in doc:
            raw.petiole_pitch_deg = _scalar_or_list(doc["petiole-pitch-deg"], "petiole-pitch-deg")
        if "petiole-roll-deg" in doc:
            raw.petiole_roll_deg = _scalar_or_list(doc["petiole-roll-deg"], "petiole-roll-deg")
        if "petiole-count" in doc:
            raw.petiole_count = _scalar_or_list(doc["petiole-count"], "petiole-count", _INT)
        if "petioles" in doc:
            raw.petioles_globals = _parse_globals_wrapper(doc["petioles"], PETIOLE_SCHEMA, "petioles")
        if "petiolules" in doc:
            raw.petiolules_globals = _parse_globals_wrapper(doc["petiolules"], PETIOLULE_SCHEMA, "petiolules")
        if "leaflets" in doc:
            raw.leaflets_globals = _parse_globals_wrapper(doc["leaflets"], LEAFLET_SCHEMA, "leaflets")

    if "nodes" in doc:
        sections = doc["nodes"]
        if not isinstance(sections, dict):
            raise _err("expected a mapping of node index to overrides", "nodes")
        for key, body in sections.items():
            kloc = f"nodes.{key}"
            idx = _as_int(key, kloc)
            if family == MONOCOT:
                raw.nodes[idx] = _parse_section(body, LEAF_SCHEMA, kloc)
            else:
                if not isinstance(body, dict):
                    raise _err("expected a mapping of organ sections", kloc)
                node_override: dict = {}
                for skey, sval in body.items():
                    sloc = f"{kloc}.{skey}"
                    if skey not in _DICOT_NODE_SECTIONS:
                        raise _err(f"unknown key {skey!r}", sloc)
                    node_override[skey] = _parse_section(sval, _DICOT_NODE_SECTIONS[skey], sloc)
                raw.nodes[idx] = node_override
    return raw


# ---------------------------------------------------------------------------
# Serialization


def _hinges_to_yaml(hinges) -> list[dict]:
    return [
        {"u0": h.u0, "angle-deg": h.angle_deg, "axis": h.axis, "smooth": h.smooth}
        for h in hinges
    ]


def _section_to_yaml(section: dict) -> dict:
    out = {}
    for key, value in section.items():
        out[key] = _hinges_to_yaml(value) if key == "leaf-bend-hinges" else value
    return out


def serialize_descriptor(raw: RawDescriptor) -> str:
    """Deterministic YAML rendering of a RawDescriptor (stable key order)."""
    doc: dict = {}
    if raw.family is not None:
        doc["family"] = raw.family
    if raw.outfile is not None:
        doc["outfile"] = raw.outfile
    if raw.seed is not None:
        doc["seed"] = raw.seed
    if raw.kappa_unit is not None:
        doc["units"] = {"kappa": raw.kappa_unit}
    if raw.apical_extension is not None:
        doc["apical-extension"] = raw.apical_extension
    doc["node-z"] = list(raw.node_z)
    for key, value in (
        ("stem-diameter-mm", raw.stem_diameter_mm),
        ("stalk-kappa", raw.stalk_kappa),
        ("stalk-bend-az-deg", raw.stalk_bend_az_deg),
    ):
        if value is not None:
            doc[key] = value
    if raw.stalk_kappa_terms is not None:
        doc["stalk-kappa-terms"] = {
            idx: [dict(t) for t in terms] for idx, terms in raw.stalk_kappa_terms.items()
        }
    if raw.stem_ring_samples is not None:
        doc["stem-ring-samples"] = raw.stem_ring_samples
    if raw.n_seg is not None:
        doc["n-seg"] = raw.n_seg

    if raw.resolved_family == MONOCOT:
        for key, value in (
            ("leaf-az-deg", raw.leaf_az_deg),
            ("leaf-pitch-deg", raw.leaf_pitch_deg),
            ("leaf-enable", raw.leaf_enable),
        ):
            if value is not None:
                doc[key] = value
        if raw.leaves_globals is not None:
            doc["leaves"] = {"globals": _section_to_yaml(raw.leaves_globals)}
    else:
        for key, value in (
            ("petiole-az-deg", raw.petiole_az_deg),
            ("petiole-pitch-deg", raw.petiole_pitch_deg),
            ("petiole-roll-deg", raw.petiole_roll_deg),
            ("petiole-count", raw.petiole_count),
        ):
            if value is not None:
                doc[key] = value
        if raw.petioles_globals is not None:
            doc["petioles"] = {"globals": _section_to_yaml(raw.petioles_globals)}
        if raw.petiolules_globals is not None:
            doc["petiolules"] = {"globals": _section_to_yaml(raw.petiolules_globals)}
        if raw.leaflets_globals is not None:
            doc["leaflets"] = {"globals": _section_to_yaml(raw.leaflets_globals)}

    if raw.nodes:
        nodes_doc = {}
        for idx in sorted(raw.nodes):
            body = raw.nodes[idx]
            if raw.resolved_family == MONOCOT:
                nodes_doc[idx] = _section_to_yaml(body)
            else:
                nodes_doc[idx] = {skey: _section_to_yaml(sval) for skey, sval in body.items()}
        doc["nodes"] = nodes_doc

    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


# ---------------------------------------------------------------------------
# Resolution


def _broadcast(value, n_nodes: int, key: str, default) -> list:
    if value is None:
        value = default
    if isinstance(value, list):
        if len(value) == n_nodes:
            return list(value)
        if len(value) == 1:
            return list(value) * n_nodes
        raise _err(
            f"list has {len(value)} entries but the plant has {n_nodes} nodes",
            key,
        )
    return [value] * n_nodes


def _settings_key(key: str) -> str:
    return key.replace("-", "_")


def _merge_settings(cls, defaults: dict, *layers: dict | None, rename: dict | None = None):
    """Apply override layers (lowest precedence first) over built-in defaults."""
    merged = dict(defaults)
    for layer in layers:
        if layer:
            merged.update(layer)
    rename = rename or {}
    kwargs = {}
    for key, value in merged.items():
        kwargs[rename.get(key, _settings_key(key))] = value
    return cls(**kwargs)


_LEAF_RENAME = {"leaf_bend_hinges": "hinges"}


def _leaf_settings(*layers) -> LeafSettings:
    merged = dict(LEAF_DEFAULTS)
    for layer in layers:
        if layer:
            merged.update(layer)
    kwargs = {_settings_key(k): v for k, v in merged.items()}
    kwargs["hinges"] = tuple(kwargs.pop("leaf_bend_hinges"))
    return LeafSettings(**kwargs)


def _leaflet_settings(*layers) -> LeafletSettings:
    merged = dict(LEAFLET_DEFAULTS)
    for layer in layers:
        if layer:
            merged.update(layer)
    return LeafletSettings(**{_settings_key(k): v for k, v in merged.items()})


def _petiole_settings(*layers) -> PetioleSettings:
    merged = dict(PETIOLE_DEFAULTS)
    for layer in layers:
        if layer:
            merged.update(layer)
    return PetioleSettings(**{_settings_key(k): v for k, v in merged.items()})


def _petiolule_settings(*layers) -> PetioluleSettings:
    merged = dict(PETIOLULE_DEFAULTS)
    for layer in layers:
        if layer:
            merged.update(layer)
    return PetioluleSettings(**{_settings_key(k): v for k, v in merged.items()})


def _kappa_scale(unit: str) -> float:
    # Internal curvature unit is rad/cm; per_m values are 100x larger.
    return 1.0 if unit == "rad/cm" else 0.01


def _lint(pd_nodes: list, family: str) -> list[str]:
    """Soft range checks from fitted-model parameter ranges; never hard errors."""
    warnings = []
    for node in pd_nodes:
        tag = f"node {node.index}"
        if abs(node.kappa) > 0.011:
            warnings.append(
                f"{tag}: stalk kappa {node.kappa:.4f} rad/cm outside fitted range [0, 0.011]"
            )
        if family == MONOCOT:
            if not (0.0 <= node.leaf_pitch_deg <= 90.0):
                warnings.append(
                    f"{tag}: leaf pitch {node.leaf_pitch_deg:.1f} deg outside [0, 90]"
                )
            if not (4.5 <= node.leaf.length <= 102.0):
                warnings.append(
                    f"{tag}: leaf length {node.leaf.length:.1f} cm outside fitted range [4.5, 102]"
                )
            if node.leaf.bend < 0:
                warnings.append(
                    f"{tag}: monocot bend {node.leaf.bend:.3f} is negative (convention: upward arch > 0)"
                )
        else:
            for slot, leaflet in node.leaflets.items():
                if leaflet.bend > 0:
                    warnings.append(
                        f"{tag}/{slot}: dicot bend {leaflet.bend:.3f} is positive (convention: droop < 0)"
                    )
    return warnings


def resolve_parameters(raw: RawDescriptor) -> PlantDescriptor:
    """Expand a RawDescriptor into fully resolved per-node records.

    Precedence: per-organ > per-node > global > built-in default. Scalars
    broadcast to the node count. Curvature values are converted to rad/cm
    internally according to the declared unit.
    """
    node_z = list(raw.node_z)
    n_nodes = len(node_z)
    if any(b <= a for a, b in zip(node_z, node_z[1:])):
        raise _err("heights must be strictly increasing", "node-z")
    if node_z[0] <= 0:
        raise _err("first node height must be positive (stem starts at ground level)", "node-z")

    family = raw.resolved_family
    unit = raw.kappa_unit or "rad/cm"
    kscale = _kappa_scale(unit)

    diameters = _broadcast(raw.stem_diameter_mm, n_nodes, "stem-diameter-mm",
                           STEM_DEFAULTS["stem-diameter-mm"])
    if any(d <= 0 for d in diameters):
        raise _err("diameters must be positive", "stem-diameter-mm")
    kappas = [k * kscale for k in
              _broadcast(raw.stalk_kappa, n_nodes, "stalk-kappa", STEM_DEFAULTS["stalk-kappa"])]
    bend_az = _broadcast(raw.stalk_bend_az_deg, n_nodes, "stalk-bend-az-deg",
                         STEM_DEFAULTS["stalk-bend-az-deg"])

    kappa_terms: dict[int, tuple[KappaTermSpec, ...]] = {}
    if raw.stalk_kappa_terms:
        for idx, terms in raw.stalk_kappa_terms.items():
            if not (0 <= idx < n_nodes):
                raise _err(f"internode index {idx} out of range [0, {n_nodes - 1}]",
                           "stalk-kappa-terms")
            kappa_terms[idx] = tuple(
                KappaTermSpec(kappa=t["kappa"] * kscale, azimuth_deg=t["az-deg"],
                              span=(t["span"][0], t["span"][1]))
                for t in terms
            )

    for idx in raw.nodes:
        if not (0 <= idx < n_nodes):
            raise _err(f"node index {idx} out of range [0, {n_nodes - 1}] (indices are 0-based)",
                       f"nodes.{idx}")

    nodes: list = []
    if family == MONOCOT:
        leaf_az = _broadcast(raw.leaf_az_deg, n_nodes, "leaf-az-deg",
                             [0.0 if i % 2 == 0 else 180.0 for i in range(n_nodes)])
        leaf_pitch = _broadcast(raw.leaf_pitch_deg, n_nodes, "leaf-pitch-deg", 30.0)
        leaf_enable = _broadcast(raw.leaf_enable, n_nodes, "leaf-enable", True)
        for i in range(n_nodes):
            overrides = raw.nodes.get(i)
            leaf = _leaf_settings(raw.leaves_globals, overrides)
            if not leaf_enable[i]:
                leaf = replace(leaf, enable=False)
            nodes.append(MonocotNode(
                index=i, z=node_z[i], diameter_mm=diameters[i], kappa=kappas[i],
                bend_az_deg=bend_az[i], kappa_terms=kappa_terms.get(i, ()),
                leaf_az_deg=leaf_az[i], leaf_pitch_deg=leaf_pitch[i], leaf=leaf,
            ))
    else:
        pet_az = _broadcast(raw.petiole_az_deg, n_nodes, "petiole-az-deg",
                            [0.0 if i % 2 == 0 else 180.0 for i in range(n_nodes)])
        pet_pitch = _broadcast(raw.petiole_pitch_deg, n_nodes, "petiole-pitch-deg", 45.0)
        pet_roll = _broadcast(raw.petiole_roll_deg, n_nodes, "petiole-roll-deg", 0.0)
        pet_count = _broadcast(raw.petiole_count, n_nodes, "petiole-count", 1)
        for i in range(n_nodes):
            overrides = raw.nodes.get(i) or {}
            petiole = _petiole_settings(raw.petioles_globals, overrides.get("petiole"))
            petiole = replace(petiole, kappa=petiole.kappa * kscale)
            petiolules = _petiolule_settings(raw.petiolules_globals, overrides.get("petiolules"))
            petiolules = replace(petiolules, kappa=petiolules.kappa * kscale)
            leaflets = {
                slot: _leaflet_settings(raw.leaflets_globals, overrides.get("leaflets"),
                                        overrides.get(f"leaflet-{slot}"))
                for slot in _LEAFLET_SLOTS
            }
            nodes.append(DicotNode(
                index=i, z=node_z[i], diameter_mm=diameters[i], kappa=kappas[i],
                bend_az_deg=bend_az[i], kappa_terms=kappa_terms.get(i, ()),
                petiole_az_deg=pet_az[i], petiole_pitch_deg=pet_pitch[i],
                petiole_roll_deg=pet_roll[i], petiole_count=pet_count[i],
                petiole=petiole, petiolules=petiolules, leaflets=leaflets,
            ))

    fingerprint = hashlib.sha256(serialize_descriptor(raw).encode()).hexdigest()
    pd = PlantDescriptor(
        family=family,
        seed=raw.seed if raw.seed is not None else 0,
        outfile=raw.outfile,
        apical_extension=(raw.apical_extension if raw.apical_extension is not None
                          else STEM_DEFAULTS["apical-extension"]),
        ring_samples=(raw.stem_ring_samples if raw.stem_ring_samples is not None
                      else STEM_DEFAULTS["stem-ring-samples"]),
        n_seg=raw.n_seg if raw.n_seg is not None else STEM_DEFAULTS["n-seg"],
        nodes=tuple(nodes),
        fingerprint=fingerprint,
        lint_warnings=tuple(_lint(nodes, family)),
    )
    if pd.ring_samples < 4:
        raise _err("ring sample count must be at least 4", "stem-ring-samples")
    if pd.n_seg < 1:
        raise _err("integration step count must be at least 1", "n-seg")
    return pd


def resolved_to_raw(pd: PlantDescriptor) -> RawDescriptor:
    """Fully explicit RawDescriptor for a resolved descriptor.

    Every per-node value is written out as a list and every leaf/organ section
    is complete, so re-resolving the serialization reproduces the same
    PlantDescriptor (resolution idempotence).
    """
    n = len(pd.nodes)
    raw = RawDescriptor(node_z=[node.z for node in pd.nodes], family=pd.family)
    raw.seed = pd.seed
    raw.outfile = pd.outfile
    raw.kappa_unit = "rad/cm"
    raw.apical_extension = pd.apical_extension
    raw.stem_ring_samples = pd.ring_samples
    raw.n_seg = pd.n_seg
    raw.stem_diameter_mm = [node.diameter_mm for node in pd.nodes]
    raw.stalk_kappa = [node.kappa for node in pd.nodes]
    raw.stalk_bend_az_deg = [node.bend_az_deg for node in pd.nodes]
    terms = {
        node.index: [
            {"kappa": t.kappa, "az-deg": t.azimuth_deg, "span": [t.span[0], t.span[1]]}
            for t in node.kappa_terms
        ]
        for node in pd.nodes if node.kappa_terms
    }
    raw.stalk_kappa_terms = terms or None

    if pd.family == MONOCOT:
        raw.leaf_az_deg = [node.leaf_az_deg for node in pd.nodes]
        raw.leaf_pitch_deg = [node.leaf_pitch_deg for node in pd.nodes]
        raw.leaf_enable = [node.leaf.enable for node in pd.nodes]
        raw.nodes = {
            node.index: {
                "ctrl_u": node.leaf.ctrl_u, "ctrl_v": node.leaf.ctrl_v,
                "length": node.leaf.length, "width": node.leaf.width,
                "width_pow": node.leaf.width_pow, "camber": node.leaf.camber,
                "camber_pow": node.leaf.camber_pow, "bend": node.leaf.bend,
                "skew": node.leaf.skew, "twist-deg": node.leaf.twist_deg,
                "midrib-offset": node.leaf.midrib_offset,
                "width-bias-left": node.leaf.width_bias_left,
                "width-bias-right": node.leaf.width_bias_right,
                "enable": node.leaf.enable, "n-graft": node.leaf.n_graft,
                "graft-dz": node.leaf.graft_dz, "graft-arc-deg": node.leaf.graft_arc_deg,
                "graft-radial-offset": node.leaf.graft_radial_offset,
                "blend-u": node.leaf.blend_u, "leaf-bend-hinges": node.leaf.hinges,
            }
            for node in pd.nodes
        }
    else:
        raw.petiole_az_deg = [node.petiole_az_deg for node in pd.nodes]
        raw.petiole_pitch_deg = [node.petiole_pitch_deg for node in pd.nodes]
        raw.petiole_roll_deg = [node.petiole_roll_deg for node in pd.nodes]
        raw.petiole_count = [node.petiole_count for node in pd.nodes]

        def leaflet_section(lf: LeafletSettings) -> dict:
            return {
                "ctrl_u": lf.ctrl_u, "ctrl_v": lf.ctrl_v, "length": lf.length,
                "width": lf.width, "alpha": lf.alpha, "beta": lf.beta,
                "a_apex": lf.a_apex, "a_base": lf.a_base, "camber": lf.camber,
                "camber_pow": lf.camber_pow, "bend": lf.bend, "skew": lf.skew,
                "twist-deg": lf.twist_deg, "fold-deg": lf.fold_deg,
                "fold_pow": lf.fold_pow, "fold_env_pow": lf.fold_env_pow,
                "midrib-offset": lf.midrib_offset,
                "width-bias-left": lf.width_bias_left,
                "width-bias-right": lf.width_bias_right,
                "yaw-deg": lf.yaw_deg, "pitch-deg": lf.pitch_deg,
                "roll-deg": lf.roll_deg, "enable": lf.enable,
            }

        raw.nodes = {
            node.index: {
                "petiole": {
                    "length": node.petiole.length, "diameter-mm": node.petiole.diameter_mm,
                    "kappa": node.petiole.kappa, "bend-az-deg": node.petiole.bend_az_deg,
                    "tip-taper": node.petiole.tip_taper,
                },
                "petiolules": {
                    "length-terminal": node.petiolules.length_terminal,
                    "length-lateral": node.petiolules.length_lateral,
                    "yaw-deg": node.petiolules.yaw_deg,
                    "diameter-mm": node.petiolules.diameter_mm,
                    "kappa": node.petiolules.kappa,
                    "tip-taper": node.petiolules.tip_taper,
                },
                **{f"leaflet-{slot}": leaflet_section(node.leaflets[slot])
                   for slot in _LEAFLET_SLOTS},
            }
            for node in pd.nodes
        }
    return raw


def seed_template(node_z: list[float], leaf_count: int, family: str = MONOCOT) -> RawDescriptor:
    """Deterministic starter descriptor from node heights and a leaf count.

    Leaves are placed with alternating 0/180 degree azimuths (distichous
    phyllotaxy), default diameters, zero curvature, and no hinges. Only the
    first leaf_count nodes carry an enabled leaf.
    """
    node_z = [float(z) for z in node_z]
    n = len(node_z)
    if leaf_count < 0 or leaf_count > n:
        raise DescriptorError(
            f"leaf count {leaf_count} must lie in [0, {n}] for {n} nodes"
        )
    raw = RawDescriptor(node_z=node_z, family=family)
    raw.seed = 2025
    raw.stem_diameter_mm = [20.0] * n
    raw.stalk_kappa = [0.0] * n
    raw.stalk_bend_az_deg = [0.0] * n
    alternating = [0.0 if i % 2 == 0 else 180.0 for i in range(n)]
    if family == MONOCOT:
        raw.leaf_az_deg = alternating
        raw.leaf_pitch_deg = [30.0] * n
        raw.leaf_enable = [i < leaf_count for i in range(n)]
    elif family == DICOT:
        raw.petiole_az_deg = alternating
        raw.petiole_pitch_deg = [45.0] * n
        raw.petiole_count = [1 if i < leaf_count else 0 for i in range(n)]
    else:
        raise DescriptorError(f"unknown family {family!r}")
    return raw
