"""JSON encodings of nets, open nets, typed nets and UWDs.

Every decoder validates against a JSON schema first, so structural errors
come back as :class:`~opetri.errors.ProjectError` with the offending path,
and then re-checks the semantic invariants of the decoded object.
"""

from __future__ import annotations

from typing import Any

import jsonschema

from .compose import UWD, Box, Junction, OpenPetriNet, validate_uwd
from .errors import InvalidNetError, ProjectError
from .petri_core import (
    InputArc,
    OutputArc,
    PetriMorphism,
    PetriNet,
    Species,
    Transition,
    TypedPetriNet,
    validate_net,
)

__all__ = [
    "NET_SCHEMA",
    "OPEN_NET_SCHEMA",
    "TYPED_NET_SCHEMA",
    "UWD_SCHEMA",
    "check_schema",
    "net_to_json",
    "net_from_json",
    "open_net_to_json",
    "open_net_from_json",
    "typed_net_to_json",
    "typed_net_from_json",
    "uwd_to_json",
    "uwd_from_json",
]

_INDEX = {"type": "integer", "minimum": 0}
_NAMED = {
    "type": "object",
    "properties": {"name": {"type": "string"}},
    "required": ["name"],
    "additionalProperties": False,
}


def _pair(a: str, b: str) -> dict:
    return {
        "type": "object",
        "properties": {a: _INDEX, b: _INDEX},
        "required": [a, b],
        "additionalProperties": False,
    }


NET_SCHEMA: dict = {
    "type": "object",
    "properties": {
        "species": {"type": "array", "items": _NAMED},
        "transitions": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"name": {"type": "string"}, "rate": {"type": "number", "minimum": 0}},
                "required": ["name"],
                "additionalProperties": False,
            },
        },
        "inputs": {"type": "array", "items": _pair("is", "it")},
        "outputs": {"type": "array", "items": _pair("os", "ot")},
    },
    "required": ["species", "transitions", "inputs", "outputs"],
}

OPEN_NET_SCHEMA: dict = {
    **NET_SCHEMA,
    "properties": {**NET_SCHEMA["properties"], "legs": {"type": "array", "items": _INDEX}},
    "required": [*NET_SCHEMA["required"], "legs"],
}

_INDICES = {"type": "array", "items": _INDEX}

TYPED_NET_SCHEMA: dict = {
    "type": "object",
    "properties": {
        "net": NET_SCHEMA,
        "type_net": NET_SCHEMA,
        "typing": {
            "type": "object",
            "properties": {
                k: _INDICES for k in ("species_map", "transition_map", "input_map", "output_map")
            },
            "required": ["species_map", "transition_map", "input_map", "output_map"],
            "additionalProperties": False,
        },
        "legs": _INDICES,
    },
    "required": ["net", "type_net", "typing"],
}

UWD_SCHEMA: dict = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "outer_ports": _INDICES,
        "junctions": {"type": "array", "items": _NAMED},
        "boxes": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"name": {"type": "string"}, "ports": _INDICES},
                "required": ["name", "ports"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["outer_ports", "junctions", "boxes"],
}


_VALIDATORS: dict[int, Any] = {}


def _validator(schema: dict):
    # checking a schema against the meta-schema is slow, so do it once
    v = _VALIDATORS.get(id(schema))
    if v is None:
        cls = jsonschema.validators.validator_for(schema)
        cls.check_schema(schema)
        v = _VALIDATORS[id(schema)] = cls(schema)
    return v


def check_schema(doc: Any, schema: dict, what: str) -> None:
    e = jsonschema.exceptions.best_match(_validator(schema).iter_errors(doc))
    if e is not None:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ProjectError(f"{what}: {e.message} at {where}")


def net_to_json(net: PetriNet) -> dict:
    return {
        "species": [{"name": s.name} for s in net.species],
        "transitions": [{"name": t.name, "rate": t.rate} for t in net.transitions],
        "inputs": [{"is": a.species, "it": a.transition} for a in net.inputs],
        "outputs": [{"os": a.species, "ot": a.transition} for a in net.outputs],
    }


def net_from_json(doc: Any, what: str = "net") -> PetriNet:
    check_schema(doc, NET_SCHEMA, what)
    net = PetriNet(
        [Species(s["name"]) for s in doc["species"]],
        [Transition(t["name"], float(t.get("rate", 1.0))) for t in doc["transitions"]],
        [InputArc(a["is"], a["it"]) for a in doc["inputs"]],
        [OutputArc(a["os"], a["ot"]) for a in doc["outputs"]],
    )
    bad = validate_net(net)
    if bad:
        raise InvalidNetError(f"{what} is not a valid net", bad)
    return net


def open_net_to_json(m: OpenPetriNet) -> dict:
    return {**net_to_json(m.net), "legs": list(m.legs)}


def open_net_from_json(doc: Any, what: str = "open net") -> OpenPetriNet:
    check_schema(doc, OPEN_NET_SCHEMA, what)
    net = net_from_json({k: v for k, v in doc.items() if k != "legs"}, what)
    try:
        return OpenPetriNet(net, doc["legs"])
    except ValueError as e:
        raise ProjectError(f"{what}: {e}") from None


def typed_net_to_json(tp: TypedPetriNet, legs=None) -> dict:
    f = tp.typing
    doc = {
        "net": net_to_json(tp.net),
        "type_net": net_to_json(tp.type_net),
        "typing": {
            "species_map": list(f.species_map),
            "transition_map": list(f.transition_map),
            "input_map": list(f.input_map),
            "output_map": list(f.output_map),
        },
    }
    if legs is not None:
        doc["legs"] = list(legs)
    return doc


def typed_net_from_json(doc: Any, what: str = "typed net") -> TypedPetriNet:
    """Decode a typed net.

    The typing is decoded as given and not checked; an invalid typing is
    what the typecheck command reports on.
    """
    check_schema(doc, TYPED_NET_SCHEMA, what)
    net = net_from_json(doc["net"], f"{what}.net")
    type_net = net_from_json(doc["type_net"], f"{what}.type_net")
    m = doc["typing"]
    try:
        typing = PetriMorphism(
            net, type_net, m["species_map"], m["transition_map"], m["input_map"], m["output_map"]
        )
        return TypedPetriNet(net, type_net, typing)
    except ValueError as e:
        raise ProjectError(f"{what}: {e}") from None


def uwd_to_json(u: UWD) -> dict:
    return {
        "name": u.name,
        "outer_ports": list(u.outer_ports),
        "junctions": [{"name": j.name} for j in u.junctions],
        "boxes": [{"name": b.name, "ports": list(b.ports)} for b in u.boxes],
    }


def uwd_from_json(doc: Any, what: str = "uwd") -> UWD:
    check_schema(doc, UWD_SCHEMA, what)
    u = UWD(
        doc["outer_ports"],
        [Junction(j["name"]) for j in doc["junctions"]],
        [Box(b["name"], b["ports"]) for b in doc["boxes"]],
        name=doc.get("name", "anon"),
    )
    bad = validate_uwd(u)
    if bad:
        raise InvalidNetError(f"{what} is not a valid diagram", bad)
    return u
