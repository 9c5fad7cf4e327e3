"""Project files: one JSON document naming every resource a run needs.

Sections and the shapes their entries may take::

    nets          net JSON | {"path"} | {"fixture"}
    open_nets     open net JSON | {"path"} | {"fixture"} | {"net", "legs"}
    typed_nets    typed net JSON | {"path"} | {"fixture"}
                  | {"net", "type_net", "species_types", "transition_types"}
                  (any of these may add "legs" to expose species)
    uwds          {"source"} | {"path"} | UWD JSON
    composites    {"uwd", "binding": {box: open or typed net}}
    dynamics      {"component", "params"} | {"open_net"} | {"uwd", "binding"}
    datasets      {"path"} | {"csv"}
    simulations   {"model", "u0", "solver"}
    fits          {"model", "dataset", "u0", "free", "fixed", "free_u0",
                   "max_evals", "solver"}
    sensitivities {"model", "u0", "rates", "outcome", "solver", "h"}
    solver        default solver settings for every run

Names are unique across all sections so that a ``model`` reference is
unambiguous.  Relative paths resolve against the project file's directory.
Loading resolves and checks every entry, so a loaded project is known to be
consistent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

from . import fixtures as F
from .analyze import Bounded, Dataset, FitSpec, OutcomeSpec
from .compose import OpenPetriNet, OpenTypedPetriNet, oapply, oapply_typed
from .dynamics import (
    OpenDynamics,
    component,
    compose_dynamics,
    mass_action,
    ode_to_dde,
    petri_to_open_dynamics,
)
from .errors import OpetriError, ProjectError
from .formats import (
    NET_SCHEMA,
    OPEN_NET_SCHEMA,
    TYPED_NET_SCHEMA,
    UWD_SCHEMA,
    check_schema,
    net_from_json,
    open_net_from_json,
    typed_net_from_json,
    uwd_from_json,
)
from .petri_core import PetriNet, TypedPetriNet
from .solve import SolveConfig
from .uwd_dsl import parse_uwd

__all__ = ["Project", "PROJECT_SCHEMA", "FIXTURES", "load_project"]

SECTIONS = (
    "nets",
    "open_nets",
    "typed_nets",
    "uwds",
    "composites",
    "dynamics",
    "datasets",
    "simulations",
    "fits",
    "sensitivities",
)


def _one_of(*shapes: dict) -> dict:
    return {"anyOf": list(shapes)}


def _keys(required: list[str], optional: dict | None = None, **props) -> dict:
    return {
        "type": "object",
        "properties": {**{k: {} for k in required}, **(optional or {}), **props},
        "required": required,
        "additionalProperties": False,
    }


_STR = {"type": "string"}
_NUM = {"type": "number"}
_NUM_MAP = {"type": "object", "additionalProperties": _NUM}
_STR_MAP = {"type": "object", "additionalProperties": _STR}
_LEGS = {"type": "array", "items": {"anyOf": [_STR, {"type": "integer", "minimum": 0}]}}
_SOLVER = {
    "type": "object",
    "properties": {
        "t0": _NUM,
        "t1": _NUM,
        "dt": _NUM,
        "method": {"enum": ["rk4", "rk45"]},
        "abs_tol": _NUM,
        "rel_tol": _NUM,
        "max_steps": {"type": "integer"},
        "save_every": {"type": "integer"},
        "min_step": _NUM,
    },
    "additionalProperties": False,
}
_BOUND = {
    "type": "object",
    "properties": {"guess": _NUM, "lower": _NUM, "upper": _NUM},
    "required": ["guess"],
    "additionalProperties": False,
}
_BOUNDS = {"type": "object", "additionalProperties": _BOUND}
_PATH = _keys(["path"], path=_STR)
_FIXTURE = _keys(["fixture"], fixture=_STR)
_PATH_L = _keys(["path"], {"legs": _LEGS}, path=_STR)
_FIXTURE_L = _keys(["fixture"], {"legs": _LEGS}, fixture=_STR)

PROJECT_SCHEMA: dict = {
    "type": "object",
    "properties": {
        "nets": {"type": "object", "additionalProperties": _one_of(NET_SCHEMA, _PATH, _FIXTURE)},
        "open_nets": {
            "type": "object",
            "additionalProperties": _one_of(
                OPEN_NET_SCHEMA, _PATH, _FIXTURE, _keys(["net", "legs"], net=_STR, legs=_LEGS)
            ),
        },
        "typed_nets": {
            "type": "object",
            "additionalProperties": _one_of(
                TYPED_NET_SCHEMA,
                _PATH_L,
                _FIXTURE_L,
                _keys(
                    ["net", "type_net", "species_types", "transition_types"],
                    {"legs": _LEGS},
                    net=_STR,
                    type_net=_STR,
                    species_types=_STR_MAP,
                    transition_types=_STR_MAP,
                ),
            ),
        },
        "uwds": {
            "type": "object",
            "additionalProperties": _one_of(_keys(["source"], source=_STR), _PATH, UWD_SCHEMA, _FIXTURE),
        },
        "composites": {
            "type": "object",
            "additionalProperties": _keys(["uwd", "binding"], uwd=_STR, binding=_STR_MAP),
        },
        "dynamics": {
            "type": "object",
            "additionalProperties": _one_of(
                _keys(["component"], {"params": _NUM_MAP, "delay_capable": {"type": "boolean"}}, component=_STR),
                _keys(["open_net"], {"delay_capable": {"type": "boolean"}}, open_net=_STR),
                _keys(["uwd", "binding"], uwd=_STR, binding=_STR_MAP),
            ),
        },
        "datasets": {
            "type": "object",
            "additionalProperties": _one_of(_PATH, _keys(["csv"], csv=_STR)),
        },
        "simulations": {
            "type": "object",
            "additionalProperties": _keys(
                ["model", "u0"], {"solver": _SOLVER}, model=_STR, u0=_NUM_MAP
            ),
        },
        "fits": {
            "type": "object",
            "additionalProperties": _keys(
                ["model", "dataset", "u0", "free"],
                {
                    "fixed": _NUM_MAP,
                    "free_u0": _BOUNDS,
                    "max_evals": {"type": "integer", "minimum": 1},
                    "solver": _SOLVER,
                },
                model=_STR,
                dataset=_STR,
                u0=_NUM_MAP,
                free=_BOUNDS,
            ),
        },
        "sensitivities": {
            "type": "object",
            "additionalProperties": _keys(
                ["model", "u0", "outcome"],
                {"rates": _NUM_MAP, "solver": _SOLVER, "h": {"type": "number", "exclusiveMinimum": 0}},
                model=_STR,
                u0=_NUM_MAP,
                outcome=_keys(
                    ["species", "t0", "t1"],
                    species={"type": "array", "items": _STR, "minItems": 1},
                    t0=_NUM,
                    t1=_NUM,
                ),
            ),
        },
        "solver": _SOLVER,
    },
    "additionalProperties": False,
}


def _binding(name: str) -> Callable[[], Any]:
    return lambda: F.sviivr_typed_binding()[name]


# shipped example models, addressable as {"fixture": name}
FIXTURES: dict[str, dict[str, Callable[[], Any]]] = {
    "nets": {
        "sir": F.sir,
        "sis": F.sis,
        "sviivr": F.sviivr,
        "sis_vector_host": F.sis_vector_host,
        "infectious_type": F.infectious_type,
        "vector_borne_type": F.vector_borne_type,
    },
    "open_nets": {"sir_open": F.sir_open, "viv_open": F.viv_open, "cross_open": F.cross_open},
    "typed_nets": {
        "sir_typed": F.sir_typed,
        "sis_typed": F.sis_typed,
        "sviivr_typed": F.sviivr_typed,
        "quarantine_typed": F.quarantine_typed,
        "age_typed": F.age_typed,
        "flux_typed": F.flux_typed,
        "simple_trip_typed": F.simple_trip_typed,
        "sis_vector_host_typed": F.sis_vector_host_typed,
        "host_to_vector_typed": F.host_to_vector_typed,
        "vector_self_infection_typed": F.vector_self_infection_typed,
        "sir_open_typed": _binding("sir"),
        "viv_open_typed": _binding("viv"),
        "cross_open_typed": _binding("cross"),
    },
    "uwds": {"sviivr": lambda: parse_uwd(F.SVIIVR_UWD), "malaria": lambda: parse_uwd(F.MALARIA_UWD)},
}


@dataclass
class Project:
    """A loaded project; every entry has already been resolved once."""

    doc: dict
    base: Path
    _cache: dict[tuple[str, str], Any] = field(default_factory=dict, repr=False)
    _active: set = field(default_factory=set, repr=False)

    # -- lookup ------------------------------------------------------------------

    def section_of(self, name: str) -> str:
        for sec in SECTIONS:
            if name in self.doc.get(sec, {}):
                return sec
        raise ProjectError(f"no resource named {name!r}")

    def names(self, section: str) -> list[str]:
        return list(self.doc.get(section, {}))

    def _get(self, section: str, name: str, build: Callable[[dict], Any]) -> Any:
        key = (section, name)
        if key in self._cache:
            return self._cache[key]
        entries = self.doc.get(section, {})
        if name not in entries:
            raise ProjectError(f"no {section} entry named {name!r}")
        if key in self._active:
            raise ProjectError(f"{section} entry {name!r} refers to itself")
        self._active.add(key)
        try:
            value = build(entries[name])
        except OpetriError as e:
            where = f"{section}.{name}"
            if not str(e).startswith(where):
                e.args = (f"{where}: {e}",)
            raise
        finally:
            self._active.discard(key)
        self._cache[key] = value
        return value

    def _read(self, path: str) -> str:
        p = self.base / path
        try:
            return p.read_text()
        except OSError as e:
            raise ProjectError(f"cannot read {p}: {e.strerror}") from None

    def _read_json(self, path: str) -> Any:
        try:
            return json.loads(self._read(path))
        except json.JSONDecodeError as e:
            raise ProjectError(f"{path}: invalid JSON ({e})") from None

    def _fixture(self, section: str, name: str):
        try:
            return FIXTURES[section][name]()
        except KeyError:
            raise ProjectError(
                f"unknown {section} fixture {name!r}; known: {sorted(FIXTURES[section])}"
            ) from None

    # -- resource kinds ---------------------------------------------------------------

    def net(self, name: str) -> PetriNet:
        def build(e):
            if "fixture" in e:
                return self._fixture("nets", e["fixture"])
            doc = self._read_json(e["path"]) if "path" in e else e
            return net_from_json(doc, f"nets.{name}")

        return self._get("nets", name, build)

    def open_net(self, name: str) -> OpenPetriNet:
        def build(e):
            if "fixture" in e:
                return self._fixture("open_nets", e["fixture"])
            if "path" in e:
                return open_net_from_json(self._read_json(e["path"]), f"open_nets.{name}")
            if "net" in e and isinstance(e["net"], str):
                net = self.net(e["net"])
                return OpenPetriNet(net, _legs(net, e["legs"]))
            return open_net_from_json(e, f"open_nets.{name}")

        return self._get("open_nets", name, build)

    def typed_net(self, name: str) -> tuple[TypedPetriNet, tuple[int, ...] | None]:
        """The typed net and its exposed species, if any."""

        def build(e):
            legs = e.get("legs")
            if "fixture" in e:
                v = self._fixture("typed_nets", e["fixture"])
                if isinstance(v, OpenTypedPetriNet):
                    tp, legs = v.typed, (v.legs if legs is None else _legs(v.typed.net, legs))
                    return tp, tuple(legs)
                tp = v
            elif "path" in e:
                doc = self._read_json(e["path"])
                tp = typed_net_from_json(doc, f"typed_nets.{name}")
                legs = legs if legs is not None else doc.get("legs")
            elif "species_types" in e:
                net, type_net = self.net(e["net"]), self.net(e["type_net"])
                unknown = (set(net.species_names) - set(e["species_types"])) | (
                    set(net.transition_names) - set(e["transition_types"])
                )
                if unknown:
                    raise ProjectError(f"no type given for {sorted(unknown)}")
                try:
                    tp = TypedPetriNet.from_names(net, type_net, e["species_types"], e["transition_types"])
                except KeyError as err:
                    raise ProjectError(f"type net has {err.args[0]}") from None
            else:
                tp = typed_net_from_json(e, f"typed_nets.{name}")
            return tp, None if legs is None else tuple(_legs(tp.net, legs))

        return self._get("typed_nets", name, build)

    def uwd(self, name: str):
        def build(e):
            if "fixture" in e:
                return self._fixture("uwds", e["fixture"])
            if "source" in e:
                return parse_uwd(e["source"])
            if "path" in e:
                text = self._read(e["path"])
                return uwd_from_json(json.loads(text)) if e["path"].endswith(".json") else parse_uwd(text)
            return uwd_from_json(e, f"uwds.{name}")

        return self._get("uwds", name, build)

    def composite(self, name: str) -> OpenPetriNet | OpenTypedPetriNet:
        """Compose; typed if every box is bound to an exposed typed net."""

        def build(e):
            u = self.uwd(e["uwd"])
            return self.compose(u, e["binding"])

        return self._get("composites", name, build)

    def compose(self, u, binding: Mapping[str, str]) -> OpenPetriNet | OpenTypedPetriNet:
        kinds = {box: self.section_of(ref) for box, ref in binding.items()}
        if kinds and all(k == "typed_nets" for k in kinds.values()):
            comps = {}
            for box, ref in binding.items():
                tp, legs = self.typed_net(ref)
                if legs is None:
                    raise ProjectError(f"typed net {ref!r} bound to box {box!r} exposes no legs")
                comps[box] = OpenTypedPetriNet(tp, legs)
            type_nets = {c.typed.type_net for c in comps.values()}
            return oapply_typed(u, comps, next(iter(type_nets)))
        return oapply(u, {box: self.open_of(ref) for box, ref in binding.items()})

    def open_of(self, ref: str) -> OpenPetriNet:
        """Any net-like resource viewed as an open net."""
        sec = self.section_of(ref)
        if sec == "open_nets":
            return self.open_net(ref)
        if sec == "typed_nets":
            tp, legs = self.typed_net(ref)
            return OpenPetriNet(tp.net, legs or ())
        if sec == "composites":
            c = self.composite(ref)
            return c.open if isinstance(c, OpenTypedPetriNet) else c
        if sec == "nets":
            return OpenPetriNet(self.net(ref), ())
        raise ProjectError(f"{ref!r} is a {sec} entry, not a net")

    def net_of(self, ref: str) -> PetriNet:
        return self.open_of(ref).net

    def typed_of(self, ref: str) -> TypedPetriNet:
        sec = self.section_of(ref)
        if sec == "typed_nets":
            return self.typed_net(ref)[0]
        if sec == "composites":
            c = self.composite(ref)
            if isinstance(c, OpenTypedPetriNet):
                return c.typed
        raise ProjectError(f"{ref!r} is not a typed net")

    def dynamics(self, name: str) -> OpenDynamics:
        def build(e):
            if "component" in e:
                d = component(e["component"], e.get("params"))
            elif "open_net" in e:
                d = petri_to_open_dynamics(self.open_of(e["open_net"]))
            else:
                u = self.uwd(e["uwd"])
                d = compose_dynamics(u, {box: self.dynamics(ref) for box, ref in e["binding"].items()})
            if e.get("delay_capable") and not d.field.is_dde:
                d = ode_to_dde(d)
            return d

        return self._get("dynamics", name, build)

    def dataset(self, name: str) -> Dataset:
        def build(e):
            text = e["csv"] if "csv" in e else self._read(e["path"])
            try:
                return Dataset.from_csv(text)
            except ValueError as err:
                raise ProjectError(str(err)) from None

        return self._get("datasets", name, build)

    def solver(self, overrides: Mapping[str, Any] | None = None) -> SolveConfig:
        try:
            return SolveConfig(**{**self.doc.get("solver", {}), **(overrides or {})})
        except ValueError as e:
            raise ProjectError(f"solver settings: {e}") from None

    def model_field(self, ref: str):
        if self.section_of(ref) == "dynamics":
            return self.dynamics(ref).field
        return mass_action(self.net_of(ref))

    def simulation(self, name: str) -> dict:
        def build(e):
            f = self.model_field(e["model"])
            _check_u0(f.var_names, e["u0"])
            return {"field": f, "u0": [e["u0"][v] for v in f.var_names], "cfg": self.solver(e.get("solver"))}

        return self._get("simulations", name, build)

    def fit(self, name: str) -> dict:
        def build(e):
            net = self.net_of(e["model"])
            spec = FitSpec(
                {k: Bounded(**b) for k, b in e["free"].items()},
                dict(e.get("fixed", {})),
                {k: Bounded(**b) for k, b in e.get("free_u0", {}).items()},
                max_evals=e.get("max_evals", 2000),
            )
            bad = spec.violations(net)
            if bad:
                raise ProjectError("; ".join(bad))
            return {
                "net": net,
                "data": self.dataset(e["dataset"]),
                "u0": dict(e["u0"]),
                "spec": spec,
                "cfg": self.solver(e.get("solver")),
            }

        return self._get("fits", name, build)

    def sensitivity_run(self, name: str) -> dict:
        def build(e):
            net = self.net_of(e["model"])
            _check_u0(net.species_names, e["u0"])
            rates = e.get("rates")
            if rates:
                unknown = set(rates) - set(net.transition_names)
                if unknown:
                    raise ProjectError(f"rates for unknown transitions {sorted(unknown)}")
                net = net.with_rates({**dict(zip(net.transition_names, net.rates)), **rates})
            o = e["outcome"]
            missing = set(o["species"]) - set(net.species_names)
            if missing:
                raise ProjectError(f"outcome species {sorted(missing)} are not in the model")
            try:
                ospec = OutcomeSpec(tuple(o["species"]), o["t0"], o["t1"])
            except ValueError as err:
                raise ProjectError(str(err)) from None
            return {
                "net": net,
                "u0": [e["u0"][s] for s in net.species_names],
                "outcome": ospec,
                "cfg": self.solver(e.get("solver")),
                "h": e.get("h", 1e-4),
            }

        return self._get("sensitivities", name, build)

    def resolve_all(self) -> None:
        builders = {
            "nets": self.net,
            "open_nets": self.open_net,
            "typed_nets": self.typed_net,
            "uwds": self.uwd,
            "composites": self.composite,
            "dynamics": self.dynamics,
            "datasets": self.dataset,
            "simulations": self.simulation,
            "fits": self.fit,
            "sensitivities": self.sensitivity_run,
        }
        for sec in SECTIONS:
            for name in self.names(sec):
                builders[sec](name)
        self.solver()


def _legs(net: PetriNet, legs) -> list[int]:
    out = []
    for x in legs:
        if isinstance(x, int):
            if not 0 <= x < len(net.species):
                raise ProjectError(f"leg {x} out of range for {len(net.species)} species")
            out.append(x)
        else:
            try:
                out.append(net.species_index(x))
            except (KeyError, ValueError):
                raise ProjectError(f"leg {x!r} is not a species") from None
    return out


def _check_u0(names, u0: Mapping[str, float]) -> None:
    missing = set(names) - set(u0)
    extra = set(u0) - set(names)
    if missing or extra:
        raise ProjectError(
            f"initial state must list exactly the variables {list(names)}"
            + (f"; missing {sorted(missing)}" if missing else "")
            + (f"; unknown {sorted(extra)}" if extra else "")
        )


def load_project(path: str | Path) -> Project:
    """Read, schema-check and fully resolve a project file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise ProjectError(f"cannot read project {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ProjectError(f"project {path} is not valid JSON: {e}") from None
    return project_from_doc(doc, path.parent)


def project_from_doc(doc: Any, base: str | Path = ".") -> Project:
    check_schema(doc, PROJECT_SCHEMA, "project")
    seen: dict[str, str] = {}
    for sec in SECTIONS:
        for name in doc.get(sec, {}):
            if name in seen:
                raise ProjectError(f"name {name!r} is used in both {seen[name]} and {sec}")
            seen[name] = sec
    p = Project(doc, Path(base))
    p.resolve_all()
    return p
