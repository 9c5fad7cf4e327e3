"""Worked example models: SIR, the vaccination composite, the vector-borne
components, the two type systems and the stratification palette.

Rates are illustrative defaults; strata nets use rate 1 so that pullback
rates equal the disease-model rates.
"""

from __future__ import annotations

from .compose import OpenPetriNet, OpenTypedPetriNet
from .petri_core import PetriNet, TypedPetriNet
from .uwd_dsl import parse_uwd

__all__ = [
    "SVIIVR_UWD",
    "MALARIA_UWD",
    "sir",
    "sis",
    "sviivr",
    "sir_open",
    "viv_open",
    "cross_open",
    "sviivr_binding",
    "sviivr_typed_binding",
    "infectious_type",
    "vector_borne_type",
    "sir_typed",
    "sis_typed",
    "sviivr_typed",
    "quarantine_typed",
    "age_typed",
    "flux_typed",
    "simple_trip_typed",
    "sis_vector_host",
    "sis_vector_host_typed",
    "host_to_vector_typed",
    "vector_self_infection_typed",
    "strata_loops",
]

SVIIVR_UWD = """\
# unvaccinated SIR, vaccinated SIR and their cross exposure, glued at R
uwd epi(S, I, Iv, R, V) {
  sir(S, I, R)
  viv(V, Iv, R)
  cross(S, I, Iv, V)
}
"""

MALARIA_UWD = """\
uwd malaria(I_H, I_V) {
  host(I_H)
  vector(I_V)
  bloodmeal(I_H, I_V)
}
"""

RATES = {
    "beta_UU": 0.3,
    "gamma_U": 1 / 14,
    "beta_VV": 0.03,
    "gamma_V": 1 / 14,
    "nu": 0.01,
    "beta_UV": 0.05,
    "beta_VU": 0.05,
}


def sir(beta: float = 0.3, gamma: float = 0.1) -> PetriNet:
    return PetriNet.from_reactions(
        ["S", "I", "R"],
        [("inf", ["S", "I"], ["I", "I"], beta), ("rec", ["I"], ["R"], gamma)],
    )


def sis(beta: float = 0.3, gamma: float = 0.1) -> PetriNet:
    return PetriNet.from_reactions(
        ["S", "I"],
        [("inf", ["S", "I"], ["I", "I"], beta), ("rec", ["I"], ["S"], gamma)],
    )


def _r(name):
    return RATES[name]


def sir_open() -> OpenPetriNet:
    net = PetriNet.from_reactions(
        ["S", "I", "R"],
        [
            ("beta_UU", ["S", "I"], ["I", "I"], _r("beta_UU")),
            ("gamma_U", ["I"], ["R"], _r("gamma_U")),
        ],
    )
    return OpenPetriNet.expose(net, ["S", "I", "R"])


def viv_open() -> OpenPetriNet:
    net = PetriNet.from_reactions(
        ["V", "Iv", "R"],
        [
            ("beta_VV", ["V", "Iv"], ["Iv", "Iv"], _r("beta_VV")),
            ("gamma_V", ["Iv"], ["R"], _r("gamma_V")),
        ],
    )
    return OpenPetriNet.expose(net, ["V", "Iv", "R"])


def cross_open() -> OpenPetriNet:
    net = PetriNet.from_reactions(
        ["S", "I", "Iv", "V"],
        [
            ("nu", ["S"], ["V"], _r("nu")),
            ("beta_UV", ["S", "Iv"], ["I", "Iv"], _r("beta_UV")),
            ("beta_VU", ["V", "I"], ["Iv", "I"], _r("beta_VU")),
        ],
    )
    return OpenPetriNet.expose(net, ["S", "I", "Iv", "V"])


def sviivr_binding() -> dict[str, OpenPetriNet]:
    return {"sir": sir_open(), "viv": viv_open(), "cross": cross_open()}


def sviivr() -> PetriNet:
    """The vaccination composite written out by hand."""
    return PetriNet.from_reactions(
        ["S", "V", "I", "Iv", "R"],
        [
            ("nu", ["S"], ["V"], _r("nu")),
            ("beta_UU", ["S", "I"], ["I", "I"], _r("beta_UU")),
            ("beta_UV", ["S", "Iv"], ["I", "Iv"], _r("beta_UV")),
            ("beta_VU", ["V", "I"], ["Iv", "I"], _r("beta_VU")),
            ("beta_VV", ["V", "Iv"], ["Iv", "Iv"], _r("beta_VV")),
            ("gamma_U", ["I"], ["R"], _r("gamma_U")),
            ("gamma_V", ["Iv"], ["R"], _r("gamma_V")),
        ],
    )


# -- type systems -------------------------------------------------------------


def infectious_type() -> PetriNet:
    """One population type; infection-status change, strata change, interaction."""
    return PetriNet.from_reactions(
        ["Pop"],
        [
            ("infect", ["Pop", "Pop"], ["Pop", "Pop"], 1.0),
            ("disease", ["Pop"], ["Pop"], 1.0),
            ("strata", ["Pop"], ["Pop"], 1.0),
        ],
    )


def vector_borne_type() -> PetriNet:
    """Host and vector types; interactions only across the two."""
    return PetriNet.from_reactions(
        ["Host", "Vector"],
        [
            ("host_disease", ["Host"], ["Host"], 1.0),
            ("vector_disease", ["Vector"], ["Vector"], 1.0),
            ("host_infection", ["Host", "Vector"], ["Host", "Vector"], 1.0),
            ("vector_infection", ["Vector", "Host"], ["Vector", "Host"], 1.0),
        ],
    )


def strata_loops(species: list[str]) -> list[tuple[str, list[str], list[str], float]]:
    return [(f"strata_{s}", [s], [s], 1.0) for s in species]


def _typed(species, reactions, types: dict[str, str], type_net=None) -> TypedPetriNet:
    type_net = type_net or infectious_type()
    net = PetriNet.from_reactions(species, reactions)
    stype = {s: type_net.species_names[0] for s in species} if len(type_net.species) == 1 else None
    return TypedPetriNet.from_names(net, type_net, stype or types["species"], types)


def _infectious(species, disease, infect, loops=True) -> TypedPetriNet:
    reactions = list(infect) + list(disease) + (strata_loops(species) if loops else [])
    types = {r[0]: "infect" for r in infect}
    types.update({r[0]: "disease" for r in disease})
    types.update({r[0]: "strata" for r in (strata_loops(species) if loops else [])})
    return _typed(species, reactions, types)


def sir_typed(beta: float = 0.3, gamma: float = 0.1) -> TypedPetriNet:
    """SIR with a strata self-loop on every species, ready for stratification."""
    return _infectious(
        ["S", "I", "R"],
        [("rec", ["I"], ["R"], gamma)],
        [("inf", ["S", "I"], ["I", "I"], beta)],
    )


def sis_typed(beta: float = 0.3, gamma: float = 0.1) -> TypedPetriNet:
    return _infectious(
        ["S", "I"],
        [("rec", ["I"], ["S"], gamma)],
        [("inf", ["S", "I"], ["I", "I"], beta)],
    )


def sviivr_typed() -> TypedPetriNet:
    return _infectious(
        ["S", "I", "Iv", "R", "V"],
        [
            ("gamma_U", ["I"], ["R"], _r("gamma_U")),
            ("gamma_V", ["Iv"], ["R"], _r("gamma_V")),
            ("nu", ["S"], ["V"], _r("nu")),
        ],
        [
            ("beta_UU", ["S", "I"], ["I", "I"], _r("beta_UU")),
            ("beta_VV", ["V", "Iv"], ["Iv", "Iv"], _r("beta_VV")),
            ("beta_UV", ["S", "Iv"], ["I", "Iv"], _r("beta_UV")),
            ("beta_VU", ["V", "I"], ["Iv", "I"], _r("beta_VU")),
        ],
    )


def _open_typed(open_net: OpenPetriNet, disease: set[str]) -> OpenTypedPetriNet:
    net = open_net.net
    T = infectious_type()
    types = {
        t.name: ("disease" if t.name in disease else "infect") for t in net.transitions
    }
    typed = TypedPetriNet.from_names(net, T, {s: "Pop" for s in net.species_names}, types)
    return OpenTypedPetriNet(typed, open_net.legs)


def sviivr_typed_binding() -> dict[str, OpenTypedPetriNet]:
    """The three vaccination components typed by the infectious type system."""
    disease = {"gamma_U", "gamma_V", "nu"}
    return {k: _open_typed(v, disease) for k, v in sviivr_binding().items()}


# -- stratification palette ---------------------------------------------------


def quarantine_typed() -> TypedPetriNet:
    """Quarantined individuals do not interact."""
    return _typed(
        ["Q", "~Q"],
        [
            ("interact", ["~Q", "~Q"], ["~Q", "~Q"], 1.0),
            ("disease_Q", ["Q"], ["Q"], 1.0),
            ("disease_~Q", ["~Q"], ["~Q"], 1.0),
            ("quarantine", ["~Q"], ["Q"], 1.0),
            ("release", ["Q"], ["~Q"], 1.0),
        ],
        {
            "interact": "infect",
            "disease_Q": "disease",
            "disease_~Q": "disease",
            "quarantine": "strata",
            "release": "strata",
        },
    )


def age_typed() -> TypedPetriNet:
    """Children and adults; no strata changes.  ``child_by_adult`` is a child
    infected by an adult (first slot is the one infected)."""
    return _typed(
        ["Child", "Adult"],
        [
            ("child_by_child", ["Child", "Child"], ["Child", "Child"], 1.0),
            ("child_by_adult", ["Child", "Adult"], ["Child", "Adult"], 1.0),
            ("adult_by_child", ["Adult", "Child"], ["Adult", "Child"], 1.0),
            ("adult_by_adult", ["Adult", "Adult"], ["Adult", "Adult"], 1.0),
            ("disease_Child", ["Child"], ["Child"], 1.0),
            ("disease_Adult", ["Adult"], ["Adult"], 1.0),
        ],
        {
            "child_by_child": "infect",
            "child_by_adult": "infect",
            "adult_by_child": "infect",
            "adult_by_adult": "infect",
            "disease_Child": "disease",
            "disease_Adult": "disease",
        },
    )


def flux_typed(patches: int = 2) -> TypedPetriNet:
    """Flux movement: individuals relocate between patches and interact only
    within their patch."""
    ps = [f"P{i + 1}" for i in range(patches)]
    reactions, types = [], {}
    for p in ps:
        reactions.append((f"interact_{p}", [p, p], [p, p], 1.0))
        types[f"interact_{p}"] = "infect"
    for p in ps:
        reactions.append((f"disease_{p}", [p], [p], 1.0))
        types[f"disease_{p}"] = "disease"
    for p in ps:
        for q in ps:
            if p != q:
                reactions.append((f"move_{p}_{q}", [p], [q], 1.0))
                types[f"move_{p}_{q}"] = "strata"
    return _typed(ps, reactions, types)


def simple_trip_typed(patches: int = 2) -> TypedPetriNet:
    """Simple trip movement: ``P_ij`` is currently in patch i and resides in
    patch j.  Trips never change residence; interactions happen between
    everyone currently in the same patch."""
    idx = range(1, patches + 1)
    ps = [f"P{i}{j}" for i in idx for j in idx]
    reactions, types = [], {}
    for i in idx:
        here = [f"P{i}{j}" for j in idx]
        for x in here:
            for y in here:
                name = f"interact_{x}_{y}"
                reactions.append((name, [x, y], [x, y], 1.0))
                types[name] = "infect"
    for p in ps:
        reactions.append((f"disease_{p}", [p], [p], 1.0))
        types[f"disease_{p}"] = "disease"
    for j in idx:
        for i in idx:
            for k in idx:
                if i != k:
                    name = f"trip_P{i}{j}_P{k}{j}"
                    reactions.append((name, [f"P{i}{j}"], [f"P{k}{j}"], 1.0))
                    types[name] = "strata"
    return _typed(ps, reactions, types)


# -- vector-borne typing examples ---------------------------------------------

_SIS_VH_SPECIES = ["S_H", "I_H", "S_V", "I_V"]
_SIS_VH = [
    ("inf_H", ["S_H", "I_V"], ["I_H", "I_V"], 0.3),
    ("inf_V", ["S_V", "I_H"], ["I_V", "I_H"], 0.3),
    ("rec_H", ["I_H"], ["S_H"], 0.1),
    ("rec_V", ["I_V"], ["S_V"], 0.1),
]
_SIS_VH_TYPES = {
    "species": {"S_H": "Host", "I_H": "Host", "S_V": "Vector", "I_V": "Vector"},
    "inf_H": "host_infection",
    "inf_V": "vector_infection",
    "rec_H": "host_disease",
    "rec_V": "vector_disease",
}


def sis_vector_host() -> PetriNet:
    return PetriNet.from_reactions(_SIS_VH_SPECIES, _SIS_VH)


def sis_vector_host_typed() -> TypedPetriNet:
    return _typed(_SIS_VH_SPECIES, _SIS_VH, _SIS_VH_TYPES, vector_borne_type())


def host_to_vector_typed() -> TypedPetriNet:
    """SIS host/vector plus ``S_H -> S_V``, which no typing admits.  The
    attempted typing calls it a host status change."""
    return _typed(
        _SIS_VH_SPECIES,
        _SIS_VH + [("S_H_to_S_V", ["S_H"], ["S_V"], 0.1)],
        {**_SIS_VH_TYPES, "S_H_to_S_V": "host_disease"},
        vector_borne_type(),
    )


def vector_self_infection_typed() -> TypedPetriNet:
    """SIS host/vector plus ``I_V + S_V -> 2 I_V``; typed as a vector
    infection, which must involve a host."""
    return _typed(
        _SIS_VH_SPECIES,
        _SIS_VH + [("I_V_infects_S_V", ["I_V", "S_V"], ["I_V", "I_V"], 0.3)],
        {**_SIS_VH_TYPES, "I_V_infects_S_V": "vector_infection"},
        vector_borne_type(),
    )


def vaccination_uwd():
    return parse_uwd(SVIIVR_UWD)
