from __future__ import annotations

from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import all_morphisms, maps, pullback_oracle, random_typed
from opetri import fixtures as F
from opetri.errors import TypeNetMismatchError
from opetri.petri_core import (
    PetriMorphism,
    PetriNet,
    TypedPetriNet,
    compose_morphisms,
    conserves_population,
    identity,
    is_isomorphic,
    validate_morphism,
)
from opetri.stratify import TYPE_COLORS, pullback, stratify_and_project

seeds = st.integers(0, 2**32 - 1)


def provenance_sets(st_net):
    """The pullback rebuilt from provenance, in the oracle's format."""
    net = st_net.result.net
    sp = st_net.provenance["species"]
    tp = st_net.provenance["transitions"]
    ins = [
        (pair, (sp[net.inputs[k].species], tp[net.inputs[k].transition]))
        for k, pair in enumerate(st_net.provenance["inputs"])
    ]
    outs = [
        (pair, (sp[net.outputs[k].species], tp[net.outputs[k].transition]))
        for k, pair in enumerate(st_net.provenance["outputs"])
    ]
    return [list(sp), list(tp), ins, outs]


def check_pullback(a: TypedPetriNet, b: TypedPetriNet):
    s = pullback(a, b)
    assert provenance_sets(s) == list(pullback_oracle(a, b))
    assert validate_morphism(s.proj_left) == []
    assert validate_morphism(s.proj_right) == []
    assert s.result.violations() == []
    # the result typing factors through both projections
    assert maps(compose_morphisms(s.proj_left, a.typing)) == maps(s.result.typing)
    assert maps(compose_morphisms(s.proj_right, b.typing)) == maps(s.result.typing)
    return s


class TestPullback:
    def test_sir_by_quarantine(self):
        s = check_pullback(F.sir_typed(), F.quarantine_typed())
        net = s.result.net
        assert net.species_names == ["(S, Q)", "(S, ~Q)", "(I, Q)", "(I, ~Q)", "(R, Q)", "(R, ~Q)"]
        assert len(net.transitions) == 9
        # only the non-quarantined interact
        assert [n for n in net.transition_names if n.startswith("(inf")] == ["(inf, interact)"]

    def test_rates_multiply(self):
        a, q = F.sir_typed(beta=0.3, gamma=0.1), F.quarantine_typed()
        net = q.net.with_rates({"interact": 2.0, "disease_Q": 0.5})
        b = TypedPetriNet(net, q.type_net, PetriMorphism(net, q.type_net, *maps(q.typing)))
        s = pullback(a, b)
        for k, (i, j) in enumerate(s.provenance["transitions"]):
            assert s.result.net.transitions[k].rate == a.net.transitions[i].rate * b.net.transitions[j].rate

    def test_identity_factor(self):
        a = F.sir_typed()
        T = a.type_net
        s = check_pullback(a, TypedPetriNet(T, T, identity(T)))
        assert is_isomorphic(s.result.net, a.net) is not None

    def test_disease_by_movement(self):
        T = F.infectious_type()
        left = TypedPetriNet.from_names(
            PetriNet.from_reactions(["X", "Y"], [("d", ["X"], ["Y"], 1.0)]), T, {"X": "Pop", "Y": "Pop"}, {"d": "disease"}
        )
        right = TypedPetriNet.from_names(
            PetriNet.from_reactions(
                ["A", "B"],
                [("ab", ["A"], ["B"], 1.0), ("ba", ["B"], ["A"], 1.0), ("dA", ["A"], ["A"], 1.0), ("dB", ["B"], ["B"], 1.0)],
            ),
            T,
            {"A": "Pop", "B": "Pop"},
            {"ab": "strata", "ba": "strata", "dA": "disease", "dB": "disease"},
        )
        s = check_pullback(left, right)
        types = Counter(s.result.transition_type(t) for t in range(len(s.result.net.transitions)))
        assert len(s.result.net.species) == 4
        assert types == {"disease": 2}
        # add strata loops on X and Y to get the moves as well
        left2 = TypedPetriNet.from_names(
            PetriNet.from_reactions(["X", "Y"], [("d", ["X"], ["Y"], 1.0), *F.strata_loops(["X", "Y"])]),
            T,
            {"X": "Pop", "Y": "Pop"},
            {"d": "disease", "strata_X": "strata", "strata_Y": "strata"},
        )
        s2 = check_pullback(left2, right)
        types2 = Counter(s2.result.transition_type(t) for t in range(len(s2.result.net.transitions)))
        assert types2 == {"disease": 2, "strata": 4}

    def test_type_net_mismatch(self):
        with pytest.raises(TypeNetMismatchError):
            pullback(F.sir_typed(), F.sis_vector_host_typed())

    @settings(max_examples=100)
    @given(seeds)
    def test_oracle_and_size_law(self, seed):
        rng = np.random.default_rng(seed)
        T = F.vector_borne_type() if seed % 2 else F.infectious_type()
        a = random_typed(rng, T, max_species=4, max_transitions=4, name="a")
        b = random_typed(rng, T, max_species=4, max_transitions=4, name="b")
        s = check_pullback(a, b)
        for kind in ("species_map", "transition_map", "input_map", "output_map"):
            fa, fb, fr = (Counter(getattr(x.typing, kind)) for x in (a, b, s.result))
            assert fr == Counter({ty: fa[ty] * fb[ty] for ty in fa if fb[ty]})

    @settings(max_examples=30)
    @given(seeds)
    def test_commutative(self, seed):
        rng = np.random.default_rng(seed)
        T = F.infectious_type()
        a = random_typed(rng, T, max_species=3, max_transitions=3, name="a")
        b = random_typed(rng, T, max_species=3, max_transitions=3, name="b")
        assert is_isomorphic(pullback(a, b).result.net, pullback(b, a).result.net) is not None

    @settings(max_examples=40)
    @given(seeds)
    def test_infectious_pullbacks_conserve(self, seed):
        rng = np.random.default_rng(seed)
        T = F.infectious_type()
        a, b = (random_typed(rng, T, max_species=4, max_transitions=4, name=n) for n in "ab")
        assert conserves_population(pullback(a, b).result)

    @settings(max_examples=25, deadline=None)
    @given(seeds)
    def test_universal_property(self, seed):
        universal_cones(seed)

    def test_universal_property_is_exercised(self):
        # guard against the random cones all being empty
        assert sum(universal_cones(seed) for seed in range(25)) >= 50


def universal_cones(seed: int) -> int:
    """Check that every cone over a random cospan factors uniquely through
    the pullback; returns the number of cones checked."""
    rng = np.random.default_rng(seed)
    T = F.vector_borne_type()
    a = random_typed(rng, T, max_species=3, max_transitions=2, name="a")
    b = random_typed(rng, T, max_species=3, max_transitions=2, name="b")
    x = random_typed(rng, T, max_species=2, max_transitions=2, name="x").net
    s = pullback(a, b)
    to_p = all_morphisms(x, s.result.net)
    cones = 0
    for f in all_morphisms(x, a.net):
        for g in all_morphisms(x, b.net):
            if maps(compose_morphisms(f, a.typing)) != maps(compose_morphisms(g, b.typing)):
                continue
            cones += 1
            mediating = [
                h
                for h in to_p
                if maps(compose_morphisms(h, s.proj_left)) == maps(f)
                and maps(compose_morphisms(h, s.proj_right)) == maps(g)
            ]
            assert len(mediating) == 1
    return cones


class TestStratifyAndProject:
    def test_three_dots_with_type_colours(self):
        s, dots = stratify_and_project(F.sir_typed(), F.quarantine_typed())
        assert set(dots) == {"left", "right", "stratified"}
        assert dots["stratified"].count("shape=circle") == 6
        assert dots["stratified"].count("shape=box") == 9
        assert dots["stratified"].count(TYPE_COLORS["strata"]) == 6
        assert dots["left"].count(TYPE_COLORS["infect"]) == 1

    def test_identity(self):
        a = F.sir_typed()
        T = a.type_net
        s, dots = stratify_and_project(a, TypedPetriNet(T, T, identity(T)))
        assert dots["stratified"].count("shape=box") == len(a.net.transitions)

    def test_no_shared_transition_types(self):
        T = F.infectious_type()
        only_disease = TypedPetriNet.from_names(
            PetriNet.from_reactions(["X"], [("d", ["X"], ["X"], 1.0)]), T, {"X": "Pop"}, {"d": "disease"}
        )
        only_strata = TypedPetriNet.from_names(
            PetriNet.from_reactions(["A"], [("m", ["A"], ["A"], 1.0)]), T, {"A": "Pop"}, {"m": "strata"}
        )
        s, dots = stratify_and_project(only_disease, only_strata)
        assert len(s.result.net.transitions) == 0
        assert len(s.result.net.species) == 1
        assert dots["stratified"].count("shape=box") == 0
