"""Stratification of typed Petri nets by pullback over a shared type net.

The stratified net pairs up species, transitions, input arcs and output
arcs of the two factors that carry the same type.  Rates of paired
transitions multiply; calibration is expected to override them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import InvalidNetError, TypeNetMismatchError
from .petri_core import (
    InputArc,
    OutputArc,
    PetriMorphism,
    PetriNet,
    Species,
    Transition,
    TypedPetriNet,
    to_dot,
)

__all__ = ["StratifiedNet", "pullback", "stratify_and_project", "typing_colors", "TYPE_COLORS"]


@dataclass(frozen=True)
class StratifiedNet:
    result: TypedPetriNet
    proj_left: PetriMorphism
    proj_right: PetriMorphism
    # (left index, right index) for each element of the result
    provenance: Mapping[str, tuple[tuple[int, int], ...]]


def _pairs(left_types, right_types) -> list[tuple[int, int]]:
    by_type: dict[int, list[int]] = {}
    for j, ty in enumerate(right_types):
        by_type.setdefault(ty, []).append(j)
    return [(i, j) for i, ty in enumerate(left_types) for j in by_type.get(ty, ())]


def pullback(a: TypedPetriNet, b: TypedPetriNet) -> StratifiedNet:
    """Stratify ``a`` by ``b``.

    Both typings must target the same type net (compared by presentation).
    Result elements are ordered lexicographically by (left, right) index.
    """
    if a.type_net != b.type_net:
        raise TypeNetMismatchError("the two nets are typed over different type nets")
    for side, tp in (("left", a), ("right", b)):
        bad = tp.violations()
        if bad:
            raise InvalidNetError(f"{side} typing is invalid", bad)
    fa, fb = a.typing, b.typing
    A, B = a.net, b.net

    sp = _pairs(fa.species_map, fb.species_map)
    tp = _pairs(fa.transition_map, fb.transition_map)
    ip = _pairs(fa.input_map, fb.input_map)
    op = _pairs(fa.output_map, fb.output_map)
    s_index = {p: k for k, p in enumerate(sp)}
    t_index = {p: k for k, p in enumerate(tp)}

    species = [Species(f"({A.species[i].name}, {B.species[j].name})") for i, j in sp]
    transitions = [
        Transition(
            f"({A.transitions[i].name}, {B.transitions[j].name})",
            A.transitions[i].rate * B.transitions[j].rate,
        )
        for i, j in tp
    ]
    inputs = [
        InputArc(
            s_index[A.inputs[x].species, B.inputs[y].species],
            t_index[A.inputs[x].transition, B.inputs[y].transition],
        )
        for x, y in ip
    ]
    outputs = [
        OutputArc(
            s_index[A.outputs[x].species, B.outputs[y].species],
            t_index[A.outputs[x].transition, B.outputs[y].transition],
        )
        for x, y in op
    ]
    net = PetriNet(species, transitions, inputs, outputs)

    # etale typings make the arc pullback agree with the arcs re-derived
    # from the type net; a mismatch means a typing slipped past validation
    T = a.type_net
    for k, (i, _) in enumerate(tp):
        u = fa.transition_map[i]
        assert len(net.input_arcs_of(k)) == len(T.input_arcs_of(u))
        assert len(net.output_arcs_of(k)) == len(T.output_arcs_of(u))

    def proj(side: int, target: PetriNet) -> PetriMorphism:
        return PetriMorphism(
            net,
            target,
            [p[side] for p in sp],
            [p[side] for p in tp],
            [p[side] for p in ip],
            [p[side] for p in op],
        )

    typing = PetriMorphism(
        net,
        T,
        [fa.species_map[i] for i, _ in sp],
        [fa.transition_map[i] for i, _ in tp],
        [fa.input_map[x] for x, _ in ip],
        [fa.output_map[x] for x, _ in op],
    )
    return StratifiedNet(
        TypedPetriNet(net, T, typing),
        proj(0, A),
        proj(1, B),
        {
            "species": tuple(sp),
            "transitions": tuple(tp),
            "inputs": tuple(ip),
            "outputs": tuple(op),
        },
    )


# fill colours by transition type; the three infectious-disease types follow
# the usual yellow/blue/purple convention, anything else cycles the palette
TYPE_COLORS = {"disease": "#f6d55c", "strata": "#7fb3e6", "infect": "#b48ad8"}
_PALETTE = ["#8dd3c7", "#fdb462", "#b3de69", "#fccde5", "#bc80bd", "#ccebc5", "#ffed6f"]


def typing_colors(tp: TypedPetriNet) -> dict[str, str]:
    """Transition name -> fill colour, keyed on the transition's type."""
    type_names = tp.type_net.transition_names
    colors = {}
    for n, ty in enumerate(type_names):
        colors[ty] = TYPE_COLORS.get(ty, _PALETTE[n % len(_PALETTE)])
    return {
        t.name: colors[tp.transition_type(k)] for k, t in enumerate(tp.net.transitions)
    }


def stratify_and_project(a: TypedPetriNet, b: TypedPetriNet) -> tuple[StratifiedNet, dict[str, str]]:
    """Pullback plus DOT renderings of both factors and of the result."""
    st = pullback(a, b)
    dots = {
        name: to_dot(tp.net, name=name, transition_colors=typing_colors(tp))
        for name, tp in (("left", a), ("right", b), ("stratified", st.result))
    }
    return st, dots
