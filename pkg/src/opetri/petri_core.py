"""Whole-grain Petri nets and the morphisms between them.

A net is four finite sets (species, transitions, input arcs, output arcs)
with source/target functions on the arcs.  Arcs are stored as ordered
tuples, so repeated arcs encode multiplicity.  Names and rates are
presentation data: morphisms, isomorphism and typing only look at shape.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidMorphismError, SearchLimitError

__all__ = [
    "Species",
    "Transition",
    "InputArc",
    "OutputArc",
    "PetriNet",
    "PetriMorphism",
    "TypedPetriNet",
    "validate_net",
    "validate_morphism",
    "identity",
    "compose_morphisms",
    "is_isomorphic",
    "conserves_population",
    "forbidden_transitions",
    "to_dot",
]


@dataclass(frozen=True)
class Species:
    name: str


@dataclass(frozen=True)
class Transition:
    name: str
    rate: float = 1.0


@dataclass(frozen=True)
class InputArc:
    """Arc from ``species`` into ``transition`` (the ``is``/``it`` pair)."""

    species: int
    transition: int


@dataclass(frozen=True)
class OutputArc:
    """Arc from ``transition`` into ``species`` (the ``os``/``ot`` pair)."""

    species: int
    transition: int


@dataclass(frozen=True)
class PetriNet:
    species: tuple[Species, ...] = ()
    transitions: tuple[Transition, ...] = ()
    inputs: tuple[InputArc, ...] = ()
    outputs: tuple[OutputArc, ...] = ()

    def __post_init__(self):
        for name in ("species", "transitions", "inputs", "outputs"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @classmethod
    def from_reactions(
        cls,
        species: Iterable[str],
        reactions: Iterable[tuple[str, Sequence[str], Sequence[str], float]],
    ) -> "PetriNet":
        """Build a net from named reactions ``(name, inputs, outputs, rate)``.

        >>> sir = PetriNet.from_reactions("SIR", [
        ...     ("inf", ["S", "I"], ["I", "I"], 0.3),
        ...     ("rec", ["I"], ["R"], 0.1)])
        >>> len(sir.inputs), len(sir.outputs)
        (3, 3)
        """
        species = [Species(s) for s in species]
        index = {s.name: i for i, s in enumerate(species)}
        transitions, inputs, outputs = [], [], []
        for t, (name, ins, outs, rate) in enumerate(reactions):
            transitions.append(Transition(name, float(rate)))
            inputs.extend(InputArc(index[s], t) for s in ins)
            outputs.extend(OutputArc(index[s], t) for s in outs)
        return cls(species, transitions, inputs, outputs)

    @property
    def species_names(self) -> list[str]:
        return [s.name for s in self.species]

    @property
    def transition_names(self) -> list[str]:
        return [t.name for t in self.transitions]

    @property
    def rates(self) -> np.ndarray:
        return np.array([t.rate for t in self.transitions], dtype=float)

    def species_index(self, name: str) -> int:
        try:
            return self.species_names.index(name)
        except ValueError:
            raise KeyError(f"no species named {name!r}") from None

    def transition_index(self, name: str) -> int:
        try:
            return self.transition_names.index(name)
        except ValueError:
            raise KeyError(f"no transition named {name!r}") from None

    @cached_property
    def _input_fibers(self) -> tuple[tuple[int, ...], ...]:
        fibers: list[list[int]] = [[] for _ in self.transitions]
        for a, arc in enumerate(self.inputs):
            if 0 <= arc.transition < len(fibers):
                fibers[arc.transition].append(a)
        return tuple(tuple(f) for f in fibers)

    @cached_property
    def _output_fibers(self) -> tuple[tuple[int, ...], ...]:
        fibers: list[list[int]] = [[] for _ in self.transitions]
        for a, arc in enumerate(self.outputs):
            if 0 <= arc.transition < len(fibers):
                fibers[arc.transition].append(a)
        return tuple(tuple(f) for f in fibers)

    def input_arcs_of(self, t: int) -> tuple[int, ...]:
        return self._input_fibers[t]

    def output_arcs_of(self, t: int) -> tuple[int, ...]:
        return self._output_fibers[t]

    def with_rates(self, rates: Mapping[str, float] | Sequence[float]) -> "PetriNet":
        """Copy of the net with some or all rates replaced."""
        if isinstance(rates, Mapping):
            unknown = set(rates) - set(self.transition_names)
            if unknown:
                raise KeyError(f"unknown transitions: {sorted(unknown)}")
            new = [Transition(t.name, float(rates.get(t.name, t.rate))) for t in self.transitions]
        else:
            if len(rates) != len(self.transitions):
                raise ValueError("rate vector length does not match transition count")
            new = [Transition(t.name, float(r)) for t, r in zip(self.transitions, rates)]
        return PetriNet(self.species, new, self.inputs, self.outputs)

    def _arc_label(self, kind: str, a: int) -> str:
        arcs = self.inputs if kind == "input" else self.outputs
        arc = arcs[a]
        s = self.species[arc.species].name if 0 <= arc.species < len(self.species) else "?"
        t = (
            self.transitions[arc.transition].name
            if 0 <= arc.transition < len(self.transitions)
            else "?"
        )
        return f"{kind} arc {a} ({s} {'->' if kind == 'input' else '<-'} transition {t!r})"


def validate_net(net: PetriNet) -> list[str]:
    """Return every well-formedness violation of ``net``; empty means valid."""
    out: list[str] = []
    ns, nt = len(net.species), len(net.transitions)
    for kind, arcs in (("input", net.inputs), ("output", net.outputs)):
        for a, arc in enumerate(arcs):
            if not 0 <= arc.species < ns:
                out.append(f"{kind} arc {a}: species index {arc.species} out of range [0, {ns})")
            if not 0 <= arc.transition < nt:
                out.append(
                    f"{kind} arc {a}: transition index {arc.transition} out of range [0, {nt})"
                )
    for what, names in (("species", net.species_names), ("transition", net.transition_names)):
        for name, count in Counter(names).items():
            if count > 1:
                out.append(f"duplicate {what} name {name!r} ({count} occurrences)")
    for t in net.transitions:
        rate = t.rate
        if not isinstance(rate, (int, float)) or not math.isfinite(rate) or rate < 0:
            out.append(f"transition {t.name!r}: rate {rate!r} is not a finite nonnegative real")
    return out


@dataclass(frozen=True)
class PetriMorphism:
    """Componentwise map of the four sets of ``dom`` into those of ``cod``."""

    dom: PetriNet
    cod: PetriNet
    species_map: tuple[int, ...]
    transition_map: tuple[int, ...]
    input_map: tuple[int, ...]
    output_map: tuple[int, ...]

    def __post_init__(self):
        for name in ("species_map", "transition_map", "input_map", "output_map"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))

    def is_bijective(self) -> bool:
        return all(
            sorted(m) == list(range(n))
            for m, n in (
                (self.species_map, len(self.cod.species)),
                (self.transition_map, len(self.cod.transitions)),
                (self.input_map, len(self.cod.inputs)),
                (self.output_map, len(self.cod.outputs)),
            )
        )

    def inverse(self) -> "PetriMorphism":
        if not self.is_bijective():
            raise ValueError("morphism is not bijective")

        def inv(m):
            out = [0] * len(m)
            for i, j in enumerate(m):
                out[j] = i
            return out

        return PetriMorphism(
            self.cod,
            self.dom,
            inv(self.species_map),
            inv(self.transition_map),
            inv(self.input_map),
            inv(self.output_map),
        )


def identity(net: PetriNet) -> PetriMorphism:
    return PetriMorphism(
        net,
        net,
        range(len(net.species)),
        range(len(net.transitions)),
        range(len(net.inputs)),
        range(len(net.outputs)),
    )


def compose_morphisms(f: PetriMorphism, g: PetriMorphism) -> PetriMorphism:
    """The morphism ``g after f``."""
    if f.cod != g.dom:
        raise InvalidMorphismError("cannot compose: codomain of f is not the domain of g")
    return PetriMorphism(
        f.dom,
        g.cod,
        [g.species_map[i] for i in f.species_map],
        [g.transition_map[i] for i in f.transition_map],
        [g.input_map[i] for i in f.input_map],
        [g.output_map[i] for i in f.output_map],
    )


def validate_morphism(f: PetriMorphism) -> list[str]:
    """Check the commuting squares and the per-transition arc bijections.

    Violations name the offending transitions so that typing errors can be
    reported in domain terms.  Rates are ignored.
    """
    dom, cod = f.dom, f.cod
    out: list[str] = []
    sizes = (
        ("species", f.species_map, len(dom.species), len(cod.species)),
        ("transition", f.transition_map, len(dom.transitions), len(cod.transitions)),
        ("input", f.input_map, len(dom.inputs), len(cod.inputs)),
        ("output", f.output_map, len(dom.outputs), len(cod.outputs)),
    )
    for what, m, n_dom, n_cod in sizes:
        if len(m) != n_dom:
            out.append(f"{what} map has length {len(m)}, expected {n_dom}")
        for i, j in enumerate(m):
            if not 0 <= j < n_cod:
                out.append(f"{what} map sends {i} to {j}, out of range [0, {n_cod})")
    if out:
        return out

    tname = [t.name for t in dom.transitions]
    for kind, arcs, cod_arcs, amap in (
        ("input", dom.inputs, cod.inputs, f.input_map),
        ("output", dom.outputs, cod.outputs, f.output_map),
    ):
        for a, arc in enumerate(arcs):
            image = cod_arcs[amap[a]]
            if image.species != f.species_map[arc.species]:
                out.append(
                    f"transition {tname[arc.transition]!r}: {dom._arc_label(kind, a)} maps to "
                    f"{cod._arc_label(kind, amap[a])}, whose species is not the image of "
                    f"{dom.species[arc.species].name!r}"
                )
            if image.transition != f.transition_map[arc.transition]:
                out.append(
                    f"transition {tname[arc.transition]!r}: {dom._arc_label(kind, a)} maps to "
                    f"{cod._arc_label(kind, amap[a])}, which belongs to a different transition "
                    f"than {cod.transitions[f.transition_map[arc.transition]].name!r}"
                )

    for t in range(len(dom.transitions)):
        u = f.transition_map[t]
        for kind, dfib, cfib, amap in (
            ("input", dom.input_arcs_of(t), cod.input_arcs_of(u), f.input_map),
            ("output", dom.output_arcs_of(t), cod.output_arcs_of(u), f.output_map),
        ):
            if sorted(amap[a] for a in dfib) != sorted(cfib):
                out.append(
                    f"transition {tname[t]!r} has {len(dfib)} {kind} arcs that do not map "
                    f"bijectively onto the {len(cfib)} {kind} arcs of "
                    f"{cod.transitions[u].name!r}"
                )
    return out


@dataclass(frozen=True)
class TypedPetriNet:
    """A net together with a morphism into a type net."""

    net: PetriNet
    type_net: PetriNet
    typing: PetriMorphism

    def __post_init__(self):
        if self.typing.dom != self.net or self.typing.cod != self.type_net:
            raise InvalidMorphismError("typing must run from the net to the type net")

    def violations(self) -> list[str]:
        return validate_morphism(self.typing)

    def species_type(self, s: int) -> str:
        return self.type_net.species[self.typing.species_map[s]].name

    def transition_type(self, t: int) -> str:
        return self.type_net.transitions[self.typing.transition_map[t]].name

    @classmethod
    def from_names(
        cls,
        net: PetriNet,
        type_net: PetriNet,
        species_types: Mapping[str, str],
        transition_types: Mapping[str, str],
    ) -> "TypedPetriNet":
        """Build a typing from name maps, matching arcs inside each fiber.

        Within a transition, each arc is sent to the first unused arc of the
        image transition whose species has the right type, in declaration
        order.  The result is not validated; call :meth:`violations`.
        """
        smap = [type_net.species_index(species_types[s.name]) for s in net.species]
        tmap = [type_net.transition_index(transition_types[t.name]) for t in net.transitions]
        imap = [0] * len(net.inputs)
        omap = [0] * len(net.outputs)
        for t, u in enumerate(tmap):
            for arcs, type_arcs, fib, tfib, amap in (
                (net.inputs, type_net.inputs, net.input_arcs_of(t), type_net.input_arcs_of(u), imap),
                (net.outputs, type_net.outputs, net.output_arcs_of(t), type_net.output_arcs_of(u), omap),
            ):
                free = list(tfib)
                for a in fib:
                    want = smap[arcs[a].species]
                    pick = next((b for b in free if type_arcs[b].species == want), None)
                    if pick is None:
                        # no matching arc left; point at any arc so validation reports it
                        pick = free[0] if free else (tfib[0] if tfib else 0)
                    else:
                        free.remove(pick)
                    amap[a] = pick
        return cls(net, type_net, PetriMorphism(net, type_net, smap, tmap, imap, omap))


def conserves_population(net: PetriNet | TypedPetriNet) -> bool:
    """True iff every transition has as many output arcs as input arcs."""
    if isinstance(net, TypedPetriNet):
        net = net.net
    return all(
        len(net.input_arcs_of(t)) == len(net.output_arcs_of(t)) for t in range(len(net.transitions))
    )


def forbidden_transitions(
    net: PetriNet, species_types: Sequence[int], type_net: PetriNet
) -> list[int]:
    """Transitions that no transition of ``type_net`` can type.

    A transition is typeable under a fixed species typing iff some type
    transition has the same multisets of input and output species types.
    """
    profiles = {
        (
            tuple(sorted(type_net.inputs[a].species for a in type_net.input_arcs_of(u))),
            tuple(sorted(type_net.outputs[a].species for a in type_net.output_arcs_of(u))),
        )
        for u in range(len(type_net.transitions))
    }
    bad = []
    for t in range(len(net.transitions)):
        key = (
            tuple(sorted(species_types[net.inputs[a].species] for a in net.input_arcs_of(t))),
            tuple(sorted(species_types[net.outputs[a].species] for a in net.output_arcs_of(t))),
        )
        if key not in profiles:
            bad.append(t)
    return bad


# -- isomorphism -------------------------------------------------------------


def _signatures(net: PetriNet, sc: list[int], tc: list[int]):
    s_in = [[] for _ in net.species]
    s_out = [[] for _ in net.species]
    t_in = [[] for _ in net.transitions]
    t_out = [[] for _ in net.transitions]
    for arc in net.inputs:
        s_in[arc.species].append(tc[arc.transition])
        t_in[arc.transition].append(sc[arc.species])
    for arc in net.outputs:
        s_out[arc.species].append(tc[arc.transition])
        t_out[arc.transition].append(sc[arc.species])
    ssig = [(sc[s], tuple(sorted(s_in[s])), tuple(sorted(s_out[s]))) for s in range(len(sc))]
    tsig = [(tc[t], tuple(sorted(t_in[t])), tuple(sorted(t_out[t]))) for t in range(len(tc))]
    return ssig, tsig


def _refine(p: PetriNet, q: PetriNet, colors):
    """Joint colour refinement of two nets until the partition is stable."""
    (psc, ptc), (qsc, qtc) = colors
    n_classes = -1
    while True:
        pss, pts = _signatures(p, psc, ptc)
        qss, qts = _signatures(q, qsc, qtc)
        s_ids = {sig: i for i, sig in enumerate(sorted(set(pss) | set(qss)))}
        t_ids = {sig: i for i, sig in enumerate(sorted(set(pts) | set(qts)))}
        psc = [s_ids[x] for x in pss]
        qsc = [s_ids[x] for x in qss]
        ptc = [t_ids[x] for x in pts]
        qtc = [t_ids[x] for x in qts]
        count = len(s_ids) + len(t_ids)
        if count == n_classes:
            return (psc, ptc), (qsc, qtc)
        n_classes = count


def _leaf_morphism(p: PetriNet, q: PetriNet, psc: list[int], qsc: list[int]):
    by_color = {c: s for s, c in enumerate(qsc)}
    smap = [by_color[c] for c in psc]

    def key(net, t, sm):
        return (
            tuple(sorted(sm[net.inputs[a].species] for a in net.input_arcs_of(t))),
            tuple(sorted(sm[net.outputs[a].species] for a in net.output_arcs_of(t))),
        )

    ident = list(range(len(q.species)))
    pool: dict = defaultdict(list)
    for u in range(len(q.transitions)):
        pool[key(q, u, ident)].append(u)
    tmap = []
    for t in range(len(p.transitions)):
        bucket = pool.get(key(p, t, smap))
        if not bucket:
            return None
        tmap.append(bucket.pop(0))

    imap = [0] * len(p.inputs)
    omap = [0] * len(p.outputs)
    for t, u in enumerate(tmap):
        for arcs, qarcs, fib, qfib, amap in (
            (p.inputs, q.inputs, p.input_arcs_of(t), q.input_arcs_of(u), imap),
            (p.outputs, q.outputs, p.output_arcs_of(t), q.output_arcs_of(u), omap),
        ):
            src = sorted(fib, key=lambda a: smap[arcs[a].species])
            dst = sorted(qfib, key=lambda b: qarcs[b].species)
            for a, b in zip(src, dst):
                amap[a] = b
    f = PetriMorphism(p, q, smap, tmap, imap, omap)
    return f if not validate_morphism(f) and f.is_bijective() else None


def is_isomorphic(p: PetriNet, q: PetriNet, max_nodes: int = 200_000) -> PetriMorphism | None:
    """Search for an isomorphism ``p -> q``, ignoring names and rates.

    Colour refinement prunes the candidates, then species are individualised
    one at a time with backtracking.  Raises :class:`SearchLimitError` once
    more than ``max_nodes`` branches have been tried.
    """
    if (len(p.species), len(p.transitions), len(p.inputs), len(p.outputs)) != (
        len(q.species),
        len(q.transitions),
        len(q.inputs),
        len(q.outputs),
    ):
        return None

    nodes = 0

    def search(colors):
        nonlocal nodes
        (psc, ptc), (qsc, qtc) = colors = _refine(p, q, colors)
        if Counter(psc) != Counter(qsc) or Counter(ptc) != Counter(qtc):
            return None
        sizes = Counter(psc)
        open_classes = [c for c, n in sizes.items() if n > 1]
        if not open_classes:
            return _leaf_morphism(p, q, psc, qsc)
        c = min(open_classes, key=lambda c: (sizes[c], c))
        x = psc.index(c)
        fresh = max(max(psc), max(qsc)) + 1
        for y, cy in enumerate(qsc):
            if cy != c:
                continue
            nodes += 1
            if nodes > max_nodes:
                raise SearchLimitError(f"isomorphism search exceeded {max_nodes} nodes")
            npsc, nqsc = list(psc), list(qsc)
            npsc[x] = nqsc[y] = fresh
            found = search(((npsc, ptc), (nqsc, qtc)))
            if found is not None:
                return found
        return None

    init = (([0] * len(p.species), [0] * len(p.transitions)), ([0] * len(q.species), [0] * len(q.transitions)))
    return search(init)


# -- DOT export ---------------------------------------------------------------


def _quote(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(
    net: PetriNet,
    *,
    name: str = "petri",
    species_colors: Mapping[str, str] | None = None,
    transition_colors: Mapping[str, str] | None = None,
    comments: Iterable[str] = (),
) -> str:
    """Render ``net`` as Graphviz DOT.

    Species are circles and transitions boxes; every arc is one edge, so
    repeated arcs show up as parallel edges.  Output order follows
    declaration order, which keeps the text deterministic.
    """
    species_colors = species_colors or {}
    transition_colors = transition_colors or {}
    lines = [f"digraph {_quote(name)} {{"]
    lines += [f"  // {c}" for c in comments]
    lines.append("  graph [rankdir=LR];")
    for i, s in enumerate(net.species):
        attrs = f"label={_quote(s.name)}, shape=circle"
        if s.name in species_colors:
            attrs += f", style=filled, fillcolor={_quote(species_colors[s.name])}"
        lines.append(f"  s{i} [{attrs}];")
    for i, t in enumerate(net.transitions):
        attrs = f"label={_quote(t.name)}, shape=box"
        if t.name in transition_colors:
            attrs += f", style=filled, fillcolor={_quote(transition_colors[t.name])}"
        lines.append(f"  t{i} [{attrs}];")
    for arc in net.inputs:
        lines.append(f"  s{arc.species} -> t{arc.transition};")
    for arc in net.outputs:
        lines.append(f"  t{arc.transition} -> s{arc.species};")
    lines.append("}")
    return "\n".join(lines) + "\n"
