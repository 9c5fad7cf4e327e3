"""Undirected wiring diagrams and composition of open Petri nets.

An open net exposes one species per leg.  Composition along a UWD takes the
disjoint union of the component nets and glues each exposed species to the
junction its port is wired to; the composite species are the classes of
that identification.  The same quotient drives composition of open
dynamical systems in :mod:`opetri.dynamics`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import (
    ArityError,
    BindingError,
    InvalidNetError,
    OpetriError,
    TypeClashError,
    TypeNetMismatchError,
)
from .petri_core import (
    InputArc,
    OutputArc,
    PetriMorphism,
    PetriNet,
    Species,
    Transition,
    TypedPetriNet,
    validate_morphism,
    validate_net,
)

__all__ = [
    "Junction",
    "Box",
    "UWD",
    "OpenPetriNet",
    "OpenTypedPetriNet",
    "Quotient",
    "UnionFind",
    "validate_uwd",
    "check_binding",
    "quotient",
    "oapply",
    "oapply_typed",
]


@dataclass(frozen=True)
class Junction:
    name: str


@dataclass(frozen=True)
class Box:
    name: str
    ports: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ports", tuple(self.ports))


@dataclass(frozen=True)
class UWD:
    """Boxes with ports wired to junctions, plus outer ports.

    ``name`` is a label for printing only and does not take part in
    equality.
    """

    outer_ports: tuple[int, ...] = ()
    junctions: tuple[Junction, ...] = ()
    boxes: tuple[Box, ...] = ()
    name: str = field(default="anon", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "outer_ports", tuple(self.outer_ports))
        object.__setattr__(self, "junctions", tuple(self.junctions))
        object.__setattr__(self, "boxes", tuple(self.boxes))

    @classmethod
    def from_names(
        cls,
        outer: Sequence[str],
        boxes: Sequence[tuple[str, Sequence[str]]],
        junctions: Sequence[str] | None = None,
        name: str = "anon",
    ) -> "UWD":
        """Build a diagram by naming junctions; unknown names become junctions
        in first-occurrence order (outer ports first)."""
        order = list(junctions or [])
        for j in list(outer) + [j for _, ports in boxes for j in ports]:
            if j not in order:
                order.append(j)
        index = {j: i for i, j in enumerate(order)}
        return cls(
            [index[j] for j in outer],
            [Junction(j) for j in order],
            [Box(b, [index[j] for j in ports]) for b, ports in boxes],
            name=name,
        )

    @property
    def n_ports(self) -> int:
        return sum(len(b.ports) for b in self.boxes)

    @property
    def box_names(self) -> list[str]:
        return [b.name for b in self.boxes]


def validate_uwd(u: UWD) -> list[str]:
    out = []
    nj = len(u.junctions)
    for k, j in enumerate(u.outer_ports):
        if not 0 <= j < nj:
            out.append(f"outer port {k}: junction index {j} out of range [0, {nj})")
    for b in u.boxes:
        for k, j in enumerate(b.ports):
            if not 0 <= j < nj:
                out.append(f"box {b.name!r} port {k}: junction index {j} out of range [0, {nj})")
    for what, names in (("junction", [j.name for j in u.junctions]), ("box", u.box_names)):
        for name, count in Counter(names).items():
            if count > 1:
                out.append(f"duplicate {what} name {name!r}")
    return out


@dataclass(frozen=True)
class OpenPetriNet:
    """A net with an ordered list of exposed species (one per leg)."""

    net: PetriNet
    legs: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "legs", tuple(int(x) for x in self.legs))
        n = len(self.net.species)
        bad = [x for x in self.legs if not 0 <= x < n]
        if bad:
            raise ValueError(f"leg indices {bad} out of range [0, {n})")

    @classmethod
    def expose(cls, net: PetriNet, names: Sequence[str]) -> "OpenPetriNet":
        return cls(net, [net.species_index(s) for s in names])


@dataclass(frozen=True)
class OpenTypedPetriNet:
    typed: TypedPetriNet
    legs: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "legs", OpenPetriNet(self.typed.net, self.legs).legs)

    @property
    def open(self) -> OpenPetriNet:
        return OpenPetriNet(self.typed.net, self.legs)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        x, y = self.find(x), self.find(y)
        if x != y:
            # keep the smaller element as root so roots are class minima
            if y < x:
                x, y = y, x
            self.parent[y] = x


@dataclass(frozen=True)
class Quotient:
    """Result of gluing components along a UWD.

    ``class_of[b][i]`` is the composite index of local element ``i`` of box
    ``b``; ``junction_class[j]`` that of junction ``j``.
    """

    names: tuple[str, ...]
    class_of: tuple[tuple[int, ...], ...]
    junction_class: tuple[int, ...]
    outer_legs: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.names)


def _dedupe(names: list[str]) -> list[str]:
    seen: Counter = Counter()
    taken = set(names)
    out = []
    for n in names:
        seen[n] += 1
        if seen[n] == 1:
            out.append(n)
            continue
        k = seen[n]
        while f"{n}#{k}" in taken:
            k += 1
        out.append(f"{n}#{k}")
        taken.add(out[-1])
    return out


def check_binding(u: UWD, binding: Mapping[str, object]) -> None:
    """Raise unless ``binding`` covers exactly the boxes of a valid ``u``."""
    missing = [b for b in u.box_names if b not in binding]
    if missing:
        raise BindingError(f"unbound boxes: {missing}")
    extra = sorted(set(binding) - set(u.box_names))
    if extra:
        raise BindingError(f"binding names boxes not in the diagram: {extra}")
    bad = validate_uwd(u)
    if bad:
        raise InvalidNetError("invalid wiring diagram", bad)


def quotient(
    u: UWD,
    local_names: Sequence[Sequence[str]],
    legs: Sequence[Sequence[int]],
) -> Quotient:
    """Identify junctions with the local elements their ports expose.

    Classes are ordered by their first member in the sequence (junctions in
    declaration order, then each box's elements in box order).  A class is
    named after its first junction, else ``box.element``.
    """
    for box, ports_legs in zip(u.boxes, legs):
        if len(box.ports) != len(ports_legs):
            raise ArityError(
                f"box {box.name!r} has {len(box.ports)} ports but its model exposes "
                f"{len(ports_legs)} legs"
            )
    nj = len(u.junctions)
    offsets = []
    owner = [(-1, j) for j in range(nj)]
    total = nj
    for b, names in enumerate(local_names):
        offsets.append(total)
        owner.extend((b, i) for i in range(len(names)))
        total += len(names)
    uf = UnionFind(total)
    for b, box in enumerate(u.boxes):
        for j, leg in zip(box.ports, legs[b]):
            uf.union(j, offsets[b] + leg)

    roots = [uf.find(x) for x in range(total)]
    order: dict[int, int] = {}
    names: list[str] = []
    for x in range(total):
        r = roots[x]
        if r in order:
            continue
        order[r] = len(names)
        b, i = owner[x]
        if b < 0:
            names.append(u.junctions[i].name)
        else:
            names.append(f"{u.boxes[b].name}.{local_names[b][i]}")
    junction_class = tuple(order[roots[j]] for j in range(nj))
    class_of = tuple(
        tuple(order[roots[offsets[b] + i]] for i in range(len(local_names[b])))
        for b in range(len(u.boxes))
    )
    return Quotient(
        tuple(_dedupe(names)),
        class_of,
        junction_class,
        tuple(junction_class[j] for j in u.outer_ports),
    )


@dataclass(frozen=True)
class _Glued:
    net: PetriNet
    q: Quotient
    t_offset: tuple[int, ...]
    i_offset: tuple[int, ...]
    o_offset: tuple[int, ...]


def _glue(u: UWD, components: Sequence[OpenPetriNet]) -> _Glued:
    for box, comp in zip(u.boxes, components):
        bad = validate_net(comp.net)
        if bad:
            raise InvalidNetError(f"model bound to box {box.name!r} is invalid", bad)
    q = quotient(u, [c.net.species_names for c in components], [c.legs for c in components])

    clash = Counter(n for c in components for n in c.net.transition_names)
    transitions, inputs, outputs = [], [], []
    t_off, i_off, o_off = [], [], []
    for b, (box, comp) in enumerate(zip(u.boxes, components)):
        t0 = len(transitions)
        t_off.append(t0)
        i_off.append(len(inputs))
        o_off.append(len(outputs))
        cls = q.class_of[b]
        for t in comp.net.transitions:
            name = f"{box.name}.{t.name}" if clash[t.name] > 1 else t.name
            transitions.append(Transition(name, t.rate))
        inputs.extend(InputArc(cls[a.species], t0 + a.transition) for a in comp.net.inputs)
        outputs.extend(OutputArc(cls[a.species], t0 + a.transition) for a in comp.net.outputs)
    names = _dedupe([t.name for t in transitions])
    transitions = [Transition(n, t.rate) for n, t in zip(names, transitions)]
    net = PetriNet([Species(n) for n in q.names], transitions, inputs, outputs)
    return _Glued(net, q, tuple(t_off), tuple(i_off), tuple(o_off))


def oapply(u: UWD, binding: Mapping[str, OpenPetriNet]) -> OpenPetriNet:
    """Compose the open nets bound to the boxes of ``u``.

    Transitions and arcs are never merged: the composite carries the
    disjoint union of the component transitions, with arcs re-targeted at
    the glued species.  Transition names are prefixed with their box name
    when two components use the same name.
    """
    check_binding(u, binding)
    g = _glue(u, [binding[b.name] for b in u.boxes])
    return OpenPetriNet(g.net, g.q.outer_legs)


def oapply_typed(
    u: UWD, binding: Mapping[str, OpenTypedPetriNet], type_net: PetriNet
) -> OpenTypedPetriNet:
    """Compose typed open nets, refusing to glue places of different types."""
    check_binding(u, binding)
    comps = [binding[b.name] for b in u.boxes]
    for box, c in zip(u.boxes, comps):
        if c.typed.type_net != type_net:
            raise TypeNetMismatchError(f"model bound to box {box.name!r} is typed over a different type net")
        bad = c.typed.violations()
        if bad:
            raise InvalidNetError(f"typing of the model bound to box {box.name!r} is invalid", bad)
    g = _glue(u, [c.open for c in comps])
    q = g.q

    stype: list[int | None] = [None] * q.size
    for b, c in enumerate(comps):
        for s, k in enumerate(q.class_of[b]):
            ty = c.typed.typing.species_map[s]
            if stype[k] is None:
                stype[k] = ty
            elif stype[k] != ty:
                junction = next(
                    (u.junctions[j].name for j, kj in enumerate(q.junction_class) if kj == k),
                    q.names[k],
                )
                raise TypeClashError(
                    junction, type_net.species[stype[k]].name, type_net.species[ty].name
                )
    untyped = [q.names[k] for k, ty in enumerate(stype) if ty is None]
    if untyped:
        raise OpetriError(f"junctions {untyped} are not wired to any place, so they have no type")

    tmap, imap, omap = [], [], []
    for c in comps:
        tmap.extend(c.typed.typing.transition_map)
        imap.extend(c.typed.typing.input_map)
        omap.extend(c.typed.typing.output_map)
    typing = PetriMorphism(g.net, type_net, stype, tmap, imap, omap)
    bad = validate_morphism(typing)
    if bad:  # pragma: no cover - guaranteed by the clash check above
        raise InvalidNetError("composite typing is invalid", bad)
    return OpenTypedPetriNet(TypedPetriNet(g.net, type_net, typing), q.outer_legs)
