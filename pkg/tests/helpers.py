"""Seeded random generators and brute-force oracles shared by the tests."""

from __future__ import annotations

import itertools

import numpy as np

from opetri.compose import UWD, Box, Junction, OpenPetriNet
from opetri.petri_core import (
    InputArc,
    OutputArc,
    PetriMorphism,
    PetriNet,
    Species,
    Transition,
    TypedPetriNet,
    validate_morphism,
)


def random_net(rng: np.random.Generator, max_species=6, max_transitions=5, max_arcs=3, min_species=0):
    n = int(rng.integers(min_species, max_species + 1))
    m = int(rng.integers(0, max_transitions + 1)) if n else 0
    transitions = [Transition(f"t{k}", float(rng.uniform(0.05, 2.0))) for k in range(m)]
    inputs, outputs = [], []
    for t in range(m):
        inputs += [InputArc(int(rng.integers(n)), t) for _ in range(rng.integers(0, max_arcs + 1))]
        outputs += [OutputArc(int(rng.integers(n)), t) for _ in range(rng.integers(0, max_arcs + 1))]
    # shuffle arc order so fibers are not contiguous
    inputs = [inputs[k] for k in rng.permutation(len(inputs))]
    outputs = [outputs[k] for k in rng.permutation(len(outputs))]
    return PetriNet([Species(f"s{k}") for k in range(n)], transitions, inputs, outputs)


def random_open_net(rng, max_species=6, max_legs=4, **kw):
    net = random_net(rng, max_species=max_species, min_species=1, **kw)
    k = int(rng.integers(0, max_legs + 1))
    return OpenPetriNet(net, [int(x) for x in rng.integers(0, len(net.species), size=k)])


def random_uwd_binding(rng, max_boxes=4, max_species=6, max_junctions=5):
    """A random diagram with a random open net bound to every box."""
    n_boxes = int(rng.integers(0, max_boxes + 1))
    comps = [random_open_net(rng, max_species=max_species) for _ in range(n_boxes)]
    needs = any(c.legs for c in comps)
    nj = int(rng.integers(1 if needs else 0, max_junctions + 1))
    boxes = [Box(f"b{k}", [int(x) for x in rng.integers(0, nj, size=len(c.legs))]) for k, c in enumerate(comps)]
    outer = [int(x) for x in rng.integers(0, nj, size=int(rng.integers(0, 3)))] if nj else []
    u = UWD(outer, [Junction(f"j{k}") for k in range(nj)], boxes)
    return u, {f"b{k}": c for k, c in enumerate(comps)}


def random_typed(rng, type_net: PetriNet, max_species=3, max_transitions=3, name="x") -> TypedPetriNet:
    """A random net with a valid typing into ``type_net``.

    Every type species gets at least one net species so that every type
    transition can be instantiated.
    """
    nts = len(type_net.species)
    n = int(rng.integers(nts, max(nts, max_species) + 1))
    stype = list(range(nts)) + [int(x) for x in rng.integers(0, nts, size=n - nts)]
    stype = [stype[k] for k in rng.permutation(n)]
    by_type = {ty: [s for s in range(n) if stype[s] == ty] for ty in range(nts)}
    m = int(rng.integers(0, max_transitions + 1))
    transitions, inputs, outputs, tmap, imap, omap = [], [], [], [], [], []
    for t in range(m):
        u = int(rng.integers(len(type_net.transitions)))
        transitions.append(Transition(f"{name}{t}", float(rng.uniform(0.1, 1.0))))
        tmap.append(u)
        for a in type_net.input_arcs_of(u):
            ty = type_net.inputs[a].species
            inputs.append(InputArc(int(rng.choice(by_type[ty])), t))
            imap.append(a)
        for a in type_net.output_arcs_of(u):
            ty = type_net.outputs[a].species
            outputs.append(OutputArc(int(rng.choice(by_type[ty])), t))
            omap.append(a)
    net = PetriNet([Species(f"{name}{k}") for k in range(n)], transitions, inputs, outputs)
    typing = PetriMorphism(net, type_net, stype, tmap, imap, omap)
    return TypedPetriNet(net, type_net, typing)


def permuted(net: PetriNet, rng) -> PetriNet:
    """Same net with all four sets presented in a random order."""
    ps = rng.permutation(len(net.species))
    pt = rng.permutation(len(net.transitions))
    pi = rng.permutation(len(net.inputs))
    po = rng.permutation(len(net.outputs))
    new_s = {int(old): k for k, old in enumerate(ps)}
    new_t = {int(old): k for k, old in enumerate(pt)}
    return PetriNet(
        [net.species[k] for k in ps],
        [net.transitions[k] for k in pt],
        [InputArc(new_s[net.inputs[k].species], new_t[net.inputs[k].transition]) for k in pi],
        [OutputArc(new_s[net.outputs[k].species], new_t[net.outputs[k].transition]) for k in po],
    )


# -- brute-force oracles ------------------------------------------------------------


def pullback_oracle(a: TypedPetriNet, b: TypedPetriNet):
    """Componentwise pullback by exhaustive pair enumeration.

    Returns the four sets as sorted lists of index pairs, with arcs carried
    as ((left arc, right arc), (source pair, transition pair)).
    """
    fa, fb = a.typing, b.typing

    def pairs(ma, mb):
        return sorted((i, j) for i, j in itertools.product(range(len(ma)), range(len(mb))) if ma[i] == mb[j])

    species = pairs(fa.species_map, fb.species_map)
    transitions = pairs(fa.transition_map, fb.transition_map)
    inputs = [
        ((x, y), ((a.net.inputs[x].species, b.net.inputs[y].species), (a.net.inputs[x].transition, b.net.inputs[y].transition)))
        for x, y in pairs(fa.input_map, fb.input_map)
    ]
    outputs = [
        ((x, y), ((a.net.outputs[x].species, b.net.outputs[y].species), (a.net.outputs[x].transition, b.net.outputs[y].transition)))
        for x, y in pairs(fa.output_map, fb.output_map)
    ]
    return species, transitions, inputs, outputs


def all_morphisms(x: PetriNet, y: PetriNet):
    """Every valid (etale) morphism from ``x`` to ``y``, by brute force."""
    out = []
    for smap in itertools.product(range(len(y.species)), repeat=len(x.species)):
        for tmap in itertools.product(range(len(y.transitions)), repeat=len(x.transitions)):
            choices_i, choices_o = [], []
            ok = True
            for t, u in enumerate(tmap):
                fi, ci = x.input_arcs_of(t), y.input_arcs_of(u)
                fo, co = x.output_arcs_of(t), y.output_arcs_of(u)
                if len(fi) != len(ci) or len(fo) != len(co):
                    ok = False
                    break
                choices_i.append([dict(zip(fi, p)) for p in itertools.permutations(ci)])
                choices_o.append([dict(zip(fo, p)) for p in itertools.permutations(co)])
            if not ok:
                continue
            for ci in itertools.product(*choices_i):
                imap = {k: v for d in ci for k, v in d.items()}
                if any(y.inputs[imap[a]].species != smap[x.inputs[a].species] for a in imap):
                    continue
                for co in itertools.product(*choices_o):
                    omap = {k: v for d in co for k, v in d.items()}
                    if any(y.outputs[omap[a]].species != smap[x.outputs[a].species] for a in omap):
                        continue
                    f = PetriMorphism(
                        x,
                        y,
                        smap,
                        tmap,
                        [imap[a] for a in range(len(x.inputs))],
                        [omap[a] for a in range(len(x.outputs))],
                    )
                    assert not validate_morphism(f)
                    out.append(f)
    return out


def maps(f: PetriMorphism) -> tuple:
    return (f.species_map, f.transition_map, f.input_map, f.output_map)


def compose_maps(f: PetriMorphism, g: PetriMorphism) -> tuple:
    """Components of g after f, computed directly on the index arrays."""
    return tuple(tuple(mg[i] for i in mf) for mf, mg in zip(maps(f), maps(g)))


def rel_close(a, b, rel=1e-12) -> bool:
    """|a - b| <= rel * max(|a|_inf, |b|_inf), exact equality for zero vectors."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0))
    return bool(np.all(np.abs(a - b) <= rel * scale))
