"""Vector fields for Petri nets and for open ODE/DDE components.

``mass_action`` turns a net into the usual reaction-network ODE.  Open
components expose some of their variables; composing them along a UWD
identifies exposed variables (same quotient as Petri composition) and adds
up the rates of change of identified variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Optional

import numpy as np

from .compose import UWD, OpenPetriNet, check_binding, quotient
from .errors import OpetriError
from .petri_core import PetriNet

__all__ = [
    "History",
    "VectorField",
    "OpenDynamics",
    "mass_action",
    "petri_to_open_dynamics",
    "compose_dynamics",
    "ode_to_dde",
    "COMPONENTS",
    "component",
]

History = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class VectorField:
    """``eval(t, u, history)`` returns du/dt.

    ``history`` maps a past time to the full state vector; ODE fields ignore
    it.  ``delay_capable`` marks ODE fields coerced for use among DDEs.
    """

    dim: int
    eval: Callable[[float, np.ndarray, Optional[History]], np.ndarray]
    var_names: tuple[str, ...]
    delays: tuple[float, ...] = ()
    delay_capable: bool = False

    def __post_init__(self):
        object.__setattr__(self, "var_names", tuple(self.var_names))
        object.__setattr__(self, "delays", tuple(float(d) for d in self.delays))
        if len(self.var_names) != self.dim:
            raise ValueError("need one name per state variable")
        if any(not math.isfinite(d) or d < 0 for d in self.delays):
            raise ValueError("delays must be finite and nonnegative")

    @property
    def is_dde(self) -> bool:
        return bool(self.delays) or self.delay_capable

    def __call__(self, t: float, u, history: History | None = None) -> np.ndarray:
        return np.asarray(self.eval(t, np.asarray(u, dtype=float), history), dtype=float)


@dataclass(frozen=True)
class OpenDynamics:
    field: VectorField
    legs: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "legs", tuple(int(x) for x in self.legs))
        bad = [x for x in self.legs if not 0 <= x < self.field.dim]
        if bad:
            raise ValueError(f"leg indices {bad} out of range [0, {self.field.dim})")


def mass_action(net: PetriNet) -> VectorField:
    """Mass-action kinetics.

    Each transition fires at ``rate * prod(u[s] for s in inputs)`` with
    repeated input arcs repeating the factor.  A species changes by its
    output count minus its input count on the transition times the flux;
    using the net count means catalysts cancel exactly rather than up to
    rounding.
    """
    n = len(net.species)
    rates = net.rates
    in_s = np.array([a.species for a in net.inputs], dtype=np.intp)
    in_t = np.array([a.transition for a in net.inputs], dtype=np.intp)
    change: dict[tuple[int, int], int] = {}
    for a in net.outputs:
        change[a.transition, a.species] = change.get((a.transition, a.species), 0) + 1
    for a in net.inputs:
        change[a.transition, a.species] = change.get((a.transition, a.species), 0) - 1
    entries = sorted((k, c) for k, c in change.items() if c)
    st_t = np.array([t for (t, _), _ in entries], dtype=np.intp)
    st_s = np.array([s for (_, s), _ in entries], dtype=np.intp)
    coef = np.array([c for _, c in entries], dtype=float)

    def f(t, u, history=None):
        flux = rates.copy()
        np.multiply.at(flux, in_t, u[in_s])
        return np.bincount(st_s, weights=coef * flux[st_t], minlength=n)

    return VectorField(n, f, net.species_names)


def petri_to_open_dynamics(m: OpenPetriNet) -> OpenDynamics:
    return OpenDynamics(mass_action(m.net), m.legs)


def compose_dynamics(u: UWD, binding: Mapping[str, OpenDynamics]) -> OpenDynamics:
    """Glue open components along ``u`` and sum their contributions.

    Variable order and naming match :func:`opetri.compose.oapply`, so a
    composite of mass-action fields lines up with the mass-action field of
    the composite net.  A component with delays may only be mixed with
    delay-capable ones (see :func:`ode_to_dde`).
    """
    check_binding(u, binding)
    comps = [binding[b.name] for b in u.boxes]
    q = quotient(u, [c.field.var_names for c in comps], [c.legs for c in comps])
    if any(c.field.delays for c in comps):
        plain = [b.name for b, c in zip(u.boxes, comps) if not c.field.is_dde]
        if plain:
            raise OpetriError(
                f"boxes {plain} hold ODE components next to delayed ones; coerce them with ode_to_dde"
            )
    index = [np.array(cls, dtype=np.intp) for cls in q.class_of]
    fields = [c.field for c in comps]
    n = q.size

    def f(t, U, history=None):
        out = np.zeros(n)
        for fld, idx in zip(fields, index):
            h = None if history is None else (lambda s, idx=idx: np.asarray(history(s))[idx])
            np.add.at(out, idx, fld(t, U[idx], h))
        return out

    delays = tuple(sorted({d for c in comps for d in c.field.delays}))
    field = VectorField(
        n, f, q.names, delays, delay_capable=any(c.field.is_dde for c in comps)
    )
    return OpenDynamics(field, q.outer_legs)


def ode_to_dde(d: OpenDynamics) -> OpenDynamics:
    """View an ODE component as a DDE that ignores its history."""
    if d.field.delays:
        raise OpetriError("component already has delays")
    return OpenDynamics(replace(d.field, delay_capable=True), d.legs)


# -- built-in components --------------------------------------------------------
# Ross-Macdonald malaria pieces: a biting rate, b/c infection efficacy for
# hosts/vectors, r host recovery, g vector death, H/V total hosts/vectors.


def _host(r):
    return OpenDynamics(VectorField(1, lambda t, u, h=None: np.array([-r * u[0]]), ["I_H"]), [0])


def _vector(g):
    return OpenDynamics(VectorField(1, lambda t, u, h=None: np.array([-g * u[0]]), ["I_V"]), [0])


def _bloodmeal(a, b, c, H, V):
    def f(t, u, history=None):
        ih, iv = u
        return np.array([a * b * (iv / H) * (H - ih), a * c * (ih / H) * (V - iv)])

    return OpenDynamics(VectorField(2, f, ["I_H", "I_V"]), [0, 1])


def _bloodmeal_delay(a, b, c, g, H, V, tau):
    # vectors infected at t - tau become infectious at t if they survive
    # the incubation period; tau = 0 gives back the plain bloodmeal
    survive = math.exp(-g * tau)

    def f(t, u, history):
        ih, iv = u
        ih_lag, iv_lag = history(t - tau)
        return np.array(
            [a * b * (iv / H) * (H - ih), a * c * survive * (ih_lag / H) * (V - iv_lag)]
        )

    return OpenDynamics(VectorField(2, f, ["I_H", "I_V"], [tau], True), [0, 1])


COMPONENTS: dict[str, tuple[Callable[..., OpenDynamics], dict[str, float]]] = {
    "rm_host": (_host, {"r": 1 / 200}),
    "rm_vector": (_vector, {"g": 1 / 10}),
    "rm_bloodmeal": (_bloodmeal, {"a": 0.3, "b": 0.5, "c": 0.5, "H": 1e4, "V": 5e4}),
    "rm_bloodmeal_delay": (
        _bloodmeal_delay,
        {"a": 0.3, "b": 0.5, "c": 0.5, "g": 1 / 10, "H": 1e4, "V": 5e4, "tau": 10.0},
    ),
}


def component(name: str, params: Mapping[str, float] | None = None) -> OpenDynamics:
    """Instantiate a built-in component, overriding any default parameters."""
    try:
        make, defaults = COMPONENTS[name]
    except KeyError:
        raise OpetriError(f"unknown component {name!r}; known: {sorted(COMPONENTS)}") from None
    params = dict(params or {})
    unknown = set(params) - set(defaults)
    if unknown:
        raise OpetriError(f"component {name!r} has no parameters {sorted(unknown)}")
    try:
        return make(**{**defaults, **{k: float(v) for k, v in params.items()}})
    except (TypeError, ValueError) as e:
        raise OpetriError(f"component {name!r}: {e}") from None
