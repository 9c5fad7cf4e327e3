from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from opetri import fixtures as F
from opetri.compose import OpenTypedPetriNet
from opetri.errors import OpetriError, ProjectError, TypeClashError
from opetri.formats import net_to_json
from opetri.petri_core import is_isomorphic
from opetri.project import FIXTURES, load_project, project_from_doc

DEMO = Path(__file__).resolve().parents[1] / "demo"


@pytest.fixture(scope="module")
def epi():
    return load_project(DEMO / "epi.json")


class TestDemoProjects:
    def test_epi_loads(self, epi):
        assert epi.names("composites") == ["sviivr", "sviivr_typed"]
        assert is_isomorphic(epi.net_of("sviivr"), F.sviivr()) is not None
        assert isinstance(epi.composite("sviivr_typed"), OpenTypedPetriNet)

    def test_paths_resolve_against_project_dir(self, epi):
        assert epi.uwd("epi") == F.vaccination_uwd()
        assert epi.dataset("sir_obs").times.size == 50

    def test_malaria_loads(self):
        p = load_project(DEMO / "malaria.json")
        assert p.dynamics("ross_macdonald").field.var_names == ("I_H", "I_V")
        assert p.dynamics("ross_macdonald_delay").field.delays == (10.0,)

    def test_guardrails_load_unchecked(self):
        # invalid typings load so that typecheck can report them
        p = load_project(DEMO / "guardrails.json")
        assert p.typed_of("host_to_vector").violations()

    def test_solver_defaults_and_overrides(self, epi):
        assert epi.solver().rel_tol == 1e-8
        assert epi.solver({"method": "rk4"}).method == "rk4"
        with pytest.raises(ProjectError):
            epi.solver({"dt": -1})


class TestInlineShapes:
    def test_inline_net_and_reference_forms(self):
        p = project_from_doc(
            {
                "nets": {"mine": net_to_json(F.sir()), "T": {"fixture": "infectious_type"}},
                "open_nets": {"mine_open": {"net": "mine", "legs": ["S", 2]}},
                "typed_nets": {
                    "mine_typed": {
                        "net": "mine",
                        "type_net": "T",
                        "species_types": {"S": "Pop", "I": "Pop", "R": "Pop"},
                        "transition_types": {"inf": "infect", "rec": "disease"},
                    }
                },
                "uwds": {"one": {"source": "uwd one(a, b) { m(a, b) }"}},
                "composites": {"c": {"uwd": "one", "binding": {"m": "mine_open"}}},
            }
        )
        assert p.open_net("mine_open").legs == (0, 2)
        assert p.typed_net("mine_typed")[0].violations() == []
        assert p.net_of("c").species_names[:2] == ["a", "b"]

    def test_dataset_inline_csv(self):
        p = project_from_doc({"datasets": {"d": {"csv": "t,S\n0,1\n1,\n"}}})
        assert list(p.dataset("d").observations) == ["S"]


BAD_DOCS = [
    ({"nets": {"x": {"fixture": "nope"}}}, "unknown nets fixture"),
    ({"nets": {"x": {"path": "missing.json"}}}, "cannot read"),
    ({"nets": {"x": {"fixture": "sir"}}, "open_nets": {"x": {"fixture": "sir_open"}}}, "used in both"),
    ({"bogus": {}}, "Additional properties"),
    ({"open_nets": {"o": {"net": "ghost", "legs": [0]}}}, "no nets entry named 'ghost'"),
    ({"nets": {"n": {"fixture": "sir"}}, "open_nets": {"o": {"net": "n", "legs": ["Q"]}}}, "not a species"),
    (
        {"nets": {"n": {"fixture": "sir"}}, "simulations": {"s": {"model": "n", "u0": {"S": 1}}}},
        "missing",
    ),
    ({"uwds": {"u": {"source": "uwd m( {}"}}}, "uwds.u: 1:"),
    ({"dynamics": {"d": {"component": "rm_host", "params": {"zz": 1}}}}, "no parameters"),
    (
        {
            "typed_nets": {"h": {"fixture": "sir_open_typed"}, "v": {"fixture": "sis_vector_host_typed", "legs": [0]}},
            "uwds": {"u": {"source": "uwd u() { a(X, Y, Z); b(X) }"}},
            "composites": {"c": {"uwd": "u", "binding": {"a": "h", "b": "v"}}},
        },
        "composites.c",
    ),
]


@pytest.mark.parametrize("doc, match", BAD_DOCS)
def test_bad_projects_raise_domain_errors(doc, match, tmp_path):
    with pytest.raises(OpetriError, match=match):
        project_from_doc(doc, tmp_path)


def test_type_clash_keeps_its_class():
    doc = {
        "typed_nets": {
            "a": {"fixture": "sis_vector_host_typed", "legs": ["S_H"]},
            "b": {"fixture": "sis_vector_host_typed", "legs": ["S_V"]},
        },
        "uwds": {"u": {"source": "uwd u() { a(X); b(X) }"}},
        "composites": {"c": {"uwd": "u", "binding": {"a": "a", "b": "b"}}},
    }
    with pytest.raises(TypeClashError) as e:
        project_from_doc(doc)
    assert str(e.value).startswith("composites.c: junction 'X'")


def test_every_fixture_builds():
    for section, entries in FIXTURES.items():
        for name in entries:
            key = "fixture"
            p = project_from_doc({section: {name: {key: name}}})
            assert p.names(section) == [name]


def _mutations():
    scalars = st.one_of(st.none(), st.booleans(), st.integers(-3, 10), st.floats(-1e3, 1e3), st.text(max_size=4))
    return st.lists(st.tuples(st.integers(0, 10_000), scalars), min_size=1, max_size=3)


def _paths(doc, prefix=()):
    out = [prefix]
    if isinstance(doc, dict):
        for k, v in doc.items():
            out += _paths(v, prefix + (k,))
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            out += _paths(v, prefix + (i,))
    return out


@settings(max_examples=400, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.sampled_from(["epi.json", "malaria.json", "guardrails.json"]), _mutations())
def test_mutated_projects_fail_cleanly(project, mutations):
    # swapping random leaves of a real project must give a domain error,
    # never an uncaught Python exception
    doc = json.loads((DEMO / project).read_text())
    for pick, value in mutations:
        paths = [p for p in _paths(doc) if p]
        path = paths[pick % len(paths)]
        parent = doc
        for k in path[:-1]:
            parent = parent[k]
        parent[path[-1]] = value
    try:
        project_from_doc(doc, DEMO)
    except OpetriError:
        pass
