"""``opetri`` command line.

Every command reads a project file and writes its artifacts under
``--out`` (default: the current directory).  Exit codes: 0 success, 1 a
domain error (bad model, failed typecheck, solver failure), 2 bad usage.
Set ``OPETRI_COLOR=0`` to turn off coloured status lines.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .analyze import calibrate, sensitivity, sensitivity_heatmap
from .compose import OpenTypedPetriNet
from .errors import OpetriError
from .formats import net_to_json, open_net_to_json, typed_net_to_json
from .petri_core import conserves_population, forbidden_transitions, to_dot, validate_net
from .project import Project, load_project
from .solve import solve_dde, solve_ode
from .stratify import pullback, typing_colors

__all__ = ["main", "build_parser"]


class _Usage(Exception):
    pass


def _color(code: str, text: str, stream) -> str:
    if os.environ.get("OPETRI_COLOR", "1") == "0" or not stream.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _ok(msg: str) -> None:
    print(_color("32", "ok", sys.stdout) + f": {msg}")


def _fail(msg: str) -> None:
    print(_color("31", "error", sys.stderr) + f": {msg}", file=sys.stderr)


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


# -- commands --------------------------------------------------------------------


def cmd_validate(p: Project, args) -> int:
    problems = []
    for name in p.names("nets") + p.names("open_nets") + p.names("composites"):
        problems += [f"{name}: {v}" for v in validate_net(p.net_of(name))]
    for name in p.names("typed_nets"):
        problems += [f"{name}: {v}" for v in p.typed_net(name)[0].violations()]
    for msg in problems:
        _fail(msg)
    sections = ("nets", "open_nets", "typed_nets", "uwds", "composites", "dynamics")
    counts = ", ".join(f"{len(p.names(s))} {s}" for s in sections if p.names(s))
    if problems:
        return 1
    _ok(f"project is consistent ({counts or 'empty'})")
    return 0


def cmd_compose(p: Project, args) -> int:
    if args.binding:
        u = p.uwd(args.name)
        binding = {}
        for item in args.binding:
            box, sep, ref = item.partition("=")
            if not sep or not box or not ref:
                raise _Usage(f"binding {item!r} is not of the form BOX=RESOURCE")
            binding[box] = ref
        result = p.compose(u, binding)
    elif p.section_of(args.name) == "composites":
        result = p.composite(args.name)
    else:
        raise _Usage(f"{args.name!r} is not a composite; give BOX=RESOURCE bindings to compose a UWD")
    stem = _safe(args.name)
    if isinstance(result, OpenTypedPetriNet):
        doc = typed_net_to_json(result.typed, result.legs)
        dot = to_dot(result.typed.net, name=args.name, transition_colors=typing_colors(result.typed))
        net = result.typed.net
    else:
        doc = open_net_to_json(result)
        dot = to_dot(result.net, name=args.name)
        net = result.net
    _write(args.out, f"{stem}.json", _json(doc))
    _write(args.out, f"{stem}.dot", dot)
    _ok(f"{args.name}: {len(net.species)} species, {len(net.transitions)} transitions")
    return 0


def cmd_stratify(p: Project, args) -> int:
    a, b = p.typed_of(args.left), p.typed_of(args.right)
    st = pullback(a, b)
    stem = _safe(f"{args.left}_x_{args.right}")
    net = st.result.net
    _write(args.out, f"{stem}.json", _json(typed_net_to_json(st.result)))
    _write(args.out, f"{stem}.dot", to_dot(net, name=stem, transition_colors=typing_colors(st.result)))
    _ok(f"{stem}: {len(net.species)} species, {len(net.transitions)} transitions")
    return 0


def cmd_typecheck(p: Project, args) -> int:
    tp = p.typed_of(args.name)
    problems = list(tp.violations())
    if not problems:
        # the typing is a valid morphism; still flag transitions the type
        # net cannot host under the species typing alone
        species_types = list(tp.typing.species_map)
        for t in forbidden_transitions(tp.net, species_types, tp.type_net):
            problems.append(f"transition {tp.net.transitions[t].name!r} has no valid type")
    for msg in problems:
        _fail(msg)
    if problems:
        bad = [
            t.name
            for t in tp.net.transitions
            if any(m.startswith(f"transition {t.name!r}") for m in problems)
        ]
        if bad:
            _fail(f"{args.name}: forbidden by the type system: {', '.join(bad)}")
        return 1
    extra = " and conserves population" if conserves_population(tp) else ""
    _ok(f"{args.name}: typing is valid{extra}")
    return 0


def cmd_simulate(p: Project, args) -> int:
    sim = p.simulation(args.name)
    f, u0, cfg = sim["field"], sim["u0"], sim["cfg"]
    if f.is_dde:
        u = np.asarray(u0, dtype=float)
        traj = solve_dde(f, u0, lambda t: u, cfg)
    else:
        traj = solve_ode(f, u0, cfg)
    path = _write(args.out, f"{_safe(args.name)}.csv", traj.to_csv())
    _ok(f"{args.name}: {len(traj.times)} rows written to {path}")
    return 0


def cmd_calibrate(p: Project, args) -> int:
    fit = p.fit(args.name)
    res = calibrate(fit["net"], fit["u0"], fit["data"], fit["spec"], fit["cfg"], seed=args.seed)
    _write(args.out, f"{_safe(args.name)}.json", _json(res.to_json()))
    status = "converged" if res.converged else "budget exhausted"
    if res.failures:
        status += f", {res.failures} failed simulations"
    _ok(f"{args.name}: loss {res.loss:.6g} after {res.evals} evaluations ({status})")
    return 0


def cmd_sensitivity(p: Project, args) -> int:
    run = p.sensitivity_run(args.name)
    sens = sensitivity(run["net"], None, run["u0"], run["outcome"], run["cfg"], h=run["h"])
    stem = _safe(args.name)
    _write(args.out, f"{stem}.json", _json(sens))
    _write(args.out, f"{stem}.dot", sensitivity_heatmap(run["net"], sens))
    _ok(f"{args.name}: {len(sens)} sensitivities")
    return 0


def cmd_export_dot(p: Project, args) -> int:
    sec = p.section_of(args.name)
    if sec == "typed_nets" or (sec == "composites" and isinstance(p.composite(args.name), OpenTypedPetriNet)):
        tp = p.typed_of(args.name)
        dot = to_dot(tp.net, name=args.name, transition_colors=typing_colors(tp))
    else:
        dot = to_dot(p.net_of(args.name), name=args.name)
    path = _write(args.out, f"{_safe(args.name)}.dot", dot)
    _ok(f"{args.name}: wrote {path}")
    return 0


def cmd_export_json(p: Project, args) -> int:
    path = _write(args.out, f"{_safe(args.name)}.json", _json(net_to_json(p.net_of(args.name))))
    _ok(f"{args.name}: wrote {path}")
    return 0


# -- parser ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--project", "-p", required=True, type=Path, help="project JSON file")
    common.add_argument("--out", "-o", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, default=0, help="tie-break seed for calibration")

    parser = _Parser(prog="opetri", description="Compose, stratify and simulate Petri net models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help, *positional):
        sp = sub.add_parser(name, parents=[common], help=help)
        for arg, kw in positional:
            sp.add_argument(arg, **kw)
        sp.set_defaults(func=func)

    add("validate", cmd_validate, "load and check every resource")
    add(
        "compose",
        cmd_compose,
        "compose along a diagram",
        ("name", {"help": "composite entry, or a UWD when bindings follow"}),
        ("binding", {"nargs": "*", "help": "BOX=RESOURCE"}),
    )
    add("stratify", cmd_stratify, "pullback of two typed nets", ("left", {}), ("right", {}))
    add("typecheck", cmd_typecheck, "check a typing against its type net", ("name", {}))
    add("simulate", cmd_simulate, "run a simulation entry to CSV", ("name", {}))
    add("calibrate", cmd_calibrate, "fit rates to a dataset", ("name", {}))
    add("sensitivity", cmd_sensitivity, "outcome sensitivities and heatmap", ("name", {}))
    add("export-dot", cmd_export_dot, "write a net as DOT", ("name", {}))
    add("export-json", cmd_export_json, "write a net as JSON", ("name", {}))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        project = load_project(args.project)
        return args.func(project, args)
    except _Usage as e:
        _fail(f"usage: {e}")
        return 2
    except OpetriError as e:
        _fail(str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
