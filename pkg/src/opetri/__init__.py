"""Open Petri nets for compositional epidemic modelling.

Build models from small open Petri nets glued along undirected wiring
diagrams, stratify typed nets by pullback, and simulate, calibrate and
analyse the resulting mass-action systems.
"""

from __future__ import annotations

from .analyze import (
    Bounded,
    Calibration,
    Dataset,
    FitSpec,
    OutcomeSpec,
    calibrate,
    outcome,
    sensitivity,
    sensitivity_heatmap,
    simulate,
)
from .compose import UWD, Box, Junction, OpenPetriNet, OpenTypedPetriNet, oapply, oapply_typed
from .dynamics import (
    OpenDynamics,
    VectorField,
    component,
    compose_dynamics,
    mass_action,
    ode_to_dde,
    petri_to_open_dynamics,
)
from .errors import (
    ArityError,
    BindingError,
    InvalidMorphismError,
    InvalidNetError,
    OpetriError,
    ProjectError,
    SearchLimitError,
    SolverError,
    TypeClashError,
    TypeNetMismatchError,
    UwdParseError,
)
from .petri_core import (
    InputArc,
    OutputArc,
    PetriMorphism,
    PetriNet,
    Species,
    Transition,
    TypedPetriNet,
    conserves_population,
    forbidden_transitions,
    is_isomorphic,
    to_dot,
    validate_morphism,
    validate_net,
)
from .solve import SolveConfig, Trajectory, solve_dde, solve_ode
from .stratify import StratifiedNet, pullback, stratify_and_project
from .uwd_dsl import parse_uwd, print_uwd

__version__ = "0.1.0"
