"""Sectorial forms, linear relations and their limits in finite dimension."""
from .hilbert import HSpace, Subspace, orthonormalize, projector
from .forms import SesqForm, SectorParams, NotSectorial, sector_params, working_sector
from .relations import LinearRelation, from_operator, from_pairs, resolvent, single_valued_part
from .association import RepresentedForm, graph_of_closed_form, graph_of_represented_form
from .semigroups import ConvergenceReport, semigroup, trotter_product, resolvent_power_approx
from .series import FormSequence, ZeroTail, ConstantTail, GeometricTail, limit_form, build_tower
from .absorption import AbsorptionProblem, example_4_3_scenario, verify_absorption

__all__ = [
    "HSpace", "Subspace", "orthonormalize", "projector",
    "SesqForm", "SectorParams", "NotSectorial", "sector_params", "working_sector",
    "LinearRelation", "from_operator", "from_pairs", "resolvent", "single_valued_part",
    "RepresentedForm", "graph_of_closed_form", "graph_of_represented_form",
    "ConvergenceReport", "semigroup", "trotter_product", "resolvent_power_approx",
    "FormSequence", "ZeroTail", "ConstantTail", "GeometricTail", "limit_form", "build_tower",
    "AbsorptionProblem", "example_4_3_scenario", "verify_absorption",
]
__version__ = "0.1.0"
