"""Form-finding, structural checks and scaffold planning for n-bar tensegrities."""
from .model import (
    Configuration,
    MaterialSpec,
    TopologyMap,
    load_material,
    load_topology,
    prism_topology,
    random_topology,
    validate,
)
from .formfind import EquilibriumResult, FormFindOptions, StrutPose, canonicalize, find_equilibrium
from .scaffold import ScaffoldOptions, ScaffoldPlan, build_plan

__version__ = "0.1.0"
