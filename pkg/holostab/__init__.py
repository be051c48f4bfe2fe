"""Topological stability of weighted simplicial complexes via spectral gradient flows"""

__version__ = "0.1.0"

__all__ = (
    "SimplicialComplex",
    "build_complex",
    "betti_numbers",
    "load_complex",
    "save_complex",
    "WeightProfile",
    "perturb",
    "LaplacianBundle",
    "assemble",
    "smallest_nonzero_eig",
    "SolverConfig",
    "FlowConfig",
    "FunctionalParams",
    "BenchSpec",
    "StabilityResult",
    "HolostabError",
    "NotConverged",
    "run_stability",
    "alpha_phase",
    "generate",
    "run_benchmark",
    "parse_tntp",
    "lift_to_zones",
    "stability_report",
)

from ._exceptions import HolostabError, NotConverged
from ._records.results import StabilityResult
from ._validators.configs import BenchSpec, FlowConfig, FunctionalParams, SolverConfig
from .complex import SimplicialComplex, betti_numbers, build_complex, load_complex, save_complex
from .weights import WeightProfile, perturb
from .laplacians import LaplacianBundle, assemble
from .spectral import smallest_nonzero_eig
from .flow import alpha_phase, run_stability
from .bench import generate, run_benchmark
from .transport import lift_to_zones, parse_tntp, stability_report
