"""Two-subdomain heat equation with Dirichlet-Neumann, Robin-Robin and inertial Robin decoupling."""

from .analysis import ErrorReport, convergence_rates, error_report, h1_seminorm_error, l2_error
from .manufactured import ManufacturedProblem
from .mesh import Side, SubdomainMesh, build_subdomain_mesh, interface_edge_list
from .schemes import SchemeConfig, SimulationRun, run_simulation, verify_inertial_identity

__all__ = [
    "ErrorReport", "ManufacturedProblem", "SchemeConfig", "Side", "SimulationRun",
    "SubdomainMesh", "build_subdomain_mesh", "convergence_rates", "error_report",
    "h1_seminorm_error", "interface_edge_list", "l2_error", "run_simulation",
    "verify_inertial_identity",
]

__version__ = "0.1.0"
