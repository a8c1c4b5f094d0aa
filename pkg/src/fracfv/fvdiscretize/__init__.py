"""Per-subdomain finite-volume flow discretizations (TPFA and MPFA)."""

from .bc import DIRICHLET, NEUMANN, BoundaryConditionSet, flow_bc, transport_bc
from .mpfa import assemble_mpfa, default_eta
from .operators import SubdomainDiscretization, reconstruct_fluxes
from .tpfa import assemble_tpfa, face_transmissibility, half_transmissibility

__all__ = [
    "DIRICHLET",
    "NEUMANN",
    "BoundaryConditionSet",
    "SubdomainDiscretization",
    "assemble_mpfa",
    "assemble_tpfa",
    "default_eta",
    "face_transmissibility",
    "flow_bc",
    "half_transmissibility",
    "reconstruct_fluxes",
    "transport_bc",
]
