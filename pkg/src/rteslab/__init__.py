"""Even-parity radiative transfer in slab geometry.

The solver discretizes the even part of the specific intensity with
discontinuous Legendre polynomials in the direction cosine and continuous
piecewise-linear finite elements in space, and solves the resulting
symmetric system by a source iteration preconditioned with a
diffusion-based subspace correction.
"""

from .angular import AngularGrid, AngularMatrices, angular_matrices, basis_eval, legendre_eval
from .spatial import (
    CoefficientReport,
    CrossSectionError,
    CrossSections,
    SpatialMesh,
    element_matrices,
    validate_cross_sections,
)
from .assembly import (
    AssemblyError,
    DiscreteSystem,
    ProblemData,
    assemble_dsa_matrix,
    assemble_load,
    assemble_system,
    build_prolongation,
    even_zeros,
    odd_zeros,
    prolong,
    scalar_flux,
)
from .solver import (
    IterationReport,
    SolverConfig,
    a_norm,
    dsa_correction,
    source_iteration,
    transport_solve,
)
from .analysis import (
    ManufacturedCase,
    SpectrumResult,
    StudyRow,
    convergence_study,
    error_propagation_spectrum,
    l2_error,
    manufactured_data,
    norm_decomposition,
    recover_odd,
)

__version__ = "0.1.0"
