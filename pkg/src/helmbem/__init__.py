"""2-D Helmholtz boundary elements for the exterior Neumann problem.

Assembles the regularized combined-field systems B = i eta (I/2 - K) + R H
and B' = i eta (I/2 - K') + H R with continuous piecewise-linear Galerkin
boundary elements, and measures their mass-preconditioned extreme singular
values, condition numbers, and GMRES iteration counts over wavenumber
sweeps on six benchmark obstacles.
"""

from .assembly import (
    AssemblyOrders,
    GalerkinMatrix,
    MassFactor,
    RegularizerChoice,
    assemble_adlp,
    assemble_B,
    assemble_B_impedance,
    assemble_Bprime,
    assemble_Bprime_impedance,
    assemble_dlp,
    assemble_hyp,
    assemble_mass,
    assemble_planewave_rhs,
    assemble_slp,
    assemble_system,
    compose_B,
    compose_B_impedance,
    compose_Bprime,
    compose_Bprime_impedance,
    load_matrix,
    save_matrix,
)
from .geometry import (
    BoundaryMesh,
    GeometryError,
    MeshSizeError,
    ParametricCurve,
    build_mesh,
    make_geometry,
    point_and_normal,
)
from .kernels import (
    KernelValue,
    phi_helmholtz,
    phi_helmholtz_dnx,
    phi_helmholtz_dny,
    phi_laplace,
    phi_modified,
)
from .linalg import (
    ExtremeSingularValues,
    GmresResult,
    LUFactors,
    SlopeFit,
    extreme_singular_values,
    fit_loglog_slope,
    gmres,
    lu_factor,
    lu_solve,
    singular_values_dense,
)
from .oracle import CircleSpectrum, circle_spectrum, verify_identities
from .quadrature import (
    QuadratureRule,
    gauss_legendre,
    log_gauss,
    panel_pair_integrate,
    panel_relation,
)

__version__ = "0.1.0"
