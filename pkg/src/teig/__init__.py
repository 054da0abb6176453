"""Mixed finite element solver for Helmholtz transmission eigenvalues.

Computes the smallest real transmission eigenvalues of anisotropic media
(unit index of refraction) on 2D and 3D domains: a linearized three-field
mixed formulation discretized with P1 x P0^d x P1 elements, deflation of
the structural infinite eigenvalues, and a shift-invert Krylov solve of
the reduced sparse pencil.
"""

from .assembly import (
    AssemblyError,
    BlockPencil,
    DirichletPair,
    DofMap,
    Table1,
    assemble_dirichlet_laplacian,
    assemble_full_gep,
    assemble_reduced_direct,
    assemble_table1,
    build_dofmap,
    element_geometry,
    export_matrix_market,
)
from .deflation import (
    DeflationError,
    ReducedPencil,
    SpectrumReport,
    congruence_error,
    congruence_matrix,
    reduce_direct,
    schur_reduce,
    verify_spectrum_relation,
)
from .eigensolver import (
    EigenPair,
    EigenSolution,
    ShiftInvertConfig,
    default_shift,
    dense_oracle,
    eqslantless,
    factorize,
    first_dirichlet_eigenvalue,
    shift_invert_eigs,
    shift_invert_pencil,
)
from .material import (
    MaterialError,
    MaterialModel,
    direct_weights,
    make_material,
    material_preset,
    parse_material,
)
from .mesh import (
    DomainSpec,
    Mesh,
    MeshError,
    MeshFormatError,
    generate,
    mesh_size,
    read_mesh,
    refine,
    write_mesh,
)

__version__ = "0.1.0"
