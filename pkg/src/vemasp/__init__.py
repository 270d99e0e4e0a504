"""Lowest-order mixed virtual elements on polygons with nodal auxiliary space
preconditioners for H(div) problems."""

__version__ = "0.1.0"

from .complex_ops import (DofMap, curl_matrix, div_matrix, interpolate_facet, interpolate_nodal,
                          signed_incidence, transfer_matrix, verify_complex)
from .krylov import ConditionEstimate, DimensionExceedsCap, SolveResult, condition_number, gmres
from .mesh import (PolygonalMesh, aspect_ratio, cell_geometry, cut_with_line, generate_diamond,
                   generate_triangle_grid, read_mesh, validate, write_mesh)
from .precond import (AuxiliarySpaces, build_additive, build_darcy_block, build_diag_reference,
                      build_multiplicative, smoother_diag, smoother_stab)
from .problems import (AssembledSystem, assemble_darcy, assemble_nodal_h1, assemble_projection,
                       assemble_projection_system, assemble_rhs_projection, darcy_data,
                       data_library, get_field)

__all__ = [
    "AssembledSystem", "AuxiliarySpaces", "ConditionEstimate", "DimensionExceedsCap", "DofMap",
    "PolygonalMesh", "SolveResult", "aspect_ratio", "assemble_darcy", "assemble_nodal_h1",
    "assemble_projection", "assemble_projection_system", "assemble_rhs_projection",
    "build_additive", "build_darcy_block", "build_diag_reference", "build_multiplicative",
    "cell_geometry", "condition_number", "curl_matrix", "cut_with_line", "darcy_data",
    "data_library", "div_matrix", "generate_diamond", "generate_triangle_grid", "get_field",
    "gmres", "interpolate_facet", "interpolate_nodal", "read_mesh", "signed_incidence",
    "smoother_diag", "smoother_stab", "transfer_matrix", "validate", "verify_complex",
    "write_mesh",
]
