"""Mesh generation, refinement, and serialization."""

from .core import (
    Mesh,
    MeshError,
    Projector,
    interior_facet_check,
    refine,
    shape_regularity,
    signed_volumes,
)
from .domains import DomainSpec, generate, mesh_size
from .io import MeshFormatError, read_mesh, write_mesh

__all__ = [
    "DomainSpec",
    "Mesh",
    "MeshError",
    "MeshFormatError",
    "Projector",
    "generate",
    "interior_facet_check",
    "mesh_size",
    "read_mesh",
    "refine",
    "shape_regularity",
    "signed_volumes",
    "write_mesh",
]
