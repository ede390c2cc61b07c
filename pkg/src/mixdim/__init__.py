"""Coupled 3D-1D elliptic problems solved as a PDE-constrained least-squares problem.

The bulk is discretised with P1 tetrahedra, each thin inclusion with its own
independent 1D meshes; the interface mismatch is minimised with a matrix-free
conjugate gradient on the reduced quadratic functional.
"""
from .mesh import SegmentGeom, TetMesh3D, build_box_mesh, build_segment_meshes, import_mesh
from .geometry import traverse
from .assembly import assemble_system, build_blocks
from .solver import ReducedOperator, cg_solve

__version__ = "0.1.0"

__all__ = [
    "SegmentGeom",
    "TetMesh3D",
    "build_box_mesh",
    "build_segment_meshes",
    "import_mesh",
    "traverse",
    "assemble_system",
    "build_blocks",
    "ReducedOperator",
    "cg_solve",
]
