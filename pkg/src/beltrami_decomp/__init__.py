"""Beltrami-descriptor decomposition of deformation sequences.

Sequences of planar maps are encoded as complex Beltrami coefficient
matrices, split into low-rank (periodic) and sparse (abnormal) parts by
complex robust PCA, and mapped back through the linear Beltrami solver.
"""

from .beltrami import compute_beltrami, distortion_profile, max_dilation, wirtinger_derivatives
from .descriptor import (
    BeltramiDescriptor,
    DisplacementDescriptor,
    build_descriptor,
    build_displacement_descriptor,
    descriptor_distance,
    reconstruct_maps,
)
from .errors import BeltramiError
from .formats import read_matrix, read_pgm, write_matrix, write_pgm
from .imaging import warp_image
from .lbs import assemble_lbs, gamma_coefficients, solve_lbs
from .mesh import TriangulatedDomain, build_domain, check_orientation, face_jacobian
from .pipeline import PipelineConfig, PipelineReport, run_pipeline
from .rpca import (
    AdmmParams,
    DecompositionResult,
    alpha_floor,
    beta_schedule,
    complex_shrink,
    complex_svt,
    decompose,
    numerical_rank,
    spectral_norm,
)
from .synth import DESK, LARGE, SequenceSpec, generate_sequence, inject_perturbation

__version__ = "0.1.0"

__all__ = [
    "AdmmParams", "BeltramiDescriptor", "BeltramiError", "DESK", "DecompositionResult",
    "DisplacementDescriptor", "LARGE", "PipelineConfig", "PipelineReport", "SequenceSpec",
    "TriangulatedDomain", "alpha_floor", "assemble_lbs", "beta_schedule", "build_descriptor",
    "build_displacement_descriptor", "build_domain", "check_orientation", "complex_shrink",
    "complex_svt", "compute_beltrami", "decompose", "descriptor_distance", "distortion_profile",
    "face_jacobian", "gamma_coefficients", "generate_sequence", "inject_perturbation",
    "max_dilation", "numerical_rank", "read_matrix", "read_pgm", "reconstruct_maps",
    "run_pipeline", "solve_lbs", "spectral_norm", "warp_image", "wirtinger_derivatives",
    "write_matrix", "write_pgm",
]
