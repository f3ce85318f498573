"""Topological masks for volumetric images via cubical persistent homology."""

from .cubical import FilteredCubicalComplex, boundary_matrix, build_complex
from .errors import TopomaskError
from .losses import LossParams, attention_mask_loss, focal_loss, total_loss
from .masks import MaskConfig, TopoMaskResult, generate_topo_masks, rasterize_cycles
from .metrics import (birth_time_cdf, ks_two_sample, mask_metrics, mean_surface_distance,
                      sliced_wasserstein_distance, topo_precision, topo_recall)
from .persistence import (PersistenceDiagram, RepresentativeCycle, betti_curve, compute_diagram, extract_cycles,
                          filter_by_persistence)
from .phantom import MRIParams, PhantomConfig, generate_phantom, sample_relaxation, simulate_mri, tissue_mask
from .volume import BinaryMask, PreprocessConfig, Volume3D, invert, preprocess

__version__ = "0.1.0"

__all__ = [
    "BinaryMask", "FilteredCubicalComplex", "LossParams", "MRIParams", "MaskConfig", "PersistenceDiagram",
    "PhantomConfig", "PreprocessConfig", "RepresentativeCycle", "TopoMaskResult", "TopomaskError", "Volume3D",
    "attention_mask_loss", "betti_curve", "birth_time_cdf", "boundary_matrix", "build_complex", "compute_diagram",
    "extract_cycles", "filter_by_persistence", "focal_loss", "generate_phantom", "generate_topo_masks", "invert",
    "ks_two_sample", "mask_metrics", "mean_surface_distance", "preprocess", "rasterize_cycles",
    "sample_relaxation", "simulate_mri", "sliced_wasserstein_distance", "tissue_mask", "topo_precision",
    "topo_recall", "total_loss",
]
