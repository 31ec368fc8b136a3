"""Reconstruction of water-wave surfaces from rectified thermal stereo pairs.

The package bundles a synthetic wave-scene oracle, a classical census/SGM
matcher, domain-adaptation data synthesis, point-cloud metrology with wave
statistics, photometric disparity evaluation, and a triangulation error
budget, behind both a Python API and the `wavestereo` CLI.
"""

from . import errors
from .budget import budget_table, quantization_errors, world_errors
from .core import (DisparityMap, Image, Plane, PointCloud, StereoRig,
                   WaveSeries)
from .matching import MatchParams, ingest_external_disparity, match_pair
from .metrics import (MetricReport, evaluate_disparity, modified_hausdorff,
                      mse, psnr, ssim)
from .oracle import (CylinderSpec, GroundTruth, SceneSpec, default_rig,
                     disparity_range, dispersion_k, probe_series,
                     render_stereo_pair, surface_elevation)
from .pipeline import (WAVE_CASES, CaseResult, FlatReport, WorldFit,
                       case_spec, default_match_params, fit_world_frame,
                       run_flat_metrology, run_wave_case)
from .reconstruct import (RansacParams, WaveStats, align_series,
                          deviation_map, disparity_to_cloud,
                          extract_probe_series, linear_fit_bias, r_squared,
                          ransac_plane, world_frame_from_plane,
                          zero_crossing_stats)
from .synth import (AdaptManifest, TrainingTuple, depth_to_disparity,
                    export_dataset, fill_holes, forward_warp, occlusion_mask,
                    synthesize_tuple)

__version__ = "0.1.0"

__all__ = [
    "AdaptManifest", "CaseResult", "CylinderSpec", "DisparityMap",
    "FlatReport", "GroundTruth", "Image", "MatchParams", "MetricReport",
    "Plane", "PointCloud", "RansacParams", "SceneSpec", "StereoRig",
    "TrainingTuple", "WAVE_CASES", "WaveSeries", "WaveStats", "WorldFit",
    "align_series", "budget_table", "case_spec", "default_match_params",
    "default_rig", "depth_to_disparity", "deviation_map",
    "disparity_range", "disparity_to_cloud", "dispersion_k", "errors",
    "evaluate_disparity", "export_dataset", "extract_probe_series",
    "fill_holes", "fit_world_frame", "forward_warp",
    "ingest_external_disparity", "linear_fit_bias", "match_pair",
    "modified_hausdorff", "mse", "occlusion_mask", "probe_series", "psnr",
    "quantization_errors", "r_squared", "ransac_plane",
    "render_stereo_pair", "run_flat_metrology", "run_wave_case", "ssim",
    "surface_elevation", "synthesize_tuple", "world_errors",
    "world_frame_from_plane", "zero_crossing_stats",
]
