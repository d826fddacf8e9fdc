"""Unsupervised dense 3D shape correspondence via branched implicit functions."""

from ._core import (
    AccuracyCurve,
    ConfigError,
    CorrespondenceResult,
    DataError,
    IoError,
    NetworkConfig,
    ParameterStore,
    RocCurve,
    SyntheticShape,
    accuracy_curve,
    chamfer_distance,
    confidence,
    correspond_dense,
    cross_reconstruct,
    default_accuracy_thresholds,
    emd_distance,
    encode,
    generate_synthetic_family,
    init_parameters,
    interpolate_offsets,
    inverse_map,
    load_checkpoint,
    modified_iou,
    nonexistence_roc,
    occupancy,
    onehot_cosine_stats,
    part_embedding,
    reconstruct_surface,
    run_cli,
    save_checkpoint,
    segment,
    spatial_gradient,
)

__all__ = [
    "AccuracyCurve",
    "ConfigError",
    "CorrespondenceResult",
    "DataError",
    "IoError",
    "NetworkConfig",
    "ParameterStore",
    "RocCurve",
    "SyntheticShape",
    "accuracy_curve",
    "chamfer_distance",
    "confidence",
    "correspond_dense",
    "cross_reconstruct",
    "default_accuracy_thresholds",
    "emd_distance",
    "encode",
    "generate_synthetic_family",
    "init_parameters",
    "interpolate_offsets",
    "inverse_map",
    "load_checkpoint",
    "modified_iou",
    "nonexistence_roc",
    "occupancy",
    "onehot_cosine_stats",
    "part_embedding",
    "reconstruct_surface",
    "run_cli",
    "save_checkpoint",
    "segment",
    "spatial_gradient",
]
