"""Weak scene-label point cloud segmentation: python surface over the C++ core."""

from labeldense._core import (
    LdConfigError,
    LdDataError,
    derive_scene_labels,
    evaluate_predictions,
    gen_dataset,
    generate_scene,
    hungarian_match,
    kmeans,
    loss_cam,
    loss_dense,
    loss_us,
    naive_match,
    read_scene,
    train,
)

__all__ = [
    "LdConfigError",
    "LdDataError",
    "derive_scene_labels",
    "evaluate_predictions",
    "gen_dataset",
    "generate_scene",
    "hungarian_match",
    "kmeans",
    "loss_cam",
    "loss_dense",
    "loss_us",
    "naive_match",
    "read_scene",
    "train",
]
