"""Dual-stage plume surrogate (TM + SRM) with the HRTM baseline.

Arrays are numpy float32 in (time, z, y, x) or (z, y, x) order.
"""

from ._core import (
    PlumeError,
    Surrogate,
    average_pool,
    benchmark,
    conservation_mass,
    default_config,
    generate,
    iou,
    log_denormalize,
    log_normalize,
    mse,
    report,
    rollout_eval,
    sample_conditions,
    sensors,
    simulate,
    ssim3d,
    train,
    trilinear_upsample,
)

__all__ = [
    "PlumeError",
    "Surrogate",
    "average_pool",
    "benchmark",
    "conservation_mass",
    "default_config",
    "generate",
    "iou",
    "log_denormalize",
    "log_normalize",
    "mse",
    "report",
    "rollout_eval",
    "sample_conditions",
    "sensors",
    "simulate",
    "ssim3d",
    "train",
    "trilinear_upsample",
]
