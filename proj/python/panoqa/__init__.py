"""No-reference perceptual quality toolkit for omnidirectional images.

Thin Python surface over the C++ core: dataset synthesis, Haar sub-band
analysis, spherical projections, full-reference metrics with the correlation
protocol, and SAP-net training/evaluation.
"""

from ._panoqa import (  # noqa: F401
    __version__,
    boxplot_stats,
    build_dataset,
    compute_dmos,
    correlation_report,
    cpp_psnr,
    dwt2,
    energy_loss_report,
    evaluate_checkpoint,
    extract_patches,
    fibonacci_grid,
    fit_logistic,
    iwt2,
    jpeg_roundtrip,
    load_image,
    psnr,
    reproject,
    s_psnr,
    save_png,
    ssim,
    train_model,
)

__all__ = [
    "boxplot_stats",
    "build_dataset",
    "compute_dmos",
    "correlation_report",
    "cpp_psnr",
    "dwt2",
    "energy_loss_report",
    "evaluate_checkpoint",
    "extract_patches",
    "fibonacci_grid",
    "fit_logistic",
    "iwt2",
    "jpeg_roundtrip",
    "load_image",
    "psnr",
    "reproject",
    "s_psnr",
    "save_png",
    "ssim",
    "train_model",
]
