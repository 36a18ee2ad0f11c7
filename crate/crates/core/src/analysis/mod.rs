//! Recovery of calibrated field maps and device metrics from image data.

pub mod contours;
pub mod fit;
pub mod metrics;
pub mod periodogram;
pub mod stitch;
pub mod trap;

pub use contours::{extract_contours, extract_contours_with, ContourOptions, IsoBContourSet, Parity, Ridge};
pub use fit::{
    fit_cube, fit_pixel, omega_to_field, Baseline, CubeFit, EnvelopeMode, FitConfig, FitDiagnostics, PixelFit,
    RabiFitResult,
};
pub use metrics::{amplitude_sensitivity, dynamic_range_db, insertion_loss_db, InsertionLoss};
pub use stitch::{crop, nominal_offsets, stitch, StitchOptions, StitchResult, Tile};
pub use trap::{characterize_trap, GradientArm, Region, Side, TrapReport};
