//! Target-state fitting and parameter sweeps.

mod fit;
mod search;
mod sweep;

pub use fit::{
    cat_superposition, fit_cat_extension, fit_protocol, fit_target_state, solve_z_magnitude, target_state,
    FitOptions, FitResult, FitSeed, PhaseMode, TargetFamily, TargetKind, MATCH_TOLERANCE, Z_MAX,
};
pub use search::{bisect, coordinate_ascent, golden_max, scan_then_golden, AscentResult, Coordinate, SCAN_POINTS};
pub use sweep::{
    ep_scan, evaluate_cell, sweep_grid, tweak_search, tweaked_cat_fidelity, EpRow, SweepMetrics, SweepOptions,
    SweepRow, TweakOptions, TweakResult, Variant,
};
