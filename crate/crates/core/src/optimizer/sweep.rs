//! Parameter sweeps over `(|alpha|, N)` grids.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::fit::{fit_cat_extension, fit_protocol, FitOptions};
use super::search::scan_then_golden;
use crate::analysis::{entanglement_potential, quadrature_stats};
use crate::error::{Error, Result};
use crate::fock::DensityOperator;
use crate::protocol::{extend_to_cat, run_generalized_protocol, ProtocolSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub alpha_phase: f64,
    /// Overrides the per-`|alpha|` default cutoff.
    pub cutoff: Option<usize>,
    /// Evaluate the cat-extended state instead of the run output.
    pub cat: bool,
    pub ep: bool,
    pub fidelity: bool,
    /// Beam-splitter embedding cutoff; `None` uses the cutoff of the state.
    pub embed_cutoff: Option<usize>,
    pub fit: FitOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            alpha_phase: 0.0,
            cutoff: None,
            cat: false,
            ep: false,
            fidelity: false,
            embed_cutoff: None,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMetrics {
    pub var_p: f64,
    pub var_x: f64,
    pub product: f64,
    pub squeezing_db: f64,
    pub success_prob: f64,
    pub ep: Option<f64>,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub alpha_abs: f64,
    pub alpha_phase: f64,
    pub n: usize,
    pub k: usize,
    pub outcome: std::result::Result<SweepMetrics, Error>,
}

/// Runs the protocol at one grid point and evaluates the selected metrics.
pub fn evaluate_cell(alpha_abs: f64, n: usize, k: usize, options: &SweepOptions) -> Result<SweepMetrics> {
    let mut spec = ProtocolSpec::new(C64::from_polar(alpha_abs, options.alpha_phase), k, n);
    if let Some(d) = options.cutoff {
        spec = spec.with_cutoff(d);
    }
    let run = run_generalized_protocol(&spec)?;
    let (state, success, fit): (DensityOperator, f64, Option<f64>) = if options.cat {
        let cat = extend_to_cat(&run)?;
        let fit = options.fidelity.then(|| fit_cat_extension(&run, &cat, &options.fit)).transpose()?;
        (cat.state, cat.total_success, fit.map(|f| f.fidelity))
    } else {
        let fit = options.fidelity.then(|| fit_protocol(&run, &options.fit)).transpose()?;
        (run.final_state, run.success_probability, fit.map(|f| f.fidelity))
    };
    let q = quadrature_stats(&state, options.alpha_phase);
    let ep = options.ep.then(|| entanglement_potential(&state, options.embed_cutoff.unwrap_or(state.cutoff()))).transpose()?;
    Ok(SweepMetrics {
        var_p: q.var_p,
        var_x: q.var_x,
        product: q.product,
        squeezing_db: q.squeezing_db,
        success_prob: success,
        ep: ep.map(|e| e.value),
        fidelity: fit,
    })
}

/// One row per `(|alpha|, N)`, `|alpha|`-major. Cells are evaluated in
/// parallel; failures are kept in their row.
pub fn sweep_grid(alpha_grid: &[f64], n_grid: &[usize], k: usize, options: &SweepOptions) -> Result<Vec<SweepRow>> {
    if alpha_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be nonempty".into()));
    }
    let cells: Vec<(f64, usize)> = alpha_grid.iter().flat_map(|&a| n_grid.iter().map(move |&n| (a, n))).collect();
    Ok(cells
        .par_iter()
        .map(|&(alpha_abs, n)| SweepRow {
            alpha_abs,
            alpha_phase: options.alpha_phase,
            n,
            k,
            outcome: evaluate_cell(alpha_abs, n, k, options),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Generalized,
    Cat,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Generalized => "generalized",
            Variant::Cat => "cat",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpRow {
    pub k: usize,
    pub variant: Variant,
    pub n: usize,
    pub outcome: std::result::Result<SweepMetrics, Error>,
}

/// Entanglement potential (and fidelity) against `N` for every `k` and both variants.
pub fn ep_scan(alpha_abs: f64, ks: &[usize], n_grid: &[usize], options: &SweepOptions) -> Result<Vec<EpRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        for variant in [Variant::Generalized, Variant::Cat] {
            let opts = SweepOptions { cat: variant == Variant::Cat, ep: true, ..*options };
            for row in sweep_grid(&[alpha_abs], n_grid, k, &opts)? {
                rows.push(EpRow { k, variant, n: row.n, outcome: row.outcome });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TweakOptions {
    /// Positions that get the inward radial offset.
    pub positions: Vec<usize>,
    pub max_magnitude: f64,
    pub cutoff: Option<usize>,
    pub tolerance: f64,
    pub fit: FitOptions,
}

impl Default for TweakOptions {
    fn default() -> Self {
        TweakOptions { positions: vec![1, 3], max_magnitude: 0.3, cutoff: None, tolerance: 1e-4, fit: FitOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweakResult {
    pub magnitude: f64,
    pub fidelity: f64,
    pub untweaked_fidelity: f64,
}

/// Cat-fit fidelity of a run with an inward radial tweak of size `magnitude`.
pub fn tweaked_cat_fidelity(alpha: C64, k: usize, n: usize, magnitude: f64, options: &TweakOptions) -> Result<f64> {
    let mut spec = ProtocolSpec::new(alpha, k, n).with_radial_tweak(magnitude, &options.positions);
    if let Some(d) = options.cutoff {
        spec = spec.with_cutoff(d);
    }
    let run = run_generalized_protocol(&spec)?;
    let cat = extend_to_cat(&run)?;
    Ok(fit_cat_extension(&run, &cat, &options.fit)?.fidelity)
}

/// Searches the tweak magnitude in `[0, max_magnitude]` that maximizes the cat fit.
pub fn tweak_search(alpha: C64, k: usize, n: usize, options: &TweakOptions) -> Result<TweakResult> {
    let untweaked = tweaked_cat_fidelity(alpha, k, n, 0.0, options)?;
    let clamp = |m: f64| m.clamp(0.0, options.max_magnitude);
    let (magnitude, fidelity) = scan_then_golden(
        |m| tweaked_cat_fidelity(alpha, k, n, clamp(m), options).unwrap_or(f64::NEG_INFINITY),
        0.0,
        options.max_magnitude,
        options.tolerance,
    );
    let magnitude = clamp(magnitude);
    if fidelity <= untweaked {
        return Ok(TweakResult { magnitude: 0.0, fidelity: untweaked, untweaked_fidelity: untweaked });
    }
    Ok(TweakResult { magnitude, fidelity, untweaked_fidelity: untweaked })
}
