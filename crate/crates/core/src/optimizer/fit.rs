//! Fitting generalized squeezed vacua and squeezed cat families to a state.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use statrs::function::gamma::ln_gamma;

use super::search::{bisect, coordinate_ascent, scan_then_golden, AscentResult, Coordinate};
use crate::analysis::fidelity;
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, SqueezeFamily, StateVector};
use crate::protocol::{CatResult, ProtocolResult};

/// Largest `|z|` tried when bracketing the photon-number matching condition.
pub const Z_MAX: f64 = 6.0;
/// Photon-number matching tolerance.
pub const MATCH_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    GenSqueezed,
    Cat,
}

impl TargetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::GenSqueezed => "gen-squeezed",
            TargetKind::Cat => "cat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// `|z|` fixed by photon-number matching; only `arg z` is searched.
    MatchPhotonNumber,
    /// `|z|` and `arg z` are both searched, starting from the matched value.
    FullSearch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub phase_mode: PhaseMode,
    /// Cutoff of the target states; `None` uses the cutoff of `rho`.
    pub target_cutoff: Option<usize>,
    /// Parameter tolerance of the searches.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { phase_mode: PhaseMode::MatchPhotonNumber, target_cutoff: None, tolerance: 1e-6, max_sweeps: 200 }
    }
}

/// Starting point of a fit. Missing entries are chosen automatically.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitSeed {
    pub z: Option<C64>,
    pub beta: Option<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub z: C64,
    pub beta: Option<C64>,
    pub fidelity: f64,
    /// Clicks per position of the fitted run, when known.
    pub n_used: Option<usize>,
    pub target_kind: TargetKind,
    pub converged: bool,
    /// `|<n>_target - <n>_rho|` for photon-number matched gen-squeezed fits.
    pub matching_residual: Option<f64>,
}

/// Normalized `sum_j e^{i j phi_k} |beta e^{i j phi_k}>`, `phi_k = 2 pi / k`.
///
/// Only `n = k - 1 (mod k)` survives, with amplitudes proportional to
/// `beta^n / sqrt(n!)`; they are scaled by `beta^{-(k-1)}` so `beta -> 0`
/// tends to `|k - 1>`.
pub fn cat_superposition(k: usize, beta: C64, d: usize) -> Result<StateVector> {
    if k < 1 || d < k {
        return Err(Error::InvalidArgument(format!("cat superposition needs 1 <= k <= d, got k = {k}, d = {d}")));
    }
    let r = beta.norm();
    let base = k - 1;
    let log_base = 0.5 * ln_gamma(base as f64 + 1.0);
    let mut v = DVector::<C64>::zeros(d);
    for n in (base..d).step_by(k) {
        let m = (n - base) as f64;
        let log_mag = if m == 0.0 { 0.0 } else { m * r.ln() } + log_base - 0.5 * ln_gamma(n as f64 + 1.0);
        v[n] = C64::from_polar(log_mag.exp(), m * beta.arg());
    }
    StateVector::from_amplitudes(v)
}

/// Target states `S^(k)(z) |0>` and `S^(k)(z) |cat_k(beta)>` at one cutoff.
#[derive(Debug, Clone)]
pub struct TargetFamily {
    squeeze: SqueezeFamily,
}

impl TargetFamily {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("target order must be >= 2, got {k}")));
        }
        Ok(TargetFamily { squeeze: SqueezeFamily::new(k, d)? })
    }

    pub fn order(&self) -> usize {
        self.squeeze.order()
    }

    pub fn cutoff(&self) -> usize {
        self.squeeze.cutoff()
    }

    pub fn state(&self, z: C64, beta: Option<C64>) -> Result<StateVector> {
        let d = self.cutoff();
        let seed = match beta {
            None => {
                let mut v = DVector::<C64>::zeros(d);
                v[0] = C64::from(1.0);
                v
            }
            Some(b) => cat_superposition(self.order(), b, d)?.amplitudes().clone(),
        };
        StateVector::from_amplitudes(self.squeeze.apply(z, &seed))
    }

    /// `<n>` of `S^(k)(r)|0>`; independent of `arg z`.
    pub fn vacuum_photon_number(&self, r: f64) -> Result<f64> {
        Ok(self.state(C64::from(r), None)?.mean_photon_number())
    }

    /// `|z|` at which `S^(k)(z)|0>` carries `n_target` photons on average.
    pub fn solve_z_magnitude(&self, n_target: f64) -> Result<f64> {
        if !(n_target >= 0.0) {
            return Err(Error::InvalidArgument(format!("target photon number must be >= 0, got {n_target}")));
        }
        if n_target == 0.0 {
            return Ok(0.0);
        }
        let residual = |r: f64| self.vacuum_photon_number(r).map_or(f64::NAN, |n| n - n_target);
        let mut hi = 0.05;
        while residual(hi) < 0.0 {
            if hi >= Z_MAX {
                return Err(Error::BracketFailure { lo: 0.0, hi });
            }
            hi = (hi * 2.0).min(Z_MAX);
        }
        bisect(residual, 0.0, hi, MATCH_TOLERANCE * 0.1)
    }
}

/// Free-function form of [`TargetFamily::state`] that builds the family on the fly.
pub fn target_state(k: usize, z: C64, beta: Option<C64>, d: usize) -> Result<StateVector> {
    TargetFamily::new(k, d)?.state(z, beta)
}

/// Free-function form of [`TargetFamily::solve_z_magnitude`].
pub fn solve_z_magnitude(k: usize, n_target: f64, d: usize) -> Result<f64> {
    TargetFamily::new(k, d)?.solve_z_magnitude(n_target)
}

fn overlap(rho: &DensityOperator, family: &TargetFamily, z: C64, beta: Option<C64>) -> f64 {
    family
        .state(z, beta)
        .and_then(|t| t.resized(rho.cutoff()))
        .and_then(|t| fidelity(rho, &t))
        .unwrap_or(f64::NEG_INFINITY)
}

/// Fits `S^(k)(z)|0>` (or, with `cat`, `S^(k)(z)|cat_k(beta)>`) to `rho`.
pub fn fit_target_state(
    rho: &DensityOperator,
    k: usize,
    cat: bool,
    seed: FitSeed,
    options: &FitOptions,
) -> Result<FitResult> {
    let family = TargetFamily::new(k, options.target_cutoff.unwrap_or(rho.cutoff()))?;
    if cat {
        fit_cat(rho, &family, seed, options)
    } else {
        fit_squeezed(rho, &family, options)
    }
}

fn fit_squeezed(rho: &DensityOperator, family: &TargetFamily, options: &FitOptions) -> Result<FitResult> {
    let n_rho = rho.mean_photon_number();
    let r = family.solve_z_magnitude(n_rho)?;
    let tol = options.tolerance;
    let (theta, f) = scan_then_golden(|t| overlap(rho, family, C64::from_polar(r, t), None), -PI, PI, tol);
    let residual = (family.vacuum_photon_number(r)? - n_rho).abs();
    let matched = FitResult {
        z: C64::from_polar(r, theta),
        beta: None,
        fidelity: f.clamp(0.0, 1.0),
        n_used: None,
        target_kind: TargetKind::GenSqueezed,
        converged: true,
        matching_residual: Some(residual),
    };
    if options.phase_mode == PhaseMode::MatchPhotonNumber {
        return Ok(matched);
    }
    let coords = [Coordinate::bounded(0.0, 2.0 * r + 0.5), Coordinate::periodic(-PI, TAU)];
    let res = coordinate_ascent(
        |x| overlap(rho, family, C64::from_polar(x[0], x[1]), None),
        &[r, theta],
        &coords,
        tol,
        options.max_sweeps,
    );
    if res.value <= f {
        return Ok(matched);
    }
    Ok(FitResult {
        z: C64::from_polar(res.x[0], res.x[1]),
        fidelity: res.value.clamp(0.0, 1.0),
        converged: res.converged,
        matching_residual: None,
        ..matched
    })
}

fn fit_cat(rho: &DensityOperator, family: &TargetFamily, seed: FitSeed, options: &FitOptions) -> Result<FitResult> {
    let k = family.order();
    let z0 = match seed.z {
        Some(z) => z,
        None => fit_squeezed(rho, family, &FitOptions { phase_mode: PhaseMode::MatchPhotonNumber, ..*options })?.z,
    };
    let tol = options.tolerance;
    let period = TAU / k as f64;
    let (b_abs, b_arg) = match seed.beta {
        Some(b) => (b.norm(), b.arg()),
        None => {
            let b_abs = (rho.mean_photon_number().max(0.0) / k as f64).sqrt();
            let (arg, _) = scan_then_golden(
                |t| overlap(rho, family, z0, Some(C64::from_polar(b_abs, t))),
                -period / 2.0,
                period / 2.0,
                tol,
            );
            (b_abs, arg)
        }
    };
    let coords = [
        Coordinate::bounded(0.0, 2.0 * z0.norm() + 0.5),
        Coordinate::periodic(-PI, TAU),
        Coordinate::bounded(0.0, 2.0 * b_abs + 1.0),
        Coordinate::periodic(-period / 2.0, period),
    ];
    let objective = |x: &[f64]| overlap(rho, family, C64::from_polar(x[0], x[1]), Some(C64::from_polar(x[2], x[3])));
    let mut starts = vec![vec![z0.norm(), z0.arg(), b_abs, b_arg]];
    if seed.beta.is_none() {
        starts.extend(grid_starts(&objective, &coords));
    }
    let mut best: Option<AscentResult> = None;
    for x0 in &starts {
        let res = coordinate_ascent(objective, x0, &coords, tol, options.max_sweeps);
        if best.as_ref().is_none_or(|b| res.value > b.value) {
            best = Some(res);
        }
    }
    let res = best.expect("at least one start");
    Ok(FitResult {
        z: C64::from_polar(res.x[0], res.x[1]),
        beta: Some(C64::from_polar(res.x[2], res.x[3])),
        fidelity: res.value.clamp(0.0, 1.0),
        n_used: None,
        target_kind: TargetKind::Cat,
        converged: res.converged,
        matching_residual: None,
    })
}

/// Best points of a coarse grid over the cat parameters, one with `|beta|`
/// in the lower half of its range and one in the upper half. The cat fit has
/// separate maxima near the Fock limit and at finite `|beta|`.
fn grid_starts<F: Fn(&[f64]) -> f64>(f: &F, coords: &[Coordinate; 4]) -> Vec<Vec<f64>> {
    const COUNTS: [usize; 4] = [6, 8, 8, 6];
    let axis = |i: usize| -> Vec<f64> {
        let c = coords[i];
        let n = COUNTS[i];
        let h = if c.periodic { (c.hi - c.lo) / n as f64 } else { (c.hi - c.lo) / (n - 1) as f64 };
        (0..n).map(|j| c.lo + h * j as f64).collect()
    };
    let axes: Vec<Vec<f64>> = (0..4).map(axis).collect();
    let mut best: [Option<(f64, Vec<f64>)>; 2] = [None, None];
    for (ib, &b) in axes[2].iter().enumerate() {
        let half = usize::from(2 * ib >= COUNTS[2]);
        for &zr in &axes[0] {
            for &zt in &axes[1] {
                for &bt in &axes[3] {
                    let x = vec![zr, zt, b, bt];
                    let v = f(&x);
                    if best[half].as_ref().is_none_or(|(bv, _)| v > *bv) {
                        best[half] = Some((v, x));
                    }
                }
            }
        }
    }
    best.into_iter().flatten().map(|(_, x)| x).collect()
}

/// Fits the final state of a run to `S^(k)(z)|0>`.
pub fn fit_protocol(result: &ProtocolResult, options: &FitOptions) -> Result<FitResult> {
    let mut fit = fit_target_state(&result.final_state, result.spec.k, false, FitSeed::default(), options)?;
    fit.n_used = Some(result.spec.n_detections);
    Ok(fit)
}

/// Fits a cat-extended state, seeding `z` from the fit of its parent run.
pub fn fit_cat_extension(parent: &ProtocolResult, cat: &CatResult, options: &FitOptions) -> Result<FitResult> {
    let parent_fit = fit_protocol(parent, options)?;
    let seed = FitSeed { z: Some(parent_fit.z), beta: None };
    let mut fit = fit_target_state(&cat.state, parent.spec.k, true, seed, options)?;
    fit.n_used = Some(parent.spec.n_detections);
    Ok(fit)
}
