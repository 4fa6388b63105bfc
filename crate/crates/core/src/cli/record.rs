//! Serialized output records.

use serde::Serialize;

use super::{RunConfig, RunOutcome};
use crate::analysis::quadrature_stats;
use crate::fock::DensityOperator;
use crate::optimizer::FitResult;

/// Shortest round-trip decimal form, independent of locale.
pub fn format_f64(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecRecord {
    pub alpha_abs: f64,
    pub alpha_phase: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub k: usize,
    pub n_detections: usize,
    pub cutoff: usize,
    /// `[re, im]` per position.
    pub delta: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecordOut {
    pub position: usize,
    pub detection_probability: f64,
    pub mean_photons_after_detection: f64,
    pub target_re: f64,
    pub target_im: f64,
    pub displacement_re: f64,
    pub displacement_im: f64,
    pub mean_photons_after_displacement: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureRecord {
    pub phase: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub product: f64,
    pub squeezing_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRecord {
    pub dim: usize,
    /// Row-major `[i, j, re, im]`.
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl DensityRecord {
    pub fn new(rho: &DensityOperator) -> Self {
        let d = rho.cutoff();
        let m = rho.matrix();
        let entries = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| (i, j, m[(i, j)].re, m[(i, j)].im)).collect();
        DensityRecord { dim: d, entries }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CatRecord {
    pub extra_probability: f64,
    pub total_success: f64,
    pub mean_photon_number: f64,
    pub quadratures: QuadratureRecord,
    pub density_matrix: DensityRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitRecord {
    pub target_kind: &'static str,
    pub z_re: f64,
    pub z_im: f64,
    pub beta_re: Option<f64>,
    pub beta_im: Option<f64>,
    pub fidelity: f64,
    pub n_used: Option<usize>,
    pub converged: bool,
    pub matching_residual: Option<f64>,
}

impl From<&FitResult> for FitRecord {
    fn from(f: &FitResult) -> Self {
        FitRecord {
            target_kind: f.target_kind.as_str(),
            z_re: f.z.re,
            z_im: f.z.im,
            beta_re: f.beta.map(|b| b.re),
            beta_im: f.beta.map(|b| b.im),
            fidelity: f.fidelity,
            n_used: f.n_used,
            converged: f.converged,
            matching_residual: f.matching_residual,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRecord {
    pub cutoff: usize,
    pub max_relative_shift: f64,
    pub worst_scalar: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: &'static str,
    pub config_hash: String,
    pub spec: SpecRecord,
    pub step_log: Vec<StepRecordOut>,
    pub step_probabilities: Vec<f64>,
    pub success_probability: f64,
    pub mean_photon_number: f64,
    pub quadratures: QuadratureRecord,
    pub cat: Option<CatRecord>,
    pub fit: Option<FitRecord>,
    pub convergence: Option<ConvergenceRecord>,
    pub density_matrix: DensityRecord,
}

fn quadratures(rho: &DensityOperator, phase: f64) -> QuadratureRecord {
    let q = quadrature_stats(rho, phase);
    QuadratureRecord { phase, var_x: q.var_x, var_p: q.var_p, product: q.product, squeezing_db: q.squeezing_db }
}

impl RunRecord {
    pub fn new(cfg: &RunConfig, outcome: &RunOutcome, convergence: Option<ConvergenceRecord>) -> Self {
        let r = &outcome.result;
        let phase = r.spec.alpha.arg();
        RunRecord {
            command: cfg.command.as_str(),
            config_hash: cfg.hash(),
            spec: SpecRecord {
                alpha_abs: r.spec.alpha.norm(),
                alpha_phase: phase,
                alpha_re: r.spec.alpha.re,
                alpha_im: r.spec.alpha.im,
                k: r.spec.k,
                n_detections: r.spec.n_detections,
                cutoff: r.spec.cutoff,
                delta: (0..r.spec.k).map(|j| r.spec.delta_at(j)).map(|c| [c.re, c.im]).collect(),
            },
            step_log: r
                .step_log
                .iter()
                .map(|s| StepRecordOut {
                    position: s.position,
                    detection_probability: s.detection_probability,
                    mean_photons_after_detection: s.mean_photons_after_detection,
                    target_re: s.target.re,
                    target_im: s.target.im,
                    displacement_re: s.displacement.re,
                    displacement_im: s.displacement.im,
                    mean_photons_after_displacement: s.mean_photons_after_displacement,
                })
                .collect(),
            step_probabilities: r.step_probabilities.clone(),
            success_probability: r.success_probability,
            mean_photon_number: r.final_state.mean_photon_number(),
            quadratures: quadratures(&r.final_state, phase),
            cat: outcome.cat.as_ref().map(|c| CatRecord {
                extra_probability: c.extra_probability,
                total_success: c.total_success,
                mean_photon_number: c.state.mean_photon_number(),
                quadratures: quadratures(&c.state, phase),
                density_matrix: DensityRecord::new(&c.state),
            }),
            fit: outcome.fit.as_ref().map(FitRecord::from),
            convergence,
            density_matrix: DensityRecord::new(&r.final_state),
        }
    }
}
