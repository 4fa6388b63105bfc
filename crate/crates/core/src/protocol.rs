//! Detection/displacement protocols.
//!
//! A run starts from a coherent state on the circle of radius `|alpha|`, clicks
//! `N` times at each of `k` equally spaced positions (moving the state between
//! positions with displacements) and finally moves the state back to the origin.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::fock::{
    apply_conditional, make_coherent, subtraction_power, DensityOperator, DisplacementFamily,
    OperatorKind, OperatorMatrix,
};

/// Default protocol cutoff `ceil(4 |alpha|^2 + 8 |alpha| + 20)`.
///
/// Displacements between positions reach `2 |alpha|`, and click-conditioned
/// states carry weight that such a shift moves out to about `4 |alpha|^2`
/// photons, so the coherent-state rule of [`crate::fock::coherent_cutoff`] is not enough.
/// The margin keeps amplitudes (not only populations) converged, which the
/// entanglement potential needs.
pub fn default_cutoff(alpha_abs: f64) -> usize {
    (4.0 * alpha_abs * alpha_abs + 8.0 * alpha_abs + 20.0).ceil() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    /// Initial coherent amplitude; its phase orients the circle of positions.
    pub alpha: C64,
    /// Number of positions on the circle.
    pub k: usize,
    /// Clicks required at every position.
    pub n_detections: usize,
    /// Offsets added to the target of each position (index `j` is position `j`;
    /// position 0 is the initial state and never gets an offset). Empty means zero.
    pub delta: Vec<C64>,
    pub cutoff: usize,
}

impl ProtocolSpec {
    pub fn new(alpha: C64, k: usize, n_detections: usize) -> Self {
        ProtocolSpec { alpha, k, n_detections, delta: Vec::new(), cutoff: default_cutoff(alpha.norm()) }
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_delta(mut self, delta: Vec<C64>) -> Self {
        self.delta = delta;
        self
    }

    /// Inward radial tweak `-|delta| e^{i (j phi_k + phi_alpha)}` at the given positions.
    pub fn with_radial_tweak(mut self, magnitude: f64, positions: &[usize]) -> Self {
        let mut delta = vec![C64::from(0.0); self.k];
        for &j in positions.iter().filter(|&&j| j < self.k) {
            delta[j] = -C64::from_polar(magnitude, j as f64 * self.step_angle() + self.alpha.arg());
        }
        self.delta = delta;
        self
    }

    pub fn step_angle(&self) -> f64 {
        TAU / self.k as f64
    }

    pub fn delta_at(&self, j: usize) -> C64 {
        self.delta.get(j).copied().unwrap_or_default()
    }

    /// Nominal centre of position `j`, `|alpha| e^{i (j phi_k + phi_alpha)}`, before any tweak.
    pub fn position(&self, j: usize) -> C64 {
        C64::from_polar(self.alpha.norm(), j as f64 * self.step_angle() + self.alpha.arg())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("k must be >= 2, got {}", self.k)));
        }
        if !self.alpha.re.is_finite() || !self.alpha.im.is_finite() {
            return Err(Error::InvalidArgument("alpha must be finite".into()));
        }
        if self.delta.len() > self.k {
            return Err(Error::InvalidArgument(format!(
                "{} delta offsets given for k = {}",
                self.delta.len(),
                self.k
            )));
        }
        if let Some(d) = self.delta.iter().find(|d| d.norm() > 0.0 && d.norm() >= self.alpha.norm()) {
            return Err(Error::InvalidArgument(format!("|delta| = {} must be below |alpha|", d.norm())));
        }
        if self.cutoff < 2 {
            return Err(Error::InvalidArgument(format!("cutoff must be >= 2, got {}", self.cutoff)));
        }
        Ok(())
    }
}

/// What happened at one position.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub position: usize,
    pub detection_probability: f64,
    pub mean_photons_after_detection: f64,
    /// Where the state is sent next (the origin after the last position).
    pub target: C64,
    pub displacement: C64,
    pub mean_photons_after_displacement: f64,
}

#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub spec: ProtocolSpec,
    /// Final state, displaced back to the origin.
    pub final_state: DensityOperator,
    pub step_probabilities: Vec<f64>,
    /// Product of the step probabilities.
    pub success_probability: f64,
    pub step_log: Vec<StepRecord>,
}

/// One extra click on a finished protocol state.
#[derive(Debug, Clone)]
pub struct CatResult {
    pub state: DensityOperator,
    pub extra_probability: f64,
    pub total_success: f64,
}

/// `P_N = 1 - e^{-x} sum_{n<N} x^n / n!`, the probability of at least `N`
/// clicks from a coherent state of intensity `x = |alpha|^2`.
pub fn p_n_closed_form(n_detections: usize, intensity: f64) -> f64 {
    let x = intensity;
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 0..n_detections {
        if n > 0 {
            term *= x / n as f64;
        }
        sum += term;
    }
    1.0 - (-x).exp() * sum
}

/// `P_N = 1 - Gamma(N, x) / Gamma(N)`.
pub fn p_n_incomplete_gamma(n_detections: usize, intensity: f64) -> f64 {
    if n_detections == 0 {
        return 1.0;
    }
    if intensity == 0.0 {
        return 0.0;
    }
    1.0 - gamma_ur(n_detections as f64, intensity)
}

/// `1 - Gamma(a, x)/Gamma(a)` evaluated as the regularized lower incomplete
/// gamma, which keeps full relative precision when the result is tiny.
/// `a = 0` follows the limit convention `Gamma(0, x)/Gamma(0) = 0`.
fn regularized_lower(a: usize, x: f64) -> f64 {
    if a == 0 {
        return 1.0;
    }
    if x == 0.0 {
        return 0.0;
    }
    gamma_lr(a as f64, x)
}

/// Mean photon number after `N` clicks on `|alpha>`:
/// `n' = (x (1 - Gamma(N-1,x)/Gamma(N-1)) - N (1 - Gamma(N,x)/Gamma(N))) / P_N`.
pub fn n_prime_closed_form(n_detections: usize, intensity: f64) -> Result<f64> {
    if n_detections == 0 {
        return Ok(intensity);
    }
    let p_n = regularized_lower(n_detections, intensity);
    if !(p_n > 0.0) {
        return Err(Error::ZeroProbability { probability: p_n });
    }
    let p_prev = regularized_lower(n_detections - 1, intensity);
    Ok((intensity * p_prev - n_detections as f64 * p_n) / p_n)
}

/// Conditions `rho` on `N` clicks. `N = 0` is the identity with probability one.
pub fn detect_n(rho: &DensityOperator, n_detections: usize) -> Result<(DensityOperator, f64)> {
    if n_detections == 0 {
        return Ok((rho.clone(), 1.0));
    }
    apply_conditional(&subtraction_power(n_detections, rho.cutoff()), rho)
}

/// Displacement that moves the centre of `rho` onto `target`.
///
/// The centre is `sqrt(<n>) e^{i arg <a>}`; when `|<a>|` is negligible the
/// phase falls back to `nominal_phase`.
pub fn recenter(rho: &DensityOperator, target: C64, nominal_phase: f64) -> C64 {
    let n = rho.mean_photon_number().max(0.0);
    let a = rho.mean_annihilation();
    let phase = if a.norm() < 1e-10 { nominal_phase } else { a.arg() };
    target - C64::from_polar(n.sqrt(), phase)
}

pub fn run_generalized_protocol(spec: &ProtocolSpec) -> Result<ProtocolResult> {
    spec.validate()?;
    let d = spec.cutoff;
    let disp = DisplacementFamily::new(d)?;
    let mut rho = make_coherent(spec.alpha, d)?.to_density();
    let mut step_probabilities = Vec::with_capacity(spec.k);
    let mut step_log = Vec::with_capacity(spec.k);
    let mut success = 1.0;

    for j in 0..spec.k {
        let (detected, p) = detect_n(&rho, spec.n_detections)?;
        success *= p;
        step_probabilities.push(p);
        let mean_after_detection = detected.mean_photon_number();

        let target = if j + 1 < spec.k { spec.position(j + 1) + spec.delta_at(j + 1) } else { C64::from(0.0) };
        let nominal = j as f64 * spec.step_angle() + spec.alpha.arg();
        let shift = recenter(&detected, target, nominal);
        let op = OperatorMatrix::new(disp.matrix(shift), OperatorKind::Displacement(shift))?;
        let (moved, _) = apply_conditional(&op, &detected)?;

        step_log.push(StepRecord {
            position: j,
            detection_probability: p,
            mean_photons_after_detection: mean_after_detection,
            target,
            displacement: shift,
            mean_photons_after_displacement: moved.mean_photon_number(),
        });
        rho = moved;
    }

    Ok(ProtocolResult {
        spec: spec.clone(),
        final_state: rho,
        step_probabilities,
        success_probability: success,
        step_log,
    })
}

/// Removes one more photon from the final state of a run.
pub fn extend_to_cat(result: &ProtocolResult) -> Result<CatResult> {
    let (state, p) = detect_n(&result.final_state, 1)?;
    Ok(CatResult { state, extra_probability: p, total_success: p * result.success_probability })
}
