//! Single-mode truncated Fock space: states, density operators and the
//! operators the protocol is built from.
//!
//! Everything here is a pure function of its inputs; operator families that
//! cache a diagonalization are immutable once built.

mod expm;
mod two_mode;

pub use expm::{
    inner_dim, padded_dim, padded_dim_with_limit, DisplacementFamily, GeneratorExp, SqueezeFamily,
    MAX_PADDED_DIM,
};
pub use two_mode::{beam_splitter, TwoModeOperator};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Renormalization guard for [`make_coherent`].
pub const COHERENT_TAIL_LIMIT: f64 = 1e-6;
/// Branches less likely than this are treated as impossible.
pub const MIN_PROBABILITY: f64 = 1e-14;
/// Matrix entries below this magnitude are zeroed before a decomposition;
/// nalgebra's eigensolver returns NaN on some matrices with entries near 1e-100.
pub const FLUSH_BELOW: f64 = 1e-80;

/// Copy of `m` with entries smaller than [`FLUSH_BELOW`] set to zero.
pub fn flushed(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.map(|c| if c.norm() < FLUSH_BELOW { C64::from(0.0) } else { c })
}

/// Pure single-mode state `sum_n c_n |n>` with `n < d`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
}

impl StateVector {
    /// Normalizes `amplitudes`; fails on an empty or zero vector.
    pub fn from_amplitudes(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("state vector needs cutoff >= 1".into()));
        }
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("state vector has zero or non-finite norm".into()));
        }
        Ok(StateVector { amplitudes: amplitudes / C64::from(norm) })
    }

    pub(crate) fn from_normalized(amplitudes: DVector<C64>) -> Self {
        StateVector { amplitudes }
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amplitudes[n]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `sum_{n >= from} |c_n|^2`.
    pub fn tail_mass(&self, from: usize) -> f64 {
        self.amplitudes.iter().skip(from).map(|c| c.norm_sqr()).sum()
    }

    /// Mass in the top five Fock levels is below `1e-8`.
    pub fn is_converged(&self) -> bool {
        self.tail_mass(self.cutoff().saturating_sub(5)) < 1e-8
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.cutoff(), other.cutoff())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
    }

    /// Zero-pads or truncates (then renormalizes) to cutoff `d`.
    pub fn resized(&self, d: usize) -> Result<StateVector> {
        let mut v = DVector::<C64>::zeros(d);
        let m = d.min(self.cutoff());
        v.rows_mut(0, m).copy_from(&self.amplitudes.rows(0, m));
        StateVector::from_amplitudes(v)
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator { matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }
}

/// Mixed single-mode state: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates the density-operator invariants.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidDensity("matrix must be square and non-empty".into()));
        }
        let herm = (&matrix - matrix.adjoint()).camax();
        if herm > 1e-12 {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
        }
        let rho = DensityOperator { matrix };
        let min = rho.eigenvalues().min();
        if min < -1e-10 {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<C64>) -> Self {
        DensityOperator { matrix }
    }

    pub fn vacuum(d: usize) -> Result<Self> {
        Ok(make_fock(0, d)?.to_density())
    }

    pub fn cutoff(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr[rho O]`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        // Tr[rho O] = sum_ij rho_ij O_ji
        self.matrix.iter().zip(op.transpose().iter()).map(|(r, o)| r * o).sum()
    }

    pub fn population(&self, n: usize) -> f64 {
        self.matrix[(n, n)].re
    }

    pub fn tail_mass(&self, from: usize) -> f64 {
        (from..self.cutoff()).map(|n| self.population(n)).sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.cutoff()).map(|n| n as f64 * self.population(n)).sum()
    }

    /// `<a> = sum_n sqrt(n) rho_{n, n-1}`.
    pub fn mean_annihilation(&self) -> C64 {
        (1..self.cutoff()).map(|n| self.matrix[(n, n - 1)] * (n as f64).sqrt()).sum()
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        flushed(&self.matrix).symmetric_eigenvalues()
    }

    /// Largest eigenvalue and its eigenvector.
    pub fn dominant_eigenpair(&self) -> (f64, StateVector) {
        let eig = SymmetricEigen::new(flushed(&self.matrix));
        let (imax, lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
        let v = eig.eigenvectors.column(imax).into_owned();
        (lmax, StateVector::from_normalized(v))
    }

    /// `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Truncates (renormalizing) or zero-pads to cutoff `d`.
    pub fn resized(&self, d: usize) -> DensityOperator {
        let mut m = DMatrix::<C64>::zeros(d, d);
        let k = d.min(self.cutoff());
        m.view_mut((0, 0), (k, k)).copy_from(&self.matrix.view((0, 0), (k, k)));
        let tr = m.trace().re;
        if tr > 0.0 && k < self.cutoff() {
            m /= C64::from(tr);
        }
        DensityOperator { matrix: m }
    }
}

/// The single-mode ladder family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Annihilation,
    Creation,
    Number,
    /// `B = sum_n |n-1><n|`, the ideal back action of a click detector.
    Subtraction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Ladder(Ladder),
    /// `B^N`.
    SubtractionPower(usize),
    Displacement(C64),
    GenSqueeze { order: usize, z: C64 },
    Custom(String),
}

/// A `d x d` mode operator, not necessarily unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    matrix: DMatrix<C64>,
    kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn new(matrix: DMatrix<C64>, kind: OperatorKind) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        Ok(OperatorMatrix { matrix, kind })
    }

    pub fn identity(d: usize) -> Self {
        OperatorMatrix { matrix: DMatrix::identity(d, d), kind: OperatorKind::Custom("identity".into()) }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn cutoff(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, psi: &StateVector) -> Result<DVector<C64>> {
        check_dim(self.cutoff(), psi.cutoff())?;
        Ok(&self.matrix * psi.amplitudes())
    }

    /// Largest elementwise deviation of `U^dagger U` from the identity on the leading `m x m` block.
    pub fn unitarity_defect(&self, m: usize) -> f64 {
        let u = self.matrix.columns(0, m);
        let prod = u.adjoint() * u;
        (prod - DMatrix::<C64>::identity(m, m)).camax()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn ladder_matrix(kind: Ladder, d: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(d, d);
    for n in 1..d {
        match kind {
            Ladder::Annihilation => m[(n - 1, n)] = C64::from((n as f64).sqrt()),
            Ladder::Creation => m[(n, n - 1)] = C64::from((n as f64).sqrt()),
            Ladder::Subtraction => m[(n - 1, n)] = C64::from(1.0),
            Ladder::Number => m[(n, n)] = C64::from(n as f64),
        }
    }
    m
}

/// `B^N`: ones on the `N`-th superdiagonal.
pub fn subtraction_power(n: usize, d: usize) -> OperatorMatrix {
    let mut m = DMatrix::<C64>::zeros(d, d);
    for j in n..d {
        m[(j - n, j)] = C64::from(1.0);
    }
    OperatorMatrix { matrix: m, kind: OperatorKind::SubtractionPower(n) }
}

/// `ln n!` for `n = 0..d`.
fn ln_factorials(d: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(d);
    let mut acc = 0.0;
    for n in 0..d {
        if n > 1 {
            acc += (n as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// Coherent amplitudes `e^{-|alpha|^2/2} alpha^n / sqrt(n!)` for `n < d`, unnormalized.
pub(crate) fn coherent_amplitudes(alpha: C64, d: usize) -> DVector<C64> {
    let r = alpha.norm();
    let theta = alpha.arg();
    if r == 0.0 {
        let mut v = DVector::zeros(d);
        v[0] = C64::from(1.0);
        return v;
    }
    let lnf = ln_factorials(d);
    let lnr = r.ln();
    DVector::from_fn(d, |n, _| {
        let lnmag = -0.5 * r * r + n as f64 * lnr - 0.5 * lnf[n];
        C64::from_polar(lnmag.exp(), n as f64 * theta)
    })
}

/// Cutoff `ceil(|alpha|^2 + 8 |alpha| + 20)` that holds `|alpha>` itself.
pub fn coherent_cutoff(alpha_abs: f64) -> usize {
    (alpha_abs * alpha_abs + 8.0 * alpha_abs + 20.0).ceil() as usize
}

/// Coherent state `|alpha>` truncated to `d` levels and renormalized.
pub fn make_coherent(alpha: C64, d: usize) -> Result<StateVector> {
    if d == 0 {
        return Err(Error::InvalidArgument("cutoff must be >= 1".into()));
    }
    let v = coherent_amplitudes(alpha, d);
    let kept: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let tail = (1.0 - kept).max(0.0);
    if tail > COHERENT_TAIL_LIMIT {
        return Err(Error::CutoffTooSmall { cutoff: d, tail_mass: tail, limit: COHERENT_TAIL_LIMIT });
    }
    StateVector::from_amplitudes(v)
}

/// Fock state `|n>` in a `d`-level space.
pub fn make_fock(n: usize, d: usize) -> Result<StateVector> {
    if n >= d {
        return Err(Error::IndexOutOfRange { index: n, cutoff: d });
    }
    let mut v = DVector::<C64>::zeros(d);
    v[n] = C64::from(1.0);
    Ok(StateVector::from_normalized(v))
}

pub fn op_ladder(kind: Ladder, d: usize) -> Result<OperatorMatrix> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("ladder operators need cutoff >= 2, got {d}")));
    }
    Ok(OperatorMatrix { matrix: ladder_matrix(kind, d), kind: OperatorKind::Ladder(kind) })
}

pub fn op_displacement(alpha: C64, d: usize) -> Result<OperatorMatrix> {
    let fam = DisplacementFamily::new(d)?;
    Ok(OperatorMatrix { matrix: fam.matrix(alpha), kind: OperatorKind::Displacement(alpha) })
}

/// `S^(k)(z)`. `k = 0` gives the phase `e^{-i Im z}`, `k = 1` gives `D(-z/2)`.
pub fn op_generalized_squeeze(order: usize, z: C64, d: usize) -> Result<OperatorMatrix> {
    let fam = SqueezeFamily::new(order, d)?;
    Ok(OperatorMatrix { matrix: fam.matrix(z), kind: OperatorKind::GenSqueeze { order, z } })
}

/// Back action of `op` on `rho`, renormalized: `(M rho M^dagger / p, p)` with `p = Tr[M rho M^dagger]`.
pub fn apply_conditional(op: &OperatorMatrix, rho: &DensityOperator) -> Result<(DensityOperator, f64)> {
    check_dim(rho.cutoff(), op.cutoff())?;
    let m = op.matrix();
    let out = m * rho.matrix() * m.adjoint();
    let p = out.trace().re;
    if !(p >= MIN_PROBABILITY) {
        return Err(Error::ZeroProbability { probability: p });
    }
    let herm = (&out + out.adjoint()).map(|x| x * (0.5 / p));
    Ok((DensityOperator::from_matrix_unchecked(herm), p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::from(re)
    }

    #[test]
    fn coherent_vacuum_is_exact() {
        let psi = make_coherent(c(0.0), 10).unwrap();
        assert_eq!(psi.amplitude(0), c(1.0));
        assert!(psi.amplitudes().iter().skip(1).all(|a| *a == c(0.0)));
    }

    #[test]
    fn coherent_leading_amplitude() {
        let psi = make_coherent(c(1.0), 30).unwrap();
        assert!((psi.amplitude(0).re - (-0.5f64).exp()).abs() < 1e-14);
        assert!((psi.amplitude(0).re - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn coherent_norm_before_renormalization() {
        // Poisson tail oracle: the mass beyond n = 79 for mean 9 is far below 1e-12
        let v = coherent_amplitudes(c(3.0), 80);
        let kept: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        assert!((kept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_cutoff_too_small() {
        let err = make_coherent(c(3.0), 10).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { cutoff: 10, .. }));
    }

    #[test]
    fn fock_basis_vectors() {
        let v = make_fock(0, 5).unwrap();
        assert_eq!(v.amplitudes().as_slice(), &[c(1.0), c(0.0), c(0.0), c(0.0), c(0.0)]);
        let v = make_fock(4, 5).unwrap();
        assert_eq!(v.amplitude(4), c(1.0));
        assert_eq!(make_fock(5, 5).unwrap_err(), Error::IndexOutOfRange { index: 5, cutoff: 5 });
    }

    #[test]
    fn subtraction_moves_down_one_level() {
        let b = op_ladder(Ladder::Subtraction, 6).unwrap();
        let out = b.apply(&make_fock(3, 6).unwrap()).unwrap();
        assert_eq!(out, make_fock(2, 6).unwrap().amplitudes().clone());
        let out = b.apply(&make_fock(0, 6).unwrap()).unwrap();
        assert!(out.iter().all(|a| *a == c(0.0)));
    }

    #[test]
    fn annihilation_is_subtraction_times_sqrt_number() {
        let d = 25;
        let b = op_ladder(Ladder::Subtraction, d).unwrap();
        let n = op_ladder(Ladder::Number, d).unwrap();
        let sqrt_n = n.matrix().map(|x| C64::from(x.re.sqrt()));
        let a = op_ladder(Ladder::Annihilation, d).unwrap();
        assert!((b.matrix() * sqrt_n - a.matrix()).camax() < 1e-14);
    }

    #[test]
    fn subtraction_products() {
        let d = 8;
        let b = op_ladder(Ladder::Subtraction, d).unwrap().matrix().clone();
        let mut expect = DMatrix::<C64>::identity(d, d);
        expect[(0, 0)] = c(0.0);
        assert_eq!(b.adjoint() * &b, expect);
        let mut expect = DMatrix::<C64>::identity(d, d);
        expect[(d - 1, d - 1)] = c(0.0);
        assert_eq!(&b * b.adjoint(), expect);
    }

    #[test]
    fn subtraction_power_matches_repeated_product() {
        let d = 9;
        let b = op_ladder(Ladder::Subtraction, d).unwrap().matrix().clone();
        let b3 = &b * &b * &b;
        assert_eq!(subtraction_power(3, d).matrix(), &b3);
        assert_eq!(subtraction_power(0, d).matrix(), &DMatrix::<C64>::identity(d, d));
    }

    #[test]
    fn conditional_identity_and_vacuum() {
        let rho = make_coherent(C64::new(0.4, -0.2), 20).unwrap().to_density();
        let (out, p) = apply_conditional(&OperatorMatrix::identity(20), &rho).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
        assert!((out.matrix() - rho.matrix()).camax() < 1e-14);

        let vac = DensityOperator::vacuum(10).unwrap();
        let b = op_ladder(Ladder::Subtraction, 10).unwrap();
        assert!(matches!(apply_conditional(&b, &vac), Err(Error::ZeroProbability { .. })));
    }

    #[test]
    fn conditional_subtraction_on_coherent() {
        let rho = make_coherent(c(1.0), 40).unwrap().to_density();
        let b = op_ladder(Ladder::Subtraction, 40).unwrap();
        let (_, p) = apply_conditional(&b, &rho).unwrap();
        // P(n >= 1) for Poisson(1)
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((p - 0.63212).abs() < 1e-5);
    }

    #[test]
    fn conditional_dimension_mismatch() {
        let rho = DensityOperator::vacuum(5).unwrap();
        let err = apply_conditional(&OperatorMatrix::identity(6), &rho).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 5, found: 6 });
    }

    #[test]
    fn density_validation() {
        let mut m = DMatrix::<C64>::zeros(3, 3);
        m[(0, 0)] = c(0.5);
        m[(1, 1)] = c(0.5);
        assert!(DensityOperator::from_matrix(m.clone()).is_ok());
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(DensityOperator::from_matrix(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.0, -0.1);
        assert!(DensityOperator::from_matrix(m.clone()).is_ok());
        m[(2, 2)] = c(0.1);
        assert!(DensityOperator::from_matrix(m).is_err());
        let mut neg = DMatrix::<C64>::zeros(2, 2);
        neg[(0, 0)] = c(1.2);
        neg[(1, 1)] = c(-0.2);
        assert!(DensityOperator::from_matrix(neg).is_err());
    }

    #[test]
    fn displacement_of_vacuum_is_coherent() {
        let d = 80;
        let fam = DisplacementFamily::new(d).unwrap();
        let vac = make_fock(0, d).unwrap();
        for &alpha in &[c(0.5), C64::new(1.0, -2.0), C64::from_polar(3.0, 0.7), c(-3.0)] {
            let out = &fam.matrix(alpha) * vac.amplitudes();
            let coh = make_coherent(alpha, d).unwrap();
            let overlap = coh.amplitudes().dotc(&out).norm();
            assert!(overlap > 1.0 - 1e-8, "alpha = {alpha}: overlap {overlap}");
        }
    }

    #[test]
    fn displacement_inverse_pair() {
        let d = 60;
        let alpha = C64::new(1.3, 0.9);
        let p = op_displacement(alpha, d).unwrap();
        let m = op_displacement(-alpha, d).unwrap();
        let prod = m.matrix() * p.matrix();
        let k = inner_dim(d);
        let block = prod.view((0, 0), (k, k)).into_owned();
        assert!((block - DMatrix::<C64>::identity(k, k)).camax() < 1e-8);
    }

    #[test]
    fn squeeze_order_zero_and_one() {
        let d = 30;
        let z = C64::new(0.3, 0.8);
        let s0 = op_generalized_squeeze(0, z, d).unwrap();
        assert!((s0.matrix() - DMatrix::<C64>::identity(d, d) * C64::from_polar(1.0, -0.8)).camax() < 1e-15);
        assert!(s0.unitarity_defect(d) < 1e-14);

        let beta = C64::new(0.7, -0.4);
        let s1 = op_generalized_squeeze(1, beta * 2.0, d).unwrap();
        let disp = op_displacement(-beta, d).unwrap();
        assert!((s1.matrix() - disp.matrix()).camax() < 1e-8);
    }

    #[test]
    fn generalized_squeeze_unitary_on_inner_block() {
        let d = 60;
        // the truncated generator grows like |z| n^{k/2}, so higher orders need smaller |z|
        for (k, z) in [(2, C64::from_polar(0.3, 0.3)), (3, C64::from_polar(0.01, 2.0)), (4, C64::from_polar(0.001, -1.0))] {
            let s = op_generalized_squeeze(k, z, d).unwrap();
            let defect = s.unitarity_defect(inner_dim(d));
            assert!(defect < 1e-8, "k = {k}: defect {defect}");
        }
    }

    #[test]
    fn squeeze_needs_room() {
        assert!(op_generalized_squeeze(4, c(0.1), 4).is_err());
        assert!(op_generalized_squeeze(4, c(0.1), 5).is_ok());
    }
}
