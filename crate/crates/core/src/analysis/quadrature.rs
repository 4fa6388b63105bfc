use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::fock::{ladder_matrix, DensityOperator, Ladder};

/// Second moments of the rotated quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureStats {
    pub var_x: f64,
    pub var_p: f64,
    /// `Delta x Delta p`.
    pub product: f64,
    /// `10 log10(2 Delta p^2)`; negative means squeezed.
    pub squeezing_db: f64,
    pub phase: f64,
}

/// `x = (a e^{-i phi} + a^dagger e^{i phi}) / sqrt 2` and
/// `p = (a e^{-i phi} - a^dagger e^{i phi}) / (i sqrt 2)`.
pub fn quadrature_operators(d: usize, phase: f64) -> (DMatrix<C64>, DMatrix<C64>) {
    let a = ladder_matrix(Ladder::Annihilation, d) * C64::from_polar(1.0, -phase);
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &ad) * C64::from(s);
    let p = (&a - &ad) * C64::new(0.0, -s);
    (x, p)
}

fn variance(rho: &DensityOperator, op: &DMatrix<C64>) -> f64 {
    let mean = rho.expectation(op).re;
    let sq = rho.expectation(&(op * op)).re;
    sq - mean * mean
}

pub fn quadrature_stats(rho: &DensityOperator, phase: f64) -> QuadratureStats {
    let (x, p) = quadrature_operators(rho.cutoff(), phase);
    let var_x = variance(rho, &x);
    let var_p = variance(rho, &p);
    QuadratureStats {
        var_x,
        var_p,
        product: (var_x * var_p).sqrt(),
        squeezing_db: 10.0 * (2.0 * var_p).log10(),
        phase,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_coherent, make_fock, op_generalized_squeeze};

    #[test]
    fn vacuum_is_minimum_uncertainty() {
        let q = quadrature_stats(&make_fock(0, 20).unwrap().to_density(), 0.0);
        assert!((q.var_x - 0.5).abs() < 1e-14);
        assert!((q.var_p - 0.5).abs() < 1e-14);
        assert!(q.squeezing_db.abs() < 1e-12);
        assert!((q.product - 0.5).abs() < 1e-14);
    }

    #[test]
    fn coherent_keeps_vacuum_variances() {
        for &(alpha, phase) in &[(C64::new(2.0, 0.0), 0.0), (C64::from_polar(1.5, 2.0), 0.7), (C64::new(-3.0, 1.0), -1.2)] {
            let rho = make_coherent(alpha, 70).unwrap().to_density();
            let q = quadrature_stats(&rho, phase);
            assert!((q.var_p - 0.5).abs() < 1e-10, "{alpha}: {}", q.var_p);
            assert!((q.product - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn squeezed_vacuum_variances() {
        let d = 120;
        let vac = make_fock(0, d).unwrap();
        for &r in &[0.1, 0.5, 1.0] {
            let s = op_generalized_squeeze(2, C64::from(r), d).unwrap();
            let psi = crate::fock::StateVector::from_amplitudes(s.apply(&vac).unwrap()).unwrap();
            let q = quadrature_stats(&psi.to_density(), 0.0);
            assert!((q.var_x - (-2.0 * r).exp() / 2.0).abs() < 1e-6, "r = {r}: {}", q.var_x);
            assert!((q.var_p - (2.0 * r).exp() / 2.0).abs() < 1e-6);
            assert!((q.product - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn squeezing_db_definition() {
        let rho = make_coherent(C64::new(0.3, 0.2), 30).unwrap().to_density();
        let q = quadrature_stats(&rho, 0.4);
        assert!((q.squeezing_db - 10.0 * (2.0 * q.var_p).log10()).abs() < 1e-12);
    }
}
