//! Entanglement potential: log-negativity of the state after mixing it with
//! vacuum on a 50:50 beam splitter.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{beam_splitter, flushed, DensityOperator, TwoModeOperator};

/// Largest tail mass of `rho` beyond the embedding cutoff.
pub const EMBED_TAIL_LIMIT: f64 = 1e-6;
/// States with a dominant eigenvalue this close to one take the Schmidt route.
pub const PURITY_THRESHOLD: f64 = 1.0 - 1e-12;
/// Iteration cap for the SVD and eigensolvers.
const MAX_ITERATIONS: usize = 10_000;


#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EPResult {
    /// `log2 || sigma^{T_A} ||_1`, in bits.
    pub value: f64,
    pub cutoff_used: usize,
    pub method: EpMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpMethod {
    /// Schmidt coefficients of the pure two-mode output.
    Schmidt,
    /// Eigenvalues of the dense partial transpose.
    PartialTranspose,
}

fn embed(rho: &DensityOperator, d_embed: usize) -> Result<DensityOperator> {
    if d_embed < 2 {
        return Err(Error::InvalidArgument(format!("embedding cutoff must be >= 2, got {d_embed}")));
    }
    let tail = rho.tail_mass(d_embed);
    if tail > EMBED_TAIL_LIMIT {
        return Err(Error::CutoffTooSmall { cutoff: d_embed, tail_mass: tail, limit: EMBED_TAIL_LIMIT });
    }
    Ok(rho.resized(d_embed))
}

/// Entanglement potential with the route picked by purity.
pub fn entanglement_potential(rho: &DensityOperator, d_embed: usize) -> Result<EPResult> {
    let rho = embed(rho, d_embed)?;
    let bs = beam_splitter(d_embed);
    let (top, psi) = rho.dominant_eigenpair();
    if top > PURITY_THRESHOLD {
        Ok(EPResult { value: schmidt_route(&bs, psi.amplitudes().as_slice())?, cutoff_used: d_embed, method: EpMethod::Schmidt })
    } else {
        Ok(EPResult { value: partial_transpose_route(&bs, &rho)?, cutoff_used: d_embed, method: EpMethod::PartialTranspose })
    }
}

/// Always forms the dense `d^2 x d^2` partial transpose, whatever the purity.
pub fn entanglement_potential_dense(rho: &DensityOperator, d_embed: usize) -> Result<EPResult> {
    let rho = embed(rho, d_embed)?;
    let bs = beam_splitter(d_embed);
    Ok(EPResult { value: partial_transpose_route(&bs, &rho)?, cutoff_used: d_embed, method: EpMethod::PartialTranspose })
}


/// Pure input: `||sigma^{T_A}||_1 = (sum_i s_i)^2` over the Schmidt coefficients.
fn schmidt_route(bs: &TwoModeOperator, psi: &[C64]) -> Result<f64> {
    let d = bs.cutoff();
    let mut coeffs = DMatrix::<C64>::zeros(d, d);
    for (n, &c) in psi.iter().enumerate() {
        if c == C64::from(0.0) {
            continue;
        }
        let col = bs.column_with_vacuum(n);
        for a in 0..d {
            for b in 0..d {
                coeffs[(a, b)] += c * col[bs.index(a, b)];
            }
        }
    }
    let svd = SVD::try_new(flushed(&coeffs), false, false, f64::EPSILON, MAX_ITERATIONS)
        .ok_or(Error::ConvergenceFailure { what: "Schmidt decomposition", iterations: MAX_ITERATIONS })?;
    let s: f64 = svd.singular_values.iter().sum();
    Ok(2.0 * s.log2())
}

fn partial_transpose_route(bs: &TwoModeOperator, rho: &DensityOperator) -> Result<f64> {
    let d = bs.cutoff();
    let w = bs.vacuum_embedding();
    let sigma = &w * rho.matrix() * w.adjoint();
    // transpose the second mode: <n m|s^T|n' m'> = <n m'|s|n' m>
    let pt = DMatrix::from_fn(d * d, d * d, |r, c| {
        let (n, m) = (r / d, r % d);
        let (np, mp) = (c / d, c % d);
        sigma[(n * d + mp, np * d + m)]
    });
    let eig = SymmetricEigen::try_new(flushed(&pt), f64::EPSILON, MAX_ITERATIONS)
        .ok_or(Error::ConvergenceFailure { what: "partial-transpose spectrum", iterations: MAX_ITERATIONS })?;
    let trace_norm: f64 = eig.eigenvalues.iter().map(|l| l.abs()).sum();
    Ok(trace_norm.log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_coherent, make_fock};

    #[test]
    fn coherent_states_have_zero_potential() {
        for &alpha in &[C64::from(0.0), C64::new(1.0, 1.0), C64::from_polar(3.0, 2.2)] {
            let rho = make_coherent(alpha, 60).unwrap().to_density();
            let ep = entanglement_potential(&rho, 60).unwrap();
            assert_eq!(ep.method, EpMethod::Schmidt);
            assert!(ep.value.abs() < 1e-6, "{alpha}: {}", ep.value);
        }
    }

    #[test]
    fn tiny_amplitudes_keep_decompositions_finite() {
        for alpha in [C64::new(5.917e-4, 8.981e-3), C64::new(-0.16062, -0.04926)] {
            let rho = make_coherent(alpha, 60).unwrap().to_density();
            let (top, psi) = rho.dominant_eigenpair();
            assert!((top - 1.0).abs() < 1e-12);
            assert!(psi.amplitudes().iter().all(|c| c.re.is_finite() && c.im.is_finite()));
            assert!(entanglement_potential(&rho, 60).unwrap().value.abs() < 1e-10);
        }
    }

    #[test]
    fn single_photon_gives_one_bit() {
        let rho = make_fock(1, 10).unwrap().to_density();
        let ep = entanglement_potential(&rho, 10).unwrap();
        assert!((ep.value - 1.0).abs() < 1e-10);
        let dense = entanglement_potential_dense(&rho, 10).unwrap();
        assert!((dense.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn routes_agree_on_pure_states() {
        let v = nalgebra::DVector::from_fn(12, |n, _| C64::new(1.0 / (1 + n * n) as f64, 0.3 * (n % 3) as f64 / (1 + n * n) as f64));
        let psi = crate::fock::StateVector::from_amplitudes(v).unwrap();
        let rho = psi.to_density();
        let a = entanglement_potential(&rho, 14).unwrap();
        let b = entanglement_potential_dense(&rho, 14).unwrap();
        assert_eq!(a.method, EpMethod::Schmidt);
        assert!((a.value - b.value).abs() < 1e-10, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn vacuum_photon_mixture() {
        // output 1/2 |00><00| + 1/2 |psi-><psi-|; its partial transpose has
        // spectrum {1/4, 1/4, 1/4 +- sqrt(1/8)}
        let mut m = DMatrix::<C64>::zeros(6, 6);
        m[(0, 0)] = C64::from(0.5);
        m[(1, 1)] = C64::from(0.5);
        let rho = DensityOperator::from_matrix(m).unwrap();
        let ep = entanglement_potential(&rho, 6).unwrap();
        assert_eq!(ep.method, EpMethod::PartialTranspose);
        let expect = (0.5 + std::f64::consts::FRAC_1_SQRT_2).log2();
        assert!((ep.value - expect).abs() < 1e-12, "{}", ep.value);
    }

    #[test]
    fn classical_mixture_is_separable() {
        let d = 24;
        let a = make_coherent(C64::from(1.0), d).unwrap().to_density();
        let b = make_coherent(C64::from(-1.0), d).unwrap().to_density();
        let m = (a.matrix() + b.matrix()) * C64::from(0.5);
        let rho = DensityOperator::from_matrix(m).unwrap();
        let ep = entanglement_potential(&rho, d).unwrap();
        assert_eq!(ep.method, EpMethod::PartialTranspose);
        assert!(ep.value.abs() < 1e-8, "{}", ep.value);
    }

    #[test]
    fn embedding_tail_check() {
        let rho = make_coherent(C64::from(3.0), 60).unwrap().to_density();
        assert!(matches!(entanglement_potential(&rho, 10), Err(Error::CutoffTooSmall { cutoff: 10, .. })));
    }
}
