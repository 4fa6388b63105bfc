//! State diagnostics.

mod entanglement;
mod husimi;
mod quadrature;

pub use entanglement::{
    entanglement_potential, entanglement_potential_dense, EPResult, EpMethod,
    EMBED_TAIL_LIMIT, PURITY_THRESHOLD,
};
pub use husimi::{husimi_q, q_value, Axis, GridSpec, QGrid};
pub use quadrature::{quadrature_operators, quadrature_stats, QuadratureStats};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, StateVector};
use crate::protocol::{run_generalized_protocol, ProtocolSpec};

/// `<psi|rho|psi>`.
pub fn fidelity(rho: &DensityOperator, target: &StateVector) -> Result<f64> {
    if rho.cutoff() != target.cutoff() {
        return Err(Error::DimensionMismatch { expected: rho.cutoff(), found: target.cutoff() });
    }
    let v = target.amplitudes();
    Ok(v.dotc(&(rho.matrix() * v)).re)
}

/// One `(|alpha|, N)` cell of the two-position squeezing surfaces.
#[derive(Debug, Clone)]
pub struct SurfaceCell {
    pub alpha_abs: f64,
    pub n: usize,
    pub outcome: std::result::Result<SurfacePoint, Error>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub stats: QuadratureStats,
    pub success_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitePoint {
    pub alpha_abs: f64,
    pub n_star: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct WhiteCurve {
    pub points: Vec<WhitePoint>,
    /// α-major, `N = 1..=n_max` within each α.
    pub surface: Vec<SurfaceCell>,
}

impl WhiteCurve {
    pub fn n_star(&self, alpha_abs: f64) -> Result<usize> {
        self.points
            .iter()
            .find(|p| p.alpha_abs == alpha_abs)
            .and_then(|p| p.n_star)
            .ok_or(Error::NoSqueezedMinimum { alpha_abs })
    }

    pub fn cells(&self, alpha_abs: f64) -> impl Iterator<Item = &SurfaceCell> {
        self.surface.iter().filter(move |c| c.alpha_abs == alpha_abs)
    }
}

/// Picks the optimal click number from one α-row of `(Delta p^2, Delta x Delta p)`
/// values indexed by `N - 1` (`None` for impossible cells).
///
/// Candidates are local minima of the uncertainty product with a squeezed
/// `Delta p^2 < 1/2`; `N = 1` counts only if its product is below that of
/// `N = 2`, and `N = n_max` never counts. Among candidates not beyond the
/// `N` that minimizes `Delta p^2` the largest is returned.
pub fn select_optimal_n(row: &[Option<(f64, f64)>]) -> Option<usize> {
    let prod = |i: usize| row.get(i).copied().flatten().map_or(f64::INFINITY, |(_, p)| p);
    let n_min_var = row
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|(v, _)| (i, v)))
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, best)) if best <= v => acc,
            _ => Some((i, v)),
        })?
        .0;
    (0..row.len().saturating_sub(1))
        .filter(|&i| i <= n_min_var)
        .filter(|&i| {
            let Some((var_p, p)) = row[i] else { return false };
            let left_ok = i == 0 || p <= prod(i - 1);
            let right_ok = if i == 0 { p < prod(1) } else { p <= prod(i + 1) };
            var_p < 0.5 && left_ok && right_ok
        })
        .max()
        .map(|i| i + 1)
}

fn surface_point(alpha_abs: f64, phase: f64, n: usize) -> Result<SurfacePoint> {
    let spec = ProtocolSpec::new(C64::from_polar(alpha_abs, phase), 2, n);
    let res = run_generalized_protocol(&spec)?;
    Ok(SurfacePoint { stats: quadrature_stats(&res.final_state, phase), success_probability: res.success_probability })
}

/// Two-position squeezing surfaces over `alpha_grid x (1..=n_max)` and the
/// optimal-`N` curve derived from them.
pub fn optimal_n_curve(alpha_grid: &[f64], n_max: usize, phase: f64) -> Result<WhiteCurve> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("n_max must be >= 2, got {n_max}")));
    }
    let cells: Vec<(f64, usize)> =
        alpha_grid.iter().flat_map(|&a| (1..=n_max).map(move |n| (a, n))).collect();
    let surface: Vec<SurfaceCell> = cells
        .par_iter()
        .map(|&(alpha_abs, n)| SurfaceCell { alpha_abs, n, outcome: surface_point(alpha_abs, phase, n) })
        .collect();
    let points = alpha_grid
        .iter()
        .enumerate()
        .map(|(i, &alpha_abs)| {
            let row: Vec<Option<(f64, f64)>> = surface[i * n_max..(i + 1) * n_max]
                .iter()
                .map(|c| c.outcome.as_ref().ok().map(|p| (p.stats.var_p, p.stats.product)))
                .collect();
            WhitePoint { alpha_abs, n_star: select_optimal_n(&row) }
        })
        .collect();
    Ok(WhiteCurve { points, surface })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_coherent, make_fock};

    #[test]
    fn fidelity_basics() {
        let psi = make_coherent(C64::new(0.8, -0.3), 30).unwrap();
        assert!((fidelity(&psi.to_density(), &psi).unwrap() - 1.0).abs() < 1e-12);
        let vac = make_fock(0, 30).unwrap().to_density();
        assert_eq!(fidelity(&vac, &make_fock(1, 30).unwrap()).unwrap(), 0.0);
        let alpha = C64::new(1.2, 0.5);
        let f = fidelity(&vac, &make_coherent(alpha, 30).unwrap()).unwrap();
        assert!((f - (-alpha.norm_sqr()).exp()).abs() < 1e-10);
        assert!(fidelity(&vac, &make_fock(0, 20).unwrap()).is_err());
    }

    #[test]
    fn selection_rule() {
        let row = |v: &[(f64, f64)]| v.iter().map(|&c| Some(c)).collect::<Vec<_>>();
        // interior minimum at N = 3 below the variance minimum at N = 4
        let r = row(&[(0.4, 0.501), (0.3, 0.503), (0.2, 0.502), (0.15, 0.504), (0.16, 0.505)]);
        assert_eq!(select_optimal_n(&r), Some(3));
        // only the boundary minimum
        let r = row(&[(0.4, 0.501), (0.3, 0.503), (0.35, 0.504)]);
        assert_eq!(select_optimal_n(&r), Some(1));
        // boundary not below N = 2
        let r = row(&[(0.4, 0.503), (0.45, 0.503), (0.47, 0.504)]);
        assert_eq!(select_optimal_n(&r), None);
        // unsqueezed minimum is rejected
        let r = row(&[(0.6, 0.51), (0.55, 0.505), (0.52, 0.507), (0.4, 0.506)]);
        assert_eq!(select_optimal_n(&r), None);
        // impossible cells are skipped
        let r = vec![Some((0.4, 0.501)), Some((0.3, 0.503)), None];
        assert_eq!(select_optimal_n(&r), Some(1));
    }
}
