//! Unitary exponentials of anti-Hermitian generators on a padded Fock space.
//!
//! Truncating the ladder operators corrupts the exponential near the edge of
//! the space, so every exponential is evaluated on a larger padded space and
//! only the leading `d x d` block is kept. The generator is diagonalized once;
//! after that any real multiple `exp(t G)` costs a couple of matrix products,
//! and phase-rotated members of the family come for free via `e^{i theta n}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{ladder_matrix, Ladder};

/// Largest padded dimension the exponentials will allocate.
pub const MAX_PADDED_DIM: usize = 2048;

/// `ceil(1.5 d) + 10`.
pub fn padded_dim(d: usize) -> Result<usize> {
    padded_dim_with_limit(d, MAX_PADDED_DIM)
}

pub fn padded_dim_with_limit(d: usize, max: usize) -> Result<usize> {
    let requested = (3 * d).div_ceil(2) + 10;
    if requested > max {
        return Err(Error::PadOverflow { requested, max });
    }
    Ok(requested)
}

/// Leading block on which truncated exponentials are expected to be unitary:
/// the cutoff minus the padding margin.
pub fn inner_dim(d: usize) -> usize {
    let pad = (3 * d).div_ceil(2) + 10 - d;
    d.saturating_sub(pad)
}

/// Spectral form of a fixed anti-Hermitian generator `G`.
///
/// With `iG = V diag(lambda) V^dagger` we have `exp(tG) = V diag(e^{-i t lambda}) V^dagger`.
#[derive(Debug, Clone)]
pub struct GeneratorExp {
    eigvecs: DMatrix<C64>,
    eigvals: DVector<f64>,
}

impl GeneratorExp {
    pub fn new(generator: &DMatrix<C64>) -> Self {
        let i = C64::new(0.0, 1.0);
        let mut h = generator.map(|g| g * i);
        // enforce exact Hermiticity before the symmetric solver sees it
        let ht = h.adjoint();
        h = (h + ht).map(|x| x * 0.5);
        let eig = SymmetricEigen::new(h);
        GeneratorExp { eigvecs: eig.eigenvectors, eigvals: eig.eigenvalues }
    }

    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    fn phases(&self, t: f64) -> DVector<C64> {
        self.eigvals.map(|l| C64::from_polar(1.0, -t * l))
    }

    /// Full `exp(tG)` on the padded space.
    pub fn exp(&self, t: f64) -> DMatrix<C64> {
        let ph = self.phases(t);
        let mut scaled = self.eigvecs.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= ph[j];
        }
        scaled * self.eigvecs.adjoint()
    }

    /// `exp(tG) v` without forming the matrix.
    pub fn apply(&self, t: f64, v: &DVector<C64>) -> DVector<C64> {
        let mut coeffs = self.eigvecs.ad_mul(v);
        let ph = self.phases(t);
        coeffs.component_mul_assign(&ph);
        &self.eigvecs * coeffs
    }
}

/// Conjugate by the phase rotation `R(theta) = e^{i theta n}`:
/// returns `R M R^dagger`, i.e. `M_{mn} e^{i (m - n) theta}`.
pub(crate) fn rotate_matrix(m: &DMatrix<C64>, theta: f64) -> DMatrix<C64> {
    if theta == 0.0 {
        return m.clone();
    }
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        m[(r, c)] * C64::from_polar(1.0, (r as f64 - c as f64) * theta)
    })
}

pub(crate) fn rotate_vector(v: &DVector<C64>, theta: f64) -> DVector<C64> {
    if theta == 0.0 {
        return v.clone();
    }
    DVector::from_fn(v.len(), |n, _| v[n] * C64::from_polar(1.0, n as f64 * theta))
}

/// The one-parameter family `D(alpha) = exp(alpha a^dagger - alpha^* a)` for a fixed cutoff.
#[derive(Debug, Clone)]
pub struct DisplacementFamily {
    cutoff: usize,
    generator: GeneratorExp,
}

impl DisplacementFamily {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!("displacement needs cutoff >= 2, got {d}")));
        }
        let dim = padded_dim(d)?;
        let a = ladder_matrix(Ladder::Annihilation, dim);
        let g = a.adjoint() - a;
        Ok(DisplacementFamily { cutoff: d, generator: GeneratorExp::new(&g) })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Truncated `d x d` matrix of `D(alpha)`.
    pub fn matrix(&self, alpha: C64) -> DMatrix<C64> {
        let full = self.generator.exp(alpha.norm());
        let block = full.view((0, 0), (self.cutoff, self.cutoff)).into_owned();
        rotate_matrix(&block, alpha.arg())
    }
}

/// The family `S^(k)(z) = exp(-1/2 (z a^dagger^k - z^* a^k))` for fixed order and cutoff.
///
/// `S^(k)(|z| e^{i theta}) = R(theta/k) S^(k)(|z|) R(theta/k)^dagger`, so only the
/// real generator `-1/2 (a^dagger^k - a^k)` is diagonalized.
#[derive(Debug, Clone)]
pub struct SqueezeFamily {
    order: usize,
    cutoff: usize,
    padded: usize,
    generator: Option<GeneratorExp>,
}

impl SqueezeFamily {
    pub fn new(order: usize, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("cutoff must be positive".into()));
        }
        if order >= 1 && d < order + 1 {
            return Err(Error::InvalidArgument(format!(
                "generalized squeezing of order {order} needs cutoff >= {}, got {d}",
                order + 1
            )));
        }
        if order == 0 {
            return Ok(SqueezeFamily { order, cutoff: d, padded: d, generator: None });
        }
        let padded = padded_dim(d)?;
        let a = ladder_matrix(Ladder::Annihilation, padded);
        let mut ak = DMatrix::<C64>::identity(padded, padded);
        for _ in 0..order {
            ak = &ak * &a;
        }
        let g = (ak.adjoint() - ak).map(|x| x * -0.5);
        Ok(SqueezeFamily { order, cutoff: d, padded, generator: Some(GeneratorExp::new(&g)) })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn rotation_angle(&self, z: C64) -> f64 {
        z.arg() / self.order as f64
    }

    /// Truncated `d x d` matrix of `S^(k)(z)`.
    pub fn matrix(&self, z: C64) -> DMatrix<C64> {
        match &self.generator {
            // exp(-1/2 (z - z^*)) = e^{-i Im z}
            None => DMatrix::identity(self.cutoff, self.cutoff) * C64::from_polar(1.0, -z.im),
            Some(g) => {
                let full = g.exp(z.norm());
                let block = full.view((0, 0), (self.cutoff, self.cutoff)).into_owned();
                rotate_matrix(&block, self.rotation_angle(z))
            }
        }
    }

    /// Applies the truncated operator to a length-`d` vector.
    pub fn apply(&self, z: C64, v: &DVector<C64>) -> DVector<C64> {
        assert_eq!(v.len(), self.cutoff, "vector length must equal the cutoff");
        match &self.generator {
            None => v * C64::from_polar(1.0, -z.im),
            Some(g) => {
                let theta = self.rotation_angle(z);
                let mut padded = DVector::<C64>::zeros(self.padded);
                padded.rows_mut(0, self.cutoff).copy_from(&rotate_vector(v, -theta));
                let out = g.apply(z.norm(), &padded);
                rotate_vector(&out.rows(0, self.cutoff).into_owned(), theta)
            }
        }
    }
}
