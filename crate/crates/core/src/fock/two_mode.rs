use std::f64::consts::FRAC_PI_4;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::GeneratorExp;

/// Number-conserving operator on two modes, each truncated to `d` levels.
///
/// The basis is `|n> (x) |m>` at index `n d + m`. Because the operator commutes
/// with `n + m` it is stored as one unitary block per total-photon sector; the
/// dense `d^2 x d^2` matrix is only built on request.
#[derive(Debug, Clone)]
pub struct TwoModeOperator {
    cutoff: usize,
    label: String,
    sectors: Vec<Sector>,
}

#[derive(Debug, Clone)]
struct Sector {
    /// First-mode occupations `n` of the sector states `(n, total - n)`, ascending.
    first: Vec<usize>,
    total: usize,
    block: DMatrix<C64>,
}

impl Sector {
    fn states(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.first.iter().map(move |&n| (n, self.total - n))
    }
}

impl TwoModeOperator {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.cutoff * self.cutoff
    }

    pub fn index(&self, n: usize, m: usize) -> usize {
        n * self.cutoff + m
    }

    /// Dense `d^2 x d^2` matrix.
    pub fn matrix(&self) -> DMatrix<C64> {
        let mut u = DMatrix::<C64>::zeros(self.dim(), self.dim());
        for s in &self.sectors {
            let idx: Vec<usize> = s.states().map(|(n, m)| self.index(n, m)).collect();
            for (r, &ir) in idx.iter().enumerate() {
                for (c, &ic) in idx.iter().enumerate() {
                    u[(ir, ic)] = s.block[(r, c)];
                }
            }
        }
        u
    }

    /// Image of `|n> (x) |0>`, as a dense two-mode vector.
    pub fn column_with_vacuum(&self, n: usize) -> DVector<C64> {
        let mut out = DVector::<C64>::zeros(self.dim());
        let s = &self.sectors[n];
        // (n, 0) is the last state of sector n
        let col = s.first.len() - 1;
        for (r, (a, b)) in s.states().enumerate() {
            out[self.index(a, b)] = s.block[(r, col)];
        }
        out
    }

    /// `d^2 x d` matrix whose columns are `U (|n> (x) |0>)`.
    pub fn vacuum_embedding(&self) -> DMatrix<C64> {
        let mut w = DMatrix::<C64>::zeros(self.dim(), self.cutoff);
        for n in 0..self.cutoff {
            w.set_column(n, &self.column_with_vacuum(n));
        }
        w
    }

    /// Largest elementwise deviation of `U^dagger U` from the identity, per sector.
    pub fn unitarity_defect(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| {
                let k = s.block.nrows();
                (s.block.adjoint() * &s.block - DMatrix::<C64>::identity(k, k)).camax()
            })
            .fold(0.0, f64::max)
    }
}

/// 50:50 beam splitter `exp[pi/4 (a^dagger b - a b^dagger)]` on two `d`-level modes.
pub fn beam_splitter(d: usize) -> TwoModeOperator {
    let mut sectors = Vec::with_capacity(2 * d - 1);
    for total in 0..(2 * d - 1) {
        let lo = total.saturating_sub(d - 1);
        let hi = total.min(d - 1);
        let first: Vec<usize> = (lo..=hi).collect();
        let k = first.len();
        // <n+1, m-1| a^dagger b |n, m> = sqrt((n+1) m)
        let mut g = DMatrix::<C64>::zeros(k, k);
        for (i, &n) in first.iter().enumerate().take(k - 1) {
            let m = total - n;
            let amp = ((n + 1) as f64 * m as f64).sqrt() * FRAC_PI_4;
            g[(i + 1, i)] += C64::from(amp);
            g[(i, i + 1)] -= C64::from(amp);
        }
        let block = GeneratorExp::new(&g).exp(1.0);
        sectors.push(Sector { first, total, block });
    }
    TwoModeOperator { cutoff: d, label: "beam-splitter(50:50)".into(), sectors }
}
