use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{coherent_cutoff, make_coherent, DensityOperator};

/// Uniform axis `min..=max` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Axis { min, max, count }
    }

    /// Symmetric axis `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, count: usize) -> Self {
        Axis { min: -half_width, max: half_width, count }
    }

    pub fn step(&self) -> f64 {
        if self.count > 1 { (self.max - self.min) / (self.count - 1) as f64 } else { 0.0 }
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.count).map(|i| self.min + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub re: Axis,
    pub im: Axis,
}

impl GridSpec {
    /// 201 x 201 points over `[-(r + 4), r + 4]^2`.
    pub fn default_for(alpha_abs: f64) -> Self {
        let w = alpha_abs + 4.0;
        GridSpec { re: Axis::symmetric(w, 201), im: Axis::symmetric(w, 201) }
    }
}

/// `Q(beta) = <beta|rho|beta> / pi` sampled on a grid; `values` is im-major
/// (`values[i_im * re_axis.len() + i_re]`).
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl QGrid {
    pub fn at(&self, i_re: usize, i_im: usize) -> f64 {
        self.values[i_im * self.re_axis.len() + i_re]
    }

    pub fn riemann_sum(&self) -> f64 {
        let h = |a: &[f64]| if a.len() > 1 { a[1] - a[0] } else { 0.0 };
        self.values.iter().sum::<f64>() * h(&self.re_axis) * h(&self.im_axis)
    }

    /// `(re, im, Q)` of the largest sample.
    pub fn peak(&self) -> (f64, f64, f64) {
        let (idx, q) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &q)| if q > acc.1 { (i, q) } else { acc });
        let n = self.re_axis.len();
        (self.re_axis[idx % n], self.im_axis[idx / n], q)
    }
}

/// `<beta|rho|beta> / pi` at one point.
pub fn q_value(rho: &DensityOperator, beta: C64) -> Result<f64> {
    let d = rho.cutoff();
    // build |beta> where it is converged, then project onto the first d levels
    let big = d.max(coherent_cutoff(beta.norm()));
    let coh = make_coherent(beta, big)?;
    let v = coh.amplitudes().rows(0, d);
    let rv = rho.matrix() * v;
    Ok(v.dotc(&rv).re / PI)
}

pub fn husimi_q(rho: &DensityOperator, grid: &GridSpec) -> Result<QGrid> {
    if grid.re.count == 0 || grid.im.count == 0 {
        return Err(Error::InvalidArgument("Q grid needs at least one point per axis".into()));
    }
    let re_axis = grid.re.points();
    let im_axis = grid.im.points();
    let points: Vec<C64> =
        im_axis.iter().flat_map(|&y| re_axis.iter().map(move |&x| C64::new(x, y))).collect();
    let values = points.par_iter().map(|&b| q_value(rho, b)).collect::<Result<Vec<_>>>()?;
    Ok(QGrid { re_axis, im_axis, values })
}
