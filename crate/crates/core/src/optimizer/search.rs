//! One-dimensional and coordinate-wise derivative-free searches.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Points in the coarse scan that seeds each golden-section refinement.
pub const SCAN_POINTS: usize = 11;

/// Golden-section maximization of a unimodal `f` on `[lo, hi]` down to an
/// interval of width `tol`. Returns `(x, f(x))`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd { (c, fc) } else { (d, fd) }
}

/// Scans `SCAN_POINTS` points over `[lo, hi]` and refines around the best one.
/// The ends are included; for periodic parameters the caller should pass a
/// window one period wide.
pub fn scan_then_golden<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let h = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let (mut best_i, mut best_f) = (0, f64::NEG_INFINITY);
    for i in 0..SCAN_POINTS {
        let v = f(lo + h * i as f64);
        if v > best_f {
            best_i = i;
            best_f = v;
        }
    }
    let x0 = lo + h * best_i as f64;
    let (x, v) = golden_max(&mut f, x0 - h, x0 + h, tol);
    if v >= best_f { (x, v) } else { (x0, best_f) }
}

/// One coordinate of a coordinate-wise search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate {
    pub lo: f64,
    pub hi: f64,
    /// Periodic coordinates wrap instead of being clamped; the period is `hi - lo`.
    pub periodic: bool,
}

impl Coordinate {
    pub fn bounded(lo: f64, hi: f64) -> Self {
        Coordinate { lo, hi, periodic: false }
    }

    pub fn periodic(lo: f64, period: f64) -> Self {
        Coordinate { lo, hi: lo + period, periodic: true }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Signed move from `a` to `b`, the short way round for periodic coordinates.
    fn delta(&self, a: f64, b: f64) -> f64 {
        if self.periodic {
            let w = self.width();
            (b - a + w / 2.0).rem_euclid(w) - w / 2.0
        } else {
            b - a
        }
    }

    fn wrap(&self, x: f64) -> f64 {
        if self.periodic { self.lo + (x - self.lo).rem_euclid(self.width()) } else { x.clamp(self.lo, self.hi) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub sweeps: usize,
    /// Every coordinate moved by less than the tolerance in the last sweep.
    pub converged: bool,
}

/// Cyclic coordinate ascent. Each sweep scans every coordinate over a window
/// around its current value (the whole range on the first sweep) and refines
/// the best scan point by golden section; a line search along the net move of
/// the sweep then speeds up progress along curved ridges.
pub fn coordinate_ascent<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    coords: &[Coordinate],
    tol: f64,
    max_sweeps: usize,
) -> AscentResult {
    assert_eq!(x0.len(), coords.len());
    let mut x: Vec<f64> = x0.iter().zip(coords).map(|(&v, c)| c.wrap(v)).collect();
    let mut value = f(&x);
    let mut half: Vec<f64> = coords.iter().map(|c| c.width() / 2.0).collect();
    for sweep in 1..=max_sweeps {
        let start = x.clone();
        let mut step = vec![0.0; coords.len()];
        for i in 0..coords.len() {
            let c = coords[i];
            let (lo, hi) = if sweep == 1 {
                (c.lo, c.hi)
            } else if c.periodic {
                (x[i] - half[i], x[i] + half[i])
            } else {
                ((x[i] - half[i]).max(c.lo), (x[i] + half[i]).min(c.hi))
            };
            let mut probe = x.clone();
            let (xi, v) = scan_then_golden(
                |t| {
                    probe[i] = c.wrap(t);
                    f(&probe)
                },
                lo,
                hi,
                tol,
            );
            if v > value {
                let new = c.wrap(xi);
                step[i] = c.delta(x[i], new);
                x[i] = new;
                value = v;
            }
            half[i] = (half[i] * 0.5).max(4.0 * step[i].abs()).max(20.0 * tol);
        }
        let moved = step.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        if sweep > 1 && moved < tol {
            return AscentResult { x, value, sweeps: sweep, converged: true };
        }
        if moved > 0.0 {
            let along = |t: f64| -> Vec<f64> {
                start.iter().zip(&step).zip(coords).map(|((&s, &d), c)| c.wrap(s + t * d)).collect()
            };
            let (t, v) = golden_max(|t| f(&along(t)), 1.0, 8.0, tol / moved);
            if v > value {
                x = along(t);
                value = v;
            }
        }
    }
    AscentResult { x, value, sweeps: max_sweeps, converged: false }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping once
/// `|f(x)| < f_tol` or the bracket collapses to machine precision.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, f_tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::BracketFailure { lo, hi });
    }
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            return Ok(m);
        }
        let fm = f(m);
        if fm.abs() < f_tol {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
}
