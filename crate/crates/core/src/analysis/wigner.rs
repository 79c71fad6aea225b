//! Wigner function on a phase-space grid, via the displaced-parity form
//! `W(x, p) = (1/pi) sum_n (-1)^n |<n| D(-beta) |psi>|^2`, `beta = (x + i p)/sqrt(2)`.
//!
//! Units: `x = (a + a†)/sqrt(2)`, so the vacuum peaks at `1/pi` and
//! `∫∫ W dx dp = 1`.

use std::f64::consts::{FRAC_1_PI, SQRT_2};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::PureState;

/// Norm missing from the displaced state above which a grid is flagged.
pub const WIGNER_TAIL_WARN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub step: f64,
}

impl GridSpec {
    /// `[-range, range]` on both axes.
    pub fn square(range: f64, step: f64) -> Self {
        GridSpec {
            x_min: -range,
            x_max: range,
            p_min: -range,
            p_max: range,
            step,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.x_min, self.x_max, self.p_min, self.p_max, self.step]
            .iter()
            .all(|v| v.is_finite());
        if !ok || self.step <= 0.0 || self.x_max < self.x_min || self.p_max < self.p_min {
            return Err(Error::InvalidArgument(format!("bad grid {self:?}")));
        }
        Ok(())
    }
}

pub(crate) fn axis(min: f64, max: f64, step: f64) -> Vec<f64> {
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|k| min + k as f64 * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[i][j]` is `W(x_axis[i], p_axis[j])`.
    pub values: Vec<Vec<f64>>,
    /// Largest norm lost when displacing the state, over all grid points.
    pub max_tail: f64,
}

impl WignerGrid {
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Riemann sum over the grid, assuming uniform steps.
    pub fn integral(&self) -> f64 {
        let dx = if self.x_axis.len() > 1 { self.x_axis[1] - self.x_axis[0] } else { 0.0 };
        let dp = if self.p_axis.len() > 1 { self.p_axis[1] - self.p_axis[0] } else { 0.0 };
        self.values.iter().flatten().sum::<f64>() * dx * dp
    }
}

/// `D(gamma) |psi>` on `out_dim` levels, from the column recurrence
/// `<m|D|n+1> = (sqrt(m) <m-1|D|n> - conj(gamma) <m|D|n>) / sqrt(n+1)`.
fn displace(psi: &[C64], gamma: C64, out_dim: usize) -> Vec<C64> {
    let mut col = Vec::with_capacity(out_dim);
    let mut d = C64::new((-0.5 * gamma.norm_sqr()).exp(), 0.0);
    for m in 0..out_dim {
        if m > 0 {
            d = d * gamma / (m as f64).sqrt();
        }
        col.push(d);
    }
    let mut out: Vec<C64> = col.iter().map(|&d| d * psi[0]).collect();
    let gc = gamma.conj();
    let mut next = vec![C64::new(0.0, 0.0); out_dim];
    for n in 0..psi.len() - 1 {
        let inv = 1.0 / ((n + 1) as f64).sqrt();
        next[0] = -gc * col[0] * inv;
        for m in 1..out_dim {
            next[m] = ((m as f64).sqrt() * col[m - 1] - gc * col[m]) * inv;
        }
        std::mem::swap(&mut col, &mut next);
        let c = psi[n + 1];
        if c != C64::new(0.0, 0.0) {
            out.iter_mut().zip(&col).for_each(|(o, &d)| *o += d * c);
        }
    }
    out
}

fn displaced_dim(dim: usize, gamma_abs: f64) -> usize {
    let r = (dim as f64).sqrt() + gamma_abs + 7.0;
    (r * r).ceil() as usize
}

/// `W(x, p)` for a single-mode state, plus the norm missing from the
/// displaced state (a truncation diagnostic).
pub fn wigner_point(state: &PureState, x: f64, p: f64) -> Result<(f64, f64)> {
    if state.space().num_modes() != 1 {
        return Err(Error::SpaceMismatch("Wigner function needs a single-mode state".into()));
    }
    Ok(wigner_unchecked(state.amplitudes(), x, p))
}

fn wigner_unchecked(psi: &[C64], x: f64, p: f64) -> (f64, f64) {
    let gamma = -C64::new(x, p) / SQRT_2;
    let out_dim = displaced_dim(psi.len(), gamma.norm());
    let phi = displace(psi, gamma, out_dim);
    let mut w = 0.0;
    let mut norm = 0.0;
    for (n, z) in phi.iter().enumerate() {
        let q = z.norm_sqr();
        norm += q;
        w += if n % 2 == 0 { q } else { -q };
    }
    (FRAC_1_PI * w, (1.0 - norm).max(0.0))
}

/// Wigner function sampled on a grid; rows are evaluated in parallel.
pub fn wigner(state: &PureState, grid: &GridSpec) -> Result<WignerGrid> {
    if state.space().num_modes() != 1 {
        return Err(Error::SpaceMismatch("Wigner function needs a single-mode state".into()));
    }
    grid.validate()?;
    let x_axis = axis(grid.x_min, grid.x_max, grid.step);
    let p_axis = axis(grid.p_min, grid.p_max, grid.step);
    let psi = state.amplitudes();
    let rows: Vec<(Vec<f64>, f64)> = x_axis
        .par_iter()
        .map(|&x| {
            let mut tail: f64 = 0.0;
            let row = p_axis
                .iter()
                .map(|&p| {
                    let (w, t) = wigner_unchecked(psi, x, p);
                    tail = tail.max(t);
                    w
                })
                .collect();
            (row, tail)
        })
        .collect();
    let max_tail = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if max_tail > WIGNER_TAIL_WARN {
        log::warn!("Wigner parity sum truncated: up to {max_tail:.3e} of the norm missing");
    }
    Ok(WignerGrid {
        x_axis,
        p_axis,
        values: rows.into_iter().map(|r| r.0).collect(),
        max_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fock_state, pacs_state};
    use crate::special::{binomial, factorial};

    /// Closed-form `<m|D(g)|n>` through associated Laguerre polynomials.
    fn displacement_element(m: usize, n: usize, g: C64) -> C64 {
        let x = g.norm_sqr();
        let assoc = |n: usize, k: usize| -> f64 {
            (0..=n)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binomial((n + k) as u32, (n - j) as u32) * x.powi(j as i32) / factorial(j as u32)
                })
                .sum()
        };
        let pre = (-x / 2.0).exp();
        if m >= n {
            let r = (factorial(n as u32) / factorial(m as u32)).sqrt();
            g.powi((m - n) as i32) * (r * pre * assoc(n, m - n))
        } else {
            let r = (factorial(m as u32) / factorial(n as u32)).sqrt();
            (-g.conj()).powi((n - m) as i32) * (r * pre * assoc(m, n - m))
        }
    }

    /// `W = (1/pi) sum_{m,n} conj(psi_m) psi_n (-1)^n <m|D(2 beta)|n>`.
    fn wigner_oracle(psi: &[C64], x: f64, p: f64) -> f64 {
        let g = C64::new(x, p) / SQRT_2 * 2.0;
        let mut s = C64::new(0.0, 0.0);
        for (m, a) in psi.iter().enumerate() {
            for (n, b) in psi.iter().enumerate() {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                s += a.conj() * b * displacement_element(m, n, g) * sign;
            }
        }
        FRAC_1_PI * s.re
    }

    #[test]
    fn origin_values() {
        let (w0, _) = wigner_point(&fock_state(0, 6).unwrap(), 0.0, 0.0).unwrap();
        assert!((w0 - FRAC_1_PI).abs() < 1e-9);
        let (w1, _) = wigner_point(&fock_state(1, 6).unwrap(), 0.0, 0.0).unwrap();
        assert!((w1 + FRAC_1_PI).abs() < 1e-9);
    }

    #[test]
    fn coherent_state_is_displaced_gaussian() {
        let a = C64::new(0.8, -0.3);
        let s = coherent_state(a, 24).unwrap();
        let (x0, p0) = (SQRT_2 * a.re, SQRT_2 * a.im);
        for &(x, p) in &[(0.0, 0.0), (1.1, -0.4), (-2.0, 1.5), (3.0, 3.0)] {
            let (w, tail) = wigner_point(&s, x, p).unwrap();
            let expect = FRAC_1_PI * (-(x - x0) * (x - x0) - (p - p0) * (p - p0)).exp();
            assert!((w - expect).abs() < 1e-12, "({x},{p}) {w} vs {expect}");
            assert!(tail < 1e-12);
        }
    }

    #[test]
    fn matches_laguerre_oracle() {
        let s = pacs_state(C64::new(0.7, 0.2), 2, 16).unwrap();
        for &(x, p) in &[(0.0, 0.0), (0.5, -1.0), (-1.5, 0.3), (2.2, 1.9)] {
            let (w, _) = wigner_point(&s, x, p).unwrap();
            let o = wigner_oracle(s.amplitudes(), x, p);
            assert!((w - o).abs() < 1e-10, "({x},{p}) {w} vs {o}");
        }
    }

    #[test]
    fn grid_properties() {
        let g = GridSpec::square(1.0, 0.5);
        assert_eq!(axis(g.x_min, g.x_max, g.step), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(wigner(&fock_state(0, 4).unwrap(), &GridSpec::square(1.0, 0.0)).is_err());

        for (s, a) in [
            (fock_state(0, 8).unwrap(), 0.0),
            (pacs_state(C64::new(1.0, 0.0), 1, 24).unwrap(), 1.0),
            (coherent_state(C64::new(0.0, 2.0), 32).unwrap(), 2.0),
        ] {
            let range = SQRT_2 * (a + 4.0);
            let grid = wigner(&s, &GridSpec::square(range, 0.1)).unwrap();
            let i = grid.integral();
            assert!((0.98..=1.02).contains(&i), "integral {i}");
            assert!(grid.max_tail < WIGNER_TAIL_WARN);
        }
    }

    #[test]
    fn spacs_is_negative_coherent_is_not() {
        let spacs = pacs_state(C64::new(1.0, 0.0), 1, 24).unwrap();
        let g = wigner(&spacs, &GridSpec::square(4.0, 0.1)).unwrap();
        assert!(g.min() < 0.0);
        let coh = pacs_state(C64::new(1.0, 0.0), 0, 24).unwrap();
        let g = wigner(&coh, &GridSpec::square(4.0, 0.1)).unwrap();
        assert!(g.min() >= -1e-9);
    }
}
