//! Inversion of sampled characteristic functions,
//! `P(W) = (1/2π) ∫ P̃(μ) e^{-iμW} dμ`, with the convention
//! `P̃(μ) = ∫ P(W) e^{iμW} dW`.
//!
//! The distributions handled here are mixed: an atom at `W = 0` plus a
//! density. The atom shows up as the non-decaying level of `P̃` and is removed
//! before transforming.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::workdist::{DistributionMetadata, WorkDistribution};
use crate::{Error, Result};

/// Fraction of the grid (at each end) averaged to estimate the atom.
pub const ATOM_WINDOW: f64 = 0.1;
/// Negative density values smaller than this fraction of the peak are
/// treated as inversion noise and clamped.
pub const CLAMP_FLOOR: f64 = 1e-6;

const GRID_TOL: f64 = 1e-9;
const VALUE_TOL: f64 = 1e-8;

/// Samples of `P̃` on a uniform grid symmetric about zero, with an odd number
/// of points `μ_j = -L + jΔμ`, `j = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFnGrid {
    mu: Vec<f64>,
    values: Vec<Complex64>,
}

impl CharFnGrid {
    pub fn new(mu: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if mu.len() != values.len() {
            return Err(Error::invalid("mu and value arrays differ in length"));
        }
        if mu.len() < 3 || mu.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "characteristic-function grid needs an odd number (>= 3) of points, got {}",
                mu.len()
            )));
        }
        let n = mu.len() - 1;
        let half_span = mu[n];
        let step = 2.0 * half_span / n as f64;
        if !(half_span > 0.0 && half_span.is_finite()) {
            return Err(Error::invalid("mu grid must end at a positive finite value"));
        }
        for (j, &m) in mu.iter().enumerate() {
            let want = -half_span + j as f64 * step;
            if (m - want).abs() > GRID_TOL * half_span {
                return Err(Error::invalid(format!(
                    "mu grid is not uniform and symmetric: mu[{j}] = {m}, expected {want}"
                )));
            }
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("non-finite characteristic-function value"));
        }
        let centre = values[n / 2];
        if (centre - Complex64::new(1.0, 0.0)).norm() > VALUE_TOL {
            return Err(Error::invalid(format!("P̃(0) = {centre} is not 1")));
        }
        for j in 0..n / 2 {
            let defect = (values[j] - values[n - j].conj()).norm();
            if defect > VALUE_TOL {
                return Err(Error::invalid(format!(
                    "P̃(-μ) differs from conj P̃(μ) by {defect:e} at μ = {}",
                    mu[n - j]
                )));
            }
        }
        Ok(Self { mu, values })
    }

    /// Sample `f` on `intervals + 1` points spanning `[-half_span, half_span]`.
    pub fn from_fn<F>(half_span: f64, intervals: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        let mu = uniform_grid(half_span, intervals)?;
        let values = mu.iter().map(|&m| f(m)).collect::<Result<Vec<_>>>()?;
        Self::new(mu, values)
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn intervals(&self) -> usize {
        self.mu.len() - 1
    }

    pub fn half_span(&self) -> f64 {
        self.mu[self.intervals()]
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_span() / self.intervals() as f64
    }

    /// Spacing of the work grid conjugate to this μ grid, `2π / (N Δμ)`.
    pub fn conjugate_spacing(&self) -> f64 {
        PI / self.half_span()
    }

    /// The full work grid `W_q = q ΔW`, `q = -N/2 .. N/2 - 1`.
    pub fn conjugate_w_grid(&self) -> Vec<f64> {
        let n = self.intervals() as i64;
        let dw = self.conjugate_spacing();
        (-n / 2..n / 2).map(|q| q as f64 * dw).collect()
    }

    /// Mean of `P̃` over the outer `ATOM_WINDOW` fraction of the grid.
    pub fn tail_level(&self) -> f64 {
        let n = self.intervals();
        let count = ((ATOM_WINDOW * n as f64 / 2.0).round() as usize).max(1);
        let left = self.values[..count].iter();
        let right = self.values[n + 1 - count..].iter();
        let sum: Complex64 = left.chain(right).sum();
        sum.re / (2 * count) as f64
    }
}

/// `intervals + 1` uniformly spaced points on `[-half_span, half_span]`.
pub fn uniform_grid(half_span: f64, intervals: usize) -> Result<Vec<f64>> {
    if !(half_span > 0.0 && half_span.is_finite()) {
        return Err(Error::invalid(format!("half span must be positive, got {half_span}")));
    }
    if intervals < 2 || !intervals.is_multiple_of(2) {
        return Err(Error::invalid(format!("interval count must be even and >= 2, got {intervals}")));
    }
    let step = 2.0 * half_span / intervals as f64;
    let half = (intervals / 2) as i64;
    Ok((-half..=half).map(|j| j as f64 * step).collect())
}

/// Invert a sampled characteristic function onto `w_grid`.
///
/// The atom at `W = 0` is the mean of `P̃` over the outer tenth of the grid.
/// The remainder is transformed with the trapezoid rule (an FFT on the
/// periodic `N`-point grid, the two endpoints averaged). `w_grid` must be
/// uniform with the conjugate spacing `π/L` and lie on the conjugate lattice
/// inside the Nyquist band.
pub fn invert_charfn(grid: &CharFnGrid, w_grid: &[f64]) -> Result<WorkDistribution> {
    invert_charfn_with_edge(grid, w_grid, None)
}

/// A density that vanishes for `W ≤ 0` and rises as `slope · W` above it,
/// `slope · W (1 + W/τ) e^{−W/τ}`. Its transform falls off only like `1/μ²`,
/// so it is removed analytically before the FFT and added back after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeModel {
    pub slope: f64,
    pub scale: f64,
}

impl EdgeModel {
    pub fn density(&self, w: f64) -> f64 {
        if w <= 0.0 {
            0.0
        } else {
            let x = w / self.scale;
            self.slope * w * (1.0 + x) * (-x).exp()
        }
    }

    /// `∫ density(W) e^{iμW} dW`.
    pub fn transform(&self, mu: f64) -> Complex64 {
        let z = Complex64::new(1.0 / self.scale, -mu);
        let z2 = z * z;
        self.slope * (1.0 / z2 + 2.0 / (self.scale * z2 * z))
    }
}

/// [`invert_charfn`] with an optional threshold model taken out of `P̃`
/// first. The atom is then read off the smoother remainder.
pub fn invert_charfn_with_edge(grid: &CharFnGrid, w_grid: &[f64], edge: Option<EdgeModel>) -> Result<WorkDistribution> {
    let n = grid.intervals();
    let dw = grid.conjugate_spacing();
    let indices = lattice_indices(w_grid, dw, n)?;

    let values: Vec<Complex64> = match edge {
        Some(e) => grid.mu().iter().zip(grid.values()).map(|(&m, v)| v - e.transform(m)).collect(),
        None => grid.values().to_vec(),
    };
    let count = ((ATOM_WINDOW * n as f64 / 2.0).round() as usize).max(1);
    let outer: Complex64 = values[..count].iter().chain(&values[n + 1 - count..]).sum();
    let atom = outer.re / (2 * count) as f64;
    let half = n / 2;
    // Periodic layout: buffer[m mod N] holds μ = m Δμ for m in [-N/2, N/2).
    let mut buffer = vec![Complex64::new(0.0, 0.0); n];
    for (j, v) in values.iter().enumerate().take(n).skip(1) {
        let m = j as i64 - half as i64;
        buffer[m.rem_euclid(n as i64) as usize] = v - atom;
    }
    buffer[half] = 0.5 * (values[0] + values[n]) - atom;

    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);

    let scale = grid.spacing() / (2.0 * PI);
    let mut max_imaginary: f64 = 0.0;
    let full: Vec<f64> = (0..n)
        .map(|q| {
            let z = buffer[q] * scale;
            max_imaginary = max_imaginary.max(z.im.abs());
            z.re
        })
        .collect();

    let mut density: Vec<f64> = indices.iter().map(|&q| full[q]).collect();
    if let Some(e) = edge {
        for (d, &w) in density.iter_mut().zip(w_grid) {
            *d += e.density(w);
        }
    }
    let peak = density.iter().cloned().fold(0.0, f64::max);
    let floor = CLAMP_FLOOR * peak;
    let mut clamped = 0;
    let mut max_negative: f64 = 0.0;
    let mut ringing = false;
    for d in density.iter_mut() {
        if *d < 0.0 {
            max_negative = max_negative.min(*d);
            if -*d <= floor {
                *d = 0.0;
                clamped += 1;
            } else {
                ringing = true;
            }
        }
    }

    Ok(WorkDistribution {
        atom_weight: atom,
        w_grid: w_grid.to_vec(),
        density,
        metadata: DistributionMetadata {
            scenario: String::new(),
            mu_half_span: grid.half_span(),
            mu_intervals: n,
            w_spacing: dw,
            tail_ratio: None,
            clamped,
            max_negative,
            ringing,
            max_imaginary,
        },
    })
}

/// FFT bin of each work value, checking it sits on the conjugate lattice.
fn lattice_indices(w_grid: &[f64], dw: f64, n: usize) -> Result<Vec<usize>> {
    if w_grid.is_empty() {
        return Err(Error::invalid("empty work grid"));
    }
    if w_grid.len() > 1 {
        let step = w_grid[1] - w_grid[0];
        if ((step - dw) / dw).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "work grid spacing {step} does not match the conjugate spacing {dw}"
            )));
        }
    }
    let half = (n / 2) as i64;
    w_grid
        .iter()
        .map(|&w| {
            let q = (w / dw).round();
            if (w / dw - q).abs() > 1e-6 {
                return Err(Error::invalid(format!("W = {w} is off the conjugate lattice (ΔW = {dw})")));
            }
            let q = q as i64;
            if q < -half || q >= half {
                return Err(Error::invalid(format!(
                    "W = {w} lies outside the Nyquist band [-{}, {})",
                    half as f64 * dw,
                    half as f64 * dw
                )));
            }
            Ok(q.rem_euclid(n as i64) as usize)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_grid(half_span: f64, intervals: usize) -> CharFnGrid {
        CharFnGrid::from_fn(half_span, intervals, |m| Ok(Complex64::new((-0.5 * m * m).exp(), 0.0))).unwrap()
    }

    #[test]
    fn constant_is_pure_atom() {
        let grid = CharFnGrid::from_fn(50.0, 1024, |_| Ok(Complex64::new(1.0, 0.0))).unwrap();
        let w = grid.conjugate_w_grid();
        let dist = invert_charfn(&grid, &w).unwrap();
        assert!((dist.atom_weight - 1.0).abs() < 1e-15);
        assert!(dist.density.iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn pure_translation() {
        let half_span = 400.0;
        let grid0 = CharFnGrid::from_fn(half_span, 4096, |_| Ok(Complex64::new(1.0, 0.0))).unwrap();
        // Put the shift on the conjugate lattice.
        let shift = 300.0 * grid0.conjugate_spacing();
        let grid =
            CharFnGrid::from_fn(half_span, 4096, |m| Ok(Complex64::new(0.0, m * shift).exp())).unwrap();
        let w = grid.conjugate_w_grid();
        let dist = invert_charfn(&grid, &w).unwrap();
        assert!(dist.atom_weight.abs() < 1e-2, "atom {}", dist.atom_weight);
        let (imax, _) = dist
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((w[imax] - shift).abs() < 1e-9);
        // Nearly all the mass sits in the bin at the shift.
        let dw = grid.conjugate_spacing();
        assert!((dist.density[imax] * dw - 1.0).abs() < 2e-2);
    }

    #[test]
    fn gaussian_pair() {
        let grid = gaussian_grid(40.0, 4096);
        let w = grid.conjugate_w_grid();
        let dist = invert_charfn(&grid, &w).unwrap();
        assert!(dist.atom_weight.abs() < 1e-300 + 1e-15);
        for (x, d) in w.iter().zip(&dist.density) {
            let want = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
            assert!((d - want).abs() < 1e-14, "W = {x}");
        }
        assert!(!dist.metadata.ringing);
    }

    #[test]
    fn round_trip_reproduces_input() {
        // Smooth Hermitian test function: shifted, skewed Gaussian mixture.
        let p = |m: f64| {
            let a = Complex64::new(-0.5 * m * m, 1.5 * m).exp();
            let b = Complex64::new(-0.125 * m * m, -0.5 * m).exp();
            Ok(0.7 * a + 0.3 * b)
        };
        let grid = CharFnGrid::from_fn(60.0, 8192, p).unwrap();
        let w = grid.conjugate_w_grid();
        let dist = invert_charfn(&grid, &w).unwrap();
        let dw = grid.conjugate_spacing();
        for (j, &m) in grid.mu().iter().enumerate().skip(1).step_by(37) {
            if j == grid.intervals() {
                continue;
            }
            let forward: Complex64 = w
                .iter()
                .zip(&dist.density)
                .map(|(x, d)| Complex64::new(0.0, m * x).exp() * (d * dw))
                .sum::<Complex64>()
                + dist.atom_weight;
            let err = (forward - grid.values()[j]).norm();
            assert!(err < 1e-8, "μ = {m}: {err:e}");
        }
    }

    #[test]
    fn rejects_incompatible_grids() {
        let grid = gaussian_grid(20.0, 256);
        let dw = grid.conjugate_spacing();
        // wrong spacing
        let bad: Vec<f64> = (0..10).map(|i| i as f64 * dw * 1.5).collect();
        assert!(invert_charfn(&grid, &bad).is_err());
        // off lattice
        let off: Vec<f64> = (0..10).map(|i| (i as f64 + 0.3) * dw).collect();
        assert!(invert_charfn(&grid, &off).is_err());
        // beyond Nyquist
        let far = vec![200.0 * dw];
        assert!(invert_charfn(&grid, &far).is_err());
    }

    #[test]
    fn rejects_malformed_characteristic_grids() {
        let mu = uniform_grid(1.0, 4).unwrap();
        let ones = vec![Complex64::new(1.0, 0.0); 5];
        assert!(CharFnGrid::new(mu.clone(), ones.clone()).is_ok());
        let mut not_one = ones.clone();
        not_one[2] = Complex64::new(0.9, 0.0);
        assert!(CharFnGrid::new(mu.clone(), not_one).is_err());
        let mut not_hermitian = ones.clone();
        not_hermitian[0] = Complex64::new(1.0, 0.1);
        not_hermitian[4] = Complex64::new(1.0, 0.1);
        assert!(CharFnGrid::new(mu.clone(), not_hermitian).is_err());
        let mut skewed = mu.clone();
        skewed[1] += 0.01;
        assert!(CharFnGrid::new(skewed, ones).is_err());
        assert!(uniform_grid(1.0, 3).is_err());
    }

    #[test]
    fn clamps_small_negative_noise_and_flags_ringing() {
        // A box in μ inverts to a sinc with genuine negative lobes.
        let grid = CharFnGrid::from_fn(100.0, 2048, |m| {
            Ok(Complex64::new(if m.abs() <= 5.0 { 1.0 } else { 0.0 }, 0.0))
        })
        .unwrap();
        let w = grid.conjugate_w_grid();
        let dist = invert_charfn(&grid, &w).unwrap();
        assert!(dist.metadata.ringing);
        assert!(dist.metadata.max_negative < 0.0);
    }

    #[test]
    fn edge_model_transform_and_subtraction() {
        let e = EdgeModel { slope: 0.01 / 3.0, scale: 1.0 };
        let tr = e.transform(0.0);
        assert!((tr.re - 0.01).abs() < 1e-17 && tr.im == 0.0);
        let mu = 2.5;
        let re = crate::special_math::integrate_interval(|w| e.density(w) * (mu * w).cos(), 0.0, 60.0, &[], 1e-16, 1e-13, 200).unwrap();
        let im = crate::special_math::integrate_interval(|w| e.density(w) * (mu * w).sin(), 0.0, 60.0, &[], 1e-16, 1e-13, 200).unwrap();
        assert!((e.transform(mu) - Complex64::new(re.value, im.value)).norm() < 1e-14);

        let grid = CharFnGrid::from_fn(400.0, 8192, |m| Ok(0.99 + e.transform(m))).unwrap();
        let w = grid.conjugate_w_grid();
        let plain = invert_charfn(&grid, &w).unwrap();
        let fixed = invert_charfn_with_edge(&grid, &w, Some(e)).unwrap();
        let worst = |d: &WorkDistribution| {
            d.w_grid.iter().zip(&d.density).filter(|(x, _)| **x != 0.0).map(|(x, v)| (v - e.density(*x)).abs()).fold(0.0, f64::max)
        };
        assert!(worst(&fixed) < 1e-14);
        assert!(worst(&plain) > 1e3 * worst(&fixed));
        assert!((fixed.atom_weight - 0.99).abs() < 1e-14);
    }
}
