//! Work distributions, their moments and fluctuation-theorem checks.
//!
//! A distribution is stored as an atom `1 − p` at `W = 0` plus a density on
//! a uniform grid. For the massless field with spherical smearing the
//! second-order density is known in closed form,
//!
//! `P(W) = λ²/(4π²) |χ̃(W)|² |F̃(|W|)|² W/(1 − e^{−βW})`,   `W ≠ 0`,
//!
//! which is what the radial measure of [`crate::charfn`] gives after the
//! substitution `ω = |k|`. The reverse process is taken to be the forward one
//! (the Hamiltonian starts and ends at `H₀`), so `Z₂/Z₁ = 1` throughout.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::charfn::{
    charfn_kms, delta_exponent_integral, envelope_cutoff, perturbative_integral, radial_measure,
    sample_charfn, thermal_measure, Scenario,
};
use crate::field_model::{
    smearing_ft_unchecked, switching_power, thermal_factors, InverseTemperature, SmearingProfile,
    SwitchingProfile,
};
use crate::special_math::{integrate_interval, integrate_radial, invert_charfn_with_edge, CharFnGrid, EdgeModel};
use crate::{Error, Result};

/// Grid parameters recorded with a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionMetadata {
    pub scenario: String,
    pub mu_half_span: f64,
    pub mu_intervals: usize,
    pub w_spacing: f64,
    /// `max |P̃ − atom| / p` over the outer part of the μ grid.
    pub tail_ratio: Option<f64>,
    /// Number of small negative density values set to zero.
    pub clamped: usize,
    /// Most negative density value before clamping.
    pub max_negative: f64,
    /// Set when a negative value exceeded the clamp floor.
    pub ringing: bool,
    pub max_imaginary: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkDistribution {
    /// Probability of `W = 0`.
    pub atom_weight: f64,
    pub w_grid: Vec<f64>,
    pub density: Vec<f64>,
    pub metadata: DistributionMetadata,
}

impl WorkDistribution {
    pub fn spacing(&self) -> f64 {
        self.metadata.w_spacing
    }

    /// `atom + Σ P(W) ΔW`.
    pub fn total_probability(&self) -> f64 {
        self.atom_weight + self.density.iter().sum::<f64>() * self.spacing()
    }

    /// `Σ_{W<0} P(W) ΔW`.
    pub fn negative_mass(&self) -> f64 {
        self.mass_where(|w| w < 0.0)
    }

    /// `Σ_{W>0} P(W) ΔW`.
    pub fn positive_mass(&self) -> f64 {
        self.mass_where(|w| w > 0.0)
    }

    fn mass_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        self.w_grid
            .iter()
            .zip(&self.density)
            .filter(|(w, _)| keep(**w))
            .map(|(_, d)| d)
            .sum::<f64>()
            * self.spacing()
    }

    /// Index and value of the largest density sample.
    pub fn peak(&self) -> (usize, f64) {
        self.density
            .iter()
            .cloned()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }

    /// Discrete forward transform `atom + Σ P(W) e^{iμW} ΔW`.
    pub fn characteristic(&self, mu: f64) -> Complex64 {
        let dw = self.spacing();
        self.w_grid
            .iter()
            .zip(&self.density)
            .map(|(w, d)| Complex64::from_polar(d * dw, mu * w))
            .sum::<Complex64>()
            + self.atom_weight
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub mean: f64,
    pub second_moment: f64,
    /// `⟨W²⟩ − ⟨W⟩²`.
    pub variance: f64,
    /// `⟨e^{−βW}⟩ = P̃(iβ)`; `None` for the vacuum.
    pub jarzynski_value: Option<Complex64>,
    /// `Z₂/Z₁`, read off as the real part of the Jarzynski value.
    pub partition_ratio: Option<f64>,
    /// The same moments from finite differences of `P̃` at `μ = 0`.
    pub fd_mean: f64,
    pub fd_second_moment: f64,
}

impl MomentReport {
    pub fn std_dev(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

fn require_analytic(s: &Scenario) -> Result<()> {
    if !s.field.is_massless() {
        return Err(Error::regime("the closed-form density needs a massless field"));
    }
    if s.is_delta() {
        return Err(Error::regime("the closed-form density is perturbative; delta switching has none"));
    }
    Ok(())
}

/// The non-atomic part of the second-order work density at `W ≠ 0`.
pub fn work_density_analytic(s: &Scenario, w: f64) -> Result<f64> {
    require_analytic(s)?;
    if w == 0.0 {
        return Err(Error::invalid("W = 0 carries the atom; use delta_weight"));
    }
    if !w.is_finite() {
        return Err(Error::invalid(format!("non-finite W = {w}")));
    }
    Ok(analytic_density(s, w))
}

fn analytic_density(s: &Scenario, w: f64) -> f64 {
    let a = w.abs();
    let profile = switching_power(&s.switching, w) * smearing_ft_unchecked(&s.smearing, a).powi(2);
    // W/(1 − e^{−βW}) is W(1 + n) above zero and |W| n below.
    let thermal = match s.field.beta {
        InverseTemperature::Infinite => {
            if w > 0.0 {
                a
            } else {
                0.0
            }
        }
        InverseTemperature::Finite(b) => {
            let n = thermal_factors(b * a).bose_factor;
            if w > 0.0 {
                a * (1.0 + n)
            } else {
                a * n
            }
        }
    };
    s.coupling().powi(2) / (4.0 * PI * PI) * profile * thermal
}

/// Probabilities `(P(W > 0), P(W < 0))` from the second-order theory.
pub fn probability_split(s: &Scenario) -> Result<(f64, f64)> {
    require_analytic(s)?;
    let q = &s.quadrature;
    let k_env = envelope_cutoff(q.k_max, |k| thermal_measure(s, k));
    let up = integrate_interval(|w| analytic_density(s, w), 0.0, k_env, &[], q.abs_tol, q.rel_tol, q.max_subdivisions)?;
    let down = if s.field.beta.is_vacuum() {
        0.0
    } else {
        integrate_interval(|w| analytic_density(s, -w), 0.0, k_env, &[], q.abs_tol, q.rel_tol, q.max_subdivisions)?
            .value
    };
    Ok((up.value, down))
}

/// `1 − p`, the probability that no work is done.
pub fn delta_weight(s: &Scenario) -> Result<f64> {
    let (up, down) = probability_split(s)?;
    let p = up + down;
    if p > 1.0 {
        return Err(Error::RegimeViolation(format!(
            "work probability p = {p} exceeds 1; the second-order result is not valid, use a smaller λ"
        )));
    }
    Ok(1.0 - p)
}

/// The probability `p` of nonzero work, for either regime.
pub fn work_probability(s: &Scenario) -> Result<f64> {
    if s.coupling() == 0.0 {
        return Ok(0.0);
    }
    let lam2 = s.coupling().powi(2);
    if s.is_delta() {
        // The atom of exp(λ² I(μ)) is exp(−λ² ∫dν).
        let total = integrate_radial(|k| radial_measure(s, k), &s.quadrature)?.value;
        return Ok(-(-lam2 * total).exp_m1());
    }
    Ok(lam2 * integrate_radial(|k| thermal_measure(s, k), &s.quadrature)?.value)
}

/// Default number of μ intervals.
pub const DEFAULT_MU_INTERVALS: usize = 1 << 14;
const TAIL_TOL: f64 = 1e-6;
const MAX_SPAN_DOUBLINGS: usize = 3;

/// Half width of the work band resolved by the default grid, as a multiple
/// of the largest mode energy in the measure's support.
fn band_factor(s: &Scenario) -> f64 {
    if s.is_delta() {
        3.0
    } else {
        1.5
    }
}

/// Default half span of the μ grid: the Nyquist band `π N / (2 L)` covers
/// the support of the measure with some margin.
pub fn default_mu_half_span(s: &Scenario, intervals: usize) -> f64 {
    let k_env = envelope_cutoff(s.quadrature.k_max, |k| thermal_measure(s, k));
    let band = band_factor(s) * k_env.hypot(s.field.mass);
    PI * intervals as f64 / (2.0 * band)
}

/// Largest `|P̃ − atom|` over the outer `ATOM_WINDOW` of the grid, relative
/// to `p`.
fn tail_ratio(grid: &CharFnGrid, p: f64) -> f64 {
    let n = grid.intervals();
    let count = ((crate::special_math::fourier::ATOM_WINDOW * n as f64 / 2.0).round() as usize).max(1);
    let atom = grid.tail_level();
    let v = grid.values();
    let worst = v[..count]
        .iter()
        .chain(&v[n + 1 - count..])
        .map(|z| (z - atom).norm())
        .fold(0.0, f64::max);
    if p > 0.0 {
        worst / p
    } else {
        0.0
    }
}

/// Inverts the scenario's characteristic function on a grid of the given
/// size. The span is the default one, doubled (up to three times) until the
/// oscillatory part of `P̃` has decayed below `1e−6·p` at the grid edges.
pub fn distribution_from_charfn_with(s: &Scenario, intervals: usize) -> Result<WorkDistribution> {
    let p = work_probability(s)?;
    let mut half_span = default_mu_half_span(s, intervals);
    let mut grid = sample_charfn(s, half_span, intervals)?;
    let mut ratio = tail_ratio(&grid, p);
    for _ in 0..MAX_SPAN_DOUBLINGS {
        if ratio <= TAIL_TOL {
            break;
        }
        half_span *= 2.0;
        grid = sample_charfn(s, half_span, intervals)?;
        ratio = tail_ratio(&grid, p);
    }
    let w_grid = grid.conjugate_w_grid();
    let edge = threshold_edge(s, p, &grid);
    let mut dist = invert_charfn_with_edge(&grid, &w_grid, edge)?;
    dist.metadata.scenario = s.fingerprint();
    dist.metadata.tail_ratio = Some(ratio);
    Ok(dist)
}

/// On the massless vacuum the density starts linearly at `W = 0⁺`, with
/// slope `λ² lim ν'(k)/k` times the atom for the delta coupling.
fn threshold_edge(s: &Scenario, p: f64, grid: &CharFnGrid) -> Option<EdgeModel> {
    if !(s.field.is_massless() && s.field.beta.is_vacuum()) || p == 0.0 {
        return None;
    }
    let k = 1e-7;
    let mut slope = s.coupling().powi(2) * radial_measure(s, k) / k;
    if s.is_delta() {
        slope *= 1.0 - p;
    }
    let band = grid.conjugate_spacing() * (grid.intervals() / 2) as f64;
    Some(EdgeModel { slope, scale: band / 40.0 })
}

/// [`distribution_from_charfn_with`] on the default `2¹⁴`-interval grid.
pub fn distribution_from_charfn(s: &Scenario) -> Result<WorkDistribution> {
    distribution_from_charfn_with(s, DEFAULT_MU_INTERVALS)
}

const FD_TOL: f64 = 1e-5;

fn increment(s: &Scenario, mu: f64) -> Result<Complex64> {
    if s.is_delta() {
        let lam2 = s.coupling().powi(2);
        let e = lam2 * delta_exponent_integral(s, mu)?;
        // e^z − 1 without cancellation
        let h = (0.5 * e.im).sin();
        Ok(Complex64::new(
            e.re.exp_m1() * e.im.cos() - 2.0 * h * h,
            e.re.exp() * e.im.sin(),
        ))
    } else {
        Ok(s.coupling().powi(2) * perturbative_integral(s, Complex64::new(mu, 0.0), s.field.beta.is_vacuum())?)
    }
}

/// First two moments by direct quadrature, cross-checked against central
/// differences of `P̃` at `μ = 0`, plus the Jarzynski value at finite β.
pub fn moments(s: &Scenario) -> Result<MomentReport> {
    let lam2 = s.coupling().powi(2);
    let q = &s.quadrature;
    let first = lam2 * integrate_radial(|k| radial_measure(s, k) * k.hypot(s.field.mass), q)?.value;
    let second_raw = lam2
        * integrate_radial(
            |k| {
                let w = k.hypot(s.field.mass);
                thermal_measure(s, k) * w * w
            },
            q,
        )?
        .value;
    // For the delta coupling these are the first two cumulants.
    let (mean, second) = if s.is_delta() {
        (first, second_raw + first * first)
    } else {
        (first, second_raw)
    };

    let (fd_mean, fd_second_moment) = if s.coupling() == 0.0 {
        (0.0, 0.0)
    } else {
        let h = 0.02 * mean.abs() / second.abs();
        let g1 = increment(s, h)?;
        let g2 = increment(s, 2.0 * h)?;
        // P̃(−μ) = conj P̃(μ) folds the four-point stencils onto μ > 0.
        let d1 = (16.0 * g1.im - 2.0 * g2.im) / (12.0 * h);
        let d2 = (32.0 * g1.re - 2.0 * g2.re) / (12.0 * h * h);
        (d1, -d2)
    };

    let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
    if rel(fd_mean, mean) > FD_TOL || rel(fd_second_moment, second) > FD_TOL {
        return Err(Error::Inconsistency(format!(
            "finite-difference moments ({fd_mean:e}, {fd_second_moment:e}) disagree with quadrature ({mean:e}, {second:e})"
        )));
    }

    let jarzynski_value = match s.field.beta {
        InverseTemperature::Finite(b) if !s.is_delta() => Some(charfn_kms(s, Complex64::new(0.0, b))?),
        _ => None,
    };
    Ok(MomentReport {
        mean,
        second_moment: second,
        variance: second - mean * mean,
        jarzynski_value,
        partition_ratio: jarzynski_value.map(|z| z.re),
        fd_mean,
        fd_second_moment,
    })
}

/// One row of a detailed-balance check.
#[derive(Debug, Clone, PartialEq)]
pub enum CrooksEntry {
    Checked {
        w: f64,
        /// `ln P(W) − ln P(−W)`.
        log_ratio: f64,
        beta_w: f64,
        /// `log_ratio − βW`.
        deviation: f64,
    },
    Excluded { w: f64, reason: String },
}

impl CrooksEntry {
    pub fn deviation(&self) -> Option<f64> {
        match self {
            Self::Checked { deviation, .. } => Some(*deviation),
            Self::Excluded { .. } => None,
        }
    }
}

/// `ln[P(W)/P(−W)] − βW` from the closed-form density, per sample.
pub fn crooks_check(s: &Scenario, w_samples: &[f64]) -> Result<Vec<CrooksEntry>> {
    require_analytic(s)?;
    let beta = s.field.beta.finite().ok_or_else(|| Error::regime("Crooks check needs a finite β"))?;
    w_samples
        .iter()
        .map(|&w| {
            let fwd = work_density_analytic(s, w)?;
            let rev = work_density_analytic(s, -w)?;
            if !fwd.is_normal() || !rev.is_normal() {
                return Ok(CrooksEntry::Excluded {
                    w,
                    reason: format!("density underflow: P(W) = {fwd:e}, P(-W) = {rev:e}"),
                });
            }
            let log_ratio = fwd.ln() - rev.ln();
            Ok(CrooksEntry::Checked {
                w,
                log_ratio,
                beta_w: beta * w,
                deviation: log_ratio - beta * w,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    /// Standard deviation of the Gaussian switching.
    pub duration: f64,
    pub smear_width: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub ratio: f64,
    pub work_probability: f64,
    /// `⟨W⟩/p`, the mean work given that work was done.
    pub conditional_mean: f64,
}

/// Moments for a list of (switching std, smearing σ) pairs on the base
/// scenario's vacuum.
pub fn localization_sweep(base: &Scenario, widths: &[(f64, f64)]) -> Result<Vec<SweepRow>> {
    if !base.field.beta.is_vacuum() {
        return Err(Error::regime("localization sweep is defined on the vacuum"));
    }
    let (center, norm) = match (&base.switching, &base.smearing) {
        (SwitchingProfile::Gaussian { center, .. }, SmearingProfile::GaussianSpherical { norm, .. }) => {
            (*center, *norm)
        }
        _ => return Err(Error::regime("localization sweep needs Gaussian switching and smearing")),
    };
    widths
        .iter()
        .map(|&(duration, smear_width)| {
            let s = Scenario::new(
                base.field,
                SwitchingProfile::gaussian(center, duration)?,
                SmearingProfile::gaussian(smear_width, norm)?,
            )?
            .with_quadrature(base.quadrature.with_k_max(20.0 / duration.min(smear_width)))?;
            let m = moments(&s)?;
            let p = work_probability(&s)?;
            Ok(SweepRow {
                duration,
                smear_width,
                mean: m.mean,
                std_dev: m.std_dev(),
                ratio: m.std_dev() / m.mean,
                work_probability: p,
                conditional_mean: m.mean / p,
            })
        })
        .collect()
}
