//! Characteristic functions `P̃(μ) = ∫ P(W) e^{iμW} dW` of the work done by
//! the localized unitary.
//!
//! Two regimes are covered:
//!
//! - perturbative (smooth or tabulated switching), to second order in λ, on
//!   a KMS state or the vacuum:
//!   `P̃(μ) = 1 + λ² ∫ dν(k) [coth(βω/2)(cos μω − 1) + i sin μω]`;
//! - the instantaneous coupling `χ = δ(t)` on the vacuum, exactly:
//!   `P̃(μ) = exp[λ² ∫ dν(k) (e^{iμω} − 1)]`.
//!
//! Both use the same radial measure, see [`radial_measure`].

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::field_model::{
    smearing_ft_unchecked, switching_power, thermal_factors, FieldSpec, InverseTemperature,
    SmearingNorm, SmearingProfile, SwitchingProfile,
};
use crate::special_math::{dawson, gauss_legendre, integrate_interval, integrate_radial_complex, CharFnGrid, QuadratureSpec};
use crate::{Error, Result};

/// Fraction of the measure's peak below which it counts as negligible when
/// locating its support.
const ENVELOPE_FLOOR: f64 = 1e-18;
const ENVELOPE_SCAN: usize = 4096;
/// Below this momentum the massless thermal weight uses its series.
const SMALL_K: f64 = 1e-6;
const MAX_BREAKS: usize = 20_000;
/// Beyond this `|Im μ|·ω` the hyperbolic functions are evaluated in log space.
const LOG_SPACE_FROM: f64 = 700.0;

/// All parameters of one localized unitary acting on one field state.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub field: FieldSpec,
    pub switching: SwitchingProfile,
    pub smearing: SmearingProfile,
    pub quadrature: QuadratureSpec,
}

impl Scenario {
    /// Builds a scenario with the default quadrature and cutoff.
    pub fn new(field: FieldSpec, switching: SwitchingProfile, smearing: SmearingProfile) -> Result<Self> {
        field.validate()?;
        switching.validate()?;
        smearing.validate()?;
        let quadrature = QuadratureSpec::default().with_k_max(default_k_max(&switching, &smearing));
        Ok(Self {
            field,
            switching,
            smearing,
            quadrature,
        })
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureSpec) -> Result<Self> {
        quadrature.validate()?;
        self.quadrature = quadrature;
        Ok(self)
    }

    /// Gaussian switching of duration `T = 1` on a massless field, smeared
    /// by a `σ = 1` Gaussian.
    pub fn reference(beta: InverseTemperature, coupling: f64) -> Result<Self> {
        Self::new(
            FieldSpec::massless(beta, coupling)?,
            SwitchingProfile::standard(1.0)?,
            SmearingProfile::gaussian(1.0, SmearingNorm::Linear)?,
        )
    }

    /// Delta switching on the massless vacuum with a `σ` Gaussian smearing.
    pub fn delta(coupling: f64, sigma: f64, norm: SmearingNorm) -> Result<Self> {
        Self::new(
            FieldSpec::massless(InverseTemperature::Infinite, coupling)?,
            SwitchingProfile::Delta,
            SmearingProfile::gaussian(sigma, norm)?,
        )
    }

    pub fn coupling(&self) -> f64 {
        self.field.coupling
    }

    pub fn is_delta(&self) -> bool {
        self.switching.is_delta()
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        let mut s = self.clone();
        s.field.coupling = coupling;
        s
    }

    pub fn with_beta(&self, beta: InverseTemperature) -> Self {
        let mut s = self.clone();
        s.field.beta = beta;
        s
    }

    /// Stable one-line description used to tag outputs.
    pub fn fingerprint(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = &self.quadrature;
        write!(
            f,
            "mass={};beta={};lambda={};switching={};smearing={};k_max={};abs_tol={:e};rel_tol={:e};max_subdivisions={}",
            self.field.mass,
            self.field.beta,
            self.field.coupling,
            self.switching,
            self.smearing,
            q.k_max,
            q.abs_tol,
            q.rel_tol,
            q.max_subdivisions
        )
    }
}

/// Radial cutoff `max(cutoff(F), cutoff(χ))`; 20/σ and 20/s for Gaussians.
pub fn default_k_max(switching: &SwitchingProfile, smearing: &SmearingProfile) -> f64 {
    smearing.default_cutoff().max(switching.default_cutoff().unwrap_or(0.0))
}

/// Density of the vacuum measure in `k = |k|`:
///
/// `d³k / ((2π)³ 2ω) |χ̃(ω)|² |F̃(k)|²  =  dk · 4π k² / ((2π)³ 2ω) · |χ̃|² |F̃|²`,
///
/// the angular integral giving the `4π`. For delta switching `|χ̃|² = 1`.
pub fn radial_measure(s: &Scenario, k: f64) -> f64 {
    let omega = k.hypot(s.field.mass);
    if omega == 0.0 {
        return 0.0;
    }
    let profile = switching_power(&s.switching, omega) * smearing_ft_unchecked(&s.smearing, k).powi(2);
    4.0 * PI / (2.0 * PI).powi(3) * k * k / (2.0 * omega) * profile
}

/// The measure weighted by `coth(βω/2)`.
pub(crate) fn thermal_measure(s: &Scenario, k: f64) -> f64 {
    let beta = match s.field.beta {
        InverseTemperature::Infinite => return radial_measure(s, k),
        InverseTemperature::Finite(b) => b,
    };
    let omega = k.hypot(s.field.mass);
    if omega == 0.0 && s.field.is_massless() {
        return thermal_limit_at_zero(s, beta);
    }
    let profile = switching_power(&s.switching, omega) * smearing_ft_unchecked(&s.smearing, k).powi(2);
    let radial = if s.field.is_massless() && k < SMALL_K {
        // k²/(2ω)·coth(βk/2) = 1/β + βk²/12 + O(k⁴)
        1.0 / beta + beta * k * k / 12.0
    } else {
        k * k / (2.0 * omega) * thermal_factors(beta * omega).coth_factor
    };
    4.0 * PI / (2.0 * PI).powi(3) * radial * profile
}

fn thermal_limit_at_zero(s: &Scenario, beta: f64) -> f64 {
    let profile = switching_power(&s.switching, 0.0) * smearing_ft_unchecked(&s.smearing, 0.0).powi(2);
    4.0 * PI / (2.0 * PI).powi(3) / beta * profile
}

/// Momentum beyond which `m(k)` stays below `ENVELOPE_FLOOR` of its peak on
/// `[0, k_max]`.
pub(crate) fn envelope_cutoff(k_max: f64, m: impl Fn(f64) -> f64) -> f64 {
    let step = k_max / ENVELOPE_SCAN as f64;
    let samples: Vec<f64> = (1..=ENVELOPE_SCAN).map(|j| m(j as f64 * step).abs()).collect();
    let peak = samples.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return k_max;
    }
    let last = samples.iter().rposition(|&v| v >= ENVELOPE_FLOOR * peak).unwrap_or(0);
    ((last + 2) as f64 * step).min(k_max)
}

/// Panel edges about one oscillation period apart on `[0, k_env]`.
fn oscillation_breaks(k_env: f64, mu_re: f64) -> Vec<f64> {
    let mut breaks = vec![k_env];
    if mu_re != 0.0 {
        let period = 2.0 * PI / mu_re.abs();
        let count = ((k_env / period).ceil() as usize).min(MAX_BREAKS);
        if count > 1 {
            let width = k_env / count as f64;
            breaks.extend((1..count).map(|j| j as f64 * width));
        }
    }
    breaks
}

/// `cosh y`, saturating instead of overflowing.
fn scaled_cosh(y: f64) -> f64 {
    if y.abs() <= LOG_SPACE_FROM {
        y.cosh()
    } else {
        (y.abs() - 2f64.ln()).exp()
    }
}

/// `wc·(cos z − 1) + i·ws·sin z` for `z = x + iy`, stable for large `|y|`.
fn oscillating_parts(wc: f64, ws: f64, x: f64, y: f64) -> Complex64 {
    if y.abs() <= LOG_SPACE_FROM {
        let z = Complex64::new(x, y);
        let h = (0.5 * z).sin();
        return -2.0 * wc * h * h + Complex64::i() * ws * z.sin();
    }
    // cosh y ≈ |sinh y| ≈ e^{|y|}/2; sign(y) picks the sinh branch.
    let sgn = y.signum();
    let big = |w: f64| if w == 0.0 { 0.0 } else { (w.abs().ln() + y.abs() - 2f64.ln()).exp() * w.signum() };
    let (c, s) = (big(wc), big(ws));
    let cos_z = Complex64::new(x.cos() * c, -x.sin() * c * sgn);
    let sin_z = Complex64::new(x.sin() * s, x.cos() * s * sgn);
    cos_z + Complex64::i() * sin_z
}

fn require_perturbative(s: &Scenario) -> Result<()> {
    if s.is_delta() {
        return Err(Error::regime(
            "delta switching has no perturbative characteristic function; use the delta-coupling evaluators",
        ));
    }
    Ok(())
}

fn require_finite(mu: Complex64) -> Result<()> {
    if !(mu.re.is_finite() && mu.im.is_finite()) {
        return Err(Error::invalid(format!("non-finite μ = {mu}")));
    }
    Ok(())
}

/// `∫ dν [coth(cos μω − 1) + i sin μω]` (without the λ²).
pub(crate) fn perturbative_integral(s: &Scenario, mu: Complex64, vacuum: bool) -> Result<Complex64> {
    let mass = s.field.mass;
    let plain = |k: f64| radial_measure(s, k);
    let thermal = |k: f64| if vacuum { radial_measure(s, k) } else { thermal_measure(s, k) };
    // Size of the integrand without the cancellations, e^{|Im μ| ω} included.
    let magnitude = |k: f64| {
        let y = mu.im * k.hypot(mass);
        (thermal(k).abs() + plain(k).abs()) * scaled_cosh(y)
    };
    let k_env = envelope_cutoff(s.quadrature.k_max, magnitude);
    let q = &s.quadrature;
    let scale = integrate_interval(magnitude, 0.0, k_env, &[], q.abs_tol, 1e-6, q.max_subdivisions)?.value;
    let spec = QuadratureSpec {
        abs_tol: q.abs_tol.max(q.rel_tol * scale),
        ..*q
    };
    let breaks = oscillation_breaks(k_env, mu.re);
    let est = integrate_radial_complex(
        |k| {
            let omega = k.hypot(mass);
            oscillating_parts(thermal(k), plain(k), mu.re * omega, mu.im * omega)
        },
        &spec,
        &breaks,
    )?;
    Ok(est.value)
}

/// Second-order characteristic function on the KMS state of `s.field`.
///
/// Complex `μ` is accepted on the strip `0 ≤ Im μ ≤ β` (`Im μ ≥ 0` for the
/// vacuum), which contains the Jarzynski point `μ = iβ`.
pub fn charfn_kms(s: &Scenario, mu: Complex64) -> Result<Complex64> {
    require_perturbative(s)?;
    require_finite(mu)?;
    let beta = s.field.beta.as_f64();
    let slack = 1e-12 * beta.min(1.0);
    if mu.im < -slack || mu.im > beta + slack * beta {
        return Err(Error::regime(format!(
            "Im μ = {} is outside the strip [0, β = {}]",
            mu.im, s.field.beta
        )));
    }
    if mu == Complex64::new(0.0, 0.0) || s.coupling() == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let lam2 = s.coupling().powi(2);
    Ok(1.0 + lam2 * perturbative_integral(s, mu, s.field.beta.is_vacuum())?)
}

/// The `β → ∞` limit of [`charfn_kms`] for the same field and profiles:
/// the thermal weight is replaced by 1 whatever `s.field.beta` says.
pub fn charfn_vacuum(s: &Scenario, mu: Complex64) -> Result<Complex64> {
    charfn_kms(&s.with_beta(InverseTemperature::Infinite), mu)
}

fn require_delta_vacuum(s: &Scenario) -> Result<()> {
    if !s.is_delta() {
        return Err(Error::regime("delta-coupling evaluators need delta switching"));
    }
    if !s.field.beta.is_vacuum() {
        return Err(Error::regime("delta coupling is only available on the vacuum (β = ∞)"));
    }
    Ok(())
}

/// `∫ dν (e^{iμω} − 1)` for delta switching (without the λ²).
pub(crate) fn delta_exponent_integral(s: &Scenario, mu: f64) -> Result<Complex64> {
    perturbative_integral(s, Complex64::new(mu, 0.0), true)
}

/// `exp[λ² ∫ dν (e^{iμω} − 1)]` by radial quadrature of the exponent.
pub fn charfn_delta_numeric(s: &Scenario, mu: Complex64) -> Result<Complex64> {
    require_delta_vacuum(s)?;
    require_finite(mu)?;
    if mu.im != 0.0 {
        return Err(Error::regime("delta-coupling characteristic function is restricted to real μ"));
    }
    if mu.re == 0.0 || s.coupling() == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok((s.coupling().powi(2) * delta_exponent_integral(s, mu.re)?).exp())
}

/// Closed form of the delta-coupling characteristic function for the
/// massless vacuum and a unit-integral Gaussian smearing of width `σ`:
///
/// `P̃(μ) = exp[λ²/(4π²) (−μ D(μ/2σ)/(2σ³) + i √π μ e^{−μ²/4σ²}/(4σ³))]`
///
/// with `D` the Dawson integral.
pub fn charfn_delta_closed(lambda: f64, sigma: f64, mu: f64) -> Result<Complex64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("σ must be > 0, got {sigma}")));
    }
    if !lambda.is_finite() || !mu.is_finite() {
        return Err(Error::invalid("λ and μ must be finite"));
    }
    let u = mu / (2.0 * sigma);
    let s3 = sigma.powi(3);
    let re = -mu * dawson(u)? / (2.0 * s3);
    let im = PI.sqrt() * mu * (-u * u).exp() / (4.0 * s3);
    Ok((lambda * lambda / (4.0 * PI * PI) * Complex64::new(re, im)).exp())
}

/// [`charfn_delta_closed`] for a scenario: the coupling is rescaled by
/// `F̃(0)` so any Gaussian normalization maps onto the unit-integral one.
pub fn charfn_delta_closed_for(s: &Scenario, mu: f64) -> Result<Complex64> {
    require_delta_vacuum(s)?;
    if !s.field.is_massless() {
        return Err(Error::regime("the closed form needs a massless field"));
    }
    match s.smearing {
        SmearingProfile::GaussianSpherical { sigma, .. } => {
            charfn_delta_closed(s.coupling() * s.smearing.amplitude(), sigma, mu)
        }
        _ => Err(Error::regime("the closed form needs a Gaussian smearing")),
    }
}

/// The characteristic function appropriate to the scenario's regime.
pub fn charfn(s: &Scenario, mu: Complex64) -> Result<Complex64> {
    if s.is_delta() {
        charfn_delta_numeric(s, mu)
    } else {
        charfn_kms(s, mu)
    }
}

/// Composite Gauss-Legendre rule used for whole μ grids.
struct BatchRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

const BATCH_ORDER: usize = 20;
const RESEED_EVERY: usize = 64;

impl BatchRule {
    fn new(k_env: f64, panel_width: f64) -> Self {
        let panels = ((k_env / panel_width).ceil() as usize).max(8);
        let h = k_env / panels as f64;
        let (x, w) = gauss_legendre(BATCH_ORDER);
        let mut nodes = Vec::with_capacity(panels * BATCH_ORDER);
        let mut weights = Vec::with_capacity(panels * BATCH_ORDER);
        for p in 0..panels {
            let a = p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(a + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        Self { nodes, weights }
    }
}

/// Samples `P̃` on `intervals + 1` points of `[-half_span, half_span]`.
///
/// All points share one fixed composite Gauss-Legendre rule on the support
/// of the measure, fine enough to resolve `e^{iμω}` at `|μ| = half_span`;
/// the phases are advanced by recurrence along the grid. Negative μ follow
/// from `P̃(−μ) = conj P̃(μ)`.
pub fn sample_charfn(s: &Scenario, half_span: f64, intervals: usize) -> Result<CharFnGrid> {
    if !(half_span > 0.0 && half_span.is_finite()) || intervals < 2 || !intervals.is_multiple_of(2) {
        return Err(Error::invalid("μ grid needs a positive span and an even interval count"));
    }
    // Validates regime as a side effect and sets the conventions.
    let delta = s.is_delta();
    if delta {
        require_delta_vacuum(s)?;
    }
    let half = intervals / 2;
    let dmu = half_span / half as f64;
    let mu: Vec<f64> = (0..=intervals).map(|j| (j as f64 - half as f64) * dmu).collect();
    if s.coupling() == 0.0 {
        return CharFnGrid::new(mu, vec![Complex64::new(1.0, 0.0); intervals + 1]);
    }

    let vacuum = s.field.beta.is_vacuum();
    let thermal = |k: f64| if vacuum { radial_measure(s, k) } else { thermal_measure(s, k) };
    let k_env = envelope_cutoff(s.quadrature.k_max, thermal);
    let rule = BatchRule::new(k_env, 1.5 * PI / half_span);

    let mut re = vec![0.0; half + 1];
    let mut im = vec![0.0; half + 1];
    for (&k, &w) in rule.nodes.iter().zip(&rule.weights) {
        let omega = k.hypot(s.field.mass);
        let wc = w * thermal(k);
        let ws = w * radial_measure(s, k);
        if wc == 0.0 && ws == 0.0 {
            continue;
        }
        let step = Complex64::from_polar(1.0, dmu * omega);
        let mut z = Complex64::new(1.0, 0.0);
        for m in 1..=half {
            if m % RESEED_EVERY == 0 {
                z = Complex64::from_polar(1.0, m as f64 * dmu * omega);
            } else {
                z *= step;
            }
            // cos − 1 = −2 sin²(θ/2) = −|z − 1|²/2
            let d = z - 1.0;
            re[m] -= 0.5 * wc * d.norm_sqr();
            im[m] += ws * z.im;
        }
    }

    let lam2 = s.coupling().powi(2);
    let positive: Vec<Complex64> = (0..=half)
        .map(|m| {
            if m == 0 {
                return Complex64::new(1.0, 0.0);
            }
            let inc = lam2 * Complex64::new(re[m], im[m]);
            if delta {
                inc.exp()
            } else {
                1.0 + inc
            }
        })
        .collect();
    let values = (0..=intervals)
        .map(|j| {
            if j >= half {
                positive[j - half]
            } else {
                positive[half - j].conj()
            }
        })
        .collect();
    CharFnGrid::new(mu, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::special_math::integrate_radial;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, Normal};

    fn reference(beta: f64) -> Scenario {
        Scenario::reference(InverseTemperature::new(beta).unwrap(), 0.01).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn trivial_points() {
        let s = reference(1.0);
        assert_eq!(charfn_kms(&s, re(0.0)).unwrap(), re(1.0));
        assert_eq!(charfn_kms(&s.with_coupling(0.0), re(3.0)).unwrap(), re(1.0));
        let d = Scenario::delta(0.1, 1.0, SmearingNorm::Volume).unwrap();
        assert_eq!(charfn_delta_numeric(&d, re(0.0)).unwrap(), re(1.0));
        assert_eq!(charfn_delta_numeric(&d.with_coupling(0.0), re(2.0)).unwrap(), re(1.0));
        assert_eq!(charfn_delta_closed(0.1, 1.0, 0.0).unwrap(), re(1.0));
    }

    #[test]
    fn regime_guards() {
        let s = reference(1.0);
        let d = Scenario::delta(0.1, 1.0, SmearingNorm::Volume).unwrap();
        assert!(matches!(charfn_kms(&d, re(1.0)), Err(Error::InvalidRegime(_))));
        assert!(matches!(charfn_delta_numeric(&s, re(1.0)), Err(Error::InvalidRegime(_))));
        let warm = d.with_beta(InverseTemperature::Finite(1.0));
        assert!(matches!(charfn_delta_numeric(&warm, re(1.0)), Err(Error::InvalidRegime(_))));
        assert!(matches!(
            charfn_delta_numeric(&d, Complex64::new(1.0, 0.5)),
            Err(Error::InvalidRegime(_))
        ));
        assert!(charfn_kms(&s, Complex64::new(0.0, 1.5)).is_err());
        assert!(charfn_kms(&s, Complex64::new(0.0, -0.1)).is_err());
        assert!(charfn_kms(&s, re(f64::NAN)).is_err());
        assert!(charfn_delta_closed(0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn frozen_values() {
        // Reference values from an independent high-precision evaluation.
        let kms = charfn_kms(&reference(1.0), re(1.0)).unwrap();
        assert!((kms - Complex64::new(0.999_998_118_761_436_8, 1.492_791_725_700_455e-6)).norm() < 1e-15);
        let vac = charfn_vacuum(&reference(1.0), re(1.0)).unwrap();
        assert!((vac - Complex64::new(0.999_999_085_736_897_3, 1.492_791_725_700_455e-6)).norm() < 1e-15);
        let d = Scenario::delta(0.1, 1.0, SmearingNorm::Volume).unwrap();
        let frozen = [
            (0.5, Complex64::new(0.999_984_810_733_157_9, 5.271_997_689_559_146e-5)),
            (1.0, Complex64::new(0.999_946_242_128_445_4, 8.740_942_061_351_292e-5)),
            (2.0, Complex64::new(0.999_863_708_747_184_6, 8.257_175_750_669_73e-5)),
        ];
        for (mu, want) in frozen {
            let num = charfn_delta_numeric(&d, re(mu)).unwrap();
            let closed = charfn_delta_closed(0.1, 1.0, mu).unwrap();
            assert!((num - want).norm() < 1e-14, "μ = {mu}: {num}");
            assert!((closed - want).norm() < 1e-14, "μ = {mu}: {closed}");
        }
    }

    #[test]
    fn monte_carlo_oracle_at_reference_point() {
        // Importance-sample the 3D momentum integral with a Gaussian of
        // width τ per component.
        let s = reference(1.0);
        let lam2 = 1e-4;
        let tau = 0.8;
        let normal = Normal::new(0.0, tau).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_2024);
        let n = 10_000_000usize;
        let (mut sum_re, mut sum_im, mut sq_re, mut sq_im) = (0.0, 0.0, 0.0, 0.0);
        let norm3 = (2.0 * PI * tau * tau).powf(1.5);
        for _ in 0..n {
            let (x, y, z): (f64, f64, f64) = (normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
            let k2 = x * x + y * y + z * z;
            let k = k2.sqrt();
            let q = (-0.5 * k2 / (tau * tau)).exp() / norm3;
            let profile = switching_power(&s.switching, k) * smearing_ft_unchecked(&s.smearing, k).powi(2);
            let base = profile / ((2.0 * PI).powi(3) * 2.0 * k) / q;
            let coth = thermal_factors(k).coth_factor;
            let fr = base * coth * (k.cos() - 1.0);
            let fi = base * k.sin();
            sum_re += fr;
            sum_im += fi;
            sq_re += fr * fr;
            sq_im += fi * fi;
        }
        let nf = n as f64;
        let (mean_re, mean_im) = (sum_re / nf, sum_im / nf);
        let se_re = ((sq_re / nf - mean_re * mean_re) / nf).sqrt();
        let se_im = ((sq_im / nf - mean_im * mean_im) / nf).sqrt();
        let quad = (charfn_kms(&s, re(1.0)).unwrap() - 1.0) / lam2;
        assert!((quad.re - mean_re).abs() < 5.0 * se_re, "re {} vs {mean_re} ± {se_re}", quad.re);
        assert!((quad.im - mean_im).abs() < 5.0 * se_im, "im {} vs {mean_im} ± {se_im}", quad.im);
        assert!(se_re < 1e-3 * mean_re.abs());
    }

    #[test]
    fn cold_limit_reaches_vacuum() {
        let cold = charfn_kms(&reference(1e3), re(1.0)).unwrap();
        let vac = charfn_vacuum(&reference(1.0), re(1.0)).unwrap();
        assert!((cold - vac).norm() <= 1e-6);
    }

    #[test]
    fn imaginary_part_is_temperature_independent() {
        for &mu in &[0.3, 1.0, 4.0] {
            let a = charfn_kms(&reference(0.5), re(mu)).unwrap();
            let b = charfn_vacuum(&reference(0.5), re(mu)).unwrap();
            assert!((a.im - b.im).abs() <= 1e-12 * b.im.abs(), "μ = {mu}");
        }
    }

    #[test]
    fn jarzynski_point() {
        for &beta in &[0.5, 1.0, 2.0] {
            let v = charfn_kms(&reference(beta), Complex64::new(0.0, beta)).unwrap();
            assert!((v - 1.0).norm() < 1e-12, "β = {beta}: {v}");
            // The cancellation itself, without the λ² that hides it under 1.
            let s = reference(beta);
            let total = integrate_radial(|k| thermal_measure(&s, k), &s.quadrature).unwrap().value;
            let residual = perturbative_integral(&s, Complex64::new(0.0, beta), false).unwrap();
            assert!(residual.norm() <= 1e-10 * total, "β = {beta}: {residual}");
        }
    }

    #[test]
    fn kms_crossing_symmetry() {
        let s = reference(1.0);
        for j in 0..15 {
            let mu = -7.0 + j as f64;
            let a = charfn_kms(&s, re(mu)).unwrap();
            let b = charfn_kms(&s, Complex64::new(-mu, 1.0)).unwrap();
            assert!((a - b).norm() < 1e-14, "μ = {mu}");
        }
    }

    #[test]
    fn large_imaginary_shift_is_finite() {
        let s = Scenario::reference(InverseTemperature::Finite(5.0), 0.01).unwrap();
        let v = charfn_kms(&s, Complex64::new(0.0, 5.0)).unwrap();
        assert!((v - 1.0).norm() < 1e-10, "{v}");
        // Beyond e^{700} the integrand is assembled in log space.
        let parts = oscillating_parts(1e-300, 2e-300, 0.3, 720.0);
        let direct = |y: f64| {
            let z = Complex64::new(0.3, y);
            (z.cos() - 1.0) + Complex64::i() * 2.0 * z.sin()
        };
        let scale = (-720f64 + 700.0).exp();
        let want = direct(700.0) * 1e-300 / scale;
        assert!((parts - want).norm() / want.norm() < 1e-12);
    }

    #[test]
    fn massive_field_runs_and_small_k_series_is_continuous() {
        let mut s = reference(1.0);
        s.field.mass = 0.5;
        let v = charfn_kms(&s, re(1.0)).unwrap();
        assert!(v.norm() <= 1.0 && v.im > 0.0);
        let s = reference(2.0);
        let a = thermal_measure(&s, SMALL_K * (1.0 - 1e-9));
        let b = thermal_measure(&s, SMALL_K * (1.0 + 1e-9));
        assert!((a - b).abs() <= 1e-9 * a);
        assert!((thermal_measure(&s, 0.0) - a).abs() <= 1e-9 * a);
    }

    #[test]
    fn batch_sampler_matches_pointwise() {
        for s in [reference(1.0), reference(f64::INFINITY), Scenario::delta(0.1, 1.0, SmearingNorm::Linear).unwrap()] {
            let grid = sample_charfn(&s, 200.0, 2048).unwrap();
            for j in (0..=2048).step_by(97) {
                let mu = grid.mu()[j];
                let want = charfn(&s, re(mu)).unwrap();
                let got = grid.values()[j];
                assert!((got - want).norm() < 1e-13, "{s} μ = {mu}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn closed_form_rescales_normalization() {
        let lin = Scenario::delta(0.1, 1.0, SmearingNorm::Linear).unwrap();
        for &mu in &[-3.0, 0.7, 5.0] {
            let a = charfn_delta_closed_for(&lin, mu).unwrap();
            let b = charfn_delta_numeric(&lin, re(mu)).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn hermitian_and_bounded(mu in -20.0f64..20.0, beta in 0.3f64..5.0) {
            let s = reference(beta);
            let a = charfn_kms(&s, re(mu)).unwrap();
            let b = charfn_kms(&s, re(-mu)).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-15);
            prop_assert!(a.norm() <= 1.0 + 1e-9);
            prop_assert!(a.re <= 1.0);
            let d = Scenario::delta(0.1, 1.0, SmearingNorm::Volume).unwrap();
            let c = charfn_delta_closed(0.1, 1.0, mu).unwrap();
            prop_assert!(c.norm() <= 1.0);
            let e = charfn_delta_numeric(&d, re(mu)).unwrap();
            let f = charfn_delta_numeric(&d, re(-mu)).unwrap();
            prop_assert!((e - f.conj()).norm() < 1e-15);
        }
    }
}
