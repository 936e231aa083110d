//! The free scalar field, its thermal state and the spacetime profiles of the
//! localized unitary.
//!
//! Fourier conventions: `χ̃(ω) = ∫ dt χ(t) e^{iωt}` and
//! `F̃(k) = ∫ d³x F(x) e^{-ik·x}`. Both profiles are real, so
//! `χ̃(-ω) = conj χ̃(ω)` and `F̃` is real and even for spherical `F`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::{Error, Result};

/// Inverse temperature of the KMS state; `Infinite` is the vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseTemperature {
    Finite(f64),
    Infinite,
}

impl InverseTemperature {
    /// `f64::INFINITY` maps to the vacuum.
    pub fn new(beta: f64) -> Result<Self> {
        if beta == f64::INFINITY {
            Ok(Self::Infinite)
        } else if beta > 0.0 && beta.is_finite() {
            Ok(Self::Finite(beta))
        } else {
            Err(Error::invalid(format!("inverse temperature must be > 0 or infinite, got {beta}")))
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Self::Finite(b) => Some(b),
            Self::Infinite => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for InverseTemperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(b) => write!(f, "{b}"),
            Self::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub mass: f64,
    pub beta: InverseTemperature,
    /// Coupling strength λ.
    pub coupling: f64,
}

impl FieldSpec {
    pub fn new(mass: f64, beta: InverseTemperature, coupling: f64) -> Result<Self> {
        let spec = Self { mass, beta, coupling };
        spec.validate()?;
        Ok(spec)
    }

    pub fn massless(beta: InverseTemperature, coupling: f64) -> Result<Self> {
        Self::new(0.0, beta, coupling)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            return Err(Error::invalid(format!("mass must be >= 0, got {}", self.mass)));
        }
        if let InverseTemperature::Finite(b) = self.beta {
            InverseTemperature::new(b)?;
        }
        if !self.coupling.is_finite() {
            return Err(Error::invalid("coupling must be finite"));
        }
        Ok(())
    }

    pub fn is_massless(&self) -> bool {
        self.mass == 0.0
    }
}

/// Uniformly sampled real function, `x_j = start + j·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    pub start: f64,
    pub step: f64,
    pub samples: Vec<f64>,
}

impl Tabulated {
    pub fn new(start: f64, step: f64, samples: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() {
            return Err(Error::invalid("tabulated profile needs a finite start and positive step"));
        }
        if samples.len() < 2 {
            return Err(Error::invalid("tabulated profile needs at least two samples"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("tabulated profile samples must be finite reals"));
        }
        Ok(Self { start, step, samples })
    }

    /// Trapezoid weight of sample `j`.
    fn weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.samples.len() {
            0.5 * self.step
        } else {
            self.step
        }
    }

    fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(|(j, &v)| (self.start + j as f64 * self.step, v, self.weight(j)))
    }
}

/// Temporal profile χ(t) of the interaction.
#[derive(Debug, Clone, PartialEq)]
pub enum SwitchingProfile {
    /// `χ(t) = exp(-(t - center)² / (2 width²))`, unit peak.
    Gaussian { center: f64, width: f64 },
    /// `χ(t) = δ(t)`: an instantaneous kick.
    Delta,
    /// Samples of χ(t); assumed to vanish outside the table.
    Tabulated(Tabulated),
}

impl SwitchingProfile {
    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        let p = Self::Gaussian { center, width };
        p.validate()?;
        Ok(p)
    }

    /// The switching `exp[-(t - T/2)² · 72/T²]`, i.e. centre `T/2` and
    /// standard deviation `T/12`.
    pub fn standard(duration: f64) -> Result<Self> {
        Self::gaussian(0.5 * duration, duration / 12.0)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { center, width } => {
                if !center.is_finite() || !(*width > 0.0 && width.is_finite()) {
                    return Err(Error::invalid(format!(
                        "gaussian switching needs finite centre and width > 0, got ({center}, {width})"
                    )));
                }
            }
            Self::Delta => {}
            Self::Tabulated(t) => {
                Tabulated::new(t.start, t.step, t.samples.clone())?;
            }
        }
        Ok(())
    }

    pub fn is_delta(&self) -> bool {
        matches!(self, Self::Delta)
    }

    /// χ(t); `None` for the delta profile.
    pub fn value(&self, t: f64) -> Option<f64> {
        match self {
            Self::Gaussian { center, width } => {
                let u = (t - center) / width;
                Some((-0.5 * u * u).exp())
            }
            Self::Delta => None,
            Self::Tabulated(tab) => {
                let x = (t - tab.start) / tab.step;
                if x < 0.0 || x > (tab.samples.len() - 1) as f64 {
                    return Some(0.0);
                }
                let j = (x.floor() as usize).min(tab.samples.len() - 2);
                let frac = x - j as f64;
                Some(tab.samples[j] * (1.0 - frac) + tab.samples[j + 1] * frac)
            }
        }
    }

    /// Radial cutoff beyond which `|χ̃|²` is negligible, if the profile
    /// constrains it.
    pub fn default_cutoff(&self) -> Option<f64> {
        match self {
            Self::Gaussian { width, .. } => Some(20.0 / width),
            Self::Delta => None,
            Self::Tabulated(t) => Some(PI / t.step),
        }
    }
}

impl fmt::Display for SwitchingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { center, width } => write!(f, "gaussian(center={center},width={width})"),
            Self::Delta => write!(f, "delta"),
            Self::Tabulated(t) => write!(f, "tabulated(start={},step={},n={})", t.start, t.step, t.samples.len()),
        }
    }
}

/// Normalization of the Gaussian smearing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmearingNorm {
    /// `F(r) = e^{-r²/2σ²} / √(2πσ²)`, so `F̃(0) = 2πσ²`.
    Linear,
    /// `F(r) = e^{-r²/2σ²} / (2πσ²)^{3/2}`, unit spatial integral, `F̃(0) = 1`.
    Volume,
}

impl fmt::Display for SmearingNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Volume => "volume",
        })
    }
}

/// Spherically symmetric spatial profile F(r).
#[derive(Debug, Clone, PartialEq)]
pub enum SmearingProfile {
    GaussianSpherical { sigma: f64, norm: SmearingNorm },
    /// Samples of F(r) at `r_j = j·step` (the table's `start` must be 0);
    /// assumed to vanish beyond the last sample.
    TabulatedRadial(Tabulated),
}

impl SmearingProfile {
    pub fn gaussian(sigma: f64, norm: SmearingNorm) -> Result<Self> {
        let p = Self::GaussianSpherical { sigma, norm };
        p.validate()?;
        Ok(p)
    }

    pub fn tabulated(step: f64, samples: Vec<f64>) -> Result<Self> {
        Ok(Self::TabulatedRadial(Tabulated::new(0.0, step, samples)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::GaussianSpherical { sigma, .. } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid(format!("gaussian smearing needs sigma > 0, got {sigma}")));
                }
            }
            Self::TabulatedRadial(t) => {
                if t.start != 0.0 {
                    return Err(Error::invalid("radial table must start at r = 0"));
                }
                Tabulated::new(t.start, t.step, t.samples.clone())?;
            }
        }
        Ok(())
    }

    /// F(r) for a radius `r >= 0`.
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Self::GaussianSpherical { sigma, norm } => {
                let s2 = sigma * sigma;
                let pre = match norm {
                    SmearingNorm::Linear => 1.0 / (2.0 * PI * s2).sqrt(),
                    SmearingNorm::Volume => (2.0 * PI * s2).powf(-1.5),
                };
                pre * (-0.5 * r * r / s2).exp()
            }
            Self::TabulatedRadial(t) => {
                let x = r / t.step;
                if x > (t.samples.len() - 1) as f64 {
                    return 0.0;
                }
                let j = (x.floor() as usize).min(t.samples.len() - 2);
                let frac = x - j as f64;
                t.samples[j] * (1.0 - frac) + t.samples[j + 1] * frac
            }
        }
    }

    /// `F̃(0) = ∫ d³x F(x)`.
    pub fn amplitude(&self) -> f64 {
        match self {
            Self::GaussianSpherical { sigma, norm } => match norm {
                SmearingNorm::Linear => 2.0 * PI * sigma * sigma,
                SmearingNorm::Volume => 1.0,
            },
            Self::TabulatedRadial(_) => smearing_ft_unchecked(self, 0.0),
        }
    }

    pub fn default_cutoff(&self) -> f64 {
        match self {
            Self::GaussianSpherical { sigma, .. } => 20.0 / sigma,
            Self::TabulatedRadial(t) => PI / t.step,
        }
    }
}

impl fmt::Display for SmearingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GaussianSpherical { sigma, norm } => write!(f, "gaussian(sigma={sigma},norm={norm})"),
            Self::TabulatedRadial(t) => write!(f, "tabulated_radial(step={},n={})", t.step, t.samples.len()),
        }
    }
}

/// `ω_k = √(m² + k²)`.
pub fn dispersion(k: f64, m: f64) -> Result<f64> {
    if !(k >= 0.0) || !(m >= 0.0) {
        return Err(Error::invalid(format!("dispersion needs k >= 0 and m >= 0, got ({k}, {m})")));
    }
    Ok(k.hypot(m))
}

/// `χ̃(ω) = ∫ dt χ(t) e^{iωt}`.
pub fn switching_ft(p: &SwitchingProfile, omega: f64) -> Result<Complex64> {
    if !omega.is_finite() {
        return Err(Error::invalid(format!("switching_ft: non-finite frequency {omega}")));
    }
    Ok(switching_ft_unchecked(p, omega))
}

pub(crate) fn switching_ft_unchecked(p: &SwitchingProfile, omega: f64) -> Complex64 {
    match p {
        SwitchingProfile::Gaussian { center, width } => {
            let amp = width * (2.0 * PI).sqrt() * (-0.5 * (width * omega).powi(2)).exp();
            Complex64::from_polar(amp, omega * center)
        }
        SwitchingProfile::Delta => Complex64::new(1.0, 0.0),
        SwitchingProfile::Tabulated(t) => t
            .points()
            .map(|(time, v, w)| Complex64::from_polar(v * w, omega * time))
            .sum(),
    }
}

/// `|χ̃(ω)|²`, with a closed form for the Gaussian.
pub(crate) fn switching_power(p: &SwitchingProfile, omega: f64) -> f64 {
    match p {
        SwitchingProfile::Gaussian { width, .. } => 2.0 * PI * width * width * (-(width * omega).powi(2)).exp(),
        SwitchingProfile::Delta => 1.0,
        SwitchingProfile::Tabulated(_) => switching_ft_unchecked(p, omega).norm_sqr(),
    }
}

/// `F̃(k)` at radius `k`.
pub fn smearing_ft(p: &SmearingProfile, k: f64) -> Result<f64> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("smearing_ft: need finite k >= 0, got {k}")));
    }
    Ok(smearing_ft_unchecked(p, k))
}

pub(crate) fn smearing_ft_unchecked(p: &SmearingProfile, k: f64) -> f64 {
    match p {
        SmearingProfile::GaussianSpherical { sigma, .. } => p.amplitude() * (-0.5 * (k * sigma).powi(2)).exp(),
        // ∫ d³x F(r) e^{-ik·x} = 4π ∫ r² F(r) sinc(kr) dr, trapezoid in r (the
        // integrand is even in r, so the rule is spectrally accurate).
        SmearingProfile::TabulatedRadial(t) => {
            4.0 * PI
                * t.points()
                    .map(|(r, v, w)| {
                        let kr = k * r;
                        let sinc = if kr.abs() < 1e-8 { 1.0 - kr * kr / 6.0 } else { kr.sin() / kr };
                        w * r * r * v * sinc
                    })
                    .sum::<f64>()
        }
    }
}

/// The two thermal factors of a mode of energy ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalWeight {
    /// `(e^{βω} + 1) / (e^{βω} - 1) = coth(βω/2)`.
    pub coth_factor: f64,
    /// `1 / (e^{βω} - 1)`.
    pub bose_factor: f64,
}

const SERIES_BELOW: f64 = 1e-4;

pub fn thermal_weight(omega: f64, beta: InverseTemperature) -> Result<ThermalWeight> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::invalid(format!("thermal_weight needs a finite ω > 0, got {omega}")));
    }
    Ok(match beta {
        InverseTemperature::Infinite => ThermalWeight {
            coth_factor: 1.0,
            bose_factor: 0.0,
        },
        InverseTemperature::Finite(b) => thermal_factors(b * omega),
    })
}

/// Thermal factors as functions of `x = βω > 0`.
pub(crate) fn thermal_factors(x: f64) -> ThermalWeight {
    if x < SERIES_BELOW {
        let x2 = x * x;
        ThermalWeight {
            coth_factor: 2.0 / x + x / 6.0 - x * x2 / 360.0,
            bose_factor: 1.0 / x - 0.5 + x / 12.0 - x * x2 / 720.0,
        }
    } else {
        let bose = 1.0 / x.exp_m1();
        ThermalWeight {
            coth_factor: 1.0 + 2.0 * bose,
            bose_factor: bose,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_math::gauss_legendre;
    use proptest::prelude::*;

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion(2.0, 0.0).unwrap(), 2.0);
        assert_eq!(dispersion(0.0, 1.5).unwrap(), 1.5);
        assert_eq!(dispersion(4.0, 3.0).unwrap(), 5.0);
        assert!(dispersion(-1.0, 0.0).is_err());
        assert!(dispersion(1.0, -0.1).is_err());
    }

    #[test]
    fn delta_transform_is_one() {
        for &w in &[-3.0, 0.0, 0.5, 40.0] {
            assert_eq!(switching_ft(&SwitchingProfile::Delta, w).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn gaussian_switching_area_matches_quadrature() {
        let p = SwitchingProfile::standard(1.0).unwrap();
        assert_eq!(p, SwitchingProfile::Gaussian { center: 0.5, width: 1.0 / 12.0 });
        let (x, w) = gauss_legendre(40);
        // ∫ χ dt over [-1, 2] split into 30 panels.
        let mut area = 0.0;
        for p_i in 0..30 {
            let a = -1.0 + 0.1 * p_i as f64;
            for (t, wt) in x.iter().zip(&w) {
                area += 0.05 * wt * p.value(a + 0.05 * (t + 1.0)).unwrap();
            }
        }
        let ft0 = switching_ft(&p, 0.0).unwrap();
        // mpmath: √(2π)/12
        assert!((ft0.re - 0.208_885_689_552_583_37).abs() < 1e-15);
        assert!((ft0.re - area).abs() < 1e-13);
        assert!(ft0.im.abs() < 1e-16);
    }

    #[test]
    fn tabulated_switching_matches_gaussian() {
        let g = SwitchingProfile::gaussian(0.5, 1.0 / 12.0).unwrap();
        let dt = 1.0 / 2400.0;
        let samples: Vec<f64> = (0..=7200).map(|j| g.value(-1.0 + j as f64 * dt).unwrap()).collect();
        let tab = SwitchingProfile::Tabulated(Tabulated::new(-1.0, dt, samples).unwrap());
        for &w in &[0.0, 1.0, 7.5, -20.0, 60.0] {
            let a = switching_ft(&g, w).unwrap();
            let b = switching_ft(&tab, w).unwrap();
            assert!((a - b).norm() < 1e-12, "ω = {w}: {a} vs {b}");
        }
    }

    #[test]
    fn smearing_total_integral_by_cubature() {
        // Direct 3D integral of the Linear-normalized Gaussian with σ = 1 on
        // a Cartesian Gauss-Legendre product grid over [-9, 9]³.
        let p = SmearingProfile::gaussian(1.0, SmearingNorm::Linear).unwrap();
        let (x, w) = gauss_legendre(60);
        let mut total = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            for (yj, wj) in x.iter().zip(&w) {
                for (zk, wk) in x.iter().zip(&w) {
                    let r = 9.0 * (xi * xi + yj * yj + zk * zk).sqrt();
                    total += wi * wj * wk * p.value(r);
                }
            }
        }
        total *= 9.0f64.powi(3);
        let ft0 = smearing_ft(&p, 0.0).unwrap();
        assert!((ft0 - 2.0 * PI).abs() < 1e-14);
        assert!((total - ft0).abs() < 1e-10, "{total} vs {ft0}");

        let v = SmearingProfile::gaussian(1.0, SmearingNorm::Volume).unwrap();
        assert_eq!(smearing_ft(&v, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn tabulated_radial_matches_closed_form() {
        for norm in [SmearingNorm::Linear, SmearingNorm::Volume] {
            let g = SmearingProfile::gaussian(1.0, norm).unwrap();
            let dr = 0.01;
            let samples: Vec<f64> = (0..=1400).map(|j| g.value(j as f64 * dr)).collect();
            let tab = SmearingProfile::tabulated(dr, samples).unwrap();
            for &k in &[0.5, 1.0, 2.0] {
                let a = smearing_ft(&g, k).unwrap();
                let b = smearing_ft(&tab, k).unwrap();
                assert!((a - b).abs() < 1e-8, "k = {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn gaussian_smearing_decays_fast() {
        let sigma = 0.7;
        let p = SmearingProfile::gaussian(sigma, SmearingNorm::Linear).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let v = smearing_ft(&p, i as f64 * 0.05 / sigma).unwrap();
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
        // Faster than any power: k^n F̃(k) keeps falling for each n.
        let a0 = p.amplitude();
        for n in [4, 8, 12] {
            let scaled: Vec<f64> = [10.0, 15.0, 20.0]
                .iter()
                .map(|x: &f64| x.powi(n) * smearing_ft(&p, x / sigma).unwrap() / a0)
                .collect();
            assert!(scaled.windows(2).all(|w| w[1] < w[0]), "n = {n}");
            assert!(scaled[2] < 1e-60);
        }
    }

    #[test]
    fn thermal_limits() {
        let w = thermal_weight(3.0, InverseTemperature::Infinite).unwrap();
        assert_eq!((w.coth_factor, w.bose_factor), (1.0, 0.0));
        let big = thermal_weight(1.0, InverseTemperature::Finite(800.0)).unwrap();
        assert_eq!(big.bose_factor, 0.0);
        assert_eq!(big.coth_factor, 1.0);
        assert!(thermal_weight(0.0, InverseTemperature::Finite(1.0)).is_err());
        assert!(thermal_weight(-1.0, InverseTemperature::Finite(1.0)).is_err());
    }

    #[test]
    fn thermal_small_argument() {
        // βω = 1e-6; mpmath: coth(5e-7) = 2000000.0000001666…, 1/(e^x - 1) = 999999.5000000833…
        let w = thermal_weight(1e-6, InverseTemperature::Finite(1.0)).unwrap();
        assert!((w.coth_factor - 2_000_000.000_000_166_7).abs() / 2e6 < 1e-15);
        assert!((w.bose_factor - 999_999.500_000_083_3).abs() / 1e6 < 1e-15);
        assert!((w.coth_factor - 2e6).abs() / 2e6 < 1e-8);
        // Series and closed form agree across the switch.
        let lo = thermal_factors(SERIES_BELOW * (1.0 - 1e-12));
        let hi = thermal_factors(SERIES_BELOW * (1.0 + 1e-12));
        assert!((lo.coth_factor - hi.coth_factor).abs() / lo.coth_factor < 1e-10);
        assert!((lo.bose_factor - hi.bose_factor).abs() / lo.bose_factor < 1e-10);
    }

    #[test]
    fn rejects_invalid_profiles() {
        assert!(SwitchingProfile::gaussian(0.0, 0.0).is_err());
        assert!(SmearingProfile::gaussian(-1.0, SmearingNorm::Linear).is_err());
        assert!(Tabulated::new(0.0, 0.1, vec![1.0, f64::NAN]).is_err());
        assert!(InverseTemperature::new(0.0).is_err());
        assert!(InverseTemperature::new(f64::NAN).is_err());
        assert!(InverseTemperature::new(f64::INFINITY).unwrap().is_vacuum());
        assert!(FieldSpec::new(-1.0, InverseTemperature::Infinite, 0.1).is_err());
        assert!(switching_ft(&SwitchingProfile::Delta, f64::NAN).is_err());
        assert!(smearing_ft(&SmearingProfile::gaussian(1.0, SmearingNorm::Volume).unwrap(), -1.0).is_err());
    }

    proptest! {
        #[test]
        fn switching_transform_is_hermitian(center in -3.0f64..3.0, width in 0.01f64..2.0, omega in -50.0f64..50.0) {
            let p = SwitchingProfile::gaussian(center, width).unwrap();
            let a = switching_ft(&p, omega).unwrap();
            let b = switching_ft(&p, -omega).unwrap();
            prop_assert!((a - b.conj()).norm() <= 1e-15 * (1.0 + a.norm()));
            prop_assert!((a.norm_sqr() - switching_power(&p, omega)).abs() <= 1e-14 * (1.0 + a.norm_sqr()));
        }

        #[test]
        fn coth_factor_exceeds_one_and_falls_with_beta(omega in 0.01f64..10.0, b1 in 0.01f64..3.0, db in 1e-3f64..1.0) {
            let lo = thermal_weight(omega, InverseTemperature::Finite(b1)).unwrap();
            let hi = thermal_weight(omega, InverseTemperature::Finite(b1 + db)).unwrap();
            prop_assert!(lo.coth_factor > 1.0);
            prop_assert!(hi.coth_factor < lo.coth_factor);
            prop_assert!((lo.coth_factor - (1.0 + 2.0 * lo.bose_factor)).abs() <= 1e-12 * lo.coth_factor);
        }
    }
}
