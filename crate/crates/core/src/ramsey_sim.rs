//! Discrete-mode simulation of the Ramsey interferometer.
//!
//! A qubit is put in superposition, controls whether the field evolves as
//! `U e^{−iμH₀}` (qubit `|0⟩`) or `e^{−iμH₀} U` (qubit `|1⟩`), and is rotated
//! back. Its final Bloch components are `Re P̃(μ)` along `z` and `Im P̃(μ)`
//! along `y`. The field is replaced by finitely many radial shells, each a
//! single bosonic mode.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::charfn::{charfn_delta_numeric, Scenario};
use crate::field_model::{
    dispersion, smearing_ft_unchecked, switching_ft_unchecked, switching_power, thermal_weight, FieldSpec,
    InverseTemperature, SmearingProfile, SwitchingProfile,
};
use crate::{Error, Result};

const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: f64,
    pub omega: f64,
    /// Momentum-space volume `Δ³k` of the shell.
    pub weight: f64,
}

/// Discretized field modes, sorted by momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    mass: f64,
    modes: Vec<Mode>,
}

impl ModeSet {
    pub fn new(mass: f64, modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invalid("mode set is empty"));
        }
        for m in &modes {
            if !(m.k > 0.0 && m.k.is_finite()) || !(m.weight > 0.0 && m.weight.is_finite()) {
                return Err(Error::invalid(format!("mode needs k > 0 and weight > 0, got {m:?}")));
            }
            let omega = dispersion(m.k, mass)?;
            if (m.omega - omega).abs() > 1e-14 * omega {
                return Err(Error::invalid(format!("mode energy {} does not match ω(k) = {omega}", m.omega)));
            }
        }
        if modes.windows(2).any(|w| w[1].k <= w[0].k) {
            return Err(Error::invalid("modes must be sorted by strictly increasing k"));
        }
        Ok(Self { mass, modes })
    }

    /// `count` shells of width `Δk = k_max/count` at the midpoints
    /// `k_j = (j − ½)Δk`, with weights `4π k_j² Δk`.
    pub fn radial(count: usize, k_max: f64, mass: f64) -> Result<Self> {
        if count == 0 || !(k_max > 0.0 && k_max.is_finite()) {
            return Err(Error::invalid("radial mode set needs count >= 1 and k_max > 0"));
        }
        let dk = k_max / count as f64;
        let modes = (1..=count)
            .map(|j| {
                let k = (j as f64 - 0.5) * dk;
                Ok(Mode {
                    k,
                    omega: dispersion(k, mass)?,
                    weight: 4.0 * PI * k * k * dk,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mass, modes)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
}

/// `Δ³k / ((2π)³ 2ω)` for one mode.
fn phase_space(m: &Mode) -> f64 {
    m.weight / ((2.0 * PI).powi(3) * 2.0 * m.omega)
}

/// A 2×2 density matrix. Rows and columns are ordered `|0⟩, |1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    rho: [[Complex64; 2]; 2],
}

impl QubitState {
    pub fn new(rho: [[Complex64; 2]; 2]) -> Result<Self> {
        let q = Self { rho };
        q.validate(STATE_TOL)?;
        Ok(q)
    }

    /// `½(1 + x σ_z + y σ_y)`.
    pub fn from_bloch_zy(z: f64, y: f64) -> Result<Self> {
        let half = 0.5;
        Self::new([
            [Complex64::new(half * (1.0 + z), 0.0), Complex64::new(0.0, -half * y)],
            [Complex64::new(0.0, half * y), Complex64::new(half * (1.0 - z), 0.0)],
        ])
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho[0][0] + self.rho[1][1]
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.rho[0][0].re;
        let d = self.rho[1][1].re;
        let b = self.rho[0][1].norm();
        let mid = 0.5 * (a + d);
        let r = (0.25 * (a - d).powi(2) + b * b).sqrt();
        [mid - r, mid + r]
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let r = &self.rho;
        if r.iter().flatten().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        let herm = (r[0][1] - r[1][0].conj()).norm().max(r[0][0].im.abs()).max(r[1][1].im.abs());
        if herm > tol {
            return Err(Error::InvalidState(format!("matrix is not Hermitian (defect {herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > tol {
            return Err(Error::InvalidState(format!("trace is {tr}, not 1")));
        }
        let [lo, hi] = self.eigenvalues();
        if lo < -tol || hi > 1.0 + tol {
            return Err(Error::InvalidState(format!("eigenvalues ({lo}, {hi}) outside [0, 1]")));
        }
        Ok(())
    }
}

fn pauli_y() -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    [[z, Complex64::new(0.0, -1.0)], [Complex64::new(0.0, 1.0), z]]
}

/// `Tr[σ_z ρ] + i Tr[σ_y ρ]`.
pub fn tomography(q: &QubitState) -> Result<Complex64> {
    q.validate(STATE_TOL)?;
    let r = q.matrix();
    let z = (r[0][0] - r[1][1]).re;
    let sy = pauli_y();
    let y = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| sy[i][j] * r[j][i]).sum::<Complex64>();
    Ok(Complex64::new(z, y.re))
}

/// One branch of the joint state: `coef · |qubit⟩ ⊗ |γ⟩` with `|γ⟩` a
/// product of coherent states.
#[derive(Debug, Clone)]
struct Term {
    qubit: usize,
    coef: Complex64,
    field: Vec<Complex64>,
}

/// `√2 H`; the two factors of `1/√2` are applied together as an exact `½`.
fn hadamard(terms: Vec<Term>) -> Vec<Term> {
    terms
        .into_iter()
        .flat_map(|t| {
            let sign = if t.qubit == 0 { 1.0 } else { -1.0 };
            [
                Term {
                    qubit: 0,
                    coef: t.coef,
                    field: t.field.clone(),
                },
                Term {
                    qubit: 1,
                    coef: t.coef * sign,
                    field: t.field,
                },
            ]
        })
        .collect()
}

/// `D(α)|γ⟩ = e^{(αγ* − α*γ)/2} |α + γ⟩`, mode by mode.
fn displace(t: &mut Term, alpha: &[Complex64]) {
    let mut phase = Complex64::new(0.0, 0.0);
    for (g, a) in t.field.iter_mut().zip(alpha) {
        phase += 0.5 * (a * g.conj() - a.conj() * *g);
        *g += a;
    }
    t.coef *= phase.exp();
}

/// `e^{−iμH₀}|γ⟩ = |γ e^{−iμω}⟩`.
fn free_evolve(t: &mut Term, modes: &ModeSet, mu: f64) {
    for (g, m) in t.field.iter_mut().zip(modes.modes()) {
        *g *= Complex64::from_polar(1.0, -mu * m.omega);
    }
}

/// `⟨a|b⟩` for products of coherent states.
fn overlap(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| -0.5 * x.norm_sqr() - 0.5 * y.norm_sqr() + x.conj() * y)
        .sum::<Complex64>()
        .exp()
}

fn reduce(terms: &[Term]) -> [[Complex64; 2]; 2] {
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for s in terms {
        for t in terms {
            rho[s.qubit][t.qubit] += s.coef * t.coef.conj() * overlap(&t.field, &s.field);
        }
    }
    rho
}

/// Runs the interferometer for the instantaneous coupling
/// `U = exp(−iλ∫F φ)` on the vacuum of the discretized field, using exact
/// coherent-state algebra.
pub fn simulate_delta_ramsey(modes: &ModeSet, lambda: f64, smearing: &SmearingProfile, mu: f64) -> Result<QubitState> {
    if !lambda.is_finite() || !mu.is_finite() {
        return Err(Error::invalid("λ and μ must be finite"));
    }
    smearing.validate()?;
    // α_j = −iλ F̃(k_j) √Δ³k_j / ((2π)^{3/2} √(2ω_j))
    let alpha: Vec<Complex64> = modes
        .modes()
        .iter()
        .map(|m| Complex64::new(0.0, -lambda * smearing_ft_unchecked(smearing, m.k) * phase_space(m).sqrt()))
        .collect();

    let vacuum = vec![Complex64::new(0.0, 0.0); modes.len()];
    let mut terms = hadamard(vec![Term {
        qubit: 0,
        coef: Complex64::new(1.0, 0.0),
        field: vacuum,
    }]);
    for t in terms.iter_mut() {
        if t.qubit == 0 {
            free_evolve(t, modes, mu);
            displace(t, &alpha);
        } else {
            displace(t, &alpha);
            free_evolve(t, modes, mu);
        }
    }
    let terms = hadamard(terms);
    let mut rho = reduce(&terms);
    for z in rho.iter_mut().flatten() {
        *z *= 0.25;
    }
    QubitState::new(rho)
}

/// Second-order Dyson bookkeeping for the perturbative interferometer on a
/// thermal state, with `U ≈ 1 − iΛ + U₂` and
/// `Λ = Σ_j (c_j a_j + c_j* a_j†)`, `c_j = λ χ̃(−ω_j) F̃(k_j) √(Δ³k_j/((2π)³2ω_j))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DysonTerms {
    /// First-order part of `Tr[V₀ ρ V₁†]`, i.e. `i⟨Λ⟩ − i⟨Λ_μ⟩`.
    pub first_order_coherence: Complex64,
    /// First-order part of the branch norms `Tr[V_a ρ V_a†]`.
    pub first_order_populations: [f64; 2],
    /// `Tr[U₁,μ ρ U₁†] = ⟨Λ Λ_μ⟩`.
    pub cross_coherence: Complex64,
    /// `⟨Λ_a Λ_a⟩` per branch.
    pub cross_populations: [f64; 2],
    /// `2 Re⟨U₂⟩` from the thermal Wightman function.
    pub second_order_real: f64,
}

impl DysonTerms {
    /// `Tr[V₀ ρ V₁†] = P̃(μ)` to second order.
    pub fn coherence(&self) -> Complex64 {
        1.0 + self.first_order_coherence + self.cross_coherence + self.second_order_real
    }

    pub fn population(&self, branch: usize) -> f64 {
        1.0 + self.first_order_populations[branch] + self.cross_populations[branch] + self.second_order_real
    }
}

/// Thermal one- and two-point functions of a single mode.
struct ModeMoments {
    /// `⟨a⟩`, zero in any KMS state.
    first: Complex64,
    /// `⟨a a†⟩ = 1 + n`.
    anti: f64,
    /// `⟨a† a⟩ = n`.
    normal: f64,
}

fn mode_moments(omega: f64, beta: InverseTemperature) -> Result<ModeMoments> {
    let n = thermal_weight(omega, beta)?.bose_factor;
    Ok(ModeMoments {
        first: Complex64::new(0.0, 0.0),
        anti: 1.0 + n,
        normal: n,
    })
}

/// `⟨Λ_b Λ_a⟩` for `Λ_x = Σ (x_j a_j + x_j* a_j†)`.
fn two_point(b: &[Complex64], a: &[Complex64], moments: &[ModeMoments]) -> Complex64 {
    b.iter()
        .zip(a)
        .zip(moments)
        .map(|((cb, ca), m)| cb * ca.conj() * m.anti + cb.conj() * ca * m.normal)
        .sum()
}

/// `⟨Λ_x⟩`.
fn one_point(x: &[Complex64], moments: &[ModeMoments]) -> f64 {
    x.iter()
        .zip(moments)
        .map(|(c, m)| 2.0 * (c * m.first).re)
        .sum()
}

pub fn dyson_terms(
    modes: &ModeSet,
    field: &FieldSpec,
    switching: &SwitchingProfile,
    smearing: &SmearingProfile,
    mu: f64,
) -> Result<DysonTerms> {
    field.validate()?;
    switching.validate()?;
    smearing.validate()?;
    if (field.mass - modes.mass()).abs() > 0.0 {
        return Err(Error::invalid("field mass differs from the mode set's mass"));
    }
    if !mu.is_finite() {
        return Err(Error::invalid("μ must be finite"));
    }
    let lambda = field.coupling;
    let moments = modes
        .modes()
        .iter()
        .map(|m| mode_moments(m.omega, field.beta))
        .collect::<Result<Vec<_>>>()?;
    let c: Vec<Complex64> = modes
        .modes()
        .iter()
        .map(|m| lambda * switching_ft_unchecked(switching, -m.omega) * smearing_ft_unchecked(smearing, m.k) * phase_space(m).sqrt())
        .collect();
    // e^{iμH₀} Λ e^{−iμH₀} has a_j → a_j e^{−iμω_j}.
    let c_mu: Vec<Complex64> = c
        .iter()
        .zip(modes.modes())
        .map(|(x, m)| x * Complex64::from_polar(1.0, -mu * m.omega))
        .collect();

    // Tr[(U₁,μ + U₁†) ρ] = −i⟨Λ_μ⟩ + i⟨Λ⟩
    let first_order_coherence = Complex64::new(0.0, one_point(&c, &moments) - one_point(&c_mu, &moments));
    // Branch norms: U₁ + U₁† = 0 as operators, sandwiched either way.
    let first_order_populations = [
        (Complex64::new(0.0, -1.0) * one_point(&c_mu, &moments) + Complex64::new(0.0, 1.0) * one_point(&c_mu, &moments)).re,
        (Complex64::new(0.0, -1.0) * one_point(&c, &moments) + Complex64::new(0.0, 1.0) * one_point(&c, &moments)).re,
    ];
    let cross_coherence = two_point(&c, &c_mu, &moments);
    let cross_populations = [two_point(&c_mu, &c_mu, &moments).re, two_point(&c, &c, &moments).re];

    // 2Re⟨U₂⟩ = −λ² ∫dt∫dt' χχ' ∫∫ F F' Re W_β; in modes the Wightman
    // function is Σ_j Δ³k_j/((2π)³2ω_j) |F̃|² [(1+n) e^{−iωΔt} + n e^{iωΔt}].
    let second_order_real = -lambda
        * lambda
        * modes
            .modes()
            .iter()
            .zip(&moments)
            .map(|(m, mm)| {
                phase_space(m)
                    * smearing_ft_unchecked(smearing, m.k).powi(2)
                    * switching_power(switching, m.omega)
                    * (mm.anti + mm.normal)
            })
            .sum::<f64>();

    Ok(DysonTerms {
        first_order_coherence,
        first_order_populations,
        cross_coherence,
        cross_populations,
        second_order_real,
    })
}

/// Second-order qubit state after the interferometer.
///
/// Fails with an inconsistency error if the coded first-order terms are not
/// zero or the second-order corrections to the branch norms do not cancel.
pub fn simulate_perturbative_ramsey(
    modes: &ModeSet,
    field: &FieldSpec,
    switching: &SwitchingProfile,
    smearing: &SmearingProfile,
    mu: f64,
) -> Result<QubitState> {
    let d = dyson_terms(modes, field, switching, smearing, mu)?;
    if d.first_order_coherence != Complex64::new(0.0, 0.0) || d.first_order_populations != [0.0, 0.0] {
        return Err(Error::Inconsistency("first-order Dyson terms do not vanish".into()));
    }
    let (n0, n1) = (d.population(0), d.population(1));
    if (n0 - 1.0).abs() > STATE_TOL || (n1 - 1.0).abs() > STATE_TOL {
        return Err(Error::Inconsistency(format!(
            "second-order branch norms {n0}, {n1} differ from 1"
        )));
    }
    let p = d.coherence();
    // Before the last Hadamard: R = ½[[n₀, P̃], [P̃*, n₁]].
    let r = [
        [Complex64::new(0.5 * n0, 0.0), 0.5 * p],
        [0.5 * p.conj(), Complex64::new(0.5 * n1, 0.0)],
    ];
    let hm = [[1.0, 1.0], [1.0, -1.0]];
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    rho[i][j] += 0.5 * hm[i][a] * r[a][b] * hm[b][j];
                }
            }
        }
    }
    QubitState::new(rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub modes: usize,
    pub simulated: Complex64,
    pub continuum: Complex64,
    pub error: f64,
}

/// Error of the simulated delta-coupling `P̃(μ)` against the continuum
/// quadrature for each mode count. The cutoff is the smearing's default.
///
/// Fails with a convergence error (carrying the final error and the
/// threshold) unless the errors strictly decrease and the last is at most
/// `1e−6`; a column of exact zeros counts as converged.
pub fn continuum_convergence(
    smearing: &SmearingProfile,
    lambda: f64,
    mu: f64,
    mode_counts: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    if mode_counts.is_empty() {
        return Err(Error::invalid("no mode counts given"));
    }
    let field = FieldSpec::massless(InverseTemperature::Infinite, lambda)?;
    let scenario = Scenario::new(field, SwitchingProfile::Delta, smearing.clone())?;
    let continuum = charfn_delta_numeric(&scenario, Complex64::new(mu, 0.0))?;
    let k_max = scenario.quadrature.k_max;
    let rows = mode_counts
        .iter()
        .map(|&n| {
            let modes = ModeSet::radial(n, k_max, 0.0)?;
            let simulated = tomography(&simulate_delta_ramsey(&modes, lambda, smearing, mu)?)?;
            Ok(ConvergenceRow {
                modes: n,
                simulated,
                continuum,
                error: (simulated - continuum).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let all_zero = rows.iter().all(|r| r.error == 0.0);
    let decreasing = rows.windows(2).all(|w| w[1].error < w[0].error);
    let last = rows.last().expect("nonempty");
    if !all_zero && (!decreasing || last.error > 1e-6) {
        return Err(Error::Convergence {
            estimate: last.error,
            error_bound: 1e-6,
            subdivisions: last.modes,
        });
    }
    Ok(rows)
}
