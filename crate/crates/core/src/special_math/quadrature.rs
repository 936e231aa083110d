//! Adaptive Gauss-Kronrod integration on finite intervals.
//!
//! The radial integrals of the characteristic functions are all of the form
//! `∫₀^∞ f(k) dk` with Gaussian-decaying `f`; they are evaluated on `[0, k_max]`
//! and the caller picks `k_max` so the tail is negligible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper cutoff of the radial integration (momentum units).
    pub k_max: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, k_max: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            k_max,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if !(self.k_max > 0.0 && self.k_max.is_finite()) {
            return Err(Error::invalid(format!("k_max must be > 0, got {}", self.k_max)));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::invalid("max_subdivisions must be >= 1"));
        }
        Ok(())
    }

    pub fn with_k_max(self, k_max: f64) -> Self {
        Self { k_max, ..self }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-300,
            rel_tol: 1e-12,
            k_max: 50.0,
            max_subdivisions: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate<V> {
    pub value: V,
    /// Estimated absolute error (sum over components for complex values).
    pub error: f64,
    pub subdivisions: usize,
    pub evaluations: usize,
}

/// Values the integrator can accumulate: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn parts(self) -> [f64; 2];
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn parts(self) -> [f64; 2] {
        [self, 0.0]
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn parts(self) -> [f64; 2] {
        [self.re, self.im]
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

// 21-point Kronrod nodes (positive half, descending) and weights, with the
// embedded 10-point Gauss weights on the odd-indexed nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// QUADPACK-style error rescaling for one real component.
fn rescale_error(raw: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = raw.abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn kronrod21<V: QuadValue, F: Fn(f64) -> V>(f: &F, a: f64, b: f64) -> (V, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut res_k = fc * WGK[10];
    let mut res_g = V::zero();
    let mut values = [(V::zero(), V::zero()); 10];
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let (f1, f2) = (f(centre - dx), f(centre + dx));
        values[j] = (f1, f2);
        res_k = res_k + (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            res_g = res_g + (f1 + f2) * WG[j / 2];
        }
    }

    let mean = res_k * 0.5;
    let mut error = 0.0;
    for c in 0..2 {
        let mean_c = mean.parts()[c];
        let mut res_abs = WGK[10] * fc.parts()[c].abs();
        let mut res_asc = WGK[10] * (fc.parts()[c] - mean_c).abs();
        for (j, (f1, f2)) in values.iter().enumerate() {
            let (p1, p2) = (f1.parts()[c], f2.parts()[c]);
            res_abs += WGK[j] * (p1.abs() + p2.abs());
            res_asc += WGK[j] * ((p1 - mean_c).abs() + (p2 - mean_c).abs());
        }
        let raw = (res_k.parts()[c] - res_g.parts()[c]) * half;
        error += rescale_error(raw, res_abs * half.abs(), res_asc * half.abs());
    }
    (res_k * half, error)
}

/// Adaptive integration of `f` over `[a, b]`, starting from the partition given
/// by `breaks` (points outside `(a, b)` are ignored).
///
/// Converges when the summed error estimate is at most
/// `max(abs_tol, rel_tol·|result|)`; otherwise fails once `max_subdivisions`
/// panels are in use, carrying the best estimate and its error bound.
pub fn integrate_interval<V, F>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadEstimate<V>>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::invalid(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadEstimate {
            value: V::zero(),
            error: 0.0,
            subdivisions: 0,
            evaluations: 0,
        });
    }

    let mut points: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    points.push(a);
    points.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut heap = BinaryHeap::with_capacity(points.len().max(64));
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (value, error) = kronrod21(&f, w[0], w[1]);
        evaluations += 21;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }

    let totals = |heap: &BinaryHeap<Panel<V>>| {
        let mut value = V::zero();
        let mut error = 0.0;
        for p in heap.iter() {
            value = value + p.value;
            error += p.error;
        }
        (value, error)
    };

    let (mut value, mut error) = totals(&heap);
    let mut since_resum = 0;
    loop {
        let tolerance = abs_tol.max(rel_tol * value.magnitude());
        if error <= tolerance {
            // Confirm against a fresh sum before accepting.
            let (v, e) = totals(&heap);
            value = v;
            error = e;
            if error <= abs_tol.max(rel_tol * value.magnitude()) {
                break;
            }
        }
        if heap.len() >= max_subdivisions {
            let (v, e) = totals(&heap);
            return Err(Error::Convergence {
                estimate: v.parts()[0],
                error_bound: e,
                subdivisions: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel cannot be split further in floating point.
            heap.push(worst);
            let (v, e) = totals(&heap);
            return Err(Error::Convergence {
                estimate: v.parts()[0],
                error_bound: e,
                subdivisions: heap.len(),
            });
        }
        let (v1, e1) = kronrod21(&f, worst.a, mid);
        let (v2, e2) = kronrod21(&f, mid, worst.b);
        evaluations += 42;
        value = value - worst.value + v1 + v2;
        error += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        since_resum += 1;
        if since_resum == 256 {
            since_resum = 0;
            (value, error) = totals(&heap);
        }
    }

    Ok(QuadEstimate {
        value,
        error,
        subdivisions: heap.len(),
        evaluations,
    })
}

/// `∫₀^{k_max} f(k) dk` with the tolerances of `spec`.
pub fn integrate_radial<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<QuadEstimate<f64>> {
    spec.validate()?;
    integrate_interval(f, 0.0, spec.k_max, &[], spec.abs_tol, spec.rel_tol, spec.max_subdivisions)
}

/// Complex-valued radial integral with an initial partition.
pub fn integrate_radial_complex<F: Fn(f64) -> Complex64>(
    f: F,
    spec: &QuadratureSpec,
    breaks: &[f64],
) -> Result<QuadEstimate<Complex64>> {
    spec.validate()?;
    integrate_interval(f, 0.0, spec.k_max, breaks, spec.abs_tol, spec.rel_tol, spec.max_subdivisions)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let step = pn / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
