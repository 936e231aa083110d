//! Plain-text run configuration.
//!
//! ```text
//! # comment
//! [field]
//! beta = 1          # or inf
//! lambda = 0.01
//! [switching]
//! kind = gaussian
//! center = 0.5
//! width = 0.08333333333333333
//! ```
//!
//! Sections: `[field]`, `[switching]`, `[smearing]`, `[grids]`, `[output]`.
//! Unknown sections and keys are rejected with their line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::charfn::Scenario;
use crate::field_model::{
    FieldSpec, InverseTemperature, SmearingNorm, SmearingProfile, SwitchingProfile, Tabulated,
};
use crate::special_math::QuadratureSpec;
use crate::workdist::DEFAULT_MU_INTERVALS;

const SECTIONS: &[(&str, &[&str])] = &[
    ("field", &["mass", "beta", "lambda"]),
    ("switching", &["kind", "center", "width", "t_start", "dt", "samples"]),
    ("smearing", &["kind", "sigma", "normalization", "dr", "samples"]),
    (
        "grids",
        &[
            "mu_min",
            "mu_max",
            "mu_count",
            "mu_intervals",
            "w_min",
            "w_max",
            "abs_tol",
            "rel_tol",
            "k_max",
            "max_subdivisions",
            "modes",
            "mode_k_max",
            "mode_counts",
            "sweep_scales",
            "crooks_w_min",
            "crooks_w_max",
            "crooks_count",
        ],
    ),
    ("output", &["path"]),
];

/// Where a value came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override(s) => write!(f, "override '{s}'"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> CResult<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Parsed `section → key → value` map, before typing.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

fn known_keys(section: &str) -> Option<&'static [&'static str]> {
    SECTIONS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

impl RawConfig {
    pub fn parse(text: &str) -> CResult<Self> {
        let mut cfg = RawConfig::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError(format!("line {line_no}: malformed section header '{line}'")))?
                    .trim();
                if known_keys(name).is_none() {
                    return err(format!("line {line_no}: unknown section [{name}]"));
                }
                if cfg.sections.contains_key(name) {
                    return err(format!("line {line_no}: section [{name}] appears twice"));
                }
                cfg.sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {line_no}: expected 'key = value', got '{line}'")))?;
            let section = current
                .clone()
                .ok_or_else(|| ConfigError(format!("line {line_no}: key '{}' outside any section", key.trim())))?;
            cfg.insert(&section, key.trim(), value.trim(), Origin::Line(line_no), false)?;
        }
        Ok(cfg)
    }

    fn insert(&mut self, section: &str, key: &str, value: &str, origin: Origin, replace: bool) -> CResult<()> {
        let keys = known_keys(section).ok_or_else(|| ConfigError(format!("{origin}: unknown section [{section}]")))?;
        if !keys.contains(&key) {
            return err(format!("{origin}: unknown key '{key}' in [{section}]"));
        }
        if value.is_empty() {
            return err(format!("{origin}: [{section}] {key} has an empty value"));
        }
        let map = self.sections.entry(section.to_string()).or_default();
        if !replace {
            if let Some(prev) = map.get(key) {
                return err(format!("{origin}: [{section}] {key} already set at {}", prev.origin));
            }
        }
        map.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                origin,
            },
        );
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn set(&mut self, spec: &str) -> CResult<()> {
        let origin = Origin::Override(spec.to_string());
        let (path, value) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("{origin}: expected section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| ConfigError(format!("{origin}: expected section.key=value")))?;
        self.insert(section.trim(), key.trim(), value.trim(), origin, true)
    }

    fn section(&self, name: &str) -> Option<&BTreeMap<String, Entry>> {
        self.sections.get(name)
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.section(section).and_then(|s| s.get(key))
    }

    fn required(&self, section: &str, key: &str) -> CResult<&Entry> {
        if self.section(section).is_none() {
            return err(format!("missing section [{section}]"));
        }
        self.entry(section, key)
            .ok_or_else(|| ConfigError(format!("[{section}]: missing required key '{key}'")))
    }

    fn parse_with<T>(&self, section: &str, key: &str, e: &Entry, what: &str, f: impl Fn(&str) -> Option<T>) -> CResult<T> {
        f(&e.value).ok_or_else(|| {
            ConfigError(format!("{}: [{section}] {key}: expected {what}, got '{}'", e.origin, e.value))
        })
    }

    fn real(&self, section: &str, key: &str) -> CResult<Option<f64>> {
        self.entry(section, key)
            .map(|e| self.parse_with(section, key, e, "a finite number", parse_finite))
            .transpose()
    }

    fn real_or(&self, section: &str, key: &str, default: f64) -> CResult<f64> {
        Ok(self.real(section, key)?.unwrap_or(default))
    }

    fn required_real(&self, section: &str, key: &str) -> CResult<f64> {
        let e = self.required(section, key)?;
        self.parse_with(section, key, e, "a finite number", parse_finite)
    }

    fn count(&self, section: &str, key: &str) -> CResult<Option<usize>> {
        self.entry(section, key)
            .map(|e| self.parse_with(section, key, e, "a non-negative integer", |s| s.parse().ok()))
            .transpose()
    }

    fn reals(&self, section: &str, key: &str) -> CResult<Option<Vec<f64>>> {
        self.entry(section, key)
            .map(|e| {
                self.parse_with(section, key, e, "a comma-separated list of numbers", |s| {
                    s.split(',').map(|x| parse_finite(x.trim())).collect()
                })
            })
            .transpose()
    }

    fn counts(&self, section: &str, key: &str) -> CResult<Option<Vec<usize>>> {
        self.entry(section, key)
            .map(|e| {
                self.parse_with(section, key, e, "a comma-separated list of integers", |s| {
                    s.split(',').map(|x| x.trim().parse().ok()).collect()
                })
            })
            .transpose()
    }

    /// Rejects keys of `section` that do not apply to the chosen `kind`.
    fn only(&self, section: &str, kind: &str, allowed: &[&str]) -> CResult<()> {
        if let Some(map) = self.section(section) {
            for (k, e) in map {
                if k != "kind" && !allowed.contains(&k.as_str()) {
                    return err(format!("{}: [{section}] key '{k}' does not apply to kind = {kind}", e.origin));
                }
            }
        }
        Ok(())
    }
}

fn parse_finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Command options that are not part of the physics.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_count: usize,
    /// Interval count of the inversion grid.
    pub mu_intervals: usize,
    pub w_min: Option<f64>,
    pub w_max: Option<f64>,
    pub modes: usize,
    pub mode_k_max: f64,
    pub mode_counts: Vec<usize>,
    pub sweep_scales: Vec<f64>,
    pub crooks_w_min: f64,
    pub crooks_w_max: f64,
    pub crooks_count: usize,
}

impl GridOptions {
    /// `mu_count` evenly spaced points on `[mu_min, mu_max]`.
    pub fn mu_points(&self) -> Vec<f64> {
        linspace(self.mu_min, self.mu_max, self.mu_count)
    }

    pub fn crooks_points(&self) -> Vec<f64> {
        linspace(self.crooks_w_min, self.crooks_w_max, self.crooks_count)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub grids: GridOptions,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_text(text: &str, overrides: &[String]) -> CResult<Self> {
        let mut raw = RawConfig::parse(text)?;
        for o in overrides {
            raw.set(o)?;
        }
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &RawConfig) -> CResult<Self> {
        let scenario = build_scenario(raw)?;
        let g = "grids";
        let positive = |key: &str, v: f64| {
            if v > 0.0 {
                Ok(v)
            } else {
                err(format!("[grids] {key} must be > 0, got {v}"))
            }
        };
        let grids = GridOptions {
            mu_min: raw.real_or(g, "mu_min", -10.0)?,
            mu_max: raw.real_or(g, "mu_max", 10.0)?,
            mu_count: raw.count(g, "mu_count")?.unwrap_or(101),
            mu_intervals: raw.count(g, "mu_intervals")?.unwrap_or(DEFAULT_MU_INTERVALS),
            w_min: raw.real(g, "w_min")?,
            w_max: raw.real(g, "w_max")?,
            modes: raw.count(g, "modes")?.unwrap_or(64),
            mode_k_max: positive("mode_k_max", raw.real_or(g, "mode_k_max", scenario.quadrature.k_max)?)?,
            mode_counts: raw.counts(g, "mode_counts")?.unwrap_or_else(|| vec![16, 32, 64, 128]),
            sweep_scales: raw.reals(g, "sweep_scales")?.unwrap_or_else(|| vec![1.0, 0.5, 0.25, 0.125]),
            crooks_w_min: raw.real_or(g, "crooks_w_min", 0.1)?,
            crooks_w_max: raw.real_or(g, "crooks_w_max", 3.0)?,
            crooks_count: raw.count(g, "crooks_count")?.unwrap_or(20),
        };
        if grids.mu_count == 0 || grids.mu_max < grids.mu_min {
            return err("[grids] needs mu_count >= 1 and mu_max >= mu_min");
        }
        if grids.mu_intervals < 2 || !grids.mu_intervals.is_multiple_of(2) {
            return err(format!("[grids] mu_intervals must be even and >= 2, got {}", grids.mu_intervals));
        }
        if let (Some(a), Some(b)) = (grids.w_min, grids.w_max) {
            if b < a {
                return err("[grids] w_max must be >= w_min");
            }
        }
        if grids.modes == 0 || grids.mode_counts.contains(&0) {
            return err("[grids] mode counts must be >= 1");
        }
        if grids.sweep_scales.iter().any(|s| *s <= 0.0) {
            return err("[grids] sweep_scales must be positive");
        }
        let output = raw.entry("output", "path").map(|e| PathBuf::from(&e.value));
        Ok(Self {
            scenario,
            grids,
            output,
        })
    }
}

fn model<T>(r: crate::Result<T>) -> CResult<T> {
    r.map_err(|e| ConfigError(e.to_string()))
}

fn build_scenario(raw: &RawConfig) -> CResult<Scenario> {
    // [field]
    let beta_entry = raw.required("field", "beta")?;
    let beta = raw.parse_with("field", "beta", beta_entry, "a positive number or 'inf'", |s| {
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" => Some(InverseTemperature::Infinite),
            _ => parse_finite(s).and_then(|b| InverseTemperature::new(b).ok()),
        }
    })?;
    let lambda = raw.required_real("field", "lambda")?;
    let mass = raw.real_or("field", "mass", 0.0)?;
    let field = model(FieldSpec::new(mass, beta, lambda))?;

    // [switching]
    let kind = &raw.required("switching", "kind")?.value;
    let switching = match kind.as_str() {
        "gaussian" => {
            raw.only("switching", kind, &["center", "width"])?;
            model(SwitchingProfile::gaussian(
                raw.required_real("switching", "center")?,
                raw.required_real("switching", "width")?,
            ))?
        }
        "delta" => {
            raw.only("switching", kind, &[])?;
            SwitchingProfile::Delta
        }
        "tabulated" => {
            raw.only("switching", kind, &["t_start", "dt", "samples"])?;
            let samples = raw
                .reals("switching", "samples")?
                .ok_or_else(|| ConfigError("[switching]: missing required key 'samples'".into()))?;
            SwitchingProfile::Tabulated(model(Tabulated::new(
                raw.required_real("switching", "t_start")?,
                raw.required_real("switching", "dt")?,
                samples,
            ))?)
        }
        other => {
            let e = raw.required("switching", "kind")?;
            return err(format!(
                "{}: [switching] kind: expected gaussian, delta or tabulated, got '{other}'",
                e.origin
            ));
        }
    };

    // [smearing]
    let kind = &raw.required("smearing", "kind")?.value;
    let smearing = match kind.as_str() {
        "gaussian" => {
            raw.only("smearing", kind, &["sigma", "normalization"])?;
            let norm = match raw.entry("smearing", "normalization") {
                None => SmearingNorm::Linear,
                Some(e) => raw.parse_with("smearing", "normalization", e, "linear or volume", |s| match s {
                    "linear" => Some(SmearingNorm::Linear),
                    "volume" => Some(SmearingNorm::Volume),
                    _ => None,
                })?,
            };
            model(SmearingProfile::gaussian(raw.required_real("smearing", "sigma")?, norm))?
        }
        "tabulated" => {
            raw.only("smearing", kind, &["dr", "samples"])?;
            let samples = raw
                .reals("smearing", "samples")?
                .ok_or_else(|| ConfigError("[smearing]: missing required key 'samples'".into()))?;
            model(SmearingProfile::tabulated(raw.required_real("smearing", "dr")?, samples))?
        }
        other => {
            let e = raw.required("smearing", "kind")?;
            return err(format!("{}: [smearing] kind: expected gaussian or tabulated, got '{other}'", e.origin));
        }
    };

    let mut scenario = model(Scenario::new(field, switching, smearing))?;
    let d = scenario.quadrature;
    let q = QuadratureSpec {
        abs_tol: raw.real_or("grids", "abs_tol", d.abs_tol)?,
        rel_tol: raw.real_or("grids", "rel_tol", d.rel_tol)?,
        k_max: raw.real_or("grids", "k_max", d.k_max)?,
        max_subdivisions: raw.count("grids", "max_subdivisions")?.unwrap_or(d.max_subdivisions),
    };
    scenario = model(scenario.with_quadrature(q))?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THERMAL: &str = "\
# thermal case
[field]
beta = 1
lambda = 0.01

[switching]
kind = gaussian   # unit peak
center = 0.5
width = 0.08333333333333333

[smearing]
kind = gaussian
sigma = 1
";

    #[test]
    fn parses_a_full_scenario() {
        let cfg = RunConfig::from_text(THERMAL, &[]).unwrap();
        assert_eq!(cfg.scenario.field.beta, InverseTemperature::Finite(1.0));
        assert_eq!(cfg.scenario.field.coupling, 0.01);
        assert_eq!(cfg.scenario.quadrature.k_max, 240.0);
        assert_eq!(cfg.grids.mu_count, 101);
        assert!(cfg.output.is_none());
    }

    #[test]
    fn overrides_replace_values() {
        let cfg = RunConfig::from_text(THERMAL, &["field.beta=inf".into(), "output.path=out.csv".into()]).unwrap();
        assert!(cfg.scenario.field.beta.is_vacuum());
        assert_eq!(cfg.output, Some(PathBuf::from("out.csv")));
        let e = RunConfig::from_text(THERMAL, &["field.temperature=3".into()]).unwrap_err();
        assert!(e.0.contains("unknown key 'temperature'"), "{e}");
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let e = RunConfig::from_text("", &[]).unwrap_err();
        assert!(e.0.contains("missing section [field]"), "{e}");
        let e = RunConfig::from_text(&THERMAL.replace("lambda = 0.01", "lambda = abc"), &[]).unwrap_err();
        assert!(e.0.contains("line 4") && e.0.contains("lambda"), "{e}");
        let e = RunConfig::from_text(&format!("{THERMAL}foo = 1\n"), &[]).unwrap_err();
        assert!(e.0.contains("line 14") && e.0.contains("unknown key 'foo'"), "{e}");
        let e = RunConfig::from_text(&format!("{THERMAL}[plot]\n"), &[]).unwrap_err();
        assert!(e.0.contains("unknown section [plot]"), "{e}");
        let e = RunConfig::from_text("beta = 1\n", &[]).unwrap_err();
        assert!(e.0.contains("outside any section"), "{e}");
        let e = RunConfig::from_text(&THERMAL.replace("kind = gaussian   # unit peak", "kind = delta"), &[]).unwrap_err();
        assert!(e.0.contains("does not apply"), "{e}");
        let e = RunConfig::from_text(&THERMAL.replace("sigma = 1", "sigma = -1"), &[]).unwrap_err();
        assert!(e.0.contains("sigma"), "{e}");
        let e = RunConfig::from_text(&THERMAL.replace("beta = 1", "beta = 1\nbeta = 2"), &[]).unwrap_err();
        assert!(e.0.contains("already set"), "{e}");
    }
}
