//! One function per batch command, each producing a CSV table.

use num_complex::Complex64;

use super::config::RunConfig;
use super::csv::{Cell, Table};
use crate::charfn::{charfn, charfn_kms, Scenario};
use crate::field_model::{InverseTemperature, SmearingProfile, SwitchingProfile};
use crate::ramsey_sim::{simulate_delta_ramsey, simulate_perturbative_ramsey, tomography, ModeSet};
use crate::workdist::{crooks_check, distribution_from_charfn_with, localization_sweep, moments, CrooksEntry};
use crate::{Error, Result};

fn header(t: &mut Table, cfg: &RunConfig, command: &str) {
    t.comment(format!("command = {command}"));
    t.comment(format!("scenario = {}", cfg.scenario.fingerprint()));
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn charfn_table(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new(&["mu[1/energy]", "re_charfn[1]", "im_charfn[1]"]);
    header(&mut t, cfg, "charfn");
    for mu in cfg.grids.mu_points() {
        let v = charfn(&cfg.scenario, re(mu))?;
        t.row(vec![mu.into(), v.re.into(), v.im.into()]);
    }
    Ok(t)
}

pub fn pdf_table(cfg: &RunConfig) -> Result<Table> {
    let dist = distribution_from_charfn_with(&cfg.scenario, cfg.grids.mu_intervals)?;
    let md = &dist.metadata;
    let mut t = Table::new(&["W[energy]", "density[1/energy]"]);
    header(&mut t, cfg, "pdf");
    t.meta_real("atom_weight", dist.atom_weight)
        .meta_real("mu_half_span", md.mu_half_span)
        .comment(format!("mu_intervals = {}", md.mu_intervals))
        .meta_real("w_spacing", md.w_spacing)
        .meta_real("tail_ratio", md.tail_ratio.unwrap_or(f64::NAN))
        .comment(format!("clamped = {}", md.clamped))
        .meta_real("max_negative", md.max_negative)
        .comment(format!("ringing = {}", md.ringing))
        .meta_real("max_imaginary", md.max_imaginary);
    let lo = cfg.grids.w_min.unwrap_or(f64::NEG_INFINITY);
    let hi = cfg.grids.w_max.unwrap_or(f64::INFINITY);
    for (w, d) in dist.w_grid.iter().zip(&dist.density) {
        if *w >= lo && *w <= hi {
            t.row(vec![(*w).into(), (*d).into()]);
        }
    }
    Ok(t)
}

pub fn moments_table(cfg: &RunConfig) -> Result<Table> {
    let m = moments(&cfg.scenario)?;
    let mut t = Table::new(&[
        "mean[energy]",
        "second_moment[energy^2]",
        "variance[energy^2]",
        "jarzynski_re[1]",
        "jarzynski_im[1]",
        "partition_ratio[1]",
        "fd_mean[energy]",
        "fd_second_moment[energy^2]",
    ]);
    header(&mut t, cfg, "moments");
    let jz = m.jarzynski_value.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    t.row(vec![
        m.mean.into(),
        m.second_moment.into(),
        m.variance.into(),
        jz.re.into(),
        jz.im.into(),
        m.partition_ratio.unwrap_or(f64::NAN).into(),
        m.fd_mean.into(),
        m.fd_second_moment.into(),
    ]);
    Ok(t)
}

pub fn crooks_table(cfg: &RunConfig) -> Result<Table> {
    let rows = crooks_check(&cfg.scenario, &cfg.grids.crooks_points())?;
    let mut t = Table::new(&["W[energy]", "log_ratio[1]", "beta_W[1]", "deviation[1]"]);
    header(&mut t, cfg, "check-crooks");
    t.comment("reverse process taken identical to the forward process (Z2/Z1 = 1)");
    for r in rows {
        match r {
            CrooksEntry::Checked {
                w,
                log_ratio,
                beta_w,
                deviation,
            } => {
                t.row(vec![w.into(), log_ratio.into(), beta_w.into(), deviation.into()]);
            }
            CrooksEntry::Excluded { w, reason } => {
                t.comment(format!("excluded W = {w:.16e}: {reason}"));
            }
        }
    }
    Ok(t)
}

pub fn jarzynski_table(cfg: &RunConfig) -> Result<Table> {
    let beta = cfg
        .scenario
        .field
        .beta
        .finite()
        .ok_or_else(|| Error::regime("the Jarzynski check needs a finite β"))?;
    let v = charfn_kms(&cfg.scenario, Complex64::new(0.0, beta))?;
    let mut t = Table::new(&["beta[1/energy]", "re_charfn_i_beta[1]", "im_charfn_i_beta[1]", "deviation[1]"]);
    header(&mut t, cfg, "check-jarzynski");
    t.row(vec![beta.into(), v.re.into(), v.im.into(), (v - 1.0).norm().into()]);
    Ok(t)
}

pub fn ramsey_table(cfg: &RunConfig) -> Result<Table> {
    let s = &cfg.scenario;
    let modes = ModeSet::radial(cfg.grids.modes, cfg.grids.mode_k_max, s.field.mass)?;
    let mut t = Table::new(&[
        "mu[1/energy]",
        "simulated_re[1]",
        "simulated_im[1]",
        "continuum_re[1]",
        "continuum_im[1]",
        "abs_diff[1]",
    ]);
    header(&mut t, cfg, "ramsey");
    t.comment(format!("modes = {}", modes.len()))
        .meta_real("mode_k_max", cfg.grids.mode_k_max);
    for mu in cfg.grids.mu_points() {
        let q = if s.is_delta() {
            if !s.field.beta.is_vacuum() {
                return Err(Error::regime("delta coupling is only available on the vacuum (β = ∞)"));
            }
            simulate_delta_ramsey(&modes, s.coupling(), &s.smearing, mu)?
        } else {
            simulate_perturbative_ramsey(&modes, &s.field, &s.switching, &s.smearing, mu)?
        };
        let sim = tomography(&q)?;
        let cont = charfn(s, re(mu))?;
        t.row(vec![
            mu.into(),
            sim.re.into(),
            sim.im.into(),
            cont.re.into(),
            cont.im.into(),
            (sim - cont).norm().into(),
        ]);
    }
    Ok(t)
}

pub fn sweep_table(cfg: &RunConfig) -> Result<Table> {
    let base: Scenario = cfg.scenario.with_beta(InverseTemperature::Infinite);
    let (duration, sigma) = match (&base.switching, &base.smearing) {
        (SwitchingProfile::Gaussian { width, .. }, SmearingProfile::GaussianSpherical { sigma, .. }) => (*width, *sigma),
        _ => return Err(Error::regime("the sweep needs Gaussian switching and smearing")),
    };
    let widths: Vec<(f64, f64)> = cfg.grids.sweep_scales.iter().map(|f| (duration * f, sigma * f)).collect();
    let rows = localization_sweep(&base, &widths)?;
    let mut t = Table::new(&[
        "scale[1]",
        "switching_std[time]",
        "smear_sigma[length]",
        "mean[energy]",
        "std_dev[energy]",
        "ratio[1]",
        "work_probability[1]",
        "conditional_mean[energy]",
    ]);
    header(&mut t, cfg, "sweep");
    t.comment("evaluated on the vacuum of the configured field");
    for (f, r) in cfg.grids.sweep_scales.iter().zip(rows) {
        t.row(vec![
            Cell::Real(*f),
            r.duration.into(),
            r.smear_width.into(),
            r.mean.into(),
            r.std_dev.into(),
            r.ratio.into(),
            r.work_probability.into(),
            r.conditional_mean.into(),
        ]);
    }
    Ok(t)
}
