//! Growth of a single bubble: n-scaling, mollification decay and the phase lower bound.

use super::config::{BubbleSweep, ExperimentConfig};
use super::report::{ExperimentReport, FitSummary, Table};
use crate::bubbles::{
    bubble_initial, mollified_bubble_ln_norm, mollify, BubbleParams, NormWeight, ScaledProfile,
};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::grid::GridSpec;
use crate::profile::{CutoffProfile, Mollifier};
use crate::sobolev::hs_dot_norm;

/// Lower-bound ratios must stay within this factor across the sweep.
pub const LOWER_BOUND_SPREAD: f64 = 2.0;

fn skip_reason(e: &Error) -> Option<String> {
    match e {
        Error::Resolution { .. } | Error::Geometry(_) => Some(e.to_string()),
        _ => None,
    }
}

fn n_sweep(
    cfg: &ExperimentConfig,
    dim: usize,
    sweep: &BubbleSweep,
    report: &mut ExperimentReport,
    table: &mut Table,
) -> Result<()> {
    let sec = &cfg.profile_growth;
    let pp = cfg.problem.params(dim)?;
    let grid = GridSpec::new(dim, sweep.points, sweep.half_width)?;
    let phi = CutoffProfile::new(dim);
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    for &n in &sweep.ns {
        let bp = BubbleParams::new(n, sec.gamma, sec.beta)?;
        match bubble_initial(&pp, &bp, &phi, &grid, &[0.0; 3]) {
            Ok(v) => {
                let norms: Vec<f64> = sec.orders.iter().map(|&m| hs_dot_norm(&v, m)).collect();
                for (&m, &norm) in sec.orders.iter().zip(&norms) {
                    table.push(vec![
                        dim.into(),
                        n.into(),
                        m.into(),
                        norm.into(),
                        (norm / bp.kappa()).into(),
                        "ok".into(),
                    ]);
                }
                rows.push((n, norms));
            }
            Err(e) => match skip_reason(&e) {
                Some(reason) => {
                    report.note(format!("d = {dim}, n = {n} skipped: {reason}"));
                    for &m in &sec.orders {
                        table.push(vec![
                            dim.into(),
                            n.into(),
                            m.into(),
                            f64::NAN.into(),
                            f64::NAN.into(),
                            "skipped".into(),
                        ]);
                    }
                }
                None => return Err(e),
            },
        }
    }
    for (j, &m) in sec.orders.iter().enumerate() {
        let name = format!("n_slope_d{dim}_m{m}");
        let target = m - pp.s;
        let x: Vec<f64> = rows.iter().map(|(n, _)| n.ln()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|(n, norms)| {
                let bp = BubbleParams::new(*n, sec.gamma, sec.beta).expect("validated above");
                (norms[j] / bp.kappa()).ln()
            })
            .collect();
        match linear_fit(&x, &y) {
            Ok(fit) => {
                let ok = (fit.slope - target).abs() <= sweep.tolerance;
                report.criterion(
                    3,
                    &name,
                    ok,
                    format!(
                        "slope {:.4} vs {target:.4} +- {} over {} scales",
                        fit.slope, sweep.tolerance, fit.points
                    ),
                );
                report.fits.push(FitSummary::new(
                    &name,
                    &fit,
                    Some(target),
                    Some(sweep.tolerance),
                ));
            }
            Err(e) => report.criterion(3, &name, false, format!("no fit: {e}")),
        }
    }
    Ok(())
}

fn mollification_sweep(
    cfg: &ExperimentConfig,
    dim: usize,
    report: &mut ExperimentReport,
    table: &mut Table,
) -> Result<()> {
    let sec = &cfg.profile_growth;
    let ms = &sec.mollification;
    let pp = cfg.problem.params(dim)?;
    let phi = CutoffProfile::new(dim);
    let rho = Mollifier::new(dim);
    let bp = BubbleParams::new(ms.n, sec.gamma, sec.beta)?;
    // Field level in d = 1; quadrature of the continuum spectrum otherwise.
    let field = if dim == 1 {
        let grid = GridSpec::new(dim, ms.points, ms.half_width)?;
        Some(bubble_initial(&pp, &bp, &phi, &grid, &[0.0; 3])?)
    } else {
        None
    };
    let method = if field.is_some() {
        "field"
    } else {
        "quadrature"
    };
    for &m in &ms.orders {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &en in &ms.en {
            let eps = en / ms.n;
            let norm = match &field {
                Some(v) => {
                    if 1.0 / ms.n + eps > v.grid().half_width() {
                        report.note(format!(
                            "d = {dim}, en = {en} skipped: support leaves the box"
                        ));
                        continue;
                    }
                    hs_dot_norm(&mollify(v, &rho, eps)?, m)
                }
                None => {
                    mollified_bubble_ln_norm(&pp, &bp, &phi, &rho, eps, NormWeight::Homogeneous(m))?
                        .exp()
                }
            };
            table.push(vec![
                dim.into(),
                method.into(),
                m.into(),
                en.into(),
                norm.into(),
            ]);
            x.push(en.ln());
            y.push(norm.ln());
        }
        let name = format!("mollification_slope_d{dim}_m{m}");
        let target = -(m + dim as f64 / 2.0);
        match linear_fit(&x, &y) {
            Ok(fit) => {
                let ok = ((fit.slope - target) / target).abs() <= ms.tolerance;
                report.criterion(
                    4,
                    &name,
                    ok,
                    format!(
                        "slope {:.4} vs {target} +- {}% ({method})",
                        fit.slope,
                        100.0 * ms.tolerance
                    ),
                );
                report.fits.push(FitSummary::new(
                    &name,
                    &fit,
                    Some(target),
                    Some(ms.tolerance),
                ));
            }
            Err(e) => report.criterion(4, &name, false, format!("no fit: {e}")),
        }
    }
    Ok(())
}

fn lower_bound(
    cfg: &ExperimentConfig,
    dim: usize,
    report: &mut ExperimentReport,
    growth: &mut Table,
    ratios: &mut Table,
) -> Result<()> {
    let sec = &cfg.profile_growth;
    let pp = cfg.problem.params(dim)?;
    let rho = Mollifier::new(dim);
    // εn = 1/100 for every n, so one auxiliary profile serves the whole sweep.
    let smooth = ScaledProfile::new(&pp, &rho, 0.01, sec.profile_points)?;
    let sharp = ScaledProfile::new(&pp, &rho, 0.0, sec.profile_points)?;
    let mut values = Vec::new();
    for &log_n in &sec.lower_bound_log_ns {
        let bp = BubbleParams::from_log_n(log_n, sec.gamma, sec.beta)?;
        let theta = bp.phase_scale(&pp);
        for (label, prof) in [("0", &sharp), ("eps_n", &smooth)] {
            for (t_label, th) in [("0", 0.0), ("t_n", theta)] {
                for &m in &sec.orders {
                    growth.push(vec![
                        dim.into(),
                        log_n.into(),
                        label.into(),
                        t_label.into(),
                        m.into(),
                        prof.bubble_norm(&bp, th, NormWeight::Homogeneous(m)).into(),
                    ]);
                }
            }
        }
        let hs = smooth.bubble_norm(&bp, theta, NormWeight::Inhomogeneous(pp.s));
        let ratio = hs / (bp.kappa() * theta.powf(pp.s));
        let tail = smooth.spectral_tail(theta);
        ratios.push(vec![
            dim.into(),
            log_n.into(),
            theta.into(),
            hs.into(),
            ratio.into(),
            tail.into(),
        ]);
        values.push(ratio);
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let ok = !values.is_empty() && min > 0.0 && max / min < LOWER_BOUND_SPREAD;
    report.criterion(
        5,
        &format!("lower_bound_d{dim}"),
        ok,
        format!(
            "ratio in [{min:.4}, {max:.4}], spread {:.4} (limit {LOWER_BOUND_SPREAD})",
            max / min
        ),
    );
    Ok(())
}

pub fn run_profile_growth(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    let sec = &cfg.profile_growth;
    let mut report = ExperimentReport::new("profile-growth", seed, &(&cfg.problem, sec))?;
    let mut sweep = Table::new(
        "n_sweep",
        &["dim", "n", "m", "norm", "norm_over_kappa", "status"],
    );
    let mut moll = Table::new("mollification", &["dim", "method", "m", "en", "norm"]);
    let mut growth = Table::new("growth", &["dim", "log_n", "eps", "t", "m", "norm"]);
    let mut ratios = Table::new(
        "lower_bound",
        &["dim", "log_n", "theta", "hs_norm", "ratio", "spectral_tail"],
    );
    for &dim in &sec.dims {
        let bubble_sweep = if dim == 1 {
            &sec.sweep_1d
        } else {
            &sec.sweep_3d
        };
        n_sweep(cfg, dim, bubble_sweep, &mut report, &mut sweep)?;
        mollification_sweep(cfg, dim, &mut report, &mut moll)?;
        if dim != 2 {
            lower_bound(cfg, dim, &mut report, &mut growth, &mut ratios)?;
        }
    }
    report.tables.extend([sweep, moll, growth, ratios]);
    Ok(report.finish())
}
