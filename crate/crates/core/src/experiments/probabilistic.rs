//! Monte Carlo checks of the randomized Strichartz tail and of the bilinear estimate.

use num_complex::Complex64;

use super::config::ExperimentConfig;
use super::randomized::gaussian_base;
use super::report::{ExperimentReport, FitSummary, Table};
use crate::error::Result;
use crate::fit::loglog_fit;
use crate::grid::{Field, GridSpec};
use crate::randomization::{
    bilinear_check, free_spacetime_norm, strichartz_tail, BilinearConfig, RandomEnsemble,
    TailReport,
};

fn tail_table(name: &str, tail: &TailReport) -> Table {
    let mut t = Table::new(
        name,
        &["lambda", "survival", "stderr", "exceedances", "fitted"],
    );
    for i in 0..tail.lambdas.len() {
        t.push(vec![
            tail.lambdas[i].into(),
            tail.survival[i].into(),
            tail.stderr[i].into(),
            tail.exceedances[i].into(),
            if tail.fitted.contains(&i) {
                "yes"
            } else {
                "no"
            }
            .into(),
        ]);
    }
    t
}

pub fn run_strichartz_tail(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    let sec = &cfg.strichartz_tail;
    let mut report = ExperimentReport::new("strichartz-tail", seed, &(&cfg.problem, sec))?;
    let pp = cfg.problem.params(sec.dim)?;
    let grid = GridSpec::new(sec.dim, sec.points, sec.half_width)?;
    let tail_cfg = &sec.tail;

    // One active block: the norm is |g| times the norm of the base.
    let mut j = [0i64; 3];
    j[0] = sec.single_block_mode;
    let wave = Field::plane_wave(&grid, &j[..sec.dim])?;
    let single = RandomEnsemble::new(&wave, seed, sec.samples)?;
    let ones = vec![Complex64::new(1.0, 0.0); single.partition().block_count()];
    let c = free_spacetime_norm(
        &single.synthesize(&ones)?,
        tail_cfg.s,
        tail_cfg.q,
        tail_cfg.r,
        tail_cfg.t_end,
        tail_cfg.snapshots,
    )?;
    let target = -1.0 / (c * c);
    let tail = strichartz_tail(&single, &pp, tail_cfg)?;
    report.tables.push(tail_table("single_block", &tail));
    let blocks = single.used_blocks().len();
    match &tail.fit {
        Some(fit) => {
            let rel = ((fit.slope - target) / target).abs();
            report.criterion(
                9,
                "single_block_rayleigh",
                blocks == 1 && rel <= sec.single_block_tolerance,
                format!(
                    "slope {:.5e} vs -1/C^2 = {target:.5e} (relative error {:.3}%, {blocks} block(s))",
                    fit.slope,
                    100.0 * rel
                ),
            );
            report.fits.push(FitSummary::new(
                "single_block_slope",
                fit,
                Some(target),
                Some(sec.single_block_tolerance),
            ));
        }
        None => report.criterion(9, "single_block_rayleigh", false, "no fit".into()),
    }

    let base = gaussian_base(&grid, sec.base_width, 1.0)?;
    let general = RandomEnsemble::new(&base, seed, sec.samples)?;
    let tail = strichartz_tail(&general, &pp, tail_cfg)?;
    report.tables.push(tail_table("general_base", &tail));
    report.note(format!(
        "general base uses {} blocks ({} degenerate blocks skipped)",
        general.used_blocks().len(),
        general.skipped_blocks().len()
    ));
    if !tail.dropped.is_empty() {
        report.note(format!(
            "{} thresholds dropped for too few exceedances",
            tail.dropped.len()
        ));
    }
    match &tail.fit {
        Some(fit) => {
            report.criterion(
                9,
                "general_base_r2",
                fit.slope < 0.0 && fit.r2 >= sec.min_r2,
                format!(
                    "R^2 {:.4} (minimum {}), slope {:.4e} over {} thresholds",
                    fit.r2, sec.min_r2, fit.slope, fit.points
                ),
            );
            report
                .fits
                .push(FitSummary::new("general_base_slope", fit, None, None));
        }
        None => report.criterion(9, "general_base_r2", false, "no fit".into()),
    }
    Ok(report.finish())
}

pub fn run_bilinear(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    let sec = &cfg.bilinear;
    let mut report = ExperimentReport::new("bilinear", seed, sec)?;
    let grid = GridSpec::new(sec.dim, sec.points, sec.half_width)?;
    let mut table = Table::new(
        "ratios",
        &["n_low", "m_high", "t_end", "mean", "max", "min", "std"],
    );
    let mut samples = Table::new("samples", &["m_high", "sample", "ratio"]);
    let (mut ms, mut means, mut maxes) = (Vec::new(), Vec::new(), Vec::new());
    for &ratio in &sec.ratios {
        let bc = BilinearConfig {
            n_low: sec.n_low,
            m_high: sec.n_low * ratio,
            t_end: None,
            samples: sec.samples,
            seed,
            packets: sec.packets,
        };
        let r = bilinear_check(&grid, &bc)?;
        table.push(vec![
            r.n_low.into(),
            r.m_high.into(),
            r.t_end.into(),
            r.mean.into(),
            r.max.into(),
            r.min.into(),
            r.std.into(),
        ]);
        for (i, v) in r.ratios.iter().enumerate() {
            samples.push(vec![r.m_high.into(), i.into(), (*v).into()]);
        }
        ms.push(r.m_high);
        means.push(r.mean);
        maxes.push(r.max);
    }
    report.tables.extend([table, samples]);

    let hi = maxes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = maxes.iter().cloned().fold(f64::INFINITY, f64::min);
    report.criterion(
        10,
        "max_ratio_spread",
        lo > 0.0 && hi / lo <= sec.max_spread,
        format!(
            "max ratios {}, spread {:.4} (limit {})",
            maxes
                .iter()
                .map(|v| format!("{v:.4}"))
                .collect::<Vec<_>>()
                .join(", "),
            hi / lo,
            sec.max_spread
        ),
    );
    match loglog_fit(&ms, &means) {
        Ok(fit) => {
            report.criterion(
                10,
                "mean_ratio_slope",
                fit.slope <= sec.max_slope,
                format!(
                    "slope of log mean ratio vs log M {:.4} (limit {})",
                    fit.slope, sec.max_slope
                ),
            );
            report.fits.push(FitSummary::new(
                "mean_ratio_slope",
                &fit,
                None,
                Some(sec.max_slope),
            ));
        }
        Err(e) => report.criterion(10, "mean_ratio_slope", false, format!("no fit: {e}")),
    }
    Ok(report.finish())
}
