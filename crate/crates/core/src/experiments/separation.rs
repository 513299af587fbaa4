//! Coarse and fine partial sums of mollified bubbles across a ladder of scales.

use super::config::ExperimentConfig;
use super::report::{ExperimentReport, Table};
use crate::bubbles::{mollified_bubble_ln_norm, BubbleParams, NormWeight};
use crate::error::{Error, Result};
use crate::profile::{CutoffProfile, Mollifier};

/// Implied constants must stay within this factor across rungs.
pub const SEPARATION_SPREAD: f64 = 2.0;
/// Rungs required for the stability comparison.
pub const MIN_RUNGS: usize = 4;

/// Sum of `exp(terms)` computed stably; zero for an empty slice.
fn log_sum_exp(terms: &[f64]) -> Option<f64> {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if terms.is_empty() || max == f64::NEG_INFINITY {
        return None;
    }
    Some(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
}

struct Series {
    label: String,
    constants: Vec<f64>,
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    max / min
}

pub fn run_scale_separation(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    let sec = &cfg.scale_separation;
    let mut report = ExperimentReport::new("scale-separation", seed, &(&cfg.problem, sec))?;
    let pp = cfg.problem.params(sec.dim)?;
    if !(sec.m_low < pp.s && sec.m_high > pp.s) {
        return Err(Error::Params(format!(
            "need m_low < s < m_high, got {} and {} with s = {}",
            sec.m_low, sec.m_high, pp.s
        )));
    }
    sec.ladder.validate()?;
    let phi = CutoffProfile::new(sec.dim);
    let rho = Mollifier::new(sec.dim);
    let ks: Vec<usize> = (sec.k0..sec.k0 + sec.rungs).collect();
    let bps: Vec<BubbleParams> = ks
        .iter()
        .map(|&k| BubbleParams::from_log_n(sec.ladder.log_n(k), sec.gamma, sec.beta))
        .collect::<Result<_>>()?;
    let ln_n: Vec<f64> = bps.iter().map(|b| b.log_n).collect();
    let half_d = sec.dim as f64 / 2.0;

    let mut table = Table::new(
        "sums",
        &[
            "k",
            "log_n",
            "eps",
            "m",
            "side",
            "sum",
            "normalization",
            "constant",
            "alt_normalization",
            "alt_constant",
        ],
    );
    let mut series = [
        Series {
            label: "low_coarse".into(),
            constants: Vec::new(),
        },
        Series {
            label: "low_fine".into(),
            constants: Vec::new(),
        },
        Series {
            label: "high_coarse".into(),
            constants: Vec::new(),
        },
        Series {
            label: "high_fine".into(),
            constants: Vec::new(),
        },
    ];
    let mut alt_high_coarse = Vec::new();

    for (i, &k) in ks.iter().enumerate() {
        let eps = bps[i].epsilon();
        for (slot, m) in [(0usize, sec.m_low), (2usize, sec.m_high)] {
            let ln_terms: Vec<f64> = bps
                .iter()
                .map(|b| {
                    mollified_bubble_ln_norm(&pp, b, &phi, &rho, eps, NormWeight::Inhomogeneous(m))
                })
                .collect::<Result<_>>()?;
            let coarse = log_sum_exp(&ln_terms[..i]);
            let fine = log_sum_exp(&ln_terms[i + 1..]);
            let low = m < pp.s;

            // Coarse side: `1` for m < s, `n_{k−1}^{m−s}` for m > s (alternative `n_k^{m−s}`).
            let (coarse_norm, coarse_alt) = if low {
                (0.0, f64::NAN)
            } else if i > 0 {
                ((m - pp.s) * ln_n[i - 1], (m - pp.s) * ln_n[i])
            } else {
                (f64::NAN, (m - pp.s) * ln_n[i])
            };
            // Fine side: `n_{k+1}^{m−s}(n_k/n_{k+1})^{d/2}` or `n_k^m n_{k+1}^{−s}(n_k/n_{k+1})^{d/2}`.
            let fine_norm = if i + 1 < bps.len() {
                let ratio = half_d * (ln_n[i] - ln_n[i + 1]);
                if low {
                    (m - pp.s) * ln_n[i + 1] + ratio
                } else {
                    m * ln_n[i] - pp.s * ln_n[i + 1] + ratio
                }
            } else {
                f64::NAN
            };

            for (side, sum, norm, alt) in [
                ("coarse", coarse, coarse_norm, coarse_alt),
                ("fine", fine, fine_norm, f64::NAN),
            ] {
                let value = sum.map_or(0.0, f64::exp);
                let constant = sum.map_or(f64::NAN, |s| (s - norm).exp());
                let alt_constant = sum.map_or(f64::NAN, |s| (s - alt).exp());
                table.push(vec![
                    k.into(),
                    ln_n[i].into(),
                    eps.into(),
                    m.into(),
                    side.into(),
                    value.into(),
                    norm.exp().into(),
                    constant.into(),
                    alt.exp().into(),
                    alt_constant.into(),
                ]);
                if sum.is_some() {
                    let idx = slot + usize::from(side == "fine");
                    series[idx].constants.push(constant);
                    if idx == 2 {
                        alt_high_coarse.push(alt_constant);
                    }
                }
            }
        }
    }
    report.tables.push(table);

    let long_enough = sec.rungs >= MIN_RUNGS;
    if !long_enough {
        report.note(format!(
            "ladder has {} rungs; the stability comparison needs {MIN_RUNGS}",
            sec.rungs
        ));
    }
    for s in &series {
        let sp = spread(&s.constants);
        let ok = long_enough && s.constants.len() >= 2 && sp < SEPARATION_SPREAD;
        report.criterion(
            6,
            &s.label,
            ok,
            format!(
                "implied constants [{}], spread {sp:.4} (limit {SEPARATION_SPREAD})",
                s.constants
                    .iter()
                    .map(|c| format!("{c:.4e}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        );
    }
    if alt_high_coarse.len() >= 2 {
        report.note(format!(
            "coarse sum for m > s normalised by n_k^(m-s) instead of n_(k-1)^(m-s): spread {:.4}",
            spread(&alt_high_coarse)
        ));
    }
    Ok(report.finish())
}
