//! Mollified multi-scale data evolved to the inflation time of each rung, compared with
//! the dispersionless bubble and the free evolution of the coarse bubbles.

use std::ops::ControlFlow;

use super::config::{ExperimentConfig, InflationSection};
use super::report::{sci_list, ExperimentReport, FitSummary, Table};
use crate::bubbles::{
    bubble_initial, fine_remainder, linear_correction, mollified_bubble_ln_norm, mollify,
    ode_evolve_pointwise, tanghuru, BubbleParams, Ladder, NormWeight, ProblemParams, ScaledProfile,
};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::grid::{Field, GridSpec};
use crate::profile::{CutoffProfile, Mollifier};
use crate::sobolev::{hs_dot_norm, hs_norm, l2_norm, lp_norm};
use crate::solver::{evolve_observed, free_propagate, leakage_fraction, SolverConfig, Storage};

/// `‖f₀∗ρ_{ε_k}‖_{H^s}` may vary by at most this fraction across rungs.
pub const DATA_VARIATION: f64 = 0.2;
/// Floor of the energy bound `max(2E_n(0), floor)`.
pub const ENERGY_FLOOR: f64 = 0.1;
/// Proxy bound on `‖u − v‖_{H^s}` at the largest rung.
pub const DIFFERENCE_BOUND: f64 = 1.0;
/// Target for the discarded superposition tail relative to the retained data norm.
pub const TRUNCATION_TOL: f64 = 1e-3;
/// Tail summation stops once a term falls below this fraction of the running sum.
const TAIL_TERM_FLOOR: f64 = 1e-12;
const TAIL_MAX_TERMS: usize = 200;
/// Tolerance of the `w(0)` identity, relative to `max(1, ‖f₀∗ρ_ε‖_∞)`.
pub const IDENTITY_TOL: f64 = 1e-10;

/// `E_n = (n^{2s}‖w‖²_{L²} + n^{2(s−2)}‖w‖²_{H²})^{1/2}` for spectral `w`.
pub fn semiclassical_energy(w: &Field, n: f64, s: f64) -> f64 {
    let l2 = l2_norm(w);
    let h2 = hs_norm(w, 2.0);
    (n.powf(2.0 * s) * l2 * l2 + n.powf(2.0 * (s - 2.0)) * h2 * h2).sqrt()
}

fn max_abs(f: &Field) -> f64 {
    f.physical()
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.norm()))
}

/// `Σ_{l>K} ‖ρ_ε ∗ v_{n_l}(0)‖_{H^s}`, a bound on the superposition discarded beyond `K`.
fn truncation_tail(
    sec: &InflationSection,
    pp: &ProblemParams,
    phi: &CutoffProfile,
    rho: &Mollifier,
    eps: f64,
) -> Result<f64> {
    let mut sum = 0.0;
    for l in sec.k_max + 1..=sec.k_max + TAIL_MAX_TERMS {
        let bp = BubbleParams::from_log_n(sec.ladder.log_n(l), sec.gamma, sec.beta)?;
        let term =
            mollified_bubble_ln_norm(pp, &bp, phi, rho, eps, NormWeight::Inhomogeneous(pp.s))?
                .exp();
        sum += term;
        if term <= TAIL_TERM_FLOOR * sum {
            break;
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Completed,
    Leaked,
    Stiff,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::Leaked => "leaked",
            Status::Stiff => "stiff",
        }
    }
}

struct Snapshot {
    t: f64,
    u_hs: f64,
    v_hs: f64,
    diff_hs: f64,
    w_l2: f64,
    w_h2: f64,
    energy: f64,
    w_inf: f64,
    gn_ratio: f64,
    leakage: f64,
}

struct Rung {
    k: usize,
    bp: BubbleParams,
    t_n: f64,
    data_hs: f64,
    identity_err: f64,
    energy0: f64,
    /// Discarded superposition tail over `data_hs`.
    truncation_tail: f64,
    /// `t_n ‖∇v(0)‖²/‖v(0)‖²`: free-flow phase accumulated by the rung bubble by `t_n`.
    dispersive_phase: f64,
    snapshots: Vec<Snapshot>,
    status: Status,
    t_reached: f64,
    steps: usize,
}

impl Rung {
    fn completed(&self) -> bool {
        self.status == Status::Completed
    }

    fn last(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    fn energy_max(&self) -> f64 {
        self.snapshots.iter().fold(0.0f64, |m, s| m.max(s.energy))
    }
}

#[allow(clippy::too_many_arguments)]
fn run_rung(
    sec: &InflationSection,
    pp: &ProblemParams,
    grid: &GridSpec,
    f0: &Field,
    phi: &CutoffProfile,
    rho: &Mollifier,
    k: usize,
) -> Result<Rung> {
    let spec = sec.tanghuru();
    let bp = spec.bubble(k)?;
    let n = bp.n();
    let eps = bp.epsilon();
    let t_n = bp.t_n(pp);
    let s = pp.s;
    let d = grid.dim();

    let data = mollify(f0, rho, eps)?.into_physical();
    let data_hs = hs_norm(&data, s);
    let truncation_tail = truncation_tail(sec, pp, phi, rho, eps)? / data_hs;
    let coarse = linear_correction(pp, &spec, phi, rho, grid, k, eps, 0.0)?.into_spectral();
    let v0 = mollify(
        &bubble_initial(pp, &bp, phi, grid, &spec.center(k))?,
        rho,
        eps,
    )?
    .into_physical();
    let w0 = data.sub(&coarse)?.sub(&v0)?;
    let fine = fine_remainder(pp, &spec, phi, rho, grid, k, eps)?;
    let identity_err = max_abs(&w0.sub(&fine)?) / max_abs(&data).max(1.0);
    let energy0 = semiclassical_energy(&w0.spectral(), n, s);
    let dispersive_phase =
        sec.dispersion_scale * t_n * (hs_dot_norm(&v0, 1.0) / l2_norm(&v0)).powi(2);

    let cfg = SolverConfig {
        dt: t_n / sec.steps_per_rung as f64,
        t_end: t_n,
        snapshots: sec.snapshots,
        dealias: sec.dealias,
        dispersion_scale: sec.dispersion_scale,
        storage: Storage::Norms,
        record_exponents: vec![2.0],
        ..Default::default()
    };
    let mut snapshots = Vec::new();
    let mut status = Status::Completed;
    let amplitude_scale = n.powf(d as f64 / 2.0 - s);
    let observer = |t: f64, u: &Field| {
        let u_spec = u.spectral();
        let u_lin = free_propagate(&coarse, sec.dispersion_scale * t);
        let v = ode_evolve_pointwise(&v0, pp, t).into_spectral();
        let w = u_spec
            .sub(&u_lin)
            .and_then(|x| x.sub(&v))
            .expect("same grid");
        let diff = u_spec.sub(&v).expect("same grid");
        let energy = semiclassical_energy(&w, n, s);
        let w_inf = lp_norm(&w, f64::INFINITY).expect("valid exponent");
        let gn_ratio = if energy > 0.0 {
            w_inf / (amplitude_scale * energy)
        } else {
            0.0
        };
        let leakage = leakage_fraction(u);
        snapshots.push(Snapshot {
            t,
            u_hs: hs_norm(&u_spec, s),
            v_hs: hs_norm(&v, s),
            diff_hs: hs_norm(&diff, s),
            w_l2: l2_norm(&w),
            w_h2: hs_norm(&w, 2.0),
            energy,
            w_inf,
            gn_ratio,
            leakage,
        });
        if leakage > sec.leakage_threshold {
            status = Status::Leaked;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    };
    let (t_reached, steps) = match evolve_observed(&data, &cfg, pp, observer) {
        Ok(run) => (run.t_reached, run.steps),
        Err(Error::Stiffness { t, partial, .. }) => {
            status = Status::Stiff;
            (t, partial.steps)
        }
        Err(e) => return Err(e),
    };
    Ok(Rung {
        k,
        bp,
        t_n,
        data_hs,
        identity_err,
        energy0,
        truncation_tail,
        dispersive_phase,
        snapshots,
        status,
        t_reached,
        steps,
    })
}

/// Exponent of `‖v_n^{ε_n}(t_n)‖_{H^s}` in `log n`: `s(β−γ)(p−1) − γ`.
pub fn predicted_rate(pp: &ProblemParams, gamma: f64, beta: f64) -> f64 {
    pp.s * (beta - gamma) * (pp.p as f64 - 1.0) - gamma
}

fn rate_checks(
    sec: &InflationSection,
    pp: &ProblemParams,
    report: &mut ExperimentReport,
) -> Result<Table> {
    let rate = &sec.rate;
    let mut table = Table::new(
        "rate",
        &[
            "ladder",
            "k",
            "log_n",
            "theta",
            "v_hs",
            "spectral_tail",
            "used",
        ],
    );
    let rho = Mollifier::new(pp.dim);
    // εn = 1/100 on every rung.
    let profile = ScaledProfile::new(pp, &rho, 0.01, rate.profile_points)?;
    let target = predicted_rate(pp, sec.gamma, sec.beta);

    let ladder = Ladder::DoubleExponential { a: rate.a };
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for k in rate.k_first..=rate.k_last {
        let bp = BubbleParams::from_log_n(ladder.log_n(k), sec.gamma, sec.beta)?;
        let theta = bp.phase_scale(pp);
        let v_hs = profile.bubble_norm(&bp, theta, NormWeight::Inhomogeneous(pp.s));
        let tail = profile.spectral_tail(theta);
        let used = tail <= rate.max_tail;
        if used {
            x.push(bp.log_n.ln());
            y.push(v_hs.ln());
        }
        table.push(vec![
            "double_exponential".into(),
            k.into(),
            bp.log_n.into(),
            theta.into(),
            v_hs.into(),
            tail.into(),
            if used { "yes" } else { "no" }.into(),
        ]);
    }
    match linear_fit(&x, &y) {
        Ok(fit) => {
            let ok = ((fit.slope - target) / target).abs() <= rate.tolerance;
            report.criterion(
                7,
                "rate_double_exponential",
                ok,
                format!(
                    "exponent of log n {:.4} vs {target:.4} +- {}%",
                    fit.slope,
                    100.0 * rate.tolerance
                ),
            );
            report.fits.push(FitSummary::new(
                "rate_double_exponential",
                &fit,
                Some(target),
                Some(rate.tolerance),
            ));
        }
        Err(e) => report.criterion(7, "rate_double_exponential", false, format!("no fit: {e}")),
    }

    let mut values = Vec::new();
    for k in sec.k0..=sec.k_max {
        let bp = BubbleParams::from_log_n(sec.ladder.log_n(k), sec.gamma, sec.beta)?;
        let theta = bp.phase_scale(pp);
        let v_hs = profile.bubble_norm(&bp, theta, NormWeight::Inhomogeneous(pp.s));
        values.push(v_hs);
        table.push(vec![
            "run".into(),
            k.into(),
            bp.log_n.into(),
            theta.into(),
            v_hs.into(),
            profile.spectral_tail(theta).into(),
            "yes".into(),
        ]);
    }
    let monotone = values.windows(2).all(|w| w[1] > w[0]);
    report.criterion(
        7,
        "rate_run_ladder_monotone",
        monotone,
        format!(
            "bubble norms at t_n along the run ladder {}",
            sci_list(&values)
        ),
    );
    Ok(table)
}

pub fn run_inflation(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    let sec = &cfg.inflation;
    let mut report = ExperimentReport::new("inflation", seed, &(&cfg.problem, sec))?;
    let pp = cfg.problem.params(sec.dim)?;
    pp.require_supercritical()?;
    let spec = sec.tanghuru();
    spec.validate(&pp)?;
    let grid = GridSpec::new(sec.dim, sec.points, sec.half_width)?;
    let phi = CutoffProfile::new(sec.dim);
    let rho = Mollifier::new(sec.dim);
    let f0 = tanghuru(&pp, &spec, &phi, &grid)?;

    let mut rungs = Vec::new();
    for k in sec.rung_list() {
        let rung = run_rung(sec, &pp, &grid, &f0, &phi, &rho, k)?;
        if !rung.completed() {
            report.note(format!(
                "rung k = {} aborted ({}) at t = {:.4e} of t_n = {:.4e}",
                rung.k,
                rung.status.label(),
                rung.t_reached,
                rung.t_n
            ));
        }
        rungs.push(rung);
    }

    let mut series = Table::new(
        "series",
        &[
            "k",
            "n",
            "t",
            "u_hs",
            "v_hs",
            "u_minus_v_hs",
            "w_l2",
            "w_h2",
            "energy",
            "w_inf",
            "gn_ratio",
            "leakage",
        ],
    );
    let mut summary = Table::new(
        "rungs",
        &[
            "k",
            "n",
            "eps",
            "t_n",
            "data_hs",
            "u_hs_final",
            "v_hs_final",
            "u_minus_v_hs_final",
            "energy0",
            "energy_max",
            "w0_identity_err",
            "truncation_tail",
            "dispersive_phase",
            "status",
            "t_reached",
            "steps",
        ],
    );
    for r in &rungs {
        for s in &r.snapshots {
            series.push(vec![
                r.k.into(),
                r.bp.n().into(),
                s.t.into(),
                s.u_hs.into(),
                s.v_hs.into(),
                s.diff_hs.into(),
                s.w_l2.into(),
                s.w_h2.into(),
                s.energy.into(),
                s.w_inf.into(),
                s.gn_ratio.into(),
                s.leakage.into(),
            ]);
        }
        let fin = |f: fn(&Snapshot) -> f64| -> f64 {
            if r.completed() {
                r.last().map_or(f64::NAN, f)
            } else {
                f64::NAN
            }
        };
        summary.push(vec![
            r.k.into(),
            r.bp.n().into(),
            r.bp.epsilon().into(),
            r.t_n.into(),
            r.data_hs.into(),
            fin(|s| s.u_hs).into(),
            fin(|s| s.v_hs).into(),
            fin(|s| s.diff_hs).into(),
            r.energy0.into(),
            r.energy_max().into(),
            r.identity_err.into(),
            r.truncation_tail.into(),
            r.dispersive_phase.into(),
            r.status.label().into(),
            r.t_reached.into(),
            r.steps.into(),
        ]);
    }

    let all_done = rungs.iter().all(Rung::completed);
    report.criterion(
        7,
        "rungs_completed",
        all_done,
        format!(
            "statuses {:?}",
            rungs.iter().map(|r| r.status.label()).collect::<Vec<_>>()
        ),
    );
    let identity = rungs.iter().fold(0.0f64, |m, r| m.max(r.identity_err));
    report.criterion(
        7,
        "w0_identity",
        identity <= IDENTITY_TOL,
        format!("max deviation of w(0) from the fine remainder {identity:.3e}"),
    );
    let finals: Vec<f64> = rungs
        .iter()
        .map(|r| {
            if r.completed() {
                r.last().map_or(f64::NAN, |s| s.u_hs)
            } else {
                f64::NAN
            }
        })
        .collect();
    let increasing = all_done && finals.windows(2).all(|w| w[1] > w[0]);
    report.criterion(
        7,
        "u_hs_increasing",
        increasing,
        format!("||u(t_n)||_Hs by rung {}", sci_list(&finals)),
    );
    let data: Vec<f64> = rungs.iter().map(|r| r.data_hs).collect();
    let dmax = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dmin = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let variation = dmax / dmin - 1.0;
    report.criterion(
        7,
        "data_bounded",
        variation < DATA_VARIATION,
        format!(
            "||f0*rho_eps||_Hs by rung {}, variation {:.2}%",
            sci_list(&data),
            100.0 * variation
        ),
    );
    let energy_ok = rungs
        .iter()
        .all(|r| r.completed() && r.energy_max() <= (2.0 * r.energy0).max(ENERGY_FLOOR));
    report.criterion(
        7,
        "energy_bound",
        energy_ok,
        format!(
            "sup E_n {} against E_n(0) {} by rung",
            sci_list(&rungs.iter().map(Rung::energy_max).collect::<Vec<_>>()),
            sci_list(&rungs.iter().map(|r| r.energy0).collect::<Vec<_>>())
        ),
    );
    let last_diff = rungs
        .iter()
        .max_by(|a, b| a.bp.log_n.total_cmp(&b.bp.log_n))
        .filter(|r| r.completed())
        .and_then(|r| r.last().map(|s| s.diff_hs))
        .unwrap_or(f64::NAN);
    report.criterion(
        7,
        "difference_bound",
        last_diff <= DIFFERENCE_BOUND,
        format!(
            "||u - v||_Hs at the largest rung {last_diff:.4e} (proxy bound {DIFFERENCE_BOUND})"
        ),
    );
    report.note(
        "the bound ||u - v||_Hs <= 1 at the largest rung is a chosen proxy for an unquantified constant"
            .to_string(),
    );

    let tails: Vec<f64> = rungs.iter().map(|r| r.truncation_tail).collect();
    let worst_tail = tails.iter().cloned().fold(0.0, f64::max);
    report.note(format!(
        "discarded superposition tail over ||f0*rho_eps||_Hs by rung {}: {} the target {TRUNCATION_TOL:e}",
        sci_list(&tails),
        if worst_tail < TRUNCATION_TOL { "within" } else { "exceeds" }
    ));
    report.note(format!(
        "free-flow phase t_n <|xi|^2> of the rung bubble by rung {}; small dispersion needs this << 1",
        sci_list(&rungs.iter().map(|r| r.dispersive_phase).collect::<Vec<_>>())
    ));

    report.tables.extend([series, summary]);
    let rate = rate_checks(sec, &pp, &mut report)?;
    report.tables.push(rate);
    Ok(report.finish())
}
