//! Transform and solver checks that gate the other experiments.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::report::ExperimentReport;
use super::Table;
use crate::error::Result;
use crate::grid::{Field, GridSpec};
use crate::sobolev::{interpolation_check, l2_norm};
use crate::solver::{evolve, ode_propagate, Dealias, SolverConfig, Storage};

/// Relative Parseval and round-trip tolerance.
pub const TRANSFORM_TOL: f64 = 1e-12;
/// Wall-clock budget of the transform check in seconds.
pub const TRANSFORM_BUDGET_S: f64 = 10.0;
pub const DISPERSIONLESS_TOL: f64 = 1e-10;
pub const MASS_TOL: f64 = 1e-10;
pub const ENERGY_TOL: f64 = 1e-6;
pub const ORDER_RANGE: (f64, f64) = (1.8, 2.2);
pub const SOLVER_BUDGET_S: f64 = 120.0;

/// Fills `out` with independent uniform real and imaginary parts in `[−1, 1)`.
/// Fills `orig` and `work` with the same uniform field on `[-1, 1)²` and returns its `ℓ²` norm squared.
fn fill_random(orig: &mut [Complex64], work: &mut [Complex64], seed: u64, stream: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut sq = 0.0;
    for (o, w) in orig.iter_mut().zip(work.iter_mut()) {
        let bits: u64 = rng.random();
        let re = (bits >> 32) as f64 / 2f64.powi(31) - 1.0;
        let im = (bits & 0xffff_ffff) as f64 / 2f64.powi(31) - 1.0;
        *o = Complex64::new(re, im);
        *w = *o;
        sq += o.norm_sqr();
    }
    sq
}

struct TransformStats {
    parseval: f64,
    round_trip: f64,
}

/// Worst relative Parseval defect and round-trip error over `fields` random fields.
/// Buffers are reused so that the check measures the transforms rather than allocation.
fn transform_check(grid: &GridSpec, fields: usize, seed: u64) -> TransformStats {
    let mut stats = TransformStats {
        parseval: 0.0,
        round_trip: 0.0,
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut orig = vec![zero; grid.len()];
    let mut work = vec![zero; grid.len()];
    for i in 0..fields {
        let phys_sq = fill_random(&mut orig, &mut work, seed, i as u64);
        grid.forward_in_place(&mut work);
        let spec_sq: f64 = work.iter().map(|v| v.norm_sqr()).sum();
        let norm = (phys_sq * grid.cell_volume()).sqrt();
        stats.parseval = stats.parseval.max((spec_sq.sqrt() - norm).abs() / norm);
        grid.inverse_in_place(&mut work);
        let diff: f64 = work
            .iter()
            .zip(&orig)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        stats.round_trip = stats.round_trip.max((diff / phys_sq).sqrt());
    }
    stats
}

fn max_relative_diff(a: &Field, b: &Field) -> f64 {
    let (a, b) = (a.physical(), b.physical());
    let scale = b.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let diff = a
        .values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    diff / scale.max(f64::MIN_POSITIVE)
}

fn conj(f: &Field) -> Field {
    f.physical().map(|v| v.conj())
}

pub fn run_solver_validation(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    let sec = &cfg.validation;
    let mut report = ExperimentReport::new("validate", seed, sec)?;

    let mut transform = Table::new(
        "transform",
        &[
            "dim",
            "points",
            "fields",
            "max_parseval_rel",
            "max_round_trip_rel",
            "seconds",
        ],
    );
    let t0 = Instant::now();
    let mut worst = (0.0f64, 0.0f64);
    for &dim in &sec.transform_dims {
        let n = if dim == 1 {
            sec.transform_points_1d
        } else {
            sec.transform_points_3d
        };
        let grid = GridSpec::new(dim, n, PI)?;
        let start = Instant::now();
        let st = transform_check(&grid, sec.random_fields, seed);
        worst.0 = worst.0.max(st.parseval);
        worst.1 = worst.1.max(st.round_trip);
        transform.push(vec![
            dim.into(),
            n.into(),
            sec.random_fields.into(),
            st.parseval.into(),
            st.round_trip.into(),
            start.elapsed().as_secs_f64().into(),
        ]);
    }
    let transform_s = t0.elapsed().as_secs_f64();
    report.tables.push(transform);
    report.criterion(
        1,
        "parseval",
        worst.0 < TRANSFORM_TOL,
        format!(
            "max relative Parseval defect {:.3e} (tolerance {TRANSFORM_TOL:e})",
            worst.0
        ),
    );
    report.criterion(
        1,
        "round-trip",
        worst.1 < TRANSFORM_TOL,
        format!(
            "max relative round-trip error {:.3e} (tolerance {TRANSFORM_TOL:e})",
            worst.1
        ),
    );
    report.criterion(
        1,
        "transform-runtime",
        transform_s < TRANSFORM_BUDGET_S,
        format!("{transform_s:.2} s (budget {TRANSFORM_BUDGET_S} s)"),
    );

    let solver_start = Instant::now();
    let pp = cfg.problem.params(sec.dim)?;
    let grid = GridSpec::new(sec.dim, sec.points, sec.half_width)?;
    let amp = sec.amplitude;
    let f0 = Field::from_fn(&grid, |x| {
        let r2: f64 = x[..sec.dim].iter().map(|c| c * c).sum();
        Complex64::new(amp * (-r2).exp(), 0.0)
    });
    let base = SolverConfig {
        dt: sec.dt,
        t_end: sec.t_end,
        snapshots: 11,
        storage: Storage::Norms,
        ..Default::default()
    };
    let mut solver = Table::new("solver", &["check", "value", "tolerance"]);

    let ode_cfg = SolverConfig {
        dispersion_scale: 0.0,
        dealias: Dealias::Off,
        ..base.clone()
    };
    let ode_run = evolve(&f0, &ode_cfg, &pp)?;
    let ode_err = max_relative_diff(&ode_run.final_field, &ode_propagate(&f0, sec.t_end, &pp)?);
    solver.push(vec![
        "dispersionless".into(),
        ode_err.into(),
        DISPERSIONLESS_TOL.into(),
    ]);
    report.criterion(
        2,
        "dispersionless",
        ode_err < DISPERSIONLESS_TOL,
        format!("max relative deviation from the exact phase flow {ode_err:.3e}"),
    );

    let plain = SolverConfig {
        dealias: Dealias::Off,
        ..base.clone()
    };
    let run = evolve(&f0, &plain, &pp)?;
    let mass_drift = run.conservation.max_mass_drift();
    solver.push(vec![
        "mass_drift".into(),
        mass_drift.into(),
        MASS_TOL.into(),
    ]);
    report.criterion(
        2,
        "mass",
        mass_drift < MASS_TOL,
        format!("max relative mass drift {mass_drift:.3e}"),
    );

    let energy_run = evolve(&f0, &base, &pp)?;
    let cons = &energy_run.conservation;
    let energy_drift = cons.max_energy_drift();
    let mut conservation = Table::new(
        "conservation",
        &["t", "mass", "energy", "drift_mass", "drift_energy"],
    );
    for i in 0..cons.times.len() {
        conservation.push(vec![
            cons.times[i].into(),
            cons.mass[i].into(),
            cons.energy[i].into(),
            cons.drift_mass[i].into(),
            cons.drift_energy[i].into(),
        ]);
    }
    solver.push(vec![
        "energy_drift".into(),
        energy_drift.into(),
        ENERGY_TOL.into(),
    ]);
    report.criterion(
        2,
        "energy",
        energy_drift < ENERGY_TOL,
        format!(
            "max relative energy drift {energy_drift:.3e} at dt = {}",
            sec.dt
        ),
    );

    let mut finals = Vec::new();
    for j in 0..3 {
        let c = SolverConfig {
            dt: sec.order_dt / f64::from(1u32 << j),
            t_end: sec.order_t_end,
            snapshots: 2,
            dealias: Dealias::Off,
            ..base.clone()
        };
        finals.push(evolve(&f0, &c, &pp)?.final_field);
    }
    let e1 = l2_norm(&finals[0].sub(&finals[1])?);
    let e2 = l2_norm(&finals[1].sub(&finals[2])?);
    let order = (e1 / e2).log2();
    solver.push(vec!["order_e1".into(), e1.into(), f64::NAN.into()]);
    solver.push(vec!["order_e2".into(), e2.into(), f64::NAN.into()]);
    solver.push(vec!["order".into(), order.into(), ORDER_RANGE.0.into()]);
    report.criterion(
        2,
        "order",
        (ORDER_RANGE.0..=ORDER_RANGE.1).contains(&order),
        format!("self-convergence order {order:.4} from differences {e1:.3e}, {e2:.3e}"),
    );

    let back = evolve(&conj(&run.final_field), &plain, &pp)?;
    let rev_err = max_relative_diff(&conj(&back.final_field), &f0);
    solver.push(vec![
        "reversibility".into(),
        rev_err.into(),
        f64::NAN.into(),
    ]);
    report.note(format!(
        "time reversal (conjugate, evolve, conjugate) returns the datum within {rev_err:.3e}"
    ));

    let interp = interpolation_check(&f0, pp.s)?;
    solver.push(vec![
        "interpolation_ratio".into(),
        interp.ratio.into(),
        1.0.into(),
    ]);
    report.note(format!(
        "interpolation ratio ||f||_H1^(2-s) / (||f||_Hs ||f||_H2^(1-s)) = {:.6}",
        interp.ratio
    ));

    let solver_s = solver_start.elapsed().as_secs_f64();
    solver.push(vec![
        "seconds".into(),
        solver_s.into(),
        SOLVER_BUDGET_S.into(),
    ]);
    report.criterion(
        2,
        "solver-runtime",
        solver_s < SOLVER_BUDGET_S,
        format!("{solver_s:.2} s (budget {SOLVER_BUDGET_S} s)"),
    );
    report.tables.extend([solver, conservation]);
    Ok(report.finish())
}
