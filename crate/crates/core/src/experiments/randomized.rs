//! Convergence of solutions from mollified randomized data as the mollification vanishes.

use num_complex::Complex64;

use super::config::{ExperimentConfig, RandomizedSection};
use super::report::{sci_list, ExperimentReport, Table};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::profile::Mollifier;
use crate::randomization::{wiener_sample, RandomEnsemble};
use crate::sobolev::{hs_norm, l2_norm, stilde_norm, TrajectoryRecord};
use crate::solver::{evolve, free_propagate, SolverConfig, Storage};

/// Gaussian spectrum `e^{−|ξ|²/(2w²)}` scaled to the requested `L²` norm.
pub fn gaussian_base(grid: &GridSpec, width: f64, l2: f64) -> Result<Field> {
    let raw = Field::from_spectral_fn(grid, |xi| {
        let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        Complex64::new((-k2 / (2.0 * width * width)).exp(), 0.0)
    });
    let norm = l2_norm(&raw);
    if !(norm > 0.0) {
        return Err(Error::Domain("base spectrum vanishes on the grid".into()));
    }
    Ok(raw.scale(Complex64::new(l2 / norm, 0.0)).into_physical())
}

fn trajectory(
    f: &Field,
    cfg: &SolverConfig,
    pp: &crate::bubbles::ProblemParams,
) -> Result<Vec<Field>> {
    let run = evolve(f, cfg, pp)?;
    run.trajectory
        .fields()
        .map(|f| f.iter().map(Field::spectral).collect())
        .ok_or_else(|| Error::Domain("trajectory stored without fields".into()))
}

fn sup_distance(a: &[Field], b: &[Field], s: f64) -> Result<f64> {
    let mut sup = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        sup = sup.max(hs_norm(&x.sub(y)?, s));
    }
    Ok(sup)
}

fn free_stilde(f: &Field, times: &[f64], s: f64) -> Result<f64> {
    let fields: Vec<Field> = times.iter().map(|&t| free_propagate(f, t)).collect();
    stilde_norm(&TrajectoryRecord::from_fields(times.to_vec(), fields)?, s)
}

pub fn epsilon_ladder(sec: &RandomizedSection) -> Vec<f64> {
    (0..sec.levels)
        .map(|j| sec.eps0 * 0.5f64.powi(j as i32))
        .collect()
}

pub fn run_randomized_convergence(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    let sec = &cfg.randomized;
    let mut report = ExperimentReport::new("randomized-convergence", seed, &(&cfg.problem, sec))?;
    let pp = cfg.problem.params(sec.dim)?;
    let grid = GridSpec::new(sec.dim, sec.points, sec.half_width)?;
    let base = gaussian_base(&grid, sec.base_width, sec.base_l2)?;
    let ens = RandomEnsemble::new(&base, seed, sec.samples)?;
    let rho = Mollifier::new(sec.dim);
    let solver = SolverConfig {
        dt: sec.dt,
        t_end: sec.t_end,
        snapshots: sec.snapshots,
        dealias: sec.dealias,
        storage: Storage::Fields,
        ..Default::default()
    };
    let times: Vec<f64> = (0..sec.snapshots)
        .map(|i| sec.t_end * i as f64 / (sec.snapshots - 1) as f64)
        .collect();
    let eps = epsilon_ladder(sec);
    if eps.len() < 2 {
        return Err(Error::Params(
            "the epsilon ladder needs at least two levels".into(),
        ));
    }

    let mut levels = Table::new(
        "levels",
        &[
            "sample",
            "j",
            "eps",
            "data_increment_hs",
            "data_increment_stilde",
            "cauchy_increment",
            "distance_to_reference",
        ],
    );
    let mut samples = Table::new(
        "samples",
        &[
            "sample",
            "datum_hs",
            "datum_stilde",
            "zero_rung_deviation",
            "final_increment_fraction",
        ],
    );
    for i in 0..sec.samples {
        let f = wiener_sample(&ens, i)?;
        let f_hs = hs_norm(&f, pp.s);
        let reference = trajectory(&f, &solver, &pp)?;
        let zero = trajectory(&rho.apply(&f, 0.0)?, &solver, &pp)?;
        let zero_dev = sup_distance(&zero, &reference, pp.s)?;
        drop(zero);

        let mut data_inc = Vec::new();
        let mut cauchy = Vec::new();
        let mut previous: Option<Vec<Field>> = None;
        for (j, &e) in eps.iter().enumerate() {
            let fe = rho.apply(&f, e)?;
            let delta = fe.sub(&f)?;
            let inc = hs_norm(&delta, pp.s);
            let inc_stilde = free_stilde(&delta, &times, pp.s)?;
            let run = trajectory(&fe, &solver, &pp)?;
            let to_ref = sup_distance(&run, &reference, pp.s)?;
            let step = match &previous {
                Some(prev) => sup_distance(&run, prev, pp.s)?,
                None => f64::NAN,
            };
            if j > 0 {
                cauchy.push(step);
            }
            data_inc.push(inc);
            levels.push(vec![
                i.into(),
                j.into(),
                e.into(),
                inc.into(),
                inc_stilde.into(),
                step.into(),
                to_ref.into(),
            ]);
            previous = Some(run);
        }
        let final_fraction = cauchy.last().copied().unwrap_or(f64::NAN) / f_hs;
        samples.push(vec![
            i.into(),
            f_hs.into(),
            free_stilde(&f, &times, pp.s)?.into(),
            zero_dev.into(),
            final_fraction.into(),
        ]);

        report.criterion(
            8,
            &format!("sample{i}_zero_rung"),
            zero_dev == 0.0,
            format!("epsilon = 0 run deviates from the reference by {zero_dev:e}"),
        );
        let data_decreasing = data_inc.windows(2).all(|w| w[1] < w[0]);
        report.criterion(
            8,
            &format!("sample{i}_data_increments"),
            data_decreasing,
            format!("||f*rho_eps - f||_Hs by level {}", sci_list(&data_inc)),
        );
        let non_increasing = cauchy.windows(2).all(|w| w[1] <= w[0]);
        report.criterion(
            8,
            &format!("sample{i}_cauchy_monotone"),
            non_increasing,
            format!("sup_t ||u_(j+1) - u_j||_Hs by level {}", sci_list(&cauchy)),
        );
        report.criterion(
            8,
            &format!("sample{i}_final_increment"),
            final_fraction < sec.final_fraction,
            format!(
                "final increment {:.4e} = {:.4}% of ||f||_Hs (limit {}%)",
                cauchy.last().copied().unwrap_or(f64::NAN),
                100.0 * final_fraction,
                100.0 * sec.final_fraction
            ),
        );
    }
    report.tables.extend([levels, samples]);
    Ok(report.finish())
}
