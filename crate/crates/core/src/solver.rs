//! Strang-split spectral integration of `i∂ₜu + Δu + σ|u|^{p−1}u = 0`.
//!
//! The free flow multiplies `û` by `e^{−i|ξ|²t}`; the dispersionless flow is the exact
//! phase rotation `u ↦ u·e^{iσt|u|^{p−1}}`.

use std::f64::consts::PI;
use std::ops::ControlFlow;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubbles::ProblemParams;
use crate::error::{Error, Result};
use crate::grid::{det_sum, radial_table, Field, GridSpec, Representation};
use crate::sobolev::{hs_dot_norm, l2_norm, lp_norm, TrajectoryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dealias {
    TwoThirds,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Storage {
    /// Keep every snapshot.
    Fields,
    /// Keep only the `L^r` norms listed in [`SolverConfig::record_exponents`].
    Norms,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshots: usize,
    pub dealias: Dealias,
    /// Largest nonlinear phase `dt·|σ|·‖u‖_∞^{p−1}` allowed in one step.
    pub cfl_guard: f64,
    /// Factor on the Laplacian; 0 gives the dispersionless equation.
    pub dispersion_scale: f64,
    /// Factor on the nonlinearity; 0 gives the free equation.
    pub nonlinear_scale: f64,
    pub storage: Storage,
    pub record_exponents: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            snapshots: 64,
            dealias: Dealias::TwoThirds,
            cfl_guard: PI / 8.0,
            dispersion_scale: 1.0,
            nonlinear_scale: 1.0,
            storage: Storage::Norms,
            record_exponents: vec![2.0, 4.0, 5.0, 30.0 / 7.0, f64::INFINITY],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Params(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Params(format!(
                "t_end = {} must be >= 0",
                self.t_end
            )));
        }
        if self.snapshots < 2 {
            return Err(Error::Params(format!(
                "snapshots = {} must be >= 2",
                self.snapshots
            )));
        }
        if !(self.cfl_guard > 0.0) {
            return Err(Error::Params("cfl_guard must be positive".into()));
        }
        Ok(())
    }
}

/// Mass and energy along the stored snapshots.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub drift_mass: Vec<f64>,
    pub drift_energy: Vec<f64>,
}

impl ConservationReport {
    fn push(&mut self, t: f64, mass: f64, energy: f64) {
        let m0 = *self.mass.first().unwrap_or(&mass);
        let e0 = *self.energy.first().unwrap_or(&energy);
        self.times.push(t);
        self.mass.push(mass);
        self.energy.push(energy);
        self.drift_mass.push(relative(mass, m0));
        self.drift_energy.push(relative(energy, e0));
    }

    /// Largest relative mass drift over the run.
    pub fn max_mass_drift(&self) -> f64 {
        self.drift_mass.iter().fold(0.0, |a, d| a.max(d.abs()))
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.drift_energy.iter().fold(0.0, |a, d| a.max(d.abs()))
    }
}

fn relative(x: f64, x0: f64) -> f64 {
    if x0 == 0.0 {
        x - x0
    } else {
        (x - x0) / x0.abs()
    }
}

/// Mass fraction flagged as leaked into the outer half of the periodic box.
pub const LEAKAGE_FLAG: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Evolution {
    pub trajectory: TrajectoryRecord,
    pub conservation: ConservationReport,
    /// Largest fraction of mass outside the ball of radius `L/2` over the snapshots.
    pub leakage: f64,
    pub steps: usize,
    /// Step size in use when the run ended.
    pub final_dt: f64,
    /// Time reached; equals `t_end` for a completed run.
    pub t_reached: f64,
    pub final_field: Field,
}

impl Evolution {
    pub fn leakage_flagged(&self) -> bool {
        self.leakage > LEAKAGE_FLAG
    }
}

/// `M(u) = ½∫|u|²`.
pub fn mass(f: &Field) -> f64 {
    0.5 * l2_norm(f).powi(2)
}

/// `H(u) = ½∫|∇u|² − σ/(p+1) ∫|u|^{p+1}`.
pub fn energy(f: &Field, pp: &ProblemParams) -> f64 {
    energy_scaled(f, pp, 1.0, 1.0)
}

fn energy_scaled(f: &Field, pp: &ProblemParams, dispersion: f64, nonlinear: f64) -> f64 {
    let q = pp.p as f64 + 1.0;
    let grad = hs_dot_norm(f, 1.0).powi(2);
    let pot = lp_norm(f, q).expect("q >= 1").powf(q);
    0.5 * dispersion * grad - nonlinear * pp.sigma / q * pot
}

/// Exact free flow over time `t`; the result keeps the representation of `f`.
pub fn free_propagate(f: &Field, t: f64) -> Field {
    free_propagate_scaled(f, t, 1.0)
}

fn free_propagate_scaled(f: &Field, t: f64, dispersion: f64) -> Field {
    if t == 0.0 || dispersion == 0.0 {
        return f.clone();
    }
    let repr = f.representation();
    let out = f
        .spectral()
        .apply_radial(|k| Complex64::from_polar(1.0, -dispersion * k * k * t))
        .expect("spectral input");
    match repr {
        Representation::Physical => out.into_physical(),
        Representation::Spectral => out,
    }
}

fn ode_in_place(values: &mut [Complex64], t: f64, sigma: f64, p: u32) {
    let half = (p - 1) / 2;
    values.par_iter_mut().for_each(|u| {
        let m = u.norm_sqr().powi(half as i32);
        *u *= Complex64::from_polar(1.0, sigma * t * m);
    });
}

/// Exact dispersionless flow `u ↦ u·e^{iσt|u|^{p−1}}`.
pub fn ode_propagate(f: &Field, t: f64, pp: &ProblemParams) -> Result<Field> {
    if f.representation() != Representation::Physical {
        return Err(Error::Representation {
            expected: Representation::Physical,
            found: f.representation(),
        });
    }
    let mut out = f.clone();
    ode_in_place(out.values_mut(), t, pp.sigma, pp.p);
    Ok(out)
}

/// Precomputed multipliers for Strang steps of one size.
struct Stepper {
    grid: GridSpec,
    dt: f64,
    sigma: f64,
    p: u32,
    guard: f64,
    /// Free propagator per radial slot.
    propagator: Vec<Complex64>,
    keep: Option<Vec<bool>>,
}

impl Stepper {
    fn new(grid: &GridSpec, dt: f64, pp: &ProblemParams, cfg: &SolverConfig) -> Self {
        let disp = cfg.dispersion_scale;
        let propagator = radial_table(grid, |k| Complex64::from_polar(1.0, -disp * k * k * dt));
        let keep = match cfg.dealias {
            Dealias::TwoThirds => Some(
                (0..grid.len())
                    .into_par_iter()
                    .map(|i| grid.dealias_keep(i))
                    .collect(),
            ),
            Dealias::Off => None,
        };
        Self {
            grid: grid.clone(),
            dt,
            sigma: pp.sigma * cfg.nonlinear_scale,
            p: pp.p,
            guard: cfg.cfl_guard,
            propagator,
            keep,
        }
    }

    fn phase(&self, values: &[Complex64]) -> f64 {
        let max2 = values
            .par_iter()
            .map(|v| v.norm_sqr())
            .reduce(|| 0.0, f64::max);
        self.dt.abs() * self.sigma.abs() * max2.powf((self.p as f64 - 1.0) / 2.0)
    }

    fn dealias(&self, values: &mut [Complex64]) {
        if let Some(keep) = &self.keep {
            values
                .par_iter_mut()
                .zip(keep.par_iter())
                .for_each(|(v, &k)| {
                    if !k {
                        *v = Complex64::new(0.0, 0.0);
                    }
                });
        }
    }

    /// One step on physical values; fails without touching the state if the guard trips.
    fn step(&self, values: &mut [Complex64]) -> Result<()> {
        let phase = self.phase(values);
        if phase > self.guard {
            return Err(Error::StepSize {
                phase,
                guard: self.guard,
            });
        }
        let half = 0.5 * self.dt;
        ode_in_place(values, half, self.sigma, self.p);
        self.grid.forward_in_place(values);
        self.dealias(values);
        let slots = self.grid.radial_slots();
        values
            .par_iter_mut()
            .zip(slots.par_iter())
            .for_each(|(v, &s)| *v *= self.propagator[s as usize]);
        self.grid.inverse_in_place(values);
        ode_in_place(values, half, self.sigma, self.p);
        if self.keep.is_some() {
            self.grid.forward_in_place(values);
            self.dealias(values);
            self.grid.inverse_in_place(values);
        }
        Ok(())
    }
}

/// One Strang step with the default guard and two-thirds dealiasing.
pub fn strang_step(f: &Field, dt: f64, pp: &ProblemParams) -> Result<Field> {
    strang_step_with(f, dt, pp, &SolverConfig::default())
}

/// One Strang step using the dealiasing, guard and scale settings of `cfg` (its `dt` is
/// ignored in favour of the argument).
pub fn strang_step_with(
    f: &Field,
    dt: f64,
    pp: &ProblemParams,
    cfg: &SolverConfig,
) -> Result<Field> {
    if f.representation() != Representation::Physical {
        return Err(Error::Representation {
            expected: Representation::Physical,
            found: f.representation(),
        });
    }
    let stepper = Stepper::new(f.grid(), dt, pp, cfg);
    let mut out = f.clone();
    stepper.step(out.values_mut())?;
    Ok(out)
}

/// Mass fraction outside the centered ball of radius `L/2`.
pub fn leakage_fraction(f: &Field) -> f64 {
    let phys = f.physical();
    let grid = phys.grid();
    let r2 = (0.5 * grid.half_width()).powi(2);
    let d = grid.dim();
    let total = det_sum(phys.values(), |_, v| v.norm_sqr());
    if total == 0.0 {
        return 0.0;
    }
    let outside = det_sum(phys.values(), |i, v| {
        let x = grid.point(i);
        let rr: f64 = x[..d].iter().map(|c| c * c).sum();
        if rr > r2 {
            v.norm_sqr()
        } else {
            0.0
        }
    });
    outside / total
}

struct Recorder<'a> {
    cfg: &'a SolverConfig,
    pp: &'a ProblemParams,
    times: Vec<f64>,
    fields: Vec<Field>,
    norms: Vec<Vec<f64>>,
    conservation: ConservationReport,
    leakage: f64,
}

impl<'a> Recorder<'a> {
    fn record(&mut self, t: f64, f: &Field) {
        self.times.push(t);
        self.conservation.push(
            t,
            mass(f),
            energy_scaled(
                f,
                self.pp,
                self.cfg.dispersion_scale,
                self.cfg.nonlinear_scale,
            ),
        );
        self.leakage = self.leakage.max(leakage_fraction(f));
        match self.cfg.storage {
            Storage::Fields => self.fields.push(f.clone()),
            Storage::Norms => self.norms.push(
                self.cfg
                    .record_exponents
                    .iter()
                    .map(|&r| lp_norm(f, r).expect("recorded exponents are >= 1"))
                    .collect(),
            ),
        }
    }

    fn finish(self, steps: usize, final_dt: f64, t_reached: f64, final_field: Field) -> Evolution {
        let trajectory = match self.cfg.storage {
            Storage::Fields => TrajectoryRecord::from_fields(self.times, self.fields),
            Storage::Norms => TrajectoryRecord::from_norms(
                self.times,
                self.cfg.record_exponents.clone(),
                self.norms,
            ),
        }
        .expect("recorder keeps a consistent shape");
        Evolution {
            trajectory,
            conservation: self.conservation,
            leakage: self.leakage,
            steps,
            final_dt,
            t_reached,
            final_field,
        }
    }
}

/// Evolves `f0` to `cfg.t_end`, storing uniformly spaced snapshots.
pub fn evolve(f0: &Field, cfg: &SolverConfig, pp: &ProblemParams) -> Result<Evolution> {
    evolve_observed(f0, cfg, pp, |_, _| ControlFlow::Continue(()))
}

/// As [`evolve`], calling `observer(t, u)` on every snapshot (physical representation).
/// A `Break` from the observer ends the run early; `t_reached` then records the time of
/// that snapshot.
///
/// Step sizes are halved whenever the nonlinear phase guard would be exceeded. If the
/// step would have to drop below `1e-12·t_end` the run stops with
/// [`Error::Stiffness`], which carries the partial evolution.
pub fn evolve_observed<O>(
    f0: &Field,
    cfg: &SolverConfig,
    pp: &ProblemParams,
    mut observer: O,
) -> Result<Evolution>
where
    O: FnMut(f64, &Field) -> ControlFlow<()>,
{
    cfg.validate()?;
    let grid = f0.grid().clone();
    let mut state = f0.physical();
    let mut rec = Recorder {
        cfg,
        pp,
        times: Vec::with_capacity(cfg.snapshots),
        fields: Vec::new(),
        norms: Vec::new(),
        conservation: ConservationReport::default(),
        leakage: 0.0,
    };
    rec.record(0.0, &state);
    if observer(0.0, &state).is_break() {
        return Ok(rec.finish(0, cfg.dt, 0.0, state));
    }

    let t_end = cfg.t_end;
    if t_end == 0.0 {
        // A zero-length run records only the initial state.
        return Ok(rec.finish(0, cfg.dt, 0.0, state));
    }

    let interval = t_end / (cfg.snapshots - 1) as f64;
    let min_dt = 1e-12 * t_end;
    let mut h = cfg.dt;
    let mut steps = 0usize;
    let mut stepper: Option<Stepper> = None;

    for i in 1..cfg.snapshots {
        let t_start = interval * (i - 1) as f64;
        let mut remaining = interval;
        'interval: while remaining > 0.0 {
            let n = ((remaining / h) - 1e-9).ceil().max(1.0) as usize;
            let step = remaining / n as f64;
            if stepper.as_ref().is_none_or(|s| s.dt != step) {
                stepper = Some(Stepper::new(&grid, step, pp, cfg));
            }
            let st = stepper.as_ref().expect("stepper just built");
            for done in 0..n {
                match st.step(state.values_mut()) {
                    Ok(()) => steps += 1,
                    Err(Error::StepSize { .. }) => {
                        h = 0.5 * step;
                        remaining = step * (n - done) as f64;
                        if h < min_dt {
                            let t = t_start + interval - remaining;
                            if rec.times.last().is_some_and(|&last| t > last) {
                                rec.record(t, &state);
                                let _ = observer(t, &state);
                            }
                            return Err(Error::Stiffness {
                                t,
                                dt: h,
                                partial: Box::new(rec.finish(steps, h, t, state)),
                            });
                        }
                        continue 'interval;
                    }
                    Err(e) => return Err(e),
                }
            }
            remaining = 0.0;
        }
        let t = if i + 1 == cfg.snapshots {
            t_end
        } else {
            interval * i as f64
        };
        rec.record(t, &state);
        if observer(t, &state).is_break() {
            return Ok(rec.finish(steps, h, t, state));
        }
    }
    Ok(rec.finish(steps, h, t_end, state))
}
