//! Experiment configuration, read from TOML. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bubbles::{BackgroundSpec, Ladder, ProblemParams, TanghuruSpec};
use crate::error::{Error, Result};
use crate::solver::{Dealias, LEAKAGE_FLAG};

/// Nonlinearity and regularity shared by all experiments; each section picks its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub p: u32,
    pub sigma: f64,
    pub s: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        let pp = ProblemParams::default();
        Self {
            p: pp.p,
            sigma: pp.sigma,
            s: pp.s,
        }
    }
}

impl ProblemSection {
    pub fn params(&self, dim: usize) -> Result<ProblemParams> {
        ProblemParams::new(self.p, self.sigma, self.s, dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    /// Random fields per grid in the transform check.
    pub random_fields: usize,
    /// Points per axis of the transform-check grids, by dimension.
    pub transform_points_1d: usize,
    pub transform_points_3d: usize,
    /// Dimensions covered by the transform check.
    pub transform_dims: Vec<usize>,
    /// Dimension of the solver checks.
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
    /// Peak amplitude of the Gaussian datum.
    pub amplitude: f64,
    pub t_end: f64,
    /// Step size of the energy check.
    pub dt: f64,
    /// Coarsest step of the self-convergence study; it is halved twice.
    pub order_dt: f64,
    pub order_t_end: f64,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self {
            random_fields: 100,
            transform_points_1d: 4096,
            transform_points_3d: 128,
            transform_dims: vec![1, 3],
            dim: 1,
            points: 256,
            half_width: 8.0,
            amplitude: 1.0,
            t_end: 1.0,
            dt: 1e-3,
            order_dt: 0.02,
            order_t_end: 0.4,
        }
    }
}

/// Field-level bubble sweep on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleSweep {
    pub points: usize,
    pub half_width: f64,
    pub ns: Vec<f64>,
    /// Absolute tolerance on the fitted n-slope.
    pub tolerance: f64,
}

impl Default for BubbleSweep {
    fn default() -> Self {
        Self {
            points: 4096,
            half_width: 4.0,
            ns: vec![8.0, 16.0, 32.0, 64.0],
            tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MollificationSweep {
    pub n: f64,
    /// Values of `εn`.
    pub en: Vec<f64>,
    pub orders: Vec<f64>,
    /// Field-level grid (used in `d = 1`); `d = 3` uses quadrature.
    pub points: usize,
    pub half_width: f64,
    /// Relative tolerance on the fitted slope.
    pub tolerance: f64,
}

impl Default for MollificationSweep {
    fn default() -> Self {
        Self {
            n: 8.0,
            en: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            orders: vec![1.0, 2.0],
            points: 2048,
            half_width: 16.0,
            tolerance: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileGrowthSection {
    /// Dimensions to run; `--dim` replaces the list.
    pub dims: Vec<usize>,
    pub sweep_1d: BubbleSweep,
    pub sweep_3d: BubbleSweep,
    pub orders: Vec<f64>,
    pub mollification: MollificationSweep,
    /// `log n` values of the lower-bound sweep, evaluated through the scaling identity.
    pub lower_bound_log_ns: Vec<f64>,
    /// Resolution of the auxiliary radial grid.
    pub profile_points: usize,
    pub gamma: f64,
    pub beta: f64,
}

impl Default for ProfileGrowthSection {
    fn default() -> Self {
        Self {
            dims: vec![1, 3],
            sweep_1d: BubbleSweep::default(),
            sweep_3d: BubbleSweep {
                points: 128,
                half_width: 1.0,
                ns: vec![4.0, 8.0],
                tolerance: 0.1,
            },
            orders: vec![0.0, 1.0, 2.0],
            mollification: MollificationSweep::default(),
            lower_bound_log_ns: (1..=8).map(|k| (1u32 << k) as f64).collect(),
            profile_points: 1 << 14,
            gamma: 0.05,
            beta: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSeparationSection {
    pub dim: usize,
    pub ladder: Ladder,
    pub k0: usize,
    /// Number of bubbles in the superposition.
    pub rungs: usize,
    /// Orders below and above `s`.
    pub m_low: f64,
    pub m_high: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl Default for ScaleSeparationSection {
    fn default() -> Self {
        Self {
            dim: 3,
            ladder: Ladder::Geometric { n0: 8.0, r: 16.0 },
            k0: 0,
            rungs: 4,
            m_low: 0.0,
            m_high: 1.0,
            gamma: 0.05,
            beta: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateCheck {
    /// Double-exponential ladder evaluated through the scaling identity.
    pub a: f64,
    pub k_first: usize,
    pub k_last: usize,
    pub profile_points: usize,
    /// Relative tolerance on the fitted exponent.
    pub tolerance: f64,
    /// Largest spectral tail fraction accepted from the auxiliary grid.
    pub max_tail: f64,
}

impl Default for RateCheck {
    fn default() -> Self {
        Self {
            a: 5.0,
            k_first: 3,
            k_last: 8,
            profile_points: 1 << 16,
            tolerance: 0.25,
            max_tail: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InflationSection {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
    pub ladder: Ladder,
    pub k0: usize,
    pub k_max: usize,
    /// One center per bubble, or empty for concentric bubbles.
    pub centers: Vec<[f64; 3]>,
    pub background: Option<BackgroundSpec>,
    pub gamma: f64,
    pub beta: f64,
    /// Rungs to evolve; empty means every rung of the ladder.
    pub rungs: Vec<usize>,
    /// Steps per rung at the nominal step size `t_n / steps_per_rung`.
    pub steps_per_rung: usize,
    pub snapshots: usize,
    pub dealias: Dealias,
    pub dispersion_scale: f64,
    /// Mass fraction outside radius `L/2` at which a rung is aborted.
    pub leakage_threshold: f64,
    pub rate: RateCheck,
}

impl Default for InflationSection {
    fn default() -> Self {
        Self {
            dim: 3,
            points: 128,
            half_width: 0.875,
            ladder: Ladder::Geometric { n0: 4.0, r: 1.5 },
            k0: 0,
            k_max: 2,
            centers: Vec::new(),
            background: None,
            gamma: 0.01,
            beta: 0.24,
            rungs: Vec::new(),
            steps_per_rung: 400,
            snapshots: 41,
            dealias: Dealias::TwoThirds,
            dispersion_scale: 1.0,
            leakage_threshold: LEAKAGE_FLAG,
            rate: RateCheck::default(),
        }
    }
}

impl InflationSection {
    pub fn tanghuru(&self) -> TanghuruSpec {
        TanghuruSpec {
            k0: self.k0,
            k_max: self.k_max,
            ladder: self.ladder,
            centers: self.centers.clone(),
            background: self.background,
            gamma: self.gamma,
            beta: self.beta,
        }
    }

    pub fn rung_list(&self) -> Vec<usize> {
        if self.rungs.is_empty() {
            (self.k0..=self.k_max).collect()
        } else {
            self.rungs.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizedSection {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
    /// Base spectrum `A e^{−|ξ|²/(2w²)}`, normalised to the given `L²` norm.
    pub base_width: f64,
    pub base_l2: f64,
    pub eps0: f64,
    /// Ladder `ε_j = ε₀ 2^{−j}`, `j = 0..levels`.
    pub levels: usize,
    pub samples: usize,
    pub t_end: f64,
    pub dt: f64,
    pub snapshots: usize,
    pub dealias: Dealias,
    /// Final increment must stay below this fraction of `‖f₀^ω‖_{H^s}`.
    pub final_fraction: f64,
}

impl Default for RandomizedSection {
    fn default() -> Self {
        Self {
            dim: 3,
            points: 64,
            half_width: std::f64::consts::PI,
            base_width: 3.0,
            base_l2: 1.0,
            eps0: 0.5,
            levels: 6,
            samples: 3,
            t_end: 0.5,
            dt: 1e-3,
            snapshots: 11,
            dealias: Dealias::TwoThirds,
            final_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrichartzSection {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
    pub samples: usize,
    /// Lattice index of the single-block plane wave.
    pub single_block_mode: i64,
    /// General base spectrum `e^{−|ξ|²/(2w²)}`.
    pub base_width: f64,
    pub tail: crate::randomization::TailConfig,
    /// Relative tolerance on the single-block slope.
    pub single_block_tolerance: f64,
    pub min_r2: f64,
}

impl Default for StrichartzSection {
    fn default() -> Self {
        Self {
            dim: 1,
            points: 256,
            half_width: 8.0 * std::f64::consts::PI,
            samples: 10_000,
            single_block_mode: 16,
            base_width: 2.0,
            tail: Default::default(),
            single_block_tolerance: 0.05,
            min_r2: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilinearSection {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
    pub n_low: f64,
    /// Values of `M/N`.
    pub ratios: Vec<f64>,
    pub samples: usize,
    pub packets: usize,
    pub max_spread: f64,
    pub max_slope: f64,
}

impl Default for BilinearSection {
    fn default() -> Self {
        Self {
            dim: 1,
            points: 4096,
            half_width: 32.0,
            n_low: 1.0,
            ratios: vec![4.0, 8.0, 16.0],
            samples: 8,
            packets: 3,
            max_spread: 2.0,
            max_slope: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub validation: ValidationSection,
    pub profile_growth: ProfileGrowthSection,
    pub scale_separation: ScaleSeparationSection,
    pub inflation: InflationSection,
    pub randomized: RandomizedSection,
    pub strichartz_tail: StrichartzSection,
    pub bilinear: BilinearSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Sets the dimension of the named experiment.
    pub fn set_dim(&mut self, experiment: &str, dim: usize) -> Result<()> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension {dim} not in 1..=3")));
        }
        match experiment {
            "validate" => {
                self.validation.dim = dim;
                self.validation.transform_dims = vec![dim];
            }
            "profile-growth" => self.profile_growth.dims = vec![dim],
            "scale-separation" => self.scale_separation.dim = dim,
            "inflation" => self.inflation.dim = dim,
            "randomized-convergence" => self.randomized.dim = dim,
            "strichartz-tail" => self.strichartz_tail.dim = dim,
            "bilinear" => self.bilinear.dim = dim,
            other => return Err(Error::Config(format!("unknown experiment `{other}`"))),
        }
        Ok(())
    }
}
