//! Experiment harness: configuration, report assembly and the experiment runners.

mod config;
mod inflation;
mod probabilistic;
mod profile_growth;
mod randomized;
mod report;
mod separation;
mod validation;

pub use config::{
    BilinearSection, ExperimentConfig, InflationSection, ProfileGrowthSection, RandomizedSection,
    ScaleSeparationSection, StrichartzSection, ValidationSection,
};
pub use inflation::run_inflation;
pub use probabilistic::{run_bilinear, run_strichartz_tail};
pub use profile_growth::run_profile_growth;
pub use randomized::run_randomized_convergence;
pub use report::{build_id, Cell, Criterion, ExperimentReport, FitSummary, Table};
pub use separation::run_scale_separation;
pub use validation::run_solver_validation;

/// Experiment identifiers as used on the command line.
pub const EXPERIMENTS: [&str; 7] = [
    "validate",
    "profile-growth",
    "scale-separation",
    "inflation",
    "randomized-convergence",
    "strichartz-tail",
    "bilinear",
];

/// Runs the experiment with the given identifier.
pub fn run(id: &str, cfg: &ExperimentConfig, seed: u64) -> crate::Result<ExperimentReport> {
    match id {
        "validate" => run_solver_validation(cfg, seed),
        "profile-growth" => run_profile_growth(cfg, seed),
        "scale-separation" => run_scale_separation(cfg, seed),
        "inflation" => run_inflation(cfg, seed),
        "randomized-convergence" => run_randomized_convergence(cfg, seed),
        "strichartz-tail" => run_strichartz_tail(cfg, seed),
        "bilinear" => run_bilinear(cfg, seed),
        other => Err(crate::Error::Config(format!(
            "unknown experiment `{other}`"
        ))),
    }
}
