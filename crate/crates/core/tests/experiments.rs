use nlsinflate::bubbles::Ladder;
use nlsinflate::experiments::{self, ExperimentConfig, EXPERIMENTS};
use nlsinflate::solver::Dealias;

#[test]
fn config_round_trips_through_toml() {
    let cfg = ExperimentConfig::default();
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
}

#[test]
fn omitted_keys_take_defaults() {
    let cfg = ExperimentConfig::from_toml_str("[bilinear]\nsamples = 3\n").unwrap();
    assert_eq!(cfg.bilinear.samples, 3);
    assert_eq!(cfg.problem, ExperimentConfig::default().problem);
}

#[test]
fn unknown_keys_are_rejected() {
    for text in [
        "[bilinear]\nsample = 3\n",
        "[nonexistent]\nx = 1\n",
        "[inflation.ladder]\nkind = \"geometric\"\nn0 = 4.0\nratio = 2.0\n",
    ] {
        assert!(
            ExperimentConfig::from_toml_str(text).is_err(),
            "accepted {text:?}"
        );
    }
}

#[test]
fn dimension_override_applies_to_one_experiment() {
    let mut cfg = ExperimentConfig::default();
    cfg.set_dim("randomized-convergence", 1).unwrap();
    assert_eq!(cfg.randomized.dim, 1);
    assert_eq!(cfg.inflation.dim, 3);
    assert!(cfg.set_dim("randomized-convergence", 4).is_err());
}

#[test]
fn unknown_experiment_is_an_error() {
    assert!(experiments::run("nope", &ExperimentConfig::default(), 0).is_err());
    assert_eq!(EXPERIMENTS.len(), 7);
}

#[test]
fn single_bubble_without_dispersion_follows_the_ode() {
    let mut cfg = ExperimentConfig::default();
    let sec = &mut cfg.inflation;
    sec.points = 32;
    sec.half_width = 0.5;
    sec.ladder = Ladder::Geometric { n0: 4.0, r: 2.0 };
    sec.k0 = 0;
    sec.k_max = 0;
    sec.dispersion_scale = 0.0;
    sec.dealias = Dealias::Off;
    sec.steps_per_rung = 50;
    sec.snapshots = 6;
    sec.rate.k_last = sec.rate.k_first + 2;
    sec.rate.profile_points = 1 << 12;
    let report = experiments::run("inflation", &cfg, 0).unwrap();

    let rungs = report.table("rungs").unwrap();
    assert_eq!(rungs.text_column("status").unwrap(), ["completed"]);
    let diff = rungs.column("u_minus_v_hs_final").unwrap()[0];
    let v = rungs.column("v_hs_final").unwrap()[0];
    assert!(diff <= 1e-10 * v, "||u - v|| = {diff:e}");

    let series = report.table("series").unwrap();
    let energy = series.column("energy").unwrap();
    assert_eq!(energy.len(), 6);
    assert!(
        energy.iter().all(|&e| e <= 1e-10 * v),
        "E_n(t) = {energy:?}"
    );
    let leakage = series.column("leakage").unwrap();
    assert!(leakage.iter().all(|&l| l < 1e-6));
}

#[test]
fn single_rung_separation_has_empty_sums() {
    let mut cfg = ExperimentConfig::default();
    cfg.scale_separation.rungs = 1;
    let report = experiments::run("scale-separation", &cfg, 0).unwrap();
    let sums = report.table("sums").unwrap().column("sum").unwrap();
    assert_eq!(sums.len(), 4);
    assert!(sums.iter().all(|&s| s == 0.0));
    assert!(!report.passed());
}

#[test]
fn reports_write_tables_and_summary() {
    let dir = std::env::temp_dir().join(format!("nlsinflate-report-{}", std::process::id()));
    let report = experiments::run("scale-separation", &ExperimentConfig::default(), 7).unwrap();
    let files = report.write(&dir).unwrap();
    let summary = dir.join("scale_separation_summary.json");
    assert!(files.contains(&summary));
    assert!(dir.join("scale_separation_sums.csv").exists());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["seed"], 7);
    assert_eq!(json["passed"], report.passed());
    assert_eq!(json["criteria"].as_array().unwrap().len(), 4);
    std::fs::remove_dir_all(&dir).unwrap();
}
