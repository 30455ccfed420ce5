//! Gradient-check experiment: analytic versus central-difference gradients
//! on randomized configurations.

use std::path::Path;

use anyhow::Result;
use rand::Rng;

use oplab::data::Dataset;
use oplab::grad::{analytic_gradient, finite_difference_gradient};
use oplab::net::{Architecture, WeightVector};
use oplab::rng::{substream, DOMAIN_TRIAL};

use crate::config::ExperimentConfig;
use crate::report::{write_csv, ExperimentOutcome, Verdict};

/// Central-difference step for the oracle; the empirical noise/truncation
/// balance point for coordinate-scaled steps.
pub const FD_STEP: f64 = 1e-5;
/// Relative tolerance per coordinate.
pub const REL_TOL: f64 = 1e-6;
/// Coordinates whose disagreement stays under this absolute floor pass
/// regardless of relative size.
pub const ABS_FLOOR: f64 = 1e-10;

/// One randomized configuration's comparison result.
#[derive(Debug, Clone, Copy)]
pub struct ConfigResult {
    pub index: usize,
    pub d: usize,
    pub k0: usize,
    pub depth: usize,
    pub kn: usize,
    pub samples: usize,
    /// Largest `|analytic - fd| / max(ABS_FLOOR, REL_TOL * scale)`; below 1
    /// means every coordinate agrees.
    pub worst_margin: f64,
}

impl ConfigResult {
    pub fn passed(&self) -> bool {
        self.worst_margin < 1.0
    }
}

/// Draws the configuration family used for gradient checking: `d <= 3`,
/// `k0 <= 4`, `depth <= 4`, `kn <= 8`, weights uniform in `[-2, 2]`.
pub fn random_configuration(seed: u64, index: u64) -> (WeightVector, Dataset) {
    let mut rng = substream(seed, DOMAIN_TRIAL, index);
    let d = rng.gen_range(1..=3);
    let k0 = rng.gen_range(1..=4);
    let depth = rng.gen_range(2..=4);
    let kn = rng.gen_range(1..=8);
    let arch = Architecture::new(d, k0, depth, kn).expect("valid dims");
    let mut w = WeightVector::zeros(arch);
    for v in w.values_mut() {
        *v = rng.gen_range(-2.0..2.0);
    }
    let n = rng.gen_range(2..=8);
    let mut pairs = Vec::new();
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        pairs.push((x, rng.gen_range(-2.0..2.0)));
    }
    (w, Dataset::from_pairs(d, &pairs).expect("finite data"))
}

/// Runs the comparison on `configs` seeded configurations.
pub fn check(seed: u64, configs: usize) -> Vec<ConfigResult> {
    (0..configs)
        .map(|i| {
            let (w, data) = random_configuration(seed, i as u64);
            let analytic = analytic_gradient(&w, &data).expect("gradient");
            let fd = finite_difference_gradient(&w, &data, FD_STEP).expect("oracle");
            let worst_margin = analytic
                .values()
                .iter()
                .zip(fd.values())
                .map(|(a, f)| {
                    let scale = a.abs().max(f.abs());
                    (a - f).abs() / (REL_TOL * scale).max(ABS_FLOOR)
                })
                .fold(0.0, f64::max);
            let arch = w.arch();
            ConfigResult {
                index: i,
                d: arch.d,
                k0: arch.k0,
                depth: arch.depth,
                kn: arch.kn,
                samples: data.n(),
                worst_margin,
            }
        })
        .collect()
}

pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentOutcome> {
    let results = check(cfg.run.seed, cfg.run.configs);
    let mut outcome = ExperimentOutcome::new();
    outcome.csv_files.push(write_csv(
        dir,
        "gradcheck.csv",
        "config,d,k0,L,kn,samples,worst_margin,pass",
        results.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.index,
                r.d,
                r.k0,
                r.depth,
                r.kn,
                r.samples,
                r.worst_margin,
                r.passed()
            )
        }),
    )?);
    let passed = results.iter().filter(|r| r.passed()).count();
    let worst = results.iter().map(|r| r.worst_margin).fold(0.0, f64::max);
    outcome.record("configurations", results.len());
    outcome.record("fd_step", FD_STEP);
    outcome.record("worst_margin", worst);
    outcome.verdicts.push(Verdict::new(
        "gradient_match",
        passed == results.len(),
        format!(
            "{passed}/{} configurations within {REL_TOL} relative (floor {ABS_FLOOR}); worst margin {worst:.3}",
            results.len()
        ),
    ));
    Ok(outcome)
}
