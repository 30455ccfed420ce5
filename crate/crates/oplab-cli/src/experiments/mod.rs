//! The named experiments and their shared plumbing.

pub mod bounds_sweep;
pub mod corollary;
pub mod gradcheck;
pub mod indicator;
pub mod lower_bound;
pub mod planted_train;
pub mod schedule;

use std::time::Instant;

use anyhow::{anyhow, Result};

use oplab::bounds::smoothness_constants_at_norm;
use oplab::data::Dataset;
use oplab::lowerbound::AdversarialDistribution;
use oplab::net::Architecture;
use oplab::rng::{substream, DOMAIN_DATA};

use crate::config::{DataSpec, ExperimentConfig, ExperimentKind, LambdaRule, ResponseKind};
use crate::report::{ensure_out_dir, write_summary, ExperimentOutcome};

/// Runs the configured experiment, writes its CSVs and summary, and returns
/// the verdicts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let dir = ensure_out_dir(cfg)?;
    let start = Instant::now();
    let outcome = match cfg.experiment {
        ExperimentKind::Schedule => schedule::run(cfg, &dir)?,
        ExperimentKind::GradCheck => gradcheck::run(cfg, &dir)?,
        ExperimentKind::BoundsSweep => bounds_sweep::run(cfg, &dir)?,
        ExperimentKind::Indicator => indicator::run(cfg, &dir)?,
        ExperimentKind::PlantedTrain => planted_train::run(cfg, &dir)?,
        ExperimentKind::LowerBound => lower_bound::run(cfg, &dir)?,
        ExperimentKind::Corollary => corollary::run(cfg, &dir)?,
    };
    write_summary(&dir, cfg, &outcome, start.elapsed())?;
    if !cfg.quiet {
        for v in &outcome.verdicts {
            println!(
                "{} {}: {}",
                if v.passed { "PASS" } else { "FAIL" },
                v.name,
                v.detail
            );
        }
        println!(
            "overall = {}",
            if outcome.all_passed() { "PASS" } else { "FAIL" }
        );
    }
    Ok(outcome)
}

/// Architecture from the config block.
pub(crate) fn arch_from(cfg: &ExperimentConfig) -> Result<Architecture> {
    Architecture::new(cfg.arch.d, cfg.arch.k0, cfg.arch.depth, cfg.arch.kn)
        .map_err(|e| anyhow!("{e}"))
}

/// Materializes the configured dataset.
pub(crate) fn build_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSpec::Grid { n, response } => {
            let pairs: Vec<(Vec<f64>, f64)> = (1..=*n)
                .map(|i| {
                    let y = match response {
                        ResponseKind::Alternating => {
                            if i % 2 == 0 {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                        ResponseKind::Ramp => 0.9 + 0.01 * i as f64,
                        ResponseKind::Constant(v) => *v,
                    };
                    (vec![i as f64 / *n as f64], y)
                })
                .collect();
            Ok(Dataset::from_pairs(1, &pairs)?)
        }
        DataSpec::File { path, has_header } => {
            let file = std::fs::File::open(path)?;
            Ok(Dataset::read_csv(file, *has_header)?)
        }
        DataSpec::Adversarial { n } => {
            let dist = AdversarialDistribution::new(*n, 1)?;
            let mut rng = substream(cfg.run.seed, DOMAIN_DATA, 0);
            Ok(dist.sample(&mut rng))
        }
    }
}

/// Sample-size parameter implied by the data block.
pub(crate) fn sample_size(cfg: &ExperimentConfig) -> Result<usize> {
    match &cfg.data {
        DataSpec::Grid { n, .. } | DataSpec::Adversarial { n } => Ok(*n),
        DataSpec::File { .. } => Ok(build_dataset(cfg)?.n()),
    }
}

/// Resolves the step size: a fixed value, or the reciprocal smoothness
/// constant evaluated at the data's norm level.
pub(crate) fn resolve_lambda(
    rule: LambdaRule,
    arch: Architecture,
    data: &Dataset,
) -> Result<f64> {
    match rule {
        LambdaRule::Fixed(l) => Ok(l),
        LambdaRule::Auto => {
            let level = data.max_x_norm().max(data.max_abs_y()).max(1.0);
            let constants = smoothness_constants_at_norm(arch, level)?;
            let l_n = constants.gradient_lipschitz.ok_or_else(|| {
                anyhow!(
                    "smoothness constant overflows doubles (log10 = {:.1}); \
                     use an explicit lambda",
                    constants.log10_gradient_lipschitz
                )
            })?;
            Ok(1.0 / l_n)
        }
    }
}
