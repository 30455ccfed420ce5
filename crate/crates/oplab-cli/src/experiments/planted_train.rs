//! Planted-initialization training experiment: one subnetwork per distinct
//! sample point, then full-batch descent down to the interpolation optimum.

use std::path::Path;

use anyhow::{anyhow, Result};

use oplab::data::Dataset;
use oplab::descent::{initialize, train, InitMode, InitSpec, TrainConfig, TrainRun};
use oplab::net::Architecture;
use oplab::risk::interpolation_optimum;

use crate::config::ExperimentConfig;
use crate::report::{write_csv, ExperimentOutcome, Verdict};

use super::{arch_from, build_dataset, resolve_lambda};

/// Everything produced by one planted training run.
pub struct PlantedArtifacts {
    pub arch: Architecture,
    pub data: Dataset,
    pub optimum: f64,
    pub lambda: f64,
    pub norm_cap: f64,
    pub run: TrainRun,
}

/// Executes the configured planted run (shared with the acceptance suite).
pub fn execute(cfg: &ExperimentConfig) -> Result<PlantedArtifacts> {
    let arch = arch_from(cfg)?;
    let data = build_dataset(cfg)?;
    let bound = cfg
        .run
        .bound
        .unwrap_or_else(|| (data.n() as f64).powi(4));
    let init = initialize(
        arch,
        &InitSpec {
            bound,
            seed: cfg.run.seed,
            mode: InitMode::Planted,
        },
        &data,
    )
    .map_err(|e| anyhow!("{e}"))?;
    let optimum = interpolation_optimum(&data).map_err(|e| anyhow!("{e}"))?;
    let lambda = resolve_lambda(cfg.run.lambda, arch, &data)?;
    let norm_cap = 2.0 * init.weights.max_abs().max(1.0);
    let mut train_cfg = TrainConfig::new(lambda, cfg.run.steps);
    train_cfg.monitors.optimum = Some(optimum);
    train_cfg.monitors.plant = init.plant.clone();
    train_cfg.monitors.norm_cap = Some(norm_cap);
    train_cfg.stop_at_gap = cfg.run.stop_gap;
    let run = train(&init.weights, &data, &train_cfg).map_err(|e| anyhow!("{e}"))?;
    Ok(PlantedArtifacts {
        arch,
        data,
        optimum,
        lambda,
        norm_cap,
        run,
    })
}

pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentOutcome> {
    let artifacts = execute(cfg)?;
    let run = &artifacts.run;
    let mut outcome = ExperimentOutcome::new();

    // long traces are thinned for the CSV; the verdicts below are computed
    // on the full in-memory trace
    let len = run.risk_trace.len();
    let stride = (len / 20_000).max(1);
    let rows = (0..len)
        .filter(|t| t % stride == 0 || *t == len - 1)
        .map(|t| {
            format!(
                "{},{},{},{}",
                t,
                run.risk_trace[t],
                run.grad_norm_sq_trace[t].sqrt(),
                run.max_abs_trace[t]
            )
        });
    outcome.csv_files.push(write_csv(
        dir,
        "risk_trace.csv",
        "step,risk,grad_norm,maxabs_weight",
        rows,
    )?);

    let final_gap = run.final_risk() - artifacts.optimum;
    outcome.record("lambda", artifacts.lambda);
    outcome.record("steps_run", run.steps_run);
    outcome.record("trace_stride", stride);
    outcome.record("initial_risk", run.risk_trace[0]);
    outcome.record("final_risk", run.final_risk());
    outcome.record("interpolation_optimum", artifacts.optimum);
    outcome.record("final_gap", final_gap);
    outcome.record("min_gap_margin", run.min_gap_margin);

    outcome.verdicts.push(Verdict::new(
        "risk_monotone",
        run.monotone(),
        format!(
            "{} increases (first at step {:?})",
            run.monotonicity_violations, run.first_increase_step
        ),
    ));
    outcome.verdicts.push(Verdict::new(
        "final_gap",
        final_gap <= cfg.run.kappa_target,
        format!("final risk - optimum = {final_gap:.3e} (target {})", cfg.run.kappa_target),
    ));
    outcome.verdicts.push(Verdict::new(
        "indicator_condition_every_step",
        run.indicator_condition_failures == 0,
        format!("{} steps failed the condition", run.indicator_condition_failures),
    ));
    outcome.verdicts.push(Verdict::new(
        "gradient_gap_bound_every_step",
        run.gradient_gap_violations == 0,
        format!(
            "{} violations; min margin {:.3e}",
            run.gradient_gap_violations, run.min_gap_margin
        ),
    ));
    outcome.verdicts.push(Verdict::new(
        "iterate_bound",
        run.norm_cap_violations == 0,
        format!(
            "{} steps above the cap {:.3e}",
            run.norm_cap_violations, artifacts.norm_cap
        ),
    ));
    Ok(outcome)
}
