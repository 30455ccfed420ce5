//! Schedule experiment: the guaranteed-interpolation exponents and their
//! internal identities.

use std::path::Path;

use anyhow::Result;

use oplab::descent::theoretical_schedule;

use crate::config::ExperimentConfig;
use crate::report::{write_csv, ExperimentOutcome, Verdict};

use super::{arch_from, sample_size};

pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentOutcome> {
    let arch = arch_from(cfg)?;
    let n = sample_size(cfg)?;
    let sched = theoretical_schedule(arch, n).map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut outcome = ExperimentOutcome::new();
    let rows = vec![
        format!(
            "subnet_count,1,{},{}",
            sched.subnet_count_exponent,
            sched.log10_subnet_count()
        ),
        format!(
            "step_size,1,{},{}",
            sched.step_size_exponent,
            sched.log10_step_size()
        ),
        format!(
            "step_count,{},{},{}",
            sched.step_count_factor,
            sched.step_count_exponent,
            sched.log10_step_count()
        ),
        format!(
            "smoothness,1,{},{}",
            sched.smoothness_exponent,
            sched.log10_smoothness()
        ),
    ];
    outcome
        .csv_files
        .push(write_csv(dir, "schedule.csv", "quantity,factor,exponent,log10_value", rows)?);

    outcome.record("n", n);
    outcome.record("subnet_count_exponent", sched.subnet_count_exponent);
    outcome.record("step_size_exponent", sched.step_size_exponent);
    outcome.record(
        "step_count",
        format!(
            "{} * n^{}",
            sched.step_count_factor, sched.step_count_exponent
        ),
    );
    outcome.record("smoothness_exponent", sched.smoothness_exponent);

    let (tl_factor, tl_exp) = sched.steps_times_step_size();
    outcome.verdicts.push(Verdict::new(
        "steps_times_step_size",
        tl_factor == 2.0 && tl_exp == 2,
        format!("t * lambda = {tl_factor} * n^{tl_exp} (expected 2 * n^2)"),
    ));
    let (cr_factor, cr_exp) = sched.steps_over_twice_n_smoothness();
    outcome.verdicts.push(Verdict::new(
        "contraction_exponent",
        cr_factor == 1.0 && cr_exp == 1,
        format!("t / (2 n L) = {cr_factor} * n^{cr_exp} (expected n)"),
    ));
    outcome.verdicts.push(Verdict::new(
        "step_size_is_reciprocal_smoothness",
        sched.step_size_exponent == -(sched.smoothness_exponent as i64),
        format!(
            "lambda exponent {} vs smoothness exponent {}",
            sched.step_size_exponent, sched.smoothness_exponent
        ),
    ));
    Ok(outcome)
}
