//! Lower-bound experiment: Monte-Carlo generalization risk of the exact
//! interpolator on the adversarial design, against the exact binomial value
//! and the closed-form bound chain.

use std::path::Path;

use anyhow::{anyhow, Result};

use oplab::lowerbound::{
    binomial_identity, mc_lower_bound_experiment, AdversarialDistribution,
    ConditionalMeanEstimator,
};

use crate::config::{DataSpec, ExperimentConfig};
use crate::report::{write_csv, ExperimentOutcome, Verdict};

pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentOutcome> {
    let n = match &cfg.data {
        DataSpec::Grid { n, .. } | DataSpec::Adversarial { n } => *n,
        DataSpec::File { .. } => {
            return Err(anyhow!("the lower-bound experiment uses a synthetic design"))
        }
    };
    let dist = AdversarialDistribution::new(n, 1).map_err(|e| anyhow!("{e}"))?;
    let report = mc_lower_bound_experiment(
        &dist,
        &ConditionalMeanEstimator,
        cfg.run.replications,
        cfg.run.seed,
    )
    .map_err(|e| anyhow!("{e}"))?;

    let mut outcome = ExperimentOutcome::new();
    outcome.csv_files.push(write_csv(
        dir,
        "replications.csv",
        "replication,risk,kappa_attained,success_flag",
        report
            .rows
            .iter()
            .map(|r| format!("{},{},{},{}", r.replication, r.risk, r.kappa, r.success)),
    )?);

    let chain_max = cfg.run.chain_max.max(10);
    let mut chain_ok = true;
    let chain_rows: Vec<String> = (10..=chain_max)
        .map(|m| {
            let id = binomial_identity(m).expect("m >= 1");
            chain_ok &= id.chain_holds;
            format!(
                "{},{},{},{},{},{}",
                m,
                id.exact_sum,
                id.shifted_exact,
                id.intermediate_bound,
                id.floor_bound,
                id.chain_holds
            )
        })
        .collect();
    outcome.csv_files.push(write_csv(
        dir,
        "binomial_chain.csv",
        "n,exact,shifted,intermediate,floor,ordered",
        chain_rows,
    )?);

    outcome.record("replications", report.replications);
    outcome.record("mean_risk", report.mean_risk);
    outcome.record(
        "std_error",
        report
            .std_error
            .map_or("n/a".to_string(), |s| s.to_string()),
    );
    outcome.record("exact_reference", report.exact_reference);
    outcome.record("paper_bound", report.composed_bound);
    outcome.record("max_kappa", report.max_kappa);
    outcome.record("failure_rate", report.failure_rate);

    match report.std_error {
        Some(se) => {
            let dev = (report.mean_risk - report.exact_reference).abs();
            outcome.verdicts.push(Verdict::new(
                "mean_matches_exact_value",
                dev <= 3.0 * se,
                format!("|mean - exact| = {dev:.4e} vs 3 SE = {:.4e}", 3.0 * se),
            ));
        }
        None => outcome.verdicts.push(Verdict::new(
            "mean_matches_exact_value",
            true,
            "single replication, no standard error".into(),
        )),
    }
    outcome.verdicts.push(Verdict::new(
        "mean_risk_at_least_one_fifth",
        report.mean_risk >= 0.2,
        format!("mean risk {:.4}", report.mean_risk),
    ));
    let near_interp_cap = 1.0 / (n as f64 * (n as f64).ln());
    outcome.verdicts.push(Verdict::new(
        "composed_bound_at_least_one_sixth",
        report.max_kappa <= near_interp_cap && report.composed_bound >= 1.0 / 6.0,
        format!(
            "max kappa {:.3e} (cap {:.3e}), composed bound {:.4}",
            report.max_kappa, near_interp_cap, report.composed_bound
        ),
    ));
    outcome.verdicts.push(Verdict::new(
        "binomial_chain_ordered",
        chain_ok,
        format!("exact >= shifted >= intermediate >= floor for n in 10..={chain_max}"),
    ));
    Ok(outcome)
}
