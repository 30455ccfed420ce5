//! Bound sweeps: randomized verification of the output-perturbation bound,
//! the gradient sup-norm bound, and the gradient Lipschitz bound.

use std::path::Path;

use anyhow::Result;
use rand::Rng;

use oplab::bounds::{smoothness_constants_at_norm, weight_perturbation_bound};
use oplab::data::Dataset;
use oplab::grad::analytic_gradient;
use oplab::net::{forward_value, Architecture, WeightVector};
use oplab::rng::{substream, DOMAIN_TRIAL};

use crate::config::ExperimentConfig;
use crate::report::{write_csv, ExperimentOutcome, Verdict};

/// One two-sided comparison.
#[derive(Debug, Clone, Copy)]
pub struct TrialRow {
    pub trial: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl TrialRow {
    pub fn violated(&self) -> bool {
        self.lhs > self.rhs
    }

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.trial,
            self.lhs,
            self.rhs,
            self.rhs - self.lhs,
            self.violated()
        )
    }
}

/// Output-perturbation sweep: random weight pairs and inputs against the
/// network Lipschitz bound.
pub fn sweep_output_perturbation(seed: u64, trials: usize) -> Vec<TrialRow> {
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = substream(seed, DOMAIN_TRIAL, trial as u64);
        let d: usize = rng.gen_range(1..=3);
        let k0 = rng.gen_range(d.div_ceil(2).max(1)..=4);
        let depth = rng.gen_range(2..=4);
        let kn = rng.gen_range(1..=6);
        let arch = Architecture::new(d, k0, depth, kn).expect("valid dims");
        let mut w = WeightVector::zeros(arch);
        let mut wbar = WeightVector::zeros(arch);
        for v in w.values_mut() {
            *v = rng.gen_range(-3.0..3.0);
        }
        for (v, base) in wbar.values_mut().iter_mut().zip(w.values()) {
            *v = base + rng.gen_range(-0.5..0.5);
        }
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lhs = (forward_value(&w, &x).expect("forward")
            - forward_value(&wbar, &x).expect("forward"))
        .abs();
        let rhs = weight_perturbation_bound(&w, &wbar, &x).expect("bound");
        rows.push(TrialRow { trial, lhs, rhs });
    }
    rows
}

fn random_norm_setup(
    rng: &mut impl Rng,
    level: f64,
) -> (Architecture, Dataset) {
    let d = rng.gen_range(1..=2);
    let k0 = rng.gen_range(1..=3);
    let depth = rng.gen_range(2..=3);
    let kn = rng.gen_range(1..=4);
    let arch = Architecture::new(d, k0, depth, kn).expect("valid dims");
    let n = rng.gen_range(2..=6);
    let pairs: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|_| {
            (
                (0..d).map(|_| rng.gen_range(-level..level)).collect(),
                rng.gen_range(-level..level),
            )
        })
        .collect();
    (arch, Dataset::from_pairs(d, &pairs).expect("finite data"))
}

fn draw_weights(rng: &mut impl Rng, arch: Architecture, level: f64) -> WeightVector {
    let mut w = WeightVector::zeros(arch);
    for v in w.values_mut() {
        *v = rng.gen_range(-level..level);
    }
    w
}

/// Gradient sup-norm sweep at norm level 2: `|grad F|_inf` against the
/// smoothness bound.
pub fn sweep_gradient_sup(seed: u64, trials: usize) -> Vec<TrialRow> {
    let level = 2.0;
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = substream(seed.wrapping_add(1), DOMAIN_TRIAL, trial as u64);
        let (arch, data) = random_norm_setup(&mut rng, level);
        let constants = smoothness_constants_at_norm(arch, level).expect("constants");
        let w = draw_weights(&mut rng, arch, level);
        let grad = analytic_gradient(&w, &data).expect("gradient");
        let lhs = grad.values().iter().fold(0.0, |m: f64, g| m.max(g.abs()));
        rows.push(TrialRow {
            trial,
            lhs,
            rhs: constants.gradient_sup.expect("in range"),
        });
    }
    rows
}

/// Gradient Lipschitz sweep at norm level 2: `|grad F(w1) - grad F(w2)|`
/// against the smoothness constant times `|w1 - w2|` (Euclidean norms).
pub fn sweep_gradient_lipschitz(seed: u64, pairs: usize) -> Vec<TrialRow> {
    let level = 2.0;
    let mut rows = Vec::with_capacity(pairs);
    for trial in 0..pairs {
        let mut rng = substream(seed.wrapping_add(2), DOMAIN_TRIAL, trial as u64);
        let (arch, data) = random_norm_setup(&mut rng, level);
        let constants = smoothness_constants_at_norm(arch, level).expect("constants");
        let w1 = draw_weights(&mut rng, arch, level);
        let w2 = draw_weights(&mut rng, arch, level);
        let g1 = analytic_gradient(&w1, &data).expect("gradient");
        let g2 = analytic_gradient(&w2, &data).expect("gradient");
        let gdiff = g1
            .values()
            .iter()
            .zip(g2.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let wdiff = w1
            .values()
            .iter()
            .zip(w2.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        rows.push(TrialRow {
            trial,
            lhs: gdiff,
            rhs: constants.gradient_lipschitz.expect("in range") * wdiff,
        });
    }
    rows
}

pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentOutcome> {
    let mut outcome = ExperimentOutcome::new();
    let header = "trial,lhs,rhs,margin,violated";

    let sweeps: [(&str, &str, Vec<TrialRow>); 3] = [
        (
            "output_perturbation",
            "output_perturbation.csv",
            sweep_output_perturbation(cfg.run.seed, cfg.run.trials),
        ),
        (
            "gradient_sup_norm",
            "gradient_sup.csv",
            sweep_gradient_sup(cfg.run.seed, cfg.run.trials),
        ),
        (
            "gradient_lipschitz",
            "gradient_lipschitz.csv",
            sweep_gradient_lipschitz(cfg.run.seed, cfg.run.pairs),
        ),
    ];
    for (name, file, rows) in sweeps {
        outcome
            .csv_files
            .push(write_csv(dir, file, header, rows.iter().map(|r| r.csv()))?);
        let violations = rows.iter().filter(|r| r.violated()).count();
        outcome.record(&format!("{name}_trials"), rows.len());
        outcome.verdicts.push(Verdict::new(
            name,
            violations == 0,
            format!("{violations} violations in {} trials", rows.len()),
        ));
    }
    Ok(outcome)
}
