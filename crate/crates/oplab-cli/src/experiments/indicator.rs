//! Indicator experiment: randomized rectangles, dense probe batteries, and a
//! corrupted-weight negative control.

use std::path::Path;

use anyhow::Result;
use rand::Rng;

use oplab::indicator::{build_indicator, verify_indicator, IndicatorWeights, RectangleSpec};
use oplab::net::Architecture;
use oplab::rng::{substream, DOMAIN_PROBE, DOMAIN_TRIAL};

use crate::config::ExperimentConfig;
use crate::report::{write_csv, ExperimentOutcome, Verdict};

/// One rectangle's probe outcome.
#[derive(Debug, Clone)]
pub struct RectangleResult {
    pub index: usize,
    pub d: usize,
    pub depth: usize,
    pub delta: f64,
    pub inside: usize,
    pub outside: usize,
    pub margin: usize,
    pub violations: usize,
    /// Whether the sign-flipped head weight was caught by the same probes.
    pub control_detected: bool,
}

/// Builds `count` random rectangles (`d` in {1,2}, `k0 = 2d`, `depth` in
/// {2,3}) at the given sharpness and probes each with `probes` uniform
/// points of `[-1,1]^d` plus the rectangle center. With `corrupt` the
/// construction itself is sabotaged, which the probe battery must report.
pub fn run_rectangles(
    seed: u64,
    count: usize,
    probes: usize,
    sharpness: u32,
    corrupt: bool,
) -> Vec<RectangleResult> {
    let mut results = Vec::with_capacity(count);
    for index in 0..count {
        let mut rng = substream(seed, DOMAIN_TRIAL, index as u64);
        let d = if rng.gen_bool(0.5) { 1 } else { 2 };
        let depth = if rng.gen_bool(0.5) { 2 } else { 3 };
        let arch = Architecture::new(d, 2 * d, depth, 1).expect("valid dims");
        let delta = rng.gen_range(0.02..0.15);
        let mut a = Vec::with_capacity(d);
        let mut b = Vec::with_capacity(d);
        for _ in 0..d {
            let width = rng.gen_range(2.0 * delta + 0.05..0.8);
            let lo = rng.gen_range(-0.95..0.95 - width);
            a.push(lo);
            b.push(lo + width);
        }
        let spec = RectangleSpec::new(a, b, delta, sharpness, false).expect("valid rectangle");
        let mut ind = build_indicator(arch, &spec).expect("construction");
        if corrupt {
            let lead = arch.head_weight(0, 1);
            ind.weights.values_mut()[lead] *= -1.0;
        }

        let mut probe_rng = substream(seed, DOMAIN_PROBE, index as u64);
        let mut points: Vec<Vec<f64>> = (0..probes)
            .map(|_| (0..d).map(|_| probe_rng.gen_range(-1.0..1.0)).collect())
            .collect();
        // the rectangle center is a guaranteed inside probe, so the battery
        // can never be vacuous
        points.push(
            spec.a
                .iter()
                .zip(spec.b.iter())
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
        );
        let report = verify_indicator(&ind, &points).expect("probe run");

        let control_detected = {
            let mut flipped = IndicatorWeights {
                weights: ind.weights.clone(),
                spec: ind.spec.clone(),
            };
            let lead = arch.head_weight(0, 1);
            flipped.weights.values_mut()[lead] *= -1.0;
            !verify_indicator(&flipped, &points).expect("control run").passed()
        };

        results.push(RectangleResult {
            index,
            d,
            depth,
            delta,
            inside: report.inside,
            outside: report.outside,
            margin: report.margin,
            violations: report.violations.len(),
            control_detected,
        });
    }
    results
}

pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentOutcome> {
    let results = run_rectangles(
        cfg.run.seed,
        cfg.run.rectangles,
        cfg.run.probes,
        cfg.run.sharpness,
        cfg.run.corrupt,
    );
    let mut outcome = ExperimentOutcome::new();
    outcome.csv_files.push(write_csv(
        dir,
        "indicator.csv",
        "rect,d,L,delta,inside,outside,margin,violations,control_detected",
        results.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                r.index,
                r.d,
                r.depth,
                r.delta,
                r.inside,
                r.outside,
                r.margin,
                r.violations,
                r.control_detected
            )
        }),
    )?);
    let violations: usize = results.iter().map(|r| r.violations).sum();
    let undetected = results.iter().filter(|r| !r.control_detected).count();
    outcome.record("rectangles", results.len());
    outcome.record("probes_per_rectangle", cfg.run.probes + 1);
    outcome.record("sharpness", cfg.run.sharpness);
    if cfg.run.corrupt {
        outcome.record("corrupt", "true (negative-control configuration)");
    }
    outcome.verdicts.push(Verdict::new(
        "indicator_bounds",
        violations == 0,
        format!(
            "{violations} probe violations over {} rectangles",
            results.len()
        ),
    ));
    outcome.verdicts.push(Verdict::new(
        "negative_control_detected",
        undetected == 0,
        format!("{undetected} sign-flipped controls went unnoticed"),
    ));
    Ok(outcome)
}
