//! Initialization, the full-batch gradient-descent loop, the theoretical
//! step-size/step-count schedule, and the training-event validator.
//!
//! Initialization zeroes the output level (so the initial risk equals the
//! mean squared response) and fills all inner weights i.i.d. uniformly on
//! `[-B, B]` from per-subnetwork substreams. In planted mode, one subnetwork
//! per distinct sample point first receives robust indicator weights for a
//! small rectangle centered at that point; the remaining subnetworks are
//! filled randomly as usual.

use rand::distributions::{Distribution, Uniform};

use crate::data::{point_key, Dataset};
use crate::grad::{risk_and_gradient, Workspace};
use crate::indicator::{build_indicator, embed_indicator, RectangleSpec};
use crate::net::{Architecture, WeightVector};
use crate::rng::{substream, DOMAIN_SUBNET};
use crate::{Error, Result};

/// How to draw the starting weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// All inner weights i.i.d. uniform on `[-B, B]`.
    Random,
    /// One robust indicator subnetwork per distinct sample point, the rest
    /// random.
    Planted,
}

/// Initialization parameters.
#[derive(Debug, Clone)]
pub struct InitSpec {
    /// Half-width of the uniform range for randomly filled inner weights.
    /// Planted subnetworks keep their constructed magnitudes regardless.
    pub bound: f64,
    pub seed: u64,
    pub mode: InitMode,
}

/// Which subnetwork indicates which distinct sample point.
///
/// Distinct points are sorted lexicographically and assigned to subnetworks
/// `0..#distinct` in order, so the layout is deterministic.
#[derive(Debug, Clone)]
pub struct PlantMap {
    entries: Vec<(Vec<f64>, usize)>,
}

impl PlantMap {
    pub fn entries(&self) -> &[(Vec<f64>, usize)] {
        &self.entries
    }

    /// Subnetwork assigned to `x`, matching coordinates bitwise.
    pub fn subnet_for(&self, x: &[f64]) -> Option<usize> {
        let key = point_key(x);
        self.entries
            .iter()
            .find(|(p, _)| point_key(p) == key)
            .map(|&(_, k)| k)
    }

    /// Per-sample subnetwork indices.
    pub fn sample_assignment(&self, data: &Dataset) -> Result<Vec<usize>> {
        (0..data.n())
            .map(|i| {
                self.subnet_for(data.x(i)).ok_or_else(|| {
                    Error::Precondition(format!("sample {i} has no planted subnetwork"))
                })
            })
            .collect()
    }
}

/// Starting weights plus, in planted mode, the point-to-subnetwork map.
#[derive(Debug, Clone)]
pub struct Initialization {
    pub weights: WeightVector,
    pub plant: Option<PlantMap>,
}

/// Checks the three conditions a sample must satisfy for the training
/// guarantees: separation of distinct points at least `1/(n+1)^3`, inputs in
/// the unit sup-norm ball, responses at most `n^2` in magnitude.
#[derive(Debug, Clone)]
pub struct EventReport {
    pub separation_threshold: f64,
    /// Smallest sup-norm distance over distinct pairs; `None` when no two
    /// points differ (the condition is then vacuous).
    pub min_separation: Option<f64>,
    pub separation_ok: bool,
    pub max_x_norm: f64,
    pub x_norm_ok: bool,
    pub response_cap: f64,
    pub max_abs_y: f64,
    pub response_ok: bool,
}

impl EventReport {
    pub fn all_hold(&self) -> bool {
        self.separation_ok && self.x_norm_ok && self.response_ok
    }
}

/// Evaluates the event conditions at sample-size parameter `n`.
pub fn validate_event(data: &Dataset, n: usize) -> EventReport {
    let threshold = 1.0 / ((n as f64 + 1.0).powi(3));
    let min_separation = data.min_separation();
    let separation_ok = min_separation.map_or(true, |s| s >= threshold);
    let max_x_norm = data.max_x_norm();
    let response_cap = (n as f64).powi(2);
    let max_abs_y = data.max_abs_y();
    EventReport {
        separation_threshold: threshold,
        min_separation,
        separation_ok,
        max_x_norm,
        x_norm_ok: max_x_norm <= 1.0,
        response_cap,
        max_abs_y,
        response_ok: max_abs_y <= response_cap,
    }
}

/// Draws starting weights: output level exactly zero, inner weights uniform
/// on `[-B, B]` from per-subnetwork substreams, with planted indicator
/// subnetworks first when requested.
pub fn initialize(arch: Architecture, spec: &InitSpec, data: &Dataset) -> Result<Initialization> {
    if !(spec.bound > 0.0) || !spec.bound.is_finite() {
        return Err(Error::Precondition(format!(
            "initialization bound must be positive, got {}",
            spec.bound
        )));
    }
    let mut w = WeightVector::zeros(arch);
    let mut plant = None;
    let mut planted_slots = vec![false; arch.kn];

    if spec.mode == InitMode::Planted {
        if data.dim() != arch.d {
            return Err(Error::DimensionMismatch {
                expected: arch.d,
                got: data.dim(),
            });
        }
        let event = validate_event(data, data.n());
        if !event.all_hold() {
            return Err(Error::Precondition(format!(
                "planted initialization needs the event conditions: separation_ok={}, x_norm_ok={}, response_ok={}",
                event.separation_ok, event.x_norm_ok, event.response_ok
            )));
        }
        let distinct = data.distinct_points();
        if distinct.len() > arch.kn {
            return Err(Error::Precondition(format!(
                "{} distinct points exceed {} subnetworks",
                distinct.len(),
                arch.kn
            )));
        }
        // rectangle of width s centered at the point, margin s/4: the point
        // sits inside the shrunk rectangle and every other sample point
        // (separation >= s) lies outside the expanded one
        let s = data.min_separation().unwrap_or(0.5).min(0.5);
        let mut entries = Vec::with_capacity(distinct.len());
        for (slot, point) in distinct.iter().enumerate() {
            let a: Vec<f64> = point.iter().map(|p| p - 0.5 * s).collect();
            let b: Vec<f64> = point.iter().map(|p| p + 0.5 * s).collect();
            let rect = RectangleSpec::new(a, b, 0.25 * s, data.n() as u32, true)?;
            let sub_arch = Architecture::new(arch.d, arch.k0, arch.depth, 1)?;
            let ind = build_indicator(sub_arch, &rect)?;
            embed_indicator(&ind, &mut w, slot)?;
            planted_slots[slot] = true;
            entries.push((point.clone(), slot));
        }
        plant = Some(PlantMap { entries });
    }

    for k in 0..arch.kn {
        if planted_slots[k] {
            continue;
        }
        let mut rng = substream(spec.seed, DOMAIN_SUBNET, k as u64);
        let dist = Uniform::new_inclusive(-spec.bound, spec.bound);
        for range in arch.subnet_inner_ranges(k) {
            for v in &mut w.values_mut()[range] {
                *v = dist.sample(&mut rng);
            }
        }
    }
    // output level stays exactly zero
    Ok(Initialization { weights: w, plant })
}

/// Optional per-step checks recorded during training.
#[derive(Debug, Clone, Default)]
pub struct Monitors {
    /// Iterate sup-norm cap; counts steps where it is exceeded.
    pub norm_cap: Option<f64>,
    /// Interpolation optimum, enabling the gap-based checks.
    pub optimum: Option<f64>,
    /// Planted layout, enabling the per-step indicator-condition check and,
    /// with `optimum`, the gradient-gap inequality
    /// `|grad F|^2 >= (F - optimum) / n`.
    pub plant: Option<PlantMap>,
}

/// Gradient-descent parameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lambda: f64,
    pub steps: usize,
    /// Stop early once `F <= optimum + gap` (needs `monitors.optimum`).
    pub stop_at_gap: Option<f64>,
    /// Weight checkpoints every this many steps; default `max(1, steps/100)`.
    pub checkpoint_every: Option<usize>,
    pub monitors: Monitors,
}

impl TrainConfig {
    pub fn new(lambda: f64, steps: usize) -> Self {
        Self {
            lambda,
            steps,
            stop_at_gap: None,
            checkpoint_every: None,
            monitors: Monitors::default(),
        }
    }
}

/// Everything recorded along one gradient-descent run.
///
/// All traces have `steps_run + 1` entries; entry `t` describes the iterate
/// before the `t`-th update.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub risk_trace: Vec<f64>,
    pub grad_norm_sq_trace: Vec<f64>,
    pub max_abs_trace: Vec<f64>,
    pub checkpoints: Vec<(usize, WeightVector)>,
    pub final_weights: WeightVector,
    pub steps_run: usize,
    pub monotonicity_violations: usize,
    pub first_increase_step: Option<usize>,
    pub norm_cap_violations: usize,
    /// Steps at which the planted indicator condition failed.
    pub indicator_condition_failures: usize,
    /// Steps at which the condition held but the gradient-gap inequality did
    /// not.
    pub gradient_gap_violations: usize,
    /// Smallest observed `|grad F|^2 - (F - optimum)/n` over steps where the
    /// indicator condition held.
    pub min_gap_margin: f64,
}

impl TrainRun {
    pub fn final_risk(&self) -> f64 {
        *self.risk_trace.last().expect("trace is never empty")
    }

    pub fn monotone(&self) -> bool {
        self.monotonicity_violations == 0
    }
}

/// Runs full-batch gradient descent `c <- c - lambda * grad F(c)`.
pub fn train(w0: &WeightVector, data: &Dataset, cfg: &TrainConfig) -> Result<TrainRun> {
    if !(cfg.lambda > 0.0) || !cfg.lambda.is_finite() {
        return Err(Error::Precondition(format!(
            "step size must be positive, got {}",
            cfg.lambda
        )));
    }
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let arch = w0.arch();
    if data.dim() != arch.d {
        return Err(Error::DimensionMismatch {
            expected: arch.d,
            got: data.dim(),
        });
    }
    if cfg.stop_at_gap.is_some() && cfg.monitors.optimum.is_none() {
        return Err(Error::Precondition(
            "stop_at_gap needs monitors.optimum".into(),
        ));
    }
    let n = data.n();
    let threshold = 2.0 / (n as f64 * n as f64);
    let assignment = match &cfg.monitors.plant {
        Some(plant) => Some(plant.sample_assignment(data)?),
        None => None,
    };
    // distinct-group ids let the off-point supremum skip duplicates
    let group_of: Vec<usize> = {
        let mut ids = Vec::with_capacity(n);
        let mut seen: Vec<Vec<u64>> = Vec::new();
        for i in 0..n {
            let key = point_key(data.x(i));
            match seen.iter().position(|k| *k == key) {
                Some(g) => ids.push(g),
                None => {
                    seen.push(key);
                    ids.push(seen.len() - 1);
                }
            }
        }
        ids
    };

    let checkpoint_every = cfg
        .checkpoint_every
        .unwrap_or_else(|| (cfg.steps / 100).max(1));
    let mut run = TrainRun {
        risk_trace: Vec::with_capacity(cfg.steps + 1),
        grad_norm_sq_trace: Vec::with_capacity(cfg.steps + 1),
        max_abs_trace: Vec::with_capacity(cfg.steps + 1),
        checkpoints: Vec::new(),
        final_weights: w0.clone(),
        steps_run: 0,
        monotonicity_violations: 0,
        first_increase_step: None,
        norm_cap_violations: 0,
        indicator_condition_failures: 0,
        gradient_gap_violations: 0,
        min_gap_margin: f64::INFINITY,
    };

    let mut w = w0.clone();
    let mut ws = Workspace::new(arch);
    let mut grad = vec![0.0; arch.weight_count()];
    let mut heads = if assignment.is_some() {
        vec![0.0; arch.kn * n]
    } else {
        Vec::new()
    };

    let mut t = 0usize;
    loop {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let heads_arg = assignment.as_ref().map(|_| heads.as_mut_slice());
        let risk = risk_and_gradient(&w, data, &mut ws, &mut grad, heads_arg);
        if !risk.is_finite() {
            return Err(Error::NonFiniteAtStep(t));
        }
        let grad_norm_sq: f64 = grad.iter().map(|g| g * g).sum();
        if !grad_norm_sq.is_finite() {
            return Err(Error::NonFiniteAtStep(t));
        }

        run.risk_trace.push(risk);
        run.grad_norm_sq_trace.push(grad_norm_sq);
        run.max_abs_trace.push(w.max_abs());
        if t > 0 && risk > run.risk_trace[t - 1] {
            run.monotonicity_violations += 1;
            run.first_increase_step.get_or_insert(t);
        }
        if let Some(cap) = cfg.monitors.norm_cap {
            if run.max_abs_trace[t] > cap {
                run.norm_cap_violations += 1;
            }
        }
        if let Some(assignment) = &assignment {
            let mut condition_holds = true;
            for i in 0..n {
                let j = assignment[i];
                let diag = heads[j * n + i];
                let mut off: f64 = 0.0;
                for l in 0..n {
                    if group_of[l] != group_of[i] {
                        off = off.max(heads[j * n + l]);
                    }
                }
                if diag < 1.0 - threshold || off > threshold {
                    condition_holds = false;
                    break;
                }
            }
            if !condition_holds {
                run.indicator_condition_failures += 1;
            } else if let Some(opt) = cfg.monitors.optimum {
                let margin = grad_norm_sq - (risk - opt) / n as f64;
                run.min_gap_margin = run.min_gap_margin.min(margin);
                if margin < 0.0 {
                    run.gradient_gap_violations += 1;
                }
            }
        }
        if t % checkpoint_every == 0 {
            run.checkpoints.push((t, w.clone()));
        }

        let stop = t == cfg.steps
            || matches!(
                (cfg.stop_at_gap, cfg.monitors.optimum),
                (Some(gap), Some(opt)) if risk <= opt + gap
            );
        if stop {
            break;
        }
        for (v, g) in w.values_mut().iter_mut().zip(grad.iter()) {
            *v -= cfg.lambda * g;
        }
        t += 1;
    }
    run.steps_run = t;
    run.final_weights = w;
    Ok(run)
}

/// The step-size/step-count/width schedule under which interpolation is
/// guaranteed, kept in exponent form because the powers of `n` overflow
/// doubles for any realistic `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalSchedule {
    pub n: usize,
    /// Subnetwork count `kn = n^e`.
    pub subnet_count_exponent: u64,
    /// Step size `lambda = n^e` with negative `e`.
    pub step_size_exponent: i64,
    /// Step count `t = 2 * n^e`.
    pub step_count_exponent: u64,
    pub step_count_factor: f64,
    /// Smoothness level `L = n^e`; the step size is exactly `1/L`.
    pub smoothness_exponent: u64,
    /// Norm-bound constants used by the smoothness formulas.
    pub c3: f64,
    pub c4: f64,
}

impl TheoreticalSchedule {
    fn log10n(&self) -> f64 {
        (self.n as f64).log10()
    }

    pub fn log10_subnet_count(&self) -> f64 {
        self.subnet_count_exponent as f64 * self.log10n()
    }

    pub fn log10_step_size(&self) -> f64 {
        self.step_size_exponent as f64 * self.log10n()
    }

    pub fn log10_step_count(&self) -> f64 {
        self.step_count_factor.log10() + self.step_count_exponent as f64 * self.log10n()
    }

    pub fn log10_smoothness(&self) -> f64 {
        self.smoothness_exponent as f64 * self.log10n()
    }

    /// `t * lambda` as `(coefficient, exponent)` in powers of `n`.
    pub fn steps_times_step_size(&self) -> (f64, i64) {
        (
            self.step_count_factor,
            self.step_count_exponent as i64 + self.step_size_exponent,
        )
    }

    /// `t / (2 n L)` as `(coefficient, exponent)` in powers of `n`.
    pub fn steps_over_twice_n_smoothness(&self) -> (f64, i64) {
        (
            self.step_count_factor / 2.0,
            self.step_count_exponent as i64 - 1 - self.smoothness_exponent as i64,
        )
    }
}

/// Computes the schedule exponents for the architecture shape. Requires
/// `k0 >= 2d`; `kn` plays no role (the schedule dictates it).
pub fn theoretical_schedule(arch: Architecture, n: usize) -> Result<TheoreticalSchedule> {
    if arch.k0 < 2 * arch.d {
        return Err(Error::Precondition(format!(
            "schedule needs k0 >= 2d (k0 = {}, d = {})",
            arch.k0, arch.d
        )));
    }
    if n < 1 {
        return Err(Error::Precondition("sample count must be >= 1".into()));
    }
    let l = arch.depth as u64;
    let k0 = arch.k0 as u64;
    let d = arch.d as u64;
    let base = (l - 2) * (k0 * k0 + k0) + k0 * (d + 2);
    Ok(TheoreticalSchedule {
        n,
        subnet_count_exponent: 5 * base + 7,
        step_size_exponent: -((8 * base + 16 * l + 15) as i64),
        step_count_exponent: 8 * base + 16 * l + 17,
        step_count_factor: 2.0,
        smoothness_exponent: 8 * base + 16 * l + 15,
        c3: 1.0,
        c4: 4.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::forward;
    use crate::risk::{empirical_risk, interpolation_optimum};
    use crate::rng::{substream, DOMAIN_DATA};
    use rand::Rng;

    fn grid_data(n: usize) -> Dataset {
        let pairs: Vec<(Vec<f64>, f64)> = (1..=n)
            .map(|i| {
                (
                    vec![i as f64 / n as f64],
                    if i % 2 == 0 { 1.0 } else { -1.0 },
                )
            })
            .collect();
        Dataset::from_pairs(1, &pairs).unwrap()
    }

    #[test]
    fn initial_risk_is_mean_square_response() {
        let arch = Architecture::new(1, 2, 2, 4).unwrap();
        let data = grid_data(6);
        for seed in [0u64, 1, 99] {
            let init = initialize(
                arch,
                &InitSpec {
                    bound: 1000.0,
                    seed,
                    mode: InitMode::Random,
                },
                &data,
            )
            .unwrap();
            let expected: f64 =
                data.ys().iter().map(|y| y * y).sum::<f64>() / data.n() as f64;
            assert!((empirical_risk(&init.weights, &data).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_gives_identical_weights() {
        let arch = Architecture::new(2, 4, 3, 3).unwrap();
        let data = Dataset::from_pairs(2, &[(vec![0.1, 0.2], 1.0)]).unwrap();
        let spec = InitSpec {
            bound: 16.0,
            seed: 1234,
            mode: InitMode::Random,
        };
        let a = initialize(arch, &spec, &data).unwrap();
        let b = initialize(arch, &spec, &data).unwrap();
        assert_eq!(a.weights, b.weights);
        let c = initialize(
            arch,
            &InitSpec {
                seed: 1235,
                ..spec
            },
            &data,
        )
        .unwrap();
        assert_ne!(a.weights, c.weights);
    }

    #[test]
    fn planted_subnetworks_indicate_their_points() {
        let data = Dataset::from_pairs(
            1,
            &[(vec![0.25], 1.0), (vec![0.5], -1.0), (vec![0.75], 1.0)],
        )
        .unwrap();
        let arch = Architecture::new(1, 2, 2, 3).unwrap();
        let init = initialize(
            arch,
            &InitSpec {
                bound: 81.0,
                seed: 0,
                mode: InitMode::Planted,
            },
            &data,
        )
        .unwrap();
        let plant = init.plant.as_ref().unwrap();
        let sat = (-(data.n() as f64)).exp();
        for i in 0..data.n() {
            let j = plant.subnet_for(data.x(i)).unwrap();
            let own = forward(&init.weights, data.x(i)).unwrap().head(j);
            assert!(own >= 1.0 - sat, "own-point head {own}");
            for l in 0..data.n() {
                if l != i {
                    let other = forward(&init.weights, data.x(l)).unwrap().head(j);
                    assert!(other <= sat, "off-point head {other}");
                }
            }
        }
        // output level is zero regardless of mode
        for i in 0..=arch.kn {
            assert_eq!(init.weights.values()[arch.output_weight(i)], 0.0);
        }
    }

    #[test]
    fn planted_mode_rejects_too_many_points_and_bad_events() {
        let arch = Architecture::new(1, 2, 2, 2).unwrap();
        let three = Dataset::from_pairs(
            1,
            &[(vec![0.2], 1.0), (vec![0.5], 1.0), (vec![0.8], 1.0)],
        )
        .unwrap();
        let spec = InitSpec {
            bound: 10.0,
            seed: 0,
            mode: InitMode::Planted,
        };
        assert!(matches!(
            initialize(arch, &spec, &three),
            Err(Error::Precondition(_))
        ));
        let oversized = Dataset::from_pairs(1, &[(vec![3.0], 1.0)]).unwrap();
        assert!(matches!(
            initialize(arch, &spec, &oversized),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn zero_steps_records_only_the_initial_risk() {
        let arch = Architecture::new(1, 2, 2, 2).unwrap();
        let data = grid_data(4);
        let w0 = WeightVector::zeros(arch);
        let run = train(&w0, &data, &TrainConfig::new(0.1, 0)).unwrap();
        assert_eq!(run.steps_run, 0);
        assert_eq!(run.risk_trace.len(), 1);
        assert_eq!(run.risk_trace[0], empirical_risk(&w0, &data).unwrap());
    }

    #[test]
    fn descent_with_conservative_step_is_monotone_across_runs() {
        // 200 random small runs; the step size comes from a deliberately
        // generous smoothness constant so each step must not increase risk
        let arch = Architecture::new(1, 2, 2, 2).unwrap();
        let mut violations = 0;
        for run_idx in 0..200u64 {
            let mut rng = substream(run_idx, DOMAIN_DATA, 5);
            let n = rng.gen_range(2..=5);
            let pairs: Vec<(Vec<f64>, f64)> = (0..n)
                .map(|_| (vec![rng.gen_range(-1.0..1.0)], rng.gen_range(-1.0..1.0)))
                .collect();
            let data = Dataset::from_pairs(1, &pairs).unwrap();
            let init = initialize(
                arch,
                &InitSpec {
                    bound: 1.0,
                    seed: run_idx,
                    mode: InitMode::Random,
                },
                &data,
            )
            .unwrap();
            let constants = crate::bounds::smoothness_constants_at_norm(arch, 1.0).unwrap();
            let lambda = 1.0 / constants.gradient_lipschitz.unwrap();
            let run = train(&init.weights, &data, &TrainConfig::new(lambda, 30)).unwrap();
            violations += run.monotonicity_violations;
        }
        assert_eq!(violations, 0);
    }

    #[test]
    fn train_rejects_bad_configs() {
        let arch = Architecture::new(1, 2, 2, 1).unwrap();
        let data = grid_data(3);
        let w0 = WeightVector::zeros(arch);
        assert!(train(&w0, &data, &TrainConfig::new(0.0, 1)).is_err());
        let mut cfg = TrainConfig::new(0.1, 1);
        cfg.stop_at_gap = Some(1e-3);
        assert!(matches!(
            train(&w0, &data, &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn schedule_exponents_and_identities() {
        let arch = Architecture::new(1, 2, 2, 1).unwrap();
        let s = theoretical_schedule(arch, 10).unwrap();
        assert_eq!(s.subnet_count_exponent, 37);
        assert_eq!(s.step_size_exponent, -95);
        assert_eq!(s.step_count_exponent, 97);
        assert_eq!(s.smoothness_exponent, 95);
        assert_eq!(s.step_count_factor, 2.0);
        // t * lambda = 2 n^2 and t / (2 n L) = n
        assert_eq!(s.steps_times_step_size(), (2.0, 2));
        assert_eq!(s.steps_over_twice_n_smoothness(), (1.0, 1));
        // the step size is exactly the reciprocal smoothness level
        assert_eq!(s.step_size_exponent, -(s.smoothness_exponent as i64));

        let deeper = theoretical_schedule(Architecture::new(1, 2, 3, 1).unwrap(), 10).unwrap();
        assert_eq!(deeper.subnet_count_exponent, 67);

        assert!(theoretical_schedule(Architecture::new(2, 2, 2, 1).unwrap(), 10).is_err());
    }

    #[test]
    fn schedule_identities_hold_across_shapes() {
        for (d, k0, depth) in [(1, 2, 2), (1, 2, 5), (2, 4, 3), (3, 6, 4), (2, 5, 2)] {
            let arch = Architecture::new(d, k0, depth, 1).unwrap();
            let s = theoretical_schedule(arch, 17).unwrap();
            assert_eq!(s.steps_times_step_size().1, 2);
            assert_eq!(s.steps_over_twice_n_smoothness(), (1.0, 1));
            assert_eq!(s.step_size_exponent, -(s.smoothness_exponent as i64));
        }
    }

    #[test]
    fn event_validation_examples() {
        let data = grid_data(10);
        let report = validate_event(&data, 10);
        assert!(report.all_hold());
        let sep = report.min_separation.unwrap();
        assert!((sep - 0.1).abs() < 1e-12);
        assert!(report.separation_threshold < sep);

        // duplicates are skipped by the separation infimum
        let dup = Dataset::from_pairs(1, &[(vec![0.5], 1.0), (vec![0.5], -1.0)]).unwrap();
        let r = validate_event(&dup, 2);
        assert!(r.separation_ok);
        assert_eq!(r.min_separation, None);

        // an oversized response breaks the third condition
        let big = Dataset::from_pairs(1, &[(vec![0.1], 101.0), (vec![0.2], 0.0)]).unwrap();
        let r = validate_event(&big, 10);
        assert!(!r.response_ok);
        assert!(!r.all_hold());
    }

    #[test]
    fn stop_at_gap_halts_early() {
        let data = grid_data(4);
        let arch = Architecture::new(1, 2, 2, 4).unwrap();
        let init = initialize(
            arch,
            &InitSpec {
                bound: 1.0,
                seed: 3,
                mode: InitMode::Planted,
            },
            &data,
        )
        .unwrap();
        let optimum = interpolation_optimum(&data).unwrap();
        let mut cfg = TrainConfig::new(0.25, 100_000);
        cfg.monitors.optimum = Some(optimum);
        cfg.monitors.plant = init.plant.clone();
        cfg.stop_at_gap = Some(1e-3);
        let run = train(&init.weights, &data, &cfg).unwrap();
        assert!(run.steps_run < 100_000);
        assert!(run.final_risk() <= optimum + 1e-3);
        assert_eq!(run.risk_trace.len(), run.steps_run + 1);
    }
}
