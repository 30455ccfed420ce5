//! An adversarial discrete design under which near-interpolation forces
//! constant generalization risk.
//!
//! The distribution puts mass `1/n` on each grid point `x_k = (k/n, 0, ..,
//! 0)` and responds with a fair coin `Y = +-1`, so the regression function is
//! identically zero and any estimator's integrated squared error equals the
//! average of its squared values over the support ([`AdversarialDistribution::exact_risk`]).
//!
//! An estimator that comes within `kappa` of the interpolation optimum on
//! the sample is pinned to the per-point response averages up to
//! `sqrt(n * kappa)` ([`interpolation_deviation_check`]); those averages are
//! coin-flip means, whose squared size at a support point seen `B > 0` times
//! has conditional expectation `1/B`. Summing the binomial expectation
//! `E[(1/B) 1{B>0}]` over the support ([`binomial_identity`]) gives the exact
//! constant that Monte-Carlo replications of the experiment must reproduce
//! ([`mc_lower_bound_experiment`]), bounded below by a closed-form chain that
//! stays above `0.2067` for every `n >= 10`.

use rand::Rng;

use crate::data::Dataset;
use crate::risk::{conditional_mean, empirical_risk_of, interpolation_optimum};
use crate::rng::{substream, DOMAIN_ESTIMATOR, DOMAIN_REPLICATION};
use crate::sum::Accumulator;
use crate::{Error, Result};

/// Uniform distribution on `n` grid points with fair-coin responses and zero
/// regression function, living in `[0, 1]^d`.
#[derive(Debug, Clone, Copy)]
pub struct AdversarialDistribution {
    n: usize,
    d: usize,
}

impl AdversarialDistribution {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 1 || d < 1 {
            return Err(Error::Precondition(format!(
                "support size and dimension must be >= 1 (n = {n}, d = {d})"
            )));
        }
        Ok(Self { n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Support point `x_k = (k/n, 0, .., 0)` for `k` in `1..=n`.
    pub fn support_point(&self, k: usize) -> Vec<f64> {
        debug_assert!(k >= 1 && k <= self.n);
        let mut x = vec![0.0; self.d];
        x[0] = k as f64 / self.n as f64;
        x
    }

    /// Draws `n` i.i.d. pairs: uniform support index, fair-coin response.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Dataset {
        let mut xs = Vec::with_capacity(self.n * self.d);
        let mut ys = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let k = rng.gen_range(1..=self.n);
            xs.extend_from_slice(&self.support_point(k));
            ys.push(if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
        }
        Dataset::new(self.d, xs, ys).expect("support points are finite")
    }

    /// Integrated squared error of an estimate against the zero regression
    /// function: `(1/n) * sum of m_hat(x_k)^2` over the support.
    pub fn exact_risk(&self, m_hat: impl Fn(&[f64]) -> f64) -> Result<f64> {
        let mut acc = Accumulator::new();
        for k in 1..=self.n {
            let v = m_hat(&self.support_point(k));
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "estimate at support point {k} is {v}"
                )));
            }
            acc.add(v * v);
        }
        Ok(acc.total() / self.n as f64)
    }
}

/// A fitted estimate: a point-evaluable function plus a success flag for the
/// auxiliary-randomization event.
pub struct FittedEstimate {
    pub predict: Box<dyn Fn(&[f64]) -> f64>,
    pub success: bool,
}

/// An estimation procedure: sample plus auxiliary seed in, function out.
pub trait Estimator {
    fn fit(&self, data: &Dataset, seed: u64) -> Result<FittedEstimate>;
    fn name(&self) -> &'static str;
}

/// The exact interpolator: the per-point response average on the sample,
/// zero off-sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConditionalMeanEstimator;

impl Estimator for ConditionalMeanEstimator {
    fn fit(&self, data: &Dataset, _seed: u64) -> Result<FittedEstimate> {
        let mbar = conditional_mean(data);
        Ok(FittedEstimate {
            predict: Box::new(move |x| mbar.eval(x)),
            success: true,
        })
    }

    fn name(&self) -> &'static str {
        "conditional-mean"
    }
}

/// The oracle that already knows the regression function is zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroEstimator;

impl Estimator for ZeroEstimator {
    fn fit(&self, _data: &Dataset, _seed: u64) -> Result<FittedEstimate> {
        Ok(FittedEstimate {
            predict: Box::new(|_| 0.0),
            success: true,
        })
    }

    fn name(&self) -> &'static str {
        "zero"
    }
}

/// One Monte-Carlo replication.
#[derive(Debug, Clone, Copy)]
pub struct ReplicationRow {
    pub replication: usize,
    pub risk: f64,
    /// Distance of the fitted estimate's sample risk to the interpolation
    /// optimum.
    pub kappa: f64,
    pub success: bool,
}

/// Aggregate of a Monte-Carlo run of the generalization experiment.
#[derive(Debug, Clone)]
pub struct RiskReport {
    pub replications: usize,
    pub mean_risk: f64,
    /// Standard error of the mean; absent for a single replication.
    pub std_error: Option<f64>,
    pub mean_kappa: f64,
    pub max_kappa: f64,
    pub failure_rate: f64,
    /// `1/5 - n * max_kappa - failure_rate / 2`, the composed lower bound at
    /// the measured near-interpolation level.
    pub composed_bound: f64,
    /// The exact binomial reference the mean risk converges to for an exact
    /// interpolator.
    pub exact_reference: f64,
    pub rows: Vec<ReplicationRow>,
}

/// Repeatedly samples the adversarial design, fits the estimator, and
/// records its exact generalization risk and near-interpolation gap.
pub fn mc_lower_bound_experiment(
    dist: &AdversarialDistribution,
    estimator: &dyn Estimator,
    replications: usize,
    seed: u64,
) -> Result<RiskReport> {
    if replications < 1 {
        return Err(Error::Precondition(
            "at least one replication is required".into(),
        ));
    }
    let mut rows = Vec::with_capacity(replications);
    let mut risk_acc = Accumulator::new();
    let mut kappa_acc = Accumulator::new();
    let mut max_kappa: f64 = 0.0;
    let mut failures = 0usize;
    for rep in 0..replications {
        let mut rng = substream(seed, DOMAIN_REPLICATION, rep as u64);
        let data = dist.sample(&mut rng);
        let estimator_seed = substream(seed, DOMAIN_ESTIMATOR, rep as u64).gen::<u64>();
        let fit = estimator.fit(&data, estimator_seed)?;
        let risk = dist.exact_risk(&fit.predict)?;
        let sample_risk = empirical_risk_of(&fit.predict, &data)?;
        let kappa = (sample_risk - interpolation_optimum(&data)?).max(0.0);
        if !fit.success {
            failures += 1;
        } else {
            max_kappa = max_kappa.max(kappa);
        }
        risk_acc.add(risk);
        kappa_acc.add(kappa);
        rows.push(ReplicationRow {
            replication: rep,
            risk,
            kappa,
            success: fit.success,
        });
    }
    if failures == replications {
        return Err(Error::Precondition(
            "estimator failed on every replication".into(),
        ));
    }
    let m = replications as f64;
    let mean_risk = risk_acc.total() / m;
    let std_error = if replications > 1 {
        let mut var = Accumulator::new();
        for row in &rows {
            let d = row.risk - mean_risk;
            var.add(d * d);
        }
        Some((var.total() / (m - 1.0)).sqrt() / m.sqrt())
    } else {
        None
    };
    let failure_rate = failures as f64 / m;
    let n = dist.n() as f64;
    Ok(RiskReport {
        replications,
        mean_risk,
        std_error,
        mean_kappa: kappa_acc.total() / m,
        max_kappa,
        failure_rate,
        composed_bound: 0.2 - n * max_kappa - 0.5 * failure_rate,
        exact_reference: binomial_identity(dist.n())?.exact_sum,
        rows,
    })
}

/// The exact inverse-occupancy expectation and its closed-form lower bounds.
#[derive(Debug, Clone, Copy)]
pub struct BinomialIdentity {
    pub n: usize,
    /// `sum over k of p_k * E[(1/B_k) 1{B_k > 0}]` with `B_k ~ Bin(n, 1/n)`;
    /// equal per symmetry to the single expectation
    /// `sum_{i=1..n} (1/i) C(n,i) (1/n)^i (1-1/n)^{n-i}`.
    pub exact_sum: f64,
    /// Closed form of the same sum with `1/i` weakened to `1/(i+1)`:
    /// `(n/(n+1)) (1 - q^{n+1} - ((n+1)/n) q^n)` with `q = 1 - 1/n`.
    pub shifted_exact: f64,
    /// `(n/(n+1)) (1 - ((2n+1)/n) q^n)`.
    pub intermediate_bound: f64,
    /// `(10/11) (1 - 21/(10 e))`, valid from `n = 10` on.
    pub floor_bound: f64,
    /// `exact >= shifted >= intermediate`, plus `intermediate >= floor` when
    /// `n >= 10`.
    pub chain_holds: bool,
}

/// Computes the exact binomial sum by the stable pmf recurrence and the
/// chained closed-form lower bounds.
pub fn binomial_identity(n: usize) -> Result<BinomialIdentity> {
    if n < 1 {
        return Err(Error::Precondition("support size must be >= 1".into()));
    }
    let nf = n as f64;
    let p = 1.0 / nf;
    let q = 1.0 - p;
    // pmf recurrence: P(i+1) = P(i) * (n-i)/(i+1) * p/q
    let mut exact = Accumulator::new();
    if n == 1 {
        exact.add(1.0); // a single point is always seen exactly once
    } else {
        let mut pmf = q.powi(n as i32);
        for i in 1..=n {
            pmf *= (n - i + 1) as f64 / i as f64 * (p / q);
            exact.add(pmf / i as f64);
        }
    }
    let exact_sum = exact.total();
    let shifted_exact = if n == 1 {
        0.5
    } else {
        nf / (nf + 1.0) * (1.0 - q.powi(n as i32 + 1) - (nf + 1.0) / nf * q.powi(n as i32))
    };
    let intermediate_bound = nf / (nf + 1.0) * (1.0 - (2.0 * nf + 1.0) / nf * q.powi(n as i32));
    let floor_bound = 10.0 / 11.0 * (1.0 - 21.0 / (10.0 * std::f64::consts::E));
    let mut chain_holds = exact_sum >= shifted_exact && shifted_exact >= intermediate_bound;
    if n >= 10 {
        chain_holds &= intermediate_bound >= floor_bound;
    }
    Ok(BinomialIdentity {
        n,
        exact_sum,
        shifted_exact,
        intermediate_bound,
        floor_bound,
        chain_holds,
    })
}

/// Per-point deviations of a near-interpolator from the response averages.
#[derive(Debug, Clone)]
pub struct DeviationReport {
    /// `sqrt(n * kappa)`.
    pub bound: f64,
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub all_within: bool,
}

/// Checks that a function whose sample risk is within `kappa` of the
/// interpolation optimum deviates from the per-point response averages by at
/// most `sqrt(n * kappa)` at every sample point. Errors when the function is
/// not actually a `kappa`-near-interpolator.
pub fn interpolation_deviation_check(
    f: impl Fn(&[f64]) -> f64,
    data: &Dataset,
    kappa: f64,
) -> Result<DeviationReport> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::Precondition(format!(
            "kappa must be nonnegative, got {kappa}"
        )));
    }
    let sample_risk = empirical_risk_of(&f, data)?;
    let optimum = interpolation_optimum(data)?;
    if sample_risk > optimum + kappa {
        return Err(Error::Precondition(format!(
            "not a near-interpolator: sample risk {sample_risk} exceeds optimum {optimum} + kappa {kappa}"
        )));
    }
    let mbar = conditional_mean(data);
    let bound = (data.n() as f64 * kappa).sqrt();
    let mut deviations = Vec::with_capacity(data.n());
    let mut max_dev: f64 = 0.0;
    for i in 0..data.n() {
        let dev = (f(data.x(i)) - mbar.eval(data.x(i))).abs();
        max_dev = max_dev.max(dev);
        deviations.push(dev);
    }
    Ok(DeviationReport {
        bound,
        deviations,
        max_deviation: max_dev,
        all_within: max_dev <= bound,
    })
}
