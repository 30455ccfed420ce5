//! Computable smoothness and saturation constants, and empirical checkers
//! for the inequalities they promise.
//!
//! The quantitative skeleton behind the training guarantees consists of a
//! handful of explicit bounds, each exposed here both as a formula and as a
//! checker that evaluates the two sides on concrete inputs:
//!
//! - a Lipschitz bound on the network output under weight perturbations
//!   ([`weight_perturbation_bound`], with a per-subnetwork variant),
//! - a gradient sup-norm bound and a gradient Lipschitz constant
//!   ([`smoothness_constants`]); the reciprocal of the Lipschitz constant is
//!   the step size under which descent cannot increase the risk,
//! - the indicator condition and the resulting gradient lower bound
//!   `|grad F|^2 >= (F - optimum)/n` ([`gradient_gap_check`]),
//! - the geometric risk-gap contraction implied by those two
//!   ([`contraction_envelope`]),
//! - an exponentially small cap on the inner partials of a saturated
//!   subnetwork ([`saturation_gradient_bound`]).
//!
//! Formula values are kept in log10 alongside the linear value because the
//! constants exceed the double range at realistic sample sizes.

use crate::data::{point_key, Dataset};
use crate::descent::PlantMap;
use crate::grad::analytic_gradient;
use crate::net::{forward, Architecture, WeightVector};
use crate::risk::{empirical_risk, interpolation_optimum};
use crate::{Error, Result};

/// Gradient smoothness constants at a given norm level.
#[derive(Debug, Clone)]
pub struct SmoothnessConstants {
    /// The value substituted for every norm bound in the formulas.
    pub norm_level: f64,
    /// log10 of the gradient Lipschitz constant.
    pub log10_gradient_lipschitz: f64,
    /// The constant itself when it fits in a double.
    pub gradient_lipschitz: Option<f64>,
    /// log10 of the per-coordinate partial-derivative Lipschitz constant.
    pub log10_partial_lipschitz: f64,
    pub partial_lipschitz: Option<f64>,
    /// log10 of the gradient sup-norm bound (Lipschitz constant times norm
    /// level).
    pub log10_gradient_sup: f64,
    pub gradient_sup: Option<f64>,
}

/// Evaluates the smoothness formulas with every norm bound replaced by
/// `norm_level` (which must be at least 1):
///
/// ```text
/// gradient Lipschitz: 45 L 3^L max(k0,L,d)^{3/2} k0^{2L} kn^{3/2} v^{4L+1}
/// partial Lipschitz:   4 L 3^L k0^{2L-2} v^{4L}
/// gradient sup bound:  (gradient Lipschitz) * v
/// ```
///
/// The bounds cover every weight vector, input, and response whose sup norms
/// stay below the level.
pub fn smoothness_constants_at_norm(
    arch: Architecture,
    norm_level: f64,
) -> Result<SmoothnessConstants> {
    if !(norm_level >= 1.0) || !norm_level.is_finite() {
        return Err(Error::Precondition(format!(
            "norm level must be >= 1, got {norm_level}"
        )));
    }
    let l = arch.depth as f64;
    let k0 = arch.k0 as f64;
    let d = arch.d as f64;
    let kn = arch.kn as f64;
    let peak = k0.max(l).max(d);

    let log10_ln = 45f64.log10()
        + l.log10()
        + l * 3f64.log10()
        + 1.5 * peak.log10()
        + 2.0 * l * k0.log10()
        + 1.5 * kn.log10()
        + (4.0 * l + 1.0) * norm_level.log10();
    let log10_lbar = 4f64.log10()
        + l.log10()
        + l * 3f64.log10()
        + (2.0 * l - 2.0) * k0.log10()
        + 4.0 * l * norm_level.log10();
    let log10_sup = log10_ln + norm_level.log10();

    let linear = |log10: f64, f: &dyn Fn() -> f64| if log10 < 300.0 { Some(f()) } else { None };
    let depth_i = arch.depth as i32;
    let ln_value = || {
        45.0 * l
            * 3f64.powi(depth_i)
            * peak.powf(1.5)
            * k0.powi(2 * depth_i)
            * kn.powf(1.5)
            * norm_level.powi(4 * depth_i + 1)
    };
    let lbar_value =
        || 4.0 * l * 3f64.powi(depth_i) * k0.powi(2 * depth_i - 2) * norm_level.powi(4 * depth_i);

    Ok(SmoothnessConstants {
        norm_level,
        log10_gradient_lipschitz: log10_ln,
        gradient_lipschitz: linear(log10_ln, &ln_value),
        log10_partial_lipschitz: log10_lbar,
        partial_lipschitz: linear(log10_lbar, &lbar_value),
        log10_gradient_sup: log10_sup,
        gradient_sup: linear(log10_sup, &|| ln_value() * norm_level),
    })
}

/// Same formulas with the norm level `c3 * n^{c4}` (both constants at least
/// 1, matching the regime in which the bounds are derived).
pub fn smoothness_constants(
    arch: Architecture,
    n: usize,
    c3: f64,
    c4: f64,
) -> Result<SmoothnessConstants> {
    if !(c3 >= 1.0 && c4 >= 1.0) {
        return Err(Error::Precondition(format!(
            "norm-bound constants must be >= 1, got c3={c3}, c4={c4}"
        )));
    }
    smoothness_constants_at_norm(arch, c3 * (n as f64).powf(c4))
}

fn check_same_arch(w: &WeightVector, other: &WeightVector) -> Result<Architecture> {
    let arch = w.arch();
    if other.arch() != arch {
        return Err(Error::InvalidArchitecture(format!(
            "architectures differ: {:?} vs {:?}",
            arch,
            other.arch()
        )));
    }
    Ok(arch)
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Output-perturbation bound for the whole network:
///
/// ```text
/// |f_w(x) - f_wbar(x)| <= (2 kn + 1) (2 k0 + 1)^depth
///                          * max(|w|_inf, |x|_inf, 1)^{depth+1} * |w - wbar|_inf
/// ```
///
/// The hypothesis set of this bound requires `2 k0 >= d` (weaker than the
/// `k0 >= 2d` needed by the indicator machinery), which is checked here
/// separately.
pub fn weight_perturbation_bound(
    w: &WeightVector,
    wbar: &WeightVector,
    x: &[f64],
) -> Result<f64> {
    let arch = check_same_arch(w, wbar)?;
    if 2 * arch.k0 < arch.d {
        return Err(Error::Precondition(format!(
            "perturbation bound needs 2 k0 >= d (k0 = {}, d = {})",
            arch.k0, arch.d
        )));
    }
    if x.len() != arch.d {
        return Err(Error::DimensionMismatch {
            expected: arch.d,
            got: x.len(),
        });
    }
    let m = w.max_abs().max(sup_norm(x)).max(1.0);
    let diff = w
        .values()
        .iter()
        .zip(wbar.values())
        .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()));
    Ok((2.0 * arch.kn as f64 + 1.0)
        * (2.0 * arch.k0 as f64 + 1.0).powi(arch.depth as i32)
        * m.powi(arch.depth as i32 + 1)
        * diff)
}

/// Per-subnetwork variant: bounds the head-value difference of subnetwork
/// `k` by the largest inner-weight difference of that subnetwork.
pub fn subnet_perturbation_bound(
    w: &WeightVector,
    wbar: &WeightVector,
    x: &[f64],
    k: usize,
) -> Result<f64> {
    let arch = check_same_arch(w, wbar)?;
    if 2 * arch.k0 < arch.d {
        return Err(Error::Precondition(format!(
            "perturbation bound needs 2 k0 >= d (k0 = {}, d = {})",
            arch.k0, arch.d
        )));
    }
    if x.len() != arch.d {
        return Err(Error::DimensionMismatch {
            expected: arch.d,
            got: x.len(),
        });
    }
    let m = w.max_abs().max(sup_norm(x)).max(1.0);
    let mut diff: f64 = 0.0;
    for range in arch.subnet_inner_ranges(k) {
        for idx in range {
            diff = diff.max((w.values()[idx] - wbar.values()[idx]).abs());
        }
    }
    Ok((2.0 * arch.k0 as f64 + 1.0).powi(arch.depth as i32)
        * m.powi(arch.depth as i32)
        * diff)
}

/// Per-sample indicator margins under a planted assignment.
#[derive(Debug, Clone)]
pub struct PointIndicator {
    pub sample: usize,
    pub subnet: usize,
    /// Head value at the sample's own point.
    pub own: f64,
    /// Largest head value over samples with a different input.
    pub off_sup: f64,
    pub holds: bool,
}

/// Result of checking the indicator condition `own >= 1 - 2/n^2` and
/// `off_sup <= 2/n^2` for every sample.
#[derive(Debug, Clone)]
pub struct IndicatorConditionReport {
    pub threshold: f64,
    pub per_sample: Vec<PointIndicator>,
    pub all_hold: bool,
}

/// Checks the indicator condition for the given assignment at level
/// `2/n^2`. Duplicate inputs share a subnetwork and are skipped by the
/// off-point supremum.
pub fn check_indicator_condition(
    w: &WeightVector,
    data: &Dataset,
    plant: &PlantMap,
    n: usize,
) -> Result<IndicatorConditionReport> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let arch = w.arch();
    let threshold = 2.0 / (n as f64 * n as f64);
    let assignment = plant.sample_assignment(data)?;
    let mut heads = vec![0.0; arch.kn * data.n()];
    for l in 0..data.n() {
        let trace = forward(w, data.x(l))?;
        for k in 0..arch.kn {
            heads[k * data.n() + l] = trace.head(k);
        }
    }
    let keys: Vec<Vec<u64>> = (0..data.n()).map(|i| point_key(data.x(i))).collect();
    let mut per_sample = Vec::with_capacity(data.n());
    let mut all_hold = true;
    for i in 0..data.n() {
        let j = assignment[i];
        let own = heads[j * data.n() + i];
        let mut off_sup: f64 = 0.0;
        for l in 0..data.n() {
            if keys[l] != keys[i] {
                off_sup = off_sup.max(heads[j * data.n() + l]);
            }
        }
        let holds = own >= 1.0 - threshold && off_sup <= threshold;
        all_hold &= holds;
        per_sample.push(PointIndicator {
            sample: i,
            subnet: j,
            own,
            off_sup,
            holds,
        });
    }
    Ok(IndicatorConditionReport {
        threshold,
        per_sample,
        all_hold,
    })
}

/// Both sides of the gradient lower bound at one weight vector.
#[derive(Debug, Clone)]
pub struct GradientGapReport {
    pub grad_norm_sq: f64,
    pub risk: f64,
    pub optimum: f64,
    /// `(risk - optimum) / n`, the right-hand side.
    pub gap_over_n: f64,
    pub holds: bool,
    pub margin: f64,
}

/// Verifies `|grad F|^2 >= (F - optimum)/n` under the indicator condition.
/// Errors when `n < 5` or the condition fails (the bound is only promised
/// there).
pub fn gradient_gap_check(
    w: &WeightVector,
    data: &Dataset,
    plant: &PlantMap,
    n: usize,
) -> Result<GradientGapReport> {
    if n < 5 {
        return Err(Error::Precondition(format!(
            "gradient gap bound needs n >= 5, got {n}"
        )));
    }
    let condition = check_indicator_condition(w, data, plant, n)?;
    if !condition.all_hold {
        return Err(Error::Precondition(
            "indicator condition fails; the gradient gap bound is not promised".into(),
        ));
    }
    let grad = analytic_gradient(w, data)?;
    let grad_norm_sq: f64 = grad.values().iter().map(|g| g * g).sum();
    let risk = empirical_risk(w, data)?;
    let optimum = interpolation_optimum(data)?;
    let gap_over_n = (risk - optimum) / data.n() as f64;
    Ok(GradientGapReport {
        grad_norm_sq,
        risk,
        optimum,
        gap_over_n,
        holds: grad_norm_sq >= gap_over_n,
        margin: grad_norm_sq - gap_over_n,
    })
}

/// Predicted upper bounds on the risk gap after `t` steps.
#[derive(Debug, Clone, Copy)]
pub struct ContractionEnvelope {
    /// `(1 - 1/(2 n L))^t * (F0 - optimum)`.
    pub geometric: f64,
    /// `exp(-t/(2 n L)) * (F0 - optimum)`, the weaker closed form.
    pub exponential: f64,
}

/// Geometric decay envelope for the risk gap under the gradient lower bound
/// with smoothness level `l_n`.
pub fn contraction_envelope(
    f0: f64,
    optimum: f64,
    n: usize,
    l_n: f64,
    t: usize,
) -> Result<ContractionEnvelope> {
    if !(l_n > 0.0) || !l_n.is_finite() {
        return Err(Error::Precondition(format!(
            "smoothness level must be positive, got {l_n}"
        )));
    }
    let rate = 1.0 / (2.0 * n as f64 * l_n);
    let gap = f0 - optimum;
    Ok(ContractionEnvelope {
        geometric: (1.0 - rate).powf(t as f64) * gap,
        exponential: (-(t as f64) * rate).exp() * gap,
    })
}

/// Saturation cap on the inner partials of one subnetwork.
#[derive(Debug, Clone)]
pub struct SaturationReport {
    /// `2 sqrt(F) k0^depth v^{depth+1} e^{-n}`.
    pub bound: f64,
    /// Largest observed `head (1 - head)` over the sample.
    pub saturation: f64,
    pub max_inner_partial: f64,
    pub holds: bool,
}

/// Checks that every inner partial of subnetwork `k` is capped by the
/// saturation bound. Preconditions: `head (1-head) <= e^{-n}` at every
/// sample, and `norm_level` dominates the weight, input, and response sup
/// norms (and 1).
pub fn saturation_gradient_bound(
    w: &WeightVector,
    data: &Dataset,
    k: usize,
    n: usize,
    norm_level: f64,
) -> Result<SaturationReport> {
    let arch = w.arch();
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if norm_level < w.max_abs().max(data.max_x_norm()).max(data.max_abs_y()).max(1.0) {
        return Err(Error::Precondition(format!(
            "norm level {norm_level} does not dominate the weight/data norms"
        )));
    }
    let sat_cap = (-(n as f64)).exp();
    let mut saturation: f64 = 0.0;
    for l in 0..data.n() {
        let head = forward(w, data.x(l))?.head(k);
        saturation = saturation.max(head * (1.0 - head));
    }
    if saturation > sat_cap {
        return Err(Error::Precondition(format!(
            "subnetwork {k} is not saturated: max head(1-head) = {saturation} > e^-{n}"
        )));
    }
    let risk = empirical_risk(w, data)?;
    let bound = 2.0
        * risk.sqrt()
        * (arch.k0 as f64).powi(arch.depth as i32)
        * norm_level.powi(arch.depth as i32 + 1)
        * sat_cap;
    let grad = analytic_gradient(w, data)?;
    let mut max_inner: f64 = 0.0;
    for range in arch.subnet_inner_ranges(k) {
        for idx in range {
            max_inner = max_inner.max(grad.values()[idx].abs());
        }
    }
    Ok(SaturationReport {
        bound,
        saturation,
        max_inner_partial: max_inner,
        holds: max_inner <= bound,
    })
}
