//! Constructive weights that turn one subnetwork into a sharp indicator of a
//! hyperrectangle.
//!
//! For corners `a <= b` with margin `delta` and sharpness parameter `n`, the
//! constructed subnetwork's head value is at least `1 - e^{-n}` on the shrunk
//! rectangle `prod [a_l + delta, b_l - delta]` and at most `e^{-n}` outside
//! the expanded rectangle `prod [a_l - delta, b_l + delta]`, for every input
//! in `[-1, 1]^d`. Points in the margin shell between the two rectangles are
//! unconstrained.
//!
//! The construction uses `2d` first-layer gate neurons (one per rectangle
//! face), pass-through neurons in the middle layers, and a head whose leading
//! weights dominate the summed gate activations. Every constraint the
//! construction must satisfy is exposed as a named predicate so the weights
//! can be checked symbolically, not just probed.
//!
//! The `robust` variant doubles the hard constants and halves the slack
//! intervals, so that two successive coordinatewise perturbations below
//! [`perturbation_radius`] still leave all plain constraints intact.

use crate::net::{forward, Architecture, WeightVector};
use crate::{Error, Result};

/// Target rectangle, margin, sharpness, and construction flavor.
#[derive(Debug, Clone, PartialEq)]
pub struct RectangleSpec {
    /// Lower corner.
    pub a: Vec<f64>,
    /// Upper corner.
    pub b: Vec<f64>,
    /// Margin between the guaranteed-on and guaranteed-off regions.
    pub delta: f64,
    /// Sharpness: the guarantees are `>= 1 - e^{-n}` / `<= e^{-n}`.
    pub sharpness: u32,
    /// Use the tightened constants that survive double perturbation.
    pub robust: bool,
}

impl RectangleSpec {
    pub fn new(a: Vec<f64>, b: Vec<f64>, delta: f64, sharpness: u32, robust: bool) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidRectangle(format!(
                "corner dimensions {} and {} must match and be >= 1",
                a.len(),
                b.len()
            )));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidRectangle(format!("margin {delta} must be positive")));
        }
        for l in 0..a.len() {
            if !a[l].is_finite() || !b[l].is_finite() {
                return Err(Error::InvalidRectangle("non-finite corner".into()));
            }
            if b[l] - a[l] < 2.0 * delta {
                return Err(Error::InvalidRectangle(format!(
                    "side {l} has width {} < 2*delta = {}",
                    b[l] - a[l],
                    2.0 * delta
                )));
            }
        }
        Ok(Self { a, b, delta, sharpness, robust })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `e^{-n}`, the guaranteed saturation level.
    pub fn saturation(&self) -> f64 {
        (-(self.sharpness as f64)).exp()
    }
}

/// A single-subnetwork weight assignment realizing the indicator.
#[derive(Debug, Clone)]
pub struct IndicatorWeights {
    pub weights: WeightVector,
    pub spec: RectangleSpec,
}

/// How a probe relates to the rectangle pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeClass {
    /// In the shrunk rectangle: head must be `>= 1 - e^{-n}`.
    Inside,
    /// Outside the expanded rectangle: head must be `<= e^{-n}`.
    Outside,
    /// In the margin shell: unconstrained.
    Margin,
}

/// One violated probe bound.
#[derive(Debug, Clone)]
pub struct ProbeViolation {
    pub index: usize,
    pub class: ProbeClass,
    pub value: f64,
}

/// Outcome of probing an indicator.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub inside: usize,
    pub outside: usize,
    pub margin: usize,
    pub violations: Vec<ProbeViolation>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A named symbolic constraint on the constructed weights.
#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub name: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

fn face_log(d: usize) -> f64 {
    ((8 * d - 1) as f64).ln()
}

fn check_arch(arch: Architecture, spec: &RectangleSpec) -> Result<()> {
    if arch.kn != 1 {
        return Err(Error::InvalidArchitecture(format!(
            "indicator construction needs kn = 1, got {}",
            arch.kn
        )));
    }
    if arch.d != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: arch.d,
        });
    }
    if arch.k0 < 2 * arch.d {
        return Err(Error::Precondition(format!(
            "indicator construction needs k0 >= 2d (k0 = {}, d = {})",
            arch.k0, arch.d
        )));
    }
    Ok(())
}

/// Builds the canonical midpoint assignment for the given rectangle.
///
/// Every bias sits at the exact center of its allowed interval and every
/// gain sits exactly on its bound, which maximizes the symmetric slack left
/// for perturbations.
pub fn build_indicator(arch: Architecture, spec: &RectangleSpec) -> Result<IndicatorWeights> {
    check_arch(arch, spec)?;
    let d = arch.d;
    let log = face_log(d);
    let n = spec.sharpness as f64;
    let head_leading = if spec.robust { -8.0 * (n + 1.0) } else { -4.0 * (n + 1.0) };
    let gate_gain = (if spec.robust { 4.0 } else { 2.0 }) / spec.delta * log;
    let pass_gain = (if spec.robust { 16.0 } else { 8.0 }) * log;

    let mut w = WeightVector::zeros(arch);
    let v = w.values_mut();
    // first layer: one gate per rectangle face
    for m in 0..d {
        v[arch.input_weight(0, m, m + 1)] = -gate_gain;
        v[arch.input_weight(0, m, 0)] = spec.a[m] * gate_gain;
        v[arch.input_weight(0, d + m, m + 1)] = gate_gain;
        v[arch.input_weight(0, d + m, 0)] = -spec.b[m] * gate_gain;
    }
    // middle layers: pass each gate through unchanged
    for s in 1..=arch.middle_levels() {
        for m in 0..(2 * d) {
            v[arch.middle_weight(s, 0, m, m + 1)] = pass_gain;
            v[arch.middle_weight(s, 0, m, 0)] = -0.5 * pass_gain;
        }
    }
    // head: dominate the summed gate activations
    for j in 1..=(2 * d) {
        v[arch.head_weight(0, j)] = head_leading;
    }
    v[arch.head_weight(0, 0)] = -0.5 * head_leading;

    Ok(IndicatorWeights {
        weights: w,
        spec: spec.clone(),
    })
}

/// Evaluates every constraint of the construction as a predicate.
///
/// With `robust = false` this is the constraint set under which the
/// indicator bounds are guaranteed; with `robust = true` it is the tightened
/// set whose members still satisfy the plain set after two coordinatewise
/// perturbations below [`perturbation_radius`].
pub fn indicator_conditions(
    w: &WeightVector,
    spec: &RectangleSpec,
    robust: bool,
) -> Result<Vec<ConditionCheck>> {
    let arch = w.arch();
    check_arch(arch, spec)?;
    let d = arch.d;
    let k0 = arch.k0;
    let log = face_log(d);
    let n = spec.sharpness as f64;
    let head_leading_cap = if robust { -8.0 * (n + 1.0) } else { -4.0 * (n + 1.0) };
    let head_slack = if robust { 0.25 / k0 as f64 } else { 0.5 / k0 as f64 };
    let head_bias_slack = if robust { 0.25 } else { 0.5 };
    let pass_floor = (if robust { 16.0 } else { 8.0 }) * log;
    let pass_slack = log / (if robust { 2.0 } else { 1.0 }) / k0 as f64;
    let gate_floor = (if robust { 4.0 } else { 2.0 }) / spec.delta * log;
    let gate_slack = log / (if robust { 2.0 } else { 1.0 }) / d as f64;

    let v = w.values();
    let mut checks = Vec::new();
    let mut push = |name: String, lhs: f64, rhs: f64| {
        checks.push(ConditionCheck {
            holds: lhs <= rhs,
            name,
            lhs,
            rhs,
        });
    };

    let leading = v[arch.head_weight(0, 1)];
    push("head_leading".into(), leading, head_leading_cap);
    // alignment runs over all 2d gate sources; the head treats them as one
    // block with a common coefficient
    for j in 2..=(2 * d) {
        push(
            format!("head_align_{j}"),
            (v[arch.head_weight(0, j)] - leading).abs(),
            head_slack,
        );
    }
    for j in (2 * d + 1)..=k0 {
        push(
            format!("head_stray_{j}"),
            v[arch.head_weight(0, j)].abs(),
            head_slack,
        );
    }
    push(
        "head_bias".into(),
        (v[arch.head_weight(0, 0)] + 0.5 * leading).abs(),
        head_bias_slack,
    );

    for s in 1..=arch.middle_levels() {
        for m in 0..(2 * d) {
            let gain = v[arch.middle_weight(s, 0, m, m + 1)];
            push(format!("pass_gain_{s}_{m}"), pass_floor, gain);
            push(
                format!("pass_bias_{s}_{m}"),
                (v[arch.middle_weight(s, 0, m, 0)] + 0.5 * gain).abs(),
                pass_slack,
            );
            for j in 1..=k0 {
                if j != m + 1 {
                    push(
                        format!("pass_cross_{s}_{m}_{j}"),
                        v[arch.middle_weight(s, 0, m, j)].abs(),
                        pass_slack,
                    );
                }
            }
        }
    }

    for m in 0..d {
        let gain = v[arch.input_weight(0, m, m + 1)];
        push(format!("lower_gain_{m}"), gain, -gate_floor);
        push(
            format!("lower_bias_{m}"),
            (v[arch.input_weight(0, m, 0)] + spec.a[m] * gain).abs(),
            gate_slack,
        );
        for j in 1..=d {
            if j != m + 1 {
                push(
                    format!("lower_cross_{m}_{j}"),
                    v[arch.input_weight(0, m, j)].abs(),
                    gate_slack,
                );
            }
        }
        let up_gain = v[arch.input_weight(0, d + m, m + 1)];
        push(format!("upper_gain_{m}"), gate_floor, up_gain);
        push(
            format!("upper_bias_{m}"),
            (v[arch.input_weight(0, d + m, 0)] + spec.b[m] * up_gain).abs(),
            gate_slack,
        );
        for j in 1..=d {
            if j != m + 1 {
                push(
                    format!("upper_cross_{m}_{j}"),
                    v[arch.input_weight(0, d + m, j)].abs(),
                    gate_slack,
                );
            }
        }
    }
    Ok(checks)
}

/// True when every constraint of [`indicator_conditions`] holds.
pub fn conditions_hold(w: &WeightVector, spec: &RectangleSpec, robust: bool) -> Result<bool> {
    Ok(indicator_conditions(w, spec, robust)?.iter().all(|c| c.holds))
}

/// Classifies a probe against the shrunk / expanded rectangles.
pub fn classify_probe(spec: &RectangleSpec, x: &[f64]) -> ProbeClass {
    let inside = x
        .iter()
        .enumerate()
        .all(|(l, &xl)| xl >= spec.a[l] + spec.delta && xl <= spec.b[l] - spec.delta);
    if inside {
        return ProbeClass::Inside;
    }
    let outside = x
        .iter()
        .enumerate()
        .any(|(l, &xl)| xl < spec.a[l] - spec.delta || xl > spec.b[l] + spec.delta);
    if outside {
        ProbeClass::Outside
    } else {
        ProbeClass::Margin
    }
}

/// Checks the indicator bounds at every probe. Probes must lie in
/// `[-1, 1]^d`; the guarantees only cover that cube.
pub fn verify_indicator(ind: &IndicatorWeights, probes: &[Vec<f64>]) -> Result<ProbeReport> {
    let spec = &ind.spec;
    let sat = spec.saturation();
    let mut report = ProbeReport {
        inside: 0,
        outside: 0,
        margin: 0,
        violations: Vec::new(),
    };
    for (index, x) in probes.iter().enumerate() {
        if x.len() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|&v| !(-1.0..=1.0).contains(&v)) {
            return Err(Error::Precondition(format!(
                "probe {index} leaves [-1,1]^d: {x:?}"
            )));
        }
        let value = forward(&ind.weights, x)?.head(0);
        match classify_probe(spec, x) {
            ProbeClass::Inside => {
                report.inside += 1;
                if value < 1.0 - sat {
                    report.violations.push(ProbeViolation {
                        index,
                        class: ProbeClass::Inside,
                        value,
                    });
                }
            }
            ProbeClass::Outside => {
                report.outside += 1;
                if value > sat {
                    report.violations.push(ProbeViolation {
                        index,
                        class: ProbeClass::Outside,
                        value,
                    });
                }
            }
            ProbeClass::Margin => report.margin += 1,
        }
    }
    Ok(report)
}

/// Radius of the double-perturbation guarantee.
///
/// A robust construction perturbed coordinatewise by less than this radius,
/// and then perturbed again by less than this radius, still satisfies the
/// plain constraint set. The candidate `2(n+1)` from the same minimum is
/// never the smallest for `n >= 0`, so the radius depends only on `d`, `k0`.
pub fn perturbation_radius(d: usize, k0: usize) -> f64 {
    debug_assert!(d >= 1 && k0 >= 2 * d);
    (1.0 / (16.0 * k0 as f64))
        .min(1.0 / 16.0)
        .min(face_log(d) / (24.0 * k0 as f64))
}

/// Copies the inner weights of a single-subnetwork indicator into slot
/// `subnet` of a wider weight vector with the same `d`, `k0`, `depth`.
pub fn embed_indicator(
    ind: &IndicatorWeights,
    target: &mut WeightVector,
    subnet: usize,
) -> Result<()> {
    let src_arch = ind.weights.arch();
    let dst_arch = target.arch();
    if src_arch.d != dst_arch.d || src_arch.k0 != dst_arch.k0 || src_arch.depth != dst_arch.depth {
        return Err(Error::InvalidArchitecture(format!(
            "cannot embed {src_arch:?} into {dst_arch:?}"
        )));
    }
    if subnet >= dst_arch.kn {
        return Err(Error::Precondition(format!(
            "subnet slot {subnet} out of range (kn = {})",
            dst_arch.kn
        )));
    }
    let src_ranges = src_arch.subnet_inner_ranges(0);
    let dst_ranges = dst_arch.subnet_inner_ranges(subnet);
    for (sr, dr) in src_ranges.into_iter().zip(dst_ranges.into_iter()) {
        let src = ind.weights.values()[sr].to_vec();
        target.values_mut()[dr].copy_from_slice(&src);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, DOMAIN_PROBE};
    use rand::Rng;

    fn spec_1d(robust: bool) -> RectangleSpec {
        RectangleSpec::new(vec![0.4], vec![0.6], 0.05, 5, robust).unwrap()
    }

    #[test]
    fn rejects_bad_rectangles_and_architectures() {
        assert!(RectangleSpec::new(vec![0.4], vec![0.45], 0.05, 5, false).is_err());
        assert!(RectangleSpec::new(vec![0.4], vec![0.6], 0.0, 5, false).is_err());
        let arch = Architecture::new(2, 2, 2, 1).unwrap(); // k0 < 2d
        let spec = RectangleSpec::new(vec![0.0, 0.0], vec![0.5, 0.5], 0.1, 5, false).unwrap();
        assert!(matches!(
            build_indicator(arch, &spec),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn indicator_bounds_hold_at_the_named_points() {
        for depth in [2usize, 3] {
            let arch = Architecture::new(1, 2, depth, 1).unwrap();
            let ind = build_indicator(arch, &spec_1d(false)).unwrap();
            let sat = (-5.0f64).exp();
            let at = |x: f64| forward(&ind.weights, &[x]).unwrap().head(0);
            assert!(at(0.5) >= 1.0 - sat, "inside value {}", at(0.5));
            assert!(at(0.2) <= sat, "outside value {}", at(0.2));
            assert!(at(0.9) <= sat, "outside value {}", at(0.9));
            // the shrunk rectangle is closed: its boundary still counts
            assert!(at(0.4 + 0.05) >= 1.0 - sat);
            assert!(at(0.6 - 0.05) >= 1.0 - sat);
        }
    }

    #[test]
    fn canonical_weights_satisfy_every_condition_symbolically() {
        for d in [1usize, 2] {
            for depth in [2usize, 3, 4] {
                let arch = Architecture::new(d, 2 * d, depth, 1).unwrap();
                let a = vec![-0.3; d];
                let b = vec![0.5; d];
                let spec = RectangleSpec::new(a, b, 0.1, 6, false).unwrap();
                let ind = build_indicator(arch, &spec).unwrap();
                assert!(conditions_hold(&ind.weights, &spec, false).unwrap());

                let robust_spec = RectangleSpec::new(spec.a.clone(), spec.b.clone(), 0.1, 6, true)
                    .unwrap();
                let robust = build_indicator(arch, &robust_spec).unwrap();
                assert!(conditions_hold(&robust.weights, &robust_spec, true).unwrap());
                // robust weights also satisfy the plain set
                assert!(conditions_hold(&robust.weights, &robust_spec, false).unwrap());
            }
        }
    }

    #[test]
    fn probe_run_classifies_and_detects_corruption() {
        let arch = Architecture::new(1, 2, 3, 1).unwrap();
        let spec = spec_1d(false);
        let ind = build_indicator(arch, &spec).unwrap();
        let mut rng = substream(42, DOMAIN_PROBE, 0);
        let probes: Vec<Vec<f64>> = (0..1000).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect();
        let report = verify_indicator(&ind, &probes).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations);
        assert!(report.inside > 0 && report.outside > 0);

        // margin-zone probes are unconstrained
        let margin_probe = vec![vec![0.4 - 0.02]];
        let r = verify_indicator(&ind, &margin_probe).unwrap();
        assert_eq!(r.margin, 1);
        assert!(r.passed());

        // negative control: flip the sign of the head's leading weight
        let mut corrupted = ind.clone();
        let lead = corrupted.weights.arch().head_weight(0, 1);
        corrupted.weights.values_mut()[lead] *= -1.0;
        let bad = verify_indicator(&corrupted, &probes).unwrap();
        assert!(!bad.passed(), "corruption must be detected");
        assert!(!conditions_hold(&corrupted.weights, &spec, false).unwrap());
    }

    #[test]
    fn probes_outside_the_cube_are_rejected() {
        let arch = Architecture::new(1, 2, 2, 1).unwrap();
        let ind = build_indicator(arch, &spec_1d(false)).unwrap();
        assert!(matches!(
            verify_indicator(&ind, &[vec![1.5]]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn perturbation_radius_values() {
        assert!((perturbation_radius(1, 2) - 1.0 / 32.0).abs() < 1e-15);
        assert!((perturbation_radius(2, 4) - 1.0 / 64.0).abs() < 1e-15);
        // for d = 1, k0 = 2 the log candidate is log(7)/48 ~ 0.0405 > 1/32
        assert!(7f64.ln() / 48.0 > 1.0 / 32.0);
        // for d = 2, k0 = 4 the binding candidate is 1/64 < log(15)/96
        assert!(1.0 / 64.0 < 15f64.ln() / 96.0);
    }

    #[test]
    fn double_perturbation_of_robust_weights_keeps_plain_conditions() {
        let arch = Architecture::new(1, 2, 3, 1).unwrap();
        let spec = spec_1d(true);
        let ind = build_indicator(arch, &spec).unwrap();
        let radius = perturbation_radius(1, 2);
        let mut rng = substream(7, DOMAIN_PROBE, 1);
        for _ in 0..50 {
            let mut w = ind.weights.clone();
            for _round in 0..2 {
                for range in arch.subnet_inner_ranges(0) {
                    for v in &mut w.values_mut()[range] {
                        *v += rng.gen_range(-0.9 * radius..0.9 * radius);
                    }
                }
            }
            assert!(conditions_hold(&w, &spec, false).unwrap());
            let perturbed = IndicatorWeights {
                weights: w,
                spec: spec.clone(),
            };
            let probes: Vec<Vec<f64>> =
                (0..100).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect();
            assert!(verify_indicator(&perturbed, &probes).unwrap().passed());
        }
    }

    #[test]
    fn constructed_magnitudes_stay_under_the_documented_cap() {
        for d in [1usize, 2] {
            let arch = Architecture::new(d, 2 * d, 3, 1).unwrap();
            let a = vec![-0.8; d];
            let b = vec![0.9; d];
            let spec = RectangleSpec::new(a, b, 0.05, 12, true).unwrap();
            let ind = build_indicator(arch, &spec).unwrap();
            let n = spec.sharpness as f64;
            let log = ((8 * d - 1) as f64).ln();
            let cap = (8.0 * (n + 1.0))
                .max(4.0 / spec.delta * log * (1.0 + 0.9))
                .max(16.0 * log);
            assert!(ind.weights.max_abs() <= cap);
        }
    }

    #[test]
    fn embedding_copies_inner_weights_into_the_right_slot() {
        let small = Architecture::new(1, 2, 3, 1).unwrap();
        let big = Architecture::new(1, 2, 3, 4).unwrap();
        let ind = build_indicator(small, &spec_1d(false)).unwrap();
        let mut target = WeightVector::zeros(big);
        embed_indicator(&ind, &mut target, 2).unwrap();
        let x = [0.5];
        let t = forward(&target, &x).unwrap();
        let sat = (-5.0f64).exp();
        assert!(t.head(2) >= 1.0 - sat);
        assert_eq!(t.head(0), 0.5); // untouched subnet with zero weights
        assert!(embed_indicator(&ind, &mut target, 7).is_err());
    }
}
