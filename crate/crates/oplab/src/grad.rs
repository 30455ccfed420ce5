//! Exact and finite-difference gradients of the empirical risk.
//!
//! The analytic gradient is computed by reverse accumulation over the
//! activation trace. For a coordinate below the output level the partial
//! carries the subnetwork's output coefficient as a factor, so with a freshly
//! initialized (zero) output level every inner partial is exactly zero. The
//! partial with respect to output weight `i` is the head value of subnetwork
//! `i-1` (the constant weight has partial 1).
//!
//! Two independent oracles are provided:
//!
//! - [`finite_difference_gradient`] evaluates the central difference
//!   `(F(w + h e) - F(w - h e)) / (2h)` coordinate by coordinate. The risk
//!   difference is accumulated sample by sample in factored form
//!   `(f_+ - f_-) * (f_+ + f_- - 2y)`, with the unperturbed subnetworks
//!   cancelled algebraically rather than through floating-point subtraction,
//!   so the oracle stays accurate even for coordinates whose partial is many
//!   orders of magnitude below the risk.
//! - [`path_expansion_gradient`] enumerates, without memoization, the full
//!   product expansion of each partial along all paths through the
//!   subnetwork. Cost grows like `k0^depth`; it is meant for small networks.

use crate::data::Dataset;
use crate::net::{
    forward_into, logistic_slope, subnet_head_value, ActivationTrace, Architecture, WeightVector,
};
use crate::sum::Accumulator;
use crate::{Error, Result};

/// Gradient of the empirical risk; same shape and flat layout as the weights.
pub type GradientVector = WeightVector;

/// Reusable buffers for repeated gradient evaluations.
#[derive(Debug)]
pub(crate) struct Workspace {
    trace: ActivationTrace,
    g_next: Vec<f64>,
    g_cur: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(arch: Architecture) -> Self {
        Self {
            trace: ActivationTrace::empty(arch),
            g_next: vec![0.0; arch.k0],
            g_cur: vec![0.0; arch.k0],
        }
    }
}

/// Accumulates risk and gradient over the sample in one sweep.
///
/// `grad` must be zeroed by the caller. When `heads` is provided it receives
/// the head value of subnetwork `k` at sample `l` in slot `k * n + l`.
/// Returns the empirical risk.
pub(crate) fn risk_and_gradient(
    w: &WeightVector,
    data: &Dataset,
    ws: &mut Workspace,
    grad: &mut [f64],
    mut heads: Option<&mut [f64]>,
) -> f64 {
    let arch = w.arch();
    let v = w.values();
    let n = data.n();
    let coef_scale = 2.0 / n as f64;
    let mut risk = Accumulator::new();
    for l in 0..n {
        let x = data.x(l);
        forward_into(&mut ws.trace, w, x);
        if let Some(h) = heads.as_deref_mut() {
            for k in 0..arch.kn {
                h[k * n + l] = ws.trace.head(k);
            }
        }
        let residual = ws.trace.output() - data.y(l);
        risk.add(residual * residual);
        let coef = coef_scale * residual;

        grad[arch.output_weight(0)] += coef;
        for k in 0..arch.kn {
            grad[arch.output_weight(k + 1)] += coef * ws.trace.head(k);
        }
        for k in 0..arch.kn {
            let scale = coef * v[arch.output_weight(k + 1)];
            if scale == 0.0 {
                continue;
            }
            // head level
            let g_head = scale * logistic_slope(ws.trace.head(k));
            grad[arch.head_weight(k, 0)] += g_head;
            for j in 0..arch.k0 {
                grad[arch.head_weight(k, j + 1)] += g_head * ws.trace.hidden(k, arch.depth - 1, j);
            }
            for i in 0..arch.k0 {
                ws.g_next[i] = g_head
                    * v[arch.head_weight(k, i + 1)]
                    * logistic_slope(ws.trace.hidden(k, arch.depth - 1, i));
            }
            // middle levels, walking back toward the input
            for s in (1..=arch.middle_levels()).rev() {
                for i in 0..arch.k0 {
                    let gi = ws.g_next[i];
                    grad[arch.middle_weight(s, k, i, 0)] += gi;
                    for j in 0..arch.k0 {
                        grad[arch.middle_weight(s, k, i, j + 1)] += gi * ws.trace.hidden(k, s, j);
                    }
                }
                for j in 0..arch.k0 {
                    let mut back = 0.0;
                    for i in 0..arch.k0 {
                        back += ws.g_next[i] * v[arch.middle_weight(s, k, i, j + 1)];
                    }
                    ws.g_cur[j] = back * logistic_slope(ws.trace.hidden(k, s, j));
                }
                std::mem::swap(&mut ws.g_next, &mut ws.g_cur);
            }
            // input level
            for i in 0..arch.k0 {
                let gi = ws.g_next[i];
                grad[arch.input_weight(k, i, 0)] += gi;
                for (j, xj) in x.iter().enumerate() {
                    grad[arch.input_weight(k, i, j + 1)] += gi * xj;
                }
            }
        }
    }
    risk.total() / n as f64
}

/// Exact gradient of the empirical risk by reverse accumulation.
pub fn analytic_gradient(w: &WeightVector, data: &Dataset) -> Result<GradientVector> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if data.dim() != w.arch().d {
        return Err(Error::DimensionMismatch {
            expected: w.arch().d,
            got: data.dim(),
        });
    }
    let mut ws = Workspace::new(w.arch());
    let mut grad = vec![0.0; w.arch().weight_count()];
    risk_and_gradient(w, data, &mut ws, &mut grad, None);
    GradientVector::from_values(w.arch(), grad)
}

/// Central-difference gradient of an arbitrary scalar function, with the
/// per-coordinate step `h * max(1, |p_i|)`.
///
/// Exact up to roundoff on quadratics; used as a self-test of the
/// differencing scheme itself.
pub fn central_difference_gradient<F: Fn(&[f64]) -> f64>(
    f: F,
    point: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidStep(h));
    }
    let mut p = point.to_vec();
    let mut out = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let c = p[i];
        let hi = h * c.abs().max(1.0);
        p[i] = c + hi;
        let fp = f(&p);
        p[i] = c - hi;
        let fm = f(&p);
        p[i] = c;
        out.push((fp - fm) / (2.0 * hi));
    }
    Ok(out)
}

fn subnet_of_index(arch: Architecture, idx: usize) -> Option<usize> {
    let input_total = arch.kn * arch.k0 * (arch.d + 1);
    if idx < input_total {
        return Some(idx / (arch.k0 * (arch.d + 1)));
    }
    let mid_block = arch.k0 * (arch.k0 + 1);
    let middle_total = arch.middle_levels() * arch.kn * mid_block;
    if idx < input_total + middle_total {
        return Some(((idx - input_total) % (arch.kn * mid_block)) / mid_block);
    }
    let head_total = arch.kn * (arch.k0 + 1);
    if idx < input_total + middle_total + head_total {
        return Some((idx - input_total - middle_total) / (arch.k0 + 1));
    }
    None
}

/// Central difference of the empirical risk, `(F(w + h e) - F(w - h e)) /
/// (2h)` per coordinate, with the step scaled per coordinate as
/// `h * max(1, |c|)`.
///
/// Only forward evaluations enter; the analytic gradient path is never
/// touched, so this is a valid independent oracle for it.
pub fn finite_difference_gradient(
    w: &WeightVector,
    data: &Dataset,
    h: f64,
) -> Result<GradientVector> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidStep(h));
    }
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let arch = w.arch();
    if data.dim() != arch.d {
        return Err(Error::DimensionMismatch {
            expected: arch.d,
            got: data.dim(),
        });
    }
    let n = data.n();

    // base forward pass: outputs and head values at every sample
    let mut trace = ActivationTrace::empty(arch);
    let mut outputs = vec![0.0; n];
    let mut heads = vec![0.0; arch.kn * n];
    for l in 0..n {
        forward_into(&mut trace, w, data.x(l));
        outputs[l] = trace.output();
        for k in 0..arch.kn {
            heads[k * n + l] = trace.head(k);
        }
    }

    let mut scratch = w.clone();
    let mut buf = vec![0.0; 2 * arch.k0];
    let mut grad = vec![0.0; arch.weight_count()];
    for idx in 0..arch.weight_count() {
        let c = w.values()[idx];
        let hi = h * c.abs().max(1.0);
        let mut acc = Accumulator::new();
        match subnet_of_index(arch, idx) {
            None => {
                // output-level coordinate: the perturbation shifts f by
                // exactly +-h * source at every sample
                let i = idx - arch.output_weight(0);
                for l in 0..n {
                    let src = if i == 0 { 1.0 } else { heads[(i - 1) * n + l] };
                    let delta = 2.0 * hi * src;
                    let sum_term = 2.0 * (outputs[l] - data.y(l));
                    acc.add(delta * sum_term);
                }
            }
            Some(k) => {
                let vk = w.values()[arch.output_weight(k + 1)];
                for l in 0..n {
                    let x = data.x(l);
                    scratch.values_mut()[idx] = c + hi;
                    let a_plus = subnet_head_value(&scratch, k, x, &mut buf);
                    scratch.values_mut()[idx] = c - hi;
                    let a_minus = subnet_head_value(&scratch, k, x, &mut buf);
                    scratch.values_mut()[idx] = c;
                    let base = heads[k * n + l];
                    // f_+ - f_- and f_+ + f_- - 2y, with the unperturbed
                    // subnetworks cancelled exactly
                    let delta = vk * (a_plus - a_minus);
                    let sum_term =
                        2.0 * (outputs[l] - data.y(l)) + vk * (a_plus + a_minus - 2.0 * base);
                    acc.add(delta * sum_term);
                }
            }
        }
        grad[idx] = acc.total() / (2.0 * hi * n as f64);
    }
    GradientVector::from_values(arch, grad)
}

/// Sensitivity of the head value to the pre-activation of neuron `m` in
/// layer `t`, computed by explicit path enumeration (no sharing).
fn path_sensitivity(
    w: &WeightVector,
    trace: &ActivationTrace,
    k: usize,
    t: usize,
    m: usize,
) -> f64 {
    let arch = w.arch();
    if t == arch.depth {
        return logistic_slope(trace.head(k));
    }
    let own = logistic_slope(trace.hidden(k, t, m));
    if t == arch.depth - 1 {
        own * w.values()[arch.head_weight(k, m + 1)] * path_sensitivity(w, trace, k, arch.depth, 0)
    } else {
        let mut total = 0.0;
        for dest in 0..arch.k0 {
            total += w.values()[arch.middle_weight(t, k, dest, m + 1)]
                * path_sensitivity(w, trace, k, t + 1, dest);
        }
        own * total
    }
}

/// Gradient computed from the literal product expansion of every partial
/// along all subnetwork paths. Exponential in depth; a secondary oracle for
/// small architectures.
pub fn path_expansion_gradient(w: &WeightVector, data: &Dataset) -> Result<GradientVector> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let arch = w.arch();
    if data.dim() != arch.d {
        return Err(Error::DimensionMismatch {
            expected: arch.d,
            got: data.dim(),
        });
    }
    let n = data.n();
    let mut grad = vec![0.0; arch.weight_count()];
    let mut trace = ActivationTrace::empty(arch);
    for l in 0..n {
        let x = data.x(l);
        forward_into(&mut trace, w, x);
        let coef = 2.0 / n as f64 * (trace.output() - data.y(l));

        grad[arch.output_weight(0)] += coef;
        for k in 0..arch.kn {
            grad[arch.output_weight(k + 1)] += coef * trace.head(k);
        }
        for k in 0..arch.kn {
            let vk = w.values()[arch.output_weight(k + 1)];
            for i in 0..arch.k0 {
                let sens = path_sensitivity(w, &trace, k, 1, i);
                grad[arch.input_weight(k, i, 0)] += coef * vk * sens;
                for (j, xj) in x.iter().enumerate() {
                    grad[arch.input_weight(k, i, j + 1)] += coef * vk * sens * xj;
                }
            }
            for s in 1..=arch.middle_levels() {
                for i in 0..arch.k0 {
                    let sens = path_sensitivity(w, &trace, k, s + 1, i);
                    grad[arch.middle_weight(s, k, i, 0)] += coef * vk * sens;
                    for j in 0..arch.k0 {
                        grad[arch.middle_weight(s, k, i, j + 1)] +=
                            coef * vk * sens * trace.hidden(k, s, j);
                    }
                }
            }
            let head_sens = logistic_slope(trace.head(k));
            grad[arch.head_weight(k, 0)] += coef * vk * head_sens;
            for j in 0..arch.k0 {
                grad[arch.head_weight(k, j + 1)] +=
                    coef * vk * head_sens * trace.hidden(k, arch.depth - 1, j);
            }
        }
    }
    GradientVector::from_values(arch, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::forward_value;
    use crate::rng::{substream, DOMAIN_TRIAL};
    use rand::Rng;

    fn random_setup(seed: u64) -> (WeightVector, Dataset) {
        let mut rng = substream(seed, DOMAIN_TRIAL, 0);
        let d = rng.gen_range(1..=3);
        let k0 = rng.gen_range(1..=4);
        let depth = rng.gen_range(2..=4);
        let kn = rng.gen_range(1..=8);
        let arch = Architecture::new(d, k0, depth, kn).unwrap();
        let mut w = WeightVector::zeros(arch);
        for v in w.values_mut() {
            *v = rng.gen_range(-2.0..2.0);
        }
        let n = rng.gen_range(2..=8);
        let mut pairs = Vec::new();
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            pairs.push((x, rng.gen_range(-2.0..2.0)));
        }
        (w, Dataset::from_pairs(d, &pairs).unwrap())
    }

    /// Largest ratio of |a - b| to its allowance `max(floor, tol * scale)`;
    /// below 1 means every coordinate agrees.
    fn worst_margin(a: &[f64], b: &[f64], tol: f64, floor: f64) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| {
                let scale = x.abs().max(y.abs());
                (x - y).abs() / (tol * scale).max(floor)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_output_level_kills_inner_partials() {
        let arch = Architecture::new(2, 3, 3, 4).unwrap();
        let mut w = WeightVector::zeros(arch);
        for v in w.values_mut().iter_mut() {
            *v = 0.37;
        }
        for i in 0..=arch.kn {
            w.values_mut()[arch.output_weight(i)] = 0.0;
        }
        let data = Dataset::from_pairs(
            2,
            &[(vec![0.1, 0.2], 1.5), (vec![0.4, -0.3], -0.5)],
        )
        .unwrap();
        let grad = analytic_gradient(&w, &data).unwrap();
        let out0 = arch.output_weight(0);
        for (idx, g) in grad.values().iter().enumerate() {
            if idx < out0 {
                assert_eq!(*g, 0.0, "inner partial {idx} should vanish exactly");
            }
        }
        // output partials are (2/n) sum (0 - y) * head
        let n = data.n() as f64;
        for i in 1..=arch.kn {
            let mut expected = 0.0;
            for l in 0..data.n() {
                let trace = crate::net::forward(&w, data.x(l)).unwrap();
                expected += 2.0 / n * (0.0 - data.y(l)) * trace.head(i - 1);
            }
            assert!((grad.values()[arch.output_weight(i)] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_finite_differences_on_random_configurations() {
        for seed in 0..10 {
            let (w, data) = random_setup(seed);
            let analytic = analytic_gradient(&w, &data).unwrap();
            let fd = finite_difference_gradient(&w, &data, 1e-5).unwrap();
            let margin = worst_margin(analytic.values(), fd.values(), 1e-6, 1e-10);
            assert!(margin < 1.0, "seed {seed}: worst margin {margin}");
        }
    }

    #[test]
    fn matches_path_expansion_on_small_networks() {
        for seed in 20..26 {
            let (w, data) = random_setup(seed);
            let analytic = analytic_gradient(&w, &data).unwrap();
            let expansion = path_expansion_gradient(&w, &data).unwrap();
            let margin = worst_margin(analytic.values(), expansion.values(), 1e-12, 1e-15);
            assert!(margin < 1.0, "seed {seed}: worst margin {margin}");
        }
    }

    #[test]
    fn near_linear_region_agrees_tightly() {
        // tiny inner weights keep every squasher near its linear center;
        // moderate output weights keep the partials away from zero
        let arch = Architecture::new(1, 2, 2, 2).unwrap();
        let mut w = WeightVector::zeros(arch);
        let mut rng = substream(5, DOMAIN_TRIAL, 7);
        for v in w.values_mut() {
            *v = rng.gen_range(-1e-3..1e-3);
        }
        for i in 0..=arch.kn {
            w.values_mut()[arch.output_weight(i)] = 0.5 + 0.2 * i as f64;
        }
        let data = Dataset::from_pairs(1, &[(vec![0.2], 0.4), (vec![-0.6], -0.1)]).unwrap();
        let analytic = analytic_gradient(&w, &data).unwrap();
        let fd = finite_difference_gradient(&w, &data, 1e-5).unwrap();
        let margin = worst_margin(analytic.values(), fd.values(), 1e-8, 1e-11);
        assert!(margin < 1.0, "worst margin {margin}");
    }

    #[test]
    fn central_differences_are_exact_on_quadratics() {
        let q = |p: &[f64]| 3.0 * p[0] * p[0] - 1.5 * p[0] * p[1] + 0.25 * p[1] * p[1] + 2.0 * p[1];
        let point = [0.7, -1.3];
        let grad = central_difference_gradient(q, &point, 1e-6).unwrap();
        let exact = [
            6.0 * point[0] - 1.5 * point[1],
            -1.5 * point[0] + 0.5 * point[1] + 2.0,
        ];
        for (g, e) in grad.iter().zip(exact.iter()) {
            assert!((g - e).abs() < 1e-9, "{g} vs {e}");
        }
    }

    #[test]
    fn zero_step_is_rejected() {
        let (w, data) = random_setup(3);
        assert!(matches!(
            finite_difference_gradient(&w, &data, 0.0),
            Err(Error::InvalidStep(_))
        ));
        assert!(matches!(
            finite_difference_gradient(&w, &data, -1e-6),
            Err(Error::InvalidStep(_))
        ));
    }

    #[test]
    fn perturbing_one_subnet_only_moves_its_partials() {
        let (w, data) = random_setup(11);
        let arch = w.arch();
        if arch.kn < 2 {
            return;
        }
        let grad_before = analytic_gradient(&w, &data).unwrap();
        let mut w2 = w.clone();
        for r in arch.subnet_inner_ranges(0) {
            for v in &mut w2.values_mut()[r] {
                *v += 0.25;
            }
        }
        let grad_after = analytic_gradient(&w2, &data).unwrap();
        // partials of untouched subnetworks move only through the shared
        // residual; with identical residual inputs they would be identical,
        // so check against a direct recomputation instead: inner partials of
        // other subnetworks must equal the gradient of the modified network
        // restricted to them (trivially true), and the *sparsity pattern* of
        // the difference must live in subnet 0 plus the output level when
        // residuals are frozen. Freeze residuals by zeroing the output level.
        let mut frozen = w.clone();
        let mut frozen2 = w2.clone();
        for i in 0..=arch.kn {
            let idx = arch.output_weight(i);
            frozen.values_mut()[idx] = if i == 1 { 1.0 } else { 0.0 };
            frozen2.values_mut()[idx] = if i == 1 { 1.0 } else { 0.0 };
        }
        let g1 = analytic_gradient(&frozen, &data).unwrap();
        let g2 = analytic_gradient(&frozen2, &data).unwrap();
        for k in 1..arch.kn {
            for r in arch.subnet_inner_ranges(k) {
                for idx in r {
                    assert_eq!(
                        g1.values()[idx],
                        g2.values()[idx],
                        "inner partial {idx} of subnet {k} moved"
                    );
                }
            }
        }
        let _ = (grad_before, grad_after);
    }

    #[test]
    fn gradient_descent_direction_reduces_risk() {
        let (w, data) = random_setup(17);
        let risk0 = crate::risk::empirical_risk(&w, &data).unwrap();
        let grad = analytic_gradient(&w, &data).unwrap();
        let norm_sq: f64 = grad.values().iter().map(|g| g * g).sum();
        if norm_sq < 1e-18 {
            return;
        }
        let step = 1e-4 / norm_sq.sqrt().max(1.0);
        let mut w1 = w.clone();
        for (v, g) in w1.values_mut().iter_mut().zip(grad.values()) {
            *v -= step * g;
        }
        let risk1 = crate::risk::empirical_risk(&w1, &data).unwrap();
        assert!(risk1 <= risk0, "{risk1} > {risk0}");
        let _ = forward_value(&w1, data.x(0)).unwrap();
    }
}
