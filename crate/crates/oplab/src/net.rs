//! Network topology, forward evaluation, and the weight-vector layout.
//!
//! A network is a linear combination of `kn` parallel fully connected
//! subnetworks. Subnetwork `k` applies `depth` squashing layers: layer 1
//! reads the `d` input coordinates into `k0` neurons, layers `2..depth-1`
//! map `k0` neurons to `k0` neurons, and layer `depth` reduces to a single
//! head neuron. The network output is an affine combination of the `kn`
//! head values plus a constant.
//!
//! Weight levels are numbered by their source layer: level 0 feeds layer 1
//! from the input, level `s` feeds layer `s+1`, level `depth-1` feeds the
//! head, and level `depth` holds the output combination. The flat layout
//! orders weights by (level ascending, subnetwork ascending, destination
//! neuron ascending, source ascending with source 0 the bias). Only the head
//! destination is stored at level `depth-1` because no other layer-`depth`
//! neuron is ever evaluated.

use std::io::{BufRead, Write};

use crate::{Error, Result};

/// Logistic squasher `1/(1+exp(-x))` in the branch form that is accurate for
/// large negative arguments and cannot overflow.
///
/// For `x >= 40`, `exp(-x)` is below half an ulp of 1 and the quotient rounds
/// to exactly `1.0`, so the exponential is skipped.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 40.0 {
        1.0
    } else if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Slope of the logistic squasher expressed through its value:
/// `sigma'(x) = sigma(x) * (1 - sigma(x))`.
#[inline]
pub fn logistic_slope(value: f64) -> f64 {
    value * (1.0 - value)
}

/// Shape of the parallel-subnetwork topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    /// Input dimension.
    pub d: usize,
    /// Neurons per squashing layer inside each subnetwork.
    pub k0: usize,
    /// Squashing layers per subnetwork, counting the head layer (`>= 2`).
    pub depth: usize,
    /// Number of parallel subnetworks.
    pub kn: usize,
}

impl Architecture {
    pub fn new(d: usize, k0: usize, depth: usize, kn: usize) -> Result<Self> {
        if d < 1 || k0 < 1 || kn < 1 {
            return Err(Error::InvalidArchitecture(format!(
                "d, k0, kn must all be >= 1 (got d={d}, k0={k0}, kn={kn})"
            )));
        }
        if depth < 2 {
            return Err(Error::InvalidArchitecture(format!(
                "depth must be >= 2 (got {depth})"
            )));
        }
        Ok(Self { d, k0, depth, kn })
    }

    /// Number of middle weight levels (those feeding layers `2..depth-1`).
    #[inline]
    pub fn middle_levels(&self) -> usize {
        self.depth - 2
    }

    /// Weights of one subnetwork: `(depth-2)*(k0^2+k0) + k0*(d+2) + 1`.
    pub fn subnet_weight_count(&self) -> usize {
        self.middle_levels() * (self.k0 * self.k0 + self.k0) + self.k0 * (self.d + 2) + 1
    }

    /// Total weight count including the `kn + 1` output weights.
    pub fn weight_count(&self) -> usize {
        self.kn * self.subnet_weight_count() + self.kn + 1
    }

    #[inline]
    fn input_total(&self) -> usize {
        self.kn * self.k0 * (self.d + 1)
    }

    #[inline]
    fn middle_total(&self) -> usize {
        self.middle_levels() * self.kn * self.k0 * (self.k0 + 1)
    }

    #[inline]
    fn head_total(&self) -> usize {
        self.kn * (self.k0 + 1)
    }

    /// Flat index of the level-0 weight into neuron `i` of subnetwork `k`
    /// from source `j` (`j = 0` bias, `j >= 1` input coordinate `j-1`).
    #[inline]
    pub fn input_weight(&self, k: usize, i: usize, j: usize) -> usize {
        debug_assert!(k < self.kn && i < self.k0 && j <= self.d);
        k * self.k0 * (self.d + 1) + i * (self.d + 1) + j
    }

    /// Flat index of the level-`s` weight (`1 <= s <= depth-2`) into neuron
    /// `i` from source `j` (`j = 0` bias, `j >= 1` layer-`s` neuron `j-1`).
    #[inline]
    pub fn middle_weight(&self, s: usize, k: usize, i: usize, j: usize) -> usize {
        debug_assert!(s >= 1 && s <= self.middle_levels());
        debug_assert!(k < self.kn && i < self.k0 && j <= self.k0);
        self.input_total()
            + (s - 1) * self.kn * self.k0 * (self.k0 + 1)
            + k * self.k0 * (self.k0 + 1)
            + i * (self.k0 + 1)
            + j
    }

    /// Flat index of the level-`(depth-1)` weight into the head of
    /// subnetwork `k` from source `j` (`j = 0` bias, `j >= 1` layer-`(depth-1)`
    /// neuron `j-1`).
    #[inline]
    pub fn head_weight(&self, k: usize, j: usize) -> usize {
        debug_assert!(k < self.kn && j <= self.k0);
        self.input_total() + self.middle_total() + k * (self.k0 + 1) + j
    }

    /// Flat index of the output-combination weight `i` (`i = 0` constant,
    /// `i >= 1` coefficient of subnetwork `i-1`'s head).
    #[inline]
    pub fn output_weight(&self, i: usize) -> usize {
        debug_assert!(i <= self.kn);
        self.input_total() + self.middle_total() + self.head_total() + i
    }

    /// Contiguous index ranges covering exactly the inner weights (all levels
    /// below the output combination) of subnetwork `k`.
    pub fn subnet_inner_ranges(&self, k: usize) -> Vec<std::ops::Range<usize>> {
        debug_assert!(k < self.kn);
        let mut ranges = Vec::with_capacity(self.middle_levels() + 2);
        let in_block = self.k0 * (self.d + 1);
        ranges.push(k * in_block..(k + 1) * in_block);
        let mid_block = self.k0 * (self.k0 + 1);
        for s in 1..=self.middle_levels() {
            let base = self.input_total() + (s - 1) * self.kn * mid_block + k * mid_block;
            ranges.push(base..base + mid_block);
        }
        let head_base = self.input_total() + self.middle_total() + k * (self.k0 + 1);
        ranges.push(head_base..head_base + self.k0 + 1);
        ranges
    }
}

/// All coefficients of one network in the documented flat layout.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    arch: Architecture,
    values: Vec<f64>,
}

impl WeightVector {
    /// All-zero weights (the output level of a fresh initialization is zero
    /// by construction; here every level is).
    pub fn zeros(arch: Architecture) -> Self {
        Self {
            values: vec![0.0; arch.weight_count()],
            arch,
        }
    }

    /// Wraps a flat value vector, checking length and finiteness.
    pub fn from_values(arch: Architecture, values: Vec<f64>) -> Result<Self> {
        if values.len() != arch.weight_count() {
            return Err(Error::WeightLength {
                expected: arch.weight_count(),
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "weight at flat index {pos} is {}",
                values[pos]
            )));
        }
        Ok(Self { arch, values })
    }

    #[inline]
    pub fn arch(&self) -> Architecture {
        self.arch
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access for the single-writer descent loop and for embedding
    /// constructed subnetworks.
    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Sup norm over all weights.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup norm over the inner weights (levels below the output combination)
    /// of subnetwork `k`.
    pub fn max_abs_inner(&self, k: usize) -> f64 {
        self.arch
            .subnet_inner_ranges(k)
            .into_iter()
            .flat_map(|r| self.values[r].iter())
            .fold(0.0, |m, v: &f64| m.max(v.abs()))
    }

    /// Writes the text serialization: a header line `arch d k0 L kn`
    /// followed by one decimal floating-point literal per line in flat
    /// layout order. The literals round-trip exactly.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "arch {} {} {} {}",
            self.arch.d, self.arch.k0, self.arch.depth, self.arch.kn
        )?;
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }

    /// Reads the text serialization produced by [`WeightVector::write_text`].
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "arch" {
            return Err(Error::Parse(format!(
                "bad header {header:?}, expected `arch d k0 L kn`"
            )));
        }
        let dims: Vec<usize> = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad header field {f:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        let arch = Architecture::new(dims[0], dims[1], dims[2], dims[3])?;
        let mut values = Vec::with_capacity(arch.weight_count());
        for line in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            values.push(
                trimmed
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value {trimmed:?}: {e}")))?,
            );
        }
        Self::from_values(arch, values)
    }
}

/// Every activation computed during one forward pass.
#[derive(Debug, Clone)]
pub struct ActivationTrace {
    arch: Architecture,
    /// Layers `1..depth-1` of every subnetwork, laid out `[k][layer-1][i]`.
    hidden: Vec<f64>,
    /// Head value (layer `depth`) of every subnetwork.
    head: Vec<f64>,
    output: f64,
}

impl ActivationTrace {
    pub(crate) fn empty(arch: Architecture) -> Self {
        Self {
            hidden: vec![0.0; arch.kn * (arch.depth - 1) * arch.k0],
            head: vec![0.0; arch.kn],
            output: 0.0,
            arch,
        }
    }

    #[inline]
    pub fn arch(&self) -> Architecture {
        self.arch
    }

    /// Activation of neuron `i` in layer `layer` (`1..=depth-1`) of
    /// subnetwork `k`.
    #[inline]
    pub fn hidden(&self, k: usize, layer: usize, i: usize) -> f64 {
        debug_assert!(layer >= 1 && layer < self.arch.depth && i < self.arch.k0);
        self.hidden[(k * (self.arch.depth - 1) + (layer - 1)) * self.arch.k0 + i]
    }

    /// Head value (layer `depth`) of subnetwork `k`.
    #[inline]
    pub fn head(&self, k: usize) -> f64 {
        self.head[k]
    }

    /// Network output: the affine combination of the head values.
    #[inline]
    pub fn output(&self) -> f64 {
        self.output
    }

    #[inline]
    fn layer_slice_mut(&mut self, k: usize, layer: usize) -> &mut [f64] {
        let k0 = self.arch.k0;
        let base = (k * (self.arch.depth - 1) + (layer - 1)) * k0;
        &mut self.hidden[base..base + k0]
    }
}

/// Evaluates the network and records every intermediate activation.
pub fn forward(w: &WeightVector, x: &[f64]) -> Result<ActivationTrace> {
    let arch = w.arch();
    if x.len() != arch.d {
        return Err(Error::DimensionMismatch {
            expected: arch.d,
            got: x.len(),
        });
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("input coordinate {bad}")));
    }
    let mut trace = ActivationTrace::empty(arch);
    forward_into(&mut trace, w, x);
    Ok(trace)
}

/// Convenience wrapper returning only the output value.
pub fn forward_value(w: &WeightVector, x: &[f64]) -> Result<f64> {
    Ok(forward(w, x)?.output())
}

/// Forward pass without validation, reusing a preallocated trace.
pub(crate) fn forward_into(trace: &mut ActivationTrace, w: &WeightVector, x: &[f64]) {
    let arch = w.arch();
    let v = w.values();
    for k in 0..arch.kn {
        // layer 1: affine in the input, then squash
        for i in 0..arch.k0 {
            let mut pre = v[arch.input_weight(k, i, 0)];
            for (j, xj) in x.iter().enumerate() {
                pre += v[arch.input_weight(k, i, j + 1)] * xj;
            }
            trace.layer_slice_mut(k, 1)[i] = logistic(pre);
        }
        // layers 2..depth-1
        for s in 1..=arch.middle_levels() {
            for i in 0..arch.k0 {
                let mut pre = v[arch.middle_weight(s, k, i, 0)];
                for j in 0..arch.k0 {
                    pre += v[arch.middle_weight(s, k, i, j + 1)] * trace.hidden(k, s, j);
                }
                trace.layer_slice_mut(k, s + 1)[i] = logistic(pre);
            }
        }
        // head layer
        let mut pre = v[arch.head_weight(k, 0)];
        for j in 0..arch.k0 {
            pre += v[arch.head_weight(k, j + 1)] * trace.hidden(k, arch.depth - 1, j);
        }
        trace.head[k] = logistic(pre);
    }
    let mut out = v[arch.output_weight(0)];
    for k in 0..arch.kn {
        out += v[arch.output_weight(k + 1)] * trace.head[k];
    }
    trace.output = out;
}

/// Recomputes the head value of a single subnetwork at `x`.
///
/// `buf` must hold at least `2 * k0` scratch slots. Used by the
/// finite-difference oracle, which perturbs one subnetwork at a time.
pub(crate) fn subnet_head_value(w: &WeightVector, k: usize, x: &[f64], buf: &mut [f64]) -> f64 {
    let arch = w.arch();
    let v = w.values();
    let (cur, next) = buf.split_at_mut(arch.k0);
    for i in 0..arch.k0 {
        let mut pre = v[arch.input_weight(k, i, 0)];
        for (j, xj) in x.iter().enumerate() {
            pre += v[arch.input_weight(k, i, j + 1)] * xj;
        }
        cur[i] = logistic(pre);
    }
    for s in 1..=arch.middle_levels() {
        for i in 0..arch.k0 {
            let mut pre = v[arch.middle_weight(s, k, i, 0)];
            for j in 0..arch.k0 {
                pre += v[arch.middle_weight(s, k, i, j + 1)] * cur[j];
            }
            next[i] = logistic(pre);
        }
        cur.copy_from_slice(next);
    }
    let mut pre = v[arch.head_weight(k, 0)];
    for j in 0..arch.k0 {
        pre += v[arch.head_weight(k, j + 1)] * cur[j];
    }
    logistic(pre)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch(d: usize, k0: usize, depth: usize, kn: usize) -> Architecture {
        Architecture::new(d, k0, depth, kn).unwrap()
    }

    /// Counts weights by walking the constructor loops instead of the closed
    /// formula.
    fn enumerate_weights(a: Architecture) -> usize {
        let mut count = 0;
        for _k in 0..a.kn {
            count += a.k0 * (a.d + 1); // layer 1
            for _s in 1..=a.middle_levels() {
                count += a.k0 * (a.k0 + 1);
            }
            count += a.k0 + 1; // head
        }
        count + a.kn + 1 // output combination
    }

    #[test]
    fn logistic_symmetry_and_thresholds() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(7f64.ln()) - 7.0 / 8.0).abs() < 1e-15);
        // complement symmetry: sigma(-log(8d-1)) = 1/(8d) for d = 1
        assert!((logistic(-(7f64.ln())) - 1.0 / 8.0).abs() < 1e-15);
        // threshold characterization: sigma(x) >= 1 - kappa iff x >= log(1/kappa - 1)
        for &kappa in &[0.25, 0.1, 0.01, 1e-6] {
            let threshold = (1.0 / kappa - 1.0f64).ln();
            assert!(logistic(threshold + 1e-9) >= 1.0 - kappa);
            assert!(logistic(threshold - 1e-6) < 1.0 - kappa);
        }
    }

    #[test]
    fn logistic_saturates_gracefully() {
        assert_eq!(logistic(1e6), 1.0);
        assert_eq!(logistic(40.0), 1.0);
        assert!(logistic(-1e6) >= 0.0);
        assert!(logistic(-745.0) > 0.0);
        assert!(logistic(39.9) < 1.0 + 1e-15);
    }

    #[test]
    fn weight_counts_match_hand_enumeration() {
        assert_eq!(arch(1, 2, 2, 1).weight_count(), 9);
        assert_eq!(arch(1, 2, 3, 1).weight_count(), 15);
        assert_eq!(arch(2, 4, 2, 3).weight_count(), 55);
        for a in [
            arch(1, 2, 2, 1),
            arch(1, 2, 3, 1),
            arch(2, 4, 2, 3),
            arch(3, 6, 4, 5),
            arch(2, 5, 5, 2),
        ] {
            assert_eq!(a.weight_count(), enumerate_weights(a));
        }
    }

    #[test]
    fn flat_layout_is_a_bijection() {
        let a = arch(2, 3, 4, 2);
        let mut seen = vec![false; a.weight_count()];
        let mut mark = |idx: usize| {
            assert!(!seen[idx], "index {idx} assigned twice");
            seen[idx] = true;
        };
        for k in 0..a.kn {
            for i in 0..a.k0 {
                for j in 0..=a.d {
                    mark(a.input_weight(k, i, j));
                }
            }
        }
        for s in 1..=a.middle_levels() {
            for k in 0..a.kn {
                for i in 0..a.k0 {
                    for j in 0..=a.k0 {
                        mark(a.middle_weight(s, k, i, j));
                    }
                }
            }
        }
        for k in 0..a.kn {
            for j in 0..=a.k0 {
                mark(a.head_weight(k, j));
            }
        }
        for i in 0..=a.kn {
            mark(a.output_weight(i));
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn subnet_inner_ranges_cover_exactly_the_subnet() {
        let a = arch(2, 3, 4, 3);
        for k in 0..a.kn {
            let ranges = a.subnet_inner_ranges(k);
            let total: usize = ranges.iter().map(|r| r.len()).sum();
            assert_eq!(total, a.subnet_weight_count());
            for i in 0..a.k0 {
                for j in 0..=a.d {
                    let idx = a.input_weight(k, i, j);
                    assert!(ranges.iter().any(|r| r.contains(&idx)));
                }
            }
            let head = a.head_weight(k, a.k0);
            assert!(ranges.iter().any(|r| r.contains(&head)));
            let out = a.output_weight(k + 1);
            assert!(!ranges.iter().any(|r| r.contains(&out)));
        }
    }

    #[test]
    fn zero_output_weights_force_zero_output() {
        let a = arch(3, 4, 3, 5);
        let mut w = WeightVector::zeros(a);
        // random-ish inner weights, output level left at zero
        for (idx, v) in w.values_mut().iter_mut().enumerate() {
            *v = ((idx * 2654435761) % 1000) as f64 / 250.0 - 2.0;
        }
        for i in 0..=a.kn {
            w.values_mut()[a.output_weight(i)] = 0.0;
        }
        let trace = forward(&w, &[0.3, -0.7, 0.1]).unwrap();
        assert_eq!(trace.output(), 0.0);
    }

    #[test]
    fn all_zero_weights_give_half_activations() {
        let a = arch(1, 2, 2, 1);
        let w = WeightVector::zeros(a);
        let trace = forward(&w, &[0.4]).unwrap();
        for i in 0..a.k0 {
            assert_eq!(trace.hidden(0, 1, i), 0.5);
        }
        assert_eq!(trace.head(0), 0.5);
        assert_eq!(trace.output(), 0.0);
    }

    #[test]
    fn forward_rejects_dimension_mismatch() {
        let w = WeightVector::zeros(arch(2, 2, 2, 1));
        assert!(matches!(
            forward(&w, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn from_values_rejects_bad_input() {
        let a = arch(1, 2, 2, 1);
        assert!(matches!(
            WeightVector::from_values(a, vec![0.0; 3]),
            Err(Error::WeightLength { expected: 9, got: 3 })
        ));
        let mut vals = vec![0.0; 9];
        vals[4] = f64::NAN;
        assert!(matches!(
            WeightVector::from_values(a, vals),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn subnet_head_matches_full_forward() {
        let a = arch(2, 3, 4, 3);
        let mut w = WeightVector::zeros(a);
        for (idx, v) in w.values_mut().iter_mut().enumerate() {
            *v = (((idx * 97) % 41) as f64 - 20.0) / 13.0;
        }
        let x = [0.25, -0.5];
        let trace = forward(&w, &x).unwrap();
        let mut buf = vec![0.0; 2 * a.k0];
        for k in 0..a.kn {
            assert_eq!(subnet_head_value(&w, k, &x, &mut buf), trace.head(k));
        }
    }

    #[test]
    fn text_serialization_round_trips() {
        let a = arch(2, 2, 3, 2);
        let mut w = WeightVector::zeros(a);
        for (idx, v) in w.values_mut().iter_mut().enumerate() {
            *v = (idx as f64 * 0.1234567890123).sin() * 1e3;
        }
        let mut bytes = Vec::new();
        w.write_text(&mut bytes).unwrap();
        let back = WeightVector::read_text(bytes.as_slice()).unwrap();
        assert_eq!(back, w);
        assert!(String::from_utf8_lossy(&bytes).starts_with("arch 2 2 3 2\n"));
    }
}
