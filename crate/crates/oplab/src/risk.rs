//! Empirical L2 risk, the conditional-mean function, and the interpolation
//! optimum.
//!
//! For a sample `(X_i, Y_i)` the minimum of the empirical risk over *all*
//! functions is attained by the per-point conditional mean: group the samples
//! by exact (bitwise) equality of their inputs and average the responses in
//! each group. Any function therefore satisfies the orthogonal decomposition
//!
//! ```text
//! (1/n) sum (f(X_i)-Y_i)^2
//!     = (1/n) sum (f(X_i)-mbar(X_i))^2 + (1/n) sum (mbar(X_i)-Y_i)^2
//! ```
//!
//! which the tests exercise numerically.

use std::collections::HashMap;

use crate::data::{point_key, Dataset};
use crate::net::{forward_value, WeightVector};
use crate::sum::Accumulator;
use crate::{Error, Result};

/// Mean squared error of the network on the sample: `(1/n) * sum of
/// (f(X_i) - Y_i)^2`.
pub fn empirical_risk(w: &WeightVector, data: &Dataset) -> Result<f64> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut acc = Accumulator::new();
    for i in 0..data.n() {
        let r = forward_value(w, data.x(i))? - data.y(i);
        acc.add(r * r);
    }
    Ok(acc.total() / data.n() as f64)
}

/// The per-distinct-point average of the responses, with the `0/0 = 0`
/// convention at unseen points.
#[derive(Debug, Clone)]
pub struct ConditionalMean {
    dim: usize,
    table: HashMap<Vec<u64>, f64>,
}

impl ConditionalMean {
    /// Value at `x`: the group mean when `x` equals a sample point bitwise,
    /// zero otherwise.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.table.get(&point_key(x)).copied().unwrap_or(0.0)
    }

    /// Number of distinct sample points backing this function.
    pub fn group_count(&self) -> usize {
        self.table.len()
    }
}

/// Groups the sample by bitwise input equality and averages responses.
pub fn conditional_mean(data: &Dataset) -> ConditionalMean {
    let mut sums: HashMap<Vec<u64>, (f64, usize)> = HashMap::new();
    for i in 0..data.n() {
        let entry = sums.entry(point_key(data.x(i))).or_insert((0.0, 0));
        entry.0 += data.y(i);
        entry.1 += 1;
    }
    let table = sums
        .into_iter()
        .map(|(k, (s, c))| (k, s / c as f64))
        .collect();
    ConditionalMean {
        dim: data.dim(),
        table,
    }
}

/// The exact minimum of the empirical risk over all functions:
/// `(1/n) * sum (mbar(X_i) - Y_i)^2`.
pub fn interpolation_optimum(data: &Dataset) -> Result<f64> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mbar = conditional_mean(data);
    let mut acc = Accumulator::new();
    for i in 0..data.n() {
        let r = mbar.eval(data.x(i)) - data.y(i);
        acc.add(r * r);
    }
    Ok(acc.total() / data.n() as f64)
}

/// Mean squared distance of an arbitrary function to the sample responses,
/// used by checkers that evaluate estimators other than the network.
pub fn empirical_risk_of(f: impl Fn(&[f64]) -> f64, data: &Dataset) -> Result<f64> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut acc = Accumulator::new();
    for i in 0..data.n() {
        let r = f(data.x(i)) - data.y(i);
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("estimate at sample {i}")));
        }
        acc.add(r * r);
    }
    Ok(acc.total() / data.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Architecture;

    fn dataset_1d(points: &[(f64, f64)]) -> Dataset {
        Dataset::from_pairs(
            1,
            &points
                .iter()
                .map(|&(x, y)| (vec![x], y))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn zero_output_weights_give_mean_square_response() {
        let a = Architecture::new(1, 2, 2, 3).unwrap();
        let mut w = WeightVector::zeros(a);
        for (idx, v) in w.values_mut().iter_mut().enumerate() {
            *v = ((idx % 7) as f64 - 3.0) * 0.5;
        }
        for i in 0..=a.kn {
            w.values_mut()[a.output_weight(i)] = 0.0;
        }
        let data = dataset_1d(&[(0.1, 1.0), (0.4, -2.0), (0.9, 0.5)]);
        let expected = (1.0 + 4.0 + 0.25) / 3.0;
        assert!((empirical_risk(&w, &data).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn perfect_interpolator_has_zero_risk() {
        // zero inner weights, output constant = the single response
        let a = Architecture::new(1, 2, 2, 1).unwrap();
        let mut w = WeightVector::zeros(a);
        w.values_mut()[a.output_weight(0)] = 2.0;
        let data = dataset_1d(&[(0.3, 2.0)]);
        assert_eq!(empirical_risk(&w, &data).unwrap(), 0.0);
    }

    #[test]
    fn single_point_squared_residual() {
        let a = Architecture::new(1, 2, 2, 1).unwrap();
        let w = WeightVector::zeros(a);
        let data = dataset_1d(&[(0.3, 2.0)]);
        assert_eq!(empirical_risk(&w, &data).unwrap(), 4.0);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let w = WeightVector::zeros(Architecture::new(1, 2, 2, 1).unwrap());
        let data = Dataset::new(1, vec![], vec![]).unwrap();
        assert!(matches!(
            empirical_risk(&w, &data),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn conditional_mean_groups_by_exact_equality() {
        let data = dataset_1d(&[(0.3, 1.0), (0.3, -1.0), (0.7, 1.0)]);
        let mbar = conditional_mean(&data);
        assert_eq!(mbar.eval(&[0.3]), 0.0);
        assert_eq!(mbar.eval(&[0.7]), 1.0);
        // unseen point: the 0/0 = 0 convention
        assert_eq!(mbar.eval(&[0.5]), 0.0);
    }

    #[test]
    fn conditional_mean_on_distinct_points_interpolates() {
        let data = dataset_1d(&[(0.1, 3.0), (0.2, -4.0), (0.3, 0.25)]);
        let mbar = conditional_mean(&data);
        for i in 0..data.n() {
            assert_eq!(mbar.eval(data.x(i)), data.y(i));
        }
    }

    #[test]
    fn interpolation_optimum_examples() {
        let data = dataset_1d(&[(0.3, 1.0), (0.3, -1.0), (0.7, 1.0)]);
        assert!((interpolation_optimum(&data).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let distinct = dataset_1d(&[(0.1, 1.0), (0.2, -1.0), (0.3, 5.0)]);
        assert_eq!(interpolation_optimum(&distinct).unwrap(), 0.0);

        // n copies of the same x with balanced +-1 responses
        let balanced = dataset_1d(&[(0.5, 1.0), (0.5, -1.0), (0.5, 1.0), (0.5, -1.0)]);
        assert_eq!(interpolation_optimum(&balanced).unwrap(), 1.0);
    }
}
