//! Compensated (Neumaier) summation.
//!
//! All per-sample reductions in the crate go through this accumulator in a
//! fixed order, so results are reproducible bit-for-bit and the summation
//! error stays at a few ulps of the total even when terms vary widely in
//! magnitude.

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
        let mut acc = Accumulator::new();
        for v in values {
            acc.add(v);
        }
        acc.total()
    }

    #[test]
    fn compensates_cancellation() {
        assert_eq!(sum([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(sum([]), 0.0);
    }
}
