//! Training samples and their CSV representation.

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::{Error, Result};

/// A fixed design sample: `n` points in `R^d` with real responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    xs: Vec<f64>, // row-major, n * d
    ys: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major coordinates and responses, checking
    /// shape and finiteness.
    pub fn new(d: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if xs.len() != ys.len() * d {
            return Err(Error::DimensionMismatch {
                expected: ys.len() * d,
                got: xs.len(),
            });
        }
        if let Some(bad) = xs.iter().chain(ys.iter()).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("dataset entry {bad}")));
        }
        Ok(Self { d, xs, ys })
    }

    pub fn from_pairs(d: usize, pairs: &[(Vec<f64>, f64)]) -> Result<Self> {
        let mut xs = Vec::with_capacity(pairs.len() * d);
        let mut ys = Vec::with_capacity(pairs.len());
        for (x, y) in pairs {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                });
            }
            xs.extend_from_slice(x);
            ys.push(*y);
        }
        Self::new(d, xs, ys)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.ys.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    #[inline]
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Reads `d` feature columns followed by one response column. There is
    /// no header by default; pass `has_header = true` to skip the first row.
    pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut d: Option<usize> = None;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for record in rdr.records() {
            let record = record?;
            if record.len() < 2 {
                return Err(Error::Parse(format!(
                    "csv row needs at least 2 columns, got {}",
                    record.len()
                )));
            }
            let row_d = record.len() - 1;
            match d {
                None => d = Some(row_d),
                Some(expected) if expected != row_d => {
                    return Err(Error::DimensionMismatch {
                        expected,
                        got: row_d,
                    })
                }
                _ => {}
            }
            for field in record.iter().take(row_d) {
                xs.push(
                    field
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad feature {field:?}: {e}")))?,
                );
            }
            let y = &record[row_d];
            ys.push(
                y.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad response {y:?}: {e}")))?,
            );
        }
        match d {
            Some(d) => Self::new(d, xs, ys),
            None => Err(Error::EmptyDataset),
        }
    }

    /// Writes the dataset in the same column layout, without a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n() {
            for v in self.x(i) {
                write!(out, "{v},")?;
            }
            writeln!(out, "{}", self.y(i))?;
        }
        Ok(())
    }

    /// Smallest sup-norm distance over pairs of *distinct* points, `None`
    /// when every point coincides with every other (or `n < 2`).
    pub fn min_separation(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                let dist = sup_distance(self.x(i), self.x(j));
                if dist > 0.0 {
                    best = Some(best.map_or(dist, |b: f64| b.min(dist)));
                }
            }
        }
        best
    }

    /// Largest sup norm over the sample points.
    pub fn max_x_norm(&self) -> f64 {
        self.xs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute response.
    pub fn max_abs_y(&self) -> f64 {
        self.ys.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// The distinct sample points, sorted lexicographically. Equality of
    /// points is bitwise equality of all coordinates.
    pub fn distinct_points(&self) -> Vec<Vec<f64>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for i in 0..self.n() {
            let x = self.x(i);
            if seen.insert(point_key(x)) {
                out.push(x.to_vec());
            }
        }
        out.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(p, q)| p.total_cmp(q))
                .find(|c| c.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        out
    }
}

/// Bit pattern of a point, used wherever grouping is by exact equality.
pub(crate) fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (p, q)| m.max((p - q).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_without_header() {
        let data = Dataset::from_pairs(
            2,
            &[
                (vec![0.1, 0.2], 1.0),
                (vec![-0.3, 0.5], -1.0),
                (vec![0.1, 0.2], 1.0),
            ],
        )
        .unwrap();
        let mut bytes = Vec::new();
        data.write_csv(&mut bytes).unwrap();
        let back = Dataset::read_csv(bytes.as_slice(), false).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn csv_header_is_skipped_when_flagged() {
        let text = "x,y\n0.5,1.0\n0.25,-1.0\n";
        let data = Dataset::read_csv(text.as_bytes(), true).unwrap();
        assert_eq!(data.n(), 2);
        assert_eq!(data.x(0), &[0.5]);
        assert_eq!(data.y(1), -1.0);
    }

    #[test]
    fn empty_csv_is_an_error() {
        assert!(matches!(
            Dataset::read_csv(&b""[..], false),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn min_separation_ignores_duplicate_pairs() {
        let data = Dataset::from_pairs(
            1,
            &[(vec![0.3], 1.0), (vec![0.3], -1.0), (vec![0.7], 1.0)],
        )
        .unwrap();
        assert_eq!(data.min_separation(), Some(0.7 - 0.3));

        let all_same =
            Dataset::from_pairs(1, &[(vec![0.5], 1.0), (vec![0.5], -1.0)]).unwrap();
        assert_eq!(all_same.min_separation(), None);
    }

    #[test]
    fn distinct_points_sorted_and_deduped() {
        let data = Dataset::from_pairs(
            2,
            &[
                (vec![0.7, 0.1], 1.0),
                (vec![0.3, 0.9], 1.0),
                (vec![0.7, 0.1], -1.0),
                (vec![0.3, 0.2], 0.0),
            ],
        )
        .unwrap();
        let pts = data.distinct_points();
        assert_eq!(
            pts,
            vec![vec![0.3, 0.2], vec![0.3, 0.9], vec![0.7, 0.1]]
        );
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(Dataset::new(1, vec![f64::INFINITY], vec![0.0]).is_err());
        assert!(Dataset::new(1, vec![0.0], vec![f64::NAN]).is_err());
    }
}
