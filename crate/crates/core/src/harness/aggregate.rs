use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pointwise mean and standard error `s/√n` of a set of equal-length curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Aggregates curves step by step. Values at each step are sorted before the
/// compensated summation, so the result does not depend on the input order.
pub fn aggregate<C: AsRef<[f64]>>(curves: &[C]) -> Result<Aggregate> {
    let n = curves.len();
    let Some(first) = curves.first() else {
        return Err(Error::InvalidArgument("cannot aggregate zero curves".into()));
    };
    let len = first.as_ref().len();
    if let Some(bad) = curves.iter().find(|c| c.as_ref().len() != len) {
        return Err(Error::DimensionMismatch { expected: len, actual: bad.as_ref().len() });
    }
    let mut mean = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    let mut column = vec![0.0; n];
    let mut squares = vec![0.0; n];
    for t in 0..len {
        for (slot, c) in column.iter_mut().zip(curves) {
            *slot = c.as_ref()[t];
        }
        column.sort_unstable_by(f64::total_cmp);
        let m = compensated_sum(&column) / n as f64;
        let se = if n > 1 {
            for (sq, &v) in squares.iter_mut().zip(&column) {
                *sq = (v - m) * (v - m);
            }
            squares.sort_unstable_by(f64::total_cmp);
            let var = compensated_sum(&squares) / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        mean.push(m);
        stderr.push(se);
    }
    Ok(Aggregate { mean, stderr, n })
}

/// Mean of the last half of `values` (the whole curve when it has one point).
pub(crate) fn last_half_mean(values: &[f64]) -> f64 {
    let tail = &values[values.len() / 2..];
    let mut sorted = tail.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    compensated_sum(&sorted) / sorted.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_curves_have_zero_error() {
        let c = vec![vec![1.0, 2.0, 3.0]; 5];
        let a = aggregate(&c).unwrap();
        assert_eq!(a.mean, vec![1.0, 2.0, 3.0]);
        assert_eq!(a.stderr, vec![0.0; 3]);
        assert_eq!(a.n, 5);
    }

    #[test]
    fn two_point_example() {
        let a = aggregate(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(a.mean, vec![1.0]);
        assert!((a.stderr[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_curve() {
        let a = aggregate(&[vec![4.0, 5.0]]).unwrap();
        assert_eq!(a.stderr, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(aggregate::<Vec<f64>>(&[]).is_err());
        assert!(aggregate(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn last_half() {
        assert_eq!(last_half_mean(&[100.0, 100.0, 1.0, 3.0]), 2.0);
        assert_eq!(last_half_mean(&[7.0]), 7.0);
        assert_eq!(last_half_mean(&[9.0, 1.0, 2.0]), 1.5);
    }
}
