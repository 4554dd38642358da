//! Error functionals evaluated after every update.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::mdp::FeatureMap;
use crate::oracle::{mspbe, FixedPointSystem};

/// Smallest `|V*(s)|` accepted by the relative-error metric.
pub const MAVE_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// `Σ_s d_μ(s) |x(s)ᵀw − V*(s)| / |V*(s)|`
    Mave,
    /// `sqrt(Σ_s d_μ(s) (x(s)ᵀw − V*(s))²)`
    Rmse,
    /// `sqrt(MSPBE(w))`
    Rmspbe,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Mave => "mave",
            MetricKind::Rmse => "rmse",
            MetricKind::Rmspbe => "rmspbe",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mave" => Ok(MetricKind::Mave),
            "rmse" => Ok(MetricKind::Rmse),
            "rmspbe" => Ok(MetricKind::Rmspbe),
            other => Err(Error::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}

/// One metric value per update step, starting after the first update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub metric: MetricKind,
    pub values: Vec<f64>,
    /// True when the learner produced a non-finite weight at some step.
    pub diverged: bool,
}

fn check_lengths(features: &FeatureMap, w: &[f64], v_star: &[f64], d_mu: &[f64]) -> Result<()> {
    if w.len() != features.d() {
        return Err(Error::DimensionMismatch { expected: features.d(), actual: w.len() });
    }
    let n = features.n_states();
    for len in [v_star.len(), d_mu.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, actual: len });
        }
    }
    Ok(())
}

/// Rejects targets that make the relative error undefined.
pub fn check_mave_target(v_star: &[f64]) -> Result<()> {
    match v_star.iter().position(|v| v.abs() < MAVE_FLOOR) {
        Some(state) => Err(Error::DegenerateTarget { state, value: v_star[state] }),
        None => Ok(()),
    }
}

pub fn mave(w: &[f64], features: &FeatureMap, v_star: &[f64], d_mu: &[f64]) -> Result<f64> {
    check_lengths(features, w, v_star, d_mu)?;
    check_mave_target(v_star)?;
    Ok(features
        .rows()
        .zip(v_star)
        .zip(d_mu)
        .map(|((x, &v), &d)| d * (dot(x, w) - v).abs() / v.abs())
        .sum())
}

pub fn rmse(w: &[f64], features: &FeatureMap, v_star: &[f64], d_mu: &[f64]) -> Result<f64> {
    check_lengths(features, w, v_star, d_mu)?;
    let mse: f64 = features
        .rows()
        .zip(v_star)
        .zip(d_mu)
        .map(|((x, &v), &d)| {
            let err = dot(x, w) - v;
            d * err * err
        })
        .sum();
    Ok(mse.sqrt())
}

pub fn rmspbe(w: &[f64], sys: &FixedPointSystem) -> Result<f64> {
    Ok(mspbe(w, sys)?.sqrt())
}

/// Everything needed to score a weight vector under one metric.
#[derive(Clone, Debug)]
pub enum Evaluator {
    Mave { features: FeatureMap, v_star: Vec<f64>, d_mu: Vec<f64> },
    Rmse { features: FeatureMap, v_star: Vec<f64>, d_mu: Vec<f64> },
    Rmspbe { system: Box<FixedPointSystem> },
}

impl Evaluator {
    pub fn kind(&self) -> MetricKind {
        match self {
            Evaluator::Mave { .. } => MetricKind::Mave,
            Evaluator::Rmse { .. } => MetricKind::Rmse,
            Evaluator::Rmspbe { .. } => MetricKind::Rmspbe,
        }
    }

    pub fn evaluate(&self, w: &[f64]) -> Result<f64> {
        match self {
            Evaluator::Mave { features, v_star, d_mu } => mave(w, features, v_star, d_mu),
            Evaluator::Rmse { features, v_star, d_mu } => rmse(w, features, v_star, d_mu),
            Evaluator::Rmspbe { system } => rmspbe(w, system),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{make_baird, FeatureKind};

    fn tabular(n: usize) -> FeatureMap {
        let rows = (0..n)
            .map(|s| (0..n).map(|j| if j == s { 1.0 } else { 0.0 }).collect())
            .collect();
        FeatureMap::from_rows(FeatureKind::Tabular, rows).unwrap()
    }

    #[test]
    fn exact_weights_score_zero() {
        let f = tabular(3);
        let v = [1.0, -2.0, 4.0];
        let d = [0.2, 0.3, 0.5];
        assert_eq!(mave(&v, &f, &v, &d).unwrap(), 0.0);
        assert_eq!(rmse(&v, &f, &v, &d).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_values() {
        let f = tabular(2);
        let v = [2.0, -4.0];
        let d = [0.25, 0.75];
        let w = [3.0, -2.0];
        // 0.25·1/2 + 0.75·2/4
        assert!((mave(&w, &f, &v, &d).unwrap() - 0.5).abs() < 1e-15);
        // sqrt(0.25·1 + 0.75·4)
        assert!((rmse(&w, &f, &v, &d).unwrap() - 3.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tiny_target_is_degenerate() {
        let f = tabular(2);
        let err = mave(&[0.0, 0.0], &f, &[1.0, 1e-9], &[0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::DegenerateTarget { state: 1, .. }));
    }

    #[test]
    fn baird_initial_rmse() {
        let b = make_baird();
        let d = vec![1.0 / 7.0; 7];
        let e = rmse(&b.initial_weights, &b.features, &[0.0; 7], &d).unwrap();
        assert!((e - (198.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in [MetricKind::Mave, MetricKind::Rmse, MetricKind::Rmspbe] {
            assert_eq!(m.name().parse::<MetricKind>().unwrap(), m);
        }
        assert!("mse".parse::<MetricKind>().is_err());
    }
}
