//! Experiment orchestration: benchmark problems, single trials, parameter
//! sweeps with aggregation and sensitivity curves, and the real-time budget
//! simulation.

mod aggregate;
pub mod output;
mod problem;
mod realtime;
mod sweep;
mod trial;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::learners::Algorithm;
use crate::mdp::FeatureKind;
use crate::metrics::MetricKind;

pub use aggregate::{aggregate, Aggregate};
pub use problem::{MdpShape, Problem};
pub use realtime::{measure_runtime, run_realtime, timer_granularity, RealtimeConfig, RealtimeCurve, RuntimeConfig};
pub use sweep::{
    build_problems, run_sweep, run_sweep_with, sensitivity, CellResult, Param, RawCurve, SensitivityPoint,
    SweepMetadata, SweepResult,
};
pub use trial::{run_trial, TrialStream};

/// Probability of the favoured action under the target policy.
pub const TARGET_BASE: f64 = 0.9;
/// Probability of the favoured action under the off-policy behavior policy.
pub const OFF_POLICY_BEHAVIOR_BASE: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    OnPolicy,
    OffPolicy,
    Baird,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::OnPolicy => "on-policy",
            Setting::OffPolicy => "off-policy",
            Setting::Baird => "baird",
        }
    }

    /// Behavior-policy favoured-action probability for the random-MDP settings.
    pub fn behavior_base(self) -> f64 {
        match self {
            Setting::OffPolicy => OFF_POLICY_BEHAVIOR_BASE,
            _ => TARGET_BASE,
        }
    }

    /// Algorithms that can run in this setting, in registry order.
    pub fn algorithms(self) -> Vec<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .filter(|a| self == Setting::OnPolicy || !a.on_policy_only())
            .collect()
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on-policy" | "on" => Ok(Setting::OnPolicy),
            "off-policy" | "off" => Ok(Setting::OffPolicy),
            "baird" => Ok(Setting::Baird),
            other => Err(Error::InvalidArgument(format!("unknown setting `{other}`"))),
        }
    }
}

/// Parameter values swept for every algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub alphas: Vec<f64>,
    pub etas: Vec<f64>,
    pub lambdas: Vec<f64>,
}

fn powers(scale: f64, exponents: impl IntoIterator<Item = i32>) -> Vec<f64> {
    exponents.into_iter().map(|j| scale * 2f64.powi(j)).collect()
}

impl SweepGrid {
    /// Random-MDP grid: `α = 0.1·2^j, j = −8..6` (15 values), seven η values and
    /// twenty λ values.
    pub fn random_mdp() -> Self {
        let mut lambdas: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        lambdas.extend((91..=100).map(|i| i as f64 / 100.0));
        Self {
            alphas: powers(0.1, -8..=6),
            etas: powers(1.0, [-4, -2, -1, 0, 1, 2, 4]),
            lambdas,
        }
    }

    /// Baird grid: `α = 0.1·2^j, j = −10..0` and twelve η values from 2⁻¹⁶ to 2³².
    pub fn baird() -> Self {
        Self {
            alphas: powers(0.1, -10..=0),
            etas: powers(1.0, [-16, -8, -4, -2, -1, 0, 1, 2, 4, 8, 16, 32]),
            lambdas: Self::random_mdp().lambdas,
        }
    }

    pub fn default_for(setting: Setting) -> Self {
        match setting {
            Setting::Baird => Self::baird(),
            _ => Self::random_mdp(),
        }
    }

    pub fn single(alpha: f64, eta: f64, lambda: f64) -> Self {
        Self { alphas: vec![alpha], etas: vec![eta], lambdas: vec![lambda] }
    }

    pub fn n_cells(&self) -> usize {
        self.alphas.len() * self.etas.len() * self.lambdas.len()
    }

    /// `(alpha, eta, lambda)` indices of cell `k`; λ varies fastest.
    pub fn cell_indices(&self, k: usize) -> (usize, usize, usize) {
        let nl = self.lambdas.len();
        let ne = self.etas.len();
        (k / (ne * nl), (k / nl) % ne, k % nl)
    }

    pub fn cell_index(&self, ia: usize, ie: usize, il: usize) -> usize {
        (ia * self.etas.len() + ie) * self.lambdas.len() + il
    }

    pub fn validate(&self) -> Result<()> {
        for (name, values) in [("alphas", &self.alphas), ("etas", &self.etas), ("lambdas", &self.lambdas)] {
            if values.is_empty() {
                return Err(Error::InvalidArgument(format!("grid `{name}` is empty")));
            }
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidArgument(format!("step size {a} must be positive")));
        }
        if let Some(e) = self.etas.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument(format!("eta {e} must be positive")));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::InvalidArgument(format!("lambda {l} outside [0, 1]")));
        }
        Ok(())
    }
}

/// Which per-run or per-cell curves are written out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveSelection {
    All,
    #[default]
    Best,
    None,
}

impl FromStr for CurveSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(CurveSelection::All),
            "best" => Ok(CurveSelection::Best),
            "none" => Ok(CurveSelection::None),
            other => Err(Error::InvalidArgument(format!("unknown curve selection `{other}`"))),
        }
    }
}

/// One algorithm's sweep protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub setting: Setting,
    pub representation: FeatureKind,
    pub metric: MetricKind,
    pub n_steps: usize,
    pub n_runs: usize,
    pub n_mdps: usize,
    pub seed_root: u64,
    /// Metric values above this (and all values after a divergence) are replaced by it.
    pub clamp_ceiling: f64,
    pub mdp_shape: MdpShape,
    pub execution: Execution,
    /// Keep per-run curves of every cell, only of the best cell, or none.
    pub raw: CurveSelection,
}

pub const DEFAULT_N_STEPS: usize = 2000;
pub const DEFAULT_N_RUNS: usize = 100;
pub const DEFAULT_N_MDPS: usize = 30;
pub const DEFAULT_BAIRD_RUNS: usize = 500;
pub const DEFAULT_SEED_ROOT: u64 = 2016;
pub const DEFAULT_CLAMP_CEILING: f64 = 1e6;

impl RunConfig {
    /// Defaults of the random-MDP study, or of Baird's protocol for [`Setting::Baird`].
    pub fn new(algorithm: Algorithm, setting: Setting, representation: FeatureKind) -> Self {
        let baird = setting == Setting::Baird;
        Self {
            algorithm,
            setting,
            representation: if baird { FeatureKind::Baird } else { representation },
            metric: if baird { MetricKind::Rmse } else { MetricKind::Mave },
            n_steps: DEFAULT_N_STEPS,
            n_runs: if baird { DEFAULT_BAIRD_RUNS } else { DEFAULT_N_RUNS },
            n_mdps: if baird { 1 } else { DEFAULT_N_MDPS },
            seed_root: DEFAULT_SEED_ROOT,
            clamp_ceiling: DEFAULT_CLAMP_CEILING,
            mdp_shape: MdpShape::default(),
            execution: Execution::default(),
            raw: CurveSelection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.n_runs == 0 || self.n_mdps == 0 {
            return Err(Error::InvalidArgument("n_steps, n_runs and n_mdps must be positive".into()));
        }
        if !(self.clamp_ceiling > 0.0) {
            return Err(Error::InvalidArgument("clamp ceiling must be positive".into()));
        }
        if self.algorithm.on_policy_only() && self.setting != Setting::OnPolicy {
            return Err(Error::InvalidArgument(format!(
                "{} is an on-policy method and cannot run in the {} setting",
                self.algorithm, self.setting
            )));
        }
        match (self.setting, self.representation) {
            (Setting::Baird, FeatureKind::Baird) => {}
            (Setting::Baird, r) => {
                return Err(Error::InvalidArgument(format!("Baird's problem has fixed features, got `{r}`")))
            }
            (_, r) if !FeatureKind::RANDOM_MDP.contains(&r) => {
                return Err(Error::InvalidArgument(format!("representation `{r}` is not used with random MDPs")))
            }
            _ => {}
        }
        if self.setting == Setting::Baird && self.metric == MetricKind::Mave {
            return Err(Error::InvalidArgument(
                "Baird's true values are zero; use rmse or rmspbe".into(),
            ));
        }
        self.mdp_shape.validate()
    }
}
