use serde::{Deserialize, Serialize};

use super::Setting;
use crate::error::{Error, Result};
use crate::mdp::{
    generate_random_mdp, make_baird, make_features, make_policies, EnvironmentDoc, FeatureKind, FeatureMap,
    MdpSpec, PolicyPair,
};
use crate::metrics::{check_mave_target, Evaluator, MetricKind};
use crate::oracle::{fixed_point_system, stationary_distribution, true_values};
use crate::seed;

const MAX_ATTEMPTS: usize = 1000;

/// Size parameters of the random MDPs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpShape {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
    pub n_terminating: usize,
}

impl Default for MdpShape {
    fn default() -> Self {
        Self { n_states: 30, n_actions: 3, branching: 4, n_terminating: 2 }
    }
}

impl MdpShape {
    pub fn validate(&self) -> Result<()> {
        if self.n_states < 2 || self.n_actions == 0 || self.branching == 0 || self.branching > self.n_states {
            return Err(Error::InvalidArgument(format!("invalid MDP shape {self:?}")));
        }
        Ok(())
    }
}

/// A benchmark instance with its oracle quantities.
#[derive(Clone, Debug)]
pub struct Problem {
    pub mdp: MdpSpec,
    pub features: FeatureMap,
    pub policies: PolicyPair,
    pub v_star: Vec<f64>,
    pub d_mu: Vec<f64>,
    pub init_w: Vec<f64>,
    /// Seeds drawn and discarded (reducible behavior chain or near-zero true
    /// values) before this instance was accepted.
    pub rejected_seeds: Vec<u64>,
}

/// Discount used with each representation of the random MDPs.
pub fn representation_gamma(kind: FeatureKind) -> f64 {
    if kind == FeatureKind::Binary {
        0.99
    } else {
        0.9
    }
}

impl Problem {
    /// Random MDP number `index` of a study. Instances whose behavior chain is
    /// reducible or whose true values come within the relative-error floor of
    /// zero are redrawn with the next attempt seed.
    pub fn random(
        shape: &MdpShape,
        setting: Setting,
        representation: FeatureKind,
        seed_root: u64,
        index: usize,
    ) -> Result<Self> {
        if setting == Setting::Baird {
            return Err(Error::InvalidArgument("Baird's problem is not a random MDP".into()));
        }
        shape.validate()?;
        let mut rejected = Vec::new();
        for attempt in 0..MAX_ATTEMPTS {
            let s = seed::mdp_seed(seed_root, index, attempt);
            match Self::try_random(shape, setting, representation, s) {
                Ok(mut p) => {
                    p.rejected_seeds = rejected;
                    return Ok(p);
                }
                Err(Error::NotIrreducible | Error::DegenerateTarget { .. } | Error::SingularSystem(_)) => {
                    rejected.push(s)
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::InvalidArgument(format!("no acceptable MDP after {MAX_ATTEMPTS} attempts")))
    }

    fn try_random(shape: &MdpShape, setting: Setting, representation: FeatureKind, s: u64) -> Result<Self> {
        let mdp = generate_random_mdp(shape.n_states, shape.n_actions, shape.branching, shape.n_terminating, s)?
            .with_default_gamma(representation_gamma(representation))?;
        let policies = make_policies(
            &mdp,
            super::TARGET_BASE,
            setting.behavior_base(),
            seed::derive(s, &[1]),
        )?;
        let features = make_features(&mdp, representation, seed::derive(s, &[2]))?;
        Self::from_parts(mdp, features, policies, None, true)
    }

    /// Assembles a problem from explicit parts, computing `d_μ` and `V*`.
    pub fn from_parts(
        mdp: MdpSpec,
        features: FeatureMap,
        policies: PolicyPair,
        init_w: Option<Vec<f64>>,
        require_relative_metric: bool,
    ) -> Result<Self> {
        let d_mu = stationary_distribution(&mdp, policies.mu_table())?;
        let v_star = true_values(&mdp, policies.pi_table())?;
        if require_relative_metric {
            check_mave_target(&v_star)?;
        }
        let init_w = init_w.unwrap_or_else(|| vec![0.0; features.d()]);
        if init_w.len() != features.d() {
            return Err(Error::DimensionMismatch { expected: features.d(), actual: init_w.len() });
        }
        Ok(Self { mdp, features, policies, v_star, d_mu, init_w, rejected_seeds: Vec::new() })
    }

    /// Baird's counterexample with its prescribed initial weights.
    pub fn baird() -> Result<Self> {
        let b = make_baird();
        Self::from_parts(b.mdp, b.features, b.policies, Some(b.initial_weights), false)
    }

    pub fn environment(&self) -> EnvironmentDoc {
        EnvironmentDoc::new(&self.mdp, &self.features)
    }

    pub fn fingerprint(&self) -> Result<String> {
        self.environment().fingerprint()
    }

    /// Metric evaluator; the projected Bellman error depends on λ.
    pub fn evaluator(&self, metric: MetricKind, lambda: f64) -> Result<Evaluator> {
        Ok(match metric {
            MetricKind::Mave => {
                check_mave_target(&self.v_star)?;
                Evaluator::Mave {
                    features: self.features.clone(),
                    v_star: self.v_star.clone(),
                    d_mu: self.d_mu.clone(),
                }
            }
            MetricKind::Rmse => Evaluator::Rmse {
                features: self.features.clone(),
                v_star: self.v_star.clone(),
                d_mu: self.d_mu.clone(),
            },
            MetricKind::Rmspbe => Evaluator::Rmspbe {
                system: Box::new(fixed_point_system(
                    &self.mdp,
                    &self.features,
                    self.policies.pi_table(),
                    self.policies.mu_table(),
                    lambda,
                )?),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_problem_is_deterministic() {
        let shape = MdpShape::default();
        let a = Problem::random(&shape, Setting::OffPolicy, FeatureKind::Binary, 7, 3).unwrap();
        let b = Problem::random(&shape, Setting::OffPolicy, FeatureKind::Binary, 7, 3).unwrap();
        assert_eq!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
        assert_eq!(a.v_star, b.v_star);
        assert_eq!(a.mdp.default_gamma(), 0.99);
        assert_eq!(a.features.d(), 5);
        let c = Problem::random(&shape, Setting::OffPolicy, FeatureKind::Binary, 7, 4).unwrap();
        assert_ne!(a.fingerprint().unwrap(), c.fingerprint().unwrap());
    }

    #[test]
    fn baird_problem() {
        let p = Problem::baird().unwrap();
        assert!(p.v_star.iter().all(|&v| v == 0.0));
        assert!(p.evaluator(MetricKind::Mave, 0.0).is_err());
        let e = p.evaluator(MetricKind::Rmse, 0.0).unwrap();
        assert!((e.evaluate(&p.init_w).unwrap() - (198.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn settings_pick_behavior_policy() {
        let shape = MdpShape::default();
        let on = Problem::random(&shape, Setting::OnPolicy, FeatureKind::Tabular, 1, 0).unwrap();
        assert!(on.policies.is_on_policy());
        let off = Problem::random(&shape, Setting::OffPolicy, FeatureKind::Tabular, 1, 0).unwrap();
        assert!(!off.policies.is_on_policy());
        assert_eq!(off.policies.rho_table().iter().cloned().fold(0.0, f64::max), 1.125);
    }
}
