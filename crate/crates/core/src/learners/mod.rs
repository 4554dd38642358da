//! Incremental linear TD learners.
//!
//! Every rule consumes one [`TransitionSample`] with the feature vectors of its
//! two states and mutates a [`LearnerState`] in place. All rules are O(d) in
//! time and never allocate. Discounts follow the stream: `γ_t` (discount of the
//! transition into `S_t`) and `ρ_{t-1}` are carried in the state from the
//! previous sample, and are 0 and 1 respectively on the first step.

mod emphatic;
mod gradient;
mod hybrid;
mod td;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot};
use crate::mdp::TransitionSample;

/// Canonical algorithm names, as used by the CLI and config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "td0")]
    Td0,
    #[serde(rename = "td")]
    Td,
    #[serde(rename = "totd")]
    Totd,
    #[serde(rename = "ptd")]
    Ptd,
    #[serde(rename = "gtd")]
    Gtd,
    #[serde(rename = "togtd")]
    Togtd,
    #[serde(rename = "htd")]
    Htd,
    #[serde(rename = "tohtd")]
    Tohtd,
    #[serde(rename = "etd")]
    Etd,
    #[serde(rename = "toetd")]
    Toetd,
    #[serde(rename = "toetd-beta")]
    ToetdBeta,
    #[serde(rename = "gtd2-mp")]
    Gtd2Mp,
    #[serde(rename = "tdc-mp")]
    TdcMp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 13] = [
        Algorithm::Td0,
        Algorithm::Td,
        Algorithm::Totd,
        Algorithm::Ptd,
        Algorithm::Gtd,
        Algorithm::Togtd,
        Algorithm::Htd,
        Algorithm::Tohtd,
        Algorithm::Etd,
        Algorithm::Toetd,
        Algorithm::ToetdBeta,
        Algorithm::Gtd2Mp,
        Algorithm::TdcMp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Td0 => "td0",
            Algorithm::Td => "td",
            Algorithm::Totd => "totd",
            Algorithm::Ptd => "ptd",
            Algorithm::Gtd => "gtd",
            Algorithm::Togtd => "togtd",
            Algorithm::Htd => "htd",
            Algorithm::Tohtd => "tohtd",
            Algorithm::Etd => "etd",
            Algorithm::Toetd => "toetd",
            Algorithm::ToetdBeta => "toetd-beta",
            Algorithm::Gtd2Mp => "gtd2-mp",
            Algorithm::TdcMp => "tdc-mp",
        }
    }

    /// TD(λ) and true-online TD(λ) ignore importance ratios.
    pub fn on_policy_only(self) -> bool {
        matches!(self, Algorithm::Td | Algorithm::Totd)
    }

    /// Whether the auxiliary step-size ratio η affects the update.
    pub fn uses_eta(self) -> bool {
        matches!(
            self,
            Algorithm::Gtd
                | Algorithm::Togtd
                | Algorithm::Htd
                | Algorithm::Tohtd
                | Algorithm::Gtd2Mp
                | Algorithm::TdcMp
        )
    }

    pub fn uses_lambda(self) -> bool {
        self != Algorithm::Td0
    }

    /// Applies this algorithm's update rule.
    pub fn update(
        self,
        state: &mut LearnerState,
        sample: &TransitionSample,
        x: &[f64],
        x_next: &[f64],
        hp: &HyperParams,
    ) -> Result<()> {
        let rule: Rule = match self {
            Algorithm::Td0 => td::td0,
            Algorithm::Td => td::td_lambda,
            Algorithm::Totd => td::totd,
            Algorithm::Ptd => td::ptd,
            Algorithm::Gtd => gradient::gtd,
            Algorithm::Togtd => gradient::togtd,
            Algorithm::Gtd2Mp => gradient::gtd2_mp,
            Algorithm::TdcMp => gradient::tdc_mp,
            Algorithm::Htd => hybrid::htd,
            Algorithm::Tohtd => hybrid::tohtd,
            Algorithm::Etd => emphatic::etd,
            Algorithm::Toetd => emphatic::toetd,
            Algorithm::ToetdBeta => emphatic::toetd_beta,
        };
        apply(state, sample, x, x_next, hp, rule)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// Step sizes and trace parameters for one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub alpha: f64,
    /// Auxiliary step size is `alpha * eta`.
    pub eta: f64,
    pub lambda: f64,
    /// ETD(λ, β) uses `β_t = beta_scale · γ_t`.
    pub beta_scale: f64,
}

impl HyperParams {
    pub const DEFAULT_BETA_SCALE: f64 = 0.5;

    pub fn new(alpha: f64, eta: f64, lambda: f64) -> Result<Self> {
        let hp = Self { alpha, eta, lambda, beta_scale: Self::DEFAULT_BETA_SCALE };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.beta_scale) {
            return Err(Error::InvalidArgument(format!(
                "beta scale must lie in [0, 1], got {}",
                self.beta_scale
            )));
        }
        Ok(())
    }

    pub fn alpha_h(&self) -> f64 {
        self.alpha * self.eta
    }
}

/// Weights, traces and carried scalars shared by all learners. Each algorithm
/// touches only the fields it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    /// Primary weights.
    pub w: Vec<f64>,
    /// Auxiliary (or provisional, for PTD) weights.
    pub h: Vec<f64>,
    pub e: Vec<f64>,
    /// Behavior trace.
    pub e_mu: Vec<f64>,
    /// Dutch trace of TO-HTD.
    pub e_o: Vec<f64>,
    /// Auxiliary trace of TO-GTD.
    pub e_h: Vec<f64>,
    /// Follow-on trace of the emphatic methods.
    pub follow_on: f64,
    /// Previous-step value estimate carried by TO-TD.
    pub v_old: f64,
    /// Weights before the latest update (true-online methods).
    pub w_prev: Vec<f64>,
    pub rho_prev: f64,
    pub gamma_prev: f64,
    pub lambda_prev: f64,
    w_half: Vec<f64>,
    h_half: Vec<f64>,
}

impl LearnerState {
    /// Zero weights, zero traces.
    pub fn new(d: usize) -> Self {
        Self::with_weights(vec![0.0; d])
    }

    /// Starts from the given primary weights; everything else is zero.
    pub fn with_weights(w: Vec<f64>) -> Self {
        let d = w.len();
        let zeros = vec![0.0; d];
        Self {
            w_prev: w.clone(),
            w,
            h: zeros.clone(),
            e: zeros.clone(),
            e_mu: zeros.clone(),
            e_o: zeros.clone(),
            e_h: zeros.clone(),
            follow_on: 0.0,
            v_old: 0.0,
            rho_prev: 1.0,
            gamma_prev: 0.0,
            lambda_prev: 0.0,
            w_half: zeros.clone(),
            h_half: zeros,
        }
    }

    pub fn d(&self) -> usize {
        self.w.len()
    }

    /// `wᵀx`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), actual: x.len() });
        }
        Ok(dot(&self.w, x))
    }
}

/// Per-step quantities handed to every rule.
pub(crate) struct Step<'a> {
    pub x: &'a [f64],
    pub x_next: &'a [f64],
    pub reward: f64,
    /// `γ_t`: discount of the transition into the current state.
    pub gamma: f64,
    pub gamma_next: f64,
    pub rho: f64,
    pub rho_prev: f64,
    pub interest: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub alpha_h: f64,
    pub eta: f64,
    pub beta_scale: f64,
    /// `wᵀx_t` and `wᵀx_{t+1}` at the current weights.
    pub v: f64,
    pub v_next: f64,
    pub delta: f64,
}

type Rule = fn(&mut LearnerState, &Step<'_>);

fn apply(
    state: &mut LearnerState,
    sample: &TransitionSample,
    x: &[f64],
    x_next: &[f64],
    hp: &HyperParams,
    rule: Rule,
) -> Result<()> {
    let d = state.d();
    for v in [x, x_next] {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: v.len() });
        }
    }
    let v = dot(&state.w, x);
    let v_next = dot(&state.w, x_next);
    let step = Step {
        x,
        x_next,
        reward: sample.reward,
        gamma: state.gamma_prev,
        gamma_next: sample.gamma_next,
        rho: sample.rho,
        rho_prev: state.rho_prev,
        interest: sample.interest,
        lambda: hp.lambda,
        alpha: hp.alpha,
        alpha_h: hp.alpha_h(),
        eta: hp.eta,
        beta_scale: hp.beta_scale,
        v,
        v_next,
        delta: sample.reward + sample.gamma_next * v_next - v,
    };
    rule(state, &step);
    state.gamma_prev = sample.gamma_next;
    state.rho_prev = sample.rho;
    state.lambda_prev = hp.lambda;
    if !all_finite(&state.w) {
        return Err(Error::NonFinite("primary"));
    }
    if !all_finite(&state.h) {
        return Err(Error::NonFinite("auxiliary"));
    }
    Ok(())
}

macro_rules! checked_update {
    ($(#[$doc:meta] $name:ident => $alg:expr;)*) => {
        $(
            #[$doc]
            pub fn $name(
                state: &mut LearnerState,
                sample: &TransitionSample,
                x: &[f64],
                x_next: &[f64],
                hp: &HyperParams,
            ) -> Result<()> {
                $alg.update(state, sample, x, x_next, hp)
            }
        )*
    };
}

checked_update! {
    /// Off-policy TD(0): `Δw = αρδx`.
    td0_update => Algorithm::Td0;
    /// TD(λ) with accumulating traces.
    td_lambda_update => Algorithm::Td;
    /// True-online TD(λ).
    totd_update => Algorithm::Totd;
    /// Provisional TD(λ).
    ptd_update => Algorithm::Ptd;
    /// GTD(λ).
    gtd_update => Algorithm::Gtd;
    /// True-online GTD(λ).
    togtd_update => Algorithm::Togtd;
    /// Hybrid TD(λ).
    htd_update => Algorithm::Htd;
    /// True-online hybrid TD(λ).
    tohtd_update => Algorithm::Tohtd;
    /// Original emphatic TD(λ).
    etd_update => Algorithm::Etd;
    /// True-online emphatic TD(λ).
    toetd_update => Algorithm::Toetd;
    /// True-online emphatic TD(λ, β).
    toetd_beta_update => Algorithm::ToetdBeta;
    /// GTD2(λ) with a mirror-prox extragradient step.
    gtd2_mp_update => Algorithm::Gtd2Mp;
    /// TDC(λ) with a mirror-prox extragradient step.
    tdc_mp_update => Algorithm::TdcMp;
}

/// `wᵀx`.
pub fn predict(state: &LearnerState, x: &[f64]) -> Result<f64> {
    state.predict(x)
}
