//! Benchmark environments: random MDPs, feature maps, policy pairs and Baird's
//! counterexample, plus the transition sampler and a replayable JSON document.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::norm;

pub type StateId = usize;
pub type ActionId = usize;

const STOCHASTIC_TOL: f64 = 1e-12;

/// Tabular MDP with deterministic expected rewards and transition-dependent discounts.
///
/// Discounts are attached to transitions `(s, s')`: every pair listed in
/// `gamma_zero_pairs` terminates the return (γ = 0), every other transition is
/// discounted by `default_gamma`. Termination never resets the agent.
#[derive(Clone, Debug, PartialEq)]
pub struct MdpSpec {
    n_states: usize,
    n_actions: usize,
    /// `[s][a][s']`, row-major.
    transitions: Vec<f64>,
    rewards: Vec<f64>,
    gamma_zero_pairs: Vec<(StateId, StateId)>,
    default_gamma: f64,
    /// `[s][s']` dense discount lookup derived from the two fields above.
    discounts: Vec<f64>,
    seed: Option<u64>,
}

impl MdpSpec {
    /// Builds an MDP from dense tables and validates it.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        gamma_zero_pairs: Vec<(StateId, StateId)>,
        default_gamma: f64,
    ) -> Result<Self> {
        let mut mdp = Self {
            n_states,
            n_actions,
            transitions,
            rewards,
            gamma_zero_pairs,
            default_gamma,
            discounts: Vec::new(),
            seed: None,
        };
        mdp.rebuild_discounts();
        mdp.validate()?;
        Ok(mdp)
    }

    fn rebuild_discounts(&mut self) {
        let n = self.n_states;
        self.discounts = vec![self.default_gamma; n * n];
        for &(i, j) in &self.gamma_zero_pairs {
            if i < n && j < n {
                self.discounts[i * n + j] = 0.0;
            }
        }
    }

    /// Checks row-stochasticity, reward range, discount range and the
    /// terminating-pair list.
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_states, self.n_actions);
        if n == 0 || m == 0 {
            return Err(Error::InvalidArgument("MDP needs at least one state and one action".into()));
        }
        if self.transitions.len() != n * m * n || self.rewards.len() != n * m * n {
            return Err(Error::InvalidArgument("transition/reward table has the wrong size".into()));
        }
        if !(0.0..1.0).contains(&self.default_gamma) {
            return Err(Error::InvalidArgument(format!(
                "default discount {} outside [0, 1)",
                self.default_gamma
            )));
        }
        for s in 0..n {
            for a in 0..m {
                let row = self.row(s, a);
                if row.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::InvalidArgument(format!("negative probability at ({s}, {a})")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "row ({s}, {a}) sums to {total}, not 1"
                    )));
                }
            }
        }
        if self.rewards.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidArgument("rewards must lie in [0, 1]".into()));
        }
        let mut pairs = self.gamma_zero_pairs.clone();
        pairs.sort_unstable();
        pairs.dedup();
        if pairs.len() != self.gamma_zero_pairs.len() {
            return Err(Error::InvalidArgument("duplicate terminating transition".into()));
        }
        if let Some(&(i, j)) = pairs.iter().find(|&&(i, j)| i == j || i >= n || j >= n) {
            return Err(Error::InvalidArgument(format!("invalid terminating transition ({i}, {j})")));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Successor distribution `P(s, a, ·)`.
    pub fn row(&self, s: StateId, a: ActionId) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    pub fn prob(&self, s: StateId, a: ActionId, next: StateId) -> f64 {
        self.row(s, a)[next]
    }

    pub fn reward(&self, s: StateId, a: ActionId, next: StateId) -> f64 {
        self.rewards[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn gamma_of(&self, s: StateId, next: StateId) -> f64 {
        self.discounts[s * self.n_states + next]
    }

    pub fn default_gamma(&self) -> f64 {
        self.default_gamma
    }

    pub fn gamma_zero_pairs(&self) -> &[(StateId, StateId)] {
        &self.gamma_zero_pairs
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Replaces the discount of all non-terminating transitions.
    pub fn with_default_gamma(mut self, gamma: f64) -> Result<Self> {
        self.default_gamma = gamma;
        self.rebuild_discounts();
        self.validate()?;
        Ok(self)
    }
}

/// Random MDP: each `(s, a)` reaches `branching` distinct successors drawn from
/// the whole state set, with uniform-then-normalised probabilities and uniform
/// `[0, 1]` rewards. `n_terminating` distinct reachable transitions `(i, j)`,
/// `i != j`, get γ = 0. The default discount is 0.9.
pub fn generate_random_mdp(
    n_states: usize,
    n_actions: usize,
    branching: usize,
    n_terminating: usize,
    seed: u64,
) -> Result<MdpSpec> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidArgument("need at least one state and one action".into()));
    }
    if branching == 0 || branching > n_states {
        return Err(Error::InvalidArgument(format!(
            "branching factor {branching} must lie in 1..={n_states}"
        )));
    }
    if n_terminating > n_states * n_states {
        return Err(Error::InvalidArgument(format!(
            "{n_terminating} terminating transitions requested for {n_states} states"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_states;
    let mut transitions = vec![0.0; n * n_actions * n];
    let mut rewards = vec![0.0; n * n_actions * n];
    for s in 0..n {
        for a in 0..n_actions {
            let base = (s * n_actions + a) * n;
            let successors = index::sample(&mut rng, n, branching).into_vec();
            let weights: Vec<f64> = successors.iter().map(|_| rng.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            for (&next, &wgt) in successors.iter().zip(&weights) {
                transitions[base + next] = if total > 0.0 { wgt / total } else { 1.0 / branching as f64 };
                rewards[base + next] = rng.random::<f64>();
            }
        }
    }

    // Only transitions the chain can actually take are eligible to terminate.
    let mut reachable: Vec<(StateId, StateId)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (0..n_actions).any(|a| transitions[(i * n_actions + a) * n + j] > 0.0) {
                reachable.push((i, j));
            }
        }
    }
    if n_terminating > reachable.len() {
        return Err(Error::InvalidArgument(format!(
            "only {} distinct reachable transitions available for {n_terminating} terminations",
            reachable.len()
        )));
    }
    let mut gamma_zero_pairs: Vec<_> = index::sample(&mut rng, reachable.len(), n_terminating)
        .into_iter()
        .map(|k| reachable[k])
        .collect();
    gamma_zero_pairs.sort_unstable();

    let mut mdp = MdpSpec::new(n, n_actions, transitions, rewards, gamma_zero_pairs, 0.9)?;
    mdp.seed = Some(seed);
    Ok(mdp)
}

/// Feature representation of a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    Tabular,
    AliasedTabular,
    Binary,
    /// Baird's hand-built 8-dimensional features (not normalised).
    Baird,
    /// Arbitrary user-supplied rows.
    Custom,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Tabular => "tabular",
            FeatureKind::AliasedTabular => "aliased-tabular",
            FeatureKind::Binary => "binary",
            FeatureKind::Baird => "baird",
            FeatureKind::Custom => "custom",
        }
    }

    /// The representations used with random MDPs.
    pub const RANDOM_MDP: [FeatureKind; 3] =
        [FeatureKind::Tabular, FeatureKind::AliasedTabular, FeatureKind::Binary];
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tabular" => Ok(FeatureKind::Tabular),
            "aliased-tabular" | "aliased" => Ok(FeatureKind::AliasedTabular),
            "binary" => Ok(FeatureKind::Binary),
            "baird" => Ok(FeatureKind::Baird),
            "custom" => Ok(FeatureKind::Custom),
            other => Err(Error::InvalidArgument(format!("unknown representation `{other}`"))),
        }
    }
}

/// Per-state feature vectors, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    kind: FeatureKind,
    d: usize,
    rows: Vec<f64>,
    aliased_states: Option<Vec<StateId>>,
}

impl FeatureMap {
    pub fn from_rows(kind: FeatureKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        if d == 0 {
            return Err(Error::InvalidArgument("feature map needs at least one non-empty row".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: bad.len() });
        }
        Ok(Self { kind, d, rows: rows.concat(), aliased_states: None })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_states(&self) -> usize {
        self.rows.len() / self.d
    }

    /// Feature vector of state `s`.
    #[inline]
    pub fn x(&self, s: StateId) -> &[f64] {
        &self.rows[s * self.d..(s + 1) * self.d]
    }

    pub fn aliased_states(&self) -> Option<&[StateId]> {
        self.aliased_states.as_deref()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.d)
    }

    /// `x(s)ᵀw` for every state.
    pub fn predictions(&self, w: &[f64]) -> Vec<f64> {
        self.rows().map(|x| crate::linalg::dot(x, w)).collect()
    }
}

const ALIASED_COUNT: usize = 5;

/// Builds one of the random-MDP representations. All vectors have unit norm.
///
/// * tabular: one-hot, `d = n_states`;
/// * aliased-tabular: five states drawn without replacement share the one-hot
///   vector of the lowest-indexed of them; `d` stays `n_states`;
/// * binary: bit pattern of `s + 1`, most significant bit first, with
///   `d = ⌈log2(n_states + 1)⌉`, normalised.
pub fn make_features(mdp: &MdpSpec, kind: FeatureKind, seed: u64) -> Result<FeatureMap> {
    let n = mdp.n_states();
    match kind {
        FeatureKind::Tabular => Ok(tabular(n)),
        FeatureKind::AliasedTabular => {
            if n < ALIASED_COUNT {
                return Err(Error::InvalidArgument(format!(
                    "aliasing needs at least {ALIASED_COUNT} states, got {n}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut chosen = index::sample(&mut rng, n, ALIASED_COUNT).into_vec();
            chosen.sort_unstable();
            let mut map = tabular(n);
            let rep = chosen[0];
            for &s in &chosen[1..] {
                let row = &mut map.rows[s * n..(s + 1) * n];
                row.fill(0.0);
                row[rep] = 1.0;
            }
            map.kind = FeatureKind::AliasedTabular;
            map.aliased_states = Some(chosen);
            Ok(map)
        }
        FeatureKind::Binary => {
            let d = binary_width(n);
            let mut rows = Vec::with_capacity(n);
            for s in 0..n {
                let code = s + 1;
                let bits: Vec<f64> =
                    (0..d).map(|k| ((code >> (d - 1 - k)) & 1) as f64).collect();
                let len = norm(&bits);
                rows.push(bits.into_iter().map(|b| b / len).collect());
            }
            FeatureMap::from_rows(FeatureKind::Binary, rows)
        }
        FeatureKind::Baird | FeatureKind::Custom => Err(Error::InvalidArgument(format!(
            "`{kind}` features are not generated for random MDPs"
        ))),
    }
}

fn tabular(n: usize) -> FeatureMap {
    let mut rows = vec![0.0; n * n];
    for s in 0..n {
        rows[s * n + s] = 1.0;
    }
    FeatureMap { kind: FeatureKind::Tabular, d: n, rows, aliased_states: None }
}

/// `⌈log2(n + 1)⌉`: enough bits to encode `1..=n`.
fn binary_width(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

/// Target and behavior action-probability tables with their ratio table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyPair {
    n_states: usize,
    n_actions: usize,
    pi: Vec<f64>,
    mu: Vec<f64>,
    rho: Vec<f64>,
    base_actions: Option<Vec<ActionId>>,
}

impl PolicyPair {
    /// Builds a pair from row-major `[s][a]` tables. `mu` must cover `pi`.
    pub fn from_tables(n_states: usize, n_actions: usize, pi: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        let size = n_states * n_actions;
        if pi.len() != size || mu.len() != size {
            return Err(Error::DimensionMismatch { expected: size, actual: pi.len().min(mu.len()) });
        }
        for s in 0..n_states {
            for (name, table) in [("target", &pi), ("behavior", &mu)] {
                let row = &table[s * n_actions..(s + 1) * n_actions];
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p))
                    || (row.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL
                {
                    return Err(Error::InvalidArgument(format!(
                        "{name} policy row {s} is not a distribution"
                    )));
                }
            }
        }
        let mut rho = vec![0.0; size];
        for k in 0..size {
            if pi[k] > 0.0 && mu[k] <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "behavior policy does not cover target at (s={}, a={})",
                    k / n_actions,
                    k % n_actions
                )));
            }
            rho[k] = if mu[k] > 0.0 { pi[k] / mu[k] } else { 0.0 };
        }
        Ok(Self { n_states, n_actions, pi, mu, rho, base_actions: None })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn pi(&self, s: StateId, a: ActionId) -> f64 {
        self.pi[s * self.n_actions + a]
    }

    pub fn mu(&self, s: StateId, a: ActionId) -> f64 {
        self.mu[s * self.n_actions + a]
    }

    pub fn rho(&self, s: StateId, a: ActionId) -> f64 {
        self.rho[s * self.n_actions + a]
    }

    pub fn pi_row(&self, s: StateId) -> &[f64] {
        &self.pi[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn mu_row(&self, s: StateId) -> &[f64] {
        &self.mu[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Row-major `[s][a]` target probabilities.
    pub fn pi_table(&self) -> &[f64] {
        &self.pi
    }

    /// Row-major `[s][a]` behavior probabilities.
    pub fn mu_table(&self) -> &[f64] {
        &self.mu
    }

    pub fn rho_table(&self) -> &[f64] {
        &self.rho
    }

    pub fn base_actions(&self) -> Option<&[ActionId]> {
        self.base_actions.as_deref()
    }

    pub fn is_on_policy(&self) -> bool {
        self.pi == self.mu
    }
}

/// Favoured-action policies: one base action per state, drawn uniformly and
/// shared by both policies, gets `base_pi` under π and `base_mu` under μ; the
/// remainder is split evenly over the other actions. `base_mu == base_pi` gives
/// the on-policy pair.
pub fn make_policies(mdp: &MdpSpec, base_pi: f64, base_mu: f64, seed: u64) -> Result<PolicyPair> {
    for (name, p) in [("target", base_pi), ("behavior", base_mu)] {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("{name} base probability {p} outside (0, 1]")));
        }
    }
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    if m == 1 && (base_pi != 1.0 || base_mu != 1.0) {
        return Err(Error::InvalidArgument(
            "with a single action both base probabilities must be 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_actions: Vec<ActionId> = (0..n).map(|_| rng.random_range(0..m)).collect();
    let fill = |base: f64| {
        let rest = if m > 1 { (1.0 - base) / (m - 1) as f64 } else { 0.0 };
        let mut table = vec![rest; n * m];
        for (s, &b) in base_actions.iter().enumerate() {
            table[s * m + b] = base;
        }
        table
    };
    let mut pair = PolicyPair::from_tables(n, m, fill(base_pi), fill(base_mu))?;
    pair.base_actions = Some(base_actions);
    Ok(pair)
}

/// One interaction step `(S_t, A_t, S_{t+1}, R_{t+1}, γ_{t+1}, ρ_t, I_t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSample {
    pub s: StateId,
    pub a: ActionId,
    pub s_next: StateId,
    pub reward: f64,
    pub gamma_next: f64,
    pub rho: f64,
    pub interest: f64,
}

fn sample_categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Draws `A ~ μ(s, ·)`, `S' ~ P(s, A, ·)` and emits the deterministic reward.
pub fn sample_step<R: Rng + ?Sized>(
    mdp: &MdpSpec,
    policies: &PolicyPair,
    s: StateId,
    rng: &mut R,
) -> TransitionSample {
    let a = sample_categorical(policies.mu_row(s), rng.random::<f64>());
    let s_next = sample_categorical(mdp.row(s, a), rng.random::<f64>());
    TransitionSample {
        s,
        a,
        s_next,
        reward: mdp.reward(s, a, s_next),
        gamma_next: mdp.gamma_of(s, s_next),
        rho: policies.rho(s, a),
        interest: 1.0,
    }
}

/// Baird's seven-state star problem.
#[derive(Clone, Debug)]
pub struct Baird {
    pub mdp: MdpSpec,
    pub features: FeatureMap,
    pub policies: PolicyPair,
    pub initial_weights: Vec<f64>,
}

pub const BAIRD_DASHED: ActionId = 0;
pub const BAIRD_SOLID: ActionId = 1;

/// Baird's counterexample: the dashed action moves uniformly to one of the six
/// outer states, the solid action moves to the centre state (index 6). μ takes
/// dashed with probability 6/7, π always takes solid. All rewards are zero and
/// γ = 0.99 everywhere. Outer state `i` has feature 2 at component `i` and 1 at
/// component 7; the centre has 1 at component 6 and 2 at component 7.
pub fn make_baird() -> Baird {
    const N: usize = 7;
    const D: usize = 8;
    let mut transitions = vec![0.0; N * 2 * N];
    for s in 0..N {
        let dashed = (s * 2 + BAIRD_DASHED) * N;
        for next in 0..6 {
            transitions[dashed + next] = 1.0 / 6.0;
        }
        transitions[(s * 2 + BAIRD_SOLID) * N + 6] = 1.0;
    }
    let mdp = MdpSpec::new(N, 2, transitions, vec![0.0; N * 2 * N], Vec::new(), 0.99)
        .expect("Baird's MDP is well formed");

    let mut rows = vec![vec![0.0; D]; N];
    for (i, row) in rows.iter_mut().enumerate().take(6) {
        row[i] = 2.0;
        row[7] = 1.0;
    }
    rows[6][6] = 1.0;
    rows[6][7] = 2.0;
    let features = FeatureMap::from_rows(FeatureKind::Baird, rows).expect("Baird's features");

    let mut pi = vec![0.0; N * 2];
    let mut mu = vec![0.0; N * 2];
    for s in 0..N {
        pi[s * 2 + BAIRD_SOLID] = 1.0;
        mu[s * 2 + BAIRD_DASHED] = 6.0 / 7.0;
        mu[s * 2 + BAIRD_SOLID] = 1.0 / 7.0;
    }
    let policies = PolicyPair::from_tables(N, 2, pi, mu).expect("Baird's policies");

    Baird {
        mdp,
        features,
        policies,
        initial_weights: vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0, 1.0],
    }
}

pub const ENVIRONMENT_DOC_VERSION: u32 = 1;

/// Versioned JSON document describing an MDP and its feature map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentDoc {
    pub version: u32,
    pub n_states: usize,
    pub n_actions: usize,
    #[serde(rename = "P")]
    pub transitions: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    pub rewards: Vec<Vec<Vec<f64>>>,
    pub gamma_zero_pairs: Vec<(StateId, StateId)>,
    pub default_gamma: f64,
    pub features: FeatureDoc,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureDoc {
    pub kind: FeatureKind,
    pub d: usize,
    pub x: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aliased_states: Option<Vec<StateId>>,
}

impl EnvironmentDoc {
    pub fn new(mdp: &MdpSpec, features: &FeatureMap) -> Self {
        let nested = |table: &[f64]| -> Vec<Vec<Vec<f64>>> {
            table
                .chunks_exact(mdp.n_actions * mdp.n_states)
                .map(|per_state| per_state.chunks_exact(mdp.n_states).map(<[f64]>::to_vec).collect())
                .collect()
        };
        Self {
            version: ENVIRONMENT_DOC_VERSION,
            n_states: mdp.n_states,
            n_actions: mdp.n_actions,
            transitions: nested(&mdp.transitions),
            rewards: nested(&mdp.rewards),
            gamma_zero_pairs: mdp.gamma_zero_pairs.clone(),
            default_gamma: mdp.default_gamma,
            features: FeatureDoc {
                kind: features.kind,
                d: features.d,
                x: features.rows().map(<[f64]>::to_vec).collect(),
                aliased_states: features.aliased_states.clone(),
            },
            seed: mdp.seed,
        }
    }

    pub fn into_parts(self) -> Result<(MdpSpec, FeatureMap)> {
        if self.version != ENVIRONMENT_DOC_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported environment document version {}",
                self.version
            )));
        }
        let flatten = |t: Vec<Vec<Vec<f64>>>| -> Vec<f64> { t.into_iter().flatten().flatten().collect() };
        let mut mdp = MdpSpec::new(
            self.n_states,
            self.n_actions,
            flatten(self.transitions),
            flatten(self.rewards),
            self.gamma_zero_pairs,
            self.default_gamma,
        )?;
        mdp.seed = self.seed;
        if self.features.x.len() != self.n_states {
            return Err(Error::DimensionMismatch { expected: self.n_states, actual: self.features.x.len() });
        }
        let mut features = FeatureMap::from_rows(self.features.kind, self.features.x)?;
        if features.d != self.features.d {
            return Err(Error::DimensionMismatch { expected: self.features.d, actual: features.d });
        }
        features.aliased_states = self.features.aliased_states;
        Ok((mdp, features))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn fingerprint(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn default_sized_mdp_has_four_successors_per_pair() {
        let mdp = generate_random_mdp(30, 3, 4, 2, 11).unwrap();
        assert_eq!(mdp.n_states(), 30);
        assert_eq!(mdp.n_actions(), 3);
        for s in 0..30 {
            for a in 0..3 {
                let row = mdp.row(s, a);
                assert_eq!(row.iter().filter(|&&p| p > 0.0).count(), 4);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(mdp.gamma_zero_pairs().len(), 2);
        let zero = (0..30).flat_map(|i| (0..30).map(move |j| (i, j)));
        assert_eq!(zero.filter(|&(i, j)| mdp.gamma_of(i, j) == 0.0).count(), 2);
    }

    #[test]
    fn singleton_successors_are_deterministic() {
        let mdp = generate_random_mdp(5, 1, 1, 0, 3).unwrap();
        for s in 0..5 {
            let row = mdp.row(s, 0);
            assert_eq!(row.iter().filter(|&&p| p == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&p| p == 0.0).count(), 4);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_random_mdp(10, 2, 3, 1, 7).unwrap();
        let b = generate_random_mdp(10, 2, 3, 1, 7).unwrap();
        assert_eq!(a, b);
        let f = make_features(&a, FeatureKind::Tabular, 0).unwrap();
        let ja = EnvironmentDoc::new(&a, &f).to_json().unwrap();
        let jb = EnvironmentDoc::new(&b, &f).to_json().unwrap();
        assert_eq!(ja.as_bytes(), jb.as_bytes());
    }

    #[test]
    fn too_many_successors_is_rejected() {
        assert!(matches!(generate_random_mdp(3, 2, 4, 0, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(generate_random_mdp(3, 1, 1, 100, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn binary_features_encode_index_plus_one() {
        let mdp = generate_random_mdp(30, 3, 4, 2, 1).unwrap();
        let f = make_features(&mdp, FeatureKind::Binary, 0).unwrap();
        assert_eq!(f.d(), 5);
        let h = 1.0 / 2f64.sqrt();
        let expected = [0.0, 0.0, 0.0, h, h];
        for (x, e) in f.x(2).iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
        for s in 0..30 {
            assert!((norm(f.x(s)) - 1.0).abs() < 1e-12);
        }
        assert_eq!(binary_width(1), 1);
        assert_eq!(binary_width(31), 5);
        assert_eq!(binary_width(32), 6);
    }

    #[test]
    fn aliasing_collapses_five_states() {
        let mdp = generate_random_mdp(30, 3, 4, 2, 1).unwrap();
        let f = make_features(&mdp, FeatureKind::AliasedTabular, 99).unwrap();
        let mut distinct: Vec<Vec<u64>> =
            f.rows().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 26);
        assert_eq!(f.d(), 30);
        let aliased = f.aliased_states().unwrap();
        assert_eq!(aliased.len(), 5);
        for &s in aliased {
            assert_eq!(f.x(s), f.x(aliased[0]));
        }
    }

    #[test]
    fn tabular_features_are_one_hot() {
        let mdp = generate_random_mdp(30, 3, 4, 2, 1).unwrap();
        let f = make_features(&mdp, FeatureKind::Tabular, 0).unwrap();
        for s in 0..30 {
            assert_eq!(f.x(s)[s], 1.0);
            assert_eq!(f.x(s).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn off_policy_ratios() {
        let mdp = generate_random_mdp(30, 3, 4, 2, 5).unwrap();
        let p = make_policies(&mdp, 0.9, 0.8, 5).unwrap();
        for s in 0..30 {
            let base = p.base_actions().unwrap()[s];
            for a in 0..3 {
                let expected = if a == base { 0.9 / 0.8 } else { 0.05 / 0.1 };
                assert!((p.rho(s, a) - expected).abs() < 1e-15);
            }
        }
        let max = p.rho_table().iter().cloned().fold(f64::MIN, f64::max);
        let min = p.rho_table().iter().cloned().fold(f64::MAX, f64::min);
        assert_eq!(max, 1.125);
        assert_eq!(min, 0.5);
    }

    #[test]
    fn identical_base_probabilities_are_on_policy() {
        let mdp = generate_random_mdp(30, 3, 4, 2, 5).unwrap();
        let p = make_policies(&mdp, 0.9, 0.9, 5).unwrap();
        assert!(p.is_on_policy());
        assert!(p.rho_table().iter().all(|&r| r == 1.0));
    }

    #[test]
    fn two_action_remainder() {
        let mdp = generate_random_mdp(6, 2, 2, 0, 5).unwrap();
        let p = make_policies(&mdp, 0.9, 0.8, 1).unwrap();
        for s in 0..6 {
            let other = 1 - p.base_actions().unwrap()[s];
            assert!((p.pi(s, other) - 0.1).abs() < 1e-15);
            assert!((p.mu(s, other) - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn policy_probabilities_are_checked() {
        let mdp = generate_random_mdp(6, 2, 2, 0, 5).unwrap();
        assert!(make_policies(&mdp, 0.0, 0.8, 1).is_err());
        assert!(make_policies(&mdp, 0.9, 1.2, 1).is_err());
        // μ = 1 on the base action leaves other target actions uncovered.
        assert!(make_policies(&mdp, 0.9, 1.0, 1).is_err());
    }

    #[test]
    fn chain_sampling_follows_the_only_successor() {
        let mdp = generate_random_mdp(5, 1, 1, 0, 3).unwrap();
        let pol = make_policies(&mdp, 1.0, 1.0, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for s in 0..5 {
            let t = sample_step(&mdp, &pol, s, &mut rng);
            assert_eq!(mdp.prob(s, 0, t.s_next), 1.0);
            assert_eq!(t.rho, 1.0);
            assert_eq!(t.interest, 1.0);
        }
    }

    #[test]
    fn baird_layout() {
        let b = make_baird();
        assert_eq!(b.features.d(), 8);
        assert_eq!(b.features.x(0), &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(b.features.x(6), &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0]);
        assert_eq!(b.policies.rho(3, BAIRD_SOLID), 7.0);
        assert_eq!(b.policies.rho(3, BAIRD_DASHED), 0.0);
        for s in 0..7 {
            for next in 0..7 {
                assert_eq!(b.mdp.gamma_of(s, next), 0.99);
            }
        }
    }

    #[test]
    fn environment_doc_round_trips() {
        let mdp = generate_random_mdp(8, 2, 3, 1, 21).unwrap();
        let f = make_features(&mdp, FeatureKind::AliasedTabular, 4).unwrap();
        let doc = EnvironmentDoc::new(&mdp, &f);
        let json = doc.to_json().unwrap();
        let back = EnvironmentDoc::from_json(&json).unwrap();
        assert_eq!(back, doc);
        let (m2, f2) = back.into_parts().unwrap();
        assert_eq!(m2, mdp);
        assert_eq!(f2, f);
        assert_eq!(doc.fingerprint().unwrap().len(), 64);
    }

    #[test]
    fn environment_doc_rejects_unknown_fields() {
        let mdp = generate_random_mdp(4, 1, 2, 0, 1).unwrap();
        let f = make_features(&mdp, FeatureKind::Tabular, 0).unwrap();
        let mut value: serde_json::Value = serde_json::to_value(EnvironmentDoc::new(&mdp, &f)).unwrap();
        value["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<EnvironmentDoc>(value).is_err());
    }
}
