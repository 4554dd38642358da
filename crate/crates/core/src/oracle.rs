//! Exact quantities computed from the MDP parameters.
//!
//! Dense direct solves only; the state spaces here have at most a few dozen
//! states. Policies are passed as row-major `[s][a]` probability tables.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::learners::HyperParams;
use crate::linalg::dot;
use crate::mdp::{FeatureMap, MdpSpec, TransitionSample};

const RESIDUAL_TOL: f64 = 1e-10;
const C_REGULARIZER: f64 = 1e-8;

/// `P_π`, `P_π ∘ Γ` and `r_π` for one policy.
struct PolicyKernel {
    p: DMatrix<f64>,
    p_gamma: DMatrix<f64>,
    r: DVector<f64>,
}

fn check_policy(mdp: &MdpSpec, policy: &[f64]) -> Result<()> {
    let expected = mdp.n_states() * mdp.n_actions();
    if policy.len() != expected {
        return Err(Error::DimensionMismatch { expected, actual: policy.len() });
    }
    Ok(())
}

fn policy_kernel(mdp: &MdpSpec, policy: &[f64]) -> Result<PolicyKernel> {
    check_policy(mdp, policy)?;
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let mut p = DMatrix::zeros(n, n);
    let mut p_gamma = DMatrix::zeros(n, n);
    let mut r = DVector::zeros(n);
    for s in 0..n {
        for a in 0..m {
            let pa = policy[s * m + a];
            if pa == 0.0 {
                continue;
            }
            for (next, &prob) in mdp.row(s, a).iter().enumerate() {
                if prob == 0.0 {
                    continue;
                }
                let mass = pa * prob;
                p[(s, next)] += mass;
                p_gamma[(s, next)] += mass * mdp.gamma_of(s, next);
                r[s] += mass * mdp.reward(s, a, next);
            }
        }
    }
    Ok(PolicyKernel { p, p_gamma, r })
}

fn solve(matrix: DMatrix<f64>, rhs: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let lu = matrix.clone().lu();
    let x = lu
        .solve(rhs)
        .ok_or_else(|| Error::SingularSystem(format!("{what}: matrix is singular")))?;
    let residual = (&matrix * &x - rhs).amax();
    if !(residual < RESIDUAL_TOL * (1.0 + rhs.amax())) {
        return Err(Error::SingularSystem(format!("{what}: residual {residual:e}")));
    }
    Ok(x)
}

/// Solves `v = r_π + (P_π ∘ Γ) v`.
pub fn true_values(mdp: &MdpSpec, pi: &[f64]) -> Result<Vec<f64>> {
    let k = policy_kernel(mdp, pi)?;
    let n = mdp.n_states();
    let v = solve(DMatrix::identity(n, n) - k.p_gamma, &k.r, "true values")?;
    Ok(v.iter().copied().collect())
}

fn strongly_connected(p: &DMatrix<f64>) -> bool {
    let n = p.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for t in 0..n {
                let edge = if forward { p[(s, t)] } else { p[(t, s)] };
                if edge > 0.0 && !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen.into_iter().all(|b| b)
    };
    reach(true) && reach(false)
}

/// Stationary distribution `d = dᵀP_μ`, `Σd = 1` of the behavior chain.
pub fn stationary_distribution(mdp: &MdpSpec, mu: &[f64]) -> Result<Vec<f64>> {
    let k = policy_kernel(mdp, mu)?;
    let n = mdp.n_states();
    if !strongly_connected(&k.p) {
        return Err(Error::NotIrreducible);
    }
    // (I − P)ᵀ dᵀ = 0 with the last equation replaced by Σd = 1.
    let mut system = (DMatrix::identity(n, n) - &k.p).transpose();
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let d = solve(system, &rhs, "stationary distribution")?;
    let residual = (k.p.transpose() * &d - &d).amax();
    if !(residual < RESIDUAL_TOL) || d.iter().any(|&v| v < -RESIDUAL_TOL) {
        return Err(Error::NotIrreducible);
    }
    Ok(d.iter().map(|&v| v.max(0.0)).collect())
}

/// `A_π`, `b_π`, `C` and `d_μ` for constant λ, with the Cholesky factor of `C`
/// (regularised by 1e-8·I when `C` is singular).
#[derive(Clone, Debug)]
pub struct FixedPointSystem {
    pub a_pi: DMatrix<f64>,
    pub b_pi: DVector<f64>,
    pub c: DMatrix<f64>,
    pub d_mu: Vec<f64>,
    /// True when `C` had to be regularised before factorising.
    pub c_regularized: bool,
    c_factor: Cholesky<f64, Dyn>,
}

/// Builds the MSPBE system with importance-weighted traces:
///
/// `A_π = XᵀD(I − λP_πΓ)⁻¹(I − P_πΓ)X`, `b_π = XᵀD(I − λP_πΓ)⁻¹r_π`, `C = XᵀDX`,
/// with `D = diag(d_μ)`.
pub fn fixed_point_system(
    mdp: &MdpSpec,
    features: &FeatureMap,
    pi: &[f64],
    mu: &[f64],
    lambda: f64,
) -> Result<FixedPointSystem> {
    let n = mdp.n_states();
    if features.n_states() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: features.n_states() });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
    }
    let d_mu = stationary_distribution(mdp, mu)?;
    let k = policy_kernel(mdp, pi)?;
    let x = DMatrix::from_row_iterator(n, features.d(), features.rows().flatten().copied());
    let dx = DMatrix::from_fn(n, features.d(), |s, j| d_mu[s] * x[(s, j)]);

    // Y = (I − λP_πΓ)⁻ᵀ D X, so that XᵀD(I − λP_πΓ)⁻¹ = Yᵀ.
    let trace_op = DMatrix::identity(n, n) - &k.p_gamma * lambda;
    let lu = trace_op.transpose().lu();
    let y = lu
        .solve(&dx)
        .ok_or_else(|| Error::SingularSystem("I − λP_πΓ is singular".into()))?;
    let bellman = DMatrix::identity(n, n) - &k.p_gamma;
    let a_pi = y.transpose() * bellman * &x;
    let b_pi = y.transpose() * &k.r;
    let c = x.transpose() * &dx;

    let (c_factor, c_regularized) = match Cholesky::new(c.clone()) {
        Some(f) if f.l_dirty().diagonal().iter().all(|&v| v > 1e-7) => (f, false),
        _ => {
            let dim = c.nrows();
            let shifted = &c + DMatrix::identity(dim, dim) * C_REGULARIZER;
            let f = Cholesky::new(shifted)
                .ok_or_else(|| Error::SingularSystem("C is not positive definite".into()))?;
            (f, true)
        }
    };
    Ok(FixedPointSystem { a_pi, b_pi, c, d_mu, c_regularized, c_factor })
}

impl FixedPointSystem {
    pub fn d(&self) -> usize {
        self.b_pi.len()
    }

    /// The TD fixed point `w*` solving `A_π w = b_π`.
    ///
    /// Feature components that are zero in every state (aliased tabular
    /// features keep the unused one-hot columns) make `A_π` singular; the
    /// system is still consistent and the minimum-norm solution is returned.
    pub fn fixed_point(&self) -> Result<Vec<f64>> {
        if let Ok(w) = solve(self.a_pi.clone(), &self.b_pi, "TD fixed point") {
            return Ok(w.iter().copied().collect());
        }
        let svd = self.a_pi.clone().svd(true, true);
        let w = svd
            .solve(&self.b_pi, 1e-12 * svd.singular_values.max())
            .map_err(|e| Error::SingularSystem(format!("TD fixed point: {e}")))?;
        let residual = (&self.a_pi * &w - &self.b_pi).amax();
        if !(residual < RESIDUAL_TOL * (1.0 + self.b_pi.amax())) {
            return Err(Error::SingularSystem(format!("TD fixed point: residual {residual:e}")));
        }
        Ok(w.iter().copied().collect())
    }

    /// `E_μ[δ e] = b_π − A_π w`.
    pub fn expected_td_update(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), actual: w.len() });
        }
        let r = &self.b_pi - &self.a_pi * DVector::from_column_slice(w);
        Ok(r.iter().copied().collect())
    }
}

/// `(b_π − A_πw)ᵀ C⁻¹ (b_π − A_πw)`.
pub fn mspbe(w: &[f64], sys: &FixedPointSystem) -> Result<f64> {
    let r = DVector::from_vec(sys.expected_td_update(w)?);
    let y = sys.c_factor.solve(&r);
    Ok(r.dot(&y).max(0.0))
}

/// Weight sequences `w_0..=w_T` and `h_0..=h_T` of the forward view.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardView {
    pub w: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

/// Read-only view of a trajectory for the truncated-return recursions.
pub struct Trajectory<'a> {
    pub samples: &'a [TransitionSample],
    pub features: &'a FeatureMap,
}

impl Trajectory<'_> {
    fn x(&self, k: usize) -> &[f64] {
        if k < self.samples.len() {
            self.features.x(self.samples[k].s)
        } else {
            self.features.x(self.samples[k - 1].s_next)
        }
    }

    /// `γ_k`, the discount of the transition into `S_k` (0 at the start).
    fn gamma(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.samples[k - 1].gamma_next
        }
    }

    /// `ρ_k`. Past the last sample the value cancels out of every return, so 1 is used.
    fn rho(&self, k: usize) -> f64 {
        self.samples.get(k).map_or(1.0, |s| s.rho)
    }

    /// One-step part of the truncated return:
    /// `R_{k+1} + γ_{k+1}(1 − λρ_{k+1}) x_{k+1}ᵀw_k`.
    fn one_step(&self, k: usize, online_w: &[Vec<f64>], lambda: f64) -> f64 {
        let g = self.gamma(k + 1);
        self.samples[k].reward + g * (1.0 - lambda * self.rho(k + 1)) * dot(self.x(k + 1), &online_w[k])
    }
}

/// Truncated off-policy returns `G_{k,t}` for `k = 0..=t` by the backward
/// recursion `G_{k,t} = ρ_k(R_{k+1} + γ_{k+1}(1 − λρ_{k+1})x_{k+1}ᵀw_k + γ_{k+1}λG_{k+1,t})`
/// from `G_{t,t} = ρ_t x_tᵀw_{t−1}`. `online_w[k]` must hold `w_k` for `k < t`.
pub fn truncated_returns(traj: &Trajectory<'_>, online_w: &[Vec<f64>], lambda: f64, t: usize) -> Vec<f64> {
    let mut g = vec![0.0; t + 1];
    g[t] = traj.rho(t) * dot(traj.x(t), &online_w[t - 1]);
    for k in (0..t).rev() {
        g[k] = traj.rho(k) * (traj.one_step(k, online_w, lambda) + traj.gamma(k + 1) * lambda * g[k + 1]);
    }
    g
}

/// The same returns as [`truncated_returns`], from the unrolled sum
/// `G_{k,t} = Σ_{j=k}^{t−1} c_{k,j} u_j + c_{k,t} x_tᵀw_{t−1}` with
/// `c_{k,j} = Π_{i=k}^{j} ρ_i · Π_{i=k+1}^{j} γ_iλ`.
pub fn truncated_return_unrolled(
    traj: &Trajectory<'_>,
    online_w: &[Vec<f64>],
    lambda: f64,
    k: usize,
    t: usize,
) -> f64 {
    let coefficient = |j: usize| {
        let rhos: f64 = (k..=j).map(|i| traj.rho(i)).product();
        let decays: f64 = (k + 1..=j).map(|i| traj.gamma(i) * lambda).product();
        rhos * decays
    };
    let mut total = 0.0;
    for j in k..t {
        total += coefficient(j) * traj.one_step(j, online_w, lambda);
    }
    total + coefficient(t) * dot(traj.x(t), &online_w[t - 1])
}

/// Brute-force forward view of true-online HTD(λ).
///
/// For each horizon `t = 1..=horizon` the interim weights restart from
/// `(w_0, h_0 = 0)` and replay
/// `w_{k+1} = w_k + α(G_{k,t} − ρ_k x_kᵀw_k)x_k + α(x_k − γ_{k+1}x_{k+1})(e_k − e^μ_k)ᵀh_k`
/// and the matching `h` recursion with `α_h`, where `h_k` in the correction
/// terms is the online auxiliary vector. The final interim weights become
/// `w_t, h_t`. O(horizon²·d); meant for tests.
pub fn forward_view_tohtd(
    samples: &[TransitionSample],
    features: &FeatureMap,
    hp: &HyperParams,
    horizon: usize,
    w0: &[f64],
) -> Result<ForwardView> {
    if horizon > samples.len() {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} exceeds trajectory length {}",
            samples.len()
        )));
    }
    let d = features.d();
    if w0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: w0.len() });
    }
    let traj = Trajectory { samples, features };
    let lambda = hp.lambda;

    // Importance-weighted and behavior traces do not depend on the weights.
    let mut e_seq = Vec::with_capacity(horizon);
    let mut emu_seq = Vec::with_capacity(horizon);
    let mut e = vec![0.0; d];
    let mut emu = vec![0.0; d];
    for k in 0..horizon {
        let decay = lambda * traj.gamma(k);
        let rho = traj.rho(k);
        for (i, &x) in traj.x(k).iter().enumerate() {
            e[i] = rho * (decay * e[i] + x);
            emu[i] = decay * emu[i] + x;
        }
        e_seq.push(e.clone());
        emu_seq.push(emu.clone());
    }

    let mut online_w = vec![w0.to_vec()];
    let mut online_h = vec![vec![0.0; d]];
    for t in 1..=horizon {
        let g = truncated_returns(&traj, &online_w, lambda, t);
        let mut w = w0.to_vec();
        let mut h = vec![0.0; d];
        for k in 0..t {
            let xk = traj.x(k);
            let xk1 = traj.x(k + 1);
            let gamma1 = traj.gamma(k + 1);
            let target = g[k] - traj.rho(k) * dot(xk, &w);
            let diff_dot_h: f64 =
                e_seq[k].iter().zip(&emu_seq[k]).zip(&online_h[k]).map(|((a, b), c)| (a - b) * c).sum();
            let emu_dot_h = dot(&emu_seq[k], &online_h[k]);
            for i in 0..d {
                let u = xk[i] - gamma1 * xk1[i];
                w[i] += hp.alpha * target * xk[i] + hp.alpha * u * diff_dot_h;
                h[i] += hp.alpha_h() * target * xk[i] - hp.alpha_h() * u * emu_dot_h;
            }
        }
        online_w.push(w);
        online_h.push(h);
    }
    Ok(ForwardView { w: online_w, h: online_h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{generate_random_mdp, make_baird, make_features, make_policies, FeatureKind};

    #[test]
    fn zero_rewards_give_zero_values() {
        let b = make_baird();
        let v = true_values(&b.mdp, b.policies.pi_table()).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_rewards_give_geometric_values() {
        let n = 4;
        let mut p = vec![0.0; n * n];
        for s in 0..n {
            p[s * n + (s + 1) % n] = 1.0;
        }
        let mdp = MdpSpec::new(n, 1, p, vec![1.0; n * n], vec![], 0.9).unwrap();
        let v = true_values(&mdp, &vec![1.0; n]).unwrap();
        for x in v {
            assert!((x - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doubly_stochastic_chain_is_uniform() {
        let n = 5;
        let mut p = vec![0.0; n * n];
        for s in 0..n {
            p[s * n + (s + 1) % n] = 0.5;
            p[s * n + (s + 2) % n] = 0.5;
        }
        let mdp = MdpSpec::new(n, 1, p, vec![0.0; n * n], vec![], 0.9).unwrap();
        let d = stationary_distribution(&mdp, &vec![1.0; n]).unwrap();
        for x in d {
            assert!((x - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn reducible_chain_is_rejected() {
        // State 1 is absorbing.
        let p = vec![0.5, 0.5, 0.0, 1.0];
        let mdp = MdpSpec::new(2, 1, p, vec![0.0; 4], vec![], 0.9).unwrap();
        assert!(matches!(stationary_distribution(&mdp, &[1.0, 1.0]), Err(Error::NotIrreducible)));
    }

    #[test]
    fn tabular_lambda_zero_on_policy_system() {
        let mdp = generate_random_mdp(6, 2, 3, 1, 3).unwrap();
        let pol = make_policies(&mdp, 0.9, 0.9, 3).unwrap();
        let f = make_features(&mdp, FeatureKind::Tabular, 0).unwrap();
        let pi = table(&pol, true);
        let sys = fixed_point_system(&mdp, &f, &pi, &pi, 0.0).unwrap();
        let k = policy_kernel(&mdp, &pi).unwrap();
        let dmat = DMatrix::from_diagonal(&DVector::from_vec(sys.d_mu.clone()));
        let expected_a = &dmat * (DMatrix::identity(6, 6) - &k.p_gamma);
        let expected_b = &dmat * &k.r;
        assert!((&sys.a_pi - expected_a).amax() < 1e-12);
        assert!((&sys.b_pi - expected_b).amax() < 1e-12);
        assert!((&sys.c - dmat).amax() < 1e-15);
        assert!(!sys.c_regularized);
    }

    #[test]
    fn mspbe_vanishes_at_fixed_point() {
        let mdp = generate_random_mdp(10, 3, 4, 2, 8).unwrap();
        let pol = make_policies(&mdp, 0.9, 0.8, 8).unwrap();
        for kind in FeatureKind::RANDOM_MDP {
            let f = make_features(&mdp, kind, 8).unwrap();
            for lambda in [0.0, 0.5, 0.9] {
                let sys = fixed_point_system(&mdp, &f, &table(&pol, true), &table(&pol, false), lambda).unwrap();
                let w = sys.fixed_point().unwrap();
                assert!(mspbe(&w, &sys).unwrap() < 1e-10, "{kind} λ={lambda}");
                let zero = vec![0.0; f.d()];
                let b = sys.b_pi.clone();
                let direct = b.dot(&sys.c_factor.solve(&b));
                assert!((mspbe(&zero, &sys).unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn baird_c_is_regularized() {
        let b = make_baird();
        let sys = fixed_point_system(&b.mdp, &b.features, &table(&b.policies, true), &table(&b.policies, false), 0.0)
            .unwrap();
        assert!(sys.c_regularized);
        for d in &sys.d_mu {
            assert!((d - 1.0 / 7.0).abs() < 1e-12);
        }
        assert!(mspbe(&b.initial_weights, &sys).unwrap() > 0.0);
    }

    fn table(p: &crate::mdp::PolicyPair, target: bool) -> Vec<f64> {
        if target { p.pi_table() } else { p.mu_table() }.to_vec()
    }
}
