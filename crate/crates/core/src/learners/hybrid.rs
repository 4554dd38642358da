//! Hybrid TD: plain TD(λ) updates on-policy, gradient-corrected updates off-policy.
//!
//! HTD(λ) keeps an importance-weighted trace `e` and an unweighted behavior
//! trace `e_mu`. The correction `(x − γ'x')(e − e_mu)ᵀh` vanishes when the two
//! traces agree, i.e. whenever every ρ along the trajectory is 1.

use super::{LearnerState, Step};
use crate::linalg::dot;

/// Updates `e` and `e_mu`; returns `((e − e_mu)ᵀh, e_muᵀh)` at the old `h`.
fn hybrid_traces(st: &mut LearnerState, s: &Step<'_>) -> (f64, f64) {
    let decay = s.lambda * s.gamma;
    let mut diff_dot_h = 0.0;
    let mut emu_dot_h = 0.0;
    for i in 0..st.e.len() {
        let x = s.x[i];
        st.e[i] = s.rho * (decay * st.e[i] + x);
        st.e_mu[i] = decay * st.e_mu[i] + x;
        diff_dot_h += (st.e[i] - st.e_mu[i]) * st.h[i];
        emu_dot_h += st.e_mu[i] * st.h[i];
    }
    (diff_dot_h, emu_dot_h)
}

pub(crate) fn htd(st: &mut LearnerState, s: &Step<'_>) {
    let (diff_dot_h, emu_dot_h) = hybrid_traces(st, s);
    for i in 0..st.w.len() {
        let u = s.x[i] - s.gamma_next * s.x_next[i];
        let td = s.delta * st.e[i];
        st.w[i] += s.alpha * (td + u * diff_dot_h);
        st.h[i] += s.alpha_h * (td - u * emu_dot_h);
    }
}

/// True-online HTD(λ). The forward-view part `d` enters the auxiliary weights
/// scaled by `α_h / α = η`, which keeps the backward view equal to its forward
/// view for every η and makes λ = 0 coincide with HTD(0).
pub(crate) fn tohtd(st: &mut LearnerState, s: &Step<'_>) {
    let decay = s.lambda * s.gamma;
    let gate = s.alpha * (1.0 - s.rho * decay * dot(s.x, &st.e_o));
    let w_change_dot_x = s.v - dot(&st.w_prev, s.x);
    let (diff_dot_h, emu_dot_h) = hybrid_traces(st, s);
    for i in 0..st.w.len() {
        let x = s.x[i];
        st.e_o[i] = s.rho * (decay * st.e_o[i] + gate * x);
        let d = s.delta * st.e_o[i] + (st.e_o[i] - s.alpha * s.rho * x) * w_change_dot_x;
        let u = x - s.gamma_next * s.x_next[i];
        st.w_prev[i] = st.w[i];
        st.w[i] += d + s.alpha * u * diff_dot_h;
        st.h[i] += s.eta * d - s.alpha_h * u * emu_dot_h;
    }
}
