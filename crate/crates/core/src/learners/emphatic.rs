//! Emphatic TD: ETD(λ), true-online ETD(λ) and true-online ETD(λ, β).

use super::{LearnerState, Step};
use crate::linalg::dot;

/// Advances the follow-on trace with the given decay and returns the emphasis `M_t`.
fn emphasis(st: &mut LearnerState, s: &Step<'_>, decay: f64) -> f64 {
    st.follow_on = s.rho_prev * decay * st.follow_on + s.interest;
    s.lambda * s.interest + (1.0 - s.lambda) * st.follow_on
}

pub(crate) fn etd(st: &mut LearnerState, s: &Step<'_>) {
    let m = emphasis(st, s, s.gamma);
    let decay = s.gamma * s.lambda;
    let step = s.alpha * s.delta;
    for ((e, w), &x) in st.e.iter_mut().zip(st.w.iter_mut()).zip(s.x) {
        *e = s.rho * (decay * *e + m * x);
        *w += step * *e;
    }
}

fn true_online_emphatic(st: &mut LearnerState, s: &Step<'_>, m: f64) {
    let decay = s.rho * s.gamma * s.lambda;
    let gate = s.rho * s.alpha * m * (1.0 - decay * dot(s.x, &st.e));
    let w_change_dot_x = s.v - dot(&st.w_prev, s.x);
    let scaled_x = s.alpha * m * s.rho;
    for i in 0..st.w.len() {
        let x = s.x[i];
        st.e[i] = decay * st.e[i] + gate * x;
        st.w_prev[i] = st.w[i];
        st.w[i] += s.delta * st.e[i] + (st.e[i] - scaled_x * x) * w_change_dot_x;
    }
}

pub(crate) fn toetd(st: &mut LearnerState, s: &Step<'_>) {
    let m = emphasis(st, s, s.gamma);
    true_online_emphatic(st, s, m);
}

/// Follow-on decays with `β_t = beta_scale · γ_t` instead of `γ_t`.
pub(crate) fn toetd_beta(st: &mut LearnerState, s: &Step<'_>) {
    let m = emphasis(st, s, s.beta_scale * s.gamma);
    true_online_emphatic(st, s, m);
}
