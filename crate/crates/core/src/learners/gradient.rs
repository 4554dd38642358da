//! Gradient-TD rules: GTD(λ), true-online GTD(λ) and the two mirror-prox methods.

use super::{LearnerState, Step};
use crate::linalg::dot;

pub(crate) fn gtd(st: &mut LearnerState, s: &Step<'_>) {
    let decay = s.lambda * s.gamma;
    let mut e_dot_h = 0.0;
    for ((e, h), &x) in st.e.iter_mut().zip(&st.h).zip(s.x) {
        *e = s.rho * (decay * *e + x);
        e_dot_h += *e * h;
    }
    let h_dot_x = dot(&st.h, s.x);
    let correction = s.gamma_next * (1.0 - s.lambda) * e_dot_h;
    for i in 0..st.w.len() {
        let td = s.delta * st.e[i];
        st.w[i] += s.alpha * (td - correction * s.x_next[i]);
        st.h[i] += s.alpha_h * (td - h_dot_x * s.x[i]);
    }
}

pub(crate) fn togtd(st: &mut LearnerState, s: &Step<'_>) {
    let decay = s.lambda * s.gamma;
    let gate = s.alpha * (1.0 - s.rho * decay * dot(s.x, &st.e));
    let aux_decay = s.rho_prev * decay;
    let aux_gate = s.alpha_h * (1.0 - aux_decay * dot(s.x, &st.e_h));
    let w_change_dot_x = s.v - dot(&st.w_prev, s.x);
    let h_dot_x = dot(&st.h, s.x);

    let mut h_dot_emu = 0.0;
    for i in 0..st.w.len() {
        let x = s.x[i];
        st.e[i] = s.rho * (decay * st.e[i] + gate * x);
        st.e_mu[i] = s.rho * (decay * st.e_mu[i] + x);
        st.e_h[i] = aux_decay * st.e_h[i] + aux_gate * x;
        h_dot_emu += st.h[i] * st.e_mu[i];
    }
    let correction = s.alpha * s.gamma_next * (1.0 - s.lambda) * h_dot_emu;
    for i in 0..st.w.len() {
        let x = s.x[i];
        let d = s.delta * st.e[i] + (st.e[i] - s.alpha * s.rho * x) * w_change_dot_x;
        st.w_prev[i] = st.w[i];
        st.w[i] += d - correction * s.x_next[i];
        st.h[i] += s.rho * s.delta * st.e_h[i] - s.alpha_h * h_dot_x * x;
    }
}

/// Traces and the shared half step of the two mirror-prox rules. Leaves
/// `h_{t+1/2}` in `h_half` and returns `(hᵀx, hᵀe)` at the old `h`.
fn mirror_prox_half_step(st: &mut LearnerState, s: &Step<'_>) -> (f64, f64) {
    let decay = s.lambda * s.gamma;
    for (e, &x) in st.e.iter_mut().zip(s.x) {
        *e = s.rho * (decay * *e + x);
    }
    let h_dot_x = dot(&st.h, s.x);
    let h_dot_e = dot(&st.h, &st.e);
    for i in 0..st.h.len() {
        st.h_half[i] = st.h[i] + s.alpha_h * (s.delta * st.e[i] - h_dot_x * s.x[i]);
    }
    (h_dot_x, h_dot_e)
}

/// TD error at the intermediate weights `w_{t+1/2}`.
fn half_step_delta(st: &LearnerState, s: &Step<'_>) -> f64 {
    s.reward + s.gamma_next * dot(&st.w_half, s.x_next) - dot(&st.w_half, s.x)
}

pub(crate) fn gtd2_mp(st: &mut LearnerState, s: &Step<'_>) {
    let (h_dot_x, h_dot_e) = mirror_prox_half_step(st, s);
    let tail = s.gamma_next * (1.0 - s.lambda);
    for i in 0..st.w.len() {
        st.w_half[i] = st.w[i] + s.alpha * (h_dot_x * s.x[i] - tail * h_dot_e * s.x_next[i]);
    }
    let delta_half = half_step_delta(st, s);
    let hh_dot_x = dot(&st.h_half, s.x);
    let hh_dot_e = dot(&st.h_half, &st.e);
    for i in 0..st.w.len() {
        st.w[i] += s.alpha * (hh_dot_x * s.x[i] - tail * hh_dot_e * s.x_next[i]);
        st.h[i] += s.alpha_h * (delta_half * st.e[i] - hh_dot_x * s.x[i]);
    }
}

pub(crate) fn tdc_mp(st: &mut LearnerState, s: &Step<'_>) {
    let (_, h_dot_e) = mirror_prox_half_step(st, s);
    let tail = s.gamma_next * (1.0 - s.lambda);
    for i in 0..st.w.len() {
        st.w_half[i] = st.w[i] + s.alpha * (s.delta * st.e[i] - tail * h_dot_e * s.x_next[i]);
    }
    let delta_half = half_step_delta(st, s);
    let hh_dot_x = dot(&st.h_half, s.x);
    let hh_dot_e = dot(&st.h_half, &st.e);
    for i in 0..st.w.len() {
        let td = delta_half * st.e[i];
        st.w[i] += s.alpha * (td - tail * hh_dot_e * s.x_next[i]);
        st.h[i] += s.alpha_h * (td - hh_dot_x * s.x[i]);
    }
}
