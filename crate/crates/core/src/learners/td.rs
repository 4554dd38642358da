//! Conventional TD rules: off-policy TD(0), TD(λ), true-online TD(λ), PTD(λ).

use super::{LearnerState, Step};
use crate::linalg::{axpy, dot};

pub(crate) fn td0(st: &mut LearnerState, s: &Step<'_>) {
    axpy(s.alpha * s.rho * s.delta, s.x, &mut st.w);
}

pub(crate) fn td_lambda(st: &mut LearnerState, s: &Step<'_>) {
    let decay = s.lambda * s.gamma;
    let step = s.alpha * s.delta;
    for ((e, w), &x) in st.e.iter_mut().zip(st.w.iter_mut()).zip(s.x) {
        *e = decay * *e + x;
        *w += step * *e;
    }
}

/// The TD error uses the carried `v_old` in place of `wᵀx_t`.
pub(crate) fn totd(st: &mut LearnerState, s: &Step<'_>) {
    let decay = s.gamma * s.lambda;
    let delta = s.reward + s.gamma_next * s.v_next - st.v_old;
    let gate = s.alpha * (1.0 - decay * dot(&st.e, s.x));
    let correction = s.alpha * (st.v_old - s.v);
    for ((e, w), &x) in st.e.iter_mut().zip(st.w.iter_mut()).zip(s.x) {
        *e = decay * *e + gate * x;
        *w += delta * *e + correction * x;
    }
    st.v_old = s.v_next;
}

/// `h` holds the provisional weights. The provisional TD error has no discount.
pub(crate) fn ptd(st: &mut LearnerState, s: &Step<'_>) {
    let decay = s.lambda * s.gamma;
    let delta_bar = s.reward + s.v_next - s.v;
    let provisional_decay = s.gamma * s.lambda;
    for (((e, w), h), &x) in st.e.iter_mut().zip(st.w.iter_mut()).zip(st.h.iter_mut()).zip(s.x) {
        *e = s.rho * (decay * *e + x);
        let h_old = *h;
        *w += s.alpha * s.delta * *e + (s.rho - 1.0) * h_old;
        *h = provisional_decay * (s.rho * h_old + s.alpha * delta_bar * *e);
    }
}
