//! Posterior probability `Pi_n = P(theta <= n | X_0..X_n)` and the
//! conditional probabilities of the switch time built on it.

use std::collections::VecDeque;

use crate::error::{DisorderError, Result};
use crate::likelihood::{
    check_probability, joint_density, l_unchecked, mixture_g, mixture_g_split, window_statistic,
};
use crate::model::{DisorderModel, GeometricPrior};

/// `Pi_n` together with `1 - Pi_n`, each computed from sums of positive
/// terms so that both keep full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorState {
    pub n: usize,
    pub pi: f64,
    pub complement: f64,
}

impl PosteriorState {
    /// `Pi_0 = 0`: the change never happens before the first transition.
    pub fn initial() -> Self {
        Self {
            n: 0,
            pi: 0.0,
            complement: 1.0,
        }
    }

    /// A state at time `n` from a bare posterior value.
    pub fn from_pi(n: usize, pi: f64) -> Result<Self> {
        check_probability(pi)?;
        Ok(Self {
            n,
            pi,
            complement: 1.0 - pi,
        })
    }

    /// One-step update after observing `x_prev -> x_next`.
    ///
    /// With `l` the kernel ratio, `Pi' = l (q + p Pi) / D` and
    /// `1 - Pi' = p (1 - Pi) / D` where `D = l (q + p Pi) + p (1 - Pi)`, which
    /// equals `post (q + p Pi) / G` without forming the tiny densities. An
    /// infinite ratio gives certainty.
    pub fn step(&self, model: &DisorderModel, x_prev: usize, x_next: usize) -> Result<Self> {
        if x_prev >= model.k() || x_next >= model.k() {
            return Err(DisorderError::IndexOutOfRange(format!(
                "transition {x_prev} -> {x_next} outside a space of {} states",
                model.k()
            )));
        }
        let unreachable = DisorderError::UnreachableObservation {
            from: x_prev,
            to: x_next,
        };
        let ratio = model.ratios().get(x_prev, x_next);
        if ratio.is_nan() {
            return Err(unreachable);
        }
        let n = self.n + 1;
        if ratio.is_infinite() {
            return Ok(Self {
                n,
                pi: 1.0,
                complement: 0.0,
            });
        }
        let (p, q) = (model.p(), model.q());
        let changed = ratio * (q + p * self.pi);
        let unchanged = p * self.complement;
        let den = changed + unchanged;
        if den == 0.0 {
            return Err(unreachable);
        }
        Ok(Self {
            n,
            pi: (changed / den).min(1.0),
            complement: (unchanged / den).min(1.0),
        })
    }
}

/// One-step posterior update after observing `x_prev -> x_next`; see
/// [`PosteriorState::step`].
pub fn pi_step(model: &DisorderModel, pi: f64, x_prev: usize, x_next: usize) -> Result<f64> {
    Ok(PosteriorState::from_pi(0, pi)?.step(model, x_prev, x_next)?.pi)
}

/// `Pi_n` from `Pi_(n-l-1)` and the segment `x_(n-l-1)..x_n` in one shot.
pub fn pi_multi(model: &DisorderModel, pi_start: f64, segment: &[usize]) -> Result<f64> {
    let g = mixture_g(model, segment, pi_start)?;
    if g == 0.0 {
        return Err(unreachable_segment(segment));
    }
    let l = segment.len() - 2;
    let (p, q) = (model.p(), model.q());
    let mut changed = 0.0;
    for k in 0..=l {
        changed += p.powi((l - k) as i32) * l_unchecked(model, segment, k + 1);
    }
    let num = pi_start * l_unchecked(model, segment, l + 1) + (1.0 - pi_start) * q * changed;
    Ok((num / g).clamp(0.0, 1.0))
}

fn unreachable_segment(segment: &[usize]) -> DisorderError {
    DisorderError::UnreachableObservation {
        from: segment[0],
        to: segment[segment.len() - 1],
    }
}

/// `Pi_n = 1 - p^n L_0 / S` for a full path `x_0..x_n`.
pub fn pi_direct(model: &DisorderModel, path: &[usize]) -> Result<f64> {
    Ok(posterior_direct(model, path)?.pi)
}

/// `Pi_n` and `1 - Pi_n = p^n L_0 / S` for a full path `x_0..x_n`.
pub fn posterior_direct(model: &DisorderModel, path: &[usize]) -> Result<PosteriorState> {
    let s = joint_density(model, path)?;
    if s == 0.0 {
        return Err(DisorderError::UnreachablePath);
    }
    let n = path.len() - 1;
    let no_change = model.p().powi(n as i32) * l_unchecked(model, path, 0);
    Ok(PosteriorState {
        n,
        pi: ((s - no_change) / s).clamp(0.0, 1.0),
        complement: (no_change / s).clamp(0.0, 1.0),
    })
}

/// Chains the one-step update along a path from `Pi_0 = 0` and returns every `Pi_n`.
pub fn pi_trace(model: &DisorderModel, path: &[usize]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(path.len());
    let mut state = PosteriorState::initial();
    out.push(state.pi);
    for w in path.windows(2) {
        state = state.step(model, w[0], w[1])?;
        out.push(state.pi);
    }
    Ok(out)
}

/// `P(theta <= n + k | F_n) = 1 - p^k (1 - Pi_n)`.
pub fn prob_theta_forward(prior: &GeometricPrior, pi: f64, k: usize) -> f64 {
    if k == 0 {
        return pi;
    }
    1.0 - prior.tail(k) * (1.0 - pi)
}

/// [`prob_theta_forward`] from a posterior state.
pub fn prob_theta_forward_state(prior: &GeometricPrior, state: &PosteriorState, k: usize) -> f64 {
    if k == 0 {
        return state.pi;
    }
    1.0 - prior.tail(k) * state.complement
}

/// `P(theta <= n - l - 1 | F_n) = Pi_(n-l-1) L_(l+1) / G` for the segment
/// `x_(n-l-1)..x_n`.
pub fn prob_theta_backward(model: &DisorderModel, segment: &[usize], pi_start: f64) -> Result<f64> {
    prob_theta_backward_state(model, segment, &PosteriorState::from_pi(0, pi_start)?)
}

/// [`prob_theta_backward`] from the posterior state at the segment start.
pub fn prob_theta_backward_state(
    model: &DisorderModel,
    segment: &[usize],
    start: &PosteriorState,
) -> Result<f64> {
    // validates the segment
    mixture_g(model, segment, start.pi)?;
    let g = mixture_g_split(model, segment, start.pi, start.complement);
    if g == 0.0 {
        return Err(unreachable_segment(segment));
    }
    let l = segment.len() - 2;
    Ok(start.pi * l_unchecked(model, segment, l + 1) / g)
}

/// `P(|theta - n| <= d | F_n)` from the window `x_(n-d-1)..x_n` and `Pi_n`.
///
/// An infinite statistic can only occur together with `Pi_n = 1`, where the
/// probability is zero; any other pairing is rejected.
pub fn prob_window(model: &DisorderModel, window: &[usize], pi: f64) -> Result<f64> {
    prob_window_state(model, window, &PosteriorState::from_pi(0, pi)?)
}

/// [`prob_window`] from a posterior state, `q stat (1 - Pi_n)`.
pub fn prob_window_state(model: &DisorderModel, window: &[usize], state: &PosteriorState) -> Result<f64> {
    if window.len() != model.d() + 2 {
        return Err(DisorderError::InvalidInput(format!(
            "window has {} states, expected d + 2 = {}",
            window.len(),
            model.d() + 2
        )));
    }
    let stat = window_statistic(model, window);
    if state.complement == 0.0 {
        return Ok(0.0);
    }
    if stat.is_infinite() {
        return Err(DisorderError::InvalidInput(
            "window contains a transition impossible before the change but posterior is below one"
                .into(),
        ));
    }
    Ok(model.q() * stat * state.complement)
}

/// The Markov statistic `(x_(n-d-1)..x_n, Pi_n)` carried along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowState {
    window: VecDeque<usize>,
    posterior: PosteriorState,
    capacity: usize,
}

impl WindowState {
    pub fn start(model: &DisorderModel) -> Self {
        let capacity = model.d() + 2;
        let mut window = VecDeque::with_capacity(capacity);
        window.push_back(model.x0());
        Self {
            window,
            posterior: PosteriorState::initial(),
            capacity,
        }
    }

    /// State after observing `x`; the receiver is left untouched.
    pub fn push(&self, model: &DisorderModel, x: usize) -> Result<Self> {
        let last = *self.window.back().expect("window is never empty");
        let posterior = self.posterior.step(model, last, x)?;
        let mut window = self.window.clone();
        if window.len() == self.capacity {
            window.pop_front();
        }
        window.push_back(x);
        Ok(Self {
            window,
            posterior,
            capacity: self.capacity,
        })
    }

    pub fn n(&self) -> usize {
        self.posterior.n
    }

    pub fn pi(&self) -> f64 {
        self.posterior.pi
    }

    pub fn posterior(&self) -> PosteriorState {
        self.posterior
    }

    pub fn is_full(&self) -> bool {
        self.window.len() == self.capacity
    }

    pub fn window(&self) -> Vec<usize> {
        self.window.iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(p: f64) -> DisorderModel {
        DisorderModel::from_rows(
            &[vec![0.1, 0.9], vec![0.8, 0.2]],
            &[vec![0.7, 0.3], vec![0.4, 0.6]],
            p,
            0,
            0,
        )
        .unwrap()
    }

    #[test]
    fn certainty_is_absorbing() {
        let m = reference(0.3);
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((pi_step(&m, 1.0, a, b).unwrap() - 1.0).abs() < 1e-15);
            assert!((pi_multi(&m, 1.0, &[a, b, a]).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_kernels_reduce_to_prior_update() {
        let rows = vec![vec![0.3, 0.7], vec![0.6, 0.4]];
        let m = DisorderModel::from_rows(&rows, &rows, 0.6, 0, 0).unwrap();
        let pi = pi_step(&m, 0.25, 0, 1).unwrap();
        assert!((pi - (0.4 + 0.6 * 0.25)).abs() < 1e-15);
        let path = [0, 1, 1, 0, 1];
        let direct = pi_direct(&m, &path).unwrap();
        assert!((direct - (1.0 - 0.6f64.powi(4))).abs() < 1e-14);
    }

    #[test]
    fn first_step_of_reference_model() {
        let m = reference(0.5);
        assert!((pi_step(&m, 0.0, 0, 0).unwrap() - 0.875).abs() < 1e-15);
    }

    #[test]
    fn multi_step_base_case_is_single_step() {
        let m = reference(0.45);
        for pi in [0.0, 0.2, 0.9] {
            let a = pi_step(&m, pi, 1, 0).unwrap();
            let b = pi_multi(&m, pi, &[1, 0]).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_path_posterior_is_zero() {
        assert_eq!(pi_direct(&reference(0.5), &[0]).unwrap(), 0.0);
    }

    #[test]
    fn forward_probability() {
        let prior = GeometricPrior::new(0.5).unwrap();
        assert_eq!(prob_theta_forward(&prior, 0.3, 0), 0.3);
        assert!((prob_theta_forward(&prior, 0.5, 2) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn backward_probability_endpoints() {
        let m = reference(0.5);
        assert_eq!(prob_theta_backward(&m, &[0, 1, 1], 0.0).unwrap(), 0.0);
        assert!((prob_theta_backward(&m, &[0, 1, 1], 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window_probability_single_transition() {
        let m = reference(0.5);
        let v = prob_window(&m, &[0, 0], 0.2).unwrap();
        assert!((v - 0.5 * 7.0 / 0.5 * 0.8).abs() < 1e-12);
        assert!(prob_window(&m, &[0, 0, 1], 0.2).is_err());
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let m = DisorderModel::from_rows(
            &[vec![1.0, 0.0], vec![0.5, 0.5]],
            &[vec![1.0, 0.0], vec![0.5, 0.5]],
            0.5,
            0,
            0,
        )
        .unwrap();
        assert!(matches!(
            pi_step(&m, 0.3, 0, 1),
            Err(DisorderError::UnreachableObservation { from: 0, to: 1 })
        ));
        assert!(matches!(pi_direct(&m, &[0, 1]), Err(DisorderError::UnreachablePath)));
    }

    #[test]
    fn support_mismatch_forces_certainty() {
        let m = DisorderModel::from_rows(
            &[vec![1.0, 0.0], vec![0.5, 0.5]],
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            0.5,
            0,
            0,
        )
        .unwrap();
        assert_eq!(pi_step(&m, 0.1, 0, 1).unwrap(), 1.0);
        assert!((pi_direct(&m, &[0, 0, 1]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(prob_window(&m, &[0, 1], 1.0).unwrap(), 0.0);
        assert!(prob_window(&m, &[0, 1], 0.5).is_err());
    }

    #[test]
    fn window_state_tracks_last_states() {
        let m = reference(0.5).with_d(1);
        let mut w = WindowState::start(&m);
        assert!(!w.is_full());
        for x in [1, 0, 0, 1] {
            w = w.push(&m, x).unwrap();
        }
        assert!(w.is_full());
        assert_eq!(w.window(), vec![0, 0, 1]);
        assert_eq!(w.n(), 4);
        let expected = pi_direct(&m, &[0, 1, 0, 0, 1]).unwrap();
        assert!((w.pi() - expected).abs() < 1e-14);
    }
}
