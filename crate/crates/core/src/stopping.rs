//! Threshold function, value iteration and the optimal stopping rule.
//!
//! Everything here works in the *q-free* scaling: the detection statistic is
//! `(1 - p^d)/q + sum_{m=1..d+1} prod_{last m transitions} (ratio / p)` and
//! the thresholds `r` are scaled the same way. Dividing the payoff by the
//! positive constant `q` scales every iterate by `1/q` and leaves each stop
//! decision unchanged. [`DetectionStatistic::payoff_scaled`] and
//! [`value_at_start`] restore the factor where a probability is needed.
//!
//! For a tuple `x_1..x_(d+1)` the iteration is
//!
//! ```text
//! r_k(x_1..x_(d+1)) = sum_y p pre(x_(d+1), y) max{ stat(x_1..x_(d+1), y), r_(k-1)(x_2..x_(d+1), y) }
//! ```
//!
//! and each term is evaluated as `max{p pre A + post B, p pre r}` where
//! `stat = A + B ratio / p`, so a zero pre-change probability never meets an
//! infinite ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DisorderError, Result};
use crate::likelihood::{check_probability, mul0, window_statistic};
use crate::model::{DisorderModel, Trajectory};
use crate::posterior::WindowState;

/// Largest number of `(d+1)`-tuples a dense table may hold.
pub const MAX_TABLE_ENTRIES: usize = 1_000_000;

/// Default certified accuracy of [`solve_rstar`].
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

/// Dense map from `(d+1)`-tuples of states to thresholds.
///
/// Tuples are indexed in base `k` with the oldest state most significant.
/// Entries are `+inf` for tuples that contain a transition impossible before
/// the change; the statistic of any window ending in such a tuple is
/// infinite as well.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    k: usize,
    d: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn zeros(k: usize, d: usize) -> Result<Self> {
        let len = table_len(k, d)?;
        Ok(Self {
            k,
            d,
            values: vec![0.0; len],
        })
    }

    pub fn from_values(k: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        let len = table_len(k, d)?;
        if values.len() != len {
            return Err(DisorderError::InvalidInput(format!(
                "table for k = {k}, d = {d} needs {len} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(DisorderError::InvalidInput("thresholds must be nonnegative".into()));
        }
        Ok(Self { k, d, values })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index_of(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.d + 1);
        tuple.iter().fold(0, |acc, &x| acc * self.k + x)
    }

    pub fn tuple_of(&self, mut index: usize) -> Vec<usize> {
        let mut t = vec![0; self.d + 1];
        for slot in t.iter_mut().rev() {
            *slot = index % self.k;
            index /= self.k;
        }
        t
    }

    pub fn get(&self, tuple: &[usize]) -> f64 {
        self.values[self.index_of(tuple)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.tuple_of(i), v))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            k: self.k,
            d: self.d,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Sup-norm distance; matching infinite entries count as equal.
    pub fn sup_distance(&self, other: &ValueTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }

    pub fn check_model(&self, model: &DisorderModel) -> Result<()> {
        if self.k != model.k() || self.d != model.d() {
            return Err(DisorderError::InvalidInput(format!(
                "table built for k = {}, d = {} used with k = {}, d = {}",
                self.k,
                self.d,
                model.k(),
                model.d()
            )));
        }
        Ok(())
    }
}

fn table_len(k: usize, d: usize) -> Result<usize> {
    let capacity = || {
        DisorderError::Capacity(format!(
            "{k}^{} threshold entries exceed the limit of {MAX_TABLE_ENTRIES}",
            d + 1
        ))
    };
    let exp = u32::try_from(d + 1).map_err(|_| capacity())?;
    match k.checked_pow(exp) {
        Some(n) if n <= MAX_TABLE_ENTRIES => Ok(n),
        _ => Err(capacity()),
    }
}

/// Stopping statistic of a window `x_(n-d-1)..x_n`, q-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionStatistic {
    value: f64,
}

impl DetectionStatistic {
    pub fn q_free(&self) -> f64 {
        self.value
    }

    /// `1 - p^d + q sum L_m / (p^m L_0)`.
    pub fn payoff_scaled(&self, q: f64) -> f64 {
        self.value * q
    }

    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

pub fn statistic(model: &DisorderModel, window: &[usize]) -> Result<DetectionStatistic> {
    check_window(model, window)?;
    Ok(DetectionStatistic {
        value: window_statistic(model, window),
    })
}

fn check_window(model: &DisorderModel, window: &[usize]) -> Result<()> {
    if window.len() != model.d() + 2 {
        return Err(DisorderError::InvalidInput(format!(
            "window has {} states, expected d + 2 = {}",
            window.len(),
            model.d() + 2
        )));
    }
    if window.iter().any(|&x| x >= model.k()) {
        return Err(DisorderError::IndexOutOfRange("window state out of range".into()));
    }
    Ok(())
}

/// Transformed payoff `h(window, alpha) = stat * (1 - alpha)`.
pub fn payoff_h(model: &DisorderModel, window: &[usize], alpha: f64) -> Result<f64> {
    check_probability(alpha)?;
    let stat = statistic(model, window)?;
    Ok(mul0(stat.payoff_scaled(model.q()), 1.0 - alpha))
}

/// Splits the statistic of `tuple ++ [y]` into `A + B ratio(last, y) / p`.
fn statistic_parts(model: &DisorderModel, tuple: &[usize], scale: f64) -> (f64, f64) {
    let (p, q) = (model.p(), model.q());
    let d = tuple.len() - 1;
    let a = scale * (1.0 - p.powi(d as i32)) / q;
    let ratios = model.ratios();
    let mut b = 1.0;
    let mut prod = 1.0;
    for r in (1..tuple.len()).rev() {
        prod = mul0(prod, ratios.effective(tuple[r - 1], tuple[r]) / p);
        b += prod;
    }
    (a, scale * b)
}

/// Seed of the iteration, `r_0 = T h`, multiplied by `scale`.
pub fn seed_table_scaled(model: &DisorderModel, scale: f64) -> Result<ValueTable> {
    let mut table = ValueTable::zeros(model.k(), model.d())?;
    let p = model.p();
    for i in 0..table.len() {
        let tuple = table.tuple_of(i);
        let (a, b) = statistic_parts(model, &tuple, scale);
        // sum_y p pre(y) (A + B ratio/p) = p A + B sum_y post(y) = p A + B
        table.values[i] = p * a + b;
    }
    Ok(table)
}

pub fn seed_table(model: &DisorderModel) -> Result<ValueTable> {
    seed_table_scaled(model, 1.0)
}

/// One application of the operator with the statistic multiplied by `scale`.
pub fn bellman_step_scaled(model: &DisorderModel, prev: &ValueTable, scale: f64) -> Result<ValueTable> {
    prev.check_model(model)?;
    let k = model.k();
    let p = model.p();
    let (pre, post) = (model.pre(), model.post());
    let update = |i: usize| -> f64 {
        let tuple = prev.tuple_of(i);
        let last = tuple[tuple.len() - 1];
        let (a, b) = statistic_parts(model, &tuple, scale);
        // index of (x_2..x_(d+1), y) is (i mod k^d) * k + y
        let shifted = (i % (prev.len() / k)) * k;
        (0..k)
            .map(|y| {
                let (w0, w1) = (pre.prob(last, y), post.prob(last, y));
                let stop = mul0(w1, b);
                if w0 == 0.0 {
                    stop
                } else {
                    let r = prev.values[shifted + y];
                    (p * w0 * a + stop).max(p * w0 * r)
                }
            })
            .sum()
    };
    let values: Vec<f64> = if prev.len() >= 4096 {
        (0..prev.len()).into_par_iter().map(update).collect()
    } else {
        (0..prev.len()).map(update).collect()
    };
    Ok(ValueTable {
        k: prev.k,
        d: prev.d,
        values,
    })
}

pub fn bellman_step(model: &DisorderModel, prev: &ValueTable) -> Result<ValueTable> {
    bellman_step_scaled(model, prev, 1.0)
}

/// Iterates `count` steps from `start` and returns every iterate, `start` first.
pub fn iterate(model: &DisorderModel, start: ValueTable, count: usize) -> Result<Vec<ValueTable>> {
    let mut out = Vec::with_capacity(count + 1);
    out.push(start);
    for _ in 0..count {
        let next = bellman_step(model, out.last().expect("non-empty"))?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub table: ValueTable,
    pub iterations: usize,
    /// Sup-norm change of the final step.
    pub residual: f64,
    /// Bound on the sup-norm distance to the fixed point, `p/(1-p) * residual`.
    pub certified_error: f64,
}

/// Fixed point of the operator, certified to `tolerance` in sup norm.
pub fn solve_rstar(model: &DisorderModel, tolerance: f64, max_iters: usize) -> Result<Solution> {
    solve_rstar_from(model, seed_table(model)?, tolerance, max_iters)
}

pub fn solve_rstar_from(
    model: &DisorderModel,
    start: ValueTable,
    tolerance: f64,
    max_iters: usize,
) -> Result<Solution> {
    if !(tolerance > 0.0) {
        return Err(DisorderError::InvalidInput(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    start.check_model(model)?;
    let p = model.p();
    // the operator contracts with modulus p
    let stop_below = tolerance * (1.0 - p) / p;
    let mut current = start;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iters {
        let next = bellman_step(model, &current)?;
        residual = next.sup_distance(&current);
        current = next;
        if residual < stop_below {
            return Ok(Solution {
                table: current,
                iterations: it,
                residual,
                certified_error: residual * p / (1.0 - p),
            });
        }
    }
    Err(DisorderError::NonConvergence {
        iterations: max_iters,
        residual,
    })
}

/// Stop at window `x_(n-d-1)..x_n` iff the statistic reaches `r(x_(n-d)..x_n)`.
pub fn stop_decision(model: &DisorderModel, rstar: &ValueTable, window: &[usize]) -> Result<bool> {
    rstar.check_model(model)?;
    let stat = statistic(model, window)?;
    Ok(stat.q_free() >= rstar.get(&window[1..]))
}

/// Optimal value `P(|theta - tau*| <= d)` from the initial state.
///
/// Sums over all `(d+1)`-tuples `x_1..x_(d+1)` following `x0`:
/// `q p^(d+1) L_0 max{stat, r}` written as
/// `q max{p^(d+1) L_0 A + sum_m p^(d+1-m) L_m, p^(d+1) L_0 r}`.
pub fn value_at_start(model: &DisorderModel, rstar: &ValueTable) -> Result<f64> {
    rstar.check_model(model)?;
    let d = model.d();
    let (p, q) = (model.p(), model.q());
    let a = (1.0 - p.powi(d as i32)) / q;
    let mut window = vec![0; d + 2];
    window[0] = model.x0();
    let mut total = 0.0;
    for i in 0..rstar.len() {
        let tuple = rstar.tuple_of(i);
        window[1..].copy_from_slice(&tuple);
        let mut weighted = 0.0;
        for m in 1..=d + 1 {
            weighted += p.powi((d + 1 - m) as i32) * crate::likelihood::l_unchecked(model, &window, m);
        }
        let w0 = p.powi(d as i32 + 1) * crate::likelihood::l_unchecked(model, &window, 0);
        let stop = w0 * a + weighted;
        let cont = mul0(w0, rstar.values[i]);
        total += stop.max(cont);
    }
    Ok(q * total)
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    /// Stop when the detection statistic reaches the tabulated threshold.
    Threshold(ValueTable),
    /// Stop when the posterior `Pi_n` reaches the level.
    PosteriorThreshold(f64),
    /// Stop at a fixed time.
    FixedTime(usize),
}

/// A stopping rule. No rule stops before time `d + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub id: String,
    pub kind: PolicyKind,
}

impl Policy {
    pub fn optimal(rstar: ValueTable) -> Self {
        Self {
            id: "optimal".into(),
            kind: PolicyKind::Threshold(rstar),
        }
    }

    pub fn threshold(id: impl Into<String>, table: ValueTable) -> Self {
        Self {
            id: id.into(),
            kind: PolicyKind::Threshold(table),
        }
    }

    /// Threshold rule with `r = 0`: stops at `d + 1`.
    pub fn all_stop(model: &DisorderModel) -> Result<Self> {
        Ok(Self::threshold("all-stop", ValueTable::zeros(model.k(), model.d())?))
    }

    pub fn posterior(level: f64) -> Self {
        Self {
            id: format!("posterior:{level}"),
            kind: PolicyKind::PosteriorThreshold(level),
        }
    }

    pub fn fixed_time(t: usize) -> Self {
        Self {
            id: format!("fixed:{t}"),
            kind: PolicyKind::FixedTime(t),
        }
    }

    /// Whether a threshold table's dimensions match the model.
    pub fn check(&self, model: &DisorderModel) -> Result<()> {
        match &self.kind {
            PolicyKind::Threshold(t) => t.check_model(model),
            PolicyKind::PosteriorThreshold(c) if !(0.0..=1.0).contains(c) => Err(
                DisorderError::InvalidInput(format!("posterior level {c} outside [0,1]")),
            ),
            _ => Ok(()),
        }
    }

    /// Decision at time `n` given the last `min(n, d+1) + 1` states and `Pi_n`.
    pub fn decide(&self, model: &DisorderModel, n: usize, window: &[usize], pi: f64) -> bool {
        let d = model.d();
        if n < d + 1 {
            return false;
        }
        match &self.kind {
            PolicyKind::Threshold(table) => {
                window_statistic(model, window) >= table.get(&window[1..])
            }
            PolicyKind::PosteriorThreshold(level) => pi >= *level,
            PolicyKind::FixedTime(t) => n >= (*t).max(d + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopOutcome {
    Stopped(usize),
    /// The rule did not stop within the trajectory.
    Censored,
}

pub fn run_policy(model: &DisorderModel, policy: &Policy, trajectory: &Trajectory) -> Result<StopOutcome> {
    policy.check(model)?;
    let states = &trajectory.states;
    if states.len() < model.d() + 2 {
        return Err(DisorderError::InvalidInput(format!(
            "trajectory with {} states is shorter than d + 2 = {}",
            states.len(),
            model.d() + 2
        )));
    }
    if states[0] != model.x0() {
        return Err(DisorderError::InvalidInput(
            "trajectory does not start at the model's initial state".into(),
        ));
    }
    if let PolicyKind::FixedTime(t) = policy.kind {
        let tau = t.max(model.d() + 1);
        return Ok(if tau < states.len() {
            StopOutcome::Stopped(tau)
        } else {
            StopOutcome::Censored
        });
    }
    let mut state = WindowState::start(model);
    for &x in &states[1..] {
        state = state.push(model, x)?;
        if state.is_full() && policy.decide(model, state.n(), &state.window(), state.pi()) {
            return Ok(StopOutcome::Stopped(state.n()));
        }
    }
    Ok(StopOutcome::Censored)
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
    fn payoff_examples() {
        let m = reference(0.5);
        assert_eq!(payoff_h(&m, &[0, 1], 1.0).unwrap(), 0.0);
        assert!((payoff_h(&m, &[0, 0], 0.0).unwrap() - 7.0).abs() < 1e-12);
        assert!(payoff_h(&m, &[0, 0, 0], 0.0).is_err());
    }

    #[test]
    fn seed_is_one_for_d_zero() {
        let t = seed_table(&reference(0.7)).unwrap();
        assert!(t.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn identical_kernels_fixed_point_is_one() {
        let rows = vec![vec![0.3, 0.7], vec![0.6, 0.4]];
        for p in [0.2, 0.5, 0.9] {
            let m = DisorderModel::from_rows(&rows, &rows, p, 0, 0).unwrap();
            let s = solve_rstar(&m, 1e-12, 100_000).unwrap();
            assert!(s.table.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
            let v = value_at_start(&m, &s.table).unwrap();
            assert!((v - (1.0 - p)).abs() < 1e-12);
        }
    }

    #[test]
    fn iteration_reaches_closed_form_at_p_060() {
        let p = 0.6;
        let s = solve_rstar(&reference(p), 1e-12, 100_000).unwrap();
        let den = 50.0 - 36.0 * p * p;
        assert!((s.table.get(&[0]) - (35.0 + 27.0 * p) / den).abs() < 1e-10);
        assert!((s.table.get(&[1]) - (30.0 + 28.0 * p) / den).abs() < 1e-10);
        assert!(s.certified_error <= 1e-12);
    }

    #[test]
    fn zero_start_reaches_same_fixed_point() {
        let m = reference(0.8).with_d(1);
        let a = solve_rstar(&m, 1e-11, 100_000).unwrap();
        let b = solve_rstar_from(&m, ValueTable::zeros(2, 1).unwrap(), 1e-11, 100_000).unwrap();
        assert!(a.table.sup_distance(&b.table) < 1e-10);
    }

    #[test]
    fn non_convergence_is_reported() {
        let err = solve_rstar(&reference(0.99), 1e-14, 3).unwrap_err();
        assert!(matches!(err, DisorderError::NonConvergence { iterations: 3, .. }));
        assert!(solve_rstar(&reference(0.5), 0.0, 10).is_err());
    }

    #[test]
    fn capacity_limit() {
        assert!(matches!(ValueTable::zeros(10, 6), Err(DisorderError::Capacity(_))));
        assert!(ValueTable::zeros(10, 5).is_ok());
    }

    #[test]
    fn table_indexing_roundtrip() {
        let t = ValueTable::zeros(3, 2).unwrap();
        for i in 0..t.len() {
            assert_eq!(t.index_of(&t.tuple_of(i)), i);
        }
        assert_eq!(t.tuple_of(5), vec![0, 1, 2]);
    }

    #[test]
    fn decisions_at_p_096() {
        let m = reference(0.96);
        let s = solve_rstar(&m, 1e-12, 1_000_000).unwrap();
        assert!(stop_decision(&m, &s.table, &[0, 0]).unwrap());
        assert!(!stop_decision(&m, &s.table, &[0, 1]).unwrap());
    }

    #[test]
    fn infinite_statistic_always_stops() {
        let m = DisorderModel::from_rows(
            &[vec![1.0, 0.0], vec![0.5, 0.5]],
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            0.9,
            0,
            0,
        )
        .unwrap();
        let s = solve_rstar(&m, 1e-10, 100_000).unwrap();
        assert!(s.table.values().iter().all(|v| v.is_finite()));
        assert!(stop_decision(&m, &s.table, &[0, 1]).unwrap());
        let huge = ValueTable::from_values(2, 0, vec![1e300, 1e300]).unwrap();
        assert!(stop_decision(&m, &huge, &[0, 1]).unwrap());
    }

    #[test]
    fn fixed_time_is_floored_at_d_plus_one() {
        let m = reference(0.5).with_d(2);
        let traj = Trajectory {
            theta: 4,
            states: vec![0, 1, 0, 1, 1, 0, 0],
        };
        assert_eq!(run_policy(&m, &Policy::fixed_time(1), &traj).unwrap(), StopOutcome::Stopped(3));
        assert_eq!(run_policy(&m, &Policy::fixed_time(5), &traj).unwrap(), StopOutcome::Stopped(5));
        assert_eq!(run_policy(&m, &Policy::fixed_time(9), &traj).unwrap(), StopOutcome::Censored);
        let all = Policy::all_stop(&m).unwrap();
        assert_eq!(run_policy(&m, &all, &traj).unwrap(), StopOutcome::Stopped(3));
    }

    #[test]
    fn optimal_rule_waits_for_double_zero_at_p_096() {
        let m = reference(0.96);
        let s = solve_rstar(&m, 1e-12, 1_000_000).unwrap();
        let traj = Trajectory {
            theta: 2,
            states: vec![0, 1, 0, 0, 1, 1],
        };
        assert_eq!(
            run_policy(&m, &Policy::optimal(s.table), &traj).unwrap(),
            StopOutcome::Stopped(3)
        );
    }

    #[test]
    fn short_trajectory_rejected() {
        let m = reference(0.5).with_d(3);
        let traj = Trajectory {
            theta: 1,
            states: vec![0, 1, 0],
        };
        assert!(run_policy(&m, &Policy::fixed_time(1), &traj).is_err());
    }
}
