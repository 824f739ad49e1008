//! Evaluation of stopping rules: exact enumeration over paths, a forward
//! mass recursion for rules that only look at the recent window, and Monte
//! Carlo simulation.
//!
//! In every method a rule that has not stopped by the horizon scores as a
//! failure. The success mass such a run could still have collected is at
//! most `P(theta > T - d) = p^(T-d)`, reported as `truncation_bound`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DisorderError, Result};
use crate::model::{sample_trajectory_with, trial_rng, DisorderModel};
use crate::posterior::pi_step;
use crate::stopping::{run_policy, Policy, PolicyKind, StopOutcome, ValueTable};

/// Largest number of length-`T` paths [`evaluate_exact`] will enumerate.
pub const MAX_ENUMERATED_PATHS: u64 = 1 << 24;

pub const DEFAULT_SIM_HORIZON: usize = 60;
pub const DEFAULT_EXACT_HORIZON: usize = 20;

/// Two-sided normal quantiles for 95% and 99.9% intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;
pub const Z_999: f64 = 3.290_526_731_491_926;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    WindowRecursion,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub policy_id: String,
    pub method: Method,
    /// Success probability `P(|theta - tau| <= d)` with censored runs as failures.
    pub estimate: f64,
    /// Half-width of the 95% Wilson interval; zero for exact methods.
    pub ci_halfwidth: f64,
    /// Enumerated leaves (exact) or simulated trials.
    pub n_paths: u64,
    /// Monte Carlo successes; zero for exact methods.
    pub successes: u64,
    pub censor_rate: f64,
    pub truncation_bound: f64,
    /// Total probability of all enumerated leaves; 1 for Monte Carlo.
    pub covered_mass: f64,
}

impl EvaluationResult {
    /// Wilson interval of a Monte Carlo result at normal quantile `z`.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.successes, self.n_paths, z)
    }
}

/// Wilson score interval for `successes` out of `n`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let phat = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (phat + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

fn truncation_bound(model: &DisorderModel, horizon: usize) -> f64 {
    model.prior().tail(horizon.saturating_sub(model.d()))
}

fn check_horizon(model: &DisorderModel, horizon: usize) -> Result<()> {
    if horizon < model.d() + 1 {
        return Err(DisorderError::InvalidInput(format!(
            "horizon {horizon} is below d + 1 = {}",
            model.d() + 1
        )));
    }
    Ok(())
}

/// Largest horizon whose path count stays within [`MAX_ENUMERATED_PATHS`].
pub fn max_exact_horizon(k: usize) -> usize {
    if k <= 1 {
        return usize::MAX;
    }
    let mut t = 0;
    let mut count: u64 = 1;
    while let Some(next) = count.checked_mul(k as u64) {
        if next > MAX_ENUMERATED_PATHS {
            break;
        }
        count = next;
        t += 1;
    }
    t
}

/// Joint probabilities of a path prefix with the switch time.
#[derive(Clone)]
struct PrefixMass {
    /// `P(prefix, theta = n - c)` for `c = 0..=min(d, n-1)`, most recent first.
    recent: Vec<f64>,
    /// `P(prefix, theta < n - d)`.
    older: f64,
    /// `P(prefix, theta > n)`.
    pending: f64,
}

impl PrefixMass {
    fn total(&self) -> f64 {
        self.recent.iter().sum::<f64>() + self.older + self.pending
    }

    fn advance(&self, model: &DisorderModel, from: usize, to: usize) -> PrefixMass {
        let (w0, w1) = (model.pre().prob(from, to), model.post().prob(from, to));
        let d = model.d();
        let mut recent = Vec::with_capacity(d + 1);
        recent.push(self.pending * model.q() * w1);
        recent.extend(self.recent.iter().map(|a| a * w1));
        let mut older = self.older * w1;
        if recent.len() > d + 1 {
            older += recent.pop().expect("non-empty");
        }
        PrefixMass {
            recent,
            older,
            pending: self.pending * model.p() * w0,
        }
    }

    /// `P(prefix, |theta - n| <= d)`.
    fn success(&self, model: &DisorderModel) -> f64 {
        let d = model.d();
        self.recent.iter().sum::<f64>() + self.pending * (1.0 - model.p().powi(d as i32))
    }

    fn posterior(&self) -> f64 {
        let total = self.total();
        1.0 - self.pending / total
    }
}

#[derive(Default)]
struct Tally {
    success: f64,
    censored: f64,
    covered: f64,
    leaves: u64,
}

struct Enumerator<'a> {
    model: &'a DisorderModel,
    policy: &'a Policy,
    horizon: usize,
    window: Vec<usize>,
}

impl Enumerator<'_> {
    fn explore(&mut self, n: usize, pi: f64, mass: &PrefixMass, tally: &mut Tally) {
        let d = self.model.d();
        let window_len = self.window.len().min(d + 2);
        let window = &self.window[self.window.len() - window_len..];
        if n >= d + 1 && self.policy.decide(self.model, n, window, pi) {
            let total = mass.total();
            tally.success += mass.success(self.model);
            tally.covered += total;
            tally.leaves += 1;
            return;
        }
        if n == self.horizon {
            let total = mass.total();
            tally.censored += total;
            tally.covered += total;
            tally.leaves += 1;
            return;
        }
        let from = *self.window.last().expect("path is never empty");
        for to in 0..self.model.k() {
            let next = mass.advance(self.model, from, to);
            if next.total() == 0.0 {
                continue;
            }
            let next_pi = match pi_step(self.model, pi, from, to) {
                Ok(v) => v,
                Err(_) => next.posterior(),
            };
            self.window.push(to);
            self.explore(n + 1, next_pi, &next, tally);
            self.window.pop();
        }
    }
}

/// Exact success probability of `policy` by enumerating every path up to
/// `horizon` jointly with the switch time.
///
/// A branch ends where the rule stops; at that point the switch-time mass
/// inside `[n - d, n + d]` is added in closed form.
pub fn evaluate_exact(model: &DisorderModel, policy: &Policy, horizon: usize) -> Result<EvaluationResult> {
    policy.check(model)?;
    check_horizon(model, horizon)?;
    let cap = max_exact_horizon(model.k());
    if horizon > cap {
        return Err(DisorderError::Capacity(format!(
            "{}^{horizon} paths exceed the enumeration limit of 2^24; use a horizon of at most {cap}",
            model.k()
        )));
    }
    let mut e = Enumerator {
        model,
        policy,
        horizon,
        window: vec![model.x0()],
    };
    let root = PrefixMass {
        recent: Vec::new(),
        older: 0.0,
        pending: 1.0,
    };
    let mut tally = Tally::default();
    e.explore(0, 0.0, &root, &mut tally);
    Ok(EvaluationResult {
        policy_id: policy.id.clone(),
        method: Method::Exact,
        estimate: tally.success,
        ci_halfwidth: 0.0,
        n_paths: tally.leaves,
        successes: 0,
        censor_rate: tally.censored,
        truncation_bound: truncation_bound(model, horizon),
        covered_mass: tally.covered,
    })
}

/// Exact success probability of a rule that depends only on the last
/// `d + 2` states (threshold tables and fixed times), by propagating the
/// joint law of (window, switch-time category) forward in time.
///
/// The cost grows linearly in the horizon, so horizons in the thousands make
/// the truncation error negligible.
pub fn evaluate_window_recursion(
    model: &DisorderModel,
    policy: &Policy,
    horizon: usize,
) -> Result<EvaluationResult> {
    policy.check(model)?;
    check_horizon(model, horizon)?;
    if matches!(policy.kind, PolicyKind::PosteriorThreshold(_)) {
        return Err(DisorderError::InvalidInput(
            "posterior rules depend on the whole path; use exact enumeration or simulation".into(),
        ));
    }
    let d = model.d();
    let mut layer: BTreeMap<Vec<usize>, PrefixMass> = BTreeMap::new();
    layer.insert(
        vec![model.x0()],
        PrefixMass {
            recent: Vec::new(),
            older: 0.0,
            pending: 1.0,
        },
    );
    let (mut success, mut covered) = (0.0, 0.0);
    for n in 1..=horizon {
        let mut next: BTreeMap<Vec<usize>, PrefixMass> = BTreeMap::new();
        for (window, mass) in &layer {
            let from = *window.last().expect("non-empty");
            for to in 0..model.k() {
                let m = mass.advance(model, from, to);
                if m.total() == 0.0 {
                    continue;
                }
                let mut w = window.clone();
                w.push(to);
                if w.len() > d + 2 {
                    w.remove(0);
                }
                match next.get_mut(&w) {
                    Some(acc) => {
                        for (a, b) in acc.recent.iter_mut().zip(&m.recent) {
                            *a += b;
                        }
                        acc.older += m.older;
                        acc.pending += m.pending;
                    }
                    None => {
                        next.insert(w, m);
                    }
                }
            }
        }
        next.retain(|window, mass| {
            // pi is not used by window rules
            if n >= d + 1 && policy.decide(model, n, window, f64::NAN) {
                success += mass.success(model);
                covered += mass.total();
                false
            } else {
                true
            }
        });
        layer = next;
    }
    let censored: f64 = layer.values().map(PrefixMass::total).sum();
    Ok(EvaluationResult {
        policy_id: policy.id.clone(),
        method: Method::WindowRecursion,
        estimate: success,
        ci_halfwidth: 0.0,
        n_paths: 0,
        successes: 0,
        censor_rate: censored,
        truncation_bound: truncation_bound(model, horizon),
        covered_mass: covered + censored,
    })
}

/// Monte Carlo estimate from `n_trials` independent trajectories.
///
/// Trial `i` draws from [`trial_rng`]`(master_seed, i)`, so the result does
/// not depend on thread scheduling.
pub fn evaluate_mc(
    model: &DisorderModel,
    policy: &Policy,
    n_trials: u64,
    horizon: usize,
    master_seed: u64,
) -> Result<EvaluationResult> {
    policy.check(model)?;
    check_horizon(model, horizon)?;
    if n_trials == 0 {
        return Err(DisorderError::InvalidInput("at least one trial is required".into()));
    }
    let d = model.d();
    let (successes, censored) = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(master_seed, i);
            let traj = sample_trajectory_with(model, horizon, &mut rng);
            match run_policy(model, policy, &traj) {
                Ok(StopOutcome::Stopped(tau)) => (u64::from(traj.theta.abs_diff(tau) <= d), 0),
                Ok(StopOutcome::Censored) => (0, 1),
                Err(_) => (0, 0),
            }
        })
        .reduce(|| (0u64, 0u64), |a, b| (a.0 + b.0, a.1 + b.1));
    let (lo, hi) = wilson_interval(successes, n_trials, Z_95);
    Ok(EvaluationResult {
        policy_id: policy.id.clone(),
        method: Method::MonteCarlo,
        estimate: successes as f64 / n_trials as f64,
        ci_halfwidth: (hi - lo) / 2.0,
        n_paths: n_trials,
        successes,
        censor_rate: censored as f64 / n_trials as f64,
        truncation_bound: truncation_bound(model, horizon),
        covered_mass: 1.0,
    })
}

/// Rules that the optimal rule is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitorFamily {
    pub posterior_levels: Vec<f64>,
    pub fixed_times: Vec<usize>,
    /// Multipliers applied to the optimal thresholds.
    pub threshold_scales: Vec<f64>,
}

impl CompetitorFamily {
    /// Posterior levels 0.1..0.9, fixed times 1..=15 and thresholds scaled
    /// by 0.8, 0.95, 1.05 and 1.2.
    pub fn standard() -> Self {
        Self {
            posterior_levels: (1..=9).map(|i| i as f64 / 10.0).collect(),
            fixed_times: (1..=15).collect(),
            threshold_scales: vec![0.8, 0.95, 1.05, 1.2],
        }
    }

    pub fn policies(&self, rstar: &ValueTable) -> Vec<Policy> {
        let mut out: Vec<Policy> = self
            .posterior_levels
            .iter()
            .map(|&c| Policy::posterior(c))
            .collect();
        out.extend(self.fixed_times.iter().map(|&t| Policy::fixed_time(t)));
        out.extend(
            self.threshold_scales
                .iter()
                .map(|&s| Policy::threshold(format!("optimal*{s}"), rstar.scaled(s))),
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dominant,
    Dominated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub optimal: EvaluationResult,
    pub competitors: Vec<EvaluationResult>,
    pub slack: f64,
    pub verdict: Verdict,
}

impl DominanceReport {
    /// Competitors that beat the optimal rule by more than the slack.
    pub fn violations(&self) -> Vec<&EvaluationResult> {
        self.competitors
            .iter()
            .filter(|c| c.estimate > self.optimal.estimate + self.slack)
            .collect()
    }
}

/// Exact evaluation of the optimal rule and every competitor.
pub fn dominance_sweep(
    model: &DisorderModel,
    rstar: &ValueTable,
    family: &CompetitorFamily,
    horizon: usize,
) -> Result<DominanceReport> {
    let optimal = evaluate_exact(model, &Policy::optimal(rstar.clone()), horizon)?;
    let competitors = family
        .policies(rstar)
        .par_iter()
        .map(|p| evaluate_exact(model, p, horizon))
        .collect::<Result<Vec<_>>>()?;
    let slack = optimal.truncation_bound + 1e-10;
    let verdict = if competitors
        .iter()
        .all(|c| optimal.estimate >= c.estimate - slack)
    {
        Verdict::Dominant
    } else {
        Verdict::Dominated
    };
    Ok(DominanceReport {
        optimal,
        competitors,
        slack,
        verdict,
    })
}

fn policy_params(id: &str) -> (&str, &str) {
    match id.split_once(':') {
        Some((kind, param)) => (kind, param),
        None => match id.split_once('*') {
            Some((kind, scale)) => (kind, scale),
            None => (id, ""),
        },
    }
}

/// Writes `policy_id,params,estimate,ci,censor_rate,truncation_bound` rows.
pub fn write_evaluations_csv<W: Write>(rows: &[EvaluationResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy_id", "params", "estimate", "ci", "censor_rate", "truncation_bound"])?;
    for r in rows {
        let (kind, params) = policy_params(&r.policy_id);
        w.write_record([
            kind.to_string(),
            params.to_string(),
            format!("{:.12}", r.estimate),
            format!("{:.12}", r.ci_halfwidth),
            format!("{:.12}", r.censor_rate),
            format!("{:.12e}", r.truncation_bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}
