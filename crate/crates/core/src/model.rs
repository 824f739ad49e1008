//! The switched Markov process: two transition kernels over a finite state
//! space, a geometric prior on the switch time, and trajectory sampling.
//!
//! Before the disorder moment `theta` the chain moves with the pre-change
//! kernel; the transition into `X_theta` and every later one uses the
//! post-change kernel, starting from the state the chain was in at
//! `theta - 1`. The switch time is independent of both chains.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DisorderError, Result};

/// Tolerance on row sums of a transition table.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    EmptyStateSpace,
    DuplicateLabel,
    DimensionMismatch,
    NegativeEntry,
    RowSum,
    PriorOutOfRange,
    InitialStateOutOfRange,
    UndefinedRatio,
}

/// A single violated model invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl Diagnostic {
    fn new(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// On-disk model description.
///
/// ```json
/// {
///   "states": ["0", "1"],
///   "pre":  [[0.1, 0.9], [0.8, 0.2]],
///   "post": [[0.7, 0.3], [0.4, 0.6]],
///   "p": 0.5,
///   "d": 0,
///   "x0": 0
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
    pub p: f64,
    pub d: usize,
    pub x0: usize,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the canonical (compact) JSON encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("model file is always serializable");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Checks every model invariant and returns one diagnostic per violation.
pub fn validate(file: &ModelFile) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let k = file.states.len();
    if k == 0 {
        out.push(Diagnostic::new(
            DiagnosticKind::EmptyStateSpace,
            "state space is empty",
        ));
    }
    let mut seen = HashSet::new();
    for label in &file.states {
        if !seen.insert(label.as_str()) {
            out.push(Diagnostic::new(
                DiagnosticKind::DuplicateLabel,
                format!("duplicate state label {label:?}"),
            ));
        }
    }
    for (name, rows) in [("pre", &file.pre), ("post", &file.post)] {
        check_kernel(name, rows, k, &mut out);
    }
    if !(file.p > 0.0 && file.p < 1.0) {
        out.push(Diagnostic::new(
            DiagnosticKind::PriorOutOfRange,
            format!("prior parameter out of (0,1): p = {}", file.p),
        ));
    }
    if file.x0 >= k {
        out.push(Diagnostic::new(
            DiagnosticKind::InitialStateOutOfRange,
            format!("initial state {} out of range for {k} states", file.x0),
        ));
    }
    out
}

fn check_kernel(name: &str, rows: &[Vec<f64>], k: usize, out: &mut Vec<Diagnostic>) {
    if rows.len() != k {
        out.push(Diagnostic::new(
            DiagnosticKind::DimensionMismatch,
            format!("{name} kernel has {} rows, expected {k}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            out.push(Diagnostic::new(
                DiagnosticKind::DimensionMismatch,
                format!("{name} kernel row {i} has {} entries, expected {k}", row.len()),
            ));
        }
        if let Some(j) = row.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            out.push(Diagnostic::new(
                DiagnosticKind::NegativeEntry,
                format!("{name} kernel entry ({i},{j}) = {} is not a probability", row[j]),
            ));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            out.push(Diagnostic::new(
                DiagnosticKind::RowSum,
                format!("{name} kernel row {i} sums to {sum}"),
            ));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(DisorderError::InvalidInput("state space is empty".into()));
        }
        let unique: HashSet<_> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(DisorderError::InvalidInput("state labels are not unique".into()));
        }
        Ok(Self { labels })
    }

    /// States labelled `"0"`, `"1"`, ... `"k-1"`.
    pub fn numbered(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| i.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Row-stochastic transition table, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    k: usize,
    probs: Vec<f64>,
}

impl MarkovKernel {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let mut diags = Vec::new();
        check_kernel("kernel", rows, k, &mut diags);
        if k == 0 {
            diags.push(Diagnostic::new(DiagnosticKind::EmptyStateSpace, "kernel is empty"));
        }
        if !diags.is_empty() {
            return Err(DisorderError::InvalidModel(diags));
        }
        Ok(Self {
            k,
            probs: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[from * self.k + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.probs[from * self.k..(from + 1) * self.k]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    /// Draws the next state from row `from` using a single uniform variate.
    pub fn sample_next<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let row = self.row(from);
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (j, &w) in row.iter().enumerate() {
            if w > 0.0 {
                last_positive = j;
                acc += w;
                if u < acc {
                    return j;
                }
            }
        }
        last_positive
    }
}

/// Geometric law of the disorder moment: `P(theta = j) = p^(j-1) q`, `j >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricPrior {
    p: f64,
    q: f64,
}

impl GeometricPrior {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DisorderError::InvalidModel(vec![Diagnostic::new(
                DiagnosticKind::PriorOutOfRange,
                format!("prior parameter out of (0,1): p = {p}"),
            )]));
        }
        Ok(Self { p, q: 1.0 - p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `P(theta = j)`.
    pub fn pmf(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.p.powi(j as i32 - 1) * self.q
        }
    }

    /// `P(theta > j) = p^j`.
    pub fn tail(&self, j: usize) -> f64 {
        self.p.powi(j as i32)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        // number of failures before the first success, success probability q
        let failures = Geometric::new(self.q)
            .expect("q lies in (0,1)")
            .sample(rng);
        usize::try_from(failures).unwrap_or(usize::MAX - 1) + 1
    }
}

/// Draws the disorder moment from a dedicated generator seeded with `seed`.
pub fn sample_theta(prior: &GeometricPrior, seed: u64) -> usize {
    prior.sample(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Generator for trial `index` of a run with master seed `master`.
///
/// Every trial uses the ChaCha8 generator keyed by `master` (expanded through
/// `seed_from_u64`) on its own stream `index`, so trials are independent,
/// can be evaluated in any order, and reproduce bit for bit.
pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Ratios `post[i][j] / pre[i][j]` of the two kernels.
///
/// A pair with `pre = 0 < post` holds `+inf`; a pair where both kernels
/// vanish holds `NaN` and is listed in [`LikelihoodRatioTable::undefined_pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodRatioTable {
    k: usize,
    ratios: Vec<f64>,
    diagnostics: Vec<Diagnostic>,
}

impl LikelihoodRatioTable {
    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.ratios[from * self.k + to]
    }

    /// Ratio with the undefined `0/0` case mapped to zero. Such a transition
    /// is never observed, so any finite value gives the same results.
    #[inline]
    pub fn effective(&self, from: usize, to: usize) -> f64 {
        let r = self.get(from, to);
        if r.is_nan() {
            0.0
        } else {
            r
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.ratios.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    pub fn undefined_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.k)
            .flat_map(|i| (0..self.k).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j).is_nan())
            .collect()
    }

    /// Undefined pairs whose source state can be visited from the initial state.
    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }
}

/// The complete disorder problem: kernels, prior, detection window `d` and
/// initial state `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderModel {
    space: StateSpace,
    pre: MarkovKernel,
    post: MarkovKernel,
    prior: GeometricPrior,
    d: usize,
    x0: usize,
    ratios: LikelihoodRatioTable,
}

impl DisorderModel {
    pub fn new(
        space: StateSpace,
        pre: MarkovKernel,
        post: MarkovKernel,
        prior: GeometricPrior,
        d: usize,
        x0: usize,
    ) -> Result<Self> {
        let k = space.size();
        if pre.size() != k || post.size() != k {
            return Err(DisorderError::InvalidModel(vec![Diagnostic::new(
                DiagnosticKind::DimensionMismatch,
                format!(
                    "kernel sizes {}x{} and {}x{} do not match {k} states",
                    pre.size(),
                    pre.size(),
                    post.size(),
                    post.size()
                ),
            )]));
        }
        if x0 >= k {
            return Err(DisorderError::InvalidModel(vec![Diagnostic::new(
                DiagnosticKind::InitialStateOutOfRange,
                format!("initial state {x0} out of range for {k} states"),
            )]));
        }
        let ratios = build_ratios(&pre, &post, x0);
        Ok(Self {
            space,
            pre,
            post,
            prior,
            d,
            x0,
            ratios,
        })
    }

    /// Convenience constructor with numbered states.
    pub fn from_rows(
        pre: &[Vec<f64>],
        post: &[Vec<f64>],
        p: f64,
        d: usize,
        x0: usize,
    ) -> Result<Self> {
        Self::from_file(&ModelFile {
            states: (0..pre.len()).map(|i| i.to_string()).collect(),
            pre: pre.to_vec(),
            post: post.to_vec(),
            p,
            d,
            x0,
        })
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        let diags = validate(file);
        if !diags.is_empty() {
            return Err(DisorderError::InvalidModel(diags));
        }
        Self::new(
            StateSpace::new(file.states.clone())?,
            MarkovKernel::from_rows(&file.pre)?,
            MarkovKernel::from_rows(&file.post)?,
            GeometricPrior::new(file.p)?,
            file.d,
            file.x0,
        )
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            states: self.space.labels().to_vec(),
            pre: self.pre.rows(),
            post: self.post.rows(),
            p: self.prior.p(),
            d: self.d,
            x0: self.x0,
        }
    }

    pub fn content_hash(&self) -> String {
        self.to_file().content_hash()
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        let mut m = self.clone();
        m.prior = GeometricPrior::new(p)?;
        Ok(m)
    }

    pub fn with_d(&self, d: usize) -> Self {
        let mut m = self.clone();
        m.d = d;
        m
    }

    pub fn with_x0(&self, x0: usize) -> Result<Self> {
        Self::new(
            self.space.clone(),
            self.pre.clone(),
            self.post.clone(),
            self.prior,
            self.d,
            x0,
        )
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn k(&self) -> usize {
        self.space.size()
    }

    pub fn pre(&self) -> &MarkovKernel {
        &self.pre
    }

    pub fn post(&self) -> &MarkovKernel {
        &self.post
    }

    pub fn prior(&self) -> &GeometricPrior {
        &self.prior
    }

    pub fn p(&self) -> f64 {
        self.prior.p()
    }

    pub fn q(&self) -> f64 {
        self.prior.q()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn x0(&self) -> usize {
        self.x0
    }

    pub fn ratios(&self) -> &LikelihoodRatioTable {
        &self.ratios
    }

    /// Diagnostics for a constructed model; empty unless some `0/0` ratio
    /// sits on a state reachable from `x0`.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut d = validate(&self.to_file());
        d.extend(self.ratios.diagnostics().iter().cloned());
        d
    }
}

/// Elementwise ratio table of the model's kernels.
pub fn likelihood_ratios(model: &DisorderModel) -> LikelihoodRatioTable {
    model.ratios.clone()
}

fn build_ratios(pre: &MarkovKernel, post: &MarkovKernel, x0: usize) -> LikelihoodRatioTable {
    let k = pre.size();
    let mut ratios = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let (a, b) = (pre.prob(i, j), post.prob(i, j));
            ratios.push(if a > 0.0 {
                b / a
            } else if b > 0.0 {
                f64::INFINITY
            } else {
                f64::NAN
            });
        }
    }
    // states visited with positive probability under either kernel
    let mut reachable = vec![false; k];
    let mut stack = vec![x0];
    reachable[x0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..k {
            if !reachable[j] && (pre.prob(i, j) > 0.0 || post.prob(i, j) > 0.0) {
                reachable[j] = true;
                stack.push(j);
            }
        }
    }
    let diagnostics = (0..k)
        .filter(|&i| reachable[i])
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|&(i, j)| ratios[i * k + j].is_nan())
        .map(|(i, j)| {
            Diagnostic::new(
                DiagnosticKind::UndefinedRatio,
                format!("transition {i} -> {j} has zero probability under both kernels"),
            )
        })
        .collect();
    LikelihoodRatioTable {
        k,
        ratios,
        diagnostics,
    }
}

/// A contiguous piece `x_k, ..., x_n` of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathSegment<'a> {
    states: &'a [usize],
    offset: usize,
}

impl<'a> PathSegment<'a> {
    pub fn new(states: &'a [usize], offset: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(DisorderError::InvalidInput("empty path segment".into()));
        }
        Ok(Self { states, offset })
    }

    pub fn states(&self) -> &'a [usize] {
        self.states
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Time index of the last state.
    pub fn end(&self) -> usize {
        self.offset + self.states.len() - 1
    }
}

/// A sampled path `X_0, ..., X_T` together with its hidden switch time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub theta: usize,
    pub states: Vec<usize>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    /// States `x_k..=x_n`.
    pub fn segment(&self, k: usize, n: usize) -> Result<PathSegment<'_>> {
        if k > n || n >= self.states.len() {
            return Err(DisorderError::IndexOutOfRange(format!(
                "segment {k}..={n} of a path with {} states",
                self.states.len()
            )));
        }
        PathSegment::new(&self.states[k..=n], k)
    }
}

/// Samples `theta` and then `X_1..X_T` step by step from `rng`.
///
/// States are drawn sequentially, so for a fixed generator a longer horizon
/// extends a shorter one.
pub fn sample_trajectory_with<R: Rng + ?Sized>(
    model: &DisorderModel,
    horizon: usize,
    rng: &mut R,
) -> Trajectory {
    let theta = model.prior.sample(rng);
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(model.x0);
    let mut x = model.x0;
    for n in 1..=horizon {
        let kernel = if n < theta { &model.pre } else { &model.post };
        x = kernel.sample_next(x, rng);
        states.push(x);
    }
    Trajectory { theta, states }
}

pub fn sample_trajectory(model: &DisorderModel, horizon: usize, seed: u64) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(DisorderError::InvalidInput("horizon must be at least 1".into()));
    }
    Ok(sample_trajectory_with(
        model,
        horizon,
        &mut ChaCha8Rng::seed_from_u64(seed),
    ))
}
