//! Segment likelihoods `L_m`, the joint path density `S` and the mixture
//! function `G`.
//!
//! For a segment `x_k..x_n`, `L_m` is the probability of its transitions when
//! the last `m` of them follow the post-change kernel and the earlier ones
//! follow the pre-change kernel. Empty products equal one.

use crate::error::{DisorderError, Result};
use crate::model::DisorderModel;
use crate::posterior::pi_direct;

/// Nonnegative number stored as a natural logarithm, with an explicit flag
/// for exact zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    ln: f64,
    zero: bool,
}

impl LogValue {
    pub const ONE: LogValue = LogValue {
        ln: 0.0,
        zero: false,
    };
    pub const ZERO: LogValue = LogValue {
        ln: f64::NEG_INFINITY,
        zero: true,
    };

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            Self {
                ln: v.ln(),
                zero: false,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }

    pub fn value(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.ln.exp()
        }
    }

    pub fn mul(self, other: LogValue) -> LogValue {
        if self.zero || other.zero {
            Self::ZERO
        } else {
            Self {
                ln: self.ln + other.ln,
                zero: false,
            }
        }
    }
}

/// `L_0, ..., L_T` of one segment with `T` transitions, in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentLikelihoods {
    values: Vec<LogValue>,
}

impl SegmentLikelihoods {
    /// Number of transitions in the segment.
    pub fn transitions(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, m: usize) -> Option<LogValue> {
        self.values.get(m).copied()
    }

    pub fn values(&self) -> &[LogValue] {
        &self.values
    }
}

/// All segment likelihoods in one pass, from prefix sums of pre-change log
/// probabilities and suffix sums of post-change ones.
pub fn segment_likelihoods(model: &DisorderModel, segment: &[usize]) -> Result<SegmentLikelihoods> {
    check_segment(model, segment)?;
    let t = segment.len() - 1;
    let mut prefix = vec![LogValue::ONE; t + 1];
    for r in 1..=t {
        let f = LogValue::from_value(model.pre().prob(segment[r - 1], segment[r]));
        prefix[r] = prefix[r - 1].mul(f);
    }
    let mut suffix = vec![LogValue::ONE; t + 1];
    for m in 1..=t {
        let r = t - m + 1;
        let f = LogValue::from_value(model.post().prob(segment[r - 1], segment[r]));
        suffix[m] = suffix[m - 1].mul(f);
    }
    let values = (0..=t).map(|m| prefix[t - m].mul(suffix[m])).collect();
    Ok(SegmentLikelihoods { values })
}

/// `L_m` of the segment by direct multiplication.
pub fn segment_l(model: &DisorderModel, segment: &[usize], m: usize) -> Result<f64> {
    check_segment(model, segment)?;
    let t = segment.len() - 1;
    if m > t {
        return Err(DisorderError::IndexOutOfRange(format!(
            "m = {m} exceeds the {t} transitions of the segment"
        )));
    }
    Ok(l_unchecked(model, segment, m))
}

#[inline]
pub(crate) fn l_unchecked(model: &DisorderModel, segment: &[usize], m: usize) -> f64 {
    let t = segment.len() - 1;
    let mut prod = 1.0;
    for r in 1..=t {
        let kernel = if r + m > t { model.post() } else { model.pre() };
        prod *= kernel.prob(segment[r - 1], segment[r]);
    }
    prod
}

fn check_segment(model: &DisorderModel, segment: &[usize]) -> Result<()> {
    if segment.is_empty() {
        return Err(DisorderError::InvalidInput("empty path segment".into()));
    }
    if let Some(&s) = segment.iter().find(|&&s| s >= model.k()) {
        return Err(DisorderError::IndexOutOfRange(format!(
            "state {s} outside a space of {} states",
            model.k()
        )));
    }
    Ok(())
}

/// Joint density `S` of a path `x_0..x_n` started at time zero:
/// `sum_{i=1..n} p^(i-1) q L_(n-i+1) + p^n L_0`.
pub fn joint_density(model: &DisorderModel, path: &[usize]) -> Result<f64> {
    check_segment(model, path)?;
    let n = path.len() - 1;
    let (p, q) = (model.p(), model.q());
    let mut s = p.powi(n as i32) * l_unchecked(model, path, 0);
    for i in 1..=n {
        s += p.powi(i as i32 - 1) * q * l_unchecked(model, path, n - i + 1);
    }
    Ok(s)
}

/// Mixture `G` of a segment `x_(n-l-1)..x_n` given posterior `alpha` at its
/// first state: the conditional density of the segment's transitions.
pub fn mixture_g(model: &DisorderModel, segment: &[usize], alpha: f64) -> Result<f64> {
    check_segment(model, segment)?;
    if segment.len() < 2 {
        return Err(DisorderError::InvalidInput(
            "mixture needs at least one transition".into(),
        ));
    }
    check_probability(alpha)?;
    Ok(mixture_g_split(model, segment, alpha, 1.0 - alpha))
}

/// [`mixture_g`] with the weight of the fresh-start term given separately,
/// so that a posterior close to one keeps its precision.
pub(crate) fn mixture_g_split(model: &DisorderModel, segment: &[usize], alpha: f64, rest: f64) -> f64 {
    let l = segment.len() - 2;
    let (p, q) = (model.p(), model.q());
    let mut fresh = p.powi(l as i32 + 1) * l_unchecked(model, segment, 0);
    for i in 0..=l {
        fresh += p.powi((l - i) as i32) * q * l_unchecked(model, segment, i + 1);
    }
    alpha * l_unchecked(model, segment, l + 1) + rest * fresh
}

pub(crate) fn check_probability(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(DisorderError::InvalidInput(format!(
            "posterior value {alpha} outside [0,1]"
        )))
    }
}

/// Absolute error of `S(x_0..x_n) = S(x_0..x_(n-l-1)) G(x_(n-l-1)..x_n, Pi_(n-l-1))`.
pub fn check_factorization(model: &DisorderModel, path: &[usize], l: usize) -> Result<f64> {
    check_segment(model, path)?;
    let n = path.len() - 1;
    if l >= n {
        return Err(DisorderError::IndexOutOfRange(format!(
            "l = {l} must be below n = {n}"
        )));
    }
    let split = n - l - 1;
    let head = &path[..=split];
    let pi = pi_direct(model, head)?;
    let lhs = joint_density(model, path)?;
    let rhs = joint_density(model, head)? * mixture_g(model, &path[split..], pi)?;
    Ok((lhs - rhs).abs())
}

/// q-free detection statistic of a window `x_1..x_(d+2)`:
/// `(1 - p^d)/q + sum_{m=1..d+1} prod_{last m transitions} (ratio / p)`.
///
/// Multiplying by `q` gives the stopping statistic `1 - p^d + q sum L_m/(p^m L_0)`.
/// The value is `+inf` when some transition in the window is impossible
/// before the change but possible after it.
pub fn window_statistic(model: &DisorderModel, window: &[usize]) -> f64 {
    let d = window.len().saturating_sub(2);
    let (p, q) = (model.p(), model.q());
    let ratios = model.ratios();
    let mut sum = (1.0 - p.powi(d as i32)) / q;
    let mut prod = 1.0;
    for r in (1..window.len()).rev() {
        let f = ratios.effective(window[r - 1], window[r]) / p;
        prod = mul0(prod, f);
        sum += prod;
    }
    sum
}

/// Product where zero annihilates infinity.
#[inline]
pub(crate) fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}
