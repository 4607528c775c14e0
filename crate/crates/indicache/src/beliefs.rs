//! Client-side probability model: how indicator accuracy, hit ratio, and
//! positive-indication rate combine into per-cache exclusion probabilities,
//! plus the epoch-based moving-average estimator of the positive rate.
//!
//! An *exclusion probability* is the chance the requested item is NOT in a
//! cache given its indication: `mr_pos` conditions on a positive indication,
//! `mr_neg` on a negative one. A system where `fpr + fnr < 1` is
//! *sufficiently accurate*, which is equivalent to `mr_neg > mr_pos` —
//! indications carry signal.

use crate::error::{Error, Result};

/// Clamp applied to probabilities that feed divisions or products, keeping
/// the selection machinery away from degenerate certainty.
pub const PROB_EPSILON: f64 = 1e-6;

fn clamp_unit(x: f64) -> f64 {
    x.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)
}

/// Reported accuracy of an advertised indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorAccuracy {
    /// False-positive ratio: Pr(positive | absent).
    pub fpr: f64,
    /// False-negative ratio: Pr(negative | present).
    pub fnr: f64,
}

impl IndicatorAccuracy {
    pub fn new(fpr: f64, fnr: f64) -> Result<Self> {
        for (name, v) in [("fpr", fpr), ("fnr", fnr)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be in [0,1], got {v}"
                )));
            }
        }
        Ok(Self { fpr, fnr })
    }
}

/// Probability of a positive indication: present and not missed, or absent
/// and falsely flagged. `h * (1 - fnr) + (1 - h) * fpr`.
pub fn positive_prob(h: f64, acc: IndicatorAccuracy) -> f64 {
    debug_assert!((0.0..=1.0).contains(&h));
    h * (1.0 - acc.fnr) + (1.0 - h) * acc.fpr
}

/// Exclusion probabilities `(mr_pos, mr_neg)` by Bayes' rule:
/// `mr_pos = fpr * (1 - h) / q` and `mr_neg = (1 - fpr) * (1 - h) / (1 - q)`
/// with `q = positive_prob(h, acc)`. All terms are clamped to
/// `[PROB_EPSILON, 1 - PROB_EPSILON]` so downstream products and divisions
/// stay finite.
pub fn exclusion_probs(h: f64, acc: IndicatorAccuracy) -> (f64, f64) {
    let q = clamp_unit(positive_prob(h, acc));
    let mr_pos = clamp_unit(acc.fpr * (1.0 - h) / q);
    let mr_neg = clamp_unit((1.0 - acc.fpr) * (1.0 - h) / (1.0 - q));
    (mr_pos, mr_neg)
}

/// True iff `fpr + fnr < 1`; equivalently, `mr_neg > mr_pos` for any
/// non-degenerate hit ratio.
pub fn is_sufficiently_accurate(acc: IndicatorAccuracy) -> bool {
    acc.fpr + acc.fnr < 1.0
}

/// Inverts the positive-indication probability to recover the hit ratio:
/// `h = (q - fpr) / (1 - fpr - fnr)`, clamped to `[0, 1]` because a
/// moving-average `q` can transiently disagree with the reported accuracy.
///
/// Errors when the system is not sufficiently accurate (the inversion's
/// denominator loses its sign).
pub fn estimate_hit_ratio(q: f64, acc: IndicatorAccuracy) -> Result<f64> {
    if !is_sufficiently_accurate(acc) {
        return Err(Error::ContractViolation(format!(
            "hit-ratio inversion needs fpr + fnr < 1, got {} + {}",
            acc.fpr, acc.fnr
        )));
    }
    Ok(((q - acc.fpr) / (1.0 - acc.fpr - acc.fnr)).clamp(0.0, 1.0))
}

/// Per-cache belief state driving selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionEstimate {
    /// Estimated hit ratio.
    pub h: f64,
    /// Positive-indication probability consistent with `h`.
    pub q: f64,
    /// Pr(absent | positive indication).
    pub mr_pos: f64,
    /// Pr(absent | negative indication).
    pub mr_neg: f64,
}

impl ExclusionEstimate {
    /// Builds the belief for one cache from its observed positive rate and
    /// reported accuracy. Returns the estimate plus whether the accuracy was
    /// sufficient; insufficient accuracy falls back to a clamped inversion
    /// (denominator floored at `PROB_EPSILON`) so selection can proceed, and
    /// the caller is expected to count the event.
    pub fn from_observations(q: f64, acc: IndicatorAccuracy) -> (Self, bool) {
        let sufficient = is_sufficiently_accurate(acc);
        let h = if sufficient {
            estimate_hit_ratio(q, acc).expect("sufficient accuracy checked")
        } else {
            let denom = (1.0 - acc.fpr - acc.fnr).max(PROB_EPSILON);
            ((q - acc.fpr) / denom).clamp(0.0, 1.0)
        };
        let h = clamp_unit(h);
        let (mr_pos, mr_neg) = exclusion_probs(h, acc);
        (
            Self {
                h,
                q: clamp_unit(positive_prob(h, acc)),
                mr_pos,
                mr_neg,
            },
            sufficient,
        )
    }

    /// The exclusion probability matching an indication.
    pub fn for_indication(&self, indication: bool) -> f64 {
        if indication {
            self.mr_pos
        } else {
            self.mr_neg
        }
    }
}

/// Epoch-based weighted moving average of the positive-indication rate.
///
/// For the first `horizon` requests the estimate is the running mean
/// (bootstrap); afterwards it is frozen within each epoch of `horizon`
/// requests and updated at the boundary as
/// `delta * window_rate + (1 - delta) * previous`.
#[derive(Debug, Clone)]
pub struct PositiveRateEstimator {
    horizon: u32,
    smoothing: f64,
    q: f64,
    window_positive: u32,
    window_total: u32,
    bootstrap_total: u64,
}

impl PositiveRateEstimator {
    /// `prior` seeds the estimate before any request; the reported
    /// false-positive ratio is the natural no-information choice.
    pub fn new(horizon: u32, smoothing: f64, prior: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be >= 1".into()));
        }
        if !(0.0 < smoothing && smoothing < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "smoothing must be in (0,1), got {smoothing}"
            )));
        }
        Ok(Self {
            horizon,
            smoothing,
            q: prior.clamp(0.0, 1.0),
            window_positive: 0,
            window_total: 0,
            bootstrap_total: 0,
        })
    }

    /// Feeds one indication.
    pub fn observe(&mut self, indication: bool) {
        self.window_total += 1;
        if indication {
            self.window_positive += 1;
        }
        if self.bootstrap_total < u64::from(self.horizon) {
            self.bootstrap_total += 1;
            self.q = f64::from(self.window_positive) / f64::from(self.window_total);
            if self.bootstrap_total == u64::from(self.horizon) {
                self.window_positive = 0;
                self.window_total = 0;
            }
        } else if self.window_total == self.horizon {
            let window_rate = f64::from(self.window_positive) / f64::from(self.horizon);
            self.q = self.smoothing * window_rate + (1.0 - self.smoothing) * self.q;
            self.window_positive = 0;
            self.window_total = 0;
        }
    }

    /// Current estimate of the positive-indication probability.
    pub fn rate(&self) -> f64 {
        self.q
    }
}
