//! Per-class first-order autoregressive smoothing and the thresholded
//! argmax decision.
//!
//! Each class has an independent filter `p ← α·p + (1−α)·L`; there is no
//! cross-class renormalization, so the threshold is calibrated against
//! unnormalized smoothed likelihoods. `Other` never competes in the
//! argmax; it is emitted only when the winning probability stays below
//! the threshold.

use crate::tree::{ActivityClass, LikelihoodVector, CLASS_COUNT};

/// Default AR coefficient: time constant ≈ 2 s at 25 Hz.
pub const DEFAULT_ALPHA: f64 = 0.98;
/// Default decision threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Maximum-entropy start: every class at 1/5.
pub const INITIAL_PROB: f64 = 0.2;

/// The filter bank state: per-class a-posteriori probabilities, fixed AR
/// coefficients, and the decision threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherState {
    probs: [f64; CLASS_COUNT],
    alpha: [f64; CLASS_COUNT],
    threshold: f64,
}

/// One output of the decision stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub label: ActivityClass,
    /// The winning a-posteriori probability (of the argmax class, even
    /// when the label falls back to `Other`).
    pub confidence: f64,
}

impl SmootherState {
    /// New bank with all probabilities at [`INITIAL_PROB`].
    ///
    /// Panics if any `alpha` leaves [0, 1) or `threshold` leaves (0, 1).
    pub fn new(alpha: [f64; CLASS_COUNT], threshold: f64) -> Self {
        for a in alpha {
            assert!((0.0..1.0).contains(&a), "alpha {a} outside [0, 1)");
        }
        assert!(threshold > 0.0 && threshold < 1.0, "threshold {threshold} outside (0, 1)");
        Self { probs: [INITIAL_PROB; CLASS_COUNT], alpha, threshold }
    }

    pub fn probs(&self) -> &[f64; CLASS_COUNT] {
        &self.probs
    }

    pub fn set_probs(&mut self, probs: [f64; CLASS_COUNT]) {
        self.probs = probs;
    }

    pub fn alpha(&self) -> &[f64; CLASS_COUNT] {
        &self.alpha
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Advance each class filter one step: `p ← α·p + (1−α)·L`.
    ///
    /// The clamp guards the convex-combination closure against the last
    /// ulp of rounding; inputs in [0, 1] keep probabilities in [0, 1].
    pub fn ar_update(&mut self, likelihoods: &LikelihoodVector) {
        for c in 0..CLASS_COUNT {
            let a = self.alpha[c];
            self.probs[c] = (a * self.probs[c] + (1.0 - a) * likelihoods.0[c]).clamp(0.0, 1.0);
        }
    }

    /// Argmax over the trained classes with ties toward the lower index;
    /// falls back to `Other` below the threshold.
    pub fn decide(&self) -> Decision {
        let mut best = 0;
        for c in 1..ActivityClass::TRAINED.len() {
            if self.probs[c] > self.probs[best] {
                best = c;
            }
        }
        let confidence = self.probs[best];
        let label = if confidence >= self.threshold {
            ActivityClass::TRAINED[best]
        } else {
            ActivityClass::Other
        };
        Decision { label, confidence }
    }
}
