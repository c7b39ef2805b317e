//! The three window predictors: signal power, rhythmicity, frequency
//! stability.
//!
//! Power is the biased variance of the DC-removed magnitude (gravity is
//! removed by the mean subtraction). Rhythmicity is the peak normalized
//! circular autocorrelation of the ring buffer over the cadence lag band
//! [`LAG_MIN`]..=[`LAG_MAX`] (0.78–3.13 Hz at 25 Hz):
//!
//! ```text
//! r(L) = Σᵢ (mᵢ−m̄)(m₍ᵢ₋L mod n₎−m̄) / Σᵢ (mᵢ−m̄)²
//! ```
//!
//! The denominator does not depend on the lag, so the argmax is a pure
//! numerator comparison and a signal with an integer number of periods in
//! the window scores exactly one at its period. A lag-dependent overlap
//! denominator would instead inflate ratios at harmonic multiples of the
//! cadence as the normalizing energy shrinks.
//!
//! Frequency stability scores how often the recent dominant lags agree
//! with the current one to within ±1 sample.
//!
//! All feature values are snapped to the 2⁻¹⁶ grid carried by the
//! serialized tree, so both numeric backends route identically except
//! where the autocorrelation peak is a near-tie.

use crate::ingest::{snap_q16, SampleWindow, WINDOW_LEN};
use crate::tree::FeatureId;

/// Smallest lag searched for the autocorrelation peak.
pub const LAG_MIN: usize = 8;
/// Largest lag searched for the autocorrelation peak.
pub const LAG_MAX: usize = 32;
/// Number of recent dominant lags retained for the stability score.
pub const HISTORY_LEN: usize = 8;

/// Windows with power below this (in g²) are treated as unrhythmic: the
/// normalized autocorrelation of a noise-floor signal is scale-invariant
/// sampling fluctuation, not cadence. 2⁻¹⁰ g² is exactly representable in
/// both backends.
pub const RHYTHM_POWER_GATE: f64 = 1.0 / 1024.0;

/// The predictor tuple consumed by the likelihood tree. `dominant_lag` is
/// diagnostic only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    /// Mean-removed signal power in g², non-negative.
    pub power: f64,
    /// Peak normalized autocorrelation over the lag band, in [0, 1].
    pub rhythmicity: f64,
    /// Dominant-lag consistency score, in [0, 1].
    pub freq_stability: f64,
    /// Argmax lag in samples, `None` when the window is unrhythmic.
    pub dominant_lag: Option<u8>,
}

impl FeatureVector {
    pub fn new(power: f64, rhythmicity: f64, freq_stability: f64) -> Self {
        Self { power, rhythmicity, freq_stability, dominant_lag: None }
    }

    pub fn value(&self, id: FeatureId) -> f64 {
        match id {
            FeatureId::Power => self.power,
            FeatureId::Rhythmicity => self.rhythmicity,
            FeatureId::FreqStability => self.freq_stability,
        }
    }
}

/// Circular record of the last [`HISTORY_LEN`] dominant lags (or `None`
/// markers for unrhythmic frames).
#[derive(Debug, Clone, Default)]
pub struct LagHistory {
    entries: [Option<u8>; HISTORY_LEN],
    head: usize,
    len: usize,
}

impl LagHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, lag: Option<u8>) {
        self.entries[self.head] = lag;
        self.head = (self.head + 1) % HISTORY_LEN;
        if self.len < HISTORY_LEN {
            self.len += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Entries in insertion order, oldest first.
    pub fn entries(&self) -> impl Iterator<Item = Option<u8>> + '_ {
        let start = (self.head + HISTORY_LEN - self.len) % HISTORY_LEN;
        (0..self.len).map(move |i| self.entries[(start + i) % HISTORY_LEN])
    }

    /// Count (hits within ±1 of `lag`, valid entries). Integer logic shared
    /// verbatim with the fixed-point backend.
    pub(crate) fn agreement(&self, lag: u8) -> (u32, u32) {
        let mut hits = 0;
        let mut valid = 0;
        for entry in self.entries().flatten() {
            valid += 1;
            if entry.abs_diff(lag) <= 1 {
                hits += 1;
            }
        }
        (hits, valid)
    }
}

/// Biased variance of the buffered magnitudes at full `f64` precision.
///
/// Computed as `(n·Σm² − (Σm)²) / n²`; the numerator is exact because the
/// window aggregates are exact, so only the final division rounds.
pub fn window_variance(window: &SampleWindow) -> f64 {
    let n = window.fill();
    if n == 0 {
        return 0.0;
    }
    let n_f = n as f64;
    let num = n_f * window.sum_sq() - window.sum() * window.sum();
    (num / (n_f * n_f)).max(0.0)
}

/// The power feature: [`window_variance`] snapped to the feature grid.
pub fn compute_power(window: &SampleWindow) -> f64 {
    snap_q16(window_variance(window))
}

/// Peak normalized circular autocorrelation over the lag band and its
/// argmax lag.
///
/// Returns `(0.0, None)` until the window holds [`LAG_MAX`]` + 1` samples
/// and whenever the window power is below [`RHYTHM_POWER_GATE`]. Ties in
/// the peak break toward the smaller lag.
pub fn compute_rhythmicity(window: &SampleWindow) -> (f64, Option<u8>) {
    let n = window.fill();
    if n < LAG_MAX + 1 || compute_power(window) < RHYTHM_POWER_GATE {
        return (0.0, None);
    }
    let mut buf = [0.0; WINDOW_LEN];
    window.copy_ordered(&mut buf);
    let mean = window.sum() / n as f64;
    let mut dev = [0.0; WINDOW_LEN];
    for i in 0..n {
        dev[i] = buf[i] - mean;
    }

    let den: f64 = dev[..n].iter().map(|d| d * d).sum();
    if den <= 0.0 {
        return (0.0, None);
    }
    // The denominator is shared by every lag, so the argmax needs only
    // the numerators; strict comparison keeps the smaller lag on ties.
    let mut best_num = f64::NEG_INFINITY;
    let mut best_lag = 0u8;
    for lag in LAG_MIN..=LAG_MAX {
        let mut num = 0.0;
        for i in 0..n {
            let j = if i < lag { i + n - lag } else { i - lag };
            num += dev[i] * dev[j];
        }
        if num > best_num {
            best_num = num;
            best_lag = lag as u8;
        }
    }
    (snap_q16((best_num / den).clamp(0.0, 1.0)), Some(best_lag))
}

/// Fraction of recent dominant lags within ±1 sample of the current one.
/// The history is updated with `current_lag` after scoring.
pub fn compute_freq_stability(history: &mut LagHistory, current_lag: Option<u8>) -> f64 {
    let score = match current_lag {
        None => 0.0,
        Some(lag) => {
            let (hits, valid) = history.agreement(lag);
            if valid == 0 {
                0.0
            } else {
                snap_q16(f64::from(hits) / f64::from(valid))
            }
        }
    };
    history.push(current_lag);
    score
}

/// Compute all three predictors for the current window state.
pub fn extract_features(window: &SampleWindow, history: &mut LagHistory) -> FeatureVector {
    let power = compute_power(window);
    let (rhythmicity, dominant_lag) = compute_rhythmicity(window);
    let freq_stability = compute_freq_stability(history, dominant_lag);
    FeatureVector { power, rhythmicity, freq_stability, dominant_lag }
}
