//! Raw sample decoding and the streaming magnitude window.
//!
//! Input samples are 12-bit signed axis readings covering ±8 g, so one LSB
//! is 8/2048 g and decoding is exact in `f64`. The window keeps the last
//! [`WINDOW_LEN`] acceleration magnitudes snapped to the 2⁻¹⁶ grid shared
//! with the integer backend; on that grid the running sum and
//! sum-of-squares are exact dyadic rationals, so the incremental aggregates
//! never drift from a from-scratch recomputation.

use std::io::{BufRead, Read, Write};

use thiserror::Error;

/// Nominal sensor rate. Sample indices are implicit time at this rate.
pub const SAMPLE_RATE_HZ: u32 = 25;

/// Analysis window length in samples (2.56 s at 25 Hz).
pub const WINDOW_LEN: usize = 64;

/// 12-bit signed range of a raw axis word.
pub const RAW_MIN: i16 = -2048;
/// 12-bit signed range of a raw axis word.
pub const RAW_MAX: i16 = 2047;

/// Scale of one raw LSB in g.
pub const G_PER_LSB: f64 = 8.0 / 2048.0;

/// One undecoded three-axis reading, sign-extended into `i16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawSample {
    pub x_raw: i16,
    pub y_raw: i16,
    pub z_raw: i16,
}

impl RawSample {
    pub fn new(x_raw: i16, y_raw: i16, z_raw: i16) -> Self {
        Self { x_raw, y_raw, z_raw }
    }
}

/// One decoded reading in g plus its position in the stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelSample {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub sample_index: u64,
}

/// Raised when a raw axis word falls outside the 12-bit range, which can
/// only happen on corrupted input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("axis {axis} value {value} outside the 12-bit range [-2048, 2047]")]
pub struct DecodeError {
    pub axis: char,
    pub value: i16,
}

/// Decode a raw reading to g. Exact: each component is `raw / 256`.
pub fn decode_sample(raw: RawSample, sample_index: u64) -> Result<AccelSample, DecodeError> {
    for (axis, value) in [('x', raw.x_raw), ('y', raw.y_raw), ('z', raw.z_raw)] {
        if !(RAW_MIN..=RAW_MAX).contains(&value) {
            return Err(DecodeError { axis, value });
        }
    }
    Ok(AccelSample {
        ax: f64::from(raw.x_raw) * G_PER_LSB,
        ay: f64::from(raw.y_raw) * G_PER_LSB,
        az: f64::from(raw.z_raw) * G_PER_LSB,
        sample_index,
    })
}

/// Snap a non-negative value to the 2⁻¹⁶ grid (round half up).
///
/// Feature and magnitude values live on this grid so the float and integer
/// backends compare identical quantities against the tree thresholds.
pub(crate) fn snap_q16(v: f64) -> f64 {
    (v * 65536.0 + 0.5).floor() / 65536.0
}

impl AccelSample {
    /// Euclidean norm of the three components, snapped to the 2⁻¹⁶ grid.
    pub fn magnitude(&self) -> f64 {
        snap_q16((self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt())
    }
}

/// Ring buffer of the most recent acceleration magnitudes with O(1)
/// mean/variance via running aggregates.
///
/// Magnitudes are grid-snapped (multiples of 2⁻¹⁶ bounded by √192 g), so
/// `sum` and `sum_sq` stay exact under any push sequence.
#[derive(Debug, Clone)]
pub struct SampleWindow {
    buf: [f64; WINDOW_LEN],
    head: usize,
    fill: usize,
    sum: f64,
    sum_sq: f64,
}

impl Default for SampleWindow {
    fn default() -> Self {
        Self::new()
    }
}

impl SampleWindow {
    pub fn new() -> Self {
        Self { buf: [0.0; WINDOW_LEN], head: 0, fill: 0, sum: 0.0, sum_sq: 0.0 }
    }

    /// Build a window from magnitudes given oldest-first. Values are
    /// grid-snapped; at most the last [`WINDOW_LEN`] are retained.
    pub fn from_magnitudes(values: &[f64]) -> Self {
        let mut w = Self::new();
        for &v in values {
            w.push_magnitude(snap_q16(v));
        }
        w
    }

    /// Append the sample's magnitude, evicting the oldest value once full.
    pub fn push(&mut self, sample: &AccelSample) {
        self.push_magnitude(sample.magnitude());
    }

    pub(crate) fn push_magnitude(&mut self, magnitude: f64) {
        if self.fill == WINDOW_LEN {
            let old = self.buf[self.head];
            self.sum -= old;
            self.sum_sq -= old * old;
        } else {
            self.fill += 1;
        }
        self.buf[self.head] = magnitude;
        self.sum += magnitude;
        self.sum_sq += magnitude * magnitude;
        self.head = (self.head + 1) % WINDOW_LEN;
    }

    pub fn fill(&self) -> usize {
        self.fill
    }

    pub fn is_full(&self) -> bool {
        self.fill == WINDOW_LEN
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    pub fn mean(&self) -> f64 {
        if self.fill == 0 {
            0.0
        } else {
            self.sum / self.fill as f64
        }
    }

    /// Copy the buffered magnitudes oldest-first into `out`; returns the
    /// fill count.
    pub fn copy_ordered(&self, out: &mut [f64; WINDOW_LEN]) -> usize {
        let start = (self.head + WINDOW_LEN - self.fill) % WINDOW_LEN;
        for (i, slot) in out.iter_mut().take(self.fill).enumerate() {
            *slot = self.buf[(start + i) % WINDOW_LEN];
        }
        self.fill
    }
}

/// File-format parse failure with enough position detail to diagnose.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("byte offset {offset}: {msg}")]
    Binary { offset: usize, msg: String },
}

fn csv_err(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Csv { line, msg: msg.into() }
}

/// Read a sample CSV: `sample_index,ax_g,ay_g,az_g`, one row per sample,
/// optional header. Indices must advance by exactly one and components
/// must stay within ±8 g.
pub fn read_samples_csv<R: BufRead>(reader: R) -> Result<Vec<AccelSample>, ParseError> {
    let mut samples = Vec::new();
    let mut expected_index: Option<u64> = None;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 1 && trimmed.starts_with("sample_index") {
            continue;
        }
        let mut fields = trimmed.split(',');
        let mut next = |name: &str| {
            fields
                .next()
                .map(str::trim)
                .filter(|f| !f.is_empty())
                .ok_or_else(|| csv_err(lineno, format!("missing field `{name}`")))
        };
        let index: u64 = next("sample_index")?
            .parse()
            .map_err(|e| csv_err(lineno, format!("bad sample_index: {e}")))?;
        let mut component = |name: &str| -> Result<f64, ParseError> {
            let v: f64 = next(name)?
                .parse()
                .map_err(|e| csv_err(lineno, format!("bad {name}: {e}")))?;
            if !v.is_finite() || !(-8.0..=8.0).contains(&v) {
                return Err(csv_err(lineno, format!("{name} value {v} outside ±8 g")));
            }
            Ok(v)
        };
        let ax = component("ax_g")?;
        let ay = component("ay_g")?;
        let az = component("az_g")?;
        if fields.next().is_some() {
            return Err(csv_err(lineno, "too many fields"));
        }
        if let Some(expected) = expected_index {
            if index != expected {
                return Err(csv_err(
                    lineno,
                    format!("sample_index {index} does not follow {}", expected - 1),
                ));
            }
        }
        expected_index = Some(index + 1);
        samples.push(AccelSample { ax, ay, az, sample_index: index });
    }
    Ok(samples)
}

pub fn write_samples_csv<W: Write>(mut writer: W, samples: &[AccelSample]) -> std::io::Result<()> {
    writeln!(writer, "sample_index,ax_g,ay_g,az_g")?;
    for s in samples {
        writeln!(writer, "{},{},{},{}", s.sample_index, s.ax, s.ay, s.az)?;
    }
    Ok(())
}

/// Read the raw binary format: consecutive little-endian `i16` triplets
/// holding sign-extended 12-bit values.
pub fn read_samples_bin<R: Read>(mut reader: R) -> Result<Vec<RawSample>, ParseError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() % 6 != 0 {
        return Err(ParseError::Binary {
            offset: bytes.len() - bytes.len() % 6,
            msg: format!("stream length {} is not a multiple of 6", bytes.len()),
        });
    }
    let mut samples = Vec::with_capacity(bytes.len() / 6);
    for (i, chunk) in bytes.chunks_exact(6).enumerate() {
        let word = |k: usize| i16::from_le_bytes([chunk[2 * k], chunk[2 * k + 1]]);
        let raw = RawSample::new(word(0), word(1), word(2));
        for (axis, value) in [('x', raw.x_raw), ('y', raw.y_raw), ('z', raw.z_raw)] {
            if !(RAW_MIN..=RAW_MAX).contains(&value) {
                return Err(ParseError::Binary {
                    offset: i * 6,
                    msg: format!("axis {axis} value {value} outside the 12-bit range"),
                });
            }
        }
        samples.push(raw);
    }
    Ok(samples)
}

pub fn write_samples_bin<W: Write>(mut writer: W, samples: &[RawSample]) -> std::io::Result<()> {
    for s in samples {
        for v in [s.x_raw, s.y_raw, s.z_raw] {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// One row of a sidecar label CSV. `label == None` marks an unlabeled
/// sample (empty field or the literal `unlabeled`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRecord {
    pub sample_index: u64,
    pub label: Option<String>,
}

/// Read a label CSV: `sample_index,label`, optional header.
pub fn read_labels_csv<R: BufRead>(reader: R) -> Result<Vec<LabelRecord>, ParseError> {
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if lineno == 1 && trimmed.starts_with("sample_index") {
            continue;
        }
        let (index, label) = trimmed
            .split_once(',')
            .ok_or_else(|| csv_err(lineno, "expected `sample_index,label`"))?;
        let sample_index: u64 = index
            .trim()
            .parse()
            .map_err(|e| csv_err(lineno, format!("bad sample_index: {e}")))?;
        let label = label.trim();
        let label = if label.is_empty() || label.eq_ignore_ascii_case("unlabeled") {
            None
        } else {
            Some(label.to_string())
        };
        records.push(LabelRecord { sample_index, label });
    }
    Ok(records)
}

pub fn write_labels_csv<W: Write>(mut writer: W, labels: &[LabelRecord]) -> std::io::Result<()> {
    writeln!(writer, "sample_index,label")?;
    for r in labels {
        writeln!(writer, "{},{}", r.sample_index, r.label.as_deref().unwrap_or(""))?;
    }
    Ok(())
}
