//! Row-normalized confusion matrix over labeled decision streams.
//!
//! Rows are ground-truth labels: the five classes first, then any extra
//! labels (activities the classifier was never trained on) in order of
//! appearance. Columns are the predicted classes in the fixed order
//! Rest, Other, Walk, Run, Bike.

use std::fmt;

use crate::ingest::SAMPLE_RATE_HZ;
use crate::tree::{ActivityClass, CLASS_COUNT};

/// Predicted-class column order used for display.
pub const COLUMN_ORDER: [ActivityClass; CLASS_COUNT] = [
    ActivityClass::Rest,
    ActivityClass::Other,
    ActivityClass::Walk,
    ActivityClass::Run,
    ActivityClass::Bike,
];

#[derive(Debug, Clone, Default)]
pub struct ConfusionMatrix {
    rows: Vec<(String, [u64; CLASS_COUNT])>,
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        let rows = ActivityClass::ALL
            .iter()
            .map(|c| (c.name().to_string(), [0u64; CLASS_COUNT]))
            .collect();
        Self { rows }
    }

    /// Record one sample. Unknown actual labels get their own row.
    pub fn record(&mut self, actual: &str, predicted: ActivityClass) {
        let actual = actual.trim().to_ascii_lowercase();
        let row = match self.rows.iter_mut().find(|(name, _)| *name == actual) {
            Some((_, counts)) => counts,
            None => {
                self.rows.push((actual, [0; CLASS_COUNT]));
                &mut self.rows.last_mut().expect("just pushed").1
            }
        };
        row[predicted.index()] += 1;
    }

    /// Tally labeled predictions, skipping unlabeled samples.
    pub fn from_pairs<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Option<&'a str>, ActivityClass)>,
    {
        let mut m = Self::new();
        for (actual, predicted) in pairs {
            if let Some(actual) = actual {
                m.record(actual, predicted);
            }
        }
        m
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[u64; CLASS_COUNT])> {
        self.rows.iter().map(|(name, counts)| (name.as_str(), counts))
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|(_, c)| c.iter().sum::<u64>()).sum()
    }

    fn row(&self, label: &str) -> Option<&[u64; CLASS_COUNT]> {
        self.rows.iter().find(|(name, _)| name == label).map(|(_, c)| c)
    }

    /// Diagonal fraction for a class row; `None` when the row is empty.
    pub fn accuracy(&self, class: ActivityClass) -> Option<f64> {
        let counts = self.row(class.name())?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        Some(counts[class.index()] as f64 / total as f64)
    }

    /// Row percentages in [`COLUMN_ORDER`]; `None` for empty rows.
    pub fn row_percentages(&self, label: &str) -> Option<[f64; CLASS_COUNT]> {
        let counts = self.row(label)?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        Some(COLUMN_ORDER.map(|c| 100.0 * counts[c.index()] as f64 / total as f64))
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<12}", "")?;
        for c in COLUMN_ORDER {
            write!(f, "{:>8}", c.name())?;
        }
        writeln!(f, "{:>12}", "duration(h)")?;
        for (name, counts) in &self.rows {
            let total: u64 = counts.iter().sum();
            if total == 0 {
                continue;
            }
            write!(f, "{name:<12}")?;
            for c in COLUMN_ORDER {
                write!(f, "{:>8.2}", 100.0 * counts[c.index()] as f64 / total as f64)?;
            }
            let hours = total as f64 / (f64::from(SAMPLE_RATE_HZ) * 3600.0);
            writeln!(f, "{hours:>12.3}")?;
        }
        Ok(())
    }
}
