//! Evaluation reports: JSON, text table and confusion-matrix CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub truth: String,
    pub predicted: String,
    pub fold: usize,
}

/// Wall-clock seconds per stage. Kept out of the report JSON so that
/// reports of identical runs compare equal byte for byte.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub construction_s: f64,
    pub comparison_s: f64,
    pub classification_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: String,
    pub classifier: String,
    pub seed: u64,
    pub n_samples: usize,
    pub classes: Vec<String>,
    pub parts: Vec<String>,
    pub k_grid: Vec<f64>,
    /// Correct test predictions over all test predictions.
    pub accuracy: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    /// Accuracy of each part classifier on its own.
    pub part_accuracy: BTreeMap<String, f64>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    /// Grid-search choice of k per part, for every fold.
    pub chosen_k: Vec<BTreeMap<String, f64>>,
    pub predictions: Vec<PredictionRecord>,
    #[serde(skip)]
    pub timings: Timings,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn timings_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.timings).expect("timings serialize");
        s.push('\n');
        s
    }

    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in &self.classes {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            s.push_str(c);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "protocol     {}", self.protocol);
        let _ = writeln!(s, "classifier   {}", self.classifier);
        let _ = writeln!(s, "samples      {}", self.n_samples);
        let _ = writeln!(s, "classes      {}", self.classes.len());
        let _ = writeln!(s, "accuracy     {:.2}%", 100.0 * self.accuracy);
        let _ = writeln!(
            s,
            "per fold     {:.2} ± {:.2} % over {} folds",
            100.0 * self.mean_accuracy,
            100.0 * self.std_accuracy,
            self.fold_accuracies.len()
        );
        s.push('\n');
        let _ = writeln!(s, "{:<12} {:>9} {:>8}", "part", "accuracy", "k (med)");
        for p in &self.parts {
            let mut ks: Vec<f64> = self
                .chosen_k
                .iter()
                .filter_map(|m| m.get(p).copied())
                .collect();
            ks.sort_by(f64::total_cmp);
            let med = ks.get(ks.len() / 2).copied().unwrap_or(f64::NAN);
            let acc = self.part_accuracy.get(p).copied().unwrap_or(f64::NAN);
            let _ = writeln!(s, "{:<12} {:>8.2}% {:>8.2}", p, 100.0 * acc, med);
        }
        s.push('\n');
        let width = self
            .classes
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(4)
            .max(6);
        let _ = write!(s, "{:<width$}", "true");
        for c in &self.classes {
            let _ = write!(s, " {c:>width$}");
        }
        s.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let _ = write!(s, "{c:<width$}");
            for v in row {
                let _ = write!(s, " {v:>width$}");
            }
            s.push('\n');
        }
        s
    }
}
