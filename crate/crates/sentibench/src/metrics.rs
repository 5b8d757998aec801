//! Evaluation metrics and published-result comparison.
//!
//! Gold labels span three classes while predictions may also be Mixed or
//! Unparseable, so the confusion matrix is 3x5. Per-class precision
//! divides the diagonal by the predicted-column sum and recall by the
//! gold-row sum; macro scores are unweighted means over the three gold
//! classes; any zero denominator yields 0 rather than NaN.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::SentimentLabel;
use crate::gateway::PredictedLabel;

/// Gold-class axis of the confusion matrix, in row order.
pub const GOLD_CLASSES: [SentimentLabel; 3] = [
    SentimentLabel::Negative,
    SentimentLabel::Neutral,
    SentimentLabel::Positive,
];

/// Predicted axis of the confusion matrix, in column order.
pub const PREDICTED_CLASSES: [PredictedLabel; 5] = [
    PredictedLabel::Negative,
    PredictedLabel::Neutral,
    PredictedLabel::Positive,
    PredictedLabel::Mixed,
    PredictedLabel::Unparseable,
];

fn column_of(predicted: PredictedLabel) -> usize {
    match predicted {
        PredictedLabel::Negative => 0,
        PredictedLabel::Neutral => 1,
        PredictedLabel::Positive => 2,
        PredictedLabel::Mixed => 3,
        PredictedLabel::Unparseable => 4,
    }
}

/// 3x5 table of (gold, predicted) counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; 5]; 3],
}

impl ConfusionMatrix {
    pub fn zero() -> Self {
        ConfusionMatrix::default()
    }

    pub fn record(&mut self, gold: SentimentLabel, predicted: PredictedLabel) {
        self.counts[gold.code() as usize][column_of(predicted)] += 1;
    }

    pub fn count(&self, gold: SentimentLabel, predicted: PredictedLabel) -> u64 {
        self.counts[gold.code() as usize][column_of(predicted)]
    }

    pub fn row(&self, gold: SentimentLabel) -> [u64; 5] {
        self.counts[gold.code() as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn gold_total(&self, gold: SentimentLabel) -> u64 {
        self.counts[gold.code() as usize].iter().sum()
    }

    pub fn predicted_total(&self, predicted: PredictedLabel) -> u64 {
        let column = column_of(predicted);
        self.counts.iter().map(|row| row[column]).sum()
    }
}

/// Tallies (gold, predicted) pairs into a confusion matrix.
pub fn build_confusion(pairs: &[(SentimentLabel, PredictedLabel)]) -> ConfusionMatrix {
    let mut matrix = ConfusionMatrix::zero();
    for &(gold, predicted) in pairs {
        matrix.record(gold, predicted);
    }
    matrix
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Precision, recall, and F1 for one gold class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// All headline metrics derived from one confusion matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub total: u64,
    pub accuracy: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Mean of the negative and positive F1 scores, the headline score
    /// used for tweet sentiment benchmarks.
    pub f1_pn: f64,
    pub mixed_rate: f64,
    pub unparseable_rate: f64,
    /// Indexed like [`GOLD_CLASSES`].
    pub per_class: [ClassMetrics; 3],
}

/// Computes every metric from a confusion matrix.
pub fn evaluate(confusion: &ConfusionMatrix) -> EvaluationReport {
    let total = confusion.total();
    let correct: u64 = GOLD_CLASSES
        .iter()
        .map(|&gold| confusion.count(gold, PredictedLabel::from_sentiment(gold)))
        .sum();

    let per_class: [ClassMetrics; 3] = GOLD_CLASSES.map(|gold| {
        let diagonal = confusion.count(gold, PredictedLabel::from_sentiment(gold));
        let precision = ratio(
            diagonal,
            confusion.predicted_total(PredictedLabel::from_sentiment(gold)),
        );
        let recall = ratio(diagonal, confusion.gold_total(gold));
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
        }
    });

    let macro_recall = per_class.iter().map(|m| m.recall).sum::<f64>() / 3.0;
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / 3.0;
    let f1_pn = (per_class[0].f1 + per_class[2].f1) / 2.0;

    EvaluationReport {
        confusion: *confusion,
        total,
        accuracy: ratio(correct, total),
        macro_recall,
        macro_f1,
        f1_pn,
        mixed_rate: ratio(confusion.predicted_total(PredictedLabel::Mixed), total),
        unparseable_rate: ratio(confusion.predicted_total(PredictedLabel::Unparseable), total),
        per_class,
    }
}

/// Convenience: tally and evaluate in one step.
pub fn evaluate_pairs(pairs: &[(SentimentLabel, PredictedLabel)]) -> EvaluationReport {
    evaluate(&build_confusion(pairs))
}

impl EvaluationReport {
    /// Machine-readable `metric,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let _ = writeln!(out, "total,{}", self.total);
        let mut metric = |name: &str, value: f64| {
            let _ = writeln!(out, "{name},{value:.6}");
        };
        metric("accuracy", self.accuracy);
        metric("macro_recall", self.macro_recall);
        metric("macro_f1", self.macro_f1);
        metric("f1_pn", self.f1_pn);
        metric("mixed_rate", self.mixed_rate);
        metric("unparseable_rate", self.unparseable_rate);
        for (gold, class) in GOLD_CLASSES.iter().zip(&self.per_class) {
            metric(&format!("precision_{}", gold.word()), class.precision);
            metric(&format!("recall_{}", gold.word()), class.recall);
            metric(&format!("f1_{}", gold.word()), class.f1);
        }
        out
    }

    /// Human-readable confusion table plus the headline metrics.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<18}", "gold \\ predicted");
        for predicted in PREDICTED_CLASSES {
            let _ = write!(out, "{:>13}", predicted.as_str());
        }
        out.push('\n');
        for gold in GOLD_CLASSES {
            let _ = write!(out, "{:<18}", gold.word());
            for count in self.confusion.row(gold) {
                let _ = write!(out, "{count:>13}");
            }
            out.push('\n');
        }
        out.push('\n');
        let mut metric = |name: &str, value: f64| {
            let _ = writeln!(out, "{name:<18}{value:>10.4}");
        };
        metric("accuracy", self.accuracy);
        metric("macro_recall", self.macro_recall);
        metric("macro_f1", self.macro_f1);
        metric("f1_pn", self.f1_pn);
        metric("mixed_rate", self.mixed_rate);
        metric("unparseable_rate", self.unparseable_rate);
        out.push('\n');
        let _ = writeln!(
            out,
            "{:<18}{:>10}{:>10}{:>10}",
            "class", "precision", "recall", "f1"
        );
        for (gold, class) in GOLD_CLASSES.iter().zip(&self.per_class) {
            let _ = writeln!(
                out,
                "{:<18}{:>10.4}{:>10.4}{:>10.4}",
                gold.word(),
                class.precision,
                class.recall,
                class.f1
            );
        }
        out
    }
}

// -------------------------------------------------------------------
// Published results for comparison.
// -------------------------------------------------------------------

/// Which block of the published table a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineGroup {
    GptVariant,
    PreviousMethod,
}

/// One published row. Scores stay as printed strings so the table
/// reproduces the source byte for byte (including trailing zeros).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaselineRow {
    pub model: &'static str,
    pub group: BaselineGroup,
    pub accuracy: &'static str,
    pub recall: &'static str,
    pub f1: &'static str,
}

impl BaselineRow {
    pub fn accuracy_value(&self) -> f64 {
        self.accuracy.parse().expect("published value parses")
    }

    pub fn recall_value(&self) -> f64 {
        self.recall.parse().expect("published value parses")
    }

    pub fn f1_value(&self) -> f64 {
        self.f1.parse().expect("published value parses")
    }
}

/// The published comparison table: five completion/chat variants, two
/// embedding ensembles, and six prior systems.
pub const BASELINES: [BaselineRow; 13] = [
    BaselineRow {
        model: "GPT 3.5 Turbo",
        group: BaselineGroup::GptVariant,
        accuracy: "0.9732",
        recall: "0.9198",
        f1: "0.9426",
    },
    BaselineRow {
        model: "Ada",
        group: BaselineGroup::GptVariant,
        accuracy: "0.9528",
        recall: "0.9306",
        f1: "0.9473",
    },
    BaselineRow {
        model: "Babbage",
        group: BaselineGroup::GptVariant,
        accuracy: "0.9594",
        recall: "0.9653",
        f1: "0.9084",
    },
    BaselineRow {
        model: "Curie",
        group: BaselineGroup::GptVariant,
        accuracy: "0.9316",
        recall: "0.8927",
        f1: "0.9149",
    },
    BaselineRow {
        model: "Davinci",
        group: BaselineGroup::GptVariant,
        accuracy: "0.9243",
        recall: "0.8531",
        f1: "0.8809",
    },
    BaselineRow {
        model: "Embedding + Xgboost",
        group: BaselineGroup::GptVariant,
        accuracy: "0.8736",
        recall: "0.8405",
        f1: "0.8631",
    },
    BaselineRow {
        model: "Embedding + RF",
        group: BaselineGroup::GptVariant,
        accuracy: "0.8348",
        recall: "0.8192",
        f1: "0.8729",
    },
    BaselineRow {
        model: "Baziotis et al.",
        group: BaselineGroup::PreviousMethod,
        accuracy: "0.651",
        recall: "0.681",
        f1: "0.677",
    },
    BaselineRow {
        model: "Deshmane et al.",
        group: BaselineGroup::PreviousMethod,
        accuracy: "0.616",
        recall: "0.643",
        f1: "0.620",
    },
    BaselineRow {
        model: "Cliche et al.",
        group: BaselineGroup::PreviousMethod,
        accuracy: "0.658",
        recall: "0.681",
        f1: "0.685",
    },
    BaselineRow {
        model: "Hao et al.",
        group: BaselineGroup::PreviousMethod,
        accuracy: "0.575",
        recall: "0.556",
        f1: "0.519",
    },
    BaselineRow {
        model: "Gonzalez et al.",
        group: BaselineGroup::PreviousMethod,
        accuracy: "0.599",
        recall: "0.632",
        f1: "0.619",
    },
    BaselineRow {
        model: "Nguyen et al. (RoBERTa)",
        group: BaselineGroup::PreviousMethod,
        accuracy: "0.720",
        recall: "0.732",
        f1: "0.725",
    },
];

/// The strongest previous method, used as the delta reference.
pub const REFERENCE_BASELINE: &str = "Nguyen et al. (RoBERTa)";

/// A locally measured result to place alongside the published rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredRow {
    pub model: String,
    pub accuracy: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MeasuredRow {
    /// Uses macro recall and macro F1, matching the published table's
    /// Recall and F1-score columns.
    pub fn from_report(model: impl Into<String>, report: &EvaluationReport) -> Self {
        MeasuredRow {
            model: model.into(),
            accuracy: report.accuracy,
            recall: report.macro_recall,
            f1: report.macro_f1,
        }
    }
}

/// One comparison line: scores plus deltas against the reference.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub published: bool,
    /// Byte-exact strings for published rows, formatted for measured.
    pub accuracy: String,
    pub recall: String,
    pub f1: String,
    pub accuracy_delta: f64,
    pub recall_delta: f64,
    pub f1_delta: f64,
}

/// Published rows and measured rows against a common reference.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub reference_model: &'static str,
    pub rows: Vec<ComparisonRow>,
}

/// Builds the comparison table: each published and measured row gets its
/// deltas against the strongest previous method.
pub fn compare_to_baselines(measured: &[MeasuredRow]) -> Comparison {
    let reference = BASELINES
        .iter()
        .find(|row| row.model == REFERENCE_BASELINE)
        .expect("reference row is part of the table");
    let (ref_accuracy, ref_recall, ref_f1) = (
        reference.accuracy_value(),
        reference.recall_value(),
        reference.f1_value(),
    );

    let mut rows: Vec<ComparisonRow> = BASELINES
        .iter()
        .map(|row| ComparisonRow {
            model: row.model.to_string(),
            published: true,
            accuracy: row.accuracy.to_string(),
            recall: row.recall.to_string(),
            f1: row.f1.to_string(),
            accuracy_delta: row.accuracy_value() - ref_accuracy,
            recall_delta: row.recall_value() - ref_recall,
            f1_delta: row.f1_value() - ref_f1,
        })
        .collect();
    rows.extend(measured.iter().map(|row| ComparisonRow {
        model: row.model.clone(),
        published: false,
        accuracy: format!("{:.4}", row.accuracy),
        recall: format!("{:.4}", row.recall),
        f1: format!("{:.4}", row.f1),
        accuracy_delta: row.accuracy - ref_accuracy,
        recall_delta: row.recall - ref_recall,
        f1_delta: row.f1 - ref_f1,
    }));

    Comparison {
        reference_model: REFERENCE_BASELINE,
        rows,
    }
}

impl Comparison {
    /// Renders a markdown table; deltas are relative to the reference
    /// row and measured rows are marked.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "| Model | Accuracy | Recall | F1-score | dAcc | dRec | dF1 |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|");
        for row in &self.rows {
            let marker = if row.published { "" } else { " (this run)" };
            let _ = writeln!(
                out,
                "| {}{} | {} | {} | {} | {:+.4} | {:+.4} | {:+.4} |",
                row.model,
                marker,
                row.accuracy,
                row.recall,
                row.f1,
                row.accuracy_delta,
                row.recall_delta,
                row.f1_delta
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Deltas are relative to {}.", self.reference_model);
        out
    }
}
