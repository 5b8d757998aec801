//! Score predictions against gold labels: confusion matrix, per-class
//! precision/recall/F1, the macro aggregates, and a markdown comparison
//! table against published baseline systems.
//!
//! ```bash
//! cargo run --example evaluate_reports
//! ```

use sentibench::corpus::SentimentLabel;
use sentibench::gateway::PredictedLabel;
use sentibench::metrics::{
    build_confusion, compare_to_baselines, evaluate, MeasuredRow,
};

fn main() {
    use PredictedLabel as P;
    use SentimentLabel as S;

    // (gold, predicted) pairs as they would come out of a prediction run.
    // Unparseable and mixed responses count against accuracy but are
    // never credited as any class.
    let pairs = [
        (S::Positive, P::Positive),
        (S::Positive, P::Positive),
        (S::Positive, P::Neutral),
        (S::Positive, P::Positive),
        (S::Neutral, P::Neutral),
        (S::Neutral, P::Neutral),
        (S::Neutral, P::Positive),
        (S::Neutral, P::Neutral),
        (S::Negative, P::Negative),
        (S::Negative, P::Negative),
        (S::Negative, P::Neutral),
        (S::Negative, P::Unparseable),
    ];

    let confusion = build_confusion(&pairs);
    println!("confusion counts (gold -> predicted):");
    for gold in SentimentLabel::ALL {
        for predicted in PredictedLabel::ALL {
            let count = confusion.count(gold, predicted);
            if count > 0 {
                println!("  {gold:<8} -> {predicted:<11} {count}");
            }
        }
    }

    let report = evaluate(&confusion);
    println!("\n{}", report.to_text());

    // The same report in machine-readable form.
    println!("as CSV:\n{}", report.to_csv());

    // Baseline comparison: measured rows are appended to the published
    // table with deltas against the reference system.
    let comparison = compare_to_baselines(&[MeasuredRow::from_report("demo run", &report)]);
    println!("{}", comparison.to_markdown());
}
