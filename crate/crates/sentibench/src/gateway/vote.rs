//! Majority voting over parsed labels (the best-of-N rule).

use super::{GatewayError, PredictedLabel};

/// Selects the most frequent label with a deterministic tie rule.
///
/// `Unparseable` entries are excluded from counting; if every entry is
/// `Unparseable` the result is `(Unparseable, true)`. A label with a strict
/// majority of the counted entries wins with `tie = false`. With no strict
/// majority the result is `(Neutral, true)` — the conservative central
/// value on the 0–2 scale. `Mixed` participates in counting (it can win a
/// strict majority) but never wins a tie.
pub fn majority_vote(labels: &[PredictedLabel]) -> Result<(PredictedLabel, bool), GatewayError> {
    if labels.is_empty() {
        return Err(GatewayError::EmptyVoteInput);
    }
    let mut counts = [0usize; 4];
    for label in labels {
        match label {
            PredictedLabel::Negative => counts[0] += 1,
            PredictedLabel::Neutral => counts[1] += 1,
            PredictedLabel::Positive => counts[2] += 1,
            PredictedLabel::Mixed => counts[3] += 1,
            PredictedLabel::Unparseable => {}
        }
    }
    let counted: usize = counts.iter().sum();
    if counted == 0 {
        return Ok((PredictedLabel::Unparseable, true));
    }
    let (best_idx, &best) = counts
        .iter()
        .enumerate()
        .max_by_key(|(_, &c)| c)
        .expect("four candidates");
    if 2 * best > counted {
        let winner = [
            PredictedLabel::Negative,
            PredictedLabel::Neutral,
            PredictedLabel::Positive,
            PredictedLabel::Mixed,
        ][best_idx];
        Ok((winner, false))
    } else {
        Ok((PredictedLabel::Neutral, true))
    }
}
