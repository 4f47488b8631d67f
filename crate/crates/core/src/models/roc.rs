use crate::error::{invalid, Result};
use crate::trace::ChannelState;

/// Area under the ROC curve for ranking BUSY slots above FREE slots.
///
/// Computed as the Mann-Whitney statistic with midranks, which equals the
/// trapezoidal area when scores tie.
pub fn roc_auc(scores: &[f64], truth: &[ChannelState]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(invalid(format!(
            "scores ({}) and truth ({}) differ in length",
            scores.len(),
            truth.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(invalid("scores contain NaN"));
    }
    let n_pos = truth.iter().filter(|s| **s == ChannelState::Busy).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(invalid("AUC needs both BUSY and FREE slots"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based midrank of the tie group
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if truth[idx] == ChannelState::Busy {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    let nn = n_neg as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}
