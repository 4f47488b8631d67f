//! Radio-on accounting.

use crate::error::{config_err, Result};

/// Sorts and merges overlapping or touching `[start, end)` intervals.
pub fn merge_intervals(mut intervals: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    intervals.retain(|iv| iv.1 > iv.0);
    intervals.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(intervals.len());
    for (s, e) in intervals {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

/// Total on-time of one node after merging overlaps.
pub fn on_time(intervals: &[(u64, u64)]) -> u64 {
    merge_intervals(intervals.to_vec())
        .iter()
        .map(|(s, e)| e - s)
        .sum()
}

/// Network duty cycle in percent: `100 · Σ on-time / (N · duration)`.
pub fn account_duty_cycle(
    per_node: &[Vec<(u64, u64)>],
    duration_us: u64,
    n_nodes: usize,
) -> Result<f64> {
    if duration_us == 0 || n_nodes == 0 {
        return Err(config_err(
            "duty cycle needs a positive duration and at least one node",
        ));
    }
    let mut total: u128 = 0;
    for intervals in per_node {
        if let Some(iv) = intervals
            .iter()
            .find(|iv| iv.1 > duration_us || iv.0 > iv.1)
        {
            return Err(config_err(format!(
                "radio interval [{}, {}) lies outside [0, {duration_us}]",
                iv.0, iv.1
            )));
        }
        total += u128::from(on_time(intervals));
    }
    Ok(100.0 * total as f64 / (n_nodes as f64 * duration_us as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formula_examples() {
        assert_eq!(
            account_duty_cycle(&[vec![(0, 1_000_000)]], 100_000_000, 1).unwrap(),
            1.0
        );
        let all = vec![vec![(0, 10)]; 3];
        assert_eq!(account_duty_cycle(&all, 10, 3).unwrap(), 100.0);
        let five = vec![vec![(1_000, 421_000)]; 5];
        let d = account_duty_cycle(&five, 60_000_000, 5).unwrap();
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn overlaps_merged() {
        let d = account_duty_cycle(&[vec![(0, 50), (25, 75), (75, 100)]], 1000, 1).unwrap();
        assert_eq!(d, 10.0);
        assert!(account_duty_cycle(&[vec![(0, 2000)]], 1000, 1).is_err());
    }

    proptest! {
        #[test]
        fn duty_within_bounds(ivs in prop::collection::vec((0u64..1000, 0u64..200), 0..40)) {
            let ivs: Vec<(u64, u64)> = ivs.into_iter().map(|(s, l)| (s, (s + l).min(1000))).collect();
            let d = account_duty_cycle(&[ivs.clone()], 1000, 1).unwrap();
            prop_assert!((0.0..=100.0).contains(&d));
            let longest = ivs.iter().map(|iv| iv.1 - iv.0).max().unwrap_or(0);
            prop_assert!(d * 10.0 >= longest as f64 - 1e-9);
        }
    }
}
