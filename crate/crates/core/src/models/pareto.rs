//! Self-similar baseline: a Pareto law fitted to inter-arrival times.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::trace::{
    extract_slot_features, label_channel_states, synthesize_trace, ArrivalTrace, ChannelState,
    IatDistribution, Thresholds,
};

/// Channel used for the internally synthesized trace; any valid id works.
const SYNTH_CHANNEL: u8 = 18;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoParams {
    pub shape: f64,
    pub scale_us: f64,
}

impl ParetoParams {
    pub fn distribution(&self) -> IatDistribution {
        IatDistribution::Pareto {
            shape: self.shape,
            scale_us: self.scale_us,
        }
    }
}

/// Maximum-likelihood fit: scale is the smallest IAT, shape is
/// `n / Σ ln(x_i / scale)`.
pub fn pareto_fit_iats(iats: &[f64]) -> Result<ParetoParams> {
    if iats.is_empty() {
        return Err(Error::InsufficientData("no inter-arrival times".into()));
    }
    if iats.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(invalid("inter-arrival times must be positive"));
    }
    let scale_us = iats.iter().copied().fold(f64::INFINITY, f64::min);
    let log_sum: f64 = iats.iter().map(|x| (x / scale_us).ln()).sum();
    if log_sum <= 0.0 {
        return Err(invalid(
            "all inter-arrival times are equal; Pareto shape is unbounded",
        ));
    }
    Ok(ParetoParams {
        shape: iats.len() as f64 / log_sum,
        scale_us,
    })
}

pub fn pareto_baseline_fit(trace: &ArrivalTrace) -> Result<ParetoParams> {
    if trace.len() < 2 {
        return Err(Error::InsufficientData(
            "Pareto fit needs at least 2 arrivals".into(),
        ));
    }
    let iats: Vec<f64> = trace
        .inter_arrival_times()
        .into_iter()
        .map(|v| v as f64)
        .collect();
    pareto_fit_iats(&iats)
}

/// Samples a synthetic IAT stream from the fit, slots it and applies the
/// threshold rule.
pub fn pareto_baseline_states(
    params: &ParetoParams,
    n_slots: usize,
    seed: u64,
    th: &Thresholds,
) -> Result<Vec<ChannelState>> {
    if n_slots == 0 {
        return Ok(Vec::new());
    }
    let duration = n_slots as u64 * th.slot_len_us;
    let trace = synthesize_trace(&params.distribution(), duration, seed, SYNTH_CHANNEL)?;
    let mut features = extract_slot_features(&trace, th.slot_len_us)?;
    features.truncate(n_slots);
    Ok(label_channel_states(&features, th))
}
