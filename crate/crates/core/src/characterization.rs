//! Feature histograms, NCLR scoring and peak/off-peak segmentation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{gmm_fit, EmConfig, GmmParams, Regime};
use crate::trace::{
    extract_slot_features, label_channel_states, ArrivalTrace, ChannelState, SlotFeatures,
    Thresholds,
};

/// Default window length for segmentation: one hour.
pub const DEFAULT_WINDOW_US: u64 = 3_600_000_000;
/// Windows scoring below this NCLR are labelled PEAK.
pub const NCLR_PEAK_THRESHOLD: f64 = 0.5;

const IAT_BINS: usize = 50;
const IAT_LOW_US: f64 = 100.0;
const COUNT_BINS: usize = 30;
const COUNT_HIGH: f64 = 300.0;

/// Normalized 2-D distribution over (mean IAT, count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHistogram {
    pub bin_edges_iat: Vec<f64>,
    pub bin_edges_count: Vec<f64>,
    /// `mass[i][j]`: IAT bin `i`, count bin `j`.
    pub mass: Vec<Vec<f64>>,
}

fn bin_of(edges: &[f64], x: f64) -> usize {
    // values outside the grid land in the edge bins
    let n = edges.len() - 1;
    edges[1..n].partition_point(|e| *e <= x).min(n - 1)
}

impl FeatureHistogram {
    /// 50 log-spaced IAT bins over [100 µs, slot_len] and 30 linear count
    /// bins over [0, 300].
    pub fn build(features: &[SlotFeatures], slot_len_us: u64) -> Result<Self> {
        if features.is_empty() {
            return Err(invalid("histogram needs at least one slot"));
        }
        let hi = slot_len_us as f64;
        if hi <= IAT_LOW_US {
            return Err(invalid("slot length must exceed 100 µs for the IAT grid"));
        }
        let ratio = (hi / IAT_LOW_US).ln();
        let bin_edges_iat: Vec<f64> = (0..=IAT_BINS)
            .map(|i| IAT_LOW_US * (ratio * i as f64 / IAT_BINS as f64).exp())
            .collect();
        let bin_edges_count: Vec<f64> = (0..=COUNT_BINS)
            .map(|j| COUNT_HIGH * j as f64 / COUNT_BINS as f64)
            .collect();
        Self::build_with_edges(features, bin_edges_iat, bin_edges_count)
    }

    pub fn build_with_edges(
        features: &[SlotFeatures],
        bin_edges_iat: Vec<f64>,
        bin_edges_count: Vec<f64>,
    ) -> Result<Self> {
        for edges in [&bin_edges_iat, &bin_edges_count] {
            if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(invalid(
                    "bin edges must be strictly increasing with at least two entries",
                ));
            }
        }
        if features.is_empty() {
            return Err(invalid("histogram needs at least one slot"));
        }
        let mut mass = vec![vec![0.0; bin_edges_count.len() - 1]; bin_edges_iat.len() - 1];
        let w = 1.0 / features.len() as f64;
        for f in features {
            let i = bin_of(&bin_edges_iat, f.mean_iat_us);
            let j = bin_of(&bin_edges_count, f64::from(f.count));
            mass[i][j] += w;
        }
        Ok(Self {
            bin_edges_iat,
            bin_edges_count,
            mass,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().flatten().sum()
    }

    /// Merges groups of adjacent bins; a trailing short group is kept.
    pub fn rebin(&self, iat_factor: usize, count_factor: usize) -> Result<Self> {
        if iat_factor == 0 || count_factor == 0 {
            return Err(invalid("rebin factors must be positive"));
        }
        let merge_edges = |edges: &[f64], f: usize| -> Vec<f64> {
            let n = edges.len() - 1;
            let mut out: Vec<f64> = (0..n).step_by(f).map(|i| edges[i]).collect();
            out.push(edges[n]);
            out
        };
        let bin_edges_iat = merge_edges(&self.bin_edges_iat, iat_factor);
        let bin_edges_count = merge_edges(&self.bin_edges_count, count_factor);
        let mut mass = vec![vec![0.0; bin_edges_count.len() - 1]; bin_edges_iat.len() - 1];
        for (i, row) in self.mass.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                mass[i / iat_factor][j / count_factor] += m;
            }
        }
        Ok(Self {
            bin_edges_iat,
            bin_edges_count,
            mass,
        })
    }

    /// Long-format CSV: `iat_lo_us,iat_hi_us,count_lo,count_hi,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iat_lo_us,iat_hi_us,count_lo,count_hi,mass\n");
        for (i, row) in self.mass.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.bin_edges_iat[i],
                    self.bin_edges_iat[i + 1],
                    self.bin_edges_count[j],
                    self.bin_edges_count[j + 1],
                    m
                );
            }
        }
        out
    }
}

/// Symmetric per-slot cross-likelihood ratio, clamped at zero:
/// `½·[(LL(a|ma) − LL(a|mb))/Na + (LL(b|mb) − LL(b|ma))/Nb]`.
pub fn nclr_score(
    window_a: &[SlotFeatures],
    window_b: &[SlotFeatures],
    model_a: &GmmParams,
    model_b: &GmmParams,
) -> Result<f64> {
    if window_a.is_empty() || window_b.is_empty() {
        return Err(invalid("NCLR needs two non-empty windows"));
    }
    let na = window_a.len() as f64;
    let nb = window_b.len() as f64;
    let a_term = (model_a.log_likelihood(window_a) - model_b.log_likelihood(window_a)) / na;
    let b_term = (model_b.log_likelihood(window_b) - model_a.log_likelihood(window_b)) / nb;
    let score = 0.5 * (a_term + b_term);
    Ok(if score.is_nan() {
        f64::INFINITY
    } else {
        score.max(0.0)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSegmentation {
    pub window_len_us: u64,
    pub start_us: Vec<u64>,
    pub nclr_scores: Vec<f64>,
    pub labels: Vec<Regime>,
}

impl WindowSegmentation {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// CSV with columns `window_index,start_us,nclr,label`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_index,start_us,nclr,label\n");
        for i in 0..self.labels.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                i,
                self.start_us[i],
                self.nclr_scores[i],
                self.labels[i].as_str()
            );
        }
        out
    }
}

pub fn label_from_score(score: f64) -> Regime {
    if score < NCLR_PEAK_THRESHOLD {
        Regime::Peak
    } else {
        Regime::Offpeak
    }
}

/// Number of complete windows in a trace.
pub fn window_count(trace: &ArrivalTrace, window_len_us: u64) -> u64 {
    trace.duration_us() / window_len_us
}

/// Slot features of each complete window, re-based to the window start.
pub fn window_features(
    trace: &ArrivalTrace,
    window_len_us: u64,
    slot_len_us: u64,
) -> Result<Vec<Vec<SlotFeatures>>> {
    if window_len_us == 0 || slot_len_us == 0 {
        return Err(invalid("window and slot lengths must be positive"));
    }
    (0..window_count(trace, window_len_us))
        .map(|w| {
            let start = w * window_len_us;
            let mut f =
                extract_slot_features(&trace.window(start, start + window_len_us), slot_len_us)?;
            // an arrival exactly at the window end belongs to the next window
            f.truncate(window_len_us.div_ceil(slot_len_us) as usize);
            Ok(f)
        })
        .collect()
}

/// Index of the window with the most BUSY slots; ties go to the earlier one.
pub fn busiest_window(windows: &[Vec<SlotFeatures>], th: &Thresholds) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (i, w) in windows.iter().enumerate() {
        let busy = label_channel_states(w, th)
            .iter()
            .filter(|s| **s == ChannelState::Busy)
            .count();
        if best.is_none_or(|(_, b)| busy > b) {
            best = Some((i, busy));
        }
    }
    best.map(|b| b.0)
}

/// Scores every complete window against the peak reference and labels it.
pub fn segment_windows(
    trace: &ArrivalTrace,
    peak_reference: &[SlotFeatures],
    th: &Thresholds,
    window_len_us: u64,
    em: &EmConfig,
) -> Result<WindowSegmentation> {
    if peak_reference.is_empty() {
        return Err(invalid("peak reference window is empty"));
    }
    if window_len_us == 0 || trace.duration_us() < window_len_us {
        return Err(invalid(format!(
            "trace of {} µs is shorter than one {} µs window",
            trace.duration_us(),
            window_len_us
        )));
    }
    let windows = window_features(trace, window_len_us, th.slot_len_us)?;
    let reference_model = gmm_fit(peak_reference, em)?.params;
    let mut scores = Vec::with_capacity(windows.len());
    for w in &windows {
        let model = if w.as_slice() == peak_reference {
            reference_model.clone()
        } else {
            gmm_fit(w, em)?.params
        };
        scores.push(nclr_score(w, peak_reference, &model, &reference_model)?);
    }
    Ok(WindowSegmentation {
        window_len_us,
        start_us: (0..windows.len() as u64)
            .map(|i| i * window_len_us)
            .collect(),
        labels: scores.iter().map(|s| label_from_score(*s)).collect(),
        nclr_scores: scores,
    })
}

/// Picks, per label class, the window whose score is closest to the class
/// mean. Returns `(peak_index, offpeak_index)`.
pub fn select_training_windows(seg: &WindowSegmentation) -> Result<(usize, usize)> {
    let pick = |regime: Regime, name: &'static str| -> Result<usize> {
        let members: Vec<usize> = (0..seg.len())
            .filter(|&i| seg.labels[i] == regime)
            .collect();
        if members.is_empty() {
            return Err(Error::EmptyClass(name));
        }
        let mean = members.iter().map(|&i| seg.nclr_scores[i]).sum::<f64>() / members.len() as f64;
        let mut best = members[0];
        let mut best_d = (seg.nclr_scores[best] - mean).abs();
        for &i in &members[1..] {
            let d = (seg.nclr_scores[i] - mean).abs();
            // tolerance keeps float noise from breaking exact ties
            if d < best_d - 1e-12 {
                best = i;
                best_d = d;
            }
        }
        Ok(best)
    };
    Ok((
        pick(Regime::Peak, "PEAK")?,
        pick(Regime::Offpeak, "OFFPEAK")?,
    ))
}
