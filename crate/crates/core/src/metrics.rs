//! Estimation-quality metrics and experiment reports.
//!
//! **Positive class is FREE.** A false positive predicts FREE while the
//! channel is BUSY, which is the case that costs a packet; FPR therefore
//! tracks expected loss.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::trace::ChannelState;

/// Reported accuracy/FPR (%) of the GMM estimator on a real office
/// weekday daytime trace. Kept for reference; synthetic fixtures cannot
/// reproduce it.
pub const REFERENCE_OFFICE_WEEKDAY_DAY: (f64, f64) = (99.82, 0.08);

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy_pct(&self) -> f64 {
        100.0 * (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// Zero when there are no BUSY slots in the truth.
    pub fn fpr_pct(&self) -> f64 {
        let neg = self.fp + self.tn;
        if neg == 0 {
            0.0
        } else {
            100.0 * self.fp as f64 / neg as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    pub matrix: ConfusionMatrix,
    pub accuracy_pct: f64,
    pub fpr_pct: f64,
}

pub fn confusion_metrics(
    estimated: &[ChannelState],
    truth: &[ChannelState],
) -> Result<ConfusionReport> {
    if estimated.len() != truth.len() {
        return Err(invalid(format!(
            "estimated ({}) and truth ({}) differ in length",
            estimated.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(invalid("confusion metrics need at least one slot"));
    }
    let mut m = ConfusionMatrix::default();
    for (e, t) in estimated.iter().zip(truth) {
        match (e, t) {
            (ChannelState::Free, ChannelState::Free) => m.tp += 1,
            (ChannelState::Free, ChannelState::Busy) => m.fp += 1,
            (ChannelState::Busy, ChannelState::Busy) => m.tn += 1,
            (ChannelState::Busy, ChannelState::Free) => m.fn_ += 1,
        }
    }
    Ok(ConfusionReport {
        matrix: m,
        accuracy_pct: m.accuracy_pct(),
        fpr_pct: m.fpr_pct(),
    })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One aggregated experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub protocol: String,
    pub environment: String,
    pub interference_type: String,
    pub t_data_s: f64,
    /// Seeds averaged into this row, `;`-separated.
    pub seed: String,
    pub pdr_pct: f64,
    pub pdr_std: f64,
    pub duty_cycle_pct: f64,
    pub duty_cycle_std: f64,
}

pub const REPORT_CSV_HEADER: &str =
    "scenario,protocol,environment,interference_type,t_data_s,seed,pdr_pct,pdr_std,duty_cycle_pct,duty_cycle_std";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(invalid(format!("unknown report format '{other}'"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ReportDoc {
    schema_version: u32,
    rows: Vec<ReportRow>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let doc = ReportDoc {
                schema_version: REPORT_SCHEMA_VERSION,
                rows: rows.to_vec(),
            };
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut out = String::from(REPORT_CSV_HEADER);
            out.push('\n');
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    csv_field(&r.scenario),
                    csv_field(&r.protocol),
                    csv_field(&r.environment),
                    csv_field(&r.interference_type),
                    r.t_data_s,
                    csv_field(&r.seed),
                    r.pdr_pct,
                    r.pdr_std,
                    r.duty_cycle_pct,
                    r.duty_cycle_std
                );
            }
            Ok(out.into_bytes())
        }
    }
}

/// Parses a JSON report produced by [`emit_report`].
pub fn parse_json_report(bytes: &[u8]) -> Result<Vec<ReportRow>> {
    let doc: ReportDoc = serde_json::from_slice(bytes)?;
    if doc.schema_version != REPORT_SCHEMA_VERSION {
        return Err(invalid(format!(
            "unsupported report schema {}",
            doc.schema_version
        )));
    }
    Ok(doc.rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ChannelState::{Busy, Free};

    #[test]
    fn identity_and_total_miss() {
        let t = [Free, Busy, Free, Busy];
        let r = confusion_metrics(&t, &t).unwrap();
        assert_eq!((r.accuracy_pct, r.fpr_pct), (100.0, 0.0));
        let r = confusion_metrics(&[Free; 3], &[Busy; 3]).unwrap();
        assert_eq!((r.accuracy_pct, r.fpr_pct), (0.0, 100.0));
        assert_eq!(r.matrix.fp, 3);
        assert!(confusion_metrics(&[Free], &[Free, Busy]).is_err());
    }

    #[test]
    fn fpr_zero_without_busy_truth() {
        let r = confusion_metrics(&[Busy, Free], &[Free, Free]).unwrap();
        assert_eq!(r.fpr_pct, 0.0);
        assert_eq!(r.accuracy_pct, 50.0);
    }

    fn row(p: f64) -> ReportRow {
        ReportRow {
            scenario: "5-node".into(),
            protocol: "LUCID".into(),
            environment: "office".into(),
            interference_type: "peak".into(),
            t_data_s: 60.0,
            seed: "1;2;3".into(),
            pdr_pct: p,
            pdr_std: 0.1 + p / 3.0,
            duty_cycle_pct: 1.0 / 3.0,
            duty_cycle_std: 0.0,
        }
    }

    #[test]
    fn report_formats() {
        let rows = vec![row(99.5), row(87.123_456_789_012_34)];
        let csv = emit_report(&rows, ReportFormat::Csv).unwrap();
        assert!(String::from_utf8(csv.clone())
            .unwrap()
            .starts_with(REPORT_CSV_HEADER));
        assert_eq!(csv, emit_report(&rows, ReportFormat::Csv).unwrap());
        let json = emit_report(&rows, ReportFormat::Json).unwrap();
        assert_eq!(parse_json_report(&json).unwrap(), rows);
        assert!("xml".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn std_of_constant_is_zero() {
        assert_eq!(mean_std(&[4.0, 4.0, 4.0]), (4.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }

    proptest! {
        #[test]
        fn permutation_invariant(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..100), rot in 0usize..100) {
            let e: Vec<_> = pairs.iter().map(|p| if p.0 { Free } else { Busy }).collect();
            let t: Vec<_> = pairs.iter().map(|p| if p.1 { Free } else { Busy }).collect();
            let a = confusion_metrics(&e, &t).unwrap();
            let k = rot % pairs.len();
            let mut e2 = e.clone();
            let mut t2 = t.clone();
            e2.rotate_left(k);
            t2.rotate_left(k);
            let b = confusion_metrics(&e2, &t2).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(a.matrix.total() as usize, pairs.len());
        }
    }
}
