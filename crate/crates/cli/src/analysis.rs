//! Trace characterization, segmentation, model training and evaluation.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;
use wsmac_core::characterization::{
    busiest_window, segment_windows, select_training_windows, window_features, FeatureHistogram,
};
use wsmac_core::metrics::{confusion_metrics, ConfusionReport};
use wsmac_core::models::{
    gmm_classify_states, gmm_estimate_states, hmm_viterbi, pareto_baseline_fit,
    pareto_baseline_states, predict_white_spaces, select_component_count, EmConfig, ModelFile,
    ModelPair, Regime,
};
use wsmac_core::protocol::{plan_rx_schedule, PeriodPlan};
use wsmac_core::trace::{
    emit_trace, extract_slot_features, label_channel_states, synthesize_trace, ChannelState,
    IatDistribution, SlotFeatures, Thresholds, WHITE_SPACE_US,
};
use wsmac_sim::training::train_labelled_entry;

use crate::failure::{CmdResult, Failure, InputContext};
use crate::inputs::{features_csv, labelled_slots, ms_to_us, read_model, read_trace, thresholds};
use crate::manifest::RunManifest;

const DEFAULT_TH_IAT_MS: f64 = WHITE_SPACE_US as f64 / 1000.0;

/// Slot and labelling thresholds shared by the trace commands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdArgs {
    /// Slot length in ms.
    #[arg(long, default_value_t = 100.0)]
    pub slot_ms: f64,
    /// A slot is BUSY only if its mean inter-arrival time is at most this (ms).
    #[arg(long, default_value_t = DEFAULT_TH_IAT_MS)]
    pub th_iat_ms: f64,
    /// ... and it holds at least this many arrivals.
    #[arg(long, default_value_t = 11)]
    pub th_count: u32,
    /// Channel assumed when a trace has no header.
    #[arg(long, default_value_t = 18)]
    pub channel: u8,
}

impl ThresholdArgs {
    fn resolve(&self) -> CmdResult<Thresholds> {
        thresholds(self.slot_ms, self.th_iat_ms, self.th_count)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CharacterizeArgs {
    /// Arrival trace: one timestamp (µs) per line.
    pub trace: PathBuf,
    #[command(flatten)]
    pub th: ThresholdArgs,
    /// Segmentation window in ms.
    #[arg(long, default_value_t = 3_600_000.0)]
    pub window_ms: f64,
    #[arg(long, default_value_t = 7)]
    pub components: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn characterize(args: &CharacterizeArgs) -> CmdResult<()> {
    let th = args.th.resolve()?;
    let window_us = ms_to_us(args.window_ms, "window-ms")?;
    let mut m = RunManifest::new("characterize", args, &args.out)?;
    m.input(&args.trace);
    m.seeds.push(args.seed);
    let trace = read_trace(&args.trace, args.th.channel)?;
    let features =
        extract_slot_features(&trace, th.slot_len_us).input("feature extraction failed")?;
    let states = label_channel_states(&features, &th);
    m.write("features.csv", features_csv(&features, &states))?;
    let hist = FeatureHistogram::build(&features, th.slot_len_us).input("histogram failed")?;
    m.write("histogram.csv", hist.to_csv())?;
    if trace.duration_us() >= window_us {
        let seg = segment_trace(&trace, &th, window_us, args.components, args.seed)?;
        m.write("segmentation.csv", seg.to_csv())?;
    } else {
        eprintln!(
            "note: trace shorter than one {} ms window, no segmentation written",
            args.window_ms
        );
    }
    let busy = states.iter().filter(|s| **s == ChannelState::Busy).count();
    println!(
        "{} slots, {} BUSY ({:.2}%)",
        features.len(),
        busy,
        100.0 * busy as f64 / features.len().max(1) as f64
    );
    m.finish()
}

fn segment_trace(
    trace: &wsmac_core::trace::ArrivalTrace,
    th: &Thresholds,
    window_us: u64,
    components: usize,
    seed: u64,
) -> CmdResult<wsmac_core::characterization::WindowSegmentation> {
    let windows = window_features(trace, window_us, th.slot_len_us).input("windowing failed")?;
    let peak = busiest_window(&windows, th)
        .ok_or_else(|| Failure::input("trace has no complete window"))?;
    let em = EmConfig {
        n_components: components,
        seed,
        ..EmConfig::default()
    };
    segment_windows(trace, &windows[peak], th, window_us, &em).input("segmentation failed")
}

#[derive(Debug, Args, Serialize)]
pub struct SegmentArgs {
    pub trace: PathBuf,
    #[command(flatten)]
    pub th: ThresholdArgs,
    #[arg(long, default_value_t = 3_600_000.0)]
    pub window_ms: f64,
    #[arg(long, default_value_t = 7)]
    pub components: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Labels windows PEAK/OFFPEAK and extracts one training window per class.
pub fn segment(args: &SegmentArgs) -> CmdResult<()> {
    let th = args.th.resolve()?;
    let window_us = ms_to_us(args.window_ms, "window-ms")?;
    let mut m = RunManifest::new("segment", args, &args.out)?;
    m.input(&args.trace);
    m.seeds.push(args.seed);
    let trace = read_trace(&args.trace, args.th.channel)?;
    let seg = segment_trace(&trace, &th, window_us, args.components, args.seed)?;
    m.write("segmentation.csv", seg.to_csv())?;
    let (peak, offpeak) = select_training_windows(&seg).input("cannot pick training windows")?;
    for (name, w) in [("peak.trace", peak), ("offpeak.trace", offpeak)] {
        let start = seg.start_us[w];
        m.write(name, emit_trace(&trace.window(start, start + window_us)))?;
    }
    let selection = json!({ "peak_window": peak, "offpeak_window": offpeak, "windows": seg.len() });
    m.write("selection.json", format!("{selection:#}\n"))?;
    println!(
        "{} windows; training windows: peak {peak}, off-peak {offpeak}",
        seg.len()
    );
    m.finish()
}

/// `7` or `auto`.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum Components {
    Fixed(usize),
    Auto,
}

impl std::str::FromStr for Components {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Components::Auto);
        }
        match s.parse::<usize>() {
            Ok(m) if m >= 1 => Ok(Components::Fixed(m)),
            _ => Err(format!("expected a positive integer or 'auto', got '{s}'")),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Peak training data: an arrival trace or a labelled features table.
    #[arg(long)]
    pub peak: PathBuf,
    #[arg(long)]
    pub offpeak: PathBuf,
    /// Mixture components per model, or `auto` to select over 3..=10.
    #[arg(long, default_value = "7")]
    pub components: Components,
    #[command(flatten)]
    pub th: ThresholdArgs,
    /// Regime the model starts in.
    #[arg(long, value_enum, default_value_t = RegimeArg::Offpeak)]
    pub active: RegimeArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum RegimeArg {
    Peak,
    Offpeak,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Peak => Regime::Peak,
            RegimeArg::Offpeak => Regime::Offpeak,
        }
    }
}

fn choose_components(
    c: Components,
    obs: &[SlotFeatures],
    labels: &[ChannelState],
    th: &Thresholds,
    seed: u64,
) -> CmdResult<(usize, Option<Vec<(usize, f64)>>)> {
    match c {
        Components::Fixed(m) => Ok((m, None)),
        Components::Auto => {
            let em = EmConfig {
                seed,
                ..EmConfig::default()
            };
            let sel = select_component_count(obs, labels, 3..=10, &em, th)
                .input("automatic component selection needs FREE and BUSY slots")?;
            Ok((sel.selected, Some(sel.auc_per_m)))
        }
    }
}

pub fn train(args: &TrainArgs) -> CmdResult<()> {
    let th = args.th.resolve()?;
    let mut m = RunManifest::new("train", args, &args.out)?;
    m.input(&args.peak);
    m.input(&args.offpeak);
    m.seeds.push(args.seed);
    let mut entries = Vec::new();
    let mut selection = serde_json::Map::new();
    for (regime, path) in [(Regime::Peak, &args.peak), (Regime::Offpeak, &args.offpeak)] {
        let (obs, labels) = labelled_slots(path, &th, args.th.channel)?;
        let seed = wsmac_core::rng::derive_seed(args.seed, regime as u64);
        let (n_components, aucs) = choose_components(args.components, &obs, &labels, &th, seed)?;
        let entry = train_labelled_entry(&obs, &labels, &th, n_components, seed)
            .input(format!("training the {} model failed", regime.as_str()))?;
        selection.insert(
            regime.as_str().to_string(),
            json!({ "slots": obs.len(), "n_components": n_components, "auc_per_m": aucs }),
        );
        entries.push(entry);
    }
    let offpeak = entries.pop().expect("two regimes");
    let peak = entries.pop().expect("two regimes");
    let file = ModelFile::new(
        th,
        ModelPair {
            peak,
            offpeak,
            active: args.active.into(),
        },
    );
    m.write(
        "model.json",
        file.to_json().input("cannot encode model")? + "\n",
    )?;
    m.write(
        "training.json",
        format!("{:#}\n", serde_json::Value::Object(selection)),
    )?;
    println!("model written to {}", args.out.join("model.json").display());
    m.finish()
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Ground-truth arrival trace.
    #[arg(long)]
    pub trace: PathBuf,
    /// Model of the pair to evaluate; defaults to the active one.
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    /// Expected slot length; must match the model's.
    #[arg(long)]
    pub slot_ms: Option<f64>,
    #[arg(long, default_value_t = 18)]
    pub channel: u8,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Evaluation {
    slots: usize,
    slot_len_us: u64,
    regime: Regime,
    /// Positive class is FREE.
    gmm_classified: ConfusionReport,
    gmm_sampled: ConfusionReport,
    hmm_viterbi: ConfusionReport,
    pareto_sampled: Option<ConfusionReport>,
}

pub fn evaluate(args: &EvaluateArgs) -> CmdResult<()> {
    let mut m = RunManifest::new("evaluate", args, &args.out)?;
    m.input(&args.model);
    m.input(&args.trace);
    m.seeds.push(args.seed);
    let file = read_model(&args.model)?;
    if let Some(ms) = args.slot_ms {
        let us = ms_to_us(ms, "slot-ms")?;
        if us != file.slot_len_us {
            return Err(Failure::input(format!(
                "slot length {us} µs differs from the model's {} µs",
                file.slot_len_us
            )));
        }
    }
    let th = file.thresholds;
    let regime = args.regime.map(Regime::from).unwrap_or(file.models.active);
    let entry = file.models.get(regime);
    let trace = read_trace(&args.trace, args.channel)?;
    let obs = extract_slot_features(&trace, file.slot_len_us).input("feature extraction failed")?;
    if obs.is_empty() {
        return Err(Failure::input("truth trace is shorter than one slot"));
    }
    let truth = label_channel_states(&obs, &th);
    let score = |est: &[ChannelState]| confusion_metrics(est, &truth).map_err(Failure::internal);
    let pareto_sampled = match pareto_baseline_fit(&trace) {
        Ok(p) => Some(score(
            &pareto_baseline_states(&p, obs.len(), args.seed, &th).map_err(Failure::internal)?,
        )?),
        Err(_) => None,
    };
    let eval = Evaluation {
        slots: obs.len(),
        slot_len_us: file.slot_len_us,
        regime,
        gmm_classified: score(&gmm_classify_states(&entry.gmm, &obs, &th))?,
        gmm_sampled: score(&gmm_estimate_states(&entry.gmm, obs.len(), args.seed, &th))?,
        hmm_viterbi: score(&hmm_viterbi(&entry.hmm, &obs))?,
        pareto_sampled,
    };
    let text = serde_json::to_string_pretty(&eval).input("cannot encode evaluation")?;
    m.write("evaluation.json", text + "\n")?;
    println!(
        "{} slots: GMM accuracy {:.2}%, FPR {:.2}%",
        eval.slots, eval.gmm_classified.accuracy_pct, eval.gmm_classified.fpr_pct
    );
    m.finish()
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    /// Data period index the prediction is for.
    #[arg(long, default_value_t = 0)]
    pub period: u64,
    /// Data period in ms; sets the prediction horizon.
    #[arg(long, default_value_t = 60_000.0)]
    pub t_data_ms: f64,
    /// FREE slots used per period.
    #[arg(long, default_value_t = 2)]
    pub n_slot: u32,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn predict(args: &PredictArgs) -> CmdResult<()> {
    let mut m = RunManifest::new("predict", args, &args.out)?;
    m.input(&args.model);
    let mut file = read_model(&args.model)?;
    if let Some(r) = args.regime {
        file.models.active = r.into();
    }
    let t_data_us = ms_to_us(args.t_data_ms, "t-data-ms")?;
    if t_data_us % file.slot_len_us != 0 {
        return Err(Failure::input(format!(
            "data period {t_data_us} µs is not a multiple of the model's {} µs slot",
            file.slot_len_us
        )));
    }
    if args.n_slot == 0 {
        return Err(Failure::input("--n-slot must be at least 1"));
    }
    let horizon = u32::try_from(t_data_us / file.slot_len_us).input("horizon too long")?;
    let prediction = predict_white_spaces(&file.models.active_entry().hmm, args.period, horizon);
    let plan = PeriodPlan {
        period_index: args.period,
        period_start_us: args.period * t_data_us,
        slot_len_us: file.slot_len_us,
        horizon_slots: horizon,
        n_slot: args.n_slot,
    };
    let rx = plan_rx_schedule(&file.models, &plan).map_err(Failure::internal)?;
    let doc = json!({
        "regime": file.models.active,
        "period_index": args.period,
        "horizon_slots": horizon,
        "free_slots": prediction.free_slots,
        "rx_slots": rx.iter().map(|e| e.slot_index).collect::<Vec<_>>(),
        "rx_start_us": rx.iter().map(|e| e.start_us).collect::<Vec<_>>(),
    });
    m.write("prediction.json", format!("{doc:#}\n"))?;
    println!(
        "{} of {horizon} slots predicted FREE; receive slots {:?}",
        prediction.free_slots.len(),
        rx.iter().map(|e| e.slot_index).collect::<Vec<_>>()
    );
    m.finish()
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Exponential inter-arrival times with this mean (ms).
    #[arg(long, group = "dist")]
    pub mean_iat_ms: Option<f64>,
    /// Pareto inter-arrival times: shape parameter (with --pareto-scale-ms).
    #[arg(long, group = "dist", requires = "pareto_scale_ms")]
    pub pareto_shape: Option<f64>,
    #[arg(long)]
    pub pareto_scale_ms: Option<f64>,
    /// Replay the inter-arrival distribution of an existing trace.
    #[arg(long, group = "dist")]
    pub replay: Option<PathBuf>,
    #[arg(long)]
    pub duration_ms: f64,
    #[arg(long, default_value_t = 18)]
    pub channel: u8,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Writes a synthetic arrival trace.
pub fn synth(args: &SynthArgs) -> CmdResult<()> {
    let mut m = RunManifest::new("synth", args, &args.out)?;
    m.seeds.push(args.seed);
    let dist = match (&args.mean_iat_ms, &args.pareto_shape, &args.replay) {
        (Some(mean), _, _) => {
            IatDistribution::exponential_with_mean(ms_to_us(*mean, "mean-iat-ms")? as f64)
        }
        (_, Some(shape), _) => IatDistribution::Pareto {
            shape: *shape,
            scale_us: ms_to_us(args.pareto_scale_ms.unwrap_or(0.0), "pareto-scale-ms")? as f64,
        },
        (_, _, Some(path)) => {
            m.input(path);
            IatDistribution::from_trace(&read_trace(path, args.channel)?)
                .input("cannot replay trace")?
        }
        _ => {
            return Err(Failure::input(
                "give one of --mean-iat-ms, --pareto-shape or --replay",
            ))
        }
    };
    dist.validate().input("invalid distribution")?;
    let duration = ms_to_us(args.duration_ms, "duration-ms")?;
    let trace =
        synthesize_trace(&dist, duration, args.seed, args.channel).input("synthesis failed")?;
    m.write("trace.txt", emit_trace(&trace))?;
    println!("{} arrivals over {} ms", trace.len(), args.duration_ms);
    m.finish()
}
