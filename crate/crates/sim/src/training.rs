//! Per-node interference models for simulated runs.

use wsmac_core::models::{
    gmm_fit, hmm_fit, EmConfig, FeatureScaler, GmmParams, HmmConfig, HmmParams, ModelEntry,
    ModelFile, ModelPair, Regime,
};
use wsmac_core::rng::derive_seed;
use wsmac_core::trace::{
    extract_slot_features, label_channel_states, synthesize_trace, ArrivalTrace, ChannelState,
    SlotFeatures, Thresholds,
};

use crate::channel::jammer_exposure;
use crate::config::{ModelSource, SimConfig};
use crate::error::{config_err, Result};
use crate::jammer::JammerSpec;

/// Channel recorded in synthetic training traces.
const TRAINING_CHANNEL: u8 = 18;

/// Synthetic trace of what a node covered by `exposure` hears in `regime`.
pub fn exposure_trace(
    jammers: &[JammerSpec],
    exposure: &[usize],
    regime: Regime,
    duration_us: u64,
    seed: u64,
) -> Result<ArrivalTrace> {
    let regime_stream = match regime {
        Regime::Peak => 1,
        Regime::Offpeak => 2,
    };
    let traces = exposure
        .iter()
        .map(|&j| {
            let s = derive_seed(
                derive_seed(seed, 0x7472_6169_6e00 + j as u64),
                regime_stream,
            );
            synthesize_trace(
                jammers[j].distribution(regime),
                duration_us,
                s,
                TRAINING_CHANNEL,
            )
        })
        .collect::<wsmac_core::Result<Vec<_>>>()?;
    if traces.is_empty() {
        return Ok(ArrivalTrace::new(
            TRAINING_CHANNEL,
            Vec::new(),
            duration_us,
        )?);
    }
    Ok(ArrivalTrace::superpose(&traces)?)
}

/// Emission used for a state that never occurs in training data.
fn placeholder_emission(state: ChannelState, th: &Thresholds) -> Result<GmmParams> {
    let slot = th.slot_len_us as f64;
    let (mean, var) = match state {
        ChannelState::Free => ([slot, 0.5], [(slot / 4.0).powi(2), 1.0]),
        ChannelState::Busy => {
            let iat = th.th_iat_us as f64 / 4.0;
            ([iat, slot / iat], [iat.powi(2), (slot / iat).powi(2)])
        }
    };
    Ok(GmmParams::new(
        vec![1.0],
        vec![mean],
        vec![var],
        FeatureScaler::identity(),
    )?)
}

/// Absorbing chain for single-class training data: the observed state
/// gets a one-component fit, the other a placeholder.
fn single_class_hmm(
    obs: &[SlotFeatures],
    present: ChannelState,
    th: &Thresholds,
    seed: u64,
) -> Result<HmmParams> {
    let observed = gmm_fit(
        obs,
        &EmConfig {
            n_components: 1,
            seed,
            ..EmConfig::default()
        },
    )?
    .params;
    let absent = placeholder_emission(ChannelState::from_index(1 - present.index()), th)?;
    let mut pi = [0.0; 2];
    pi[present.index()] = 1.0;
    let emissions = match present {
        ChannelState::Free => [observed, absent],
        ChannelState::Busy => [absent, observed],
    };
    Ok(HmmParams::new(pi, [[1.0, 0.0], [0.0, 1.0]], emissions)?)
}

/// GMM estimator plus HMM predictor for one regime's slot features,
/// labelled by the threshold rule.
pub fn train_entry(
    obs: &[SlotFeatures],
    th: &Thresholds,
    n_components: usize,
    seed: u64,
) -> Result<ModelEntry> {
    train_labelled_entry(obs, &label_channel_states(obs, th), th, n_components, seed)
}

/// As [`train_entry`] with caller-supplied slot states.
pub fn train_labelled_entry(
    obs: &[SlotFeatures],
    labels: &[ChannelState],
    th: &Thresholds,
    n_components: usize,
    seed: u64,
) -> Result<ModelEntry> {
    if obs.len() < 4 {
        return Err(config_err("model training needs at least four slots"));
    }
    if labels.len() != obs.len() {
        return Err(config_err("one label per slot is required"));
    }
    let busy = labels.iter().filter(|&&l| l == ChannelState::Busy).count();
    let m = n_components.clamp(1, obs.len() / 2);
    let gmm = gmm_fit(
        obs,
        &EmConfig {
            n_components: m,
            seed,
            ..EmConfig::default()
        },
    )?
    .params;
    let hmm = if busy < 2 {
        single_class_hmm(obs, ChannelState::Free, th, seed)?
    } else if obs.len() - busy < 2 {
        single_class_hmm(obs, ChannelState::Busy, th, seed)?
    } else {
        let cfg = HmmConfig {
            n_components,
            seed,
            ..HmmConfig::default()
        };
        hmm_fit(obs, labels, &cfg)?.params
    };
    Ok(ModelEntry { gmm, hmm })
}

/// Peak and off-peak models for a node covered by `exposure`.
pub fn train_pair(
    cfg: &SimConfig,
    exposure: &[usize],
    training_duration_us: u64,
    n_components: usize,
    seed: u64,
) -> Result<ModelPair> {
    let th = Thresholds::mac().with_slot_len(cfg.slot_len_us);
    let mut entries = Vec::with_capacity(2);
    for regime in [Regime::Peak, Regime::Offpeak] {
        let trace = exposure_trace(&cfg.jammers, exposure, regime, training_duration_us, seed)?;
        let obs = extract_slot_features(&trace, cfg.slot_len_us)?;
        entries.push(train_entry(
            &obs,
            &th,
            n_components,
            derive_seed(seed, regime as u64),
        )?);
    }
    let offpeak = entries.pop().expect("two regimes");
    let peak = entries.pop().expect("two regimes");
    Ok(ModelPair {
        peak,
        offpeak,
        active: cfg.initial_regime,
    })
}

/// Model pair of every node, by node index.
pub fn node_models(cfg: &SimConfig) -> Result<Vec<ModelPair>> {
    match &cfg.models {
        ModelSource::Trained {
            training_duration_us,
            n_components,
        } => {
            let exposure = jammer_exposure(&cfg.topology, &cfg.jammers);
            let seed = derive_seed(cfg.seed, 0x6d6f_6465_6c73);
            // every node trains on its own observation of the jammers it hears
            cfg.topology
                .nodes
                .iter()
                .zip(&exposure)
                .map(|(n, set)| {
                    train_pair(
                        cfg,
                        set,
                        *training_duration_us,
                        *n_components,
                        derive_seed(seed, u64::from(n.id)),
                    )
                })
                .collect()
        }
        ModelSource::Files { paths } => cfg
            .topology
            .nodes
            .iter()
            .map(|n| {
                let path = paths
                    .get(&n.id)
                    .ok_or_else(|| config_err(format!("no model file for node {}", n.id)))?;
                let file = ModelFile::load(path)?;
                if file.slot_len_us != cfg.slot_len_us {
                    return Err(config_err(format!(
                        "model file {} uses {} µs slots, the run uses {}",
                        path.display(),
                        file.slot_len_us,
                        cfg.slot_len_us
                    )));
                }
                let mut pair = file.models;
                pair.active = cfg.initial_regime;
                Ok(pair)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProtocolKind;
    use crate::jammer::{JammerMode, JammerPhase, DEFAULT_BURST_US};
    use crate::topology::Topology;
    use wsmac_core::models::predict_white_spaces;
    use wsmac_core::trace::IatDistribution;

    #[test]
    fn quiet_node_predicts_all_free() {
        let mut cfg = SimConfig::new(
            Topology::five_node(),
            ProtocolKind::ReceiverAware,
            10_000_000,
        );
        cfg.models = ModelSource::Trained {
            training_duration_us: 20_000_000,
            n_components: 3,
        };
        let models = node_models(&cfg).unwrap();
        assert_eq!(models.len(), 5);
        let pred = predict_white_spaces(&models[0].active_entry().hmm, 7, 100);
        assert_eq!(pred.free_slots.len(), 100);
    }

    #[test]
    fn exposed_nodes_learn_busy_slots() {
        let mut cfg = SimConfig::new(
            Topology::five_node(),
            ProtocolKind::ReceiverAware,
            10_000_000,
        );
        cfg.models = ModelSource::Trained {
            training_duration_us: 30_000_000,
            n_components: 2,
        };
        cfg.jammers.push(JammerSpec {
            x: -10.0,
            y: 0.0,
            interference_range_m: 15.0,
            burst_us: DEFAULT_BURST_US,
            peak: IatDistribution::Empirical {
                bins: vec![(1_000, 0.98), (300_000, 0.02)],
            },
            offpeak: IatDistribution::exponential_with_mean(2_000_000.0),
            schedule: vec![JammerPhase {
                start_us: 0,
                mode: JammerMode::Peak,
            }],
        });
        let models = node_models(&cfg).unwrap();
        // only the coordinator is covered; silent nodes learn the same model
        assert_eq!(models[1], models[4]);
        assert_ne!(models[0], models[1]);
        assert_eq!(models[1].peak.hmm.pi(), &[1.0, 0.0]);
        assert_ne!(models[0].peak.hmm.pi(), &[1.0, 0.0]);
        let peak = &models[0].peak.hmm;
        let stationary_busy =
            peak.transitions()[0][1] / (peak.transitions()[0][1] + peak.transitions()[1][0]);
        assert!(
            stationary_busy > 0.2 && stationary_busy < 0.9,
            "{stationary_busy}"
        );
    }
}
