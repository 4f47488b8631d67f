//! Ready-made configurations used by the acceptance suite and the CLI.

use wsmac_core::models::Regime;
use wsmac_core::trace::IatDistribution;

use crate::config::{ModelSource, ProtocolKind, RunLabels, SimConfig};
use crate::jammer::{JammerMode, JammerPhase, JammerSpec, DEFAULT_BURST_US};
use crate::topology::Topology;

pub const SECOND_US: u64 = 1_000_000;

/// Interference that alternates between dense bursts and long quiet gaps:
/// short inter-arrivals keep the emitter on for tens of milliseconds, a
/// rare long gap ends the burst.
pub fn bursty_distribution() -> IatDistribution {
    IatDistribution::Empirical {
        bins: vec![(1_500, 0.97), (2_500, 0.015), (400_000, 0.015)],
    }
}

pub fn bursty_jammer(x: f64, y: f64, range_m: f64) -> JammerSpec {
    JammerSpec {
        x,
        y,
        interference_range_m: range_m,
        burst_us: DEFAULT_BURST_US,
        peak: bursty_distribution(),
        offpeak: bursty_distribution(),
        schedule: vec![JammerPhase {
            start_us: 0,
            mode: JammerMode::Peak,
        }],
    }
}

fn labelled(mut cfg: SimConfig, scenario: &str, interference: &str) -> SimConfig {
    cfg.labels = RunLabels {
        scenario: scenario.to_string(),
        environment: "synthetic".to_string(),
        interference_type: interference.to_string(),
    };
    cfg
}

/// Five-node tree without interference.
pub fn five_node_quiet(
    protocol: ProtocolKind,
    t_data_us: u64,
    duration_us: u64,
    seed: u64,
) -> SimConfig {
    let mut cfg = SimConfig::new(Topology::five_node(), protocol, t_data_us);
    cfg.duration_us = duration_us;
    cfg.seed = seed;
    labelled(cfg, "5-node", "none")
}

/// Five-node tree under a bursty jammer that reaches every node.
pub fn five_node_bursty(
    protocol: ProtocolKind,
    t_data_us: u64,
    duration_us: u64,
    seed: u64,
) -> SimConfig {
    let mut cfg = five_node_quiet(protocol, t_data_us, duration_us, seed);
    cfg.jammers.push(bursty_jammer(30.0, 10.0, 60.0));
    labelled(cfg, "5-node", "bursty")
}

/// 4 × 4 grid at 20 m spacing with two bursty jammers over opposite
/// halves. Sixteen nodes train their own models, so the training trace is
/// shorter than the default.
pub fn grid16_bursty(
    protocol: ProtocolKind,
    n_slot: u32,
    t_data_us: u64,
    duration_us: u64,
    seed: u64,
) -> SimConfig {
    let mut cfg = SimConfig::new(Topology::grid(4, 4, 20.0), protocol, t_data_us);
    cfg.n_slot = n_slot;
    cfg.duration_us = duration_us;
    cfg.seed = seed;
    cfg.models = ModelSource::Trained {
        training_duration_us: 300 * SECOND_US,
        n_components: 4,
    };
    cfg.jammers.push(bursty_jammer(10.0, 10.0, 35.0));
    cfg.jammers.push(bursty_jammer(50.0, 50.0, 35.0));
    labelled(cfg, "16-node", "bursty")
}

/// Start of the continuous interference in [`feedback_script`].
pub const FEEDBACK_JAM_START_US: u64 = 500 * SECOND_US;

/// A jammer next to the coordinator stays silent, then switches to
/// continuous emission at [`FEEDBACK_JAM_START_US`], starving the
/// coordinator of packets.
pub fn feedback_script(duration_us: u64, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(
        Topology::five_node(),
        ProtocolKind::ReceiverAware,
        10 * SECOND_US,
    );
    cfg.duration_us = duration_us;
    cfg.seed = seed;
    cfg.initial_regime = Regime::Offpeak;
    cfg.models = ModelSource::Trained {
        training_duration_us: 120 * SECOND_US,
        n_components: 3,
    };
    cfg.jammers.push(JammerSpec {
        x: -10.0,
        y: 0.0,
        interference_range_m: 15.0,
        burst_us: DEFAULT_BURST_US,
        peak: IatDistribution::exponential_with_mean(1_000.0),
        offpeak: IatDistribution::exponential_with_mean(2_000_000.0),
        schedule: vec![
            JammerPhase {
                start_us: 0,
                mode: JammerMode::Silent,
            },
            JammerPhase {
                start_us: FEEDBACK_JAM_START_US,
                mode: JammerMode::Peak,
            },
        ],
    });
    labelled(cfg, "5-node", "regime-switch")
}
