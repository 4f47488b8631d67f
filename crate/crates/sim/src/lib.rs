//! Deterministic discrete-event simulator for the receiver-aware MAC and a
//! low-power-listening baseline over a shared unit-disk channel with
//! replayed interference.

pub mod channel;
pub mod config;
pub mod duty;
pub mod engine;
pub mod error;
pub mod jammer;
pub mod lpl;
pub mod receiver_aware;
pub mod result;
pub mod scenarios;
pub mod topology;
pub mod training;

pub use config::{ModelSource, ProtocolKind, SimConfig};
pub use error::{Result, SimError};
pub use result::SimResult;
pub use topology::Topology;

use wsmac_core::rng::{derive_seed, rng_from_seed};

use crate::channel::Channel;
use crate::engine::assemble_result;
use crate::jammer::generate_jammer_events;

/// Runs one simulation. The result is a pure function of `cfg`.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let quiet_until = receiver_aware::bootstrap_end_us(cfg);
    let timelines = cfg
        .jammers
        .iter()
        .enumerate()
        .map(|(k, j)| generate_jammer_events(j, k as u32, cfg.duration_us, quiet_until, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    let channel = Channel::new(&cfg.topology, &cfg.jammers, timelines);
    let rng = rng_from_seed(derive_seed(cfg.seed, 0x656e_6769_6e65));
    let out = match cfg.protocol {
        ProtocolKind::ReceiverAware => {
            let models = training::node_models(cfg)?;
            receiver_aware::run(cfg, models, channel, rng)?
        }
        ProtocolKind::LplBaseline { max_tx } => lpl::run(
            cfg,
            max_tx,
            channel,
            rng,
            receiver_aware::first_data_period(cfg),
        )?,
    };
    assemble_result(cfg, out)
}
