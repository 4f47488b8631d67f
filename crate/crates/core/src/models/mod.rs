//! Interference estimation (GMM), white-space prediction (HMM), the Pareto
//! baseline, ROC/AUC scoring and the JSON model file.

mod digest;
pub mod file;
pub mod gmm;
pub mod hmm;
pub mod pareto;
pub mod roc;

pub use file::{ModelEntry, ModelFile, ModelPair, Regime, MODEL_FORMAT_VERSION};
pub use gmm::{
    gmm_classify_states, gmm_estimate_states, gmm_fit, gmm_log_density, gmm_sample,
    select_component_count, ComponentSelection, EmConfig, FeatureScaler, GmmFit, GmmParams,
    VARIANCE_FLOOR,
};
pub use hmm::{
    hmm_fit, hmm_forward_loglik, hmm_viterbi, predict_white_spaces, HmmConfig, HmmFit, HmmParams,
    PredictionList,
};
pub use pareto::{pareto_baseline_fit, pareto_baseline_states, pareto_fit_iats, ParetoParams};
pub use roc::roc_auc;
