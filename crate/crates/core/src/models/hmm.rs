//! Two-state hidden Markov model over {FREE, BUSY} with GMM emissions.
//!
//! State index 0 is FREE and 1 is BUSY throughout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::digest::DigestBuilder;
use super::gmm::{fit_points, gmm_sample, EmConfig, GmmParams};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::trace::{ChannelState, SlotFeatures};

const N_STATES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmParams {
    pi: [f64; N_STATES],
    transitions: [[f64; N_STATES]; N_STATES],
    emissions: [GmmParams; N_STATES],
    model_digest: u64,
}

impl HmmParams {
    pub fn new(
        pi: [f64; N_STATES],
        transitions: [[f64; N_STATES]; N_STATES],
        emissions: [GmmParams; N_STATES],
    ) -> Result<Self> {
        let mut params = Self {
            pi,
            transitions,
            emissions,
            model_digest: 0,
        };
        params.model_digest = params.compute_digest();
        params.validate()?;
        Ok(params)
    }

    pub fn pi(&self) -> &[f64; N_STATES] {
        &self.pi
    }

    pub fn transitions(&self) -> &[[f64; N_STATES]; N_STATES] {
        &self.transitions
    }

    pub fn emission(&self, state: ChannelState) -> &GmmParams {
        &self.emissions[state.index()]
    }

    pub fn model_digest(&self) -> u64 {
        self.model_digest
    }

    fn compute_digest(&self) -> u64 {
        let mut d = DigestBuilder::new("hmm");
        for x in self.pi.iter().chain(self.transitions.iter().flatten()) {
            d.num(*x);
        }
        for e in &self.emissions {
            d.int(e.compute_digest());
        }
        d.finish()
    }

    pub fn validate(&self) -> Result<()> {
        check_stochastic(&self.pi, "pi")?;
        for row in &self.transitions {
            check_stochastic(row, "transition row")?;
        }
        for e in &self.emissions {
            e.validate()?;
        }
        if self.model_digest != self.compute_digest() {
            return Err(Error::ModelFile(format!(
                "HMM digest mismatch: stored {:016x}, computed {:016x}",
                self.model_digest,
                self.compute_digest()
            )));
        }
        Ok(())
    }

    fn log_emissions(&self, obs: &[SlotFeatures]) -> Vec<[f64; N_STATES]> {
        obs.iter()
            .map(|o| {
                let p = o.point();
                [
                    self.emissions[0].log_density_point(&p),
                    self.emissions[1].log_density_point(&p),
                ]
            })
            .collect()
    }

    /// Draws a hidden state path and matching observations.
    pub fn sample(&self, n: usize, seed: u64) -> (Vec<ChannelState>, Vec<SlotFeatures>) {
        let states = simulate_chain(
            &self.pi,
            &self.transitions,
            n,
            &mut rng_from_seed(derive_seed(seed, 1)),
        );
        let mut pools = [Vec::new(), Vec::new()];
        for (s, pool) in pools.iter_mut().enumerate() {
            let need = states.iter().filter(|x| x.index() == s).count();
            *pool = gmm_sample(&self.emissions[s], need, derive_seed(seed, 2 + s as u64));
        }
        let mut cursor = [0usize; N_STATES];
        let obs = states
            .iter()
            .enumerate()
            .map(|(t, st)| {
                let s = st.index();
                let mut f = pools[s][cursor[s]];
                cursor[s] += 1;
                f.slot_index = t as u64;
                f
            })
            .collect();
        (states, obs)
    }
}

fn check_stochastic(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("{what} sums to {total}")));
    }
    Ok(())
}

fn draw_state<R: Rng + ?Sized>(rng: &mut R, dist: &[f64; N_STATES]) -> ChannelState {
    if rng.random::<f64>() < dist[0] {
        ChannelState::Free
    } else {
        ChannelState::Busy
    }
}

fn simulate_chain<R: Rng + ?Sized>(
    pi: &[f64; N_STATES],
    a: &[[f64; N_STATES]; N_STATES],
    n: usize,
    rng: &mut R,
) -> Vec<ChannelState> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let mut s = draw_state(rng, pi);
    out.push(s);
    for _ in 1..n {
        s = draw_state(rng, &a[s.index()]);
        out.push(s);
    }
    out
}

/// Baum-Welch settings. `n_components` is the per-state mixture size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmmConfig {
    pub n_components: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for HmmConfig {
    fn default() -> Self {
        Self {
            n_components: 7,
            seed: 0,
            tol: 1e-6,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HmmFit {
    pub params: HmmParams,
    /// Log-likelihood of the observations under each successive model.
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
}

/// Scaled forward-backward pass.
struct Posteriors {
    loglik: f64,
    gamma: Vec<[f64; N_STATES]>,
    xi_sum: [[f64; N_STATES]; N_STATES],
}

fn forward_backward(
    pi: &[f64; N_STATES],
    a: &[[f64; N_STATES]; N_STATES],
    logb: &[[f64; N_STATES]],
) -> Posteriors {
    let t_len = logb.len();
    // emissions rescaled per step by their max; the shift is added back to the likelihood
    let mut b = vec![[0.0; N_STATES]; t_len];
    let mut shift_total = 0.0;
    for (t, row) in logb.iter().enumerate() {
        let m = row[0].max(row[1]);
        shift_total += m;
        b[t] = [(row[0] - m).exp(), (row[1] - m).exp()];
    }

    let mut alpha = vec![[0.0; N_STATES]; t_len];
    let mut scale = vec![0.0; t_len];
    for t in 0..t_len {
        for j in 0..N_STATES {
            let prior = if t == 0 {
                pi[j]
            } else {
                (0..N_STATES).map(|i| alpha[t - 1][i] * a[i][j]).sum()
            };
            alpha[t][j] = prior * b[t][j];
        }
        let c = alpha[t][0] + alpha[t][1];
        scale[t] = c;
        if c > 0.0 {
            alpha[t][0] /= c;
            alpha[t][1] /= c;
        }
    }
    let loglik = scale.iter().map(|c| c.ln()).sum::<f64>() + shift_total;

    let mut beta = vec![[1.0; N_STATES]; t_len];
    for t in (0..t_len.saturating_sub(1)).rev() {
        for i in 0..N_STATES {
            let s: f64 = (0..N_STATES)
                .map(|j| a[i][j] * b[t + 1][j] * beta[t + 1][j])
                .sum();
            beta[t][i] = s / scale[t + 1];
        }
    }

    let mut gamma = vec![[0.0; N_STATES]; t_len];
    for t in 0..t_len {
        let g = [alpha[t][0] * beta[t][0], alpha[t][1] * beta[t][1]];
        let z = g[0] + g[1];
        gamma[t] = if z > 0.0 {
            [g[0] / z, g[1] / z]
        } else {
            [0.5, 0.5]
        };
    }
    let mut xi_sum = [[0.0; N_STATES]; N_STATES];
    for t in 0..t_len.saturating_sub(1) {
        for i in 0..N_STATES {
            for j in 0..N_STATES {
                xi_sum[i][j] += alpha[t][i] * a[i][j] * b[t + 1][j] * beta[t + 1][j] / scale[t + 1];
            }
        }
    }
    Posteriors {
        loglik,
        gamma,
        xi_sum,
    }
}

/// `ln P(obs | params)` by the scaled forward recursion.
pub fn hmm_forward_loglik(params: &HmmParams, obs: &[SlotFeatures]) -> f64 {
    let logb = params.log_emissions(obs);
    forward_backward(&params.pi, &params.transitions, &logb).loglik
}

/// Most likely state path; ties resolve toward FREE.
pub fn hmm_viterbi(params: &HmmParams, obs: &[SlotFeatures]) -> Vec<ChannelState> {
    if obs.is_empty() {
        return Vec::new();
    }
    let logb = params.log_emissions(obs);
    let log_a = params.transitions.map(|row| row.map(f64::ln));
    let mut delta = [
        params.pi[0].ln() + logb[0][0],
        params.pi[1].ln() + logb[0][1],
    ];
    let mut back = vec![[0usize; N_STATES]; obs.len()];
    for t in 1..obs.len() {
        let mut next = [0.0; N_STATES];
        for j in 0..N_STATES {
            let from_free = delta[0] + log_a[0][j];
            let from_busy = delta[1] + log_a[1][j];
            let (best, arg) = if from_busy > from_free {
                (from_busy, 1)
            } else {
                (from_free, 0)
            };
            next[j] = best + logb[t][j];
            back[t][j] = arg;
        }
        delta = next;
    }
    let mut s = usize::from(delta[1] > delta[0]);
    let mut path = vec![ChannelState::Free; obs.len()];
    for t in (0..obs.len()).rev() {
        path[t] = ChannelState::from_index(s);
        s = back[t][s];
    }
    path
}

/// Trains the HMM: class-conditional GMMs initialise the emissions, then
/// Baum-Welch re-estimates π, A and every emission mixture jointly.
pub fn hmm_fit(obs: &[SlotFeatures], labels: &[ChannelState], cfg: &HmmConfig) -> Result<HmmFit> {
    if obs.is_empty() {
        return Err(invalid("HMM training needs observations"));
    }
    if obs.len() != labels.len() {
        return Err(invalid("labels must align with observations"));
    }
    let mut emissions = Vec::with_capacity(N_STATES);
    let mut counts = [0usize; N_STATES];
    for s in 0..N_STATES {
        let state = ChannelState::from_index(s);
        let points: Vec<[f64; 2]> = obs
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l == state)
            .map(|(o, _)| o.point())
            .collect();
        counts[s] = points.len();
        if points.is_empty() {
            return Err(Error::EmptyClass(state.as_str()));
        }
        if points.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{} class has a single slot",
                state.as_str()
            )));
        }
        let m = cfg.n_components.clamp(1, points.len() / 2);
        let em = EmConfig {
            n_components: m,
            seed: derive_seed(cfg.seed, s as u64),
            tol: cfg.tol,
            max_iter: 200,
        };
        emissions.push(fit_points(&points, &em)?.params);
    }
    let total = obs.len() as f64;
    let pi = [counts[0] as f64 / total, counts[1] as f64 / total];
    let a = [[0.5; N_STATES]; N_STATES];
    let emissions: [GmmParams; N_STATES] = [emissions[0].clone(), emissions[1].clone()];
    let mut params = HmmParams::new(pi, a, emissions)?;

    let points: Vec<[f64; 2]> = obs.iter().map(SlotFeatures::point).collect();
    let mut trace = Vec::new();
    let mut converged = false;
    for iter in 0..=cfg.max_iter {
        let logb = params.log_emissions(obs);
        let post = forward_backward(&params.pi, &params.transitions, &logb);
        trace.push(post.loglik);
        if iter > 0 {
            let prev = trace[iter - 1];
            if (post.loglik - prev).abs() <= cfg.tol * prev.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        if iter == cfg.max_iter {
            break;
        }
        params = baum_welch_update(&params, &points, &logb, &post)?;
    }
    Ok(HmmFit {
        params,
        log_likelihood_trace: trace,
        converged,
    })
}

fn baum_welch_update(
    params: &HmmParams,
    points: &[[f64; 2]],
    logb: &[[f64; N_STATES]],
    post: &Posteriors,
) -> Result<HmmParams> {
    let pi = normalize2(post.gamma[0]);
    let mut a = params.transitions;
    for i in 0..N_STATES {
        let row_total = post.xi_sum[i][0] + post.xi_sum[i][1];
        if row_total > 0.0 {
            a[i] = normalize2([post.xi_sum[i][0] / row_total, post.xi_sum[i][1] / row_total]);
        }
    }

    let mut emissions = Vec::with_capacity(N_STATES);
    for s in 0..N_STATES {
        let old = &params.emissions[s];
        let m = old.n_components();
        let floor = old.scaler().variance_floor();
        let mut nk = vec![0.0; m];
        let mut sum = vec![[0.0; 2]; m];
        let mut resp_cache = Vec::with_capacity(points.len() * m);
        for (t, p) in points.iter().enumerate() {
            let g = post.gamma[t][s];
            let terms = old.weighted_log_terms(p);
            for k in 0..m {
                let r = g * (terms[k] - logb[t][s]).exp();
                resp_cache.push(r);
                nk[k] += r;
                sum[k][0] += r * p[0];
                sum[k][1] += r * p[1];
            }
        }
        let mut means = old.means().to_vec();
        let mut vars = old.variances().to_vec();
        for k in 0..m {
            if nk[k] <= 1e-300 {
                continue;
            }
            means[k] = [sum[k][0] / nk[k], sum[k][1] / nk[k]];
        }
        let mut sq = vec![[0.0; 2]; m];
        for (t, p) in points.iter().enumerate() {
            for k in 0..m {
                let r = resp_cache[t * m + k];
                sq[k][0] += r * (p[0] - means[k][0]).powi(2);
                sq[k][1] += r * (p[1] - means[k][1]).powi(2);
            }
        }
        for k in 0..m {
            if nk[k] <= 1e-300 {
                continue;
            }
            vars[k] = [
                (sq[k][0] / nk[k]).max(floor[0]),
                (sq[k][1] / nk[k]).max(floor[1]),
            ];
        }
        let total: f64 = nk.iter().sum();
        let weights = if total > 0.0 {
            let mut w: Vec<f64> = nk.iter().map(|x| x / total).collect();
            let z: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= z);
            w
        } else {
            old.weights().to_vec()
        };
        emissions.push(GmmParams::new(weights, means, vars, *old.scaler())?);
    }
    HmmParams::new(pi, a, [emissions[0].clone(), emissions[1].clone()])
}

fn normalize2(v: [f64; N_STATES]) -> [f64; N_STATES] {
    let z = v[0] + v[1];
    let first = v[0] / z;
    [first, 1.0 - first]
}

/// FREE-slot indices predicted for one data period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionList {
    pub period_index: u64,
    pub horizon_slots: u32,
    pub free_slots: Vec<u32>,
}

/// Simulates the chain from π for `horizon_slots` steps with a generator
/// seeded by (model digest, period). Any holder of the same model gets the
/// same list.
pub fn predict_white_spaces(
    params: &HmmParams,
    period_index: u64,
    horizon_slots: u32,
) -> PredictionList {
    let mut rng = rng_from_seed(derive_seed(params.model_digest, period_index));
    let states = simulate_chain(
        &params.pi,
        &params.transitions,
        horizon_slots as usize,
        &mut rng,
    );
    let free_slots = states
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == ChannelState::Free)
        .map(|(i, _)| i as u32)
        .collect();
    PredictionList {
        period_index,
        horizon_slots,
        free_slots,
    }
}
