//! Two-dimensional Gaussian mixture over (mean IAT, arrival count) with
//! diagonal covariances, trained by expectation maximisation.
//!
//! Training runs on z-scored features; the standardization statistics are
//! kept in [`GmmParams::scaler`] and the stored means and variances are in
//! raw units (µs, arrivals). The variance floor is applied in standardized
//! units, i.e. `VARIANCE_FLOOR · std²` in raw units.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::digest::DigestBuilder;
use super::roc::roc_auc;
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::trace::{label_channel_states, ChannelState, SlotFeatures, Thresholds};

/// Per-dimension variance floor in standardized units.
pub const VARIANCE_FLOOR: f64 = 1e-6;

const DIM: usize = 2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: [f64; DIM],
    pub std: [f64; DIM],
}

impl FeatureScaler {
    /// Population statistics; a zero spread falls back to a unit-ish scale
    /// so constant columns stay representable.
    pub fn fit(points: &[[f64; DIM]]) -> Self {
        let n = points.len().max(1) as f64;
        let mut mean = [0.0; DIM];
        for p in points {
            for d in 0..DIM {
                mean[d] += p[d];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; DIM];
        for p in points {
            for d in 0..DIM {
                var[d] += (p[d] - mean[d]).powi(2);
            }
        }
        let mut std = [0.0; DIM];
        for d in 0..DIM {
            let s = (var[d] / n).sqrt();
            std[d] = if s > 0.0 && s.is_finite() {
                s
            } else {
                (1e-3 * mean[d].abs()).max(1.0)
            };
        }
        Self { mean, std }
    }

    pub fn identity() -> Self {
        Self {
            mean: [0.0; DIM],
            std: [1.0; DIM],
        }
    }

    fn apply(&self, p: &[f64; DIM]) -> [f64; DIM] {
        [
            (p[0] - self.mean[0]) / self.std[0],
            (p[1] - self.mean[1]) / self.std[1],
        ]
    }

    /// Raw-unit variance floor for each dimension.
    pub fn variance_floor(&self) -> [f64; DIM] {
        [
            VARIANCE_FLOOR * self.std[0].powi(2),
            VARIANCE_FLOOR * self.std[1].powi(2),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    n_components: usize,
    weights: Vec<f64>,
    means: Vec<[f64; DIM]>,
    variances: Vec<[f64; DIM]>,
    scaler: FeatureScaler,
    model_digest: u64,
}

impl GmmParams {
    pub fn new(
        weights: Vec<f64>,
        means: Vec<[f64; DIM]>,
        variances: Vec<[f64; DIM]>,
        scaler: FeatureScaler,
    ) -> Result<Self> {
        let mut params = Self {
            n_components: weights.len(),
            weights,
            means,
            variances,
            scaler,
            model_digest: 0,
        };
        params.model_digest = params.compute_digest();
        params.validate()?;
        Ok(params)
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[[f64; DIM]] {
        &self.means
    }

    pub fn variances(&self) -> &[[f64; DIM]] {
        &self.variances
    }

    pub fn scaler(&self) -> &FeatureScaler {
        &self.scaler
    }

    pub fn model_digest(&self) -> u64 {
        self.model_digest
    }

    pub(crate) fn compute_digest(&self) -> u64 {
        let mut d = DigestBuilder::new("gmm");
        d.int(self.n_components as u64);
        for k in 0..self.n_components {
            d.num(self.weights[k]);
            for x in self.means[k].iter().chain(self.variances[k].iter()) {
                d.num(*x);
            }
        }
        for x in self.scaler.mean.iter().chain(self.scaler.std.iter()) {
            d.num(*x);
        }
        d.finish()
    }

    /// Checks shape, stochasticity and the stored digest.
    pub fn validate(&self) -> Result<()> {
        let m = self.n_components;
        if m == 0 {
            return Err(invalid("GMM needs at least one component"));
        }
        if self.weights.len() != m || self.means.len() != m || self.variances.len() != m {
            return Err(invalid("GMM parameter arrays disagree on component count"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("GMM weights must be non-negative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("GMM weights sum to {total}")));
        }
        if self
            .variances
            .iter()
            .flatten()
            .any(|v| !(v.is_finite() && *v > 0.0))
            || self.means.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(invalid("GMM means must be finite and variances positive"));
        }
        if self.scaler.std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(invalid("GMM scaler std must be positive"));
        }
        if self.model_digest != self.compute_digest() {
            return Err(Error::ModelFile(format!(
                "GMM digest mismatch: stored {:016x}, computed {:016x}",
                self.model_digest,
                self.compute_digest()
            )));
        }
        Ok(())
    }

    fn component_log_density(&self, k: usize, x: &[f64; DIM]) -> f64 {
        let mut acc = 0.0;
        for d in 0..DIM {
            let v = self.variances[k][d];
            acc += -0.5 * (LN_2PI + v.ln() + (x[d] - self.means[k][d]).powi(2) / v);
        }
        acc
    }

    /// `ln W_k + ln N_k(x)` for each component.
    pub(crate) fn weighted_log_terms(&self, x: &[f64; DIM]) -> Vec<f64> {
        (0..self.n_components)
            .map(|k| self.weights[k].ln() + self.component_log_density(k, x))
            .collect()
    }

    pub fn log_density_point(&self, x: &[f64; DIM]) -> f64 {
        log_sum_exp(&self.weighted_log_terms(x))
    }

    /// Component posterior `P(k | x)`.
    pub fn posterior(&self, x: &[f64; DIM]) -> Vec<f64> {
        let terms = self.weighted_log_terms(x);
        let lse = log_sum_exp(&terms);
        terms.iter().map(|t| (t - lse).exp()).collect()
    }

    /// Components whose mean falls on the BUSY side of the threshold rule.
    pub fn busy_components(&self, th: &Thresholds) -> Vec<bool> {
        self.means
            .iter()
            .map(|m| m[0] <= th.th_iat_us as f64 && m[1] >= f64::from(th.th_count))
            .collect()
    }

    /// Posterior mass on BUSY-translated components.
    pub fn busy_posterior(&self, x: &[f64; DIM], th: &Thresholds) -> f64 {
        let busy = self.busy_components(th);
        self.posterior(x)
            .iter()
            .zip(&busy)
            .filter(|(_, b)| **b)
            .map(|(p, _)| p)
            .sum()
    }

    /// Total log-likelihood of a feature set.
    pub fn log_likelihood(&self, data: &[SlotFeatures]) -> f64 {
        data.iter()
            .map(|f| self.log_density_point(&f.point()))
            .sum()
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// EM settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub n_components: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            n_components: 7,
            seed: 0,
            tol: 1e-6,
            max_iter: 300,
        }
    }
}

impl EmConfig {
    pub fn with_components(self, n_components: usize) -> Self {
        Self {
            n_components,
            ..self
        }
    }
}

/// Result of an EM run.
#[derive(Debug, Clone)]
pub struct GmmFit {
    pub params: GmmParams,
    /// Log-likelihood after each E-step; the last entry belongs to `params`.
    pub log_likelihood_trace: Vec<f64>,
    pub converged: bool,
}

/// Fits a diagonal-covariance GMM by EM.
pub fn gmm_fit(data: &[SlotFeatures], cfg: &EmConfig) -> Result<GmmFit> {
    let points: Vec<[f64; DIM]> = data.iter().map(SlotFeatures::point).collect();
    fit_points(&points, cfg)
}

pub(crate) fn fit_points(points: &[[f64; DIM]], cfg: &EmConfig) -> Result<GmmFit> {
    let m = cfg.n_components;
    if m == 0 {
        return Err(invalid("number of components must be at least 1"));
    }
    if points.len() < 2 * m {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot train {} components (need at least {})",
            points.len(),
            m,
            2 * m
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("training data contains non-finite values"));
    }
    let scaler = FeatureScaler::fit(points);
    let z: Vec<[f64; DIM]> = points.iter().map(|p| scaler.apply(p)).collect();
    let log_jacobian: f64 = scaler.std.iter().map(|s| s.ln()).sum::<f64>() * z.len() as f64;

    let mut state = init_kmeanspp(&z, m, cfg.seed);
    let mut resp = vec![0.0; z.len() * m];
    let mut trace = Vec::new();
    let mut converged = false;
    for iter in 0..=cfg.max_iter {
        let ll = e_step(&state, &z, &mut resp) - log_jacobian;
        trace.push(ll);
        if iter > 0 {
            let prev = trace[iter - 1];
            if (ll - prev).abs() <= cfg.tol * prev.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        if iter == cfg.max_iter {
            break;
        }
        m_step(&mut state, &z, &resp);
    }

    let means = state
        .means
        .iter()
        .map(|mu| {
            [
                mu[0] * scaler.std[0] + scaler.mean[0],
                mu[1] * scaler.std[1] + scaler.mean[1],
            ]
        })
        .collect();
    let variances = state
        .vars
        .iter()
        .map(|v| [v[0] * scaler.std[0].powi(2), v[1] * scaler.std[1].powi(2)])
        .collect();
    let weights = normalize(state.weights);
    let params = GmmParams::new(weights, means, variances, scaler)?;
    Ok(GmmFit {
        params,
        log_likelihood_trace: trace,
        converged,
    })
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Mixture state in standardized coordinates.
struct ZState {
    weights: Vec<f64>,
    means: Vec<[f64; DIM]>,
    vars: Vec<[f64; DIM]>,
}

fn sq_dist(a: &[f64; DIM], b: &[f64; DIM]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// k-means++ seeding followed by one hard-assignment M-step.
fn init_kmeanspp(z: &[[f64; DIM]], m: usize, seed: u64) -> ZState {
    let mut rng = rng_from_seed(derive_seed(seed, 0x6b6d));
    let n = z.len();
    let mut centers: Vec<usize> = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = z.iter().map(|p| sq_dist(p, &z[centers[0]])).collect();
    while centers.len() < m {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > u && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|i| !centers.contains(i)).unwrap_or(0)
        };
        centers.push(next);
        for (i, p) in z.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &z[next]));
        }
    }

    let mut global_var = [0.0; DIM];
    for d in 0..DIM {
        let mean = z.iter().map(|p| p[d]).sum::<f64>() / n as f64;
        global_var[d] =
            (z.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n as f64).max(VARIANCE_FLOOR);
    }

    let mut counts = vec![0usize; m];
    let mut sums = vec![[0.0; DIM]; m];
    let mut sq = vec![[0.0; DIM]; m];
    for p in z {
        // lowest index wins ties
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, &c) in centers.iter().enumerate() {
            let d = sq_dist(p, &z[c]);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        counts[best] += 1;
        for d in 0..DIM {
            sums[best][d] += p[d];
            sq[best][d] += p[d] * p[d];
        }
    }
    let mut weights = Vec::with_capacity(m);
    let mut means = Vec::with_capacity(m);
    let mut vars = Vec::with_capacity(m);
    for k in 0..m {
        if counts[k] == 0 {
            weights.push(1.0);
            means.push(z[centers[k]]);
            vars.push(global_var);
            continue;
        }
        let c = counts[k] as f64;
        let mu = [sums[k][0] / c, sums[k][1] / c];
        let mut var = [0.0; DIM];
        for d in 0..DIM {
            var[d] = (sq[k][d] / c - mu[d] * mu[d]).max(VARIANCE_FLOOR);
        }
        weights.push(c);
        means.push(mu);
        vars.push(var);
    }
    ZState {
        weights: normalize(weights),
        means,
        vars,
    }
}

/// Fills `resp` (row-major n × m) and returns the standardized-space
/// log-likelihood.
fn e_step(state: &ZState, z: &[[f64; DIM]], resp: &mut [f64]) -> f64 {
    let m = state.weights.len();
    let log_w: Vec<f64> = state.weights.iter().map(|w| w.ln()).collect();
    let log_norm: Vec<f64> = state
        .vars
        .iter()
        .map(|v| -0.5 * (DIM as f64 * LN_2PI + v[0].ln() + v[1].ln()))
        .collect();
    let mut ll = 0.0;
    let mut terms = vec![0.0; m];
    for (i, p) in z.iter().enumerate() {
        for k in 0..m {
            let mu = &state.means[k];
            let v = &state.vars[k];
            terms[k] = log_w[k] + log_norm[k]
                - 0.5 * ((p[0] - mu[0]).powi(2) / v[0] + (p[1] - mu[1]).powi(2) / v[1]);
        }
        let lse = log_sum_exp(&terms);
        ll += lse;
        for k in 0..m {
            resp[i * m + k] = (terms[k] - lse).exp();
        }
    }
    ll
}

fn m_step(state: &mut ZState, z: &[[f64; DIM]], resp: &[f64]) {
    let m = state.weights.len();
    let n = z.len() as f64;
    for k in 0..m {
        let mut nk = 0.0;
        let mut s = [0.0; DIM];
        for (i, p) in z.iter().enumerate() {
            let r = resp[i * m + k];
            nk += r;
            s[0] += r * p[0];
            s[1] += r * p[1];
        }
        state.weights[k] = nk / n;
        if nk <= 1e-300 {
            // dead component: parameters are irrelevant to the likelihood
            continue;
        }
        let mu = [s[0] / nk, s[1] / nk];
        let mut v = [0.0; DIM];
        for (i, p) in z.iter().enumerate() {
            let r = resp[i * m + k];
            v[0] += r * (p[0] - mu[0]).powi(2);
            v[1] += r * (p[1] - mu[1]).powi(2);
        }
        state.means[k] = mu;
        state.vars[k] = [
            (v[0] / nk).max(VARIANCE_FLOOR),
            (v[1] / nk).max(VARIANCE_FLOOR),
        ];
    }
}

/// `ln Σ_k W_k N(point; µ_k, Σ_k)` in raw feature units.
pub fn gmm_log_density(params: &GmmParams, point: &SlotFeatures) -> f64 {
    params.log_density_point(&point.point())
}

/// Draws `n` slots from the mixture; counts are rounded and clamped to ≥ 0,
/// mean IATs clamped to ≥ 0.
pub fn gmm_sample(params: &GmmParams, n: usize, seed: u64) -> Vec<SlotFeatures> {
    let mut rng = rng_from_seed(seed);
    let mut cumulative = Vec::with_capacity(params.n_components);
    let mut acc = 0.0;
    for w in &params.weights {
        acc += w;
        cumulative.push(acc);
    }
    (0..n)
        .map(|i| {
            let u: f64 = rng.random::<f64>() * acc;
            let k = cumulative
                .partition_point(|&c| c <= u)
                .min(params.n_components - 1);
            let z0: f64 = StandardNormal.sample(&mut rng);
            let z1: f64 = StandardNormal.sample(&mut rng);
            let iat = params.means[k][0] + z0 * params.variances[k][0].sqrt();
            let count = params.means[k][1] + z1 * params.variances[k][1].sqrt();
            SlotFeatures {
                slot_index: i as u64,
                mean_iat_us: iat.max(0.0),
                count: count.round().max(0.0).min(f64::from(u32::MAX)) as u32,
            }
        })
        .collect()
}

/// Generative estimate: sample a synthetic slot sequence from the mixture
/// and translate it to channel states with the threshold rule.
pub fn gmm_estimate_states(
    params: &GmmParams,
    n_slots: usize,
    seed: u64,
    th: &Thresholds,
) -> Vec<ChannelState> {
    label_channel_states(&gmm_sample(params, n_slots, seed), th)
}

/// Slot-aligned estimate: each observed slot is BUSY when the posterior
/// mass of BUSY-translated components is at least one half.
pub fn gmm_classify_states(
    params: &GmmParams,
    observed: &[SlotFeatures],
    th: &Thresholds,
) -> Vec<ChannelState> {
    observed
        .iter()
        .map(|f| {
            if params.busy_posterior(&f.point(), th) >= 0.5 {
                ChannelState::Busy
            } else {
                ChannelState::Free
            }
        })
        .collect()
}

/// Outcome of the component-count sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSelection {
    pub selected: usize,
    pub auc_per_m: Vec<(usize, f64)>,
}

/// Fits each M in `range`, scores slots by BUSY posterior and returns the
/// smallest M whose AUC is within 0.001 of the best.
pub fn select_component_count(
    data: &[SlotFeatures],
    truth: &[ChannelState],
    range: std::ops::RangeInclusive<usize>,
    cfg: &EmConfig,
    th: &Thresholds,
) -> Result<ComponentSelection> {
    if data.len() != truth.len() {
        return Err(invalid("truth must be aligned with data slots"));
    }
    if range.is_empty() {
        return Err(invalid("empty component range"));
    }
    let mut auc_per_m = Vec::new();
    for m in range {
        let fit = gmm_fit(data, &cfg.with_components(m))?;
        let scores: Vec<f64> = data
            .iter()
            .map(|f| fit.params.busy_posterior(&f.point(), th))
            .collect();
        auc_per_m.push((m, roc_auc(&scores, truth)?));
    }
    let best = auc_per_m
        .iter()
        .map(|a| a.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let selected = auc_per_m
        .iter()
        .find(|a| a.1 >= best - 1e-3)
        .map(|a| a.0)
        .expect("non-empty sweep");
    Ok(ComponentSelection {
        selected,
        auc_per_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use std::f64::consts::PI;

    fn gaussian_peak_log_density(sd0: f64, sd1: f64) -> f64 {
        (1.0 / (2.0 * PI * sd0 * sd1)).ln()
    }

    fn gaussian_blob(n: usize, mean: [f64; 2], sd: [f64; 2], seed: u64) -> Vec<SlotFeatures> {
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|i| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                SlotFeatures {
                    slot_index: i as u64,
                    mean_iat_us: mean[0] + sd[0] * a,
                    count: (mean[1] + sd[1] * b).round().max(0.0) as u32,
                }
            })
            .collect()
    }

    #[test]
    fn single_component_matches_sample_moments() {
        let data = gaussian_blob(2000, [5000.0, 40.0], [300.0, 6.0], 1);
        let fit = gmm_fit(&data, &EmConfig::default().with_components(1)).unwrap();
        let n = data.len() as f64;
        let mean_iat = data.iter().map(|f| f.mean_iat_us).sum::<f64>() / n;
        let mean_cnt = data.iter().map(|f| f64::from(f.count)).sum::<f64>() / n;
        let var_iat = data
            .iter()
            .map(|f| (f.mean_iat_us - mean_iat).powi(2))
            .sum::<f64>()
            / n;
        let var_cnt = data
            .iter()
            .map(|f| (f64::from(f.count) - mean_cnt).powi(2))
            .sum::<f64>()
            / n;
        let p = &fit.params;
        assert!((p.means()[0][0] - mean_iat).abs() < 1e-6 * mean_iat);
        assert!((p.means()[0][1] - mean_cnt).abs() < 1e-6 * mean_cnt);
        assert!((p.variances()[0][0] - var_iat).abs() < 1e-6 * var_iat);
        assert!((p.variances()[0][1] - var_cnt).abs() < 1e-6 * var_cnt);
    }

    #[test]
    fn insufficient_data_rejected() {
        let data = gaussian_blob(1, [1.0, 1.0], [1.0, 1.0], 2);
        assert!(matches!(
            gmm_fit(&data, &EmConfig::default().with_components(2)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn peak_density_closed_form() {
        let params = GmmParams::new(
            vec![1.0],
            vec![[100.0, 5.0]],
            vec![[4.0, 9.0]],
            FeatureScaler::identity(),
        )
        .unwrap();
        let got = gmm_log_density(&params, &SlotFeatures::new(0, 100.0, 5));
        assert!((got - gaussian_peak_log_density(2.0, 3.0)).abs() < 1e-12);
    }

    #[test]
    fn density_integrates_to_one() {
        let params = GmmParams::new(
            vec![0.3, 0.7],
            vec![[0.0, 0.0], [2.0, -1.0]],
            vec![[1.0, 1.0], [0.5, 2.0]],
            FeatureScaler::identity(),
        )
        .unwrap();
        // midpoint rule over [-10, 12] x [-12, 10]
        let h = 0.05;
        let mut total = 0.0;
        let mut x = -10.0 + h / 2.0;
        while x < 12.0 {
            let mut y = -12.0 + h / 2.0;
            while y < 10.0 {
                total += params.log_density_point(&[x, y]).exp() * h * h;
                y += h;
            }
            x += h;
        }
        assert!((total - 1.0).abs() < 0.01, "integral {total}");
    }

    #[test]
    fn mixture_bounds_each_weighted_component() {
        let params = GmmParams::new(
            vec![0.2, 0.5, 0.3],
            vec![[10.0, 1.0], [500.0, 50.0], [9000.0, 2.0]],
            vec![[25.0, 1.0], [1e4, 100.0], [1e6, 4.0]],
            FeatureScaler::identity(),
        )
        .unwrap();
        for pt in [[0.0, 0.0], [480.0, 47.0], [10_000.0, 3.0], [1e6, 1e3]] {
            let total = params.log_density_point(&pt);
            assert!(total.is_finite());
            for k in 0..3 {
                let lower = params.weights()[k].ln() + params.component_log_density(k, &pt);
                assert!(total >= lower - 1e-12);
            }
        }
    }

    #[test]
    fn sample_zero_and_deterministic() {
        let params = GmmParams::new(
            vec![1.0],
            vec![[1000.0, 10.0]],
            vec![[100.0, 4.0]],
            FeatureScaler::identity(),
        )
        .unwrap();
        assert!(gmm_sample(&params, 0, 1).is_empty());
        assert_eq!(gmm_sample(&params, 50, 9), gmm_sample(&params, 50, 9));
        let th = Thresholds::default();
        assert!(gmm_estimate_states(&params, 0, 1, &th).is_empty());
        assert_eq!(
            gmm_estimate_states(&params, 40, 3, &th),
            gmm_estimate_states(&params, 40, 3, &th)
        );
    }

    #[test]
    fn sample_mean_tracks_single_component() {
        let params = GmmParams::new(
            vec![1.0],
            vec![[20_000.0, 30.0]],
            vec![[1e6, 9.0]],
            FeatureScaler::identity(),
        )
        .unwrap();
        let s = gmm_sample(&params, 100_000, 5);
        let n = s.len() as f64;
        let m_iat = s.iter().map(|f| f.mean_iat_us).sum::<f64>() / n;
        let m_cnt = s.iter().map(|f| f64::from(f.count)).sum::<f64>() / n;
        assert!((m_iat - 20_000.0).abs() / 20_000.0 < 0.02);
        assert!((m_cnt - 30.0).abs() / 30.0 < 0.02);
    }

    #[test]
    fn all_free_fit_estimates_free() {
        // light interference: long gaps, few arrivals
        let data = gaussian_blob(3000, [60_000.0, 2.0], [8_000.0, 1.0], 4);
        let th = Thresholds::default();
        assert!(label_channel_states(&data, &th)
            .iter()
            .all(|s| *s == ChannelState::Free));
        let fit = gmm_fit(&data, &EmConfig::default().with_components(3)).unwrap();
        let est = gmm_estimate_states(&fit.params, 5000, 17, &th);
        let free = est.iter().filter(|s| **s == ChannelState::Free).count();
        assert!(free as f64 / est.len() as f64 >= 0.95);
    }

    #[test]
    fn degenerate_identical_points_do_not_collapse() {
        let data: Vec<SlotFeatures> = (0..40)
            .map(|i| SlotFeatures::new(i, 100_000.0, 0))
            .collect();
        let fit = gmm_fit(&data, &EmConfig::default().with_components(3)).unwrap();
        assert!(fit.params.variances().iter().flatten().all(|v| *v > 0.0));
        assert!(fit.params.log_likelihood(&data).is_finite());
    }

    #[test]
    fn selection_single_element_range() {
        let mut data = gaussian_blob(300, [60_000.0, 2.0], [5_000.0, 1.0], 6);
        data.extend(gaussian_blob(300, [500.0, 120.0], [50.0, 8.0], 7));
        let th = Thresholds::default();
        let truth = label_channel_states(&data, &th);
        let sel = select_component_count(&data, &truth, 4..=4, &EmConfig::default(), &th).unwrap();
        assert_eq!(sel.selected, 4);
        assert_eq!(sel.auc_per_m.len(), 1);
    }
}
