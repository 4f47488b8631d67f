//! Acceptance suite. Every test prints one `[PASS]`/`[FAIL]` line with the
//! measured values, then asserts.
//!
//! Run with `cargo test -p wsmac-sim --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use rand::Rng;
use wsmac_core::metrics::confusion_metrics;
use wsmac_core::models::{
    gmm_classify_states, gmm_fit, gmm_sample, hmm_fit, hmm_forward_loglik, select_component_count,
    EmConfig, FeatureScaler, GmmParams, HmmConfig, HmmParams, ModelEntry, ModelPair, Regime,
};
use wsmac_core::protocol::{
    apply_sync, compute_pdr, flood_model_select, handle_model_select, model_broadcast_time,
    n_subslots, offset_to_coordinator, plan_rx_schedule, plan_tx_schedule, subslot_tx_time,
    sync_flood_schedule, FeedbackState, ModelSelectAction, NodeState, PeriodPlan, SyncPacket,
    MODEL_WINDOW_US,
};
use wsmac_core::rng::{derive_seed, rng_from_seed};
use wsmac_core::trace::{
    extract_slot_features, ArrivalTrace, ChannelState, SlotFeatures, Thresholds, WHITE_SPACE_US,
};
use wsmac_sim::scenarios::{
    feedback_script, five_node_bursty, five_node_quiet, grid16_bursty, SECOND_US,
};
use wsmac_sim::{run_simulation, ProtocolKind, SimResult};

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2} {name}: {detail}");
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn single(mean: [f64; 2], var: [f64; 2]) -> GmmParams {
    GmmParams::new(vec![1.0], vec![mean], vec![var], FeatureScaler::identity()).unwrap()
}

fn random_gmm(rng: &mut impl Rng, m: usize) -> GmmParams {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    let means = (0..m)
        .map(|_| {
            [
                rng.random_range(100.0..90_000.0),
                rng.random_range(0.0..200.0),
            ]
        })
        .collect();
    let vars = (0..m)
        .map(|_| {
            [
                rng.random_range(100.0f64..5_000.0).powi(2),
                rng.random_range(1.0f64..20.0).powi(2),
            ]
        })
        .collect();
    GmmParams::new(weights, means, vars, FeatureScaler::identity()).unwrap()
}

fn random_hmm(rng: &mut impl Rng) -> HmmParams {
    let p: f64 = rng.random_range(0.0..=1.0);
    let a00: f64 = rng.random_range(0.01..0.99);
    let a11: f64 = rng.random_range(0.01..0.99);
    let (m_free, m_busy) = (rng.random_range(1..=3), rng.random_range(1..=3));
    let free = random_gmm(rng, m_free);
    let busy = random_gmm(rng, m_busy);
    HmmParams::new(
        [p, 1.0 - p],
        [[a00, 1.0 - a00], [1.0 - a11, a11]],
        [free, busy],
    )
    .unwrap()
}

#[test]
fn c01_em_monotonicity() {
    let start = Instant::now();
    let mut rng = rng_from_seed(0xC1);
    let mut worst_drop = 0.0f64;
    let mut iterations = 0usize;
    for k in 0..100u64 {
        let m_true = rng.random_range(1..=4);
        let truth = random_gmm(&mut rng, m_true);
        let n = rng.random_range(50..=5000);
        let data = gmm_sample(&truth, n, derive_seed(0xC1, k));
        let m = rng.random_range(1..=7);
        let fit = gmm_fit(
            &data,
            &EmConfig {
                n_components: m,
                seed: k,
                ..EmConfig::default()
            },
        )
        .unwrap();
        iterations += fit.log_likelihood_trace.len();
        for w in fit.log_likelihood_trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "EM log-likelihood never decreases",
        worst_drop <= 1e-9 && secs < 30.0,
        format!("100 datasets, {iterations} iterations, worst drop {worst_drop:.3e}, {secs:.2}s"),
    );
}

#[test]
fn c02_gmm_recovery() {
    let start = Instant::now();
    let truth = GmmParams::new(
        vec![0.35, 0.65],
        vec![[60_000.0, 2.0], [800.0, 110.0]],
        vec![
            [8_000.0f64.powi(2), 1.0],
            [150.0f64.powi(2), 10.0f64.powi(2)],
        ],
        FeatureScaler::identity(),
    )
    .unwrap();
    let data = gmm_sample(&truth, 10_000, 0xC2);
    let fit = gmm_fit(
        &data,
        &EmConfig {
            n_components: 2,
            seed: 2,
            ..EmConfig::default()
        },
    )
    .unwrap()
    .params;
    // match fitted components to truth by IAT mean
    let order: Vec<usize> = if fit.means()[0][0] > fit.means()[1][0] {
        vec![0, 1]
    } else {
        vec![1, 0]
    };
    let mut worst_rel = 0.0f64;
    let mut worst_w = 0.0f64;
    for (t, &f) in order.iter().enumerate() {
        for d in 0..2 {
            let rel = (fit.means()[f][d] - truth.means()[t][d]).abs() / truth.means()[t][d].abs();
            worst_rel = worst_rel.max(rel);
        }
        worst_w = worst_w.max((fit.weights()[f] - truth.weights()[t]).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        2,
        "GMM recovers two separated components",
        worst_rel <= 0.05 && worst_w <= 0.05 && secs < 5.0,
        format!(
            "worst mean rel. error {worst_rel:.4}, worst weight error {worst_w:.4}, {secs:.2}s"
        ),
    );
}

fn brute_force_loglik(params: &HmmParams, obs: &[SlotFeatures]) -> f64 {
    let states = [ChannelState::Free, ChannelState::Busy];
    let logb: Vec<[f64; 2]> = obs
        .iter()
        .map(|o| states.map(|s| params.emission(s).log_density_point(&o.point())))
        .collect();
    let mut terms = Vec::with_capacity(1 << obs.len());
    for mask in 0..(1usize << obs.len()) {
        let st = |t: usize| (mask >> t) & 1;
        let mut lp = params.pi()[st(0)].ln() + logb[0][st(0)];
        for t in 1..obs.len() {
            lp += params.transitions()[st(t - 1)][st(t)].ln() + logb[t][st(t)];
        }
        terms.push(lp);
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

#[test]
fn c03_forward_matches_enumeration() {
    let start = Instant::now();
    let mut rng = rng_from_seed(0xC3);
    let mut worst = 0.0f64;
    for k in 0..200u64 {
        let params = random_hmm(&mut rng);
        let len = rng.random_range(1..=8);
        let (_, obs) = params.sample(len, k);
        let fwd = hmm_forward_loglik(&params, &obs);
        let exact = brute_force_loglik(&params, &obs);
        worst = worst.max((fwd - exact).abs() / exact.abs().max(1e-300));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        3,
        "forward log-likelihood equals path enumeration",
        worst <= 1e-9 && secs < 10.0,
        format!("200 models, worst relative error {worst:.3e}, {secs:.2}s"),
    );
}

#[test]
fn c04_baum_welch_recovers_transitions() {
    let a = [[0.9, 0.1], [0.2, 0.8]];
    let truth = HmmParams::new(
        [0.5, 0.5],
        a,
        [
            single([60_000.0, 2.0], [6_000.0f64.powi(2), 1.0]),
            single([700.0, 100.0], [200.0f64.powi(2), 15.0f64.powi(2)]),
        ],
    )
    .unwrap();
    let (states, obs) = truth.sample(10_000, 0xC4);
    let fit = hmm_fit(
        &obs,
        &states,
        &HmmConfig {
            n_components: 2,
            seed: 4,
            ..HmmConfig::default()
        },
    )
    .unwrap();
    let worst_drop = fit
        .log_likelihood_trace
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0f64, f64::max);
    let got = fit.params.transitions();
    let worst = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (got[i][j] - a[i][j]).abs())
        .fold(0.0f64, f64::max);
    verdict(
        4,
        "Baum-Welch is monotone and recovers the transition matrix",
        worst <= 0.05 && worst_drop <= 1e-9,
        format!(
            "A = [[{:.3}, {:.3}], [{:.3}, {:.3}]], worst error {worst:.4}, worst likelihood drop {worst_drop:.2e}",
            got[0][0], got[0][1], got[1][0], got[1][1]
        ),
    );
}

/// Slots alternate between heavy blocks (120 arrivals, exponential gaps
/// with 500 µs mean) and light blocks (up to 2 arrivals, 50 ms mean gap).
/// Ground truth is BUSY for heavy slots.
fn two_regime_fixture() -> (Vec<SlotFeatures>, Vec<ChannelState>) {
    let slot = Thresholds::characterization().slot_len_us;
    let mut rng = rng_from_seed(0xC5);
    let exp = |rng: &mut wsmac_core::rng::SimRng, mean: f64| -> u64 {
        (-mean * (1.0 - rng.random::<f64>()).ln()).round() as u64
    };
    let mut arrivals = Vec::new();
    let mut truth = Vec::new();
    let mut heavy = false;
    while truth.len() < 4000 {
        let block = rng.random_range(5..=60);
        for _ in 0..block {
            let s0 = truth.len() as u64 * slot;
            let end = s0 + slot;
            let (n, mean) = if heavy { (120, 500.0) } else { (2, 50_000.0) };
            let mut t = s0 + rng.random_range(0..1_000);
            for _ in 0..n {
                if t >= end {
                    break;
                }
                arrivals.push(t);
                t += exp(&mut rng, mean).max(1);
            }
            truth.push(if heavy {
                ChannelState::Busy
            } else {
                ChannelState::Free
            });
        }
        heavy = !heavy;
    }
    let trace = ArrivalTrace::new(18, arrivals, truth.len() as u64 * slot).unwrap();
    let features = extract_slot_features(&trace, slot).unwrap();
    (features, truth)
}

#[test]
fn c05_estimation_accuracy() {
    let (features, truth) = two_regime_fixture();
    let th = Thresholds::characterization();
    let gmm = gmm_fit(
        &features,
        &EmConfig {
            seed: 5,
            ..EmConfig::default()
        },
    )
    .unwrap()
    .params;
    let est = gmm_classify_states(&gmm, &features, &th);
    let report = confusion_metrics(&est, &truth).unwrap();
    verdict(
        5,
        "GMM estimate vs ground truth",
        report.accuracy_pct >= 95.0 && report.fpr_pct <= 5.0,
        format!(
            "{} slots, accuracy {:.2}%, FPR {:.2}%",
            truth.len(),
            report.accuracy_pct,
            report.fpr_pct
        ),
    );
}

#[test]
fn c06_component_selection() {
    let (features, truth) = two_regime_fixture();
    let th = Thresholds::characterization();
    let sel = select_component_count(
        &features,
        &truth,
        3..=10,
        &EmConfig {
            seed: 6,
            ..EmConfig::default()
        },
        &th,
    )
    .unwrap();
    let all_high = sel.auc_per_m.iter().all(|&(_, auc)| auc >= 0.99);
    let smallest = sel
        .auc_per_m
        .iter()
        .find(|&&(_, auc)| auc >= 0.99)
        .map(|&(m, _)| m);
    let aucs: Vec<String> = sel
        .auc_per_m
        .iter()
        .map(|(m, a)| format!("{m}:{a:.4}"))
        .collect();
    verdict(
        6,
        "component selection over 3..10",
        all_high && smallest == Some(sel.selected) && sel.auc_per_m.len() == 8,
        format!("selected M = {}, AUC {}", sel.selected, aucs.join(" ")),
    );
}

#[test]
fn c07_rendezvous_containment() {
    let mut rng = rng_from_seed(0xC7);
    let mut violations = 0;
    for _ in 0..1000 {
        let hmm = random_hmm(&mut rng);
        let entry = ModelEntry {
            gmm: hmm.emission(ChannelState::Free).clone(),
            hmm,
        };
        let pair = ModelPair {
            peak: entry.clone(),
            offpeak: entry,
            active: if rng.random() {
                Regime::Peak
            } else {
                Regime::Offpeak
            },
        };
        let horizon = rng.random_range(1..=1200);
        let period = rng.random_range(0..100_000u64);
        let plan = PeriodPlan {
            period_index: period,
            period_start_us: period * 60_000_000,
            slot_len_us: 50_000,
            horizon_slots: horizon,
            n_slot: rng.random_range(1..=5),
        };
        let own_id = rng.random_range(2..100);
        let rx: Vec<u32> = plan_rx_schedule(&pair, &plan)
            .unwrap()
            .iter()
            .map(|e| e.slot_index)
            .collect();
        let tx = plan_tx_schedule(Some(&pair), 1, own_id, &plan, 5).unwrap();
        if tx.iter().any(|e| !rx.contains(&e.slot_index)) {
            violations += 1;
        }
    }
    verdict(
        7,
        "TX slots are contained in the receiver's RX slots",
        violations == 0,
        format!("1000 random cases, {violations} violations"),
    );
}

#[test]
fn c08_protocol_arithmetic() {
    let mut checks: Vec<(&str, bool)> = Vec::new();
    checks.push((
        "offset 3000 + 5000",
        offset_to_coordinator(3000, 5000) == 8000,
    ));
    let mut fresh = NodeState::node(3, 1);
    apply_sync(&mut fresh, &SyncPacket::from_coordinator(0), 0);
    checks.push((
        "fresh node joins at level 1",
        fresh.authoritative_level == 1,
    ));
    let deeper = SyncPacket {
        timestamp_us: 10,
        authoritative_level: 2,
        offset_with_coordinator_us: 0,
    };
    checks.push((
        "higher level ignored",
        apply_sync(&mut fresh, &deeper, 20).is_none(),
    ));
    checks.push((
        "sync flood",
        sync_flood_schedule(0, 1_000_000).unwrap() == [0, 1_000_000, 2_000_000],
    ));
    checks.push((
        "broadcast n=5",
        model_broadcast_time(5, 0, 8, MODEL_WINDOW_US).unwrap() == 1_500_000,
    ));
    checks.push((
        "broadcast wraps",
        model_broadcast_time(8, 7, 8, MODEL_WINDOW_US).unwrap() == 7,
    ));
    checks.push(("sub-slots per 50 ms", n_subslots(50_000) == 5));
    checks.push((
        "sub-slot n=7",
        subslot_tx_time(7, 0, 5, WHITE_SPACE_US).unwrap() == 17_024,
    ));
    checks.push((
        "sub-slot n=0",
        subslot_tx_time(0, 400, 5, WHITE_SPACE_US).unwrap() == 400,
    ));
    checks.push(("pdr 93/100", compute_pdr(93, 100).unwrap() == 93.0));
    checks.push(("pdr 0/50", compute_pdr(0, 50).unwrap() == 0.0));
    checks.push(("pdr rx > total", compute_pdr(101, 100).is_err()));
    let mut fb = FeedbackState::default();
    checks.push((
        "alpha",
        (fb.alpha - 2.0 / 41.0).abs() < 1e-9 && (fb.alpha - 0.048780).abs() < 1e-6,
    ));
    for _ in 0..40 {
        fb.update_ema(95.0).unwrap();
    }
    fb.update_ema(90.0).unwrap();
    checks.push((
        "ema 95 then 90",
        (fb.ema - 94.756_097_560_975_6).abs() < 1e-9,
    ));
    let mut coord = NodeState::coordinator(1);
    let flood = flood_model_select(&mut coord, Regime::Peak);
    checks.push((
        "flood of five",
        flood.len() == 5 && flood.iter().all(|p| p.age == 0),
    ));
    let mut node = NodeState::node(2, 1);
    let fwd = handle_model_select(&mut node, &flood[0]);
    checks.push((
        "forward at age 1",
        matches!(fwd, ModelSelectAction::Forward(p) if p.age == 1),
    ));
    let ack = handle_model_select(
        &mut node,
        &wsmac_core::protocol::ModelSelectPacket {
            age: 2,
            target_model: Regime::Peak,
        },
    );
    checks.push(("age+1 is an ACK", ack == ModelSelectAction::ImplicitAck));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    verdict(
        8,
        "protocol arithmetic examples",
        failed.is_empty(),
        format!("{} checks, failing: {:?}", checks.len(), failed),
    );
}

#[test]
fn c09_determinism() {
    let cfg = five_node_bursty(
        ProtocolKind::ReceiverAware,
        60 * SECOND_US,
        1800 * SECOND_US,
        42,
    );
    let a = run_simulation(&cfg).unwrap().to_json().unwrap();
    let b = run_simulation(&cfg).unwrap().to_json().unwrap();
    let lpl = five_node_bursty(
        ProtocolKind::LplBaseline { max_tx: 3 },
        60 * SECOND_US,
        1800 * SECOND_US,
        42,
    );
    let c = run_simulation(&lpl).unwrap().to_json().unwrap();
    let d = run_simulation(&lpl).unwrap().to_json().unwrap();
    verdict(
        9,
        "same config and seed give identical result JSON",
        a == b && c == d,
        format!("receiver-aware {} bytes, LPL {} bytes", a.len(), c.len()),
    );
}

fn timed(cfg: &wsmac_sim::SimConfig) -> (SimResult, Duration) {
    let start = Instant::now();
    let r = run_simulation(cfg).unwrap();
    (r, start.elapsed())
}

#[test]
fn c10_quiet_channel() {
    let cfg = five_node_quiet(
        ProtocolKind::ReceiverAware,
        60 * SECOND_US,
        7200 * SECOND_US,
        1,
    );
    let (r, took) = timed(&cfg);
    verdict(
        10,
        "quiet 5-node network",
        r.pdr_pct == 100.0 && r.duty_cycle_pct <= 1.0 && took.as_secs_f64() < 60.0,
        format!(
            "PDR {:.2}% ({} packets), duty-cycle {:.3}%, {:.2}s",
            r.pdr_pct,
            r.ledger_summary.generated,
            r.duty_cycle_pct,
            took.as_secs_f64()
        ),
    );
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn c11_bursty_ordering() {
    let hours2 = 7200 * SECOND_US;
    let t = 60 * SECOND_US;
    let mut lucid = (Vec::new(), Vec::new());
    let mut lpl1 = (Vec::new(), Vec::new());
    let mut lpl3 = (Vec::new(), Vec::new());
    for seed in 1..=3 {
        for (proto, acc) in [
            (ProtocolKind::ReceiverAware, &mut lucid),
            (ProtocolKind::LplBaseline { max_tx: 1 }, &mut lpl1),
            (ProtocolKind::LplBaseline { max_tx: 3 }, &mut lpl3),
        ] {
            let r = run_simulation(&five_node_bursty(proto, t, hours2, seed)).unwrap();
            acc.0.push(r.pdr_pct);
            acc.1.push(r.duty_cycle_pct);
        }
    }
    let gap = mean(&lucid.0) - mean(&lpl1.0);
    let duty_ok = mean(&lpl1.1) > mean(&lucid.1) && mean(&lpl3.1) > mean(&lucid.1);
    verdict(
        11,
        "bursty 5-node ordering",
        gap >= 20.0 && duty_ok,
        format!(
            "PDR receiver-aware {:.2}% vs LPL(1) {:.2}% (gap {gap:.2} pts), LPL(3) {:.2}%; duty {:.3}% vs {:.3}% / {:.3}%",
            mean(&lucid.0),
            mean(&lpl1.0),
            mean(&lpl3.0),
            mean(&lucid.1),
            mean(&lpl1.1),
            mean(&lpl3.1)
        ),
    );
}

#[test]
fn c12_feedback_switch() {
    // long enough for one trigger; a second would need five more periods
    let cfg = feedback_script(630 * SECOND_US, 1);
    let th = cfg.feedback.th_pdr;
    let timeout = cfg.feedback.timeout_periods as u64;
    let initial = cfg.initial_regime;
    let r = run_simulation(&cfg).unwrap();
    let dipped = r
        .ema_series
        .iter()
        .any(|s| s.ema_pct.is_some_and(|e| e < th));
    let one = r.triggers.len() == 1;
    let streak_ok = one && {
        let p = r.triggers[0].period_index;
        let ema_at = |q: u64| {
            r.ema_series
                .iter()
                .find(|s| s.period_index == q)
                .and_then(|s| s.ema_pct)
        };
        let below = (p + 1 - timeout..=p).all(|q| ema_at(q).is_some_and(|e| e < th));
        let before = ema_at(p - timeout).is_none_or(|e| e >= th);
        below && before
    };
    let flipped = r.final_regimes.len() == cfg.topology.len()
        && r.final_regimes.values().all(|&g| g == initial.other());
    let detail = match r.triggers.first() {
        Some(t) => format!(
            "{} trigger(s), first at {:.2}s (period {}, EMA {:.2}%), final regimes {:?}",
            r.triggers.len(),
            t.time_us as f64 / 1e6,
            t.period_index,
            t.ema_pct,
            r.final_regimes.values().collect::<Vec<_>>()
        ),
        None => "no trigger".to_string(),
    };
    verdict(
        12,
        "feedback loop switches models once",
        dipped && one && streak_ok && flipped,
        detail,
    );
}

#[test]
fn c13_free_slot_count_ordering() {
    let t = 10 * SECOND_US;
    let dur = 1800 * SECOND_US;
    let runs: Vec<(u64, SimResult, SimResult)> = std::thread::scope(|s| {
        let handles: Vec<_> = (1..=3u64)
            .map(|seed| {
                s.spawn(move || {
                    let two = run_simulation(&grid16_bursty(
                        ProtocolKind::ReceiverAware,
                        2,
                        t,
                        dur,
                        seed,
                    ))
                    .unwrap();
                    let three = run_simulation(&grid16_bursty(
                        ProtocolKind::ReceiverAware,
                        3,
                        t,
                        dur,
                        seed,
                    ))
                    .unwrap();
                    (seed, two, three)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut ok = true;
    let mut parts = Vec::new();
    for (seed, two, three) in &runs {
        ok &= three.pdr_pct >= two.pdr_pct && three.duty_cycle_pct >= two.duty_cycle_pct;
        parts.push(format!(
            "seed {seed}: PDR {:.2}% -> {:.2}%, duty {:.3}% -> {:.3}%",
            two.pdr_pct, three.pdr_pct, two.duty_cycle_pct, three.duty_cycle_pct
        ));
    }
    verdict(13, "16-node grid, 3 vs 2 free slots", ok, parts.join("; "));
}
