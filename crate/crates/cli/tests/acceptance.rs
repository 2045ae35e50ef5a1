//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 1 6`.

mod common;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use stdcoder::analysis::{
    beta_grid_search, file_spread_counterfactual, probability_correction_test, token_swap_cost, yy_binning,
    CorrectionConfig,
};
use stdcoder::corpus::Language;
use stdcoder::hmm::{
    expected_coding_time, forward_backward, schedule, train_hmm, train_hmm_observed, DeveloperTimeline, HmmParams,
    PreparedTimeline, TimeFeatures, TrainConfig, DEFAULT_EPSILON, MINUTES_PER_DAY, MINUTES_PER_WEEK,
};
use stdcoder::mdn::{sch_minutes, train_mdn, truncated_mixture_mean, MdnConfig, MdnModel, MixturePrediction};
use stdcoder::seed::{derive, rng};
use stdcoder::simulator::{regime_change_scenario, simulate_developer, simulate_from_model, SimScenario};
use stdcoder::stats::{binomial_sign_test, pearson, wilcoxon_signed_rank};
use stdcoder::synthetic::ChangeGenerator;
use stdcoder::tokenizer::{ChangeFeatures, TokenDictionary};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (usize, &'static str, fn() -> Outcome);

/// (morning, afternoon) rates for each regime.
type Curves = [(f64, f64); 2];

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [Criterion; 8] = [
        (1, "hmm exactness", hmm_exactness),
        (2, "differentiation", differentiation),
        (3, "simulation recovery", simulation_recovery),
        (4, "regime change", regime_change),
        (5, "probability correction", probability_correction),
        (6, "mdn pipeline", mdn_pipeline),
        (7, "analysis recoveries", analysis_recoveries),
        (8, "end-to-end determinism", determinism),
    ];
    let mut failed = 0;
    for (n, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n} ({name}): {verdict} {} [{:.1}s]",
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn clamp(eps: f64, raw: f64) -> f64 {
    eps + (1.0 - 2.0 * eps) / (1.0 + (-raw).exp())
}

/// Smoothed coding marginals and log-likelihood by summing over every state path.
fn brute_force(tl: &DeveloperTimeline, params: &HmmParams) -> (Vec<f64>, f64) {
    let n = tl.len;
    let st: Vec<(f64, f64)> = (0..n)
        .map(|t| params.transition_probs(&TimeFeatures::at(tl.window_start, t, n)))
        .collect();
    let c = clamp(params.epsilon, params.commit_logit);
    let emit = |coding: bool, commit: bool| match (coding, commit) {
        (true, true) => c,
        (true, false) => 1.0 - c,
        (false, true) => 0.0,
        (false, false) => 1.0,
    };
    let pi = st[0].0 / (st[0].0 + st[0].1);
    let mut total = 0.0;
    let mut marg = vec![0.0; n];
    for path in 0u32..(1 << n) {
        let coding = |t: usize| path >> t & 1 == 1;
        let mut p = if coding(0) { pi } else { 1.0 - pi } * emit(coding(0), tl.commit_at(0));
        for t in 1..n {
            let (s, e) = st[t];
            p *= match (coding(t - 1), coding(t)) {
                (true, true) => 1.0 - e,
                (true, false) => e,
                (false, true) => s,
                (false, false) => 1.0 - s,
            };
            p *= emit(coding(t), tl.commit_at(t));
        }
        total += p;
        for (t, m) in marg.iter_mut().enumerate() {
            if coding(t) {
                *m += p;
            }
        }
    }
    (marg.into_iter().map(|m| m / total).collect(), total.ln())
}

fn random_params<R: Rng>(hidden: usize, r: &mut R) -> HmmParams {
    let (s, e, c) = (
        r.random_range(0.02..0.6),
        r.random_range(0.02..0.6),
        r.random_range(0.05..0.9),
    );
    let mut p = HmmParams::init(hidden, DEFAULT_EPSILON, s, e, c, r);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let w2: Vec<f64> = p.w2.iter().map(|w| w + unit.sample(r)).collect();
    p.w2 = w2;
    p
}

fn hmm_exactness() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(derive(0, &["acceptance", "exactness"]));
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let len = r.random_range(1..=12);
        let start = r.random_range(0..52 * MINUTES_PER_WEEK);
        let commits: Vec<usize> = (0..len).filter(|_| r.random_bool(0.3)).collect();
        let tl = DeveloperTimeline::new("x", start, len, commits).unwrap();
        let params = random_params(3, &mut r);
        let post = forward_backward(&tl, &params).unwrap();
        let (marg, ll) = brute_force(&tl, &params);
        worst = worst.max((post.log_likelihood - ll).abs());
        for (a, b) in post.smoothed.iter().zip(&marg) {
            worst = worst.max((a - b).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 5.0,
        format!("max abs error {worst:.2e} over 100 instances in {secs:.2}s"),
    )
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(1e-300)
}

fn central_differences(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut v = x.to_vec();
    (0..x.len())
        .map(|i| {
            v[i] = x[i] + h;
            let up = f(&v);
            v[i] = x[i] - h;
            let down = f(&v);
            v[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn differentiation() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(derive(0, &["acceptance", "gradients"]));
    let mut worst_hmm: f64 = 0.0;
    for _ in 0..20 {
        let len = 2 * MINUTES_PER_DAY as usize;
        let commits: Vec<usize> = (0..len)
            .filter(|&t| (540..1020).contains(&(t % 1440)))
            .filter(|_| r.random_bool(0.03))
            .collect();
        let start = r.random_range(0..52) * MINUTES_PER_WEEK;
        let tl = DeveloperTimeline::new("x", start, len, commits).unwrap();
        let params = random_params(4, &mut r);
        let prep = PreparedTimeline::new(&tl);
        let (_, grad) = prep.gradient(&params).unwrap();
        let mut probe = params.clone();
        let fd = central_differences(&params.to_flat(), 1e-5, |v| {
            probe.set_flat(v);
            prep.log_likelihood(&probe).unwrap()
        });
        worst_hmm = worst_hmm.max(relative_error(&grad, &fd));
    }
    let mut worst_mdn: f64 = 0.0;
    for _ in 0..20 {
        let (width, rows, k) = (7, 16, r.random_range(1..=4));
        let mut model = MdnModel::init(width, &[5, 4], k, 1e-3, (0.0, 2.0), &mut r);
        // Random biases keep pre-activations off the ReLU kink, where zero-initialized biases can sit exactly.
        let jitter = Normal::new(0.0, 0.3).unwrap();
        let flat: Vec<f64> = model.to_flat().iter().map(|w| w + jitter.sample(&mut r)).collect();
        model.set_flat(&flat);
        let x = Array2::from_shape_fn((rows, width), |_| r.random_range(-2.0..2.0));
        let y: Vec<f64> = (0..rows).map(|_| r.random_range(0.0..2.0)).collect();
        let (_, grad) = model.loss_and_gradient(x.view(), &y);
        let mut probe = model.clone();
        let fd = central_differences(&model.to_flat(), 1e-6, |v| {
            probe.set_flat(v);
            probe.mean_loss(x.view(), &y)
        });
        worst_mdn = worst_mdn.max(relative_error(&grad, &fd));
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst_hmm < 1e-4 && worst_mdn < 1e-4 && secs < 30.0,
        format!("max relative error hmm {worst_hmm:.2e} mdn {worst_mdn:.2e} in {secs:.1}s"),
    )
}

/// Pearson r between true and expected coding time, evaluated every 100 epochs.
fn recovery_run(run: u64) -> (usize, Vec<f64>) {
    let sim = simulate_developer(
        &SimScenario::default(),
        "d",
        &mut rng(derive(0, &["recovery", &run.to_string()])),
    );
    let cm = sim.timeline.commit_minutes.clone();
    let truth: Vec<f64> = cm
        .windows(2)
        .map(|w| sim.coding_minutes(w[0], w[1]) as f64 / 60.0)
        .collect();
    let cfg = TrainConfig {
        seed: run,
        ..Default::default()
    };
    let mut rs = Vec::new();
    train_hmm_observed(&sim.timeline, &cfg, |epoch, p, _| {
        if epoch > 0 && epoch % 100 == 0 {
            let post = forward_backward(&sim.timeline, p).unwrap();
            let pred: Vec<f64> = cm
                .windows(2)
                .map(|w| expected_coding_time(&post, w[0], w[1]).unwrap())
                .collect();
            rs.push(pearson(&truth, &pred).unwrap().coefficient);
        }
    })
    .unwrap();
    (cm.len(), rs)
}

fn simulation_recovery() -> Outcome {
    let mut best = Vec::new();
    let mut min_commits = usize::MAX;
    for run in 0..20 {
        let (commits, rs) = recovery_run(run);
        min_commits = min_commits.min(commits);
        best.push(rs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let hits = best.iter().filter(|&&r| r >= 0.65).count();
    let mut sorted = best.clone();
    sorted.sort_by(f64::total_cmp);
    let median = (sorted[9] + sorted[10]) / 2.0;
    outcome(
        hits >= 18 && median >= 0.69 && min_commits >= 100,
        format!(
            "{hits}/20 runs reach r >= 0.65, median best r {median:.3}, min r {:.3}, fewest commits {min_commits}",
            sorted[0]
        ),
    )
}

/// Mean weekday morning (9 to 13) and afternoon (13 to 17) value of `per_minute` over `weeks`.
fn segment_means(per_minute: &[f64], weeks: std::ops::Range<usize>) -> (f64, f64) {
    let week = MINUTES_PER_WEEK as usize;
    let (mut m, mut mn, mut a, mut an) = (0.0, 0, 0.0, 0);
    for t in weeks.start * week..weeks.end * week {
        let mow = t % week;
        let (day, hour) = (mow / 1440, mow % 1440 / 60);
        if day >= 5 {
            continue;
        }
        if (9..13).contains(&hour) {
            m += per_minute[t];
            mn += 1;
        } else if (13..17).contains(&hour) {
            a += per_minute[t];
            an += 1;
        }
    }
    (m / mn as f64, a / an as f64)
}

/// Per-regime (morning, afternoon) commit-rate curves: learned from the chain prior, true from the coding mask.
fn regime_curves(n: usize) -> (Curves, Curves) {
    let scenario = regime_change_scenario(n);
    let sim = simulate_developer(&scenario, "d", &mut rng(derive(0, &["regime", &n.to_string()])));
    let model = train_hmm(&sim.timeline, &TrainConfig::default()).unwrap();
    let s = schedule(&model.params, &sim.timeline);
    let mut p = s.initial()[0];
    let mut learned = Vec::with_capacity(sim.timeline.len);
    for t in 0..sim.timeline.len {
        if t > 0 {
            let a = s.matrix(t);
            p = p * a[0][0] + (1.0 - p) * a[1][0];
        }
        learned.push(p * s.commit);
    }
    let truth: Vec<f64> = sim
        .coding
        .iter()
        .map(|&c| if c { scenario.commit_prob } else { 0.0 })
        .collect();
    let regimes = [0..n, n..2 * n];
    let curves = |v: &[f64]| {
        [
            segment_means(v, regimes[0].clone()),
            segment_means(v, regimes[1].clone()),
        ]
    };
    (curves(&learned), curves(&truth))
}

fn gap(c: &Curves) -> f64 {
    ((c[0].0 - c[1].0).abs() + (c[0].1 - c[1].1).abs()) / 2.0
}

fn regime_change() -> Outcome {
    let (long, long_truth) = regime_curves(13);
    let order = |c: &Curves| [c[0].0 > c[0].1, c[1].0 > c[1].1];
    let swap_ok = order(&long_truth) == [true, false] && order(&long) == order(&long_truth);
    let (short, short_truth) = regime_curves(2);
    let averaged_ok = gap(&short) < gap(&short_truth);
    let fmt = |c: &Curves| format!("({:.4},{:.4})/({:.4},{:.4})", c[0].0, c[0].1, c[1].0, c[1].1);
    outcome(
        swap_ok && averaged_ok,
        format!(
            "n=13 learned {} truth {}; n=2 learned gap {:.4} truth gap {:.4}",
            fmt(&long),
            fmt(&long_truth),
            gap(&short),
            gap(&short_truth)
        ),
    )
}

fn binomial_coefficient(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Commits every `every` minutes from 9:00 through weekday working hours.
fn metronome(every: i64, weeks: i64) -> DeveloperTimeline {
    let start = stdcoder::simulator::SIM_EPOCH_MINUTE;
    let minutes: Vec<i64> = (0..weeks * MINUTES_PER_WEEK)
        .filter(|m| {
            let (day, mod_day) = (m % MINUTES_PER_WEEK / 1440, m % 1440);
            day < 5 && (540..1020).contains(&mod_day) && (mod_day - 540) % every == 0
        })
        .map(|m| start + m)
        .collect();
    DeveloperTimeline::from_commit_times("metronome", &minutes).unwrap()
}

fn probability_correction() -> Outcome {
    let cfg = CorrectionConfig::default();
    let fp_rate = [0, 1, 9, 10].iter().map(|&k| binomial_coefficient(10, k)).sum::<f64>() / 1024.0;
    let base = simulate_developer(
        &SimScenario::default(),
        "d",
        &mut rng(derive(0, &["correction", "base"])),
    );
    let model = train_hmm(
        &base.timeline,
        &TrainConfig {
            max_epochs: 300,
            ..Default::default()
        },
    )
    .unwrap();
    // Long histories, as the test is meant for authors with over a thousand commits.
    let len = 26 * MINUTES_PER_WEEK as usize;
    let (mut tested, mut flagged, mut fewest) = (0u64, 0u64, usize::MAX);
    for i in 0..10 {
        let dev = simulate_from_model(
            &model.params,
            "x",
            base.timeline.window_start,
            len,
            &mut rng(derive(0, &["correction", &i.to_string()])),
        );
        fewest = fewest.min(dev.timeline.commit_minutes.len());
        let post = forward_backward(&dev.timeline, &model.params).unwrap();
        let report = probability_correction_test(&post, &cfg).unwrap();
        tested += report.tested as u64;
        flagged += report.flagged as u64;
    }
    let p = binomial_sign_test(flagged, tested, fp_rate).unwrap();

    // Gaps well beyond the typical developer's, so each next commit comes later than the model expects.
    let mean_gap = stdcoder::stats::mean(
        &base
            .timeline
            .commit_minutes
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64)
            .filter(|&g| g < 480.0)
            .collect::<Vec<_>>(),
    );
    let tl = metronome(90, 4);
    let post = forward_backward(&tl, &model.params).unwrap();
    let report = probability_correction_test(&post, &cfg).unwrap();
    let top = &report.deciles[cfg.deciles - 1];
    let top_mean = top.mean_correction.unwrap_or(f64::NAN);
    outcome(
        fewest > 1000 && p >= 0.05 && top_mean < 0.0,
        format!(
            "flagged {flagged}/{tested} vs rate {fp_rate:.4} (binomial p {p:.3}, fewest commits {fewest}); 90-minute metronome against mean gap {mean_gap:.0} min: top decile mean correction {top_mean:.3e} over {} min",
            top.minutes
        ),
    )
}

/// Mean of the mixture restricted to `[0, 1]` from `draws` proposals, rejecting those outside.
fn monte_carlo_truncated_mean<R: Rng>(m: &MixturePrediction, draws: usize, r: &mut R) -> f64 {
    let unit = Normal::new(0.0, 1.0).unwrap();
    let cumulative: Vec<f64> =
        m.pi.iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
    let (mut sum, mut kept) = (0.0, 0usize);
    for _ in 0..draws {
        let u = r.random::<f64>() * cumulative[cumulative.len() - 1];
        let k = cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1);
        let y = m.mu[k] + m.sigma[k] * unit.sample(r);
        if (0.0..=1.0).contains(&y) {
            sum += y;
            kept += 1;
        }
    }
    sum / kept as f64
}

fn mdn_pipeline() -> Outcome {
    let data = ChangeGenerator::default().sample(20_000, &mut rng(derive(0, &["acceptance", "yy"])));
    let feats: Vec<ChangeFeatures> = data.iter().map(|d| d.features.clone()).collect();
    let targets: Vec<Vec<f64>> = data.iter().map(|d| vec![d.hours]).collect();
    let cfg = MdnConfig {
        batch_size: 256,
        ..Default::default()
    };
    let model = train_mdn(&feats, &targets, &cfg).unwrap();
    let hold: HashSet<&String> = model.training.as_ref().unwrap().holdout_commits.iter().collect();
    let (hf, hy): (Vec<ChangeFeatures>, Vec<f64>) = data
        .iter()
        .filter(|d| hold.contains(&d.features.commit))
        .map(|d| (d.features.clone(), d.hours))
        .unzip();
    let pred = model.predict_sch_batch(&hf, (0.0, 1.0)).unwrap();
    let r2 = yy_binning(&pred, &hy, 50).unwrap().r_squared;

    let mut r = rng(derive(0, &["acceptance", "truncated"]));
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let k = r.random_range(1..=20);
        let w: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        let mix = MixturePrediction::new(
            w.iter().map(|x| x / total).collect(),
            (0..k).map(|_| r.random_range(-0.3..1.3)).collect(),
            (0..k).map(|_| r.random_range(0.1..0.8)).collect(),
        )
        .unwrap();
        let exact = truncated_mixture_mean(&mix, 0.0, 1.0).unwrap();
        worst = worst.max((exact - monte_carlo_truncated_mean(&mix, 10_000_000, &mut r)).abs());
    }
    outcome(
        r2 >= 0.95 && worst < 1e-3,
        format!(
            "holdout yy R2 {r2:.4} over {} changes; truncated mean vs Monte Carlo max error {worst:.2e} h",
            hy.len()
        ),
    )
}

fn planted_beta(beta: f64, seed: u64) -> f64 {
    let mut r = rng(derive(seed, &["acceptance", "beta"]));
    let added: Vec<f64> = (0..3000).map(|_| r.random_range(0..300) as f64).collect();
    let deleted: Vec<f64> = (0..3000).map(|_| r.random_range(0..300) as f64).collect();
    let time: Vec<f64> = added
        .iter()
        .zip(&deleted)
        .map(|(a, d)| (a + beta * d) / 60.0 + r.random_range(-0.1..0.1))
        .collect();
    beta_grid_search(&added, &deleted, &time).unwrap().beta
}

fn planted_model(gen: &ChangeGenerator, seed: u64) -> (MdnModel, Vec<ChangeFeatures>) {
    let data = gen.sample(10_000, &mut rng(seed));
    let feats: Vec<ChangeFeatures> = data.iter().map(|d| d.features.clone()).collect();
    let targets: Vec<Vec<f64>> = data.iter().map(|d| vec![d.hours]).collect();
    let cfg = MdnConfig {
        batch_size: 256,
        epochs: 15,
        ..Default::default()
    };
    (train_mdn(&feats, &targets, &cfg).unwrap(), feats)
}

fn analysis_recoveries() -> Outcome {
    let betas: Vec<(f64, f64)> = [0.0, 0.5, 1.0].iter().map(|&b| (b, planted_beta(b, 1))).collect();
    let beta_ok = betas.iter().all(|(b, found)| (b - found).abs() <= 0.05);

    let per_file_hours = 0.05;
    let planted = ChangeGenerator {
        token_effects: vec![(0, 0.1), (2, 0.03)],
        per_file_hours,
        ..Default::default()
    };
    let (model, feats) = planted_model(&planted, derive(0, &["acceptance", "planted"]));
    let words: Vec<String> = (0..planted.tokens).map(|i| format!("w{i}")).collect();
    let dict = TokenDictionary::new(Language::Java, vec![], vec![], words).unwrap();
    let swap = token_swap_cost(&model, &dict, &feats, "w0", "w1", 10_000, 7, (0.0, 1.0)).unwrap();
    let swap_ok =
        swap.a_to_b.mean_delta_seconds < 0.0 && swap.b_to_a.mean_delta_seconds > 0.0 && swap.a_to_b.p_value < 0.01;

    let spread = file_spread_counterfactual(&model, &feats, 5, (0.0, 1.0)).unwrap();
    let all_deltas: Vec<f64> = feats
        .iter()
        .filter(|f| f.churn() >= 5)
        .map(|f| {
            let a = model.predict_sch(&f.with_files_touched(1), (0.0, 1.0)).unwrap();
            let b = model.predict_sch(&f.with_files_touched(5), (0.0, 1.0)).unwrap();
            (b - a) * 3600.0
        })
        .collect();
    let wilcoxon = wilcoxon_signed_rank(&all_deltas).unwrap().p_value;
    let spread_ok = spread.mean_per_file_seconds > 0.0 && wilcoxon < 0.01;

    let null = ChangeGenerator {
        token_effects: planted.token_effects.clone(),
        per_file_hours: 0.0,
        ..Default::default()
    };
    let (null_model, null_feats) = planted_model(&null, derive(0, &["acceptance", "null"]));
    let null_spread = file_spread_counterfactual(&null_model, &null_feats, 5, (0.0, 1.0)).unwrap();
    let threshold = 0.1 * per_file_hours * 3600.0;
    let null_ok = null_spread.mean_per_file_seconds.abs() < threshold;

    outcome(
        beta_ok && swap_ok && spread_ok && null_ok,
        format!(
            "beta {:?}; swap w0->w1 {:.1}s w1->w0 {:.1}s p {:.4}; spread {:.1}s/file wilcoxon p {wilcoxon:.2e}; null spread {:.1}s/file (limit {threshold:.0})",
            betas,
            swap.a_to_b.mean_delta_seconds,
            swap.b_to_a.mean_delta_seconds,
            swap.a_to_b.p_value,
            spread.mean_per_file_seconds,
            null_spread.mean_per_file_seconds,
        ),
    )
}

/// Relative path to content of every report and artifact under `root`, manifests and cache excluded.
fn artifacts(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            if path.is_dir() {
                if name != "cache" {
                    stack.push(path);
                }
            } else if !name.ends_with(".manifest.json") {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let repo = common::fixture_repo(tmp.path(), 60, 3);
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let dir = tmp.path().join(name);
        fs::create_dir_all(&dir).unwrap();
        let cfg = common::quick_config(&dir, &repo, "");
        let out = common::stdcoder(&["pipeline", "--config", cfg.to_str().unwrap()]);
        if out.status.code() != Some(0) {
            return outcome(
                false,
                format!("pipeline failed: {}", String::from_utf8_lossy(&out.stderr)),
            );
        }
        runs.push(artifacts(&dir.join("work")));
    }
    let differing: Vec<String> = runs[0]
        .iter()
        .filter(|(p, bytes)| runs[1].get(*p) != Some(*bytes))
        .map(|(p, _)| p.display().to_string())
        .collect();
    let same_set = runs[0].keys().eq(runs[1].keys());
    let text = String::from_utf8(runs[0][Path::new("predictions.ndjson")].clone()).unwrap();
    let sch: Vec<f64> = text
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["sch_hours"]
                .as_f64()
                .unwrap()
        })
        .collect();
    let in_bounds = !sch.is_empty() && sch.iter().all(|h| (0.0..=1.0).contains(h));
    let unit = sch_minutes(0.123) == 7.38;
    outcome(
        differing.is_empty() && same_set && in_bounds && unit,
        format!(
            "{} artifacts compared, differing {differing:?}; {} predictions in [0, 1]: {in_bounds}; 0.123 h = {} min",
            runs[0].len(),
            sch.len(),
            sch_minutes(0.123)
        ),
    )
}
