use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use stdcoder::mdn::{mdn_loss, normal_pdf, train_mdn, MdnConfig, MixturePrediction};
use stdcoder::synthetic::ChangeGenerator;
use stdcoder::tokenizer::ChangeFeatures;

fn dataset(gen: &ChangeGenerator, n: usize, seed: u64) -> (Vec<ChangeFeatures>, Vec<Vec<f64>>) {
    let data = gen.sample(n, &mut stdcoder::seed::rng(seed));
    data.into_iter().map(|d| (d.features, vec![d.hours])).unzip()
}

fn small_config(epochs: usize) -> MdnConfig {
    MdnConfig {
        epochs,
        batch_size: 256,
        ..Default::default()
    }
}

#[test]
fn training_nll_decreases_on_an_easy_problem() {
    let gen = ChangeGenerator {
        noise_slope: 0.0,
        ..Default::default()
    };
    let (x, y) = dataset(&gen, 4000, 1);
    let m = train_mdn(
        &x,
        &y,
        &MdnConfig {
            epochs: 10,
            ..Default::default()
        },
    )
    .unwrap();
    let log = m.training.unwrap();
    assert_eq!(log.train_nll.len(), 10);
    for w in log.train_nll.windows(2) {
        assert!(w[1] < w[0], "{:?}", log.train_nll);
    }
}

#[test]
fn bimodal_targets_use_several_components() {
    let gen = ChangeGenerator::default();
    let mut rng = stdcoder::seed::rng(2);
    let feats: Vec<ChangeFeatures> = (0..6000).map(|i| gen.sample_features(i, &mut rng)).collect();
    let noise = Normal::new(0.0, 0.03).unwrap();
    let targets: Vec<Vec<f64>> = feats
        .iter()
        .map(|f| {
            let shift = 0.05 * (f.token_counts[0] as f64).ln_1p();
            let y = if rng.random::<bool>() { 0.2 + shift } else { 0.8 - shift };
            vec![(y + noise.sample(&mut rng)).abs()]
        })
        .collect();
    let m = train_mdn(&feats, &targets, &small_config(15)).unwrap();
    let mut multi = 0;
    for f in feats.iter().take(200) {
        let p = m.forward(f).unwrap();
        // Mass on each side of the midpoint, aggregated over components.
        let low: f64 = (0..p.components()).filter(|&k| p.mu[k] < 0.5).map(|k| p.pi[k]).sum();
        let heavy = p.pi.iter().filter(|&&w| w > 0.1).count();
        if heavy >= 2 && low > 0.3 && low < 0.7 {
            multi += 1;
        }
    }
    assert!(multi >= 180, "{multi} of 200 predictions are bimodal");
}

/// Best constant mixture by EM on the training targets.
fn constant_mixture(y: &[f64], k: usize) -> MixturePrediction {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut pi = vec![1.0 / k as f64; k];
    let mut mu: Vec<f64> = (0..k).map(|j| sorted[(2 * j + 1) * y.len() / (2 * k)]).collect();
    let mut sigma = vec![0.1; k];
    for _ in 0..300 {
        let mut nk = vec![0.0; k];
        let mut s1 = vec![0.0; k];
        let mut s2 = vec![0.0; k];
        for &v in y {
            let dens: Vec<f64> = (0..k).map(|j| pi[j] * normal_pdf(v, mu[j], sigma[j])).collect();
            let total: f64 = dens.iter().sum();
            for j in 0..k {
                let r = dens[j] / total;
                nk[j] += r;
                s1[j] += r * v;
                s2[j] += r * v * v;
            }
        }
        for j in 0..k {
            pi[j] = nk[j] / y.len() as f64;
            mu[j] = s1[j] / nk[j];
            sigma[j] = (s2[j] / nk[j] - mu[j] * mu[j]).max(1e-6).sqrt();
        }
    }
    MixturePrediction { pi, mu, sigma }
}

#[test]
fn shuffled_labels_are_not_learnable() {
    let (x, mut y) = dataset(&ChangeGenerator::default(), 5000, 3);
    y.shuffle(&mut stdcoder::seed::rng(4));
    let m = train_mdn(&x, &y, &small_config(10)).unwrap();
    let log = m.training.as_ref().unwrap();
    let hold: HashSet<&String> = log.holdout_commits.iter().collect();
    let (mut train_y, mut hold_y) = (Vec::new(), Vec::new());
    for (f, t) in x.iter().zip(&y) {
        if hold.contains(&f.commit) {
            hold_y.push(t[0]);
        } else {
            train_y.push(t[0]);
        }
    }
    let baseline = constant_mixture(&train_y, 4);
    let baseline_nll = hold_y.iter().map(|&v| mdn_loss(&baseline, v)).sum::<f64>() / hold_y.len() as f64;
    let model_nll = *log.holdout_nll.last().unwrap();
    assert!(
        model_nll >= baseline_nll - 0.01,
        "model {model_nll} beats constant mixture {baseline_nll}"
    );
}

#[test]
fn training_is_reproducible() {
    let (x, y) = dataset(&ChangeGenerator::default(), 800, 5);
    let cfg = MdnConfig {
        hidden: vec![32, 16],
        components: 4,
        epochs: 3,
        batch_size: 64,
        seed: 9,
        ..Default::default()
    };
    let a = train_mdn(&x, &y, &cfg).unwrap();
    let b = train_mdn(&x, &y, &cfg).unwrap();
    assert_eq!(a, b);
    let c = train_mdn(&x, &y, &MdnConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.layers, c.layers);
}

#[test]
fn multi_sample_targets_and_validation() {
    let (x, y) = dataset(&ChangeGenerator::default(), 50, 6);
    let many: Vec<Vec<f64>> = y.iter().map(|t| vec![t[0], t[0] * 0.5, t[0] * 1.5]).collect();
    let cfg = MdnConfig {
        hidden: vec![8],
        components: 2,
        epochs: 1,
        holdout_fraction: 0.2,
        ..Default::default()
    };
    let m = train_mdn(&x, &many, &cfg).unwrap();
    let log = m.training.unwrap();
    assert_eq!(log.holdout_commits.len(), 10);
    assert_eq!(log.train_rows, 120);
    assert_eq!(log.holdout_rows, 30);
    assert!(train_mdn(&[], &[], &cfg).is_err());
    assert!(train_mdn(&x[..1], &[vec![-1.0]], &cfg).is_err());
}
