use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{mdn_loss, MdnModel, Standardizer, DEFAULT_COMPONENTS, DEFAULT_HIDDEN, DEFAULT_SIGMA_FLOOR};
use crate::error::{Error, Result};
use crate::optim::Adam;
use crate::tokenizer::ChangeFeatures;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdnConfig {
    pub hidden: Vec<usize>,
    pub components: usize,
    pub sigma_floor: f64,
    /// Range over which the component mean biases are spread at init, in hours.
    pub mean_init: (f64, f64),
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Fraction of commits held out; all samples of a commit stay on one side.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for MdnConfig {
    fn default() -> Self {
        MdnConfig {
            hidden: DEFAULT_HIDDEN.to_vec(),
            components: DEFAULT_COMPONENTS,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            mean_init: (0.0, 2.0),
            learning_rate: 1e-3,
            batch_size: 1024,
            epochs: 20,
            holdout_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    /// Mean training NLL after each epoch.
    pub train_nll: Vec<f64>,
    /// Mean holdout NLL after each epoch; empty without a holdout.
    pub holdout_nll: Vec<f64>,
    pub train_rows: usize,
    pub holdout_rows: usize,
    pub holdout_commits: Vec<String>,
    pub config: MdnConfig,
}

/// Mean NLL over every target sample, evaluating one mixture per commit.
fn grouped_loss(model: &MdnModel, rows: &[Vec<f64>], targets: &[&Vec<f64>]) -> f64 {
    let preds = model.forward_rows(rows);
    let (mut sum, mut n) = (0.0, 0usize);
    for (p, ys) in preds.iter().zip(targets) {
        sum += ys.iter().map(|&y| mdn_loss(p, y)).sum::<f64>();
        n += ys.len();
    }
    sum / n.max(1) as f64
}

/// Fit the mixture network by minibatch Adam on the mean negative log-likelihood.
///
/// `targets[i]` holds the coding-time samples (hours) for `features[i]`; every
/// sample becomes one training row.
pub fn train_mdn(features: &[ChangeFeatures], targets: &[Vec<f64>], config: &MdnConfig) -> Result<MdnModel> {
    if features.len() != targets.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} target lists",
            features.len(),
            targets.len()
        )));
    }
    if targets.iter().all(Vec::is_empty) {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if targets.iter().flatten().any(|y| !(y.is_finite() && *y >= 0.0)) {
        return Err(Error::InvalidInput("targets must be finite and non-negative".into()));
    }
    if config.components == 0 || config.batch_size == 0 {
        return Err(Error::InvalidInput("components and batch size must be positive".into()));
    }
    let width = features[0].width();
    if let Some(f) = features.iter().find(|f| f.width() != width) {
        return Err(Error::WidthMismatch {
            expected: width,
            got: f.width(),
        });
    }

    let mut rng = crate::seed::rng(config.seed);
    let mut order: Vec<usize> = (0..features.len()).filter(|&i| !targets[i].is_empty()).collect();
    order.shuffle(&mut rng);
    let n_holdout = ((order.len() as f64 * config.holdout_fraction).round() as usize).min(order.len() - 1);
    let (holdout_idx, train_idx) = order.split_at(n_holdout);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();
    let mut holdout_idx = holdout_idx.to_vec();
    holdout_idx.sort_unstable();

    let raw: Vec<Vec<f64>> = features.iter().map(ChangeFeatures::transformed).collect();
    let train_matrix = Array2::from_shape_fn((train_idx.len(), width), |(i, j)| raw[train_idx[i]][j]);
    let standardizer = Standardizer::fit(train_matrix.view());
    let prepared: Vec<Vec<f64>> = raw
        .into_iter()
        .map(|mut x| {
            standardizer.apply(&mut x);
            x
        })
        .collect();

    let mut model = MdnModel::init(
        width,
        &config.hidden,
        config.components,
        config.sigma_floor,
        config.mean_init,
        &mut rng,
    );
    model.standardizer = standardizer;

    let rows: Vec<(usize, f64)> = train_idx
        .iter()
        .flat_map(|&i| targets[i].iter().map(move |&y| (i, y)))
        .collect();
    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| prepared[i].clone()).collect();
    let train_y: Vec<&Vec<f64>> = train_idx.iter().map(|&i| &targets[i]).collect();
    let hold_x: Vec<Vec<f64>> = holdout_idx.iter().map(|&i| prepared[i].clone()).collect();
    let hold_y: Vec<&Vec<f64>> = holdout_idx.iter().map(|&i| &targets[i]).collect();

    let mut flat = model.to_flat();
    let mut opt = Adam::new(flat.len(), config.learning_rate);
    let mut shuffled = rows.clone();
    let mut log = TrainingLog {
        train_nll: Vec::with_capacity(config.epochs),
        holdout_nll: Vec::new(),
        train_rows: rows.len(),
        holdout_rows: hold_y.iter().map(|y| y.len()).sum(),
        holdout_commits: holdout_idx.iter().map(|&i| features[i].commit.clone()).collect(),
        config: config.clone(),
    };
    for epoch in 0..config.epochs {
        shuffled.shuffle(&mut rng);
        for batch in shuffled.chunks(config.batch_size) {
            let x = Array2::from_shape_fn((batch.len(), width), |(r, j)| prepared[batch[r].0][j]);
            let y: Vec<f64> = batch.iter().map(|b| b.1).collect();
            let (_, grad) = model.loss_and_gradient(x.view(), &y);
            opt.step(&mut flat, &grad);
            model.set_flat(&flat);
        }
        let train = grouped_loss(&model, &train_x, &train_y);
        log.train_nll.push(train);
        if !hold_x.is_empty() {
            log.holdout_nll.push(grouped_loss(&model, &hold_x, &hold_y));
        }
        log::debug!("mdn epoch {epoch}: train nll {train:.5}");
    }
    model.training = Some(log);
    Ok(model)
}
