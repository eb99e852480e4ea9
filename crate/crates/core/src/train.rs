//! Adam with global-norm clipping, and the seeded training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::LabelPath;
use crate::lstm::{backward_bptt, forward_sequence, sequence_loss, Gradients, LstmError, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    /// Sequences per parameter update.
    pub batch_size: usize,
    pub seed: u64,
    /// Global L2 norm above which gradients are rescaled.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 20,
            batch_size: 1,
            seed: 0,
            clip_norm: 5.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LstmError> {
        let bad = |what: &str| Err(LstmError::Config(format!("{what} must be positive")));
        if self.hidden == 0 {
            return bad("hidden");
        }
        if self.epochs == 0 {
            return bad("epochs");
        }
        if self.batch_size == 0 {
            return bad("batch_size");
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
            ("clip_norm", self.clip_norm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name);
            }
        }
        for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&v) || v == 0.0 {
                return Err(LstmError::Config(format!("{name} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// First and second moment estimates, laid out like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub first: Network,
    pub second: Network,
}

impl AdamMoments {
    pub fn zeros_like(net: &Network) -> Self {
        let z = Network::zeros(net.inputs(), net.hidden(), net.classes());
        Self {
            first: z.clone(),
            second: z,
        }
    }
}

pub fn global_norm(grads: &Gradients) -> f64 {
    grads
        .tensors()
        .iter()
        .flat_map(|t| t.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

/// One bias-corrected Adam step (`step` is 1-based), after rescaling `grads`
/// so its global norm does not exceed `cfg.clip_norm`.
pub fn adam_update(
    params: &mut Network,
    grads: &Gradients,
    moments: &mut AdamMoments,
    cfg: &TrainConfig,
    step: u64,
) {
    assert!(step >= 1, "Adam step counter is 1-based");
    let norm = global_norm(grads);
    let clip = if norm > cfg.clip_norm {
        cfg.clip_norm / norm
    } else {
        1.0
    };
    let bc1 = 1.0 - cfg.beta1.powf(step as f64);
    let bc2 = 1.0 - cfg.beta2.powf(step as f64);
    let AdamMoments { first, second } = moments;
    for (((p, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(first.tensors_mut())
        .zip(second.tensors_mut())
    {
        for i in 0..p.len() {
            let gi = g[i] * clip;
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// An input sequence with one 1-based label per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSequence {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: Network,
    /// Mean per-sequence loss for each epoch, measured during the epoch.
    pub loss_history: Vec<f64>,
}

fn check_dataset(dataset: &[TrainingSequence], classes: usize) -> Result<usize, LstmError> {
    let first = dataset
        .first()
        .ok_or_else(|| LstmError::Config("training set is empty".into()))?;
    let n = first.inputs.first().map_or(0, Vec::len);
    if classes < 2 {
        return Err(LstmError::Config(
            "at least two classes are required".into(),
        ));
    }
    for (index, seq) in dataset.iter().enumerate() {
        let fail = |reason: String| Err(LstmError::Dataset { index, reason });
        if seq.inputs.is_empty() {
            return fail("no samples".into());
        }
        if seq.labels.len() != seq.inputs.len() {
            return fail(format!(
                "{} labels for {} samples",
                seq.labels.len(),
                seq.inputs.len()
            ));
        }
        if let Some(t) = seq.inputs.iter().position(|x| x.len() != n) {
            return fail(format!(
                "sample {} has {} channels, expected {n}",
                t + 1,
                seq.inputs[t].len()
            ));
        }
        if let Some(t) = seq.labels.iter().position(|&l| l == 0 || l > classes) {
            return fail(format!(
                "label {} at timestep {} outside 1..={classes}",
                seq.labels[t],
                t + 1
            ));
        }
    }
    if n == 0 {
        return Err(LstmError::Dataset {
            index: 0,
            reason: "samples have zero channels".into(),
        });
    }
    Ok(n)
}

fn sequence_gradient(
    net: &Network,
    seq: &TrainingSequence,
    classes: usize,
) -> Result<(f64, Gradients), LstmError> {
    let labels = LabelPath::new(seq.labels.clone(), classes)
        .map_err(|e| LstmError::Config(e.to_string()))?;
    let trace = forward_sequence(&net.lstm, &net.output, &seq.inputs)?;
    let loss = sequence_loss(&trace, &labels)?;
    let grads = backward_bptt(&net.lstm, &net.output, &trace, &labels)?;
    Ok((loss, grads))
}

/// Trains a fresh network on `dataset`.
///
/// Every epoch reshuffles with a seeded RNG; each batch's per-sequence
/// gradients are averaged in dataset order before one Adam step, so the
/// result is bit-identical for a fixed seed regardless of thread count.
pub fn train(
    dataset: &[TrainingSequence],
    classes: usize,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, LstmError> {
    train_with_progress(dataset, classes, cfg, |_, _| {})
}

/// [`train`] with a callback receiving `(epoch, mean_loss)` after every epoch.
pub fn train_with_progress(
    dataset: &[TrainingSequence],
    classes: usize,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome, LstmError> {
    cfg.validate()?;
    let n = check_dataset(dataset, classes)?;
    let mut net = Network::init(n, cfg.hidden, classes, cfg.seed);
    let mut moments = AdamMoments::zeros_like(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5EED));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut step = 0u64;
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<Result<(f64, Gradients), LstmError>> = batch
                .par_iter()
                .map(|&i| sequence_gradient(&net, &dataset[i], classes))
                .collect();
            let mut total = Network::zeros(n, cfg.hidden, classes);
            for r in results {
                let (loss, g) = r?;
                epoch_loss += loss;
                total.accumulate(&g);
            }
            total.scale(1.0 / batch.len() as f64);
            step += 1;
            adam_update(&mut net, &total, &mut moments, cfg, step);
        }
        let mean = epoch_loss / dataset.len() as f64;
        loss_history.push(mean);
        on_epoch(epoch + 1, mean);
    }
    Ok(TrainOutcome {
        network: net,
        loss_history,
    })
}
