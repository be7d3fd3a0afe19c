//! MAE training with Adam, chronological validation split, and early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::model::forward_graph;
use super::{Adam, ForecasterWeights, NetError, TrainConfig};
use crate::autodiff::{Graph, Tensor};
use crate::data::TrainingExample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mae: f64,
    pub validation_mae: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights from the best validation epoch.
    pub weights: ForecasterWeights,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_validation_mae: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    /// Validation loss improved by more than `min_delta`; snapshot weights.
    Improved,
    Wait,
    /// `patience` epochs have passed without improvement.
    Stop,
}

/// Tracks validation loss and decides when training should halt.
///
/// An epoch counts as an improvement when its loss undercuts the best seen
/// by more than `min_delta`. After `patience` consecutive non-improving
/// epochs the decision is [`StopDecision::Stop`], so with the last
/// improvement at epoch `e` training halts at epoch `e + patience`.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    min_delta: f64,
    patience: usize,
    best: f64,
    best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(min_delta: f64, patience: usize) -> Self {
        EarlyStopping {
            min_delta,
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            wait: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, validation_loss: f64) -> StopDecision {
        if self.best - validation_loss > self.min_delta {
            self.best = validation_loss;
            self.best_epoch = epoch;
            self.wait = 0;
            StopDecision::Improved
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Wait
            }
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

fn check_examples(
    examples: &[TrainingExample],
    w: &ForecasterWeights,
) -> Result<(), NetError> {
    let cfg = &w.config;
    let (ez, ex, ey) = (
        cfg.endogenous_hours,
        cfg.horizon_hours * cfg.exogenous_features,
        cfg.horizon_hours,
    );
    for (index, e) in examples.iter().enumerate() {
        if e.z.len() != ez || e.x.len() != ex || e.y.len() != ey {
            return Err(NetError::ExampleShape {
                index,
                z: e.z.len(),
                x: e.x.len(),
                y: e.y.len(),
                ez,
                ex,
                ey,
            });
        }
    }
    Ok(())
}

/// Stacks a slice of examples into batch tensors (z, x, y).
fn batch_tensors(examples: &[&TrainingExample], w: &ForecasterWeights) -> (Tensor, Tensor, Tensor) {
    let cfg = &w.config;
    let b = examples.len();
    let mut z = Vec::with_capacity(b * cfg.endogenous_hours);
    let mut x = Vec::with_capacity(b * cfg.horizon_hours * cfg.exogenous_features);
    let mut y = Vec::with_capacity(b * cfg.horizon_hours);
    for e in examples {
        z.extend_from_slice(&e.z);
        x.extend_from_slice(&e.x);
        y.extend_from_slice(&e.y);
    }
    (
        Tensor::new(vec![b, cfg.endogenous_hours, 1], z).unwrap(),
        Tensor::new(
            vec![b, cfg.horizon_hours, cfg.exogenous_features],
            x,
        )
        .unwrap(),
        Tensor::new(vec![b, cfg.horizon_hours], y).unwrap(),
    )
}

/// Forward MAE over a set of examples, evaluated in mini-batches.
pub(crate) fn dataset_mae(
    w: &ForecasterWeights,
    examples: &[TrainingExample],
) -> Result<f64, NetError> {
    let mut abs_sum = 0.0;
    let mut count = 0usize;
    for chunk in examples.chunks(w.config.batch_size) {
        let refs: Vec<&TrainingExample> = chunk.iter().collect();
        let (z, x, y) = batch_tensors(&refs, w);
        let out = super::forward(w, &z, &x)?;
        abs_sum += out
            .data()
            .iter()
            .zip(y.data())
            .map(|(&p, &t)| (p - t).abs())
            .sum::<f64>();
        count += y.len();
    }
    Ok(abs_sum / count as f64)
}

/// Trains the forecaster by minimizing per-point MAE with Adam.
///
/// The validation split is the chronologically last
/// `validation_fraction` of the examples; mini-batches are drawn from the
/// training portion only, reshuffled each epoch from the seeded RNG. The
/// returned weights are the snapshot from the best validation epoch.
pub fn train(
    weights: &ForecasterWeights,
    examples: &[TrainingExample],
    tc: &TrainConfig,
) -> Result<TrainOutcome, NetError> {
    tc.validate()?;
    weights.audit()?;
    if examples.len() < 2 {
        return Err(NetError::EmptyDataset(examples.len()));
    }
    check_examples(examples, weights)?;

    let n = examples.len();
    let n_val = ((tc.validation_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let (train_set, val_set) = examples.split_at(n - n_val);

    let mut rng = ChaCha20Rng::seed_from_u64(tc.rng_seed);
    let shapes: Vec<Vec<usize>> = weights
        .params()
        .iter()
        .map(|(_, t)| t.shape().to_vec())
        .collect();
    let mut adam = Adam::new(tc.learning_rate, tc.beta1, tc.beta2, tc.epsilon, &shapes);

    let mut current = weights.clone();
    let mut best = current.clone();
    let mut stopper = EarlyStopping::new(tc.min_delta, tc.patience);
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=tc.max_epochs {
        order.shuffle(&mut rng);
        let mut abs_sum = 0.0;
        let mut count = 0usize;
        for batch_idx in order.chunks(current.config.batch_size) {
            let refs: Vec<&TrainingExample> = batch_idx.iter().map(|&i| &train_set[i]).collect();
            let (z, x, y) = batch_tensors(&refs, &current);
            let mut g = Graph::new();
            let (out, param_nodes) = forward_graph(&mut g, &current, &z, &x)?;
            let flat = g.reshape(out, y.shape())?;
            let y_leaf = g.leaf(y.clone());
            let loss = g.mae(flat, y_leaf)?;
            let loss_value = g.value(loss).item();
            if !loss_value.is_finite() {
                return Err(NetError::Divergence {
                    epoch,
                    context: "training loss",
                });
            }
            g.backward(loss)?;
            let grads: Vec<Tensor> = param_nodes.iter().map(|&id| g.grad(id)).collect();
            adam.step(&mut current.params_mut(), &grads);
            abs_sum += loss_value * y.len() as f64;
            count += y.len();
        }
        let train_mae = abs_sum / count as f64;
        let validation_mae = dataset_mae(&current, val_set)?;
        if !validation_mae.is_finite() {
            return Err(NetError::Divergence {
                epoch,
                context: "validation MAE",
            });
        }
        history.push(EpochStats {
            epoch,
            train_mae,
            validation_mae,
        });
        match stopper.observe(epoch, validation_mae) {
            StopDecision::Improved => best = current.clone(),
            StopDecision::Wait => {}
            StopDecision::Stop => break,
        }
    }

    Ok(TrainOutcome {
        weights: best,
        history,
        best_epoch: stopper.best_epoch(),
        best_validation_mae: stopper.best(),
    })
}
