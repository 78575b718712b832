use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::{argmax, Architecture, LstmClassifier, CLASSES};
use crate::bb84::StateGuesser;
use crate::datasets::{PhotocurrentDataset, Standardizer};
use crate::error::{Error, Result};
use crate::qcore::PureState;
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub init_seed: u64,
    #[serde(default)]
    pub architecture: Architecture,
    #[serde(default)]
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 1,
            batch_size: 32,
            shuffle_seed: 0,
            init_seed: 0,
            architecture: Architecture::default(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn with_seeds(init_seed: u64, shuffle_seed: u64) -> Self {
        TrainConfig {
            init_seed,
            shuffle_seed,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be >= 1"));
        }
        if self.epochs != 1 {
            log::warn!("training for {} epochs instead of one", self.epochs);
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: LstmClassifier,
    /// Mean loss of every mini-batch, in update order.
    pub loss_history: Vec<f64>,
    pub optimizer: AdamState,
}

fn require_preprocessed(ds: &PhotocurrentDataset, what: &'static str) -> Result<()> {
    if ds.metadata.transforms.is_empty() {
        return Err(Error::param(
            what,
            "expects a preprocessed (standardized, time-flipped) dataset",
        ));
    }
    ds.validate()
}

/// Mini-batch Adam over shuffled batches. Per-sample gradients may be
/// computed in parallel; they are summed in sample order.
pub fn train(train_set: &PhotocurrentDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    require_preprocessed(train_set, "train_set")?;
    if train_set.is_empty() {
        return Err(Error::param("train_set", "is empty"));
    }
    let mut model = LstmClassifier::init(config.architecture, config.init_seed);
    let mut adam = AdamState::new(model.n_params(), config.adam);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut rng = seeded(config.shuffle_seed);
    let mut history = Vec::new();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let scale = 1.0 / idx.len() as f64;
            let parts: Vec<(f64, Vec<f64>)> = idx
                .par_iter()
                .map(|&i| {
                    let s = &train_set.samples[i];
                    let mut g = vec![0.0; model.n_params()];
                    let l = model.accumulate_gradient(&s.current, s.label, scale, &mut g);
                    (l, g)
                })
                .collect();
            let mut grad = vec![0.0; model.n_params()];
            let mut batch_loss = 0.0;
            for (l, g) in &parts {
                batch_loss += l * scale;
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numerical(format!(
                    "training diverged at epoch {epoch}, batch {b} (loss {batch_loss}); \
                     last finite loss {:?}",
                    history.last()
                )));
            }
            adam_step(model.params_mut(), &grad, &mut adam)?;
            history.push(batch_loss);
        }
    }
    model.check_finite()?;
    Ok(TrainOutcome {
        model,
        loss_history: history,
        optimizer: adam,
    })
}

/// Accuracy and confusion counts (`confusion[truth][predicted]`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub n: u64,
    pub accuracy: f64,
    pub confusion: [[u64; CLASSES]; CLASSES],
}

impl Evaluation {
    fn from_confusion(confusion: [[u64; CLASSES]; CLASSES]) -> Self {
        let n: u64 = confusion.iter().flatten().sum();
        let hits: u64 = (0..CLASSES).map(|k| confusion[k][k]).sum();
        Evaluation {
            n,
            accuracy: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
            confusion,
        }
    }

    /// Fraction of samples of class `k` predicted as `k`.
    pub fn class_accuracy(&self, k: usize) -> f64 {
        let row: u64 = self.confusion[k].iter().sum();
        if row == 0 {
            f64::NAN
        } else {
            self.confusion[k][k] as f64 / row as f64
        }
    }

    pub fn predicted_counts(&self) -> [u64; CLASSES] {
        let mut out = [0; CLASSES];
        for row in &self.confusion {
            for (k, c) in row.iter().enumerate() {
                out[k] += c;
            }
        }
        out
    }

    pub fn write_confusion_csv(&self, path: &Path, header: &str) -> Result<()> {
        let mut file = fs::File::create(path)?;
        for line in header.lines() {
            writeln!(file, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["truth", "pred_0", "pred_1", "pred_plus", "pred_minus"])?;
        for (k, row) in self.confusion.iter().enumerate() {
            let mut rec = vec![PureState::ALL[k].symbol().to_string()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn all_probs(model: &LstmClassifier, set: &PhotocurrentDataset) -> Result<Vec<[f64; CLASSES]>> {
    model.check_finite()?;
    set.samples
        .par_iter()
        .map(|s| model.forward(&s.current))
        .collect()
}

/// Argmax predictions against the labels of a preprocessed test set.
pub fn evaluate(model: &LstmClassifier, test_set: &PhotocurrentDataset) -> Result<Evaluation> {
    require_preprocessed(test_set, "test_set")?;
    let probs = all_probs(model, test_set)?;
    let mut confusion = [[0u64; CLASSES]; CLASSES];
    for (s, p) in test_set.samples.iter().zip(&probs) {
        confusion[s.label as usize][argmax(p)] += 1;
    }
    Ok(Evaluation::from_confusion(confusion))
}

/// Per class: how often it is the ground truth, how often it is predicted,
/// and the summed probability the model assigns to the ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassConfidence {
    pub state: PureState,
    pub truth_count: u64,
    pub prediction_count: u64,
    pub summed_confidence: f64,
}

pub fn confidence_report(
    model: &LstmClassifier,
    test_set: &PhotocurrentDataset,
) -> Result<Vec<ClassConfidence>> {
    require_preprocessed(test_set, "test_set")?;
    let probs = all_probs(model, test_set)?;
    let mut out: Vec<ClassConfidence> = PureState::ALL
        .iter()
        .map(|&state| ClassConfidence {
            state,
            truth_count: 0,
            prediction_count: 0,
            summed_confidence: 0.0,
        })
        .collect();
    for (s, p) in test_set.samples.iter().zip(&probs) {
        let y = s.label as usize;
        out[y].truth_count += 1;
        out[y].summed_confidence += p[y];
        out[argmax(p)].prediction_count += 1;
    }
    Ok(out)
}

/// Hidden state `h_t` of every LSTM unit (rows) at every input step (columns).
pub fn hidden_activation_trace(model: &LstmClassifier, current: &[f64]) -> Result<Vec<Vec<f64>>> {
    Ok(model.forward_with_trace(current)?.1)
}

pub fn write_trace_csv(trace: &[Vec<f64>], path: &Path, header: &str) -> Result<()> {
    let mut file = fs::File::create(path)?;
    for line in header.lines() {
        writeln!(file, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    let steps = trace.first().map_or(0, |r| r.len());
    let mut head = vec!["unit".to_string()];
    head.extend((0..steps).map(|t| format!("t{t}")));
    w.write_record(&head)?;
    for (u, row) in trace.iter().enumerate() {
        let mut rec = vec![u.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_loss_csv(history: &[f64], path: &Path, header: &str) -> Result<()> {
    let mut file = fs::File::create(path)?;
    for line in header.lines() {
        writeln!(file, "# {line}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["batch", "loss"])?;
    for (b, l) in history.iter().enumerate() {
        w.write_record([b.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// A trained model bundled with the standardizer fitted on its training data,
/// usable directly on raw currents.
#[derive(Clone, Debug, PartialEq)]
pub struct StateClassifier {
    pub model: LstmClassifier,
    pub standardizer: Standardizer,
    pub sequence_len: usize,
}

impl StateClassifier {
    pub fn predict_raw(&self, raw_current: &[f64]) -> Result<[f64; CLASSES]> {
        if raw_current.len() != self.sequence_len {
            return Err(Error::Shape(format!(
                "model expects currents of length {}, got {}",
                self.sequence_len,
                raw_current.len()
            )));
        }
        self.model
            .forward(&self.standardizer.transform(raw_current))
    }
}

impl StateGuesser for StateClassifier {
    fn guess(&self, current: &[f64]) -> Result<PureState> {
        Ok(PureState::ALL[argmax(&self.predict_raw(current)?)])
    }
}
