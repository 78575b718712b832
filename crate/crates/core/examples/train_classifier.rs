//! Generate photocurrents, train the LSTM for one epoch and report test accuracy.
//!
//! cargo run --release --example train_classifier -- [theta/π] [n_train] [n_test] [seed] [t_start] [delta_t]
//!
//! Defaults: θ = 1.86π over the full window, 20000/5000 samples.

use std::f64::consts::PI;
use std::time::Instant;

use dlca::classifier::{confidence_report, evaluate, train, TrainConfig};
use dlca::datasets::{fit_standardizer, generate_dataset, preprocess, TrainSplit};
use dlca::dynamics::{ChannelParams, MeasurementWindow};
use dlca::rng::purpose_seed;

fn arg<T: std::str::FromStr>(k: usize, default: T) -> T {
    std::env::args()
        .nth(k)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> dlca::Result<()> {
    let theta = arg(1, 1.86) * PI;
    let n_train = arg(2, 20_000usize);
    let n_test = arg(3, 5_000usize);
    let seed = arg(4, 1u64);
    let params = ChannelParams::default();
    let window = match (std::env::args().nth(5), std::env::args().nth(6)) {
        (Some(_), Some(_)) => MeasurementWindow::new(arg(5, 0.0), arg(6, 3.0)),
        _ => MeasurementWindow::full(&params),
    };

    let t0 = Instant::now();
    let raw_train = generate_dataset(
        n_train,
        &params,
        theta,
        &window,
        purpose_seed(seed, "train"),
    )?;
    let raw_test = generate_dataset(n_test, &params, theta, &window, purpose_seed(seed, "test"))?;
    println!(
        "generated {} + {} currents of length {} in {:.1?}",
        n_train,
        n_test,
        raw_train.sequence_len(),
        t0.elapsed()
    );

    let train_split = TrainSplit::from_dataset(raw_train);
    let s = fit_standardizer(&train_split)?;
    let train_set = preprocess(train_split.dataset(), &s)?;
    let test_set = preprocess(&raw_test, &s)?;

    let t1 = Instant::now();
    let cfg = TrainConfig::with_seeds(purpose_seed(seed, "init"), purpose_seed(seed, "shuffle"));
    let out = train(&train_set, &cfg)?;
    let h = &out.loss_history;
    println!(
        "trained {} batches in {:.1?}; loss {:.3} -> {:.3}",
        h.len(),
        t1.elapsed(),
        h[0],
        h[h.len().saturating_sub(20)..].iter().sum::<f64>() / 20f64.min(h.len() as f64)
    );

    let eval = evaluate(&out.model, &test_set)?;
    println!(
        "theta = {:.3}π  accuracy = {:.4}",
        theta / PI,
        eval.accuracy
    );
    for row in confidence_report(&out.model, &test_set)? {
        println!(
            "  {}: truth {:5}  predicted {:5}  class accuracy {:.3}  summed confidence {:.1}",
            row.state,
            row.truth_count,
            row.prediction_count,
            eval.class_accuracy(row.state.index()),
            row.summed_confidence
        );
    }
    Ok(())
}
