//! Accuracy studies: generate, train and evaluate classifiers, optionally
//! over a parameter grid.

use serde::Serialize;

use super::deterministic::{check_grid, continuous_attack_qber};
use crate::classifier::{evaluate, train, Evaluation, StateClassifier, TrainConfig, TrainOutcome};
use crate::datasets::{
    fit_standardizer, generate_dataset, preprocess, PhotocurrentDataset, TrainSplit,
};
use crate::dynamics::{ChannelParams, MeasurementWindow};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, purpose_seed};

/// Dataset sizes and number of independent trainings per point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StudySizes {
    pub n_train: usize,
    pub n_test: usize,
    pub retrains: usize,
}

impl StudySizes {
    /// 2×10⁴ training and 5×10³ test currents, four trainings.
    pub fn desk() -> Self {
        StudySizes {
            n_train: 20_000,
            n_test: 5_000,
            retrains: 4,
        }
    }

    /// 9×10⁴ training and 10⁴ test currents, four trainings.
    pub fn full() -> Self {
        StudySizes {
            n_train: 90_000,
            n_test: 10_000,
            retrains: 4,
        }
    }
}

/// Preprocessed train and test sets for one attack configuration.
pub struct PreparedData {
    pub train: PhotocurrentDataset,
    pub test: PhotocurrentDataset,
    pub standardizer: crate::datasets::Standardizer,
}

/// Simulates independent train and test currents and preprocesses both with
/// statistics fitted on the training set.
pub fn prepare_data(
    params: &ChannelParams,
    theta: f64,
    window: &MeasurementWindow,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<PreparedData> {
    let raw_train = generate_dataset(n_train, params, theta, window, purpose_seed(seed, "train"))?;
    let raw_test = generate_dataset(n_test, params, theta, window, purpose_seed(seed, "test"))?;
    let split = TrainSplit::from_dataset(raw_train);
    let standardizer = fit_standardizer(&split)?;
    Ok(PreparedData {
        train: preprocess(split.dataset(), &standardizer)?,
        test: preprocess(&raw_test, &standardizer)?,
        standardizer,
    })
}

/// Training `k` of a study seeded with `seed`.
pub fn retrain_config(seed: u64, k: usize) -> TrainConfig {
    let s = derive_seed(purpose_seed(seed, "retrain"), k as u64);
    TrainConfig::with_seeds(purpose_seed(s, "init"), purpose_seed(s, "shuffle"))
}

#[derive(Clone, Debug)]
pub struct AccuracyStats {
    pub evaluations: Vec<Evaluation>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across trainings (0 for a single one).
    pub std: f64,
    pub classifiers: Vec<StateClassifier>,
    pub loss_histories: Vec<Vec<f64>>,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Trains `retrains` models with independent initialization and batch order
/// on one dataset and evaluates each on the same test set.
pub fn accuracy_study(
    params: &ChannelParams,
    theta: f64,
    window: &MeasurementWindow,
    sizes: &StudySizes,
    seed: u64,
) -> Result<AccuracyStats> {
    if sizes.retrains == 0 {
        return Err(Error::param("retrains", "must be >= 1"));
    }
    let data = prepare_data(params, theta, window, sizes.n_train, sizes.n_test, seed)?;
    let mut evaluations = Vec::new();
    let mut classifiers = Vec::new();
    let mut loss_histories = Vec::new();
    for k in 0..sizes.retrains {
        let TrainOutcome {
            model,
            loss_history,
            ..
        } = train(&data.train, &retrain_config(seed, k))?;
        let eval = evaluate(&model, &data.test)?;
        log::info!(
            "theta {theta:.4}, training {k}: accuracy {:.4}",
            eval.accuracy
        );
        evaluations.push(eval);
        loss_histories.push(loss_history);
        classifiers.push(StateClassifier {
            model,
            standardizer: data.standardizer,
            sequence_len: data.train.sequence_len(),
        });
    }
    let accuracies: Vec<f64> = evaluations.iter().map(|e| e.accuracy).collect();
    let (mean, std) = mean_std(&accuracies);
    Ok(AccuracyStats {
        evaluations,
        accuracies,
        mean,
        std,
        classifiers,
        loss_histories,
    })
}

/// `λ = QBER / A`.
pub fn lambda(qber: f64, accuracy: f64) -> Result<f64> {
    if !(accuracy > 0.0) {
        return Err(Error::Numerical(format!(
            "lambda undefined for accuracy {accuracy}"
        )));
    }
    Ok(qber / accuracy)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis: f64,
    pub qber: f64,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub accuracies: Vec<f64>,
    pub lambda: Option<f64>,
}

impl SweepPoint {
    pub fn qber_only(axis: f64, qber: f64) -> Self {
        SweepPoint {
            axis,
            qber,
            accuracy_mean: None,
            accuracy_std: None,
            accuracies: vec![],
            lambda: None,
        }
    }

    pub fn with_accuracies(axis: f64, qber: f64, accuracies: Vec<f64>) -> Result<Self> {
        let (mean, std) = mean_std(&accuracies);
        Ok(SweepPoint {
            axis,
            qber,
            accuracy_mean: Some(mean),
            accuracy_std: Some(std),
            lambda: Some(lambda(qber, mean)?),
            accuracies,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Recomputes λ from the stored QBER and mean accuracy.
    pub fn lambda_curve(&self) -> Result<Vec<(f64, f64)>> {
        self.points
            .iter()
            .map(|p| {
                let a = p.accuracy_mean.ok_or_else(|| {
                    Error::param("sweep", format!("point {} has no accuracy", p.axis))
                })?;
                Ok((p.axis, lambda(p.qber, a)?))
            })
            .collect()
    }

    /// Among the points whose axis value is within `tol` of one of `candidates`,
    /// the one with the smallest λ.
    pub fn argmin_lambda_among(&self, candidates: &[f64], tol: f64) -> Result<Option<f64>> {
        let curve = self.lambda_curve()?;
        Ok(curve
            .into_iter()
            .filter(|(x, _)| candidates.iter().any(|c| (c - x).abs() <= tol))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(x, _)| x))
    }

    /// Indices of local maxima of the mean accuracy on a periodic grid.
    pub fn periodic_local_maxima(&self) -> Vec<usize> {
        let a: Vec<f64> = self
            .points
            .iter()
            .map(|p| p.accuracy_mean.unwrap_or(f64::NAN))
            .collect();
        let n = a.len();
        (0..n)
            .filter(|&k| n >= 3 && a[k] >= a[(k + n - 1) % n] && a[k] >= a[(k + 1) % n])
            .collect()
    }
}

/// Per-θ λ from a sweep.
pub fn lambda_curve(sweep: &SweepResult) -> Result<Vec<(f64, f64)>> {
    sweep.lambda_curve()
}

/// Mean/std test accuracy and deterministic QBER for every measurement angle.
pub fn sweep_theta(
    theta_grid: &[f64],
    params: &ChannelParams,
    window: &MeasurementWindow,
    sizes: &StudySizes,
    master_seed: u64,
) -> Result<SweepResult> {
    check_grid(theta_grid, "theta_grid")?;
    if theta_grid
        .iter()
        .any(|t| !(0.0..std::f64::consts::TAU).contains(t))
    {
        return Err(Error::param("theta_grid", "angles must lie in [0, 2π)"));
    }
    let mut points = Vec::with_capacity(theta_grid.len());
    for (k, &theta) in theta_grid.iter().enumerate() {
        let qber = continuous_attack_qber(params, theta, window)?;
        let stats = accuracy_study(
            params,
            theta,
            window,
            sizes,
            derive_seed(master_seed, k as u64),
        )?;
        points.push(SweepPoint::with_accuracies(theta, qber, stats.accuracies)?);
    }
    Ok(SweepResult {
        axis_name: "theta".into(),
        points,
    })
}

/// Accuracy and QBER against the monitoring duration `Δt` for windows starting at `t_start`.
pub fn accuracy_vs_window(
    delta_t_grid: &[f64],
    params: &ChannelParams,
    theta: f64,
    t_start: f64,
    sizes: &StudySizes,
    master_seed: u64,
) -> Result<SweepResult> {
    check_grid(delta_t_grid, "delta_t_grid")?;
    let mut points = Vec::with_capacity(delta_t_grid.len());
    for (k, &dt) in delta_t_grid.iter().enumerate() {
        let window = MeasurementWindow::new(t_start, dt);
        let qber = continuous_attack_qber(params, theta, &window)?;
        let stats = accuracy_study(
            params,
            theta,
            &window,
            sizes,
            derive_seed(master_seed, k as u64),
        )?;
        points.push(SweepPoint::with_accuracies(dt, qber, stats.accuracies)?);
    }
    Ok(SweepResult {
        axis_name: "delta_t".into(),
        points,
    })
}
