//! TOML run configuration shared by the command-line front end and the examples.
//!
//! Every section is optional and falls back to the defaults below, but a
//! section that is present must spell out all of its keys. Unknown keys are
//! rejected everywhere.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bb84::AttackStrategy;
use crate::classifier::TrainConfig;
use crate::dynamics::{ChannelParams, MeasurementWindow, DEFAULT_BIN_FACTOR};
use crate::error::{Error, Result};
use crate::experiments::StudySizes;
use crate::qcore::{feedback_operator, measurement_operator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    None,
    Projective,
    Continuous,
    Feedback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub kind: AttackKind,
    /// Measurement angle in units of π.
    pub theta_over_pi: f64,
    /// Feedback angle in units of π.
    pub phi_over_pi: f64,
    /// Interception time of the projective attack.
    pub t_star: f64,
    /// `[t_start, delta_t]`; monitoring covers the whole run when absent.
    pub window: Option<[f64; 2]>,
}

impl Default for AttackSection {
    fn default() -> Self {
        AttackSection {
            kind: AttackKind::Continuous,
            theta_over_pi: 1.86,
            phi_over_pi: 0.94,
            t_star: 0.3,
            window: None,
        }
    }
}

impl AttackSection {
    pub fn theta(&self) -> f64 {
        self.theta_over_pi * PI
    }

    pub fn phi(&self) -> f64 {
        self.phi_over_pi * PI
    }

    pub fn window(&self, params: &ChannelParams) -> MeasurementWindow {
        match self.window {
            Some([t0, dt]) => MeasurementWindow::new(t0, dt),
            None => MeasurementWindow::full(params),
        }
    }

    pub fn strategy(&self, params: &ChannelParams) -> AttackStrategy {
        let window = self.window(params);
        match self.kind {
            AttackKind::None => AttackStrategy::None,
            AttackKind::Projective => AttackStrategy::Projective {
                t_star: self.t_star,
            },
            AttackKind::Continuous => AttackStrategy::Continuous {
                e: measurement_operator(self.theta()),
                window,
            },
            AttackKind::Feedback => AttackStrategy::ContinuousWithFeedback {
                e: measurement_operator(self.theta()),
                f: feedback_operator(self.phi()),
                window,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub bin_factor: usize,
}

impl Default for DatasetSection {
    fn default() -> Self {
        let s = StudySizes::desk();
        DatasetSection {
            n_train: s.n_train,
            n_test: s.n_test,
            seed: 1,
            bin_factor: DEFAULT_BIN_FACTOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub init_seed: u64,
    pub shuffle_seed: u64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainingSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            init_seed: 1,
            shuffle_seed: 2,
        }
    }
}

impl TrainingSection {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            init_seed: self.init_seed,
            shuffle_seed: self.shuffle_seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub theta_points: usize,
    pub time_points: usize,
    pub phi_points: usize,
    /// Window lengths for the accuracy-against-duration study.
    pub delta_t_grid: Vec<f64>,
    pub window_start: f64,
    pub retrains: usize,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            theta_points: 64,
            time_points: 61,
            phi_points: 64,
            delta_t_grid: vec![0.1, 0.2, 0.4, 0.8, 1.6, 2.9],
            window_start: 0.1,
            retrains: 4,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("dlca-out"),
            svg: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub attack: AttackSection,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        let w = self.attack.window(&self.channel);
        if self.attack.kind != AttackKind::None {
            w.validate(&self.channel)?;
        }
        if self.attack.kind == AttackKind::Projective
            && !(0.0..=self.channel.t_final).contains(&self.attack.t_star)
        {
            return Err(Error::param("attack.t_star", "must lie in [0, t_final]"));
        }
        if self.dataset.bin_factor == 0 {
            return Err(Error::param("dataset.bin_factor", "must be >= 1"));
        }
        self.training.train_config().validate()?;
        if self.sweep.retrains == 0 {
            return Err(Error::param("sweep.retrains", "must be >= 1"));
        }
        if self.sweep.theta_points == 0 || self.sweep.time_points < 2 || self.sweep.phi_points == 0
        {
            return Err(Error::param(
                "sweep",
                "grids need theta_points, phi_points >= 1 and time_points >= 2",
            ));
        }
        Ok(())
    }

    pub fn study_sizes(&self) -> StudySizes {
        StudySizes {
            n_train: self.dataset.n_train,
            n_test: self.dataset.n_test,
            retrains: self.sweep.retrains,
        }
    }
}
