//! File-based workflow behind the `dlca` binary: each step reads the
//! artifacts of the previous one from the output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::classifier::{
    evaluate, load_checkpoint, save_checkpoint, train, write_loss_csv, Checkpoint,
    CheckpointMetadata, Evaluation,
};
use crate::config::RunConfig;
use crate::datasets::{
    self, fit_standardizer, generate_with_bin_factor, preprocess, TrainSplit, GENERATOR_VERSION,
};
use crate::error::{Error, Result};
use crate::experiments::{
    accuracy_vs_window, feedback_heatmap, optimized_angle_traces, qber_heatmap,
    read_sweep_accuracies, render_curves_svg, render_heatmap_svg, summary_table, sweep_theta,
    uniform_grid, write_heatmap_csv, write_sweep_csv, write_table_csv, write_traces_csv,
    AccuracyProxy, MeasuredAccuracies, RunHeader, SweepResult, TableRow, WINDOWED_THETA_OVER_PI,
    WINDOW_LENGTH, WINDOW_START,
};
use crate::rng::purpose_seed;

pub const TRAIN_FILE: &str = "train.dset";
pub const TEST_FILE: &str = "test.dset";
pub const MODEL_FILE: &str = "model.ckpt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const ACCURACY_THETA_FILE: &str = "accuracy_theta.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    QberMap,
    FeedbackMap,
    AccuracyTheta,
    AccuracyWindow,
    Lambda,
    AngleTraces,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::QberMap,
        Figure::FeedbackMap,
        Figure::AccuracyTheta,
        Figure::AccuracyWindow,
        Figure::Lambda,
        Figure::AngleTraces,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::QberMap => "qber-map",
            Figure::FeedbackMap => "feedback-map",
            Figure::AccuracyTheta => "accuracy-theta",
            Figure::AccuracyWindow => "accuracy-window",
            Figure::Lambda => "lambda",
            Figure::AngleTraces => "angle-traces",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure `{s}`")))
    }

    fn file_stem(self) -> String {
        self.name().replace('-', "_")
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output.dir)?;
    Ok(cfg.output.dir.clone())
}

fn require(path: &Path, command: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            artifact: path.display().to_string(),
            command: command.to_string(),
        })
    }
}

fn header(cfg: &RunConfig, what: &str, seed: u64) -> RunHeader {
    RunHeader::new(what, &cfg.channel, Some(seed)).with_config(cfg.to_toml())
}

/// Simulates the train and test sets and echoes the effective configuration.
pub fn cmd_generate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let window = cfg.attack.window(&cfg.channel);
    let seed = cfg.dataset.seed;
    let mut written = Vec::new();
    for (name, n, purpose) in [
        (TRAIN_FILE, cfg.dataset.n_train, "train"),
        (TEST_FILE, cfg.dataset.n_test, "test"),
    ] {
        let ds = generate_with_bin_factor(
            n,
            &cfg.channel,
            cfg.attack.theta(),
            &window,
            cfg.dataset.bin_factor,
            purpose_seed(seed, purpose),
        )?;
        let path = dir.join(name);
        datasets::save(&ds, &path)?;
        log::info!(
            "wrote {} currents of length {} to {}",
            ds.len(),
            ds.sequence_len(),
            path.display()
        );
        written.push(path);
    }
    let echo = dir.join("config.toml");
    fs::write(&echo, cfg.to_toml())?;
    written.push(echo);
    Ok(written)
}

/// Fits the standardizer on the training set, trains one model and saves it
/// with its loss curve.
pub fn cmd_train(cfg: &RunConfig, dataset: Option<&Path>) -> Result<Checkpoint> {
    let dir = out_dir(cfg)?;
    let path = dataset
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(TRAIN_FILE));
    require(&path, "dlca generate")?;
    let raw = datasets::load(&path)?;
    let meta = raw.metadata.clone();
    let split = TrainSplit::from_dataset(raw);
    let standardizer = fit_standardizer(&split)?;
    let train_set = preprocess(split.dataset(), &standardizer)?;
    let tc = cfg.training.train_config();
    let out = train(&train_set, &tc)?;
    let ck = Checkpoint {
        model: out.model,
        metadata: CheckpointMetadata {
            standardizer,
            sequence_len: train_set.sequence_len(),
            train: tc,
            dataset: meta,
            code_version: GENERATOR_VERSION.to_string(),
        },
    };
    save_checkpoint(&ck, &dir.join(MODEL_FILE))?;
    write_loss_csv(
        &out.loss_history,
        &dir.join("loss.csv"),
        &header(cfg, "training loss", tc.init_seed).render(),
    )?;
    Ok(ck)
}

/// Accuracy of the saved model on a test set; appends a line to the metrics file.
pub fn cmd_eval(cfg: &RunConfig, dataset: Option<&Path>) -> Result<Evaluation> {
    let dir = out_dir(cfg)?;
    let model_path = dir.join(MODEL_FILE);
    require(&model_path, "dlca train")?;
    let ck = load_checkpoint(&model_path)?;
    let path = dataset
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(TEST_FILE));
    require(&path, "dlca generate")?;
    let raw = datasets::load(&path)?;
    if raw.sequence_len() != ck.metadata.sequence_len {
        return Err(Error::Shape(format!(
            "model was trained on currents of length {}, test set has length {}",
            ck.metadata.sequence_len,
            raw.sequence_len()
        )));
    }
    let test = preprocess(&raw, &ck.metadata.standardizer)?;
    let eval = evaluate(&ck.model, &test)?;
    eval.write_confusion_csv(
        &dir.join("confusion.csv"),
        &header(cfg, "confusion matrix", cfg.dataset.seed).render(),
    )?;
    let metrics = dir.join(METRICS_FILE);
    let fresh = !metrics.exists();
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&metrics)?;
    if fresh {
        writeln!(f, "theta_over_pi,t_start,delta_t,n,accuracy")?;
    }
    let m = &raw.metadata;
    writeln!(
        f,
        "{},{},{},{},{}",
        m.theta / std::f64::consts::PI,
        m.window.t_start,
        m.window.delta_t,
        eval.n,
        eval.accuracy
    )?;
    Ok(eval)
}

fn grid_svg(
    cfg: &RunConfig,
    path: &Path,
    title: &str,
    x: &str,
    y: &str,
    curves: &[(String, Vec<(f64, f64)>)],
) -> Result<()> {
    if cfg.output.svg {
        render_curves_svg(&path.with_extension("svg"), title, x, y, curves)?;
    }
    Ok(())
}

fn sweep_curves(s: &SweepResult, scale: f64) -> Vec<(String, Vec<(f64, f64)>)> {
    vec![
        (
            "accuracy".into(),
            s.points
                .iter()
                .filter_map(|p| p.accuracy_mean.map(|a| (p.axis / scale, a)))
                .collect(),
        ),
        (
            "std".into(),
            s.points
                .iter()
                .filter_map(|p| p.accuracy_std.map(|a| (p.axis / scale, a)))
                .collect(),
        ),
        (
            "qber".into(),
            s.points.iter().map(|p| (p.axis / scale, p.qber)).collect(),
        ),
    ]
}

/// Writes the CSV (and optionally SVG) for one figure; returns the CSV path.
pub fn cmd_sweep(cfg: &RunConfig, figure: Figure) -> Result<PathBuf> {
    use std::f64::consts::{PI, TAU};
    let dir = out_dir(cfg)?;
    let csv = dir.join(format!("{}.csv", figure.file_stem()));
    let p = &cfg.channel;
    let sw = &cfg.sweep;
    match figure {
        Figure::QberMap => {
            let thetas = uniform_grid(0.0, TAU, sw.theta_points);
            let times: Vec<f64> = (0..sw.time_points)
                .map(|k| p.t_final * k as f64 / (sw.time_points - 1) as f64)
                .collect();
            let map = qber_heatmap(&thetas, &times, p)?;
            write_heatmap_csv(
                &csv,
                &map,
                &header(cfg, "QBER over measurement angle and time", sw.seed),
            )?;
            if cfg.output.svg {
                render_heatmap_svg(&csv.with_extension("svg"), "QBER(theta, t)", &map)?;
            }
        }
        Figure::FeedbackMap => {
            let thetas = uniform_grid(0.0, TAU, sw.theta_points);
            let phis = uniform_grid(0.0, TAU, sw.phi_points);
            let window = cfg.attack.window(p);
            let map = feedback_heatmap(&thetas, &phis, p, &window)?;
            write_heatmap_csv(
                &csv,
                &map,
                &header(
                    cfg,
                    "feedback QBER over measurement and feedback angles",
                    sw.seed,
                ),
            )?;
            if cfg.output.svg {
                render_heatmap_svg(
                    &csv.with_extension("svg"),
                    "QBER(theta, phi) with feedback",
                    &map,
                )?;
            }
        }
        Figure::AccuracyTheta => {
            let thetas = uniform_grid(0.0, TAU, sw.theta_points);
            let s = sweep_theta(
                &thetas,
                p,
                &cfg.attack.window(p),
                &cfg.study_sizes(),
                sw.seed,
            )?;
            write_sweep_csv(
                &csv,
                &s,
                &header(cfg, "accuracy against measurement angle", sw.seed),
            )?;
            grid_svg(
                cfg,
                &csv,
                "accuracy against theta",
                "theta/pi",
                "",
                &sweep_curves(&s, PI),
            )?;
        }
        Figure::AccuracyWindow => {
            let s = accuracy_vs_window(
                &sw.delta_t_grid,
                p,
                cfg.attack.theta(),
                sw.window_start,
                &cfg.study_sizes(),
                sw.seed,
            )?;
            write_sweep_csv(
                &csv,
                &s,
                &header(cfg, "accuracy against monitoring duration", sw.seed),
            )?;
            grid_svg(
                cfg,
                &csv,
                "accuracy against window length",
                "delta_t",
                "",
                &sweep_curves(&s, 1.0),
            )?;
        }
        Figure::Lambda => {
            let curve = lambda_from_cache(&dir)?;
            let mut f = fs::File::create(&csv)?;
            for line in header(cfg, "QBER / accuracy against measurement angle", sw.seed)
                .render()
                .lines()
            {
                writeln!(f, "# {line}")?;
            }
            writeln!(f, "theta,qber,accuracy,lambda")?;
            for (t, q, a) in &curve {
                writeln!(f, "{t},{q},{a},{}", q / a)?;
            }
            grid_svg(
                cfg,
                &csv,
                "lambda against theta",
                "theta/pi",
                "lambda",
                &[(
                    "lambda".into(),
                    curve.iter().map(|(t, q, a)| (t / PI, q / a)).collect(),
                )],
            )?;
        }
        Figure::AngleTraces => {
            let cached = dir.join(ACCURACY_THETA_FILE);
            require(&cached, "dlca sweep --figure accuracy-theta")?;
            let proxy = AccuracyProxy::from_points(&read_sweep_accuracies(&cached)?)?;
            let traces = optimized_angle_traces(p, &proxy)?;
            write_traces_csv(
                &csv,
                &traces,
                &header(cfg, "QBER under optimized angle schedules", sw.seed),
            )?;
            let curves: Vec<(String, Vec<(f64, f64)>)> = traces
                .iter()
                .map(|t| {
                    (
                        t.schedule.objective.name().to_string(),
                        t.times
                            .iter()
                            .copied()
                            .zip(t.qber.iter().copied())
                            .collect(),
                    )
                })
                .collect();
            grid_svg(
                cfg,
                &csv,
                "QBER under optimized schedules",
                "t",
                "QBER",
                &curves,
            )?;
        }
    }
    Ok(csv)
}

/// `(θ, QBER, accuracy)` from a cached accuracy sweep.
fn lambda_from_cache(dir: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let cached = dir.join(ACCURACY_THETA_FILE);
    require(&cached, "dlca sweep --figure accuracy-theta")?;
    let text = fs::read_to_string(&cached)?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<f64> = line
            .split(',')
            .take(3)
            .filter_map(|c| c.parse().ok())
            .collect();
        if cols.len() != 3 {
            return Err(Error::Format(format!(
                "{}: malformed line `{line}`",
                cached.display()
            )));
        }
        out.push((cols[0], cols[1], cols[2]));
    }
    if out.is_empty() {
        return Err(Error::Format(format!("{} has no data", cached.display())));
    }
    Ok(out)
}

fn measured_accuracies(path: &Path) -> Result<MeasuredAccuracies> {
    let text = fs::read_to_string(path)?;
    let mut m = MeasuredAccuracies::default();
    for line in text.lines().skip(1) {
        let c: Vec<f64> = line.split(',').filter_map(|x| x.parse().ok()).collect();
        if c.len() != 5 {
            return Err(Error::Format(format!(
                "{}: malformed line `{line}`",
                path.display()
            )));
        }
        let near = |a: f64, b: f64| (a - b).abs() < 1e-9;
        if near(c[0], 0.5) && near(c[1], 0.0) {
            m.sigma_z = Some(c[4]);
        }
        if near(c[0], WINDOWED_THETA_OVER_PI)
            && near(c[1], WINDOW_START)
            && near(c[2], WINDOW_LENGTH)
        {
            m.windowed = Some(c[4]);
        }
    }
    Ok(m)
}

/// Collates the scheme comparison from computed QBERs and earlier evaluations.
pub fn cmd_report(cfg: &RunConfig) -> Result<Vec<TableRow>> {
    let dir = out_dir(cfg)?;
    let metrics = dir.join(METRICS_FILE);
    require(&metrics, "dlca generate && dlca train && dlca eval")?;
    let measured = measured_accuracies(&metrics)?;
    if measured.sigma_z.is_none() {
        log::warn!(
            "no evaluation with theta = 0.5 pi over the full window in {}",
            metrics.display()
        );
    }
    if measured.windowed.is_none() {
        log::warn!(
            "no evaluation with theta = 1.86 pi over [0.1, 0.5] in {}",
            metrics.display()
        );
    }
    let rows = summary_table(&cfg.channel, &measured)?;
    write_table_csv(
        &dir.join("summary.csv"),
        &rows,
        &header(cfg, "attack scheme comparison", cfg.dataset.seed),
    )?;
    Ok(rows)
}
