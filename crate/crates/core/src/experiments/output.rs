//! CSV and SVG writers for study results. Every CSV starts with `#` comment
//! lines carrying the run header.

use std::fs;
use std::io::Write;
use std::path::Path;

use plotters::prelude::*;

use super::deterministic::Heatmap;
use super::schedule::AngleTrace;
use super::study::SweepResult;
use super::summary::TableRow;
use crate::datasets::GENERATOR_VERSION;
use crate::dynamics::ChannelParams;
use crate::error::{Error, Result};

/// Provenance block written at the top of every output file.
#[derive(Clone, Debug, PartialEq)]
pub struct RunHeader {
    pub what: String,
    pub params: ChannelParams,
    pub seed: Option<u64>,
    /// Full effective configuration, if the run came from a config file.
    pub config: Option<String>,
}

impl RunHeader {
    pub fn new(what: impl Into<String>, params: &ChannelParams, seed: Option<u64>) -> Self {
        RunHeader {
            what: what.into(),
            params: *params,
            seed,
            config: None,
        }
    }

    pub fn with_config(mut self, config: impl Into<String>) -> Self {
        self.config = Some(config.into());
        self
    }

    pub fn render(&self) -> String {
        let p = &self.params;
        let mut s = format!(
            "{}\ncode_version = {}\ngamma_d = {}, gamma_e = {}, eta = {}, omega = {}, t_final = {}, dt = {}\n",
            self.what, GENERATOR_VERSION, p.gamma_d, p.gamma_e, p.eta, p.omega, p.t_final, p.dt
        );
        if let Some(seed) = self.seed {
            s.push_str(&format!("master_seed = {seed}\n"));
        }
        if let Some(c) = &self.config {
            s.push_str("config:\n");
            s.push_str(c);
        }
        s
    }
}

fn csv_with_header(path: &Path, header: &RunHeader) -> Result<csv::Writer<fs::File>> {
    let mut file = fs::File::create(path)?;
    for line in header.render().lines() {
        writeln!(file, "# {line}")?;
    }
    Ok(csv::WriterBuilder::new().flexible(true).from_writer(file))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long format: one `row,col,value` line per cell.
pub fn write_heatmap_csv(path: &Path, map: &Heatmap, header: &RunHeader) -> Result<()> {
    let mut w = csv_with_header(path, header)?;
    w.write_record([map.row_name, map.col_name, "qber"])?;
    for (r, row) in map.rows.iter().zip(&map.values) {
        for (c, v) in map.cols.iter().zip(row) {
            w.write_record([r.to_string(), c.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv(path: &Path, sweep: &SweepResult, header: &RunHeader) -> Result<()> {
    let mut w = csv_with_header(path, header)?;
    let retrains = sweep
        .points
        .iter()
        .map(|p| p.accuracies.len())
        .max()
        .unwrap_or(0);
    let mut head = vec![
        sweep.axis_name.clone(),
        "qber".into(),
        "accuracy_mean".into(),
        "accuracy_std".into(),
        "lambda".into(),
    ];
    head.extend((0..retrains).map(|k| format!("accuracy_{k}")));
    w.write_record(&head)?;
    for p in &sweep.points {
        let mut rec = vec![
            p.axis.to_string(),
            p.qber.to_string(),
            opt(p.accuracy_mean),
            opt(p.accuracy_std),
            opt(p.lambda),
        ];
        rec.extend(p.accuracies.iter().map(|a| a.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back the axis and mean accuracy columns of a sweep CSV.
pub fn read_sweep_accuracies(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)?;
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(body.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k).and_then(|s| s.parse().ok()).ok_or_else(|| {
                Error::Format(format!("{}: bad value in column {k}", path.display()))
            })
        };
        out.push((num(0)?, num(2)?));
    }
    Ok(out)
}

pub fn write_traces_csv(path: &Path, traces: &[AngleTrace], header: &RunHeader) -> Result<()> {
    let mut w = csv_with_header(path, header)?;
    w.write_record(["objective", "t", "theta", "qber"])?;
    for tr in traces {
        for (t, q) in tr.times.iter().zip(&tr.qber) {
            let theta = tr.schedule.theta_at((*t - 1e-12).max(0.0));
            w.write_record([
                tr.schedule.objective.name().to_string(),
                t.to_string(),
                theta.to_string(),
                q.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_table_csv(path: &Path, rows: &[TableRow], header: &RunHeader) -> Result<()> {
    let mut w = csv_with_header(path, header)?;
    w.write_record([
        "scheme",
        "qber",
        "accuracy",
        "reference_qber",
        "reference_accuracy",
        "note",
    ])?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            opt(r.qber),
            opt(r.accuracy),
            r.reference_qber.clone(),
            r.reference_accuracy.clone(),
            r.note.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Named curves on shared axes.
pub fn render_curves_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    curves: &[(String, Vec<(f64, f64)>)],
) -> Result<()> {
    let pts = curves.iter().flat_map(|c| c.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(Error::param("curves", "nothing to plot"));
    }
    let pad = ((y1 - y0) * 0.05).max(1e-3);
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(55)
        .build_cartesian_2d(x0..x1.max(x0 + 1e-9), (y0 - pad)..(y1 + pad))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(plot_err)?;
    for (k, (name, c)) in curves.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(c.iter().copied(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

fn ramp(x: f64) -> RGBColor {
    let x = x.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * x).round() as u8;
    RGBColor(lerp(68.0, 253.0), lerp(1.0, 231.0), lerp(84.0, 37.0))
}

/// Colour-coded grid, rows on the vertical axis.
pub fn render_heatmap_svg(path: &Path, title: &str, map: &Heatmap) -> Result<()> {
    let (lo, hi) = map
        .values
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = (hi - lo).max(1e-12);
    let nr = map.rows.len();
    let nc = map.cols.len();
    let root = SVGBackend::new(path, (720, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(
            format!("{title} (min {lo:.4}, max {hi:.4})"),
            ("sans-serif", 18),
        )
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(55)
        .build_cartesian_2d(0..nc, 0..nr)
        .map_err(plot_err)?;
    let (rows, cols) = (map.rows.clone(), map.cols.clone());
    chart
        .configure_mesh()
        .disable_mesh()
        .x_desc(map.col_name)
        .y_desc(map.row_name)
        .x_label_formatter(&|i| cols.get(*i).map(|v| format!("{v:.2}")).unwrap_or_default())
        .y_label_formatter(&|i| rows.get(*i).map(|v| format!("{v:.2}")).unwrap_or_default())
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(map.values.iter().enumerate().flat_map(|(i, row)| {
            row.iter().enumerate().map(move |(j, v)| {
                let c = ramp((v - lo) / span);
                Rectangle::new([(j, i), (j + 1, i + 1)], c.filled())
            })
        }))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}
