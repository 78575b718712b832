//! QBER over the (θ, t) and (θ, ϕ) planes, written as CSV and SVG.
//!
//! cargo run --release --example maps -- [out_dir]

use std::f64::consts::PI;
use std::path::PathBuf;

use dlca::dynamics::{ChannelParams, MeasurementWindow};
use dlca::experiments::{
    feedback_heatmap, qber_heatmap, render_heatmap_svg, uniform_grid, write_heatmap_csv, RunHeader,
};

fn main() -> dlca::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "dlca-out".into()));
    std::fs::create_dir_all(&out)?;
    let p = ChannelParams::default();

    let thetas = uniform_grid(0.0, 2.0 * PI, 64);
    let times: Vec<f64> = (0..=60).map(|k| 0.05 * k as f64).collect();
    let map = qber_heatmap(&thetas, &times, &p)?;
    write_heatmap_csv(
        &out.join("qber_map.csv"),
        &map,
        &RunHeader::new("qber map", &p, None),
    )?;
    render_heatmap_svg(&out.join("qber_map.svg"), "QBER(θ, t)", &map)?;

    let w = MeasurementWindow::new(0.1, 0.4);
    let phis = uniform_grid(0.0, 2.0 * PI, 64);
    let fb = feedback_heatmap(&thetas, &phis, &p, &w)?;
    write_heatmap_csv(
        &out.join("feedback_map.csv"),
        &fb,
        &RunHeader::new("feedback map", &p, None),
    )?;
    render_heatmap_svg(&out.join("feedback_map.svg"), "QBER(θ, ϕ)", &fb)?;

    let row = thetas
        .iter()
        .position(|t| (t / PI - 1.875).abs() < 1e-9)
        .unwrap_or(0);
    let (phi, q) = fb.row_argmin(row);
    println!(
        "θ = {:.3}π: lowest feedback QBER {q:.4} at ϕ = {:.3}π",
        thetas[row] / PI,
        phi / PI
    );
    println!("wrote maps to {}", out.display());
    Ok(())
}
