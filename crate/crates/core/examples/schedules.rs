//! Piecewise-constant measurement angles chosen greedily against three
//! objectives, given an accuracy-against-θ curve.
//!
//! cargo run --release --example schedules -- [accuracy_theta.csv]

use std::f64::consts::PI;
use std::path::Path;

use dlca::dynamics::ChannelParams;
use dlca::experiments::{optimized_angle_traces, read_sweep_accuracies, AccuracyProxy};

fn main() -> dlca::Result<()> {
    let proxy = match std::env::args().nth(1) {
        Some(p) => AccuracyProxy::from_points(&read_sweep_accuracies(Path::new(&p))?)?,
        // A smooth stand-in peaking near 1.86π.
        None => {
            let pts: Vec<(f64, f64)> = (0..64)
                .map(|k| {
                    let th = k as f64 * PI / 32.0;
                    (
                        th,
                        0.5 + 0.35 * (0.5 + 0.5 * (th - 1.86 * PI).cos()).powi(4),
                    )
                })
                .collect();
            AccuracyProxy::from_points(&pts)?
        }
    };
    let p = ChannelParams::default();
    for trace in optimized_angle_traces(&p, &proxy)? {
        let angles: Vec<String> = trace
            .schedule
            .thetas
            .iter()
            .map(|t| format!("{:.2}", t / PI))
            .collect();
        println!(
            "{:<14} final QBER {:.4}  θ/π per segment: {}",
            trace.schedule.objective.name(),
            trace.qber.last().copied().unwrap_or(f64::NAN),
            angles.join(" ")
        );
    }
    Ok(())
}
