//! One monitored trajectory: the binned photocurrent and the conditional
//! state along the way.
//!
//! cargo run --release --example trajectory -- [state 0-3] [theta/π] [seed]

use std::f64::consts::PI;

use dlca::dynamics::{ChannelParams, MeasurementWindow, TrajectorySimulator};
use dlca::qcore::{measurement_operator, PureState};

fn arg<T: std::str::FromStr>(k: usize, default: T) -> T {
    std::env::args()
        .nth(k)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> dlca::Result<()> {
    let state = PureState::ALL[arg(1, 0usize).min(3)];
    let theta = arg(2, 0.5) * PI;
    let seed = arg(3, 1u64);
    let p = ChannelParams::default();
    let w = MeasurementWindow::full(&p);
    let times: Vec<f64> = (1..=6).map(|k| 0.5 * k as f64).collect();
    let rec = TrajectorySimulator::new(&p, &measurement_operator(theta), &w)?
        .with_snapshots(&times)?
        .run(state, seed)?;

    println!(
        "{state}, θ = {:.2}π, {} fine steps",
        theta / PI,
        rec.fine_steps
    );
    for (t, rho) in &rec.snapshots {
        let pops: Vec<String> = PureState::ALL
            .iter()
            .map(|s| format!("{s} {:.3}", rho.population(*s)))
            .collect();
        println!("t = {t:.1}: {}", pops.join("  "));
    }
    let per_line = 20;
    println!("\nbinned current ({} samples):", rec.coarse_current.len());
    for chunk in rec.coarse_current.chunks(per_line).take(5) {
        let line: Vec<String> = chunk.iter().map(|x| format!("{x:+6.1}")).collect();
        println!("{}", line.join(" "));
    }
    Ok(())
}
