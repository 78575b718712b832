//! The attack comparison table, with optional measured network accuracies.
//!
//! cargo run --release --example report -- [sigma_z accuracy] [windowed accuracy]

use dlca::dynamics::ChannelParams;
use dlca::experiments::{summary_table, MeasuredAccuracies};

fn main() -> dlca::Result<()> {
    let acc = |k: usize| std::env::args().nth(k).and_then(|s| s.parse().ok());
    let measured = MeasuredAccuracies {
        sigma_z: acc(1),
        windowed: acc(2),
    };
    let pct = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{:.1}%", 100.0 * x));
    for r in summary_table(&ChannelParams::default(), &measured)? {
        println!(
            "{:<36} QBER {:>6} ({:>12})  accuracy {:>6} ({:>6})  {}",
            r.scheme,
            pct(r.qber),
            r.reference_qber,
            pct(r.accuracy),
            r.reference_accuracy,
            r.note
        );
    }
    Ok(())
}
