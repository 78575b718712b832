//! QBER of continuous, windowed and feedback attacks, deterministic and
//! sampled.
//!
//! cargo run --release --example attacks -- [rounds]

use std::f64::consts::PI;

use dlca::bb84::{run_protocol, AttackStrategy};
use dlca::dynamics::{ChannelParams, MeasurementWindow};
use dlca::experiments::{continuous_attack_qber, feedback_attack_qber};
use dlca::qcore::{feedback_operator, measurement_operator};

fn main() -> dlca::Result<()> {
    let rounds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);
    let p = ChannelParams::default();
    let full = MeasurementWindow::full(&p);
    let short = MeasurementWindow::new(0.1, 0.4);

    let cases = [
        ("σz, whole run", 0.5 * PI, None, full),
        ("1.86π, whole run", 1.86 * PI, None, full),
        ("1.86π, [0.1, 0.5]", 1.86 * PI, None, short),
        (
            "1.86π, [0.1, 0.5], ϕ = 0.94π",
            1.86 * PI,
            Some(0.94 * PI),
            short,
        ),
    ];
    for (name, theta, phi, w) in cases {
        let e = measurement_operator(theta);
        let (exact, attack) = match phi {
            None => (
                continuous_attack_qber(&p, theta, &w)?,
                AttackStrategy::Continuous { e, window: w },
            ),
            Some(phi) => (
                feedback_attack_qber(&p, theta, phi, &w)?,
                AttackStrategy::ContinuousWithFeedback {
                    e,
                    f: feedback_operator(phi),
                    window: w,
                },
            ),
        };
        let s = run_protocol(rounds, &p, &attack, 3)?;
        println!(
            "{name:<30} ensemble {exact:.4}   sampled {:.4} ± {:.4}",
            s.qber, s.stderr_qber
        );
    }
    Ok(())
}
