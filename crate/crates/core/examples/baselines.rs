//! Closed-form QBER and accuracy baselines, checked against the Lindblad
//! solver and a Monte-Carlo run of the protocol.
//!
//! cargo run --release --example baselines

use dlca::bb84::{
    analytic_accuracy_projective, analytic_qber_no_attack, analytic_qber_projective,
    qber_from_final_states, run_protocol, AttackStrategy,
};
use dlca::dynamics::{lindblad_solve, ChannelParams, Jump};
use dlca::qcore::{hamiltonian_for, Operator2, PureState};

fn main() -> dlca::Result<()> {
    let p = ChannelParams::default();
    println!(
        "{:>6} {:>10} {:>10} {:>10}",
        "γt", "QBER none", "A proj", "QBER proj"
    );
    for t in [0.0, 0.3, 1.0, 3.0, f64::INFINITY] {
        println!(
            "{t:>6} {:>10.5} {:>10.5} {:>10.5}",
            analytic_qber_no_attack(t),
            analytic_accuracy_projective(t),
            analytic_qber_projective(t)
        );
    }

    let jumps = [Jump::new(p.gamma_d, Operator2::sigma_x())];
    let finals: Vec<_> = PureState::ALL
        .iter()
        .map(|s| {
            lindblad_solve(
                &s.density(),
                &hamiltonian_for(*s, p.omega),
                &jumps,
                p.t_final,
                p.dt,
            )
        })
        .collect::<dlca::Result<_>>()?;
    let q = qber_from_final_states(&finals.try_into().expect("four states"));
    println!("\nLindblad QBER at t_f = {}: {q:.6}", p.t_final);

    for attack in [
        AttackStrategy::None,
        AttackStrategy::Projective { t_star: 0.3 },
    ] {
        let s = run_protocol(100_000, &p, &attack, 1)?;
        println!(
            "Monte-Carlo {:<11} QBER {:.4} ± {:.4} over {} sifted rounds",
            attack.name(),
            s.qber,
            s.stderr_qber,
            s.n_total
        );
    }
    Ok(())
}
