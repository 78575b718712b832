//! Closed-form baselines for the bit-flip channel. Arguments are the
//! dimensionless products `γ_D t`; `f64::INFINITY` gives the asymptotes.

use crate::qcore::{DensityMatrix2, PureState};

/// QBER with dissipation only: `1/4 − e^{−2γ_D t_f}/4`.
pub fn analytic_qber_no_attack(gamma_d_tf: f64) -> f64 {
    0.25 - 0.25 * (-2.0 * gamma_d_tf).exp()
}

/// Intercept-and-resend accuracy at measurement time `t*`: `5/8 + e^{−2γ_D t*}/8`.
pub fn analytic_accuracy_projective(gamma_d_tstar: f64) -> f64 {
    0.625 + 0.125 * (-2.0 * gamma_d_tstar).exp()
}

/// Intercept-and-resend QBER, independent of `t*`: `3/8 − e^{−2γ_D t_f}/8`.
pub fn analytic_qber_projective(gamma_d_tf: f64) -> f64 {
    0.375 - 0.125 * (-2.0 * gamma_d_tf).exp()
}

/// QBER of an ensemble described by one evolved state per initial state,
/// indexed like [`PureState::ALL`]: `1 − ¼ Σ_s ⟨s|ρ_s|s⟩`.
///
/// Bob measures in Alice's basis for sifted rounds, so each state's
/// survival probability is its error-free fraction.
pub fn qber_from_final_states(final_states: &[DensityMatrix2; 4]) -> f64 {
    let kept: f64 = PureState::ALL
        .iter()
        .zip(final_states)
        .map(|(s, rho)| rho.population(*s))
        .sum();
    1.0 - 0.25 * kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::analytic_dissipative_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn formula_values() {
        assert_eq!(analytic_qber_no_attack(0.0), 0.0);
        assert_eq!(analytic_qber_no_attack(f64::INFINITY), 0.25);
        assert!((analytic_qber_no_attack(3.0) - 0.24938).abs() < 5e-6);
        assert_eq!(analytic_accuracy_projective(0.0), 0.75);
        assert_eq!(analytic_accuracy_projective(f64::INFINITY), 0.625);
        assert!((analytic_accuracy_projective(0.3) - 0.693_601_5).abs() < 1e-7);
        assert_eq!(analytic_qber_projective(0.0), 0.25);
        assert_eq!(analytic_qber_projective(f64::INFINITY), 0.375);
        assert!((analytic_qber_projective(3.0) - 0.37469).abs() < 5e-6);
    }

    #[test]
    fn accuracy_is_non_increasing_in_measurement_time() {
        let grid: Vec<f64> = (0..10).map(|k| 0.35 * k as f64).collect();
        for w in grid.windows(2) {
            assert!(analytic_accuracy_projective(w[1]) <= analytic_accuracy_projective(w[0]));
        }
    }

    #[test]
    fn no_attack_formula_agrees_with_bit_flip_monte_carlo() {
        // Oracle: each Z-basis bit flips with probability (1 − e^{−2γt})/2,
        // X-basis states are dark; Bob always uses Alice's basis here.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let p_flip = 0.5 * (1.0 - (-6.0f64).exp());
        let errors = (0..n)
            .filter(|_| {
                let z_basis = rng.random::<bool>();
                let u: f64 = rng.random();
                z_basis && u < p_flip
            })
            .count();
        let mc = errors as f64 / n as f64;
        assert!((mc - analytic_qber_no_attack(3.0)).abs() < 0.002);
    }

    #[test]
    fn final_state_qber_examples() {
        let projectors = PureState::ALL.map(|s| s.density());
        assert!(qber_from_final_states(&projectors).abs() < 1e-15);
        let mixed = [DensityMatrix2::maximally_mixed(); 4];
        assert!((qber_from_final_states(&mixed) - 0.5).abs() < 1e-15);
        for gt in [0.2, 1.0, 3.0] {
            let states = PureState::ALL.map(|s| analytic_dissipative_state(&s.density(), 1.0, gt));
            let q = qber_from_final_states(&states);
            assert!((q - analytic_qber_no_attack(gt)).abs() < 1e-14);
            assert!((q - (1.0 - (-2.0 * gt).exp()) / 4.0).abs() < 1e-14);
        }
    }
}
