use super::matrix::{Complex2x2, C64};
use super::states::{Basis, DensityMatrix2, Operator2, OperatorLabel, PureState};

/// Lindblad dissipator `D[o]ρ = oρo† − ½(o†oρ + ρo†o)`.
#[inline]
pub fn dissipator(o: &Operator2, rho: &DensityMatrix2) -> Complex2x2 {
    dissipator_raw(&o.matrix, rho.matrix())
}

#[inline]
pub(crate) fn dissipator_raw(o: &Complex2x2, rho: &Complex2x2) -> Complex2x2 {
    let od = o.adjoint();
    let odo = od * *o;
    *o * *rho * od - (odo * *rho + *rho * odo).scale(0.5)
}

/// Measurement back-action `H[o]ρ = oρ + ρo† − Tr[oρ + ρo†]ρ`.
#[inline]
pub fn innovation(o: &Operator2, rho: &DensityMatrix2) -> Complex2x2 {
    innovation_raw(&o.matrix, rho.matrix())
}

#[inline]
pub(crate) fn innovation_raw(o: &Complex2x2, rho: &Complex2x2) -> Complex2x2 {
    let s = *o * *rho + *rho * o.adjoint();
    let tr = s.trace();
    s - rho.scale_c(tr)
}

/// `Tr[oρ]`
#[inline]
pub fn expectation(o: &Operator2, rho: &DensityMatrix2) -> C64 {
    expectation_raw(&o.matrix, rho.matrix())
}

#[inline]
pub(crate) fn expectation_raw(o: &Complex2x2, rho: &Complex2x2) -> C64 {
    let [a, b, c, d] = o.0;
    let [p, q, r, s] = rho.0;
    a * p + b * r + c * q + d * s
}

fn pauli_combination(angle: f64) -> Complex2x2 {
    Operator2::sigma_x().matrix.scale(angle.cos()) + Operator2::sigma_z().matrix.scale(angle.sin())
}

/// Homodyne measurement operator `e = cos θ σx + sin θ σz`.
pub fn measurement_operator(theta: f64) -> Operator2 {
    Operator2::labeled(
        pauli_combination(theta),
        OperatorLabel::Measurement { theta },
    )
}

/// Feedback operator `f = cos ϕ σx + sin ϕ σz`.
pub fn feedback_operator(phi: f64) -> Operator2 {
    Operator2::labeled(pauli_combination(phi), OperatorLabel::Feedback { phi })
}

/// Channel Hamiltonian: `ωσz` for Z-basis states, `ωσx` for X-basis states.
pub fn hamiltonian_for(initial: PureState, omega: f64) -> Operator2 {
    let generator = match initial.basis() {
        Basis::PauliZ => Operator2::sigma_z(),
        Basis::PauliX => Operator2::sigma_x(),
    };
    Operator2::labeled(generator.matrix.scale(omega), OperatorLabel::Hamiltonian)
}

/// Born-rule projective measurement driven by a uniform draw `u ∈ [0, 1)`.
///
/// Outcome 0 (the first eigenstate of `basis`) is returned iff `u < ⟨b₀|ρ|b₀⟩`.
pub fn project(rho: &DensityMatrix2, basis: Basis, u: f64) -> (u8, DensityMatrix2) {
    let [b0, b1] = basis.eigenstates();
    let p0 = rho.population(b0);
    if u < p0 {
        (0, b0.density())
    } else {
        (1, b1.density())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::ZERO;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn close(a: &Complex2x2, b: &Complex2x2, tol: f64) -> bool {
        a.max_abs_diff(b) < tol
    }

    #[test]
    fn dissipator_examples() {
        let sx = Operator2::sigma_x();
        let sz = Operator2::sigma_z();
        let zero = PureState::Zero.density();
        let expected = PureState::One.projector_matrix() - PureState::Zero.projector_matrix();
        assert!(close(&dissipator(&sx, &zero), &expected, 1e-15));

        let plus = PureState::Plus.density();
        let expected = PureState::Minus.projector_matrix() - PureState::Plus.projector_matrix();
        assert!(close(&dissipator(&sz, &plus), &expected, 1e-15));

        // dark states of the bit-flip channel
        for s in [PureState::Plus, PureState::Minus] {
            assert_eq!(dissipator(&sx, &s.density()).max_abs(), 0.0);
        }
    }

    #[test]
    fn innovation_examples() {
        let sx = Operator2::sigma_x();
        let sz = Operator2::sigma_z();
        assert_eq!(innovation(&sz, &PureState::Zero.density()).max_abs(), 0.0);
        let mixed = DensityMatrix2::maximally_mixed();
        assert!(close(&innovation(&sz, &mixed), &sz.matrix, 1e-15));
        assert!(innovation(&sx, &PureState::Plus.density()).max_abs() < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let sx = Operator2::sigma_x();
        let sz = Operator2::sigma_z();
        assert!((expectation(&sz, &PureState::Zero.density()) - 1.0).norm() < 1e-15);
        assert!(expectation(&sz, &PureState::Plus.density()).norm() < 1e-15);
        let sum = sx + sz;
        assert!((expectation(&sum, &PureState::Plus.density()) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn measurement_operator_examples() {
        assert!(close(
            &measurement_operator(PI / 2.0).matrix,
            &Operator2::sigma_z().matrix,
            1e-15
        ));
        assert!(close(
            &measurement_operator(0.0).matrix,
            &Operator2::sigma_x().matrix,
            1e-15
        ));
        let e = measurement_operator(1.86 * PI).matrix;
        // e = 0.90 σx − 0.43 σz to two decimals
        assert!((e.get(0, 1).re - 0.90).abs() < 0.005);
        assert!((e.get(0, 0).re + 0.43).abs() < 0.005);
        assert!((e.get(1, 1).re - 0.43).abs() < 0.005);
    }

    #[test]
    fn feedback_operator_examples() {
        assert!(close(
            &feedback_operator(0.0).matrix,
            &Operator2::sigma_x().matrix,
            1e-15
        ));
        assert!(close(
            &feedback_operator(PI / 2.0).matrix,
            &Operator2::sigma_z().matrix,
            1e-15
        ));
        let phi = 0.94 * PI;
        let f = feedback_operator(phi).matrix;
        assert!((f.get(0, 1).re - phi.cos()).abs() < 1e-15);
        assert!((f.get(0, 0).re - phi.sin()).abs() < 1e-15);
        assert!(feedback_operator(phi).is_hermitian(0.0));
    }

    #[test]
    fn hamiltonian_examples() {
        let w = 1.3;
        assert!(close(
            &hamiltonian_for(PureState::Zero, w).matrix,
            &Operator2::sigma_z().matrix.scale(w),
            1e-15
        ));
        assert!(close(
            &hamiltonian_for(PureState::Plus, w).matrix,
            &Operator2::sigma_x().matrix.scale(w),
            1e-15
        ));
        assert_eq!(hamiltonian_for(PureState::One, 0.0).matrix.max_abs(), 0.0);
    }

    #[test]
    fn project_examples() {
        let zero = PureState::Zero.density();
        for u in [0.0, 0.5, 0.999_999] {
            let (bit, post) = project(&zero, Basis::PauliZ, u);
            assert_eq!(bit, 0);
            assert_eq!(post, zero);
        }
        let plus = PureState::Plus.density();
        assert_eq!(project(&plus, Basis::PauliZ, 0.49).0, 0);
        assert_eq!(project(&plus, Basis::PauliZ, 0.51).0, 1);
        let d = DensityMatrix2::diagonal(0.7).unwrap();
        assert_eq!(project(&d, Basis::PauliZ, 0.69).0, 0);
        assert_eq!(project(&d, Basis::PauliZ, 0.71).0, 1);
        assert_eq!(project(&d, Basis::PauliZ, 0.71).1, PureState::One.density());
    }

    #[test]
    fn project_frequencies_follow_born_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        for (rho, basis, p) in [
            (PureState::Plus.density(), Basis::PauliZ, 0.5),
            (DensityMatrix2::diagonal(0.7).unwrap(), Basis::PauliZ, 0.7),
            (DensityMatrix2::diagonal(0.7).unwrap(), Basis::PauliX, 0.5),
        ] {
            let hits = (0..n)
                .filter(|_| project(&rho, basis, rng.random::<f64>()).0 == 0)
                .count();
            let freq = hits as f64 / n as f64;
            let tol = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < tol, "freq {freq} vs {p}");
        }
    }

    fn random_density(rng: &mut ChaCha8Rng) -> DensityMatrix2 {
        // Bloch vector inside the unit ball
        let (x, y, z): (f64, f64, f64) = loop {
            let v = (
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.0 * v.0 + v.1 * v.1 + v.2 * v.2 <= 1.0 {
                break v;
            }
        };
        DensityMatrix2::new(Complex2x2::new(
            C64::new(0.5 * (1.0 + z), 0.0),
            C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y),
            C64::new(0.5 * (1.0 - z), 0.0),
        ))
        .unwrap()
    }

    fn random_operator(rng: &mut ChaCha8Rng, hermitian: bool) -> Operator2 {
        let mut c = || C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let m = Complex2x2::new(c(), c(), c(), c());
        if hermitian {
            Operator2::new((m + m.adjoint()).scale(0.5))
        } else {
            Operator2::new(m)
        }
    }

    #[test]
    fn superoperators_are_traceless_and_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..2000 {
            let rho = random_density(&mut rng);
            let o = random_operator(&mut rng, false);
            assert!(dissipator(&o, &rho).trace().norm() < 1e-12);
            assert!(innovation(&o, &rho).trace().norm() < 1e-12);
            let h = random_operator(&mut rng, true);
            assert!(dissipator(&h, &rho).hermiticity_error() < 1e-12);
            assert!(innovation(&h, &rho).hermiticity_error() < 1e-12);
        }
        let _ = ZERO;
    }

    proptest! {
        #[test]
        fn measurement_operator_squares_to_identity(theta in -10.0f64..10.0) {
            let e = measurement_operator(theta).matrix;
            prop_assert!(close(&(e * e), &Complex2x2::identity(), 1e-12));
        }

        #[test]
        fn innovation_vanishes_on_eigenstates(theta in 0.0f64..6.3) {
            // eigenvector of e(θ) with eigenvalue +1: (cos(α), sin(α)) with α = (π/2 − θ)/2
            let a = 0.5 * (PI / 2.0 - theta);
            let (c, s) = (a.cos(), a.sin());
            let rho = DensityMatrix2::new(Complex2x2::from_real(c * c, c * s, c * s, s * s)).unwrap();
            let e = measurement_operator(theta);
            prop_assert!(innovation(&e, &rho).max_abs() < 1e-12);
            prop_assert!(dissipator(&e, &rho).max_abs() < 1e-12);
        }
    }
}
