use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::matrix::{Complex2x2, C64, ONE, ZERO};
use crate::error::{Error, Result};

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
/// Explicit stochastic steps can dip slightly below zero; anything lower aborts.
pub const POSITIVITY_TOL: f64 = -1e-6;

/// Symbolic tag carried by an operator for reporting only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorLabel {
    Identity,
    SigmaX,
    SigmaZ,
    Measurement { theta: f64 },
    Feedback { phi: f64 },
    Hamiltonian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator2 {
    pub matrix: Complex2x2,
    pub label: Option<OperatorLabel>,
}

impl Operator2 {
    pub const fn new(matrix: Complex2x2) -> Self {
        Operator2 {
            matrix,
            label: None,
        }
    }

    pub const fn labeled(matrix: Complex2x2, label: OperatorLabel) -> Self {
        Operator2 {
            matrix,
            label: Some(label),
        }
    }

    pub const fn zero() -> Self {
        Operator2::new(Complex2x2::zero())
    }

    pub const fn identity() -> Self {
        Operator2::labeled(Complex2x2::identity(), OperatorLabel::Identity)
    }

    pub const fn sigma_x() -> Self {
        Operator2::labeled(
            Complex2x2::from_real(0.0, 1.0, 1.0, 0.0),
            OperatorLabel::SigmaX,
        )
    }

    pub const fn sigma_z() -> Self {
        Operator2::labeled(
            Complex2x2::from_real(1.0, 0.0, 0.0, -1.0),
            OperatorLabel::SigmaZ,
        )
    }

    pub fn adjoint(&self) -> Self {
        Operator2::new(self.matrix.adjoint())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Operator2::new(self.matrix.scale(s))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.matrix.hermiticity_error() <= tol
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.max_abs() == 0.0
    }
}

impl std::ops::Add for Operator2 {
    type Output = Operator2;
    fn add(self, rhs: Operator2) -> Operator2 {
        Operator2::new(self.matrix + rhs.matrix)
    }
}

impl std::ops::Sub for Operator2 {
    type Output = Operator2;
    fn sub(self, rhs: Operator2) -> Operator2 {
        Operator2::new(self.matrix - rhs.matrix)
    }
}

/// Preparation/measurement basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    PauliZ,
    PauliX,
}

impl Basis {
    /// Eigenstates ordered by outcome: index 0 is `|0⟩` or `|+⟩`.
    pub const fn eigenstates(self) -> [PureState; 2] {
        match self {
            Basis::PauliZ => [PureState::Zero, PureState::One],
            Basis::PauliX => [PureState::Plus, PureState::Minus],
        }
    }

    pub const fn other(self) -> Basis {
        match self {
            Basis::PauliZ => Basis::PauliX,
            Basis::PauliX => Basis::PauliZ,
        }
    }
}

/// The four BB84 states, indexed `0..4` as `|0⟩, |1⟩, |+⟩, |−⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PureState {
    Zero,
    One,
    Plus,
    Minus,
}

impl PureState {
    pub const ALL: [PureState; 4] = [
        PureState::Zero,
        PureState::One,
        PureState::Plus,
        PureState::Minus,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<PureState> {
        PureState::ALL.get(i).copied()
    }

    pub const fn basis(self) -> Basis {
        match self {
            PureState::Zero | PureState::One => Basis::PauliZ,
            PureState::Plus | PureState::Minus => Basis::PauliX,
        }
    }

    /// Bit value: `|0⟩` and `|+⟩` carry 0, `|1⟩` and `|−⟩` carry 1.
    pub const fn bit(self) -> u8 {
        match self {
            PureState::Zero | PureState::Plus => 0,
            PureState::One | PureState::Minus => 1,
        }
    }

    pub const fn from_bit(bit: u8, basis: Basis) -> PureState {
        basis.eigenstates()[(bit & 1) as usize]
    }

    pub fn amplitudes(self) -> [C64; 2] {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            PureState::Zero => [ONE, ZERO],
            PureState::One => [ZERO, ONE],
            PureState::Plus => [s, s],
            PureState::Minus => [s, -s],
        }
    }

    pub fn projector_matrix(self) -> Complex2x2 {
        let [a, b] = self.amplitudes();
        Complex2x2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj())
    }

    pub fn density(self) -> DensityMatrix2 {
        DensityMatrix2(self.projector_matrix())
    }

    pub const fn symbol(self) -> &'static str {
        match self {
            PureState::Zero => "|0>",
            PureState::One => "|1>",
            PureState::Plus => "|+>",
            PureState::Minus => "|->",
        }
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Qubit density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix2(Complex2x2);

impl DensityMatrix2 {
    pub fn new(matrix: Complex2x2) -> Result<Self> {
        let rho = DensityMatrix2(matrix);
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix without checking invariants; callers validate at checkpoints.
    pub(crate) const fn new_unchecked(matrix: Complex2x2) -> Self {
        DensityMatrix2(matrix)
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix2(Complex2x2::from_real(0.5, 0.0, 0.0, 0.5))
    }

    pub fn diagonal(p0: f64) -> Result<Self> {
        DensityMatrix2::new(Complex2x2::from_real(p0, 0.0, 0.0, 1.0 - p0))
    }

    #[inline]
    pub fn matrix(&self) -> &Complex2x2 {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.hermitian_eigenvalues()[0]
    }

    /// `⟨s|ρ|s⟩`
    pub fn population(&self, state: PureState) -> f64 {
        let [a, b] = state.amplitudes();
        let m = &self.0 .0;
        let v = a.conj() * (m[0] * a + m[1] * b) + b.conj() * (m[2] * a + m[3] * b);
        v.re
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.0;
        if !m.is_finite() {
            return Err(Error::Numerical(
                "density matrix has non-finite entries".into(),
            ));
        }
        let herm = m.hermiticity_error();
        if herm >= HERMITICITY_TOL {
            return Err(Error::Numerical(format!(
                "density matrix not Hermitian (error {herm:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr - ONE).norm() >= TRACE_TOL {
            return Err(Error::Numerical(format!("density matrix trace {tr} != 1")));
        }
        let lo = self.min_eigenvalue();
        if lo < POSITIVITY_TOL {
            return Err(Error::Numerical(format!(
                "density matrix not positive (min eigenvalue {lo:.3e})"
            )));
        }
        Ok(())
    }

    /// Restores exact Hermiticity and unit trace after a numerical step.
    #[inline]
    pub(crate) fn renormalized(m: Complex2x2) -> Self {
        let [a, b, c, d] = m.0;
        let off = 0.5 * (b + c.conj());
        let tr = a.re + d.re;
        let inv = 1.0 / tr;
        DensityMatrix2(Complex2x2([
            C64::new(a.re * inv, 0.0),
            off * inv,
            off.conj() * inv,
            C64::new(d.re * inv, 0.0),
        ]))
    }
}
