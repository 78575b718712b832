//! Qubit operator algebra: 2×2 complex matrices, density matrices, the BB84
//! states and the superoperators that drive the channel dynamics.

mod matrix;
mod states;
mod superop;

pub use matrix::{Complex2x2, C64};
pub use states::{
    Basis, DensityMatrix2, Operator2, OperatorLabel, PureState, HERMITICITY_TOL, POSITIVITY_TOL,
    TRACE_TOL,
};
pub use superop::{
    dissipator, expectation, feedback_operator, hamiltonian_for, innovation, measurement_operator,
    project,
};

pub(crate) use matrix::I as IMAG;
pub(crate) use superop::{dissipator_raw, expectation_raw};
