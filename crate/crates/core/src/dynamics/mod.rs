//! Time evolution of a qubit travelling through the monitored channel.

mod lindblad;
mod params;
mod sme;

pub use lindblad::{
    analytic_dissipative_state, feedback_master_solve, lindblad_checkpoints, lindblad_solve, Jump,
    WindowedChannel, RK4_STEP_LIMIT,
};
pub use params::{ChannelParams, MeasurementWindow, DEFAULT_BIN_FACTOR, STABILITY_LIMIT};
pub use sme::{
    feedback_sme_step, simulate_trajectory, sme_step, FineTrace, NoisePrefactor, TrajectoryRecord,
    TrajectorySimulator, WienerStream,
};
