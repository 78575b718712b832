//! BB84 protocol engine with pluggable attacks and its closed-form baselines.

mod analytic;
mod protocol;

pub use analytic::{
    analytic_accuracy_projective, analytic_qber_no_attack, analytic_qber_projective,
    qber_from_final_states,
};
pub use protocol::{
    alice_prepare, projective_attack, protocol_rounds, run_protocol, run_protocol_with_guesser,
    write_summary_csv, AttackStrategy, ProtocolStats, RoundRecord, StateGuesser, SummaryRow,
};
