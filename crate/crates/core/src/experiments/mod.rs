//! Studies built on the lower layers: QBER maps, accuracy sweeps, the λ
//! trade-off, optimized angle schedules and the scheme comparison table.

mod deterministic;
mod output;
mod schedule;
mod study;
mod summary;

pub use deterministic::{
    continuous_attack_qber, feedback_attack_qber, feedback_heatmap, qber_heatmap, uniform_grid,
    Heatmap,
};
pub use output::{
    read_sweep_accuracies, render_curves_svg, render_heatmap_svg, write_heatmap_csv,
    write_sweep_csv, write_table_csv, write_traces_csv, RunHeader,
};
pub use schedule::{
    optimized_angle_trace, optimized_angle_traces, AccuracyProxy, AngleSchedule, AngleTrace,
    Objective, ANGLE_GRID, SEGMENT,
};
pub use study::{
    accuracy_study, accuracy_vs_window, lambda, lambda_curve, mean_std, prepare_data,
    retrain_config, sweep_theta, AccuracyStats, PreparedData, StudySizes, SweepPoint, SweepResult,
};
pub use summary::{
    summary_table, MeasuredAccuracies, TableRow, PROJECTIVE_T_STAR, WINDOWED_THETA_OVER_PI,
    WINDOW_LENGTH, WINDOW_START,
};
