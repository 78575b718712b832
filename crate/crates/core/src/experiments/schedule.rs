//! Piecewise-constant measurement angles chosen greedily segment by segment.

use std::f64::consts::TAU;

use serde::Serialize;

use super::deterministic::uniform_grid;
use super::study::SweepResult;
use crate::bb84::qber_from_final_states;
use crate::dynamics::{lindblad_solve, ChannelParams, Jump};
use crate::error::{Error, Result};
use crate::qcore::{hamiltonian_for, measurement_operator, DensityMatrix2, Operator2, PureState};

/// Default segment length in units of `1/γ_D`.
pub const SEGMENT: f64 = 0.3;
/// Default number of candidate angles per segment.
pub const ANGLE_GRID: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MinQber,
    MaxAccuracy,
    MinLambda,
}

impl Objective {
    pub const ALL: [Objective; 3] = [
        Objective::MinQber,
        Objective::MaxAccuracy,
        Objective::MinLambda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Objective::MinQber => "min_qber",
            Objective::MaxAccuracy => "max_accuracy",
            Objective::MinLambda => "min_lambda",
        }
    }
}

/// Static accuracy curve `A(θ)`, interpolated linearly and periodically.
///
/// Used as a stand-in for the accuracy a network would reach on a single
/// segment; it is not retrained per segment.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyProxy {
    thetas: Vec<f64>,
    accuracies: Vec<f64>,
}

impl AccuracyProxy {
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("accuracy_proxy", "needs at least one point"));
        }
        let mut pts: Vec<(f64, f64)> = points
            .iter()
            .map(|&(t, a)| (t.rem_euclid(TAU), a))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.iter().any(|p| !(p.1 > 0.0 && p.1 <= 1.0)) {
            return Err(Error::param(
                "accuracy_proxy",
                "accuracies must lie in (0, 1]",
            ));
        }
        Ok(AccuracyProxy {
            thetas: pts.iter().map(|p| p.0).collect(),
            accuracies: pts.iter().map(|p| p.1).collect(),
        })
    }

    pub fn from_sweep(sweep: &SweepResult) -> Result<Self> {
        let pts = sweep
            .points
            .iter()
            .map(|p| {
                p.accuracy_mean
                    .map(|a| (p.axis, a))
                    .ok_or_else(|| Error::param("sweep", "accuracy missing"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_points(&pts)
    }

    pub fn at(&self, theta: f64) -> f64 {
        let n = self.thetas.len();
        if n == 1 {
            return self.accuracies[0];
        }
        let t = theta.rem_euclid(TAU);
        let k = self.thetas.partition_point(|&x| x <= t);
        let (i0, i1) = if k == 0 || k == n {
            (n - 1, 0)
        } else {
            (k - 1, k)
        };
        let (x0, mut x1) = (self.thetas[i0], self.thetas[i1]);
        let mut x = t;
        if x1 <= x0 {
            x1 += TAU;
            if x < x0 {
                x += TAU;
            }
        }
        let w = (x - x0) / (x1 - x0);
        self.accuracies[i0] * (1.0 - w) + self.accuracies[i1] * w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleSchedule {
    pub objective: Objective,
    pub segment: f64,
    pub thetas: Vec<f64>,
}

impl AngleSchedule {
    pub fn theta_at(&self, t: f64) -> f64 {
        let k = ((t / self.segment) as usize).min(self.thetas.len() - 1);
        self.thetas[k]
    }
}

/// QBER against time under an optimized schedule, sampled at segment ends
/// and at `samples_per_segment` points inside each segment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleTrace {
    pub schedule: AngleSchedule,
    pub times: Vec<f64>,
    pub qber: Vec<f64>,
}

fn evolve_all(
    states: &[DensityMatrix2; 4],
    params: &ChannelParams,
    e: &Operator2,
    duration: f64,
) -> Result<[DensityMatrix2; 4]> {
    let jumps = [
        Jump::new(params.gamma_d, Operator2::sigma_x()),
        Jump::new(params.gamma_e, *e),
    ];
    let mut out = *states;
    for (k, s) in PureState::ALL.into_iter().enumerate() {
        out[k] = lindblad_solve(
            &states[k],
            &hamiltonian_for(s, params.omega),
            &jumps,
            duration,
            params.dt,
        )?;
    }
    Ok(out)
}

/// Greedy per-segment angle choice over a uniform grid of `grid` angles.
///
/// `proxy` is required for the accuracy-based objectives.
pub fn optimized_angle_trace(
    objective: Objective,
    params: &ChannelParams,
    proxy: Option<&AccuracyProxy>,
    segment: f64,
    grid: usize,
    samples_per_segment: usize,
) -> Result<AngleTrace> {
    params.validate()?;
    if !(segment > 0.0) || grid == 0 {
        return Err(Error::param(
            "segment",
            "segment length and grid size must be positive",
        ));
    }
    let n_seg = (params.t_final / segment).round();
    if n_seg < 1.0 || (n_seg * segment - params.t_final).abs() > 1e-9 {
        return Err(Error::param(
            "segment",
            format!("{segment} does not divide t_final = {}", params.t_final),
        ));
    }
    let proxy = match (objective, proxy) {
        (Objective::MinQber, _) => None,
        (_, Some(p)) => Some(p),
        (_, None) => {
            return Err(Error::param(
                "proxy",
                format!("{} needs an accuracy curve", objective.name()),
            ))
        }
    };
    let angles = uniform_grid(0.0, TAU, grid);
    let mut states = PureState::ALL.map(|s| s.density());
    let mut thetas = Vec::with_capacity(n_seg as usize);
    let mut times = vec![0.0];
    let mut qber = vec![qber_from_final_states(&states)];
    let sub = samples_per_segment.max(1);
    for k in 0..n_seg as usize {
        let mut best = (f64::INFINITY, angles[0]);
        for &theta in &angles {
            let score = match objective {
                Objective::MaxAccuracy => -proxy.expect("checked").at(theta),
                _ => {
                    let end = evolve_all(&states, params, &measurement_operator(theta), segment)?;
                    let q = qber_from_final_states(&end);
                    match objective {
                        Objective::MinQber => q,
                        _ => q / proxy.expect("checked").at(theta),
                    }
                }
            };
            if score < best.0 {
                best = (score, theta);
            }
        }
        let e = measurement_operator(best.1);
        for j in 1..=sub {
            states = evolve_all(&states, params, &e, segment / sub as f64)?;
            times.push(k as f64 * segment + j as f64 * segment / sub as f64);
            qber.push(qber_from_final_states(&states));
        }
        thetas.push(best.1);
    }
    Ok(AngleTrace {
        schedule: AngleSchedule {
            objective,
            segment,
            thetas,
        },
        times,
        qber,
    })
}

/// Traces for all three objectives with the default segment and grid.
pub fn optimized_angle_traces(
    params: &ChannelParams,
    proxy: &AccuracyProxy,
) -> Result<Vec<AngleTrace>> {
    Objective::ALL
        .iter()
        .map(|&o| optimized_angle_trace(o, params, Some(proxy), SEGMENT, ANGLE_GRID, 6))
        .collect()
}
