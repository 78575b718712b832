//! Ensemble (noise-averaged) QBER studies: no training involved.

use rayon::prelude::*;

use crate::bb84::qber_from_final_states;
use crate::dynamics::{ChannelParams, MeasurementWindow, WindowedChannel};
use crate::error::{Error, Result};
use crate::qcore::{
    feedback_operator, hamiltonian_for, measurement_operator, DensityMatrix2, Operator2, PureState,
};

/// Values on a `rows × cols` grid, `values[row][col]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub row_name: &'static str,
    pub col_name: &'static str,
    pub rows: Vec<f64>,
    pub cols: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    /// `(row, col, value)` of the smallest entry in one row.
    pub fn row_argmin(&self, row: usize) -> (f64, f64) {
        let (k, v) = self.values[row]
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty row");
        (self.cols[k], *v)
    }
}

fn channel_states(
    params: &ChannelParams,
    e: &Operator2,
    f: Option<&Operator2>,
    window: &MeasurementWindow,
    times: &[f64],
) -> Result<Vec<[DensityMatrix2; 4]>> {
    let mut per_state = Vec::with_capacity(4);
    for s in PureState::ALL {
        let h = hamiltonian_for(s, params.omega);
        let ch = match f {
            None => WindowedChannel::monitored(&h, params, e, window)?,
            Some(f) => WindowedChannel::with_feedback(&h, params, e, f, window)?,
        };
        per_state.push(ch.evolve_checkpoints(&s.density(), times)?);
    }
    Ok((0..times.len())
        .map(|k| {
            [
                per_state[0][k],
                per_state[1][k],
                per_state[2][k],
                per_state[3][k],
            ]
        })
        .collect())
}

/// Ensemble QBER when the spy monitors with `e(θ)` inside `window`.
pub fn continuous_attack_qber(
    params: &ChannelParams,
    theta: f64,
    window: &MeasurementWindow,
) -> Result<f64> {
    let e = measurement_operator(theta);
    let states = channel_states(params, &e, None, window, &[params.t_final])?;
    Ok(qber_from_final_states(&states[0]))
}

/// Ensemble QBER with homodyne-mediated feedback `f(ϕ)` inside `window`.
pub fn feedback_attack_qber(
    params: &ChannelParams,
    theta: f64,
    phi: f64,
    window: &MeasurementWindow,
) -> Result<f64> {
    let e = measurement_operator(theta);
    let f = feedback_operator(phi);
    let states = channel_states(params, &e, Some(&f), window, &[params.t_final])?;
    Ok(qber_from_final_states(&states[0]))
}

/// QBER over the (θ, t) plane with monitoring from `0` to `t`, i.e. Bob
/// measuring at each `t` of `time_grid`.
pub fn qber_heatmap(
    theta_grid: &[f64],
    time_grid: &[f64],
    params: &ChannelParams,
) -> Result<Heatmap> {
    check_grid(theta_grid, "theta_grid")?;
    check_grid(time_grid, "time_grid")?;
    let t_max = time_grid.iter().copied().fold(0.0, f64::max);
    let params = params.with_t_final(t_max.max(params.dt));
    params.validate()?;
    let mut sorted = time_grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values = theta_grid
        .par_iter()
        .map(|&theta| {
            let e = measurement_operator(theta);
            let states = channel_states(
                &params,
                &e,
                None,
                &MeasurementWindow::full(&params),
                &sorted,
            )?;
            let by_time: Vec<f64> = states.iter().map(qber_from_final_states).collect();
            Ok(time_grid
                .iter()
                .map(|t| by_time[sorted.iter().position(|s| s == t).expect("same grid")])
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(Heatmap {
        row_name: "theta",
        col_name: "t",
        rows: theta_grid.to_vec(),
        cols: time_grid.to_vec(),
        values,
    })
}

/// QBER over the (θ, ϕ) plane from the feedback master equation.
pub fn feedback_heatmap(
    theta_grid: &[f64],
    phi_grid: &[f64],
    params: &ChannelParams,
    window: &MeasurementWindow,
) -> Result<Heatmap> {
    check_grid(theta_grid, "theta_grid")?;
    check_grid(phi_grid, "phi_grid")?;
    if !(params.eta > 0.0) {
        return Err(Error::param("eta", "feedback requires eta > 0"));
    }
    let cells: Vec<(usize, usize)> = (0..theta_grid.len())
        .flat_map(|i| (0..phi_grid.len()).map(move |j| (i, j)))
        .collect();
    let flat = cells
        .par_iter()
        .map(|&(i, j)| feedback_attack_qber(params, theta_grid[i], phi_grid[j], window))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Heatmap {
        row_name: "theta",
        col_name: "phi",
        rows: theta_grid.to_vec(),
        cols: phi_grid.to_vec(),
        values: flat.chunks(phi_grid.len()).map(|c| c.to_vec()).collect(),
    })
}

pub(crate) fn check_grid(grid: &[f64], name: &'static str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param(name, "must not be empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::param(name, "must be finite"));
    }
    Ok(())
}

/// `n` uniform points `a, a + h, …` covering `[a, b)`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..n).map(|k| a + k as f64 * h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bb84::analytic_qber_no_attack;
    use std::f64::consts::PI;

    fn coarse() -> ChannelParams {
        ChannelParams {
            dt: 1e-2,
            ..ChannelParams::default()
        }
    }

    #[test]
    fn heatmap_edges() {
        let p = coarse();
        let thetas = [0.0, 0.5 * PI, 1.86 * PI];
        let times = [0.0, 1.0, 3.0];
        let m = qber_heatmap(&thetas, &times, &p).unwrap();
        for row in &m.values {
            assert!(row[0].abs() < 1e-12);
        }
        assert!((m.values[1][2] - 0.49).abs() < 0.01, "{}", m.values[1][2]);
        assert!((m.values[0][2] - analytic_qber_no_attack(3.0)).abs() < 0.03);
    }

    #[test]
    fn heatmap_is_two_pi_periodic() {
        let p = coarse();
        let a = qber_heatmap(&[0.7, 3.1], &[1.5, 3.0], &p).unwrap();
        let b = qber_heatmap(&[0.7 + 2.0 * PI, 3.1 + 2.0 * PI], &[1.5, 3.0], &p).unwrap();
        for (x, y) in a.values.iter().flatten().zip(b.values.iter().flatten()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn feedback_without_actuation_matches_plain_monitoring() {
        let p = coarse();
        let w = MeasurementWindow::new(0.1, 0.4);
        let theta = 1.86 * PI;
        let plain = continuous_attack_qber(&p, theta, &w).unwrap();
        let e = measurement_operator(theta);
        let states = channel_states(&p, &e, Some(&Operator2::zero()), &w, &[p.t_final]).unwrap();
        assert!((qber_from_final_states(&states[0]) - plain).abs() < 1e-12);
        let phis = [0.3, 1.2];
        let a = feedback_heatmap(&[theta], &phis, &p, &w).unwrap();
        let b = feedback_heatmap(&[theta], &phis.map(|x| x + 2.0 * PI), &p, &w).unwrap();
        for (x, y) in a.values[0].iter().zip(&b.values[0]) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_grid_shape() {
        let g = uniform_grid(0.0, 2.0 * PI, 64);
        assert_eq!(g.len(), 64);
        assert!((g[1] - PI / 32.0).abs() < 1e-15);
    }
}
