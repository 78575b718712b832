use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest allowed `dt · max(γ_D, γ_E, ω)`.
pub const STABILITY_LIMIT: f64 = 0.01;

/// Fine steps averaged into one classifier input sample.
pub const DEFAULT_BIN_FACTOR: usize = 10;

/// Physical and numerical parameters of the monitored channel.
///
/// Times and rates are expressed in units where `γ_D = 1` by default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub gamma_d: f64,
    pub gamma_e: f64,
    pub eta: f64,
    pub omega: f64,
    pub t_final: f64,
    pub dt: f64,
}

impl Default for ChannelParams {
    /// `η = 0.5`, `ω = γ_E = γ_D = 1`, `γ_D t_f = 3`, `γ_D dt = 1e-3`.
    fn default() -> Self {
        ChannelParams {
            gamma_d: 1.0,
            gamma_e: 1.0,
            eta: 0.5,
            omega: 1.0,
            t_final: 3.0,
            dt: 1e-3,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma_d,
            self.gamma_e,
            self.eta,
            self.omega,
            self.t_final,
            self.dt,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::param("channel", "all parameters must be finite"));
        }
        if self.gamma_d < 0.0 {
            return Err(Error::param("gamma_d", "must be >= 0"));
        }
        if self.gamma_e < 0.0 {
            return Err(Error::param("gamma_e", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::param("eta", "must lie in [0, 1]"));
        }
        if self.dt <= 0.0 {
            return Err(Error::param("dt", "must be > 0"));
        }
        if self.t_final < 0.0 {
            return Err(Error::param("t_final", "must be >= 0"));
        }
        let fastest = self.gamma_d.max(self.gamma_e).max(self.omega.abs());
        if self.dt * fastest > STABILITY_LIMIT {
            return Err(Error::param(
                "dt",
                format!(
                    "dt * max(gamma_d, gamma_e, omega) = {:.3e} exceeds {STABILITY_LIMIT}",
                    self.dt * fastest
                ),
            ));
        }
        steps_of(self.t_final, self.dt, "t_final")?;
        Ok(())
    }

    /// Number of fine integration steps over `[0, t_final]`.
    pub fn total_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn with_gamma_e(mut self, gamma_e: f64) -> Self {
        self.gamma_e = gamma_e;
        self
    }

    pub fn with_t_final(mut self, t_final: f64) -> Self {
        self.t_final = t_final;
        self
    }
}

/// Converts a time to an integer number of steps, rejecting off-grid times.
pub(crate) fn steps_of(t: f64, dt: f64, name: &'static str) -> Result<usize> {
    let x = t / dt;
    let n = x.round();
    if (x - n).abs() > 1e-6 * n.max(1.0) || n < 0.0 {
        return Err(Error::param(
            name,
            format!("{t} is not a non-negative multiple of dt = {dt}"),
        ));
    }
    Ok(n as usize)
}

/// Interval `[t_start, t_start + delta_t)` during which the spy monitors the qubit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementWindow {
    pub t_start: f64,
    pub delta_t: f64,
}

impl MeasurementWindow {
    pub fn new(t_start: f64, delta_t: f64) -> Self {
        MeasurementWindow { t_start, delta_t }
    }

    /// Monitoring over the whole travel time.
    pub fn full(params: &ChannelParams) -> Self {
        MeasurementWindow::new(0.0, params.t_final)
    }

    /// No monitoring at all.
    pub fn empty() -> Self {
        MeasurementWindow::new(0.0, 0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.delta_t
    }

    pub fn is_empty(&self) -> bool {
        self.delta_t == 0.0
    }

    pub fn validate(&self, params: &ChannelParams) -> Result<()> {
        if !(self.t_start.is_finite() && self.delta_t.is_finite()) {
            return Err(Error::param("window", "must be finite"));
        }
        if self.t_start < 0.0 || self.delta_t < 0.0 {
            return Err(Error::param("window", "start and duration must be >= 0"));
        }
        if self.t_end() > params.t_final + 1e-9 {
            return Err(Error::param(
                "window",
                format!(
                    "window end {} exceeds t_final {}",
                    self.t_end(),
                    params.t_final
                ),
            ));
        }
        Ok(())
    }

    /// Fine-step index range `[start, end)` covered by the window.
    pub fn step_range(&self, params: &ChannelParams) -> Result<(usize, usize)> {
        self.validate(params)?;
        let start = steps_of(self.t_start, params.dt, "window.t_start")?;
        let len = steps_of(self.delta_t, params.dt, "window.delta_t")?;
        Ok((start, start + len))
    }

    /// Number of coarse samples the window produces for a given bin factor.
    pub fn coarse_len(&self, params: &ChannelParams, bin_factor: usize) -> Result<usize> {
        let (start, end) = self.step_range(params)?;
        let len = end - start;
        if bin_factor == 0 || len % bin_factor != 0 {
            return Err(Error::param(
                "window.delta_t",
                format!("{len} fine steps not divisible by bin factor {bin_factor}"),
            ));
        }
        Ok(len / bin_factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_sized() {
        let p = ChannelParams::default();
        p.validate().unwrap();
        assert_eq!(p.total_steps(), 3000);
        let w = MeasurementWindow::full(&p);
        assert_eq!(w.coarse_len(&p, DEFAULT_BIN_FACTOR).unwrap(), 300);
        let w = MeasurementWindow::new(0.1, 0.4);
        assert_eq!(w.step_range(&p).unwrap(), (100, 500));
        assert_eq!(w.coarse_len(&p, DEFAULT_BIN_FACTOR).unwrap(), 40);
    }

    #[test]
    fn validation_errors() {
        let p = ChannelParams::default();
        assert!(ChannelParams { eta: 1.5, ..p }.validate().is_err());
        assert!(ChannelParams { gamma_d: -1.0, ..p }.validate().is_err());
        assert!(ChannelParams { dt: 0.0, ..p }.validate().is_err());
        assert!(ChannelParams { dt: 0.02, ..p }.validate().is_err());
        assert!(MeasurementWindow::new(2.9, 0.2).validate(&p).is_err());
        assert!(MeasurementWindow::new(-0.1, 0.2).validate(&p).is_err());
        assert!(MeasurementWindow::new(0.1, 0.405)
            .coarse_len(&p, DEFAULT_BIN_FACTOR)
            .is_err());
    }
}
