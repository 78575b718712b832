//! Deterministic (ensemble-averaged) evolution: the closed-form bit-flip
//! solution, a general RK4 Lindblad integrator, and the homodyne-mediated
//! feedback master equation.

use super::params::{ChannelParams, MeasurementWindow};
use crate::error::{Error, Result};
use crate::qcore::{dissipator_raw, Complex2x2, DensityMatrix2, Operator2, C64, IMAG};

/// Largest `h · ‖generator‖` accepted by the RK4 integrator.
pub const RK4_STEP_LIMIT: f64 = 0.1;

/// A jump operator together with its rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump {
    pub rate: f64,
    pub op: Operator2,
}

impl Jump {
    pub fn new(rate: f64, op: Operator2) -> Self {
        Jump { rate, op }
    }
}

/// Right-hand side `ρ̇ = −i[H, ρ] + Σ γ_k D[L_k]ρ`.
#[derive(Clone, Debug)]
pub(crate) struct Generator {
    hamiltonian: Complex2x2,
    jumps: Vec<(f64, Complex2x2)>,
}

impl Generator {
    pub(crate) fn new(hamiltonian: &Operator2, jumps: &[Jump]) -> Self {
        Generator {
            hamiltonian: hamiltonian.matrix,
            jumps: jumps
                .iter()
                .filter(|j| j.rate != 0.0)
                .map(|j| (j.rate, j.op.matrix))
                .collect(),
        }
    }

    #[inline]
    fn rhs(&self, rho: &Complex2x2) -> Complex2x2 {
        let mut out = self.hamiltonian.commutator(rho).scale_c(-IMAG);
        for (rate, op) in &self.jumps {
            out += dissipator_raw(op, rho).scale(*rate);
        }
        out
    }

    fn scale(&self) -> f64 {
        let h = self.hamiltonian.max_abs();
        let d: f64 = self
            .jumps
            .iter()
            .map(|(r, l)| r.abs() * (l.adjoint() * *l).max_abs())
            .sum();
        h.max(d)
    }

    fn rk4(&self, rho: &Complex2x2, h: f64) -> Complex2x2 {
        let k1 = self.rhs(rho);
        let k2 = self.rhs(&(*rho + k1.scale(0.5 * h)));
        let k3 = self.rhs(&(*rho + k2.scale(0.5 * h)));
        let k4 = self.rhs(&(*rho + k3.scale(h)));
        *rho + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
    }

    /// Integrates over `duration` with the largest step `≤ dt` that tiles it exactly.
    pub(crate) fn evolve(
        &self,
        rho: DensityMatrix2,
        duration: f64,
        dt: f64,
    ) -> Result<DensityMatrix2> {
        if duration <= 0.0 {
            return Ok(rho);
        }
        if !(dt > 0.0) {
            return Err(Error::param("dt", "must be > 0"));
        }
        let n = (duration / dt - 1e-9).ceil().max(1.0) as usize;
        let h = duration / n as f64;
        if h * self.scale() > RK4_STEP_LIMIT {
            return Err(Error::param(
                "dt",
                format!(
                    "step {h:.3e} too large for generator scale {:.3e}",
                    self.scale()
                ),
            ));
        }
        let mut m = *rho.matrix();
        for _ in 0..n {
            m = *DensityMatrix2::renormalized(self.rk4(&m, h)).matrix();
        }
        let out = DensityMatrix2::new_unchecked(m);
        out.validate()?;
        Ok(out)
    }
}

/// Closed-form state under pure bit-flip dissipation `γ_D D[σx]`.
///
/// The populations and coherences relax pairwise towards their mean with rate
/// `2γ_D`. The channel Hamiltonian drops out when it is the one matched to
/// the preparation basis (`ωσz` for |0⟩/|1⟩, `ωσx` for |±⟩).
pub fn analytic_dissipative_state(rho0: &DensityMatrix2, gamma_d: f64, t: f64) -> DensityMatrix2 {
    let decay = (-2.0 * gamma_d * t).exp();
    let keep = 0.5 * (1.0 + decay);
    let swap = 0.5 * (1.0 - decay);
    let [r00, r01, r10, r11] = rho0.matrix().0;
    DensityMatrix2::new_unchecked(Complex2x2([
        r00 * keep + r11 * swap,
        r01 * keep + r10 * swap,
        r01 * swap + r10 * keep,
        r00 * swap + r11 * keep,
    ]))
}

/// RK4 solution of `ρ̇ = −i[H, ρ] + Σ_k γ_k D[L_k]ρ` at time `t`.
pub fn lindblad_solve(
    rho0: &DensityMatrix2,
    hamiltonian: &Operator2,
    jumps: &[Jump],
    t: f64,
    dt: f64,
) -> Result<DensityMatrix2> {
    if t < 0.0 {
        return Err(Error::param("t", "must be >= 0"));
    }
    Generator::new(hamiltonian, jumps).evolve(*rho0, t, dt)
}

/// Solution of the same equation at each of the ascending `times`.
pub fn lindblad_checkpoints(
    rho0: &DensityMatrix2,
    hamiltonian: &Operator2,
    jumps: &[Jump],
    times: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix2>> {
    let gen = Generator::new(hamiltonian, jumps);
    let mut out = Vec::with_capacity(times.len());
    let mut rho = *rho0;
    let mut now = 0.0;
    for &t in times {
        if t < now {
            return Err(Error::param(
                "times",
                "checkpoints must be ascending and >= 0",
            ));
        }
        rho = gen.evolve(rho, t - now, dt)?;
        now = t;
        out.push(rho);
    }
    Ok(out)
}

/// Piecewise-constant deterministic channel: bit-flip dissipation throughout,
/// plus monitoring (and optionally feedback) inside a window.
#[derive(Clone, Debug)]
pub struct WindowedChannel {
    params: ChannelParams,
    window: MeasurementWindow,
    outside: Generator,
    inside: Generator,
}

impl WindowedChannel {
    /// Ensemble dynamics of a monitored channel without feedback.
    pub fn monitored(
        hamiltonian: &Operator2,
        params: &ChannelParams,
        e: &Operator2,
        window: &MeasurementWindow,
    ) -> Result<Self> {
        Self::build(hamiltonian, params, e, None, window)
    }

    /// Homodyne-mediated feedback master equation inside the window:
    /// `ρ̇ = −i[H + γ_E/2 (e†f + fe), ρ] + γ_D D[d]ρ + γ_E D[e − if]ρ + (1−η)/η γ_E D[f]ρ`.
    pub fn with_feedback(
        hamiltonian: &Operator2,
        params: &ChannelParams,
        e: &Operator2,
        f: &Operator2,
        window: &MeasurementWindow,
    ) -> Result<Self> {
        Self::build(hamiltonian, params, e, Some(f), window)
    }

    fn build(
        hamiltonian: &Operator2,
        params: &ChannelParams,
        e: &Operator2,
        f: Option<&Operator2>,
        window: &MeasurementWindow,
    ) -> Result<Self> {
        params.validate()?;
        window.validate(params)?;
        let bit_flip = Jump::new(params.gamma_d, Operator2::sigma_x());
        let outside = Generator::new(hamiltonian, &[bit_flip]);
        let inside = match f.filter(|f| !f.is_zero()) {
            None => Generator::new(hamiltonian, &[bit_flip, Jump::new(params.gamma_e, *e)]),
            Some(f) => {
                if params.eta <= 0.0 {
                    return Err(Error::param(
                        "eta",
                        "feedback requires a non-zero detection efficiency",
                    ));
                }
                let ed = e.matrix.adjoint();
                let extra = (ed * f.matrix + f.matrix * e.matrix).scale(0.5 * params.gamma_e);
                let h = Operator2::new(hamiltonian.matrix + extra);
                let e_minus_if = Operator2::new(e.matrix - f.matrix.scale_c(C64::new(0.0, 1.0)));
                let residual = (1.0 - params.eta) / params.eta * params.gamma_e;
                Generator::new(
                    &h,
                    &[
                        bit_flip,
                        Jump::new(params.gamma_e, e_minus_if),
                        Jump::new(residual, *f),
                    ],
                )
            }
        };
        Ok(WindowedChannel {
            params: *params,
            window: *window,
            outside,
            inside,
        })
    }

    /// States at each ascending checkpoint time in `[0, t_final]`.
    pub fn evolve_checkpoints(
        &self,
        rho0: &DensityMatrix2,
        times: &[f64],
    ) -> Result<Vec<DensityMatrix2>> {
        let dt = self.params.dt;
        let (ws, we) = (self.window.t_start, self.window.t_end());
        let mut out = Vec::with_capacity(times.len());
        let mut rho = *rho0;
        let mut now = 0.0;
        for &t in times {
            if t < now - 1e-12 || t > self.params.t_final + 1e-9 {
                return Err(Error::param(
                    "times",
                    "checkpoints must be ascending within [0, t_final]",
                ));
            }
            // split at window boundaries so each piece has a constant generator
            let mut cuts = vec![now];
            for b in [ws, we] {
                if b > now && b < t {
                    cuts.push(b);
                }
            }
            cuts.push(t);
            for pair in cuts.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let mid = 0.5 * (a + b);
                let gen = if mid >= ws && mid < we {
                    &self.inside
                } else {
                    &self.outside
                };
                rho = gen.evolve(rho, b - a, dt)?;
            }
            now = t.max(now);
            out.push(rho);
        }
        Ok(out)
    }

    /// State at `t_final`.
    pub fn evolve(&self, rho0: &DensityMatrix2) -> Result<DensityMatrix2> {
        Ok(self.evolve_checkpoints(rho0, &[self.params.t_final])?[0])
    }
}

/// Deterministic solution of the feedback master equation at `t_final`.
pub fn feedback_master_solve(
    rho0: &DensityMatrix2,
    hamiltonian: &Operator2,
    params: &ChannelParams,
    e: &Operator2,
    f: &Operator2,
    window: &MeasurementWindow,
) -> Result<DensityMatrix2> {
    WindowedChannel::with_feedback(hamiltonian, params, e, f, window)?.evolve(rho0)
}
