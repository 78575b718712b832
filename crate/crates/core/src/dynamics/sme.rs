//! Diffusive unraveling of the monitored channel: Euler–Maruyama steps of the
//! stochastic master equation (with and without Markovian feedback) and the
//! homodyne current they emit.

use rand_distr::{Distribution, StandardNormal};

use super::params::{ChannelParams, MeasurementWindow, DEFAULT_BIN_FACTOR};
use crate::error::{Error, Result};
use crate::qcore::{
    dissipator_raw, expectation_raw, hamiltonian_for, Complex2x2, DensityMatrix2, Operator2,
    PureState, C64, IMAG, POSITIVITY_TOL,
};
use crate::rng::{seeded, SimRng};

/// Gaussian increments `ΔW ~ N(0, dt)` from a seeded stream.
pub struct WienerStream {
    rng: SimRng,
    sqrt_dt: f64,
}

impl WienerStream {
    pub fn new(seed: u64, dt: f64) -> Self {
        WienerStream {
            rng: seeded(seed),
            sqrt_dt: dt.sqrt(),
        }
    }

    #[inline]
    pub fn next_increment(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        z * self.sqrt_dt
    }
}

impl Iterator for WienerStream {
    type Item = f64;
    fn next(&mut self) -> Option<f64> {
        Some(self.next_increment())
    }
}

/// Prefactor of the `dW` term in the feedback SME.
///
/// The feedback equation as commonly written carries `γ_E`, where the
/// feedback-free equation carries `√(γ_E η)` folded as `√γ_E · √η e`. Both
/// choices average to the same master equation; they coincide when `γ_E = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoisePrefactor {
    #[default]
    Verbatim,
    SqrtRate,
}

/// One term `c · L ρ R†` of the jump (sandwich) part of a step.
#[derive(Clone, Copy, Debug)]
struct Sandwich {
    coef: C64,
    left: Complex2x2,
    right: Complex2x2,
}

/// Precomputed constants for one channel configuration.
///
/// A monitored step is the Kraus-form Euler update
/// `ρ' ∝ MρM† + dt Σ c L ρ R†` with `M = I + (−iH' − G/2) dt + B dY` and
/// `dY = dW + Tr[(B + B†)ρ] dt`. Expanded to first order it is exactly the
/// Euler–Maruyama step of the SME, with drift `−i[H',ρ] + Σ c (LρR† − ½{R†L, ρ})`
/// and noise `H[B]ρ dW`, but it keeps the state positive for any `dW`.
#[derive(Clone, Debug)]
struct SmeKernel {
    h: Complex2x2,
    d: Complex2x2,
    gamma_d: f64,
    dt: f64,
    /// `I + (−iH' − G/2) dt`
    m_det: Complex2x2,
    b: Complex2x2,
    b_sum: Complex2x2,
    sandwiches: Vec<Sandwich>,
    e_sum: Complex2x2,
    record_gain: f64,
    record_noise: f64,
}

struct StepOutput {
    next: Complex2x2,
    /// `(drift term of J, full J sample)` when monitoring.
    current: Option<(f64, f64)>,
}

fn term(coef: C64, left: Complex2x2, right: Complex2x2) -> Sandwich {
    Sandwich { coef, left, right }
}

impl SmeKernel {
    fn new(h: &Operator2, params: &ChannelParams, e: &Operator2) -> Self {
        let g = params.gamma_e;
        let b = e.matrix.scale((g * params.eta).sqrt());
        let mut k = SmeKernel::base(h, params, e);
        k.set_monitoring(h.matrix, vec![term(C64::from(g), e.matrix, e.matrix)], b);
        k
    }

    fn base(h: &Operator2, params: &ChannelParams, e: &Operator2) -> Self {
        let record_noise = if params.eta > 0.0 {
            1.0 / (params.eta.sqrt() * params.dt)
        } else {
            f64::INFINITY
        };
        SmeKernel {
            h: h.matrix,
            d: Operator2::sigma_x().matrix,
            gamma_d: params.gamma_d,
            dt: params.dt,
            m_det: Complex2x2::identity(),
            b: Complex2x2::zero(),
            b_sum: Complex2x2::zero(),
            sandwiches: Vec::new(),
            e_sum: e.matrix + e.matrix.adjoint(),
            record_gain: params.gamma_e.sqrt(),
            record_noise,
        }
    }

    /// Installs the monitored-step generator `−i[H',ρ] + γ_D D[d]ρ + Σ c (LρR† − ½{R†L, ρ})`
    /// unravelled with noise operator `B`.
    fn set_monitoring(&mut self, h_prime: Complex2x2, jumps: Vec<Sandwich>, b: Complex2x2) {
        let mut g = (self.d.adjoint() * self.d).scale(self.gamma_d);
        for t in &jumps {
            g += (t.right.adjoint() * t.left).scale_c(t.coef);
        }
        let generator = h_prime.scale_c(-IMAG) - g.scale(0.5);
        self.m_det = Complex2x2::identity() + generator.scale(self.dt);
        let mut sandwiches = vec![term(C64::from(self.gamma_d), self.d, self.d)];
        sandwiches.extend(jumps);
        sandwiches.push(term(C64::from(-1.0), b, b));
        sandwiches.retain(|t| {
            t.coef != C64::from(0.0) && t.left.max_abs() > 0.0 && t.right.max_abs() > 0.0
        });
        self.sandwiches = sandwiches;
        self.b = b;
        self.b_sum = b + b.adjoint();
    }

    /// Monitoring with Markovian feedback: the generator is the feedback master
    /// equation and the noise operator is `g (√η e − i f/√η)`.
    fn with_feedback(
        mut self,
        h: &Operator2,
        params: &ChannelParams,
        e: &Operator2,
        f: &Operator2,
        prefactor: NoisePrefactor,
    ) -> Self {
        let (g, eta) = (params.gamma_e, params.eta);
        let (e, f) = (e.matrix, f.matrix);
        let gain = match prefactor {
            NoisePrefactor::Verbatim => g,
            NoisePrefactor::SqrtRate => g.sqrt(),
        };
        let se = eta.sqrt();
        let b = (e.scale(se) - f.scale_c(IMAG).scale(1.0 / se)).scale(gain);
        let h_prime = h.matrix + (e.adjoint() * f + f * e).scale(0.5 * g);
        // γ_E D[e − if] + (1−η)/η γ_E D[f] as a coefficient matrix over (e, f)
        let jumps = vec![
            term(C64::from(g), e, e),
            term(C64::new(0.0, g), e, f),
            term(C64::new(0.0, -g), f, e),
            term(C64::from(g / eta), f, f),
        ];
        self.set_monitoring(h_prime, jumps, b);
        self
    }

    #[inline]
    fn step(&self, rho: &Complex2x2, dw: f64, measuring: bool) -> StepOutput {
        if !measuring {
            let mut drift = self.h.commutator(rho).scale_c(-IMAG);
            if self.gamma_d != 0.0 {
                drift += dissipator_raw(&self.d, rho).scale(self.gamma_d);
            }
            return StepOutput {
                next: *rho + drift.scale(self.dt),
                current: None,
            };
        }
        let dy = dw + expectation_raw(&self.b_sum, rho).re * self.dt;
        let m = self.m_det + self.b.scale(dy);
        let mut next = m * *rho * m.adjoint();
        for t in &self.sandwiches {
            next += (t.left * *rho * t.right.adjoint()).scale_c(t.coef * self.dt);
        }
        let mean = self.record_gain * expectation_raw(&self.e_sum, rho).re;
        StepOutput {
            next,
            current: Some((mean, mean + dw * self.record_noise)),
        }
    }
}

fn checked(next: Complex2x2, step: usize, dt: f64) -> Result<DensityMatrix2> {
    let rho = DensityMatrix2::renormalized(next);
    let lo = rho.min_eigenvalue();
    if !(lo >= POSITIVITY_TOL) {
        return Err(Error::Positivity {
            step,
            time: step as f64 * dt,
            dt,
            min_eigenvalue: lo,
        });
    }
    Ok(rho)
}

/// One step of the monitored channel (Kraus-form Euler–Maruyama while
/// measuring, plain Euler otherwise).
///
/// `dW` drives both the state update and the returned current sample
/// `J = √γ_E Tr[(e + e†)ρ] + dW/(√η dt)`; the current is `None` when
/// `measuring` is false, in which case only `−i[H,ρ] + γ_D D[σx]ρ` acts.
pub fn sme_step(
    rho: &DensityMatrix2,
    hamiltonian: &Operator2,
    params: &ChannelParams,
    e: &Operator2,
    dw: f64,
    measuring: bool,
) -> Result<(DensityMatrix2, Option<f64>)> {
    if measuring && params.eta <= 0.0 {
        return Err(Error::param("eta", "a current record requires eta > 0"));
    }
    let out = SmeKernel::new(hamiltonian, params, e).step(rho.matrix(), dw, measuring);
    let next = checked(out.next, 0, params.dt)?;
    Ok((next, out.current.map(|(_, j)| j)))
}

/// One step of the feedback SME. Always monitoring.
pub fn feedback_sme_step(
    rho: &DensityMatrix2,
    hamiltonian: &Operator2,
    params: &ChannelParams,
    e: &Operator2,
    f: &Operator2,
    dw: f64,
    prefactor: NoisePrefactor,
) -> Result<(DensityMatrix2, f64)> {
    if params.eta <= 0.0 {
        return Err(Error::param("eta", "feedback requires eta > 0"));
    }
    let kernel =
        SmeKernel::new(hamiltonian, params, e).with_feedback(hamiltonian, params, e, f, prefactor);
    let out = kernel.step(rho.matrix(), dw, true);
    let next = checked(out.next, 0, params.dt)?;
    Ok((next, out.current.map(|(_, j)| j).unwrap_or(0.0)))
}

/// One simulated qubit: its coarse-grained homodyne record and final state.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub label: PureState,
    /// Block means of the fine current over `bin_factor` steps, window only.
    pub coarse_current: Vec<f64>,
    /// Total fine integration steps over `[0, t_final]`.
    pub fine_steps: usize,
    pub final_state: DensityMatrix2,
    /// `(time, state)` at the requested snapshot times.
    pub snapshots: Vec<(f64, DensityMatrix2)>,
    pub fine: Option<FineTrace>,
}

/// Per-step record inside the window, kept on request.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FineTrace {
    pub current: Vec<f64>,
    pub drift: Vec<f64>,
    pub increments: Vec<f64>,
}

/// Configured integrator for single trajectories.
#[derive(Clone, Debug)]
pub struct TrajectorySimulator {
    params: ChannelParams,
    e: Operator2,
    window: MeasurementWindow,
    bin_factor: usize,
    feedback: Option<(Operator2, NoisePrefactor)>,
    snapshot_steps: Vec<usize>,
    keep_fine: bool,
    window_steps: (usize, usize),
}

impl TrajectorySimulator {
    pub fn new(params: &ChannelParams, e: &Operator2, window: &MeasurementWindow) -> Result<Self> {
        params.validate()?;
        let window_steps = window.step_range(params)?;
        window.coarse_len(params, DEFAULT_BIN_FACTOR)?;
        if !window.is_empty() && params.eta <= 0.0 {
            return Err(Error::param("eta", "a current record requires eta > 0"));
        }
        Ok(TrajectorySimulator {
            params: *params,
            e: *e,
            window: *window,
            bin_factor: DEFAULT_BIN_FACTOR,
            feedback: None,
            snapshot_steps: Vec::new(),
            keep_fine: false,
            window_steps,
        })
    }

    pub fn with_bin_factor(mut self, bin_factor: usize) -> Result<Self> {
        self.window.coarse_len(&self.params, bin_factor)?;
        self.bin_factor = bin_factor;
        Ok(self)
    }

    pub fn with_feedback(mut self, f: &Operator2, prefactor: NoisePrefactor) -> Self {
        self.feedback = Some((*f, prefactor));
        self
    }

    /// Records the conditioned state at each of the given times (on the step grid).
    pub fn with_snapshots(mut self, times: &[f64]) -> Result<Self> {
        self.snapshot_steps = times
            .iter()
            .map(|&t| super::params::steps_of(t, self.params.dt, "snapshot"))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn with_fine_trace(mut self, keep: bool) -> Self {
        self.keep_fine = keep;
        self
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn window(&self) -> &MeasurementWindow {
        &self.window
    }

    pub fn bin_factor(&self) -> usize {
        self.bin_factor
    }

    pub fn coarse_len(&self) -> usize {
        (self.window_steps.1 - self.window_steps.0) / self.bin_factor
    }

    /// Integrates `initial` from `t = 0` to `t_final` with noise seeded by `seed`.
    pub fn run(&self, initial: PureState, seed: u64) -> Result<TrajectoryRecord> {
        self.run_from(initial, &initial.density(), seed)
    }

    /// Like [`run`](Self::run) but starting from an arbitrary state; the
    /// Hamiltonian still follows `label`'s preparation basis.
    pub fn run_from(
        &self,
        label: PureState,
        rho0: &DensityMatrix2,
        seed: u64,
    ) -> Result<TrajectoryRecord> {
        let p = &self.params;
        let h = hamiltonian_for(label, p.omega);
        let mut kernel = SmeKernel::new(&h, p, &self.e);
        if let Some((f, pre)) = &self.feedback {
            kernel = kernel.with_feedback(&h, p, &self.e, f, *pre);
        }
        let mut noise = WienerStream::new(seed, p.dt);
        let n = p.total_steps();
        let (ws, we) = self.window_steps;
        let mut coarse = Vec::with_capacity(self.coarse_len());
        let mut fine = self.keep_fine.then(FineTrace::default);
        let mut snapshots = Vec::with_capacity(self.snapshot_steps.len());
        let mut acc = 0.0;
        let mut in_bin = 0;
        let mut rho = *rho0;
        for k in 0..n {
            self.snapshot(k, &rho, &mut snapshots);
            let measuring = k >= ws && k < we;
            let dw = if measuring {
                noise.next_increment()
            } else {
                0.0
            };
            let out = kernel.step(rho.matrix(), dw, measuring);
            if let Some((mean, j)) = out.current {
                acc += j;
                in_bin += 1;
                if in_bin == self.bin_factor {
                    coarse.push(acc / self.bin_factor as f64);
                    acc = 0.0;
                    in_bin = 0;
                }
                if let Some(tr) = fine.as_mut() {
                    tr.current.push(j);
                    tr.drift.push(mean);
                    tr.increments.push(dw);
                }
            }
            rho = checked(out.next, k + 1, p.dt)?;
        }
        self.snapshot(n, &rho, &mut snapshots);
        Ok(TrajectoryRecord {
            seed,
            label,
            coarse_current: coarse,
            fine_steps: n,
            final_state: rho,
            snapshots,
            fine,
        })
    }

    fn snapshot(&self, k: usize, rho: &DensityMatrix2, out: &mut Vec<(f64, DensityMatrix2)>) {
        for &s in &self.snapshot_steps {
            if s == k {
                out.push((k as f64 * self.params.dt, *rho));
            }
        }
    }
}

/// Simulates one trajectory with the default bin factor.
pub fn simulate_trajectory(
    initial: PureState,
    params: &ChannelParams,
    e: &Operator2,
    window: &MeasurementWindow,
    seed: u64,
) -> Result<TrajectoryRecord> {
    TrajectorySimulator::new(params, e, window)?.run(initial, seed)
}
