use std::path::Path;

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    lindblad_solve, ChannelParams, Jump, MeasurementWindow, NoisePrefactor, TrajectorySimulator,
};
use crate::error::{Error, Result};
use crate::qcore::{hamiltonian_for, project, Basis, DensityMatrix2, Operator2, PureState};
use crate::rng::{derive_seed, seeded, SimRng};

/// What the spy does to each qubit in transit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AttackStrategy {
    None,
    /// Intercept-and-resend: projective measurement in a random basis at `t_star`.
    Projective {
        t_star: f64,
    },
    /// Weak homodyne monitoring with operator `e` inside `window`.
    Continuous {
        e: Operator2,
        window: MeasurementWindow,
    },
    /// Monitoring plus Markovian feedback with operator `f`.
    ContinuousWithFeedback {
        e: Operator2,
        f: Operator2,
        window: MeasurementWindow,
    },
}

impl AttackStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            AttackStrategy::None => "none",
            AttackStrategy::Projective { .. } => "projective",
            AttackStrategy::Continuous { .. } => "continuous",
            AttackStrategy::ContinuousWithFeedback { .. } => "continuous_feedback",
        }
    }

    pub fn validate(&self, params: &ChannelParams) -> Result<()> {
        match self {
            AttackStrategy::None => Ok(()),
            AttackStrategy::Projective { t_star } => {
                if !(0.0..=params.t_final).contains(t_star) {
                    return Err(Error::param("t_star", "must lie in [0, t_final]"));
                }
                Ok(())
            }
            AttackStrategy::Continuous { window, .. }
            | AttackStrategy::ContinuousWithFeedback { window, .. } => window.validate(params),
        }
    }
}

/// Infers Alice's state from one homodyne record (e.g. a trained classifier).
pub trait StateGuesser: Sync {
    fn guess(&self, current: &[f64]) -> Result<PureState>;
}

/// One protocol round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub alice_bit: u8,
    pub alice_basis: Basis,
    pub initial_state: PureState,
    pub eve_guess: Option<PureState>,
    pub bob_basis: Basis,
    pub bob_bit: u8,
    pub sifted: bool,
}

impl RoundRecord {
    pub fn is_error(&self) -> bool {
        self.sifted && self.alice_bit != self.bob_bit
    }
}

/// Aggregated protocol statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProtocolStats {
    pub n_rounds: u64,
    /// Sifted rounds.
    pub n_total: u64,
    pub n_error: u64,
    pub qber: f64,
    pub stderr_qber: f64,
    pub n_guessed: u64,
    pub n_correct_guess: u64,
    pub eve_accuracy: Option<f64>,
}

impl ProtocolStats {
    fn from_counts(c: Counts) -> Self {
        let qber = if c.sifted > 0 {
            c.errors as f64 / c.sifted as f64
        } else {
            0.0
        };
        let stderr_qber = if c.sifted > 0 {
            (qber * (1.0 - qber) / c.sifted as f64).sqrt()
        } else {
            0.0
        };
        ProtocolStats {
            n_rounds: c.rounds,
            n_total: c.sifted,
            n_error: c.errors,
            qber,
            stderr_qber,
            n_guessed: c.guessed,
            n_correct_guess: c.correct,
            eve_accuracy: (c.guessed > 0).then(|| c.correct as f64 / c.guessed as f64),
        }
    }

    pub fn sifted_fraction(&self) -> f64 {
        self.n_total as f64 / self.n_rounds as f64
    }
}

#[derive(Clone, Copy, Default)]
struct Counts {
    rounds: u64,
    sifted: u64,
    errors: u64,
    guessed: u64,
    correct: u64,
}

impl Counts {
    fn of(r: &RoundRecord) -> Self {
        Counts {
            rounds: 1,
            sifted: r.sifted as u64,
            errors: r.is_error() as u64,
            guessed: r.eve_guess.is_some() as u64,
            correct: (r.eve_guess == Some(r.initial_state)) as u64,
        }
    }

    fn merge(self, o: Counts) -> Counts {
        Counts {
            rounds: self.rounds + o.rounds,
            sifted: self.sifted + o.sifted,
            errors: self.errors + o.errors,
            guessed: self.guessed + o.guessed,
            correct: self.correct + o.correct,
        }
    }
}

#[inline]
fn basis_of(u: f64) -> Basis {
    if u < 0.5 {
        Basis::PauliZ
    } else {
        Basis::PauliX
    }
}

/// Alice's random preparation: `u1` picks the bit, `u2` the basis.
///
/// Bit 0 maps to `|0⟩`/`|+⟩`, bit 1 to `|1⟩`/`|−⟩`.
pub fn alice_prepare(u1: f64, u2: f64) -> (u8, Basis, PureState) {
    let bit = (u1 >= 0.5) as u8;
    let basis = basis_of(u2);
    (bit, basis, PureState::from_bit(bit, basis))
}

/// Intercept-and-resend: measure in a uniformly random basis and resend the
/// eigenstate found, which is also the spy's guess.
pub fn projective_attack<R: Rng + ?Sized>(
    rho: &DensityMatrix2,
    rng: &mut R,
) -> (PureState, DensityMatrix2) {
    let basis = basis_of(rng.random());
    let (outcome, post) = project(rho, basis, rng.random());
    (basis.eigenstates()[outcome as usize], post)
}

/// Noise-free channel evolutions, cached per (initial state, start state).
struct DeterministicLegs {
    /// `[alice][start]` evolved over the first leg
    first: [[DensityMatrix2; 4]; 4],
    /// `[alice][start]` evolved over the second leg
    second: [[DensityMatrix2; 4]; 4],
}

impl DeterministicLegs {
    fn new(params: &ChannelParams, split: f64) -> Result<Self> {
        let jumps = [Jump::new(params.gamma_d, Operator2::sigma_x())];
        let leg = |duration: f64| -> Result<[[DensityMatrix2; 4]; 4]> {
            let mut out = [[DensityMatrix2::maximally_mixed(); 4]; 4];
            for a in PureState::ALL {
                let h = hamiltonian_for(a, params.omega);
                for s in PureState::ALL {
                    out[a.index()][s.index()] =
                        lindblad_solve(&s.density(), &h, &jumps, duration, params.dt)?;
                }
            }
            Ok(out)
        };
        Ok(DeterministicLegs {
            first: leg(split)?,
            second: leg(params.t_final - split)?,
        })
    }
}

#[allow(clippy::large_enum_variant)]
enum Engine<'a> {
    Deterministic(DeterministicLegs),
    Trajectory(TrajectorySimulator, Option<&'a dyn StateGuesser>),
}

struct ProtocolRunner<'a> {
    attack: AttackStrategy,
    engine: Engine<'a>,
    master_seed: u64,
}

impl<'a> ProtocolRunner<'a> {
    fn new(
        params: &ChannelParams,
        attack: &AttackStrategy,
        master_seed: u64,
        guesser: Option<&'a dyn StateGuesser>,
    ) -> Result<Self> {
        params.validate()?;
        attack.validate(params)?;
        let engine = match attack {
            AttackStrategy::None => Engine::Deterministic(DeterministicLegs::new(params, 0.0)?),
            AttackStrategy::Projective { t_star } => {
                Engine::Deterministic(DeterministicLegs::new(params, *t_star)?)
            }
            AttackStrategy::Continuous { e, window } => {
                Engine::Trajectory(TrajectorySimulator::new(params, e, window)?, guesser)
            }
            AttackStrategy::ContinuousWithFeedback { e, f, window } => Engine::Trajectory(
                TrajectorySimulator::new(params, e, window)?
                    .with_feedback(f, NoisePrefactor::default()),
                guesser,
            ),
        };
        Ok(ProtocolRunner {
            attack: *attack,
            engine,
            master_seed,
        })
    }

    fn round(&self, index: u64) -> Result<RoundRecord> {
        let mut rng: SimRng = seeded(derive_seed(self.master_seed, index));
        let (alice_bit, alice_basis, initial_state) = alice_prepare(rng.random(), rng.random());
        let a = initial_state.index();
        let (arrived, eve_guess) = match (&self.engine, &self.attack) {
            (Engine::Deterministic(legs), AttackStrategy::Projective { .. }) => {
                let at_spy = legs.first[a][a];
                let (guess, post) = projective_attack(&at_spy, &mut rng);
                // the collapsed state is one of the four basis states
                let resent = PureState::ALL
                    .into_iter()
                    .find(|s| s.density() == post)
                    .expect("projection yields a basis state");
                (legs.second[a][resent.index()], Some(guess))
            }
            (Engine::Deterministic(legs), _) => (legs.second[a][a], None),
            (Engine::Trajectory(sim, guesser), _) => {
                let rec = sim.run(initial_state, rng.next_u64())?;
                let guess = match guesser {
                    Some(g) => Some(g.guess(&rec.coarse_current)?),
                    None => None,
                };
                (rec.final_state, guess)
            }
        };
        let bob_basis = basis_of(rng.random());
        let (bob_bit, _) = project(&arrived, bob_basis, rng.random());
        Ok(RoundRecord {
            alice_bit,
            alice_basis,
            initial_state,
            eve_guess,
            bob_basis,
            bob_bit,
            sifted: alice_basis == bob_basis,
        })
    }
}

/// Monte-Carlo BB84 run: prepare, transmit under `attack`, measure, sift and count.
pub fn run_protocol(
    n_rounds: u64,
    params: &ChannelParams,
    attack: &AttackStrategy,
    master_seed: u64,
) -> Result<ProtocolStats> {
    run_protocol_with_guesser(n_rounds, params, attack, master_seed, None)
}

/// As [`run_protocol`], letting `guesser` read each continuous record to
/// produce the spy's guess.
pub fn run_protocol_with_guesser(
    n_rounds: u64,
    params: &ChannelParams,
    attack: &AttackStrategy,
    master_seed: u64,
    guesser: Option<&dyn StateGuesser>,
) -> Result<ProtocolStats> {
    if n_rounds == 0 {
        return Err(Error::param("n_rounds", "must be >= 1"));
    }
    let runner = ProtocolRunner::new(params, attack, master_seed, guesser)?;
    let counts = (0..n_rounds)
        .into_par_iter()
        .map(|i| runner.round(i).map(|r| Counts::of(&r)))
        .try_reduce(Counts::default, |a, b| Ok(a.merge(b)))?;
    Ok(ProtocolStats::from_counts(counts))
}

/// Per-round records in round order.
pub fn protocol_rounds(
    n_rounds: u64,
    params: &ChannelParams,
    attack: &AttackStrategy,
    master_seed: u64,
) -> Result<Vec<RoundRecord>> {
    let runner = ProtocolRunner::new(params, attack, master_seed, None)?;
    (0..n_rounds)
        .into_par_iter()
        .map(|i| runner.round(i))
        .collect()
}

/// One CSV row of protocol results.
#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub attack: String,
    pub gamma_d: f64,
    pub gamma_e: f64,
    pub eta: f64,
    pub omega: f64,
    pub t_final: f64,
    pub n: u64,
    pub qber: f64,
    pub stderr: f64,
    pub eve_accuracy: Option<f64>,
}

impl SummaryRow {
    pub fn new(attack: &AttackStrategy, params: &ChannelParams, stats: &ProtocolStats) -> Self {
        SummaryRow {
            attack: attack.name().to_string(),
            gamma_d: params.gamma_d,
            gamma_e: params.gamma_e,
            eta: params.eta,
            omega: params.omega,
            t_final: params.t_final,
            n: stats.n_rounds,
            qber: stats.qber,
            stderr: stats.stderr_qber,
            eve_accuracy: stats.eve_accuracy,
        }
    }
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
