//! Fast invariant checks over the whole stack, runnable from the binary.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bb84::{
    analytic_accuracy_projective, analytic_qber_no_attack, analytic_qber_projective, run_protocol,
    AttackStrategy,
};
use crate::classifier::{softmax, Architecture, LstmClassifier};
use crate::datasets::{generate_dataset, load, save};
use crate::dynamics::{analytic_dissipative_state, sme_step, ChannelParams, MeasurementWindow};
use crate::qcore::{
    dissipator, hamiltonian_for, innovation, measurement_operator, Complex2x2, DensityMatrix2,
    Operator2, PureState, C64,
};
use crate::rng::seeded;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

fn random_state<R: Rng>(rng: &mut R) -> DensityMatrix2 {
    let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let a = [C64::new(v[0], v[1]), C64::new(v[2], v[3])];
    let n = a[0].norm_sqr() + a[1].norm_sqr();
    let pure = Complex2x2([
        a[0] * a[0].conj() / n,
        a[0] * a[1].conj() / n,
        a[1] * a[0].conj() / n,
        a[1] * a[1].conj() / n,
    ]);
    let mix: f64 = rng.random();
    let m = pure.scale(1.0 - mix) + Complex2x2::identity().scale(0.5 * mix);
    DensityMatrix2::new(m).expect("convex mixture of states")
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> CheckResult {
    let t0 = Instant::now();
    let (passed, detail) = match f() {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckResult {
        name,
        passed,
        detail,
        elapsed: t0.elapsed(),
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn closed_forms() -> Result<String, String> {
    let cases = [
        (analytic_qber_no_attack(0.0), 0.0),
        (analytic_qber_no_attack(f64::INFINITY), 0.25),
        (analytic_accuracy_projective(0.0), 0.75),
        (analytic_accuracy_projective(f64::INFINITY), 0.625),
        (analytic_qber_projective(0.0), 0.25),
        (analytic_qber_projective(f64::INFINITY), 0.375),
    ];
    for (got, want) in cases {
        ensure((got - want).abs() < 1e-12, || format!("{got} != {want}"))?;
    }
    let q3 = analytic_qber_no_attack(3.0);
    ensure((q3 - 0.249_38).abs() < 5e-6, || format!("QBER(3) = {q3}"))?;
    Ok(format!("QBER(3) = {q3:.6}"))
}

fn sme_invariants() -> Result<String, String> {
    let mut rng = seeded(101);
    let p = ChannelParams::default();
    let mut worst = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..200 {
        let theta = rng.random_range(0.0..2.0 * PI);
        let e = measurement_operator(theta);
        let s = PureState::ALL[rng.random_range(0..4)];
        let h = hamiltonian_for(s, p.omega);
        let mut rho = random_state(&mut rng);
        for _ in 0..50 {
            let dw = rng.sample::<f64, _>(StandardNormal) * p.dt.sqrt();
            rho = sme_step(&rho, &h, &p, &e, dw, true)
                .map_err(|e| e.to_string())?
                .0;
            let m = rho.matrix();
            worst.0 = worst.0.max((m.trace().re - 1.0).abs());
            worst.1 = worst.1.max(m.hermiticity_error());
            worst.2 = worst.2.min(rho.min_eigenvalue());
        }
    }
    ensure(
        worst.0 < 1e-10 && worst.1 < 1e-10 && worst.2 > -1e-10,
        || format!("{worst:?}"),
    )?;
    Ok(format!(
        "max |tr-1| {:.1e}, max herm {:.1e}, min eig {:.2e}",
        worst.0, worst.1, worst.2
    ))
}

fn superoperators_traceless() -> Result<String, String> {
    let mut rng = seeded(102);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let rho = random_state(&mut rng);
        let o = measurement_operator(rng.random_range(0.0..2.0 * PI));
        worst = worst.max(dissipator(&o, &rho).trace().norm());
        worst = worst.max(innovation(&o, &rho).trace().norm());
    }
    ensure(worst < 1e-12, || format!("max |Tr| = {worst:e}"))?;
    Ok(format!("max |Tr| = {worst:.1e}"))
}

fn dark_states() -> Result<String, String> {
    let p = ChannelParams::default();
    for s in [PureState::Plus, PureState::Minus] {
        let rho = s.density();
        let d = dissipator(&Operator2::sigma_x(), &rho).max_abs();
        ensure(d < 1e-15, || format!("D[σx] on {s} = {d}"))?;
        let evolved = analytic_dissipative_state(&rho, p.gamma_d, 3.0);
        let diff = evolved.matrix().max_abs_diff(rho.matrix());
        ensure(diff < 1e-15, || format!("{s} drifted by {diff}"))?;
        let mut r = rho;
        let h = hamiltonian_for(s, p.omega);
        for _ in 0..1000 {
            r = sme_step(&r, &h, &p, &Operator2::sigma_x(), 0.0, false)
                .map_err(|e| e.to_string())?
                .0;
        }
        let diff = r.matrix().max_abs_diff(rho.matrix());
        ensure(diff < 1e-12, || {
            format!("{s} drifted by {diff} under the channel")
        })?;
    }
    Ok("|±> fixed by dissipation".into())
}

fn projective_t_star_independent() -> Result<String, String> {
    let p = ChannelParams::default();
    let n = 20_000;
    let mut qs = Vec::new();
    for t_star in [0.0, 1.0, 2.5] {
        let s = run_protocol(n, &p, &AttackStrategy::Projective { t_star }, 7)
            .map_err(|e| e.to_string())?;
        qs.push(s.qber);
    }
    let want = analytic_qber_projective(3.0);
    let tol = 4.0 * (want * (1.0 - want) / (n as f64 / 2.0)).sqrt();
    for q in &qs {
        ensure((q - want).abs() < tol, || {
            format!("{qs:?} vs {want:.5} ± {tol:.4}")
        })?;
    }
    Ok(format!("{qs:.4?} vs {want:.5}"))
}

fn softmax_normalized() -> Result<String, String> {
    let mut rng = seeded(103);
    for _ in 0..1000 {
        let z: [f64; 4] = std::array::from_fn(|_| rng.random_range(-50.0..50.0));
        let p = softmax(&z);
        let s: f64 = p.iter().sum();
        ensure(
            (s - 1.0).abs() < 1e-12 && p.iter().all(|x| *x >= 0.0),
            || format!("{z:?} -> {p:?}"),
        )?;
    }
    Ok("1000 random logit vectors".into())
}

fn determinism() -> Result<String, String> {
    let p = ChannelParams::default();
    let w = MeasurementWindow::new(0.0, 0.5);
    let a = generate_dataset(16, &p, 1.86 * PI, &w, 5).map_err(|e| e.to_string())?;
    let b = generate_dataset(16, &p, 1.86 * PI, &w, 5).map_err(|e| e.to_string())?;
    let c = generate_dataset(16, &p, 1.86 * PI, &w, 6).map_err(|e| e.to_string())?;
    ensure(a.samples == b.samples, || {
        "same seed gave different data".into()
    })?;
    ensure(a.samples != c.samples, || {
        "different seeds gave identical data".into()
    })?;
    let m1 = LstmClassifier::init(Architecture::default(), 9);
    let m2 = LstmClassifier::init(Architecture::default(), 9);
    ensure(m1 == m2, || "initialization not reproducible".into())?;
    Ok("datasets and initializations reproduce".into())
}

fn dataset_round_trip() -> Result<String, String> {
    let p = ChannelParams::default();
    let ds = generate_dataset(8, &p, 0.5 * PI, &MeasurementWindow::new(0.1, 0.4), 11)
        .map_err(|e| e.to_string())?;
    let path = std::env::temp_dir().join(format!("dlca-selftest-{}.bin", std::process::id()));
    save(&ds, &path).map_err(|e| e.to_string())?;
    let back = load(&path);
    let _ = std::fs::remove_file(&path);
    let back = back.map_err(|e| e.to_string())?;
    let bits = |d: &crate::datasets::PhotocurrentDataset| -> Vec<u64> {
        d.samples
            .iter()
            .flat_map(|s| s.current.iter().map(|x| x.to_bits()))
            .collect()
    };
    ensure(
        back.metadata == ds.metadata && bits(&back) == bits(&ds),
        || "round trip changed data".into(),
    )?;
    Ok(format!("{} samples bit-exact", ds.len()))
}

/// Runs every check. Takes a few seconds in release builds.
pub fn run_selftest() -> Vec<CheckResult> {
    vec![
        check("closed-form QBER and accuracy", closed_forms),
        check(
            "trace, hermiticity and positivity under the SME",
            sme_invariants,
        ),
        check(
            "dissipator and innovation are traceless",
            superoperators_traceless,
        ),
        check("dark states of the bit-flip channel", dark_states),
        check(
            "projective QBER independent of interception time",
            projective_t_star_independent,
        ),
        check("softmax normalization", softmax_normalized),
        check("determinism by seed", determinism),
        check("dataset round trip", dataset_round_trip),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for r in run_selftest() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
