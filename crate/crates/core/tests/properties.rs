//! Randomized and statistical properties that cut across modules.

use std::f64::consts::PI;

use proptest::prelude::*;

use dlca::bb84::{analytic_qber_projective, run_protocol, AttackStrategy};
use dlca::classifier::{evaluate, train, TrainConfig};
use dlca::datasets::{fit_standardizer, generate_dataset, preprocess, TrainSplit};
use dlca::dynamics::{sme_step, ChannelParams, MeasurementWindow, WindowedChannel};
use dlca::experiments::{continuous_attack_qber, lambda, qber_heatmap, SweepPoint};
use dlca::qcore::{hamiltonian_for, measurement_operator, DensityMatrix2, PureState};
use dlca::rng::seeded;
use rand::seq::SliceRandom;

fn pure_state() -> impl Strategy<Value = PureState> {
    (0usize..4).prop_map(|k| PureState::ALL[k])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sme_steps_keep_a_valid_state(
        theta in 0.0f64..(2.0 * PI),
        s in pure_state(),
        kicks in proptest::collection::vec(-4.0f64..4.0, 1..200),
        eta in 0.05f64..1.0,
    ) {
        let p = ChannelParams { eta, ..ChannelParams::default() };
        let e = measurement_operator(theta);
        let h = hamiltonian_for(s, p.omega);
        let mut rho = s.density();
        for z in kicks {
            rho = sme_step(&rho, &h, &p, &e, z * p.dt.sqrt(), true).unwrap().0;
            let m = rho.matrix();
            prop_assert!((m.trace().re - 1.0).abs() < 1e-12);
            prop_assert!(m.hermiticity_error() < 1e-12);
            prop_assert!(rho.min_eigenvalue() > -1e-6);
        }
    }

    #[test]
    fn qber_is_non_decreasing_in_time(theta in 0.0f64..(2.0 * PI)) {
        let times: Vec<f64> = (0..=30).map(|k| 0.1 * k as f64).collect();
        let p = ChannelParams { dt: 1e-2, ..ChannelParams::default() };
        let map = qber_heatmap(&[theta], &times, &p).unwrap();
        for w in map.values[0].windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-6, "{:?}", map.values[0]);
        }
    }

    #[test]
    fn stored_lambda_reproduces(q in 0.0f64..0.5, accs in proptest::collection::vec(0.05f64..1.0, 1..6)) {
        let p = SweepPoint::with_accuracies(0.0, q, accs).unwrap();
        let again = lambda(p.qber, p.accuracy_mean.unwrap()).unwrap();
        prop_assert!((p.lambda.unwrap() - again).abs() <= 1e-12);
    }

    #[test]
    fn monitored_channel_states_are_valid(theta in 0.0f64..(2.0 * PI), t0 in 0.0f64..2.0, len in 0.1f64..1.0) {
        let p = ChannelParams { dt: 1e-2, ..ChannelParams::default() };
        let w = MeasurementWindow::new((t0 * 10.0).round() / 10.0, (len * 10.0).round() / 10.0);
        let e = measurement_operator(theta);
        for s in PureState::ALL {
            let times = [0.5, 1.5, 3.0];
            for rho in WindowedChannel::monitored(&hamiltonian_for(s, p.omega), &p, &e, &w)
                .unwrap()
                .evolve_checkpoints(&s.density(), &times)
                .unwrap()
            {
                prop_assert!(DensityMatrix2::new(*rho.matrix()).is_ok());
            }
        }
    }
}

#[test]
fn projective_qber_does_not_depend_on_interception_time() {
    let p = ChannelParams::default();
    let n = 100_000;
    let stats: Vec<_> = [0.3, 1.5, 2.7]
        .iter()
        .map(|&t_star| run_protocol(n, &p, &AttackStrategy::Projective { t_star }, 31).unwrap())
        .collect();
    for a in &stats {
        for b in &stats {
            let se = (a.stderr_qber.powi(2) + b.stderr_qber.powi(2)).sqrt();
            assert!(
                (a.qber - b.qber).abs() < 3.0 * se,
                "{} vs {}",
                a.qber,
                b.qber
            );
        }
        assert!((a.qber - analytic_qber_projective(3.0)).abs() < 3.0 * a.stderr_qber);
    }
}

#[test]
fn ensemble_qber_matches_sampled_protocol() {
    let p = ChannelParams::default();
    let w = MeasurementWindow::new(0.1, 0.4);
    let theta = 1.86 * PI;
    let exact = continuous_attack_qber(&p, theta, &w).unwrap();
    let s = run_protocol(
        40_000,
        &p,
        &AttackStrategy::Continuous {
            e: measurement_operator(theta),
            window: w,
        },
        32,
    )
    .unwrap();
    assert!(
        (s.qber - exact).abs() < 3.0 * s.stderr_qber,
        "{} vs {exact}",
        s.qber
    );
}

#[test]
fn early_currents_separate_z_states_but_not_x_states() {
    let p = ChannelParams::default();
    let ds = generate_dataset(10_000, &p, 0.5 * PI, &MeasurementWindow::full(&p), 33).unwrap();
    let early = |label: u8| -> Vec<f64> {
        ds.samples
            .iter()
            .filter(|s| s.label == label)
            .map(|s| s.current[..10].iter().sum::<f64>() / 10.0)
            .collect()
    };
    let z = |a: &[f64], b: &[f64]| {
        let stat = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0);
            (m, v / x.len() as f64)
        };
        let (ma, va) = stat(a);
        let (mb, vb) = stat(b);
        (ma - mb).abs() / (va + vb).sqrt()
    };
    let zz = z(&early(0), &early(1));
    let zx = z(&early(2), &early(3));
    assert!(zz > 5.0, "|0> vs |1>: {zz}");
    assert!(zx < 2.0, "|+> vs |->: {zx}");
}

#[test]
fn shuffled_labels_give_chance_accuracy() {
    let p = ChannelParams::default();
    let w = MeasurementWindow::new(0.1, 0.4);
    let mut raw = generate_dataset(4000, &p, 1.86 * PI, &w, 34).unwrap();
    let test_raw = generate_dataset(4000, &p, 1.86 * PI, &w, 35).unwrap();
    let mut labels: Vec<u8> = raw.samples.iter().map(|s| s.label).collect();
    labels.shuffle(&mut seeded(36));
    for (s, l) in raw.samples.iter_mut().zip(labels) {
        s.label = l;
    }
    let split = TrainSplit::from_dataset(raw);
    let st = fit_standardizer(&split).unwrap();
    let train_set = preprocess(split.dataset(), &st).unwrap();
    let test_set = preprocess(&test_raw, &st).unwrap();
    let out = train(&train_set, &TrainConfig::with_seeds(1, 2)).unwrap();
    let e = evaluate(&out.model, &test_set).unwrap();
    let se = (0.25f64 * 0.75 / 4000.0).sqrt();
    assert!(
        (e.accuracy - 0.25).abs() < 4.0 * se,
        "accuracy {}",
        e.accuracy
    );
}
