//! Labeled photocurrent datasets: generation, standardization, splitting and
//! a checksummed binary container.

mod format;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ChannelParams, MeasurementWindow, TrajectorySimulator};
use crate::error::{Error, Result};
use crate::qcore::{measurement_operator, PureState};
use crate::rng::{derive_seed, seeded};

pub use format::{export_csv, load, load_with_warnings, save, FORMAT_VERSION, MAGIC};

/// Version tag written into every generated dataset.
pub const GENERATOR_VERSION: &str = concat!("dlca-", env!("CARGO_PKG_VERSION"));

/// One preprocessing pass applied to the currents, in order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transform {
    pub mean: f64,
    pub std: f64,
    pub time_flipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMetadata {
    pub params: ChannelParams,
    pub theta: f64,
    pub window: MeasurementWindow,
    pub bin_factor: usize,
    /// Stored as text so the full `u64` range survives the metadata format.
    #[serde(with = "seed_text")]
    pub master_seed: u64,
    pub generator_version: String,
    #[serde(default)]
    pub transforms: Vec<Transform>,
}

pub(crate) mod seed_text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Index of the initial state in `PureState::ALL`.
    pub label: u8,
    pub current: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhotocurrentDataset {
    pub metadata: DatasetMetadata,
    pub samples: Vec<Sample>,
}

impl PhotocurrentDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Common current length, or 0 for an empty set.
    pub fn sequence_len(&self) -> usize {
        self.samples.first().map_or(0, |s| s.current.len())
    }

    pub fn label_counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for s in &self.samples {
            c[s.label as usize] += 1;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.sequence_len();
        for (i, s) in self.samples.iter().enumerate() {
            if s.label > 3 {
                return Err(Error::Format(format!(
                    "sample {i}: label {} out of range",
                    s.label
                )));
            }
            if s.current.len() != len {
                return Err(Error::Shape(format!(
                    "sample {i} has {} steps, expected {len}",
                    s.current.len()
                )));
            }
        }
        Ok(())
    }
}

/// Simulates `n` labeled currents; sample `i` draws its label and noise from
/// `derive_seed(master_seed, i)`.
pub fn generate_dataset(
    n: usize,
    params: &ChannelParams,
    theta: f64,
    window: &MeasurementWindow,
    master_seed: u64,
) -> Result<PhotocurrentDataset> {
    generate_with_bin_factor(
        n,
        params,
        theta,
        window,
        crate::dynamics::DEFAULT_BIN_FACTOR,
        master_seed,
    )
}

pub fn generate_with_bin_factor(
    n: usize,
    params: &ChannelParams,
    theta: f64,
    window: &MeasurementWindow,
    bin_factor: usize,
    master_seed: u64,
) -> Result<PhotocurrentDataset> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    if window.is_empty() {
        return Err(Error::param(
            "window",
            "a dataset needs a non-empty measurement window",
        ));
    }
    let e = measurement_operator(theta);
    let sim = TrajectorySimulator::new(params, &e, window)?.with_bin_factor(bin_factor)?;
    let samples = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeded(derive_seed(master_seed, i));
            let label = rng.random_range(0..4u8);
            let rec = sim.run(PureState::ALL[label as usize], rng.next_u64())?;
            Ok(Sample {
                label,
                current: rec.coarse_current,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhotocurrentDataset {
        metadata: DatasetMetadata {
            params: *params,
            theta,
            window: *window,
            bin_factor,
            master_seed,
            generator_version: GENERATOR_VERSION.to_string(),
            transforms: Vec::new(),
        },
        samples,
    })
}

/// Global scalar standardization `x → (x − mean)/std`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn identity() -> Self {
        Standardizer {
            mean: 0.0,
            std: 1.0,
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    /// Standardizes and time-reverses one raw current.
    pub fn transform(&self, current: &[f64]) -> Vec<f64> {
        current.iter().rev().map(|&x| self.apply(x)).collect()
    }
}

/// Training data, kept distinct from arbitrary datasets so statistics are
/// only ever fitted on it.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainSplit(pub PhotocurrentDataset);

impl TrainSplit {
    /// Marks an independently generated dataset as training data.
    pub fn from_dataset(ds: PhotocurrentDataset) -> Self {
        TrainSplit(ds)
    }

    pub fn dataset(&self) -> &PhotocurrentDataset {
        &self.0
    }

    pub fn into_inner(self) -> PhotocurrentDataset {
        self.0
    }
}

/// Global mean and population standard deviation over every timestep of
/// every training current.
pub fn fit_standardizer(train: &TrainSplit) -> Result<Standardizer> {
    let ds = train.dataset();
    let count: usize = ds.samples.iter().map(|s| s.current.len()).sum();
    if count == 0 {
        return Err(Error::param(
            "train",
            "cannot fit a standardizer on an empty dataset",
        ));
    }
    let n = count as f64;
    let mean = ds.samples.iter().flat_map(|s| &s.current).sum::<f64>() / n;
    let var = ds
        .samples
        .iter()
        .flat_map(|s| &s.current)
        .map(|x| (x - mean).powi(2))
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::Numerical(format!(
            "training currents have zero or undefined variance (std = {std})"
        )));
    }
    Ok(Standardizer { mean, std })
}

/// Standardizes each current and reverses it along time.
pub fn preprocess(ds: &PhotocurrentDataset, s: &Standardizer) -> Result<PhotocurrentDataset> {
    ds.validate()?;
    if !(s.std > 0.0) {
        return Err(Error::param("standardizer", "std must be > 0"));
    }
    let mut metadata = ds.metadata.clone();
    metadata.transforms.push(Transform {
        mean: s.mean,
        std: s.std,
        time_flipped: true,
    });
    let samples = ds
        .samples
        .iter()
        .map(|x| Sample {
            label: x.label,
            current: s.transform(&x.current),
        })
        .collect();
    Ok(PhotocurrentDataset { metadata, samples })
}

/// Seeded shuffle, then the first `round(n · train_fraction)` samples train.
pub fn split(
    ds: &PhotocurrentDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(TrainSplit, PhotocurrentDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::param(
            "train_fraction",
            "must lie strictly between 0 and 1",
        ));
    }
    let n = ds.len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::param(
            "train_fraction",
            format!("splitting {n} samples at {train_fraction} leaves one side empty"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded(seed));
    let pick = |idx: &[usize]| PhotocurrentDataset {
        metadata: ds.metadata.clone(),
        samples: idx.iter().map(|&i| ds.samples[i].clone()).collect(),
    };
    Ok((TrainSplit(pick(&order[..n_train])), pick(&order[n_train..])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> ChannelParams {
        ChannelParams::default().with_t_final(0.2)
    }

    fn toy(currents: &[&[f64]]) -> PhotocurrentDataset {
        let p = small_params();
        PhotocurrentDataset {
            metadata: DatasetMetadata {
                params: p,
                theta: 0.0,
                window: MeasurementWindow::full(&p),
                bin_factor: 10,
                master_seed: u64::MAX,
                generator_version: GENERATOR_VERSION.into(),
                transforms: vec![],
            },
            samples: currents
                .iter()
                .enumerate()
                .map(|(i, c)| Sample {
                    label: (i % 4) as u8,
                    current: c.to_vec(),
                })
                .collect(),
        }
    }

    #[test]
    fn generation_is_deterministic_and_sized() {
        let p = small_params();
        let w = MeasurementWindow::full(&p);
        let a = generate_dataset(8, &p, 0.5, &w, 11).unwrap();
        let b = generate_dataset(8, &p, 0.5, &w, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sequence_len(), 20);
        let c = generate_dataset(8, &p, 0.5, &w, 12).unwrap();
        assert_ne!(a.samples, c.samples);
        // a prefix of a larger run is the smaller run
        let d = generate_dataset(12, &p, 0.5, &w, 11).unwrap();
        assert_eq!(&d.samples[..8], &a.samples[..]);
    }

    #[test]
    fn generation_is_independent_of_worker_count() {
        let p = small_params();
        let w = MeasurementWindow::full(&p);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let three = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let a = one.install(|| generate_dataset(16, &p, 1.0, &w, 5).unwrap());
        let b = three.install(|| generate_dataset(16, &p, 1.0, &w, 5).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn labels_are_uniform() {
        let p = ChannelParams::default().with_t_final(0.02);
        let w = MeasurementWindow::full(&p);
        let n = 8000;
        let ds = generate_dataset(n, &p, 0.0, &w, 99).unwrap();
        let expected = n as f64 / 4.0;
        let chi2: f64 = ds
            .label_counts()
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 3 degrees of freedom, p = 0.001
        assert!(chi2 < 16.27, "chi2 {chi2}");
    }

    #[test]
    fn rejects_bad_requests() {
        let p = small_params();
        assert!(generate_dataset(0, &p, 0.0, &MeasurementWindow::full(&p), 1).is_err());
        assert!(generate_dataset(1, &p, 0.0, &MeasurementWindow::empty(), 1).is_err());
        assert!(generate_dataset(1, &p, 0.0, &MeasurementWindow::new(0.0, 0.5), 1).is_err());
    }

    #[test]
    fn standardizer_examples() {
        let two = TrainSplit(toy(&[&[0.0], &[2.0]]));
        let s = fit_standardizer(&two).unwrap();
        assert_eq!(
            s,
            Standardizer {
                mean: 1.0,
                std: 1.0
            }
        );
        let flat = TrainSplit(toy(&[&[3.0, 3.0], &[3.0, 3.0]]));
        assert!(fit_standardizer(&flat).is_err());
    }

    #[test]
    fn standardized_training_data_has_unit_statistics() {
        let p = small_params();
        let ds = generate_dataset(64, &p, 1.2, &MeasurementWindow::full(&p), 3).unwrap();
        let train = TrainSplit(ds);
        let s = fit_standardizer(&train).unwrap();
        let out = preprocess(train.dataset(), &s).unwrap();
        let refit = fit_standardizer(&TrainSplit(out)).unwrap();
        assert!(refit.mean.abs() < 1e-6);
        assert!((refit.std - 1.0).abs() < 1e-6);
    }

    #[test]
    fn preprocess_flips_and_records() {
        let ds = toy(&[&[1.0, 2.0, 3.0]]);
        let out = preprocess(&ds, &Standardizer::identity()).unwrap();
        assert_eq!(out.samples[0].current, vec![3.0, 2.0, 1.0]);
        assert_eq!(out.metadata.transforms.len(), 1);
        let back = preprocess(&out, &Standardizer::identity()).unwrap();
        assert_eq!(back.samples, ds.samples);
        let ragged = toy(&[&[1.0, 2.0], &[1.0]]);
        assert!(matches!(
            preprocess(&ragged, &Standardizer::identity()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn test_split_is_not_centered_by_train_statistics() {
        let p = small_params();
        let train =
            TrainSplit(generate_dataset(40, &p, 1.0, &MeasurementWindow::full(&p), 1).unwrap());
        let test = generate_dataset(40, &p, 1.0, &MeasurementWindow::full(&p), 2).unwrap();
        let s = fit_standardizer(&train).unwrap();
        let t = preprocess(&test, &s).unwrap();
        let m = fit_standardizer(&TrainSplit(t)).unwrap();
        assert!(m.mean.abs() > 1e-6);
    }

    #[test]
    fn split_examples() {
        let currents: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = currents.iter().map(|c| c.as_slice()).collect();
        let ds = toy(&refs);
        let (tr, te) = split(&ds, 0.9, 4).unwrap();
        assert_eq!((tr.dataset().len(), te.len()), (90, 10));
        let (tr2, te2) = split(&ds, 0.9, 4).unwrap();
        assert_eq!(tr, tr2);
        assert_eq!(te, te2);
        let mut all: Vec<f64> = tr
            .dataset()
            .samples
            .iter()
            .chain(&te.samples)
            .map(|s| s.current[0])
            .collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|i| i as f64).collect::<Vec<_>>());
        assert!(split(&ds, 1.0, 4).is_err());
        assert!(split(&ds, 0.0, 4).is_err());
        assert!(split(&toy(&[&[1.0]]), 0.5, 4).is_err());
    }
}
