//! Generate a small photocurrent dataset, save it, read it back and export CSV.
//!
//! cargo run --release --example datasets -- [n] [out_dir]

use std::f64::consts::PI;
use std::path::PathBuf;

use dlca::datasets::{export_csv, generate_dataset, load, save};
use dlca::dynamics::{ChannelParams, MeasurementWindow};

fn main() -> dlca::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(400);
    let out = PathBuf::from(std::env::args().nth(2).unwrap_or_else(|| "dlca-out".into()));
    std::fs::create_dir_all(&out)?;
    let p = ChannelParams::default();
    let ds = generate_dataset(n, &p, 1.86 * PI, &MeasurementWindow::new(0.1, 0.4), 1)?;

    let bin = out.join("example.dset");
    save(&ds, &bin)?;
    let back = load(&bin)?;
    assert_eq!(back.samples, ds.samples);
    export_csv(&ds, &out.join("example.csv"))?;

    let len = ds.sequence_len();
    let mut means = [[0.0; 2]; 4];
    for s in &ds.samples {
        let m = &mut means[s.label as usize];
        m[0] += s.current.iter().sum::<f64>() / len as f64;
        m[1] += 1.0;
    }
    println!("{n} currents of length {len}; mean current per label:");
    for (k, [sum, count]) in means.iter().enumerate() {
        println!("  {k}: {:+.3} over {count}", sum / count.max(1.0));
    }
    println!("wrote {} and example.csv", bin.display());
    Ok(())
}
