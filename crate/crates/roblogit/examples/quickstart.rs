//! Minimal end-to-end fit: four observations, two features, SCAD at a
//! fixed penalty level. Mirrors the README example.

use ndarray::{Array1, Array2};
use roblogit::data::Dataset;
use roblogit::loss::LossSpec;
use roblogit::penalty::PenaltySpec;
use roblogit::solver::{fit, FitConfig};

fn main() -> Result<(), roblogit::Error> {
    let x = Array2::from_shape_vec(
        (4, 2),
        vec![0.2, 1.0, -0.4, 0.1, 1.3, -0.7, -0.9, 0.4],
    )
    .unwrap();
    let y = Array1::from(vec![1u8, 0, 1, 0]);
    let data = Dataset::new(x, y)?;
    let result = fit(
        &data,
        &LossSpec::exp_loss(),
        &PenaltySpec::scad(0.1)?,
        &FitConfig::default(),
    )?;
    println!("active set: {:?}", result.active_set);
    Ok(())
}
