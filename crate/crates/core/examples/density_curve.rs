//! Estimates the cdf and pdf of the mean-value QoI for the lognormal fixture
//! and prints the curve as CSV.
//!
//! cargo run --release --example density_curve

use fepreint::estimator::{estimate_density, EstimationConfig};
use fepreint::fem::Qoi;
use fepreint::field::FieldSpec;

fn main() -> fepreint::Result<()> {
    let config = EstimationConfig::new(FieldSpec::lognormal_fixture(4), Qoi::MeanValue, 1, 64, 4099, 16, 2024)
        .with_default_t_grid()?;
    let curve = estimate_density(&config)?;
    print!("{}", curve.to_csv());
    eprintln!(
        "h = {}, N = {}, R = {}, {:.2}s",
        curve.metadata.meshwidth, curve.metadata.points, curve.metadata.shifts, curve.metadata.wall_time_secs
    );
    Ok(())
}
