//! Preintegrated lattice estimates against plain Monte Carlo on the full
//! (w, z) space, and against the closed form when the coefficient is
//! deterministic.
//!
//! cargo run --release --example mc_reference

use fepreint::estimator::{estimate_density, gaussian_oracle, mc_reference, EstimationConfig};
use fepreint::fem::Qoi;
use fepreint::field::FieldSpec;

fn main() -> fepreint::Result<()> {
    for (name, spec) in [("lognormal", FieldSpec::lognormal_fixture(2)), ("constant", FieldSpec::constant_fixture(2))] {
        let config = EstimationConfig::new(spec, Qoi::MeanValue, 1, 32, 2053, 16, 3).with_default_t_grid()?;
        let qmc = estimate_density(&config)?;
        let mc = mc_reference(&config, 100_000)?;
        let exact = if config.spec.is_coefficient_deterministic() {
            Some(gaussian_oracle(&config.model()?.components(&[0.0, 0.0])?, &config.t_grid)?)
        } else {
            None
        };
        println!("{name} fixture");
        println!("{:>9} {:>22} {:>22} {:>11}", "t", "F preintegrated", "F Monte Carlo", "F exact");
        for i in (0..qmc.t.len()).step_by(4) {
            println!(
                "{:>9.5} {:>12.8} ± {:.1e} {:>12.8} ± {:.1e} {:>11}",
                qmc.t[i],
                qmc.cdf[i],
                qmc.cdf_stderr[i],
                mc.cdf[i],
                mc.cdf_stderr[i],
                exact.as_ref().map_or("-".into(), |e| format!("{:.8}", e.cdf[i]))
            );
        }
    }
    Ok(())
}
