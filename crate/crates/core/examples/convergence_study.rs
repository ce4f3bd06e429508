//! Mesh and point-count convergence studies with fitted log-log slopes.
//!
//! cargo run --release --example convergence_study

use fepreint::estimator::{convergence_study, EstimationConfig, Sampler, StudyAxis, StudyOptions, StudyResult};
use fepreint::fem::Qoi;
use fepreint::field::FieldSpec;

fn main() -> fepreint::Result<()> {
    let lognormal = EstimationConfig::new(FieldSpec::lognormal_fixture(2), Qoi::MeanValue, 1, 64, 2053, 16, 1)
        .with_default_t_grid()?;
    let options = StudyOptions {
        reference_cells: Some(256),
        sampler: Sampler::Lattice,
    };
    let mesh = convergence_study(&lognormal, StudyAxis::Mesh, &[4, 8, 16, 32], &options)?;
    println!("mesh study against {}: cdf slope {:.3}, pdf slope {:.3}", mesh.reference, mesh.cdf_slope, mesh.pdf_slope);
    print!("{}", StudyResult::table_csv(&mesh.cdf));

    let constant = EstimationConfig::new(FieldSpec::constant_fixture(2), Qoi::MeanValue, 1, 32, 127, 16, 1)
        .with_default_t_grid()?;
    let levels = [127, 257, 521, 1031, 2053];
    for sampler in [Sampler::Lattice, Sampler::PlainMonteCarlo] {
        let study = convergence_study(
            &constant,
            StudyAxis::Points,
            &levels,
            &StudyOptions {
                reference_cells: None,
                sampler,
            },
        )?;
        println!("{sampler:?} against {}: cdf RMSE slope {:.3}", study.reference, study.cdf_slope);
        print!("{}", StudyResult::table_csv(&study.cdf));
    }
    Ok(())
}
