//! One FE factorization at a parameter z yields the QoI as an affine function
//! of the source variables w. Prints the decomposition and checks the stiffness
//! sign conditions.
//!
//! cargo run --example fe_solve

use fepreint::fem::{verify_nonnegative_type, FeModel, Qoi};
use fepreint::field::FieldSpec;
use fepreint::mesh::Mesh;

fn main() -> fepreint::Result<()> {
    let spec = FieldSpec::lognormal_fixture(3);
    for (dim, cells, qoi) in [
        (1, 64, Qoi::MeanValue),
        (1, 64, Qoi::PointValue(vec![0.5])),
        (2, 16, Qoi::MeanValue),
    ] {
        let model = FeModel::new(&Mesh::structured(dim, cells)?, &spec, &qoi)?;
        let z = [0.8, -1.2, 0.4];
        let comps = model.components(&z)?;
        let report = verify_nonnegative_type(&model.stiffness(&z)?);
        println!("{dim}D {cells} cells, {qoi:?}");
        println!("  phibar = {:.8}", comps.phibar);
        println!("  phi    = {:?}", comps.phi.iter().map(|p| format!("{p:.8}")).collect::<Vec<_>>());
        println!("  X at w = 1: {:.8}", comps.value(&[1.0; 4]));
        println!("  nonnegative type: {} (largest sign excess {:.1e})", report.passed(), report.worst_violation);
    }
    Ok(())
}
