//! The lognormal coefficient and affine source of the fixtures, evaluated at
//! a few parameter values.
//!
//! cargo run --example random_field

use fepreint::field::{coefficient_extremes, eval_coefficient, eval_source, FieldSpec, ScalarField};

fn main() -> fepreint::Result<()> {
    let spec = FieldSpec::lognormal_fixture(4);
    for (k, mode) in spec.a_modes().iter().enumerate() {
        println!("a_{} = {mode}   (sup norm {:.4})", k + 1, mode.sup_norm(1));
    }
    for (k, mode) in spec.ell_modes().iter().enumerate() {
        println!("ell_{k} = {mode}");
    }

    let z = [1.0, -0.5, 2.0, 0.3];
    let w = [0.2, 1.0, -1.0, 0.0, 0.5];
    for x in [0.1, 0.25, 0.5, 0.9] {
        println!(
            "x = {x:<4}  a(x, z) = {:.6}  f(x, w) = {:.6}",
            eval_coefficient(&spec, &z, &[x])?,
            eval_source(&spec, &w, &[x])?
        );
    }
    let (amin, amax) = coefficient_extremes(&spec, &z, 1)?;
    println!("coefficient range at z: [{amin:.6}, {amax:.6}]");

    // fields parse from the same strings the config uses
    let custom: ScalarField = "polynomial 1 0 -0.5".parse()?;
    println!("{custom} has bounds {:?} on [0,1]", custom.bounds(1));
    Ok(())
}
