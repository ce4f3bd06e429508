//! Integrating out w0 in closed form: compares Φ(ξ) and ρ(ξ)/φ0 with a brute
//! force average of the indicator over w0.
//!
//! cargo run --example preintegration

use fepreint::fem::QoiComponents;
use fepreint::preint::Preintegrand;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> fepreint::Result<()> {
    let comps = QoiComponents::new(0.1, vec![0.3, -0.2, 0.5], vec![0.0, 0.0])?;
    let w_rest = [0.7, -0.4];
    let p = Preintegrand::new(&w_rest, &comps)?;

    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let w0: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    println!("{:>6} {:>10} {:>12} {:>12} {:>10}", "t", "xi", "Phi(xi)", "indicator", "pdf");
    for t in [-0.6, -0.3, 0.0, 0.2, 0.5] {
        let hits = w0
            .iter()
            .filter(|&&w| comps.value(&[w, w_rest[0], w_rest[1]]) <= t)
            .count();
        println!(
            "{t:>6.2} {:>10.5} {:>12.8} {:>12.8} {:>10.6}",
            p.xi(t),
            p.cdf(t),
            hits as f64 / w0.len() as f64,
            p.pdf(t)
        );
    }
    Ok(())
}
