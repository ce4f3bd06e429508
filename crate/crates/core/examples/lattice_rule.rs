//! CBC construction of a rank-1 lattice rule and a randomly shifted estimate
//! of a Gaussian expectation, next to plain Monte Carlo with the same budget.
//!
//! cargo run --example lattice_rule

use fepreint::qmc::{
    default_weights, mean_and_stderr, randomized_estimate, replicate_means, LatticeRule, PlainMonteCarlo, ShiftSet,
};

fn main() -> fepreint::Result<()> {
    let dim = 6;
    // E[exp(Σ y_j / (2j))] = exp(Σ 1/(8j²))
    let g = |y: &[f64]| y.iter().enumerate().map(|(j, v)| v / (2.0 * (j + 1) as f64)).sum::<f64>().exp();
    let exact = (1..=dim).map(|j| 1.0 / (8.0 * (j * j) as f64)).sum::<f64>().exp();

    for n in [127u64, 1021, 8191] {
        let rule = LatticeRule::cbc(dim, n, default_weights(dim))?;
        let qmc = randomized_estimate(g, &rule, &ShiftSet::new(16, 1, dim)?)?;
        let mc = PlainMonteCarlo::new(n as usize, 16, 1, dim)?;
        let per = replicate_means(&mc, 1, |y, out| {
            out[0] = g(y);
            Ok(())
        })?;
        let (mc_mean, mc_se) = mean_and_stderr(&per.iter().map(|m| m[0]).collect::<Vec<_>>());
        println!(
            "N = {n:5}  z = {:?}\n  lattice {:.8} ± {:.1e}   plain MC {mc_mean:.8} ± {mc_se:.1e}   exact {exact:.8}",
            rule.generating_vector(),
            qmc.mean,
            qmc.stderr
        );
    }
    Ok(())
}
