//! Drives the command-line front end from code: loads a TOML config,
//! overrides two keys, and writes curve.csv and meta.json to a temp folder.
//!
//! cargo run --release --example run_config

fn main() {
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/lognormal_1d.toml");
    let out = std::env::temp_dir().join("fepreint-example/");
    let code = fepreint::cli::main_with_args([
        "fepreint",
        "estimate",
        "--config",
        config,
        "--set",
        "mesh.cells=32",
        "--set",
        "qmc.n=2053",
        "--out",
        out.to_str().unwrap(),
    ]);
    println!("exit code {code}; outputs in {}", out.display());
    if let Ok(csv) = std::fs::read_to_string(out.join("curve.csv")) {
        print!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
        println!();
    }
    std::process::exit(code);
}
