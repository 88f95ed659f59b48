//! Verify the bundled stability certificates.
//!
//! A certificate is a set of weights (`P`, `Q`, `D`, plus `H`, `T1`,
//! `T2` for the mixed model) together with a decay rate `k`.  It is
//! feasible when the associated block matrix is negative definite and
//! the weights are positive definite; feasibility proves that every
//! trajectory converges exponentially to the equilibrium at rate `k`.
//!
//! Each built-in example bundles a certificate.  This example replays
//! the verification for all of them and prints the spectral summary:
//! the largest eigenvalue of the block matrix (negative when feasible),
//! the smallest weight eigenvalues, and the envelope factor `gamma`.
//!
//! Run with `cargo run --example verify_certificates`.

use avenn::{builtin_names, load_builtin};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:<12} {:>9} {:>12} {:>10} {:>10} {:>10} {:>8}",
        "example", "kind", "lambda_max", "min(P)", "min(Q)", "min(D)", "gamma"
    );

    for name in builtin_names() {
        let example = load_builtin(name)?;
        let cert = &example.certificate;
        let report = cert.verify(example.problem.matrix(), 0.0)?;
        let gamma = cert.gamma()?;

        println!(
            "{:<12} {:>9} {:>12.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>8.4}",
            name,
            if cert.is_mixed() { "mixed" } else { "discrete" },
            report.lambda_max,
            report.p_margin,
            report.q_margin,
            report.d_margin,
            gamma
        );

        if !report.feasible || !report.margins_positive() {
            return Err(format!("bundled certificate for {name} failed to verify").into());
        }
        if gamma < 1.0 {
            return Err("the envelope factor is always at least one".into());
        }
    }

    println!();
    println!("all bundled certificates are feasible");
    Ok(())
}

fn main() {
    if let Err(err) = run_example() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
