//! Search for a feasibility certificate from scratch.
//!
//! When no certificate is at hand, a projected subgradient descent on
//! the largest eigenvalue of the block matrix can find one: push the
//! weights against the dominant eigenvector, project back onto the
//! positive-definite cone, and stop once the eigenvalue clears a margin
//! below zero.  The search is deterministic for a fixed seed.
//!
//! This example searches a mixed-model certificate for the first
//! built-in problem, verifies the result independently, round-trips it
//! through the certificate text format, and then shows what an
//! exhausted budget looks like when the requested decay rate is too
//! aggressive.  Exhaustion is not a proof of infeasibility; it only
//! means this search did not find a certificate.
//!
//! Run with `cargo run --example certificate_search`.

use avenn::{
    load_builtin, search_mixed_certificate, Certificate, FeasibilitySearchOptions, SearchOutcome,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let example = load_builtin("ex1-mixed")?;
    let a = example.problem.matrix();
    let (tau1, tau2) = (example.tau1, example.tau2.ok_or("mixed example has tau2")?);
    let opts = FeasibilitySearchOptions::default();

    println!(
        "searching: mixed model, tau1 = {tau1}, tau2 = {tau2}, k = 0.01, seed = {}",
        opts.seed
    );
    let cert = match search_mixed_certificate(a, tau1, tau2, 0.01, &opts)? {
        SearchOutcome::Found {
            certificate,
            iterations,
            lambda_max,
        } => {
            println!("found after {iterations} iterations, largest eigenvalue {lambda_max:.3e}");
            certificate
        }
        SearchOutcome::Exhausted {
            best_lambda_max,
            iterations,
        } => {
            return Err(format!(
                "search exhausted after {iterations} iterations (best {best_lambda_max:.3e})"
            )
            .into());
        }
    };

    // Independent verification of the search result.
    let report = cert.verify(a, 0.0)?;
    println!(
        "verified: feasible = {}, margins positive = {}",
        report.feasible,
        report.margins_positive()
    );
    println!("envelope factor: gamma = {:.6}", cert.gamma()?);
    if !report.feasible {
        return Err("search returned an infeasible certificate".into());
    }

    // The text format round-trips bit for bit.
    let wrapped = Certificate::Mixed(cert);
    let text = wrapped.to_text();
    let reparsed = Certificate::from_text(&text)?;
    if reparsed.to_text() != text {
        return Err("certificate text did not round-trip".into());
    }
    println!();
    println!("certificate file contents:");
    print!("{text}");

    // A decay rate far beyond what the problem supports exhausts the
    // budget instead of failing.
    let short = FeasibilitySearchOptions {
        max_iters: 300,
        ..FeasibilitySearchOptions::default()
    };
    match search_mixed_certificate(a, tau1, tau2, 0.5, &short)? {
        SearchOutcome::Found { .. } => {
            return Err("a rate of 0.5 should not be reachable here".into())
        }
        SearchOutcome::Exhausted {
            best_lambda_max,
            iterations,
        } => {
            println!();
            println!(
                "requesting k = 0.5 instead exhausts the budget: \
                 {iterations} iterations, best eigenvalue {best_lambda_max:.3e}"
            );
        }
    }
    Ok(())
}

fn main() {
    if let Err(err) = run_example() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
