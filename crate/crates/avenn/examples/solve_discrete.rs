//! Solve an absolute value equation with the discrete-delay network.
//!
//! The discrete model keeps only the pointwise delay term `x(t - tau1)`.
//! It shares its equilibria with the mixed model: both coincide with the
//! solutions of `A x - |x| - b = 0`.
//!
//! This example integrates the tridiagonal built-in problem, whose
//! solution has mixed signs, and prints the certificate summary next to
//! the trajectory summary so the two halves of the method can be seen
//! working together.
//!
//! Run with `cargo run --example solve_discrete`.

use avenn::{load_builtin, run_experiment};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let example = load_builtin("ex4-discrete")?;
    println!("{}: {}", example.name, example.summary);

    let outcome = run_experiment(&example.spec())?;
    let report = &outcome.report;

    println!("limit point       : {}", report.limit.to_text());
    if let Some(err) = report.terminal_error {
        println!("terminal error    : {:.3e}", err);
    }
    println!("equation residual : {:.3e}", report.residual);
    println!("certificate rate  : k = {}", report.k);
    println!(
        "certificate check : feasible = {}, largest eigenvalue = {:.3e}",
        report.certificate_feasible, report.lambda_max
    );
    if let Some(gamma) = report.gamma {
        println!("envelope factor   : gamma = {:.6}", gamma);
    }
    if let Some(ratio) = report.bound_max_ratio {
        println!(
            "envelope check    : max ratio = {:.4}, holds = {}",
            ratio,
            report.bound_holds.unwrap_or(false)
        );
    }

    let err = report.terminal_error.ok_or("no reference solution")?;
    if err > 1e-5 || !report.certificate_feasible {
        return Err("run did not meet the expected accuracy".into());
    }
    println!("the discrete model found the mixed-sign solution");
    Ok(())
}

fn main() {
    if let Err(err) = run_example() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
