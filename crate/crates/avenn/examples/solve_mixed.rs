//! Solve an absolute value equation with the mixed-delay network.
//!
//! The network couples a discrete delay with a distributed (integral)
//! delay.  Its equilibria are exactly the solutions of
//! `A x - |x| - b = 0`, so integrating from an arbitrary bounded initial
//! function and reading off the limit point solves the equation.
//!
//! This example loads the first built-in problem, integrates the mixed
//! model, and checks the limit against the known solution.
//!
//! Run with `cargo run --example solve_mixed`.

use avenn::{load_builtin, run_experiment};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let example = load_builtin("ex1-mixed")?;
    println!("{}: {}", example.name, example.summary);
    println!(
        "dim = {}, tau1 = {}, tau2 = {:?}, horizon = {}",
        example.problem.dim(),
        example.tau1,
        example.tau2,
        example.horizon
    );

    let outcome = run_experiment(&example.spec())?;
    let report = &outcome.report;

    println!("limit point       : {}", report.limit.to_text());
    if let Some(solution) = &report.solution {
        println!("known solution    : {}", solution.to_text());
    }
    if let Some(err) = report.terminal_error {
        println!("terminal error    : {:.3e}", err);
    }
    println!("equation residual : {:.3e}", report.residual);
    println!(
        "integrated {} nodes in {:.2} s",
        outcome.trajectory.num_nodes(),
        outcome.integration_seconds
    );

    let err = report.terminal_error.ok_or("no reference solution")?;
    if err > 1e-5 || report.residual > 1e-6 {
        return Err(format!(
            "limit point is not accurate enough: error {err:.3e}, residual {:.3e}",
            report.residual
        )
        .into());
    }
    println!("the trajectory settled on the solution of the equation");
    Ok(())
}

fn main() {
    if let Err(err) = run_example() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
