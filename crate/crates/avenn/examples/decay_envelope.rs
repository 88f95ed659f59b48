//! Check the certified exponential envelope against a trajectory.
//!
//! A feasible certificate with rate `k` yields the explicit bound
//! `||x(t) - x*|| <= gamma * sup ||phi - x*|| * exp(-k t)` where `phi`
//! is the initial function and `gamma` is computed from the certificate
//! weights.  The certified rate is deliberately conservative; the
//! observed decay is usually much faster.
//!
//! This example integrates the first built-in problem under the
//! discrete model, evaluates the envelope at every node, and compares
//! the certified rate `k` with a rate fitted to the trajectory tail.
//!
//! Run with `cargo run --example decay_envelope`.

use avenn::{exponential_bound_check, fit_decay_rate, load_builtin, run_experiment};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let example = load_builtin("ex1-discrete")?;
    let spec = example.spec();
    let outcome = run_experiment(&spec)?;
    let report = &outcome.report;

    let x_star = report.solution.clone().ok_or("no reference solution")?;
    let gamma = report
        .gamma
        .ok_or("certificate weights were not positive definite")?;

    // Replay the envelope check directly against the dense trajectory.
    let check = exponential_bound_check(&outcome.trajectory, &x_star, gamma, report.k, 0.05)?;
    println!("certified rate      : k = {}", report.k);
    println!("envelope factor     : gamma = {:.6}", gamma);
    println!("sup over history    : {:.6}", check.sup_history_distance);
    println!(
        "envelope check      : max ratio = {:.4}, holds = {}",
        check.max_ratio, check.holds
    );

    let horizon = spec.horizon;
    let fitted = fit_decay_rate(
        &outcome.trajectory,
        &x_star,
        (horizon / 4.0, 3.0 * horizon / 4.0),
    )?
    .ok_or("trajectory reached the solution too fast to fit a rate")?;
    println!("fitted decay rate   : {:.4}", fitted);
    println!(
        "margin              : observed decay is {:.0}x the certified rate",
        fitted / report.k
    );

    if !check.holds {
        return Err("certified envelope was violated".into());
    }
    if fitted < report.k {
        return Err("observed decay was slower than certified".into());
    }
    println!("the trajectory stays inside the certified envelope");
    Ok(())
}

fn main() {
    if let Err(err) = run_example() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
