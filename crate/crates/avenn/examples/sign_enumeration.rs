//! Enumerate every solution of small absolute value equations.
//!
//! On each orthant `|x|` is linear, so fixing a sign pattern `s` in
//! `{-1, +1}^n` turns `A x - |x| - b = 0` into the linear system
//! `(A - diag(s)) x = b`.  Trying all `2^n` patterns and keeping the
//! candidates that respect their pattern lists every isolated solution;
//! patterns whose linear system is singular are reported separately
//! because they can carry whole families of solutions.
//!
//! This example enumerates the four built-in problems.  Three have a
//! unique solution.  The third is degenerate: seven of its eight sign
//! patterns are singular and carry solution families, and its single
//! isolated point sits on the corner of one of those families.
//!
//! Run with `cargo run --example sign_enumeration`.

use avenn::{enumerate_solutions, load_builtin};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut unique = 0;
    let mut singular = 0;

    for name in ["ex1-mixed", "ex2-mixed", "ex3-mixed", "ex4-mixed"] {
        let example = load_builtin(name)?;
        let problem = &example.problem;
        let report = enumerate_solutions(problem, 1e-9)?;

        println!("problem {} ({} sign patterns):", name, 1 << problem.dim());
        for x in report.isolated_solutions() {
            println!("  isolated solution: {}", x.to_text());
            if !problem.verify_solution(x, 1e-9)? {
                return Err("enumerated point does not solve the equation".into());
            }
        }
        for pattern in report.singular_patterns() {
            let signs: Vec<&str> = pattern
                .iter()
                .map(|&s| if s > 0 { "+" } else { "-" })
                .collect();
            println!("  singular pattern : {}", signs.join(" "));
        }
        unique += report.isolated_solutions().len();
        singular += report.singular_patterns().len();

        if let Some(star) = &example.known_solution {
            if !report.matches(problem, star, 1e-9)? {
                return Err("known solution missing from the enumeration".into());
            }
            println!("  the known solution is in the enumerated set");
        }
        println!();
    }

    println!("totals: {unique} isolated solutions, {singular} singular patterns");
    if unique != 4 || singular != 7 {
        return Err("unexpected solution counts".into());
    }
    Ok(())
}

fn main() {
    if let Err(err) = run_example() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
