//! Export a run as reproducible artifacts.
//!
//! A run produces four files: the sampled trajectory as CSV, the run
//! summary as `key = value` text, the certificate in its text format,
//! and a gnuplot script that plots the error against the certified
//! envelope.  None of the files embed wall-clock times, so a repeated
//! run writes byte-identical artifacts.
//!
//! This example runs the second built-in problem under the mixed model,
//! writes the artifacts to a temporary directory, and re-parses the
//! summary to show the text format round-trips.
//!
//! Run with `cargo run --example export_run`.

use std::fs;

use avenn::{load_builtin, run_experiment, write_artifacts, RunReport};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = load_builtin("ex2-mixed")?.spec();
    let outcome = run_experiment(&spec)?;

    let dir = std::env::temp_dir().join("avenn-export-demo");
    write_artifacts(&spec, &outcome, &dir)?;

    println!("wrote artifacts to {}", dir.display());
    for name in [
        "trajectory.csv",
        "summary.txt",
        "certificate.txt",
        "plot.gp",
    ] {
        let bytes = fs::metadata(dir.join(name))?.len();
        println!("  {name:<16} {bytes:>8} bytes");
    }

    let text = fs::read_to_string(dir.join("summary.txt"))?;
    let reparsed = RunReport::from_text(&text)?;
    if reparsed != outcome.report {
        return Err("summary text did not round-trip".into());
    }
    println!("summary.txt parses back to the exact report");

    let csv = fs::read_to_string(dir.join("trajectory.csv"))?;
    let mut lines = csv.lines();
    let header = lines.next().ok_or("empty trajectory file")?;
    println!("trajectory header : {header}");
    println!("trajectory rows   : {}", lines.count());
    Ok(())
}

fn main() {
    if let Err(err) = run_example() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
