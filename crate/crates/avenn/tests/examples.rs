//! Runs every bundled example as a test, so the examples directory
//! stays working as the library evolves.  Each example exposes a
//! `run_example` function next to its `main`, which is what these
//! tests call.

#[allow(dead_code)]
#[path = "../examples/solve_mixed.rs"]
mod solve_mixed;

#[allow(dead_code)]
#[path = "../examples/solve_discrete.rs"]
mod solve_discrete;

#[allow(dead_code)]
#[path = "../examples/sign_enumeration.rs"]
mod sign_enumeration;

#[allow(dead_code)]
#[path = "../examples/verify_certificates.rs"]
mod verify_certificates;

#[allow(dead_code)]
#[path = "../examples/certificate_search.rs"]
mod certificate_search;

#[allow(dead_code)]
#[path = "../examples/delay_dependence.rs"]
mod delay_dependence;

#[allow(dead_code)]
#[path = "../examples/decay_envelope.rs"]
mod decay_envelope;

#[allow(dead_code)]
#[path = "../examples/dense_output.rs"]
mod dense_output;

#[allow(dead_code)]
#[path = "../examples/export_run.rs"]
mod export_run;

#[test]
fn solve_mixed_example_runs() {
    solve_mixed::run_example().expect("solve_mixed example should run cleanly");
}

#[test]
fn solve_discrete_example_runs() {
    solve_discrete::run_example().expect("solve_discrete example should run cleanly");
}

#[test]
fn sign_enumeration_example_runs() {
    sign_enumeration::run_example().expect("sign_enumeration example should run cleanly");
}

#[test]
fn verify_certificates_example_runs() {
    verify_certificates::run_example().expect("verify_certificates example should run cleanly");
}

#[test]
fn certificate_search_example_runs() {
    certificate_search::run_example().expect("certificate_search example should run cleanly");
}

#[test]
fn delay_dependence_example_runs() {
    delay_dependence::run_example().expect("delay_dependence example should run cleanly");
}

#[test]
fn decay_envelope_example_runs() {
    decay_envelope::run_example().expect("decay_envelope example should run cleanly");
}

#[test]
fn dense_output_example_runs() {
    dense_output::run_example().expect("dense_output example should run cleanly");
}

#[test]
fn export_run_example_runs() {
    export_run::run_example().expect("export_run example should run cleanly");
}
