//! Drive the integrator directly and use its continuous extension.
//!
//! Below the run harness sits a fixed-step fourth-order Runge-Kutta
//! integrator for delay systems, advanced by the method of steps.  It
//! stores states and derivatives at every node and interpolates between
//! them with cubic Hermite polynomials, so delayed values can be read
//! anywhere, not just on the grid.
//!
//! This example builds a small problem by hand, integrates the discrete
//! model, and probes the dense output: node hits are exact, off-node
//! queries agree with a much finer grid, and times before zero return
//! the initial function itself.
//!
//! Run with `cargo run --example dense_output`.

use avenn::models::{DiscreteDelayModel, HistoryFunction};
use avenn::{integrate_discrete, AveProblem, IntegratorConfig, Matrix, Vector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let a = Matrix::from_rows(&[&[4.0, 0.0], &[1.0, 3.0]])?;
    let b = Vector::from_slice(&[3.0, 3.0])?;
    let problem = AveProblem::new(a, b)?;

    // A [1, 1] - |[1, 1]| - b = [0, 0], so [1, 1] is the solution.
    let star = Vector::from_slice(&[1.0, 1.0])?;
    println!("residual at [1, 1]: {:.2e}", problem.residual_norm(&star)?);

    let tau1 = 0.1;
    let model = DiscreteDelayModel::new(problem, tau1)?;
    let history = HistoryFunction::constant(Vector::from_slice(&[3.0, -2.0])?);

    let coarse = IntegratorConfig::new(1e-2, 12.0)?;
    let fine = IntegratorConfig::new(1e-3, 12.0)?;
    let traj = integrate_discrete(&model, &history, &coarse)?;
    let reference = integrate_discrete(&model, &history, &fine)?;

    // Node hits reproduce stored states exactly.
    let node = 250;
    let t_node = traj.node_time(node);
    let at_node = traj.eval(t_node)?;
    let stored = traj.state(node);
    if at_node.sub(stored)?.norm() != 0.0 {
        return Err("node evaluation should be exact".into());
    }
    println!("dense output at node t = {t_node}: exact");

    // Off-node queries agree with the fine grid to the interpolation order.
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let t = 0.05 + 0.0793 * i as f64;
        let gap = traj.eval(t)?.sub(&reference.eval(t)?)?.norm();
        worst = worst.max(gap);
    }
    println!("largest gap to a 10x finer grid: {worst:.2e}");
    if worst > 1e-5 {
        return Err("dense output drifted from the fine reference".into());
    }

    // Queries before zero fall back to the initial function.
    let before = traj.eval(-0.05)?;
    println!("value at t = -0.05: {}", before.to_text());
    if before.sub(&history.eval(-0.05))?.norm() != 0.0 {
        return Err("negative times should evaluate the initial function".into());
    }

    let final_err = traj.final_state().sub(&star)?.norm();
    println!("distance to [1, 1] at t = 12: {final_err:.2e}");
    if final_err > 1e-6 {
        return Err("trajectory did not settle on the solution".into());
    }
    Ok(())
}

fn main() {
    if let Err(err) = run_example() {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
