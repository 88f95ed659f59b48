//! Fixed-step method-of-steps integration for the delayed models, with
//! dense cubic-Hermite output.
//!
//! The step is adjusted downward until it divides every delay. Stage
//! times of the classical fourth-order Runge-Kutta scheme then read only
//! already-built segments (or the initial function), and propagated
//! derivative discontinuities sit on grid nodes where they cannot spoil
//! the order of the scheme.
//!
//! The distributed term of the mixed model is carried as an extra state
//! `z(t) = integral of x over [t - tau2, t]`, advanced alongside `x`
//! through `z'(t) = x(t) - x(t - tau2)` and seeded from the initial
//! function by composite Simpson quadrature.
//! [`distributed_integral_oracle`] recomputes the window integral
//! directly from the dense interpolant (exact antiderivatives of the
//! Hermite basis) and serves as an independent consistency check on that
//! reformulation.

use crate::ave::AveProblem;
use crate::linalg::{LinalgError, Vector};
use crate::models::{DiscreteDelayModel, HistoryFunction, MixedDelayModel, ModelError};
use std::fmt;
use std::io::Write;

/// States larger than this abort the integration as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Relative tolerance used when deciding that the step divides a delay.
const ALIGNMENT_REL_TOL: f64 = 1e-12;

/// Rounds of downward step adjustment before giving up on alignment.
const ALIGNMENT_MAX_ROUNDS: usize = 64;

/// Relative snap distance (in units of the step) for node lookups.
const NODE_SNAP_TOL: f64 = 1e-7;

/// Default panel count for the Simpson quadrature of the initial
/// function.
pub const DEFAULT_QUAD_PANELS: usize = 64;

/// Errors raised by the integrator and by trajectory queries.
#[derive(Debug, Clone, PartialEq)]
pub enum DdeError {
    /// Invalid step, horizon, panel count, or incommensurate delays.
    ConfigError(String),
    /// The initial function does not match the model.
    HistoryDomain(String),
    /// The state left the admissible region; `time` is the first node
    /// where that was detected.
    Diverged {
        time: f64,
    },
    /// A trajectory query outside `[-tau_M, T]`.
    OutOfDomain {
        time: f64,
    },
    Model(ModelError),
    Linalg(LinalgError),
}

impl fmt::Display for DdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DdeError::ConfigError(msg) => write!(f, "integrator configuration error: {msg}"),
            DdeError::HistoryDomain(msg) => write!(f, "initial function mismatch: {msg}"),
            DdeError::Diverged { time } => {
                write!(f, "trajectory diverged near t = {time}")
            }
            DdeError::OutOfDomain { time } => {
                write!(f, "time {time} is outside the trajectory domain")
            }
            DdeError::Model(e) => write!(f, "{e}"),
            DdeError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for DdeError {}

impl From<ModelError> for DdeError {
    fn from(e: ModelError) -> DdeError {
        DdeError::Model(e)
    }
}

impl From<LinalgError> for DdeError {
    fn from(e: LinalgError) -> DdeError {
        DdeError::Linalg(e)
    }
}

/// Step size, horizon, and quadrature resolution for one integration.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    step: f64,
    horizon: f64,
    quad_panels: usize,
}

impl IntegratorConfig {
    /// A configuration with the default quadrature resolution. The step
    /// is a request; the integrator may shrink it to divide the delays.
    pub fn new(step: f64, horizon: f64) -> Result<IntegratorConfig, DdeError> {
        if !step.is_finite() || step <= 0.0 {
            return Err(DdeError::ConfigError(format!(
                "step must be positive and finite, got {step}"
            )));
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(DdeError::ConfigError(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        Ok(IntegratorConfig {
            step,
            horizon,
            quad_panels: DEFAULT_QUAD_PANELS,
        })
    }

    pub fn with_quad_panels(mut self, panels: usize) -> Result<IntegratorConfig, DdeError> {
        if panels == 0 {
            return Err(DdeError::ConfigError(
                "quadrature needs at least one panel".to_string(),
            ));
        }
        self.quad_panels = panels;
        Ok(self)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn quad_panels(&self) -> usize {
        self.quad_panels
    }
}

fn divides(step: f64, delay: f64) -> bool {
    let m = (delay / step).round();
    m >= 1.0 && (delay - m * step).abs() <= ALIGNMENT_REL_TOL * delay.max(1.0)
}

/// Largest step not exceeding `requested` that divides every positive
/// delay. Zero delays are ignored. Fails when the delays are
/// incommensurate at the achievable resolution.
pub fn aligned_step(requested: f64, delays: &[f64]) -> Result<f64, DdeError> {
    if !requested.is_finite() || requested <= 0.0 {
        return Err(DdeError::ConfigError(format!(
            "step must be positive and finite, got {requested}"
        )));
    }
    for &tau in delays {
        if !tau.is_finite() || tau < 0.0 {
            return Err(DdeError::ConfigError(format!(
                "delays must be finite and nonnegative, got {tau}"
            )));
        }
    }
    let positive: Vec<f64> = delays.iter().copied().filter(|&t| t > 0.0).collect();
    let mut step = requested;
    for &tau in &positive {
        if tau < step {
            step = tau;
        }
    }
    for _ in 0..ALIGNMENT_MAX_ROUNDS {
        let mut changed = false;
        for &tau in &positive {
            if divides(step, tau) {
                continue;
            }
            let m = (tau / step).ceil().max(1.0);
            let candidate = tau / m;
            if candidate < step {
                step = candidate;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for &tau in &positive {
        if !divides(step, tau) {
            return Err(DdeError::ConfigError(format!(
                "no step near {requested} divides all delays {positive:?}; \
                 the delays are incommensurate at that resolution"
            )));
        }
    }
    Ok(step)
}

fn step_count(horizon: f64, step: f64) -> usize {
    let raw = horizon / step;
    let rounded = raw.round();
    let steps = if (raw - rounded).abs() <= 1e-9 * raw.max(1.0) {
        rounded
    } else {
        raw.ceil()
    };
    (steps as usize).max(1)
}

/// Composite Simpson quadrature of the initial function over `[a, b]`
/// using `panels` panels (two subintervals each).
pub fn history_integral(
    history: &HistoryFunction,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<Vector, DdeError> {
    if panels == 0 {
        return Err(DdeError::ConfigError(
            "quadrature needs at least one panel".to_string(),
        ));
    }
    if !a.is_finite() || !b.is_finite() || b < a {
        return Err(DdeError::ConfigError(format!(
            "bad quadrature interval [{a}, {b}]"
        )));
    }
    if b == a {
        return Ok(Vector::zeros(history.dim()));
    }
    let sub = 2 * panels;
    let width = (b - a) / sub as f64;
    let mut sum = history.eval(a).add(&history.eval(b))?;
    for i in 1..sub {
        let t = a + width * i as f64;
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum = sum.add(&history.eval(t).scale(weight))?;
    }
    Ok(sum.scale(width / 3.0))
}

/// Cubic Hermite evaluation over the built nodes, falling back to the
/// initial function for `t <= 0`. Assumes `t` does not exceed the last
/// built node (up to rounding); exact node hits are snapped so that the
/// derivative at a node still under construction is never touched.
fn dense_lookup(
    step: f64,
    states: &[Vector],
    derivs: &[Vector],
    history: &HistoryFunction,
    t: f64,
) -> Vector {
    if t <= 0.0 {
        return history.eval(t);
    }
    let last = states.len() - 1;
    let s = t / step;
    let mut seg = (s.floor() as usize).min(last.saturating_sub(1));
    let mut u = s - seg as f64;
    if u <= NODE_SNAP_TOL {
        return states[seg].clone();
    }
    if (u - 1.0).abs() <= NODE_SNAP_TOL && seg + 1 <= last {
        return states[seg + 1].clone();
    }
    if seg >= last {
        seg = last - 1;
        u = s - seg as f64;
    }
    let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    let h10 = u * (1.0 - u) * (1.0 - u);
    let h01 = u * u * (3.0 - 2.0 * u);
    let h11 = u * u * (u - 1.0);
    let mut out = states[seg].scale(h00);
    out = out
        .add(&derivs[seg].scale(h10 * step))
        .expect("node dimensions are uniform");
    out = out
        .add(&states[seg + 1].scale(h01))
        .expect("node dimensions are uniform");
    out.add(&derivs[seg + 1].scale(h11 * step))
        .expect("node dimensions are uniform")
}

/// A trajectory on a uniform grid with stored node derivatives, the
/// initial function it grew from, and (for the mixed model) the window
/// integral state at each node.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    step: f64,
    states: Vec<Vector>,
    derivs: Vec<Vector>,
    distributed: Option<Vec<Vector>>,
    history: HistoryFunction,
    history_span: f64,
    quad_panels: usize,
}

impl DenseTrajectory {
    /// Assembles a trajectory from raw parts, for tests and for callers
    /// that build reference solutions by hand.
    pub fn from_parts(
        step: f64,
        states: Vec<Vector>,
        derivs: Vec<Vector>,
        distributed: Option<Vec<Vector>>,
        history: HistoryFunction,
        history_span: f64,
        quad_panels: usize,
    ) -> Result<DenseTrajectory, DdeError> {
        if !step.is_finite() || step <= 0.0 {
            return Err(DdeError::ConfigError(format!(
                "step must be positive and finite, got {step}"
            )));
        }
        if !history_span.is_finite() || history_span < 0.0 {
            return Err(DdeError::ConfigError(format!(
                "history span must be nonnegative, got {history_span}"
            )));
        }
        if quad_panels == 0 {
            return Err(DdeError::ConfigError(
                "quadrature needs at least one panel".to_string(),
            ));
        }
        if states.len() < 2 {
            return Err(DdeError::ConfigError(
                "a trajectory needs at least two nodes".to_string(),
            ));
        }
        if derivs.len() != states.len() {
            return Err(DdeError::ConfigError(format!(
                "{} states but {} derivatives",
                states.len(),
                derivs.len()
            )));
        }
        let n = history.dim();
        if states.iter().chain(derivs.iter()).any(|v| v.dim() != n) {
            return Err(DdeError::ConfigError(
                "node dimensions do not match the initial function".to_string(),
            ));
        }
        if let Some(z) = &distributed {
            if z.len() != states.len() || z.iter().any(|v| v.dim() != n) {
                return Err(DdeError::ConfigError(
                    "window-integral nodes do not match the state nodes".to_string(),
                ));
            }
        }
        if !history.covers(-history_span) {
            return Err(DdeError::HistoryDomain(format!(
                "initial function does not cover [-{history_span}, 0]"
            )));
        }
        Ok(DenseTrajectory {
            step,
            states,
            derivs,
            distributed,
            history,
            history_span,
            quad_panels,
        })
    }

    pub fn dim(&self) -> usize {
        self.history.dim()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn num_nodes(&self) -> usize {
        self.states.len()
    }

    pub fn node_time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn final_time(&self) -> f64 {
        self.node_time(self.states.len() - 1)
    }

    pub fn history_span(&self) -> f64 {
        self.history_span
    }

    pub fn history(&self) -> &HistoryFunction {
        &self.history
    }

    pub fn quad_panels(&self) -> usize {
        self.quad_panels
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &Vector {
        &self.states[i]
    }

    pub fn deriv(&self, i: usize) -> &Vector {
        &self.derivs[i]
    }

    pub fn final_state(&self) -> &Vector {
        &self.states[self.states.len() - 1]
    }

    /// Window-integral nodes, present only for the mixed model.
    pub fn distributed(&self) -> Option<&[Vector]> {
        self.distributed.as_deref()
    }

    /// Evaluates the trajectory anywhere on `[-tau_M, T]`: the initial
    /// function for `t <= 0`, cubic Hermite interpolation on the grid
    /// for `t > 0`. Node hits reproduce node values exactly.
    pub fn eval(&self, t: f64) -> Result<Vector, DdeError> {
        let slack = 1e-9 * (1.0 + t.abs());
        if !t.is_finite() || t > self.final_time() + slack || t < -self.history_span - slack {
            return Err(DdeError::OutOfDomain { time: t });
        }
        if t <= 0.0 {
            return Ok(self.history.eval(t));
        }
        Ok(dense_lookup(
            self.step,
            &self.states,
            &self.derivs,
            &self.history,
            t.min(self.final_time()),
        ))
    }

    /// Writes the node rows as CSV: `t,x1,...,xn,err,res` where `err` is
    /// the distance to `x_star` (the literal `nan` when no solution is
    /// known) and `res` is the equation residual norm.
    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        problem: &AveProblem,
        x_star: Option<&Vector>,
    ) -> std::io::Result<()> {
        let n = self.dim();
        let mut header = String::from("t");
        for i in 1..=n {
            header.push_str(&format!(",x{i}"));
        }
        header.push_str(",err,res");
        writeln!(out, "{header}")?;
        for (i, x) in self.states.iter().enumerate() {
            let mut line = format!("{:.10e}", self.node_time(i));
            for j in 0..n {
                line.push_str(&format!(",{:.10e}", x.get(j)));
            }
            match x_star {
                Some(star) => {
                    let err = x.sub(star).map_err(io_invalid)?.norm();
                    line.push_str(&format!(",{err:.10e}"));
                }
                None => line.push_str(",nan"),
            }
            let res = problem.residual_norm(x).map_err(io_invalid)?;
            line.push_str(&format!(",{res:.10e}"));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

fn io_invalid<E: std::error::Error>(e: E) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string())
}

fn check_state(x: &Vector, time: f64) -> Result<(), DdeError> {
    let worst = x.inf_norm();
    if !worst.is_finite() || worst > DIVERGENCE_LIMIT {
        return Err(DdeError::Diverged { time });
    }
    Ok(())
}

fn rk4_combine(
    y: &Vector,
    k1: &Vector,
    k2: &Vector,
    k3: &Vector,
    k4: &Vector,
    step: f64,
) -> Result<Vector, LinalgError> {
    let sum = k1.add(&k2.scale(2.0))?.add(&k3.scale(2.0))?.add(k4)?;
    y.add(&sum.scale(step / 6.0))
}

fn delayed_state(
    step: f64,
    states: &[Vector],
    derivs: &[Vector],
    history: &HistoryFunction,
    t_stage: f64,
    tau1: f64,
    x_stage: &Vector,
) -> Vector {
    if tau1 == 0.0 {
        x_stage.clone()
    } else {
        dense_lookup(step, states, derivs, history, t_stage - tau1)
    }
}

/// Integrates the mixed-delay model by the method of steps.
pub fn integrate_mixed(
    model: &MixedDelayModel,
    history: &HistoryFunction,
    config: &IntegratorConfig,
) -> Result<DenseTrajectory, DdeError> {
    let n = model.dim();
    if history.dim() != n {
        return Err(DdeError::HistoryDomain(format!(
            "initial function has dimension {}, model has {n}",
            history.dim()
        )));
    }
    let span = model.max_delay();
    if !history.covers(-span) {
        return Err(DdeError::HistoryDomain(format!(
            "initial function does not cover [-{span}, 0]"
        )));
    }
    let tau1 = model.tau1();
    let tau2 = model.tau2();
    let h = aligned_step(config.step, &[tau1, tau2])?;
    let steps = step_count(config.horizon, h);

    let mut states: Vec<Vector> = Vec::with_capacity(steps + 1);
    let mut derivs: Vec<Vector> = Vec::with_capacity(steps + 1);
    let mut windows: Vec<Vector> = Vec::with_capacity(steps + 1);
    states.push(history.eval(0.0));
    windows.push(history_integral(history, -tau2, 0.0, config.quad_panels)?);

    for j in 0..steps {
        let t = j as f64 * h;
        let xj = states[j].clone();
        let zj = windows[j].clone();

        // Stage 1 sits on the node; its delayed lookups are node hits.
        let xd1 = delayed_state(h, &states, &derivs, history, t, tau1, &xj);
        let xw1 = dense_lookup(h, &states, &derivs, history, t - tau2);
        let k1x = model.rhs(&xj, &xd1, &zj)?;
        let k1z = xj.sub(&xw1)?;
        // The node derivative must be on record before the half-step
        // lookups below interpolate inside the segment ending here.
        derivs.push(k1x.clone());

        let half = 0.5 * h;
        let tm = t + half;
        let x2 = xj.add(&k1x.scale(half))?;
        let z2 = zj.add(&k1z.scale(half))?;
        let xd2 = delayed_state(h, &states, &derivs, history, tm, tau1, &x2);
        let xw_mid = dense_lookup(h, &states, &derivs, history, tm - tau2);
        let k2x = model.rhs(&x2, &xd2, &z2)?;
        let k2z = x2.sub(&xw_mid)?;

        let x3 = xj.add(&k2x.scale(half))?;
        let z3 = zj.add(&k2z.scale(half))?;
        let xd3 = delayed_state(h, &states, &derivs, history, tm, tau1, &x3);
        let k3x = model.rhs(&x3, &xd3, &z3)?;
        let k3z = x3.sub(&xw_mid)?;

        let te = t + h;
        let x4 = xj.add(&k3x.scale(h))?;
        let z4 = zj.add(&k3z.scale(h))?;
        let xd4 = delayed_state(h, &states, &derivs, history, te, tau1, &x4);
        let xw4 = dense_lookup(h, &states, &derivs, history, te - tau2);
        let k4x = model.rhs(&x4, &xd4, &z4)?;
        let k4z = x4.sub(&xw4)?;

        let x_next = rk4_combine(&xj, &k1x, &k2x, &k3x, &k4x, h)?;
        let z_next = rk4_combine(&zj, &k1z, &k2z, &k3z, &k4z, h)?;
        check_state(&x_next, te)?;
        states.push(x_next);
        windows.push(z_next);
    }

    let t = steps as f64 * h;
    let x_last = states[steps].clone();
    let xd = delayed_state(h, &states, &derivs, history, t, tau1, &x_last);
    let k = model.rhs(&x_last, &xd, &windows[steps])?;
    derivs.push(k);

    DenseTrajectory::from_parts(
        h,
        states,
        derivs,
        Some(windows),
        history.clone(),
        span,
        config.quad_panels,
    )
}

/// Integrates the discrete-delay model by the method of steps.
pub fn integrate_discrete(
    model: &DiscreteDelayModel,
    history: &HistoryFunction,
    config: &IntegratorConfig,
) -> Result<DenseTrajectory, DdeError> {
    let n = model.dim();
    if history.dim() != n {
        return Err(DdeError::HistoryDomain(format!(
            "initial function has dimension {}, model has {n}",
            history.dim()
        )));
    }
    let tau1 = model.tau1();
    let span = model.max_delay();
    if !history.covers(-span) {
        return Err(DdeError::HistoryDomain(format!(
            "initial function does not cover [-{span}, 0]"
        )));
    }
    let h = aligned_step(config.step, &[tau1])?;
    let steps = step_count(config.horizon, h);

    let mut states: Vec<Vector> = Vec::with_capacity(steps + 1);
    let mut derivs: Vec<Vector> = Vec::with_capacity(steps + 1);
    states.push(history.eval(0.0));

    for j in 0..steps {
        let t = j as f64 * h;
        let xj = states[j].clone();

        let xd1 = delayed_state(h, &states, &derivs, history, t, tau1, &xj);
        let k1 = model.rhs(&xj, &xd1)?;
        derivs.push(k1.clone());

        let half = 0.5 * h;
        let tm = t + half;
        let x2 = xj.add(&k1.scale(half))?;
        let xd2 = delayed_state(h, &states, &derivs, history, tm, tau1, &x2);
        let k2 = model.rhs(&x2, &xd2)?;

        let x3 = xj.add(&k2.scale(half))?;
        let xd3 = delayed_state(h, &states, &derivs, history, tm, tau1, &x3);
        let k3 = model.rhs(&x3, &xd3)?;

        let te = t + h;
        let x4 = xj.add(&k3.scale(h))?;
        let xd4 = delayed_state(h, &states, &derivs, history, te, tau1, &x4);
        let k4 = model.rhs(&x4, &xd4)?;

        let x_next = rk4_combine(&xj, &k1, &k2, &k3, &k4, h)?;
        check_state(&x_next, te)?;
        states.push(x_next);
    }

    let t = steps as f64 * h;
    let x_last = states[steps].clone();
    let xd = delayed_state(h, &states, &derivs, history, t, tau1, &x_last);
    let k = model.rhs(&x_last, &xd)?;
    derivs.push(k);

    DenseTrajectory::from_parts(
        h,
        states,
        derivs,
        None,
        history.clone(),
        span,
        config.quad_panels,
    )
}

/// Antiderivatives of the Hermite basis on `[0, u]`.
fn hermite_antiderivatives(u: f64) -> (f64, f64, f64, f64) {
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u2 * u2;
    (
        u - u3 + 0.5 * u4,
        0.5 * u2 - 2.0 / 3.0 * u3 + 0.25 * u4,
        u3 - 0.5 * u4,
        0.25 * u4 - u3 / 3.0,
    )
}

/// Exact integral of the dense interpolant over `[a, b]` inside `[0, T]`.
fn hermite_integral(traj: &DenseTrajectory, a: f64, b: f64) -> Result<Vector, DdeError> {
    let n = traj.dim();
    let mut total = Vector::zeros(n);
    if b <= a {
        return Ok(total);
    }
    let h = traj.step();
    let last_seg = traj.num_nodes() - 2;
    let first = ((a / h).floor() as usize).min(last_seg);
    let last = (((b / h).ceil() as usize).max(1) - 1).min(last_seg);
    for seg in first..=last {
        let lo = (seg as f64 * h).max(a);
        let hi = ((seg + 1) as f64 * h).min(b);
        if hi <= lo {
            continue;
        }
        let u_lo = ((lo / h) - seg as f64).clamp(0.0, 1.0);
        let u_hi = ((hi / h) - seg as f64).clamp(0.0, 1.0);
        let (a00, a10, a01, a11) = hermite_antiderivatives(u_lo);
        let (b00, b10, b01, b11) = hermite_antiderivatives(u_hi);
        let mut piece = traj.state(seg).scale(b00 - a00);
        piece = piece.add(&traj.deriv(seg).scale((b10 - a10) * h))?;
        piece = piece.add(&traj.state(seg + 1).scale(b01 - a01))?;
        piece = piece.add(&traj.deriv(seg + 1).scale((b11 - a11) * h))?;
        total = total.add(&piece.scale(h))?;
    }
    Ok(total)
}

/// Recomputes `integral of x over [t - tau2, t]` from the dense output:
/// exact antiderivatives of the cubic pieces plus Simpson quadrature on
/// whatever part of the window lies in the initial function.
pub fn distributed_integral_oracle(
    traj: &DenseTrajectory,
    t: f64,
    tau2: f64,
) -> Result<Vector, DdeError> {
    if !tau2.is_finite() || tau2 <= 0.0 {
        return Err(DdeError::ConfigError(format!(
            "tau2 must be positive and finite, got {tau2}"
        )));
    }
    let slack = 1e-9 * (1.0 + t.abs());
    if !t.is_finite() || t > traj.final_time() + slack {
        return Err(DdeError::OutOfDomain { time: t });
    }
    let lo = t - tau2;
    if lo < -traj.history_span() - slack {
        return Err(DdeError::OutOfDomain { time: lo });
    }
    let hi = t.min(traj.final_time());
    let mut total = Vector::zeros(traj.dim());
    if lo < 0.0 {
        let span_lo = lo.max(-traj.history_span());
        total = total.add(&history_integral(
            traj.history(),
            span_lo,
            hi.min(0.0),
            traj.quad_panels(),
        )?)?;
    }
    if hi > 0.0 {
        total = total.add(&hermite_integral(traj, lo.max(0.0), hi)?)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn problem(rows: &[&[f64]], b: &[f64]) -> AveProblem {
        AveProblem::new(
            Matrix::from_rows(rows).unwrap(),
            Vector::from_slice(b).unwrap(),
        )
        .unwrap()
    }

    fn ex4_problem() -> AveProblem {
        problem(
            &[&[8.0, -1.0, 0.0], &[-1.0, 8.0, -1.0], &[0.0, -1.0, 8.0]],
            &[-10.0, 9.0, -10.0],
        )
    }

    fn ex4_solution() -> Vector {
        Vector::from_slice(&[-1.0, 1.0, -1.0]).unwrap()
    }

    #[test]
    fn step_alignment_cases() {
        // Defaults for the standard runs stay untouched.
        assert_eq!(aligned_step(1e-3, &[1.0, 0.5]).unwrap(), 1e-3);
        assert_eq!(aligned_step(1e-3, &[0.01]).unwrap(), 1e-3);
        // A step above the shortest delay is pulled down onto it.
        assert_eq!(aligned_step(0.5, &[0.01]).unwrap(), 0.01);
        // A non-dividing step shrinks to the nearest divisor from below.
        let h = aligned_step(3e-3, &[0.01]).unwrap();
        assert!((h - 0.0025).abs() < 1e-15);
        // Zero delays are ignored.
        assert_eq!(aligned_step(1e-2, &[0.0, 0.1]).unwrap(), 1e-2);
        // Incommensurate delays cannot be aligned.
        let err = aligned_step(1e-3, &[1.0, 1.0 - 1e-9]).unwrap_err();
        assert!(matches!(err, DdeError::ConfigError(_)));
        assert!(aligned_step(-1.0, &[1.0]).is_err());
        assert!(aligned_step(1e-3, &[-0.5]).is_err());
    }

    #[test]
    fn simpson_matches_cosine_integral() {
        // integral of cos over [-0.5, 0] is sin(0.5).
        let h = HistoryFunction::cos_scaled(Vector::from_slice(&[1.0]).unwrap());
        let got = history_integral(&h, -0.5, 0.0, 64).unwrap();
        assert!((got.get(0) - 0.5f64.sin()).abs() < 2e-12);
        let empty = history_integral(&h, -0.5, -0.5, 64).unwrap();
        assert_eq!(empty.get(0), 0.0);
    }

    fn cubic_trajectory(step: f64, nodes: usize) -> DenseTrajectory {
        // p(t) = t^3 - 2 t^2 + 3 t - 1 with exact node derivatives.
        let p = |t: f64| t * t * t - 2.0 * t * t + 3.0 * t - 1.0;
        let dp = |t: f64| 3.0 * t * t - 4.0 * t + 3.0;
        let states = (0..nodes)
            .map(|i| Vector::from_slice(&[p(i as f64 * step)]).unwrap())
            .collect();
        let derivs = (0..nodes)
            .map(|i| Vector::from_slice(&[dp(i as f64 * step)]).unwrap())
            .collect();
        let history = HistoryFunction::constant(Vector::from_slice(&[p(0.0)]).unwrap());
        DenseTrajectory::from_parts(step, states, derivs, None, history, 0.5, 64).unwrap()
    }

    #[test]
    fn hermite_reproduces_cubics_exactly() {
        let traj = cubic_trajectory(0.25, 5);
        let p = |t: f64| t * t * t - 2.0 * t * t + 3.0 * t - 1.0;
        for &t in &[0.1, 0.33, 0.5, 0.77, 0.999, 1.0] {
            let got = traj.eval(t).unwrap().get(0);
            assert!(
                (got - p(t)).abs() < 1e-14,
                "cubic mismatch at t = {t}: {got} vs {}",
                p(t)
            );
        }
        // Node hits return stored values exactly.
        for i in 0..traj.num_nodes() {
            assert_eq!(
                traj.eval(traj.node_time(i)).unwrap().get(0),
                p(0.25 * i as f64)
            );
        }
    }

    #[test]
    fn window_oracle_integrates_cubics_exactly() {
        let traj = cubic_trajectory(0.25, 5);
        // Antiderivative of p: t^4/4 - 2 t^3/3 + 3 t^2/2 - t.
        let prim = |t: f64| t * t * t * t / 4.0 - 2.0 * t * t * t / 3.0 + 1.5 * t * t - t;
        let got = distributed_integral_oracle(&traj, 1.0, 0.6).unwrap().get(0);
        assert!((got - (prim(1.0) - prim(0.4))).abs() < 1e-13);
        let got = distributed_integral_oracle(&traj, 0.75, 0.25)
            .unwrap()
            .get(0);
        assert!((got - (prim(0.75) - prim(0.5))).abs() < 1e-13);
    }

    #[test]
    fn trajectory_domain_is_enforced() {
        let prob = ex4_problem();
        let model = DiscreteDelayModel::new(prob, 0.1).unwrap();
        let history = HistoryFunction::constant(Vector::from_slice(&[-2.0, 2.0, -2.0]).unwrap());
        let config = IntegratorConfig::new(1e-2, 2.0).unwrap();
        let traj = integrate_discrete(&model, &history, &config).unwrap();
        assert!(matches!(traj.eval(2.1), Err(DdeError::OutOfDomain { .. })));
        assert!(matches!(traj.eval(-0.2), Err(DdeError::OutOfDomain { .. })));
        let in_history = traj.eval(-0.05).unwrap();
        assert_eq!(in_history.as_slice(), &[-2.0, 2.0, -2.0]);
        assert!((traj.final_time() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn discrete_model_reaches_known_solution() {
        let model = DiscreteDelayModel::new(ex4_problem(), 0.01).unwrap();
        let history = HistoryFunction::cos_scaled(Vector::from_slice(&[2.0, 2.0, -5.0]).unwrap());
        let config = IntegratorConfig::new(1e-3, 8.0).unwrap();
        let traj = integrate_discrete(&model, &history, &config).unwrap();
        let err = traj.final_state().sub(&ex4_solution()).unwrap().norm();
        assert!(err < 1e-11, "terminal error {err}");
    }

    #[test]
    fn mixed_model_reaches_known_solution() {
        let model = MixedDelayModel::new(ex4_problem(), 1.0, 0.5).unwrap();
        let history = HistoryFunction::cos_scaled(Vector::from_slice(&[2.0, 2.0, -5.0]).unwrap());
        let config = IntegratorConfig::new(1e-3, 10.0).unwrap();
        let traj = integrate_mixed(&model, &history, &config).unwrap();
        let err = traj.final_state().sub(&ex4_solution()).unwrap().norm();
        assert!(err < 1e-7, "terminal error {err}");
    }

    #[test]
    fn equilibrium_initial_function_stays_put() {
        let star = ex4_solution();
        let history = HistoryFunction::constant(star.clone());
        let config = IntegratorConfig::new(1e-3, 2.0).unwrap();

        let mixed = MixedDelayModel::new(ex4_problem(), 1.0, 0.5).unwrap();
        let traj = integrate_mixed(&mixed, &history, &config).unwrap();
        for i in 0..traj.num_nodes() {
            let drift = traj.state(i).sub(&star).unwrap().inf_norm();
            assert!(drift <= 1e-14, "mixed drift {drift} at node {i}");
        }

        let discrete = DiscreteDelayModel::new(ex4_problem(), 0.01).unwrap();
        let traj = integrate_discrete(&discrete, &history, &config).unwrap();
        for i in 0..traj.num_nodes() {
            let drift = traj.state(i).sub(&star).unwrap().inf_norm();
            assert!(drift <= 1e-14, "discrete drift {drift} at node {i}");
        }
    }

    #[test]
    fn window_state_matches_oracle() {
        // A = diag(2, 0.9, 2), b = [0, 0, -1].
        let prob = problem(
            &[&[2.0, 0.0, 0.0], &[0.0, 0.9, 0.0], &[0.0, 0.0, 2.0]],
            &[0.0, 0.0, -1.0],
        );
        let model = MixedDelayModel::new(prob, 1.0, 0.5).unwrap();
        let history = HistoryFunction::cos_scaled(Vector::from_slice(&[2.0, -2.0, -5.0]).unwrap());
        let config = IntegratorConfig::new(1e-3, 5.0).unwrap();
        let traj = integrate_mixed(&model, &history, &config).unwrap();
        let windows = traj
            .distributed()
            .expect("mixed runs carry the window state");

        // At t = 0 both sides reduce to the same Simpson quadrature.
        let at_zero = distributed_integral_oracle(&traj, 0.0, 0.5).unwrap();
        assert!(windows[0].sub(&at_zero).unwrap().inf_norm() <= 1e-12);

        let mut worst = 0.0f64;
        for i in 0..traj.num_nodes() {
            let t = traj.node_time(i);
            let oracle = distributed_integral_oracle(&traj, t, 0.5).unwrap();
            let gap = windows[i].sub(&oracle).unwrap().inf_norm();
            worst = worst.max(gap);
        }
        assert!(worst <= 1e-8, "window state vs oracle gap {worst}");
    }

    #[test]
    fn unstable_problem_reports_divergence() {
        let prob = problem(&[&[-10.0, 0.0], &[0.0, -10.0]], &[0.0, 0.0]);
        let model = DiscreteDelayModel::new(prob, 0.1).unwrap();
        let history = HistoryFunction::constant(Vector::from_slice(&[1.0, 1.0]).unwrap());
        let config = IntegratorConfig::new(1e-2, 20.0).unwrap();
        let err = integrate_discrete(&model, &history, &config).unwrap_err();
        match err {
            DdeError::Diverged { time } => assert!(time < 20.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn fourth_order_convergence_on_aligned_grids() {
        let star_err = |step: f64| {
            let model = DiscreteDelayModel::new(ex4_problem(), 0.1).unwrap();
            let history =
                HistoryFunction::constant(Vector::from_slice(&[-1.5, 1.5, -1.5]).unwrap());
            let config = IntegratorConfig::new(step, 1.0).unwrap();
            integrate_discrete(&model, &history, &config).unwrap()
        };
        let reference = star_err(0.00125);
        let at = |traj: &DenseTrajectory| traj.eval(1.0).unwrap();
        let coarse = at(&star_err(0.02)).sub(&at(&reference)).unwrap().norm();
        let fine = at(&star_err(0.01)).sub(&at(&reference)).unwrap().norm();
        assert!(fine > 1e-13, "refinement error {fine} is below roundoff");
        let ratio = coarse / fine;
        assert!(
            ratio >= 8.0,
            "halving the step should cut the error at least eightfold, got {ratio:.2} \
             ({coarse:.3e} vs {fine:.3e})"
        );
    }

    #[test]
    fn csv_has_expected_shape() {
        let prob = ex4_problem();
        let model = DiscreteDelayModel::new(prob.clone(), 0.1).unwrap();
        let history = HistoryFunction::constant(Vector::from_slice(&[-2.0, 2.0, -2.0]).unwrap());
        let config = IntegratorConfig::new(0.1, 1.0).unwrap();
        let traj = integrate_discrete(&model, &history, &config).unwrap();

        let mut with_star = Vec::new();
        traj.write_csv(&mut with_star, &prob, Some(&ex4_solution()))
            .unwrap();
        let text = String::from_utf8(with_star).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2,x3,err,res");
        assert_eq!(lines.len(), 1 + traj.num_nodes());
        assert_eq!(lines[1].split(',').count(), 6);

        let mut without = Vec::new();
        traj.write_csv(&mut without, &prob, None).unwrap();
        let text = String::from_utf8(without).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",nan,"));
    }

    #[test]
    fn incommensurate_delays_refuse_to_integrate() {
        let prob = ex4_problem();
        let model = MixedDelayModel::new(prob, 1.0, 1.0 - 1e-9).unwrap();
        let history = HistoryFunction::constant(Vector::from_slice(&[0.0, 0.0, 0.0]).unwrap());
        let config = IntegratorConfig::new(1e-3, 1.0).unwrap();
        assert!(matches!(
            integrate_mixed(&model, &history, &config),
            Err(DdeError::ConfigError(_))
        ));
    }

    #[test]
    fn history_dimension_is_checked() {
        let model = DiscreteDelayModel::new(ex4_problem(), 0.1).unwrap();
        let history = HistoryFunction::constant(Vector::from_slice(&[1.0]).unwrap());
        let config = IntegratorConfig::new(1e-2, 1.0).unwrap();
        assert!(matches!(
            integrate_discrete(&model, &history, &config),
            Err(DdeError::HistoryDomain(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn dense_output_is_exact_on_cubics(
            c0 in -2.0f64..2.0,
            c1 in -2.0f64..2.0,
            c2 in -2.0f64..2.0,
            c3 in -2.0f64..2.0,
            step in 0.1f64..0.5,
            probe in 0.0f64..1.0,
        ) {
            let p = |t: f64| ((c3 * t + c2) * t + c1) * t + c0;
            let dp = |t: f64| (3.0 * c3 * t + 2.0 * c2) * t + c1;
            let nodes = 6usize;
            let states = (0..nodes)
                .map(|i| Vector::from_slice(&[p(i as f64 * step)]).unwrap())
                .collect();
            let derivs = (0..nodes)
                .map(|i| Vector::from_slice(&[dp(i as f64 * step)]).unwrap())
                .collect();
            let history = HistoryFunction::constant(Vector::from_slice(&[p(0.0)]).unwrap());
            let traj = DenseTrajectory::from_parts(
                step, states, derivs, None, history, 0.0, 64,
            ).unwrap();
            let t = probe * traj.final_time();
            let got = traj.eval(t).unwrap().get(0);
            let scale = 1.0 + c0.abs() + c1.abs() + c2.abs() + c3.abs();
            prop_assert!((got - p(t)).abs() <= 1e-12 * scale);
        }
    }
}
