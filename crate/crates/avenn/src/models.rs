//! The delayed neural-network dynamics whose equilibria are exactly the
//! solutions of an absolute value equation.
//!
//! Two right-hand sides are provided. The mixed-delay model combines a
//! discrete delay `tau1` with a sliding-window integral over `tau2`:
//!
//! ```text
//! x'(t) = -[A + (2 + tau2) I] x(t) + P[2 x(t)] + x(t - tau1)
//!         + integral over [t - tau2, t] of x(s) ds + b
//! ```
//!
//! where `P` projects onto the nonnegative orthant. Dropping the
//! distributed term (`tau2 = 0`) gives the discrete-delay model
//!
//! ```text
//! x'(t) = -(A + 2 I) x(t) + P[2 x(t)] + x(t - tau1) + b
//! ```
//!
//! A constant state `x` makes either right-hand side equal the negated
//! equation residual `-(A x - |x| - b)`, so equilibria and equation
//! solutions coincide; [`MixedDelayModel::equilibrium_residual`] exposes
//! that identity directly.

use crate::ave::{project_nonneg, AveError, AveProblem};
use crate::linalg::{self, LinalgError, Vector};
use std::fmt;

/// Errors raised while building models or histories.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Delays must be finite; `tau1 >= 0` and `tau2 > 0`.
    InvalidDelay { name: &'static str, value: f64 },
    /// A point or history has the wrong dimension.
    DimMismatch { expected: usize, got: usize },
    /// A sampled history needs at least two strictly increasing times.
    BadSampleTable(String),
    /// Underlying equation failure.
    Equation(AveError),
    /// Underlying linear algebra failure.
    Linalg(LinalgError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidDelay { name, value } => {
                write!(f, "invalid delay {name} = {value}")
            }
            ModelError::DimMismatch { expected, got } => {
                write!(f, "expected dimension {expected}, got {got}")
            }
            ModelError::BadSampleTable(msg) => write!(f, "bad sample table: {msg}"),
            ModelError::Equation(e) => write!(f, "{e}"),
            ModelError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<LinalgError> for ModelError {
    fn from(e: LinalgError) -> ModelError {
        ModelError::Linalg(e)
    }
}

impl From<AveError> for ModelError {
    fn from(e: AveError) -> ModelError {
        ModelError::Equation(e)
    }
}

/// Initial function on `[-tau_M, 0]`, from a small registry of closed
/// forms plus sampled tables for everything else. Each form carries a
/// printable descriptor so run summaries stay reproducible.
#[derive(Debug, Clone, PartialEq)]
pub enum HistoryForm {
    /// `phi(t) = v`.
    Constant(Vector),
    /// `phi(t) = amplitudes * cos(t)`, componentwise.
    CosScaled(Vector),
    /// `phi(t) = at_zero + t * slope`.
    Linear { at_zero: Vector, slope: Vector },
    /// Piecewise-linear interpolation of `(times[i], values[i])`.
    Sampled {
        times: Vec<f64>,
        values: Vec<Vector>,
    },
}

/// A concrete initial function together with its descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFunction {
    form: HistoryForm,
}

impl HistoryFunction {
    pub fn constant(v: Vector) -> HistoryFunction {
        HistoryFunction {
            form: HistoryForm::Constant(v),
        }
    }

    pub fn cos_scaled(amplitudes: Vector) -> HistoryFunction {
        HistoryFunction {
            form: HistoryForm::CosScaled(amplitudes),
        }
    }

    pub fn linear(at_zero: Vector, slope: Vector) -> Result<HistoryFunction, ModelError> {
        if at_zero.dim() != slope.dim() {
            return Err(ModelError::DimMismatch {
                expected: at_zero.dim(),
                got: slope.dim(),
            });
        }
        Ok(HistoryFunction {
            form: HistoryForm::Linear { at_zero, slope },
        })
    }

    /// Times must be strictly increasing and the values all one dimension.
    pub fn sampled(times: Vec<f64>, values: Vec<Vector>) -> Result<HistoryFunction, ModelError> {
        if times.len() != values.len() {
            return Err(ModelError::BadSampleTable(format!(
                "{} times vs {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(ModelError::BadSampleTable(
                "need at least two samples".to_string(),
            ));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::BadSampleTable("non-finite time".to_string()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::BadSampleTable(
                "times must be strictly increasing".to_string(),
            ));
        }
        let dim = values[0].dim();
        if values.iter().any(|v| v.dim() != dim) {
            return Err(ModelError::BadSampleTable(
                "inconsistent value dimensions".to_string(),
            ));
        }
        Ok(HistoryFunction {
            form: HistoryForm::Sampled { times, values },
        })
    }

    pub fn form(&self) -> &HistoryForm {
        &self.form
    }

    pub fn dim(&self) -> usize {
        match &self.form {
            HistoryForm::Constant(v) | HistoryForm::CosScaled(v) => v.dim(),
            HistoryForm::Linear { at_zero, .. } => at_zero.dim(),
            HistoryForm::Sampled { values, .. } => values[0].dim(),
        }
    }

    /// Whether the domain covers `[t_lo, 0]`. Closed forms cover
    /// everything; sampled tables must span the interval.
    pub fn covers(&self, t_lo: f64) -> bool {
        match &self.form {
            HistoryForm::Sampled { times, .. } => {
                let slack = 1e-12 * (1.0 + t_lo.abs());
                times[0] <= t_lo + slack && *times.last().expect("nonempty") >= -slack
            }
            _ => true,
        }
    }

    /// Evaluates the history. Sampled tables clamp outside their span.
    pub fn eval(&self, t: f64) -> Vector {
        match &self.form {
            HistoryForm::Constant(v) => v.clone(),
            HistoryForm::CosScaled(amplitudes) => amplitudes.scale(t.cos()),
            HistoryForm::Linear { at_zero, slope } => at_zero
                .add(&slope.scale(t))
                .expect("dimensions checked at construction"),
            HistoryForm::Sampled { times, values } => {
                if t <= times[0] {
                    return values[0].clone();
                }
                if t >= *times.last().expect("nonempty") {
                    return values[values.len() - 1].clone();
                }
                let seg = match times.partition_point(|s| *s <= t) {
                    0 => 0,
                    p => p - 1,
                };
                let (t0, t1) = (times[seg], times[seg + 1]);
                let u = (t - t0) / (t1 - t0);
                values[seg]
                    .scale(1.0 - u)
                    .add(&values[seg + 1].scale(u))
                    .expect("dimensions checked at construction")
            }
        }
    }

    /// Human-readable description used in run summaries.
    pub fn descriptor(&self) -> String {
        fn list(v: &Vector) -> String {
            let parts: Vec<String> = v.as_slice().iter().map(|x| format!("{x}")).collect();
            format!("[{}]", parts.join(", "))
        }
        match &self.form {
            HistoryForm::Constant(v) => format!("constant {}", list(v)),
            HistoryForm::CosScaled(v) => format!("cos * {}", list(v)),
            HistoryForm::Linear { at_zero, slope } => {
                format!("linear {} + t * {}", list(at_zero), list(slope))
            }
            HistoryForm::Sampled { times, .. } => format!("sampled ({} points)", times.len()),
        }
    }

    /// Supremum of `||phi(t) - x_star||` over `[t_lo, 0]`, estimated on a
    /// uniform mesh of `samples + 1` points.
    pub fn sup_distance(&self, x_star: &Vector, t_lo: f64, samples: usize) -> f64 {
        let samples = samples.max(1);
        let mut sup = 0.0f64;
        for i in 0..=samples {
            let t = t_lo + (0.0 - t_lo) * (i as f64) / (samples as f64);
            let d = self
                .eval(t)
                .sub(x_star)
                .expect("dimensions checked by callers")
                .norm();
            sup = sup.max(d);
        }
        sup
    }
}

/// Mixed-delay dynamics with discrete delay `tau1` and distributed delay
/// window `tau2 > 0`.
#[derive(Debug, Clone)]
pub struct MixedDelayModel {
    prob: AveProblem,
    tau1: f64,
    tau2: f64,
}

impl MixedDelayModel {
    pub fn new(prob: AveProblem, tau1: f64, tau2: f64) -> Result<MixedDelayModel, ModelError> {
        if !tau1.is_finite() || tau1 < 0.0 {
            return Err(ModelError::InvalidDelay {
                name: "tau1",
                value: tau1,
            });
        }
        if !tau2.is_finite() || tau2 <= 0.0 {
            return Err(ModelError::InvalidDelay {
                name: "tau2",
                value: tau2,
            });
        }
        Ok(MixedDelayModel { prob, tau1, tau2 })
    }

    pub fn problem(&self) -> &AveProblem {
        &self.prob
    }

    pub fn dim(&self) -> usize {
        self.prob.dim()
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    /// `max(tau1, tau2)`: how much history the dynamics consume.
    pub fn max_delay(&self) -> f64 {
        self.tau1.max(self.tau2)
    }

    /// Evaluates the right-hand side from the current state, the state at
    /// `t - tau1`, and the window integral of the state over
    /// `[t - tau2, t]`.
    pub fn rhs(
        &self,
        x: &Vector,
        x_delayed: &Vector,
        window_integral: &Vector,
    ) -> Result<Vector, ModelError> {
        let n = self.dim();
        for v in [x, x_delayed, window_integral] {
            if v.dim() != n {
                return Err(ModelError::DimMismatch {
                    expected: n,
                    got: v.dim(),
                });
            }
        }
        let ax = self.prob.matrix().mul_vec(x)?;
        let out = x
            .scale(-(2.0 + self.tau2))
            .sub(&ax)?
            .add(&project_nonneg(&x.scale(2.0)))?
            .add(x_delayed)?
            .add(window_integral)?
            .add(self.prob.rhs())?;
        Ok(out)
    }

    /// The right-hand side at a constant state: exactly the negated
    /// equation residual `-(A x - |x| - b)`. Zero iff `x` solves the
    /// equation, which is why trajectory limits are equation solutions.
    pub fn equilibrium_residual(&self, x: &Vector) -> Result<Vector, ModelError> {
        Ok(self.prob.residual(x)?.scale(-1.0))
    }

    /// Global Lipschitz bound `||A|| + 5 + 2 tau2` of the right-hand side
    /// with respect to the supremum norm on history segments.
    pub fn lipschitz_bound(&self) -> Result<f64, ModelError> {
        Ok(linalg::spectral_norm(self.prob.matrix())? + 5.0 + 2.0 * self.tau2)
    }
}

/// Discrete-delay dynamics (the `tau2 = 0` specialisation).
#[derive(Debug, Clone)]
pub struct DiscreteDelayModel {
    prob: AveProblem,
    tau1: f64,
}

impl DiscreteDelayModel {
    pub fn new(prob: AveProblem, tau1: f64) -> Result<DiscreteDelayModel, ModelError> {
        if !tau1.is_finite() || tau1 < 0.0 {
            return Err(ModelError::InvalidDelay {
                name: "tau1",
                value: tau1,
            });
        }
        Ok(DiscreteDelayModel { prob, tau1 })
    }

    pub fn problem(&self) -> &AveProblem {
        &self.prob
    }

    pub fn dim(&self) -> usize {
        self.prob.dim()
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn max_delay(&self) -> f64 {
        self.tau1
    }

    /// Right-hand side from the current state and the state at `t - tau1`.
    pub fn rhs(&self, x: &Vector, x_delayed: &Vector) -> Result<Vector, ModelError> {
        let n = self.dim();
        for v in [x, x_delayed] {
            if v.dim() != n {
                return Err(ModelError::DimMismatch {
                    expected: n,
                    got: v.dim(),
                });
            }
        }
        let ax = self.prob.matrix().mul_vec(x)?;
        let out = x
            .scale(-2.0)
            .sub(&ax)?
            .add(&project_nonneg(&x.scale(2.0)))?
            .add(x_delayed)?
            .add(self.prob.rhs())?;
        Ok(out)
    }

    /// See [`MixedDelayModel::equilibrium_residual`].
    pub fn equilibrium_residual(&self, x: &Vector) -> Result<Vector, ModelError> {
        Ok(self.prob.residual(x)?.scale(-1.0))
    }

    /// Lipschitz bound with the window term absent.
    pub fn lipschitz_bound(&self) -> Result<f64, ModelError> {
        Ok(linalg::spectral_norm(self.prob.matrix())? + 5.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use proptest::prelude::*;

    fn diag_problem(diag: &[f64], b: &[f64]) -> AveProblem {
        AveProblem::new(
            Matrix::from_diag(diag).unwrap(),
            Vector::from_slice(b).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn delays_are_validated() {
        let p = diag_problem(&[2.0, 2.0], &[0.0, 1.0]);
        assert!(MixedDelayModel::new(p.clone(), -1.0, 0.5).is_err());
        assert!(MixedDelayModel::new(p.clone(), 1.0, 0.0).is_err());
        assert!(DiscreteDelayModel::new(p.clone(), f64::NAN).is_err());
        assert!(MixedDelayModel::new(p, 0.0, 0.5).is_ok());
    }

    #[test]
    fn mixed_rhs_hand_value() {
        // A = diag(2), b = [1], tau2 = 0.5, x = 1, delayed = 2, window = 3:
        // -(2 + 2.5) * 1 + 2 + 2 + 3 + 1 = 3.5.
        let p = diag_problem(&[2.0], &[1.0]);
        let m = MixedDelayModel::new(p, 1.0, 0.5).unwrap();
        let out = m
            .rhs(
                &Vector::from_slice(&[1.0]).unwrap(),
                &Vector::from_slice(&[2.0]).unwrap(),
                &Vector::from_slice(&[3.0]).unwrap(),
            )
            .unwrap();
        assert!((out.get(0) - 3.5).abs() < 1e-15);
    }

    #[test]
    fn discrete_rhs_hand_value() {
        // -(2 + 2) * (-1) + 0 + 2 + 1 = 7 for x = -1.
        let p = diag_problem(&[2.0], &[1.0]);
        let m = DiscreteDelayModel::new(p, 0.01).unwrap();
        let out = m
            .rhs(
                &Vector::from_slice(&[-1.0]).unwrap(),
                &Vector::from_slice(&[2.0]).unwrap(),
            )
            .unwrap();
        assert!((out.get(0) - 7.0).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_bound_known_value() {
        // ||A|| = 2 for diag(2, 0.9, 2); bound = 2 + 5 + 2 * 0.5 = 8.
        let p = diag_problem(&[2.0, 0.9, 2.0], &[0.0, 0.0, -1.0]);
        let m = MixedDelayModel::new(p.clone(), 1.0, 0.5).unwrap();
        assert!((m.lipschitz_bound().unwrap() - 8.0).abs() < 1e-12);
        let d = DiscreteDelayModel::new(p, 0.01).unwrap();
        assert!((d.lipschitz_bound().unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn history_forms_evaluate() {
        let c = HistoryFunction::constant(Vector::from_slice(&[1.0, -2.0]).unwrap());
        assert_eq!(c.eval(-3.0).as_slice(), &[1.0, -2.0]);
        let cos = HistoryFunction::cos_scaled(Vector::from_slice(&[2.0, -5.0]).unwrap());
        let at = cos.eval(-0.5);
        assert!((at.get(0) - 2.0 * (-0.5f64).cos()).abs() < 1e-15);
        assert!((at.get(1) + 5.0 * (-0.5f64).cos()).abs() < 1e-15);
        let lin = HistoryFunction::linear(
            Vector::from_slice(&[1.0]).unwrap(),
            Vector::from_slice(&[2.0]).unwrap(),
        )
        .unwrap();
        assert!((lin.eval(-0.25).get(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampled_history_interpolates_and_clamps() {
        let h = HistoryFunction::sampled(
            vec![-1.0, -0.5, 0.0],
            vec![
                Vector::from_slice(&[0.0]).unwrap(),
                Vector::from_slice(&[1.0]).unwrap(),
                Vector::from_slice(&[3.0]).unwrap(),
            ],
        )
        .unwrap();
        assert!((h.eval(-0.75).get(0) - 0.5).abs() < 1e-15);
        assert!((h.eval(-0.25).get(0) - 2.0).abs() < 1e-15);
        assert_eq!(h.eval(-2.0).get(0), 0.0);
        assert!(h.covers(-1.0));
        assert!(!h.covers(-2.0));
        assert!(HistoryFunction::sampled(vec![0.0], vec![Vector::zeros(1)]).is_err());
        assert!(HistoryFunction::sampled(
            vec![-1.0, -1.0],
            vec![Vector::zeros(1), Vector::zeros(1)]
        )
        .is_err());
    }

    #[test]
    fn sup_distance_of_cos_history() {
        // ||phi(t)|| for phi = cos * [3, 4] peaks at t = 0 with value 5.
        let h = HistoryFunction::cos_scaled(Vector::from_slice(&[3.0, 4.0]).unwrap());
        let sup = h.sup_distance(&Vector::zeros(2), -1.0, 1000);
        assert!((sup - 5.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn constant_state_rhs_is_negated_residual(
            diag in proptest::collection::vec(0.5f64..6.0, 3),
            b in proptest::collection::vec(-3.0f64..3.0, 3),
            x in proptest::collection::vec(-4.0f64..4.0, 3),
            tau2 in 0.1f64..2.0,
        ) {
            let p = AveProblem::new(
                Matrix::from_diag(&diag).unwrap(),
                Vector::new(b).unwrap(),
            ).unwrap();
            let x = Vector::new(x).unwrap();
            let mixed = MixedDelayModel::new(p.clone(), 1.0, tau2).unwrap();
            let window = x.scale(tau2);
            let g = mixed.rhs(&x, &x, &window).unwrap();
            let expected = mixed.equilibrium_residual(&x).unwrap();
            let scale = 1.0 + x.norm() + p.rhs().norm();
            prop_assert!(g.sub(&expected).unwrap().inf_norm() <= 1e-13 * scale);

            let disc = DiscreteDelayModel::new(p, 0.3).unwrap();
            let g = disc.rhs(&x, &x).unwrap();
            let expected = disc.equilibrium_residual(&x).unwrap();
            prop_assert!(g.sub(&expected).unwrap().inf_norm() <= 1e-13 * scale);
        }
    }
}
