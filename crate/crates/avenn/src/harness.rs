//! Experiment orchestration: built-in examples, full runs, artifacts.
//!
//! A run couples the three stages of the pipeline: obtain a certificate
//! (bundled, from a file, or by feasibility search), integrate the
//! chosen model, and check the outcome — equation residual, distance to
//! the equilibrium, the certified exponential envelope, an empirical
//! decay-rate fit, and agreement with sign enumeration. Everything a
//! run produces is collected in a [`RunReport`] that serialises to a
//! plain-text `key = value` form and parses back without loss.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::ave::{self, AveError, AveProblem};
use crate::dde::{self, DdeError, DenseTrajectory, IntegratorConfig, DEFAULT_QUAD_PANELS};
use crate::linalg::{LinalgError, Matrix, Vector};
use crate::lmi::{
    self, Certificate, CertificateReport, DiscreteCertificate, FeasibilitySearchOptions, LmiError,
    MixedCertificate, SearchOutcome,
};
use crate::models::{DiscreteDelayModel, HistoryFunction, MixedDelayModel, ModelError};

/// Default integration step of the built-in examples.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Default certified decay rate of the built-in examples.
pub const DEFAULT_RATE: f64 = 0.01;

/// Default relative slack allowed when checking the exponential
/// envelope against a trajectory.
pub const DEFAULT_BOUND_SLACK: f64 = 0.05;

/// Runs enumerate the solution set for cross-checking only up to this
/// dimension; beyond it the `2^n` sweep is no longer cheap.
const ENUM_DIM_LIMIT: usize = 10;

/// Tolerance used by the enumeration sweep inside a run.
const ENUM_TOL: f64 = 1e-9;

/// Tolerance for "the limit point solves the equation" and for
/// membership in the enumerated solution set.
const MATCH_TOL: f64 = 1e-5;

/// A limit point adopts a nearby enumerated solution as the reference
/// equilibrium when within this distance.
const NEAR_SOLUTION_TOL: f64 = 1e-3;

/// Node errors at or below this floor are dropped from the decay-rate
/// fit; they sit at the integration noise level.
const FIT_FLOOR: f64 = 1e-12;

/// Errors raised by the harness.
#[derive(Debug)]
pub enum HarnessError {
    UnknownExample(String),
    BadSpec(String),
    Parse(String),
    /// The feasibility search ran out of budget.
    SearchFailed {
        best_lambda_max: f64,
        iterations: usize,
    },
    Io(std::io::Error),
    Ave(AveError),
    Model(ModelError),
    Dde(DdeError),
    Lmi(LmiError),
    Linalg(LinalgError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::UnknownExample(name) => {
                write!(f, "unknown example {name:?}; see `builtin_names`")
            }
            HarnessError::BadSpec(msg) => write!(f, "bad experiment: {msg}"),
            HarnessError::Parse(msg) => write!(f, "parse error: {msg}"),
            HarnessError::SearchFailed {
                best_lambda_max,
                iterations,
            } => write!(
                f,
                "no feasible certificate found in {iterations} iterations \
                 (best largest eigenvalue {best_lambda_max:.6e}); a longer budget, another \
                 seed, or a smaller rate may succeed"
            ),
            HarnessError::Io(e) => write!(f, "i/o error: {e}"),
            HarnessError::Ave(e) => write!(f, "{e}"),
            HarnessError::Model(e) => write!(f, "{e}"),
            HarnessError::Dde(e) => write!(f, "{e}"),
            HarnessError::Lmi(e) => write!(f, "{e}"),
            HarnessError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> HarnessError {
        HarnessError::Io(e)
    }
}

impl From<AveError> for HarnessError {
    fn from(e: AveError) -> HarnessError {
        HarnessError::Ave(e)
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> HarnessError {
        HarnessError::Model(e)
    }
}

impl From<DdeError> for HarnessError {
    fn from(e: DdeError) -> HarnessError {
        HarnessError::Dde(e)
    }
}

impl From<LmiError> for HarnessError {
    fn from(e: LmiError) -> HarnessError {
        HarnessError::Lmi(e)
    }
}

impl From<LinalgError> for HarnessError {
    fn from(e: LinalgError) -> HarnessError {
        HarnessError::Linalg(e)
    }
}

/// Which of the two delayed models a run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Mixed,
    Discrete,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Mixed => write!(f, "mixed"),
            ModelKind::Discrete => write!(f, "discrete"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<ModelKind, HarnessError> {
        match s {
            "mixed" => Ok(ModelKind::Mixed),
            "discrete" => Ok(ModelKind::Discrete),
            other => Err(HarnessError::Parse(format!(
                "unknown model {other:?} (expected \"mixed\" or \"discrete\")"
            ))),
        }
    }
}

/// Where the certificate of a run comes from.
#[derive(Debug, Clone)]
pub enum CertificateSource {
    /// A ready certificate, e.g. the one bundled with a built-in
    /// example.
    Provided(Certificate),
    /// Plain-text certificate file.
    File(PathBuf),
    /// Run the projected subgradient search at the experiment's delays
    /// and rate.
    Search { seed: u64 },
}

/// A fully specified experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub problem: AveProblem,
    pub model: ModelKind,
    pub tau1: f64,
    /// Distributed-delay horizon; required by the mixed model, ignored
    /// by the discrete one.
    pub tau2: Option<f64>,
    /// Decay rate targeted by a certificate search.
    pub k: f64,
    pub step: f64,
    pub horizon: f64,
    pub quad_panels: usize,
    pub bound_slack: f64,
    pub history: HistoryFunction,
    pub known_solution: Option<Vector>,
    pub certificate: CertificateSource,
}

impl ExperimentSpec {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.history.dim() != self.problem.dim() {
            return Err(HarnessError::BadSpec(format!(
                "initial function has dimension {}, problem has {}",
                self.history.dim(),
                self.problem.dim()
            )));
        }
        if self.model == ModelKind::Mixed {
            match self.tau2 {
                Some(t) if t.is_finite() && t > 0.0 => {}
                _ => {
                    return Err(HarnessError::BadSpec(
                        "the mixed model needs a positive tau2".to_string(),
                    ))
                }
            }
        }
        if let Some(star) = &self.known_solution {
            if star.dim() != self.problem.dim() {
                return Err(HarnessError::BadSpec(format!(
                    "known solution has dimension {}, problem has {}",
                    star.dim(),
                    self.problem.dim()
                )));
            }
        }
        if !self.bound_slack.is_finite() || self.bound_slack < 0.0 {
            return Err(HarnessError::BadSpec(format!(
                "bound slack {} is invalid",
                self.bound_slack
            )));
        }
        Ok(())
    }
}

/// A built-in example: problem, model, delays, initial function, and a
/// bundled feasible certificate.
#[derive(Debug, Clone)]
pub struct BuiltinExample {
    pub name: &'static str,
    /// One-line description shown by listings.
    pub summary: &'static str,
    pub problem: AveProblem,
    pub model: ModelKind,
    pub tau1: f64,
    pub tau2: Option<f64>,
    pub k: f64,
    pub step: f64,
    pub horizon: f64,
    pub history: HistoryFunction,
    pub known_solution: Option<Vector>,
    pub certificate: Certificate,
}

impl BuiltinExample {
    /// The default experiment for this example.
    pub fn spec(&self) -> ExperimentSpec {
        ExperimentSpec {
            name: self.name.to_string(),
            problem: self.problem.clone(),
            model: self.model,
            tau1: self.tau1,
            tau2: self.tau2,
            k: self.k,
            step: self.step,
            horizon: self.horizon,
            quad_panels: DEFAULT_QUAD_PANELS,
            bound_slack: DEFAULT_BOUND_SLACK,
            history: self.history.clone(),
            known_solution: self.known_solution.clone(),
            certificate: CertificateSource::Provided(self.certificate.clone()),
        }
    }
}

/// Names of the built-in examples, in presentation order.
pub fn builtin_names() -> &'static [&'static str] {
    &[
        "ex1-mixed",
        "ex1-discrete",
        "ex2-mixed",
        "ex2-discrete",
        "ex3-mixed",
        "ex3-discrete",
        "ex4-mixed",
        "ex4-discrete",
    ]
}

fn mat3(rows: [[f64; 3]; 3]) -> Matrix {
    Matrix::from_rows(&[&rows[0], &rows[1], &rows[2]]).expect("constant matrix")
}

fn vec3(v: [f64; 3]) -> Vector {
    Vector::from_slice(&v).expect("constant vector")
}

fn diag3(v: [f64; 3]) -> Matrix {
    Matrix::from_diag(&v).expect("constant diagonal")
}

fn problem_one() -> AveProblem {
    #[rustfmt::skip]
    let a = mat3([
        [4.0, 0.0, 0.0],
        [2.0, 2.0, 8.0],
        [0.0, 0.0, 4.0],
    ]);
    AveProblem::new(a, vec3([0.0, 1.0, 0.0])).expect("constant problem")
}

fn problem_two() -> AveProblem {
    #[rustfmt::skip]
    let a = mat3([
        [2.0, 0.0, 0.0],
        [0.0, 0.9, 0.0],
        [0.0, 0.0, 2.0],
    ]);
    AveProblem::new(a, vec3([0.0, 0.0, -1.0])).expect("constant problem")
}

fn problem_three() -> AveProblem {
    AveProblem::new(Matrix::identity(3), vec3([0.0, 0.0, -1.0])).expect("constant problem")
}

fn problem_four() -> AveProblem {
    #[rustfmt::skip]
    let a = mat3([
        [ 8.0, -1.0,  0.0],
        [-1.0,  8.0, -1.0],
        [ 0.0, -1.0,  8.0],
    ]);
    AveProblem::new(a, vec3([-10.0, 9.0, -10.0])).expect("constant problem")
}

fn mixed_cert(
    p: Matrix,
    q: Matrix,
    h: Matrix,
    d: [f64; 3],
    t1: Matrix,
    t2: Matrix,
    tau1: f64,
) -> Certificate {
    Certificate::Mixed(
        MixedCertificate::new(p, q, h, vec3(d), t1, t2, DEFAULT_RATE, tau1, 0.5)
            .expect("bundled certificate"),
    )
}

fn discrete_cert(p: Matrix, q: Matrix, d: [f64; 3], tau1: f64) -> Certificate {
    Certificate::Discrete(
        DiscreteCertificate::new(p, q, vec3(d), DEFAULT_RATE, tau1).expect("bundled certificate"),
    )
}

#[rustfmt::skip]
fn certificate_ex1_mixed() -> Certificate {
    mixed_cert(
        mat3([
            [ 4.9653, -0.2704,  1.0868],
            [-0.2704,  2.0143, -1.0943],
            [ 1.0868, -1.0943,  9.6033],
        ]),
        mat3([
            [15.5985,  0.1188,  0.1670],
            [ 0.1188,  7.2381,  0.3106],
            [ 0.1670,  0.3106, 16.5041],
        ]),
        mat3([
            [ 9.2818, -0.0961,  0.2513],
            [-0.0961,  6.8007, -0.4378],
            [ 0.2513, -0.4378, 10.3333],
        ]),
        [2.7522, 0.8604, 3.7904],
        mat3([
            [ 0.7772, -0.0664,  0.1755],
            [-0.0508,  0.3602, -0.2314],
            [ 0.1481, -0.2432,  1.4252],
        ]),
        mat3([
            [-1.3824, -0.0044,  0.0846],
            [-0.1382, -0.3564, -0.5537],
            [ 0.1792, -0.0928, -1.2108],
        ]),
        1.0,
    )
}

#[rustfmt::skip]
fn certificate_ex1_discrete() -> Certificate {
    discrete_cert(
        mat3([
            [ 0.1862, -0.0187,  0.0484],
            [-0.0187,  0.1924, -0.1076],
            [ 0.0484, -0.1076,  0.3300],
        ]),
        mat3([
            [ 0.8601,  0.0039, -0.0278],
            [ 0.0039,  0.6984,  0.0540],
            [-0.0278,  0.0540,  0.7507],
        ]),
        [0.1199, 0.3348, 0.0582],
        0.01,
    )
}

fn certificate_ex2_mixed() -> Certificate {
    mixed_cert(
        diag3([0.3272, 0.4303, 0.3272]),
        diag3([1.1880, 1.1660, 1.1880]),
        diag3([0.7349, 0.7511, 0.7349]),
        [0.4773, 0.5482, 0.4773],
        diag3([0.0483, 0.0845, 0.0483]),
        diag3([-0.1706, -0.0808, -0.1706]),
        1.0,
    )
}

fn certificate_ex2_discrete() -> Certificate {
    discrete_cert(
        diag3([4.6750, 6.0414, 4.6750]),
        diag3([18.2485, 17.4525, 18.2485]),
        [4.7718, 7.3621, 4.7718],
        0.01,
    )
}

fn certificate_ex3_mixed() -> Certificate {
    mixed_cert(
        Matrix::identity(3).scale(0.4174),
        Matrix::identity(3).scale(1.3234),
        Matrix::identity(3).scale(0.7985),
        [0.5021, 0.5021, 0.5021],
        Matrix::identity(3).scale(0.0698),
        Matrix::identity(3).scale(-0.1400),
        5.0,
    )
}

fn certificate_ex3_discrete() -> Certificate {
    discrete_cert(
        Matrix::identity(3).scale(6.4771),
        Matrix::identity(3).scale(19.2798),
        [7.8471, 7.8471, 7.8471],
        0.01,
    )
}

#[rustfmt::skip]
fn certificate_ex4_mixed() -> Certificate {
    mixed_cert(
        mat3([
            [53.9876,  0.9903,  0.2375],
            [ 0.9903, 53.8978,  0.9903],
            [ 0.2375,  0.9903, 53.9876],
        ]),
        mat3([
            [263.4657,   2.1503,  -0.8182],
            [  2.1503, 262.6324,   2.1503],
            [ -0.8182,   2.1503, 263.4657],
        ]),
        mat3([
            [156.5716,   0.7261,   0.0486],
            [  0.7261, 156.5920,   0.7261],
            [  0.0486,   0.7261, 156.5716],
        ]),
        [19.7867, 19.4132, 19.7867],
        mat3([
            [ 6.3425,  0.5075,  0.0731],
            [ 0.5107,  6.3758,  0.5107],
            [ 0.0731,  0.5075,  6.3425],
        ]),
        mat3([
            [-15.4606,   0.4365,   0.0481],
            [  0.4133, -15.1657,   0.4133],
            [  0.0481,   0.4365, -15.4606],
        ]),
        1.0,
    )
}

#[rustfmt::skip]
fn certificate_ex4_discrete() -> Certificate {
    discrete_cert(
        mat3([
            [0.1138, 0.0114, 0.0011],
            [0.0114, 0.1149, 0.0114],
            [0.0011, 0.0114, 0.1138],
        ]),
        mat3([
            [ 1.1119, -0.0005, -0.0002],
            [-0.0005,  1.1115, -0.0005],
            [-0.0002, -0.0005,  1.1119],
        ]),
        [0.0370, 0.0364, 0.0370],
        0.01,
    )
}

/// Loads a built-in example by name; see [`builtin_names`].
///
/// The horizons are chosen so every default run settles well below the
/// reporting tolerances: the first example's mixed model has a slow
/// oscillatory mode, and the third example converges slowly along its
/// solution family, so both get longer horizons than the rest.
pub fn load_builtin(name: &str) -> Result<BuiltinExample, HarnessError> {
    let ex = match name {
        "ex1-mixed" => BuiltinExample {
            name: "ex1-mixed",
            summary: "3x3 problem with a unique solution; mixed delays",
            problem: problem_one(),
            model: ModelKind::Mixed,
            tau1: 1.0,
            tau2: Some(0.5),
            k: DEFAULT_RATE,
            step: DEFAULT_STEP,
            horizon: 45.0,
            history: HistoryFunction::cos_scaled(vec3([2.0, 2.0, -5.0])),
            known_solution: Some(vec3([0.0, 1.0, 0.0])),
            certificate: certificate_ex1_mixed(),
        },
        "ex1-discrete" => BuiltinExample {
            name: "ex1-discrete",
            summary: "3x3 problem with a unique solution; discrete delay",
            problem: problem_one(),
            model: ModelKind::Discrete,
            tau1: 0.01,
            tau2: None,
            k: DEFAULT_RATE,
            step: DEFAULT_STEP,
            horizon: 30.0,
            history: HistoryFunction::cos_scaled(vec3([2.0, 2.0, -5.0])),
            known_solution: Some(vec3([0.0, 1.0, 0.0])),
            certificate: certificate_ex1_discrete(),
        },
        "ex2-mixed" => BuiltinExample {
            name: "ex2-mixed",
            summary: "diagonal problem outside the classical solvable classes; mixed delays",
            problem: problem_two(),
            model: ModelKind::Mixed,
            tau1: 1.0,
            tau2: Some(0.5),
            k: DEFAULT_RATE,
            step: DEFAULT_STEP,
            horizon: 40.0,
            history: HistoryFunction::cos_scaled(vec3([2.0, -2.0, -5.0])),
            known_solution: Some(vec3([0.0, 0.0, -1.0 / 3.0])),
            certificate: certificate_ex2_mixed(),
        },
        "ex2-discrete" => BuiltinExample {
            name: "ex2-discrete",
            summary: "diagonal problem outside the classical solvable classes; discrete delay",
            problem: problem_two(),
            model: ModelKind::Discrete,
            tau1: 0.01,
            tau2: None,
            k: DEFAULT_RATE,
            step: DEFAULT_STEP,
            horizon: 40.0,
            history: HistoryFunction::cos_scaled(vec3([2.0, -2.0, -5.0])),
            known_solution: Some(vec3([0.0, 0.0, -1.0 / 3.0])),
            certificate: certificate_ex2_discrete(),
        },
        "ex3-mixed" => BuiltinExample {
            name: "ex3-mixed",
            summary: "identity problem with infinitely many solutions; mixed delays",
            problem: problem_three(),
            model: ModelKind::Mixed,
            tau1: 5.0,
            tau2: Some(0.5),
            k: DEFAULT_RATE,
            step: DEFAULT_STEP,
            horizon: 70.0,
            history: HistoryFunction::cos_scaled(vec3([1.0, 2.0, -2.0])),
            known_solution: None,
            certificate: certificate_ex3_mixed(),
        },
        "ex3-discrete" => BuiltinExample {
            name: "ex3-discrete",
            summary: "identity problem with infinitely many solutions; discrete delay",
            problem: problem_three(),
            model: ModelKind::Discrete,
            tau1: 0.01,
            tau2: None,
            k: DEFAULT_RATE,
            step: DEFAULT_STEP,
            horizon: 70.0,
            history: HistoryFunction::cos_scaled(vec3([1.0, 2.0, -2.0])),
            known_solution: None,
            certificate: certificate_ex3_discrete(),
        },
        "ex4-mixed" => BuiltinExample {
            name: "ex4-mixed",
            summary: "well-conditioned tridiagonal problem; mixed delays",
            problem: problem_four(),
            model: ModelKind::Mixed,
            tau1: 1.0,
            tau2: Some(0.5),
            k: DEFAULT_RATE,
            step: DEFAULT_STEP,
            horizon: 30.0,
            history: HistoryFunction::cos_scaled(vec3([2.0, 2.0, -5.0])),
            known_solution: Some(vec3([-1.0, 1.0, -1.0])),
            certificate: certificate_ex4_mixed(),
        },
        "ex4-discrete" => BuiltinExample {
            name: "ex4-discrete",
            summary: "well-conditioned tridiagonal problem; discrete delay",
            problem: problem_four(),
            model: ModelKind::Discrete,
            tau1: 0.01,
            tau2: None,
            k: DEFAULT_RATE,
            step: DEFAULT_STEP,
            horizon: 30.0,
            history: HistoryFunction::cos_scaled(vec3([2.0, 2.0, -5.0])),
            known_solution: Some(vec3([-1.0, 1.0, -1.0])),
            certificate: certificate_ex4_discrete(),
        },
        other => return Err(HarnessError::UnknownExample(other.to_string())),
    };
    Ok(ex)
}

/// Parses an initial-function description.
///
/// Formats: `cos:2,2,-5` (cosine scaled per coordinate),
/// `const:1,0,-1`, `linear:1,0,-1@0.5,0,0` (value at zero `@` slope),
/// and `table:FILE` where each non-comment line of FILE is
/// `t v1 ... vn` with strictly increasing times.
pub fn parse_history(text: &str, dim: usize) -> Result<HistoryFunction, HarnessError> {
    let (kind, payload) = text.split_once(':').ok_or_else(|| {
        HarnessError::Parse(format!(
            "initial function {text:?} needs a prefix: cos:, const:, linear:, or table:"
        ))
    })?;
    let parse_vec = |s: &str| -> Result<Vector, HarnessError> {
        let mut vals = Vec::new();
        for part in s.split(',') {
            vals.push(
                part.trim()
                    .parse::<f64>()
                    .map_err(|_| HarnessError::Parse(format!("bad number {part:?} in {s:?}")))?,
            );
        }
        Vector::new(vals).map_err(|e| HarnessError::Parse(e.to_string()))
    };
    let history = match kind.trim() {
        "cos" => HistoryFunction::cos_scaled(parse_vec(payload)?),
        "const" => HistoryFunction::constant(parse_vec(payload)?),
        "linear" => {
            let (at_zero, slope) = payload.split_once('@').ok_or_else(|| {
                HarnessError::Parse(
                    "linear initial functions look like linear:v1,..,vn@s1,..,sn".to_string(),
                )
            })?;
            HistoryFunction::linear(parse_vec(at_zero)?, parse_vec(slope)?)?
        }
        "table" => {
            let body = fs::read_to_string(payload.trim())?;
            parse_sample_table(&body)?
        }
        other => {
            return Err(HarnessError::Parse(format!(
                "unknown initial-function kind {other:?}"
            )))
        }
    };
    if history.dim() != dim {
        return Err(HarnessError::Parse(format!(
            "initial function has dimension {}, problem needs {dim}",
            history.dim()
        )));
    }
    Ok(history)
}

fn parse_sample_table(text: &str) -> Result<HistoryFunction, HarnessError> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut nums = Vec::new();
        for part in line.split_whitespace() {
            nums.push(part.parse::<f64>().map_err(|_| {
                HarnessError::Parse(format!("bad number {part:?} in sample row {line:?}"))
            })?);
        }
        if nums.len() < 2 {
            return Err(HarnessError::Parse(format!(
                "sample row {line:?} needs a time and at least one value"
            )));
        }
        times.push(nums[0]);
        values
            .push(Vector::new(nums[1..].to_vec()).map_err(|e| HarnessError::Parse(e.to_string()))?);
    }
    Ok(HistoryFunction::sampled(times, values)?)
}

/// Least-squares fit of the decay rate: the slope of
/// `ln ||x(t) - x*||` over the window, negated. Nodes at the noise
/// floor are excluded; `None` when fewer than two usable nodes remain.
pub fn fit_decay_rate(
    traj: &DenseTrajectory,
    x_star: &Vector,
    window: (f64, f64),
) -> Result<Option<f64>, HarnessError> {
    let (lo, hi) = window;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(HarnessError::BadSpec(format!(
            "fit window [{lo}, {hi}] is empty"
        )));
    }
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for i in 0..traj.num_nodes() {
        let t = traj.node_time(i);
        if t < lo || t > hi {
            continue;
        }
        let err = traj.state(i).sub(x_star)?.norm();
        if err <= FIT_FLOOR {
            continue;
        }
        ts.push(t);
        logs.push(err.ln());
    }
    if ts.len() < 2 {
        return Ok(None);
    }
    let n = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / n;
    let l_mean = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, l) in ts.iter().zip(&logs) {
        num += (t - t_mean) * (l - l_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(-(num / den)))
}

/// Everything a run reports. Serialises to `key = value` text via
/// [`RunReport::to_text`] and back via [`RunReport::from_text`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub model: ModelKind,
    pub dim: usize,
    pub tau1: f64,
    pub tau2: Option<f64>,
    pub step: f64,
    pub horizon: f64,
    /// Certified decay rate (from the certificate).
    pub k: f64,
    /// Final state of the integration.
    pub limit: Vector,
    /// Reference equilibrium: the known solution, or the limit point if
    /// it solves the equation, or a nearby enumerated solution.
    pub solution: Option<Vector>,
    pub terminal_error: Option<f64>,
    /// Equation residual at the limit point.
    pub residual: f64,
    pub inverse_norm: Option<f64>,
    pub certificate_feasible: bool,
    pub lambda_max: f64,
    pub p_margin: f64,
    pub q_margin: f64,
    pub h_margin: Option<f64>,
    pub d_margin: f64,
    pub gamma: Option<f64>,
    pub sup_history_distance: Option<f64>,
    pub bound_max_ratio: Option<f64>,
    pub bound_holds: Option<bool>,
    pub fitted_rate: Option<f64>,
    /// Whether the limit point belongs to the enumerated solution set
    /// (only computed for small problems).
    pub matches_enumeration: Option<bool>,
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        line("name", self.name.clone());
        line("model", self.model.to_string());
        line("dim", self.dim.to_string());
        line("tau1", format!("{:.16e}", self.tau1));
        if let Some(t) = self.tau2 {
            line("tau2", format!("{t:.16e}"));
        }
        line("step", format!("{:.16e}", self.step));
        line("horizon", format!("{:.16e}", self.horizon));
        line("k", format!("{:.16e}", self.k));
        line("limit", self.limit.to_text());
        if let Some(s) = &self.solution {
            line("solution", s.to_text());
        }
        if let Some(e) = self.terminal_error {
            line("terminal_error", format!("{e:.16e}"));
        }
        line("residual", format!("{:.16e}", self.residual));
        if let Some(v) = self.inverse_norm {
            line("inverse_norm", format!("{v:.16e}"));
        }
        line(
            "certificate_feasible",
            self.certificate_feasible.to_string(),
        );
        line("lambda_max", format!("{:.16e}", self.lambda_max));
        line("p_margin", format!("{:.16e}", self.p_margin));
        line("q_margin", format!("{:.16e}", self.q_margin));
        if let Some(v) = self.h_margin {
            line("h_margin", format!("{v:.16e}"));
        }
        line("d_margin", format!("{:.16e}", self.d_margin));
        if let Some(v) = self.gamma {
            line("gamma", format!("{v:.16e}"));
        }
        if let Some(v) = self.sup_history_distance {
            line("sup_history_distance", format!("{v:.16e}"));
        }
        if let Some(v) = self.bound_max_ratio {
            line("bound_max_ratio", format!("{v:.16e}"));
        }
        if let Some(v) = self.bound_holds {
            line("bound_holds", v.to_string());
        }
        if let Some(v) = self.fitted_rate {
            line("fitted_rate", format!("{v:.16e}"));
        }
        if let Some(v) = self.matches_enumeration {
            line("matches_enumeration", v.to_string());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<RunReport, HarnessError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Parse(format!("expected `key = value`, got {line:?}"))
            })?;
            let key = key.trim().to_string();
            if pairs.iter().any(|(k, _)| *k == key) {
                return Err(HarnessError::Parse(format!("duplicate key {key:?}")));
            }
            pairs.push((key, value.trim().to_string()));
        }
        let get =
            |key: &str| -> Option<&String> { pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v) };
        let req = |key: &str| -> Result<&String, HarnessError> {
            get(key).ok_or_else(|| HarnessError::Parse(format!("missing key {key:?}")))
        };
        let f64_of = |key: &str, v: &String| -> Result<f64, HarnessError> {
            v.parse()
                .map_err(|_| HarnessError::Parse(format!("bad number for {key:?}: {v:?}")))
        };
        let req_f64 = |key: &str| -> Result<f64, HarnessError> { f64_of(key, req(key)?) };
        let opt_f64 = |key: &str| -> Result<Option<f64>, HarnessError> {
            get(key).map(|v| f64_of(key, v)).transpose()
        };
        let bool_of = |key: &str, v: &String| -> Result<bool, HarnessError> {
            v.parse()
                .map_err(|_| HarnessError::Parse(format!("bad boolean for {key:?}: {v:?}")))
        };
        let vec_of = |key: &str, v: &String| -> Result<Vector, HarnessError> {
            Vector::from_text(v).map_err(|e| HarnessError::Parse(format!("{key}: {e}")))
        };

        let report = RunReport {
            name: req("name")?.clone(),
            model: req("model")?.parse()?,
            dim: req("dim")?
                .parse()
                .map_err(|_| HarnessError::Parse("bad dim".to_string()))?,
            tau1: req_f64("tau1")?,
            tau2: opt_f64("tau2")?,
            step: req_f64("step")?,
            horizon: req_f64("horizon")?,
            k: req_f64("k")?,
            limit: vec_of("limit", req("limit")?)?,
            solution: get("solution").map(|v| vec_of("solution", v)).transpose()?,
            terminal_error: opt_f64("terminal_error")?,
            residual: req_f64("residual")?,
            inverse_norm: opt_f64("inverse_norm")?,
            certificate_feasible: bool_of("certificate_feasible", req("certificate_feasible")?)?,
            lambda_max: req_f64("lambda_max")?,
            p_margin: req_f64("p_margin")?,
            q_margin: req_f64("q_margin")?,
            h_margin: opt_f64("h_margin")?,
            d_margin: req_f64("d_margin")?,
            gamma: opt_f64("gamma")?,
            sup_history_distance: opt_f64("sup_history_distance")?,
            bound_max_ratio: opt_f64("bound_max_ratio")?,
            bound_holds: get("bound_holds")
                .map(|v| bool_of("bound_holds", v))
                .transpose()?,
            fitted_rate: opt_f64("fitted_rate")?,
            matches_enumeration: get("matches_enumeration")
                .map(|v| bool_of("matches_enumeration", v))
                .transpose()?,
        };
        let known = [
            "name",
            "model",
            "dim",
            "tau1",
            "tau2",
            "step",
            "horizon",
            "k",
            "limit",
            "solution",
            "terminal_error",
            "residual",
            "inverse_norm",
            "certificate_feasible",
            "lambda_max",
            "p_margin",
            "q_margin",
            "h_margin",
            "d_margin",
            "gamma",
            "sup_history_distance",
            "bound_max_ratio",
            "bound_holds",
            "fitted_rate",
            "matches_enumeration",
        ];
        for (key, _) in &pairs {
            if !known.contains(&key.as_str()) {
                return Err(HarnessError::Parse(format!("unknown key {key:?}")));
            }
        }
        Ok(report)
    }
}

/// A completed run: the report plus the objects behind it.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trajectory: DenseTrajectory,
    pub certificate: Certificate,
    pub certificate_report: CertificateReport,
    /// Wall-clock seconds spent in the integrator (deliberately kept
    /// out of [`RunReport`] so artifacts are byte-reproducible).
    pub integration_seconds: f64,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// The certificate must describe the model being run: same kind, same
/// dimension, same distributed-delay horizon, and a discrete delay at
/// least as long as the run's (a certificate for a longer discrete
/// delay remains valid for shorter ones, but not the other way round).
fn check_certificate_matches(
    spec: &ExperimentSpec,
    cert: &Certificate,
) -> Result<(), HarnessError> {
    let kind = match spec.model {
        ModelKind::Mixed => Certificate::is_mixed(cert),
        ModelKind::Discrete => !Certificate::is_mixed(cert),
    };
    if !kind {
        return Err(HarnessError::BadSpec(format!(
            "the certificate is for the {} model, the run uses the {} model",
            if cert.is_mixed() { "mixed" } else { "discrete" },
            spec.model
        )));
    }
    if cert.dim() != spec.problem.dim() {
        return Err(HarnessError::BadSpec(format!(
            "the certificate has dimension {}, the problem has {}",
            cert.dim(),
            spec.problem.dim()
        )));
    }
    if spec.tau1 > cert.tau1() && !close(spec.tau1, cert.tau1()) {
        return Err(HarnessError::BadSpec(format!(
            "the certificate covers discrete delays up to {}, the run uses {}; \
             search for a certificate at the longer delay instead",
            cert.tau1(),
            spec.tau1
        )));
    }
    if let (Some(spec_tau2), Some(cert_tau2)) = (spec.tau2, cert.tau2()) {
        if !close(spec_tau2, cert_tau2) {
            return Err(HarnessError::BadSpec(format!(
                "the certificate is for distributed-delay horizon {cert_tau2}, \
                 the run uses {spec_tau2}"
            )));
        }
    }
    Ok(())
}

fn obtain_certificate(spec: &ExperimentSpec) -> Result<Certificate, HarnessError> {
    match &spec.certificate {
        CertificateSource::Provided(cert) => Ok(cert.clone()),
        CertificateSource::File(path) => {
            let text = fs::read_to_string(path)?;
            Ok(Certificate::from_text(&text)?)
        }
        CertificateSource::Search { seed } => {
            let opts = FeasibilitySearchOptions {
                seed: *seed,
                ..FeasibilitySearchOptions::default()
            };
            let a = spec.problem.matrix();
            match spec.model {
                ModelKind::Mixed => {
                    let tau2 = spec.tau2.unwrap_or(0.0);
                    match lmi::search_mixed_certificate(a, spec.tau1, tau2, spec.k, &opts)? {
                        SearchOutcome::Found { certificate, .. } => {
                            Ok(Certificate::Mixed(certificate))
                        }
                        SearchOutcome::Exhausted {
                            best_lambda_max,
                            iterations,
                        } => Err(HarnessError::SearchFailed {
                            best_lambda_max,
                            iterations,
                        }),
                    }
                }
                ModelKind::Discrete => {
                    match lmi::search_discrete_certificate(a, spec.tau1, spec.k, &opts)? {
                        SearchOutcome::Found { certificate, .. } => {
                            Ok(Certificate::Discrete(certificate))
                        }
                        SearchOutcome::Exhausted {
                            best_lambda_max,
                            iterations,
                        } => Err(HarnessError::SearchFailed {
                            best_lambda_max,
                            iterations,
                        }),
                    }
                }
            }
        }
    }
}

fn select_solution(
    spec: &ExperimentSpec,
    limit: &Vector,
    enumeration: Option<&ave::SolutionReport>,
) -> Result<Option<Vector>, HarnessError> {
    if let Some(known) = &spec.known_solution {
        return Ok(Some(known.clone()));
    }
    if spec.problem.verify_solution(limit, MATCH_TOL)? {
        return Ok(Some(limit.clone()));
    }
    if let Some(report) = enumeration {
        for candidate in report.isolated_solutions() {
            if limit.sub(candidate)?.norm() <= NEAR_SOLUTION_TOL {
                return Ok(Some(candidate.clone()));
            }
        }
    }
    Ok(None)
}

/// Runs an experiment end to end: certificate, integration, checks.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutcome, HarnessError> {
    spec.validate()?;
    let prob = &spec.problem;

    let certificate = obtain_certificate(spec)?;
    check_certificate_matches(spec, &certificate)?;
    let certificate_report = certificate.verify(prob.matrix(), 0.0)?;
    let gamma = match certificate.gamma() {
        Ok(g) => Some(g),
        Err(LmiError::BadParameter(_)) => None,
        Err(e) => return Err(e.into()),
    };

    let config =
        IntegratorConfig::new(spec.step, spec.horizon)?.with_quad_panels(spec.quad_panels)?;
    let started = Instant::now();
    let trajectory = match spec.model {
        ModelKind::Mixed => {
            let tau2 = spec.tau2.expect("validated above");
            let model = MixedDelayModel::new(prob.clone(), spec.tau1, tau2)?;
            dde::integrate_mixed(&model, &spec.history, &config)?
        }
        ModelKind::Discrete => {
            let model = DiscreteDelayModel::new(prob.clone(), spec.tau1)?;
            dde::integrate_discrete(&model, &spec.history, &config)?
        }
    };
    let integration_seconds = started.elapsed().as_secs_f64();

    let limit = trajectory.final_state().clone();
    let residual = prob.residual_norm(&limit)?;
    let enumeration = if prob.dim() <= ENUM_DIM_LIMIT {
        Some(ave::enumerate_solutions(prob, ENUM_TOL)?)
    } else {
        None
    };
    let solution = select_solution(spec, &limit, enumeration.as_ref())?;
    let terminal_error = match &solution {
        Some(star) => Some(limit.sub(star)?.norm()),
        None => None,
    };
    let inverse_norm = prob.inverse_norm().ok();
    let matches_enumeration = match &enumeration {
        Some(report) => Some(report.matches(prob, &limit, MATCH_TOL)?),
        None => None,
    };

    let mut sup_history_distance = None;
    let mut bound_max_ratio = None;
    let mut bound_holds = None;
    if let (Some(g), Some(star)) = (gamma, &solution) {
        match lmi::exponential_bound_check(&trajectory, star, g, certificate.k(), spec.bound_slack)
        {
            Ok(check) => {
                sup_history_distance = Some(check.sup_history_distance);
                bound_max_ratio = Some(check.max_ratio);
                bound_holds = Some(check.holds);
            }
            Err(LmiError::DegenerateHistory) => {}
            Err(e) => return Err(e.into()),
        }
    }

    let fitted_rate = match &solution {
        Some(star) => {
            let default_window = (spec.horizon / 4.0, 3.0 * spec.horizon / 4.0);
            match fit_decay_rate(&trajectory, star, default_window)? {
                Some(rate) => Some(rate),
                // A fast run can be at the noise floor throughout the
                // default window; fall back to the whole horizon.
                None => fit_decay_rate(&trajectory, star, (0.0, spec.horizon))?,
            }
        }
        None => None,
    };

    let report = RunReport {
        name: spec.name.clone(),
        model: spec.model,
        dim: prob.dim(),
        tau1: spec.tau1,
        tau2: match spec.model {
            ModelKind::Mixed => spec.tau2,
            ModelKind::Discrete => None,
        },
        step: spec.step,
        horizon: spec.horizon,
        k: certificate.k(),
        limit,
        solution,
        terminal_error,
        residual,
        inverse_norm,
        certificate_feasible: certificate_report.feasible,
        lambda_max: certificate_report.lambda_max,
        p_margin: certificate_report.p_margin,
        q_margin: certificate_report.q_margin,
        h_margin: certificate_report.h_margin,
        d_margin: certificate_report.d_margin,
        gamma,
        sup_history_distance,
        bound_max_ratio,
        bound_holds,
        fitted_rate,
        matches_enumeration,
    };
    Ok(RunOutcome {
        report,
        trajectory,
        certificate,
        certificate_report,
        integration_seconds,
    })
}

fn plot_script(report: &RunReport) -> String {
    let err_col = report.dim + 2;
    let res_col = report.dim + 3;
    let mut s = String::new();
    s.push_str("# Renders the run in this directory; needs gnuplot.\n");
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set logscale y\n");
    s.push_str("set xlabel \"t\"\n");
    s.push_str(&format!("set title \"{}\"\n", report.name));
    match (&report.solution, report.gamma, report.sup_history_distance) {
        (Some(_), Some(g), Some(sup)) => {
            s.push_str("set ylabel \"distance to equilibrium\"\n");
            s.push_str(&format!(
                "plot \"trajectory.csv\" skip 1 using 1:{err_col} with lines lw 2 \
                 title \"error\", \\\n     {g:.6e} * {sup:.6e} * exp(-{:.6e} * x) \
                 with lines dashtype 2 title \"certificate envelope\"\n",
                report.k
            ));
        }
        (Some(_), _, _) => {
            s.push_str("set ylabel \"distance to equilibrium\"\n");
            s.push_str(&format!(
                "plot \"trajectory.csv\" skip 1 using 1:{err_col} with lines lw 2 title \"error\"\n"
            ));
        }
        _ => {
            s.push_str("set ylabel \"equation residual\"\n");
            s.push_str(&format!(
                "plot \"trajectory.csv\" skip 1 using 1:{res_col} with lines lw 2 \
                 title \"residual\"\n"
            ));
        }
    }
    s
}

/// Writes the run artifacts into `dir`: `trajectory.csv`,
/// `summary.txt`, `certificate.txt`, and a `plot.gp` gnuplot script.
pub fn write_artifacts(
    spec: &ExperimentSpec,
    outcome: &RunOutcome,
    dir: &Path,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let file = fs::File::create(dir.join("trajectory.csv"))?;
    let mut writer = std::io::BufWriter::new(file);
    outcome
        .trajectory
        .write_csv(&mut writer, &spec.problem, outcome.report.solution.as_ref())?;
    writer.flush()?;
    fs::write(dir.join("summary.txt"), outcome.report.to_text())?;
    fs::write(dir.join("certificate.txt"), outcome.certificate.to_text())?;
    fs::write(dir.join("plot.gp"), plot_script(&outcome.report))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    #[test]
    fn registry_is_complete_and_consistent() {
        assert_eq!(builtin_names().len(), 8);
        for name in builtin_names() {
            let ex = load_builtin(name).unwrap();
            assert_eq!(ex.name, *name);
            assert_eq!(ex.problem.dim(), 3);
            assert_eq!(ex.history.dim(), 3);
            assert_eq!(ex.certificate.is_mixed(), ex.model == ModelKind::Mixed);
            assert_eq!(ex.certificate.dim(), 3);
            assert!(ex.step > 0.0 && ex.horizon > 0.0);
            if let Some(star) = &ex.known_solution {
                assert!(ex.problem.verify_solution(star, 1e-12).unwrap());
            }
            // The default spec must pass validation.
            ex.spec().validate().unwrap();
        }
        assert!(matches!(
            load_builtin("ex9-mixed"),
            Err(HarnessError::UnknownExample(_))
        ));
    }

    #[test]
    fn bundled_certificates_verify_with_expected_spectra() {
        // Largest block-matrix eigenvalue and envelope factor for every
        // bundled certificate, frozen from an independent evaluation of
        // the same formulas.
        let expected: [(&str, f64, f64); 8] = [
            ("ex1-mixed", -0.08703920746575712, 4.360136299894627),
            ("ex1-discrete", -0.028381757527034233, 2.855317576255397),
            ("ex2-mixed", -0.014768509154784983, 2.923470766150179),
            ("ex2-discrete", -6.78579499549316, 2.1168065319318146),
            ("ex3-mixed", -0.05687050348734507, 4.327840990997352),
            ("ex3-discrete", -8.385976521282728, 1.8581689770423546),
            ("ex4-mixed", -1.4207180355628577, 2.6784462827104654),
            ("ex4-discrete", -0.01922567469245747, 1.4792501366439657),
        ];
        for (name, lambda, gamma) in expected {
            let ex = load_builtin(name).unwrap();
            let report = ex.certificate.verify(ex.problem.matrix(), 0.0).unwrap();
            assert!(report.feasible, "{name} must be feasible");
            assert!(report.margins_positive(), "{name} weight margins");
            assert!(
                (report.lambda_max - lambda).abs() <= 1e-7,
                "{name}: largest eigenvalue {} vs {lambda}",
                report.lambda_max
            );
            let g = ex.certificate.gamma().unwrap();
            assert!(
                (g - gamma).abs() <= 1e-7,
                "{name}: envelope factor {g} vs {gamma}"
            );
            assert!(g >= 1.0);
        }
    }

    #[test]
    fn history_strings_parse() {
        let h = parse_history("cos:2,2,-5", 3).unwrap();
        assert_eq!(h.eval(0.0).as_slice(), &[2.0, 2.0, -5.0]);
        let h = parse_history("const: 1 , 0, -1", 3).unwrap();
        assert_eq!(h.eval(-3.0).as_slice(), &[1.0, 0.0, -1.0]);
        let h = parse_history("linear:1,0@0.5,0", 2).unwrap();
        assert_eq!(h.eval(-2.0).as_slice(), &[0.0, 0.0]);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("history.txt");
        fs::write(&path, "# t x1 x2\n-2 1 4\n-1 2 5\n0 3 6\n").unwrap();
        let h = parse_history(&format!("table:{}", path.display()), 2).unwrap();
        assert_eq!(h.eval(-1.5).as_slice(), &[1.5, 4.5]);

        assert!(matches!(
            parse_history("cos:1,2", 3),
            Err(HarnessError::Parse(_))
        ));
        assert!(matches!(
            parse_history("spline:1,2,3", 3),
            Err(HarnessError::Parse(_))
        ));
        assert!(matches!(
            parse_history("no-separator", 3),
            Err(HarnessError::Parse(_))
        ));
    }

    #[test]
    fn decay_fit_recovers_exact_exponential() {
        let step = 0.05;
        let nodes = 201; // horizon 10
        let rate = 0.3;
        let states: Vec<Vector> = (0..nodes)
            .map(|i| {
                let t = i as f64 * step;
                Vector::from_slice(&[2.0 * (-rate * t).exp(), -(-rate * t).exp()]).unwrap()
            })
            .collect();
        let derivs: Vec<Vector> = states.iter().map(|x| x.scale(-rate)).collect();
        let history = HistoryFunction::constant(Vector::from_slice(&[2.0, -1.0]).unwrap());
        let traj =
            DenseTrajectory::from_parts(step, states, derivs, None, history, 1.0, 64).unwrap();
        let star = Vector::zeros(2);
        let fitted = fit_decay_rate(&traj, &star, (2.5, 7.5)).unwrap().unwrap();
        assert!((fitted - rate).abs() <= 1e-9, "fitted {fitted}");
        // A window past the noise floor yields nothing.
        assert!(fit_decay_rate(&traj, &star, (200.0, 300.0))
            .unwrap()
            .is_none());
        assert!(matches!(
            fit_decay_rate(&traj, &star, (5.0, 5.0)),
            Err(HarnessError::BadSpec(_))
        ));
    }

    fn standard_run() -> &'static (ExperimentSpec, RunOutcome) {
        static CELL: OnceLock<(ExperimentSpec, RunOutcome)> = OnceLock::new();
        CELL.get_or_init(|| {
            let spec = load_builtin("ex1-discrete").unwrap().spec();
            let outcome = run_experiment(&spec).unwrap();
            (spec, outcome)
        })
    }

    #[test]
    fn default_run_reaches_the_known_solution() {
        let (_, outcome) = standard_run();
        let report = &outcome.report;
        assert!(report.certificate_feasible);
        assert!(report.terminal_error.unwrap() <= 1e-5);
        assert!(report.residual <= 1e-6);
        assert_eq!(report.bound_holds, Some(true));
        assert!(report.bound_max_ratio.unwrap() <= 1.0);
        assert!(report.fitted_rate.unwrap() >= report.k);
        assert_eq!(report.matches_enumeration, Some(true));
        assert!((report.inverse_norm.unwrap() - 1.1677075250890088).abs() <= 1e-9);
    }

    #[test]
    fn report_text_round_trips() {
        let (_, outcome) = standard_run();
        let text = outcome.report.to_text();
        let back = RunReport::from_text(&text).unwrap();
        assert_eq!(back, outcome.report);

        // Unknown keys are rejected rather than silently dropped.
        let extra = format!("{text}surprise = 1\n");
        assert!(matches!(
            RunReport::from_text(&extra),
            Err(HarnessError::Parse(_))
        ));
    }

    #[test]
    fn artifacts_are_written_and_reparse() {
        let (spec, outcome) = standard_run();
        let dir = tempfile::tempdir().unwrap();
        write_artifacts(spec, outcome, dir.path()).unwrap();

        let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert_eq!(RunReport::from_text(&summary).unwrap(), outcome.report);

        let cert_text = fs::read_to_string(dir.path().join("certificate.txt")).unwrap();
        let cert = Certificate::from_text(&cert_text).unwrap();
        assert!(!cert.is_mixed());

        let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert_eq!(csv.lines().count(), outcome.trajectory.num_nodes() + 1);
        assert!(csv
            .lines()
            .next()
            .unwrap()
            .starts_with("t,x1,x2,x3,err,res"));

        let plot = fs::read_to_string(dir.path().join("plot.gp")).unwrap();
        assert!(plot.contains("trajectory.csv"));
        assert!(plot.contains("certificate envelope"));
    }

    #[test]
    fn mismatched_certificates_are_rejected() {
        // Wrong model kind.
        let mut spec = load_builtin("ex1-mixed").unwrap().spec();
        spec.certificate =
            CertificateSource::Provided(load_builtin("ex1-discrete").unwrap().certificate);
        assert!(matches!(
            run_experiment(&spec),
            Err(HarnessError::BadSpec(_))
        ));

        // Discrete delay longer than the certificate covers.
        let mut spec = load_builtin("ex3-discrete").unwrap().spec();
        spec.tau1 = 5.0;
        match run_experiment(&spec) {
            Err(HarnessError::BadSpec(msg)) => assert!(msg.contains("search")),
            other => panic!("expected a rejection, got {other:?}"),
        }
    }

    #[test]
    fn searched_certificate_drives_a_run() {
        let mut spec = load_builtin("ex2-discrete").unwrap().spec();
        spec.horizon = 10.0;
        spec.certificate = CertificateSource::Search { seed: 0 };
        let outcome = run_experiment(&spec).unwrap();
        assert!(outcome.report.certificate_feasible);
        assert!(outcome.report.lambda_max < 0.0);
        assert_eq!(outcome.report.bound_holds, Some(true));
    }
}
