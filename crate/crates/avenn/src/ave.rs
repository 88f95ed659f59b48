//! Absolute value equations `A x - |x| - b = 0` and their complementarity
//! reformulations.
//!
//! The same root is described three ways: the plain residual, a generalized
//! linear complementarity pair `Q(x) = Ax + x - b`, `F(x) = Ax - x - b`,
//! and a projection equation `Q(x) = P[Q(x) - F(x)] = P[2x]` onto the
//! nonnegative orthant. All three agree on solutions, and the projection
//! form is what the delayed dynamics in [`crate::models`] are built from.
//!
//! A brute-force sign-enumeration oracle is included: fixing the sign
//! pattern `s` of `x` turns the equation into the linear system
//! `(A - diag(s)) x = b`, so walking all `2^n` patterns finds every
//! isolated solution and flags the patterns whose linear system is
//! singular (those carry affine solution families, if any).

use crate::linalg::{self, LinalgError, Matrix, Vector};
use std::fmt;

/// Enumeration refuses problems larger than this; the pattern walk is
/// exponential in the dimension.
pub const MAX_ENUM_DIM: usize = 20;

/// Errors raised while constructing or interrogating a problem.
#[derive(Debug, Clone, PartialEq)]
pub enum AveError {
    /// `A` must be square and match the length of `b`.
    Shape {
        rows: usize,
        cols: usize,
        rhs: usize,
    },
    /// A point has the wrong dimension for this problem.
    DimMismatch { expected: usize, got: usize },
    /// A tolerance must be finite and nonnegative.
    BadTolerance(f64),
    /// Enumeration refused: dimension exceeds [`MAX_ENUM_DIM`].
    DimensionTooLarge { dim: usize, max: usize },
    /// Underlying linear algebra failure.
    Linalg(LinalgError),
    /// Malformed problem file.
    Parse(String),
}

impl fmt::Display for AveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AveError::Shape { rows, cols, rhs } => write!(
                f,
                "need square A with matching rhs, got A {rows}x{cols} and b of length {rhs}"
            ),
            AveError::DimMismatch { expected, got } => {
                write!(f, "expected a point of dimension {expected}, got {got}")
            }
            AveError::BadTolerance(t) => write!(f, "tolerance must be >= 0 and finite, got {t}"),
            AveError::DimensionTooLarge { dim, max } => {
                write!(f, "enumeration limited to dimension {max}, got {dim}")
            }
            AveError::Linalg(e) => write!(f, "{e}"),
            AveError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for AveError {}

impl From<LinalgError> for AveError {
    fn from(e: LinalgError) -> AveError {
        AveError::Linalg(e)
    }
}

/// Componentwise projection onto the nonnegative orthant.
pub fn project_nonneg(x: &Vector) -> Vector {
    let data: Vec<f64> = x.as_slice().iter().map(|v| v.max(0.0)).collect();
    Vector::new(data).expect("projection preserves finiteness")
}

/// The absolute value equation `A x - |x| - b = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveProblem {
    a: Matrix,
    b: Vector,
}

impl AveProblem {
    /// Requires square `A` with `b` of matching length. A zero right-hand
    /// side is allowed (it admits the trivial solution `x = 0`); callers
    /// that care can ask [`AveProblem::has_zero_rhs`].
    pub fn new(a: Matrix, b: Vector) -> Result<AveProblem, AveError> {
        if !a.is_square() || a.rows() != b.dim() {
            return Err(AveError::Shape {
                rows: a.rows(),
                cols: a.cols(),
                rhs: b.dim(),
            });
        }
        Ok(AveProblem { a, b })
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    pub fn has_zero_rhs(&self) -> bool {
        self.b.as_slice().iter().all(|v| *v == 0.0)
    }

    fn check_dim(&self, x: &Vector) -> Result<(), AveError> {
        if x.dim() != self.dim() {
            return Err(AveError::DimMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// `A x - |x| - b`.
    pub fn residual(&self, x: &Vector) -> Result<Vector, AveError> {
        self.check_dim(x)?;
        let ax = self.a.mul_vec(x)?;
        Ok(ax.sub(&x.abs())?.sub(&self.b)?)
    }

    /// Euclidean norm of the residual.
    pub fn residual_norm(&self, x: &Vector) -> Result<f64, AveError> {
        Ok(self.residual(x)?.norm())
    }

    /// The complementarity pair `(Q(x), F(x)) = (Ax + x - b, Ax - x - b)`.
    pub fn glcp_parts(&self, x: &Vector) -> Result<(Vector, Vector), AveError> {
        self.check_dim(x)?;
        let ax = self.a.mul_vec(x)?;
        let q = ax.add(x)?.sub(&self.b)?;
        let f = ax.sub(x)?.sub(&self.b)?;
        Ok((q, f))
    }

    /// Residual of the projection equation `Q(x) - P[2x]`, which vanishes
    /// exactly on solutions.
    pub fn projection_residual(&self, x: &Vector) -> Result<Vector, AveError> {
        self.check_dim(x)?;
        let ax = self.a.mul_vec(x)?;
        let q = ax.add(x)?.sub(&self.b)?;
        Ok(q.sub(&project_nonneg(&x.scale(2.0)))?)
    }

    /// Whether `||A x - |x| - b|| <= tol`.
    pub fn verify_solution(&self, x: &Vector, tol: f64) -> Result<bool, AveError> {
        if !tol.is_finite() || tol < 0.0 {
            return Err(AveError::BadTolerance(tol));
        }
        Ok(self.residual_norm(x)? <= tol)
    }

    /// Spectral norm of `A^{-1}`; errors if `A` is singular.
    pub fn inverse_norm(&self) -> Result<f64, AveError> {
        let inv = linalg::invert(&self.a)?;
        Ok(linalg::spectral_norm(&inv)?)
    }

    /// Problem file: the matrix in text form followed by one line with `b`.
    pub fn to_text(&self) -> String {
        format!("{}{}\n", self.a.to_text(), self.b.to_text())
    }

    pub fn from_text(text: &str) -> Result<AveProblem, AveError> {
        let mut lines = text.lines();
        let a = Matrix::read_from_lines(&mut lines)?;
        let b_line = lines
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| AveError::Parse("missing right-hand side line".to_string()))?;
        let b = Vector::from_text(b_line)?;
        AveProblem::new(a, b)
    }
}

/// Outcome of the sign-pattern walk.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    isolated: Vec<Vector>,
    singular_patterns: Vec<Vec<i8>>,
}

impl SolutionReport {
    /// Isolated solutions, deduplicated, in pattern order.
    pub fn isolated_solutions(&self) -> &[Vector] {
        &self.isolated
    }

    /// Sign patterns whose linear system was singular. Any affine solution
    /// family of the equation lives inside one of these patterns.
    pub fn singular_patterns(&self) -> &[Vec<i8>] {
        &self.singular_patterns
    }

    /// Whether `x` matches the enumeration: within `tol` of an isolated
    /// solution, or sign-consistent with a singular pattern while solving
    /// its linear system to `tol` (i.e. a member of that family).
    pub fn matches(&self, prob: &AveProblem, x: &Vector, tol: f64) -> Result<bool, AveError> {
        if !tol.is_finite() || tol < 0.0 {
            return Err(AveError::BadTolerance(tol));
        }
        prob.check_dim(x)?;
        for sol in &self.isolated {
            if x.sub(sol)?.norm() <= tol {
                return Ok(true);
            }
        }
        for pattern in &self.singular_patterns {
            let consistent = (0..x.dim()).all(|i| f64::from(pattern[i]) * x.get(i) >= -tol);
            if !consistent {
                continue;
            }
            let m = pattern_matrix(prob.matrix(), pattern);
            let residual = m.mul_vec(x)?.sub(prob.rhs())?.norm();
            if residual <= tol {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

fn pattern_matrix(a: &Matrix, pattern: &[i8]) -> Matrix {
    let n = a.rows();
    let mut m = a.clone();
    for i in 0..n {
        m.set(i, i, m.get(i, i) - f64::from(pattern[i]));
    }
    m
}

/// Walks all `2^n` sign patterns. For each pattern `s`, solves
/// `(A - diag(s)) x = b`; the candidate is kept when it is sign-consistent
/// (`s_i x_i >= -tol`) and its equation residual is within `tol`.
/// Duplicate candidates within distance `tol` collapse to the first hit.
/// Patterns with a singular linear system are reported separately rather
/// than solved.
pub fn enumerate_solutions(prob: &AveProblem, tol: f64) -> Result<SolutionReport, AveError> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(AveError::BadTolerance(tol));
    }
    let n = prob.dim();
    if n > MAX_ENUM_DIM {
        return Err(AveError::DimensionTooLarge {
            dim: n,
            max: MAX_ENUM_DIM,
        });
    }
    let mut isolated: Vec<Vector> = Vec::new();
    let mut singular: Vec<Vec<i8>> = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let pattern: Vec<i8> = (0..n)
            .map(|i| if mask & (1 << i) != 0 { 1 } else { -1 })
            .collect();
        let m = pattern_matrix(prob.matrix(), &pattern);
        let x = match linalg::solve_linear(&m, prob.rhs()) {
            Ok(x) => x,
            Err(LinalgError::Singular) => {
                singular.push(pattern);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let consistent = (0..n).all(|i| f64::from(pattern[i]) * x.get(i) >= -tol);
        if !consistent {
            continue;
        }
        if prob.residual_norm(&x)? > tol {
            continue;
        }
        let duplicate = isolated
            .iter()
            .any(|y| x.sub(y).map(|d| d.norm() <= tol).unwrap_or(false));
        if !duplicate {
            isolated.push(x);
        }
    }
    Ok(SolutionReport {
        isolated,
        singular_patterns: singular,
    })
}
