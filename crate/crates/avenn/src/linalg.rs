//! Dense linear algebra kernel: row-major matrices and vectors over `f64`.
//!
//! Everything downstream (problem definitions, integrators, certificate
//! assembly) builds on this module. The eigen path is a cyclic Jacobi sweep
//! specialised to symmetric matrices, which is exact enough for the modest
//! dimensions used here (block matrices up to `5n x 5n`) and carries no
//! external dependencies. Linear systems go through LU with partial
//! pivoting, and an independent Cholesky factorisation is provided so that
//! definiteness checks can be cross-validated through two unrelated routes.

use std::fmt;

/// Relative off-diagonal threshold at which the Jacobi sweep stops.
const JACOBI_REL_TOL: f64 = 1e-14;
/// Hard cap on Jacobi sweeps; reached only on pathological input.
const JACOBI_MAX_SWEEPS: usize = 100;
/// A pivot whose magnitude is at most this times `max_abs` flags singularity.
const SINGULAR_REL_TOL: f64 = 1e-12;
/// Relative symmetry defect accepted by definiteness checks.
const SYMMETRY_REL_TOL: f64 = 1e-9;

/// Errors raised by the linear algebra kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Operand shapes are incompatible.
    DimMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    /// A square matrix was required.
    NotSquare { rows: usize, cols: usize },
    /// A constructor received a NaN or infinite entry.
    NonFinite,
    /// A symmetric matrix was required; carries the worst `|a_ij - a_ji|`.
    NotSymmetric { defect: f64 },
    /// The matrix is singular to working precision.
    Singular,
    /// Cholesky hit a non-positive pivot.
    NotPositiveDefinite,
    /// The Jacobi sweep failed to converge (not observed in practice).
    NoConvergence,
    /// Malformed text input.
    Parse(String),
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::DimMismatch { left, right } => {
                write!(
                    f,
                    "dimension mismatch: {}x{} vs {}x{}",
                    left.0, left.1, right.0, right.1
                )
            }
            LinalgError::NotSquare { rows, cols } => {
                write!(f, "square matrix required, got {rows}x{cols}")
            }
            LinalgError::NonFinite => write!(f, "non-finite entry"),
            LinalgError::NotSymmetric { defect } => {
                write!(f, "symmetric matrix required (defect {defect:.3e})")
            }
            LinalgError::Singular => write!(f, "matrix is singular to working precision"),
            LinalgError::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            LinalgError::NoConvergence => write!(f, "eigenvalue iteration did not converge"),
            LinalgError::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for LinalgError {}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from a flat row-major buffer. Rejects length
    /// mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimMismatch {
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from row slices.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Matrix, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Parse("ragged rows".to_string()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Matrix::new(r, c, data)
    }

    /// The `rows x cols` zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// The `n x n` identity.
    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diag(diag: &[f64]) -> Result<Matrix, LinalgError> {
        if diag.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let n = diag.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = diag[i];
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.data[i * self.cols + j] = v;
    }

    /// Flat row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self.data[i * self.cols + k] * other.data[k * other.cols + j];
                }
                out.data[i * other.cols + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &Vector) -> Result<Vector, LinalgError> {
        if self.cols != v.dim() {
            return Err(LinalgError::DimMismatch {
                left: (self.rows, self.cols),
                right: (v.dim(), 1),
            });
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * v.data[k];
            }
            out[i] = acc;
        }
        Ok(Vector { data: out })
    }

    /// Largest absolute entry (the max norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Worst `|a_ij - a_ji|` over all pairs.
    pub fn symmetry_defect(&self) -> Result<f64, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        Ok(worst)
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrized(&self) -> Result<Matrix, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
            }
        }
        Ok(out)
    }

    /// Largest absolute off-diagonal entry.
    pub fn off_diagonal_max(&self) -> Result<f64, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    worst = worst.max(self.data[i * n + j].abs());
                }
            }
        }
        Ok(worst)
    }

    /// The diagonal as a vector. Requires a square matrix.
    pub fn diagonal(&self) -> Result<Vector, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        Ok(Vector {
            data: (0..n).map(|i| self.data[i * n + i]).collect(),
        })
    }

    /// Serialises as a header line `rows cols` followed by one line per row.
    /// Entries are printed with 17 significant digits so parsing is lossless.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:.16e}", self.data[i * self.cols + j]))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the output of [`Matrix::to_text`]. Accepts any whitespace
    /// separation; numbers go through the standard float parser, so the
    /// result is locale independent.
    pub fn from_text(text: &str) -> Result<Matrix, LinalgError> {
        let mut lines = text.lines();
        Matrix::read_from_lines(&mut lines)
    }

    /// Reads one matrix from a line iterator, consuming exactly the header
    /// and `rows` data lines. Blank lines before the header are skipped.
    pub fn read_from_lines<'a>(
        lines: &mut impl Iterator<Item = &'a str>,
    ) -> Result<Matrix, LinalgError> {
        let header = lines
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| LinalgError::Parse("missing matrix header".to_string()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(LinalgError::Parse(format!(
                "expected `rows cols` header, got {header:?}"
            )));
        }
        let rows: usize = dims[0]
            .parse()
            .map_err(|_| LinalgError::Parse(format!("bad row count {:?}", dims[0])))?;
        let cols: usize = dims[1]
            .parse()
            .map_err(|_| LinalgError::Parse(format!("bad column count {:?}", dims[1])))?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| LinalgError::Parse("truncated matrix".to_string()))?;
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != cols {
                return Err(LinalgError::Parse(format!(
                    "expected {cols} entries per row, got {}",
                    entries.len()
                )));
            }
            for e in entries {
                let v: f64 = e
                    .parse()
                    .map_err(|_| LinalgError::Parse(format!("bad number {e:?}")))?;
                data.push(v);
            }
        }
        Matrix::new(rows, cols, data)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

/// Dense vector of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    /// Builds a vector, rejecting non-finite entries.
    pub fn new(data: Vec<f64>) -> Result<Vector, LinalgError> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Vector { data })
    }

    pub fn from_slice(data: &[f64]) -> Result<Vector, LinalgError> {
        Vector::new(data.to_vec())
    }

    pub fn zeros(n: usize) -> Vector {
        Vector { data: vec![0.0; n] }
    }

    pub fn constant(n: usize, v: f64) -> Result<Vector, LinalgError> {
        Vector::new(vec![v; n])
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn add(&self, other: &Vector) -> Result<Vector, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Result<Vector, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimMismatch {
                left: (self.dim(), 1),
                right: (other.dim(), 1),
            });
        }
        Ok(Vector {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector {
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// Componentwise absolute value.
    pub fn abs(&self) -> Vector {
        Vector {
            data: self.data.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn dot(&self, other: &Vector) -> Result<f64, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimMismatch {
                left: (self.dim(), 1),
                right: (other.dim(), 1),
            });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute component.
    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    /// Single whitespace-separated line with 17 significant digits.
    pub fn to_text(&self) -> String {
        let parts: Vec<String> = self.data.iter().map(|v| format!("{v:.16e}")).collect();
        parts.join(" ")
    }

    pub fn from_text(line: &str) -> Result<Vector, LinalgError> {
        let mut data = Vec::new();
        for e in line.split_whitespace() {
            let v: f64 = e
                .parse()
                .map_err(|_| LinalgError::Parse(format!("bad number {e:?}")))?;
            data.push(v);
        }
        Vector::new(data)
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues in ascending order.
    pub values: Vector,
    /// Orthonormal eigenvectors as columns, in the same order.
    pub vectors: Matrix,
    /// Worst `|a_ij - a_ji|` of the input before symmetrisation.
    pub symmetry_defect: f64,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.values.get(0)
    }

    pub fn max(&self) -> f64 {
        self.values.get(self.values.dim() - 1)
    }
}

/// Full eigendecomposition of `(S + S^T)/2` by cyclic Jacobi rotations.
///
/// The sweep stops once the off-diagonal Frobenius mass drops below
/// `1e-14` times the Frobenius norm of the input.
pub fn sym_eig(s: &Matrix) -> Result<SymEig, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::NotSquare {
            rows: s.rows,
            cols: s.cols,
        });
    }
    let n = s.rows;
    let defect = s.symmetry_defect()?;
    let mut a = s.symmetrized()?;
    let mut v = Matrix::identity(n);
    let fro = a.frobenius_norm();
    if n == 0 {
        return Ok(SymEig {
            values: Vector::zeros(0),
            vectors: v,
            symmetry_defect: defect,
        });
    }
    if fro == 0.0 {
        return Ok(SymEig {
            values: Vector::zeros(n),
            vectors: v,
            symmetry_defect: defect,
        });
    }
    let target = JACOBI_REL_TOL * fro;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.data[p * n + q] * a.data[p * n + q];
            }
        }
        if (2.0 * off).sqrt() <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.data[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a.data[p * n + p];
                let aqq = a.data[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let si = t * c;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a.data[i * n + p];
                        let aiq = a.data[i * n + q];
                        a.data[i * n + p] = c * aip - si * aiq;
                        a.data[p * n + i] = a.data[i * n + p];
                        a.data[i * n + q] = si * aip + c * aiq;
                        a.data[q * n + i] = a.data[i * n + q];
                    }
                }
                a.data[p * n + p] = app - t * apq;
                a.data[q * n + q] = aqq + t * apq;
                a.data[p * n + q] = 0.0;
                a.data[q * n + p] = 0.0;
                for i in 0..n {
                    let vip = v.data[i * n + p];
                    let viq = v.data[i * n + q];
                    v.data[i * n + p] = c * vip - si * viq;
                    v.data[i * n + q] = si * vip + c * viq;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.data[i * n + i]
            .partial_cmp(&a.data[j * n + j])
            .expect("eigenvalues are finite")
    });
    let values = Vector {
        data: order.iter().map(|&i| a.data[i * n + i]).collect(),
    };
    let mut vectors = Matrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vectors.data[i * n + new_col] = v.data[i * n + old_col];
        }
    }
    Ok(SymEig {
        values,
        vectors,
        symmetry_defect: defect,
    })
}

/// Whether the symmetric matrix `s` satisfies `lambda_max(s) < -tol`.
///
/// Asymmetric input (relative defect above `1e-9`) is rejected rather than
/// silently symmetrised, because definiteness of a lopsided matrix is a
/// modelling bug upstream.
pub fn is_negative_definite(s: &Matrix, tol: f64) -> Result<bool, LinalgError> {
    let defect = s.symmetry_defect()?;
    let scale = s.max_abs();
    if defect > SYMMETRY_REL_TOL * scale.max(1.0) {
        return Err(LinalgError::NotSymmetric { defect });
    }
    let eig = sym_eig(s)?;
    Ok(eig.max() < -tol)
}

/// Spectral norm `sqrt(lambda_max(M^T M))`.
pub fn spectral_norm(m: &Matrix) -> Result<f64, LinalgError> {
    let mtm = m.transpose().matmul(m)?;
    let eig = sym_eig(&mtm)?;
    Ok(eig.max().max(0.0).sqrt())
}

/// Solves `M x = rhs` by LU with partial pivoting.
///
/// A pivot of magnitude at most `1e-12 * max_abs(M)` reports
/// [`LinalgError::Singular`]; the comparison is inclusive so the zero
/// matrix is singular as well.
pub fn solve_linear(m: &Matrix, rhs: &Vector) -> Result<Vector, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    if rhs.dim() != n {
        return Err(LinalgError::DimMismatch {
            left: (n, n),
            right: (rhs.dim(), 1),
        });
    }
    let threshold = SINGULAR_REL_TOL * m.max_abs();
    let mut a = m.data.clone();
    let mut x = rhs.data.clone();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = a[col * n + col].abs();
        for r in (col + 1)..n {
            let mag = a[r * n + col].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag <= threshold {
            return Err(LinalgError::Singular);
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in (col + 1)..n {
            let factor = a[r * n + col] / pivot;
            if factor != 0.0 {
                for j in (col + 1)..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
                x[r] -= factor * x[col];
            }
            a[r * n + col] = 0.0;
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for j in (col + 1)..n {
            acc -= a[col * n + j] * x[j];
        }
        x[col] = acc / a[col * n + col];
    }
    Vector::new(x)
}

/// Inverse via `n` solves against the identity columns.
pub fn invert(m: &Matrix) -> Result<Matrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = Vector::zeros(n);
        e.set(j, 1.0);
        let col = solve_linear(m, &e)?;
        for i in 0..n {
            out.data[i * n + j] = col.get(i);
        }
    }
    Ok(out)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite
/// matrix. Only the lower triangle of the input is read. Serves as the
/// second, independent route for definiteness questions next to
/// [`sym_eig`].
pub fn cholesky(s: &Matrix) -> Result<Matrix, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::NotSquare {
            rows: s.rows,
            cols: s.cols,
        });
    }
    let n = s.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = s.data[j * n + j];
        for k in 0..j {
            d -= l.data[j * n + k] * l.data[j * n + k];
        }
        if d <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite);
        }
        let ljj = d.sqrt();
        l.data[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut acc = s.data[i * n + j];
            for k in 0..j {
                acc -= l.data[i * n + k] * l.data[j * n + k];
            }
            l.data[i * n + j] = acc / ljj;
        }
    }
    Ok(l)
}

/// Determinants of the leading principal submatrices, sizes `1..=n`.
///
/// Each determinant comes from a fresh partially pivoted LU of the
/// corresponding top-left block; an exactly singular block yields `0`.
pub fn leading_principal_minors(m: &Matrix) -> Result<Vec<f64>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let mut minors = Vec::with_capacity(n);
    for k in 1..=n {
        let mut a = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                a[i * k + j] = m.data[i * m.cols + j];
            }
        }
        let mut det = 1.0;
        'lu: for col in 0..k {
            let mut pivot_row = col;
            let mut pivot_mag = a[col * k + col].abs();
            for r in (col + 1)..k {
                let mag = a[r * k + col].abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if pivot_mag == 0.0 {
                det = 0.0;
                break 'lu;
            }
            if pivot_row != col {
                for j in 0..k {
                    a.swap(col * k + j, pivot_row * k + j);
                }
                det = -det;
            }
            let pivot = a[col * k + col];
            det *= pivot;
            for r in (col + 1)..k {
                let factor = a[r * k + col] / pivot;
                if factor != 0.0 {
                    for j in (col + 1)..k {
                        a[r * k + j] -= factor * a[col * k + j];
                    }
                }
            }
        }
        minors.push(det);
    }
    Ok(minors)
}
