//! Certificates of exponential convergence for the delayed models.
//!
//! A mixed-model certificate is a tuple `(P, Q, H, D, T1, T2, k)` whose
//! associated `5n x 5n` block matrix is negative definite; a
//! discrete-model certificate is `(P, Q, D, k)` with a `3n x 3n` block
//! matrix. Feasibility implies the envelope
//!
//! ```text
//! ||x(t) - x*|| <= gamma * sup ||phi - x*|| * exp(-k t)
//! ```
//!
//! with the factor `gamma` computed in [`MixedCertificate::gamma`] /
//! [`DiscreteCertificate::gamma`]. Besides assembling and verifying
//! certificates, this module checks trajectories against their envelope
//! ([`exponential_bound_check`]), reduces all-diagonal data to
//! independent per-coordinate blocks, and searches for feasible
//! certificates by projected subgradient descent on the largest
//! eigenvalue.

use crate::dde::DenseTrajectory;
use crate::linalg::{self, LinalgError, Matrix, Vector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Symmetry slack accepted by certificate constructors, relative to the
/// largest entry.
const CERT_SYMMETRY_TOL: f64 = 1e-8;

/// Relative off-diagonal slack accepted by the per-coordinate reduction
/// and by the diagonal-weight parser.
const DIAGONAL_TOL: f64 = 1e-12;

/// Eigenvalues within this distance of the largest are treated as tied
/// by the subgradient search.
const TIE_TOL: f64 = 1e-9;

/// Minimum number of samples of the initial function used when taking
/// the supremum for the envelope bound.
const SUP_SAMPLES: usize = 1000;

/// Errors raised by certificate handling.
#[derive(Debug, Clone, PartialEq)]
pub enum LmiError {
    BadParameter(String),
    Shape(String),
    NotSymmetric(String),
    NotDiagonal(String),
    /// The initial function already sits on the equilibrium, so the
    /// envelope degenerates to zero and no ratio can be formed.
    DegenerateHistory,
    Parse(String),
    Linalg(LinalgError),
}

impl fmt::Display for LmiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LmiError::BadParameter(msg) => write!(f, "bad parameter: {msg}"),
            LmiError::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            LmiError::NotSymmetric(msg) => write!(f, "not symmetric: {msg}"),
            LmiError::NotDiagonal(msg) => write!(f, "not diagonal: {msg}"),
            LmiError::DegenerateHistory => write!(
                f,
                "the initial function coincides with the equilibrium; the envelope is degenerate"
            ),
            LmiError::Parse(msg) => write!(f, "certificate parse error: {msg}"),
            LmiError::Linalg(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for LmiError {}

impl From<LinalgError> for LmiError {
    fn from(e: LinalgError) -> LmiError {
        LmiError::Linalg(e)
    }
}

fn check_square(name: &str, m: &Matrix, n: usize) -> Result<(), LmiError> {
    if m.rows() != n || m.cols() != n {
        return Err(LmiError::Shape(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn check_symmetric(name: &str, m: &Matrix) -> Result<Matrix, LmiError> {
    let defect = m.symmetry_defect()?;
    if defect > CERT_SYMMETRY_TOL * (1.0 + m.max_abs()) {
        return Err(LmiError::NotSymmetric(format!(
            "{name} has symmetry defect {defect:.3e}"
        )));
    }
    Ok(m.symmetrized()?)
}

fn check_diagonal(name: &str, m: &Matrix) -> Result<(), LmiError> {
    let off = m.off_diagonal_max()?;
    if off > DIAGONAL_TOL * (1.0 + m.max_abs()) {
        return Err(LmiError::NotDiagonal(format!(
            "{name} has off-diagonal magnitude {off:.3e}"
        )));
    }
    Ok(())
}

fn check_rate(k: f64) -> Result<(), LmiError> {
    if !k.is_finite() || k <= 0.0 {
        return Err(LmiError::BadParameter(format!(
            "decay rate k must be positive and finite, got {k}"
        )));
    }
    Ok(())
}

fn check_delay(name: &str, value: f64, strictly_positive: bool) -> Result<(), LmiError> {
    let bad = !value.is_finite() || value < 0.0 || (strictly_positive && value == 0.0);
    if bad {
        return Err(LmiError::BadParameter(format!(
            "delay {name} = {value} is invalid"
        )));
    }
    Ok(())
}

/// Certificate for the mixed-delay model.
#[derive(Debug, Clone)]
pub struct MixedCertificate {
    p: Matrix,
    q: Matrix,
    h: Matrix,
    d: Vector,
    t1: Matrix,
    t2: Matrix,
    k: f64,
    tau1: f64,
    tau2: f64,
}

/// Certificate for the discrete-delay model.
#[derive(Debug, Clone)]
pub struct DiscreteCertificate {
    p: Matrix,
    q: Matrix,
    d: Vector,
    k: f64,
    tau1: f64,
}

/// A certificate of either kind, as produced by the file parser.
#[derive(Debug, Clone)]
pub enum Certificate {
    Mixed(MixedCertificate),
    Discrete(DiscreteCertificate),
}

/// Verification summary: the largest eigenvalue of the block matrix and
/// the positive-definiteness margins of the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub feasible: bool,
    pub lambda_max: f64,
    /// Smallest eigenvalue of `P`.
    pub p_margin: f64,
    /// Smallest eigenvalue of `Q`.
    pub q_margin: f64,
    /// Smallest eigenvalue of `H` (mixed model only).
    pub h_margin: Option<f64>,
    /// Smallest diagonal weight.
    pub d_margin: f64,
}

impl CertificateReport {
    pub fn margins_positive(&self) -> bool {
        self.p_margin > 0.0
            && self.q_margin > 0.0
            && self.h_margin.map_or(true, |m| m > 0.0)
            && self.d_margin > 0.0
    }
}

impl MixedCertificate {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        p: Matrix,
        q: Matrix,
        h: Matrix,
        d: Vector,
        t1: Matrix,
        t2: Matrix,
        k: f64,
        tau1: f64,
        tau2: f64,
    ) -> Result<MixedCertificate, LmiError> {
        let n = p.rows();
        check_square("P", &p, n)?;
        check_square("Q", &q, n)?;
        check_square("H", &h, n)?;
        check_square("T1", &t1, n)?;
        check_square("T2", &t2, n)?;
        if d.dim() != n {
            return Err(LmiError::Shape(format!(
                "D has {} weights, expected {n}",
                d.dim()
            )));
        }
        check_rate(k)?;
        check_delay("tau1", tau1, false)?;
        check_delay("tau2", tau2, true)?;
        // Symmetrize the stored weights so that the assembled block
        // matrix is exactly symmetric.
        let p = check_symmetric("P", &p)?;
        let q = check_symmetric("Q", &q)?;
        let h = check_symmetric("H", &h)?;
        Ok(MixedCertificate {
            p,
            q,
            h,
            d,
            t1,
            t2,
            k,
            tau1,
            tau2,
        })
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn d(&self) -> &Vector {
        &self.d
    }

    pub fn t1(&self) -> &Matrix {
        &self.t1
    }

    pub fn t2(&self) -> &Matrix {
        &self.t2
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    /// Verifies the certificate against the equation matrix: the block
    /// matrix must be negative definite with margin `tol` and every
    /// weight positive definite.
    pub fn verify(&self, a: &Matrix, tol: f64) -> Result<CertificateReport, LmiError> {
        if !tol.is_finite() || tol < 0.0 {
            return Err(LmiError::BadParameter(format!(
                "verification tolerance {tol} is invalid"
            )));
        }
        let pi = assemble_pi(a, self)?;
        let lambda_max = linalg::sym_eig(&pi)?.max();
        let p_margin = linalg::sym_eig(&self.p)?.min();
        let q_margin = linalg::sym_eig(&self.q)?.min();
        let h_margin = linalg::sym_eig(&self.h)?.min();
        let d_margin = self.d.min_entry();
        let report = CertificateReport {
            feasible: false,
            lambda_max,
            p_margin,
            q_margin,
            h_margin: Some(h_margin),
            d_margin,
        };
        let feasible = lambda_max < -tol && report.margins_positive();
        Ok(CertificateReport { feasible, ..report })
    }

    /// The envelope factor `gamma >= 1` of the exponential bound.
    pub fn gamma(&self) -> Result<f64, LmiError> {
        let p_eigs = linalg::sym_eig(&self.p)?;
        let p_min = p_eigs.min();
        if p_min <= 0.0 {
            return Err(LmiError::BadParameter(
                "P must be positive definite to form the envelope factor".to_string(),
            ));
        }
        let q_max = linalg::sym_eig(&self.q)?.max();
        let h_max = linalg::sym_eig(&self.h)?.max();
        let c_q = (1.0 - (-2.0 * self.k * self.tau1).exp()) / (2.0 * self.k);
        let c_h = (2.0 * self.k * self.tau2 - 1.0 + (-2.0 * self.k * self.tau2).exp())
            / (4.0 * self.k * self.k);
        let num = p_eigs.max() + c_q * q_max + 2.0 * self.d.max_entry() + c_h * h_max;
        Ok((num / p_min).sqrt())
    }

    /// Plain-text form; [`Certificate::from_text`] reads it back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("k = {:.16e}\n", self.k));
        out.push_str(&format!("tau1 = {:.16e}\n", self.tau1));
        out.push_str(&format!("tau2 = {:.16e}\n", self.tau2));
        for (name, m) in [
            ("P", &self.p),
            ("Q", &self.q),
            ("H", &self.h),
            ("D", &diag_matrix(&self.d)),
            ("T1", &self.t1),
            ("T2", &self.t2),
        ] {
            out.push_str(name);
            out.push('\n');
            out.push_str(&m.to_text());
        }
        out
    }
}

impl DiscreteCertificate {
    pub fn new(
        p: Matrix,
        q: Matrix,
        d: Vector,
        k: f64,
        tau1: f64,
    ) -> Result<DiscreteCertificate, LmiError> {
        let n = p.rows();
        check_square("P", &p, n)?;
        check_square("Q", &q, n)?;
        if d.dim() != n {
            return Err(LmiError::Shape(format!(
                "D has {} weights, expected {n}",
                d.dim()
            )));
        }
        check_rate(k)?;
        check_delay("tau1", tau1, false)?;
        let p = check_symmetric("P", &p)?;
        let q = check_symmetric("Q", &q)?;
        Ok(DiscreteCertificate { p, q, d, k, tau1 })
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn d(&self) -> &Vector {
        &self.d
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    /// See [`MixedCertificate::verify`].
    pub fn verify(&self, a: &Matrix, tol: f64) -> Result<CertificateReport, LmiError> {
        if !tol.is_finite() || tol < 0.0 {
            return Err(LmiError::BadParameter(format!(
                "verification tolerance {tol} is invalid"
            )));
        }
        let r = assemble_r(a, self)?;
        let lambda_max = linalg::sym_eig(&r)?.max();
        let p_margin = linalg::sym_eig(&self.p)?.min();
        let q_margin = linalg::sym_eig(&self.q)?.min();
        let d_margin = self.d.min_entry();
        let report = CertificateReport {
            feasible: false,
            lambda_max,
            p_margin,
            q_margin,
            h_margin: None,
            d_margin,
        };
        let feasible = lambda_max < -tol && report.margins_positive();
        Ok(CertificateReport { feasible, ..report })
    }

    /// Envelope factor with the distributed-delay contribution absent.
    pub fn gamma(&self) -> Result<f64, LmiError> {
        let p_eigs = linalg::sym_eig(&self.p)?;
        let p_min = p_eigs.min();
        if p_min <= 0.0 {
            return Err(LmiError::BadParameter(
                "P must be positive definite to form the envelope factor".to_string(),
            ));
        }
        let q_max = linalg::sym_eig(&self.q)?.max();
        let c_q = (1.0 - (-2.0 * self.k * self.tau1).exp()) / (2.0 * self.k);
        let num = p_eigs.max() + c_q * q_max + 2.0 * self.d.max_entry();
        Ok((num / p_min).sqrt())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("k = {:.16e}\n", self.k));
        out.push_str(&format!("tau1 = {:.16e}\n", self.tau1));
        for (name, m) in [("P", &self.p), ("Q", &self.q), ("D", &diag_matrix(&self.d))] {
            out.push_str(name);
            out.push('\n');
            out.push_str(&m.to_text());
        }
        out
    }
}

impl Certificate {
    pub fn dim(&self) -> usize {
        match self {
            Certificate::Mixed(c) => c.dim(),
            Certificate::Discrete(c) => c.dim(),
        }
    }

    pub fn k(&self) -> f64 {
        match self {
            Certificate::Mixed(c) => c.k(),
            Certificate::Discrete(c) => c.k(),
        }
    }

    pub fn tau1(&self) -> f64 {
        match self {
            Certificate::Mixed(c) => c.tau1(),
            Certificate::Discrete(c) => c.tau1(),
        }
    }

    pub fn tau2(&self) -> Option<f64> {
        match self {
            Certificate::Mixed(c) => Some(c.tau2()),
            Certificate::Discrete(_) => None,
        }
    }

    pub fn is_mixed(&self) -> bool {
        matches!(self, Certificate::Mixed(_))
    }

    pub fn verify(&self, a: &Matrix, tol: f64) -> Result<CertificateReport, LmiError> {
        match self {
            Certificate::Mixed(c) => c.verify(a, tol),
            Certificate::Discrete(c) => c.verify(a, tol),
        }
    }

    pub fn gamma(&self) -> Result<f64, LmiError> {
        match self {
            Certificate::Mixed(c) => c.gamma(),
            Certificate::Discrete(c) => c.gamma(),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Certificate::Mixed(c) => c.to_text(),
            Certificate::Discrete(c) => c.to_text(),
        }
    }

    /// Parses the plain-text form: `k = `, `tau1 = ` (and `tau2 = ` for
    /// the mixed kind) followed by named matrix sections `P`, `Q`, `D`
    /// (and `H`, `T1`, `T2`). Section order is free; `D` must be
    /// diagonal.
    pub fn from_text(text: &str) -> Result<Certificate, LmiError> {
        let mut k = None;
        let mut tau1 = None;
        let mut tau2 = None;
        let mut sections: Vec<(String, Matrix)> = Vec::new();
        let mut lines = text.lines();
        while let Some(raw) = lines.next() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| LmiError::Parse(format!("bad numeric value in line {line:?}")))?;
                match key.trim() {
                    "k" => k = Some(value),
                    "tau1" => tau1 = Some(value),
                    "tau2" => tau2 = Some(value),
                    other => {
                        return Err(LmiError::Parse(format!("unknown scalar {other:?}")));
                    }
                }
            } else {
                let name = line.to_string();
                if !matches!(name.as_str(), "P" | "Q" | "H" | "D" | "T1" | "T2") {
                    return Err(LmiError::Parse(format!("unknown section {name:?}")));
                }
                if sections.iter().any(|(n, _)| *n == name) {
                    return Err(LmiError::Parse(format!("duplicate section {name:?}")));
                }
                let m = Matrix::read_from_lines(&mut lines)
                    .map_err(|e| LmiError::Parse(format!("section {name}: {e}")))?;
                sections.push((name, m));
            }
        }
        let take = |name: &str| -> Option<Matrix> {
            sections
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, m)| m.clone())
        };
        let k = k.ok_or_else(|| LmiError::Parse("missing k".to_string()))?;
        let tau1 = tau1.ok_or_else(|| LmiError::Parse("missing tau1".to_string()))?;
        let p = take("P").ok_or_else(|| LmiError::Parse("missing section P".to_string()))?;
        let q = take("Q").ok_or_else(|| LmiError::Parse("missing section Q".to_string()))?;
        let d_mat = take("D").ok_or_else(|| LmiError::Parse("missing section D".to_string()))?;
        check_diagonal("D", &d_mat)?;
        let d = d_mat.diagonal()?;
        let mixed_parts = (take("H"), take("T1"), take("T2"), tau2);
        match mixed_parts {
            (Some(h), Some(t1), Some(t2), Some(tau2)) => Ok(Certificate::Mixed(
                MixedCertificate::new(p, q, h, d, t1, t2, k, tau1, tau2)?,
            )),
            (None, None, None, None) => Ok(Certificate::Discrete(DiscreteCertificate::new(
                p, q, d, k, tau1,
            )?)),
            _ => Err(LmiError::Parse(
                "mixed certificates need all of H, T1, T2 and tau2; discrete ones none of them"
                    .to_string(),
            )),
        }
    }
}

fn diag_matrix(d: &Vector) -> Matrix {
    Matrix::from_diag(d.as_slice()).expect("weights are finite")
}

fn place(target: &mut Matrix, n: usize, block_row: usize, block_col: usize, block: &Matrix) {
    for i in 0..n {
        for j in 0..n {
            target.set(block_row * n + i, block_col * n + j, block[(i, j)]);
        }
    }
}

fn place_pair(target: &mut Matrix, n: usize, block_row: usize, block_col: usize, block: &Matrix) {
    place(target, n, block_row, block_col, block);
    place(target, n, block_col, block_row, &block.transpose());
}

#[allow(clippy::too_many_arguments)]
fn assemble_pi_parts(
    a: &Matrix,
    p: &Matrix,
    q: &Matrix,
    h: &Matrix,
    d: &Vector,
    t1: &Matrix,
    t2: &Matrix,
    k: f64,
    tau1: f64,
    tau2: f64,
) -> Result<Matrix, LmiError> {
    let n = a.rows();
    if !a.is_square() {
        return Err(LmiError::Shape(format!(
            "equation matrix is {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    check_square("P", p, n)?;
    check_square("Q", q, n)?;
    check_square("H", h, n)?;
    check_square("T1", t1, n)?;
    check_square("T2", t2, n)?;
    if d.dim() != n {
        return Err(LmiError::Shape(format!(
            "D has {} weights, expected {n}",
            d.dim()
        )));
    }
    check_rate(k)?;
    check_delay("tau1", tau1, false)?;
    check_delay("tau2", tau2, true)?;

    let at = a.transpose();
    let b = a.add(&Matrix::identity(n).scale(2.0 + tau2))?;
    let bt = b.transpose();
    let dm = diag_matrix(d);
    let t1t = t1.transpose();
    let t2t = t2.transpose();
    let e1 = (-2.0 * k * tau1).exp();
    let e2 = (-2.0 * k * tau2).exp();

    let c00 = 2.0 * k - 4.0 - 2.0 * tau2;
    let b00 = p
        .scale(c00)
        .sub(&at.matmul(p)?)?
        .sub(&p.matmul(a)?)?
        .add(q)?
        .add(&h.scale(tau2))?;
    let b01 = p.clone();
    let b02 = p
        .add(&dm.scale(2.0 * k))?
        .sub(&at.matmul(&dm)?)?
        .sub(&dm.scale(tau2))?
        .sub(&bt.matmul(&t2t)?)?;
    let b03 = bt.matmul(&t1t)?.scale(-1.0);
    let b04 = p.clone();
    let b11 = q.scale(-e1);
    let b12 = dm.add(&t2t)?;
    let b13 = t1t.clone();
    let b22 = dm.scale(-2.0).add(t2)?.add(&t2t)?;
    let b23 = t1t.sub(t2)?;
    let b24 = t2.add(&dm)?;
    let b33 = t1.scale(-1.0).sub(&t1t)?;
    let b34 = t1.clone();
    let b44 = h.scale(-(e2 / tau2));

    let mut pi = Matrix::zeros(5 * n, 5 * n);
    place(&mut pi, n, 0, 0, &b00);
    place_pair(&mut pi, n, 0, 1, &b01);
    place_pair(&mut pi, n, 0, 2, &b02);
    place_pair(&mut pi, n, 0, 3, &b03);
    place_pair(&mut pi, n, 0, 4, &b04);
    place(&mut pi, n, 1, 1, &b11);
    place_pair(&mut pi, n, 1, 2, &b12);
    place_pair(&mut pi, n, 1, 3, &b13);
    place(&mut pi, n, 2, 2, &b22);
    place_pair(&mut pi, n, 2, 3, &b23);
    place_pair(&mut pi, n, 2, 4, &b24);
    place(&mut pi, n, 3, 3, &b33);
    place_pair(&mut pi, n, 3, 4, &b34);
    place(&mut pi, n, 4, 4, &b44);
    Ok(pi)
}

fn assemble_r_parts(
    a: &Matrix,
    p: &Matrix,
    q: &Matrix,
    d: &Vector,
    k: f64,
    tau1: f64,
) -> Result<Matrix, LmiError> {
    let n = a.rows();
    if !a.is_square() {
        return Err(LmiError::Shape(format!(
            "equation matrix is {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    check_square("P", p, n)?;
    check_square("Q", q, n)?;
    if d.dim() != n {
        return Err(LmiError::Shape(format!(
            "D has {} weights, expected {n}",
            d.dim()
        )));
    }
    check_rate(k)?;
    check_delay("tau1", tau1, false)?;

    let at = a.transpose();
    let dm = diag_matrix(d);
    let e1 = (-2.0 * k * tau1).exp();

    let r00 = p
        .scale(2.0 * k)
        .sub(&at.matmul(p)?)?
        .sub(&p.matmul(a)?)?
        .sub(&p.scale(4.0))?
        .add(q)?;
    let r01 = p.sub(&dm.matmul(&at)?)?.add(&dm.scale(2.0 * k))?;
    let r02 = p.clone();
    let r11 = dm.scale(-2.0);
    let r12 = dm.clone();
    let r22 = q.scale(-e1);

    let mut r = Matrix::zeros(3 * n, 3 * n);
    place(&mut r, n, 0, 0, &r00);
    place_pair(&mut r, n, 0, 1, &r01);
    place_pair(&mut r, n, 0, 2, &r02);
    place(&mut r, n, 1, 1, &r11);
    place_pair(&mut r, n, 1, 2, &r12);
    place(&mut r, n, 2, 2, &r22);
    Ok(r)
}

/// The `5n x 5n` block matrix of a mixed-model certificate.
pub fn assemble_pi(a: &Matrix, cert: &MixedCertificate) -> Result<Matrix, LmiError> {
    assemble_pi_parts(
        a, &cert.p, &cert.q, &cert.h, &cert.d, &cert.t1, &cert.t2, cert.k, cert.tau1, cert.tau2,
    )
}

/// The `3n x 3n` block matrix of a discrete-model certificate.
pub fn assemble_r(a: &Matrix, cert: &DiscreteCertificate) -> Result<Matrix, LmiError> {
    assemble_r_parts(a, &cert.p, &cert.q, &cert.d, cert.k, cert.tau1)
}

/// For all-diagonal data the mixed block matrix splits into independent
/// `5 x 5` blocks, one per coordinate; this returns the block of
/// `coord`.
pub fn per_coordinate_pi(
    a: &Matrix,
    cert: &MixedCertificate,
    coord: usize,
) -> Result<Matrix, LmiError> {
    let n = cert.dim();
    check_square("A", a, n)?;
    if coord >= n {
        return Err(LmiError::Shape(format!(
            "coordinate {coord} out of range for dimension {n}"
        )));
    }
    check_diagonal("A", a)?;
    check_diagonal("P", &cert.p)?;
    check_diagonal("Q", &cert.q)?;
    check_diagonal("H", &cert.h)?;
    check_diagonal("T1", &cert.t1)?;
    check_diagonal("T2", &cert.t2)?;

    let (k, tau1, tau2) = (cert.k, cert.tau1, cert.tau2);
    let a_ = a[(coord, coord)];
    let p = cert.p[(coord, coord)];
    let q = cert.q[(coord, coord)];
    let h = cert.h[(coord, coord)];
    let d = cert.d.get(coord);
    let t1 = cert.t1[(coord, coord)];
    let t2 = cert.t2[(coord, coord)];
    let bb = a_ + (2.0 + tau2);
    let e1 = (-2.0 * k * tau1).exp();
    let e2 = (-2.0 * k * tau2).exp();
    let c00 = 2.0 * k - 4.0 - 2.0 * tau2;

    let mut m = Matrix::zeros(5, 5);
    let mut set = |r: usize, c: usize, v: f64| {
        m.set(r, c, v);
        m.set(c, r, v);
    };
    set(0, 0, c00 * p - a_ * p - p * a_ + q + tau2 * h);
    set(0, 1, p);
    set(0, 2, p + 2.0 * k * d - a_ * d - tau2 * d - bb * t2);
    set(0, 3, -(bb * t1));
    set(0, 4, p);
    set(1, 1, -e1 * q);
    set(1, 2, d + t2);
    set(1, 3, t1);
    set(1, 4, 0.0);
    set(2, 2, -2.0 * d + t2 + t2);
    set(2, 3, t1 - t2);
    set(2, 4, t2 + d);
    set(3, 3, -t1 - t1);
    set(3, 4, t1);
    set(4, 4, -(e2 / tau2) * h);
    Ok(m)
}

/// Per-coordinate `3 x 3` block of a discrete-model certificate with
/// all-diagonal data.
pub fn per_coordinate_r(
    a: &Matrix,
    cert: &DiscreteCertificate,
    coord: usize,
) -> Result<Matrix, LmiError> {
    let n = cert.dim();
    check_square("A", a, n)?;
    if coord >= n {
        return Err(LmiError::Shape(format!(
            "coordinate {coord} out of range for dimension {n}"
        )));
    }
    check_diagonal("A", a)?;
    check_diagonal("P", &cert.p)?;
    check_diagonal("Q", &cert.q)?;

    let (k, tau1) = (cert.k, cert.tau1);
    let a_ = a[(coord, coord)];
    let p = cert.p[(coord, coord)];
    let q = cert.q[(coord, coord)];
    let d = cert.d.get(coord);
    let e1 = (-2.0 * k * tau1).exp();

    let mut m = Matrix::zeros(3, 3);
    let mut set = |r: usize, c: usize, v: f64| {
        m.set(r, c, v);
        m.set(c, r, v);
    };
    set(0, 0, 2.0 * k * p - a_ * p - p * a_ - 4.0 * p + q);
    set(0, 1, p - d * a_ + 2.0 * k * d);
    set(0, 2, p);
    set(1, 1, -2.0 * d);
    set(1, 2, d);
    set(2, 2, -e1 * q);
    Ok(m)
}

/// Result of checking a trajectory against its certificate envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    /// Largest observed `||x(t) - x*|| / (gamma * sup * exp(-k t))`.
    pub max_ratio: f64,
    /// Whether the envelope holds up to the given slack.
    pub holds: bool,
    /// `sup ||phi(t) - x*||` over the history interval.
    pub sup_history_distance: f64,
}

/// Checks `||x(t) - x*|| <= (1 + slack) * gamma * sup * exp(-k t)` at
/// every node of the trajectory. The supremum over the initial function
/// is estimated on at least [`SUP_SAMPLES`] uniform samples. An initial
/// function that already sits on the equilibrium gives a zero envelope:
/// that passes trivially when the whole trajectory stays on the
/// equilibrium and is reported as [`LmiError::DegenerateHistory`]
/// otherwise.
pub fn exponential_bound_check(
    traj: &DenseTrajectory,
    x_star: &Vector,
    gamma: f64,
    k: f64,
    slack: f64,
) -> Result<BoundCheck, LmiError> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(LmiError::BadParameter(format!(
            "envelope factor gamma = {gamma} is invalid"
        )));
    }
    check_rate(k)?;
    if !slack.is_finite() || slack < 0.0 {
        return Err(LmiError::BadParameter(format!("slack {slack} is invalid")));
    }
    if x_star.dim() != traj.dim() {
        return Err(LmiError::Shape(format!(
            "equilibrium has dimension {}, trajectory has {}",
            x_star.dim(),
            traj.dim()
        )));
    }
    let sup = traj
        .history()
        .sup_distance(x_star, -traj.history_span(), SUP_SAMPLES);
    let mut max_err = 0.0f64;
    let mut errs = Vec::with_capacity(traj.num_nodes());
    for i in 0..traj.num_nodes() {
        let err = traj.state(i).sub(x_star)?.norm();
        max_err = max_err.max(err);
        errs.push(err);
    }
    if sup == 0.0 {
        if max_err <= 1e-8 * (1.0 + x_star.norm()) {
            return Ok(BoundCheck {
                max_ratio: 0.0,
                holds: true,
                sup_history_distance: 0.0,
            });
        }
        return Err(LmiError::DegenerateHistory);
    }
    let mut max_ratio = 0.0f64;
    for (i, err) in errs.iter().enumerate() {
        let envelope = gamma * sup * (-k * traj.node_time(i)).exp();
        max_ratio = max_ratio.max(err / envelope);
    }
    Ok(BoundCheck {
        max_ratio,
        holds: max_ratio <= 1.0 + slack,
        sup_history_distance: sup,
    })
}

/// Options for the projected subgradient feasibility search.
#[derive(Debug, Clone)]
pub struct FeasibilitySearchOptions {
    /// Eigenvalue floor kept by the projection of `P`, `Q`, `H`, `D`.
    pub epsilon: f64,
    /// Iteration budget.
    pub max_iters: usize,
    /// Initial step length of the subgradient descent.
    pub step_init: f64,
    /// Harmonic decay coefficient of the step length.
    pub step_decay: f64,
    /// Required margin: accept once the largest eigenvalue is below the
    /// negated margin.
    pub target_margin: f64,
    /// Seed for the random initialisation of `T1` and `T2`.
    pub seed: u64,
}

impl Default for FeasibilitySearchOptions {
    fn default() -> FeasibilitySearchOptions {
        FeasibilitySearchOptions {
            epsilon: 1e-3,
            max_iters: 2000,
            step_init: 0.05,
            step_decay: 0.01,
            target_margin: 1e-4,
            seed: 0,
        }
    }
}

impl FeasibilitySearchOptions {
    fn validate(&self) -> Result<(), LmiError> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(LmiError::BadParameter(format!(
                "projection floor {} is invalid",
                self.epsilon
            )));
        }
        if !self.step_init.is_finite() || self.step_init <= 0.0 {
            return Err(LmiError::BadParameter(format!(
                "step length {} is invalid",
                self.step_init
            )));
        }
        if !self.step_decay.is_finite() || self.step_decay < 0.0 {
            return Err(LmiError::BadParameter(format!(
                "step decay {} is invalid",
                self.step_decay
            )));
        }
        if !self.target_margin.is_finite() || self.target_margin <= 0.0 {
            return Err(LmiError::BadParameter(format!(
                "target margin {} is invalid",
                self.target_margin
            )));
        }
        Ok(())
    }
}

/// Outcome of a feasibility search. An exhausted budget means no
/// certificate was found, not that none exists.
#[derive(Debug, Clone)]
pub enum SearchOutcome<C> {
    Found {
        certificate: C,
        /// Evaluation cycles completed before acceptance.
        iterations: usize,
        lambda_max: f64,
    },
    Exhausted {
        best_lambda_max: f64,
        iterations: usize,
    },
}

fn outer(u: &Vector, v: &Vector) -> Matrix {
    let mut m = Matrix::zeros(u.dim(), v.dim());
    for i in 0..u.dim() {
        for j in 0..v.dim() {
            m.set(i, j, u.get(i) * v.get(j));
        }
    }
    m
}

fn column_of(m: &Matrix, col: usize) -> Vector {
    let mut data = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        data.push(m[(i, col)]);
    }
    Vector::new(data).expect("eigenvector entries are finite")
}

fn block_of(v: &Vector, block: usize, n: usize) -> Vector {
    Vector::from_slice(&v.as_slice()[block * n..(block + 1) * n])
        .expect("eigenvector entries are finite")
}

fn random_small_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, rng.gen_range(-0.01..0.01));
        }
    }
    m
}

/// Eigenvalue clip: the nearest symmetric matrix whose spectrum sits at
/// or above `floor`.
fn clip_to_floor(m: &Matrix, floor: f64) -> Result<Matrix, LinalgError> {
    let eig = linalg::sym_eig(m)?;
    let n = m.rows();
    let mut clipped = Vec::with_capacity(n);
    for i in 0..n {
        clipped.push(eig.values.get(i).max(floor));
    }
    let v = &eig.vectors;
    let vd = v.matmul(&Matrix::from_diag(&clipped)?)?;
    vd.matmul(&v.transpose())?.symmetrized()
}

fn sym_part(m: &Matrix) -> Result<Matrix, LinalgError> {
    m.symmetrized()
}

struct TiedVectors {
    vectors: Vec<Vector>,
    lambda_max: f64,
}

fn top_eigenvectors(m: &Matrix) -> Result<TiedVectors, LinalgError> {
    let eig = linalg::sym_eig(m)?;
    let n = m.rows();
    let lambda_max = eig.values.get(n - 1);
    let mut vectors = Vec::new();
    for i in (0..n).rev() {
        if lambda_max - eig.values.get(i) <= TIE_TOL {
            vectors.push(column_of(&eig.vectors, i));
        } else {
            break;
        }
    }
    Ok(TiedVectors {
        vectors,
        lambda_max,
    })
}

/// Searches for a feasible mixed-model certificate by projected
/// subgradient descent on the largest eigenvalue of the block matrix.
pub fn search_mixed_certificate(
    a: &Matrix,
    tau1: f64,
    tau2: f64,
    k: f64,
    opts: &FeasibilitySearchOptions,
) -> Result<SearchOutcome<MixedCertificate>, LmiError> {
    if !a.is_square() {
        return Err(LmiError::Shape(format!(
            "equation matrix is {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    check_rate(k)?;
    check_delay("tau1", tau1, false)?;
    check_delay("tau2", tau2, true)?;
    opts.validate()?;
    let n = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut p = Matrix::identity(n);
    let mut q = Matrix::identity(n);
    let mut h = Matrix::identity(n);
    let mut d = Vector::constant(n, 1.0)?;
    let mut t1 = random_small_matrix(n, &mut rng);
    let mut t2 = random_small_matrix(n, &mut rng);

    let e1 = (-2.0 * k * tau1).exp();
    let e2 = (-2.0 * k * tau2).exp();
    let c00 = 2.0 * k - 4.0 - 2.0 * tau2;
    let b = a.add(&Matrix::identity(n).scale(2.0 + tau2))?;
    let mut best_lambda = f64::INFINITY;

    for iter in 0..opts.max_iters {
        let pi = assemble_pi_parts(a, &p, &q, &h, &d, &t1, &t2, k, tau1, tau2)?;
        let top = top_eigenvectors(&pi)?;
        best_lambda = best_lambda.min(top.lambda_max);
        if top.lambda_max < -opts.target_margin {
            let cert = MixedCertificate::new(
                p.clone(),
                q.clone(),
                h.clone(),
                d.clone(),
                t1.clone(),
                t2.clone(),
                k,
                tau1,
                tau2,
            )?;
            let report = cert.verify(a, 0.0)?;
            if report.feasible {
                return Ok(SearchOutcome::Found {
                    certificate: cert,
                    iterations: iter,
                    lambda_max: report.lambda_max,
                });
            }
        }

        let count = top.vectors.len() as f64;
        let mut gp = Matrix::zeros(n, n);
        let mut gq = Matrix::zeros(n, n);
        let mut gh = Matrix::zeros(n, n);
        let mut gd = Vector::zeros(n);
        let mut gt1 = Matrix::zeros(n, n);
        let mut gt2 = Matrix::zeros(n, n);
        for v in &top.vectors {
            let v0 = block_of(v, 0, n);
            let v1 = block_of(v, 1, n);
            let v2 = block_of(v, 2, n);
            let v3 = block_of(v, 3, n);
            let v4 = block_of(v, 4, n);
            let av0 = a.mul_vec(&v0)?;
            let bv0 = b.mul_vec(&v0)?;
            let u = bv0.scale(-1.0).add(&v1)?.add(&v2)?.sub(&v3)?.add(&v4)?;

            let mut part = outer(&v0, &v0).scale(c00);
            part = part.sub(&outer(&av0, &v0))?;
            part = part.sub(&outer(&v0, &av0))?;
            part = part.add(&outer(&v0, &v1).scale(2.0))?;
            part = part.add(&outer(&v0, &v2).scale(2.0))?;
            part = part.add(&outer(&v0, &v4).scale(2.0))?;
            gp = gp.add(&sym_part(&part)?)?;

            gq = gq.add(&outer(&v0, &v0).sub(&outer(&v1, &v1).scale(e1))?)?;
            gh = gh.add(
                &outer(&v0, &v0)
                    .scale(tau2)
                    .sub(&outer(&v4, &v4).scale(e2 / tau2))?,
            )?;
            let mut gd_one = Vec::with_capacity(n);
            for i in 0..n {
                let inner =
                    (2.0 * k - tau2) * v0.get(i) - av0.get(i) + v1.get(i) - v2.get(i) + v4.get(i);
                gd_one.push(2.0 * v2.get(i) * inner);
            }
            gd = gd.add(&Vector::new(gd_one)?)?;
            gt1 = gt1.add(&outer(&v3, &u).scale(2.0))?;
            gt2 = gt2.add(&outer(&v2, &u).scale(2.0))?;
        }
        let alpha = opts.step_init / (1.0 + opts.step_decay * iter as f64) / count;

        p = p.sub(&gp.scale(alpha))?;
        q = q.sub(&gq.scale(alpha))?;
        h = h.sub(&gh.scale(alpha))?;
        d = d.sub(&gd.scale(alpha))?;
        t1 = t1.sub(&gt1.scale(alpha))?;
        t2 = t2.sub(&gt2.scale(alpha))?;

        p = clip_to_floor(&p, opts.epsilon)?;
        q = clip_to_floor(&q, opts.epsilon)?;
        h = clip_to_floor(&h, opts.epsilon)?;
        let mut clamped = Vec::with_capacity(n);
        for i in 0..n {
            clamped.push(d.get(i).max(opts.epsilon));
        }
        d = Vector::new(clamped)?;
        let trace: f64 = (0..n).map(|i| p[(i, i)]).sum();
        p = p.scale(n as f64 / trace);
    }

    Ok(SearchOutcome::Exhausted {
        best_lambda_max: best_lambda,
        iterations: opts.max_iters,
    })
}

/// Discrete-model counterpart of [`search_mixed_certificate`].
pub fn search_discrete_certificate(
    a: &Matrix,
    tau1: f64,
    k: f64,
    opts: &FeasibilitySearchOptions,
) -> Result<SearchOutcome<DiscreteCertificate>, LmiError> {
    if !a.is_square() {
        return Err(LmiError::Shape(format!(
            "equation matrix is {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    check_rate(k)?;
    check_delay("tau1", tau1, false)?;
    opts.validate()?;
    let n = a.rows();

    let mut p = Matrix::identity(n);
    let mut q = Matrix::identity(n);
    let mut d = Vector::constant(n, 1.0)?;

    let at = a.transpose();
    let e1 = (-2.0 * k * tau1).exp();
    let mut best_lambda = f64::INFINITY;

    for iter in 0..opts.max_iters {
        let r = assemble_r_parts(a, &p, &q, &d, k, tau1)?;
        let top = top_eigenvectors(&r)?;
        best_lambda = best_lambda.min(top.lambda_max);
        if top.lambda_max < -opts.target_margin {
            let cert = DiscreteCertificate::new(p.clone(), q.clone(), d.clone(), k, tau1)?;
            let report = cert.verify(a, 0.0)?;
            if report.feasible {
                return Ok(SearchOutcome::Found {
                    certificate: cert,
                    iterations: iter,
                    lambda_max: report.lambda_max,
                });
            }
        }

        let count = top.vectors.len() as f64;
        let mut gp = Matrix::zeros(n, n);
        let mut gq = Matrix::zeros(n, n);
        let mut gd = Vector::zeros(n);
        for v in &top.vectors {
            let v0 = block_of(v, 0, n);
            let v1 = block_of(v, 1, n);
            let v2 = block_of(v, 2, n);
            let av0 = a.mul_vec(&v0)?;
            let atv1 = at.mul_vec(&v1)?;

            let mut part = outer(&v0, &v0).scale(2.0 * k - 4.0);
            part = part.sub(&outer(&av0, &v0))?;
            part = part.sub(&outer(&v0, &av0))?;
            part = part.add(&outer(&v0, &v1).scale(2.0))?;
            part = part.add(&outer(&v0, &v2).scale(2.0))?;
            gp = gp.add(&sym_part(&part)?)?;

            gq = gq.add(&outer(&v0, &v0).sub(&outer(&v2, &v2).scale(e1))?)?;
            let mut gd_one = Vec::with_capacity(n);
            for i in 0..n {
                gd_one.push(
                    -2.0 * v0.get(i) * atv1.get(i) + 4.0 * k * v0.get(i) * v1.get(i)
                        - 2.0 * v1.get(i) * v1.get(i)
                        + 2.0 * v1.get(i) * v2.get(i),
                );
            }
            gd = gd.add(&Vector::new(gd_one)?)?;
        }
        let alpha = opts.step_init / (1.0 + opts.step_decay * iter as f64) / count;

        p = p.sub(&gp.scale(alpha))?;
        q = q.sub(&gq.scale(alpha))?;
        d = d.sub(&gd.scale(alpha))?;

        p = clip_to_floor(&p, opts.epsilon)?;
        q = clip_to_floor(&q, opts.epsilon)?;
        let mut clamped = Vec::with_capacity(n);
        for i in 0..n {
            clamped.push(d.get(i).max(opts.epsilon));
        }
        d = Vector::new(clamped)?;
        let trace: f64 = (0..n).map(|i| p[(i, i)]).sum();
        p = p.scale(n as f64 / trace);
    }

    Ok(SearchOutcome::Exhausted {
        best_lambda_max: best_lambda,
        iterations: opts.max_iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness;

    fn identity_mixed(n: usize, k: f64, tau1: f64, tau2: f64) -> MixedCertificate {
        MixedCertificate::new(
            Matrix::identity(n),
            Matrix::identity(n),
            Matrix::identity(n),
            Vector::constant(n, 1.0).unwrap(),
            Matrix::zeros(n, n),
            Matrix::zeros(n, n),
            k,
            tau1,
            tau2,
        )
        .unwrap()
    }

    #[test]
    fn gamma_of_identity_certificates() {
        let mixed = identity_mixed(3, 0.01, 1.0, 0.5);
        let g = mixed.gamma().unwrap();
        assert!(
            (2.0283..2.0286).contains(&g),
            "mixed identity envelope factor {g}"
        );

        let disc = DiscreteCertificate::new(
            Matrix::identity(3),
            Matrix::identity(3),
            Vector::constant(3, 1.0).unwrap(),
            0.01,
            0.01,
        )
        .unwrap();
        let g = disc.gamma().unwrap();
        assert!(
            (1.7348..1.7351).contains(&g),
            "discrete identity envelope factor {g}"
        );
    }

    #[test]
    fn envelope_factor_is_scale_invariant() {
        let ex = harness::load_builtin("ex1-mixed").unwrap();
        let cert = match ex.certificate {
            Certificate::Mixed(c) => c,
            _ => unreachable!(),
        };
        let g1 = cert.gamma().unwrap();
        let scaled = MixedCertificate::new(
            cert.p().scale(7.5),
            cert.q().scale(7.5),
            cert.h().scale(7.5),
            cert.d().scale(7.5),
            cert.t1().clone(),
            cert.t2().clone(),
            cert.k(),
            cert.tau1(),
            cert.tau2(),
        )
        .unwrap();
        let g2 = scaled.gamma().unwrap();
        assert!((g1 - g2).abs() <= 1e-12 * g1);
        assert!(g1 >= 1.0);
    }

    #[test]
    fn assembled_block_matrix_is_exactly_symmetric() {
        let ex = harness::load_builtin("ex1-mixed").unwrap();
        let cert = match &ex.certificate {
            Certificate::Mixed(c) => c,
            _ => unreachable!(),
        };
        let pi = assemble_pi(ex.problem.matrix(), cert).unwrap();
        assert_eq!(pi.rows(), 15);
        assert_eq!(pi.symmetry_defect().unwrap(), 0.0);

        let ex = harness::load_builtin("ex3-discrete").unwrap();
        let cert = match &ex.certificate {
            Certificate::Discrete(c) => c,
            _ => unreachable!(),
        };
        let r = assemble_r(ex.problem.matrix(), cert).unwrap();
        assert_eq!(r.rows(), 9);
        assert_eq!(r.symmetry_defect().unwrap(), 0.0);
    }

    #[test]
    fn block_formulas_match_independent_transcription() {
        // A second, hand-written transcription of two asymmetric blocks,
        // evaluated in the same operation order; any discrepancy in the
        // production assembly would show up as a nonzero difference.
        let ex = harness::load_builtin("ex1-mixed").unwrap();
        let a = ex.problem.matrix();
        let cert = match &ex.certificate {
            Certificate::Mixed(c) => c,
            _ => unreachable!(),
        };
        let pi = assemble_pi(a, cert).unwrap();
        let n = 3;
        let (k, tau2) = (cert.k(), cert.tau2());
        let dm = Matrix::from_diag(cert.d().as_slice()).unwrap();
        let bt = a
            .add(&Matrix::identity(n).scale(2.0 + tau2))
            .unwrap()
            .transpose();

        let b02 = cert
            .p()
            .add(&dm.scale(2.0 * k))
            .unwrap()
            .sub(&a.transpose().matmul(&dm).unwrap())
            .unwrap()
            .sub(&dm.scale(tau2))
            .unwrap()
            .sub(&bt.matmul(&cert.t2().transpose()).unwrap())
            .unwrap();
        let b23 = cert.t1().transpose().sub(cert.t2()).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(pi[(i, 2 * n + j)], b02[(i, j)], "block (0,2) entry {i},{j}");
                assert_eq!(pi[(2 * n + i, j)], b02[(j, i)], "block (2,0) entry {i},{j}");
                assert_eq!(
                    pi[(2 * n + i, 3 * n + j)],
                    b23[(i, j)],
                    "block (2,3) entry {i},{j}"
                );
            }
        }
    }

    #[test]
    fn per_coordinate_blocks_agree_with_full_assembly() {
        let ex = harness::load_builtin("ex2-mixed").unwrap();
        let a = ex.problem.matrix();
        let cert = match &ex.certificate {
            Certificate::Mixed(c) => c,
            _ => unreachable!(),
        };
        let pi = assemble_pi(a, cert).unwrap();
        let n = 3;
        let scale = 1.0 + pi.max_abs();
        for coord in 0..n {
            let small = per_coordinate_pi(a, cert, coord).unwrap();
            for r in 0..5 {
                for c in 0..5 {
                    let full = pi[(r * n + coord, c * n + coord)];
                    assert!(
                        (small[(r, c)] - full).abs() <= 1e-15 * scale,
                        "coordinate {coord} block entry {r},{c}: {} vs {full}",
                        small[(r, c)]
                    );
                }
            }
        }

        let ex = harness::load_builtin("ex3-discrete").unwrap();
        let a = ex.problem.matrix();
        let cert = match &ex.certificate {
            Certificate::Discrete(c) => c,
            _ => unreachable!(),
        };
        let r_full = assemble_r(a, cert).unwrap();
        let scale = 1.0 + r_full.max_abs();
        for coord in 0..n {
            let small = per_coordinate_r(a, cert, coord).unwrap();
            for r in 0..3 {
                for c in 0..3 {
                    let full = r_full[(r * n + coord, c * n + coord)];
                    assert!(
                        (small[(r, c)] - full).abs() <= 1e-15 * scale,
                        "coordinate {coord} block entry {r},{c}"
                    );
                }
            }
        }
    }

    #[test]
    fn per_coordinate_requires_diagonal_data() {
        let ex = harness::load_builtin("ex1-mixed").unwrap();
        let cert = match &ex.certificate {
            Certificate::Mixed(c) => c,
            _ => unreachable!(),
        };
        assert!(matches!(
            per_coordinate_pi(ex.problem.matrix(), cert, 0),
            Err(LmiError::NotDiagonal(_))
        ));
    }

    #[test]
    fn negative_weights_are_reported_infeasible() {
        let n = 3;
        let cert = MixedCertificate::new(
            Matrix::identity(n).scale(-1.0),
            Matrix::identity(n),
            Matrix::identity(n),
            Vector::constant(n, 1.0).unwrap(),
            Matrix::zeros(n, n),
            Matrix::zeros(n, n),
            0.01,
            1.0,
            0.5,
        )
        .unwrap();
        let a = Matrix::identity(n).scale(4.0);
        let report = cert.verify(&a, 0.0).unwrap();
        assert!(!report.feasible);
        assert!(report.p_margin < 0.0);
    }

    #[test]
    fn bound_check_on_synthetic_decay() {
        use crate::dde::DenseTrajectory;
        use crate::models::HistoryFunction;
        // x(t) = exp(-t), x* = 0, constant history 1: sup = 1. With
        // gamma = 1.1 and k = 0.5 the worst ratio sits at t = 0.
        let step = 0.1;
        let nodes = 21;
        let states: Vec<Vector> = (0..nodes)
            .map(|i| Vector::from_slice(&[(-(i as f64) * step).exp()]).unwrap())
            .collect();
        let derivs: Vec<Vector> = (0..nodes)
            .map(|i| Vector::from_slice(&[-(-(i as f64) * step).exp()]).unwrap())
            .collect();
        let history = HistoryFunction::constant(Vector::from_slice(&[1.0]).unwrap());
        let traj =
            DenseTrajectory::from_parts(step, states, derivs, None, history, 1.0, 64).unwrap();
        let star = Vector::zeros(1);
        let check = exponential_bound_check(&traj, &star, 1.1, 0.5, 0.05).unwrap();
        assert!(check.holds);
        assert!((check.max_ratio - 1.0 / 1.1).abs() < 1e-9);
        assert!((check.sup_history_distance - 1.0).abs() < 1e-12);

        // A rate faster than the trajectory decays breaks the envelope.
        let fail = exponential_bound_check(&traj, &star, 1.1, 3.0, 0.05).unwrap();
        assert!(!fail.holds);
    }

    #[test]
    fn bound_check_degenerate_history() {
        use crate::dde::DenseTrajectory;
        use crate::models::HistoryFunction;
        let star = Vector::from_slice(&[2.0]).unwrap();
        let history = HistoryFunction::constant(star.clone());
        let flat: Vec<Vector> = (0..5).map(|_| star.clone()).collect();
        let zeros: Vec<Vector> = (0..5).map(|_| Vector::zeros(1)).collect();
        let traj = DenseTrajectory::from_parts(
            0.1,
            flat.clone(),
            zeros.clone(),
            None,
            history.clone(),
            0.5,
            64,
        )
        .unwrap();
        let ok = exponential_bound_check(&traj, &star, 1.5, 0.01, 0.05).unwrap();
        assert!(ok.holds);
        assert_eq!(ok.max_ratio, 0.0);

        // Same degenerate envelope, but the trajectory moves: no ratio
        // can be formed.
        let moved: Vec<Vector> = (0..5)
            .map(|i| Vector::from_slice(&[2.0 + i as f64]).unwrap())
            .collect();
        let traj = DenseTrajectory::from_parts(0.1, moved, zeros, None, history, 0.5, 64).unwrap();
        assert!(matches!(
            exponential_bound_check(&traj, &star, 1.5, 0.01, 0.05),
            Err(LmiError::DegenerateHistory)
        ));
    }

    #[test]
    fn certificate_text_round_trips() {
        for name in ["ex1-mixed", "ex1-discrete"] {
            let ex = harness::load_builtin(name).unwrap();
            let text = ex.certificate.to_text();
            let back = Certificate::from_text(&text).unwrap();
            assert_eq!(back.is_mixed(), ex.certificate.is_mixed());
            assert_eq!(back.k(), ex.certificate.k());
            assert_eq!(back.tau1(), ex.certificate.tau1());
            assert_eq!(back.tau2(), ex.certificate.tau2());
            match (&back, &ex.certificate) {
                (Certificate::Mixed(b), Certificate::Mixed(c)) => {
                    assert_eq!(b.p().sub(c.p()).unwrap().max_abs(), 0.0);
                    assert_eq!(b.t2().sub(c.t2()).unwrap().max_abs(), 0.0);
                    assert_eq!(b.d().sub(c.d()).unwrap().inf_norm(), 0.0);
                }
                (Certificate::Discrete(b), Certificate::Discrete(c)) => {
                    assert_eq!(b.p().sub(c.p()).unwrap().max_abs(), 0.0);
                    assert_eq!(b.q().sub(c.q()).unwrap().max_abs(), 0.0);
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn certificate_parser_rejects_malformed_input() {
        let ex = harness::load_builtin("ex1-discrete").unwrap();
        let good = ex.certificate.to_text();
        // Missing section.
        let truncated: String = good
            .lines()
            .take_while(|l| *l != "D")
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            Certificate::from_text(&truncated),
            Err(LmiError::Parse(_))
        ));
        // Unknown scalar key.
        let unknown = format!("bogus = 1\n{good}");
        assert!(matches!(
            Certificate::from_text(&unknown),
            Err(LmiError::Parse(_))
        ));
        // Off-diagonal D.
        let bad_d = good.replace(
            "D\n3 3\n", "D\n3 3\n", // placeholder, patched below
        );
        let mut lines: Vec<String> = bad_d.lines().map(|s| s.to_string()).collect();
        let d_header = lines.iter().position(|l| l == "D").unwrap();
        let row = lines[d_header + 2].clone();
        let mut cols: Vec<String> = row.split_whitespace().map(|s| s.to_string()).collect();
        cols[1] = "5.0e-1".to_string();
        lines[d_header + 2] = cols.join(" ");
        let patched = lines.join("\n");
        assert!(matches!(
            Certificate::from_text(&patched),
            Err(LmiError::NotDiagonal(_))
        ));
    }

    #[test]
    fn subgradients_match_finite_differences() {
        // One descent iteration from the ex1 starting point lands on a
        // generic configuration; check a handful of analytic derivative
        // entries against central differences.
        let ex = harness::load_builtin("ex1-mixed").unwrap();
        let a = ex.problem.matrix().clone();
        let n = 3;
        let (k, tau1, tau2) = (0.01, 1.0, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = clip_to_floor(
            &Matrix::identity(n)
                .add(&random_small_matrix(n, &mut rng).symmetrized().unwrap())
                .unwrap(),
            1e-3,
        )
        .unwrap();
        let q = Matrix::identity(n);
        let h = Matrix::identity(n);
        let d = Vector::constant(n, 1.0).unwrap();
        let t1 = random_small_matrix(n, &mut rng);
        let t2 = random_small_matrix(n, &mut rng);

        let lambda = |p: &Matrix, q: &Matrix, h: &Matrix, d: &Vector, t1: &Matrix, t2: &Matrix| {
            let pi = assemble_pi_parts(&a, p, q, h, d, t1, t2, k, tau1, tau2).unwrap();
            linalg::sym_eig(&pi).unwrap().max()
        };

        let pi = assemble_pi_parts(&a, &p, &q, &h, &d, &t1, &t2, k, tau1, tau2).unwrap();
        let eig = linalg::sym_eig(&pi).unwrap();
        let top = eig.values.get(5 * n - 1);
        let second = eig.values.get(5 * n - 2);
        assert!(
            top - second > 1e-6,
            "test requires a simple top eigenvalue, gap {}",
            top - second
        );
        let v = column_of(&eig.vectors, 5 * n - 1);
        let v0 = block_of(&v, 0, n);
        let v1 = block_of(&v, 1, n);
        let v2 = block_of(&v, 2, n);
        let v3 = block_of(&v, 3, n);
        let v4 = block_of(&v, 4, n);
        let av0 = a.mul_vec(&v0).unwrap();
        let b = a.add(&Matrix::identity(n).scale(2.0 + tau2)).unwrap();
        let bv0 = b.mul_vec(&v0).unwrap();
        let u = bv0
            .scale(-1.0)
            .add(&v1)
            .unwrap()
            .add(&v2)
            .unwrap()
            .sub(&v3)
            .unwrap()
            .add(&v4)
            .unwrap();
        let c00 = 2.0 * k - 4.0 - 2.0 * tau2;
        let mut gp_raw = outer(&v0, &v0).scale(c00);
        gp_raw = gp_raw.sub(&outer(&av0, &v0)).unwrap();
        gp_raw = gp_raw.sub(&outer(&v0, &av0)).unwrap();
        gp_raw = gp_raw.add(&outer(&v0, &v1).scale(2.0)).unwrap();
        gp_raw = gp_raw.add(&outer(&v0, &v2).scale(2.0)).unwrap();
        gp_raw = gp_raw.add(&outer(&v0, &v4).scale(2.0)).unwrap();
        let gp = sym_part(&gp_raw).unwrap();
        let gt1 = outer(&v3, &u).scale(2.0);
        let gt2 = outer(&v2, &u).scale(2.0);
        let e2 = (-2.0 * k * tau2).exp();
        let gh = outer(&v0, &v0)
            .scale(tau2)
            .sub(&outer(&v4, &v4).scale(e2 / tau2))
            .unwrap();
        let inner = |i: usize| {
            (2.0 * k - tau2) * v0.get(i) - av0.get(i) + v1.get(i) - v2.get(i) + v4.get(i)
        };

        let fd = 1e-6;
        // Symmetric perturbation of P at (0, 1): slope is twice the
        // symmetrized gradient entry.
        let mut p_hi = p.clone();
        p_hi.set(0, 1, p[(0, 1)] + fd);
        p_hi.set(1, 0, p[(1, 0)] + fd);
        let mut p_lo = p.clone();
        p_lo.set(0, 1, p[(0, 1)] - fd);
        p_lo.set(1, 0, p[(1, 0)] - fd);
        let slope = (lambda(&p_hi, &q, &h, &d, &t1, &t2) - lambda(&p_lo, &q, &h, &d, &t1, &t2))
            / (2.0 * fd);
        let expect = 2.0 * gp[(0, 1)];
        assert!(
            (slope - expect).abs() <= 1e-3 * (1.0 + expect.abs()),
            "P slope {slope} vs {expect}"
        );

        // H diagonal entry.
        let mut h_hi = h.clone();
        h_hi.set(2, 2, h[(2, 2)] + fd);
        let mut h_lo = h.clone();
        h_lo.set(2, 2, h[(2, 2)] - fd);
        let slope = (lambda(&p, &q, &h_hi, &d, &t1, &t2) - lambda(&p, &q, &h_lo, &d, &t1, &t2))
            / (2.0 * fd);
        let expect = gh[(2, 2)];
        assert!(
            (slope - expect).abs() <= 1e-3 * (1.0 + expect.abs()),
            "H slope {slope} vs {expect}"
        );

        // Diagonal weight d_2.
        let bump = |delta: f64| {
            let mut data: Vec<f64> = d.as_slice().to_vec();
            data[2] += delta;
            Vector::new(data).unwrap()
        };
        let slope = (lambda(&p, &q, &h, &bump(fd), &t1, &t2)
            - lambda(&p, &q, &h, &bump(-fd), &t1, &t2))
            / (2.0 * fd);
        let expect = 2.0 * v2.get(2) * inner(2);
        assert!(
            (slope - expect).abs() <= 1e-3 * (1.0 + expect.abs()),
            "D slope {slope} vs {expect}"
        );

        // T1 and T2 entries.
        let mut t1_hi = t1.clone();
        t1_hi.set(1, 2, t1[(1, 2)] + fd);
        let mut t1_lo = t1.clone();
        t1_lo.set(1, 2, t1[(1, 2)] - fd);
        let slope = (lambda(&p, &q, &h, &d, &t1_hi, &t2) - lambda(&p, &q, &h, &d, &t1_lo, &t2))
            / (2.0 * fd);
        let expect = gt1[(1, 2)];
        assert!(
            (slope - expect).abs() <= 1e-3 * (1.0 + expect.abs()),
            "T1 slope {slope} vs {expect}"
        );

        let mut t2_hi = t2.clone();
        t2_hi.set(0, 2, t2[(0, 2)] + fd);
        let mut t2_lo = t2.clone();
        t2_lo.set(0, 2, t2[(0, 2)] - fd);
        let slope = (lambda(&p, &q, &h, &d, &t1, &t2_hi) - lambda(&p, &q, &h, &d, &t1, &t2_lo))
            / (2.0 * fd);
        let expect = gt2[(0, 2)];
        assert!(
            (slope - expect).abs() <= 1e-3 * (1.0 + expect.abs()),
            "T2 slope {slope} vs {expect}"
        );
    }

    #[test]
    fn search_finds_discrete_certificate_quickly() {
        let ex = harness::load_builtin("ex2-discrete").unwrap();
        let a = ex.problem.matrix();
        let opts = FeasibilitySearchOptions {
            max_iters: 200,
            ..FeasibilitySearchOptions::default()
        };
        match search_discrete_certificate(a, 0.01, 0.01, &opts).unwrap() {
            SearchOutcome::Found {
                certificate,
                lambda_max,
                ..
            } => {
                assert!(lambda_max < -opts.target_margin);
                let report = certificate.verify(a, 0.0).unwrap();
                assert!(report.feasible);
            }
            SearchOutcome::Exhausted {
                best_lambda_max, ..
            } => panic!("search exhausted, best {best_lambda_max}"),
        }
    }

    #[test]
    fn search_finds_mixed_certificate_and_is_deterministic() {
        let ex = harness::load_builtin("ex1-mixed").unwrap();
        let a = ex.problem.matrix();
        let opts = FeasibilitySearchOptions::default();
        let run = || match search_mixed_certificate(a, 1.0, 0.5, 0.01, &opts).unwrap() {
            SearchOutcome::Found {
                certificate,
                iterations,
                lambda_max,
            } => (certificate, iterations, lambda_max),
            SearchOutcome::Exhausted {
                best_lambda_max, ..
            } => panic!("search exhausted, best {best_lambda_max}"),
        };
        let (cert_a, iters_a, lambda_a) = run();
        let (cert_b, iters_b, lambda_b) = run();
        assert_eq!(iters_a, iters_b);
        assert_eq!(lambda_a, lambda_b);
        assert_eq!(cert_a.p().sub(cert_b.p()).unwrap().max_abs(), 0.0);
        let report = cert_a.verify(a, 0.0).unwrap();
        assert!(report.feasible, "searched certificate must verify");
        assert!(cert_a.gamma().unwrap() >= 1.0);
    }

    #[test]
    fn search_exhausts_for_unreachable_rate() {
        // An absurd decay-rate request cannot be certified; the search
        // must report an exhausted budget, not a failure.
        let ex = harness::load_builtin("ex1-mixed").unwrap();
        let a = ex.problem.matrix();
        let opts = FeasibilitySearchOptions {
            max_iters: 40,
            ..FeasibilitySearchOptions::default()
        };
        match search_mixed_certificate(a, 1.0, 0.5, 1000.0, &opts).unwrap() {
            SearchOutcome::Exhausted {
                best_lambda_max,
                iterations,
            } => {
                assert!(best_lambda_max > 0.0);
                assert_eq!(iterations, 40);
            }
            SearchOutcome::Found { .. } => panic!("a rate of 1000 must not be certifiable"),
        }
    }
}
