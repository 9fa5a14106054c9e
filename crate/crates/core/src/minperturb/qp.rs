//! Small dense convex QP solver for problems of the form
//!
//! ```text
//!     minimize    1/2 ||delta||^2
//!     subject to  A delta <= b
//! ```
//!
//! The method is a dual active-set iteration in the Goldfarb-Idnani style,
//! specialized to the identity Hessian: starting from the unconstrained
//! minimum, the most violated constraint enters through a primal step in
//! the component of its row orthogonal to the active rows, with dual
//! partial steps dropping blocking constraints. Linearly dependent
//! violated rows either force a blocker out or produce a Farkas
//! infeasibility certificate (d >= 0, A^T d = 0, b^T d < 0). Only the KKT
//! certificate on the returned solution is normative.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, axpy, dot, norm, scale, DenseMatrix};

/// Constraint system `A delta <= b`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    a: DenseMatrix,
    b: Vec<f64>,
}

impl QpProblem {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                context: "QpProblem::new",
                expected: a.rows(),
                got: b.len(),
            });
        }
        if !all_finite(&b) {
            return Err(Error::NonFinite("qp bound vector"));
        }
        Ok(Self { a, b })
    }

    pub fn constraints(&self) -> usize {
        self.a.rows()
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn bound(&self) -> &[f64] {
        &self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
}

/// Solver output. For `Infeasible`, `lambda` holds the Farkas certificate
/// direction and `delta`/`objective` carry no meaning.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: QpStatus,
    pub delta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub objective: f64,
}

/// KKT residuals of a primal/dual pair for the QP above.
#[derive(Debug, Clone, Copy)]
pub struct KktResiduals {
    /// max_i (A_i delta - b_i); feasible when <= tolerance.
    pub primal: f64,
    /// max_i (-lambda_i); dual feasible when <= tolerance.
    pub dual: f64,
    /// ||delta + A^T lambda||.
    pub stationarity: f64,
    /// max_i |lambda_i (A_i delta - b_i)|.
    pub complementarity: f64,
}

pub const KKT_PRIMAL_TOL: f64 = 1e-8;
pub const KKT_DUAL_TOL: f64 = 1e-10;
pub const KKT_STATIONARITY_TOL: f64 = 1e-8;
pub const KKT_COMPLEMENTARITY_TOL: f64 = 1e-8;

impl KktResiduals {
    /// All four checks at the contract tolerances (stationarity is relative
    /// to `max(1, ||delta||)`).
    pub fn certifies(&self, delta_norm: f64) -> bool {
        self.primal <= KKT_PRIMAL_TOL
            && self.dual <= KKT_DUAL_TOL
            && self.stationarity <= KKT_STATIONARITY_TOL * delta_norm.max(1.0)
            && self.complementarity <= KKT_COMPLEMENTARITY_TOL
    }
}

/// Computes the KKT residuals of a candidate primal/dual pair.
pub fn kkt_residuals(problem: &QpProblem, delta: &[f64], lambda: &[f64]) -> KktResiduals {
    let m = problem.constraints();
    let mut primal = f64::NEG_INFINITY;
    let mut dual = f64::NEG_INFINITY;
    let mut complementarity: f64 = 0.0;
    let mut grad = delta.to_vec();
    for i in 0..m {
        let row = problem.a.row(i);
        let slack = dot(row, delta) - problem.b[i];
        primal = primal.max(slack);
        dual = dual.max(-lambda[i]);
        complementarity = complementarity.max((lambda[i] * slack).abs());
        axpy(lambda[i], row, &mut grad);
    }
    KktResiduals {
        primal,
        dual,
        stationarity: norm(&grad),
        complementarity,
    }
}

// Relative threshold below which the off-active-span component of an
// entering row is treated as zero.
const DEPENDENCE_TOL: f64 = 1e-9;

/// Solves the minimum-norm QP, returning a KKT-certified optimum or an
/// infeasibility certificate.
pub fn solve_qp(problem: &QpProblem) -> Result<QpSolution> {
    let m = problem.constraints();
    let d = problem.dim();
    let a = &problem.a;
    let b = &problem.b;

    let row_norm: Vec<f64> = (0..m).map(|i| norm(a.row(i))).collect();
    // Zero rows constrain nothing: 0 <= b_i either always holds or proves
    // the system infeasible outright.
    for i in 0..m {
        if row_norm[i] == 0.0 && b[i] < 0.0 {
            let mut cert = vec![0.0; m];
            cert[i] = 1.0;
            return Ok(infeasible(cert, d, m));
        }
    }
    let scale_b = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let violation_tol = 1e-11 * scale_b;

    let mut x = vec![0.0; d];
    let mut working: Vec<usize> = Vec::new();
    let mut lambda_w: Vec<f64> = Vec::new();

    let max_steps = 200 * (m + 1);
    let mut steps = 0;

    'outer: loop {
        // Most violated constraint.
        let mut entering: Option<(usize, f64)> = None;
        for i in 0..m {
            if row_norm[i] == 0.0 || working.contains(&i) {
                continue;
            }
            let slack = dot(a.row(i), &x) - b[i];
            if slack > violation_tol && entering.map_or(true, |(_, s)| slack > s) {
                entering = Some((i, slack));
            }
        }
        let Some((p, _)) = entering else {
            return finish(problem, &x, &working, &lambda_w);
        };
        let a_p = a.row(p);
        let mut u = 0.0;

        loop {
            steps += 1;
            if steps > max_steps {
                return Err(Error::NotConverged(format!(
                    "qp active-set iteration exceeded {max_steps} steps \
                     ({m} constraints, dim {d})"
                )));
            }
            // Decompose the entering row against the active rows:
            // a_p = Ab^T r + z with z orthogonal to every active row.
            let r = expansion_coefficients(a, &working, a_p)?;
            let mut z = a_p.to_vec();
            for (j, &idx) in working.iter().enumerate() {
                axpy(-r[j], a.row(idx), &mut z);
            }
            let z_norm = norm(&z);
            let dependent = z_norm <= DEPENDENCE_TOL * row_norm[p];

            // Dual blocking step: smallest lambda_j / r_j over r_j > 0.
            let mut blocking: Option<(usize, f64)> = None;
            for (j, &rj) in r.iter().enumerate() {
                if rj > 1e-14 {
                    let t = lambda_w[j] / rj;
                    if blocking.map_or(true, |(_, bt)| t < bt) {
                        blocking = Some((j, t));
                    }
                }
            }

            if dependent {
                match blocking {
                    None => {
                        // a_p is a nonnegative combination of active rows
                        // pointing the wrong way: Farkas certificate.
                        let mut cert = vec![0.0; m];
                        cert[p] = 1.0;
                        for (j, &idx) in working.iter().enumerate() {
                            cert[idx] = (-r[j]).max(0.0);
                        }
                        if verify_farkas(a, b, &cert) {
                            return Ok(infeasible(cert, d, m));
                        }
                        return Err(Error::NotConverged(
                            "dependent entering row without a verifiable \
                             infeasibility certificate"
                                .into(),
                        ));
                    }
                    Some((l, t1)) => {
                        // Pure dual step: shift weight onto p, drop l.
                        for (j, &rj) in r.iter().enumerate() {
                            lambda_w[j] -= t1 * rj;
                        }
                        u += t1;
                        working.remove(l);
                        lambda_w.remove(l);
                        continue;
                    }
                }
            }

            // Full primal step reaching the boundary of constraint p.
            let slack = dot(a_p, &x) - b[p];
            let t2 = slack / (z_norm * z_norm);
            match blocking {
                Some((l, t1)) if t1 < t2 => {
                    axpy(-t1, &z, &mut x);
                    for (j, &rj) in r.iter().enumerate() {
                        lambda_w[j] -= t1 * rj;
                    }
                    u += t1;
                    working.remove(l);
                    lambda_w.remove(l);
                    // Keep driving the same entering constraint.
                    continue;
                }
                _ => {
                    axpy(-t2, &z, &mut x);
                    for (j, &rj) in r.iter().enumerate() {
                        lambda_w[j] -= t2 * rj;
                    }
                    u += t2;
                    working.push(p);
                    lambda_w.push(u);
                    continue 'outer;
                }
            }
        }
    }
}

fn infeasible(certificate: Vec<f64>, d: usize, _m: usize) -> QpSolution {
    QpSolution {
        status: QpStatus::Infeasible,
        delta: vec![0.0; d],
        lambda: certificate,
        objective: f64::INFINITY,
    }
}

/// Re-solves the equality system on the final working set for a crisp
/// primal/dual pair and certifies it.
fn finish(
    problem: &QpProblem,
    x: &[f64],
    working: &[usize],
    lambda_w: &[f64],
) -> Result<QpSolution> {
    let m = problem.constraints();
    let assemble = |x: &[f64], lambda_w: &[f64]| -> QpSolution {
        let mut lambda = vec![0.0; m];
        for (&idx, &l) in working.iter().zip(lambda_w) {
            lambda[idx] = l.max(0.0);
        }
        QpSolution {
            status: QpStatus::Optimal,
            delta: x.to_vec(),
            lambda,
            objective: 0.5 * dot(x, x),
        }
    };

    // Polished candidate from the equality system on the working set.
    if let Some(lam) = solve_working_set(&problem.a, &problem.b, working) {
        if lam.iter().all(|&l| l >= -1e-11) {
            let mut delta = vec![0.0; problem.dim()];
            for (&idx, &l) in working.iter().zip(&lam) {
                axpy(-l, problem.a.row(idx), &mut delta);
            }
            let polished = assemble(&delta, &lam);
            let res = kkt_residuals(problem, &polished.delta, &polished.lambda);
            if res.certifies(norm(&polished.delta)) {
                return Ok(polished);
            }
        }
    }
    // Fall back to the iterate as accumulated.
    let candidate = assemble(x, lambda_w);
    let res = kkt_residuals(problem, &candidate.delta, &candidate.lambda);
    if res.certifies(norm(&candidate.delta)) {
        return Ok(candidate);
    }
    Err(Error::NotConverged(format!(
        "active-set solution failed KKT certification: {res:?}"
    )))
}

/// Coefficients r with `Ab^T r` the projection of `row` onto the span of
/// the working-set rows (least squares via the Gram matrix).
fn expansion_coefficients(a: &DenseMatrix, working: &[usize], row: &[f64]) -> Result<Vec<f64>> {
    let w = working.len();
    if w == 0 {
        return Ok(Vec::new());
    }
    let mut gram = vec![0.0; w * w];
    let mut rhs = vec![0.0; w];
    for (p, &i) in working.iter().enumerate() {
        for (q, &j) in working.iter().enumerate().skip(p) {
            let g = dot(a.row(i), a.row(j));
            gram[p * w + q] = g;
            gram[q * w + p] = g;
        }
        rhs[p] = dot(a.row(i), row);
    }
    cholesky_solve_with_jitter(gram, w, &rhs).ok_or_else(|| {
        Error::NotConverged("active-set Gram system is numerically singular".into())
    })
}

/// Solves `(A_W A_W^T) x = -b_W`.
fn solve_working_set(a: &DenseMatrix, b: &[f64], working: &[usize]) -> Option<Vec<f64>> {
    let w = working.len();
    if w == 0 {
        return Some(Vec::new());
    }
    let mut gram = vec![0.0; w * w];
    let mut rhs = vec![0.0; w];
    for (p, &i) in working.iter().enumerate() {
        for (q, &j) in working.iter().enumerate().skip(p) {
            let g = dot(a.row(i), a.row(j));
            gram[p * w + q] = g;
            gram[q * w + p] = g;
        }
        rhs[p] = -b[i];
    }
    cholesky_solve_with_jitter(gram, w, &rhs)
}

fn cholesky_solve_with_jitter(gram: Vec<f64>, w: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    let scale = (0..w).map(|i| gram[i * w + i]).fold(0.0, f64::max);
    for attempt in 0..3 {
        let jitter = if attempt == 0 { 0.0 } else { scale * 1e-13 * 10f64.powi(attempt) };
        let mut g = gram.clone();
        for i in 0..w {
            g[i * w + i] += jitter;
        }
        if cholesky(&mut g, w) {
            return Some(chol_solve(&g, w, rhs));
        }
    }
    None
}

/// In-place lower Cholesky; false when the matrix is not positive definite.
fn cholesky(g: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = g[j * n + j];
        for k in 0..j {
            d -= g[j * n + k] * g[j * n + k];
        }
        if d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        g[j * n + j] = d;
        for i in j + 1..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= g[i * n + k] * g[j * n + k];
            }
            g[i * n + j] = s / d;
        }
    }
    true
}

fn chol_solve(l: &[f64], n: usize, rhs: &[f64]) -> Vec<f64> {
    let mut y = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Verifies a Farkas certificate candidate: d >= 0 (after clamping),
/// A^T d ~ 0 and b^T d < 0.
fn verify_farkas(a: &DenseMatrix, b: &[f64], candidate: &[f64]) -> bool {
    let mut d: Vec<f64> = candidate.iter().map(|&l| l.max(0.0)).collect();
    let d_norm = norm(&d);
    if d_norm == 0.0 {
        return false;
    }
    scale(1.0 / d_norm, &mut d);
    let mut at_d = vec![0.0; a.cols()];
    let mut row_scale: f64 = 0.0;
    for (i, &di) in d.iter().enumerate() {
        if di != 0.0 {
            axpy(di, a.row(i), &mut at_d);
        }
        row_scale = row_scale.max(norm(a.row(i)));
    }
    let b_term = dot(b, &d);
    let b_scale = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    norm(&at_d) <= 1e-8 * row_scale.max(1.0) && b_term < -1e-10 * b_scale
}
