//! Empirical likelihood for a set of moment constraints.
//!
//! Given constraint vectors x_1, …, x_n in R^m, the empirical likelihood
//! ratio is the maximum of Π nπ_j over probability weights π with
//! Σ π_j x_j = 0. When the origin is interior to the convex hull of the
//! x_j the maximiser is π_j = 1 / (n (1 + ζᵀx_j)), where ζ is the unique root
//! of Σ x_j / (1 + ζᵀx_j) = 0 on the domain {ζ : 1 + ζᵀx_j > 0 ∀j}, and
//! −2 log EL = 2 Σ log(1 + ζᵀx_j).
//!
//! The root is the minimiser of the strictly convex dual
//! d(ζ) = −Σ log(1 + ζᵀx_j), which [`solve_dual`] finds by damped Newton with
//! a backtracking line search that never leaves the barrier domain.
//!
//! [`hull_interior_check`] implements the sufficient spectral condition
//! λ > 5·|x̄|·x*, with λ the smallest eigenvalue of S = (1/n) Σ x_j x_jᵀ and
//! x* = max_j |x_j|. When it holds the root exists, is unique, and satisfies
//! |ζ| ≤ |x̄| / (λ − |x̄| x*).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, invalid_input, ElError, Result};

/// Rows are observations, columns are constraints; stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ConstraintMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid_input(format!(
                "constraint matrix needs at least one row and one column, got {rows}x{cols}"
            ));
        }
        if values.len() != rows * cols {
            return invalid_input(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return invalid_input(format!(
                "non-finite entry at row {}, column {}",
                pos / cols,
                pos % cols
            ));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return invalid_input("constraint matrix needs at least one row");
        };
        let cols = first.as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (j, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return invalid_input(format!("row {j} has {} entries, expected {cols}", r.len()));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    /// A single-constraint matrix from a column of values.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.cols..(j + 1) * self.cols]
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.cols + k]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[k]).collect()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for r in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Returns a copy with the rows reordered so that row `j` of the result
    /// is row `perm[j]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.rows {
            return invalid_input("permutation length does not match row count");
        }
        let mut values = Vec::with_capacity(self.values.len());
        for &p in perm {
            if p >= self.rows {
                return invalid_input("permutation index out of range");
            }
            values.extend_from_slice(self.row(p));
        }
        Self::new(self.rows, self.cols, values)
    }

    /// Right-multiplies every row vector: x_j ↦ Aᵀ x_j.
    pub fn transform(&self, a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != self.cols {
            return invalid_input("transform dimension mismatch");
        }
        let out_cols = a.ncols();
        let mut values = Vec::with_capacity(self.rows * out_cols);
        for r in self.iter_rows() {
            for c in 0..out_cols {
                values.push((0..self.cols).map(|k| r[k] * a[(k, c)]).sum());
            }
        }
        Self::new(self.rows, out_cols, values)
    }
}

/// Sample moments and spectral extremes of a constraint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub xbar: Vec<f64>,
    /// (1/n) Σ x_j x_jᵀ
    pub s: DMatrix<f64>,
    /// smallest eigenvalue of `s`, clamped at 0
    pub lambda: f64,
    /// largest eigenvalue of `s`
    pub big_lambda: f64,
    /// max_j |x_j|
    pub xstar: f64,
}

impl SpectralSummary {
    pub fn xbar_norm(&self) -> f64 {
        norm(&self.xbar)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn second_moment(points: &ConstraintMatrix) -> DMatrix<f64> {
    let m = points.cols();
    let mut s = DMatrix::<f64>::zeros(m, m);
    for r in points.iter_rows() {
        for a in 0..m {
            for b in 0..=a {
                s[(a, b)] += r[a] * r[b];
            }
        }
    }
    let n = points.rows() as f64;
    for a in 0..m {
        for b in 0..=a {
            let v = s[(a, b)] / n;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    s
}

pub fn spectral_summary(points: &ConstraintMatrix) -> Result<SpectralSummary> {
    if points.as_slice().iter().any(|v| !v.is_finite()) {
        return invalid_input("constraint matrix has non-finite entries");
    }
    let xbar = points.column_means();
    let s = second_moment(points);
    let xstar = points.iter_rows().map(norm).fold(0.0, f64::max);
    let eig = SymmetricEigen::new(s.clone());
    let lambda = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let big_lambda = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    Ok(SpectralSummary {
        xbar,
        s,
        lambda,
        big_lambda,
        xstar,
    })
}

/// True iff λ > 5·|x̄|·x*. Sufficient for the origin to be interior to the
/// convex hull of the rows and for S to be invertible.
pub fn hull_interior_check(summary: &SpectralSummary) -> bool {
    summary.lambda > 5.0 * summary.xbar_norm() * summary.xstar
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once ‖(1/n) Σ x_j / (1 + ζᵀx_j)‖ ≤ grad_tol.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Line-search floor on the step length.
    pub min_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iter: 100,
            min_step: 1e-12,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) || !self.grad_tol.is_finite() {
            return invalid_config(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if self.max_iter == 0 {
            return invalid_config("max_iter must be at least 1");
        }
        if !(self.min_step > 0.0) || self.min_step >= 1.0 {
            return invalid_config(format!(
                "min_step must lie in (0, 1), got {}",
                self.min_step
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElSolution {
    pub zeta: Vec<f64>,
    /// 2 Σ log(1 + ζᵀx_j), or +∞ when no interior root exists.
    pub neg2_log_el: f64,
    /// An interior root was found (or the problem is trivially solved at ζ = 0).
    pub feasible: bool,
    pub converged: bool,
    /// Outcome of [`hull_interior_check`]; sufficient but not necessary for feasibility.
    pub hull_criterion: bool,
    /// S was singular and a ridge was needed for `quadratic_approx`.
    pub degenerate: bool,
    /// ‖(1/n) Σ x_j / (1 + ζᵀx_j)‖ at the returned ζ.
    pub residual_norm: f64,
    pub iterations: usize,
    /// n·x̄ᵀS⁻¹x̄
    pub quadratic_approx: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub xbar_norm: f64,
    pub xstar: f64,
}

impl ElSolution {
    /// Weights π_j = 1 / (n (1 + ζᵀx_j)) of the maximising distribution.
    pub fn weights(&self, points: &ConstraintMatrix) -> Option<Vec<f64>> {
        if !self.feasible || points.cols() != self.zeta.len() {
            return None;
        }
        let n = points.rows() as f64;
        Some(
            points
                .iter_rows()
                .map(|r| 1.0 / (n * (1.0 + dot(&self.zeta, r))))
                .collect(),
        )
    }
}

/// Minimum admissible 1 + ζᵀx_j along the line search.
const BARRIER_FLOOR: f64 = 1e-10;
const ARMIJO: f64 = 1e-4;
/// A denominator this large means some weight fell below 1e-12 / n; the
/// iterates are running off to infinity along a separating direction.
const DIVERGENCE_LIMIT: f64 = 1e12;
/// At a root the weights sum to one: Σ π_j = 1 − ζᵀ r̄ with r̄ the mean
/// residual. The residual alone also vanishes at infinity, so both are checked.
const MASS_TOL: f64 = 1e-6;
/// Total weight below this on exit means the mass escaped to infinity.
const ESCAPED_MASS: f64 = 1e-6;

/// d(ζ) = −Σ log(1 + ζᵀx_j), or `None` outside the barrier domain.
pub fn dual_objective(points: &ConstraintMatrix, zeta: &[f64]) -> Option<f64> {
    let mut acc = 0.0;
    for r in points.iter_rows() {
        let t = dot(zeta, r);
        if !(1.0 + t > 0.0) {
            return None;
        }
        acc -= t.ln_1p();
    }
    Some(acc)
}

fn quadratic_form(points: &ConstraintMatrix, summary: &SpectralSummary) -> (f64, bool) {
    let m = points.cols();
    let n = points.rows() as f64;
    let xbar = DVector::from_column_slice(&summary.xbar);
    if summary.xbar_norm() == 0.0 {
        return (0.0, summary.lambda <= 0.0);
    }
    if let Some(ch) = summary.s.clone().cholesky() {
        if summary.lambda > 0.0 {
            let sol = ch.solve(&xbar);
            return (n * xbar.dot(&sol), false);
        }
    }
    let ridge = 1e-12 * summary.s.trace() / m as f64;
    let mut s = summary.s.clone();
    for i in 0..m {
        s[(i, i)] += ridge.max(f64::MIN_POSITIVE);
    }
    let q = match s.cholesky() {
        Some(ch) => n * xbar.dot(&ch.solve(&xbar)),
        None => f64::INFINITY,
    };
    (q, true)
}

/// Solves H·Δ = r for the Newton step, falling back to an eigenvalue
/// pseudo-inverse when H is numerically singular.
fn newton_direction(h: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = h.clone().cholesky() {
        let d = ch.solve(r);
        if d.iter().all(|v| v.is_finite()) {
            return d;
        }
    }
    let eig = SymmetricEigen::new(h.clone());
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = top * h.nrows() as f64 * 1e-13;
    let mut d = DVector::zeros(r.len());
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > cutoff {
            let v = eig.eigenvectors.column(i);
            d += v * (v.dot(r) / ev);
        }
    }
    d
}

struct Evaluation {
    denominators: Vec<f64>,
    residual: DVector<f64>,
    objective: f64,
}

fn evaluate(points: &ConstraintMatrix, zeta: &DVector<f64>) -> Evaluation {
    let m = points.cols();
    let mut residual = DVector::zeros(m);
    let mut objective = 0.0;
    let mut denominators = Vec::with_capacity(points.rows());
    for r in points.iter_rows() {
        let t = dot(zeta.as_slice(), r);
        let d = 1.0 + t;
        denominators.push(d);
        objective -= t.ln_1p();
        for k in 0..m {
            residual[k] += r[k] / d;
        }
    }
    Evaluation {
        denominators,
        residual,
        objective,
    }
}

fn hessian(points: &ConstraintMatrix, denominators: &[f64]) -> DMatrix<f64> {
    let m = points.cols();
    let mut h = DMatrix::zeros(m, m);
    for (r, &d) in points.iter_rows().zip(denominators) {
        let w = 1.0 / (d * d);
        for a in 0..m {
            for b in 0..=a {
                h[(a, b)] += w * r[a] * r[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
    h
}

/// Computes the empirical likelihood ratio for `points` by damped Newton on
/// the dual, starting from ζ = 0.
///
/// Returns `feasible = false` and `neg2_log_el = +∞` when the iterates run
/// off along a direction that separates the origin from the rows, i.e. when
/// the origin is not interior to their convex hull. Exhausting `max_iter`
/// returns the last iterate with `converged = false`.
pub fn solve_dual(points: &ConstraintMatrix, opts: &SolverOptions) -> Result<ElSolution> {
    opts.validate()?;
    let summary = spectral_summary(points)?;
    let hull_criterion = hull_interior_check(&summary);
    let (quadratic_approx, degenerate) = quadratic_form(points, &summary);
    let n = points.rows() as f64;
    let m = points.cols();

    let mut zeta = DVector::<f64>::zeros(m);
    let mut eval = evaluate(points, &zeta);
    let mut iterations = 0;
    let mut converged = false;
    let mut diverged = false;

    loop {
        let residual_norm = eval.residual.norm() / n;
        if !residual_norm.is_finite() || !eval.objective.is_finite() {
            return Err(ElError::SolverFailure(format!(
                "non-finite residual after {iterations} iterations"
            )));
        }
        if residual_norm <= opts.grad_tol {
            let mass_gap = (zeta.dot(&eval.residual) / n).abs();
            if mass_gap <= MASS_TOL {
                converged = true;
                break;
            }
        }
        if iterations >= opts.max_iter {
            break;
        }

        let h = hessian(points, &eval.denominators);
        let step = newton_direction(&h, &eval.residual);
        // directional derivative of d(ζ) along the step: ∇d = −residual
        let slope = -eval.residual.dot(&step);
        if !(slope < 0.0) {
            break;
        }

        let mut t_max = 1.0f64;
        for (r, &d) in points.iter_rows().zip(&eval.denominators) {
            let a = dot(step.as_slice(), r);
            if a < 0.0 {
                t_max = t_max.min((d - BARRIER_FLOOR) / -a);
            }
        }

        let roundoff = 8.0 * f64::EPSILON * n * (1.0 + eval.objective.abs());
        let mut t = t_max;
        let mut accepted = None;
        while t >= opts.min_step {
            let trial = &zeta + &step * t;
            if let Some(obj) = dual_objective(points, trial.as_slice()) {
                let floor_ok = points
                    .iter_rows()
                    .all(|r| 1.0 + dot(trial.as_slice(), r) >= BARRIER_FLOOR);
                if floor_ok && obj <= eval.objective + ARMIJO * t * slope {
                    accepted = Some(trial);
                    break;
                }
                // near the root the predicted decrease drops below the
                // objective's rounding error; fall back to residual decrease
                if floor_ok && -t * slope <= roundoff {
                    let trial_eval = evaluate(points, &trial);
                    if trial_eval.residual.norm() < eval.residual.norm() {
                        accepted = Some(trial);
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some(next) = accepted else {
            break;
        };

        zeta = next;
        eval = evaluate(points, &zeta);
        iterations += 1;

        if eval.denominators.iter().any(|&d| d > DIVERGENCE_LIMIT) {
            diverged = true;
            break;
        }
    }

    if converged {
        // one more full Newton step: the tolerance bounds the residual, not
        // the error in ζ, which is larger when the Hessian is small
        let h = hessian(points, &eval.denominators);
        let trial = &zeta + newton_direction(&h, &eval.residual);
        if points
            .iter_rows()
            .all(|r| 1.0 + dot(trial.as_slice(), r) >= BARRIER_FLOOR)
        {
            let polished = evaluate(points, &trial);
            if polished.residual.norm() < eval.residual.norm() {
                zeta = trial;
                eval = polished;
                iterations += 1;
            }
        }
    }
    if !converged && !diverged {
        let mass = eval.denominators.iter().map(|d| 1.0 / (n * d)).sum::<f64>();
        diverged = mass < ESCAPED_MASS;
    }
    let residual_norm = eval.residual.norm() / n;
    let feasible = !diverged;
    let neg2_log_el = if feasible {
        (-2.0 * eval.objective).max(0.0)
    } else {
        f64::INFINITY
    };
    Ok(ElSolution {
        zeta: zeta.as_slice().to_vec(),
        neg2_log_el,
        feasible,
        converged: converged && feasible,
        hull_criterion,
        degenerate,
        residual_norm,
        iterations,
        quadratic_approx,
        lambda: summary.lambda,
        big_lambda: summary.big_lambda,
        xbar_norm: summary.xbar_norm(),
        xstar: summary.xstar,
    })
}

/// |−2 log EL − n x̄ᵀS⁻¹x̄| / √(2m): the standardized error of the quadratic
/// expansion of the statistic.
pub fn quadratic_approx_gap(sol: &ElSolution, m: usize) -> f64 {
    (sol.neg2_log_el - sol.quadratic_approx).abs() / (2.0 * m as f64).sqrt()
}

/// |x̄| / (λ − |x̄| x*), the a-priori bound on |ζ| when the hull check passes.
pub fn zeta_bound(summary: &SpectralSummary) -> f64 {
    let xb = summary.xbar_norm();
    xb / (summary.lambda - xb * summary.xstar)
}

/// (Λ + Λ³/λ²) · n · x* · |x̄|³ / (λ − |x̄| x*)³, bounding the distance
/// between −2 log EL and n x̄ᵀS⁻¹x̄ when the hull check passes.
pub fn expansion_envelope(summary: &SpectralSummary, n: usize) -> f64 {
    let xb = summary.xbar_norm();
    let (lo, hi) = (summary.lambda, summary.big_lambda);
    (hi + hi.powi(3) / (lo * lo)) * n as f64 * summary.xstar * xb.powi(3)
        / (lo - xb * summary.xstar).powi(3)
}
