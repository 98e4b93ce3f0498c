//! Constraint matrices for the goodness-of-fit tests.
//!
//! Every builder maps the data to the unit interval (through a known cdf, a
//! fitted parametric cdf, or empirical ranks) and evaluates the cosine basis
//! φ_k(u) = √2 cos(kπu) there. Row j of the result is the constraint vector
//! of observation j.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distributions::{normal_cdf, normal_quantile, Cdf};
use crate::el_core::ConstraintMatrix;
use crate::error::{invalid_input, ElError, Result};

/// φ_k(x) = √2 cos(kπx) on [0, 1].
pub fn phi(k: usize, x: f64) -> Result<f64> {
    if k == 0 {
        return invalid_input("basis index must be at least 1");
    }
    check_unit(x)?;
    Ok(phi_unchecked(k, x))
}

#[inline]
fn phi_unchecked(k: usize, x: f64) -> f64 {
    SQRT_2 * (k as f64 * PI * x).cos()
}

fn check_unit(u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return invalid_input(format!("basis argument must lie in [0, 1], got {u}"));
    }
    Ok(())
}

fn check_finite(name: &str, data: &[f64]) -> Result<()> {
    if data.is_empty() {
        return invalid_input(format!("{name} is empty"));
    }
    if let Some(j) = data.iter().position(|v| !v.is_finite()) {
        return invalid_input(format!("{name} has a non-finite value at index {j}"));
    }
    Ok(())
}

/// The first `m` cosine functions, optionally preceded by the constant 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub m: usize,
    pub include_constant: bool,
}

impl BasisSpec {
    pub fn new(m: usize, include_constant: bool) -> Result<Self> {
        if m == 0 {
            return invalid_input("basis size must be at least 1");
        }
        Ok(Self {
            m,
            include_constant,
        })
    }

    pub fn dim(&self) -> usize {
        self.m + usize::from(self.include_constant)
    }

    /// Appends the basis evaluated at `u` to `out`.
    pub fn eval_into(&self, u: f64, out: &mut Vec<f64>) -> Result<()> {
        check_unit(u)?;
        if self.include_constant {
            out.push(1.0);
        }
        out.extend((1..=self.m).map(|k| phi_unchecked(k, u)));
        Ok(())
    }

    pub fn eval(&self, u: f64) -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(self.dim());
        self.eval_into(u, &mut v)?;
        Ok(v)
    }
}

/// rank_j / n with 1-based ranks; ties keep input order.
pub fn empirical_uniform_ranks(data: &[f64]) -> Vec<f64> {
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    // sort_by is stable, so equal values keep their index order
    order.sort_by(|&a, &b| data[a].total_cmp(&data[b]));
    let mut ranks = vec![0.0; n];
    for (pos, &j) in order.iter().enumerate() {
        ranks[j] = (pos + 1) as f64 / n as f64;
    }
    ranks
}

fn basis_matrix(us: &[f64], basis: BasisSpec, scale: Option<&[f64]>) -> Result<ConstraintMatrix> {
    let dim = basis.dim();
    let mut values = Vec::with_capacity(us.len() * dim);
    for (j, &u) in us.iter().enumerate() {
        let start = values.len();
        basis.eval_into(u, &mut values)?;
        if let Some(s) = scale {
            values[start..].iter_mut().for_each(|v| *v *= s[j]);
        }
    }
    ConstraintMatrix::new(us.len(), dim, values)
}

fn apply_cdf(data: &[f64], cdf: &(impl Cdf + ?Sized)) -> Result<Vec<f64>> {
    data.iter()
        .map(|&x| {
            let u = cdf.cdf(x);
            if (0.0..=1.0).contains(&u) {
                Ok(u)
            } else {
                invalid_input(format!("cdf returned {u} at x = {x}, outside [0, 1]"))
            }
        })
        .collect()
}

/// Entry (j, k) = φ_k(F0(X_j)), k = 1..m.
pub fn constraints_fixed_dist(
    data: &[f64],
    f0: &(impl Cdf + ?Sized),
    m: usize,
) -> Result<ConstraintMatrix> {
    check_finite("data", data)?;
    let basis = BasisSpec::new(m, false)?;
    basis_matrix(&apply_cdf(data, f0)?, basis, None)
}

/// A regular parametric model with a closed-form efficient estimator.
pub trait ParametricModel: Send + Sync {
    fn name(&self) -> &'static str;
    /// Parameter dimension q.
    fn dim(&self) -> usize;
    /// Maximum likelihood estimate.
    fn fit(&self, data: &[f64]) -> Result<Vec<f64>>;
    fn cdf(&self, theta: &[f64], x: f64) -> f64;
    fn quantile(&self, theta: &[f64], p: f64) -> Result<f64>;
    /// Score ℓ̇_θ(x), the gradient of the log density in θ.
    fn score(&self, theta: &[f64], x: f64) -> Vec<f64>;
    /// Fisher information J(θ).
    fn information(&self, theta: &[f64]) -> DMatrix<f64>;
}

/// Families with closed-form MLEs.
///
/// `Normal` is parametrised by θ = (μ, σ²), `Exponential` by its rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParametricFamily {
    Normal,
    Exponential,
}

impl std::str::FromStr for ParametricFamily {
    type Err = ElError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Self::Normal),
            "exp" | "exponential" => Ok(Self::Exponential),
            other => invalid_input(format!("unknown parametric family `{other}`")),
        }
    }
}

impl ParametricModel for ParametricFamily {
    fn name(&self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Exponential => "exponential",
        }
    }

    fn dim(&self) -> usize {
        match self {
            Self::Normal => 2,
            Self::Exponential => 1,
        }
    }

    fn fit(&self, data: &[f64]) -> Result<Vec<f64>> {
        check_finite("data", data)?;
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        match self {
            Self::Normal => {
                let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                if !(var > 0.0) {
                    return Err(ElError::DegenerateData(
                        "normal fit needs data with positive variance".into(),
                    ));
                }
                Ok(vec![mean, var])
            }
            Self::Exponential => {
                if let Some(x) = data.iter().find(|&&x| x <= 0.0) {
                    return invalid_input(format!(
                        "exponential family needs positive data, found {x}"
                    ));
                }
                Ok(vec![1.0 / mean])
            }
        }
    }

    fn cdf(&self, theta: &[f64], x: f64) -> f64 {
        match self {
            Self::Normal => normal_cdf((x - theta[0]) / theta[1].sqrt()),
            Self::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-theta[0] * x).exp_m1()
                }
            }
        }
    }

    fn quantile(&self, theta: &[f64], p: f64) -> Result<f64> {
        match self {
            Self::Normal => Ok(theta[0] + theta[1].sqrt() * normal_quantile(p)?),
            Self::Exponential => {
                if !(p > 0.0 && p < 1.0) {
                    return invalid_input(format!("probability must lie in (0, 1), got {p}"));
                }
                Ok(-(-p).ln_1p() / theta[0])
            }
        }
    }

    fn score(&self, theta: &[f64], x: f64) -> Vec<f64> {
        match self {
            Self::Normal => {
                let (mu, var) = (theta[0], theta[1]);
                let d = x - mu;
                vec![d / var, -0.5 / var + d * d / (2.0 * var * var)]
            }
            Self::Exponential => vec![1.0 / theta[0] - x],
        }
    }

    fn information(&self, theta: &[f64]) -> DMatrix<f64> {
        match self {
            Self::Normal => {
                let var = theta[1];
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                    1.0 / var,
                    1.0 / (2.0 * var * var),
                ]))
            }
            Self::Exponential => DMatrix::from_element(1, 1, 1.0 / (theta[0] * theta[0])),
        }
    }
}

/// Fits θ̂ by maximum likelihood and returns φ_k(F_θ̂(X_j)), k = 1..m,
/// together with θ̂.
pub fn constraints_parametric(
    data: &[f64],
    family: &(impl ParametricModel + ?Sized),
    m: usize,
) -> Result<(ConstraintMatrix, Vec<f64>)> {
    let theta = family.fit(data)?;
    let basis = BasisSpec::new(m, false)?;
    let us: Vec<f64> = data.iter().map(|&x| family.cdf(&theta, x)).collect();
    Ok((basis_matrix(&us, basis, None)?, theta))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Columns k = 0..m: sign(X_j)·φ_k(R_j) with φ_0 ≡ 1, where R_j is the
/// empirical-rank transform of |X_j|.
pub fn constraints_symmetry(data: &[f64], m: usize) -> Result<ConstraintMatrix> {
    check_finite("data", data)?;
    let basis = BasisSpec::new(m, true)?;
    let abs: Vec<f64> = data.iter().map(|x| x.abs()).collect();
    let signs: Vec<f64> = data.iter().map(|&x| sign(x)).collect();
    basis_matrix(&empirical_uniform_ranks(&abs), basis, Some(&signs))
}

/// How the marginal distributions enter the independence test.
#[derive(Clone, Copy)]
pub enum MarginSpec<'a> {
    Known { x: &'a dyn Cdf, y: &'a dyn Cdf },
    Empirical,
}

impl MarginSpec<'_> {
    pub fn is_empirical(&self) -> bool {
        matches!(self, MarginSpec::Empirical)
    }
}

impl std::fmt::Debug for MarginSpec<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MarginSpec::Known { .. } => f.write_str("Known"),
            MarginSpec::Empirical => f.write_str("Empirical"),
        }
    }
}

/// r² columns, entry φ_k(U_j)·φ_l(V_j) in (k, l) row-major order (k outer).
pub fn constraints_independence(
    x: &[f64],
    y: &[f64],
    r: usize,
    margins: MarginSpec<'_>,
) -> Result<ConstraintMatrix> {
    if x.len() != y.len() {
        return invalid_input(format!("x has {} values but y has {}", x.len(), y.len()));
    }
    check_finite("x", x)?;
    check_finite("y", y)?;
    let basis = BasisSpec::new(r, false)?;
    let (us, vs) = match margins {
        MarginSpec::Known { x: fx, y: fy } => (apply_cdf(x, fx)?, apply_cdf(y, fy)?),
        MarginSpec::Empirical => (empirical_uniform_ranks(x), empirical_uniform_ranks(y)),
    };
    let mut values = Vec::with_capacity(x.len() * r * r);
    for (&u, &v) in us.iter().zip(&vs) {
        let a = basis.eval(u)?;
        let b = basis.eval(v)?;
        for ak in &a {
            values.extend(b.iter().map(|bl| ak * bl));
        }
    }
    ConstraintMatrix::new(x.len(), r * r, values)
}

/// The two empirical likelihoods for a simple linear regression coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum RegressionMethod {
    /// Constraints (e_j, X_j e_j).
    Delta0,
    /// Constraints u_r(Ĝ(X_j))·e_j with u_r = (1, φ_1, …, φ_r).
    Delta1 { r: usize },
}

impl RegressionMethod {
    pub fn df(&self) -> usize {
        match self {
            Self::Delta0 => 2,
            Self::Delta1 { r } => r + 1,
        }
    }

    pub fn r(&self) -> Option<usize> {
        match self {
            Self::Delta0 => None,
            Self::Delta1 { r } => Some(*r),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Delta0 => "delta0",
            Self::Delta1 { .. } => "delta1",
        }
    }
}

pub fn regression_residuals(x: &[f64], y: &[f64], theta: [f64; 2]) -> Vec<f64> {
    x.iter()
        .zip(y)
        .map(|(xj, yj)| yj - theta[0] - theta[1] * xj)
        .collect()
}

pub fn constraints_regression(
    x: &[f64],
    y: &[f64],
    theta: [f64; 2],
    method: RegressionMethod,
) -> Result<ConstraintMatrix> {
    if x.len() != y.len() {
        return invalid_input(format!("x has {} values but y has {}", x.len(), y.len()));
    }
    check_finite("x", x)?;
    check_finite("y", y)?;
    if !theta.iter().all(|t| t.is_finite()) {
        return invalid_input("theta must be finite");
    }
    let e = regression_residuals(x, y, theta);
    match method {
        RegressionMethod::Delta0 => {
            let values = x
                .iter()
                .zip(&e)
                .flat_map(|(xj, ej)| [*ej, xj * ej])
                .collect();
            ConstraintMatrix::new(x.len(), 2, values)
        }
        RegressionMethod::Delta1 { r } => {
            let basis = BasisSpec::new(r, true)?;
            basis_matrix(&empirical_uniform_ranks(x), basis, Some(&e))
        }
    }
}

/// Frobenius distance between (1/n) Σ u_r(R_j) u_r(R_j)ᵀ and the identity,
/// where R_j are the empirical-rank transforms of `data`.
pub fn rank_gram_deviation(data: &[f64], r: usize) -> Result<f64> {
    check_finite("data", data)?;
    let basis = BasisSpec::new(r, true)?;
    let mat = basis_matrix(&empirical_uniform_ranks(data), basis, None)?;
    let d = basis.dim();
    let n = data.len() as f64;
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for row in mat.iter_rows() {
        for a in 0..d {
            for b in 0..d {
                gram[(a, b)] += row[a] * row[b];
            }
        }
    }
    gram /= n;
    Ok((gram - DMatrix::identity(d, d)).norm())
}
