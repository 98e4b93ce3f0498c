//! Monte Carlo harness: the heteroscedastic regression design behind the
//! δ0/δ1 power comparison, and null-calibration studies for every test.
//!
//! Every replication draws from its own generator seeded by
//! `derive_seed(master, [cell, rep])`, so results do not depend on the number
//! of worker threads or on scheduling order.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{MarginSpec, ParametricFamily, RegressionMethod};
use crate::distributions::{derive_seed, normal_cdf, seeded_rng, CalibrationMethod, Law};
use crate::error::{invalid_config, Result};
use crate::gof_tests::{
    test_fixed_distribution, test_independence, test_parametric, test_regression_coef,
    test_symmetry, TestKind, TestOptions, TestResult,
};

/// Y = β₁ + β₂X + min(√(1 + X²), cap)·η with X and η independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionDesign {
    pub n: usize,
    /// Hypothesised coefficients under test.
    pub theta0: [f64; 2],
    /// True coefficients generating the data.
    pub beta: [f64; 2],
    pub covariate_law: Law,
    pub eta_law: Law,
    pub scale_cap: f64,
}

impl Default for RegressionDesign {
    fn default() -> Self {
        Self {
            n: 100,
            theta0: [1.0, 2.0],
            beta: [1.0, 2.0],
            covariate_law: Law::StudentT3,
            eta_law: Law::STANDARD_NORMAL,
            scale_cap: 100.0,
        }
    }
}

impl RegressionDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return invalid_config(format!("regression design needs n >= 3, got {}", self.n));
        }
        if !(self.scale_cap > 0.0) {
            return invalid_config("scale cap must be positive");
        }
        self.covariate_law.validate()?;
        self.eta_law.validate()
    }

    pub fn scale(&self, x: f64) -> f64 {
        (1.0 + x * x).sqrt().min(self.scale_cap)
    }
}

pub fn generate_regression_sample_with<R: RngCore + ?Sized>(
    design: &RegressionDesign,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(design.n);
    let mut y = Vec::with_capacity(design.n);
    for _ in 0..design.n {
        let xj = design.covariate_law.sample(rng);
        let eta = design.eta_law.sample(rng);
        x.push(xj);
        y.push(design.beta[0] + design.beta[1] * xj + design.scale(xj) * eta);
    }
    (x, y)
}

pub fn generate_regression_sample(
    design: &RegressionDesign,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    design.validate()?;
    Ok(generate_regression_sample_with(
        design,
        &mut seeded_rng(seed),
    ))
}

/// The 2 × 2 × 5 grid of error law, covariate law and true coefficients of
/// the standard power comparison, in row order.
pub fn table1_designs(n: usize) -> Vec<RegressionDesign> {
    let etas = [
        Law::STANDARD_NORMAL,
        Law::Laplace {
            location: 0.0,
            scale: 0.5,
        },
    ];
    let covariates = [Law::StudentT3, Law::Exponential { mean: 5.0 }];
    let betas = [[0.6, 2.3], [0.8, 1.5], [1.0, 2.0], [1.2, 2.2], [1.4, 1.7]];
    let mut out = Vec::with_capacity(20);
    for eta_law in etas {
        for covariate_law in covariates {
            for beta in betas {
                out.push(RegressionDesign {
                    n,
                    beta,
                    covariate_law,
                    eta_law,
                    ..RegressionDesign::default()
                });
            }
        }
    }
    out
}

/// δ0 followed by δ1 with r = 2, 3, 4, 5.
pub fn table1_methods() -> Vec<RegressionMethod> {
    let mut m = vec![RegressionMethod::Delta0];
    m.extend((2..=5).map(|r| RegressionMethod::Delta1 { r }));
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub eta_law: Law,
    pub covariate_law: Law,
    pub beta: [f64; 2],
    pub method: RegressionMethod,
    /// Rejections over replications that produced a statistic.
    pub rate: f64,
    pub stderr: f64,
    pub reps: usize,
    pub rejections: usize,
    /// Replications where the solver raised an error; excluded from `rate`.
    pub failed: usize,
    /// Replications with an infeasible constraint set, counted as rejections.
    pub infeasible: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub cells: Vec<PowerCell>,
}

impl PowerTable {
    pub fn cell(
        &self,
        eta_law: Law,
        covariate_law: Law,
        beta: [f64; 2],
        method: RegressionMethod,
    ) -> Option<&PowerCell> {
        self.cells.iter().find(|c| {
            c.eta_law == eta_law
                && c.covariate_law == covariate_law
                && c.beta == beta
                && c.method == method
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Accept,
    Reject,
    Infeasible,
    Failed,
}

fn classify(res: Result<TestResult>, alpha: f64) -> Outcome {
    match res {
        Err(_) => Outcome::Failed,
        Ok(r) if r.infeasible => Outcome::Infeasible,
        Ok(r) if r.p_value < alpha => Outcome::Reject,
        Ok(_) => Outcome::Accept,
    }
}

struct Tally {
    rejections: usize,
    failed: usize,
    infeasible: usize,
    reps: usize,
}

impl Tally {
    fn from_outcomes(outcomes: impl Iterator<Item = Outcome>) -> Self {
        let mut t = Tally {
            rejections: 0,
            failed: 0,
            infeasible: 0,
            reps: 0,
        };
        for o in outcomes {
            t.reps += 1;
            match o {
                Outcome::Accept => {}
                Outcome::Reject => t.rejections += 1,
                Outcome::Infeasible => {
                    t.rejections += 1;
                    t.infeasible += 1;
                }
                Outcome::Failed => t.failed += 1,
            }
        }
        t
    }

    fn rate(&self) -> (f64, f64) {
        let used = self.reps - self.failed;
        if used == 0 {
            return (f64::NAN, f64::NAN);
        }
        let p = self.rejections as f64 / used as f64;
        (p, (p * (1.0 - p) / used as f64).sqrt())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid_config(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

/// Rejection frequencies of each method on each design. Within a design and
/// replication all methods see the same sample.
pub fn power_study(
    designs: &[RegressionDesign],
    methods: &[RegressionMethod],
    alpha: f64,
    reps: usize,
    seed: u64,
) -> Result<PowerTable> {
    check_alpha(alpha)?;
    if reps == 0 {
        return invalid_config("reps must be at least 1");
    }
    for d in designs {
        d.validate()?;
    }
    let opts = TestOptions {
        alphas: vec![alpha],
        ..TestOptions::default()
    };
    let mut cells = Vec::with_capacity(designs.len() * methods.len());
    for (di, design) in designs.iter().enumerate() {
        let per_rep: Vec<Vec<Outcome>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let rep_seed = derive_seed(seed, &[di as u64, rep as u64]);
                let (x, y) = generate_regression_sample_with(design, &mut seeded_rng(rep_seed));
                methods
                    .iter()
                    .map(|&m| {
                        classify(test_regression_coef(&x, &y, design.theta0, m, &opts), alpha)
                    })
                    .collect()
            })
            .collect();
        for (mi, &method) in methods.iter().enumerate() {
            let tally = Tally::from_outcomes(per_rep.iter().map(|o| o[mi]));
            let (rate, stderr) = tally.rate();
            cells.push(PowerCell {
                eta_law: design.eta_law,
                covariate_law: design.covariate_law,
                beta: design.beta,
                method,
                rate,
                stderr,
                reps,
                rejections: tally.rejections,
                failed: tally.failed,
                infeasible: tally.infeasible,
            });
        }
    }
    Ok(PowerTable {
        alpha,
        reps,
        seed,
        cells,
    })
}

/// A test together with a data-generating law under which its null holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "kebab-case")]
pub enum NullScenario {
    /// Data from `law`, tested against F0 = cdf of `law`.
    FixedDist { law: Law },
    /// Standard member of the family (N(0,1) or Ex(1)), parameters estimated.
    Parametric { family: ParametricFamily },
    /// Data from a law symmetric about zero.
    Symmetry { law: Law },
    /// Independent x and y, both from `law`; known margins use its cdf.
    Independence { law: Law, empirical_margins: bool },
}

impl NullScenario {
    pub fn kind(&self) -> TestKind {
        match self {
            Self::FixedDist { .. } => TestKind::FixedDist,
            Self::Parametric { .. } => TestKind::Parametric,
            Self::Symmetry { .. } => TestKind::Symmetry,
            Self::Independence { .. } => TestKind::Independence,
        }
    }

    /// Default scenario per test: uniform data, normal family, normal
    /// symmetric data, independent uniforms with known margins.
    pub fn default_for(kind: TestKind) -> Option<Self> {
        match kind {
            TestKind::FixedDist => Some(Self::FixedDist {
                law: Law::Uniform01,
            }),
            TestKind::Parametric => Some(Self::Parametric {
                family: ParametricFamily::Normal,
            }),
            TestKind::Symmetry => Some(Self::Symmetry {
                law: Law::STANDARD_NORMAL,
            }),
            TestKind::Independence => Some(Self::Independence {
                law: Law::Uniform01,
                empirical_margins: false,
            }),
            TestKind::Regression => None,
        }
    }

    fn run<R: RngCore + ?Sized>(
        &self,
        n: usize,
        basis: usize,
        opts: &TestOptions,
        rng: &mut R,
    ) -> Result<TestResult> {
        match *self {
            Self::FixedDist { law } => {
                let data = law.sample_n(n, rng);
                test_fixed_distribution(&data, &law, basis, opts)
            }
            Self::Parametric { family } => {
                let law = match family {
                    ParametricFamily::Normal => Law::STANDARD_NORMAL,
                    ParametricFamily::Exponential => Law::Exponential { mean: 1.0 },
                };
                let data = law.sample_n(n, rng);
                test_parametric(&data, &family, basis, opts)
            }
            Self::Symmetry { law } => {
                let data = law.sample_n(n, rng);
                test_symmetry(&data, basis, opts)
            }
            Self::Independence {
                law,
                empirical_margins,
            } => {
                let x = law.sample_n(n, rng);
                let y = law.sample_n(n, rng);
                let margins = if empirical_margins {
                    MarginSpec::Empirical
                } else {
                    MarginSpec::Known { x: &law, y: &law }
                };
                test_independence(&x, &y, basis, margins, opts)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullStudySpec {
    pub scenario: NullScenario,
    pub n: usize,
    /// m for the univariate tests, r for independence.
    pub basis_size: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub calibration: CalibrationMethod,
}

impl NullStudySpec {
    fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.reps == 0 {
            return invalid_config("reps must be at least 1");
        }
        if self.n < 2 {
            return invalid_config("null study needs n >= 2");
        }
        if self.basis_size == 0 {
            return invalid_config("basis size must be at least 1");
        }
        Ok(())
    }
}

/// Per-replication statistics of a null study.
#[derive(Debug, Clone, PartialEq)]
pub struct NullReplications {
    pub df: usize,
    /// `None` for replications where the test returned an error.
    pub results: Vec<Option<(f64, f64)>>,
}

/// Runs the scenario's test on `reps` independent null samples, returning
/// (statistic, p-value) pairs in replication order.
pub fn run_null_replications(spec: &NullStudySpec) -> Result<NullReplications> {
    spec.validate()?;
    let opts = TestOptions {
        calibration: spec.calibration,
        alphas: vec![spec.alpha],
        ..TestOptions::default()
    };
    // surface configuration errors (e.g. m <= q) once instead of per rep
    let probe = spec
        .scenario
        .run(spec.n, spec.basis_size, &opts, &mut seeded_rng(spec.seed));
    if let Err(e @ crate::ElError::InvalidConfig(_)) = probe {
        return Err(e);
    }
    let outcomes: Vec<Result<TestResult>> = (0..spec.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seeded_rng(derive_seed(spec.seed, &[0, rep as u64]));
            spec.scenario.run(spec.n, spec.basis_size, &opts, &mut rng)
        })
        .collect();
    let df = outcomes
        .iter()
        .find_map(|r| r.as_ref().ok().map(|t| t.df))
        .unwrap_or(0);
    let results = outcomes
        .into_iter()
        .map(|r| r.ok().map(|t| (t.statistic, t.p_value)))
        .collect();
    Ok(NullReplications { df, results })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullStudyResult {
    pub rate: f64,
    pub stderr: f64,
    pub reps: usize,
    pub rejections: usize,
    pub failed: usize,
    pub infeasible: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalitySummary {
    /// Mean of (stat − df)/√(2·df) over replications with a finite statistic.
    pub mean: f64,
    pub variance: f64,
    /// Kolmogorov–Smirnov distance of the standardized statistics to N(0,1).
    pub ks_distance: f64,
    pub reps: usize,
    pub df: usize,
}

impl NullReplications {
    pub fn rejection_summary(&self, alpha: f64) -> NullStudyResult {
        let outcomes = self.results.iter().map(|r| match r {
            None => Outcome::Failed,
            Some((s, _)) if s.is_infinite() => Outcome::Infeasible,
            Some((_, p)) if *p < alpha => Outcome::Reject,
            Some(_) => Outcome::Accept,
        });
        let tally = Tally::from_outcomes(outcomes);
        let (rate, stderr) = tally.rate();
        NullStudyResult {
            rate,
            stderr,
            reps: tally.reps,
            rejections: tally.rejections,
            failed: tally.failed,
            infeasible: tally.infeasible,
        }
    }

    pub fn normality(&self) -> NormalitySummary {
        let d = self.df.max(1) as f64;
        let z: Vec<f64> = self
            .results
            .iter()
            .flatten()
            .map(|(s, _)| (s - d) / (2.0 * d).sqrt())
            .collect();
        let finite: Vec<f64> = z.iter().copied().filter(|v| v.is_finite()).collect();
        let k = finite.len().max(1) as f64;
        let mean = finite.iter().sum::<f64>() / k;
        let variance = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
        NormalitySummary {
            mean,
            variance,
            ks_distance: ks_distance_to_normal(&z),
            reps: self.results.len(),
            df: self.df,
        }
    }
}

/// sup_t |F_N(t) − Φ(t)| for the empirical distribution of `sample`.
/// Infinite values are placed above every finite one.
pub fn ks_distance_to_normal(sample: &[f64]) -> f64 {
    if sample.is_empty() {
        return 1.0;
    }
    let mut z = sample.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal_cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn null_calibration_study(spec: &NullStudySpec) -> Result<NullStudyResult> {
    Ok(run_null_replications(spec)?.rejection_summary(spec.alpha))
}

pub fn normality_diagnostic(
    scenario: NullScenario,
    n: usize,
    m: usize,
    reps: usize,
    seed: u64,
) -> Result<NormalitySummary> {
    let spec = NullStudySpec {
        scenario,
        n,
        basis_size: m,
        alpha: 0.05,
        reps,
        seed,
        calibration: CalibrationMethod::ChiSquare,
    };
    Ok(run_null_replications(&spec)?.normality())
}
