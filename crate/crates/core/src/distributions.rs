//! Reference distributions used for calibration and simulation.
//!
//! Chi-square tail probabilities come from the regularized incomplete gamma
//! function (series below `a + 1`, Lentz continued fraction above). The normal
//! cdf goes through `erfc`; the normal quantile is Acklam's rational
//! approximation polished by a Newton step. Samplers are quantile based so a
//! fixed seed gives a bit-identical stream.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, ElError, Result};

/// How a −2 log EL statistic is turned into a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    /// Upper tail of χ²(df).
    #[default]
    ChiSquare,
    /// Upper tail of N(0,1) at (stat − df)/√(2·df).
    NormalApprox,
}

impl FromStr for CalibrationMethod {
    type Err = ElError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chisq" | "chi_square" | "chi-square" | "chisquare" => Ok(Self::ChiSquare),
            "normal" | "normal_approx" | "normal-approx" => Ok(Self::NormalApprox),
            other => invalid_input(format!("unknown calibration `{other}`")),
        }
    }
}

impl fmt::Display for CalibrationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ChiSquare => f.write_str("chi_square"),
            Self::NormalApprox => f.write_str("normal_approx"),
        }
    }
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_TINY: f64 = 1e-300;
const GAMMA_MAX_ITER: usize = 100_000;

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - libm::lgamma(a)).exp()
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / GAMMA_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < GAMMA_TINY {
            d = GAMMA_TINY;
        }
        c = b + an / c;
        if c.abs() < GAMMA_TINY {
            c = GAMMA_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Regularized lower incomplete gamma function P(a, x).
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 − P(a, x).
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn check_df(k: usize) -> Result<()> {
    if k == 0 {
        return invalid_input("chi-square degrees of freedom must be at least 1");
    }
    Ok(())
}

/// χ²(k) distribution function.
pub fn chisq_cdf(x: f64, k: usize) -> Result<f64> {
    check_df(k)?;
    if x.is_nan() || x < 0.0 {
        return invalid_input(format!("chi-square argument must be >= 0, got {x}"));
    }
    Ok(regularized_gamma_p(k as f64 / 2.0, x / 2.0))
}

/// χ²(k) survival function, accurate in the far upper tail.
pub fn chisq_sf(x: f64, k: usize) -> Result<f64> {
    check_df(k)?;
    if x.is_nan() || x < 0.0 {
        return invalid_input(format!("chi-square argument must be >= 0, got {x}"));
    }
    Ok(regularized_gamma_q(k as f64 / 2.0, x / 2.0))
}

fn chisq_pdf(x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = k as f64 / 2.0;
    ((a - 1.0) * x.ln() - x / 2.0 - a * std::f64::consts::LN_2 - libm::lgamma(a)).exp()
}

/// χ²(k) quantile: safeguarded Newton started at the Wilson–Hilferty
/// approximation, falling back to bisection whenever Newton leaves the bracket.
pub fn chisq_quantile(p: f64, k: usize) -> Result<f64> {
    check_df(k)?;
    if !(p > 0.0 && p < 1.0) {
        return invalid_input(format!("probability must lie in (0, 1), got {p}"));
    }
    let kf = k as f64;
    let h = 2.0 / (9.0 * kf);
    let z = normal_quantile(p)?;
    let mut x = kf * (1.0 - h + z * h.sqrt()).powi(3);
    if !(x > 0.0) {
        // small-x expansion P(a, y) ≈ y^a / Γ(a + 1)
        let a = kf / 2.0;
        x = 2.0 * (p.ln() + libm::lgamma(a + 1.0)).exp().powf(1.0 / a);
    }

    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while regularized_gamma_p(kf / 2.0, hi / 2.0) < p {
        lo = hi;
        hi *= 2.0;
    }
    if x <= lo || x >= hi {
        x = 0.5 * (lo + hi);
    }

    for _ in 0..500 {
        let f = regularized_gamma_p(kf / 2.0, x / 2.0) - p;
        if f == 0.0 {
            return Ok(x);
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let pdf = chisq_pdf(x, k);
        let newton = x - f / pdf;
        x = if pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal upper tail 1 − Φ(z), without cancellation.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

const ACKLAM_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.38357751867269e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const ACKLAM_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const ACKLAM_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const ACKLAM_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const ACKLAM_LOW: f64 = 0.02425;

fn acklam_tail(p: f64) -> f64 {
    let q = (-2.0 * p.ln()).sqrt();
    let c = &ACKLAM_C;
    let d = &ACKLAM_D;
    (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
        / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
}

/// Standard normal quantile Φ⁻¹(p).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return invalid_input(format!("probability must lie in (0, 1), got {p}"));
    }
    let upper = p > 0.5;
    // work on the smaller tail so the refinement is done without cancellation
    let tail = if upper { 1.0 - p } else { p };
    let mut x = if tail < ACKLAM_LOW {
        acklam_tail(tail)
    } else {
        let q = tail - 0.5;
        let r = q * q;
        let a = &ACKLAM_A;
        let b = &ACKLAM_B;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    };
    let err = normal_cdf(x) - tail;
    x -= err / normal_pdf(x);
    Ok(if upper { -x } else { x })
}

/// Anything usable as a continuous distribution function on the real line.
pub trait Cdf: Send + Sync {
    fn cdf(&self, x: f64) -> f64;
}

impl<F> Cdf for F
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Probability laws used for reference cdfs and for simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Uniform01,
    Normal {
        mean: f64,
        sd: f64,
    },
    Exponential {
        mean: f64,
    },
    StudentT3,
    Laplace {
        location: f64,
        scale: f64,
    },
    /// Degenerate law, useful for pinning a stream to a constant.
    PointMass {
        value: f64,
    },
}

impl Law {
    pub const STANDARD_NORMAL: Law = Law::Normal { mean: 0.0, sd: 1.0 };

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Law::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            Law::Exponential { mean } => mean.is_finite() && mean > 0.0,
            Law::Laplace { location, scale } => {
                location.is_finite() && scale.is_finite() && scale > 0.0
            }
            Law::PointMass { value } => value.is_finite(),
            Law::Uniform01 | Law::StudentT3 => true,
        };
        if ok {
            Ok(())
        } else {
            invalid_input(format!("invalid parameters for law {self}"))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Law::Uniform01 => x.clamp(0.0, 1.0),
            Law::Normal { mean, sd } => normal_cdf((x - mean) / sd),
            Law::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            Law::StudentT3 => {
                let s = 3f64.sqrt();
                0.5 + ((x / s) / (1.0 + x * x / 3.0) + (x / s).atan()) / PI
            }
            Law::Laplace { location, scale } => {
                let z = (x - location) / scale;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Law::PointMass { value } => {
                if x < value {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Draws one value. Exponential and Laplace use their closed-form
    /// quantiles, the normal uses `normal_quantile`, and t(3) is built as
    /// Z / √(χ²₃ / 3) from four independent normals.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law::Uniform01 => open_unit(rng),
            Law::Normal { mean, sd } => mean + sd * standard_normal(rng),
            Law::Exponential { mean } => -mean * open_unit(rng).ln(),
            Law::StudentT3 => {
                let z = standard_normal(rng);
                let chi2: f64 = (0..3).map(|_| standard_normal(rng).powi(2)).sum();
                z / (chi2 / 3.0).sqrt()
            }
            Law::Laplace { location, scale } => {
                let u = open_unit(rng);
                if u < 0.5 {
                    location + scale * (2.0 * u).ln()
                } else {
                    location - scale * (2.0 * (1.0 - u)).ln()
                }
            }
            Law::PointMass { value } => value,
        }
    }

    pub fn sample_n<R: RngCore + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// Short label in the usual textbook notation, e.g. `N(0,1)` or `t(3)`.
    pub fn label(&self) -> String {
        match *self {
            Law::Uniform01 => "U(0,1)".to_string(),
            Law::Normal { mean, sd } => format!("N({mean},{})", sd * sd),
            Law::Exponential { mean } => format!("Ex({mean})"),
            Law::StudentT3 => "t(3)".to_string(),
            Law::Laplace { location, scale } => format!("L({location},{scale})"),
            Law::PointMass { value } => format!("delta({value})"),
        }
    }
}

impl Cdf for Law {
    fn cdf(&self, x: f64) -> f64 {
        Law::cdf(self, x)
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Law::Uniform01 => f.write_str("uniform01"),
            Law::Normal { mean, sd } => write!(f, "normal:{mean},{sd}"),
            Law::Exponential { mean } => write!(f, "exp:{mean}"),
            Law::StudentT3 => f.write_str("t3"),
            Law::Laplace { location, scale } => write!(f, "laplace:{location},{scale}"),
            Law::PointMass { value } => write!(f, "point:{value}"),
        }
    }
}

fn parse_params(name: &str, args: Option<&str>, want: usize) -> Result<Vec<f64>> {
    let Some(args) = args else {
        return invalid_input(format!("law `{name}` needs {want} parameter(s)"));
    };
    let vals = args
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| ElError::InvalidInput(format!("bad parameter for `{name}`: {e}")))?;
    if vals.len() != want {
        return invalid_input(format!(
            "law `{name}` needs {want} parameter(s), got {}",
            vals.len()
        ));
    }
    Ok(vals)
}

impl FromStr for Law {
    type Err = ElError;

    /// Accepts `uniform01`, `normal`, `normal:<mu>,<sigma>`, `exp:<mean>`,
    /// `t3`, `laplace:<location>,<scale>` and `point:<value>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let law = match name.to_ascii_lowercase().as_str() {
            "uniform01" | "uniform" => Law::Uniform01,
            "normal" | "norm" if args.is_none() => Law::STANDARD_NORMAL,
            "normal" | "norm" => {
                let p = parse_params(name, args, 2)?;
                Law::Normal {
                    mean: p[0],
                    sd: p[1],
                }
            }
            "exp" | "exponential" => {
                let p = parse_params(name, args, 1)?;
                Law::Exponential { mean: p[0] }
            }
            "t3" | "studentt3" | "t(3)" => Law::StudentT3,
            "laplace" => {
                let p = parse_params(name, args, 2)?;
                Law::Laplace {
                    location: p[0],
                    scale: p[1],
                }
            }
            "point" => {
                let p = parse_params(name, args, 1)?;
                Law::PointMass { value: p[0] }
            }
            other => return invalid_input(format!("unknown law `{other}`")),
        };
        law.validate()?;
        Ok(law)
    }
}

/// Uniform draw on the open interval (0, 1) with 53 bits of resolution.
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    // open_unit never returns 0 or 1, so the quantile is always defined
    normal_quantile(open_unit(rng)).unwrap_or(0.0)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of stream indices,
/// e.g. `derive_seed(master, &[cell, rep])`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &i| {
        splitmix64(acc ^ splitmix64(i.wrapping_add(1)))
    })
}

/// The generator behind every random stream in the crate.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Infinite stream of draws from `law` under a fixed seed.
pub fn sampler(law: Law, seed: u64) -> Result<impl Iterator<Item = f64>> {
    law.validate()?;
    let mut rng = seeded_rng(seed);
    Ok(std::iter::repeat_with(move || law.sample(&mut rng)))
}
