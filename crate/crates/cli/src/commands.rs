use clap::ValueEnum;
use elgof::distributions::{CalibrationMethod, Law};
use elgof::gof_tests::TestOptions;
use elgof::simulation::{
    power_study, run_null_replications, table1_designs, table1_methods, NormalitySummary,
    NullScenario, NullStudySpec, PowerTable,
};
use elgof::*;
use serde::Serialize;

use crate::args::{
    Format, Margins, Method, NullStudyArgs, NullTestName, SimulateArgs, TestArgs, TestName,
};
use crate::error::{config, parse_flag, CliError, CliResult};
use crate::input::Table;
use crate::output::{emit, fmt_f64, to_csv, to_json};

fn check_alpha(alpha: f64) -> CliResult<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        config(format!("--alpha {alpha} is outside (0, 1)"))
    }
}

fn thread_pool(flag: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let threads = match flag {
        Some(t) => t,
        None => match std::env::var("ELGOF_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("ELGOF_THREADS=`{v}` is not a count")))?,
            Err(_) => 0,
        },
    };
    // 0 lets rayon pick the number of cores
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Flags that only make sense for some tests.
fn reject_unused(args: &TestArgs) -> CliResult<()> {
    let allowed: &[&str] = match args.test {
        TestName::FixedDist => &["col", "f0", "m"],
        TestName::Parametric => &["col", "family", "m"],
        TestName::Symmetry => &["col", "m"],
        TestName::Independence => &["cols", "r", "margins", "fx", "fy"],
        TestName::Regression => &["cols", "r", "theta", "method"],
    };
    let given = [
        ("col", args.col.is_some()),
        ("cols", args.cols.is_some()),
        ("f0", args.f0.is_some()),
        ("m", args.m.is_some()),
        ("r", args.r.is_some()),
        ("family", args.family.is_some()),
        ("margins", args.margins.is_some()),
        ("fx", args.fx.is_some()),
        ("fy", args.fy.is_some()),
        ("theta", args.theta.is_some()),
        ("method", args.method.is_some()),
    ];
    for (flag, present) in given {
        if present && !allowed.contains(&flag) {
            let name = args
                .test
                .to_possible_value()
                .map(|v| v.get_name().to_string());
            return config(format!(
                "--{flag} does not apply to the {} test",
                name.unwrap_or_default()
            ));
        }
    }
    Ok(())
}

fn two_columns(args: &TestArgs) -> CliResult<[String; 2]> {
    match args.cols.as_deref() {
        Some([x, y]) => Ok([x.clone(), y.clone()]),
        Some(other) => config(format!("--cols needs two columns, got {}", other.len())),
        None => Ok(["0".into(), "1".into()]),
    }
}

fn positive(flag: &str, v: Option<usize>) -> CliResult<Option<usize>> {
    match v {
        Some(0) => config(format!("--{flag} must be at least 1")),
        other => Ok(other),
    }
}

enum Plan {
    Fixed {
        col: String,
        f0: Law,
        m: Option<usize>,
    },
    Parametric {
        col: String,
        family: ParametricFamily,
        m: Option<usize>,
    },
    Symmetry {
        col: String,
        m: Option<usize>,
    },
    Independence {
        cols: [String; 2],
        r: Option<usize>,
        known: Option<(Law, Law)>,
    },
    Regression {
        cols: [String; 2],
        theta: [f64; 2],
        delta1: bool,
        r: Option<usize>,
    },
}

/// Validates every flag before any input is read.
fn plan(args: &TestArgs) -> CliResult<(Plan, TestOptions)> {
    reject_unused(args)?;
    for &a in &args.common.alpha {
        check_alpha(a)?;
    }
    let calibration: CalibrationMethod = parse_flag("calibration", &args.common.calibration)?;
    let opts = TestOptions {
        calibration,
        alphas: args.common.alpha.clone(),
        ..Default::default()
    };
    let col = || args.col.clone().unwrap_or_else(|| "0".into());
    let m = positive("m", args.m)?;
    let r = positive("r", args.r)?;
    let plan = match args.test {
        TestName::FixedDist => {
            let Some(f0) = &args.f0 else {
                return config("fixed-dist needs --f0");
            };
            Plan::Fixed {
                col: col(),
                f0: parse_flag("f0", f0)?,
                m,
            }
        }
        TestName::Parametric => {
            let Some(family) = &args.family else {
                return config("parametric needs --family");
            };
            let family: ParametricFamily = parse_flag("family", family)?;
            if let Some(m) = m {
                if m <= family.dim() {
                    return config(format!(
                        "--m must exceed {} for the {} family",
                        family.dim(),
                        family.name()
                    ));
                }
            }
            Plan::Parametric {
                col: col(),
                family,
                m,
            }
        }
        TestName::Symmetry => Plan::Symmetry { col: col(), m },
        TestName::Independence => {
            let known = match args.margins.unwrap_or(Margins::Empirical) {
                Margins::Empirical => {
                    if args.fx.is_some() || args.fy.is_some() {
                        return config("--fx/--fy need --margins known");
                    }
                    None
                }
                Margins::Known => match (&args.fx, &args.fy) {
                    (Some(fx), Some(fy)) => Some((parse_flag("fx", fx)?, parse_flag("fy", fy)?)),
                    _ => return config("--margins known needs --fx and --fy"),
                },
            };
            Plan::Independence {
                cols: two_columns(args)?,
                r,
                known,
            }
        }
        TestName::Regression => {
            let theta = match args.theta.as_deref() {
                Some(&[a, b]) if a.is_finite() && b.is_finite() => [a, b],
                Some(_) => return config("--theta needs two finite numbers, e.g. 1,2"),
                None => return config("regression needs --theta"),
            };
            let delta1 = args.method.unwrap_or(Method::Delta1) == Method::Delta1;
            if !delta1 && r.is_some() {
                return config("--r applies only to --method delta1");
            }
            Plan::Regression {
                cols: two_columns(args)?,
                theta,
                delta1,
                r,
            }
        }
    };
    Ok((plan, opts))
}

fn run_test(plan: &Plan, table: &Table, opts: &TestOptions) -> CliResult<TestResult> {
    let basis =
        |given: Option<usize>, n: usize, kind| given.unwrap_or_else(|| default_basis_size(n, kind));
    let res = match plan {
        Plan::Fixed { col, f0, m } => {
            let x = table.column(col)?;
            test_fixed_distribution(&x, f0, basis(*m, x.len(), TestKind::FixedDist), opts)?
        }
        Plan::Parametric { col, family, m } => {
            let x = table.column(col)?;
            let m = m.unwrap_or_else(|| {
                default_basis_size(x.len(), TestKind::Parametric).max(family.dim() + 1)
            });
            test_parametric(&x, family, m, opts)?
        }
        Plan::Symmetry { col, m } => {
            let x = table.column(col)?;
            test_symmetry(&x, basis(*m, x.len(), TestKind::Symmetry), opts)?
        }
        Plan::Independence { cols, r, known } => {
            let (x, y) = (table.column(&cols[0])?, table.column(&cols[1])?);
            let r = basis(*r, x.len(), TestKind::Independence);
            let margins = match known {
                Some((fx, fy)) => MarginSpec::Known { x: fx, y: fy },
                None => MarginSpec::Empirical,
            };
            test_independence(&x, &y, r, margins, opts)?
        }
        Plan::Regression {
            cols,
            theta,
            delta1,
            r,
        } => {
            let (x, y) = (table.column(&cols[0])?, table.column(&cols[1])?);
            let method = if *delta1 {
                RegressionMethod::Delta1 {
                    r: basis(*r, x.len(), TestKind::Regression),
                }
            } else {
                RegressionMethod::Delta0
            };
            test_regression_coef(&x, &y, *theta, method, opts)?
        }
    };
    Ok(res)
}

fn test_csv(res: &TestResult) -> CliResult<String> {
    let mut header = vec![
        "test",
        "n",
        "statistic",
        "df",
        "p_value",
        "calibration",
        "infeasible",
    ];
    let keys: Vec<String> = res.reject.keys().map(|k| format!("reject_{k}")).collect();
    header.extend(keys.iter().map(String::as_str));
    let mut row = vec![
        res.test.to_string(),
        res.n.to_string(),
        fmt_f64(res.statistic),
        res.df.to_string(),
        fmt_f64(res.p_value),
        res.calibration.to_string(),
        res.infeasible.to_string(),
    ];
    row.extend(res.reject.values().map(bool::to_string));
    to_csv(&header, &[row])
}

pub fn cmd_test(args: &TestArgs) -> CliResult<()> {
    let (plan, opts) = plan(args)?;
    let table = Table::read(&args.input, args.has_header)?;
    let res = run_test(&plan, &table, &opts)?;
    let text = match args.common.format {
        Format::Json => to_json(&res)?,
        Format::Csv => test_csv(&res)?,
    };
    emit(&text, args.common.out.as_deref())?;
    eprintln!(
        "{}: statistic {} on {} df, p = {:.4} (n = {}){}",
        res.test,
        fmt_f64(res.statistic),
        res.df,
        res.p_value,
        res.n,
        if res.infeasible {
            ", constraints infeasible"
        } else {
            ""
        }
    );
    Ok(())
}

const TABLE_HEADER: [&str; 10] = [
    "eta_law",
    "covariate_law",
    "beta1",
    "beta2",
    "method",
    "r",
    "rate",
    "stderr",
    "reps",
    "failed",
];

fn table_csv(t: &PowerTable) -> CliResult<String> {
    let rows: Vec<Vec<String>> = t
        .cells
        .iter()
        .map(|c| {
            vec![
                c.eta_law.label(),
                c.covariate_law.label(),
                c.beta[0].to_string(),
                c.beta[1].to_string(),
                c.method.label().to_string(),
                c.method.r().map(|r| r.to_string()).unwrap_or_default(),
                c.rate.to_string(),
                c.stderr.to_string(),
                c.reps.to_string(),
                c.failed.to_string(),
            ]
        })
        .collect();
    to_csv(&TABLE_HEADER, &rows)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    if args.reps == 0 {
        return config("--reps must be at least 1");
    }
    if args.n < 3 {
        return config("--n must be at least 3");
    }
    let pool = thread_pool(args.threads)?;
    let table = pool.install(|| {
        power_study(
            &table1_designs(args.n),
            &table1_methods(),
            args.alpha,
            args.reps,
            args.seed,
        )
    })?;
    let text = match args.format {
        Format::Json => to_json(&table)?,
        Format::Csv => table_csv(&table)?,
    };
    emit(&text, args.out.as_deref())?;
    let failed: usize = table.cells.iter().map(|c| c.failed).sum();
    eprintln!(
        "{} cells, {} reps each, {failed} failed replications",
        table.cells.len(),
        args.reps
    );
    Ok(())
}

#[derive(Serialize)]
struct NullStudyReport {
    scenario: NullScenario,
    n: usize,
    basis_size: usize,
    alpha: f64,
    reps: usize,
    seed: u64,
    calibration: CalibrationMethod,
    df: usize,
    rate: f64,
    stderr: f64,
    rejections: usize,
    failed: usize,
    infeasible: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    normality: Option<NormalitySummary>,
}

fn scenario(args: &NullStudyArgs) -> CliResult<(NullScenario, TestKind)> {
    let law = |default: Law| -> CliResult<Law> {
        args.law
            .as_deref()
            .map_or(Ok(default), |s| parse_flag("law", s))
    };
    if args.family.is_some() && args.test != NullTestName::Parametric {
        return config("--family applies only to the parametric test");
    }
    if args.margins == Margins::Empirical && args.test != NullTestName::Independence {
        return config("--margins applies only to the independence test");
    }
    Ok(match args.test {
        NullTestName::FixedDist => (
            NullScenario::FixedDist {
                law: law(Law::Uniform01)?,
            },
            TestKind::FixedDist,
        ),
        NullTestName::Parametric => {
            if args.law.is_some() {
                return config("parametric null data come from the family; drop --law");
            }
            let family = match &args.family {
                Some(f) => parse_flag("family", f)?,
                None => ParametricFamily::Normal,
            };
            (NullScenario::Parametric { family }, TestKind::Parametric)
        }
        NullTestName::Symmetry => (
            NullScenario::Symmetry {
                law: law(Law::STANDARD_NORMAL)?,
            },
            TestKind::Symmetry,
        ),
        NullTestName::Independence => (
            NullScenario::Independence {
                law: law(Law::Uniform01)?,
                empirical_margins: args.margins == Margins::Empirical,
            },
            TestKind::Independence,
        ),
    })
}

pub fn cmd_null_study(args: &NullStudyArgs) -> CliResult<()> {
    check_alpha(args.alpha)?;
    let calibration: CalibrationMethod = parse_flag("calibration", &args.calibration)?;
    let (scenario, kind) = scenario(args)?;
    let (given, unused, unused_flag) = if kind == TestKind::Independence {
        (args.r, args.m, "m")
    } else {
        (args.m, args.r, "r")
    };
    if unused.is_some() {
        return config(format!("--{unused_flag} does not apply to the {kind} test"));
    }
    let basis_size = match positive("basis size", given)? {
        Some(b) => b,
        None if kind == TestKind::Parametric => default_basis_size(args.n, kind).max(3),
        None => default_basis_size(args.n, kind),
    };
    let spec = NullStudySpec {
        scenario,
        n: args.n,
        basis_size,
        alpha: args.alpha,
        reps: args.reps,
        seed: args.seed,
        calibration,
    };
    let pool = thread_pool(args.threads)?;
    let reps = pool.install(|| run_null_replications(&spec))?;
    let summary = reps.rejection_summary(args.alpha);
    let report = NullStudyReport {
        scenario,
        n: args.n,
        basis_size,
        alpha: args.alpha,
        reps: args.reps,
        seed: args.seed,
        calibration,
        df: reps.df,
        rate: summary.rate,
        stderr: summary.stderr,
        rejections: summary.rejections,
        failed: summary.failed,
        infeasible: summary.infeasible,
        normality: args.normality.then(|| reps.normality()),
    };
    emit(&to_json(&report)?, args.out.as_deref())?;
    eprintln!(
        "{kind}: rejection rate {:.4} ± {:.4} at alpha {} over {} reps",
        summary.rate, summary.stderr, args.alpha, args.reps
    );
    Ok(())
}
