//! Acceptance gate. Each criterion prints one PASS/FAIL line; the binary
//! exits non-zero if any criterion fails.

mod common;

use std::cell::OnceCell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use elgof::constraints::rank_gram_deviation;
use elgof::distributions::{derive_seed, seeded_rng, CalibrationMethod, Law};
use elgof::el_core::{expansion_envelope, zeta_bound};
use elgof::simulation::*;
use elgof::*;
use rand::Rng;

const TABLE1_SEED: u64 = 20240101;

const N01: Law = Law::STANDARD_NORMAL;
const T3: Law = Law::StudentT3;
const EXP5: Law = Law::Exponential { mean: 5.0 };
const LAP: Law = Law::Laplace {
    location: 0.0,
    scale: 0.5,
};
const D0: RegressionMethod = RegressionMethod::Delta0;
const D1R2: RegressionMethod = RegressionMethod::Delta1 { r: 2 };

type Check = std::result::Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn FnOnce() -> Check + 'a>);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn table1() -> PowerTable {
    power_study(
        &table1_designs(100),
        &table1_methods(),
        0.05,
        1000,
        TABLE1_SEED,
    )
    .unwrap()
}

fn rate(t: &PowerTable, eta: Law, cov: Law, beta: [f64; 2], method: RegressionMethod) -> f64 {
    t.cell(eta, cov, beta, method).unwrap().rate
}

fn table1_levels(t: &PowerTable) -> Check {
    let targets = [
        (N01, T3, D0, 0.13),
        (N01, T3, D1R2, 0.09),
        (N01, EXP5, D0, 0.12),
        (N01, EXP5, D1R2, 0.07),
        (LAP, T3, D0, 0.14),
        (LAP, T3, D1R2, 0.10),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (eta, cov, method, target) in targets {
        let got = rate(t, eta, cov, [1.0, 2.0], method);
        ok &= (got - target).abs() <= 0.04;
        parts.push(format!(
            "{}/{} {}{}={got:.3} (target {target})",
            eta.label(),
            cov.label(),
            method.label(),
            method.r().map(|r| format!("(r={r})")).unwrap_or_default()
        ));
    }
    ensure(ok, parts.join(", "))
}

fn table1_powers(t: &PowerTable) -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    let d0 = rate(t, N01, T3, [0.6, 2.3], D0);
    let d1 = rate(t, N01, T3, [0.6, 2.3], D1R2);
    ok &= (d0 - 0.71).abs() <= 0.05 && (d1 - 0.88).abs() <= 0.05;
    parts.push(format!(
        "N/t3 (0.6,2.3): delta0={d0:.3} (0.71), delta1(r=2)={d1:.3} (0.88)"
    ));
    for r in 2..=5 {
        let v = rate(t, LAP, EXP5, [0.8, 1.5], RegressionMethod::Delta1 { r });
        ok &= v >= 0.98;
        parts.push(format!("L/Ex5 (0.8,1.5) delta1(r={r})={v:.3}"));
    }
    for beta in [[0.6, 2.3], [0.8, 1.5], [1.2, 2.2], [1.4, 1.7]] {
        let (a, b) = (rate(t, N01, T3, beta, D1R2), rate(t, N01, T3, beta, D0));
        ok &= a > b;
        parts.push(format!("order {beta:?}: {a:.3} > {b:.3}"));
    }
    ensure(ok, parts.join(", "))
}

fn null_sizes() -> Check {
    let cases = [
        (
            "fixed-dist",
            NullScenario::FixedDist {
                law: Law::Uniform01,
            },
            5,
        ),
        (
            "parametric",
            NullScenario::Parametric {
                family: ParametricFamily::Normal,
            },
            6,
        ),
        ("symmetry", NullScenario::Symmetry { law: N01 }, 5),
        (
            "independence-known",
            NullScenario::Independence {
                law: Law::Uniform01,
                empirical_margins: false,
            },
            2,
        ),
        (
            "independence-empirical",
            NullScenario::Independence {
                law: Law::Uniform01,
                empirical_margins: true,
            },
            2,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (name, scenario, basis_size)) in cases.into_iter().enumerate() {
        let spec = NullStudySpec {
            scenario,
            n: 500,
            basis_size,
            alpha: 0.05,
            reps: 2000,
            seed: derive_seed(TABLE1_SEED, &[3, i as u64]),
            calibration: CalibrationMethod::ChiSquare,
        };
        let res = null_calibration_study(&spec).unwrap();
        ok &= (0.03..=0.07).contains(&res.rate) && res.failed == 0;
        parts.push(format!("{name}={:.4}", res.rate));
    }
    ensure(ok, parts.join(", "))
}

fn normal_calibration() -> Check {
    let s = normality_diagnostic(
        NullScenario::FixedDist {
            law: Law::Uniform01,
        },
        2000,
        20,
        500,
        derive_seed(TABLE1_SEED, &[4]),
    )
    .unwrap();
    ensure(
        s.ks_distance < 0.10 && s.mean > -0.3 && s.mean < 0.3,
        format!(
            "ks={:.4}, mean={:.4}, variance={:.4}",
            s.ks_distance, s.mean, s.variance
        ),
    )
}

fn random_hull_case<R: Rng>(rng: &mut R) -> Option<ConstraintMatrix> {
    let laws = [
        N01,
        T3,
        Law::Laplace {
            location: 0.0,
            scale: 1.0,
        },
        Law::Exponential { mean: 1.0 },
        Law::Uniform01,
    ];
    let n = rng.random_range(20..=500);
    let m = rng.random_range(1..=15);
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let law = laws[rng.random_range(0..laws.len())];
            let v = law.sample_n(n, rng);
            let mean = v.iter().sum::<f64>() / n as f64;
            v.into_iter().map(|x| x - mean).collect()
        })
        .collect();
    let build = |shift: &[f64]| {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..m).map(|k| cols[k][j] + shift[k]).collect())
            .collect();
        ConstraintMatrix::from_rows(&rows).unwrap()
    };
    let s0 = spectral_summary(&build(&vec![0.0; m])).unwrap();
    let dir: Vec<f64> = (0..m).map(|_| N01.sample(rng)).collect();
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    let mut size = rng.random_range(0.05..1.0) * s0.lambda / (5.0 * s0.xstar);
    for _ in 0..20 {
        let shift: Vec<f64> = dir.iter().map(|d| size * d / norm).collect();
        let points = build(&shift);
        if hull_interior_check(&spectral_summary(&points).unwrap()) {
            return Some(points);
        }
        size *= 0.5;
    }
    None
}

fn solver_suite() -> Check {
    let mut rng = seeded_rng(derive_seed(TABLE1_SEED, &[5]));
    let (mut cases, mut failures, mut one_d) = (0, 0, 0);
    let mut first_failure = None;
    let mut worst_residual: f64 = 0.0;
    while cases < 10_000 {
        let Some(points) = random_hull_case(&mut rng) else {
            continue;
        };
        cases += 1;
        let summary = spectral_summary(&points).unwrap();
        let sol = solve_dual(&points, &SolverOptions::default()).unwrap();
        let zeta_norm = sol.zeta.iter().map(|z| z * z).sum::<f64>().sqrt();
        let gap = (sol.neg2_log_el - sol.quadratic_approx).abs();
        worst_residual = worst_residual.max(sol.residual_norm);
        let mut ok = sol.converged
            && sol.feasible
            && sol.residual_norm <= 1e-10
            && zeta_norm <= zeta_bound(&summary) + 1e-9
            && gap <= expansion_envelope(&summary, points.rows()) + 1e-6;
        if points.cols() == 1 {
            one_d += 1;
            let oracle = common::bisect_el_1d(points.as_slice());
            ok &= (sol.zeta[0] - oracle).abs() <= 1e-10;
        }
        if !ok {
            failures += 1;
            first_failure.get_or_insert((points.rows(), points.cols()));
        }
    }
    let mut detail = format!(
        "{cases} cases ({one_d} one-dimensional), worst residual {worst_residual:.2e}, failures {failures}"
    );
    if let Some((n, m)) = first_failure {
        detail += &format!(", first at n={n} m={m}");
    }
    ensure(failures == 0, detail)
}

fn rank_grid_bound() -> Check {
    let mut rng = seeded_rng(derive_seed(TABLE1_SEED, &[6]));
    let mut failures = 0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=1000);
        let mut data = T3.sample_n(n, &mut rng);
        data.sort_by(f64::total_cmp);
        data.dedup();
        for r in 1..=10 {
            let dev = rank_gram_deviation(&data, r).unwrap();
            let bound = 4.0 * std::f64::consts::PI * (r * (1 + r)) as f64 / data.len() as f64;
            worst_ratio = worst_ratio.max(dev / bound);
            failures += usize::from(dev > bound);
        }
    }
    ensure(
        failures == 0,
        format!("1000 checks, failures {failures}, max deviation/bound {worst_ratio:.3}"),
    )
}

fn quadratic_gap() -> Check {
    let mut gaps: Vec<f64> = (0..200u64)
        .map(|rep| {
            let mut rng = seeded_rng(derive_seed(TABLE1_SEED, &[7, rep]));
            let data = Law::Uniform01.sample_n(2000, &mut rng);
            let points = constraints_fixed_dist(&data, &Law::Uniform01, 5).unwrap();
            let sol = solve_dual(&points, &SolverOptions::default()).unwrap();
            quadratic_approx_gap(&sol, 5)
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    let median = 0.5 * (gaps[99] + gaps[100]);
    ensure(median < 0.1, format!("median gap {median:.5}"))
}

fn distribution_utilities() -> Check {
    let mut worst: f64 = 0.0;
    for k in (1..=30).chain([50, 100]) {
        for i in 1..=999 {
            let p = i as f64 / 1000.0;
            let q = chisq_quantile(p, k).unwrap();
            worst = worst.max((chisq_cdf(q, k).unwrap() - p).abs());
        }
    }
    let q95 = (chisq_quantile(0.95, 2).unwrap() + 2.0 * 0.05f64.ln()).abs();
    let mut ortho: f64 = 0.0;
    for k in 1..=12 {
        for l in 1..=12 {
            let v = common::simpson(
                |u| phi(k, u).unwrap() * phi(l, u).unwrap(),
                0.0,
                1.0,
                10_000,
            );
            ortho = ortho.max((v - if k == l { 1.0 } else { 0.0 }).abs());
        }
    }
    ensure(
        worst <= 1e-8 && q95 <= 1e-9 && ortho <= 1e-8,
        format!("round trip {worst:.1e}, q(0.95,2) error {q95:.1e}, orthonormality {ortho:.1e}"),
    )
}

fn main() {
    let table = OnceCell::new();
    let criteria: Vec<Criterion<'_>> = vec![
        (
            "1 regression levels",
            Box::new(|| table1_levels(table.get_or_init(table1))),
        ),
        (
            "2 regression powers",
            Box::new(|| table1_powers(table.get_or_init(table1))),
        ),
        ("3 null sizes", Box::new(null_sizes)),
        ("4 normal calibration", Box::new(normal_calibration)),
        ("5 solver suite", Box::new(solver_suite)),
        ("6 rank-grid bound", Box::new(rank_grid_bound)),
        ("7 quadratic expansion", Box::new(quadratic_gap)),
        ("8 distribution utilities", Box::new(distribution_utilities)),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {name}: PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("acceptance {name}: FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 8 criteria passed");
}
