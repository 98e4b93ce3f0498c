mod common;

use elgof::distributions::{seeded_rng, CalibrationMethod, Law};
use elgof::simulation::*;
use elgof::*;

fn t3_normal(beta: [f64; 2]) -> RegressionDesign {
    RegressionDesign {
        beta,
        ..RegressionDesign::default()
    }
}

#[test]
fn power_table_is_identical_across_thread_counts() {
    let designs = vec![t3_normal([1.0, 2.0]), t3_normal([0.8, 1.5])];
    let methods = table1_methods();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| power_study(&designs, &methods, 0.05, 40, 77).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    assert_eq!(a.cells.len(), 10);
}

#[test]
fn alternative_beats_null_for_every_method() {
    let table = power_study(
        &[t3_normal([1.0, 2.0]), t3_normal([0.6, 2.3])],
        &table1_methods(),
        0.05,
        1000,
        4242,
    )
    .unwrap();
    for method in table1_methods() {
        let null = table
            .cell(Law::STANDARD_NORMAL, Law::StudentT3, [1.0, 2.0], method)
            .unwrap();
        let alt = table
            .cell(Law::STANDARD_NORMAL, Law::StudentT3, [0.6, 2.3], method)
            .unwrap();
        let margin = 3.0 * (null.stderr.powi(2) + alt.stderr.powi(2)).sqrt();
        assert!(
            alt.rate - null.rate > margin,
            "{method:?}: {} vs {}",
            alt.rate,
            null.rate
        );
        assert_eq!(alt.reps, 1000);
    }
}

#[test]
fn null_cells_fall_in_level_bracket() {
    let scenarios = [
        (
            NullScenario::FixedDist {
                law: Law::Exponential { mean: 2.0 },
            },
            4,
        ),
        (
            NullScenario::Parametric {
                family: ParametricFamily::Exponential,
            },
            5,
        ),
        (
            NullScenario::Symmetry {
                law: Law::Laplace {
                    location: 0.0,
                    scale: 1.0,
                },
            },
            3,
        ),
        (
            NullScenario::Independence {
                law: Law::StudentT3,
                empirical_margins: true,
            },
            2,
        ),
    ];
    for (scenario, basis_size) in scenarios {
        let spec = NullStudySpec {
            scenario,
            n: 300,
            basis_size,
            alpha: 0.05,
            reps: 1000,
            seed: 31,
            calibration: CalibrationMethod::ChiSquare,
        };
        let res = null_calibration_study(&spec).unwrap();
        let band = 4.0 * res.stderr + 0.02;
        assert!(
            (res.rate - 0.05).abs() <= band,
            "{scenario:?}: rate {}",
            res.rate
        );
        assert_eq!(res.failed, 0);
    }
}

#[test]
fn response_second_moment_matches_direct_sampler() {
    // E[Y²] with β = 0 equals E[min(1+X², 10⁴)] for X ~ t(3)
    let design = RegressionDesign {
        n: 1_000_000,
        beta: [0.0, 0.0],
        ..RegressionDesign::default()
    };
    let (_, y) = generate_regression_sample(&design, 5).unwrap();
    let lhs = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    // direct sampler: t(3) as Z / sqrt(χ²₃/3) from independent normals
    let mut rng = seeded_rng(6);
    let reps = 1_000_000;
    let rhs = (0..reps)
        .map(|_| {
            let z = Law::STANDARD_NORMAL.sample(&mut rng);
            let c: f64 = (0..3)
                .map(|_| Law::STANDARD_NORMAL.sample(&mut rng).powi(2))
                .sum();
            let x = z / (c / 3.0).sqrt();
            (1.0 + x * x).min(1e4)
        })
        .sum::<f64>()
        / reps as f64;
    // exact value by quadrature of the t(3) density, 2∫₀^∞ min(1+x², 10⁴) f(x) dx
    let dens = |x: f64| 6.0 * 3f64.sqrt() / (std::f64::consts::PI * (3.0 + x * x).powi(2));
    let knee = (1e4f64 - 1.0).sqrt();
    let body = common::simpson(|x| (1.0 + x * x) * dens(x), 0.0, knee, 200_000);
    // upper tail: 10⁴·P(X > knee), P from the closed-form t(3) cdf
    let tail = 1e4 * (1.0 - Law::StudentT3.cdf(knee));
    let exact = 2.0 * (body + tail);
    assert!((lhs / rhs - 1.0).abs() < 0.02, "{lhs} vs {rhs}");
    assert!((lhs / exact - 1.0).abs() < 0.02, "{lhs} vs exact {exact}");
    assert!((rhs / exact - 1.0).abs() < 0.02, "{rhs} vs exact {exact}");
}
