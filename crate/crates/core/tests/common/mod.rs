//! Independent reference routines used by the integration tests. None of
//! these share code with the library solver.

#![allow(dead_code)]

/// Root of g(ζ) = Σ x_j / (1 + ζ x_j) for one-dimensional constraints,
/// found by plain bisection on the open barrier interval. g is strictly
/// decreasing there.
pub fn bisect_el_1d(xs: &[f64]) -> f64 {
    let xmax = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(xmax > 0.0 && xmin < 0.0, "origin not inside the hull");
    let (mut lo, mut hi) = (-1.0 / xmax, -1.0 / xmin);
    let g = |z: f64| xs.iter().map(|x| x / (1.0 + z * x)).sum::<f64>();
    let width = hi - lo;
    lo += 1e-14 * width;
    hi -= 1e-14 * width;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn neg2_log_el_at(rows: &[Vec<f64>], zeta: &[f64]) -> f64 {
    2.0 * rows
        .iter()
        .map(|x| (1.0 + x.iter().zip(zeta).map(|(a, b)| a * b).sum::<f64>()).ln())
        .sum::<f64>()
}

/// Two-dimensional dual root by profiling: for fixed ζ1 the inner
/// derivative in ζ2 is increasing on an interval cut out by the barrier, and
/// the profiled derivative in ζ1 is increasing on the projection of the
/// feasible set. Both are solved by bisection.
pub fn profiled_el_2d(rows: &[[f64; 2]]) -> [f64; 2] {
    // feasible ζ2 interval for fixed ζ1, or None
    let interval = |z1: f64| -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for &[a, b] in rows {
            let c = 1.0 + z1 * a;
            if b > 0.0 {
                lo = lo.max(-c / b);
            } else if b < 0.0 {
                hi = hi.min(c / -b);
            } else if c <= 0.0 {
                return None;
            }
        }
        (lo < hi).then_some((lo, hi))
    };
    let inner = |z1: f64| -> f64 {
        let (lo, hi) = interval(z1).expect("feasible ζ1");
        let dz = |z2: f64| -> f64 {
            -rows
                .iter()
                .map(|[a, b]| b / (1.0 + z1 * a + z2 * b))
                .sum::<f64>()
        };
        let w = hi - lo;
        let (mut l, mut h) = (lo + 1e-15 * w, hi - 1e-15 * w);
        for _ in 0..300 {
            let mid = 0.5 * (l + h);
            if mid <= l || mid >= h {
                break;
            }
            if dz(mid) < 0.0 {
                l = mid;
            } else {
                h = mid;
            }
        }
        0.5 * (l + h)
    };
    // ends of the feasible ζ1 range, by outward doubling then bisection
    let edge = |dir: f64| -> f64 {
        let mut inside = 0.0;
        let mut step = 1e-3;
        let mut outside = loop {
            let t = dir * step;
            if interval(t).is_none() {
                break t;
            }
            inside = t;
            step *= 2.0;
            assert!(step < 1e12, "unbounded feasible set");
        };
        for _ in 0..300 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if interval(mid).is_some() {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let (lo, hi) = (edge(-1.0), edge(1.0));
    let outer = |z1: f64| -> f64 {
        let z2 = inner(z1);
        -rows
            .iter()
            .map(|[a, b]| a / (1.0 + z1 * a + z2 * b))
            .sum::<f64>()
    };
    let w = hi - lo;
    let (mut l, mut h) = (lo + 1e-12 * w, hi - 1e-12 * w);
    for _ in 0..300 {
        let mid = 0.5 * (l + h);
        if mid <= l || mid >= h {
            break;
        }
        if outer(mid) < 0.0 {
            l = mid;
        } else {
            h = mid;
        }
    }
    let z1 = 0.5 * (l + h);
    [z1, inner(z1)]
}

/// Composite Simpson rule with `intervals` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Cosine basis written out from its definition.
pub fn cosine(k: usize, u: f64) -> f64 {
    std::f64::consts::SQRT_2 * (k as f64 * std::f64::consts::PI * u).cos()
}

/// Ranks as rank/n with ties broken by index, computed by counting.
pub fn ranks_by_counting(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let below = (0..n)
                .filter(|&j| v[j] < v[i] || (v[j] == v[i] && j <= i))
                .count();
            below as f64 / n as f64
        })
        .collect()
}
