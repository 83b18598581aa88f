//! Solver outputs checked against independent brute-force evaluations on the
//! same null samples.

use stepup::montecarlo::{
    quantile_d, sample_null, scan_step, step_cutoff, upper_quantile, Accumulation, NullSample,
};
use stepup::{McSettings, MethodId, Scaling, TestConfig};

const REPS: usize = 200_000;
const ALPHA: f64 = 0.05;

fn w(row: &[f64], n: usize, m: usize) -> f64 {
    n as f64 * row[m - 1] / row[..n].iter().sum::<f64>()
}

fn denom(scaling: Scaling, nu: usize, m: usize) -> usize {
    match scaling {
        Scaling::Fixed => nu,
        Scaling::Sequential => m - 1,
    }
}

/// Frequency of the union of `W_i > d_i` for `i = nu+1..m`.
fn union_prob(sample: &NullSample, nu: usize, scaling: Scaling, cutoffs: &[f64]) -> f64 {
    let hits = sample
        .rows()
        .filter(|row| {
            cutoffs.iter().enumerate().any(|(t, &d)| {
                let m = nu + 1 + t;
                w(row, denom(scaling, nu, m), m) > d
            })
        })
        .count();
    hits as f64 / sample.reps() as f64
}

/// Sum over `i` of the frequency that the step-`i` record event is new.
fn summed_prob(sample: &NullSample, nu: usize, scaling: Scaling, cutoffs: &[f64]) -> f64 {
    let mut total = 0u64;
    for row in sample.rows() {
        let s_nu: f64 = row[..nu].iter().sum();
        let mut best = s_nu;
        for (t, &d) in cutoffs.iter().enumerate() {
            let i = nu + 1 + t;
            let s_prev: f64 = row[..i - 1].iter().sum();
            let delta = match scaling {
                Scaling::Fixed => nu as f64 * row[i - 1] / d,
                Scaling::Sequential => (i - 1) as f64 * row[i - 1] / d - s_prev + s_nu,
            };
            if delta > best {
                total += 1;
                best = delta;
            }
        }
    }
    total as f64 / sample.reps() as f64
}

/// Smallest `d` on a grid of step `h` whose probability is at most `ALPHA`,
/// checking that the probability is nonincreasing along the way.
fn grid_search(lo: f64, hi: f64, h: f64, prob: impl Fn(f64) -> f64) -> f64 {
    let mut prev = f64::INFINITY;
    let mut d = lo;
    while d <= hi {
        let p = prob(d);
        assert!(p <= prev, "probability increased at d = {d}: {prev} -> {p}");
        if p <= ALPHA {
            return d;
        }
        prev = p;
        d += h;
    }
    panic!("no grid point in [{lo}, {hi}] reaches alpha");
}

fn solve(method: MethodId, k: usize, nu: usize, seed: u64) -> Vec<f64> {
    let cfg = TestConfig::new(k, nu, ALPHA).unwrap();
    let mc = McSettings::with_seed(REPS, seed).unwrap();
    let reg = stepup::MethodRegistry::builtin();
    reg.by_id(method)
        .unwrap()
        .solve(&cfg, &mc)
        .unwrap()
        .cutoffs()
        .to_vec()
}

#[test]
fn analytic_two_sample_quantile() {
    // P(max/min of two chi-square(1) > d) = 2 (1 - (2/pi) atan(sqrt d)) gives
    // d = cot^2(pi alpha / 4).
    let exact = (1.0 / (std::f64::consts::PI * ALPHA / 4.0).tan()).powi(2);
    assert!((exact - 647.789).abs() < 1e-3);
    let cfg = TestConfig::new(2, 1, ALPHA).unwrap();
    let mc = McSettings::with_seed(REPS, 8).unwrap();
    let d = quantile_d(1, 2, &cfg, &mc).unwrap();
    // density of the ratio at d, for the quantile's standard error
    let f = (2.0 / std::f64::consts::PI) / ((1.0 + exact) * exact.sqrt());
    let se = (ALPHA * (1.0 - ALPHA) / REPS as f64).sqrt() / f;
    assert!((d - exact).abs() < 4.0 * se, "{d} vs {exact} (se {se})");
}

#[test]
fn final_step_matches_grid_search() {
    let (k, nu, seed) = (9, 7, 5);
    let mc = McSettings::with_seed(REPS, seed).unwrap();
    let sample = sample_null(k, &mc).unwrap();
    for method in [MethodId::Suf, MethodId::Sus, MethodId::Sufi, MethodId::Susi] {
        let d = solve(method, k, nu, seed);
        let scaling = method.scaling();
        let found = grid_search(d[0] * 0.5, d[0] * 10.0, 0.01, |x| {
            union_prob(&sample, nu, scaling, &[d[0], x])
        });
        assert!(
            (found - d[1]).abs() <= 0.011,
            "{method}: solver {} vs grid {found}",
            d[1]
        );
    }
}

#[test]
fn summed_step_matches_grid_search() {
    let (k, nu, seed) = (10, 7, 6);
    let mc = McSettings::with_seed(REPS, seed).unwrap();
    let sample = sample_null(9, &mc).unwrap();
    for method in [MethodId::Suf, MethodId::Sus] {
        let d = solve(method, k, nu, seed);
        let scaling = method.scaling();
        let found = grid_search(d[0] * 0.5, d[0] * 10.0, 0.01, |x| {
            summed_prob(&sample, nu, scaling, &[d[0], x])
        });
        assert!(
            (found - d[1]).abs() <= 0.011,
            "{method}: solver {} vs grid {found}",
            d[1]
        );
    }
}

#[test]
fn cutoffs_are_threshold_quantiles() {
    let cfg = TestConfig::new(12, 5, ALPHA).unwrap();
    let mc = McSettings::with_seed(50_000, 2).unwrap();
    for method in [MethodId::Suf, MethodId::Sus, MethodId::Sufi, MethodId::Susi] {
        let d = solve_with(method, &cfg, &mc);
        for m in 7..=12 {
            let mode = match (method, m) {
                (MethodId::Suf | MethodId::Sus, m) if m < 12 => Accumulation::Summed,
                _ => Accumulation::Union,
            };
            let sample = sample_null(m, &mc).unwrap();
            let earlier = &d[..m - 6];
            let scan = scan_step(&sample, 5, method.scaling(), earlier, mode, 1000);
            let got = d[m - 6];
            assert_eq!(
                step_cutoff(scan.clone(), 5, mode, ALPHA, method).unwrap(),
                got
            );
            let used = match mode {
                Accumulation::Summed => scan.term_hits.iter().sum::<u64>(),
                Accumulation::Union => scan.rejected,
            } as f64
                / scan.thresholds.len() as f64;
            assert_eq!(
                upper_quantile(scan.thresholds.clone(), ALPHA - used).unwrap(),
                got
            );
            let above = scan.thresholds.iter().filter(|&&t| t > got).count() as f64;
            assert!(above / scan.thresholds.len() as f64 <= ALPHA - used + 1e-12);
        }
    }
}

fn solve_with(method: MethodId, cfg: &TestConfig, mc: &McSettings) -> Vec<f64> {
    let reg = stepup::MethodRegistry::builtin();
    reg.by_id(method)
        .unwrap()
        .solve(cfg, mc)
        .unwrap()
        .cutoffs()
        .to_vec()
}

#[test]
fn union_never_exceeds_summed_records() {
    // P(S_nu < max Delta_i) <= sum_i P(max_{j<i} Delta_j < Delta_i), plus noise.
    let (nu, seed) = (7, 9);
    let mc = McSettings::with_seed(REPS, seed).unwrap();
    for scaling in [Scaling::Fixed, Scaling::Sequential] {
        let sample = sample_null(15, &mc).unwrap();
        let cutoffs: Vec<f64> = match scaling {
            Scaling::Fixed => vec![14.9, 28.0, 42.0, 58.5, 77.5, 99.1, 124.1, 123.4],
            Scaling::Sequential => vec![14.9, 16.7, 16.3, 15.7, 15.2, 14.8, 14.5, 13.9],
        };
        let u = union_prob(&sample, nu, scaling, &cutoffs);
        let s = summed_prob(&sample, nu, scaling, &cutoffs);
        let se = (u * (1.0 - u) / REPS as f64).sqrt();
        assert!(u <= s + 3.0 * se, "{scaling}: union {u} > summed {s}");
    }
}
