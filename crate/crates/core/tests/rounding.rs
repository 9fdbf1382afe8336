use maximin::approx::{self, RademacherRounding};
use maximin::hardness::{bqp_enumerate, bqp_enumerate_argmax};
use maximin::relax::{self, lift, solve_cr};
use maximin::rng::{seeded, stream};
use maximin::tail::tail_s;
use maximin::{DispersionInstance, Geometry};
use nalgebra::DMatrix;
use rand::Rng;
use statrs::function::beta::beta_reg;

fn ks_distance(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn general_rounding_on_the_box_matches_the_simplified_one() {
    let inst = DispersionInstance::generate_random(6, 8, Geometry::Box, &mut seeded(21)).unwrap();
    let rho = 0.9999;
    let z = lift(&solve_cr(&inst, relax::default_tolerance(&inst)).unwrap(), &inst).unwrap();
    let general = RademacherRounding::from_lift(&inst, rho, &z).unwrap();
    let simple = RademacherRounding::simplified(&inst, rho).unwrap();
    assert!((general.bound - simple.bound).abs() <= 1e-12);
    assert!((general.alpha - simple.alpha).abs() <= 1e-12);

    let runs = 10_000u64;
    let mut gen = Vec::new();
    let mut sim = Vec::new();
    for r in 0..runs {
        let a = general.run(&inst, approx::DEFAULT_BUDGET, &mut stream(1, r)).unwrap();
        assert!(a.x_tilde.iter().all(|v| (v.abs() - 1.0).abs() <= 1e-12), "{:?}", a.x_tilde);
        gen.push(a.f_value);
        sim.push(simple.run(&inst, approx::DEFAULT_BUDGET, &mut stream(2, r)).unwrap().f_value);
    }
    let d = ks_distance(&mut gen, &mut sim);
    assert!(d <= 0.05, "KS distance {d}");
}

fn naive_bqp(q: &DMatrix<f64>) -> f64 {
    let n = q.nrows();
    (0u32..1 << n)
        .map(|mask| {
            let x: Vec<f64> = (0..n).map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
            (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| x[r] * q[(r, c)] * x[c]).sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn gray_code_enumeration_matches_brute_force() {
    let mut rng = seeded(5);
    for n in 1..=9 {
        for _ in 0..10 {
            let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            let q = (&a + a.transpose()) * 0.5;
            let (value, x) = bqp_enumerate_argmax(&q).unwrap();
            let expected = naive_bqp(&q);
            assert!((value - expected).abs() <= 1e-10 * expected.abs().max(1.0), "n={n}: {value} vs {expected}");
            assert_eq!(x[0], 1.0);
            assert!(x.iter().all(|v| v.abs() == 1.0));
        }
    }
    assert!(bqp_enumerate(&DMatrix::zeros(0, 0)).is_err());
}

#[test]
fn tail_agrees_with_the_regularized_incomplete_beta() {
    for n in [2usize, 3, 4, 7, 12, 30, 60] {
        for k in 0..=40 {
            let alpha = (n as f64).sqrt() * k as f64 / 40.0;
            let t = alpha / (n as f64).sqrt();
            let expected = 0.5 * beta_reg((n as f64 - 1.0) / 2.0, 0.5, 1.0 - t * t);
            let ours = tail_s(n, alpha).unwrap();
            if expected > 1e-280 {
                assert!((ours - expected).abs() <= 1e-9 * expected, "n={n} alpha={alpha}: {ours} vs {expected}");
            } else {
                assert!(ours <= 1e-270);
            }
        }
    }
}
