use maximin::relax::{self, dual_bound, gamma1, lift, relaxed_objective, solve_cr};
use maximin::rng::{seeded, stream};
use maximin::tail::sample_sphere;
use maximin::{oracle, DispersionInstance, Geometry};
use proptest::prelude::*;
use rand::Rng;

fn instance(n: usize, m: usize, geometry: Geometry, seed: u64, weights: &[f64]) -> DispersionInstance {
    let base = DispersionInstance::generate_random(n, m, geometry, &mut seeded(seed)).unwrap();
    DispersionInstance::new(n, geometry, base.points().to_vec(), weights[..m].to_vec()).unwrap()
}

fn feasible_point(n: usize, geometry: Geometry, rng: &mut impl Rng) -> Vec<f64> {
    match geometry {
        Geometry::Ball => {
            let r = rng.random::<f64>().powf(1.0 / n as f64);
            sample_sphere(n, rng).into_iter().map(|v| v * r).collect()
        }
        Geometry::Box => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
    }
}

fn geometry() -> impl Strategy<Value = Geometry> {
    prop_oneof![Just(Geometry::Ball), Just(Geometry::Box)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sandwich_and_dual_certificate(
        n in 1usize..6,
        m in 1usize..9,
        geometry in geometry(),
        seed in any::<u64>(),
        weights in prop::collection::vec(0.2f64..3.0, 8),
    ) {
        let inst = instance(n, m, geometry, seed, &weights);
        let r = solve_cr(&inst, relax::default_tolerance(&inst)).unwrap();
        prop_assert!(geometry.contains(&r.x_star, 1e-12));
        prop_assert!((relaxed_objective(&inst, &r.x_star) - r.zeta_star).abs() <= 1e-9 * r.zeta_star.max(1.0));
        let certified = dual_bound(&inst, &r.multipliers);
        prop_assert!((certified - r.upper_bound()).abs() <= 1e-9 * certified.max(1.0));
        prop_assert!(r.multipliers.iter().all(|&l| l >= 0.0));
        prop_assert!((r.multipliers.iter().sum::<f64>() - 1.0).abs() <= 1e-9);

        let mut rng = stream(seed, 1);
        for _ in 0..50 {
            let x = feasible_point(n, geometry, &mut rng);
            let f = inst.value(&x);
            let relaxed = relaxed_objective(&inst, &x);
            prop_assert!(f <= relaxed + 1e-12 * relaxed.max(1.0));
            prop_assert!(relaxed <= certified + 1e-9 * certified.max(1.0));
        }
        let o = oracle::solve_global(&inst, 500, &mut stream(seed, 2));
        prop_assert!(o.value <= r.upper_bound() + 1e-9 * r.upper_bound().max(1.0));
    }

    #[test]
    fn lift_is_feasible_and_recovers_the_optimizer(
        n in 1usize..6,
        m in 2usize..9,
        geometry in geometry(),
        seed in any::<u64>(),
        weights in prop::collection::vec(0.2f64..3.0, 8),
    ) {
        let inst = instance(n, m, geometry, seed, &weights);
        let r = solve_cr(&inst, relax::default_tolerance(&inst)).unwrap();
        let z = lift(&r, &inst).unwrap();
        let check = z.check(&inst);
        prop_assert!(check.holds(), "{check:?}");
        prop_assert!((z.corner() * r.zeta_star - 1.0).abs() <= 1e-12);
        let (x, zeta) = z.to_relaxation_point().unwrap();
        prop_assert!((zeta - r.zeta_star).abs() <= 1e-10 * r.zeta_star);
        for (a, b) in x.iter().zip(&r.x_star) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        let g = gamma1(&z).unwrap();
        prop_assert!(g >= 1.0 / n as f64 - 1e-12 && g <= 1.0 + 1e-12);
        if geometry == Geometry::Box {
            prop_assert!((g - 1.0 / n as f64).abs() <= 1e-12);
        }
    }
}

#[test]
fn json_round_trip_through_a_file() {
    let inst = DispersionInstance::new(
        3,
        Geometry::Box,
        vec![vec![0.5, -0.25, 1.0], vec![-1.0, 0.0, 0.125]],
        vec![1.5, 0.75],
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("instance.json");
    inst.write_json(&path).unwrap();
    let back = DispersionInstance::read_json(&path).unwrap();
    assert_eq!(back.points(), inst.points());
    assert_eq!(back.weights(), inst.weights());
    assert_eq!(back.geometry(), Geometry::Box);
    assert_eq!(back.to_json().unwrap(), inst.to_json().unwrap());
}
