use expansive_core::central_config::find_central_configuration;
use expansive_core::nbody::{mass_inner_product, min_max_mutual_distance, project_center_of_mass};
use expansive_core::{Configuration, MassSystem, PotentialModel};
use proptest::prelude::*;

fn spread(n: usize, d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n * d).prop_filter("bodies too close", move |x| {
        (0..n).all(|i| (i + 1..n).all(|j| (0..d).map(|a| (x[i * d + a] - x[j * d + a]).powi(2)).sum::<f64>() > 0.1))
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_is_positive_and_satisfies_cauchy_schwarz(
        masses in prop::collection::vec(0.1..5.0f64, 3),
        x in prop::collection::vec(-2.0..2.0f64, 6),
        y in prop::collection::vec(-2.0..2.0f64, 6),
    ) {
        let sys = MassSystem::new(masses, 2).unwrap();
        let cx = Configuration::new(&sys, x.clone()).unwrap();
        let cy = Configuration::new(&sys, y).unwrap();
        let xx = mass_inner_product(&sys, &cx, &cx).unwrap();
        prop_assert!(xx >= 0.0);
        prop_assert_eq!(xx == 0.0, x.iter().all(|v| *v == 0.0));
        let xy = mass_inner_product(&sys, &cx, &cy).unwrap();
        prop_assert!(xy.abs() <= sys.norm(cx.coords()) * sys.norm(cy.coords()) * (1.0 + 1e-12));
    }

    #[test]
    fn centering_keeps_distances(masses in prop::collection::vec(0.1..5.0f64, 4), x in spread(4, 3)) {
        let sys = MassSystem::new(masses, 3).unwrap();
        let cx = Configuration::new(&sys, x).unwrap();
        let cz = project_center_of_mass(&sys, &cx).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                prop_assert!(rel(cz.separation(i, j), cx.separation(i, j)) <= 1e-12);
            }
        }
        prop_assert!(sys.barycenter(cz.coords()).iter().all(|c| c.abs() <= 1e-12));
    }

    #[test]
    fn homogeneity(alpha in 0.2..1.9f64, x in spread(3, 2), v in prop::collection::vec(-1.0..1.0f64, 6)) {
        let m = PotentialModel::new(alpha, MassSystem::new(vec![1.0, 2.0, 0.5], 2).unwrap()).unwrap();
        let u = m.energy(&x).unwrap();
        let g = m.gradient(&x).unwrap();
        let hv = m.hessian(&x).unwrap().mul_vec(&v);
        for lambda in [0.5, 2.0, 10.0] {
            let y: Vec<f64> = x.iter().map(|c| lambda * c).collect();
            prop_assert!(rel(m.energy(&y).unwrap(), lambda.powf(-alpha) * u) <= 1e-10);
            let gy: Vec<f64> = g.iter().map(|c| lambda.powf(-1.0 - alpha) * c).collect();
            prop_assert!(max_rel(&m.gradient(&y).unwrap(), &gy) <= 1e-10);
            let hy: Vec<f64> = hv.iter().map(|c| lambda.powf(-2.0 - alpha) * c).collect();
            prop_assert!(max_rel(&m.hessian(&y).unwrap().mul_vec(&v), &hy) <= 1e-10);
        }
    }

    #[test]
    fn nested_finite_differences(
        alpha in 0.2..1.9f64,
        x in spread(3, 2),
        dirs in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 6), 4),
    ) {
        let m = PotentialModel::new(alpha, MassSystem::new(vec![1.0, 1.5, 0.7], 2).unwrap()).unwrap();
        for q in 1..=4 {
            let refs: Vec<&[f64]> = dirs[..q].iter().map(|d| d.as_slice()).collect();
            let exact = m.directional_derivative(&x, &refs).unwrap();
            let h = 1e-4;
            let lower = |s: f64| -> Vec<f64> {
                let y: Vec<f64> = x.iter().zip(&dirs[q - 1]).map(|(a, b)| a + s * b).collect();
                if q == 1 {
                    m.gradient(&y).unwrap()
                } else {
                    m.directional_derivative(&y, &refs[..q - 1]).unwrap()
                }
            };
            let (p1, m1, p2, m2) = (lower(h), lower(-h), lower(2.0 * h), lower(-2.0 * h));
            let fd: Vec<f64> = (0..6).map(|k| (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * h)).collect();
            prop_assert!(max_rel(&fd, &exact) < 1e-5, "order {}: {:?} vs {:?}", q, fd, exact);
        }
    }
}

#[test]
fn nested_finite_differences_two_bodies() {
    let m = PotentialModel::new(0.7, MassSystem::new(vec![1.0, 3.0], 3).unwrap()).unwrap();
    let x = [0.3, -0.2, 0.5, -0.9, 0.4, 0.1];
    let dirs = [[0.2, 0.1, -0.3, 0.5, 0.0, 0.4], [-0.6, 0.2, 0.1, 0.3, -0.2, 0.0], [0.1, 0.9, -0.4, 0.2, 0.3, -0.7]];
    for q in 2..=3 {
        let refs: Vec<&[f64]> = dirs[..q].iter().map(|d| d.as_slice()).collect();
        let exact = m.directional_derivative(&x, &refs).unwrap();
        let h = 1e-4;
        let lower = |s: f64| {
            let y: Vec<f64> = x.iter().zip(&dirs[q - 1]).map(|(a, b)| a + s * b).collect();
            m.directional_derivative(&y, &refs[..q - 1]).unwrap()
        };
        let (p1, m1, p2, m2) = (lower(h), lower(-h), lower(2.0 * h), lower(-2.0 * h));
        let fd: Vec<f64> = (0..6).map(|k| (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * h)).collect();
        assert!(max_rel(&fd, &exact) < 1e-5);
    }
}

#[test]
fn hessian_lower_bound_at_scaled_central_configuration() {
    use rand::{Rng, SeedableRng};
    for alpha in [0.5, 1.0, 1.5] {
        let m = PotentialModel::new(alpha, MassSystem::equal(3, 2).unwrap()).unwrap();
        let cc = find_central_configuration(&m, 3, 1e-12).unwrap();
        let x: Vec<f64> = cc.b_m.coords().iter().map(|c| cc.beta * c).collect();
        let h = m.hessian(&x).unwrap();
        let bound = -2.0 * alpha / (2.0 + alpha).powi(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let phi: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q: f64 = h.mul_vec(&phi).iter().zip(&phi).map(|(a, b)| a * b).sum();
            let n2 = m.system().norm(&phi).powi(2);
            assert!(q >= bound * n2 - 1e-10 * n2, "α={alpha}: {q} < {}", bound * n2);
        }
    }
}

#[test]
fn collision_is_flagged_with_pair() {
    let m = PotentialModel::new(1.0, MassSystem::equal(3, 2).unwrap()).unwrap();
    let err = m.energy(&[0.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap_err();
    assert!(err.to_string().contains('1') && err.to_string().contains('2'), "{err}");
    let (lo, hi) =
        min_max_mutual_distance(&Configuration::new(m.system(), vec![0.0, 0.0, 3.0, 4.0, 0.0, 1.0]).unwrap());
    assert_eq!((lo, hi), (1.0, 5.0));
}
