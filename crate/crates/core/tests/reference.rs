use expansive_core::central_config::{beta_coefficient, find_central_configuration};
use expansive_core::reference::{defect, gamma_sequence, ReferencePath};
use expansive_core::{Configuration, MassSystem, PotentialModel};
use proptest::prelude::*;

fn separated(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0..4.0f64, 2 * n).prop_filter("bodies too close", move |x| {
        (0..n).all(|i| (i + 1..n).all(|j| (x[2 * i] - x[2 * j]).hypot(x[2 * i + 1] - x[2 * j + 1]) > 1.0))
    })
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn sorted_distances(x: &Configuration) -> Vec<f64> {
    let n = x.n_bodies();
    let mut d: Vec<f64> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| x.separation(i, j)).collect();
    d.sort_by(f64::total_cmp);
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gamma_scaling_covariance(alpha in prop::sample::select(vec![0.3, 0.45, 0.7, 1.3]), a in separated(3)) {
        let m = PotentialModel::new(alpha, MassSystem::new(vec![1.0, 2.0, 0.5], 2).unwrap()).unwrap();
        let base = gamma_sequence(&m, &Configuration::new(m.system(), a.clone()).unwrap(), 3).unwrap();
        for lambda in [0.5, 2.0] {
            let scaled = Configuration::new(m.system(), a.iter().map(|c| lambda * c).collect()).unwrap();
            let gs = gamma_sequence(&m, &scaled, 3).unwrap();
            for (k, (g, g0)) in gs.iter().zip(&base).enumerate() {
                let f = lambda.powf(1.0 - (k as f64 + 1.0) * (2.0 + alpha));
                let expect: Vec<f64> = g0.iter().map(|v| f * v).collect();
                prop_assert!(max_rel(g, &expect) <= 1e-9, "k={}", k + 1);
            }
        }
    }

    #[test]
    fn gamma_permutation_symmetry(alpha in prop::sample::select(vec![0.3, 0.7, 1.3]), a in separated(3)) {
        let m = PotentialModel::new(alpha, MassSystem::equal(3, 2).unwrap()).unwrap();
        let perm = [2usize, 0, 1];
        let permuted: Vec<f64> = perm.iter().flat_map(|&i| [a[2 * i], a[2 * i + 1]]).collect();
        let g = gamma_sequence(&m, &Configuration::new(m.system(), a).unwrap(), 3).unwrap();
        let gp = gamma_sequence(&m, &Configuration::new(m.system(), permuted).unwrap(), 3).unwrap();
        for (x, y) in g.iter().zip(&gp) {
            let expect: Vec<f64> = perm.iter().flat_map(|&i| [x[2 * i], x[2 * i + 1]]).collect();
            prop_assert!(max_rel(y, &expect) <= 1e-12);
        }
    }

    #[test]
    fn beta_is_increasing(alpha in 0.1..1.9f64, u in 0.1..50.0f64, du in 1e-3..10.0f64) {
        prop_assert!(beta_coefficient(u + du, alpha).unwrap() > beta_coefficient(u, alpha).unwrap());
    }
}

#[test]
fn central_configuration_is_label_invariant() {
    for alpha in [0.5, 1.0, 1.5] {
        let m3 = PotentialModel::new(alpha, MassSystem::new(vec![1.0, 1.0, 2.0], 2).unwrap()).unwrap();
        let m3p = PotentialModel::new(alpha, MassSystem::new(vec![1.0, 2.0, 1.0], 2).unwrap()).unwrap();
        let a = find_central_configuration(&m3, 4, 1e-12).unwrap();
        let b = find_central_configuration(&m3p, 4, 1e-12).unwrap();
        assert!((a.u_min - b.u_min).abs() <= 1e-9 * a.u_min);
        let (da, db) = (sorted_distances(&a.b_m), sorted_distances(&b.b_m));
        assert!(max_rel(&da, &db) <= 1e-6, "{da:?} vs {db:?}");
    }
}

#[test]
fn homothetic_paths_solve_newton() {
    for n in [2, 3, 4] {
        let m = PotentialModel::new(1.2, MassSystem::equal(n, 2).unwrap()).unwrap();
        let cc = find_central_configuration(&m, 2, 1e-12).unwrap();
        assert!(cc.converged);
        let path = ReferencePath::parabolic(&m, &cc).unwrap();
        for t in [1.0, 10.0, 100.0] {
            let g = m.gradient(&path.position(t)).unwrap();
            assert!(defect(&m, &path, t).unwrap() <= 1e-8 * m.system().dual_norm(&g));
        }
    }
}
