//! Minimal central configurations on the inertia ellipsoid
//! `E = {x ∈ X : ‖x‖_M = 1}`, the homothetic scale `β`, and the clustered
//! variant used by hyperbolic-parabolic references.
//!
//! The solver is Riemannian gradient descent on `E` with Barzilai–Borwein
//! steps and Armijo backtracking, restarted from seeded random points. Each
//! start is a pure function of `(seed, start_index)` so callers may run them
//! in parallel and reduce with [`select_best`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::nbody::{collision_pair, Configuration, MassSystem};
use crate::potential::PotentialModel;

pub const DEFAULT_STARTS: usize = 16;
pub const DEFAULT_MAX_ITERS: usize = 20_000;
/// Relative cluster radius applied to `max_i |a_i|`.
pub const DEFAULT_CLUSTER_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CentralConfiguration {
    pub b_m: Configuration,
    pub u_min: f64,
    pub beta: f64,
    pub converged: bool,
    pub gradient_residual: f64,
}

impl CentralConfiguration {
    /// Wraps a given configuration: centres it, rescales it to the mass
    /// sphere and records its Lagrange residual. `converged` reports whether
    /// that residual is within `tol`.
    pub fn from_configuration(model: &PotentialModel, b: &Configuration, tol: f64) -> Result<Self> {
        let sys = model.system();
        sys.check(b.coords())?;
        let mut x = b.coords().to_vec();
        sys.center(&mut x);
        let n = sys.norm(&x);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::arg("configuration must not be a single point"));
        }
        x.iter_mut().for_each(|v| *v /= n);
        let u_min = model.energy(&x)?;
        let beta = beta_coefficient(u_min, model.alpha())?;
        let gradient_residual = lagrange_residual(model, &x)?;
        Ok(Self {
            b_m: Configuration::new(sys, x)?,
            u_min,
            beta,
            converged: gradient_residual <= tol,
            gradient_residual,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub starts: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { starts: DEFAULT_STARTS, tol: 1e-10, max_iters: DEFAULT_MAX_ITERS }
    }
}

/// `((2+α)²/2 · u_min)^{1/(2+α)}`.
pub fn beta_coefficient(u_min: f64, alpha: f64) -> Result<f64> {
    if !(u_min > 0.0 && u_min.is_finite()) {
        return Err(Error::arg("u_min must be positive"));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::arg("α must lie in (0, 2)"));
    }
    Ok(beta_unchecked(u_min, alpha))
}

fn beta_unchecked(u_min: f64, alpha: f64) -> f64 {
    ((2.0 + alpha).powi(2) / 2.0 * u_min).powf(1.0 / (2.0 + alpha))
}

/// `‖∇U(b) + α U(b) M b‖_{M⁻¹}`, the Lagrange residual on `E`.
pub fn lagrange_residual(model: &PotentialModel, b: &[f64]) -> Result<f64> {
    let g = model.gradient(b)?;
    let u = model.energy(b)?;
    let s = model.system();
    let mb = s.apply_mass(b);
    let r: Vec<f64> = g.iter().zip(&mb).map(|(g, m)| g + model.alpha() * u * m).collect();
    Ok(s.dual_norm(&r))
}

pub fn find_central_configuration(model: &PotentialModel, seed: u64, tol_cc: f64) -> Result<CentralConfiguration> {
    find_central_configuration_with(model, seed, &SolverOptions { tol: tol_cc, ..SolverOptions::default() })
}

pub fn find_central_configuration_with(
    model: &PotentialModel,
    seed: u64,
    opts: &SolverOptions,
) -> Result<CentralConfiguration> {
    let runs: Vec<_> = (0..opts.starts.max(1)).map(|k| central_configuration_start(model, seed, k, opts)).collect();
    select_best(runs)
}

/// Lowest `u_min` among converged runs, falling back to the lowest overall
/// (flagged `converged = false`). Ties go to the earlier start.
pub fn select_best(runs: Vec<Result<CentralConfiguration>>) -> Result<CentralConfiguration> {
    let mut best: Option<CentralConfiguration> = None;
    let mut last_err = None;
    for run in runs {
        match run {
            Ok(cc) => {
                let better = match &best {
                    None => true,
                    Some(b) => (cc.converged && !b.converged) || (cc.converged == b.converged && cc.u_min < b.u_min),
                };
                if better {
                    best = Some(cc);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::arg("no starts requested")))
}

/// One deterministic descent from the random start `(seed, start_index)`.
pub fn central_configuration_start(
    model: &PotentialModel,
    seed: u64,
    start_index: usize,
    opts: &SolverOptions,
) -> Result<CentralConfiguration> {
    let sys = model.system();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start_index as u64);
    let mut x = random_point(sys, model.eps_collision(), &mut rng)?;
    let mut u = model.energy(&x)?;
    let mut g = tangent_gradient(model, &x, u);
    let mut gn = sys.norm(&g);
    let mut step = 0.1 / gn.max(1e-300);
    let mut iter = 0;
    while gn > opts.tol && iter < opts.max_iters {
        iter += 1;
        let mut s = step;
        let mut accepted = None;
        for _ in 0..60 {
            let mut y = x.clone();
            axpy(-s, &g, &mut y);
            normalize(sys, &mut y);
            if let Ok(uy) = model.energy(&y) {
                if uy <= u - 1e-4 * s * gn * gn || (uy <= u && gn < 1e3 * opts.tol) {
                    accepted = Some((y, uy));
                    break;
                }
            }
            s *= 0.5;
        }
        let Some((y, uy)) = accepted else {
            // Line search stalled at machine precision.
            break;
        };
        let gy = tangent_gradient(model, &y, uy);
        let dx: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = gy.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = sys.inner(&dx, &dg)?;
        let ss = sys.inner(&dx, &dx)?;
        step = if sy > 0.0 { ss / sy } else { 2.0 * s };
        x = y;
        u = uy;
        g = gy;
        gn = sys.norm(&g);
    }
    canonical_orientation(&mut x, sys.dim());
    let u_min = model.energy(&x)?;
    let b_m = Configuration::new(sys, x)?;
    let gradient_residual = lagrange_residual(model, b_m.coords())?;
    Ok(CentralConfiguration {
        b_m,
        u_min,
        beta: beta_unchecked(u_min, model.alpha()),
        converged: gradient_residual <= opts.tol,
        gradient_residual,
    })
}

fn random_point(sys: &MassSystem, eps: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    for _ in 0..100 {
        let mut x: Vec<f64> = (0..sys.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        sys.center(&mut x);
        normalize(sys, &mut x);
        if collision_pair(&x, sys.dim(), 1e3 * eps).is_none() {
            return Ok(x);
        }
    }
    Err(Error::domain("could not draw a collision-free starting configuration"))
}

fn normalize(sys: &MassSystem, x: &mut [f64]) {
    let n = sys.norm(x);
    x.iter_mut().for_each(|v| *v /= n);
}

/// Riemannian gradient of `U` on `E` in the mass metric: `M⁻¹∇U + αU x`.
fn tangent_gradient(model: &PotentialModel, x: &[f64], u: f64) -> Vec<f64> {
    let mut g = model.system().apply_inverse_mass(&model.gradient_unchecked(x));
    axpy(model.alpha() * u, x, &mut g);
    g
}

/// Reflects `x` so that the first body off the origin lies on the positive
/// first axis, then flips the second axis so that the first body with a
/// nonzero second coordinate has it positive.
pub fn canonical_orientation(x: &mut [f64], d: usize) {
    let n = x.len() / d;
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let tiny = 1e-12 * scale;
    let Some(k) = (0..n).find(|&i| x[i * d..(i + 1) * d].iter().map(|v| v * v).sum::<f64>().sqrt() > tiny) else {
        return;
    };
    let r: Vec<f64> = x[k * d..(k + 1) * d].to_vec();
    let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut v = r.clone();
    v[0] -= rn;
    let vv = dot(&v, &v);
    if vv > tiny * tiny {
        for i in 0..n {
            let p = &mut x[i * d..(i + 1) * d];
            let c = 2.0 * dot(p, &v) / vv;
            for a in 0..d {
                p[a] -= c * v[a];
            }
        }
    }
    if let Some(j) = (0..n).find(|&i| x[i * d + 1].abs() > tiny) {
        if x[j * d + 1] < 0.0 {
            for i in 0..n {
                x[i * d + 1] = -x[i * d + 1];
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition {
    pub classes: Vec<Vec<usize>>,
    pub representative_velocities: Vec<Vec<f64>>,
    pub cluster_masses: Vec<f64>,
}

impl ClusterPartition {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn all_singletons(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }

    /// Index of the class containing body `i`.
    pub fn class_of(&self, i: usize) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&i))
    }

    pub fn same_class(&self, i: usize, j: usize) -> bool {
        self.class_of(i).is_some() && self.class_of(i) == self.class_of(j)
    }
}

/// Classes of the transitive closure of `|a_i - a_j| ≤ eps_cluster`.
/// `None` uses `DEFAULT_CLUSTER_EPS · max_i |a_i|`.
pub fn cluster_partition(system: &MassSystem, a: &Configuration, eps_cluster: Option<f64>) -> ClusterPartition {
    let n = a.n_bodies();
    let d = a.dim();
    let eps = eps_cluster.unwrap_or_else(|| {
        let amax = (0..n).map(|i| a.body(i).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        DEFAULT_CLUSTER_EPS * amax
    });
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if a.separation(i, j) <= eps {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => classes[k].push(i),
            None => {
                roots.push(r);
                classes.push(vec![i]);
            }
        }
    }
    let masses = system.masses();
    let cluster_masses: Vec<f64> = classes.iter().map(|c| c.iter().map(|&i| masses[i]).sum()).collect();
    let representative_velocities = classes
        .iter()
        .zip(&cluster_masses)
        .map(|(c, mk)| {
            let mut v = vec![0.0; d];
            for &i in c {
                axpy(masses[i] / mk, a.body(i), &mut v);
            }
            v
        })
        .collect();
    ClusterPartition { classes, representative_velocities, cluster_masses }
}

/// Central configuration of one cluster, in the cluster's own coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterBlock {
    pub indices: Vec<usize>,
    /// `b^K` over the bodies of `K` (zero for singletons).
    pub b: Vec<f64>,
    pub u_min: f64,
    pub beta: f64,
    pub converged: bool,
    pub gradient_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredCentralConfiguration {
    pub blocks: Vec<ClusterBlock>,
    /// Block vector `b_m = (b^{K_1}, b^{K_2}, …)` in the full configuration space.
    pub b_m: Vec<f64>,
    /// `(β^K b^K)_K` in the full configuration space.
    pub beta_b: Vec<f64>,
}

impl ClusteredCentralConfiguration {
    pub fn converged(&self) -> bool {
        self.blocks.iter().all(|b| b.converged)
    }
}

pub fn clustered_central_configuration(
    model: &PotentialModel,
    partition: &ClusterPartition,
    seed: u64,
    opts: &SolverOptions,
) -> Result<ClusteredCentralConfiguration> {
    let sys = model.system();
    let d = sys.dim();
    let mut b_m = vec![0.0; sys.len()];
    let mut beta_b = vec![0.0; sys.len()];
    let mut blocks = Vec::with_capacity(partition.len());
    for (k, class) in partition.classes.iter().enumerate() {
        if class.len() == 1 {
            blocks.push(ClusterBlock {
                indices: class.clone(),
                b: vec![0.0; d],
                u_min: 0.0,
                beta: 0.0,
                converged: true,
                gradient_residual: 0.0,
            });
            continue;
        }
        let sub = model.restricted(class)?;
        let cc = find_central_configuration_with(&sub, seed, opts)
            .map_err(|e| Error::domain(format!("cluster {k} {class:?}: {e}")))?;
        for (slot, &i) in class.iter().enumerate() {
            for c in 0..d {
                b_m[i * d + c] = cc.b_m.coords()[slot * d + c];
                beta_b[i * d + c] = cc.beta * cc.b_m.coords()[slot * d + c];
            }
        }
        blocks.push(ClusterBlock {
            indices: class.clone(),
            b: cc.b_m.into_coords(),
            u_min: cc.u_min,
            beta: cc.beta,
            converged: cc.converged,
            gradient_residual: cc.gradient_residual,
        });
    }
    Ok(ClusteredCentralConfiguration { blocks, b_m, beta_b })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize, alpha: f64) -> PotentialModel {
        PotentialModel::new(alpha, MassSystem::equal(n, 2).unwrap()).unwrap()
    }

    #[test]
    fn beta_examples() {
        assert!((beta_coefficient(1.0, 1.0).unwrap() - 4.5f64.powf(1.0 / 3.0)).abs() < 1e-14);
        assert!((beta_coefficient(1.0, 1.0).unwrap() - 1.65096).abs() < 1e-5);
        let b = beta_coefficient(1.0, 0.01).unwrap();
        assert!((b - (2.01f64 * 2.01 / 2.0).powf(1.0 / 2.01)).abs() < 1e-14);
        let b2 = beta_coefficient(0.5f64.sqrt(), 1.0).unwrap();
        assert!((b2 - (9.0 / (2.0 * 2f64.sqrt())).powf(1.0 / 3.0)).abs() < 1e-14);
        assert!(beta_coefficient(0.0, 1.0).is_err());
        assert!(beta_coefficient(1.0, 2.0).is_err());
        assert!(beta_coefficient(1.0, 0.0).is_err());
    }

    #[test]
    fn two_body_central_configuration() {
        let m = model(2, 1.0);
        let cc = find_central_configuration(&m, 7, 1e-10).unwrap();
        assert!(cc.converged);
        assert!((cc.u_min - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((cc.b_m.separation(0, 1) - 2f64.sqrt()).abs() < 1e-12);
        assert!((cc.beta - 1.47084).abs() < 1e-5);
        assert!(cc.gradient_residual <= 1e-10);
        let b = cc.b_m.coords();
        assert!(b[0] > 0.0 && b[1].abs() < 1e-14);
    }

    #[test]
    fn equal_mass_two_body_scaling() {
        for mass in [0.5, 3.0] {
            let sys = MassSystem::new(vec![mass, mass], 2).unwrap();
            let m = PotentialModel::new(1.3, sys).unwrap();
            let cc = find_central_configuration(&m, 1, 1e-10).unwrap();
            assert!((cc.b_m.separation(0, 1) - (2.0 / mass).sqrt()).abs() < 1e-10);
            assert!(cc.gradient_residual <= 1e-10);
        }
    }

    #[test]
    fn three_body_is_equilateral() {
        for alpha in [0.5, 1.0, 1.5] {
            let m = model(3, alpha);
            let cc = find_central_configuration(&m, 3, 1e-9).unwrap();
            assert!(cc.gradient_residual <= 1e-8);
            let s = [cc.b_m.separation(0, 1), cc.b_m.separation(0, 2), cc.b_m.separation(1, 2)];
            assert!((s[0] - s[1]).abs() < 1e-7 && (s[1] - s[2]).abs() < 1e-7, "{s:?}");
            assert!((m.system().norm(cc.b_m.coords()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let m = model(4, 1.0);
        let a = find_central_configuration(&m, 11, 1e-9).unwrap();
        let b = find_central_configuration(&m, 11, 1e-9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn partition_examples() {
        let sys = MassSystem::equal(3, 2).unwrap();
        let a = Configuration::new(&sys, vec![1.0, 0.0, 1.0, 0.0, -1.0, 0.0]).unwrap();
        let p = cluster_partition(&sys, &a, None);
        assert_eq!(p.classes, vec![vec![0, 1], vec![2]]);
        assert_eq!(p.cluster_masses, vec![2.0, 1.0]);
        assert_eq!(p.representative_velocities[0], vec![1.0, 0.0]);

        let a = Configuration::new(&sys, vec![1.0, 0.0, 0.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(cluster_partition(&sys, &a, None).all_singletons());

        let a = Configuration::zeros(&sys);
        assert_eq!(cluster_partition(&sys, &a, None).classes, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn clustered_blocks() {
        let m = model(3, 1.0);
        let sys = m.system().clone();
        let a = Configuration::new(&sys, vec![1.0, 0.0, 1.0, 0.0, -2.0, 0.0]).unwrap();
        let p = cluster_partition(&sys, &a, None);
        let c = clustered_central_configuration(&m, &p, 5, &SolverOptions::default()).unwrap();
        assert!((c.blocks[0].u_min - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(c.blocks[1].beta, 0.0);
        assert_eq!(&c.b_m[4..6], &[0.0, 0.0]);
        let sep = ((c.b_m[0] - c.b_m[2]).powi(2) + (c.b_m[1] - c.b_m[3]).powi(2)).sqrt();
        assert!((sep - 2f64.sqrt()).abs() < 1e-12);
    }
}
