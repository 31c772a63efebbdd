//! Discretized renormalized action on a graded time mesh.
//!
//! The perturbation `φ` is piecewise linear between mesh nodes with
//! `φ(1) = 0`. The kinetic term is integrated exactly per segment, the
//! potential terms by the trapezoid rule, and everything beyond the horizon
//! either dropped ([`TailMode::Truncate`]) or replaced by a power-law
//! continuation of the last node ([`TailMode::AnalyticTail`]).
//!
//! With `γ = r₀ + ψ`, `ψ = φ + x - r₀(1)`, the integrand is
//! `½‖φ̇‖²_M + U(r₀ + ψ) - U(r₀) - ⟨M r̈₀, φ⟩`; the `U(r₀)` term is omitted
//! for the plain action. Potential differences are formed pairwise without
//! cancellation so far-out nodes keep their relative precision.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, BlockTridiagonal, Mat};
use crate::nbody::{collision_pair, separation, Configuration, MassSystem};
use crate::potential::{pair_energy_difference, PotentialModel};
use crate::quadrature::GaussLegendre;
use crate::reference::{ReferencePath, Regime};

pub const DEFAULT_INTERVALS: usize = 2000;
pub const DEFAULT_HORIZON: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshKind {
    Geometric,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailMode {
    Truncate,
    AnalyticTail,
}

/// Nodal values of a piecewise-linear perturbation on `[1, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationGrid {
    nodes: Vec<f64>,
    values: Vec<f64>,
    width: usize,
    mesh_kind: MeshKind,
}

impl PerturbationGrid {
    /// Zero perturbation on `intervals` segments ending at `horizon`.
    pub fn new(mesh_kind: MeshKind, horizon: f64, intervals: usize, width: usize) -> Result<Self> {
        if !(horizon > 1.0 && horizon.is_finite()) {
            return Err(Error::arg("horizon must exceed 1"));
        }
        if intervals == 0 || width == 0 {
            return Err(Error::arg("grid needs at least one interval and one coordinate"));
        }
        let m = intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals)
            .map(|i| match mesh_kind {
                MeshKind::Geometric => horizon.powf(i as f64 / m),
                MeshKind::Uniform => 1.0 + (horizon - 1.0) * i as f64 / m,
            })
            .collect();
        nodes[0] = 1.0;
        nodes[intervals] = horizon;
        Ok(Self { nodes, values: vec![0.0; (intervals + 1) * width], width, mesh_kind })
    }

    /// Samples `f` at the nodes; the first node is set to zero.
    pub fn from_fn<F: FnMut(f64) -> Vec<f64>>(
        mesh_kind: MeshKind,
        horizon: f64,
        intervals: usize,
        width: usize,
        mut f: F,
    ) -> Result<Self> {
        let mut g = Self::new(mesh_kind, horizon, intervals, width)?;
        for i in 1..=intervals {
            let v = f(g.nodes[i]);
            if v.len() != width {
                return Err(Error::Dimension { expected: width, found: v.len() });
            }
            g.values[i * width..(i + 1) * width].copy_from_slice(&v);
        }
        Ok(g)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn mesh_kind(&self) -> MeshKind {
        self.mesh_kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    /// All nodal values, node-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values at nodes `1..=M`, the free variables.
    pub fn unknowns(&self) -> &[f64] {
        &self.values[self.width..]
    }

    pub fn set_unknowns(&mut self, u: &[f64]) -> Result<()> {
        if u.len() != self.values.len() - self.width {
            return Err(Error::Dimension { expected: self.values.len() - self.width, found: u.len() });
        }
        self.values[self.width..].copy_from_slice(u);
        Ok(())
    }

    pub fn widths(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Trapezoid weights on the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.widths();
        let m = h.len();
        (0..=m)
            .map(|i| {
                let left = if i > 0 { h[i - 1] } else { 0.0 };
                let right = if i < m { h[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    /// Piecewise-linear interpolant, constant beyond the horizon.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        let n = self.nodes.len();
        if t <= self.nodes[0] {
            return self.value(0).to_vec();
        }
        if t >= self.nodes[n - 1] {
            return self.value(n - 1).to_vec();
        }
        let k = self.nodes.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let w = (t - t0) / (t1 - t0);
        self.value(k).iter().zip(self.value(k + 1)).map(|(a, b)| a + w * (b - a)).collect()
    }

    /// `‖φ‖²_D = ∫ ‖φ̇‖²_M`, exact for the piecewise-linear interpolant.
    pub fn d_norm_sq(&self, system: &MassSystem) -> f64 {
        kinetic_energy(system, self) * 2.0
    }
}

/// `½ ∫ ‖φ̇‖²_M` of the interpolant.
pub fn kinetic_energy(system: &MassSystem, grid: &PerturbationGrid) -> f64 {
    let n = grid.width;
    let h = grid.widths();
    let mut e = 0.0;
    for (i, hi) in h.iter().enumerate() {
        let s: f64 = (0..n)
            .map(|k| system.coord_mass(k) * (grid.values[(i + 1) * n + k] - grid.values[i * n + k]).powi(2))
            .sum();
        e += 0.5 * s / hi;
    }
    e
}

/// Gradient of [`kinetic_energy`] with respect to nodes `1..=M`.
pub fn kinetic_gradient(system: &MassSystem, grid: &PerturbationGrid) -> Vec<f64> {
    let n = grid.width;
    let h = grid.widths();
    let m = h.len();
    let mut g = vec![0.0; m * n];
    for (i, hi) in h.iter().enumerate() {
        for k in 0..n {
            let f = system.coord_mass(k) * (grid.values[(i + 1) * n + k] - grid.values[i * n + k]) / hi;
            g[i * n + k] += f;
            if i > 0 {
                g[(i - 1) * n + k] -= f;
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
struct TailModel {
    /// Classes whose centres of mass are frozen beyond the horizon.
    classes: Vec<Vec<usize>>,
    kinetic_coef: f64,
    times: Vec<f64>,
    weights: Vec<f64>,
    scales: Vec<f64>,
}

/// Everything needed to evaluate the discrete action.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionProblem {
    model: PotentialModel,
    path: ReferencePath,
    x0: Configuration,
    renormalized: bool,
    horizon: f64,
    tail_mode: TailMode,
    shift: Vec<f64>,
    tail: Option<TailModel>,
}

impl ActionProblem {
    pub fn new(
        model: PotentialModel,
        path: ReferencePath,
        x0: Configuration,
        horizon: f64,
        tail_mode: TailMode,
    ) -> Result<Self> {
        let sys = model.system();
        sys.check(x0.coords())?;
        sys.check(&path.position(1.0))?;
        if (model.alpha() - path.alpha()).abs() > 0.0 {
            return Err(Error::arg("reference path and potential use different α"));
        }
        if !(horizon > 1.0 && horizon.is_finite()) {
            return Err(Error::arg("horizon must exceed 1"));
        }
        let renormalized = !(path.regime() == Regime::Hyperbolic && model.alpha() > 1.0);
        let r1 = path.position(1.0);
        let shift: Vec<f64> = x0.coords().iter().zip(&r1).map(|(x, r)| x - r).collect();
        let mut p = Self { model, path, x0, renormalized, horizon, tail_mode, shift, tail: None };
        if tail_mode == TailMode::AnalyticTail {
            p.tail = Some(p.build_tail());
        }
        Ok(p)
    }

    /// Chooses the renormalized or plain functional. The plain one is only
    /// finite for hyperbolic references with `α > 1`.
    pub fn with_renormalized(mut self, renormalized: bool) -> Result<Self> {
        if !renormalized && !(self.path.regime() == Regime::Hyperbolic && self.model.alpha() > 1.0) {
            return Err(Error::arg("the plain action diverges unless the reference is hyperbolic with α > 1"));
        }
        self.renormalized = renormalized;
        if self.tail.is_some() {
            self.tail = Some(self.build_tail());
        }
        Ok(self)
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn path(&self) -> &ReferencePath {
        &self.path
    }

    pub fn x0(&self) -> &Configuration {
        &self.x0
    }

    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn tail_mode(&self) -> TailMode {
        self.tail_mode
    }

    /// `x - r₀(1)`.
    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Zero perturbation on the default-shaped mesh for this problem.
    pub fn zero_grid(&self, mesh_kind: MeshKind, intervals: usize) -> Result<PerturbationGrid> {
        PerturbationGrid::new(mesh_kind, self.horizon, intervals, self.model.system().len())
    }

    /// `γ(t) = r₀(t) + φ(t) + x - r₀(1)`.
    pub fn curve_point(&self, t: f64, phi: &[f64]) -> Vec<f64> {
        let mut g = self.path.position(t);
        axpy(1.0, phi, &mut g);
        axpy(1.0, &self.shift, &mut g);
        g
    }

    fn build_tail(&self) -> TailModel {
        let alpha = self.model.alpha();
        let n = self.model.system().n_bodies();
        let regime = self.path.regime();
        let clustered = match regime {
            Regime::Hyperbolic => None,
            Regime::Parabolic => Some(vec![(0..n).collect::<Vec<_>>()]),
            Regime::HyperbolicParabolic => self.path.partition().map(|p| p.classes.clone()),
        };
        let theta = if clustered.is_some() { alpha / (2.0 + alpha) } else { 0.0 };
        let classes = clustered.unwrap_or_else(|| (0..n).map(|i| vec![i]).collect());
        // slowest decay exponent of the potential integrand beyond the horizon
        let kappa: f64 = if !self.renormalized {
            alpha
        } else if !clustered_nontrivial(&classes) {
            1.0 + alpha
        } else {
            let base = ((2.0 + 2.0 * alpha) / (2.0 + alpha)).min(2.0 - 2.0 * theta);
            if regime == Regime::HyperbolicParabolic {
                base.min(1.0 + alpha - theta)
            } else {
                base
            }
        };
        let kappa = kappa.max(1.05);
        let nu = 1.0 / (kappa - 1.0);
        let t_end = self.horizon;
        let gl = GaussLegendre::new(12);
        let edges = [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];
        let mut times = Vec::new();
        let mut weights = Vec::new();
        let mut scales = Vec::new();
        for e in edges.windows(2) {
            for (u, w) in gl.mapped(e[0], e[1]) {
                let t = t_end * u.powf(-nu);
                times.push(t);
                weights.push(w * t_end * nu * u.powf(-nu - 1.0));
                scales.push((t / t_end).powf(theta));
            }
        }
        let kinetic_coef = if theta > 0.0 { theta * theta / (2.0 * (1.0 - 2.0 * theta) * t_end) } else { 0.0 };
        TailModel { classes, kinetic_coef, times, weights, scales }
    }

    fn node_collision(&self, node: usize, gamma: &[f64], eps: f64) -> Result<()> {
        match collision_pair(gamma, self.model.system().dim(), eps) {
            Some((i, j, _)) => Err(Error::NodeCollision { node, i, j }),
            None => Ok(()),
        }
    }

    // Far in the tail the clusters separate faster than their members, so
    // each pair is measured against its own reference separation.
    fn pair_collision(&self, node: usize, gamma: &[f64], reference: &[f64], eps: f64) -> Result<()> {
        let sys = self.model.system();
        let d = sys.dim();
        for i in 0..sys.n_bodies() {
            for j in i + 1..sys.n_bodies() {
                let s = separation(gamma, d, i, j);
                if !(s.is_finite() && s > eps * separation(reference, d, i, j)) {
                    return Err(Error::NodeCollision { node, i, j });
                }
            }
        }
        Ok(())
    }

    /// Potential integrand `G(t, φ)` with its φ-gradient and Hessian as requested.
    fn integrand(
        &self,
        node: usize,
        t: f64,
        phi: &[f64],
        order: u8,
        in_tail: bool,
    ) -> Result<(f64, Vec<f64>, Option<Mat>)> {
        let st = self.path.state_unchecked(t);
        let sys = self.model.system();
        let mut psi = phi.to_vec();
        axpy(1.0, &self.shift, &mut psi);
        let mut gamma = st.position.clone();
        axpy(1.0, &psi, &mut gamma);
        if in_tail {
            self.pair_collision(node, &gamma, &st.position, self.model.eps_collision())?;
        } else {
            self.node_collision(node, &gamma, self.model.eps_collision())?;
        }
        let work = sys.apply_mass(&st.acceleration);
        let mut g = -dot(&work, phi);
        g += if self.renormalized {
            self.model.energy_difference_unchecked(&st.position, &psi)
        } else {
            self.model.energy_unchecked(&gamma)
        };
        let mut grad = Vec::new();
        if order >= 1 {
            grad = if self.renormalized {
                let mut d = self.model.gradient_difference_unchecked(&st.position, &psi);
                axpy(1.0, &self.model.gradient_unchecked(&st.position), &mut d);
                d
            } else {
                self.model.gradient_unchecked(&gamma)
            };
            axpy(-1.0, &work, &mut grad);
        }
        let hess = if order >= 2 { Some(self.model.hessian_unchecked(&gamma)) } else { None };
        Ok((g, grad, hess))
    }

    /// Action value, gradient over nodes `1..=M`, and optionally the block
    /// Hessian.
    pub fn evaluate(&self, grid: &PerturbationGrid, order: u8) -> Result<ActionEval> {
        self.check_grid(grid)?;
        let sys = self.model.system();
        let n = grid.width;
        let m = grid.intervals();
        let w = grid.trapezoid_weights();
        let h = grid.widths();
        let mut value = kinetic_energy(sys, grid);
        let mut gradient = if order >= 1 { kinetic_gradient(sys, grid) } else { Vec::new() };
        let mut diag = Vec::new();
        let mut upper = Vec::new();
        if order >= 2 {
            let mass = Mat::diag(&(0..n).map(|k| sys.coord_mass(k)).collect::<Vec<_>>());
            for i in 1..=m {
                let mut d = Mat::zeros(n);
                d.add_scaled(1.0 / h[i - 1], &mass);
                if i < m {
                    d.add_scaled(1.0 / h[i], &mass);
                    let mut u = Mat::zeros(n);
                    u.add_scaled(-1.0 / h[i], &mass);
                    upper.push(u);
                }
                diag.push(d);
            }
        }
        for i in 0..=m {
            let (g, gr, he) = self.integrand(i, grid.nodes[i], grid.value(i), if i == 0 { 0 } else { order }, false)?;
            value += w[i] * g;
            if i > 0 {
                if order >= 1 {
                    axpy(w[i], &gr, &mut gradient[(i - 1) * n..i * n]);
                }
                if let Some(he) = he {
                    diag[i - 1].add_scaled(w[i], &he);
                }
            }
        }
        if let Some(tail) = &self.tail {
            let (tv, tg, th) = self.tail_terms(tail, grid.value(m), order, m)?;
            value += tv;
            if order >= 1 {
                axpy(1.0, &tg, &mut gradient[(m - 1) * n..]);
            }
            if let Some(th) = th {
                diag[m - 1].add_scaled(1.0, &th);
            }
        }
        let hessian = if order >= 2 { Some(BlockTridiagonal { diag, upper }) } else { None };
        Ok(ActionEval { value, gradient, hessian })
    }

    fn check_grid(&self, grid: &PerturbationGrid) -> Result<()> {
        if grid.width != self.model.system().len() {
            return Err(Error::Dimension { expected: self.model.system().len(), found: grid.width });
        }
        if ((grid.horizon() - self.horizon) / self.horizon).abs() > 1e-12 {
            return Err(Error::arg("grid horizon differs from the problem horizon"));
        }
        if grid.value(0).iter().any(|v| *v != 0.0) {
            return Err(Error::arg("perturbations must vanish at t = 1"));
        }
        Ok(())
    }

    /// Projection `P_c ψ` onto cluster centres of mass (M-orthogonal).
    fn project_centres(&self, classes: &[Vec<usize>], v: &[f64]) -> Vec<f64> {
        let sys = self.model.system();
        let d = sys.dim();
        let mut out = vec![0.0; v.len()];
        for class in classes {
            let mk: f64 = class.iter().map(|&i| sys.mass(i)).sum();
            for a in 0..d {
                let c: f64 = class.iter().map(|&i| sys.mass(i) * v[i * d + a]).sum::<f64>() / mk;
                for &i in class {
                    out[i * d + a] = c;
                }
            }
        }
        out
    }

    /// `P_cᵀ g` for a covector `g`.
    fn project_centres_dual(&self, classes: &[Vec<usize>], g: &[f64]) -> Vec<f64> {
        let sys = self.model.system();
        let d = sys.dim();
        let mut out = vec![0.0; g.len()];
        for class in classes {
            let mk: f64 = class.iter().map(|&i| sys.mass(i)).sum();
            for a in 0..d {
                let c: f64 = class.iter().map(|&i| g[i * d + a]).sum::<f64>() / mk;
                for &i in class {
                    out[i * d + a] = sys.mass(i) * c;
                }
            }
        }
        out
    }

    fn tail_terms(
        &self,
        tail: &TailModel,
        phi_t: &[f64],
        order: u8,
        node: usize,
    ) -> Result<(f64, Vec<f64>, Option<Mat>)> {
        let sys = self.model.system();
        let n = phi_t.len();
        let mut psi_t = phi_t.to_vec();
        axpy(1.0, &self.shift, &mut psi_t);
        let centre = self.project_centres(&tail.classes, &psi_t);
        let internal: Vec<f64> = psi_t.iter().zip(&centre).map(|(a, b)| a - b).collect();
        let mut value = tail.kinetic_coef * sys.norm(&internal).powi(2);
        let mut grad = if order >= 1 {
            sys.apply_mass(&internal).into_iter().map(|v| 2.0 * tail.kinetic_coef * v).collect()
        } else {
            Vec::new()
        };
        let mut hess = if order >= 2 {
            let mut k = Mat::zeros(n);
            let pm = self.projection_matrix(&tail.classes);
            for r in 0..n {
                for c in 0..n {
                    let id = if r == c { 1.0 } else { 0.0 };
                    k[(r, c)] = 2.0 * tail.kinetic_coef * sys.coord_mass(r) * (id - pm[(r, c)]);
                }
            }
            Some(k)
        } else {
            None
        };
        let pm = if order >= 2 { Some(self.projection_matrix(&tail.classes)) } else { None };
        for ((t, w), s) in tail.times.iter().zip(&tail.weights).zip(&tail.scales) {
            // φ(t) = L(t)ψ_T - c₀ with L = P_c + s (I - P_c)
            let mut phi: Vec<f64> = centre.iter().zip(&internal).map(|(c, i)| c + s * i).collect();
            axpy(-1.0, &self.shift, &mut phi);
            let (g, gr, he) = self.integrand(node, *t, &phi, order, true)?;
            value += w * g;
            if order >= 1 {
                let pg = self.project_centres_dual(&tail.classes, &gr);
                for k in 0..n {
                    grad[k] += w * (pg[k] + s * (gr[k] - pg[k]));
                }
            }
            if let (Some(he), Some(pm), Some(acc)) = (he, &pm, hess.as_mut()) {
                let mut l = Mat::zeros(n);
                for r in 0..n {
                    for c in 0..n {
                        let id = if r == c { 1.0 } else { 0.0 };
                        l[(r, c)] = pm[(r, c)] + s * (id - pm[(r, c)]);
                    }
                }
                let lhl = l.transpose().mul(&he.mul(&l));
                acc.add_scaled(*w, &lhl);
            }
        }
        Ok((value, grad, hess))
    }

    fn projection_matrix(&self, classes: &[Vec<usize>]) -> Mat {
        let sys = self.model.system();
        let d = sys.dim();
        let mut p = Mat::zeros(sys.len());
        for class in classes {
            let mk: f64 = class.iter().map(|&i| sys.mass(i)).sum();
            for &i in class {
                for &j in class {
                    for a in 0..d {
                        p[(i * d + a, j * d + a)] = sys.mass(j) / mk;
                    }
                }
            }
        }
        p
    }

    /// Fails with the offending node if any curve point comes closer to
    /// collision than `eps_rel` times its largest separation.
    pub fn check_curve(&self, grid: &PerturbationGrid, eps_rel: f64) -> Result<()> {
        for (i, t) in grid.nodes.iter().enumerate() {
            self.node_collision(i, &self.curve_point(*t, grid.value(i)), eps_rel)?;
        }
        Ok(())
    }
}

fn clustered_nontrivial(classes: &[Vec<usize>]) -> bool {
    classes.iter().any(|c| c.len() > 1)
}

#[derive(Debug, Clone)]
pub struct ActionEval {
    pub value: f64,
    /// Covector over nodes `1..=M` (empty when not requested).
    pub gradient: Vec<f64>,
    pub hessian: Option<BlockTridiagonal>,
}

/// The renormalized (or, for hyperbolic `α > 1`, plain) discrete action.
pub fn renormalized_action(problem: &ActionProblem, phi: &PerturbationGrid) -> Result<f64> {
    Ok(problem.evaluate(phi, 0)?.value)
}

/// Exact gradient of the discrete action with respect to nodes `1..=M`.
pub fn action_gradient(problem: &ActionProblem, phi: &PerturbationGrid) -> Result<Vec<f64>> {
    Ok(problem.evaluate(phi, 1)?.gradient)
}

pub fn action_hessian(problem: &ActionProblem, phi: &PerturbationGrid) -> Result<BlockTridiagonal> {
    problem.evaluate(phi, 2)?.hessian.ok_or_else(|| Error::domain("hessian not assembled"))
}

/// Cluster decomposition of the hyperbolic-parabolic action.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredAction {
    /// `A_K` per class of the partition.
    pub intra: Vec<f64>,
    /// `(K_1, K_2, A_{K_1,K_2})` for every unordered pair of classes.
    pub inter: Vec<(usize, usize, f64)>,
    /// Kinetic energy of the centre of mass (zero on barycentric perturbations).
    pub center_of_mass: f64,
    /// Contribution beyond the horizon, shared with the undecomposed action.
    pub tail: f64,
    pub total: f64,
}

/// Pairwise decomposition with the cluster renormalizer: intra-cluster pairs
/// are renormalized by their homothetic term and inter-cluster pairs by
/// `|a_ij t|^{-α}`. Kinetic energy is split exactly through
/// `½‖v‖²_M = (1/2M)Σ_{i<j} m_i m_j |v_i - v_j|² + (1/2M)|Σ m_i v_i|²`.
pub fn clustered_action(problem: &ActionProblem, phi: &PerturbationGrid) -> Result<ClusteredAction> {
    let path = problem.path();
    if path.regime() != Regime::HyperbolicParabolic {
        return Err(Error::arg("the clustered action needs a hyperbolic-parabolic reference"));
    }
    problem.check_grid(phi)?;
    let sys = problem.model().system();
    let n_bodies = sys.n_bodies();
    let d = sys.dim();
    let alpha = problem.model().alpha();
    let total_mass = sys.total_mass();
    let classes: Vec<Vec<usize>> = match path.partition() {
        Some(p) => p.classes.clone(),
        None => (0..n_bodies).map(|i| vec![i]).collect(),
    };
    let class_of: Vec<usize> = (0..n_bodies).map(|i| classes.iter().position(|c| c.contains(&i)).unwrap()).collect();
    let class_mass: Vec<f64> = classes.iter().map(|c| c.iter().map(|&i| sys.mass(i)).sum()).collect();
    let a = path.a().map(|a| a.coords().to_vec()).unwrap_or_else(|| vec![0.0; sys.len()]);
    let nk = classes.len();
    let mut intra = vec![0.0; nk];
    let mut inter = vec![0.0; nk * nk];
    let mut com = 0.0;
    let h = phi.widths();
    let w = phi.trapezoid_weights();
    let sub = |v: &[f64], i: usize, j: usize| -> Vec<f64> { (0..d).map(|c| v[i * d + c] - v[j * d + c]).collect() };
    for (s, hs) in h.iter().enumerate() {
        let dv: Vec<f64> = phi.value(s + 1).iter().zip(phi.value(s)).map(|(b, a)| (b - a) / hs).collect();
        for i in 0..n_bodies {
            for j in i + 1..n_bodies {
                let u = sub(&dv, i, j);
                let e = sys.mass(i) * sys.mass(j) * dot(&u, &u) / (2.0 * total_mass) * hs;
                add_pair(&mut intra, &mut inter, nk, class_of[i], class_of[j], e);
            }
        }
        let mut p = vec![0.0; d];
        for i in 0..n_bodies {
            for c in 0..d {
                p[c] += sys.mass(i) * dv[i * d + c];
            }
        }
        com += dot(&p, &p) / (2.0 * total_mass) * hs;
    }
    for (k, t) in phi.nodes().iter().enumerate() {
        let st = path.state_unchecked(*t);
        let mut psi = phi.value(k).to_vec();
        axpy(1.0, problem.shift(), &mut psi);
        let mut gamma = st.position.clone();
        axpy(1.0, &psi, &mut gamma);
        problem.node_collision(k, &gamma, problem.model().eps_collision())?;
        for i in 0..n_bodies {
            for j in i + 1..n_bodies {
                let mm = sys.mass(i) * sys.mass(j);
                let r = sub(&st.position, i, j);
                let q = sub(&psi, i, j);
                let mut e = pair_energy_difference(alpha, dot(&r, &r), dot(&r, &q), dot(&q, &q));
                let (ki, kj) = (class_of[i], class_of[j]);
                if ki == kj {
                    // renormalizer equals the reference pair term; work term
                    let acc = sub(&st.acceleration, i, j);
                    e -= dot(&acc, &sub(phi.value(k), i, j)) / class_mass[ki];
                } else {
                    let aij = sub(&a, i, j);
                    let rn = dot(&r, &r).powf(-0.5 * alpha);
                    let an = (dot(&aij, &aij) * t * t).powf(-0.5 * alpha);
                    e += rn - an;
                }
                add_pair(&mut intra, &mut inter, nk, ki, kj, w[k] * mm * e);
            }
        }
    }
    let tail = match &problem.tail {
        Some(tail) => problem.tail_terms(tail, phi.value(phi.intervals()), 0, phi.intervals())?.0,
        None => 0.0,
    };
    let mut inter_list = Vec::new();
    for k1 in 0..nk {
        for k2 in k1 + 1..nk {
            inter_list.push((k1, k2, inter[k1 * nk + k2]));
        }
    }
    let total = intra.iter().sum::<f64>() + inter_list.iter().map(|x| x.2).sum::<f64>() + com + tail;
    Ok(ClusteredAction { intra, inter: inter_list, center_of_mass: com, tail, total })
}

fn add_pair(intra: &mut [f64], inter: &mut [f64], nk: usize, ki: usize, kj: usize, e: f64) {
    if ki == kj {
        intra[ki] += e;
    } else {
        let (a, b) = if ki < kj { (ki, kj) } else { (kj, ki) };
        inter[a * nk + b] += e;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyReport {
    /// `∫ ‖φ‖²_M / t^{2+ε}` (interpolant on the mesh, constant beyond it).
    pub lhs: f64,
    /// `4/(1+ε)² ‖φ‖²_D`.
    pub rhs: f64,
    /// `lhs / rhs`, zero when both vanish.
    pub ratio: f64,
    /// `sup_t ‖φ(t)‖²_M / (t - 1)` divided by `‖φ‖²_D`.
    pub sup_ratio: f64,
}

/// Both sides of the weighted Hardy inequality for the interpolant of `φ`.
pub fn hardy_check(system: &MassSystem, phi: &PerturbationGrid, eps: f64) -> Result<HardyReport> {
    if !(eps >= 0.0) {
        return Err(Error::arg("ε must be non-negative"));
    }
    system.check(phi.value(0))?;
    let n = phi.width;
    let gl = GaussLegendre::new(6);
    let mut lhs = 0.0;
    let mut sup: f64 = 0.0;
    let sq = |v: &[f64]| -> f64 { (0..n).map(|k| system.coord_mass(k) * v[k] * v[k]).sum() };
    for s in 0..phi.intervals() {
        let (t0, t1) = (phi.nodes[s], phi.nodes[s + 1]);
        let (a, b) = (phi.value(s), phi.value(s + 1));
        // ‖φ‖² = q0 + q1 λ + q2 λ² on the segment, λ ∈ [0, 1]
        let diff: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let q0 = sq(a);
        let q1 = 2.0 * (0..n).map(|k| system.coord_mass(k) * a[k] * diff[k]).sum::<f64>();
        let q2 = sq(&diff);
        lhs += gl.integrate(t0, t1, |t| {
            let l = (t - t0) / (t1 - t0);
            (q0 + l * (q1 + l * q2)) * t.powf(-2.0 - eps)
        });
        for (l, t) in [(0.5, 0.5 * (t0 + t1)), (1.0, t1)] {
            sup = sup.max((q0 + l * (q1 + l * q2)) / (t - 1.0));
        }
    }
    let t_end = phi.horizon();
    lhs += sq(phi.value(phi.intervals())) * t_end.powf(-1.0 - eps) / (1.0 + eps);
    let dn = phi.d_norm_sq(system);
    let rhs = 4.0 / (1.0 + eps).powi(2) * dn;
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    let sup_ratio = if dn > 0.0 { sup / dn } else { 0.0 };
    Ok(HardyReport { lhs, rhs, ratio, sup_ratio })
}
