//! Trajectory synthesis by action minimization, forward integration of
//! Newton's equations, energies and Euler–Lagrange residuals.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::action::{ActionProblem, MeshKind, PerturbationGrid, TailMode, DEFAULT_HORIZON, DEFAULT_INTERVALS};
use crate::central_config::{CentralConfiguration, ClusterPartition, ClusteredCentralConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{dot, BlockTridiagonal, Mat};
use crate::nbody::{min_max_separation, Configuration};
use crate::ode::{dopri5, FailureKind, OdeOptions};
use crate::potential::PotentialModel;
use crate::reference::ReferencePath;

pub const DEFAULT_OPT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_NEWTON_ITERS: usize = 200;

/// Relative action change treated as round-off in the line search.
const ACTION_ROUNDOFF: f64 = 1e3 * f64::EPSILON;

/// Curves are kept this many collision radii away from the collision set.
pub const COLLISION_GUARD_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    Minimized,
    Integrated,
    Reference,
}

/// Sampled motion `t ↦ (γ(t), γ̇(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    positions: Vec<Vec<f64>>,
    velocities: Vec<Vec<f64>>,
    dim: usize,
    alpha: f64,
    provenance: Provenance,
    energy: f64,
}

impl Trajectory {
    /// `energy` is the value reported for the last sample.
    pub fn new(
        times: Vec<f64>,
        positions: Vec<Vec<f64>>,
        velocities: Vec<Vec<f64>>,
        dim: usize,
        alpha: f64,
        provenance: Provenance,
        energy: f64,
    ) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::arg("trajectory needs at least one sample"));
        }
        if times[0] < 1.0 {
            return Err(Error::arg("trajectory times must start at t ≥ 1"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::arg("trajectory times must be strictly increasing"));
        }
        if positions.len() != times.len() || velocities.len() != times.len() {
            return Err(Error::arg("one position and one velocity per sample"));
        }
        let width = positions[0].len();
        if dim == 0 || width == 0 || width % dim != 0 {
            return Err(Error::Dimension { expected: dim, found: width });
        }
        for v in positions.iter().chain(&velocities) {
            if v.len() != width {
                return Err(Error::Dimension { expected: width, found: v.len() });
            }
        }
        Ok(Self { times, positions, velocities, dim, alpha, provenance, energy })
    }

    /// Samples a reference path at `times`.
    pub fn from_reference(model: &PotentialModel, path: &ReferencePath, times: &[f64]) -> Result<Self> {
        let mut positions = Vec::with_capacity(times.len());
        let mut velocities = Vec::with_capacity(times.len());
        for &t in times {
            let st = path.state(t)?;
            positions.push(st.position);
            velocities.push(st.velocity);
        }
        let last = times.len().checked_sub(1).ok_or_else(|| Error::arg("no sample times"))?;
        let energy = total_energy(model, &positions[last], &velocities[last])?;
        Self::new(
            times.to_vec(),
            positions,
            velocities,
            model.system().dim(),
            model.alpha(),
            Provenance::Reference,
            energy,
        )
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vec<f64>] {
        &self.velocities
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_bodies(&self) -> usize {
        self.positions[0].len() / self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Samples with `t_lo ≤ t ≤ t_hi`.
    pub fn window(&self, t_lo: f64, t_hi: f64) -> core::ops::Range<usize> {
        let lo = self.times.partition_point(|&t| t < t_lo);
        let hi = self.times.partition_point(|&t| t <= t_hi);
        lo..hi.max(lo)
    }
}

/// How the minimizer was started.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialGuess {
    /// `φ ≡ 0`, the shifted reference.
    Zero,
    /// Straight line from `x` to the shifted reference at `t_star`.
    Homotopy { t_star: f64 },
    /// Supplied by the caller.
    Given,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub trajectory: Trajectory,
    /// Final perturbation nodes.
    pub grid: PerturbationGrid,
    pub initial_guess: InitialGuess,
    pub initial_action: f64,
    pub final_action: f64,
    pub iterations: usize,
    /// Gradient in the dual of the kinetic norm `‖φ̇‖_{L²_M}`.
    pub gradient_norm: f64,
    pub el_residual: f64,
    pub hit_collision_guard: bool,
    pub converged: bool,
}

/// Mesh and solver settings for [`synthesize_trajectory`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub horizon: f64,
    pub intervals: usize,
    pub mesh_kind: MeshKind,
    pub tail_mode: TailMode,
    pub opt_tol: f64,
    pub max_iters: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            intervals: DEFAULT_INTERVALS,
            mesh_kind: MeshKind::Geometric,
            tail_mode: TailMode::AnalyticTail,
            opt_tol: DEFAULT_OPT_TOL,
            max_iters: DEFAULT_MAX_NEWTON_ITERS,
        }
    }
}

/// Asymptotic data selecting the reference motion.
#[derive(Debug, Clone, PartialEq)]
pub enum RegimeData {
    Hyperbolic { a: Configuration },
    Parabolic { cc: CentralConfiguration },
    HyperbolicParabolic { a: Configuration, partition: ClusterPartition, clustered: ClusteredCentralConfiguration },
}

/// `h = ½‖v‖²_M − U(x)`.
pub fn total_energy(model: &PotentialModel, x: &[f64], v: &[f64]) -> Result<f64> {
    let u = model.energy(x)?;
    let s = model.system();
    s.check(v)?;
    Ok(0.5 * s.inner_unchecked(v, v) - u)
}

/// Block tridiagonal matrix of the kinetic form `∫ ½‖φ̇‖²_M` on nodes `1..=M`.
fn kinetic_operator(problem: &ActionProblem, grid: &PerturbationGrid) -> BlockTridiagonal {
    let sys = problem.model().system();
    let mass = Mat::diag(&(0..sys.len()).map(|k| sys.coord_mass(k)).collect::<Vec<_>>());
    let h = grid.widths();
    let m = grid.intervals();
    let mut diag = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m.saturating_sub(1));
    for i in 1..=m {
        let mut d = Mat::zeros(sys.len());
        d.add_scaled(1.0 / h[i - 1], &mass);
        if i < m {
            d.add_scaled(1.0 / h[i], &mass);
            let mut u = Mat::zeros(sys.len());
            u.add_scaled(-1.0 / h[i], &mass);
            upper.push(u);
        }
        diag.push(d);
    }
    BlockTridiagonal { diag, upper }
}

fn dual_norm(kinetic: &BlockTridiagonal, g: &[f64]) -> f64 {
    match kinetic.solve(g) {
        Some(z) => dot(g, &z).max(0.0).sqrt(),
        None => f64::INFINITY,
    }
}

fn is_collision(e: &Error) -> bool {
    matches!(e, Error::NodeCollision { .. } | Error::Singularity { .. })
}

/// Damped Newton descent on the discrete action starting from `init`.
///
/// Steps solve `(H + λK) p = −g` with `K` the kinetic form and `λ` raised
/// from zero until the system is positive definite; a backtracking search
/// keeps the action non-increasing and every trial curve at least
/// [`COLLISION_GUARD_FACTOR`] collision radii away from collisions.
pub fn minimize_action(
    problem: &ActionProblem,
    init: PerturbationGrid,
    opt_tol: f64,
    max_iters: usize,
) -> Result<SynthesisReport> {
    minimize_from(problem, init, InitialGuess::Given, opt_tol, max_iters)
}

fn minimize_from(
    problem: &ActionProblem,
    init: PerturbationGrid,
    initial_guess: InitialGuess,
    opt_tol: f64,
    max_iters: usize,
) -> Result<SynthesisReport> {
    if !(opt_tol > 0.0) {
        return Err(Error::arg("opt_tol must be positive"));
    }
    let guard = COLLISION_GUARD_FACTOR * problem.model().eps_collision();
    problem.check_curve(&init, guard)?;
    let kinetic = kinetic_operator(problem, &init);
    let mut grid = init;
    let mut eval = problem.evaluate(&grid, 2)?;
    let initial_action = eval.value;
    let mut gnorm = dual_norm(&kinetic, &eval.gradient);
    let mut iterations = 0;
    let mut hit_guard = false;
    let mut stalled = false;
    while gnorm > opt_tol && iterations < max_iters {
        let neg_g: Vec<f64> = eval.gradient.iter().map(|v| -v).collect();
        let hess = eval.hessian.take().ok_or_else(|| Error::domain("hessian not assembled"))?;
        let direction = newton_direction(&hess, &kinetic, &neg_g);
        let slope = -dot(&neg_g, &direction);
        let mut step = 1.0;
        let mut accepted = None;
        let mut guard_in_search = false;
        for _ in 0..60 {
            let mut trial = grid.clone();
            let u: Vec<f64> = grid.unknowns().iter().zip(&direction).map(|(x, p)| x + step * p).collect();
            trial.set_unknowns(&u)?;
            let outcome = problem.check_curve(&trial, guard).and_then(|_| problem.evaluate(&trial, 2));
            match outcome {
                Ok(te) => {
                    let armijo = te.value <= eval.value + 1e-4 * step * slope;
                    // Near the minimum the action change drowns in round-off; the
                    // gradient still tells a good step from a bad one.
                    let noise = ACTION_ROUNDOFF * eval.value.abs().max(1.0);
                    let flat = te.value <= eval.value + noise && dual_norm(&kinetic, &te.gradient) < gnorm;
                    if te.value.is_finite() && (armijo || flat) {
                        accepted = Some((trial, te));
                        break;
                    }
                }
                Err(e) if is_collision(&e) => guard_in_search = true,
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        hit_guard |= guard_in_search;
        match accepted {
            Some((g, e)) => {
                grid = g;
                eval = e;
                gnorm = dual_norm(&kinetic, &eval.gradient);
                iterations += 1;
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    let converged = gnorm <= opt_tol;
    let trajectory = reconstruct(problem, &grid)?;
    let el_residual = euler_lagrange_residual(problem.model(), &trajectory)?;
    Ok(SynthesisReport {
        trajectory,
        grid,
        initial_guess,
        initial_action,
        final_action: eval.value,
        iterations,
        gradient_norm: gnorm,
        el_residual,
        hit_collision_guard: hit_guard && stalled,
        converged,
    })
}

fn newton_direction(hess: &BlockTridiagonal, kinetic: &BlockTridiagonal, rhs: &[f64]) -> Vec<f64> {
    if let Some(p) = hess.solve(rhs) {
        if dot(&p, rhs) > 0.0 {
            return p;
        }
    }
    let mut lambda = 1e-6;
    while lambda < 1e12 {
        let mut shifted = hess.clone();
        for (d, k) in shifted.diag.iter_mut().zip(&kinetic.diag) {
            d.add_scaled(lambda, k);
        }
        for (u, k) in shifted.upper.iter_mut().zip(&kinetic.upper) {
            u.add_scaled(lambda, k);
        }
        if let Some(p) = shifted.solve(rhs) {
            if dot(&p, rhs) > 0.0 {
                return p;
            }
        }
        lambda *= 10.0;
    }
    kinetic.solve(rhs).unwrap_or_else(|| rhs.to_vec())
}

/// Weights of the first derivative at `z` from values at `x` (Fornberg).
fn derivative_weights(z: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![[0.0f64; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                c[i][1] = c1 * (c[i - 1][0] - c5 * c[i - 1][1]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            c[j][1] = (c4 * c[j][1] - c[j][0]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Derivative at sample `i` from a stencil of up to `width` neighbours.
fn differentiate(times: &[f64], values: &[Vec<f64>], i: usize, width: usize) -> Vec<f64> {
    let n = times.len();
    let width = width.min(n);
    let lo = i.saturating_sub(width / 2).min(n - width);
    let w = derivative_weights(times[i], &times[lo..lo + width]);
    let mut out = vec![0.0; values[i].len()];
    for (k, wk) in w.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(&values[lo + k]) {
            *o += wk * v;
        }
    }
    out
}

fn reconstruct(problem: &ActionProblem, grid: &PerturbationGrid) -> Result<Trajectory> {
    let times = grid.nodes().to_vec();
    let phis: Vec<Vec<f64>> = (0..times.len()).map(|i| grid.value(i).to_vec()).collect();
    let mut positions = Vec::with_capacity(times.len());
    let mut velocities = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let st = problem.path().state(t)?;
        positions.push(problem.curve_point(t, &phis[i]));
        let mut v = st.velocity;
        for (a, b) in v.iter_mut().zip(differentiate(&times, &phis, i, 5)) {
            *a += b;
        }
        velocities.push(v);
    }
    let last = times.len() - 1;
    let energy = total_energy(problem.model(), &positions[last], &velocities[last])?;
    let model = problem.model();
    Trajectory::new(times, positions, velocities, model.system().dim(), model.alpha(), Provenance::Minimized, energy)
}

fn build_path(model: &PotentialModel, data: &RegimeData) -> Result<ReferencePath> {
    match data {
        RegimeData::Hyperbolic { a } => ReferencePath::hyperbolic(model, a),
        RegimeData::Parabolic { cc } => ReferencePath::parabolic(model, cc),
        RegimeData::HyperbolicParabolic { a, partition, clustered } => {
            let alpha = model.alpha();
            if !(alpha > 0.5 && alpha < 2.0) {
                return Err(Error::arg("hyperbolic-parabolic synthesis needs α ∈ (1/2, 2)"));
            }
            if partition.all_singletons() {
                ReferencePath::hyperbolic(model, a)
            } else {
                ReferencePath::hyperbolic_parabolic(model, a, partition, clustered)
            }
        }
    }
}

/// Straight line from `x` to the shifted reference at `t_star`, then the
/// shifted reference.
fn homotopy_grid(problem: &ActionProblem, spec: &GridSpec, t_star: f64) -> Result<PerturbationGrid> {
    let path = problem.path();
    let r1 = path.position(1.0);
    let rs = path.position(t_star);
    PerturbationGrid::from_fn(spec.mesh_kind, spec.horizon, spec.intervals, r1.len(), |t| {
        if t >= t_star {
            return vec![0.0; r1.len()];
        }
        let s = (t - 1.0) / (t_star - 1.0);
        let rt = path.position(t);
        (0..r1.len()).map(|k| r1[k] + s * (rs[k] - r1[k]) - rt[k]).collect()
    })
}

/// Builds the action problem for the regime, picks a collision-free initial
/// guess and minimizes.
pub fn synthesize_trajectory(
    model: &PotentialModel,
    x: &Configuration,
    data: &RegimeData,
    spec: &GridSpec,
) -> Result<SynthesisReport> {
    let path = build_path(model, data)?;
    let problem = ActionProblem::new(model.clone(), path, x.clone(), spec.horizon, spec.tail_mode)?;
    synthesize_problem(&problem, spec)
}

/// [`synthesize_trajectory`] for a prepared problem.
pub fn synthesize_problem(problem: &ActionProblem, spec: &GridSpec) -> Result<SynthesisReport> {
    let guard = COLLISION_GUARD_FACTOR * problem.model().eps_collision();
    let zero = problem.zero_grid(spec.mesh_kind, spec.intervals)?;
    let first_error = match problem.check_curve(&zero, guard) {
        Ok(()) => return minimize_from(problem, zero, InitialGuess::Zero, spec.opt_tol, spec.max_iters),
        Err(e) => e,
    };
    let mut t_star = 2.0;
    while t_star < spec.horizon {
        let g = homotopy_grid(problem, spec, t_star)?;
        if problem.check_curve(&g, guard).is_ok() {
            return minimize_from(problem, g, InitialGuess::Homotopy { t_star }, spec.opt_tol, spec.max_iters);
        }
        t_star *= 2.0;
    }
    Err(first_error)
}

/// `n` log-spaced times from `t0` to `t1` inclusive.
pub fn log_spaced(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => {
            let (l0, l1) = (t0.ln(), t1.ln());
            let mut v: Vec<f64> = (0..n).map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()).collect();
            v[0] = t0;
            v[n - 1] = t1;
            v
        }
    }
}

/// Integrates `Mẍ = ∇U(x)` from `(t0, x0, v0)` to `t1`, sampling at
/// `sample_times` (sorted internally; all within `[t0, t1]`).
///
/// Near a collision the step size collapses and a
/// [`Error::CollisionApproach`] is returned with the time reached and an
/// estimate of the collision time from the closing pair's power law.
pub fn integrate_newton(
    model: &PotentialModel,
    x0: &Configuration,
    v0: &[f64],
    t0: f64,
    t1: f64,
    rtol: f64,
    sample_times: &[f64],
) -> Result<Trajectory> {
    let sys = model.system();
    sys.check(x0.coords())?;
    sys.check(v0)?;
    if !(rtol > 0.0 && rtol < 1e-2) {
        return Err(Error::arg("rtol must lie in (0, 1e-2)"));
    }
    if !(t0 >= 1.0 && t1 >= 1.0 && t0.is_finite() && t1.is_finite()) {
        return Err(Error::arg("integration times must be finite and at least 1"));
    }
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    let mut samples: Vec<f64> = sample_times.to_vec();
    if samples.iter().any(|t| !(*t >= lo && *t <= hi)) {
        return Err(Error::arg("sample times must lie between t0 and t1"));
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    samples.dedup();
    if samples.is_empty() {
        return Err(Error::arg("at least one sample time is required"));
    }
    if t1 < t0 {
        samples.reverse();
    }
    model.energy(x0.coords())?;
    let n = sys.len();
    let mut y0 = x0.coords().to_vec();
    y0.extend_from_slice(v0);
    let opts = OdeOptions { rtol, atol: rtol * 1e-3, ..OdeOptions::default() };
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        dy[..n].copy_from_slice(&y[n..]);
        let acc = model.acceleration(&y[..n])?;
        dy[n..].copy_from_slice(&acc);
        Ok(())
    };
    let sol = match dopri5(rhs, t0, &y0, t1, &samples, &opts) {
        Ok(s) => s,
        Err(f) => {
            return Err(match f.kind {
                FailureKind::MaxSteps => Error::NonConvergence { iterations: opts.max_steps, residual: f.t },
                FailureKind::StepUnderflow | FailureKind::Rhs(_) => {
                    Error::CollisionApproach { time: f.t, blowup: blowup_estimate(model, &f.y[..n], &f.y[n..], f.t) }
                }
            })
        }
    };
    let mut rows = sol.samples;
    if t1 < t0 {
        rows.reverse();
    }
    let times: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let positions: Vec<Vec<f64>> = rows.iter().map(|r| r.1[..n].to_vec()).collect();
    let velocities: Vec<Vec<f64>> = rows.iter().map(|r| r.1[n..].to_vec()).collect();
    let energy = total_energy(model, &sol.y_end[..n], &sol.y_end[n..])?;
    Trajectory::new(times, positions, velocities, sys.dim(), model.alpha(), Provenance::Integrated, energy)
}

/// `t + 2/(2+α) · r/|ṙ|` for the closest pair, assuming it closes as
/// `(t_c − t)^{2/(2+α)}`.
fn blowup_estimate(model: &PotentialModel, x: &[f64], v: &[f64], t: f64) -> f64 {
    let d = model.system().dim();
    let nb = x.len() / d;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..nb {
        for j in i + 1..nb {
            let mut r2 = 0.0;
            let mut rv = 0.0;
            for c in 0..d {
                let dx = x[i * d + c] - x[j * d + c];
                r2 += dx * dx;
                rv += dx * (v[i * d + c] - v[j * d + c]);
            }
            let r = r2.sqrt();
            if r < best.0 {
                best = (r, if r > 0.0 { rv / r } else { 0.0 });
            }
        }
    }
    let (r, rdot) = best;
    if rdot < 0.0 {
        t + 2.0 / (2.0 + model.alpha()) * r / -rdot
    } else {
        t
    }
}

/// Largest relative energy deviation from the first sample, measured
/// against `½‖v‖²_M + U(x)` there.
pub fn energy_drift(model: &PotentialModel, traj: &Trajectory) -> Result<f64> {
    let x0 = &traj.positions[0];
    let v0 = &traj.velocities[0];
    let h0 = total_energy(model, x0, v0)?;
    let scale = 0.5 * model.system().inner_unchecked(v0, v0) + model.energy(x0)?;
    let mut drift: f64 = 0.0;
    for (x, v) in traj.positions.iter().zip(&traj.velocities) {
        drift = drift.max((total_energy(model, x, v)? - h0).abs());
    }
    Ok(drift / scale)
}

/// Largest normalized Newton residual `‖Mγ̈ − ∇U(γ)‖_{M⁻¹} / ‖∇U(γ)‖_{M⁻¹}`
/// over samples with a full centred stencil (five points when available,
/// three otherwise). `γ̈` is differentiated from the sampled velocities.
pub fn euler_lagrange_residual(model: &PotentialModel, traj: &Trajectory) -> Result<f64> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::arg("the residual needs at least three samples"));
    }
    let sys = model.system();
    let (width, range) = if n >= 5 { (5, 2..n - 2) } else { (3, 1..n - 1) };
    let mut worst: f64 = 0.0;
    for i in range {
        let acc = differentiate(&traj.times, &traj.velocities, i, width);
        let g = model.gradient(&traj.positions[i])?;
        let ma = sys.apply_mass(&acc);
        let r: Vec<f64> = ma.iter().zip(&g).map(|(a, b)| a - b).collect();
        let gn = sys.dual_norm(&g);
        worst = worst.max(sys.dual_norm(&r) / gn);
    }
    Ok(worst)
}

/// Smallest and largest mutual distance of each sample.
pub fn separation_range(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.positions.iter().map(|x| min_max_separation(x, traj.dim)).collect()
}
