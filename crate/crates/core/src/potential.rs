//! The homogeneous pair potential `U(x) = Σ_{i<j} m_i m_j |r_i - r_j|^{-α}`,
//! its gradients, Hessian, and exact higher directional derivatives.
//!
//! Every pair term is `g(u) = f(|u|²)` with the radial profile
//! `f(s) = s^{-α/2}`. Derivatives of any order follow from Faà di Bruno's
//! formula applied to the quadratic `s(u) = u·u`: each term corresponds to a
//! partition of the derivative slots into singletons (contributing `2 u·h`)
//! and pairs (contributing `2 h·k`), weighted by `f^{(#blocks)}(s)`.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::nbody::{collision_pair, Configuration, MassSystem, DEFAULT_COLLISION_EPS};

/// Highest supported number of direction slots `q` in
/// [`PotentialModel::directional_derivative`].
pub const MAX_DIRECTIONAL_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialModel {
    alpha: f64,
    system: MassSystem,
    eps_collision: f64,
}

impl PotentialModel {
    pub fn new(alpha: f64, system: MassSystem) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::arg("α must be positive"));
        }
        Ok(Self { alpha, system, eps_collision: DEFAULT_COLLISION_EPS })
    }

    /// Relative collision threshold (fraction of the largest separation).
    pub fn with_collision_eps(mut self, eps: f64) -> Self {
        self.eps_collision = eps;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn system(&self) -> &MassSystem {
        &self.system
    }

    pub fn eps_collision(&self) -> f64 {
        self.eps_collision
    }

    /// Same exponent, restricted to a subset of bodies.
    pub fn restricted(&self, indices: &[usize]) -> Result<Self> {
        Ok(Self { alpha: self.alpha, system: self.system.subsystem(indices)?, eps_collision: self.eps_collision })
    }

    fn guard(&self, x: &[f64]) -> Result<()> {
        self.system.check(x)?;
        match collision_pair(x, self.system.dim(), self.eps_collision) {
            Some((i, j, separation)) => Err(Error::Singularity { i, j, separation }),
            None => Ok(()),
        }
    }

    #[inline]
    fn radial(&self, s: f64, k: usize) -> f64 {
        let h = -0.5 * self.alpha;
        let mut c = 1.0;
        for i in 0..k {
            c *= h - i as f64;
        }
        c * s.powf(h - k as f64)
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.system.n_bodies();
        let m = self.system.masses();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j, m[i] * m[j])))
    }

    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        self.guard(x)?;
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[f64]) -> f64 {
        let d = self.system.dim();
        self.pairs()
            .map(|(i, j, mm)| {
                let s: f64 = (0..d).map(|a| (x[i * d + a] - x[j * d + a]).powi(2)).sum();
                mm * s.powf(-0.5 * self.alpha)
            })
            .sum()
    }

    /// Euclidean gradient `∇U(x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.guard(x)?;
        Ok(self.gradient_unchecked(x))
    }

    pub(crate) fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let d = self.system.dim();
        let mut g = vec![0.0; x.len()];
        let mut u = vec![0.0; d];
        for (i, j, mm) in self.pairs() {
            for a in 0..d {
                u[a] = x[i * d + a] - x[j * d + a];
            }
            let s: f64 = u.iter().map(|v| v * v).sum();
            // 2 f'(s) u = -α u / |u|^{α+2}
            let c = mm * 2.0 * self.radial(s, 1);
            for a in 0..d {
                g[i * d + a] += c * u[a];
                g[j * d + a] -= c * u[a];
            }
        }
        g
    }

    /// `U(x + v) - U(x)` without cancellation when `v` is small next to `x`.
    pub fn energy_difference(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        self.system.check(v)?;
        self.guard(x)?;
        let y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + b).collect();
        self.guard(&y)?;
        Ok(self.energy_difference_unchecked(x, v))
    }

    pub(crate) fn energy_difference_unchecked(&self, x: &[f64], v: &[f64]) -> f64 {
        let d = self.system.dim();
        self.pairs()
            .map(|(i, j, mm)| {
                let (mut s0, mut uv, mut vv) = (0.0, 0.0, 0.0);
                for a in 0..d {
                    let u = x[i * d + a] - x[j * d + a];
                    let w = v[i * d + a] - v[j * d + a];
                    s0 += u * u;
                    uv += u * w;
                    vv += w * w;
                }
                mm * pair_energy_difference(self.alpha, s0, uv, vv)
            })
            .sum()
    }

    /// `∇U(x + v) - ∇U(x)` without cancellation when `v` is small next to `x`.
    pub fn gradient_difference(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.system.check(v)?;
        self.guard(x)?;
        let y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + b).collect();
        self.guard(&y)?;
        Ok(self.gradient_difference_unchecked(x, v))
    }

    pub(crate) fn gradient_difference_unchecked(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let d = self.system.dim();
        let h = -0.5 * self.alpha - 1.0;
        let mut g = vec![0.0; x.len()];
        let mut u = vec![0.0; d];
        let mut w = vec![0.0; d];
        for (i, j, mm) in self.pairs() {
            let (mut s0, mut uv, mut vv) = (0.0, 0.0, 0.0);
            for a in 0..d {
                u[a] = x[i * d + a] - x[j * d + a];
                w[a] = v[i * d + a] - v[j * d + a];
                s0 += u[a] * u[a];
                uv += u[a] * w[a];
                vv += w[a] * w[a];
            }
            let rel = (2.0 * uv + vv) / s0;
            // pair force c(s) u with c(s) = -α s^{h}
            let c0 = -self.alpha * mm * s0.powf(h);
            let c1 = c0 * (h * rel.ln_1p()).exp();
            let dc = c0 * (h * rel.ln_1p()).exp_m1();
            for a in 0..d {
                let f = c1 * w[a] + dc * u[a];
                g[i * d + a] += f;
                g[j * d + a] -= f;
            }
        }
        g
    }

    /// Gradient in the mass metric, `M⁻¹ ∇U(x)`.
    pub fn mass_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.system.apply_inverse_mass(&self.gradient(x)?))
    }

    /// Right-hand side of `M ẍ = ∇U(x)`.
    pub fn acceleration(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.mass_gradient(x)
    }

    /// Dense Euclidean Hessian `∇²U(x)`.
    pub fn hessian(&self, x: &[f64]) -> Result<Mat> {
        self.guard(x)?;
        Ok(self.hessian_unchecked(x))
    }

    pub(crate) fn hessian_unchecked(&self, x: &[f64]) -> Mat {
        let d = self.system.dim();
        let mut h = Mat::zeros(x.len());
        let mut u = vec![0.0; d];
        for (i, j, mm) in self.pairs() {
            for a in 0..d {
                u[a] = x[i * d + a] - x[j * d + a];
            }
            let s: f64 = u.iter().map(|v| v * v).sum();
            let f1 = 2.0 * self.radial(s, 1);
            let f2 = 4.0 * self.radial(s, 2);
            for a in 0..d {
                for b in 0..d {
                    let mut v = f2 * u[a] * u[b];
                    if a == b {
                        v += f1;
                    }
                    v *= mm;
                    h[(i * d + a, i * d + b)] += v;
                    h[(j * d + a, j * d + b)] += v;
                    h[(i * d + a, j * d + b)] -= v;
                    h[(j * d + a, i * d + b)] -= v;
                }
            }
        }
        h
    }

    /// `∇^{q+1}U(a)[v_1, …, v_q]` as a covector (one free slot), for
    /// `1 ≤ q ≤ MAX_DIRECTIONAL_ORDER`.
    pub fn directional_derivative(&self, a: &[f64], directions: &[&[f64]]) -> Result<Vec<f64>> {
        let q = directions.len();
        if q == 0 || q > MAX_DIRECTIONAL_ORDER {
            return Err(Error::UnsupportedOrder { order: q, max: MAX_DIRECTIONAL_ORDER });
        }
        for v in directions {
            self.system.check(v)?;
        }
        self.guard(a)?;
        let d = self.system.dim();
        let partitions = slot_partitions(q);
        let mut out = vec![0.0; a.len()];
        let mut u = vec![0.0; d];
        let mut h = vec![vec![0.0; d]; q];
        // dots[k][l] = h_k·h_l, udots[k] = u·h_k
        let mut dots = vec![vec![0.0; q]; q];
        let mut udots = vec![0.0; q];
        let mut w = vec![0.0; d];
        for (i, j, mm) in self.pairs() {
            for c in 0..d {
                u[c] = a[i * d + c] - a[j * d + c];
            }
            for (k, v) in directions.iter().enumerate() {
                for c in 0..d {
                    h[k][c] = v[i * d + c] - v[j * d + c];
                }
            }
            let s: f64 = u.iter().map(|v| v * v).sum();
            for k in 0..q {
                udots[k] = u.iter().zip(&h[k]).map(|(x, y)| x * y).sum();
                for l in k..q {
                    let v: f64 = h[k].iter().zip(&h[l]).map(|(x, y)| x * y).sum();
                    dots[k][l] = v;
                    dots[l][k] = v;
                }
            }
            let fk: Vec<f64> = (0..=q + 1).map(|k| self.radial(s, k)).collect();
            w.iter_mut().for_each(|v| *v = 0.0);
            for p in &partitions {
                let mut scalar = fk[p.order()];
                for blk in &p.blocks {
                    match *blk {
                        Block::Single(k) => scalar *= 2.0 * udots[k],
                        Block::Pair(k, l) => scalar *= 2.0 * dots[k][l],
                    }
                }
                if scalar == 0.0 {
                    continue;
                }
                match p.free {
                    FreeSlot::Single => {
                        for c in 0..d {
                            w[c] += scalar * 2.0 * u[c];
                        }
                    }
                    FreeSlot::PairedWith(k) => {
                        for c in 0..d {
                            w[c] += scalar * 2.0 * h[k][c];
                        }
                    }
                }
            }
            for c in 0..d {
                out[i * d + c] += mm * w[c];
                out[j * d + c] -= mm * w[c];
            }
        }
        Ok(out)
    }

    /// Mass-metric version `M⁻¹ ∇^{q+1}U(a)[v_1, …, v_q]`.
    pub fn mass_directional_derivative(&self, a: &[f64], directions: &[&[f64]]) -> Result<Vec<f64>> {
        Ok(self.system.apply_inverse_mass(&self.directional_derivative(a, directions)?))
    }
}

/// `|u + w|^{-α} - |u|^{-α}` from `s0 = u·u`, `uw = u·w`, `ww = w·w`.
pub(crate) fn pair_energy_difference(alpha: f64, s0: f64, uw: f64, ww: f64) -> f64 {
    let h = -0.5 * alpha;
    s0.powf(h) * (h * ((2.0 * uw + ww) / s0).ln_1p()).exp_m1()
}

/// Convenience: potential energy of a [`Configuration`].
pub fn potential_energy(model: &PotentialModel, x: &Configuration) -> Result<f64> {
    model.energy(x.coords())
}

pub fn potential_gradient(model: &PotentialModel, x: &Configuration) -> Result<Vec<f64>> {
    model.gradient(x.coords())
}

pub fn mass_gradient(model: &PotentialModel, x: &Configuration) -> Result<Vec<f64>> {
    model.mass_gradient(x.coords())
}

pub fn newton_acceleration(model: &PotentialModel, x: &Configuration) -> Result<Vec<f64>> {
    model.acceleration(x.coords())
}

#[derive(Debug, Clone, Copy)]
enum Block {
    Single(usize),
    Pair(usize, usize),
}

#[derive(Debug, Clone, Copy)]
enum FreeSlot {
    Single,
    PairedWith(usize),
}

#[derive(Debug, Clone)]
struct SlotPartition {
    free: FreeSlot,
    /// Blocks made only of direction slots.
    blocks: Vec<Block>,
}

impl SlotPartition {
    /// Total block count, the free block included.
    fn order(&self) -> usize {
        self.blocks.len() + 1
    }
}

/// All partitions of `{free, 0, …, q-1}` into blocks of size one or two.
fn slot_partitions(q: usize) -> Vec<SlotPartition> {
    fn recurse(k: usize, q: usize, free: FreeSlot, blocks: &mut Vec<Block>, out: &mut Vec<SlotPartition>) {
        if k == q {
            out.push(SlotPartition { free, blocks: blocks.clone() });
            return;
        }
        blocks.push(Block::Single(k));
        recurse(k + 1, q, free, blocks, out);
        blocks.pop();
        if let FreeSlot::Single = free {
            recurse(k + 1, q, FreeSlot::PairedWith(k), blocks, out);
        }
        for idx in 0..blocks.len() {
            if let Block::Single(s) = blocks[idx] {
                blocks[idx] = Block::Pair(s, k);
                recurse(k + 1, q, free, blocks, out);
                blocks[idx] = Block::Single(s);
            }
        }
    }
    let mut out = Vec::new();
    recurse(0, q, FreeSlot::Single, &mut Vec::new(), &mut out);
    out
}
