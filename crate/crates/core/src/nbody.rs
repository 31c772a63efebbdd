//! Configuration-space primitives: masses, the mass inner product, barycentric
//! projection and mutual-distance statistics.
//!
//! Coordinates are stored flat as `[r_1, …, r_N]` with each `r_i ∈ ℝ^d`.
//! Norms are taken in the mass metric `⟨x, y⟩_M = Σ m_i ⟨r_i, s_i⟩` unless a
//! function says otherwise.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Relative collision threshold: a pair is treated as colliding when its
/// separation falls below this fraction of the configuration's largest
/// separation.
pub const DEFAULT_COLLISION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MassSystem {
    masses: Vec<f64>,
    dim: usize,
}

impl MassSystem {
    pub fn new(masses: Vec<f64>, dim: usize) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::arg("at least two bodies are required"));
        }
        if dim < 2 {
            return Err(Error::arg("spatial dimension must be at least 2"));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::arg(alloc::format!("masses must be positive, got {m}")));
        }
        Ok(Self { masses, dim })
    }

    /// `n` unit masses in dimension `dim`.
    pub fn equal(n: usize, dim: usize) -> Result<Self> {
        Self::new(vec![1.0; n], dim)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_bodies(&self) -> usize {
        self.masses.len()
    }

    /// Length `dN` of a configuration vector.
    pub fn len(&self) -> usize {
        self.masses.len() * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() == self.len() {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.len(), found: v.len() })
        }
    }

    /// Mass of the body owning flat coordinate `k`.
    #[inline]
    pub fn coord_mass(&self, k: usize) -> f64 {
        self.masses[k / self.dim]
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.inner_unchecked(x, y))
    }

    pub(crate) fn inner_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim;
        self.masses
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let s: f64 = x[i * d..(i + 1) * d].iter().zip(&y[i * d..(i + 1) * d]).map(|(a, b)| a * b).sum();
                m * s
            })
            .sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner_unchecked(x, x).sqrt()
    }

    /// Dual norm `‖p‖_{M⁻¹} = (Σ |p_i|² / m_i)^{1/2}`, the natural norm for forces.
    pub fn dual_norm(&self, p: &[f64]) -> f64 {
        p.iter().enumerate().map(|(k, v)| v * v / self.coord_mass(k)).sum::<f64>().sqrt()
    }

    /// `M v`.
    pub fn apply_mass(&self, v: &[f64]) -> Vec<f64> {
        v.iter().enumerate().map(|(k, x)| x * self.coord_mass(k)).collect()
    }

    /// `M⁻¹ v`.
    pub fn apply_inverse_mass(&self, v: &[f64]) -> Vec<f64> {
        v.iter().enumerate().map(|(k, x)| x / self.coord_mass(k)).collect()
    }

    /// `Σ m_i r_i / Σ m_i`.
    pub fn barycenter(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut c = vec![0.0; d];
        for (i, m) in self.masses.iter().enumerate() {
            for a in 0..d {
                c[a] += m * x[i * d + a];
            }
        }
        let total = self.total_mass();
        c.iter_mut().for_each(|v| *v /= total);
        c
    }

    /// Subtracts the barycenter from every body in place.
    pub fn center(&self, x: &mut [f64]) {
        let c = self.barycenter(x);
        let d = self.dim;
        for (k, v) in x.iter_mut().enumerate() {
            *v -= c[k % d];
        }
    }

    /// Restriction to the bodies in `indices`, in that order.
    pub fn subsystem(&self, indices: &[usize]) -> Result<MassSystem> {
        MassSystem::new(indices.iter().map(|&i| self.masses[i]).collect(), self.dim)
    }
}

/// One point `x = (r_1, …, r_N)` of `ℝ^{dN}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dim: usize,
    coords: Vec<f64>,
}

impl Configuration {
    pub fn new(system: &MassSystem, coords: Vec<f64>) -> Result<Self> {
        system.check(&coords)?;
        Ok(Self { dim: system.dim(), coords })
    }

    /// Builds a configuration from per-body positions.
    pub fn from_bodies(system: &MassSystem, bodies: &[&[f64]]) -> Result<Self> {
        if bodies.len() != system.n_bodies() {
            return Err(Error::Dimension { expected: system.n_bodies(), found: bodies.len() });
        }
        let mut coords = Vec::with_capacity(system.len());
        for b in bodies {
            if b.len() != system.dim() {
                return Err(Error::Dimension { expected: system.dim(), found: b.len() });
            }
            coords.extend_from_slice(b);
        }
        Ok(Self { dim: system.dim(), coords })
    }

    pub fn zeros(system: &MassSystem) -> Self {
        Self { dim: system.dim(), coords: vec![0.0; system.len()] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_bodies(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn body(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self { dim: self.dim, coords: self.coords.iter().map(|v| v * lambda).collect() }
    }

    /// Euclidean separation `|r_i - r_j|`.
    pub fn separation(&self, i: usize, j: usize) -> f64 {
        separation(&self.coords, self.dim, i, j)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|v| *v == 0.0)
    }
}

pub(crate) fn separation(x: &[f64], d: usize, i: usize, j: usize) -> f64 {
    (0..d)
        .map(|a| {
            let u = x[i * d + a] - x[j * d + a];
            u * u
        })
        .sum::<f64>()
        .sqrt()
}

/// `⟨x, y⟩_M = Σ_i m_i ⟨x_i, y_i⟩`.
pub fn mass_inner_product(system: &MassSystem, x: &Configuration, y: &Configuration) -> Result<f64> {
    system.inner(x.coords(), y.coords())
}

/// Translates `x` so that `Σ m_i r_i = 0`.
pub fn project_center_of_mass(system: &MassSystem, x: &Configuration) -> Result<Configuration> {
    system.check(x.coords())?;
    let mut out = x.clone();
    system.center(&mut out.coords);
    Ok(out)
}

/// `(min_{i<j} |r_i - r_j|, max_{i<j} |r_i - r_j|)`.
pub fn min_max_mutual_distance(x: &Configuration) -> (f64, f64) {
    min_max_separation(x.coords(), x.dim())
}

pub(crate) fn min_max_separation(x: &[f64], d: usize) -> (f64, f64) {
    let n = x.len() / d;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let s = separation(x, d, i, j);
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    (lo, hi)
}

/// The closest pair `(i, j, separation)` if it is closer than `eps_rel` times
/// the largest separation.
pub fn collision_pair(x: &[f64], d: usize, eps_rel: f64) -> Option<(usize, usize, f64)> {
    let n = x.len() / d;
    let (_, hi) = min_max_separation(x, d);
    let threshold = eps_rel * hi;
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let s = separation(x, d, i, j);
            if s <= threshold && worst.map_or(true, |w| s < w.2) {
                worst = Some((i, j, s));
            }
        }
    }
    worst
}

/// Whether `x` lies in the (numerical) collision set `Δ`.
pub fn in_collision_set(x: &Configuration, eps_rel: f64) -> bool {
    collision_pair(x.coords(), x.dim(), eps_rel).is_some()
}
