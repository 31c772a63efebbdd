//! Reference paths `r₀(t)` for the hyperbolic, parabolic and
//! hyperbolic-parabolic regimes, and the correction vectors `Γ_k`.
//!
//! Every reference path is a finite sum `Σ c_j t^{e_j}` of vector
//! coefficients, so position, velocity and acceleration are exact.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::central_config::{CentralConfiguration, ClusterPartition, ClusteredCentralConfiguration};
use crate::error::{Error, Result};
use crate::linalg::axpy;
use crate::nbody::{collision_pair, Configuration};
use crate::potential::{PotentialModel, MAX_DIRECTIONAL_ORDER};

/// `kα` closer than this to 1 is treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Hyperbolic,
    Parabolic,
    HyperbolicParabolic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaCoefficients {
    pub alpha: f64,
    pub a: Configuration,
    /// `Γ_1, …, Γ_P`; at `α = 1/2` only `Γ_1`, the next term being logarithmic.
    pub gammas: Vec<Vec<f64>>,
    pub expansion_order: usize,
    pub tilde_gamma: Option<Vec<f64>>,
    /// `1/(2α)` is an integer.
    pub borderline: bool,
}

impl GammaCoefficients {
    /// `Γ_k` (1-based).
    pub fn gamma(&self, k: usize) -> Option<&[f64]> {
        k.checked_sub(1).and_then(|i| self.gammas.get(i)).map(|v| v.as_slice())
    }

    /// `m = ⌊1/(2α)⌋`, the number of corrections carried by `r₀`.
    pub fn reference_terms(&self) -> usize {
        reference_term_count(self.alpha)
    }
}

fn reference_term_count(alpha: f64) -> usize {
    if alpha > 0.5 {
        0
    } else {
        (1.0 / (2.0 * alpha) + 1e-9).floor() as usize
    }
}

/// `P = ⌊1/(2α)⌋ + 1` for `α ≤ 1/2`, otherwise 1.
pub fn expansion_order(alpha: f64) -> usize {
    reference_term_count(alpha) + 1
}

fn check_hyperbolic_data(model: &PotentialModel, a: &Configuration) -> Result<()> {
    let sys = model.system();
    sys.check(a.coords())?;
    if let Some((i, j, separation)) = collision_pair(a.coords(), sys.dim(), model.eps_collision()) {
        return Err(Error::Singularity { i, j, separation });
    }
    Ok(())
}

fn check_resonance(alpha: f64, k: usize) -> Result<()> {
    if (k as f64 * alpha - 1.0).abs() < RESONANCE_TOL {
        return Err(Error::Resonance { k });
    }
    Ok(())
}

/// `Γ_1, …, Γ_{k_max}` by the recursion, without reference to `P`.
pub fn gamma_sequence(model: &PotentialModel, a: &Configuration, k_max: usize) -> Result<Vec<Vec<f64>>> {
    let alpha = model.alpha();
    if alpha == 1.0 {
        return Err(Error::LogTerm);
    }
    check_hyperbolic_data(model, a)?;
    if k_max > MAX_DIRECTIONAL_ORDER + 1 {
        return Err(Error::UnsupportedOrder { order: k_max - 1, max: MAX_DIRECTIONAL_ORDER });
    }
    let sys = model.system();
    let x = a.coords();
    let mut gammas: Vec<Vec<f64>> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        check_resonance(alpha, k)?;
        let kf = k as f64;
        let denom = kf * alpha * (1.0 - kf * alpha);
        let mut acc = vec![0.0; x.len()];
        if k == 1 {
            acc = model.gradient(x)?;
        } else {
            let mut factorial = 1.0;
            for q in 1..k {
                factorial *= q as f64;
                for comp in compositions(k - 1, q) {
                    let dirs: Vec<&[f64]> = comp.iter().map(|&j| gammas[j - 1].as_slice()).collect();
                    let term = model.directional_derivative(x, &dirs)?;
                    axpy(1.0 / factorial, &term, &mut acc);
                }
            }
        }
        let g: Vec<f64> = sys.apply_inverse_mass(&acc).into_iter().map(|v| -v / denom).collect();
        gammas.push(g);
    }
    Ok(gammas)
}

pub fn gamma_coefficients(model: &PotentialModel, a: &Configuration) -> Result<GammaCoefficients> {
    let alpha = model.alpha();
    if alpha == 1.0 {
        return Err(Error::LogTerm);
    }
    let p = expansion_order(alpha);
    let half = 1.0 / (2.0 * alpha);
    let borderline = (half - half.round()).abs() < 1e-9 && half.round() >= 1.0;
    let (gammas, tilde_gamma) = if alpha == 0.5 {
        let g = gamma_sequence(model, a, 1)?;
        let sys = model.system();
        let h = model.hessian(a.coords())?;
        let hg = h.mul_vec(&model.gradient(a.coords())?);
        let t = sys.apply_inverse_mass(&sys.apply_inverse_mass(&hg));
        (g, Some(t.into_iter().map(|v| -4.0 * v).collect()))
    } else {
        (gamma_sequence(model, a, p)?, None)
    };
    Ok(GammaCoefficients { alpha, a: a.clone(), gammas, expansion_order: p, tilde_gamma, borderline })
}

/// Coefficient of `log t` obtained by balancing the `t^{-2}` terms of
/// Newton's equations along `at + Γ_1 t^{1/2} + L log t` at `α = 1/2`:
/// `L = -M⁻¹∇²U(a)Γ_1`.
pub fn balanced_log_coefficient(model: &PotentialModel, a: &Configuration) -> Result<Vec<f64>> {
    if model.alpha() != 0.5 {
        return Err(Error::arg("the balanced log coefficient is defined for α = 1/2"));
    }
    let g1 = gamma_sequence(model, a, 1)?.remove(0);
    let hg = model.directional_derivative(a.coords(), &[&g1])?;
    Ok(model.system().apply_inverse_mass(&hg).into_iter().map(|v| -v).collect())
}

/// `-M⁻¹∇U(a)`, the `log t` coefficient of Newtonian hyperbolic motions.
pub fn newtonian_log_coefficient(model: &PotentialModel, a: &Configuration) -> Result<Vec<f64>> {
    check_hyperbolic_data(model, a)?;
    Ok(model.mass_gradient(a.coords())?.into_iter().map(|v| -v).collect())
}

/// Ordered tuples of `q` positive integers summing to `n`.
pub fn compositions(n: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if q == 0 {
            if n == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for j in 1..=n.saturating_sub(q - 1) {
            cur.push(j);
            rec(n - j, q - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if q > 0 && n >= q {
        rec(n, q, &mut Vec::with_capacity(q), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicBlocks {
    pub partition: Option<ClusterPartition>,
    /// `β^K` per class (a single entry for pure parabolic paths).
    pub betas: Vec<f64>,
    /// Normalized block vector `b_m` in the full configuration space.
    pub b_m: Vec<f64>,
    /// `(β^K b^K)_K` in the full configuration space.
    pub beta_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    regime: Regime,
    alpha: f64,
    a: Option<Configuration>,
    gamma: Option<GammaCoefficients>,
    parabolic: Option<ParabolicBlocks>,
    terms: Vec<(Vec<f64>, f64)>,
}

impl ReferencePath {
    /// `r₀(t) = at + Σ_{k ≤ ⌊1/(2α)⌋} Γ_k t^{1-kα}`. At `α = 1` this is `at`.
    pub fn hyperbolic(model: &PotentialModel, a: &Configuration) -> Result<Self> {
        check_hyperbolic_data(model, a)?;
        let alpha = model.alpha();
        let gamma = if alpha == 1.0 { None } else { Some(gamma_coefficients(model, a)?) };
        let mut terms = vec![(a.coords().to_vec(), 1.0)];
        if let Some(g) = &gamma {
            for k in 1..=g.reference_terms() {
                terms.push((g.gammas[k - 1].clone(), 1.0 - k as f64 * alpha));
            }
        }
        Ok(Self { regime: Regime::Hyperbolic, alpha, a: Some(a.clone()), gamma, parabolic: None, terms })
    }

    /// `r₀(t) = β b_m t^{2/(2+α)}`.
    pub fn parabolic(model: &PotentialModel, cc: &CentralConfiguration) -> Result<Self> {
        let alpha = model.alpha();
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::arg("parabolic references need α ∈ (0, 2)"));
        }
        let sys = model.system();
        sys.check(cc.b_m.coords())?;
        let nb = sys.norm(cc.b_m.coords());
        if (nb - 1.0).abs() > 1e-10 {
            return Err(Error::arg("b_m must have unit mass norm"));
        }
        let beta_b: Vec<f64> = cc.b_m.coords().iter().map(|v| cc.beta * v).collect();
        let terms = vec![(beta_b.clone(), parabolic_exponent(alpha))];
        Ok(Self {
            regime: Regime::Parabolic,
            alpha,
            a: None,
            gamma: None,
            parabolic: Some(ParabolicBlocks {
                partition: None,
                betas: vec![cc.beta],
                b_m: cc.b_m.coords().to_vec(),
                beta_b,
            }),
            terms,
        })
    }

    /// `r₀(t) = at + β b_m t^{2/(2+α)}` with cluster-wise `β^K b^K`.
    pub fn hyperbolic_parabolic(
        model: &PotentialModel,
        a: &Configuration,
        partition: &ClusterPartition,
        clustered: &ClusteredCentralConfiguration,
    ) -> Result<Self> {
        let alpha = model.alpha();
        let sys = model.system();
        sys.check(a.coords())?;
        if a.is_zero() {
            return Err(Error::arg("a = 0 is the pure parabolic case; use the parabolic reference"));
        }
        if clustered.blocks.len() != partition.len()
            || clustered.blocks.iter().zip(&partition.classes).any(|(b, c)| &b.indices != c)
        {
            return Err(Error::arg("cluster blocks do not match the partition"));
        }
        if partition.all_singletons() {
            let mut path = Self::hyperbolic(model, a)?;
            path.regime = Regime::HyperbolicParabolic;
            return Ok(path);
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::arg("hyperbolic-parabolic references need α ∈ (0, 2)"));
        }
        let terms = vec![(a.coords().to_vec(), 1.0), (clustered.beta_b.clone(), parabolic_exponent(alpha))];
        Ok(Self {
            regime: Regime::HyperbolicParabolic,
            alpha,
            a: Some(a.clone()),
            gamma: None,
            parabolic: Some(ParabolicBlocks {
                partition: Some(partition.clone()),
                betas: clustered.blocks.iter().map(|b| b.beta).collect(),
                b_m: clustered.b_m.clone(),
                beta_b: clustered.beta_b.clone(),
            }),
            terms,
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> Option<&Configuration> {
        self.a.as_ref()
    }

    pub fn gamma(&self) -> Option<&GammaCoefficients> {
        self.gamma.as_ref()
    }

    pub fn parabolic_blocks(&self) -> Option<&ParabolicBlocks> {
        self.parabolic.as_ref()
    }

    /// Cluster partition for HP paths with at least one nontrivial class.
    pub fn partition(&self) -> Option<&ClusterPartition> {
        self.parabolic.as_ref().and_then(|p| p.partition.as_ref())
    }

    /// `(coefficient, exponent)` pairs with `r₀(t) = Σ c t^e`.
    pub fn terms(&self) -> &[(Vec<f64>, f64)] {
        &self.terms
    }

    pub fn dim_total(&self) -> usize {
        self.terms[0].0.len()
    }

    /// `r̈₀ ≡ 0`.
    pub fn is_linear(&self) -> bool {
        self.terms.iter().all(|(_, e)| *e == 1.0 || *e == 0.0)
    }

    pub fn state(&self, t: f64) -> Result<ReferenceState> {
        if !(t >= 1.0) {
            return Err(Error::domain("reference paths are defined for t ≥ 1"));
        }
        Ok(self.state_unchecked(t))
    }

    pub(crate) fn state_unchecked(&self, t: f64) -> ReferenceState {
        let n = self.dim_total();
        let mut position = vec![0.0; n];
        let mut velocity = vec![0.0; n];
        let mut acceleration = vec![0.0; n];
        for (c, e) in &self.terms {
            let p = t.powf(*e);
            axpy(p, c, &mut position);
            axpy(e * p / t, c, &mut velocity);
            axpy(e * (e - 1.0) * p / (t * t), c, &mut acceleration);
        }
        ReferenceState { position, velocity, acceleration }
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        let mut position = vec![0.0; self.dim_total()];
        for (c, e) in &self.terms {
            axpy(t.powf(*e), c, &mut position);
        }
        position
    }

    pub fn acceleration(&self, t: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim_total()];
        for (c, e) in &self.terms {
            axpy(e * (e - 1.0) * t.powf(e - 2.0), c, &mut acc);
        }
        acc
    }
}

pub fn parabolic_exponent(alpha: f64) -> f64 {
    2.0 / (2.0 + alpha)
}

pub fn reference_state(path: &ReferencePath, t: f64) -> Result<ReferenceState> {
    path.state(t)
}

/// `‖M r̈₀(t) - ∇U(r₀(t))‖_{M⁻¹}`.
pub fn defect(model: &PotentialModel, path: &ReferencePath, t: f64) -> Result<f64> {
    let s = path.state(t)?;
    let g = model.gradient(&s.position)?;
    let sys = model.system();
    let r: Vec<f64> = sys.apply_mass(&s.acceleration).iter().zip(&g).map(|(m, g)| m - g).collect();
    Ok(sys.dual_norm(&r))
}
