//! Power-law fits of trajectory residuals, expansion checks, Chazy
//! classification and the singular ODE `ÿ + μ y/t² = f`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::central_config::{CentralConfiguration, ClusteredCentralConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, Mat};
use crate::nbody::{Configuration, MassSystem};
use crate::potential::PotentialModel;
use crate::quadrature::GaussLegendre;
use crate::reference::{gamma_coefficients, gamma_sequence, newtonian_log_coefficient, parabolic_exponent, Regime};
use crate::trajectory::Trajectory;

/// Fewest samples accepted in a fitting window.
pub const MIN_FIT_POINTS: usize = 10;
/// Tolerance on pair exponents used by [`chazy_classify`].
pub const CHAZY_BAND: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// One entry for scalar series, one per coordinate for vector fits.
    pub coefficient: Vec<f64>,
    pub r_squared: f64,
    pub window: (f64, f64),
    /// Whether the samples in the window are close to evenly spaced in `log t`.
    pub log_spacing: bool,
    pub points: usize,
}

fn check_series(times: &[f64], window: (f64, f64)) -> Result<Vec<usize>> {
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= window.0 && times[i] <= window.1).collect();
    if idx.len() < MIN_FIT_POINTS {
        return Err(Error::arg(format!(
            "{} samples in window [{}, {}], need {MIN_FIT_POINTS}",
            idx.len(),
            window.0,
            window.1
        )));
    }
    if idx.iter().any(|&i| !(times[i] > 0.0)) {
        return Err(Error::domain("fitting needs positive times"));
    }
    Ok(idx)
}

fn log_spaced_check(logs: &[f64]) -> bool {
    let steps: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
    let lo = steps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = steps.iter().cloned().fold(0.0, f64::max);
    lo > 0.0 && hi <= 1.5 * lo
}

/// Least-squares line through `(log t, log y)` on the samples inside `window`.
pub fn fit_power_law(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerLawFit> {
    if times.len() != values.len() {
        return Err(Error::Dimension { expected: times.len(), found: values.len() });
    }
    let idx = check_series(times, window)?;
    if idx.iter().any(|&i| !(values[i] > 0.0 && values[i].is_finite())) {
        return Err(Error::domain("power-law fitting needs positive values; subtract constants first"));
    }
    let lx: Vec<f64> = idx.iter().map(|&i| times[i].ln()).collect();
    let ly: Vec<f64> = idx.iter().map(|&i| values[i].ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::domain("window spans a single time"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(PowerLawFit {
        exponent: slope,
        coefficient: vec![intercept.exp()],
        r_squared,
        window: (times[idx[0]], times[idx[idx.len() - 1]]),
        log_spacing: log_spaced_check(&lx),
        points: idx.len(),
    })
}

/// `[√T, T]`.
pub fn default_window(traj: &Trajectory) -> (f64, f64) {
    let t = traj.horizon();
    (t.sqrt(), t)
}

/// `[T/10, T]`.
pub fn last_decade(traj: &Trajectory) -> (f64, f64) {
    let t = traj.horizon();
    (t / 10.0, t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TermKind {
    /// `c t^e`.
    Power(f64),
    /// `c log t`.
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTerm {
    pub coefficient: Vec<f64>,
    pub kind: TermKind,
}

/// Leading terms of a predicted expansion and the order of what remains.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSpec {
    pub regime: Regime,
    pub alpha: f64,
    pub system: MassSystem,
    pub terms: Vec<ExpansionTerm>,
    /// Exponent `δ` bounding the remainder after the terms (and a fitted
    /// constant, when the expansion carries one).
    pub remainder_exponent: f64,
}

fn power(coefficient: Vec<f64>, e: f64) -> ExpansionTerm {
    ExpansionTerm { coefficient, kind: TermKind::Power(e) }
}

impl ExpansionSpec {
    /// Hyperbolic expansion for `a`, shaped by `α`.
    pub fn hyperbolic(model: &PotentialModel, a: &Configuration) -> Result<Self> {
        let alpha = model.alpha();
        let mut terms = vec![power(a.coords().to_vec(), 1.0)];
        let remainder_exponent;
        if alpha == 1.0 {
            terms.push(ExpansionTerm { coefficient: newtonian_log_coefficient(model, a)?, kind: TermKind::Log });
            remainder_exponent = 0.0;
        } else if alpha > 1.0 {
            let g = gamma_coefficients(model, a)?;
            terms.push(power(g.gammas[0].clone(), 1.0 - alpha));
            remainder_exponent = 1.0 - alpha;
        } else if alpha > 0.5 {
            let g = gamma_sequence(model, a, 2)?;
            terms.push(power(g[0].clone(), 1.0 - alpha));
            terms.push(power(g[1].clone(), 1.0 - 2.0 * alpha));
            remainder_exponent = 1.0 - 2.0 * alpha;
        } else {
            let g = gamma_coefficients(model, a)?;
            for (k, gk) in g.gammas.iter().enumerate() {
                terms.push(power(gk.clone(), 1.0 - (k + 1) as f64 * alpha));
            }
            match g.tilde_gamma {
                Some(tg) => {
                    terms.push(ExpansionTerm { coefficient: tg, kind: TermKind::Log });
                    remainder_exponent = 0.0;
                }
                None => remainder_exponent = 1.0 - g.expansion_order as f64 * alpha,
            }
        }
        Ok(Self { regime: Regime::Hyperbolic, alpha, system: model.system().clone(), terms, remainder_exponent })
    }

    /// `β b_m t^{2/(2+α)}`, remainder `O(t^{α/(2+α)})`.
    pub fn parabolic(model: &PotentialModel, cc: &CentralConfiguration) -> Result<Self> {
        let alpha = model.alpha();
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::arg("parabolic expansions need α ∈ (0, 2)"));
        }
        let beta_b: Vec<f64> = cc.b_m.coords().iter().map(|v| cc.beta * v).collect();
        Ok(Self {
            regime: Regime::Parabolic,
            alpha,
            system: model.system().clone(),
            terms: vec![power(beta_b, parabolic_exponent(alpha))],
            remainder_exponent: alpha / (2.0 + alpha),
        })
    }

    /// `a t + β b_m t^{2/(2+α)}`, remainder `O(t^δ)` with
    /// `δ = max{1 − α, α/(2+α)}`.
    pub fn hyperbolic_parabolic(
        model: &PotentialModel,
        a: &Configuration,
        clustered: &ClusteredCentralConfiguration,
    ) -> Result<Self> {
        let alpha = model.alpha();
        if !(alpha > 0.5 && alpha < 2.0) {
            return Err(Error::arg("hyperbolic-parabolic expansions need α ∈ (1/2, 2)"));
        }
        Ok(Self {
            regime: Regime::HyperbolicParabolic,
            alpha,
            system: model.system().clone(),
            terms: vec![power(a.coords().to_vec(), 1.0), power(clustered.beta_b.clone(), parabolic_exponent(alpha))],
            remainder_exponent: hp_remainder_exponent(alpha),
        })
    }

    /// Keeps the first `n` terms.
    pub fn truncate(&self, n: usize) -> Self {
        let mut s = self.clone();
        s.terms.truncate(n);
        s
    }

    pub fn has_log(&self) -> bool {
        self.terms.iter().any(|t| t.kind == TermKind::Log)
    }

    /// Sum of the power terms at `t`.
    pub fn power_part(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.system.len()];
        for term in &self.terms {
            if let TermKind::Power(e) = term.kind {
                let s = t.powf(e);
                for (o, c) in out.iter_mut().zip(&term.coefficient) {
                    *o += c * s;
                }
            }
        }
        out
    }

    fn log_part(&self) -> Option<Vec<f64>> {
        let mut out: Option<Vec<f64>> = None;
        for term in self.terms.iter().filter(|t| t.kind == TermKind::Log) {
            let o = out.get_or_insert_with(|| vec![0.0; term.coefficient.len()]);
            for (a, c) in o.iter_mut().zip(&term.coefficient) {
                *a += c;
            }
        }
        out
    }
}

/// `max{1 − α, α/(2+α)}`.
pub fn hp_remainder_exponent(alpha: f64) -> f64 {
    (1.0 - alpha).max(alpha / (2.0 + alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResidual {
    pub times: Vec<f64>,
    /// `‖γ(t) − expansion(t)‖_M` with fitted constants removed.
    pub norms: Vec<f64>,
    /// `None` when the residual is at round-off level.
    pub fit: Option<PowerLawFit>,
    pub constant: Option<Vec<f64>>,
    /// Fitted coefficient of `log t` (only with fitted constants).
    pub log_coefficient: Option<Vec<f64>>,
    pub bound: f64,
    pub warnings: Vec<String>,
}

const EXPONENT_SCAN: (f64, f64) = (-3.0, 1.5);
const EXPONENT_GAP: f64 = 0.02;

struct Varpro {
    exponent: f64,
    coefficients: Vec<Vec<f64>>,
    ss: f64,
}

/// Per-coordinate least squares of `y ≈ Σ c_k φ_k` with mass weights;
/// returns the coefficient rows and the weighted residual sum.
fn fit_columns(columns: &[Vec<f64>], ys: &[Vec<f64>], weights: &[f64]) -> Option<(Vec<Vec<f64>>, f64)> {
    let mut coefs = Vec::with_capacity(weights.len());
    let mut ss = 0.0;
    for (k, w) in weights.iter().enumerate() {
        let y: Vec<f64> = ys.iter().map(|v| v[k]).collect();
        let c = least_squares(columns, &y)?;
        for (i, yi) in y.iter().enumerate() {
            let model: f64 = columns.iter().zip(&c).map(|(col, ck)| col[i] * ck).sum();
            ss += w * (yi - model).powi(2);
        }
        coefs.push(c);
    }
    Some((coefs, ss))
}

fn varpro_at(e: f64, times: &[f64], base: &[Vec<f64>], ys: &[Vec<f64>], weights: &[f64]) -> Option<Varpro> {
    let mut columns = base.to_vec();
    columns.push(times.iter().map(|t| t.powf(e)).collect());
    let (coefficients, ss) = fit_columns(&columns, ys, weights)?;
    Some(Varpro { exponent: e, coefficients, ss })
}

/// Minimizes the projected residual over the exponent: coarse scan, then
/// golden section around the best grid point.
fn varpro(times: &[f64], base: &[Vec<f64>], ys: &[Vec<f64>], weights: &[f64]) -> Option<Varpro> {
    let step = 0.01;
    let mut best: Option<Varpro> = None;
    let n = ((EXPONENT_SCAN.1 - EXPONENT_SCAN.0) / step).round() as usize;
    for i in 0..=n {
        let e = EXPONENT_SCAN.0 + step * i as f64;
        if e.abs() < EXPONENT_GAP {
            continue;
        }
        if let Some(v) = varpro_at(e, times, base, ys, weights) {
            if best.as_ref().map_or(true, |b| v.ss < b.ss) {
                best = Some(v);
            }
        }
    }
    let coarse = best?;
    let (mut lo, mut hi) = (coarse.exponent - step, coarse.exponent + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let eval = |e: f64| varpro_at(e, times, base, ys, weights).map(|v| v.ss).unwrap_or(f64::INFINITY);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = eval(x2);
        }
    }
    let refined = varpro_at(0.5 * (lo + hi), times, base, ys, weights)?;
    Some(if refined.ss <= coarse.ss { refined } else { coarse })
}

/// Determinant of the unit-diagonal Gram matrix of `columns`.
fn normalized_gram_det(columns: &[Vec<f64>]) -> f64 {
    let k = columns.len();
    let norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut g = Mat::zeros(k);
    for i in 0..k {
        for j in 0..k {
            let d: f64 = columns[i].iter().zip(&columns[j]).map(|(a, b)| a * b).sum();
            g[(i, j)] = d / (norms[i] * norms[j]);
        }
    }
    match g.cholesky() {
        Some(ch) => ch.diagonal().iter().map(|v| v * v).product(),
        None => 0.0,
    }
}

/// Subtracts the expansion from `γ` and fits what is left.
///
/// With `fit_constants`, the remainder on the window is modelled as
/// `Q (+ L log t) + C t^e` and fitted by variable projection: for each `e`
/// the vectors `Q, L, C` solve a linear least-squares problem, and `e`
/// minimizes the leftover. The reported fit carries `e` and the vector `C`.
/// Without it, the mass norm of the remainder is fitted by [`fit_power_law`]
/// and log terms use the coefficients in `spec`.
pub fn expansion_residual(
    traj: &Trajectory,
    spec: &ExpansionSpec,
    fit_constants: bool,
    window: Option<(f64, f64)>,
) -> Result<ExpansionResidual> {
    let sys = &spec.system;
    if traj.positions()[0].len() != sys.len() {
        return Err(Error::Dimension { expected: sys.len(), found: traj.positions()[0].len() });
    }
    let window = window.unwrap_or_else(|| default_window(traj));
    let times = traj.times().to_vec();
    let mut raw: Vec<Vec<f64>> = times
        .iter()
        .zip(traj.positions())
        .map(|(t, x)| {
            let p = spec.power_part(*t);
            x.iter().zip(&p).map(|(a, b)| a - b).collect()
        })
        .collect();
    let spec_log = spec.log_part();
    let mut warnings = Vec::new();
    let mut constant = None;
    let mut log_coefficient = None;
    let mut fit = None;
    let scale = traj.positions().iter().map(|x| sys.norm(x)).fold(0.0, f64::max).max(1.0);
    if !fit_constants {
        if let Some(l) = &spec_log {
            for (r, t) in raw.iter_mut().zip(&times) {
                for (a, c) in r.iter_mut().zip(l) {
                    *a -= c * t.ln();
                }
            }
        }
        let norms: Vec<f64> = raw.iter().map(|r| sys.norm(r)).collect();
        let idx = check_series(&times, window)?;
        if idx.iter().all(|&i| norms[i] <= 1e-12 * scale) {
            warnings.push(String::from("residual is at round-off level; no fit"));
        } else {
            match fit_power_law(&times, &norms, window) {
                Ok(f) => fit = Some(f),
                Err(e) => warnings.push(format!("{e}")),
            }
        }
        return Ok(ExpansionResidual {
            times,
            norms,
            fit,
            constant,
            log_coefficient,
            bound: spec.remainder_exponent,
            warnings,
        });
    }
    let idx = check_series(&times, window)?;
    let wt: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let wy: Vec<Vec<f64>> = idx.iter().map(|&i| raw[i].clone()).collect();
    let weights: Vec<f64> = (0..sys.len()).map(|k| sys.coord_mass(k)).collect();
    let mut base = vec![vec![1.0; wt.len()]];
    if spec_log.is_some() {
        base.push(wt.iter().map(|t| t.ln()).collect());
    }
    let flat = wy.iter().all(|r| sys.norm(r) <= 1e-12 * scale);
    let vp = if flat { None } else { varpro(&wt, &base, &wy, &weights) };
    let norms: Vec<f64>;
    match vp {
        Some(v) => {
            let q: Vec<f64> = v.coefficients.iter().map(|c| c[0]).collect();
            let lc: Option<Vec<f64>> = spec_log.as_ref().map(|_| v.coefficients.iter().map(|c| c[1]).collect());
            let c: Vec<f64> = v.coefficients.iter().map(|c| c[c.len() - 1]).collect();
            norms = raw
                .iter()
                .zip(&times)
                .map(|(r, t)| {
                    let mut d = r.clone();
                    for k in 0..d.len() {
                        d[k] -= q[k];
                        if let Some(l) = &lc {
                            d[k] -= l[k] * t.ln();
                        }
                    }
                    sys.norm(&d)
                })
                .collect();
            let mean: Vec<f64> =
                (0..sys.len()).map(|k| wy.iter().map(|r| r[k]).sum::<f64>() / wy.len() as f64).collect();
            let ss_tot: f64 = wy
                .iter()
                .map(|r| r.iter().zip(&mean).zip(&weights).map(|((a, m), w)| w * (a - m).powi(2)).sum::<f64>())
                .sum();
            let r_squared = if ss_tot > 0.0 { (1.0 - v.ss / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
            let mut cols = base.clone();
            cols.push(wt.iter().map(|t| t.powf(v.exponent)).collect());
            if normalized_gram_det(&cols) < 1e-8 {
                warnings.push(String::from("ill-conditioned joint fit of constant and power terms"));
            }
            if v.exponent <= EXPONENT_SCAN.0 + 0.01 || v.exponent >= EXPONENT_SCAN.1 - 0.01 {
                warnings.push(String::from("fitted exponent sits on the edge of the scanned range"));
            }
            let lx: Vec<f64> = wt.iter().map(|t| t.ln()).collect();
            fit = Some(PowerLawFit {
                exponent: v.exponent,
                coefficient: c,
                r_squared,
                window: (wt[0], wt[wt.len() - 1]),
                log_spacing: log_spaced_check(&lx),
                points: wt.len(),
            });
            constant = Some(q);
            log_coefficient = lc;
        }
        None => {
            warnings.push(String::from("residual is at round-off level; no fit"));
            norms = raw.iter().map(|r| sys.norm(r)).collect();
        }
    }
    Ok(ExpansionResidual { times, norms, fit, constant, log_coefficient, bound: spec.remainder_exponent, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChazyClass {
    Hyperbolic,
    Parabolic,
    HyperbolicParabolic,
}

impl ChazyClass {
    pub fn label(&self) -> &'static str {
        match self {
            ChazyClass::Hyperbolic => "H",
            ChazyClass::Parabolic => "P",
            ChazyClass::HyperbolicParabolic => "HP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairExponent {
    pub i: usize,
    pub j: usize,
    pub fit: PowerLawFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChazyReport {
    pub class: ChazyClass,
    pub pairs: Vec<PairExponent>,
    /// `γ(T)/T`.
    pub velocity: Vec<f64>,
    pub window: (f64, f64),
}

/// Labels an expansive trajectory by the growth exponents of its mutual
/// distances on `window` (default `[√T, T]`): H when all are within
/// [`CHAZY_BAND`] of 1, P when all are within it of `2/(2+α)`, HP otherwise.
/// When both bands apply the closer one wins.
pub fn chazy_classify(traj: &Trajectory, window: Option<(f64, f64)>) -> Result<ChazyReport> {
    let window = window.unwrap_or_else(|| default_window(traj));
    let idx = check_series(traj.times(), window)?;
    let d = traj.dim();
    let nb = traj.n_bodies();
    if nb < 2 {
        return Err(Error::arg("classification needs at least two bodies"));
    }
    let alpha = traj.alpha();
    let first = idx[0];
    let last = idx[idx.len() - 1];
    let pair_distance = |k: usize, i: usize, j: usize| {
        let x = &traj.positions()[k];
        (0..d).map(|c| (x[i * d + c] - x[j * d + c]).powi(2)).sum::<f64>().sqrt()
    };
    let proxy = |k: usize| -> f64 {
        let mut u = 0.0;
        for i in 0..nb {
            for j in i + 1..nb {
                u += pair_distance(k, i, j).powf(-alpha);
            }
        }
        u
    };
    let (u0, u1) = (proxy(first), proxy(last));
    if !(u1 < u0) || !u1.is_finite() {
        return Err(Error::NotExpansive(format!("U does not decay on [{}, {}]", window.0, window.1)));
    }
    let mut pairs = Vec::new();
    for i in 0..nb {
        for j in i + 1..nb {
            let dist: Vec<f64> = (0..traj.len()).map(|k| pair_distance(k, i, j)).collect();
            let fit = fit_power_law(traj.times(), &dist, window)
                .map_err(|e| Error::NotExpansive(format!("pair ({i}, {j}): {e}")))?;
            if fit.exponent < 0.05 {
                return Err(Error::NotExpansive(format!(
                    "pair ({i}, {j}) does not separate (exponent {:.3})",
                    fit.exponent
                )));
            }
            pairs.push(PairExponent { i, j, fit });
        }
    }
    let p = 2.0 / (2.0 + alpha);
    let dev_h = pairs.iter().map(|q| (q.fit.exponent - 1.0).abs()).fold(0.0, f64::max);
    let dev_p = pairs.iter().map(|q| (q.fit.exponent - p).abs()).fold(0.0, f64::max);
    let class = if dev_h <= CHAZY_BAND && dev_h <= dev_p {
        ChazyClass::Hyperbolic
    } else if dev_p <= CHAZY_BAND {
        ChazyClass::Parabolic
    } else {
        ChazyClass::HyperbolicParabolic
    };
    let t = traj.times()[last];
    let velocity = traj.positions()[last].iter().map(|v| v / t).collect();
    Ok(ChazyReport { class, pairs, velocity, window })
}

/// `θ_± = (1 ± √(1 − 4μ))/2`.
pub fn singular_exponents(mu: f64) -> Result<(f64, f64)> {
    if !(mu < 0.25) {
        return Err(Error::domain("μ must be below 1/4"));
    }
    let s = (1.0 - 4.0 * mu).sqrt();
    Ok(((1.0 - s) / 2.0, (1.0 + s) / 2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularOdeSolution {
    pub mu: f64,
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub t_start: f64,
    pub times: Vec<f64>,
    /// Variation of constants with both integrals from `T`; `y(T) = ẏ(T) = 0`.
    pub particular: Vec<f64>,
    pub particular_derivative: Vec<f64>,
    /// Particular solution of order `t^{2−q}`: each integral runs from `t` to
    /// infinity when it converges and from `T` otherwise.
    pub canonical: Vec<f64>,
    pub canonical_derivative: Vec<f64>,
}

impl SingularOdeSolution {
    /// `(t^{θ+}, t^{θ−})`.
    pub fn homogeneous(&self, t: f64) -> (f64, f64) {
        (t.powf(self.theta_plus), t.powf(self.theta_minus))
    }
}

/// `∫_a^b g` on log-graded panels.
fn integrate_log_panels<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, gl: &GaussLegendre) -> f64 {
    if a == b {
        return 0.0;
    }
    let panels = ((b / a).ln().abs() / 0.25).ceil().max(1.0) as usize;
    let ratio = (b / a).powf(1.0 / panels as f64);
    let mut s = 0.0;
    let mut lo = a;
    for p in 0..panels {
        let hi = if p + 1 == panels { b } else { lo * ratio };
        s += gl.integrate(lo, hi, g);
        lo = hi;
    }
    s
}

/// `∫_t^∞ g` for `g = O(σ^{−κ})`, `κ > 1`.
fn integrate_to_infinity<G: Fn(f64) -> f64>(g: &G, t: f64, kappa: f64) -> f64 {
    let nu = 1.0 / (kappa - 1.0);
    let gl = GaussLegendre::new(12);
    let edges = [0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];
    let mut s = 0.0;
    for e in edges.windows(2) {
        for (u, w) in gl.mapped(e[0], e[1]) {
            let sigma = t * u.powf(-nu);
            s += w * t * nu * u.powf(-nu - 1.0) * g(sigma);
        }
    }
    s
}

/// Solves `ÿ + μ y/t² = f` for `t ≥ T` by variation of constants. The
/// forcing must decay like `t^{−q}` (`decay = q`), which selects the
/// convergent integrals of the canonical particular solution.
pub fn singular_ode_solution<F: Fn(f64) -> f64>(
    mu: f64,
    forcing: F,
    decay: f64,
    t_start: f64,
    times: &[f64],
) -> Result<SingularOdeSolution> {
    let (tm, tp) = singular_exponents(mu)?;
    if !(t_start > 0.0) {
        return Err(Error::arg("T must be positive"));
    }
    if times.iter().any(|t| !(*t >= t_start)) || times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::arg("times must be sorted and not before T"));
    }
    let gl = GaussLegendre::new(8);
    let gm = |s: f64| s.powf(tm) * forcing(s);
    let gp = |s: f64| s.powf(tp) * forcing(s);
    let mut im = Vec::with_capacity(times.len());
    let mut ip = Vec::with_capacity(times.len());
    let (mut acc_m, mut acc_p, mut prev) = (0.0, 0.0, t_start);
    for &t in times {
        acc_m += integrate_log_panels(&gm, prev, t, &gl);
        acc_p += integrate_log_panels(&gp, prev, t, &gl);
        im.push(acc_m);
        ip.push(acc_p);
        prev = t;
    }
    // −∫_t^∞ where convergent, accumulated inward to avoid cancellation
    let tail = |g: &dyn Fn(f64) -> f64, excess: f64| -> Option<Vec<f64>> {
        if excess <= 1.0 {
            return None;
        }
        let mut out = vec![0.0; times.len()];
        if let Some(&last) = times.last() {
            let mut acc = integrate_to_infinity(&g, last, excess);
            for k in (0..times.len()).rev() {
                if k + 1 < times.len() {
                    acc += integrate_log_panels(&g, times[k], times[k + 1], &gl);
                }
                out[k] = -acc;
            }
        }
        Some(out)
    };
    let tail_m = tail(&gm, decay - tm);
    let tail_p = tail(&gp, decay - tp);
    let delta = tp - tm;
    let mut particular = Vec::with_capacity(times.len());
    let mut particular_derivative = Vec::with_capacity(times.len());
    let mut canonical = Vec::with_capacity(times.len());
    let mut canonical_derivative = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let (sp, sm) = (t.powf(tp), t.powf(tm));
        particular.push((sp * im[k] - sm * ip[k]) / delta);
        particular_derivative.push((tp * sp / t * im[k] - tm * sm / t * ip[k]) / delta);
        let a = tail_m.as_ref().map_or(im[k], |j| j[k]);
        let b = tail_p.as_ref().map_or(ip[k], |j| j[k]);
        canonical.push((sp * a - sm * b) / delta);
        canonical_derivative.push((tp * sp / t * a - tm * sm / t * b) / delta);
    }
    Ok(SingularOdeSolution {
        mu,
        theta_minus: tm,
        theta_plus: tp,
        t_start,
        times: times.to_vec(),
        particular,
        particular_derivative,
        canonical,
        canonical_derivative,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDecay {
    pub times: Vec<f64>,
    /// `ψ_b(t) = ⟨γ(t) − β b_m t^{2/(2+α)}, b_m⟩_M`.
    pub psi_b: Vec<f64>,
    pub fit: PowerLawFit,
    /// Theoretical exponent bound for `|ψ_b|`.
    pub bound: f64,
}

/// Bound on the growth exponent of `ψ_b`: `(2α − 2)/(2 + α)`, and for
/// `α < 1` the larger of that and `m_− = (1 − √(1 + 4A))/2`,
/// `A = 2α(1+α)/(2+α)²`.
pub fn b_projection_bound(alpha: f64) -> f64 {
    let a = 2.0 * alpha * (1.0 + alpha) / (2.0 + alpha).powi(2);
    let m_minus = (1.0 - (1.0 + 4.0 * a).sqrt()) / 2.0;
    let e = (2.0 * alpha - 2.0) / (2.0 + alpha);
    if alpha < 1.0 {
        e.max(m_minus)
    } else {
        e
    }
}

/// Fits the decay of the `b_m` component of `γ − r₀` on `window`
/// (default `[√T, T]`).
pub fn b_projection_decay(
    model: &PotentialModel,
    traj: &Trajectory,
    cc: &CentralConfiguration,
    window: Option<(f64, f64)>,
) -> Result<ProjectionDecay> {
    let alpha = model.alpha();
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::arg("parabolic analysis needs α ∈ (0, 2)"));
    }
    let sys = model.system();
    let b = cc.b_m.coords();
    let e = parabolic_exponent(alpha);
    let psi_b: Vec<f64> = traj
        .times()
        .iter()
        .zip(traj.positions())
        .map(|(t, x)| {
            let s = cc.beta * t.powf(e);
            let d: Vec<f64> = x.iter().zip(b).map(|(xi, bi)| xi - s * bi).collect();
            sys.inner(&d, b)
        })
        .collect::<Result<_>>()?;
    let window = window.unwrap_or_else(|| default_window(traj));
    let magnitudes: Vec<f64> = psi_b.iter().map(|v| v.abs()).collect();
    let fit = fit_power_law(traj.times(), &magnitudes, window)?;
    Ok(ProjectionDecay { times: traj.times().to_vec(), psi_b, fit, bound: b_projection_bound(alpha) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{log_spaced, Provenance};

    fn series(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let t = log_spaced(lo, hi, n);
        let y = t.iter().map(|&t| f(t)).collect();
        (t, y)
    }

    #[test]
    fn power_law_examples() {
        let (t, y) = series(|t| t * t, 1.0, 1e3, 50);
        let f = fit_power_law(&t, &y, (1.0, 1e3)).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.log_spacing);
        let (t, y) = series(|t| 3.0 * t.sqrt(), 1.0, 1e3, 50);
        let f = fit_power_law(&t, &y, (1.0, 1e3)).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12 && (f.coefficient[0] - 3.0).abs() < 1e-10);
        let (t, y) = series(|t| t.sqrt() * (1.0 + 0.1 * t.powf(-0.3)), 1e3, 1e5, 100);
        let f = fit_power_law(&t, &y, (1e3, 1e5)).unwrap();
        assert!((f.exponent - 0.5).abs() < 0.01);
    }

    #[test]
    fn power_law_errors() {
        let (t, mut y) = series(|t| t, 1.0, 10.0, 20);
        assert!(fit_power_law(&t[..5], &y[..5], (1.0, 10.0)).is_err());
        y[3] = 0.0;
        assert!(matches!(fit_power_law(&t, &y, (1.0, 10.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn singular_exponent_examples() {
        assert_eq!(singular_exponents(0.0).unwrap(), (0.0, 1.0));
        let (m, p) = singular_exponents(2.0 / 9.0).unwrap();
        assert!((m - 1.0 / 3.0).abs() <= 1e-15 && (p - 2.0 / 3.0).abs() <= 1e-15);
        assert!(singular_exponents(0.25).is_err());
    }

    #[test]
    fn canonical_particular_solution_for_inverse_square_forcing() {
        // y = 1/μ solves ÿ + μ y/t² = t⁻²
        let times = log_spaced(1.0, 1e4, 40);
        let sol = singular_ode_solution(2.0 / 9.0, |t| t.powi(-2), 2.0, 1.0, &times).unwrap();
        for (y, dy) in sol.canonical.iter().zip(&sol.canonical_derivative) {
            assert!((y - 4.5).abs() < 1e-9 && dy.abs() < 1e-9, "{y} {dy}");
        }
        assert!(sol.particular[0].abs() < 1e-15 && sol.particular_derivative[0].abs() < 1e-15);
    }

    #[test]
    fn b_projection_bounds() {
        assert!(b_projection_bound(1.0).abs() < 1e-15);
        assert!((b_projection_bound(1.5) - 2.0 / 7.0).abs() < 1e-15);
        let a: f64 = 2.0 * 0.5 * 1.5 / 6.25;
        let m = (1.0 - (1.0 + 4.0 * a).sqrt()) / 2.0;
        assert!((b_projection_bound(0.5) - m.max(-0.4)).abs() < 1e-15);
    }

    fn synthetic(alpha: f64, rows: impl Fn(f64) -> Vec<f64>) -> Trajectory {
        let times = log_spaced(1.0, 1e4, 400);
        let pos: Vec<Vec<f64>> = times.iter().map(|&t| rows(t)).collect();
        let vel = vec![vec![0.0; pos[0].len()]; times.len()];
        Trajectory::new(times, pos, vel, 2, alpha, Provenance::Reference, 0.0).unwrap()
    }

    #[test]
    fn chazy_labels_on_synthetic_paths() {
        let p = synthetic(1.0, |t| {
            let s = t.powf(2.0 / 3.0);
            vec![s, 0.0, -0.5 * s, 0.8 * s, -0.5 * s, -0.8 * s]
        });
        let r = chazy_classify(&p, None).unwrap();
        assert_eq!(r.class, ChazyClass::Parabolic);
        assert!(r.pairs.iter().all(|q| (q.fit.exponent - 2.0 / 3.0).abs() < 0.02));
        let h = synthetic(1.0, |t| vec![t + 3.0, 1.0, -t, 0.0, 0.0, 2.0 * t]);
        assert_eq!(chazy_classify(&h, None).unwrap().class, ChazyClass::Hyperbolic);
        let hp = synthetic(1.0, |t| {
            let s = t.powf(2.0 / 3.0);
            vec![t + s, 0.0, t - s, 0.0, -2.0 * t, 0.0]
        });
        let r = chazy_classify(&hp, None).unwrap();
        assert_eq!(r.class, ChazyClass::HyperbolicParabolic);
        for w in [(1e3, 1e4), (1e2, 1e3)] {
            assert_eq!(chazy_classify(&hp, Some(w)).unwrap().class, ChazyClass::HyperbolicParabolic);
        }
        let bound = synthetic(1.0, |t| vec![t.cos(), t.sin(), -t.cos(), -t.sin()]);
        assert!(matches!(chazy_classify(&bound, None), Err(Error::NotExpansive(_))));
    }

    #[test]
    fn varpro_recovers_constant_and_power() {
        let sys = MassSystem::equal(2, 2).unwrap();
        let spec = ExpansionSpec {
            regime: Regime::Hyperbolic,
            alpha: 1.5,
            system: sys,
            terms: vec![power(vec![1.0, 0.0, -1.0, 0.0], 1.0)],
            remainder_exponent: -0.5,
        };
        let traj = synthetic(1.5, |t| {
            let r = t.powf(-0.5);
            vec![t + 0.3 + 0.2 * r, 0.1 - 0.4 * r, -t - 0.3 - 0.2 * r, -0.1 + 0.4 * r]
        });
        let res = expansion_residual(&traj, &spec, true, None).unwrap();
        let fit = res.fit.unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-6, "{}", fit.exponent);
        assert!((fit.coefficient[0] - 0.2).abs() < 1e-6 && (fit.coefficient[1] + 0.4).abs() < 1e-6);
        assert!((res.constant.unwrap()[0] - 0.3).abs() < 1e-6);
        let exact = synthetic(1.5, |t| vec![t, 0.0, -t, 0.0]);
        let res = expansion_residual(&exact, &spec, false, None).unwrap();
        assert!(res.fit.is_none() && !res.warnings.is_empty());
    }
}
