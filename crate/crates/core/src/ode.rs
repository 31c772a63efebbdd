//! Dormand–Prince 5(4) with step-size control and dense output.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Smallest admissible `|h| / max(1, |t|)` before giving up.
    pub min_step_rel: f64,
    pub initial_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-13, max_steps: 5_000_000, min_step_rel: 1e-14, initial_step: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureKind {
    StepUnderflow,
    MaxSteps,
    Rhs(Error),
}

/// Where and why an integration stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeFailure {
    pub kind: FailureKind,
    pub t: f64,
    pub y: Vec<f64>,
    /// Samples produced before the failure.
    pub samples: Vec<(f64, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    /// `(t, y)` at each requested sample time.
    pub samples: Vec<(f64, Vec<f64>)>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub t_end: f64,
    pub y_end: Vec<f64>,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction), returning
/// the solution at `sample_times`, which must be ordered along the direction
/// of integration and lie in `[t0, t1]`.
pub fn dopri5<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<OdeSolution, OdeFailure>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), Error>,
{
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut samples: Vec<(f64, Vec<f64>)> = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    let fail = |kind: FailureKind, t: f64, y: &[f64], samples: Vec<(f64, Vec<f64>)>| OdeFailure {
        kind,
        t,
        y: y.to_vec(),
        samples,
    };
    while next_sample < sample_times.len() && (sample_times[next_sample] - t0) * dir <= 0.0 {
        samples.push((sample_times[next_sample], y.clone()));
        next_sample += 1;
    }
    if t0 == t1 {
        return Ok(OdeSolution { samples, accepted_steps: 0, rejected_steps: 0, t_end: t, y_end: y });
    }
    let mut k1 = vec![0.0; n];
    if let Err(e) = f(t, &y, &mut k1) {
        return Err(fail(FailureKind::Rhs(e), t, &y, samples));
    }
    let mut h = match opts.initial_step {
        Some(h) => h.abs() * dir,
        None => initial_step(&mut f, t, &y, &k1, dir, opts).unwrap_or(1e-6 * dir),
    };
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut ys = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut accepted = 0;
    let mut rejected = 0;
    let mut last_rejected = false;
    let mut steps = 0;
    while (t1 - t) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(fail(FailureKind::MaxSteps, t, &y, samples));
        }
        if (h.abs()) < opts.min_step_rel * t.abs().max(1.0) {
            return Err(fail(FailureKind::StepUnderflow, t, &y, samples));
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let stages = (|| -> Result<(), Error> {
            for i in 0..n {
                ys[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, &ys, &mut k2)?;
            for i in 0..n {
                ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, &ys, &mut k3)?;
            for i in 0..n {
                ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, &ys, &mut k4)?;
            for i in 0..n {
                ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, &ys, &mut k5)?;
            for i in 0..n {
                ys[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, &ys, &mut k6)?;
            for i in 0..n {
                y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t + h, &y1, &mut k7)?;
            Ok(())
        })();
        if stages.is_err() {
            // A stage probed a singular point: treat as a large error.
            h *= 0.25;
            rejected += 1;
            last_rejected = true;
            if h.abs() < opts.min_step_rel * t.abs().max(1.0) {
                let kind = match stages {
                    Err(e) => FailureKind::Rhs(e),
                    Ok(()) => FailureKind::StepUnderflow,
                };
                return Err(fail(kind, t, &y, samples));
            }
            continue;
        }
        let mut err = 0.0;
        for i in 0..n {
            let sk = opts.atol + opts.rtol * y[i].abs().max(y1[i].abs());
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err += (e / sk).powi(2);
        }
        let err = (err / n as f64).sqrt();
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 && err.is_finite() {
            accepted += 1;
            let t_new = t + h;
            while next_sample < sample_times.len() && (sample_times[next_sample] - t_new) * dir <= 0.0 {
                let ts = sample_times[next_sample];
                let theta = (ts - t) / h;
                let theta1 = 1.0 - theta;
                let ysample: Vec<f64> = (0..n)
                    .map(|i| {
                        let ydiff = y1[i] - y[i];
                        let bspl = h * k1[i] - ydiff;
                        let r4 = ydiff - h * k7[i] - bspl;
                        let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                        y[i] + theta * (ydiff + theta1 * (bspl + theta * (r4 + theta1 * r5)))
                    })
                    .collect();
                samples.push((ts, ysample));
                next_sample += 1;
            }
            t = t_new;
            core::mem::swap(&mut y, &mut y1);
            core::mem::swap(&mut k1, &mut k7);
            h *= if last_rejected { fac.min(1.0) } else { fac };
            last_rejected = false;
        } else {
            rejected += 1;
            last_rejected = true;
            h *= if err.is_finite() { fac.min(1.0) } else { 0.2 };
        }
    }
    Ok(OdeSolution { samples, accepted_steps: accepted, rejected_steps: rejected, t_end: t, y_end: y })
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], dir: f64, opts: &OdeOptions) -> Option<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), Error>,
{
    let n = y.len() as f64;
    let sk: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let d0 = (y.iter().zip(&sk).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sk).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * dir * b).collect();
    let mut f1 = vec![0.0; y.len()];
    f(t + h0 * dir, &y1, &mut f1).ok()?;
    let d2 = (f1.iter().zip(f0).zip(&sk).map(|((a, b), s)| ((a - b) / s).powi(2)).sum::<f64>() / n).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    Some((100.0 * h0).min(h1) * dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = dopri5(
            |_, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            5.0,
            &[1.0, 2.5, 5.0],
            &OdeOptions::default(),
        )
        .unwrap();
        for (t, y) in &sol.samples {
            assert!((y[0] - (-t).exp()).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let sol = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            10.0,
            &[10f64.cos(), -10f64.sin()],
            0.0,
            &[7.3, 0.0],
            &OdeOptions::default(),
        )
        .unwrap();
        for (t, y) in &sol.samples {
            assert!((y[0] - t.cos()).abs() < 1e-8 && (y[1] + t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        // y' = y², y(0) = 1 blows up at t = 1
        let err = dopri5(
            |_, y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            &[],
            &OdeOptions { max_steps: 100_000, ..OdeOptions::default() },
        )
        .unwrap_err();
        assert!(err.t < 1.0 && err.t > 0.99);
    }
}
