//! ODE initial-value integrators for small systems: an adaptive
//! Dormand-Prince 5(4) and a fixed-step Gragg-Bulirsch-Stoer extrapolation
//! scheme of order 8 used as an independent cross-check.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("right-hand side returned non-finite values at t = {t:.6e}")]
    NonFinite { t: f64 },
}

/// A recorded accepted step: state and derivative, enough for C1 Hermite
/// resampling between nodes.
#[derive(Debug, Clone)]
pub struct OdeSample {
    pub t: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub samples: Vec<OdeSample>,
}

impl OdeSolution {
    /// Cubic Hermite evaluation of component `k` at `t` (t within the span).
    pub fn eval(&self, t: f64, k: usize) -> f64 {
        let s = &self.samples;
        let increasing = s[s.len() - 1].t >= s[0].t;
        let mut lo = 0usize;
        let mut hi = s.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if (s[mid].t <= t) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a, b) = (&s[lo], &s[hi]);
        let h = b.t - a.t;
        if h == 0.0 {
            return a.y[k];
        }
        let u = (t - a.t) / h;
        let (y0, y1, m0, m1) = (a.y[k], b.y[k], a.dy[k] * h, b.dy[k] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1
    }
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4). Integrates from `t0` to `t1` (either
/// direction) recording every accepted step.
pub fn dopri5<F>(
    f: &F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<OdeSolution, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = dir * (span * 1e-4).max(1e-12);
    let mut k = vec![vec![0.0; dim]; 7];
    let mut dy0 = vec![0.0; dim];
    f(t, &y, &mut dy0);
    let mut samples = vec![OdeSample {
        t,
        y: y.clone(),
        dy: dy0,
    }];

    let mut ytmp = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    let span_floor = span * 1e-14;
    while (t1 - t) * dir > span_floor {
        let mut clamped = false;
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
            clamped = true;
        }
        if !clamped && h.abs() < 1e-15 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t, h });
        }
        f(t, &y, &mut k[0]);
        for s in 1..7 {
            for (i, yt) in ytmp.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += DP_A[s - 1][j] * kj[i];
                }
                *yt = y[i] + h * acc;
            }
            f(t + DP_C[s] * h, &ytmp, &mut k[s]);
        }
        let mut err = 0.0f64;
        for i in 0..dim {
            let mut v5 = 0.0;
            let mut v4 = 0.0;
            for (j, kj) in k.iter().enumerate() {
                v5 += DP_B5[j] * kj[i];
                v4 += DP_B4[j] * kj[i];
            }
            y5[i] = y[i] + h * v5;
            let sc = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (v5 - v4)).abs() / sc);
        }
        if !err.is_finite() {
            return Err(OdeError::NonFinite { t });
        }
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
            let mut dy = vec![0.0; dim];
            f(t, &y, &mut dy);
            samples.push(OdeSample {
                t,
                y: y.clone(),
                dy,
            });
        }
        let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        h *= fac;
    }
    Ok(OdeSolution { samples })
}

/// Fixed-step Gragg-Bulirsch-Stoer: modified midpoint with Richardson
/// extrapolation over the subdivision sequence {2, 4, 6, 8}, giving an
/// O(H^8) one-step scheme. Serves as the independent oracle integrator.
pub fn gbs8<F>(f: &F, t0: f64, y0: &[f64], t1: f64, n_steps: usize) -> Result<Vec<f64>, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let big_h = (t1 - t0) / n_steps as f64;
    let seq = [2usize, 4, 6, 8];
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut table: Vec<Vec<f64>> = vec![vec![0.0; dim]; seq.len()];
    for _ in 0..n_steps {
        for (lvl, &nsub) in seq.iter().enumerate() {
            table[lvl] = midpoint_pass(f, t, &y, big_h, nsub)?;
        }
        // polynomial Richardson in h^2
        for m in 1..seq.len() {
            for lvl in (m..seq.len()).rev() {
                let r = (seq[lvl] as f64 / seq[lvl - m] as f64).powi(2);
                for i in 0..dim {
                    let hi = table[lvl][i];
                    let lo = table[lvl - 1][i];
                    table[lvl][i] = hi + (hi - lo) / (r - 1.0);
                }
            }
        }
        y.copy_from_slice(&table[seq.len() - 1]);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(OdeError::NonFinite { t });
        }
        t += big_h;
    }
    Ok(y)
}

fn midpoint_pass<F>(f: &F, t0: f64, y0: &[f64], big_h: f64, nsub: usize) -> Result<Vec<f64>, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let h = big_h / nsub as f64;
    let mut ym = y0.to_vec();
    let mut dy = vec![0.0; dim];
    f(t0, y0, &mut dy);
    let mut yk: Vec<f64> = (0..dim).map(|i| y0[i] + h * dy[i]).collect();
    for k in 1..nsub {
        f(t0 + k as f64 * h, &yk, &mut dy);
        for i in 0..dim {
            let next = ym[i] + 2.0 * h * dy[i];
            ym[i] = yk[i];
            yk[i] = next;
        }
    }
    f(t0 + big_h, &yk, &mut dy);
    // Gragg smoothing step
    Ok((0..dim).map(|i| 0.5 * (ym[i] + yk[i] + h * dy[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn dopri5_harmonic_oscillator() {
        let sol = dopri5(&harmonic, 0.0, &[1.0, 0.0], 10.0, 1e-10, 1e-12).unwrap();
        let last = sol.samples.last().unwrap();
        assert!((last.y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((last.y[1] + 10f64.sin()).abs() < 1e-8);
        // Hermite resampling mid-span
        assert!((sol.eval(5.0, 0) - 5f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn dopri5_integrates_backwards() {
        let sol = dopri5(&harmonic, 10.0, &[10f64.cos(), -(10f64.sin())], 0.0, 1e-10, 1e-12).unwrap();
        let last = sol.samples.last().unwrap();
        assert!((last.y[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gbs8_matches_dopri5_to_high_accuracy() {
        let a = gbs8(&harmonic, 0.0, &[1.0, 0.0], 10.0, 100).unwrap();
        assert!((a[0] - 10f64.cos()).abs() < 1e-12);
    }
}
