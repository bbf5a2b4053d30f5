//! Dormand-Prince 5(4) with step-size control and Hairer's 4th-order dense
//! output, for small real systems of fixed size.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|; keep it below the shortest feature of a
    /// time-dependent drive so that no pulse is stepped over.
    pub max_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_step: f64::INFINITY, initial_step: None, max_steps: 5_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
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

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

/// Integrate `dy/dt = f(t, y)` from `t0` to `t_end` (forwards or backwards)
/// and return the state at every entry of `sample_times`, which must be
/// monotone in the direction of integration and lie inside the span.
pub fn dopri5<const N: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if !(t0.is_finite() && t_end.is_finite()) {
        return Err(invalid("t_span", "must be finite"));
    }
    if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
        return Err(invalid("tolerance", "rtol must be positive and atol non-negative"));
    }
    if !(opts.max_step > 0.0) {
        return Err(invalid("max_step", "must be positive"));
    }
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    for (i, &s) in sample_times.iter().enumerate() {
        let inside = dir * (s - t0) >= -1e-12 * (1.0 + t0.abs()) && dir * (t_end - s) >= -1e-12 * (1.0 + t_end.abs());
        if !inside {
            return Err(invalid("sample_times", "samples must lie inside the integration span"));
        }
        if i > 0 && dir * (s - sample_times[i - 1]) < 0.0 {
            return Err(invalid("sample_times", "samples must be monotone"));
        }
    }

    let mut sol = Solution {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
        accepted: 0,
        rejected: 0,
        evaluations: 0,
    };
    let mut next_sample = 0;
    // samples at t0 itself
    while next_sample < sample_times.len() && dir * (sample_times[next_sample] - t0) <= 0.0 {
        sol.times.push(sample_times[next_sample]);
        sol.states.push(y0);
        next_sample += 1;
    }
    if t_end == t0 {
        return Ok(sol);
    }

    let scale = |a: &[f64; N], b: &[f64; N], i: usize| opts.atol + opts.rtol * f64::max(a[i].abs(), b[i].abs());
    let hmax = f64::min(opts.max_step, (t_end - t0).abs());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    sol.evaluations += 1;

    let mut h = match opts.initial_step {
        Some(h) if h > 0.0 => f64::min(h, hmax),
        Some(_) => return Err(invalid("initial_step", "must be positive")),
        None => {
            let n = N as f64;
            let (mut dnf, mut dny) = (0.0, 0.0);
            for i in 0..N {
                let sk = scale(&y, &y, i);
                dnf += (k1[i] / sk) * (k1[i] / sk);
                dny += (y[i] / sk) * (y[i] / sk);
            }
            let mut h0 = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { libm::sqrt(dny / dnf) * 0.01 };
            h0 = f64::min(h0, hmax);
            let y1 = axpy(&y, &[(dir * h0, &k1)]);
            let f1 = f(t + dir * h0, &y1);
            sol.evaluations += 1;
            let mut der2 = 0.0;
            for i in 0..N {
                let sk = scale(&y, &y, i);
                der2 += ((f1[i] - k1[i]) / sk) * ((f1[i] - k1[i]) / sk);
            }
            der2 = libm::sqrt(der2 / n) / h0;
            let der12 = f64::max(der2.abs(), libm::sqrt(dnf / n));
            let h1 = if der12 <= 1e-15 { f64::max(1e-6, h0 * 1e-3) } else { libm::pow(0.01 / der12, 0.2) };
            f64::min(f64::min(100.0 * h0, h1), hmax)
        }
    };

    let (safe, beta) = (0.9, 0.04);
    let expo1 = 0.2 - beta * 0.75;
    let (facc1, facc2) = (1.0 / 0.2, 1.0 / 10.0);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            return Err(Error::StepBudget { t, max_steps: opts.max_steps });
        }
        if 0.1 * h.abs() <= t.abs() * f64::EPSILON {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let mut last = false;
        if dir * (t + dir * h - t_end) >= 0.0 {
            h = (t_end - t).abs();
            last = true;
        }
        steps += 1;
        let hs = dir * h;
        let k2 = f(t + C2 * hs, &axpy(&y, &[(hs * A21, &k1)]));
        let k3 = f(t + C3 * hs, &axpy(&y, &[(hs * A31, &k1), (hs * A32, &k2)]));
        let k4 = f(t + C4 * hs, &axpy(&y, &[(hs * A41, &k1), (hs * A42, &k2), (hs * A43, &k3)]));
        let k5 = f(t + C5 * hs, &axpy(&y, &[(hs * A51, &k1), (hs * A52, &k2), (hs * A53, &k3), (hs * A54, &k4)]));
        let ysti = axpy(&y, &[(hs * A61, &k1), (hs * A62, &k2), (hs * A63, &k3), (hs * A64, &k4), (hs * A65, &k5)]);
        let k6 = f(t + hs, &ysti);
        let y1 = axpy(&y, &[(hs * A71, &k1), (hs * A73, &k3), (hs * A74, &k4), (hs * A75, &k5), (hs * A76, &k6)]);
        let k7 = f(t + hs, &y1);
        sol.evaluations += 6;

        let mut err = 0.0;
        for i in 0..N {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = scale(&y, &y1, i);
            err += (e / sk) * (e / sk);
        }
        err = libm::sqrt(err / N as f64);
        if !err.is_finite() {
            // blown-up trial step: shrink hard and retry
            sol.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        let fac11 = libm::pow(err, expo1);
        let fac = f64::max(facc2, f64::min(facc1, fac11 / libm::pow(facold, beta) / safe));
        let mut hnew = h / fac;

        if err <= 1.0 {
            facold = f64::max(err, 1e-4);
            sol.accepted += 1;
            let t_new = t + hs;
            // dense output coefficients
            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y1[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - hs * k7[i] - bspl;
                r[4][i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            while next_sample < sample_times.len() && dir * (sample_times[next_sample] - t_new) <= 0.0 {
                let ts = sample_times[next_sample];
                let th = (ts - t) / hs;
                let th1 = 1.0 - th;
                let mut ys = [0.0; N];
                for i in 0..N {
                    ys[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
                }
                sol.times.push(ts);
                sol.states.push(ys);
                next_sample += 1;
            }
            k1 = k7;
            y = y1;
            t = t_new;
            if last {
                while next_sample < sample_times.len() {
                    sol.times.push(sample_times[next_sample]);
                    sol.states.push(y);
                    next_sample += 1;
                }
                return Ok(sol);
            }
            hnew = f64::min(hnew, hmax);
            if last_rejected {
                hnew = f64::min(hnew, h);
            }
            last_rejected = false;
        } else {
            hnew = h / f64::min(facc1, fac11 / safe);
            sol.rejected += 1;
            last_rejected = true;
        }
        h = hnew;
    }
}

/// Evenly spaced sample times including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![b],
        _ => (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let ts = linspace(0.0, 5.0, 11);
        let sol = dopri5(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &ts, &OdeOptions::default()).unwrap();
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - libm::exp(-t)).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let ts = linspace(0.0, 20.0, 401);
        let opts = OdeOptions { rtol: 1e-11, atol: 1e-13, ..OdeOptions::default() };
        let sol = dopri5(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 20.0, &ts, &opts).unwrap();
        assert_eq!(sol.times.len(), 401);
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - libm::cos(*t)).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn backwards_integration() {
        let sol = dopri5(|_, y: &[f64; 1]| [y[0]], 1.0, [1.0], 0.0, &[0.5, 0.0], &OdeOptions::default()).unwrap();
        assert!((sol.states[1][0] - libm::exp(-1.0)).abs() < 1e-9);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = 2 t  ->  t^2
        let sol = dopri5(|t, _: &[f64; 1]| [2.0 * t], 0.0, [0.0], 3.0, &[3.0], &OdeOptions::default()).unwrap();
        assert!((sol.states[0][0] - 9.0).abs() < 1e-10);
    }

    #[test]
    fn step_budget_reported() {
        let opts = OdeOptions { max_steps: 5, ..OdeOptions::default() };
        let err = dopri5(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 100.0, &[], &opts).unwrap_err();
        assert!(matches!(err, Error::StepBudget { .. }));
    }

    #[test]
    fn stiff_blowup_reports_underflow() {
        // finite-time blow-up at t = 1
        let err = dopri5(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &[], &OdeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::StepSizeUnderflow { .. } | Error::StepBudget { .. }));
    }

    #[test]
    fn samples_outside_span_rejected() {
        let r = dopri5(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 1.0, &[2.0], &OdeOptions::default());
        assert!(r.is_err());
    }
}
