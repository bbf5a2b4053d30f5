//! Factorials and associated Laguerre polynomials.

use crate::error::{invalid, Result};

/// `ln(n!)`, via the log-gamma function.
pub fn ln_factorial(n: u32) -> f64 {
    libm::lgamma(f64::from(n) + 1.0)
}

/// `n!` as a float. Exact for `n <= 22`, then log-gamma accuracy.
pub fn factorial(n: u32) -> f64 {
    if n <= 22 {
        (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
    } else {
        libm::exp(ln_factorial(n))
    }
}

/// Associated Laguerre polynomial `L_p^l(x)` for integers `p, l >= 0`.
///
/// Uses the forward recurrence
/// `(k + 1) L_{k+1} = (2k + 1 + l - x) L_k - (k + l) L_{k-1}`
/// from `L_0 = 1`, `L_1 = 1 + l - x`. Unlike the explicit alternating sum it
/// does not lose digits to cancellation when `p` and `x` are large.
pub fn assoc_laguerre(p: i64, l: i64, x: f64) -> Result<f64> {
    if p < 0 {
        return Err(invalid("p", "radial index must be non-negative"));
    }
    if l < 0 {
        return Err(invalid("l", "upper index must be non-negative"));
    }
    if !x.is_finite() {
        return Err(invalid("x", "must be finite"));
    }
    let lf = l as f64;
    let mut prev = 1.0;
    if p == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 + lf - x;
    for k in 1..p {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + lf - x) * cur - (kf + lf) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Closed-form check of the recurrence: the explicit finite sum
/// `sum_m (-1)^m C(p+l, p-m) x^m / m!`. Accurate only for modest `p` and `x`.
pub fn assoc_laguerre_series(p: u32, l: u32, x: f64) -> f64 {
    (0..=p)
        .map(|m| {
            let ln_c = ln_factorial(p + l) - ln_factorial(p - m) - ln_factorial(l + m) - ln_factorial(m);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * libm::exp(ln_c) * libm::pow(x, f64::from(m))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), 1.0);
        assert_eq!(factorial(5), 120.0);
        assert_eq!(factorial(20), 2_432_902_008_176_640_000.0);
        let rel = (factorial(30) - 2.652_528_598_121_910_6e32).abs() / 2.652_528_598_121_910_6e32;
        assert!(rel < 1e-13);
    }

    #[test]
    fn laguerre_low_orders() {
        for &x in &[0.0, 0.3, 1.7, 12.0] {
            for l in 0..6 {
                assert_eq!(assoc_laguerre(0, l, x).unwrap(), 1.0);
                let l1 = assoc_laguerre(1, l, x).unwrap();
                assert!((l1 - (1.0 + l as f64 - x)).abs() < 1e-13);
            }
        }
        assert_eq!(assoc_laguerre(1, 0, 0.25).unwrap(), 0.75);
    }

    #[test]
    fn laguerre_reference_values() {
        // Reference values from 50-digit arithmetic.
        assert!((assoc_laguerre(2, 2, 1.5).unwrap() - 1.125).abs() < 1e-14);
        let cases: [(i64, i64, f64, f64); 4] = [
            (5, 3, 2.7, -4.215_042_249_999_999_4),
            (7, 0, 0.5, -0.518_339_223_710_317_46),
            (10, 4, 3.3, 17.212_299_926_238_681),
            (40, 2, 10.0, 24.607_145_252_366_529),
        ];
        for (p, l, x, want) in cases {
            let got = assoc_laguerre(p, l, x).unwrap();
            let scale = f64::max(1.0, want.abs());
            assert!((got - want).abs() < 1e-10 * scale, "L_{p}^{l}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn recurrence_matches_series() {
        for p in 0..8u32 {
            for l in 0..5u32 {
                for &x in &[0.0, 0.4, 1.9, 3.5] {
                    let a = assoc_laguerre(i64::from(p), i64::from(l), x).unwrap();
                    let b = assoc_laguerre_series(p, l, x);
                    assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()), "p={p} l={l} x={x}");
                }
            }
        }
    }

    #[test]
    fn laguerre_rejects_negative_indices() {
        assert!(assoc_laguerre(-1, 0, 1.0).is_err());
        assert!(assoc_laguerre(1, -2, 1.0).is_err());
        assert!(assoc_laguerre(1, 2, f64::NAN).is_err());
    }
}
