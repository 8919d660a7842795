//! Adaptive Gauss–Kronrod (7/15) quadrature with interval bisection.
//!
//! This is the independent reference engine for every definite integral the
//! crate compares a trained model against.

use alloc::collections::BinaryHeap;

#[allow(unused_imports)] // method resolution falls back to std when it is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1]; the odd-indexed ones are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SEGMENTS: usize = 20_000;

/// (Kronrod estimate, |Kronrod − Gauss|) on one segment.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// ∫ₐᵇ f with absolute error target `abs_tol`.
///
/// Segments are bisected until the summed Kronrod–Gauss error estimate
/// falls below the target; the worst segment is always split first.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || !(abs_tol > 0.0) {
        return Err(Error::invalid_input("quadrature needs finite bounds and a positive tolerance"));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (value, err) = gk15(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { lo, hi, value, err });
    let mut err_total = err;
    loop {
        if !err_total.is_finite() {
            return Err(Error::Quadrature { a, b });
        }
        if err_total <= abs_tol {
            // Re-sum from scratch so the running total's round-off never leaks out.
            let total: f64 = heap.iter().map(|s| s.value).sum();
            let err: f64 = heap.iter().map(|s| s.err).sum();
            if err <= abs_tol && total.is_finite() {
                return Ok(sign * total);
            }
            err_total = err;
        }
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature { a, b });
        }
        let worst = heap.pop().expect("non-empty");
        let m = 0.5 * (worst.lo + worst.hi);
        if m <= worst.lo || m >= worst.hi {
            return Err(Error::Quadrature { a, b });
        }
        let (v1, e1) = gk15(&f, worst.lo, m);
        let (v2, e2) = gk15(&f, m, worst.hi);
        err_total += e1 + e2 - worst.err;
        heap.push(Segment { lo: worst.lo, hi: m, value: v1, err: e1 });
        heap.push(Segment { lo: m, hi: worst.hi, value: v2, err: e2 });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn polynomials_up_to_degree_22_are_exact_on_one_segment() {
        let (v, _) = gk15(&|x: f64| x.powi(22), -1.0, 1.0);
        assert!((v - 2.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn sine_and_peaked_integrands() {
        let v = integrate(f64::sin, 0.0, PI, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
        // ∫ 1/(x² + w²) over [−1, 1] = 2·atan(1/w)/w.
        let w = 1e-3;
        let v = integrate(|x| 1.0 / (x * x + w * w), -1.0, 1.0, 1e-7).unwrap();
        assert!((v - 2.0 * (1.0 / w).atan() / w).abs() < 1e-6);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let f = |x: f64| x.exp();
        let a = integrate(f, 0.0, 1.0, 1e-12).unwrap();
        let b = integrate(f, 1.0, 0.0, 1e-12).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn non_finite_integrand_fails() {
        assert!(matches!(integrate(|x: f64| 1.0 / x, 0.0, 1.0, 1e-10), Err(Error::Quadrature { .. })));
    }
}
