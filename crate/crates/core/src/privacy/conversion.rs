// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Conversion of a rho-zCDP guarantee to (eps, delta)-DP.
//!
//! `delta = inf_{a > 1} exp((a - 1)(a rho - eps)) / (a - 1) * (1 - 1/a)^a`.
//! The search runs over `t = ln(a - 1)`, where
//! `ln f = e^t (a rho - eps) + t e^t - a ln a`. The objective tends to one
//! as `a -> 1`, so delta never exceeds one.

use crate::error::{Error, Result};

/// Search tolerance on `t = ln(a - 1)`.
const T_TOLERANCE: f64 = 1e-12;
/// Below this `t` the objective equals one to double precision.
const T_FLOOR: f64 = -60.0;
const T_CEILING: f64 = 60.0;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conversion {
    pub delta: f64,
    /// Minimizing order `a`; `1.0` when the infimum is the limit at `a -> 1`.
    pub alpha: f64,
}

/// `ln f` at `t = ln(a - 1)`.
pub fn log_objective(rho: f64, eps: f64, t: f64) -> f64 {
    let e = t.exp();
    let a = 1.0 + e;
    e * (a * rho - eps) + t * e - a * e.ln_1p()
}

pub fn zcdp_to_approx_dp(rho: f64, eps: f64) -> Result<Conversion> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Unsupported(format!(
            "rho must be positive, got {rho}"
        )));
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::Unsupported(format!(
            "eps must be nonnegative, got {eps}"
        )));
    }
    let f = |t: f64| log_objective(rho, eps, t);

    // start near the classical optimum a = (eps + rho) / (2 rho)
    let guess = (eps + rho) / (2.0 * rho) - 1.0;
    let t0 = if guess > 1e-6 { guess.ln() } else { -2.0 };
    let (mut lo, mut hi);
    let step = 0.5;
    if f(t0 + step) < f(t0) {
        // walk right
        let (mut a, mut b, mut h) = (t0, t0 + step, step);
        loop {
            let c = b + 2.0 * h;
            if c > T_CEILING {
                return Err(Error::Convergence(format!(
                    "no minimum below a = e^{T_CEILING} for rho = {rho}, eps = {eps}"
                )));
            }
            if f(c) >= f(b) {
                lo = a;
                hi = c;
                break;
            }
            a = b;
            b = c;
            h *= 2.0;
        }
    } else {
        // walk left until the objective rises again or the floor is reached
        let (mut a, mut b, mut h) = (t0 + step, t0, step);
        loop {
            let c = b - 2.0 * h;
            if c < T_FLOOR {
                return Ok(Conversion {
                    delta: f(T_FLOOR).exp().min(1.0),
                    alpha: 1.0,
                });
            }
            if f(c) >= f(b) {
                lo = c;
                hi = a;
                break;
            }
            a = b;
            b = c;
            h *= 2.0;
        }
    }

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > T_TOLERANCE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let t = 0.5 * (lo + hi);
    let log_delta = f(t).min(0.0);
    Ok(Conversion {
        delta: log_delta.exp(),
        alpha: 1.0 + t.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_rho_saturates() {
        let c = zcdp_to_approx_dp(50.0, 1.0).unwrap();
        assert_eq!(c.delta, 1.0);
    }

    #[test]
    fn decreasing_in_eps() {
        let mut last = 1.0;
        for eps in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let d = zcdp_to_approx_dp(0.5, eps).unwrap().delta;
            assert!(d <= last);
            last = d;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn objective_matches_direct_formula() {
        let (rho, eps, a) = (0.3_f64, 1.5_f64, 4.0_f64);
        let direct = ((a - 1.0) * (a * rho - eps)).exp() / (a - 1.0) * (1.0 - 1.0 / a).powf(a);
        let via_t = log_objective(rho, eps, (a - 1.0).ln()).exp();
        assert!((direct - via_t).abs() < 1e-14 * direct);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(zcdp_to_approx_dp(0.0, 1.0).is_err());
        assert!(zcdp_to_approx_dp(1.0, -1.0).is_err());
    }
}
