//! Discrete Gronwall bound for implicit recursions
//! `y_k <= C + τ Σ_{ℓ<=k} (a_ℓ y_ℓ + b_ℓ)`.

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallCertificate {
    pub bound: f64,
    pub a_max: f64,
    pub tau: f64,
}

/// `y_k <= (C + τΣb)·exp(τΣa/(1 − aτ))/(1 − aτ)` with `a = max a_ℓ`; the
/// sums run over the given sequences (ℓ = 1..k). Requires `τa < 1`.
pub fn gronwall_bound(c: f64, tau: f64, a: &[f64], b: &[f64]) -> Result<GronwallCertificate> {
    if a.len() != b.len() {
        return Err(Error::invalid("a and b sequences differ in length"));
    }
    if a.iter().chain(b).any(|x| *x < 0.0 || !x.is_finite()) || !(tau > 0.0) {
        return Err(Error::invalid("Gronwall data must be non-negative and finite"));
    }
    let a_max = a.iter().fold(0.0f64, |m, x| m.max(*x));
    let at = a_max * tau;
    if at >= 1.0 {
        return Err(Error::InvalidCertificate { a_tau: at });
    }
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let bound = (c + tau * sb) * math::exp(tau * sa / (1.0 - at)) / (1.0 - at);
    Ok(GronwallCertificate {
        bound,
        a_max,
        tau,
    })
}

/// Checks `y_k <= bound_k` for every prefix, given a sequence `y_1..y_n`
/// that satisfies the recursion; returns the largest ratio `y_k / bound_k`.
pub fn check_sequence(c: f64, tau: f64, a: &[f64], b: &[f64], y: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..=y.len() {
        let cert = gronwall_bound(c, tau, &a[..k], &b[..k])?;
        worst = worst.max(y[k - 1] / cert.bound);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let a = [1.0; 10];
        let b = [0.0; 10];
        let cert = gronwall_bound(1.0, 0.1, &a, &b).unwrap();
        let expect = math::exp(1.0 / 0.9) / 0.9;
        assert!((cert.bound - expect).abs() < 1e-14);
        assert!((cert.bound - 3.375).abs() < 1e-3);
    }

    #[test]
    fn no_growth_gives_c() {
        let cert = gronwall_bound(2.5, 0.3, &[0.0; 7], &[0.0; 7]).unwrap();
        assert_eq!(cert.bound, 2.5);
    }

    #[test]
    fn rejects_large_steps() {
        assert!(matches!(
            gronwall_bound(1.0, 0.5, &[2.0], &[0.0]),
            Err(Error::InvalidCertificate { .. })
        ));
    }

    #[test]
    fn monotone_in_data() {
        let a = [0.5, 1.0, 0.2];
        let b = [0.1, 0.0, 0.3];
        let base = gronwall_bound(1.0, 0.1, &a, &b).unwrap().bound;
        assert!(gronwall_bound(1.1, 0.1, &a, &b).unwrap().bound > base);
        assert!(gronwall_bound(1.0, 0.1, &a, &[0.2, 0.0, 0.3]).unwrap().bound > base);
        assert!(gronwall_bound(1.0, 0.1, &[0.6, 1.0, 0.2], &b).unwrap().bound > base);
    }
}
