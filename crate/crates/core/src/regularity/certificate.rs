//! Closed-form Lipschitz certificate from the doubling-of-variables bound.
//!
//! With `P = K^2 / (2 lambda (lambda - 2 K1)) + C / lambda`, the penalised
//! maximum satisfies `u(x) - u(y) <= P / gamma + gamma |x - y|^2 / 2` for
//! every `gamma > 0`. Minimising over `gamma` at unit distance gives
//! `gamma* = sqrt(2P)` and the Lipschitz bound `K~ = sqrt(2P)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzCertificate<T> {
    pub k: T,
    pub k1: T,
    pub c: T,
    pub lambda: T,
    pub gamma_star: T,
    pub k_tilde: T,
}

impl<T: Real> LipschitzCertificate<T> {
    /// `P` in `P / gamma + gamma d^2 / 2`.
    pub fn penalty_numerator(&self) -> T {
        numerator(self.k, self.k1, self.c, self.lambda)
    }

    /// Bound on `u(x) - u(y)` at distance `d` for a given penalisation weight.
    pub fn bound_at(&self, gamma: T, d: T) -> T {
        self.penalty_numerator() / gamma + gamma * d * d / T::lit(2.0)
    }
}

fn numerator<T: Real>(k: T, k1: T, c: T, lambda: T) -> T {
    let two = T::lit(2.0);
    k * k / (two * lambda * (lambda - two * k1)) + c / lambda
}

pub fn lipschitz_certificate<T: Real>(
    k: T,
    k1: T,
    c: T,
    lambda: T,
) -> Result<LipschitzCertificate<T>> {
    for (name, v) in [("K", k), ("K1", k1), ("C", c), ("lambda", lambda)] {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{name} must be finite, got {v}"
            )));
        }
    }
    if k < T::zero() || k1 < T::zero() || c < T::zero() {
        return Err(Error::InvalidArgument(format!(
            "K, K1 and C must be non-negative, got K = {k}, K1 = {k1}, C = {c}"
        )));
    }
    let lambda0 = k1 + k1;
    if !(lambda > lambda0) {
        return Err(Error::BelowThreshold {
            lambda: lambda.to_f64_lossy(),
            lambda0: lambda0.to_f64_lossy(),
        });
    }
    let p = numerator(k, k1, c, lambda);
    let root = (p + p).sqrt();
    Ok(LipschitzCertificate {
        k,
        k1,
        c,
        lambda,
        gamma_star: root,
        k_tilde: root,
    })
}
