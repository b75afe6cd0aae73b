//! Closed-form step sizes and communication-round bounds.
//!
//! Every bound is order-level: hidden constants are set to 1, so the values
//! are for comparing trends across `K`, `rho` and `delta`, not for predicting
//! absolute round counts. Each bound keeps its own logarithm: `ln(1/(mu eps))`
//! for the general results and `ln(1/eps)` for over-parameterized least squares.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("{symbol} = {value} is outside its domain ({requirement})")]
    Domain {
        symbol: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("regime: inapplicable (requires delta < mu, got delta = {delta}, mu = {mu})")]
    Regime { delta: f64, mu: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub l: f64,
    pub mu: f64,
    pub delta: f64,
    pub beta: f64,
    pub rho: f64,
    pub k: usize,
    pub epsilon: f64,
}

fn domain(symbol: &'static str, value: f64, requirement: &'static str) -> TheoryError {
    TheoryError::Domain {
        symbol,
        value,
        requirement,
    }
}

impl BoundInputs {
    fn check_common(&self) -> Result<(), TheoryError> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(domain("L", self.l, "L > 0"));
        }
        if !(self.rho >= 0.0 && self.rho < 1.0) {
            return Err(domain("rho", self.rho, "0 <= rho < 1"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(domain("delta", self.delta, "delta >= 0"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(domain("beta", self.beta, "beta >= 0"));
        }
        if !(self.mu >= 0.0 && self.mu <= self.l) {
            return Err(domain("mu", self.mu, "0 <= mu <= L"));
        }
        Ok(())
    }

    fn check_bound(&self) -> Result<(), TheoryError> {
        self.check_common()?;
        if !(self.mu > 0.0) {
            return Err(domain("mu", self.mu, "mu > 0"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(domain("eps", self.epsilon, "eps > 0"));
        }
        Ok(())
    }

    fn log_mu_eps(&self) -> f64 {
        (1.0 / (self.mu * self.epsilon)).ln()
    }

    fn log_eps(&self) -> f64 {
        (1.0 / self.epsilon).ln()
    }
}

/// `1 / (2 (L + Kμ/(1-ρ) + Kδ/(1-ρ) + ρK(L+δ)/(1-ρ)²))`.
pub fn stepsize_thm1(b: &BoundInputs) -> Result<f64, TheoryError> {
    b.check_common()?;
    let k = b.k as f64;
    let gap = 1.0 - b.rho;
    let denom = b.l + k * b.mu / gap + k * b.delta / gap + b.rho * k * (b.l + b.delta) / (gap * gap);
    Ok(1.0 / (2.0 * denom))
}

/// Local DGT, strongly convex.
pub fn rounds_dgt_scvx(b: &BoundInputs) -> Result<f64, TheoryError> {
    b.check_bound()?;
    Ok(dgt_factor(b, b.delta) * b.log_mu_eps())
}

fn dgt_factor(b: &BoundInputs, het: f64) -> f64 {
    let gap = 1.0 - b.rho;
    b.l / (b.mu * (b.k as f64 + 1.0)) + (het + b.mu) / (b.mu * gap) + b.rho * (het + b.l) / (gap * gap * b.mu)
}

/// Local DGT under PL with weak convexity `beta`: `beta` joins `delta` in both
/// network terms. Uses the same logarithm as the strongly convex bound so that
/// `beta = 0` reproduces it exactly.
pub fn rounds_dgt_pl(b: &BoundInputs) -> Result<f64, TheoryError> {
    b.check_bound()?;
    Ok(dgt_factor(b, b.delta + b.beta) * b.log_mu_eps())
}

/// `zeta = 1 - (delta/mu)²`; only meaningful for `delta < mu`.
pub fn zeta(b: &BoundInputs) -> Result<f64, TheoryError> {
    if !(b.mu > 0.0) {
        return Err(domain("mu", b.mu, "mu > 0"));
    }
    if !(b.delta >= 0.0) {
        return Err(domain("delta", b.delta, "delta >= 0"));
    }
    if b.delta >= b.mu {
        return Err(TheoryError::Regime { delta: b.delta, mu: b.mu });
    }
    Ok(1.0 - (b.delta / b.mu).powi(2))
}

/// Local DGD under PL with restricted heterogeneity (`delta < mu`).
pub fn rounds_dgd_pl(b: &BoundInputs) -> Result<f64, TheoryError> {
    b.check_bound()?;
    let z = zeta(b)?;
    let gap = 1.0 - b.rho;
    let v = b.l / (b.mu * (b.k as f64 + 1.0) * z)
        + 1.0 / gap
        + (b.beta + b.rho * b.rho * b.l) / (b.mu * gap * gap * z * z);
    Ok(v * b.log_mu_eps())
}

/// Local DGD on over-parameterized least squares; no `delta < mu` requirement.
pub fn rounds_dgd_ols(b: &BoundInputs) -> Result<f64, TheoryError> {
    b.check_bound()?;
    let gap = 1.0 - b.rho;
    let v = b.l / (b.mu * (b.k as f64 + 1.0)) + b.delta * b.delta / (b.mu * b.mu * gap);
    Ok(v * b.log_eps())
}

/// Local DGT on over-parameterized least squares.
pub fn rounds_dgt_ols(b: &BoundInputs) -> Result<f64, TheoryError> {
    b.check_bound()?;
    Ok(dgt_factor(b, b.delta) * b.log_eps())
}

/// `K★ = ⌊L(1-ρ)² / (ρ(L-μ) + δ + μ)⌋`, clamped at 0.
pub fn optimal_k(b: &BoundInputs) -> Result<usize, TheoryError> {
    b.check_common()?;
    let denom = b.rho * (b.l - b.mu) + b.delta + b.mu;
    if !(denom > 0.0) {
        return Err(domain("rho(L-mu)+delta+mu", denom, "> 0"));
    }
    let v = (b.l * (1.0 - b.rho).powi(2) / denom).floor();
    Ok(if v.is_finite() && v > 0.0 { v as usize } else { 0 })
}
