use rand_distr::StandardNormal;
use rand::Rng as _;

use super::{LossKind, Problem, ProblemError};
use crate::linalg::{dist_sq, norm, spectral_norm, symmetric_eigenvalues, DenseMatrix};
use crate::rng;

const POWER_TOL: f64 = 1e-13;
const POWER_ITERS: usize = 200_000;
/// Eigenvalues below this fraction of the largest count as zero.
const NONZERO_REL: f64 = 1e-10;
/// Pairs sampled for the logistic heterogeneity estimate.
const DELTA_PAIRS: usize = 32;
const DELTA_SEED: u64 = 0x5EED_DE17A;

/// Smoothness `L`, strong convexity / PL modulus `mu`, second-order
/// heterogeneity `delta`, weak convexity `beta` and `zeta = 1 - (delta/mu)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemConstants {
    pub l: f64,
    pub mu: f64,
    pub delta: f64,
    pub beta: f64,
    pub zeta: f64,
    /// `false` when `delta` is a sampled lower-bound estimate rather than exact.
    pub delta_exact: bool,
}

impl ProblemConstants {
    pub fn new(l: f64, mu: f64, delta: f64, beta: f64, delta_exact: bool) -> Self {
        ProblemConstants {
            l,
            mu,
            delta,
            beta,
            zeta: zeta_of(delta, mu),
            delta_exact,
        }
    }
}

fn zeta_of(delta: f64, mu: f64) -> f64 {
    if delta == 0.0 {
        1.0
    } else if mu > 0.0 {
        1.0 - (delta / mu).powi(2)
    } else {
        f64::NEG_INFINITY
    }
}

/// Measure `L`, `mu`, `delta` (and `beta = 0`) for a problem.
///
/// Least squares: exact, from `C_i = A_iᵀA_i / n_i` and `C̄ = mean C_i`
/// (`L`/`mu` = largest/smallest nonzero eigenvalue of `C̄`,
/// `delta = max_i ‖C_i - C̄‖₂`). Ridge logistic: `L` is the analytic upper
/// bound `mean_i λmax(A_iᵀA_i)/4 + 2 reg`, `mu = 2 reg`, and `delta` is a
/// sampled difference-quotient lower bound.
pub fn measure_constants(p: &Problem) -> Result<ProblemConstants, ProblemError> {
    let data = p.data();
    if data.m() == 0 || data.total_samples() == 0 {
        return Err(ProblemError::EmptyData);
    }
    match p.kind() {
        LossKind::LeastSquares => least_squares_constants(p),
        LossKind::RidgeLogistic { reg } => logistic_constants(p, reg),
    }
}

fn least_squares_constants(p: &Problem) -> Result<ProblemConstants, ProblemError> {
    let data = p.data();
    let (m, d) = (data.m(), data.d());
    let covs: Vec<DenseMatrix> = data
        .agents()
        .iter()
        .map(|a| a.features.gram_cols().scale(1.0 / a.n() as f64))
        .collect();
    let mut mean = DenseMatrix::zeros(d, d);
    for c in &covs {
        mean = mean.add(c)?;
    }
    let mean = mean.scale(1.0 / m as f64);

    // nonzero spectrum of C̄ = BᵀB equals that of the smaller of BᵀB and BBᵀ,
    // where B stacks the rows a_ij / sqrt(m n_i)
    let n_total = data.total_samples();
    let spectrum = if n_total < d {
        let mut rows = Vec::with_capacity(n_total * d);
        for a in data.agents() {
            let s = 1.0 / ((m * a.n()) as f64).sqrt();
            rows.extend(a.features.as_slice().iter().map(|v| v * s));
        }
        let b = DenseMatrix::from_vec(n_total, d, rows)?;
        symmetric_eigenvalues(&b.gram_rows())?
    } else {
        symmetric_eigenvalues(&mean)?
    };
    let l = spectrum.iter().copied().fold(0.0_f64, f64::max);
    let mu = spectrum
        .iter()
        .copied()
        .filter(|&e| e > NONZERO_REL * l)
        .fold(f64::INFINITY, f64::min);
    let mu = if mu.is_finite() { mu } else { 0.0 };

    let mut delta = 0.0_f64;
    for c in &covs {
        let diff = c.sub(&mean)?;
        delta = delta.max(spectral_norm(&diff, POWER_TOL, POWER_ITERS)?);
    }
    Ok(ProblemConstants::new(l, mu, delta, 0.0, true))
}

fn logistic_constants(p: &Problem, reg: f64) -> Result<ProblemConstants, ProblemError> {
    let data = p.data();
    let (m, d) = (data.m(), data.d());
    let mut l = 0.0;
    for a in data.agents() {
        l += 0.25 * spectral_norm(&a.features.gram_cols(), POWER_TOL, POWER_ITERS)?;
    }
    let l = l / m as f64 + 2.0 * reg;
    let mu = 2.0 * reg;

    let mut rng = rng::seeded(DELTA_SEED);
    let mut delta = 0.0_f64;
    let mut gx = vec![vec![0.0; d]; m];
    let mut gy = vec![vec![0.0; d]; m];
    for _ in 0..DELTA_PAIRS {
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let dxy = dist_sq(&x, &y).sqrt();
        if dxy == 0.0 {
            continue;
        }
        for i in 0..m {
            p.gradient_into(i, &x, &mut gx[i]);
            p.gradient_into(i, &y, &mut gy[i]);
        }
        let mean_diff = mean_difference(&gx, &gy, d);
        for i in 0..m {
            let h: Vec<f64> = (0..d)
                .map(|k| mean_diff[k] - (gx[i][k] - gy[i][k]))
                .collect();
            delta = delta.max(norm(&h) / dxy);
        }
    }
    Ok(ProblemConstants::new(l, mu, delta, 0.0, false))
}

fn mean_difference(gx: &[Vec<f64>], gy: &[Vec<f64>], d: usize) -> Vec<f64> {
    let m = gx.len() as f64;
    let mut out = vec![0.0; d];
    for (a, b) in gx.iter().zip(gy) {
        for k in 0..d {
            out[k] += a[k] - b[k];
        }
    }
    out.iter_mut().for_each(|v| *v /= m);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_quadratic_constants() {
        let p = Problem::scalar_quadratics(&[1.0, 3.0], &[0.0, 0.0]).unwrap();
        let c = measure_constants(&p).unwrap();
        assert!((c.l - 2.0).abs() < 1e-12, "{c:?}");
        assert!((c.mu - 2.0).abs() < 1e-12);
        assert!((c.delta - 1.0).abs() < 1e-12);
        assert_eq!(c.beta, 0.0);
        assert!(c.delta_exact);
    }

    #[test]
    fn single_or_identical_agents_have_no_heterogeneity() {
        let p = Problem::scalar_quadratics(&[4.0], &[1.0]).unwrap();
        assert_eq!(measure_constants(&p).unwrap().delta, 0.0);
        let p = Problem::scalar_quadratics(&[2.0, 2.0, 2.0], &[1.0, -1.0, 0.0]).unwrap();
        let c = measure_constants(&p).unwrap();
        assert!(c.delta < 1e-14);
        assert_eq!(c.zeta, 1.0 - (c.delta / c.mu).powi(2));
    }

    #[test]
    fn zeta_edge_cases() {
        assert_eq!(zeta_of(0.0, 0.0), 1.0);
        assert_eq!(zeta_of(0.5, 1.0), 0.75);
        assert_eq!(zeta_of(1.0, 0.0), f64::NEG_INFINITY);
    }
}
