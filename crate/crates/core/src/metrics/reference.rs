//! Centralized reference solutions used for `F_r` and `‖x̄ - x⋆‖`.

use super::MetricsError;
use crate::linalg::{axpy, dot, min_norm_solution, norm, spd_solve, DenseMatrix, Vector};
use crate::problems::{LossKind, Problem};

const NEWTON_MAX_ITERS: usize = 200;
const GRAD_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceOptimum {
    pub f_star: f64,
    /// The minimizer `dist_min_norm` is measured against (least squares only).
    pub x_star: Option<Vector>,
    /// `‖∇f‖` at the returned solution.
    pub grad_norm: f64,
}

/// Solve `min f` centrally.
///
/// Least squares with fewer stacked rows than unknowns uses the min-norm
/// interpolant and `f⋆ = 0`; otherwise the (weighted) normal equations.
/// Ridge logistic runs damped Newton to `‖∇f‖ ≤ 1e-12`, relaxed to the
/// rounding floor of the gradient sum when that is larger.
pub fn reference_optimum(p: &Problem) -> Result<ReferenceOptimum, MetricsError> {
    match p.kind() {
        LossKind::LeastSquares => least_squares(p),
        LossKind::RidgeLogistic { reg } => logistic(p, reg),
    }
}

fn least_squares(p: &Problem) -> Result<ReferenceOptimum, MetricsError> {
    let data = p.data();
    let d = data.d();
    let fail = |e: crate::linalg::LinalgError| MetricsError::OracleFailed(e.to_string());
    if data.total_samples() < d {
        let (a, b) = data.stacked();
        let x = min_norm_solution(&a, &b).map_err(fail)?;
        let g = p.average_gradient(&x)?;
        return Ok(ReferenceOptimum {
            f_star: 0.0,
            grad_norm: g.norm(),
            x_star: Some(x),
        });
    }
    let m = data.m() as f64;
    let mut h = DenseMatrix::zeros(d, d);
    let mut rhs = vec![0.0; d];
    for a in data.agents() {
        let w = 1.0 / (m * a.n() as f64);
        h = h.add(&a.features.gram_cols().scale(w)).map_err(fail)?;
        let atb = a.features.tr_matvec(&a.targets).map_err(fail)?;
        axpy(w, &atb, &mut rhs);
    }
    let x = spd_solve(&h, &rhs).map_err(fail)?;
    let f_star = p.average_value(&x)?;
    let grad_norm = p.average_gradient(&x)?.norm();
    Ok(ReferenceOptimum {
        f_star,
        x_star: Some(x),
        grad_norm,
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logistic_hessian(p: &Problem, reg: f64, x: &[f64]) -> DenseMatrix {
    let d = p.d();
    let mut h = vec![0.0; d * d];
    let inv_m = 1.0 / p.m() as f64;
    for a in p.data().agents() {
        for row in a.features.rows_iter() {
            let s = sigmoid(dot(row, x));
            let w = s * (1.0 - s) * inv_m;
            if w == 0.0 {
                continue;
            }
            for r in 0..d {
                let wr = w * row[r];
                axpy(wr, row, &mut h[r * d..(r + 1) * d]);
            }
        }
    }
    for r in 0..d {
        h[r * d + r] += 2.0 * reg;
    }
    DenseMatrix::from_vec(d, d, h).expect("square")
}

fn logistic(p: &Problem, reg: f64) -> Result<ReferenceOptimum, MetricsError> {
    let d = p.d();
    // rounding floor of the summed gradient: a few ulps of Σ‖a‖
    let scale: f64 = p
        .data()
        .agents()
        .iter()
        .map(|a| a.features.rows_iter().map(norm).sum::<f64>())
        .sum::<f64>()
        / p.m() as f64;
    let tol = GRAD_TOL.max(64.0 * f64::EPSILON * scale);

    let mut x = vec![0.0; d];
    let mut f = p.average_value(&x)?;
    for _ in 0..NEWTON_MAX_ITERS {
        let g = p.average_gradient(&x)?;
        let gn = g.norm();
        if gn <= tol {
            return Ok(ReferenceOptimum {
                f_star: f,
                x_star: None,
                grad_norm: gn,
            });
        }
        let h = logistic_hessian(p, reg, &x);
        let step = spd_solve(&h, &g).map_err(|e| MetricsError::OracleFailed(e.to_string()))?;
        let slope = -dot(&g, &step);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, si)| xi - t * si).collect();
            let ft = p.average_value(&trial)?;
            if ft <= f + 1e-4 * t * slope || (ft <= f && t < 1.0) {
                x = trial;
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // no representable decrease left: accept only if already at the floor
            if gn <= 1e3 * tol {
                return Ok(ReferenceOptimum {
                    f_star: f,
                    x_star: None,
                    grad_norm: gn,
                });
            }
            return Err(MetricsError::OracleFailed(format!(
                "line search stalled at ‖∇f‖ = {gn:e}"
            )));
        }
    }
    let gn = p.average_gradient(&x)?.norm();
    if gn <= tol {
        Ok(ReferenceOptimum {
            f_star: f,
            x_star: None,
            grad_norm: gn,
        })
    } else {
        Err(MetricsError::OracleFailed(format!(
            "no convergence after {NEWTON_MAX_ITERS} Newton steps, ‖∇f‖ = {gn:e}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{overparam_ols, AgentData, Dataset, OverparamOlsConfig};

    #[test]
    fn planted_ols_has_zero_optimum() {
        let planted = overparam_ols(&OverparamOlsConfig {
            m: 3,
            n_per_agent: 2,
            d: 15,
            heterogeneity: 0.5,
            seed: 4,
        })
        .unwrap();
        let r = reference_optimum(&planted.problem).unwrap();
        assert_eq!(r.f_star, 0.0);
        assert!(r.grad_norm <= 1e-8);
        assert_eq!(r.x_star.unwrap().dim(), 15);
    }

    #[test]
    fn heavy_ridge_pins_origin() {
        let a = DenseMatrix::from_rows(&[vec![1.0, -0.5]]).unwrap();
        let data = Dataset::new(2, vec![AgentData::new(a, vec![1.0]).unwrap()]).unwrap();
        let p = Problem::ridge_logistic(data, 1e3).unwrap();
        let r = reference_optimum(&p).unwrap();
        assert!((r.f_star - std::f64::consts::LN_2).abs() < 1e-3, "{}", r.f_star);
        assert!(r.x_star.is_none());
        let again = reference_optimum(&p).unwrap();
        assert!((again.f_star - r.f_star).abs() <= 1e-10);
    }

    #[test]
    fn quadratic_pair_minimizer() {
        // f = ((x-1)² + 3(x+1)²)/4, minimized at x = -1/2
        let p = Problem::scalar_quadratics(&[1.0, 3.0], &[1.0, -1.0]).unwrap();
        let r = reference_optimum(&p).unwrap();
        let x = r.x_star.unwrap();
        assert!((x[0] + 0.5).abs() < 1e-14);
        let direct = (1.5_f64.powi(2) + 3.0 * 0.5_f64.powi(2)) / 4.0;
        assert!((r.f_star - direct).abs() < 1e-14);
    }
}
