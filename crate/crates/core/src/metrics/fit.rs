use super::{Measure, MetricsError, RunTrace};

const MIN_POINTS: usize = 5;

/// Least-squares line through `(r, ln value)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl LinearFit {
    /// Per-round contraction factor `exp(slope)`.
    pub fn factor(&self) -> f64 {
        self.slope.exp()
    }
}

/// Fit `ln v_r = a + b r` over `(round, value)` pairs.
///
/// The pairs are cut at the first nonpositive (or missing) value. With no
/// variance in `ln v` the fit is exact and `r² = 1`.
pub fn fit_log_linear(points: &[(usize, Option<f64>)]) -> Result<LinearFit, MetricsError> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .map_while(|&(r, v)| match v {
            Some(v) if v > 0.0 && v.is_finite() => Some((r as f64, v.ln())),
            _ => None,
        })
        .collect();
    if usable.len() < MIN_POINTS {
        return Err(MetricsError::TooFewPoints {
            needed: MIN_POINTS,
            got: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &usable {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // relative to the scale of ln v, anything smaller is rounding noise
    let r_squared = if syy <= 1e-24 * (1.0 + my * my) * n {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        points: usable.len(),
    })
}

/// Fit over the last `last_fraction` of the trace rows.
pub fn fit_linear_rate(trace: &RunTrace, measure: Measure, last_fraction: f64) -> Result<LinearFit, MetricsError> {
    if !(last_fraction > 0.0 && last_fraction <= 1.0) {
        return Err(MetricsError::BadWindow(last_fraction));
    }
    let n = trace.rows.len();
    let take = ((n as f64) * last_fraction).ceil() as usize;
    let start = n - take.min(n);
    let points: Vec<(usize, Option<f64>)> = trace.rows[start..]
        .iter()
        .map(|r| (r.round, r.measure(measure)))
        .collect();
    fit_log_linear(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::trace::synthetic;

    #[test]
    fn geometric_sequence_is_exact() {
        let vals: Vec<f64> = (0..40).map(|r| 3.0 * 0.8_f64.powi(r)).collect();
        let fit = fit_linear_rate(&synthetic(&vals), Measure::AvgGradNorm, 1.0).unwrap();
        assert!((fit.slope - 0.8_f64.ln()).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
        assert!((fit.factor() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn constant_sequence_has_zero_slope() {
        let fit = fit_linear_rate(&synthetic(&[2.0; 12]), Measure::AvgGradNorm, 1.0).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn truncates_at_first_zero() {
        let mut vals: Vec<f64> = (0..10).map(|r| 0.5_f64.powi(r) * (1.0 + 0.1 * (r % 3) as f64)).collect();
        vals.extend([0.0, 1.0, 1.0]);
        let fit = fit_linear_rate(&synthetic(&vals), Measure::AvgGradNorm, 1.0).unwrap();
        assert_eq!(fit.points, 10);
        // manual OLS on the first ten points
        let xs: Vec<f64> = (0..10).map(|r| r as f64).collect();
        let ys: Vec<f64> = vals[..10].iter().map(|v| v.ln()).collect();
        let mx = xs.iter().sum::<f64>() / 10.0;
        let my = ys.iter().sum::<f64>() / 10.0;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        assert!((fit.slope - num / den).abs() < 1e-12);

        let short = [1.0, 0.5, 0.25, 0.0, 1.0, 1.0];
        assert!(matches!(
            fit_linear_rate(&synthetic(&short), Measure::AvgGradNorm, 1.0),
            Err(MetricsError::TooFewPoints { got: 3, .. })
        ));
    }

    #[test]
    fn window_selects_tail() {
        let mut vals = vec![100.0, 1.0, 50.0, 2.0];
        vals.extend((0..8).map(|r| 0.9_f64.powi(r)));
        let fit = fit_linear_rate(&synthetic(&vals), Measure::AvgGradNorm, 8.0 / 12.0).unwrap();
        assert!((fit.slope - 0.9_f64.ln()).abs() < 1e-9);
        assert!(fit_linear_rate(&synthetic(&vals), Measure::AvgGradNorm, 0.0).is_err());
    }
}
