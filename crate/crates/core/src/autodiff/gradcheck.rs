/// Outcome of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Coordinate where the worst error occurred.
    pub worst_index: usize,
    pub numeric: Vec<f64>,
}

/// Compares `analytic` with central differences `(f(θ+h·e_i) − f(θ−h·e_i)) / 2h`.
///
/// Relative error per coordinate is `|g_a − g_n| / max(1, |g_a|, |g_n|)`.
pub fn grad_check(
    mut f: impl FnMut(&[f64]) -> f64,
    analytic: &[f64],
    params: &[f64],
    h: f64,
) -> GradCheckReport {
    assert!(h > 0.0, "finite-difference step must be positive");
    assert_eq!(analytic.len(), params.len());
    let mut theta = params.to_vec();
    let mut numeric = Vec::with_capacity(params.len());
    let mut worst = (0.0f64, 0usize);
    for i in 0..theta.len() {
        let orig = theta[i];
        theta[i] = orig + h;
        let fp = f(&theta);
        theta[i] = orig - h;
        let fm = f(&theta);
        theta[i] = orig;
        let gn = (fp - fm) / (2.0 * h);
        let ga = analytic[i];
        let rel = (ga - gn).abs() / 1f64.max(ga.abs()).max(gn.abs());
        if rel > worst.0 || rel.is_nan() {
            worst = (rel, i);
        }
        numeric.push(gn);
    }
    GradCheckReport {
        max_rel_err: worst.0,
        worst_index: worst.1,
        numeric,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let theta = [1.0, 2.0];
        let r = grad_check(|t| t.iter().map(|x| x * x).sum(), &[2.0, 4.0], &theta, 1e-5);
        assert!(r.max_rel_err < 1e-9, "{r:?}");
    }

    #[test]
    fn softplus_slope_at_zero() {
        let softplus = |t: &[f64]| (1.0 + t[0].exp()).ln();
        let r = grad_check(softplus, &[0.5], &[0.0], 1e-5);
        assert!((r.numeric[0] - 0.5).abs() < 1e-8);
        assert!(r.max_rel_err < 1e-8);
    }

    #[test]
    fn wrong_gradient_is_reported() {
        let r = grad_check(|t| t[0] * t[0], &[1.0], &[3.0], 1e-5);
        assert!((r.max_rel_err - 5.0 / 6.0).abs() < 1e-6);
        assert_eq!(r.worst_index, 0);
    }
}
