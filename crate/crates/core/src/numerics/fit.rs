//! Least-squares line fits, used for scaling-exponent regressions and
//! blow-up time estimation.

/// Ordinary least squares y = a + b x. Returns (intercept, slope, slope
/// standard error). The standard error comes from the residual variance with
/// n - 2 degrees of freedom; for n = 2 it degenerates to 0.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = xs.len().saturating_sub(2);
    let se = if dof == 0 {
        0.0
    } else {
        let ssr: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        (ssr / dof as f64 / sxx).sqrt()
    };
    (intercept, slope, se)
}

/// Log-log power-law fit of (x, y) pairs; returns (slope, slope standard
/// error, intercept of ln y vs ln x).
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (intercept, slope, se) = linear_fit(&lx, &ly);
    (slope, se, intercept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let xs = [1.0, 10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.6)).collect();
        let (slope, se, _) = loglog_fit(&xs, &ys);
        assert!((slope + 0.6).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn stderr_reflects_scatter() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [1.0, 2.2, 2.8, 4.3, 4.9];
        let (_, slope, se) = linear_fit(&xs, &ys);
        assert!((slope - 1.0).abs() < 0.2);
        assert!(se > 0.0);
    }
}
