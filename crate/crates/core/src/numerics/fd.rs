//! Finite-difference derivatives on uniformly spaced samples (in the raw
//! coordinate or in log-coordinate for geometric grids).

/// Fourth-order first derivatives of `ys` sampled at uniform spacing `h`.
/// Interior nodes use the 5-point central stencil; the outermost two nodes on
/// each side use one-sided 5-point stencils of the same order.
pub fn derivative4_uniform(ys: &[f64], h: f64) -> Vec<f64> {
    let n = ys.len();
    assert!(n >= 5, "need at least 5 samples for 4th-order differences");
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (ys[i - 2] - 8.0 * ys[i - 1] + 8.0 * ys[i + 1] - ys[i + 2]) / (12.0 * h);
    }
    // one-sided: f'(x0) and f'(x1)
    d[0] = (-25.0 * ys[0] + 48.0 * ys[1] - 36.0 * ys[2] + 16.0 * ys[3] - 3.0 * ys[4]) / (12.0 * h);
    d[1] = (-3.0 * ys[0] - 10.0 * ys[1] + 18.0 * ys[2] - 6.0 * ys[3] + ys[4]) / (12.0 * h);
    d[n - 1] = (25.0 * ys[n - 1] - 48.0 * ys[n - 2] + 36.0 * ys[n - 3] - 16.0 * ys[n - 4]
        + 3.0 * ys[n - 5])
        / (12.0 * h);
    d[n - 2] = (3.0 * ys[n - 1] + 10.0 * ys[n - 2] - 18.0 * ys[n - 3] + 6.0 * ys[n - 4]
        - ys[n - 5])
        / (12.0 * h);
    d
}

/// Second-order first derivatives (central; one-sided second-order ends).
pub fn derivative2_uniform(ys: &[f64], h: f64) -> Vec<f64> {
    let n = ys.len();
    assert!(n >= 3);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (ys[i + 1] - ys[i - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) / (2.0 * h);
    d[n - 1] = (3.0 * ys[n - 1] - 4.0 * ys[n - 2] + ys[n - 3]) / (2.0 * h);
    d
}

/// Second derivative on a possibly non-uniform grid by the 3-point formula;
/// one-sided 4-point stencils at the two boundary nodes.
pub fn second_derivative_3pt(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert!(n >= 3);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let hm = xs[i] - xs[i - 1];
        let hp = xs[i + 1] - xs[i];
        d[i] = 2.0 * (hm * ys[i + 1] - (hm + hp) * ys[i] + hp * ys[i - 1])
            / (hm * hp * (hm + hp));
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative4_on_quartic_is_exact() {
        let h = 0.1;
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x.powi(4) - 2.0 * x * x + 3.0).collect();
        let d = derivative4_uniform(&ys, h);
        for (i, &x) in xs.iter().enumerate() {
            let exact = 4.0 * x.powi(3) - 4.0 * x;
            assert!((d[i] - exact).abs() < 1e-10, "i={i}");
        }
    }

    #[test]
    fn second_derivative_nonuniform_second_order() {
        let xs: Vec<f64> = (0..200).map(|i| 0.1 * 1.01f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x.sin()).collect();
        let d = second_derivative_3pt(&xs, &ys);
        for i in 50..150 {
            assert!((d[i] + xs[i].sin()).abs() < 5e-4, "i={i} err={}", (d[i] + xs[i].sin()).abs());
        }
    }
}
