//! Local polynomial interpolation on sorted 1D grids.

/// Index of the last node `<= x` (clamped to `[0, n-2]`), by binary search.
pub fn cell_index(xs: &[f64], x: f64) -> usize {
    match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(xs.len() - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(xs.len() - 2),
    }
}

/// Four-point (cubic) Lagrange interpolation centred on the cell containing x.
/// Falls back to the available stencil near the ends; linear for 2-3 nodes.
pub fn cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return ys[0];
    }
    if n < 4 {
        let i = cell_index(xs, x);
        let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return ys[i] * (1.0 - t) + ys[i + 1] * t;
    }
    let i = cell_index(xs, x);
    let lo = i.saturating_sub(1).min(n - 4);
    lagrange4(&xs[lo..lo + 4], &ys[lo..lo + 4], x)
}

fn lagrange4(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..4 {
        let mut term = ys[j];
        for k in 0..4 {
            if k != j {
                term *= (x - xs[k]) / (xs[j] - xs[k]);
            }
        }
        acc += term;
    }
    acc
}

/// Linear interpolation (used along characteristics where locality beats order).
pub fn linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 || x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = cell_index(xs, x);
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] * (1.0 - t) + ys[i + 1] * t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_cubics_exactly() {
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
        let f = |x: f64| 2.0 - x + 3.0 * x * x - 0.25 * x * x * x;
        let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        for &x in &[0.1, 1.7, 3.14, 5.49] {
            assert!((cubic(&xs, &ys, x) - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_index_clamps() {
        let xs = [1.0, 2.0, 3.0];
        assert_eq!(cell_index(&xs, 0.5), 0);
        assert_eq!(cell_index(&xs, 2.5), 1);
        assert_eq!(cell_index(&xs, 9.0), 1);
    }
}
