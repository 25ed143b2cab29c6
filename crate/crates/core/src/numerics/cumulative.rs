//! Prefix integrals of sampled functions. Integrates the local-cubic
//! interpolant cell by cell (two-point Gauss nodes are exact for cubics), so
//! window integrals of radiation profiles cost O(1) after construction.

use super::interp;

const GL2_X: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    xs: Vec<f64>,
    ys: Vec<f64>,
    prefix: Vec<f64>,
}

impl CumulativeIntegral {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2);
        let mut prefix = vec![0.0; xs.len()];
        for i in 0..xs.len() - 1 {
            prefix[i + 1] = prefix[i] + cell_integral(xs, ys, xs[i], xs[i + 1], i);
        }
        Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            prefix,
        }
    }

    /// Integral from the first node to `x` (clamped to the sampled span).
    pub fn prefix(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return self.prefix[n - 1];
        }
        let i = interp::cell_index(&self.xs, x);
        self.prefix[i] + cell_integral(&self.xs, &self.ys, self.xs[i], x, i)
    }

    /// Integral over the window [a, b] intersected with the sampled span.
    pub fn window(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.prefix(b) - self.prefix(a)
    }

    pub fn total(&self) -> f64 {
        *self.prefix.last().unwrap()
    }
}

fn cell_integral(xs: &[f64], ys: &[f64], a: f64, b: f64, _cell: usize) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    h * (interp::cubic(xs, ys, c - h * GL2_X) + interp::cubic(xs, ys, c + h * GL2_X))
}

/// Exact window integrals of a piecewise-linear density and of its square and
/// absolute value. This is the representation contract for sampled radiation
/// profiles: the sampled function IS the broken line through the nodes, so
/// every integral below is exact (jumps are modelled by doubled nodes).
#[derive(Debug, Clone)]
pub struct LinearDensity {
    xs: Vec<f64>,
    ys: Vec<f64>,
    pre_g: Vec<f64>,
    pre_g2: Vec<f64>,
    pre_gabs: Vec<f64>,
}

fn lin_int(y0: f64, y1: f64, w: f64) -> f64 {
    0.5 * w * (y0 + y1)
}

fn lin_sq_int(y0: f64, y1: f64, w: f64) -> f64 {
    w * (y0 * y0 + y0 * y1 + y1 * y1) / 3.0
}

fn lin_abs_int(y0: f64, y1: f64, w: f64) -> f64 {
    if y0 * y1 >= 0.0 {
        lin_int(y0, y1, w).abs()
    } else {
        let x_star = w * y0 / (y0 - y1);
        0.5 * (x_star * y0.abs() + (w - x_star) * y1.abs())
    }
}

impl LinearDensity {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2);
        let n = xs.len();
        let mut pre_g = vec![0.0; n];
        let mut pre_g2 = vec![0.0; n];
        let mut pre_gabs = vec![0.0; n];
        for i in 0..n - 1 {
            let w = xs[i + 1] - xs[i];
            pre_g[i + 1] = pre_g[i] + lin_int(ys[i], ys[i + 1], w);
            pre_g2[i + 1] = pre_g2[i] + lin_sq_int(ys[i], ys[i + 1], w);
            pre_gabs[i + 1] = pre_gabs[i] + lin_abs_int(ys[i], ys[i + 1], w);
        }
        Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            pre_g,
            pre_g2,
            pre_gabs,
        }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        if x < self.xs[0] || x > *self.xs.last().unwrap() {
            return 0.0;
        }
        interp::linear(&self.xs, &self.ys, x)
    }

    fn prefix_of(&self, x: f64, which: Which) -> f64 {
        let n = self.xs.len();
        let pre = match which {
            Which::G => &self.pre_g,
            Which::G2 => &self.pre_g2,
            Which::GAbs => &self.pre_gabs,
        };
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return pre[n - 1];
        }
        let i = interp::cell_index(&self.xs, x);
        let w = x - self.xs[i];
        let ylo = self.ys[i];
        let yx = interp::linear(&self.xs, &self.ys, x);
        pre[i]
            + match which {
                Which::G => lin_int(ylo, yx, w),
                Which::G2 => lin_sq_int(ylo, yx, w),
                Which::GAbs => lin_abs_int(ylo, yx, w),
            }
    }

    pub fn window_g(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.prefix_of(b, Which::G) - self.prefix_of(a, Which::G)
    }

    pub fn window_g2(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.prefix_of(b, Which::G2) - self.prefix_of(a, Which::G2)
    }

    pub fn window_gabs(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.prefix_of(b, Which::GAbs) - self.prefix_of(a, Which::GAbs)
    }

    pub fn total_g(&self) -> f64 {
        *self.pre_g.last().unwrap()
    }

    pub fn total_g2(&self) -> f64 {
        *self.pre_g2.last().unwrap()
    }
}

#[derive(Clone, Copy)]
enum Which {
    G,
    G2,
    GAbs,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_of_cubic_is_exact() {
        let xs: Vec<f64> = (0..50).map(|i| -2.0 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x * x * x - x + 1.0).collect();
        let c = CumulativeIntegral::new(&xs, &ys);
        let exact = |x: f64| 0.25 * x.powi(4) - 0.5 * x * x + x;
        for &(a, b) in &[(-2.0, 2.0), (-1.35, 0.4), (0.0, 2.79)] {
            assert!((c.window(a, b) - (exact(b) - exact(a))).abs() < 1e-12);
        }
    }

    #[test]
    fn window_clamps_to_span() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [1.0, 1.0, 1.0];
        let c = CumulativeIntegral::new(&xs, &ys);
        assert!((c.window(-5.0, 5.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn linear_density_exact_windows() {
        // broken line: 0 on [-1,0], ramp to 2 on [0,1], back to 0 on [1,2]
        let xs = [-1.0, 0.0, 1.0, 2.0];
        let ys = [0.0, 0.0, 2.0, 0.0];
        let d = LinearDensity::new(&xs, &ys);
        assert!((d.window_g(-1.0, 2.0) - 2.0).abs() < 1e-15);
        assert!((d.window_g(0.0, 0.5) - 0.25).abs() < 1e-15);
        // integral of (2x)^2 over [0,1] = 4/3, of (2-2(x-1))^2 over [1,2] = 4/3
        assert!((d.window_g2(-1.0, 2.0) - 8.0 / 3.0).abs() < 1e-14);
        // sign-changing segment: |.| splits at the zero crossing
        let e = LinearDensity::new(&[0.0, 1.0], &[-1.0, 1.0]);
        assert!((e.window_gabs(0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((e.window_g(0.0, 1.0) - 0.0).abs() < 1e-15);
    }
}
