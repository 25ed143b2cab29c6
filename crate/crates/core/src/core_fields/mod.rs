//! Grids, radial profiles, energy-space pairs, channel-like space-time
//! regions and the quadrature engines behind the energy and Strichartz-type
//! norms used by every other module.

mod norms;

pub use norms::{h_norm, l1l2_norm, y_norm, FnField, NormValue, SpaceTimeField};
pub(crate) use norms::integrate_radial_samples;

use crate::numerics::{fd, interp};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("r_min must be positive, got {0}")]
    NonpositiveRmin(f64),
    #[error("grid needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("r_max {r_max} must exceed r_min {r_min}")]
    BadRange { r_min: f64, r_max: f64 },
    #[error("profile carries {values} values for {nodes} grid nodes")]
    LengthMismatch { values: usize, nodes: usize },
    #[error("tail exponent must exceed 1/2 for finite exterior energy, got {0}")]
    ShallowTail(f64),
    #[error("state components live on different grids")]
    GridMismatch,
    #[error("window reaches r = {r:.6e} beyond r_max = {r_max:.6e} and the profile has no tail exponent")]
    TailRequired { r: f64, r_max: f64 },
    #[error("velocity tail exponent {0} too shallow for square integrability (need > 3/2)")]
    ShallowVelocityTail(f64),
    #[error("negative norm radius {0}")]
    NegativeRadius(f64),
    #[error("invalid channel bounds r1 = {r1}, r2 = {r2}")]
    BadChannel { r1: f64, r2: f64 },
    #[error("truncation cap {cap} must exceed the outer channel radius {r2}")]
    BadCap { cap: f64, r2: f64 },
    #[error("time window must be positive, got {0}")]
    BadTimeWindow(f64),
    #[error(transparent)]
    Quad(#[from] crate::numerics::quad::QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GridScheme {
    Uniform,
    Logarithmic,
}

/// A strictly increasing set of radii, either uniform or geometric.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    scheme: GridScheme,
}

/// Builds a grid of `n` nodes spanning [r_min, r_max].
pub fn make_grid(r_min: f64, r_max: f64, n: usize, scheme: GridScheme) -> Result<RadialGrid, FieldError> {
    if !(r_min > 0.0) {
        return Err(FieldError::NonpositiveRmin(r_min));
    }
    if n < 2 {
        return Err(FieldError::TooFewNodes(n));
    }
    if !(r_max > r_min) {
        return Err(FieldError::BadRange { r_min, r_max });
    }
    let mut nodes = Vec::with_capacity(n);
    match scheme {
        GridScheme::Uniform => {
            let h = (r_max - r_min) / (n - 1) as f64;
            for i in 0..n {
                nodes.push(r_min + h * i as f64);
            }
        }
        GridScheme::Logarithmic => {
            let lr = (r_max / r_min).ln() / (n - 1) as f64;
            for i in 0..n {
                nodes.push(r_min * (lr * i as f64).exp());
            }
        }
    }
    // pin endpoints exactly
    nodes[0] = r_min;
    nodes[n - 1] = r_max;
    RadialGrid::from_nodes(nodes, scheme)
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>, scheme: GridScheme) -> Result<Self, FieldError> {
        if nodes.len() < 2 {
            return Err(FieldError::TooFewNodes(nodes.len()));
        }
        if !(nodes[0] > 0.0) {
            return Err(FieldError::NonpositiveRmin(nodes[0]));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(FieldError::BadRange {
                    r_min: w[1],
                    r_max: w[0],
                });
            }
        }
        if scheme == GridScheme::Logarithmic {
            let q0 = nodes[1] / nodes[0];
            for w in nodes.windows(2) {
                let q = w[1] / w[0];
                if (q / q0 - 1.0).abs() > 1e-12 {
                    return Err(FieldError::BadRange {
                        r_min: w[0],
                        r_max: w[1],
                    });
                }
            }
        }
        Ok(Self { nodes, scheme })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// A grid with every node multiplied by `factor` (same scheme).
    pub fn dilated(&self, factor: f64) -> Result<Self, FieldError> {
        Self::from_nodes(self.nodes.iter().map(|r| r * factor).collect(), self.scheme)
    }
}

/// A sampled radial function with an optional single-power tail
/// f(r) ~ f(r_max) (r / r_max)^(-p) used to extend integrals beyond the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
    tail_exponent: Option<f64>,
}

impl RadialProfile {
    pub fn new(
        grid: RadialGrid,
        values: Vec<f64>,
        tail_exponent: Option<f64>,
    ) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                values: values.len(),
                nodes: grid.len(),
            });
        }
        if let Some(p) = tail_exponent {
            if !(p > 0.5) {
                return Err(FieldError::ShallowTail(p));
            }
        }
        Ok(Self {
            grid,
            values,
            tail_exponent,
        })
    }

    pub fn sample<F: Fn(f64) -> f64>(
        grid: RadialGrid,
        f: F,
        tail_exponent: Option<f64>,
    ) -> Result<Self, FieldError> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, tail_exponent)
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        let values = vec![0.0; grid.len()];
        Self {
            grid,
            values,
            tail_exponent: None,
        }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_exponent(&self) -> Option<f64> {
        self.tail_exponent
    }

    /// Interpolated value; beyond r_max the tail model applies (0 without one).
    pub fn value_at(&self, r: f64) -> f64 {
        let rmax = self.grid.r_max();
        if r > rmax {
            return match self.tail_exponent {
                Some(p) => self.values[self.values.len() - 1] * (r / rmax).powf(-p),
                None => 0.0,
            };
        }
        interp::cubic(self.grid.nodes(), &self.values, r)
    }

    /// Fourth-order finite-difference derivative at the nodes (computed in
    /// log-coordinate on geometric grids).
    pub fn derivative_samples(&self) -> Vec<f64> {
        match self.grid.scheme {
            GridScheme::Uniform => {
                let h = self.grid.nodes[1] - self.grid.nodes[0];
                fd::derivative4_uniform(&self.values, h)
            }
            GridScheme::Logarithmic => {
                let hx = (self.grid.nodes[1] / self.grid.nodes[0]).ln();
                let dx = fd::derivative4_uniform(&self.values, hx);
                dx.iter()
                    .zip(self.grid.nodes())
                    .map(|(d, r)| d / r)
                    .collect()
            }
        }
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> Self {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| f(r, v))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
            tail_exponent: self.tail_exponent,
        }
    }
}

/// An energy-space pair (u, u_t) on a shared grid. The position component may
/// carry exact gradient samples; norms fall back to finite differences
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    u0: RadialProfile,
    u1: RadialProfile,
    u0_gradient: Option<Vec<f64>>,
}

impl StatePair {
    pub fn new(u0: RadialProfile, u1: RadialProfile) -> Result<Self, FieldError> {
        if u0.grid() != u1.grid() {
            return Err(FieldError::GridMismatch);
        }
        if let Some(q) = u1.tail_exponent() {
            if !(q > 1.5) {
                return Err(FieldError::ShallowVelocityTail(q));
            }
        }
        Ok(Self {
            u0,
            u1,
            u0_gradient: None,
        })
    }

    pub fn with_gradient(mut self, gradient: Vec<f64>) -> Result<Self, FieldError> {
        if gradient.len() != self.u0.grid().len() {
            return Err(FieldError::LengthMismatch {
                values: gradient.len(),
                nodes: self.u0.grid().len(),
            });
        }
        self.u0_gradient = Some(gradient);
        Ok(self)
    }

    pub fn u0(&self) -> &RadialProfile {
        &self.u0
    }

    pub fn u1(&self) -> &RadialProfile {
        &self.u1
    }

    pub fn grid(&self) -> &RadialGrid {
        self.u0.grid()
    }

    /// Gradient samples of the position component: stored exact values when
    /// available, finite differences otherwise.
    pub fn u0_gradient_samples(&self) -> Vec<f64> {
        match &self.u0_gradient {
            Some(g) => g.clone(),
            None => self.u0.derivative_samples(),
        }
    }

    pub fn stored_gradient(&self) -> Option<&[f64]> {
        self.u0_gradient.as_deref()
    }
}

/// Space-time channel-like regions around the outgoing light cone.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ChannelRegion {
    /// |x| > |t| + R
    Exterior { radius: f64 },
    /// |t| + r1 < |x| < |t| + r2
    Channel { r1: f64, r2: f64 },
    /// channel additionally capped by |x| + |t| < cap
    TruncatedChannel { r1: f64, r2: f64, cap: f64 },
}

impl ChannelRegion {
    pub fn exterior(radius: f64) -> Result<Self, FieldError> {
        if radius < 0.0 {
            return Err(FieldError::NegativeRadius(radius));
        }
        Ok(ChannelRegion::Exterior { radius })
    }

    pub fn channel(r1: f64, r2: f64) -> Result<Self, FieldError> {
        if !(0.0 <= r1 && r1 < r2) {
            return Err(FieldError::BadChannel { r1, r2 });
        }
        Ok(ChannelRegion::Channel { r1, r2 })
    }

    pub fn truncated(r1: f64, r2: f64, cap: f64) -> Result<Self, FieldError> {
        if !(0.0 <= r1 && r1 < r2) {
            return Err(FieldError::BadChannel { r1, r2 });
        }
        if !(cap > r2) {
            return Err(FieldError::BadCap { cap, r2 });
        }
        Ok(ChannelRegion::TruncatedChannel { r1, r2, cap })
    }

    /// Radial extent (lo, hi) of the region's slice at time t; `None` when the
    /// slice is empty, `hi = None` for unbounded slices.
    pub fn slice(&self, t: f64) -> Option<(f64, Option<f64>)> {
        let a = t.abs();
        match *self {
            ChannelRegion::Exterior { radius } => Some((a + radius, None)),
            ChannelRegion::Channel { r1, r2 } => Some((a + r1, Some(a + r2))),
            ChannelRegion::TruncatedChannel { r1, r2, cap } => {
                let lo = a + r1;
                let hi = (a + r2).min(cap - a);
                if hi > lo {
                    Some((lo, Some(hi)))
                } else {
                    None
                }
            }
        }
    }

    /// Times beyond which every slice is empty (only truncated channels).
    pub fn time_support(&self) -> Option<f64> {
        match *self {
            ChannelRegion::TruncatedChannel { r1, cap, .. } => Some(0.5 * (cap - r1)),
            _ => None,
        }
    }

    /// True when slices keep a bounded width as |t| grows.
    pub fn bounded_width(&self) -> bool {
        !matches!(self, ChannelRegion::Exterior { .. })
    }

    pub fn contains(&self, r: f64, t: f64) -> bool {
        match self.slice(t) {
            None => false,
            Some((lo, hi)) => r > lo && hi.map_or(true, |h| r < h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_spans_decades() {
        let g = make_grid(1e-6, 1e6, 13, GridScheme::Logarithmic).unwrap();
        for (i, &r) in g.nodes().iter().enumerate() {
            let expect = 1e-6 * 10f64.powi(i as i32);
            assert!((r / expect - 1.0).abs() < 1e-12, "node {i}: {r} vs {expect}");
        }
    }

    #[test]
    fn uniform_two_node_grid() {
        let g = make_grid(1.0, 2.0, 2, GridScheme::Uniform).unwrap();
        assert_eq!(g.nodes(), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_nonpositive_rmin() {
        assert!(matches!(
            make_grid(0.0, 1.0, 10, GridScheme::Uniform),
            Err(FieldError::NonpositiveRmin(_))
        ));
        assert!(matches!(
            make_grid(1.0, 2.0, 1, GridScheme::Uniform),
            Err(FieldError::TooFewNodes(1))
        ));
    }

    #[test]
    fn profile_rejects_shallow_tail() {
        let g = make_grid(1.0, 10.0, 16, GridScheme::Uniform).unwrap();
        assert!(matches!(
            RadialProfile::new(g, vec![0.0; 16], Some(0.3)),
            Err(FieldError::ShallowTail(_))
        ));
    }

    #[test]
    fn state_pair_requires_shared_grid() {
        let g1 = make_grid(1.0, 10.0, 16, GridScheme::Uniform).unwrap();
        let g2 = make_grid(1.0, 10.0, 17, GridScheme::Uniform).unwrap();
        let a = RadialProfile::zeros(g1);
        let b = RadialProfile::zeros(g2);
        assert!(matches!(StatePair::new(a, b), Err(FieldError::GridMismatch)));
    }

    #[test]
    fn truncated_channel_slices_close() {
        let reg = ChannelRegion::truncated(0.0, 1.0, 10.0).unwrap();
        assert!(reg.slice(0.0).is_some());
        assert!(reg.slice(5.1).is_none());
        assert_eq!(reg.time_support(), Some(5.0));
    }

    #[test]
    fn derivative_samples_log_grid() {
        let g = make_grid(0.1, 100.0, 400, GridScheme::Logarithmic).unwrap();
        let p = RadialProfile::sample(g, |r| r * r, None).unwrap();
        let d = p.derivative_samples();
        for (i, &r) in p.grid().nodes().iter().enumerate() {
            assert!((d[i] - 2.0 * r).abs() < 1e-6 * (1.0 + 2.0 * r), "i={i}");
        }
    }
}
