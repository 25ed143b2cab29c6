//! Friedlander radiation fields for 3D radial free waves: the profile <->
//! data isometry, explicit propagation formulas, exterior-energy identity,
//! and the concentration diagnostics (tau functional, one-sided maximal
//! functions).
//!
//! Conventions: a stored profile is the one attached to the negative time
//! direction; the positive-direction profile follows from G_+(s) = -G_-(-s).
//! A sampled profile *is* the broken line through its nodes (jumps are
//! modelled by doubled nodes), so window integrals of G, G^2 and |G| are
//! exact for the represented function.

use crate::core_fields::{FieldError, RadialGrid, RadialProfile, SpaceTimeField, StatePair};
use crate::numerics::cumulative::LinearDensity;
use crate::numerics::{fd, interp};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RadiationError {
    #[error("s grid must be strictly increasing with at least 2 nodes")]
    BadSGrid,
    #[error("profile needs {nodes} values, got {values}")]
    LengthMismatch { nodes: usize, values: usize },
    #[error("exterior radius must be nonnegative, got {0}")]
    NegativeExteriorRadius(f64),
    #[error("value at s = {s:.6e} lies in the unreadable inner segment |s| < {radius:.6e}")]
    InnerSegmentRead { s: f64, radius: f64 },
    #[error("free wave evaluated at (r, t) = ({r:.6e}, {t:.6e}) inside the excluded region of exterior data (need r > {radius:.6e} + |t|)")]
    ExcludedRegion { r: f64, t: f64, radius: f64 },
    #[error("target grid enters r <= {radius:.6e} where exterior data is meaningless")]
    GridBelowExteriorRadius { radius: f64 },
    #[error("numerical differentiation unreliable on this grid (2nd vs 4th order disagree by {disagreement:.3e} against scale {scale:.3e})")]
    TooCoarseForDifferentiation { disagreement: f64, scale: f64 },
    #[error("concentration scale must be positive, got {0}")]
    BadScale(f64),
    #[error("profile range [{have_lo:.3e}, {have_hi:.3e}] does not cover [-{need:.3e}, {need:.3e}]")]
    RangeTooShort { have_lo: f64, have_hi: f64, need: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A sampled radiation profile s -> G(s) on [s_min, s_max], with the residue
/// integral over (-R, R) stored separately for exterior data (R > 0), whose
/// inner pointwise values are not meaningful and must not be read.
#[derive(Debug, Clone)]
pub struct RadiationProfile {
    s_grid: Vec<f64>,
    values: Vec<f64>,
    exterior_radius: f64,
    residue: f64,
}

impl RadiationProfile {
    pub fn new(
        s_grid: Vec<f64>,
        values: Vec<f64>,
        exterior_radius: f64,
        residue: f64,
    ) -> Result<Self, RadiationError> {
        if s_grid.len() < 2 || s_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(RadiationError::BadSGrid);
        }
        if values.len() != s_grid.len() {
            return Err(RadiationError::LengthMismatch {
                nodes: s_grid.len(),
                values: values.len(),
            });
        }
        if exterior_radius < 0.0 {
            return Err(RadiationError::NegativeExteriorRadius(exterior_radius));
        }
        Ok(Self {
            s_grid,
            values,
            exterior_radius,
            residue,
        })
    }

    /// Whole-line data (R = 0): no residue bookkeeping.
    pub fn from_samples(s_grid: Vec<f64>, values: Vec<f64>) -> Result<Self, RadiationError> {
        Self::new(s_grid, values, 0.0, 0.0)
    }

    pub fn sample<F: Fn(f64) -> f64>(
        s_min: f64,
        s_max: f64,
        n: usize,
        f: F,
    ) -> Result<Self, RadiationError> {
        let s_grid: Vec<f64> = (0..n)
            .map(|i| s_min + (s_max - s_min) * i as f64 / (n - 1) as f64)
            .collect();
        let values = s_grid.iter().map(|&s| f(s)).collect();
        Self::from_samples(s_grid, values)
    }

    /// The exact broken-line indicator of (a, b) with amplitude 1: jumps are
    /// encoded by node pairs a tiny ramp apart.
    pub fn indicator(a: f64, b: f64, pad: f64) -> Result<Self, RadiationError> {
        let eps = 1e-12 * (b - a).max(1.0);
        let s_grid = vec![a - pad, a, a + eps, b - eps, b, b + pad];
        let values = vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        Self::from_samples(s_grid, values)
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exterior_radius(&self) -> f64 {
        self.exterior_radius
    }

    pub fn residue(&self) -> f64 {
        self.residue
    }

    pub fn s_min(&self) -> f64 {
        self.s_grid[0]
    }

    pub fn s_max(&self) -> f64 {
        *self.s_grid.last().unwrap()
    }

    /// Pointwise read of the broken line; guards the meaningless inner
    /// segment of exterior data; zero outside the sampled range.
    pub fn value_at(&self, s: f64) -> Result<f64, RadiationError> {
        let radius = self.exterior_radius;
        if radius > 0.0 && s.abs() < radius {
            return Err(RadiationError::InnerSegmentRead { s, radius });
        }
        if s < self.s_min() || s > self.s_max() {
            return Ok(0.0);
        }
        Ok(interp::linear(&self.s_grid, &self.values, s))
    }

    fn masked_values(&self) -> Vec<f64> {
        if self.exterior_radius == 0.0 {
            return self.values.clone();
        }
        self.s_grid
            .iter()
            .zip(&self.values)
            .map(|(&s, &v)| if s.abs() < self.exterior_radius { 0.0 } else { v })
            .collect()
    }

    pub(crate) fn density(&self) -> LinearDensity {
        LinearDensity::new(&self.s_grid, &self.masked_values())
    }

    /// L2 mass over |s| > max(radius, exterior_radius), within the range.
    pub fn l2_mass_outside(&self, radius: f64) -> f64 {
        let cut = radius.max(self.exterior_radius);
        let d = self.density();
        d.window_g2(self.s_min(), -cut) + d.window_g2(cut, self.s_max())
    }

    /// Integral of G over (-r, r). The stored residue stands in for the inner
    /// segment of exterior data once the window covers it.
    pub fn integral_window(&self, r: f64) -> f64 {
        let d = self.density();
        if self.exterior_radius > 0.0 {
            if r >= self.exterior_radius {
                self.residue
                    + d.window_g(-r, -self.exterior_radius)
                    + d.window_g(self.exterior_radius, r)
            } else {
                0.0
            }
        } else {
            d.window_g(-r, r)
        }
    }

    /// The profile attached to the positive time direction: -G(-s).
    pub fn time_reversed(&self) -> Self {
        let s: Vec<f64> = self.s_grid.iter().rev().map(|v| -v).collect();
        let vals: Vec<f64> = self.values.iter().rev().map(|v| -v).collect();
        Self {
            s_grid: s,
            values: vals,
            exterior_radius: self.exterior_radius,
            residue: -self.residue,
        }
    }
}

// ---------------------------------------------------------------------------
// Propagation and the data <-> profile maps
// ---------------------------------------------------------------------------

/// The radial free wave determined by a (negative-direction) radiation
/// profile, u(r,t) = (1/r) * integral of G over (t-r, t+r), plus its exact
/// first derivatives.
pub struct FreeWave {
    profile: RadiationProfile,
    density: LinearDensity,
}

impl FreeWave {
    pub fn new(profile: RadiationProfile) -> Self {
        let density = profile.density();
        Self { profile, density }
    }

    pub fn profile(&self) -> &RadiationProfile {
        &self.profile
    }

    fn check_domain(&self, r: f64, t: f64) -> Result<(), RadiationError> {
        let radius = self.profile.exterior_radius;
        if radius > 0.0 && r <= radius + t.abs() {
            return Err(RadiationError::ExcludedRegion { r, t, radius });
        }
        Ok(())
    }

    fn window(&self, a: f64, b: f64) -> f64 {
        let radius = self.profile.exterior_radius;
        if radius > 0.0 && a < -radius && b > radius {
            self.profile.residue
                + self.density.window_g(a, -radius)
                + self.density.window_g(radius, b)
        } else {
            self.density.window_g(a, b)
        }
    }

    /// u(r, t); r = 0 returns the continuous limit 2 G(t).
    pub fn u(&self, r: f64, t: f64) -> Result<f64, RadiationError> {
        self.check_domain(r, t)?;
        if r == 0.0 {
            return Ok(2.0 * self.profile.value_at(t)?);
        }
        Ok(self.window(t - r, t + r) / r)
    }

    /// du/dt = (G(t+r) - G(t-r)) / r.
    pub fn u_t(&self, r: f64, t: f64) -> Result<f64, RadiationError> {
        self.check_domain(r, t)?;
        Ok((self.profile.value_at(t + r)? - self.profile.value_at(t - r)?) / r)
    }

    /// du/dr = -u/r + (G(t+r) + G(t-r)) / r.
    pub fn u_r(&self, r: f64, t: f64) -> Result<f64, RadiationError> {
        self.check_domain(r, t)?;
        let u = self.window(t - r, t + r) / r;
        Ok((-u + self.profile.value_at(t + r)? + self.profile.value_at(t - r)?) / r)
    }
}

impl SpaceTimeField for FreeWave {
    fn eval(&self, r: f64, t: f64) -> f64 {
        self.u(r, t).unwrap_or(f64::NAN)
    }
    fn decay_exponent(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Builds the free-wave evaluator for a profile.
pub fn free_wave_from_profile(profile: &RadiationProfile) -> FreeWave {
    FreeWave::new(profile.clone())
}

/// Initial data of the free wave on the requested grid:
/// u0(r) = (1/r) integral of G over (-r, r), u1(r) = (G(r) - G(-r))/r,
/// with the exact gradient u0'(r) = -u0/r + (G(r) + G(-r))/r attached.
pub fn data_from_profile(
    profile: &RadiationProfile,
    grid: &RadialGrid,
) -> Result<StatePair, RadiationError> {
    let radius = profile.exterior_radius;
    if radius > 0.0 && grid.r_min() <= radius {
        return Err(RadiationError::GridBelowExteriorRadius { radius });
    }
    let wave = FreeWave::new(profile.clone());
    let nodes = grid.nodes();
    let mut u0 = Vec::with_capacity(nodes.len());
    let mut u1 = Vec::with_capacity(nodes.len());
    let mut du0 = Vec::with_capacity(nodes.len());
    for &r in nodes {
        let v = wave.u(r, 0.0)?;
        let gp = profile.value_at(r)?;
        let gm = profile.value_at(-r)?;
        u0.push(v);
        u1.push((gp - gm) / r);
        du0.push((-v + gp + gm) / r);
    }
    // beyond the sampled range u0 = (total integral)/r exactly
    let u0_profile = RadialProfile::new(grid.clone(), u0, Some(1.0))?;
    let u1_profile = RadialProfile::new(grid.clone(), u1, None)?;
    Ok(StatePair::new(u0_profile, u1_profile)?.with_gradient(du0)?)
}

/// Recovers the radiation profile of initial data restricted to |x| > R:
/// for s > R, G(s) = (d/dr(r u0)(s) + s u1(s))/2 and
/// G(-s) = (d/dr(r u0)(s) - s u1(s))/2; residue = R * u0(R).
pub fn profile_from_data(
    state: &StatePair,
    radius: f64,
) -> Result<RadiationProfile, RadiationError> {
    if radius < 0.0 {
        return Err(RadiationError::NegativeExteriorRadius(radius));
    }
    let grid = state.grid();
    let nodes = grid.nodes();
    let u0 = state.u0().values();
    let u1 = state.u1().values();

    // d/dr (r u0) = u0 + r u0'
    let d_ru0: Vec<f64> = match state.stored_gradient() {
        Some(g) => (0..nodes.len()).map(|i| u0[i] + nodes[i] * g[i]).collect(),
        None => {
            let ru0: Vec<f64> = (0..nodes.len()).map(|i| nodes[i] * u0[i]).collect();
            differentiate_checked(grid, &ru0)?
        }
    };

    let i0 = nodes.partition_point(|&r| r < radius.max(grid.r_min()));
    let mut s_pos = Vec::new();
    let mut g_pos = Vec::new();
    let mut g_neg = Vec::new();
    for i in i0..nodes.len() {
        let s = nodes[i];
        s_pos.push(s);
        g_pos.push(0.5 * (d_ru0[i] + s * u1[i]));
        g_neg.push(0.5 * (d_ru0[i] - s * u1[i]));
    }
    let mut s_grid: Vec<f64> = s_pos.iter().rev().map(|&s| -s).collect();
    s_grid.extend_from_slice(&s_pos);
    let mut values: Vec<f64> = g_neg.iter().rev().copied().collect();
    values.extend_from_slice(&g_pos);

    let residue = if radius > 0.0 {
        radius * interp::cubic(nodes, u0, radius)
    } else {
        0.0
    };
    RadiationProfile::new(s_grid, values, radius, residue)
}

/// Fourth-order differentiation with a coarseness check: the 2nd- and
/// 4th-order stencils must agree to a modest fraction of the sample scale.
fn differentiate_checked(grid: &RadialGrid, ys: &[f64]) -> Result<Vec<f64>, RadiationError> {
    use crate::core_fields::GridScheme;
    let (d2, d4): (Vec<f64>, Vec<f64>) = match grid.scheme() {
        GridScheme::Uniform => {
            let h = grid.nodes()[1] - grid.nodes()[0];
            (fd::derivative2_uniform(ys, h), fd::derivative4_uniform(ys, h))
        }
        GridScheme::Logarithmic => {
            let hx = (grid.nodes()[1] / grid.nodes()[0]).ln();
            let a = fd::derivative2_uniform(ys, hx);
            let b = fd::derivative4_uniform(ys, hx);
            (
                a.iter().zip(grid.nodes()).map(|(d, r)| d / r).collect(),
                b.iter().zip(grid.nodes()).map(|(d, r)| d / r).collect(),
            )
        }
    };
    let scale = d4.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let disagreement = d2
        .iter()
        .zip(&d4)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if disagreement > 0.05 * scale {
        return Err(RadiationError::TooCoarseForDifferentiation {
            disagreement,
            scale,
        });
    }
    Ok(d4)
}

// ---------------------------------------------------------------------------
// Concentration diagnostics
// ---------------------------------------------------------------------------

/// The three-term concentration functional of a profile at scale lambda.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConcentrationReport {
    /// (sup over 0 < r < lambda of (lambda/r) * integral of G^2 over (-r,r))^(1/2)
    pub term_sup_window: f64,
    /// the Strichartz norm of the associated free wave, supplied by the caller
    pub term_y_norm: f64,
    /// sup over r > 0 of r^(-1/2) * integral of |G| over (-r, r)
    pub term_l1_sup: f64,
    pub total: f64,
}

/// Supremum over r in (lo, hi) on a dyadic ladder with 8 points per octave,
/// refined by golden-section search (in log r) around the discrete argmax.
fn dyadic_sup<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo > 0.0 && hi > lo);
    let per_octave = 8;
    let octaves = (hi / lo).log2();
    let n = ((octaves * per_octave as f64).ceil() as usize).max(2);
    let mut best = f64::NEG_INFINITY;
    let mut best_x = lo;
    for i in 0..=n {
        let x = lo * (hi / lo).powf(i as f64 / n as f64);
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let phi = 0.618_033_988_749_894_9;
    let step = (hi / lo).powf(1.0 / n as f64);
    let (mut a, mut b) = ((best_x / step).max(lo).ln(), (best_x * step).min(hi).ln());
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1.exp());
    let mut f2 = f(x2.exp());
    for _ in 0..60 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2.exp());
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1.exp());
        }
    }
    best.max(f1).max(f2)
}

/// Computes the tau functional: the windowed-L2 concentration term at scale
/// lambda, the supplied Strichartz norm of the radiation part, and the L1
/// concentration term.
pub fn concentration_tau(
    profile: &RadiationProfile,
    y_norm_vl: f64,
    lambda: f64,
) -> Result<ConcentrationReport, RadiationError> {
    if !(lambda > 0.0) {
        return Err(RadiationError::BadScale(lambda));
    }
    if profile.s_min() > -lambda || profile.s_max() < lambda {
        return Err(RadiationError::RangeTooShort {
            have_lo: profile.s_min(),
            have_hi: profile.s_max(),
            need: lambda,
        });
    }
    let d = profile.density();
    let span = profile.s_max().max(-profile.s_min());
    let r_floor = 1e-9 * span;
    let zero = d.total_g2() == 0.0;

    let sup_window = if zero {
        0.0
    } else {
        dyadic_sup(&|r| lambda / r * d.window_g2(-r, r), r_floor, lambda)
    };
    let l1_sup = if zero {
        0.0
    } else {
        dyadic_sup(&|r| d.window_gabs(-r, r) / r.sqrt(), r_floor, 100.0 * span)
    };

    let term_sup_window = sup_window.max(0.0).sqrt();
    Ok(ConcentrationReport {
        term_sup_window,
        term_y_norm: y_norm_vl,
        term_l1_sup: l1_sup.max(0.0),
        total: term_sup_window + y_norm_vl + l1_sup.max(0.0),
    })
}

/// Which one-sided maximal function to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaximalDirection {
    /// g_+(-t) = sup over r > 0 of (1/r) * integral of |G_+|^2 over (-t, -t + r)
    Plus,
    /// g_-(t) = sup over r > 0 of (1/r) * integral of |G_-|^2 over (t, t + r)
    Minus,
}

/// One-sided maximal function of |G|^2 as a function of t, supremum taken on
/// the dyadic ladder with golden-section refinement. For `Plus` the evaluator
/// returns g_+(-t); for `Minus` it returns g_-(t).
pub struct MaximalFunction {
    density: LinearDensity,
    negate_argument: bool,
    span: f64,
}

impl MaximalFunction {
    fn start(&self, t: f64) -> f64 {
        if self.negate_argument {
            -t
        } else {
            t
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let start = self.start(t);
        let d = &self.density;
        dyadic_sup(
            &|r| d.window_g2(start, start + r) / r,
            1e-9 * self.span.max(1.0),
            4.0 * self.span.max(1.0) + 2.0 * t.abs(),
        )
        .max(0.0)
    }

    /// The sliding average itself, for dominance checks.
    pub fn average(&self, t: f64, r: f64) -> f64 {
        let start = self.start(t);
        self.density.window_g2(start, start + r) / r
    }
}

pub fn maximal_function(
    profile: &RadiationProfile,
    direction: MaximalDirection,
) -> MaximalFunction {
    // |G_+(s)|^2 = |G_-(-s)|^2: the Plus direction works on the reversed
    // profile with the window anchored at -t.
    let base = match direction {
        MaximalDirection::Plus => profile.time_reversed(),
        MaximalDirection::Minus => profile.clone(),
    };
    let density = base.density();
    let span = base.s_max().max(-base.s_min());
    MaximalFunction {
        density,
        negate_argument: direction == MaximalDirection::Plus,
        span,
    }
}

// ---------------------------------------------------------------------------
// CSV persistence
// ---------------------------------------------------------------------------

/// Writes `s,G` rows; the header line records exterior radius and residue.
pub fn write_profile_csv<W: Write>(
    profile: &RadiationProfile,
    mut out: W,
) -> Result<(), RadiationError> {
    writeln!(
        out,
        "# exterior_radius={:.16e} residue={:.16e}",
        profile.exterior_radius, profile.residue
    )?;
    writeln!(out, "s,G")?;
    for (s, v) in profile.s_grid.iter().zip(&profile.values) {
        writeln!(out, "{:.16e},{:.16e}", s, v)?;
    }
    Ok(())
}

pub fn read_profile_csv<R: BufRead>(input: R) -> Result<RadiationProfile, RadiationError> {
    let mut exterior_radius = 0.0;
    let mut residue = 0.0;
    let mut s_grid = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed == "s,G" {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            for tok in rest.split_whitespace() {
                if let Some(v) = tok.strip_prefix("exterior_radius=") {
                    exterior_radius = v.parse().map_err(|_| RadiationError::Parse {
                        line: lineno + 1,
                        reason: format!("bad exterior_radius {v}"),
                    })?;
                } else if let Some(v) = tok.strip_prefix("residue=") {
                    residue = v.parse().map_err(|_| RadiationError::Parse {
                        line: lineno + 1,
                        reason: format!("bad residue {v}"),
                    })?;
                }
            }
            continue;
        }
        let mut parts = trimmed.split(',');
        let s: f64 = parts
            .next()
            .and_then(|p| p.trim().parse().ok())
            .ok_or_else(|| RadiationError::Parse {
                line: lineno + 1,
                reason: "missing s".into(),
            })?;
        let g: f64 = parts
            .next()
            .and_then(|p| p.trim().parse().ok())
            .ok_or_else(|| RadiationError::Parse {
                line: lineno + 1,
                reason: "missing G".into(),
            })?;
        s_grid.push(s);
        values.push(g);
    }
    RadiationProfile::new(s_grid, values, exterior_radius, residue)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_fields::{h_norm, make_grid, GridScheme};
    use std::f64::consts::PI;

    fn indicator_profile() -> RadiationProfile {
        RadiationProfile::indicator(0.0, 1.0, 2.0).unwrap()
    }

    fn smooth_profile() -> RadiationProfile {
        RadiationProfile::sample(-6.0, 6.0, 4001, |s| {
            (-(s - 0.7) * (s - 0.7)).exp() - 0.5 * (-(s + 1.3) * (s + 1.3) * 2.0).exp()
        })
        .unwrap()
    }

    #[test]
    fn zero_profile_gives_zero_wave_and_data() {
        let p = RadiationProfile::sample(-1.0, 1.0, 64, |_| 0.0).unwrap();
        let w = free_wave_from_profile(&p);
        assert_eq!(w.u(2.0, 0.5).unwrap(), 0.0);
        let grid = make_grid(0.1, 5.0, 32, GridScheme::Uniform).unwrap();
        let s = data_from_profile(&p, &grid).unwrap();
        assert!(s.u0().values().iter().all(|&v| v == 0.0));
        assert!(s.u1().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn indicator_wave_value() {
        let w = free_wave_from_profile(&indicator_profile());
        // (1/2) * measure of ([-2,2] intersect [0,1])
        assert!((w.u(2.0, 0.0).unwrap() - 0.5).abs() < 1e-11);
    }

    #[test]
    fn time_symmetry_pair() {
        // reflecting G_- into G_+ = -G_-(-s) flips the time direction
        let p = smooth_profile();
        let w = free_wave_from_profile(&p);
        let rev = p.time_reversed();
        let wrev = free_wave_from_profile(&rev);
        for &(r, t) in &[(2.0, 0.7), (5.0, -1.9), (11.0, 4.0)] {
            let a = w.u(r, t).unwrap();
            let b = -wrev.u(r, -t).unwrap();
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "r={r} t={t}");
        }
    }

    #[test]
    fn data_from_indicator_profile() {
        let p = indicator_profile();
        let grid = make_grid(1e-3, 2.5, 2499, GridScheme::Uniform).unwrap();
        let s = data_from_profile(&p, &grid).unwrap();
        for (i, &r) in grid.nodes().iter().enumerate() {
            let expect_u0 = r.min(1.0) / r;
            assert!(
                (s.u0().values()[i] - expect_u0).abs() < 1e-9,
                "u0 at r={r}: {} vs {expect_u0}",
                s.u0().values()[i]
            );
            if (r - 1.0).abs() > 1e-6 {
                let expect_u1 = if r < 1.0 { 1.0 / r } else { 0.0 };
                assert!((s.u1().values()[i] - expect_u1).abs() < 1e-9 / r, "u1 at r={r}");
            }
        }
    }

    #[test]
    fn hand_computed_indicator_h_norm() {
        // residue identity at R = 1/2: 8 pi * 1/2 + 4 pi * (1/2) * 1 = 6 pi
        let p = indicator_profile();
        let grid = make_grid(1e-3, 40.0, 160001, GridScheme::Uniform).unwrap();
        let s = data_from_profile(&p, &grid).unwrap();
        let got = h_norm(&s, 0.5).unwrap();
        let exact = (6.0 * PI).sqrt();
        assert!(
            (got - exact).abs() < 2e-4 * exact,
            "got {got} exact {exact} rel {}",
            ((got - exact) / exact).abs()
        );
    }

    #[test]
    fn isometry_identity_smooth() {
        let p = smooth_profile();
        let grid = make_grid(1e-3, 50.0, 50001, GridScheme::Uniform).unwrap();
        let s = data_from_profile(&p, &grid).unwrap();
        for &radius in &[0.0, 0.5, 2.0] {
            let lhs = h_norm(&s, radius).unwrap().powi(2);
            let u0_at = if radius > 0.0 {
                interp::cubic(grid.nodes(), s.u0().values(), radius)
            } else {
                0.0
            };
            let rhs = 8.0 * PI * p.l2_mass_outside(radius) + 4.0 * PI * radius * u0_at * u0_at;
            assert!(
                (lhs - rhs).abs() < 1e-6 * rhs,
                "R={radius}: lhs={lhs} rhs={rhs} rel={}",
                ((lhs - rhs) / rhs).abs()
            );
        }
    }

    #[test]
    fn round_trip_profile_data_profile() {
        let p = smooth_profile();
        let grid = make_grid(1e-3, 12.0, 12001, GridScheme::Uniform).unwrap();
        let s = data_from_profile(&p, &grid).unwrap();
        for &radius in &[0.0, 1.0] {
            let q = profile_from_data(&s, radius).unwrap();
            let mut worst = 0.0f64;
            for &sv in q.s_grid() {
                if sv.abs() <= radius.max(1e-3) || sv.abs() > 6.0 {
                    continue;
                }
                let a = q.value_at(sv).unwrap();
                let b = p.value_at(sv).unwrap();
                worst = worst.max((a - b).abs());
            }
            assert!(worst < 1e-9, "R={radius} worst={worst}");
            if radius > 0.0 {
                let expect = p.integral_window(radius);
                assert!((q.residue() - expect).abs() < 1e-9, "residue");
            }
        }
    }

    #[test]
    fn ground_state_profile_closed_form() {
        // (W, 0) restricted to |x| > 1: G(s) = (1/6)(1/3 + s^2)^(-3/2)
        let b = crate::ground_state::Bubble::new(1, 1.0).unwrap();
        let grid = make_grid(1e-2, 100.0, 20000, GridScheme::Logarithmic).unwrap();
        let s = crate::ground_state::ground_state_pair(grid, &b).unwrap();
        let q = profile_from_data(&s, 1.0).unwrap();
        for &sv in &[1.5f64, 2.0, 5.0, 20.0] {
            let expect = (1.0 / 6.0) * (1.0 / 3.0 + sv * sv).powf(-1.5);
            let got = q.value_at(sv).unwrap();
            assert!(
                (got - expect).abs() < 1e-9 + 1e-6 * expect.abs(),
                "s={sv} got={got} expect={expect}"
            );
            let got_neg = q.value_at(-sv).unwrap();
            assert!((got_neg - expect).abs() < 1e-9 + 1e-6 * expect.abs(), "-s={sv}");
        }
        let expect_res = crate::ground_state::w_unit(1.0);
        assert!((q.residue() - expect_res).abs() < 1e-9);
    }

    #[test]
    fn differentiation_coarseness_guard() {
        let grid = make_grid(1.0, 2.0, 8, GridScheme::Uniform).unwrap();
        let vals: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let u0 = RadialProfile::new(grid.clone(), vals, None).unwrap();
        let s = StatePair::new(u0, RadialProfile::zeros(grid)).unwrap();
        assert!(matches!(
            profile_from_data(&s, 0.0),
            Err(RadiationError::TooCoarseForDifferentiation { .. })
        ));
    }

    #[test]
    fn tau_of_indicator() {
        let rep = concentration_tau(&indicator_profile(), 0.0, 1.0).unwrap();
        assert!((rep.term_sup_window - 1.0).abs() < 1e-6, "{}", rep.term_sup_window);
        assert!((rep.term_l1_sup - 1.0).abs() < 1e-6, "{}", rep.term_l1_sup);
        assert!((rep.total - 2.0).abs() < 2e-6);
    }

    #[test]
    fn tau_zero_profile() {
        let p = RadiationProfile::sample(-2.0, 2.0, 101, |_| 0.0).unwrap();
        let rep = concentration_tau(&p, 0.0, 1.0).unwrap();
        assert_eq!(rep.total, 0.0);
    }

    #[test]
    fn tau_homogeneity() {
        let p = smooth_profile();
        let scaled = RadiationProfile::from_samples(
            p.s_grid().to_vec(),
            p.values().iter().map(|v| 2.5 * v).collect(),
        )
        .unwrap();
        let a = concentration_tau(&p, 0.0, 1.0).unwrap();
        let b = concentration_tau(&scaled, 0.0, 1.0).unwrap();
        assert!((b.term_sup_window / a.term_sup_window - 2.5).abs() < 1e-9);
        assert!((b.term_l1_sup / a.term_l1_sup - 2.5).abs() < 1e-9);
    }

    #[test]
    fn maximal_function_indicator() {
        let g = maximal_function(&indicator_profile(), MaximalDirection::Minus);
        assert!((g.eval(0.0) - 1.0).abs() < 1e-6);
        let z = RadiationProfile::sample(-1.0, 1.0, 51, |_| 0.0).unwrap();
        let gz = maximal_function(&z, MaximalDirection::Minus);
        assert_eq!(gz.eval(0.3), 0.0);
    }

    #[test]
    fn maximal_dominates_sliding_average() {
        let p = smooth_profile();
        let g = maximal_function(&p, MaximalDirection::Minus);
        for &t in &[-2.0, 0.0, 0.9, 3.3] {
            let sup = g.eval(t);
            for &r in &[0.01, 0.3, 1.0, 4.0, 20.0] {
                assert!(g.average(t, r) <= sup * (1.0 + 1e-12) + 1e-300, "t={t} r={r}");
            }
        }
    }

    #[test]
    fn weak_one_one_bound_with_rising_sun_constant() {
        let p = smooth_profile();
        let g = maximal_function(&p, MaximalDirection::Minus);
        let l1: f64 = p.l2_mass_outside(0.0); // total mass of the density G^2
        let ts: Vec<f64> = (0..4000).map(|i| -8.0 + 16.0 * i as f64 / 3999.0).collect();
        let gs: Vec<f64> = ts.iter().map(|&t| g.eval(t)).collect();
        let dt = ts[1] - ts[0];
        for k in 0..=30 {
            let kappa = 1e-2 * 10f64.powf(k as f64 / 10.0);
            let measure = gs.iter().filter(|&&v| v > kappa).count() as f64 * dt;
            assert!(
                measure * kappa <= 1.05 * l1 + 1e-12,
                "kappa={kappa} measure={measure} l1={l1}"
            );
        }
    }

    #[test]
    fn csv_round_trip() {
        let p = profile_from_data(
            &data_from_profile(
                &smooth_profile(),
                &make_grid(1e-2, 8.0, 1601, GridScheme::Uniform).unwrap(),
            )
            .unwrap(),
            0.5,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&p, &mut buf).unwrap();
        let q = read_profile_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(p.s_grid().len(), q.s_grid().len());
        assert_eq!(p.exterior_radius(), q.exterior_radius());
        assert_eq!(p.residue(), q.residue());
        for (a, b) in p.values().iter().zip(q.values()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn exterior_wave_guards_excluded_region() {
        let p = RadiationProfile::new(
            vec![-3.0, -2.0, -1.0, 1.0, 2.0, 3.0],
            vec![0.1, 0.2, 0.0, 0.0, 0.4, 0.1],
            1.0,
            0.7,
        )
        .unwrap();
        let w = free_wave_from_profile(&p);
        assert!(matches!(
            w.u(1.2, 0.5),
            Err(RadiationError::ExcludedRegion { .. })
        ));
        let v = w.u(4.0, 0.0).unwrap();
        assert!(v.is_finite());
        assert!(matches!(
            p.value_at(0.5),
            Err(RadiationError::InnerSegmentRead { .. })
        ));
    }
}
