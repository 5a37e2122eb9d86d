//! Star-shaped inclusions inside the unit disk and their boundary grids.
//!
//! An inclusion is described by its radial function
//! `Υ(θ) = a₀ + Σ_m (a_m cos mθ + b_m sin mθ)`, and its boundary is the
//! curve `x(θ) = Υ(θ)(cos θ, sin θ)`. The admissible class pins `Υ` inside
//! the band `(b₀, b₁ − δ)` and bounds a discrete C² norm by `m`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Bound, Error, Result};

/// Number of angles used to verify class constraints.
pub const CONSTRAINT_SAMPLES: usize = 2048;

/// Class constants and the background conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub b0: f64,
    pub b1: f64,
    pub delta: f64,
    pub m: f64,
    pub k0: f64,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            b0: 0.2,
            b1: 1.0,
            delta: 0.1,
            m: 10.0,
            k0: 1.0,
        }
    }
}

impl DomainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > 0.0 && self.k0.is_finite()) {
            return Err(Error::InvalidConfig(format!("k0 must be positive, got {}", self.k0)));
        }
        if (self.b1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "b1 is the distance to the unit circle and must equal 1, got {}",
                self.b1
            )));
        }
        if !(self.b0 > 0.0 && self.delta > 0.0 && self.b0 < self.b1 - self.delta) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < b0 < b1 - delta, got b0 = {}, delta = {}",
                self.b0, self.delta
            )));
        }
        if !(self.m > 0.0) {
            return Err(Error::InvalidConfig(format!("m must be positive, got {}", self.m)));
        }
        Ok(())
    }

    /// Upper end of the admissible radial band.
    pub fn upper(&self) -> f64 {
        self.b1 - self.delta
    }
}

/// Radial function of a star-shaped inclusion as a truncated Fourier series.
///
/// `cos[0]` is the mean radius `a₀`, `cos[m]` multiplies `cos mθ` and
/// `sin[m - 1]` multiplies `sin mθ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarShape {
    #[serde(rename = "cos")]
    fourier_cos: Vec<f64>,
    #[serde(rename = "sin", default)]
    fourier_sin: Vec<f64>,
}

impl StarShape {
    /// Builds a shape without checking class constraints.
    pub fn new_unchecked(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let mut cos = cos;
        if cos.is_empty() {
            cos.push(0.0);
        }
        Self {
            fourier_cos: cos,
            fourier_sin: sin,
        }
    }

    pub fn circle(radius: f64) -> Self {
        Self::new_unchecked(vec![radius], Vec::new())
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.fourier_cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.fourier_sin
    }

    /// Highest harmonic present.
    pub fn max_mode(&self) -> usize {
        (self.fourier_cos.len().saturating_sub(1)).max(self.fourier_sin.len())
    }

    /// `(Υ, Υ′, Υ″)` at angle `theta`.
    pub fn radial_derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let mut r = self.fourier_cos[0];
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for (m, &a) in self.fourier_cos.iter().enumerate().skip(1) {
            let mf = m as f64;
            let (s, c) = (mf * theta).sin_cos();
            r += a * c;
            d1 -= a * mf * s;
            d2 -= a * mf * mf * c;
        }
        for (i, &b) in self.fourier_sin.iter().enumerate() {
            let mf = (i + 1) as f64;
            let (s, c) = (mf * theta).sin_cos();
            r += b * s;
            d1 += b * mf * c;
            d2 -= b * mf * mf * s;
        }
        (r, d1, d2)
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.radial_derivatives(theta).0
    }

    /// Boundary point at angle `theta`.
    pub fn point(&self, theta: f64) -> [f64; 2] {
        let r = self.radius(theta);
        let (s, c) = theta.sin_cos();
        [r * c, r * s]
    }

    /// True when `x` lies strictly inside the inclusion.
    pub fn contains(&self, x: [f64; 2]) -> bool {
        let rho = x[0].hypot(x[1]);
        rho < self.radius(x[1].atan2(x[0]))
    }

    /// Verifies the class constraints on `CONSTRAINT_SAMPLES` angles.
    pub fn check(&self, cfg: &DomainConfig) -> Result<()> {
        if self.fourier_cos.iter().chain(&self.fourier_sin).any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("non-finite Fourier coefficient".into()));
        }
        let upper = cfg.upper();
        // Track the worst offender for each bound.
        let mut low = (f64::INFINITY, 0.0);
        let mut high = (f64::NEG_INFINITY, 0.0);
        let mut c2 = (0.0_f64, 0.0);
        for i in 0..CONSTRAINT_SAMPLES {
            let theta = 2.0 * PI * i as f64 / CONSTRAINT_SAMPLES as f64;
            let (r, d1, d2) = self.radial_derivatives(theta);
            if r < low.0 {
                low = (r, theta);
            }
            if r > high.0 {
                high = (r, theta);
            }
            let norm = r.abs() + d1.abs() + d2.abs();
            if norm > c2.0 {
                c2 = (norm, theta);
            }
        }
        if low.0 <= cfg.b0 {
            return Err(Error::ConstraintViolation {
                bound: Bound::Lower,
                theta: low.1,
                value: low.0,
            });
        }
        if high.0 >= upper {
            return Err(Error::ConstraintViolation {
                bound: Bound::Upper,
                theta: high.1,
                value: high.0,
            });
        }
        if c2.0 > cfg.m {
            return Err(Error::ConstraintViolation {
                bound: Bound::Smoothness,
                theta: c2.1,
                value: c2.0,
            });
        }
        Ok(())
    }

    /// Packs coefficients as `[a₀, a₁..a_M, b₁..b_M]`, zero-padding or truncating to `modes`.
    pub fn to_params(&self, modes: usize) -> Vec<f64> {
        let mut p = vec![0.0; 2 * modes + 1];
        for (i, slot) in p.iter_mut().take(modes + 1).enumerate() {
            *slot = self.fourier_cos.get(i).copied().unwrap_or(0.0);
        }
        for i in 0..modes {
            p[modes + 1 + i] = self.fourier_sin.get(i).copied().unwrap_or(0.0);
        }
        p
    }

    /// Inverse of [`StarShape::to_params`].
    pub fn from_params(modes: usize, params: &[f64]) -> Self {
        assert_eq!(params.len(), 2 * modes + 1, "parameter vector length");
        Self::new_unchecked(params[..=modes].to_vec(), params[modes + 1..].to_vec())
    }

    /// `∫₀^{2π} Υ″(θ)² dθ` in closed form.
    pub fn curvature_energy(&self) -> f64 {
        let mut acc = 0.0;
        for (m, &a) in self.fourier_cos.iter().enumerate().skip(1) {
            acc += (m as f64).powi(4) * a * a;
        }
        for (i, &b) in self.fourier_sin.iter().enumerate() {
            acc += ((i + 1) as f64).powi(4) * b * b;
        }
        PI * acc
    }
}

/// Validated construction of a class member.
pub fn build_star_shape(cos: &[f64], sin: &[f64], cfg: &DomainConfig) -> Result<StarShape> {
    cfg.validate()?;
    if cos.is_empty() {
        return Err(Error::InvalidConfig("shape needs at least the mean radius a0".into()));
    }
    let shape = StarShape::new_unchecked(cos.to_vec(), sin.to_vec());
    shape.check(cfg)?;
    Ok(shape)
}

/// `inf x·ν` over the boundary, sampled on a fine grid.
pub fn r_inf(shape: &StarShape) -> f64 {
    const SAMPLES: usize = 8192;
    (0..SAMPLES)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / SAMPLES as f64;
            let (r, d1, _) = shape.radial_derivatives(theta);
            r / (1.0 + (d1 / r).powi(2)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Trapezoidal discretization of a closed, counterclockwise curve.
#[derive(Debug, Clone)]
pub struct BoundaryGrid {
    params: Vec<f64>,
    points: Vec<[f64; 2]>,
    normals: Vec<[f64; 2]>,
    speed: Vec<f64>,
    curvature: Vec<f64>,
}

impl BoundaryGrid {
    /// Uniform grid on the unit circle `∂Ω`.
    pub fn unit_circle(n: usize) -> Result<Self> {
        discretize(&StarShape::circle(1.0), n)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Trapezoid weight in the parameter, `2π/n`.
    pub fn step(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    /// `|x′(t_i)|`.
    pub fn jacobians(&self) -> &[f64] {
        &self.speed
    }

    /// Signed curvature, positive on convex arcs.
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    /// Arc-length quadrature weights `|x′(t_i)|·2π/n`.
    pub fn arc_weights(&self) -> Vec<f64> {
        let h = self.step();
        self.speed.iter().map(|s| s * h).collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.speed.iter().sum::<f64>() * self.step()
    }

    /// `½∮ (x dy − y dx)`; positive for counterclockwise orientation.
    pub fn signed_area(&self) -> f64 {
        // x·ν |x′| = x y′ − y x′
        let h = self.step();
        0.5 * h
            * self
                .points
                .iter()
                .zip(&self.normals)
                .zip(&self.speed)
                .map(|((p, nu), s)| (p[0] * nu[0] + p[1] * nu[1]) * s)
                .sum::<f64>()
    }

    /// Arc-length weighted mean of nodal values.
    pub fn mean(&self, values: &[f64]) -> f64 {
        let w: f64 = self.speed.iter().sum();
        values.iter().zip(&self.speed).map(|(v, s)| v * s).sum::<f64>() / w
    }

    /// Distance from `x` to the nearest node.
    pub fn node_distance(&self, x: [f64; 2]) -> f64 {
        self.points
            .iter()
            .map(|p| (p[0] - x[0]).hypot(p[1] - x[1]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_jacobian(&self) -> f64 {
        self.speed.iter().copied().fold(0.0, f64::max)
    }
}

/// Samples `shape` at `n` equispaced parameters with analytic derivatives.
pub fn discretize(shape: &StarShape, n: usize) -> Result<BoundaryGrid> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidResolution {
            n,
            reason: "node count must be even",
        });
    }
    if n < 16 {
        return Err(Error::InvalidResolution {
            n,
            reason: "at least 16 nodes required",
        });
    }
    let mut params = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut speed = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    for i in 0..n {
        let t = 2.0 * PI * i as f64 / n as f64;
        let (r, d1, d2) = shape.radial_derivatives(t);
        let (s, c) = t.sin_cos();
        let x = [r * c, r * s];
        let dx = [d1 * c - r * s, d1 * s + r * c];
        let ddx = [
            d2 * c - 2.0 * d1 * s - r * c,
            d2 * s + 2.0 * d1 * c - r * s,
        ];
        let v = dx[0].hypot(dx[1]);
        params.push(t);
        points.push(x);
        normals.push([dx[1] / v, -dx[0] / v]);
        speed.push(v);
        curvature.push((dx[0] * ddx[1] - dx[1] * ddx[0]) / (v * v * v));
    }
    Ok(BoundaryGrid {
        params,
        points,
        normals,
        speed,
        curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DomainConfig {
        DomainConfig::default()
    }

    #[test]
    fn circle_is_accepted() {
        let s = build_star_shape(&[0.5], &[], &cfg()).unwrap();
        assert_eq!(s.radius(1.234), 0.5);
    }

    #[test]
    fn trefoil_extremes() {
        let s = build_star_shape(&[0.5, 0.0, 0.0, 0.08], &[], &cfg()).unwrap();
        assert!((s.radius(0.0) - 0.58).abs() < 1e-15);
        assert!((s.radius(PI / 3.0) - 0.42).abs() < 1e-15);
    }

    #[test]
    fn upper_bound_rejected() {
        match build_star_shape(&[0.95], &[], &cfg()) {
            Err(Error::ConstraintViolation { bound: Bound::Upper, .. }) => {}
            other => panic!("expected upper-bound violation, got {other:?}"),
        }
    }

    #[test]
    fn lower_bound_and_smoothness_rejected() {
        assert!(matches!(
            build_star_shape(&[0.15], &[], &cfg()),
            Err(Error::ConstraintViolation { bound: Bound::Lower, .. })
        ));
        let tight = DomainConfig { m: 1.0, ..cfg() };
        assert!(matches!(
            build_star_shape(&[0.5, 0.0, 0.0, 0.08], &[], &tight),
            Err(Error::ConstraintViolation { bound: Bound::Smoothness, .. })
        ));
    }

    #[test]
    fn bad_config_rejected() {
        let c = DomainConfig { k0: 0.0, ..cfg() };
        assert!(c.validate().is_err());
        let c = DomainConfig { b0: 0.95, ..cfg() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn odd_or_tiny_resolution() {
        let s = StarShape::circle(0.5);
        assert!(matches!(discretize(&s, 63), Err(Error::InvalidResolution { .. })));
        assert!(matches!(discretize(&s, 8), Err(Error::InvalidResolution { .. })));
    }

    #[test]
    fn circle_grid_geometry() {
        let g = discretize(&StarShape::circle(0.5), 64).unwrap();
        for ((p, nu), s) in g.points().iter().zip(g.normals()).zip(g.jacobians()) {
            let r = p[0].hypot(p[1]);
            assert!((nu[0] - p[0] / r).abs() < 1e-15 && (nu[1] - p[1] / r).abs() < 1e-15);
            assert!((s - 0.5).abs() < 1e-15);
        }
        assert!((g.signed_area() - PI * 0.25).abs() < 1e-12);
        assert!((g.perimeter() - PI).abs() / PI < 1e-12);
        for k in g.curvature() {
            assert!((k - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn r_inf_circle_and_trefoil() {
        assert_eq!(r_inf(&StarShape::circle(0.5)), 0.5);
        assert_eq!(r_inf(&StarShape::circle(0.2)), 0.2);
        let s = StarShape::new_unchecked(vec![0.5, 0.0, 0.0, 0.08], vec![]);
        let brute = (0..100_000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 1e5;
                let r = 0.5 + 0.08 * (3.0 * t).cos();
                let dr = -0.24 * (3.0 * t).sin();
                r * r / (r * r + dr * dr).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((r_inf(&s) - brute).abs() < 1e-6);
        assert!(r_inf(&s) <= 0.42 + 1e-12);
    }

    #[test]
    fn params_roundtrip_pads() {
        let s = StarShape::new_unchecked(vec![0.5, 0.0, 0.0, 0.08], vec![0.01]);
        let p = s.to_params(4);
        assert_eq!(p, vec![0.5, 0.0, 0.0, 0.08, 0.0, 0.01, 0.0, 0.0, 0.0]);
        let back = StarShape::from_params(4, &p);
        assert!((back.radius(0.7) - s.radius(0.7)).abs() < 1e-15);
    }

    #[test]
    fn json_shape_format() {
        let s: StarShape = serde_json::from_str(r#"{"cos":[0.5,0.1],"sin":[0.02]}"#).unwrap();
        assert_eq!(s.cos_coeffs(), &[0.5, 0.1]);
        let txt = serde_json::to_string(&s).unwrap();
        assert_eq!(txt, r#"{"cos":[0.5,0.1],"sin":[0.02]}"#);
        let c: DomainConfig =
            serde_json::from_str(r#"{"b0":0.2,"b1":1.0,"delta":0.1,"m":10,"k0":2}"#).unwrap();
        assert_eq!(c.k0, 2.0);
    }
}
