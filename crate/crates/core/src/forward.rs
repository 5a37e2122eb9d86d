//! Forward problem: boundary voltages for a frequency-dependent inclusion.
//!
//! Three solvers share one discretization:
//! - the perfect-conductor solution `u₀` (gradient vanishes in `D`),
//! - a second-kind integral equation for a given contrast `k`,
//! - the eigen-expansion `u = k₀⁻¹u₀ + Σ c_n w_n / (k₀ + λ_n(k − k₀))`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{discretize, BoundaryGrid, DomainConfig, StarShape};
use crate::potential::{assemble, neumann, single_layer_matrix, KernelMatrices};
use crate::quadrature::{fourier_coefficients, log_weights};
use crate::spectrum::{compute_spectrum, equilibrium_index, kstar_eigen, NPSpectrum, SpectrumOptions};

/// Relative gap below which a contrast counts as resonant.
pub const NEAR_RESONANCE_TOL: f64 = 1e-10;

/// Minimum size of the quadrature grid used for the harmonic lift.
const LIFT_QUADRATURE_NODES: usize = 1024;

// ---------------------------------------------------------------------------
// Data types
// ---------------------------------------------------------------------------

/// Fourier description of the injected current, `f = Σ_{m≥1} (c_m cos mθ + s_m sin mθ)`.
///
/// `cos[0]` multiplies `cos θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentSpec {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl CurrentSpec {
    pub fn cos_theta() -> Self {
        Self {
            cos: vec![1.0],
            sin: Vec::new(),
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let c: f64 = self
            .cos
            .iter()
            .enumerate()
            .map(|(i, a)| a * ((i + 1) as f64 * theta).cos())
            .sum();
        let s: f64 = self
            .sin
            .iter()
            .enumerate()
            .map(|(i, b)| b * ((i + 1) as f64 * theta).sin())
            .sum();
        c + s
    }

    pub fn is_zero(&self) -> bool {
        self.cos.iter().chain(&self.sin).all(|c| *c == 0.0)
    }
}

/// Current density sampled on the `∂Ω` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannDatum {
    values: Vec<f64>,
}

impl NeumannDatum {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let scale = values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        if mean.abs() > 1e-12 * scale {
            return Err(Error::NonZeroMean { mean });
        }
        Ok(Self { values })
    }

    pub fn from_spec(spec: &CurrentSpec, boundary: &BoundaryGrid) -> Self {
        Self {
            values: boundary.params().iter().map(|&t| spec.eval(t)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Contrast model `k(ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum FrequencyProfile {
    /// `k(ω) = k_r + i c ω`.
    Affine { k_r: f64, c: f64 },
    /// `k(ω) = k_∞ + (k_s − k_∞)/(1 + iωτ)`.
    Debye { k_inf: f64, k_s: f64, tau: f64 },
}

impl FrequencyProfile {
    pub fn eval(&self, omega: f64) -> Complex64 {
        match *self {
            FrequencyProfile::Affine { k_r, c } => Complex64::new(k_r, c * omega),
            FrequencyProfile::Debye { k_inf, k_s, tau } => {
                Complex64::new(k_inf, 0.0)
                    + Complex64::new(k_s - k_inf, 0.0) / Complex64::new(1.0, omega * tau)
            }
        }
    }

    /// Contrast values on the grid, rejecting any that touch `(−∞, 0]`.
    pub fn values(&self, omega: &[f64]) -> Result<Vec<Complex64>> {
        omega
            .iter()
            .map(|&w| {
                let k = self.eval(w);
                if !k.re.is_finite() || !k.im.is_finite() || touches_negative_axis(k) {
                    Err(Error::InvalidProfile { omega: w, k })
                } else {
                    Ok(k)
                }
            })
            .collect()
    }
}

pub(crate) fn touches_negative_axis(k: Complex64) -> bool {
    k.re <= 0.0 && k.im.abs() <= 1e-14 * k.norm().max(1.0)
}

/// Equispaced or geometric frequency grid.
pub fn omega_grid(min: f64, max: f64, count: usize, log_spacing: bool) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    (0..count)
        .map(|j| {
            let s = j as f64 / (count - 1) as f64;
            if log_spacing {
                (min.ln() + s * (max.ln() - min.ln())).exp()
            } else {
                min + s * (max - min)
            }
        })
        .collect()
}

/// Boundary voltages over a frequency sweep; column `j` is `u(·, ω_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiFreqData {
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub k: Vec<Complex64>,
    pub voltages: DMatrix<Complex64>,
    pub eta: f64,
    pub seed: u64,
}

/// Neumann datum and the trace of the perfect-conductor solution on `∂Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub theta: Vec<f64>,
    pub f: Vec<f64>,
    pub u0: Vec<f64>,
    /// Constant value of `u₀` on the inclusion, when known.
    pub rho: Option<f64>,
}

// ---------------------------------------------------------------------------
// Harmonic lift
// ---------------------------------------------------------------------------

/// `𝔣 = −∫_{∂Ω} 𝒩(·, z) f(z) ds(z)`: harmonic in `Ω` with `∂_ν𝔣 = f` and zero boundary mean.
#[derive(Debug, Clone)]
pub struct HarmonicLift {
    nodes: Vec<[f64; 2]>,
    weighted: Vec<f64>,
    trace: Vec<f64>,
}

impl HarmonicLift {
    pub fn new(f: &NeumannDatum, boundary: &BoundaryGrid) -> Self {
        let n = f.len();
        let (a, b) = fourier_coefficients(f.values());
        // trigonometric refinement of the current for interior targets
        let fine = n.max(LIFT_QUADRATURE_NODES);
        let h = 2.0 * PI / fine as f64;
        let mut nodes = Vec::with_capacity(fine);
        let mut weighted = Vec::with_capacity(fine);
        for j in 0..fine {
            let t = h * j as f64;
            let v: f64 = (1..a.len())
                .map(|m| {
                    let (s, c) = (m as f64 * t).sin_cos();
                    a[m] * c + b[m] * s
                })
                .sum();
            nodes.push([t.cos(), t.sin()]);
            weighted.push(v * h);
        }
        let lw = log_weights(n);
        let trace = (0..n)
            .map(|i| {
                -f.values()
                    .iter()
                    .enumerate()
                    .map(|(j, v)| lw[(i + n - j) % n] * v)
                    .sum::<f64>()
                    / (2.0 * PI)
            })
            .collect();
        debug_assert_eq!(boundary.len(), n);
        Self {
            nodes,
            weighted,
            trace,
        }
    }

    /// Value at an interior point.
    pub fn value(&self, x: [f64; 2]) -> f64 {
        -self
            .nodes
            .iter()
            .zip(&self.weighted)
            .map(|(&z, w)| neumann(x, z) * w)
            .sum::<f64>()
    }

    /// Gradient at an interior point.
    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let mut g = [0.0, 0.0];
        for (&z, w) in self.nodes.iter().zip(&self.weighted) {
            let d = [x[0] - z[0], x[1] - z[1]];
            let r2 = d[0] * d[0] + d[1] * d[1];
            let zz = z[0] * z[0] + z[1] * z[1];
            let q = (x[0] * x[0] + x[1] * x[1]) * zz - 2.0 * (x[0] * z[0] + x[1] * z[1]) + 1.0;
            for c in 0..2 {
                g[c] -= w * (d[c] / r2 + (zz * x[c] - z[c]) / q) / (2.0 * PI);
            }
        }
        g
    }

    /// Trace on the `∂Ω` nodes.
    pub fn boundary_trace(&self) -> &[f64] {
        &self.trace
    }
}

/// Values of the harmonic lift at interior targets together with its `∂Ω` trace.
pub fn harmonic_lift(
    f: &NeumannDatum,
    boundary: &BoundaryGrid,
    targets: &[[f64; 2]],
) -> (Vec<f64>, Vec<f64>) {
    let lift = HarmonicLift::new(f, boundary);
    let vals = targets.iter().map(|&x| lift.value(x)).collect();
    (vals, lift.trace.clone())
}

// ---------------------------------------------------------------------------
// Forward model
// ---------------------------------------------------------------------------

/// Node counts on `∂D` and `∂Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    pub inclusion: usize,
    pub boundary: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            inclusion: 256,
            boundary: 128,
        }
    }
}

/// Discretized inclusion with everything needed to solve for any current and contrast.
#[derive(Debug)]
pub struct ForwardModel {
    shape: StarShape,
    cfg: DomainConfig,
    kernels: KernelMatrices,
    boundary: BoundaryGrid,
    cross: DMatrix<f64>,
    kstar_spectrum: OnceLock<Vec<f64>>,
}

/// Perfect-conductor solve: the trace on `∂Ω` and the density that produced it.
#[derive(Debug, Clone)]
pub struct U0Solution {
    pub data: CauchyData,
    pub density: Vec<f64>,
}

impl ForwardModel {
    pub fn new(shape: &StarShape, cfg: &DomainConfig, res: Resolution) -> Result<Self> {
        cfg.validate()?;
        shape.check(cfg)?;
        Self::new_unchecked(shape, cfg, res)
    }

    /// Skips the class check; used by the inverter on projected iterates.
    pub(crate) fn new_unchecked(shape: &StarShape, cfg: &DomainConfig, res: Resolution) -> Result<Self> {
        let grid = discretize(shape, res.inclusion)?;
        let kernels = assemble(&grid)?;
        let boundary = BoundaryGrid::unit_circle(res.boundary)?;
        let cross = single_layer_matrix(&grid, boundary.points());
        Ok(Self {
            shape: shape.clone(),
            cfg: *cfg,
            kernels,
            boundary,
            cross,
            kstar_spectrum: OnceLock::new(),
        })
    }

    pub fn shape(&self) -> &StarShape {
        &self.shape
    }

    pub fn config(&self) -> &DomainConfig {
        &self.cfg
    }

    pub fn kernels(&self) -> &KernelMatrices {
        &self.kernels
    }

    pub fn boundary(&self) -> &BoundaryGrid {
        &self.boundary
    }

    pub fn datum(&self, spec: &CurrentSpec) -> NeumannDatum {
        NeumannDatum::from_spec(spec, &self.boundary)
    }

    fn check_datum(&self, f: &NeumannDatum) -> Result<()> {
        if f.len() != self.boundary.len() {
            return Err(Error::DimensionMismatch(format!(
                "current has {} samples, boundary grid {}",
                f.len(),
                self.boundary.len()
            )));
        }
        Ok(())
    }

    fn recenter(&self, u: &mut [f64]) -> f64 {
        let m = u.iter().sum::<f64>() / u.len() as f64;
        u.iter_mut().for_each(|v| *v -= m);
        m
    }

    /// Perfect-conductor solution: `u₀ = 𝔣 + S_D[ψ]` with `u₀ = ϱ` on `∂D` and `∫ψ = 0`.
    pub fn solve_u0(&self, f: &NeumannDatum) -> Result<U0Solution> {
        self.check_datum(f)?;
        let lift = HarmonicLift::new(f, &self.boundary);
        self.solve_u0_with(f, &lift)
    }

    fn solve_u0_with(&self, f: &NeumannDatum, lift: &HarmonicLift) -> Result<U0Solution> {
        let n = self.kernels.n();
        let grid = &self.kernels.grid;
        let mut sys = DMatrix::zeros(n + 1, n + 1);
        sys.view_mut((0, 0), (n, n)).copy_from(&self.kernels.s);
        let mut rhs = DVector::zeros(n + 1);
        for (i, &x) in grid.points().iter().enumerate() {
            sys[(i, n)] = -1.0;
            sys[(n, i)] = 1.0;
            rhs[i] = -lift.value(x);
        }
        let lu = sys.lu();
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("perfect-conductor saddle system".into()))?;
        if !sol.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularSystem("perfect-conductor saddle system".into()));
        }
        let density: Vec<f64> = sol
            .rows(0, n)
            .iter()
            .zip(self.kernels.arc_weights())
            .map(|(q, w)| q / w)
            .collect();
        let phi = DVector::from_column_slice(&density);
        let sl = &self.cross * phi;
        let mut u0: Vec<f64> = lift
            .boundary_trace()
            .iter()
            .zip(sl.iter())
            .map(|(a, b)| a + b)
            .collect();
        let shift = self.recenter(&mut u0);
        Ok(U0Solution {
            data: CauchyData {
                theta: self.boundary.params().to_vec(),
                f: f.values().to_vec(),
                u0,
                rho: Some(sol[n] - shift),
            },
            density,
        })
    }

    /// Physical eigenvalues of `K*_D` (equilibrium mode removed), computed once.
    pub fn kstar_eigenvalues(&self) -> Result<&[f64]> {
        if let Some(v) = self.kstar_spectrum.get() {
            return Ok(v);
        }
        let (mu, vecs) = kstar_eigen(&self.kernels)?;
        let eq = equilibrium_index(&self.kernels, &vecs);
        let phys: Vec<f64> = mu
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != eq)
            .map(|(_, m)| *m)
            .collect();
        Ok(self.kstar_spectrum.get_or_init(|| phys))
    }

    /// Integral-equation solve for contrast `k`; returns the zero-mean voltage on `∂Ω`.
    pub fn solve_direct(&self, f: &NeumannDatum, k: Complex64) -> Result<Vec<Complex64>> {
        self.check_datum(f)?;
        let lift = HarmonicLift::new(f, &self.boundary);
        self.solve_direct_with(&lift, k)
    }

    fn solve_direct_with(&self, lift: &HarmonicLift, k: Complex64) -> Result<Vec<Complex64>> {
        let k0 = self.cfg.k0;
        let base: Vec<Complex64> = lift
            .boundary_trace()
            .iter()
            .map(|v| Complex64::new(v / k0, 0.0))
            .collect();
        if k == Complex64::new(k0, 0.0) {
            return Ok(base);
        }
        let z = (k0 + k) / (2.0 * (k0 - k));
        let gap = self
            .kstar_eigenvalues()?
            .iter()
            .map(|mu| (z + mu).norm())
            .fold(f64::INFINITY, f64::min);
        if gap < NEAR_RESONANCE_TOL * z.norm().max(1.0) {
            return Err(Error::NearResonance { k, gap });
        }

        let n = self.kernels.n();
        let grid = &self.kernels.grid;
        let arc = self.kernels.arc_weights();
        let perimeter: f64 = arc.iter().sum();
        // rank-one deflation of the equilibrium direction; the solution has zero net charge.
        // The weight pushes that eigenvalue (|μ| ≤ ½) at least 3/2 away from −z.
        let shift = (2.0 + z.norm()).copysign(z.re);
        let a = DMatrix::from_fn(n, n, |i, j| {
            let mut v = Complex64::new(self.kernels.kstar[(i, j)] + shift * arc[j] / perimeter, 0.0);
            if i == j {
                v += z;
            }
            v
        });
        let rhs = DVector::from_iterator(
            n,
            grid.points().iter().zip(grid.normals()).map(|(&x, nu)| {
                let g = lift.gradient(x);
                Complex64::new(-(g[0] * nu[0] + g[1] * nu[1]) / k0, 0.0)
            }),
        );
        let phi = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem(format!("transmission system at k = {k}")))?;
        let mut u: Vec<Complex64> = (0..self.boundary.len())
            .map(|i| {
                let s: Complex64 = (0..n).map(|j| phi[j] * self.cross[(i, j)]).sum();
                base[i] + s
            })
            .collect();
        let mean = u.iter().sum::<Complex64>() / u.len() as f64;
        u.iter_mut().for_each(|v| *v -= mean);
        Ok(u)
    }

    pub fn spectrum(&self, n_modes: usize) -> Result<NPSpectrum> {
        compute_spectrum(
            &self.kernels,
            &self.boundary,
            &SpectrumOptions {
                n_modes,
                k0: self.cfg.k0,
                ..Default::default()
            },
        )
    }

    /// Truncated eigen-expansion of the voltage on `∂Ω`.
    pub fn solve_spectral(
        &self,
        f: &NeumannDatum,
        k: Complex64,
        spectrum: &NPSpectrum,
        n_modes: usize,
    ) -> Result<Vec<Complex64>> {
        let u0 = self.solve_u0(f)?;
        self.spectral_with(f, &u0.data.u0, k, spectrum, n_modes)
    }

    fn spectral_with(
        &self,
        f: &NeumannDatum,
        u0: &[f64],
        k: Complex64,
        spectrum: &NPSpectrum,
        n_modes: usize,
    ) -> Result<Vec<Complex64>> {
        let k0 = self.cfg.k0;
        if spectrum.traces_domega.nrows() != self.boundary.len() {
            return Err(Error::DimensionMismatch(
                "spectrum traces were computed on a different boundary grid".into(),
            ));
        }
        let h = self.boundary.step();
        let mut u: Vec<Complex64> = u0.iter().map(|v| Complex64::new(v / k0, 0.0)).collect();
        for m in 0..n_modes.min(spectrum.len()) {
            let w = spectrum.traces_domega.column(m);
            let c: f64 = f.values().iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() * h;
            let denom = k0 + spectrum.lambda[m] * (k - k0);
            if denom.norm() < NEAR_RESONANCE_TOL * k0 {
                return Err(Error::NearResonance { k, gap: denom.norm() });
            }
            let coef = c / denom;
            for (ui, wi) in u.iter_mut().zip(w.iter()) {
                *ui += coef * wi;
            }
        }
        Ok(u)
    }

    /// Multifrequency data with additive complex Gaussian noise of sup-norm `eta`.
    pub fn synthesize(
        &self,
        f: &NeumannDatum,
        profile: &FrequencyProfile,
        omega: &[f64],
        eta: f64,
        seed: u64,
    ) -> Result<MultiFreqData> {
        self.check_datum(f)?;
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise level must be nonnegative, got {eta}")));
        }
        let ks = profile.values(omega)?;
        let lift = HarmonicLift::new(f, &self.boundary);
        // warm the resonance cache before fanning out
        self.kstar_eigenvalues()?;
        let cols: Vec<Vec<Complex64>> = ks
            .par_iter()
            .map(|&k| self.solve_direct_with(&lift, k))
            .collect::<Result<_>>()?;
        let np = self.boundary.len();
        let mut voltages = DMatrix::from_fn(np, ks.len(), |i, j| cols[j][i]);
        if eta > 0.0 {
            let noise = noise_matrix(np, ks.len(), eta, seed);
            voltages += noise;
        }
        Ok(MultiFreqData {
            theta: self.boundary.params().to_vec(),
            omega: omega.to_vec(),
            k: ks,
            voltages,
            eta,
            seed,
        })
    }
}

/// Complex Gaussian noise scaled so that its largest entry has modulus `eta`.
///
/// Column `j` draws from stream `j` of a ChaCha generator keyed by `seed`.
pub fn noise_matrix(rows: usize, cols: usize, eta: f64, seed: u64) -> DMatrix<Complex64> {
    let columns: Vec<Vec<Complex64>> = (0..cols)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            (0..rows)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    let peak = columns
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let scale = if peak > 0.0 { eta / peak } else { 0.0 };
    DMatrix::from_fn(rows, cols, |i, j| columns[j][i] * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DomainConfig {
        DomainConfig::default()
    }

    #[test]
    fn profile_rejects_negative_axis() {
        let p = FrequencyProfile::Affine { k_r: -0.5, c: 1.0 };
        assert!(matches!(p.values(&[0.0]), Err(Error::InvalidProfile { .. })));
        assert!(p.values(&[0.1, 1.0]).is_ok());
        let d = FrequencyProfile::Debye {
            k_inf: 2.0,
            k_s: 0.5,
            tau: 1.0,
        };
        let k = d.eval(1.0);
        assert!((k - Complex64::new(1.25, 0.75)).norm() < 1e-14);
    }

    #[test]
    fn datum_mean_check() {
        assert!(NeumannDatum::from_values(vec![1.0, -1.0, 0.5, -0.5]).is_ok());
        assert!(matches!(
            NeumannDatum::from_values(vec![1.0, 1.0]),
            Err(Error::NonZeroMean { .. })
        ));
    }

    #[test]
    fn omega_grid_spacing() {
        let g = omega_grid(0.1, 10.0, 3, true);
        assert!((g[1] - 1.0).abs() < 1e-14);
        assert_eq!(omega_grid(0.0, 1.0, 5, false)[2], 0.5);
    }

    #[test]
    fn lift_multipliers() {
        let b = BoundaryGrid::unit_circle(64).unwrap();
        for (m, spec) in [
            (1usize, CurrentSpec::cos_theta()),
            (2, CurrentSpec { cos: vec![0.0, 1.0], sin: vec![] }),
        ] {
            let f = NeumannDatum::from_spec(&spec, &b);
            let (vals, trace) = harmonic_lift(&f, &b, &[[0.3, 0.4]]);
            let mf = m as f64;
            for (t, v) in b.params().iter().zip(&trace) {
                assert!((v - (mf * t).cos() / mf).abs() < 1e-12);
            }
            let r: f64 = 0.5;
            let th = 0.4_f64.atan2(0.3);
            assert!((vals[0] - r.powi(m as i32) * (mf * th).cos() / mf).abs() < 1e-12);
        }
        let zero = NeumannDatum::from_values(vec![0.0; 64]).unwrap();
        let (vals, trace) = harmonic_lift(&zero, &b, &[[0.1, 0.1]]);
        assert_eq!(vals[0], 0.0);
        assert!(trace.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn contrast_free_is_exact() {
        let model = ForwardModel::new(
            &StarShape::new_unchecked(vec![0.5, 0.0, 0.0, 0.08], vec![]),
            &cfg(),
            Resolution { inclusion: 128, boundary: 64 },
        )
        .unwrap();
        let f = model.datum(&CurrentSpec::cos_theta());
        let u = model.solve_direct(&f, Complex64::new(1.0, 0.0)).unwrap();
        for (t, v) in model.boundary().params().iter().zip(&u) {
            assert!((v.re - t.cos()).abs() < 1e-12 && v.im == 0.0);
        }
    }

    #[test]
    fn continuous_through_twice_background() {
        // the deflated equilibrium eigenvalue must not collide with any contrast
        let model = ForwardModel::new(
            &StarShape::new_unchecked(vec![0.5, 0.0, 0.0, 0.08], vec![]),
            &cfg(),
            Resolution { inclusion: 128, boundary: 64 },
        )
        .unwrap();
        let f = model.datum(&CurrentSpec::cos_theta());
        let at = model.solve_direct(&f, Complex64::new(2.0, 0.0)).unwrap();
        let near = model.solve_direct(&f, Complex64::new(2.0, 1e-9)).unwrap();
        let gap = at.iter().zip(&near).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(gap < 1e-8, "{gap}");
    }

    #[test]
    fn zero_current_gives_zero() {
        let model = ForwardModel::new(
            &StarShape::circle(0.4),
            &cfg(),
            Resolution { inclusion: 64, boundary: 32 },
        )
        .unwrap();
        let f = NeumannDatum::from_values(vec![0.0; 32]).unwrap();
        let u0 = model.solve_u0(&f).unwrap();
        assert!(u0.data.u0.iter().all(|v| v.abs() < 1e-15));
        assert!(u0.data.rho.unwrap().abs() < 1e-15);
        let u = model.solve_direct(&f, Complex64::new(3.0, 1.0)).unwrap();
        assert!(u.iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn noise_calibration_and_determinism() {
        let a = noise_matrix(16, 5, 0.01, 7);
        let b = noise_matrix(16, 5, 0.01, 7);
        assert_eq!(a, b);
        let peak = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((peak - 0.01).abs() < 1e-16);
        assert_ne!(a, noise_matrix(16, 5, 0.01, 8));
    }
}
