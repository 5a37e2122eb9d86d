//! Spectrum of the variational Poincaré operator and plasmonic resonances.
//!
//! Eigenfunctions are single layer potentials `w = S_D[φ]`. With `μ` an
//! eigenvalue of `K*_D` (self-adjoint in the `−S_D` inner product), the
//! transmission condition `∂w⁺ = (1 − 1/λ) ∂w⁻` gives `λ = ½ − μ`. The
//! density with `μ = ½` has `S_D[φ]` constant in `D` and a nonzero flux
//! through `∂Ω`, so it is not a member of the working space and is dropped.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{r_inf, BoundaryGrid, StarShape};
use crate::potential::{eval_s, neumann, single_layer_matrix, KernelMatrices};

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub n_modes: usize,
    /// Modes with `|λ − ½|` at or below this are treated as unresolved.
    pub tail_threshold: f64,
    pub k0: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            n_modes: 60,
            tail_threshold: 1e-8,
            k0: 1.0,
        }
    }
}

/// Eigen-data of the variational Poincaré operator, ordered by `|λ − ½|` descending.
#[derive(Debug, Clone)]
pub struct NPSpectrum {
    pub lambda: Vec<f64>,
    /// Densities on `∂D`, one column per mode, unit energy.
    pub densities: DMatrix<f64>,
    /// `w_n` at the nodes of `∂Ω`.
    pub traces_domega: DMatrix<f64>,
    /// `w_n` at the nodes of `∂D`.
    pub traces_dd: DMatrix<f64>,
    pub resonances: Vec<f64>,
    pub k0: f64,
    /// Lower bound `k₀(−1 − ((r_D + 2)/r_D)²)` with `r_D` from the grid.
    pub bound: f64,
    /// Modes dropped below the tail threshold.
    pub discarded: usize,
}

impl NPSpectrum {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Indices of modes with `λ > ½`.
    pub fn plus_branch(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.lambda[i] > 0.5).collect()
    }

    /// Indices of modes with `λ < ½`.
    pub fn minus_branch(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.lambda[i] < 0.5).collect()
    }

    /// Most negative computed resonance, the left end of the pole segment.
    pub fn lowest_resonance(&self) -> f64 {
        self.resonances.iter().copied().fold(0.0, f64::min)
    }

    /// Eigenvalues of `K*_D` for the kept modes.
    pub fn kstar_eigenvalues(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| 0.5 - l).collect()
    }

    pub fn report(&self) -> SpectrumReport {
        SpectrumReport {
            lambda: self.lambda.clone(),
            resonances: self.resonances.clone(),
            bound: self.bound,
            discarded: self.discarded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub lambda: Vec<f64>,
    pub resonances: Vec<f64>,
    pub bound: f64,
    #[serde(default)]
    pub discarded: usize,
}

/// All eigenpairs `(μ, φ)` of `K*_D` in the `−S_D` geometry, `φ` orthonormal.
pub(crate) fn kstar_eigen(kernels: &KernelMatrices) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let g = kernels.gram();
    let weight = -&g;
    let chol = Cholesky::new(weight).ok_or_else(|| {
        Error::NotConverged("−S is not positive definite on this grid".into())
    })?;
    let gk = &g * &kernels.kstar;
    let a = (&gk + gk.transpose()) * -0.5;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| Error::NotConverged("singular Cholesky factor".into()))?;
    let y = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::NotConverged("singular Cholesky factor".into()))?;
    let y = (&y + y.transpose()) * 0.5;
    let eig = SymmetricEigen::new(y);
    let v = l
        .transpose()
        .solve_upper_triangular(&eig.eigenvectors)
        .ok_or_else(|| Error::NotConverged("singular Cholesky factor".into()))?;
    Ok((eig.eigenvalues, v))
}

/// Index of the equilibrium density: the eigenvector with the largest net charge.
pub(crate) fn equilibrium_index(kernels: &KernelMatrices, vectors: &DMatrix<f64>) -> usize {
    let arc = kernels.arc_weights();
    (0..vectors.ncols())
        .map(|c| {
            let charge: f64 = vectors.column(c).iter().zip(arc).map(|(v, w)| v * w).sum();
            (c, charge.abs())
        })
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
        .0
}

pub fn compute_spectrum(
    kernels: &KernelMatrices,
    boundary: &BoundaryGrid,
    opts: &SpectrumOptions,
) -> Result<NPSpectrum> {
    let n = kernels.n();
    if opts.n_modes > n / 4 {
        return Err(Error::NotConverged(format!(
            "{} modes requested but a {n}-node grid resolves at most {}",
            opts.n_modes,
            n / 4
        )));
    }
    let (mu, vecs) = kstar_eigen(kernels)?;
    let eq = equilibrium_index(kernels, &vecs);

    let mut order: Vec<(usize, f64)> = (0..n)
        .filter(|&i| i != eq)
        .map(|i| (i, 0.5 - mu[i]))
        .collect();
    order.sort_by(|a, b| {
        (b.1 - 0.5)
            .abs()
            .partial_cmp(&(a.1 - 0.5).abs())
            .unwrap()
            .then(a.0.cmp(&b.0))
    });
    let resolved: Vec<(usize, f64)> = order
        .iter()
        .copied()
        .filter(|(_, l)| (l - 0.5).abs() > opts.tail_threshold)
        .collect();
    let discarded = order.len() - resolved.len();
    let kept: Vec<(usize, f64)> = resolved.into_iter().take(opts.n_modes).collect();

    if let Some((_, l)) = kept.iter().find(|(_, l)| !(*l > 0.0 && *l < 1.0)) {
        return Err(Error::NotConverged(format!("eigenvalue {l} outside (0, 1)")));
    }

    let m = kept.len();
    let mut densities = DMatrix::zeros(n, m);
    for (c, (i, _)) in kept.iter().enumerate() {
        let mut col = vecs.column(*i).clone_owned();
        // deterministic sign: largest entry positive
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
        densities.set_column(c, &col);
    }
    let lambda: Vec<f64> = kept.iter().map(|(_, l)| *l).collect();

    let weighted = DMatrix::from_fn(n, m, |i, j| densities[(i, j)] * kernels.arc_weights()[i]);
    let traces_dd = &kernels.s * &weighted;
    let cross = single_layer_matrix(&kernels.grid, boundary.points());
    let traces_domega = &cross * &densities;

    let resonances = lambda.iter().map(|l| opts.k0 * (1.0 - 1.0 / l)).collect();
    let r_grid = kernels
        .grid
        .points()
        .iter()
        .zip(kernels.grid.normals())
        .map(|(p, nu)| p[0] * nu[0] + p[1] * nu[1])
        .fold(f64::INFINITY, f64::min);

    Ok(NPSpectrum {
        lambda,
        densities,
        traces_domega,
        traces_dd,
        resonances,
        k0: opts.k0,
        bound: bound_from_radius(r_grid, opts.k0),
        discarded,
    })
}

fn bound_from_radius(r: f64, k0: f64) -> f64 {
    k0 * (-1.0 - ((r + 2.0) / r).powi(2))
}

/// Class-uniform lower bound on the resonances of `shape`.
pub fn resonance_bound(shape: &StarShape, k0: f64) -> f64 {
    bound_from_radius(r_inf(shape), k0)
}

/// Outcome of [`neumann_series_check`].
#[derive(Debug, Clone, Copy)]
pub struct NeumannSeriesCheck {
    /// `−Σ_{n≤N} w_n(x) w_n(z)`.
    pub partial_sum: f64,
    /// Projection of `𝒩(·, z)` onto the working space, evaluated at `x`.
    pub projection: f64,
    pub residual: f64,
    /// `‖P𝒩_z‖² − Σ_{n≤N} w_n(z)²`, nonincreasing in `N`.
    pub energy_residual: f64,
}

/// Compares the truncated eigen-expansion of the Neumann function with its
/// projection onto the span of single layer potentials.
pub fn neumann_series_check(
    spectrum: &NPSpectrum,
    kernels: &KernelMatrices,
    x: [f64; 2],
    z: [f64; 2],
    n_terms: usize,
) -> Result<NeumannSeriesCheck> {
    let grid = &kernels.grid;
    let n_terms = n_terms.min(spectrum.len());
    let mut wx = Vec::with_capacity(n_terms);
    let mut wz = Vec::with_capacity(n_terms);
    for c in 0..n_terms {
        let dens: Vec<f64> = spectrum.densities.column(c).iter().copied().collect();
        let v = eval_s(grid, &dens, &[x, z])?;
        wx.push(v[0]);
        wz.push(v[1]);
    }
    let partial_sum = -wx.iter().zip(&wz).map(|(a, b)| a * b).sum::<f64>();

    // S q − c·1 = 𝒩(·, z) on ∂D, Σ q = 0
    let n = kernels.n();
    let mut sys = DMatrix::zeros(n + 1, n + 1);
    sys.view_mut((0, 0), (n, n)).copy_from(&kernels.s);
    let mut rhs = DVector::zeros(n + 1);
    for i in 0..n {
        sys[(i, n)] = -1.0;
        sys[(n, i)] = 1.0;
        rhs[i] = neumann(grid.points()[i], z);
    }
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("projection of the Neumann function".into()))?;
    let q = sol.rows(0, n);
    let density: Vec<f64> = q
        .iter()
        .zip(kernels.arc_weights())
        .map(|(q, w)| q / w)
        .collect();
    let projection = eval_s(grid, &density, &[x])?[0];
    let energy = -q.dot(&(&kernels.s * q));
    let captured: f64 = wz.iter().map(|w| w * w).sum();

    Ok(NeumannSeriesCheck {
        partial_sum,
        projection,
        residual: partial_sum - projection,
        energy_residual: energy - captured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::discretize;
    use crate::potential::{assemble, s_inner};

    #[test]
    fn bound_values() {
        assert!((resonance_bound(&StarShape::circle(0.5), 1.0) + 26.0).abs() < 1e-12);
        assert!((bound_from_radius(1e9, 1.0) + 2.0).abs() < 1e-8);
        assert!((resonance_bound(&StarShape::circle(0.5), 2.0) + 52.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_modes() {
        let g = discretize(&StarShape::circle(0.5), 64).unwrap();
        let k = assemble(&g).unwrap();
        let b = BoundaryGrid::unit_circle(64).unwrap();
        let opts = SpectrumOptions {
            n_modes: 17,
            ..Default::default()
        };
        assert!(matches!(compute_spectrum(&k, &b, &opts), Err(Error::NotConverged(_))));
    }

    #[test]
    fn orthonormal_densities() {
        let shape = StarShape::new_unchecked(vec![0.5, 0.05, 0.0, 0.08], vec![0.0, 0.03]);
        let g = discretize(&shape, 192).unwrap();
        let k = assemble(&g).unwrap();
        let b = BoundaryGrid::unit_circle(64).unwrap();
        let sp = compute_spectrum(&k, &b, &SpectrumOptions { n_modes: 20, ..Default::default() })
            .unwrap();
        for i in 0..sp.len() {
            let a: Vec<f64> = sp.densities.column(i).iter().copied().collect();
            for j in 0..sp.len() {
                let c: Vec<f64> = sp.densities.column(j).iter().copied().collect();
                let v = s_inner(&k, &a, &c);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-8, "({i},{j}) = {v}");
            }
        }
        assert!(!sp.minus_branch().is_empty());
        for (l, kn) in sp.lambda.iter().zip(&sp.resonances) {
            assert!((1.0 + l * (kn - 1.0)).abs() < 1e-14);
            assert!(*kn > sp.bound);
        }
    }
}
