//! Layer potentials built on the Neumann function of the unit disk.
//!
//! `𝒩(x, z) = (1/2π) ln|x − z| + (1/4π) ln(|x|²|z|² − 2x·z + 1)`
//!
//! The second term is the image charge; it is smooth for `x, z` in the open
//! disk. On `∂D` the free-space logarithm is integrated with the periodic
//! log product rule, everything else with the trapezoid rule.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::BoundaryGrid;
use crate::quadrature::log_weights;

pub const MIN_ASSEMBLY_NODES: usize = 32;

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Smooth image part of the Neumann function.
#[inline]
pub(crate) fn image_term(x: [f64; 2], z: [f64; 2]) -> f64 {
    let q = dot(x, x) * dot(z, z) - 2.0 * dot(x, z) + 1.0;
    q.ln() / (4.0 * PI)
}

#[inline]
pub(crate) fn image_gradient(x: [f64; 2], z: [f64; 2]) -> [f64; 2] {
    let zz = dot(z, z);
    let q = dot(x, x) * zz - 2.0 * dot(x, z) + 1.0;
    let c = 1.0 / (2.0 * PI * q);
    [c * (zz * x[0] - z[0]), c * (zz * x[1] - z[1])]
}

/// Unchecked Neumann function.
#[inline]
pub(crate) fn neumann(x: [f64; 2], z: [f64; 2]) -> f64 {
    let d = (x[0] - z[0]).hypot(x[1] - z[1]);
    d.ln() / (2.0 * PI) + image_term(x, z)
}

/// Unchecked gradient of the Neumann function in its first argument.
#[inline]
pub(crate) fn neumann_gradient(x: [f64; 2], z: [f64; 2]) -> [f64; 2] {
    let d = [x[0] - z[0], x[1] - z[1]];
    let r2 = dot(d, d);
    let g = image_gradient(x, z);
    [
        d[0] / (2.0 * PI * r2) + g[0],
        d[1] / (2.0 * PI * r2) + g[1],
    ]
}

/// Neumann function of the unit disk with argument checks.
pub fn neumann_kernel(x: [f64; 2], z: [f64; 2]) -> Result<f64> {
    let norm = z[0].hypot(z[1]);
    if norm >= 1.0 {
        return Err(Error::DomainViolation { norm });
    }
    if x == z || (x[0] - z[0]).hypot(x[1] - z[1]) == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(neumann(x, z))
}

/// Discrete single layer and Neumann–Poincaré operators on `∂D`.
///
/// `s` is symmetric and acts on arc-weighted densities: the trace of
/// `S_D[φ]` at node `i` is `Σ_j s[i,j] φ_j ℓ_j` with `ℓ` the arc weights.
/// `kstar` acts on plain nodal densities.
#[derive(Debug, Clone)]
pub struct KernelMatrices {
    pub s: DMatrix<f64>,
    pub kstar: DMatrix<f64>,
    pub grid: BoundaryGrid,
    arc: Vec<f64>,
}

impl KernelMatrices {
    pub fn arc_weights(&self) -> &[f64] {
        &self.arc
    }

    pub fn n(&self) -> usize {
        self.arc.len()
    }

    /// Boundary trace of `S_D[φ]` on `∂D`.
    pub fn single_layer_trace(&self, density: &[f64]) -> Vec<f64> {
        let q = self.weighted(density);
        (&self.s * q).iter().copied().collect()
    }

    pub(crate) fn weighted(&self, density: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.n(),
            density.iter().zip(&self.arc).map(|(p, w)| p * w),
        )
    }

    /// Symmetric Gram form `G = L s L` with `⟨S φ, ψ⟩ = ψᵀ G φ`.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.arc[i] * self.s[(i, j)] * self.arc[j])
    }

    /// `‖G K* − K*ᵀ G‖ / ‖G‖`, the discrete Calderón defect.
    pub fn calderon_residual(&self) -> f64 {
        let g = self.gram();
        let lhs = &g * &self.kstar;
        let diff = &lhs - lhs.transpose();
        diff.norm() / g.norm()
    }

    /// Writes `s` then `kstar` as little-endian f64, row-major, after a short header.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"MFK1")?;
        out.write_all(&(self.n() as u64).to_le_bytes())?;
        out.write_all(&grid_hash(&self.grid).to_le_bytes())?;
        for m in [&self.s, &self.kstar] {
            for i in 0..self.n() {
                for j in 0..self.n() {
                    out.write_all(&m[(i, j)].to_le_bytes())?;
                }
            }
        }
        Ok(())
    }
}

/// FNV-1a hash of the node coordinates.
pub fn grid_hash(grid: &BoundaryGrid) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for p in grid.points() {
        for c in p {
            for b in c.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
    }
    h
}

/// Assembles `S_D` and `K*_D` on the given inclusion grid.
pub fn assemble(grid: &BoundaryGrid) -> Result<KernelMatrices> {
    let n = grid.len();
    if n < MIN_ASSEMBLY_NODES {
        return Err(Error::ResolutionTooLow {
            n,
            min: MIN_ASSEMBLY_NODES,
        });
    }
    let h = grid.step();
    let lw = log_weights(n);
    let pts = grid.points();
    let nus = grid.normals();
    let speed = grid.jacobians();
    let kappa = grid.curvature();
    let t = grid.params();
    let arc = grid.arc_weights();

    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = pts[i];
            let mut srow = vec![0.0; n];
            let mut krow = vec![0.0; n];
            for j in 0..n {
                let z = pts[j];
                let smooth = if i == j {
                    speed[i].ln()
                } else {
                    let d = (x[0] - z[0]).hypot(x[1] - z[1]);
                    let half = (0.5 * (t[i] - t[j])).sin().abs();
                    (d / (2.0 * half)).ln()
                };
                let sing = 0.5 * lw[(i + n - j) % n] / h;
                srow[j] = (sing + smooth) / (2.0 * PI) + image_term(x, z);

                let grad = if i == j {
                    let g = image_gradient(x, z);
                    dot(g, nus[i]) + kappa[i] / (4.0 * PI)
                } else {
                    dot(neumann_gradient(x, z), nus[i])
                };
                krow[j] = grad * arc[j];
            }
            (srow, krow)
        })
        .collect();

    let mut s = DMatrix::zeros(n, n);
    let mut kstar = DMatrix::zeros(n, n);
    for (i, (sr, kr)) in rows.into_iter().enumerate() {
        for j in 0..n {
            s[(i, j)] = sr[j];
            kstar[(i, j)] = kr[j];
        }
    }
    // The log rule and the kernel are symmetric up to rounding.
    let s = (&s + s.transpose()) * 0.5;
    Ok(KernelMatrices {
        s,
        kstar,
        grid: grid.clone(),
        arc,
    })
}

/// Matrix mapping densities on `grid` to `S_D[φ]` at off-boundary targets.
pub fn single_layer_matrix(grid: &BoundaryGrid, targets: &[[f64; 2]]) -> DMatrix<f64> {
    let arc = grid.arc_weights();
    let pts = grid.points();
    let rows: Vec<Vec<f64>> = targets
        .par_iter()
        .map(|&y| pts.iter().zip(&arc).map(|(&z, w)| neumann(y, z) * w).collect())
        .collect();
    DMatrix::from_fn(targets.len(), grid.len(), |i, j| rows[i][j])
}

/// Minimum admissible distance of an evaluation target from `∂D`.
pub fn near_zone(grid: &BoundaryGrid) -> f64 {
    2.0 * PI * grid.max_jacobian() / grid.len() as f64
}

/// `S_D[φ]` at targets away from `∂D`, by the plain trapezoid rule.
pub fn eval_s(grid: &BoundaryGrid, density: &[f64], targets: &[[f64; 2]]) -> Result<Vec<f64>> {
    if density.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "density has {} values for {} nodes",
            density.len(),
            grid.len()
        )));
    }
    let min = near_zone(grid);
    for &y in targets {
        let distance = grid.node_distance(y);
        if distance <= min {
            return Err(Error::TargetTooClose {
                x: y[0],
                y: y[1],
                distance,
                min,
            });
        }
    }
    let arc = grid.arc_weights();
    Ok(targets
        .iter()
        .map(|&y| {
            grid.points()
                .iter()
                .zip(&arc)
                .zip(density)
                .map(|((&z, w), p)| neumann(y, z) * w * p)
                .sum()
        })
        .collect())
}

/// `⟨−S_D φ, ψ⟩` with arc-length quadrature; the energy of `S_D[φ]` when `φ = ψ`.
pub fn s_inner(kernels: &KernelMatrices, phi: &[f64], psi: &[f64]) -> f64 {
    let qa = kernels.weighted(phi);
    let qb = kernels.weighted(psi);
    -qb.dot(&(&kernels.s * qa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{discretize, StarShape};

    fn trefoil() -> StarShape {
        StarShape::new_unchecked(vec![0.5, 0.0, 0.0, 0.08], vec![])
    }

    #[test]
    fn kernel_argument_checks() {
        assert!(matches!(
            neumann_kernel([0.1, 0.0], [0.1, 0.0]),
            Err(Error::SingularEvaluation)
        ));
        assert!(matches!(
            neumann_kernel([0.1, 0.0], [1.0, 0.0]),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn kernel_symmetry() {
        let a = neumann_kernel([0.5, 0.0], [0.0, 0.3]).unwrap();
        let b = neumann_kernel([0.0, 0.3], [0.5, 0.0]).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn kernel_continuous_at_origin_source() {
        let x = [0.9, 0.0];
        let limit = 0.9_f64.ln() / (2.0 * PI);
        for t in [1e-2, 1e-4, 1e-6, 1e-8] {
            let v = neumann_kernel(x, [t, 0.0]).unwrap();
            assert!((v - limit).abs() < 2.0 * t, "t={t}: {v} vs {limit}");
        }
        assert!((neumann_kernel(x, [0.0, 0.0]).unwrap() - limit).abs() < 1e-15);
    }

    #[test]
    fn kernel_boundary_flux_fd() {
        let z = [0.3, 0.2];
        let h = 1e-5;
        for i in 0..64 {
            let th = 2.0 * PI * i as f64 / 64.0;
            let (s, c) = th.sin_cos();
            let f = |r: f64| neumann([r * c, r * s], z);
            let d = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
            assert!((d - 1.0 / (2.0 * PI)).abs() < 1e-6, "theta {th}: {d}");
        }
    }

    #[test]
    fn kernel_zero_boundary_mean_and_harmonic() {
        let z = [0.3, -0.4];
        let n = 2048;
        let mean: f64 = (0..n)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n as f64;
                neumann([th.cos(), th.sin()], z)
            })
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 1e-12);
        // five-point Laplacian away from the source
        let x = [-0.2, 0.5];
        let h = 1e-3;
        let lap = (neumann([x[0] + h, x[1]], z)
            + neumann([x[0] - h, x[1]], z)
            + neumann([x[0], x[1] + h], z)
            + neumann([x[0], x[1] - h], z)
            - 4.0 * neumann(x, z))
            / (h * h);
        assert!(lap.abs() < 1e-5, "laplacian {lap}");
    }

    #[test]
    fn resolution_floor() {
        let g = discretize(&StarShape::circle(0.5), 16).unwrap();
        assert!(matches!(assemble(&g), Err(Error::ResolutionTooLow { .. })));
    }

    #[test]
    fn s_symmetric_and_negative_definite() {
        let g = discretize(&trefoil(), 128).unwrap();
        let k = assemble(&g).unwrap();
        let asym = (&k.s - k.s.transpose()).norm() / k.s.norm();
        assert!(asym < 1e-12);
        let eig = (-k.gram()).symmetric_eigenvalues();
        assert!(eig.min() > 0.0, "min eigenvalue {}", eig.min());
    }

    #[test]
    fn constant_density_at_center() {
        let r0 = 0.5;
        let g = discretize(&StarShape::circle(r0), 64).unwrap();
        let v = eval_s(&g, &vec![1.0; 64], &[[0.0, 0.0]]).unwrap();
        assert!((v[0] - r0 * r0.ln()).abs() < 1e-13);
        let zero = eval_s(&g, &vec![0.0; 64], &[[0.0, 0.0], [0.95, 0.1]]).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn eval_rejects_close_targets() {
        let g = discretize(&StarShape::circle(0.5), 64).unwrap();
        assert!(matches!(
            eval_s(&g, &vec![1.0; 64], &[[0.501, 0.0]]),
            Err(Error::TargetTooClose { .. })
        ));
    }

    #[test]
    fn kstar_has_half_on_concentric_constants() {
        let g = discretize(&StarShape::circle(0.5), 64).unwrap();
        let k = assemble(&g).unwrap();
        let out = &k.kstar * DVector::from_element(64, 1.0);
        for v in out.iter() {
            assert!((v - 0.5).abs() < 1e-13, "{v}");
        }
    }

    #[test]
    fn s_inner_symmetric_positive() {
        let g = discretize(&trefoil(), 96).unwrap();
        let k = assemble(&g).unwrap();
        let a: Vec<f64> = (0..96).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..96).map(|i| (i as f64 * 0.11).cos() - 0.2).collect();
        assert!((s_inner(&k, &a, &b) - s_inner(&k, &b, &a)).abs() < 1e-12);
        assert!(s_inner(&k, &a, &a) > 0.0);
    }

    #[test]
    fn dump_header() {
        let g = discretize(&StarShape::circle(0.5), 32).unwrap();
        let k = assemble(&g).unwrap();
        let mut buf = Vec::new();
        k.write_dump(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"MFK1");
        assert_eq!(buf.len(), 4 + 8 + 8 + 2 * 32 * 32 * 8);
    }
}
