//! Separating the frequency-independent part of multifrequency voltages.
//!
//! At every boundary point the voltage is a meromorphic function of the
//! contrast `k` with real poles shared by all points:
//! `α(k) = α_∞ + Σ_n R_n / (k − p_n)`, and `α_∞ = k₀⁻¹u₀`. The fit is
//! built in two stages: a set-valued AAA barycentric interpolant selects
//! support points and exposes the shared poles, then residues and the
//! constant term are refitted by linear least squares with the poles fixed.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{CauchyData, MultiFreqData};
use crate::spectrum::resonance_bound;
use crate::geometry::{DomainConfig, StarShape};

/// Disk in the `k` plane where physical poles may lie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleRegion {
    pub center: f64,
    pub radius: f64,
}

impl AdmissibleRegion {
    /// Disk of radius `1.5·δ̂⁻¹` about the midpoint of `[−δ̂⁻¹, 0]`, with `δ̂⁻¹`
    /// the class-uniform resonance bound for the smallest admissible circle.
    pub fn for_class(cfg: &DomainConfig) -> Self {
        let span = -resonance_bound(&StarShape::circle(cfg.b0), cfg.k0);
        Self {
            center: -0.5 * span,
            radius: 1.5 * span,
        }
    }

    pub fn contains(&self, p: Complex64) -> bool {
        (p - self.center).norm() <= self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_poles: usize,
    /// Relative tolerance on the sup-norm interpolation residual.
    pub tol: f64,
    pub region: AdmissibleRegion,
}

impl FitOptions {
    pub fn new(cfg: &DomainConfig) -> Self {
        Self {
            max_poles: 16,
            tol: 1e-11,
            region: AdmissibleRegion::for_class(cfg),
        }
    }

    /// Raises the tolerance above the noise floor of the data.
    pub fn for_noise(mut self, eta: f64, data_scale: f64) -> Self {
        if eta > 0.0 && data_scale > 0.0 {
            self.tol = self.tol.max(2.0 * eta / data_scale);
        }
        self
    }
}

/// Shared-pole rational model of the voltages at every boundary point.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalModel {
    pub theta: Vec<f64>,
    pub poles: Vec<Complex64>,
    /// Value at `k = ∞`, one per boundary point.
    pub alpha_inf: Vec<Complex64>,
    /// `residues[(n, i)]`: residue of pole `n` at point `i`.
    pub residues: DMatrix<Complex64>,
    /// Relative sup-norm residual of the final least-squares fit.
    pub residual: f64,
}

impl RationalModel {
    pub fn n_points(&self) -> usize {
        self.alpha_inf.len()
    }

    pub fn eval(&self, point: usize, k: Complex64) -> Complex64 {
        self.alpha_inf[point]
            + self
                .poles
                .iter()
                .enumerate()
                .map(|(n, p)| self.residues[(n, point)] / (k - p))
                .sum::<Complex64>()
    }

    /// The real pole closest to zero from the left.
    pub fn leading_pole(&self) -> Option<Complex64> {
        self.poles
            .iter()
            .copied()
            .filter(|p| p.re < 0.0)
            .max_by(|a, b| a.re.partial_cmp(&b.re).unwrap())
    }

    pub fn to_json(&self) -> RationalModelJson {
        RationalModelJson {
            poles: self.poles.iter().map(|p| [p.re, p.im]).collect(),
            alpha_inf: self.alpha_inf.iter().map(|a| [a.re, a.im]).collect(),
            residues: (0..self.poles.len())
                .map(|n| {
                    (0..self.n_points())
                        .map(|i| [self.residues[(n, i)].re, self.residues[(n, i)].im])
                        .collect()
                })
                .collect(),
            theta: self.theta.clone(),
            residual: self.residual,
        }
    }

    pub fn from_json(j: &RationalModelJson) -> Result<Self> {
        let np = j.alpha_inf.len();
        if j.residues.len() != j.poles.len() || j.residues.iter().any(|r| r.len() != np) {
            return Err(Error::DimensionMismatch("residue table shape".into()));
        }
        let c = |v: &[f64; 2]| Complex64::new(v[0], v[1]);
        Ok(Self {
            theta: j.theta.clone(),
            poles: j.poles.iter().map(c).collect(),
            alpha_inf: j.alpha_inf.iter().map(c).collect(),
            residues: DMatrix::from_fn(j.poles.len(), np, |n, i| c(&j.residues[n][i])),
            residual: j.residual,
        })
    }
}

/// On-disk form: complex numbers as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalModelJson {
    pub poles: Vec<[f64; 2]>,
    pub alpha_inf: Vec<[f64; 2]>,
    pub residues: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub theta: Vec<f64>,
    #[serde(default)]
    pub residual: f64,
}

// ---------------------------------------------------------------------------
// Stage 1: set-valued AAA
// ---------------------------------------------------------------------------

/// Barycentric interpolant `r(z) = Σ w_j f_j/(z − z_j) / Σ w_j/(z − z_j)`.
#[derive(Debug, Clone)]
pub struct Barycentric {
    pub support: Vec<Complex64>,
    /// `values[(j, i)]`: function `i` at support point `j`.
    pub values: DMatrix<Complex64>,
    pub weights: Vec<Complex64>,
    pub error: f64,
}

impl Barycentric {
    pub fn eval(&self, func: usize, z: Complex64) -> Complex64 {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        for (j, (zj, wj)) in self.support.iter().zip(&self.weights).enumerate() {
            let d = z - zj;
            if d.norm() == 0.0 {
                return self.values[(j, func)];
            }
            num += wj * self.values[(j, func)] / d;
            den += wj / d;
        }
        num / den
    }

    /// Zeros of the denominator.
    pub fn poles(&self) -> Vec<Complex64> {
        let m = self.support.len();
        if m < 2 {
            return Vec::new();
        }
        let wsum: Complex64 = self.weights.iter().sum();
        let wmax = self.weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
        // The shift is a support point, never a pole of the interpolant.
        let shift = self.support[0];
        let zs: Vec<Complex64> = self.support.iter().map(|z| z - shift).collect();
        if wsum.norm() <= 1e-14 * wmax {
            // degree drop: one pole sits at infinity; fall back to the
            // companion of Σ w_j Π_{l≠j}(z − z_l) with leading term removed
            return poles_by_deflation(&zs, &self.weights)
                .into_iter()
                .map(|p| p + shift)
                .collect();
        }
        let wz: Vec<Complex64> = self.weights.iter().zip(&zs).map(|(w, z)| w * z).collect();
        let c = DMatrix::from_fn(m, m, |i, j| {
            let d = if i == j { zs[i] } else { Complex64::new(0.0, 0.0) };
            d - wz[j] / wsum
        });
        let mut eig = complex_eigenvalues(c);
        // drop the spurious zero eigenvalue (left null vector wᵀ)
        if let Some((idx, _)) = eig
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
        {
            eig.remove(idx);
        }
        eig.into_iter().map(|p| p + shift).collect()
    }
}

fn poles_by_deflation(zs: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
    // Perturb the weights slightly so that Σw ≠ 0, then discard the huge root.
    let m = zs.len();
    let scale = w.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let mut w2 = w.to_vec();
    w2[0] += Complex64::new(1e-10 * scale, 0.0);
    let wsum: Complex64 = w2.iter().sum();
    let wz: Vec<Complex64> = w2.iter().zip(zs).map(|(w, z)| w * z).collect();
    let c = DMatrix::from_fn(m, m, |i, j| {
        let d = if i == j { zs[i] } else { Complex64::new(0.0, 0.0) };
        d - wz[j] / wsum
    });
    let mut eig = complex_eigenvalues(c);
    eig.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    // smallest is the spurious zero, largest escaped to infinity
    if eig.len() >= 2 {
        eig.remove(0);
        eig.pop();
    }
    eig
}

fn complex_eigenvalues(m: DMatrix<Complex64>) -> Vec<Complex64> {
    let n = m.nrows();
    let schur = m.schur();
    let (_, t) = schur.unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Smallest right singular vector of a tall complex matrix.
fn min_singular_vector(a: &DMatrix<Complex64>) -> DVector<Complex64> {
    let ncols = a.ncols();
    let r = if a.nrows() > ncols {
        a.clone().qr().r()
    } else {
        a.clone()
    };
    let svd = r.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .unwrap();
    // rows of v_t are conjugated right singular vectors
    DVector::from_iterator(ncols, v_t.row(imin).iter().map(|c| c.conj()))
}

/// Set-valued AAA: shared support points and weights for all columns of `f`.
///
/// Stops when the sup-norm residual over all functions drops below
/// `tol · max|f|` or `max_support` points are used; the last approximant is
/// returned either way and its `error` tells which.
pub fn aaa(z: &[Complex64], f: &DMatrix<Complex64>, tol: f64, max_support: usize) -> Barycentric {
    let mut last = None;
    aaa_steps(z, f, tol, max_support, |b| {
        last = Some(b.clone());
        false
    });
    last.expect("at least one AAA step")
}

/// Runs the greedy iteration, handing every intermediate approximant to
/// `visit`; the iteration stops early when `visit` returns true.
pub fn aaa_steps(
    z: &[Complex64],
    f: &DMatrix<Complex64>,
    tol: f64,
    max_support: usize,
    mut visit: impl FnMut(&Barycentric) -> bool,
) {
    let n = z.len();
    let nf = f.ncols();
    assert_eq!(f.nrows(), n);
    assert!(n >= 2, "AAA needs at least two samples");
    let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut support_idx: Vec<usize> = Vec::new();
    let mut approx = DMatrix::from_fn(n, nf, |_, c| f.column(c).mean());

    for _ in 0..max_support.min(n - 1) {
        // next support point: largest residual
        let (jmax, _) = (0..n)
            .filter(|j| !support_idx.contains(j))
            .map(|j| {
                let e = (0..nf).map(|c| (f[(j, c)] - approx[(j, c)]).norm()).fold(0.0, f64::max);
                (j, e)
            })
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        support_idx.push(jmax);
        let m = support_idx.len();
        let rest: Vec<usize> = (0..n).filter(|j| !support_idx.contains(j)).collect();
        let cauchy = DMatrix::from_fn(rest.len(), m, |r, s| {
            Complex64::new(1.0, 0.0) / (z[rest[r]] - z[support_idx[s]])
        });
        let mut loewner = DMatrix::zeros(rest.len() * nf, m);
        for c in 0..nf {
            for (r, &j) in rest.iter().enumerate() {
                for (s, &js) in support_idx.iter().enumerate() {
                    loewner[(c * rest.len() + r, s)] = (f[(j, c)] - f[(js, c)]) * cauchy[(r, s)];
                }
            }
        }
        let w = min_singular_vector(&loewner);

        let den = &cauchy * &w;
        let mut err: f64 = 0.0;
        for c in 0..nf {
            for (r, &j) in rest.iter().enumerate() {
                let num: Complex64 = (0..m)
                    .map(|s| cauchy[(r, s)] * w[s] * f[(support_idx[s], c)])
                    .sum();
                approx[(j, c)] = num / den[r];
                err = err.max((f[(j, c)] - approx[(j, c)]).norm());
            }
            for &js in &support_idx {
                approx[(js, c)] = f[(js, c)];
            }
        }
        let bary = Barycentric {
            support: support_idx.iter().map(|&j| z[j]).collect(),
            values: DMatrix::from_fn(m, nf, |s, c| f[(support_idx[s], c)]),
            weights: w.iter().copied().collect(),
            error: if scale > 0.0 { err / scale } else { 0.0 },
        };
        if visit(&bary) || err <= tol * scale {
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// Stage 2: residues and constants with fixed poles
// ---------------------------------------------------------------------------

/// Least-squares constants and residues for fixed poles; returns `(alpha_inf, residues, residual)`.
fn fit_residues(
    z: &[Complex64],
    f: &DMatrix<Complex64>,
    poles: &[Complex64],
) -> Result<(Vec<Complex64>, DMatrix<Complex64>, f64)> {
    let n = z.len();
    let p = poles.len();
    let mut basis = DMatrix::from_fn(n, p + 1, |j, c| {
        if c == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0) / (z[j] - poles[c - 1])
        }
    });
    let colscale: Vec<f64> = (0..=p).map(|c| basis.column(c).norm()).collect();
    for c in 0..=p {
        let s = colscale[c];
        basis.column_mut(c).iter_mut().for_each(|v| *v /= s);
    }
    let qr = basis.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let rhs = q.adjoint() * f;
    let coef = r
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::SingularSystem("rational least squares".into()))?;
    let fitted = &basis * &coef;
    let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let residual = (f - &fitted).iter().map(|v| v.norm()).fold(0.0, f64::max) / scale;
    let nf = f.ncols();
    let alpha = (0..nf).map(|i| coef[(0, i)] / colscale[0]).collect();
    let res = DMatrix::from_fn(p, nf, |n, i| coef[(n + 1, i)] / colscale[n + 1]);
    Ok((alpha, res, residual))
}

/// Two-stage shared-pole rational fit of multifrequency data.
///
/// The AAA iteration proposes pole sets of growing size; the first one whose
/// least-squares refit meets the tolerance at every point is kept.
pub fn fit_rational(data: &MultiFreqData, opts: &FitOptions) -> Result<RationalModel> {
    let mut distinct: Vec<Complex64> = Vec::new();
    for k in &data.k {
        if !distinct.iter().any(|d| (d - k).norm() <= 1e-14 * k.norm().max(1.0)) {
            distinct.push(*k);
        }
    }
    let needed = 2 * opts.max_poles + 2;
    if distinct.len() < needed || distinct.len() < data.k.len() {
        return Err(Error::InsufficientFrequencies {
            needed,
            got: distinct.len(),
        });
    }
    // rows: frequencies, columns: boundary points
    let f = data.voltages.transpose();
    let z = &data.k;
    let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(RationalModel {
            theta: data.theta.clone(),
            poles: Vec::new(),
            alpha_inf: vec![Complex64::new(0.0, 0.0); f.ncols()],
            residues: DMatrix::zeros(0, f.ncols()),
            residual: 0.0,
        });
    }

    let mut best: Option<RationalModel> = None;
    let mut failure = None;
    aaa_steps(z, &f, opts.tol, opts.max_poles + 1, |bary| {
        let poles: Vec<Complex64> = bary
            .poles()
            .into_iter()
            .filter(|p| p.re.is_finite() && p.im.is_finite() && opts.region.contains(*p))
            .collect();
        match refit(z, &f, poles, opts.tol * scale) {
            Ok(model) => {
                let done = model.residual <= opts.tol;
                if best.as_ref().is_none_or(|b| model.residual < b.residual) {
                    best = Some(model);
                }
                done
            }
            Err(e) => {
                failure = Some(e);
                true
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let best = best.expect("at least one AAA step");
    if best.residual > opts.tol {
        return Err(Error::FitDiverged {
            residual: best.residual,
            tol: opts.tol,
            poles: opts.max_poles,
        });
    }
    Ok(RationalModel {
        theta: data.theta.clone(),
        ..best
    })
}

/// Least-squares refit with pruning of pole-residue pairs whose largest
/// contribution over the data stays below `floor`.
///
/// Physical poles are real, so candidates are moved to the real axis and
/// their locations refined before pruning.
fn refit(
    z: &[Complex64],
    f: &DMatrix<Complex64>,
    poles: Vec<Complex64>,
    floor: f64,
) -> Result<RationalModel> {
    let mut real: Vec<f64> = poles.iter().map(|p| p.re).collect();
    real.sort_by(|a, b| b.total_cmp(a));
    real.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * b.abs().max(1.0));
    real = refine_poles(z, f, real);
    loop {
        let poles: Vec<Complex64> = real.iter().map(|&p| Complex64::new(p, 0.0)).collect();
        let (alpha, res, residual) = fit_residues(z, f, &poles)?;
        let weakest = (0..poles.len())
            .map(|n| {
                let contrib = (0..f.ncols())
                    .flat_map(|i| z.iter().map(move |k| (i, k)))
                    .map(|(i, k)| (res[(n, i)] / (k - poles[n])).norm())
                    .fold(0.0, f64::max);
                (n, contrib)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match weakest {
            Some((n, c)) if c < floor => {
                real.remove(n);
                real = refine_poles(z, f, real);
            }
            _ => {
                return Ok(RationalModel {
                    theta: Vec::new(),
                    poles,
                    alpha_inf: alpha,
                    residues: res,
                    residual,
                })
            }
        }
    }
}

/// Sum of squared residuals of the linear fit with the given real poles.
fn projected_sse(z: &[Complex64], f: &DMatrix<Complex64>, poles: &[f64]) -> Option<DVector<f64>> {
    let n = z.len();
    let basis = DMatrix::from_fn(n, poles.len() + 1, |j, c| {
        if c == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0) / (z[j] - poles[c - 1])
        }
    });
    let qr = basis.qr();
    let q = qr.q();
    let r = qr.r();
    let tiny = r.diagonal().iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
    if !(tiny > 1e-13 * r[(0, 0)].norm()) {
        return None;
    }
    let resid = f - &q * (q.adjoint() * f);
    let mut out = DVector::zeros(2 * resid.len());
    for (i, v) in resid.iter().enumerate() {
        out[2 * i] = v.re;
        out[2 * i + 1] = v.im;
    }
    Some(out)
}

/// Gauss–Newton on the pole locations with the linear coefficients
/// eliminated; returns the input unchanged if no step helps.
fn refine_poles(z: &[Complex64], f: &DMatrix<Complex64>, mut poles: Vec<f64>) -> Vec<f64> {
    if poles.is_empty() {
        return poles;
    }
    let Some(mut r) = projected_sse(z, f, &poles) else {
        return poles;
    };
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..50 {
        let cols: Option<Vec<DVector<f64>>> = (0..poles.len())
            .map(|i| {
                let h = 1e-7 * poles[i].abs().max(1e-2);
                let mut p = poles.clone();
                p[i] += h;
                let plus = projected_sse(z, f, &p)?;
                p[i] -= 2.0 * h;
                let minus = projected_sse(z, f, &p)?;
                Some((plus - minus) / (2.0 * h))
            })
            .collect();
        let Some(cols) = cols else { break };
        let jac = DMatrix::from_columns(&cols);
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        for _ in 0..10 {
            let mut lhs = a.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] *= 1.0 + lambda;
            }
            let Some(delta) = lhs.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = poles.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
            if let Some(rt) = projected_sse(z, f, &trial) {
                let ct = rt.norm_squared();
                if ct < cost {
                    let gain = (cost - ct) / cost;
                    poles = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 10.0).max(1e-12);
                    improved = gain > 1e-12;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    poles.sort_by(|a, b| b.total_cmp(a));
    poles
}

/// `u₀ = k₀ α_∞`, after checking that the limit is real to within `imag_tol`.
pub fn extract_u0(model: &RationalModel, f: &[f64], k0: f64, imag_tol: f64) -> Result<CauchyData> {
    let imag = model.alpha_inf.iter().map(|a| a.im.abs()).fold(0.0, f64::max);
    if imag > imag_tol {
        return Err(Error::NonRealLimit { imag, tol: imag_tol });
    }
    let mut u0: Vec<f64> = model.alpha_inf.iter().map(|a| k0 * a.re).collect();
    let mean = u0.iter().sum::<f64>() / u0.len() as f64;
    u0.iter_mut().for_each(|v| *v -= mean);
    Ok(CauchyData {
        theta: model.theta.clone(),
        f: f.to_vec(),
        u0,
        rho: None,
    })
}

/// Circle in the contrast plane used by [`cauchy_integral_check`].
#[derive(Debug, Clone, Copy)]
pub struct Contour {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

/// Recovers `α(k_eval) − α_∞` at one boundary point from the model's values on
/// a circle enclosing every pole: `(1/2πi)∮ (α(k) − α_∞)/(k_eval − k) dk`.
pub fn cauchy_integral_check(
    model: &RationalModel,
    point: usize,
    contour: &Contour,
    k_eval: Complex64,
) -> Result<Complex64> {
    let outside = (k_eval - contour.center).norm() - contour.radius;
    if outside <= 0.0 {
        return Err(Error::ContourCrossesPole { distance: outside.abs() });
    }
    let margin = 1e-6 * contour.radius;
    for p in &model.poles {
        let d = contour.radius - (p - contour.center).norm();
        if d <= margin {
            return Err(Error::ContourCrossesPole { distance: d.abs() });
        }
    }
    let m = contour.nodes.max(8);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let t = 2.0 * PI * j as f64 / m as f64;
        let e = Complex64::from_polar(1.0, t);
        let k = contour.center + contour.radius * e;
        let g = model.eval(point, k) - model.alpha_inf[point];
        // dk = i r e^{it} dt, and the 1/(2πi) cancels the i
        acc += g * contour.radius * e / (k_eval - k);
    }
    Ok(acc / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_pole_model(p: f64, r: f64) -> RationalModel {
        RationalModel {
            theta: vec![0.0],
            poles: vec![Complex64::new(p, 0.0)],
            alpha_inf: vec![Complex64::new(0.3, 0.0)],
            residues: DMatrix::from_element(1, 1, Complex64::new(r, 0.0)),
            residual: 0.0,
        }
    }

    #[test]
    fn cauchy_integral_single_pole() {
        let model = single_pole_model(-0.2, 1.0);
        let c = Contour {
            center: Complex64::new(-0.2, 0.0),
            radius: 1.0,
            nodes: 256,
        };
        let v = cauchy_integral_check(&model, 0, &c, Complex64::new(2.0, 0.0)).unwrap();
        assert!((v - Complex64::new(1.0 / 2.2, 0.0)).norm() < 1e-12, "{v}");
    }

    #[test]
    fn cauchy_integral_pole_free_and_errors() {
        let mut model = single_pole_model(-0.2, 1.0);
        model.poles.clear();
        model.residues = DMatrix::zeros(0, 1);
        let c = Contour {
            center: Complex64::new(0.0, 0.0),
            radius: 1.0,
            nodes: 64,
        };
        let v = cauchy_integral_check(&model, 0, &c, Complex64::new(2.0, 0.0)).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
        let model = single_pole_model(-1.0, 1.0);
        assert!(matches!(
            cauchy_integral_check(&model, 0, &c, Complex64::new(2.0, 0.0)),
            Err(Error::ContourCrossesPole { .. })
        ));
        assert!(matches!(
            cauchy_integral_check(&model, 0, &c, Complex64::new(0.5, 0.0)),
            Err(Error::ContourCrossesPole { .. })
        ));
    }

    #[test]
    fn aaa_recovers_two_poles() {
        let z: Vec<Complex64> = (0..20)
            .map(|j| Complex64::new(1.0, 0.1 + 0.5 * j as f64))
            .collect();
        let f = DMatrix::from_fn(20, 2, |j, c| {
            let k = z[j];
            let a = 0.4 + c as f64;
            a + 0.3 / (k + 0.6) + (c as f64 + 0.1) / (k + 2.5)
        });
        let b = aaa(&z, &f, 1e-13, 10);
        let mut p = b.poles();
        p.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        assert_eq!(p.len(), 2);
        assert!((p[0] - Complex64::new(-0.6, 0.0)).norm() < 1e-9);
        assert!((p[1] - Complex64::new(-2.5, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn json_shape() {
        let m = single_pole_model(-0.2, 1.0);
        let txt = serde_json::to_string(&m.to_json()).unwrap();
        assert!(txt.starts_with(r#"{"poles":[[-0.2,0.0]],"alpha_inf":[[0.3,0.0]],"residues":[[[1.0,0.0]]]"#));
        let back = RationalModel::from_json(&serde_json::from_str(&txt).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    fn synthetic(k: &[Complex64], poles: &[f64], np: usize, eta: f64) -> MultiFreqData {
        let mut v = DMatrix::from_fn(np, k.len(), |i, j| {
            let t = i as f64 / np as f64;
            let mut s = Complex64::new((2.0 * PI * t).cos(), 0.0);
            for (n, p) in poles.iter().enumerate() {
                s += (0.3 / (n + 1) as f64) * (2.0 * PI * (n + 1) as f64 * t).sin() / (k[j] - p);
            }
            s
        });
        if eta > 0.0 {
            v += crate::forward::noise_matrix(np, k.len(), eta, 3);
        }
        MultiFreqData {
            theta: (0..np).map(|i| 2.0 * PI * i as f64 / np as f64).collect(),
            omega: (0..k.len()).map(|j| j as f64).collect(),
            k: k.to_vec(),
            voltages: v,
            eta,
            seed: 3,
        }
    }

    fn affine_sweep(count: usize) -> Vec<Complex64> {
        crate::forward::omega_grid(0.01, 100.0, count, true)
            .into_iter()
            .map(|w| Complex64::new(1.0, w))
            .collect()
    }

    #[test]
    fn recovers_exact_rational_data() {
        let poles = [-0.45, -0.8, -0.95];
        let data = synthetic(&affine_sweep(40), &poles, 32, 0.0);
        let model = fit_rational(&data, &FitOptions::new(&DomainConfig::default())).unwrap();
        assert_eq!(model.poles.len(), 3);
        for (p, q) in model.poles.iter().zip(poles) {
            assert!((p - q).norm() < 1e-8, "{p} vs {q}");
        }
        for (i, a) in model.alpha_inf.iter().enumerate() {
            let exact = (2.0 * PI * i as f64 / 32.0).cos();
            assert!((a - exact).norm() < 1e-8);
        }
        assert!((model.leading_pole().unwrap().re + 0.45).abs() < 1e-8);
    }

    #[test]
    fn constant_data_has_no_poles() {
        let data = synthetic(&affine_sweep(40), &[], 16, 0.0);
        let model = fit_rational(&data, &FitOptions::new(&DomainConfig::default())).unwrap();
        assert!(model.poles.is_empty());
        let u0 = extract_u0(&model, &[0.0; 16], 2.0, 1e-10).unwrap();
        for (i, u) in u0.u0.iter().enumerate() {
            assert!((u - 2.0 * (2.0 * PI * i as f64 / 16.0).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn too_few_frequencies() {
        let data = synthetic(&affine_sweep(20), &[-0.5], 8, 0.0);
        let err = fit_rational(&data, &FitOptions::new(&DomainConfig::default())).unwrap_err();
        assert!(matches!(err, Error::InsufficientFrequencies { needed: 34, got: 20 }));
    }

    #[test]
    fn non_rational_data_diverges() {
        let k = affine_sweep(40);
        let mut data = synthetic(&k, &[], 8, 0.0);
        for j in 0..k.len() {
            for i in 0..8 {
                data.voltages[(i, j)] = (-(k[j] * (i + 1) as f64).sqrt()).exp();
            }
        }
        let opts = FitOptions {
            max_poles: 3,
            ..FitOptions::new(&DomainConfig::default())
        };
        assert!(matches!(fit_rational(&data, &opts), Err(Error::FitDiverged { .. })));
    }

    #[test]
    fn complex_limit_is_rejected() {
        let mut model = single_pole_model(-0.2, 1.0);
        model.alpha_inf[0] = Complex64::new(0.3, 1e-3);
        assert!(matches!(
            extract_u0(&model, &[0.0], 1.0, 1e-6),
            Err(Error::NonRealLimit { .. })
        ));
    }

    #[test]
    fn noisy_pole_and_pruning() {
        let data = synthetic(&affine_sweep(40), &[-0.6, -0.97], 32, 1e-3);
        let scale = data.voltages.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let opts = FitOptions::new(&DomainConfig::default()).for_noise(1e-3, scale);
        let model = fit_rational(&data, &opts).unwrap();
        assert!(model.poles.len() <= 3, "{:?}", model.poles);
        assert!((model.leading_pole().unwrap() - Complex64::new(-0.6, 0.0)).norm() < 5e-2);
    }

    #[test]
    fn region_for_default_class() {
        let r = AdmissibleRegion::for_class(&DomainConfig::default());
        // δ̂⁻¹ = 1 + (2.2/0.2)² = 122
        assert!((r.center + 61.0).abs() < 1e-9);
        assert!((r.radius - 183.0).abs() < 1e-9);
        assert!(r.contains(Complex64::new(-0.6, 0.0)));
        assert!(!r.contains(Complex64::new(150.0, 0.0)));
    }
}
