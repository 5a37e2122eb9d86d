//! Shape reconstruction from perfect-conductor Cauchy data, and error metrics.
//!
//! The inclusion is parameterized by its radial Fourier coefficients
//! `[a₀, a₁..a_M, b₁..b_M]`. The misfit
//! `J = ½‖u₀^sim − u₀^meas‖²_{L²(∂Ω)} + (α/2)‖Υ″‖²` is minimized by a
//! Levenberg–Marquardt iteration with finite-difference Jacobians; iterates
//! are projected back into the admissible class after every step.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disentangle::{extract_u0, fit_rational, FitOptions};
use crate::error::{Error, Result};
use crate::forward::{
    CauchyData, CurrentSpec, ForwardModel, FrequencyProfile, NeumannDatum, Resolution, U0Solution,
};
use crate::geometry::{DomainConfig, StarShape, CONSTRAINT_SAMPLES};
use crate::quadrature::{fourier_coefficients, gauss_legendre};

pub const MAX_MODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionSettings {
    /// Highest Fourier mode `M` of the reconstructed radial function.
    pub modes: usize,
    /// Weight of the curvature penalty.
    pub alpha: f64,
    pub max_iterations: usize,
    /// Initial Levenberg–Marquardt damping.
    pub damping: f64,
    /// Damping multiplier after a rejected step.
    pub damping_increase: f64,
    /// Damping divisor after an accepted step.
    pub damping_decrease: f64,
    /// Rejected trial steps allowed per iteration.
    pub max_backtracks: usize,
    /// Stop once `‖∇J‖_∞` falls below this.
    pub grad_tol: f64,
    /// Stop once an accepted step is shorter than this, relative to `‖p‖`.
    pub step_tol: f64,
    /// Finite-difference step relative to the mean radius.
    pub fd_step: f64,
    /// Starting shape; a centered circle in the middle of the band when absent.
    pub initial: Option<StarShape>,
    /// Discretization used for the simulated data.
    pub resolution: Resolution,
}

impl Default for InversionSettings {
    fn default() -> Self {
        Self {
            modes: 0,
            alpha: 0.0,
            max_iterations: 50,
            damping: 1e-3,
            damping_increase: 4.0,
            damping_decrease: 3.0,
            max_backtracks: 12,
            grad_tol: 1e-15,
            step_tol: 1e-12,
            fd_step: 1e-6,
            initial: None,
            resolution: Resolution::default(),
        }
    }
}

impl InversionSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.modes > MAX_MODES {
            return bad(format!("at most {MAX_MODES} Fourier modes, got {}", self.modes));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("regularization weight must be nonnegative, got {}", self.alpha));
        }
        if !(self.damping > 0.0 && self.damping_increase > 1.0 && self.damping_decrease > 1.0) {
            return bad("damping parameters must be positive with factors above 1".into());
        }
        if !(self.fd_step > 0.0 && self.fd_step < 1e-2) {
            return bad(format!("finite-difference step out of range: {}", self.fd_step));
        }
        if !(self.grad_tol >= 0.0 && self.step_tol >= 0.0) {
            return bad("tolerances must be nonnegative".into());
        }
        Ok(())
    }

    fn initial_shape(&self, cfg: &DomainConfig) -> StarShape {
        self.initial
            .clone()
            .unwrap_or_else(|| StarShape::circle(0.5 * (cfg.b0 + cfg.upper())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InversionStatus {
    Converged,
    MaxIterations,
    Stagnated,
}

impl InversionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            InversionStatus::Converged => "converged",
            InversionStatus::MaxIterations => "max_iterations",
            InversionStatus::Stagnated => "stagnated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionResult {
    pub shape: StarShape,
    pub misfit: f64,
    /// Misfit of the starting point and of every accepted iterate.
    pub history: Vec<f64>,
    /// Constant value of the simulated `u₀` on the recovered inclusion.
    pub rho: Option<f64>,
    /// Whether any iterate had to be projected back into the class.
    pub hit_constraint: bool,
    pub status: InversionStatus,
}

// ---------------------------------------------------------------------------
// Misfit
// ---------------------------------------------------------------------------

/// Values of a real periodic sample sequence at `n` equispaced nodes.
fn resample(values: &[f64], n: usize) -> Vec<f64> {
    if values.len() == n {
        return values.to_vec();
    }
    let (a, b) = fourier_coefficients(values);
    let top = (values.len() / 2).min(n / 2);
    (0..n)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / n as f64;
            let mut v = a[0];
            for m in 1..=top {
                v += a[m] * (m as f64 * t).cos() + b[m] * (m as f64 * t).sin();
            }
            v
        })
        .collect()
}

/// Measured data mapped onto the simulation grid.
struct Problem<'a> {
    cfg: DomainConfig,
    settings: &'a InversionSettings,
    datum: NeumannDatum,
    target: Vec<f64>,
    weight: f64,
}

impl<'a> Problem<'a> {
    fn new(data: &CauchyData, cfg: &DomainConfig, settings: &'a InversionSettings) -> Result<Self> {
        cfg.validate()?;
        settings.validate()?;
        let n = data.u0.len();
        if n == 0 || data.f.len() != n || data.theta.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "Cauchy data with {} angles, {} currents and {} voltages",
                data.theta.len(),
                data.f.len(),
                n
            )));
        }
        let scale = data.u0.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        let mean = data.u0.iter().sum::<f64>() / n as f64;
        if mean.abs() > 1e-8 * scale {
            return Err(Error::NonZeroMean { mean });
        }
        let nb = settings.resolution.boundary;
        let f = resample(&data.f, nb);
        let fmean = f.iter().sum::<f64>() / nb as f64;
        let datum = NeumannDatum::from_values(f.iter().map(|v| v - fmean).collect())?;
        let mut target = resample(&data.u0, nb);
        let tmean = target.iter().sum::<f64>() / nb as f64;
        target.iter_mut().for_each(|v| *v -= tmean);
        Ok(Self {
            cfg: *cfg,
            settings,
            datum,
            target,
            weight: (2.0 * PI / nb as f64).sqrt(),
        })
    }

    fn modes(&self) -> usize {
        self.settings.modes
    }

    fn simulate(&self, shape: &StarShape) -> Result<U0Solution> {
        ForwardModel::new_unchecked(shape, &self.cfg, self.settings.resolution)?.solve_u0(&self.datum)
    }

    /// Stacked residual with `J = ½‖r‖²`.
    fn residual(&self, params: &[f64]) -> Result<DVector<f64>> {
        let m = self.modes();
        let shape = StarShape::from_params(m, params);
        let sim = self.simulate(&shape)?;
        let nb = self.target.len();
        let reg = (self.settings.alpha * PI).sqrt();
        let mut r = DVector::zeros(nb + 2 * m);
        for i in 0..nb {
            r[i] = self.weight * (sim.data.u0[i] - self.target[i]);
        }
        for k in 1..=m {
            let w = reg * (k * k) as f64;
            r[nb + k - 1] = w * params[k];
            r[nb + m + k - 1] = w * params[m + k];
        }
        Ok(r)
    }

    fn step(&self, params: &[f64]) -> f64 {
        self.settings.fd_step * params[0].abs().max(self.cfg.b0)
    }

    /// Central-difference Jacobian of the residual, one column per parameter.
    fn jacobian(&self, params: &[f64]) -> Result<DMatrix<f64>> {
        let h = self.step(params);
        let cols: Vec<DVector<f64>> = (0..params.len())
            .into_par_iter()
            .map(|i| {
                let mut p = params.to_vec();
                p[i] += h;
                let plus = self.residual(&p)?;
                p[i] -= 2.0 * h;
                let minus = self.residual(&p)?;
                Ok((plus - minus) / (2.0 * h))
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_columns(&cols))
    }

    fn misfit_at(&self, params: &[f64]) -> Result<f64> {
        Ok(0.5 * self.residual(params)?.norm_squared())
    }
}

/// Misfit of a class member against measured Cauchy data, and its gradient with
/// respect to `[a₀, a₁..a_M, b₁..b_M]` by central differences.
pub fn misfit(
    shape: &StarShape,
    data: &CauchyData,
    cfg: &DomainConfig,
    settings: &InversionSettings,
) -> Result<(f64, Vec<f64>)> {
    shape.check(cfg)?;
    let problem = Problem::new(data, cfg, settings)?;
    let params = shape.to_params(settings.modes);
    let value = problem.misfit_at(&params)?;
    let h = problem.step(&params);
    let grad = (0..params.len())
        .into_par_iter()
        .map(|i| {
            let mut p = params.clone();
            p[i] += h;
            let plus = problem.misfit_at(&p)?;
            p[i] -= 2.0 * h;
            let minus = problem.misfit_at(&p)?;
            Ok((plus - minus) / (2.0 * h))
        })
        .collect::<Result<_>>()?;
    Ok((value, grad))
}

// ---------------------------------------------------------------------------
// Projection into the class
// ---------------------------------------------------------------------------

/// Pulls coefficients into the admissible band: the mean radius is clamped and
/// the oscillating part scaled down. Returns whether anything changed.
pub fn project(params: &[f64], modes: usize, cfg: &DomainConfig) -> (Vec<f64>, bool) {
    let shape = StarShape::from_params(modes, params);
    if shape.check(cfg).is_ok() {
        return (params.to_vec(), false);
    }
    let upper = cfg.upper();
    let margin = 1e-6 * (upper - cfg.b0);
    let a0 = params[0].clamp(cfg.b0 + 2.0 * margin, upper - 2.0 * margin);
    let mut osc = params.to_vec();
    osc[0] = 0.0;
    let wiggle = StarShape::from_params(modes, &osc);
    let (mut lo, mut hi, mut deriv, mut amp) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..CONSTRAINT_SAMPLES {
        let t = 2.0 * PI * i as f64 / CONSTRAINT_SAMPLES as f64;
        let (r, d1, d2) = wiggle.radial_derivatives(t);
        lo = lo.min(r);
        hi = hi.max(r);
        amp = amp.max(r.abs());
        deriv = deriv.max(d1.abs() + d2.abs());
    }
    let mut s: f64 = 1.0;
    if lo < 0.0 {
        s = s.min((a0 - cfg.b0 - margin) / -lo);
    }
    if hi > 0.0 {
        s = s.min((upper - margin - a0) / hi);
    }
    if amp + deriv > 0.0 {
        s = s.min((cfg.m - a0) / (amp + deriv));
    }
    let mut out: Vec<f64> = osc.iter().map(|c| c * s).collect();
    out[0] = a0;
    // sampling slack: shrink until the sampled check passes
    for _ in 0..50 {
        if StarShape::from_params(modes, &out).check(cfg).is_ok() {
            break;
        }
        out.iter_mut().skip(1).for_each(|c| *c *= 0.99);
    }
    (out, true)
}

// ---------------------------------------------------------------------------
// Inversion
// ---------------------------------------------------------------------------

/// Levenberg–Marquardt reconstruction of the inclusion from `(f, u₀|∂Ω)`.
///
/// Fails with [`Error::Diverged`] only when not a single step could lower the
/// misfit; the error carries the starting point as the best iterate.
pub fn invert(data: &CauchyData, cfg: &DomainConfig, settings: &InversionSettings) -> Result<InversionResult> {
    let problem = Problem::new(data, cfg, settings)?;
    let m = settings.modes;
    let start = settings.initial_shape(cfg).to_params(m);
    let (mut p, mut hit) = project(&start, m, cfg);
    let mut r = problem.residual(&p)?;
    let mut j = 0.5 * r.norm_squared();
    let mut history = vec![j];
    let mut lambda = settings.damping;
    let mut status = InversionStatus::MaxIterations;

    for iter in 0..settings.max_iterations {
        if j == 0.0 {
            status = InversionStatus::Converged;
            break;
        }
        let jac = problem.jacobian(&p)?;
        let g = jac.transpose() * &r;
        if g.amax() <= settings.grad_tol {
            status = InversionStatus::Converged;
            break;
        }
        let a = jac.transpose() * &jac;
        let dmax = a.diagonal().max().max(f64::MIN_POSITIVE);
        let mut accepted = None;
        for _ in 0..=settings.max_backtracks {
            let mut lhs = a.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += lambda * (a[(i, i)] + 1e-12 * dmax);
            }
            let Some(chol) = lhs.cholesky() else {
                lambda *= settings.damping_increase;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(x, d)| x + d).collect();
            let (trial, projected) = project(&trial, m, cfg);
            if let Ok(rt) = problem.residual(&trial) {
                let jt = 0.5 * rt.norm_squared();
                if jt < j {
                    accepted = Some((trial, rt, jt, projected));
                    lambda = (lambda / settings.damping_decrease).max(1e-15);
                    break;
                }
            }
            lambda *= settings.damping_increase;
        }
        let Some((trial, rt, jt, projected)) = accepted else {
            if iter == 0 {
                let best = InversionResult {
                    shape: StarShape::from_params(m, &p),
                    misfit: j,
                    history,
                    rho: problem.simulate(&StarShape::from_params(m, &p))?.data.rho,
                    hit_constraint: hit,
                    status: InversionStatus::Stagnated,
                };
                return Err(Error::Diverged { best: Box::new(best) });
            }
            status = InversionStatus::Stagnated;
            break;
        };
        let step: f64 = p
            .iter()
            .zip(&trial)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = p.iter().map(|a| a * a).sum::<f64>().sqrt();
        hit |= projected;
        p = trial;
        r = rt;
        j = jt;
        history.push(j);
        if step <= settings.step_tol * norm {
            status = InversionStatus::Converged;
            break;
        }
    }

    let shape = StarShape::from_params(m, &p);
    let rho = problem.simulate(&shape)?.data.rho;
    Ok(InversionResult {
        shape,
        misfit: j,
        history,
        rho,
        hit_constraint: hit,
        status,
    })
}

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

const SYMDIFF_PANELS: usize = 2048;
const SYMDIFF_ORDER: usize = 8;

/// Area of `(D_a ∖ D_b) ∪ (D_b ∖ D_a)` for shapes star-shaped about the origin:
/// `∫₀^{2π} |Υ_a² − Υ_b²|/2 dθ`, split at the sign changes of the integrand.
pub fn symmetric_difference(a: &StarShape, b: &StarShape) -> f64 {
    let d = |t: f64| 0.5 * (a.radius(t).powi(2) - b.radius(t).powi(2));
    let (nodes, weights) = gauss_legendre(SYMDIFF_ORDER);
    let panel = |lo: f64, hi: f64| -> f64 {
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * d(c + h * x))
            .sum::<f64>()
            .abs()
            * h
    };
    let width = 2.0 * PI / SYMDIFF_PANELS as f64;
    let mut total = 0.0;
    for i in 0..SYMDIFF_PANELS {
        let (lo, hi) = (i as f64 * width, (i + 1) as f64 * width);
        let (dl, dh) = (d(lo), d(hi));
        if dl * dh < 0.0 {
            let root = bisect(&d, lo, hi, dl);
            total += panel(lo, root) + panel(root, hi);
        } else {
            total += panel(lo, hi);
        }
    }
    total
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `|ϱ_a − ϱ_b|` for two data sets that both carry the inclusion constant.
pub fn rho_gap(a: &CauchyData, b: &CauchyData) -> Result<f64> {
    match (a.rho, b.rho) {
        (Some(x), Some(y)) => Ok((x - y).abs()),
        _ => Err(Error::MissingRho),
    }
}

// ---------------------------------------------------------------------------
// Stability sweep
// ---------------------------------------------------------------------------

/// Everything held fixed across a stability sweep.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub truth: StarShape,
    pub cfg: DomainConfig,
    pub current: CurrentSpec,
    pub profile: FrequencyProfile,
    pub omega: Vec<f64>,
    /// Discretization of the synthetic measurements.
    pub resolution: Resolution,
    pub fit: FitOptions,
    pub inversion: InversionSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: f64,
    /// Sup-norm distance between noisy and clean voltages.
    pub eps_measured: f64,
    pub seed: u64,
    /// `NaN` when the run failed before producing a shape.
    pub sym_diff: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub eps_measured: f64,
    pub median_sym_diff: f64,
    pub runs: usize,
    pub failures: usize,
}

/// Least-squares line through `(x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub constant: f64,
    pub exponent: f64,
    /// Root-mean-square residual in `ln y`.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub levels: Vec<LevelSummary>,
    /// `|DΔD̃| ≈ C (1/ln(1/ε))^τ`.
    pub logarithmic: Option<RateFit>,
    /// `|DΔD̃| ≈ C ε^τ′`.
    pub holder: Option<RateFit>,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fits `ln y = ln C + τ x`; needs two distinct abscissae.
pub fn fit_rate(x: &[f64], y: &[f64]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && **b > 0.0)
        .map(|(a, b)| (*a, b.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some(RateFit {
        constant: icpt.exp(),
        exponent: slope,
        residual: rms,
        points: pts.len(),
    })
}

fn run_one(
    setup: &SweepSetup,
    model: &ForwardModel,
    datum: &NeumannDatum,
    clean: &DMatrix<num_complex::Complex64>,
    level: f64,
    seed: u64,
) -> SweepRow {
    let mut row = SweepRow {
        level,
        eps_measured: f64::NAN,
        seed,
        sym_diff: f64::NAN,
        status: String::new(),
    };
    let data = match model.synthesize(datum, &setup.profile, &setup.omega, level, seed) {
        Ok(d) => d,
        Err(e) => {
            row.status = status_of(&e).into();
            return row;
        }
    };
    row.eps_measured = (&data.voltages - clean).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = clean.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let opts = setup.fit.for_noise(level, scale);
    let imag_tol = 1e-6 * scale + 100.0 * level;
    let result = fit_rational(&data, &opts)
        .and_then(|m| extract_u0(&m, datum.values(), setup.cfg.k0, imag_tol))
        .and_then(|c| invert(&c, &setup.cfg, &setup.inversion));
    match result {
        Ok(inv) => {
            row.sym_diff = symmetric_difference(&inv.shape, &setup.truth);
            row.status = inv.status.as_str().into();
        }
        Err(Error::Diverged { best }) => {
            row.sym_diff = symmetric_difference(&best.shape, &setup.truth);
            row.status = "diverged".into();
        }
        Err(e) => row.status = status_of(&e).into(),
    }
    row
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::FitDiverged { .. } => "fit_diverged",
        Error::InsufficientFrequencies { .. } => "insufficient_frequencies",
        Error::NonRealLimit { .. } => "non_real_limit",
        Error::NearResonance { .. } => "near_resonance",
        Error::SingularSystem(_) => "singular_system",
        Error::Diverged { .. } => "diverged",
        _ => "error",
    }
}

/// Full pipeline per noise level and seed: synthesize, fit, extract `u₀`,
/// invert, and compare with the truth.
pub fn stability_sweep(setup: &SweepSetup, levels: &[f64], seeds: &[u64]) -> Result<SweepReport> {
    if levels.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig("a sweep needs at least one level and one seed".into()));
    }
    if levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "noise levels must be nonnegative and strictly increasing".into(),
        ));
    }
    setup.inversion.validate()?;
    let model = ForwardModel::new(&setup.truth, &setup.cfg, setup.resolution)?;
    let datum = model.datum(&setup.current);
    let clean = model.synthesize(&datum, &setup.profile, &setup.omega, 0.0, 0)?.voltages;

    let jobs: Vec<(f64, u64)> = levels
        .iter()
        .flat_map(|&l| seeds.iter().map(move |&s| (l, s)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(l, s)| run_one(setup, &model, &datum, &clean, l, s))
        .collect();

    let summaries: Vec<LevelSummary> = levels
        .iter()
        .map(|&l| {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.level == l).collect();
            let eps: Vec<f64> = mine.iter().map(|r| r.eps_measured).collect();
            let sd: Vec<f64> = mine.iter().map(|r| r.sym_diff).collect();
            LevelSummary {
                level: l,
                eps_measured: median(&eps),
                median_sym_diff: median(&sd),
                runs: mine.len(),
                failures: mine.iter().filter(|r| !r.sym_diff.is_finite()).count(),
            }
        })
        .collect();
    let monotone = summaries
        .windows(2)
        .all(|w| w[1].median_sym_diff >= w[0].median_sym_diff);
    let noisy: Vec<&LevelSummary> = summaries
        .iter()
        .filter(|s| s.eps_measured > 0.0 && s.eps_measured < 1.0)
        .collect();
    let ys: Vec<f64> = noisy.iter().map(|s| s.median_sym_diff).collect();
    let xlog: Vec<f64> = noisy
        .iter()
        .map(|s| (1.0 / (1.0 / s.eps_measured).ln()).ln())
        .collect();
    let xpow: Vec<f64> = noisy.iter().map(|s| s.eps_measured.ln()).collect();
    Ok(SweepReport {
        rows,
        summary: SweepSummary {
            logarithmic: fit_rate(&xlog, &ys),
            holder: fit_rate(&xpow, &ys),
            levels: summaries,
            monotone,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> DomainConfig {
        DomainConfig::default()
    }

    fn g(r: f64) -> f64 {
        (1.0 - r * r) / (1.0 + r * r)
    }

    fn circle_data(r: f64, res: Resolution) -> CauchyData {
        let model = ForwardModel::new(&StarShape::circle(r), &cfg(), res).unwrap();
        let f = model.datum(&CurrentSpec::cos_theta());
        model.solve_u0(&f).unwrap().data
    }

    #[test]
    fn circle_misfit_matches_closed_form() {
        let data = circle_data(0.5, Resolution::default());
        let settings = InversionSettings::default();
        let (j, _) = misfit(&StarShape::circle(0.4), &data, &cfg(), &settings).unwrap();
        let exact = PI / 2.0 * (g(0.4) - g(0.5)).powi(2);
        assert!((j - exact).abs() < 1e-10 * exact, "{j} vs {exact}");
        let (j0, _) = misfit(&StarShape::circle(0.5), &data, &cfg(), &settings).unwrap();
        assert!(j0 < 1e-14);
    }

    #[test]
    fn gradient_is_step_consistent() {
        let data = circle_data(0.5, Resolution::default());
        let shape = StarShape::new_unchecked(vec![0.45, 0.0, 0.02], vec![0.01, 0.0]);
        let mut settings = InversionSettings {
            modes: 2,
            alpha: 1e-4,
            ..Default::default()
        };
        let (_, g1) = misfit(&shape, &data, &cfg(), &settings).unwrap();
        settings.fd_step *= 0.5;
        let (_, g2) = misfit(&shape, &data, &cfg(), &settings).unwrap();
        let scale = g1.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-4 * scale, "{a} vs {b}");
        }
        // radius derivative of the closed-form circle misfit
        let (_, gc) = misfit(&StarShape::circle(0.4), &data, &cfg(), &InversionSettings::default()).unwrap();
        let dg = -4.0 * 0.4 / (1.0f64 + 0.16).powi(2);
        let exact = PI * (g(0.4) - g(0.5)) * dg;
        assert!((gc[0] - exact).abs() < 1e-6 * exact.abs(), "{} vs {exact}", gc[0]);
    }

    #[test]
    fn misfit_rejects_class_violations() {
        let data = circle_data(0.5, Resolution::default());
        let err = misfit(&StarShape::circle(0.95), &data, &cfg(), &InversionSettings::default()).unwrap_err();
        assert!(matches!(err, Error::ConstraintViolation { .. }));
    }

    #[test]
    fn recovers_circle_radius() {
        let data = circle_data(0.5, Resolution::default());
        let res = invert(&data, &cfg(), &InversionSettings::default()).unwrap();
        assert!((res.shape.cos_coeffs()[0] - 0.5).abs() < 1e-6, "{:?}", res);
        assert!(res.history.windows(2).all(|w| w[1] < w[0]));
        assert!(res.rho.unwrap().abs() < 1e-10);
        assert!(!res.hit_constraint);
    }

    #[test]
    fn projection_enters_class() {
        let c = cfg();
        let (p, hit) = project(&[0.95, 0.3, 0.0], 1, &c);
        assert!(hit);
        StarShape::from_params(1, &p).check(&c).unwrap();
        let (p, hit) = project(&[0.5, 0.0, 0.45, 0.0, 0.0], 2, &c);
        assert!(hit);
        StarShape::from_params(2, &p).check(&c).unwrap();
        let (q, hit) = project(&[0.5, 0.1, 0.0], 1, &c);
        assert!(!hit);
        assert_eq!(q, vec![0.5, 0.1, 0.0]);
    }

    #[test]
    fn annulus_area() {
        let v = symmetric_difference(&StarShape::circle(0.5), &StarShape::circle(0.4));
        assert!((v - 0.09 * PI).abs() < 1e-13);
        assert_eq!(symmetric_difference(&StarShape::circle(0.5), &StarShape::circle(0.5)), 0.0);
    }

    #[test]
    fn trefoil_area_against_dense_sum() {
        let a = StarShape::circle(0.5);
        let b = StarShape::new_unchecked(vec![0.5, 0.0, 0.0, 0.08], vec![]);
        let n = 1_000_000;
        let dense: f64 = (0..n)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                (a.radius(t).powi(2) - b.radius(t).powi(2)).abs() / 2.0
            })
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64;
        let v = symmetric_difference(&a, &b);
        assert!((v - dense).abs() < 1e-9, "{v} vs {dense}");
        // ∫|0.08 cos3θ (1 + 0.08 cos3θ)|/2 = 0.04·4 for the dominant part
        assert!((v - 0.16).abs() < 1e-2);
    }

    #[test]
    fn rho_gap_cases() {
        let a = circle_data(0.5, Resolution::default());
        assert_eq!(rho_gap(&a, &a).unwrap(), 0.0);
        let b = circle_data(0.4, Resolution::default());
        assert!(rho_gap(&a, &b).unwrap() < 1e-10);
        let mut c = b.clone();
        c.rho = None;
        assert!(matches!(rho_gap(&a, &c), Err(Error::MissingRho)));
    }

    #[test]
    fn rate_fit_recovers_power_law() {
        let x: Vec<f64> = (1..6).map(|i| -(i as f64)).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * (0.7 * v).exp()).collect();
        let f = fit_rate(&x, &y).unwrap();
        assert!((f.exponent - 0.7).abs() < 1e-12);
        assert!((f.constant - 3.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!(fit_rate(&[1.0], &[1.0]).is_none());
        assert_eq!(median(&[3.0, f64::NAN, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0]), 2.5);
    }

    #[test]
    fn resample_is_exact_for_band_limited() {
        let coarse: Vec<f64> = (0..64)
            .map(|j| (2.0 * PI * j as f64 / 64.0).cos() + 0.3 * (2.0 * PI * 3.0 * j as f64 / 64.0).sin())
            .collect();
        let fine = resample(&coarse, 128);
        for (j, v) in fine.iter().enumerate() {
            let t = 2.0 * PI * j as f64 / 128.0;
            assert!((v - t.cos() - 0.3 * (3.0 * t).sin()).abs() < 1e-13);
        }
    }

    fn shape_strategy() -> impl Strategy<Value = StarShape> {
        (0.35..0.6f64, -0.04..0.04f64, -0.04..0.04f64, -0.02..0.02f64)
            .prop_map(|(a0, a1, b2, a3)| StarShape::new_unchecked(vec![a0, a1, 0.0, a3], vec![0.0, b2]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn symmetric_difference_is_a_metric(a in shape_strategy(), b in shape_strategy(), c in shape_strategy()) {
            let ab = symmetric_difference(&a, &b);
            let ba = symmetric_difference(&b, &a);
            prop_assert!((ab - ba).abs() <= 1e-14);
            prop_assert!(ab >= 0.0);
            prop_assert!(symmetric_difference(&a, &a) == 0.0);
            let ac = symmetric_difference(&a, &c);
            let cb = symmetric_difference(&c, &b);
            prop_assert!(ab <= ac + cb + 1e-12);
        }
    }
}
