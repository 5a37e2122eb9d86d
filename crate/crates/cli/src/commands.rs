//! One function per subcommand; each reads its inputs and writes its outputs.

use std::path::{Path, PathBuf};

use mfeit_core::disentangle::{extract_u0, fit_rational};
use mfeit_core::io::{
    read_cauchy, read_dataset, write_cauchy, write_dataset, write_forward, write_json, write_model,
    write_sweep, write_traces,
};
use mfeit_core::reconstruct::{invert, stability_sweep, symmetric_difference, InversionResult, SweepSetup};
use mfeit_core::spectrum::SpectrumReport;
use mfeit_core::{Error, ForwardModel, NeumannDatum};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::CliError;

/// What a command read and wrote.
#[derive(Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seeds: Vec<u64>,
    pub summary: String,
}

fn model(cfg: &ExperimentConfig) -> Result<ForwardModel, Error> {
    ForwardModel::new(cfg.shape()?, &cfg.domain, cfg.resolution)
}

fn input(path: Option<&PathBuf>, out: &Path, default: &str) -> Result<PathBuf, CliError> {
    let p = path.cloned().unwrap_or_else(|| out.join(default));
    if !p.is_file() {
        return Err(CliError::MissingInput(format!("{} not found", p.display())));
    }
    Ok(p)
}

#[derive(Serialize)]
struct SpectrumFile {
    k0: f64,
    nodes: usize,
    #[serde(flatten)]
    report: SpectrumReport,
}

pub fn spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let model = model(cfg)?;
    let sp = model.spectrum(cfg.n_modes)?;
    let json = out.join("spectrum.json");
    let csv = out.join("traces.csv");
    write_json(
        &json,
        &SpectrumFile {
            k0: cfg.domain.k0,
            nodes: cfg.resolution.inclusion,
            report: sp.report(),
        },
    )?;
    write_traces(&csv, model.boundary().params(), &sp)?;
    Ok(Outcome {
        outputs: vec![json, csv],
        summary: format!(
            "{} modes, leading resonance {:?}, bound {}",
            sp.len(),
            sp.lowest_resonance(),
            sp.bound
        ),
        ..Default::default()
    })
}

pub fn forward(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let model = model(cfg)?;
    let ks = cfg.contrasts()?;
    let f = model.datum(&cfg.current);
    let sp = model.spectrum(cfg.n_modes)?;
    let mut direct = Vec::with_capacity(ks.len());
    let mut spectral = Vec::with_capacity(ks.len());
    let mut gap = 0.0_f64;
    for &k in &ks {
        let d = model.solve_direct(&f, k)?;
        let s = model.solve_spectral(&f, k, &sp, cfg.n_modes)?;
        let scale = d.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        gap = gap.max(d.iter().zip(&s).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale);
        direct.push(d);
        spectral.push(s);
    }
    let u0 = model.solve_u0(&f)?;
    let table = out.join("forward.csv");
    let cauchy = out.join("cauchy.csv");
    write_forward(&table, model.boundary().params(), &ks, &direct, &spectral)?;
    write_cauchy(&cauchy, &u0.data)?;
    Ok(Outcome {
        outputs: vec![table, cauchy.clone(), cauchy.with_extension("json")],
        summary: format!("{} contrasts, spectral vs direct relative gap {gap:.3e}", ks.len()),
        ..Default::default()
    })
}

pub fn synth(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let model = model(cfg)?;
    let (profile, omega) = cfg.profile()?;
    let f = model.datum(&cfg.current);
    let data = model.synthesize(&f, &profile, &omega, cfg.eta, cfg.seed)?;
    let path = out.join("dataset.csv");
    write_dataset(&path, &data)?;
    Ok(Outcome {
        outputs: vec![path.clone(), path.with_extension("json")],
        seeds: vec![cfg.seed],
        summary: format!(
            "{} frequencies x {} boundary nodes, eta {}",
            data.k.len(),
            data.theta.len(),
            data.eta
        ),
        ..Default::default()
    })
}

pub fn extract(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let path = input(cfg.inputs.dataset.as_ref(), out, "dataset.csv")?;
    let data = read_dataset(&path)?;
    let scale = data.voltages.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let opts = cfg.fit_options().for_noise(data.eta, scale);
    let fit = fit_rational(&data, &opts)?;
    let raw: Vec<f64> = data.theta.iter().map(|&t| cfg.current.eval(t)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let f = NeumannDatum::from_values(raw.iter().map(|v| v - mean).collect())?;
    let imag_tol = 1e-6 * scale + 100.0 * data.eta;
    let cauchy = extract_u0(&fit, f.values(), cfg.domain.k0, imag_tol)?;
    let model_path = out.join("model.json");
    let cauchy_path = out.join("cauchy.csv");
    write_model(&model_path, &fit)?;
    write_cauchy(&cauchy_path, &cauchy)?;
    let mut inputs = vec![path.clone()];
    if path.with_extension("json").is_file() {
        inputs.push(path.with_extension("json"));
    }
    Ok(Outcome {
        inputs,
        outputs: vec![model_path, cauchy_path.clone(), cauchy_path.with_extension("json")],
        seeds: vec![data.seed],
        summary: format!(
            "{} poles, leading {:?}, residual {:.3e}",
            fit.poles.len(),
            fit.leading_pole().map(|p| p.re),
            fit.residual
        ),
    })
}

#[derive(Serialize)]
struct InversionFile<'a> {
    #[serde(flatten)]
    result: &'a InversionResult,
    /// Symmetric difference to the configured shape, when one is given.
    sym_diff_to_config: Option<f64>,
}

pub fn invert_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let path = input(cfg.inputs.cauchy.as_ref(), out, "cauchy.csv")?;
    let data = read_cauchy(&path)?;
    let json = out.join("inversion.json");
    let shape_path = out.join("shape.json");
    let write = |r: &InversionResult| -> Result<(), Error> {
        let sym = cfg.shape.as_ref().map(|s| symmetric_difference(s, &r.shape));
        write_json(&json, &InversionFile { result: r, sym_diff_to_config: sym })?;
        write_json(&shape_path, &r.shape)
    };
    let result = match invert(&data, &cfg.domain, &cfg.inversion) {
        Ok(r) => r,
        Err(Error::Diverged { best }) => {
            write(&best)?;
            return Err(CliError::Numeric(
                "inversion could not lower the misfit from the starting shape".into(),
            ));
        }
        Err(e) => return Err(e.into()),
    };
    write(&result)?;
    let mut inputs = vec![path.clone()];
    if path.with_extension("json").is_file() {
        inputs.push(path.with_extension("json"));
    }
    Ok(Outcome {
        inputs,
        outputs: vec![json, shape_path],
        summary: format!(
            "{}, misfit {:.3e} after {} accepted steps",
            result.status.as_str(),
            result.misfit,
            result.history.len() - 1
        ),
        ..Default::default()
    })
}

pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let (profile, omega) = cfg.profile()?;
    let spec = cfg.sweep()?;
    let setup = SweepSetup {
        truth: cfg.shape()?.clone(),
        cfg: cfg.domain,
        current: cfg.current.clone(),
        profile,
        omega,
        resolution: cfg.resolution,
        fit: cfg.fit_options(),
        inversion: cfg.inversion.clone(),
    };
    let report = stability_sweep(&setup, &spec.levels, &spec.seeds)?;
    let table = out.join("sweep.csv");
    let summary = out.join("sweep_summary.json");
    write_sweep(&table, &report.rows)?;
    write_json(&summary, &report.summary)?;
    Ok(Outcome {
        outputs: vec![table, summary],
        seeds: spec.seeds.clone(),
        summary: format!(
            "{} runs, monotone {}, holder exponent {:?}",
            report.rows.len(),
            report.summary.monotone,
            report.summary.holder.map(|h| h.exponent)
        ),
        ..Default::default()
    })
}
