//! Plain-text formats for datasets, Cauchy data, spectra and sweep tables.
//!
//! Tables are CSV with a header row; scalar metadata that does not fit a
//! table lives in a JSON file next to it with the same stem.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::disentangle::{RationalModel, RationalModelJson};
use crate::error::{Error, Result};
use crate::forward::{CauchyData, MultiFreqData};
use crate::reconstruct::SweepRow;
use crate::spectrum::NPSpectrum;

/// JSON file sharing the stem of a table.
pub fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

// ---------------------------------------------------------------------------
// Multifrequency datasets
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRow {
    omega: f64,
    k_re: f64,
    k_im: f64,
    theta: f64,
    u_re: f64,
    u_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub eta: f64,
    pub seed: u64,
    pub points: usize,
    pub frequencies: usize,
}

/// One row per (frequency, boundary node), grouped by frequency, plus a sidecar
/// with the noise level and seed.
pub fn write_dataset(path: &Path, data: &MultiFreqData) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (j, (&omega, k)) in data.omega.iter().zip(&data.k).enumerate() {
        for (i, &theta) in data.theta.iter().enumerate() {
            let u = data.voltages[(i, j)];
            w.serialize(DatasetRow {
                omega,
                k_re: k.re,
                k_im: k.im,
                theta,
                u_re: u.re,
                u_im: u.im,
            })?;
        }
    }
    w.flush()?;
    write_json(
        &sidecar(path),
        &DatasetMeta {
            eta: data.eta,
            seed: data.seed,
            points: data.theta.len(),
            frequencies: data.k.len(),
        },
    )
}

/// Inverse of [`write_dataset`]; the sidecar is optional.
pub fn read_dataset(path: &Path) -> Result<MultiFreqData> {
    let mut r = csv::Reader::from_path(path)?;
    let mut omega: Vec<f64> = Vec::new();
    let mut k: Vec<Complex64> = Vec::new();
    let mut blocks: Vec<Vec<(f64, Complex64)>> = Vec::new();
    for row in r.deserialize() {
        let row: DatasetRow = row?;
        let kk = Complex64::new(row.k_re, row.k_im);
        let new_block = match (omega.last(), k.last()) {
            (Some(&w), Some(&kl)) => !(same(w, row.omega) && same(kl.re, kk.re) && same(kl.im, kk.im)),
            _ => true,
        };
        if new_block {
            omega.push(row.omega);
            k.push(kk);
            blocks.push(Vec::new());
        }
        blocks
            .last_mut()
            .expect("block opened above")
            .push((row.theta, Complex64::new(row.u_re, row.u_im)));
    }
    let Some(first) = blocks.first() else {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    };
    let theta: Vec<f64> = first.iter().map(|p| p.0).collect();
    for (j, b) in blocks.iter().enumerate() {
        if b.len() != theta.len() || b.iter().zip(&theta).any(|(p, t)| !same(p.0, *t)) {
            return Err(Error::DimensionMismatch(format!(
                "frequency block {j} does not repeat the boundary grid of block 0"
            )));
        }
    }
    let voltages = DMatrix::from_fn(theta.len(), blocks.len(), |i, j| blocks[j][i].1);
    let (mut eta, mut seed) = (0.0, 0);
    let meta_path = sidecar(path);
    if meta_path.exists() {
        let meta: DatasetMeta = read_json(&meta_path)?;
        if meta.points != theta.len() || meta.frequencies != k.len() {
            return Err(Error::DimensionMismatch(format!(
                "sidecar declares {}x{} samples, table has {}x{}",
                meta.points,
                meta.frequencies,
                theta.len(),
                k.len()
            )));
        }
        eta = meta.eta;
        seed = meta.seed;
    }
    Ok(MultiFreqData {
        theta,
        omega,
        k,
        voltages,
        eta,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Cauchy data
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct CauchyRow {
    theta: f64,
    f: f64,
    u0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyMeta {
    pub points: usize,
    pub rho: Option<f64>,
}

pub fn write_cauchy(path: &Path, data: &CauchyData) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for ((&theta, &f), &u0) in data.theta.iter().zip(&data.f).zip(&data.u0) {
        w.serialize(CauchyRow { theta, f, u0 })?;
    }
    w.flush()?;
    write_json(
        &sidecar(path),
        &CauchyMeta {
            points: data.theta.len(),
            rho: data.rho,
        },
    )
}

pub fn read_cauchy(path: &Path) -> Result<CauchyData> {
    let mut r = csv::Reader::from_path(path)?;
    let mut data = CauchyData {
        theta: Vec::new(),
        f: Vec::new(),
        u0: Vec::new(),
        rho: None,
    };
    for row in r.deserialize() {
        let row: CauchyRow = row?;
        data.theta.push(row.theta);
        data.f.push(row.f);
        data.u0.push(row.u0);
    }
    if data.theta.is_empty() {
        return Err(Error::Parse(format!("{}: no data rows", path.display())));
    }
    let meta_path = sidecar(path);
    if meta_path.exists() {
        let meta: CauchyMeta = read_json(&meta_path)?;
        if meta.points != data.theta.len() {
            return Err(Error::DimensionMismatch(format!(
                "sidecar declares {} points, table has {}",
                meta.points,
                data.theta.len()
            )));
        }
        data.rho = meta.rho;
    }
    Ok(data)
}

// ---------------------------------------------------------------------------
// Everything else is write-only
// ---------------------------------------------------------------------------

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Mode traces on `∂Ω`: column `theta`, then `w1..wN`.
pub fn write_traces(path: &Path, theta: &[f64], spectrum: &NPSpectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["theta".to_string()];
    header.extend((1..=spectrum.len()).map(|n| format!("w{n}")));
    w.write_record(&header)?;
    for (i, &t) in theta.iter().enumerate() {
        let mut rec = vec![num(t)];
        rec.extend((0..spectrum.len()).map(|n| num(spectrum.traces_domega[(i, n)])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ForwardRow {
    k_re: f64,
    k_im: f64,
    theta: f64,
    direct_re: f64,
    direct_im: f64,
    spectral_re: f64,
    spectral_im: f64,
}

/// Direct and spectral voltages side by side, one row per (contrast, node).
pub fn write_forward(
    path: &Path,
    theta: &[f64],
    ks: &[Complex64],
    direct: &[Vec<Complex64>],
    spectral: &[Vec<Complex64>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (j, k) in ks.iter().enumerate() {
        for (i, &t) in theta.iter().enumerate() {
            w.serialize(ForwardRow {
                k_re: k.re,
                k_im: k.im,
                theta: t,
                direct_re: direct[j][i].re,
                direct_im: direct[j][i].im,
                spectral_re: spectral[j][i].re,
                spectral_im: spectral[j][i].im,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_model(path: &Path, model: &RationalModel) -> Result<()> {
    write_json(path, &model.to_json())
}

pub fn read_model(path: &Path) -> Result<RationalModel> {
    let j: RationalModelJson = read_json(path)?;
    RationalModel::from_json(&j)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("mfeit-io-{}-{name}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(format!("{name}.csv"))
    }

    #[test]
    fn dataset_round_trip() {
        let data = MultiFreqData {
            theta: vec![0.0, 1.5, 3.0],
            omega: vec![0.1, 1e-7],
            k: vec![Complex64::new(1.0, 0.1), Complex64::new(1.0, 1e-7)],
            voltages: DMatrix::from_fn(3, 2, |i, j| Complex64::new(i as f64 / 3.0, -(j as f64) * 1e-17)),
            eta: 1e-3,
            seed: 42,
        };
        let p = tmp("dataset");
        write_dataset(&p, &data).unwrap();
        assert_eq!(read_dataset(&p).unwrap(), data);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("omega,k_re,k_im,theta,u_re,u_im\n"));
    }

    #[test]
    fn cauchy_round_trip_and_mismatch() {
        let data = CauchyData {
            theta: vec![0.0, 2.0],
            f: vec![1.0, -1.0],
            u0: vec![0.25, -0.25],
            rho: Some(0.125),
        };
        let p = tmp("cauchy");
        write_cauchy(&p, &data).unwrap();
        assert_eq!(read_cauchy(&p).unwrap(), data);
        write_json(&sidecar(&p), &CauchyMeta { points: 5, rho: None }).unwrap();
        assert!(matches!(read_cauchy(&p), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn malformed_rows_are_parse_errors() {
        let p = tmp("bad");
        std::fs::write(&p, "theta,f,u0\n0.0,1.0,abc\n").unwrap();
        assert!(matches!(read_cauchy(&p), Err(Error::Parse(_))));
        assert!(matches!(read_cauchy(&p.with_file_name("missing.csv")), Err(Error::Io(_))));
    }
}
