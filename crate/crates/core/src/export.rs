//! CSV and JSON export of sampled profiles and solutions.
//!
//! Numbers are written with Rust's shortest round-trip formatting, which is
//! locale independent. Files are written to a temporary sibling and renamed
//! into place, so a failed run never leaves a truncated file behind.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ScalarField, SpaceTimePoint};
use crate::reduced_ode::{SampledProfile, SolutionHandle};

/// Replace `path` atomically with `bytes`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub omega: f64,
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionRow {
    pub t: f64,
    pub x: Vec<f64>,
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveRow {
    pub x: [f64; 4],
    pub u: f64,
}

pub fn profile_rows(profile: &SampledProfile) -> Vec<ProfileRow> {
    profile
        .omega
        .iter()
        .zip(&profile.phi)
        .map(|(w, v)| ProfileRow {
            omega: *w,
            re: v.re,
            im: v.im,
            modulus: v.norm(),
        })
        .collect()
}

pub fn solution_rows(u: &SolutionHandle, points: &[SpaceTimePoint]) -> Result<Vec<SolutionRow>> {
    points
        .iter()
        .map(|p| {
            let v: Complex64 = u.try_eval(p)?;
            Ok(SolutionRow {
                t: p.t,
                x: p.x.clone(),
                re: v.re,
                im: v.im,
                modulus: v.norm(),
            })
        })
        .collect()
}

pub fn wave_rows(u: &ScalarField, points: &[SpaceTimePoint]) -> Result<Vec<WaveRow>> {
    points
        .iter()
        .map(|p| {
            let v = u.eval(p);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    t: p.t,
                    x: p.x.clone(),
                });
            }
            Ok(WaveRow {
                x: [p.t, p.x[0], p.x[1], p.x[2]],
                u: v,
            })
        })
        .collect()
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn profile_csv(rows: &[ProfileRow]) -> Result<Vec<u8>> {
    let header = ["omega", "re", "im", "modulus"].map(String::from);
    csv_bytes(&header, rows.iter().map(|r| vec![r.omega, r.re, r.im, r.modulus]))
}

pub fn solution_csv(rows: &[SolutionRow]) -> Result<Vec<u8>> {
    let n = rows.first().map_or(0, |r| r.x.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|a| format!("x{a}")));
    header.extend(["re", "im", "modulus"].map(String::from));
    csv_bytes(
        &header,
        rows.iter().map(|r| {
            let mut v = vec![r.t];
            v.extend(&r.x);
            v.extend([r.re, r.im, r.modulus]);
            v
        }),
    )
}

pub fn wave_csv(rows: &[WaveRow]) -> Result<Vec<u8>> {
    let header = ["x0", "x1", "x2", "x3", "u"].map(String::from);
    csv_bytes(&header, rows.iter().map(|r| vec![r.x[0], r.x[1], r.x[2], r.x[3], r.u]))
}

pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}
