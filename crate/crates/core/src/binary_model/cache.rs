//! On-disk cache of statistics moments keyed by `(S, ζ, γ)`.
//!
//! One CSV file per key, named
//! `moments_S{S}_zeta{bits}_gamma{bits}.csv` where `{bits}` is the
//! hexadecimal IEEE-754 pattern of the value, so keys match exactly. The
//! header row is `row,mu,0,1,…,L−1`; row `k` holds `k`, `μ_k` and row `k` of
//! `R_φ`. Values are written in shortest round-trip decimal form.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use super::StatisticsMoments;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct MomentCache {
    dir: PathBuf,
}

impl MomentCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, sensors: usize, zeta: f64, gamma: f64) -> PathBuf {
        self.dir.join(format!(
            "moments_S{sensors}_zeta{:016x}_gamma{:016x}.csv",
            zeta.to_bits(),
            gamma.to_bits()
        ))
    }

    pub fn load(&self, sensors: usize, zeta: f64, gamma: f64) -> Result<Option<StatisticsMoments>> {
        let path = self.path_for(sensors, zeta, gamma);
        if !path.exists() {
            return Ok(None);
        }
        read_moments(&path, 2 * sensors).map(Some)
    }

    pub fn store(&self, sensors: usize, zeta: f64, gamma: f64, m: &StatisticsMoments) -> Result<()> {
        write_moments(&self.path_for(sensors, zeta, gamma), m)
    }

    pub fn get_or_compute<F>(&self, sensors: usize, zeta: f64, gamma: f64, compute: F) -> Result<StatisticsMoments>
    where
        F: FnOnce() -> Result<StatisticsMoments>,
    {
        if let Some(m) = self.load(sensors, zeta, gamma)? {
            log::debug!("moment cache hit for S={sensors}, gamma={gamma}");
            return Ok(m);
        }
        let m = compute()?;
        self.store(sensors, zeta, gamma, &m)?;
        Ok(m)
    }
}

pub fn write_moments(path: &Path, m: &StatisticsMoments) -> Result<()> {
    let l = m.mu.len();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["row".to_string(), "mu".to_string()];
    header.extend((0..l).map(|k| k.to_string()));
    w.write_record(&header)?;
    for k in 0..l {
        let mut rec = vec![k.to_string(), m.mu[k].to_string()];
        rec.extend(m.cov.row(k).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_moments(path: &Path, dims: usize) -> Result<StatisticsMoments> {
    let l = dims * (dims - 1) / 2;
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() != l + 2 {
        return Err(Error::Cache(format!(
            "{}: expected {} columns for M = {dims}, found {}",
            path.display(),
            l + 2,
            header.len()
        )));
    }
    let mut mu = DVector::zeros(l);
    let mut cov = DMatrix::zeros(l, l);
    let mut rows = 0;
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        if k >= l {
            return Err(Error::Cache(format!("{}: too many rows", path.display())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Cache(format!("{}: row {k}: {e}", path.display())))
        };
        mu[k] = parse(&rec[1])?;
        for q in 0..l {
            cov[(k, q)] = parse(&rec[q + 2])?;
        }
        rows += 1;
    }
    if rows != l {
        return Err(Error::Cache(format!(
            "{}: expected {l} rows, found {rows}",
            path.display()
        )));
    }
    Ok(StatisticsMoments { mu, cov })
}
