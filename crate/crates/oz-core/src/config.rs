//! Line-oriented `key = value` model config files.
//!
//! Recognised keys: `dimension`, `beta`, repeated `coupling = (dx,dy[,dz]) : J`
//! and `box = x0..x1, y0..y1[, z0..z1]`.  Blank lines and lines starting with
//! `#` are skipped; any other key is rejected.

use crate::lattice::{CouplingField, Point};
use crate::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub dimension: usize,
    pub beta: f64,
    pub couplings: Vec<(Point, f64)>,
    pub bounds: Vec<(i64, i64)>,
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut dimension: Option<usize> = None;
        let mut beta: Option<f64> = None;
        let mut couplings: Vec<(Point, f64)> = Vec::new();
        let mut bounds: Option<Vec<(i64, i64)>> = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CoreError::Config(format!("line {}: missing '='", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "dimension" => {
                    dimension = Some(value.parse().map_err(|_| {
                        CoreError::Config(format!("line {}: bad dimension", lineno + 1))
                    })?)
                }
                "beta" => {
                    beta = Some(value.parse().map_err(|_| {
                        CoreError::Config(format!("line {}: bad beta", lineno + 1))
                    })?)
                }
                "coupling" => couplings.push(parse_coupling(value, lineno + 1)?),
                "box" => bounds = Some(parse_box(value, lineno + 1)?),
                other => {
                    return Err(CoreError::Config(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }

        let dimension = dimension.ok_or_else(|| CoreError::Config("missing dimension".into()))?;
        let beta = beta.ok_or_else(|| CoreError::Config("missing beta".into()))?;
        let bounds = bounds.ok_or_else(|| CoreError::Config("missing box".into()))?;
        if couplings.is_empty() {
            return Err(CoreError::Config("missing couplings".into()));
        }
        if bounds.len() != dimension {
            return Err(CoreError::Config("box rank does not match dimension".into()));
        }
        for (off, _) in &couplings {
            if off.len() != dimension {
                return Err(CoreError::Config("coupling rank does not match dimension".into()));
            }
        }
        Ok(ModelConfig { dimension, beta, couplings, bounds })
    }

    pub fn parse_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn coupling_field(&self) -> Result<CouplingField> {
        CouplingField::new(self.dimension, &self.couplings)
    }
}

fn parse_coupling(value: &str, lineno: usize) -> Result<(Point, f64)> {
    let bad = || CoreError::Config(format!("line {lineno}: expected `(dx,dy[,dz]) : J`"));
    let (vec_part, j_part) = value.split_once(':').ok_or_else(bad)?;
    let vec_part = vec_part.trim();
    let inner = vec_part
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(bad)?;
    let offset: Point = inner
        .split(',')
        .map(|c| c.trim().parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let j: f64 = j_part.trim().parse().map_err(|_| bad())?;
    Ok((offset, j))
}

fn parse_box(value: &str, lineno: usize) -> Result<Vec<(i64, i64)>> {
    let bad = || CoreError::Config(format!("line {lineno}: expected `x0..x1, y0..y1[, z0..z1]`"));
    value
        .split(',')
        .map(|range| {
            let (lo, hi) = range.trim().split_once("..").ok_or_else(bad)?;
            let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
            Ok((lo, hi))
        })
        .collect()
}
