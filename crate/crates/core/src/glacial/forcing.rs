use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const Q0: f64 = 343.0;

/// Q(e) = Q₀/√(1−e²).
pub fn insolation_q(e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e.abs()) {
        return Err(Error::Domain(format!("eccentricity must satisfy |e| < 1, got {e}")));
    }
    Ok(Q0 / (1.0 - e * e).sqrt())
}

/// s₂(β) = (5/16)(3cos²β − 1), with range [−5/16, 10/16].
pub fn obliquity_s2(beta: f64) -> f64 {
    let c = beta.cos();
    5.0 / 16.0 * (3.0 * c * c - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalSample {
    /// Time in kyr.
    pub t: f64,
    pub e: f64,
    /// Obliquity in radians.
    pub beta: f64,
}

/// Load a `t,e,beta` CSV; rows must be strictly increasing in t.
pub fn load_orbital_series(path: &Path) -> Result<Vec<OrbitalSample>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    parse_orbital_series(file, path)
}

pub fn parse_orbital_series(reader: impl Read, path: &Path) -> Result<Vec<OrbitalSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let perr = |line: usize, message: String| Error::Parse { path: path.into(), line, message };
    let headers = rdr.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "e", "beta"] {
        return Err(perr(1, format!("expected header 't,e,beta', found '{}'", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out: Vec<OrbitalSample> = Vec::new();
    for rec in rdr.deserialize::<OrbitalSample>() {
        let line = out.len() + 2;
        let s = rec.map_err(|e| perr(line, e.to_string()))?;
        if !(0.0..1.0).contains(&s.e) {
            return Err(perr(line, format!("eccentricity {} outside [0, 1)", s.e)));
        }
        if !s.t.is_finite() || !s.beta.is_finite() {
            return Err(perr(line, "non-finite value".into()));
        }
        if let Some(prev) = out.last() {
            if s.t <= prev.t {
                return Err(perr(line, format!("t is not strictly increasing ({} after {})", s.t, prev.t)));
            }
        }
        out.push(s);
    }
    if out.is_empty() {
        return Err(perr(1, "no samples".into()));
    }
    Ok(out)
}
