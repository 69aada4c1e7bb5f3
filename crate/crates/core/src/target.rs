//! Target specifications accepted on the command line.
//!
//! - `R:d=<int>`: `R_{2^d}`
//! - `R:phi=<float>`: `diag(1, e^{iφ})`
//! - `euler:<α>,<β>,<θ>`: the generic gate in angle form
//! - `mat:<8 floats>`: row-major `re,im` pairs, unitary to 1e-9

use num_complex::Complex64;

use crate::bench::{phase_target, phase_target_angle};
use crate::error::{Error, Result};
use crate::unitary::Unitary2;

/// Unitarity tolerance for `mat:` targets.
pub const MAT_TOL: f64 = 1e-9;

fn err(spec: &str, reason: impl Into<String>) -> Error {
    Error::Target {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn floats(spec: &str, body: &str, expected: usize) -> Result<Vec<f64>> {
    let parts: Vec<&str> = body.split(',').map(str::trim).collect();
    if parts.len() != expected {
        return Err(err(
            spec,
            format!(
                "expected {expected} comma-separated numbers, got {}",
                parts.len()
            ),
        ));
    }
    parts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            p.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    err(
                        spec,
                        format!("field {} (`{p}`) is not a finite number", i + 1),
                    )
                })
        })
        .collect()
}

pub fn parse_target(spec: &str) -> Result<Unitary2> {
    let spec = spec.trim();
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| err(spec, "missing `kind:` prefix (R, euler or mat)"))?;
    match kind {
        "R" => {
            if let Some(d) = body.strip_prefix("d=") {
                let d: u32 = d
                    .parse()
                    .ok()
                    .filter(|&d| (1..=60).contains(&d))
                    .ok_or_else(|| err(spec, format!("d (`{d}`) must be an integer in 1..=60")))?;
                Ok(phase_target(d))
            } else if let Some(phi) = body.strip_prefix("phi=") {
                let phi = floats(spec, phi, 1)?[0];
                Ok(phase_target_angle(phi))
            } else {
                Err(err(spec, "expected `d=<int>` or `phi=<float>`"))
            }
        }
        "euler" => {
            let v = floats(spec, body, 3)?;
            Ok(Unitary2::from_euler(v[0], v[1], v[2]))
        }
        "mat" => {
            let v = floats(spec, body, 8)?;
            let m: [Complex64; 4] = std::array::from_fn(|i| Complex64::new(v[2 * i], v[2 * i + 1]));
            Unitary2::with_tolerance(m, MAT_TOL).map_err(|e| err(spec, e.to_string()))
        }
        other => Err(err(spec, format!("unknown target kind `{other}`"))),
    }
}
