//! Value parsers for flags that clap cannot handle on its own.

use std::f64::consts::PI;

use xxqst_core::chain::{CouplingProfile, ProfileSpec};
use xxqst_core::oracle::{DensityMatrix, StateVector};
use xxqst_core::protocol::{MediumSpec, ThermalScope};
use xxqst_core::{Error, Result};

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Decimal, or a multiple of pi: `pi`, `pi/4`, `3*pi/4`, `3pi/2`, `-pi/2`.
pub fn parse_time(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let Some(idx) = s.find("pi") else {
        let v: f64 = s.parse().map_err(|_| format!("bad time '{s}'"))?;
        return if v.is_finite() { Ok(v) } else { Err(format!("time '{s}' is not finite")) };
    };
    let head = s[..idx].trim_end_matches('*').trim();
    let tail = s[idx + 2..].trim();
    let factor = match head {
        "" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| format!("bad multiplier in time '{s}'"))?,
    };
    let divisor = match tail.strip_prefix('/') {
        None if tail.is_empty() => 1.0,
        None => return Err(format!("bad time '{s}'")),
        Some(d) => d.trim().parse::<f64>().map_err(|_| format!("bad divisor in time '{s}'"))?,
    };
    if divisor == 0.0 {
        return Err(format!("zero divisor in time '{s}'"));
    }
    // Division by a power of two is exact, so pi/4 is bitwise FRAC_PI_4.
    Ok(factor * PI / divisor)
}

/// `--profile` with an optional `--eta` for the bare word `boundary`.
pub fn resolve_profile(spec: &str, n: Option<usize>, eta: Option<f64>) -> Result<CouplingProfile> {
    let spec = match (spec.trim(), eta) {
        ("boundary", Some(e)) => ProfileSpec::Boundary(e),
        ("boundary", None) => return Err(bad("--profile boundary needs --eta")),
        (_, Some(_)) => return Err(bad("--eta only applies to the bare --profile boundary")),
        (s, _) => s.parse::<ProfileSpec>()?,
    };
    spec.build(n)
}

/// Named axial state, or Bloch angles when `theta` is given.
pub fn resolve_input(name: &str, theta: Option<f64>, phi: Option<f64>) -> Result<DensityMatrix> {
    match (theta, phi) {
        (Some(t), p) => Ok(StateVector::qubit(t, p.unwrap_or(0.0)).to_density()),
        (None, Some(_)) => Err(bad("--phi needs --theta")),
        (None, None) => match name {
            "mixed" => Ok(DensityMatrix::maximally_mixed(1)),
            _ => Ok(StateVector::axial(name)?.to_density()),
        },
    }
}

/// `zero`, `random`, `mixed`, `thermal:β` or `thermal-full:β`.
pub fn parse_medium(s: &str) -> Result<MediumSpec> {
    let s = s.trim();
    let beta = |rest: &str| rest.parse::<f64>().map_err(|_| bad(format!("bad inverse temperature in medium '{s}'")));
    match s {
        "zero" => Ok(MediumSpec::AllZero),
        "random" => Ok(MediumSpec::RandomPure),
        "mixed" => Ok(MediumSpec::MaximallyMixed),
        _ => {
            if let Some(rest) = s.strip_prefix("thermal-full:") {
                Ok(MediumSpec::Thermal { beta: beta(rest)?, scope: ThermalScope::FullChain })
            } else if let Some(rest) = s.strip_prefix("thermal:") {
                Ok(MediumSpec::Thermal { beta: beta(rest)?, scope: ThermalScope::SubChain })
            } else {
                Err(bad(format!("unknown medium '{s}' (zero, random, mixed, thermal:B, thermal-full:B)")))
            }
        }
    }
}
