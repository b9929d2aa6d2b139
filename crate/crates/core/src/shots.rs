//! Hadamard-test outcome simulation: each shot is `+1` with probability
//! `(1 + x) / 2` and `-1` otherwise, where `x` is the measured component of
//! `Tr(U rho)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};

/// Values this far beyond `[-1, 1]` are clamped; larger ones are rejected.
pub const CLAMP_SLACK: f64 = 1e-10;

/// Shots per node, or the noiseless limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShotMode {
    Shots(u64),
    Exact,
}

impl ShotMode {
    /// Canonical integer code: the shot count, or `u64::MAX` for exact mode.
    pub fn code(self) -> u64 {
        match self {
            ShotMode::Shots(m) => m,
            ShotMode::Exact => u64::MAX,
        }
    }
}

impl fmt::Display for ShotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShotMode::Shots(m) => write!(f, "{m}"),
            ShotMode::Exact => f.write_str("exact"),
        }
    }
}

impl FromStr for ShotMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(ShotMode::Exact);
        }
        match s.parse::<u64>() {
            Ok(0) => Err(Error::ZeroShots),
            Ok(m) => Ok(ShotMode::Shots(m)),
            Err(_) => Err(Error::Config(format!("shot count `{s}` is neither an integer nor `exact`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotBatch {
    pub x_true: f64,
    pub mode: ShotMode,
    pub nu: f64,
}

/// Checks `|x| <= 1` up to `CLAMP_SLACK` and clamps.
pub fn checked_expectation(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + CLAMP_SLACK {
        return Err(Error::ExpectationOutOfRange(x));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// One Hadamard-test outcome.
pub fn sample_shot<R: RngCore + ?Sized>(x: f64, rng: &mut R) -> Result<i8> {
    let x = checked_expectation(x)?;
    Ok(if rng.random::<f64>() < 0.5 * (1.0 + x) { 1 } else { -1 })
}

/// Mean of `m` outcomes, drawn as a binomial count of `+1` results.
pub(crate) fn shot_mean<R: RngCore + ?Sized>(x: f64, m: u64, rng: &mut R) -> Result<f64> {
    let x = checked_expectation(x)?;
    if m == 0 {
        return Err(Error::ZeroShots);
    }
    let p = 0.5 * (1.0 + x);
    if m == 1 {
        return Ok(if rng.random::<f64>() < p { 1.0 } else { -1.0 });
    }
    let plus = Binomial::new(m, p)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(rng);
    Ok((2 * plus) as f64 / m as f64 - 1.0)
}

/// Node estimator: shot mean in `Shots` mode, `x` itself in `Exact` mode.
pub fn estimate_node<R: RngCore + ?Sized>(x: f64, mode: ShotMode, rng: &mut R) -> Result<ShotBatch> {
    let nu = match mode {
        ShotMode::Exact => {
            checked_expectation(x)?;
            x
        }
        ShotMode::Shots(m) => shot_mean(x, m, rng)?,
    };
    Ok(ShotBatch { x_true: x, mode, nu })
}
