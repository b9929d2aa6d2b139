//! Star discrepancy of point sets in the unit cube.

use rand::RngCore;

use super::open_unit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyEstimate {
    pub value: f64,
    /// `true` for the exact one-dimensional formula, `false` for a probe lower bound.
    pub exact: bool,
}

/// Star discrepancy of `points` (row-major, `dims` coordinates each).
///
/// One dimension uses the exact order-statistics formula. Higher dimensions
/// return a lower bound from `n_probe` anchored boxes `[0, q)`, with corners
/// mixing node coordinates and uniform draws, each scored with both open and
/// closed counts.
pub fn star_discrepancy<R: RngCore + ?Sized>(
    points: &[f64],
    dims: usize,
    rng: &mut R,
    n_probe: usize,
) -> Result<DiscrepancyEstimate> {
    if dims == 0 || points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if points.len() % dims != 0 {
        return Err(Error::DimensionMismatch { expected: dims, got: points.len() % dims });
    }
    let k = points.len() / dims;
    if dims == 1 {
        let mut u = points.to_vec();
        u.sort_by(f64::total_cmp);
        let kf = k as f64;
        let value = u
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / kf - x).max(x - i as f64 / kf))
            .fold(0.0, f64::max);
        return Ok(DiscrepancyEstimate { value, exact: true });
    }
    let mut best = 0.0f64;
    let mut q = vec![0.0; dims];
    for p in 0..n_probe {
        for (j, qj) in q.iter_mut().enumerate() {
            // Alternate between node-anchored and uniform corners.
            *qj = if p % 2 == 0 || rng.next_u32() & 1 == 0 {
                let idx = (rng.next_u64() % k as u64) as usize;
                points[idx * dims + j]
            } else {
                open_unit(rng)
            };
        }
        let vol: f64 = q.iter().product();
        let (mut open, mut closed) = (0usize, 0usize);
        for pt in points.chunks(dims) {
            let mut inside_closed = true;
            let mut inside_open = true;
            for (x, qj) in pt.iter().zip(&q) {
                if x > qj {
                    inside_closed = false;
                    inside_open = false;
                    break;
                }
                if x == qj {
                    inside_open = false;
                }
            }
            closed += inside_closed as usize;
            open += inside_open as usize;
        }
        let kf = k as f64;
        best = best.max(closed as f64 / kf - vol).max(vol - open as f64 / kf);
    }
    Ok(DiscrepancyEstimate { value: best.clamp(0.0, 1.0), exact: false })
}

/// Discrepancy values over several sizes with the fitted constant `c` of
/// `D* <= c (ln K)^d / K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub dims: usize,
    pub k_values: Vec<usize>,
    pub d_star: Vec<f64>,
    /// `D* K / (ln K)^d` per size.
    pub scaled: Vec<f64>,
    pub fitted_constant: f64,
    pub exact: bool,
}

/// Builds a report from the leading `K` points of `points` for each `K` in `k_values`.
pub fn discrepancy_report<R: RngCore + ?Sized>(
    points: &[f64],
    dims: usize,
    k_values: &[usize],
    rng: &mut R,
    n_probe: usize,
) -> Result<DiscrepancyReport> {
    let mut d_star = Vec::with_capacity(k_values.len());
    let mut scaled = Vec::with_capacity(k_values.len());
    let mut exact = true;
    for &k in k_values {
        if k * dims > points.len() {
            return Err(Error::InvalidParameter(format!("need {k} points, have {}", points.len() / dims)));
        }
        let est = star_discrepancy(&points[..k * dims], dims, rng, n_probe)?;
        exact &= est.exact;
        d_star.push(est.value);
        let kf = k as f64;
        scaled.push(est.value * kf / kf.ln().max(f64::MIN_POSITIVE).powi(dims as i32));
    }
    let fitted_constant = scaled.iter().cloned().fold(0.0, f64::max);
    Ok(DiscrepancyReport { dims, k_values: k_values.to_vec(), d_star, scaled, fitted_constant, exact })
}
