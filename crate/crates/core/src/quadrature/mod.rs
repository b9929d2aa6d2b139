//! Node sets for the four integration strategies: inversion samples (MC),
//! Halton points pushed through the inverse CDF (QMC), and tensor trapezoid
//! and Simpson grids.

mod discrepancy;

pub use discrepancy::{discrepancy_report, star_discrepancy, DiscrepancyEstimate, DiscrepancyReport};

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrands::{Domain, ProductDensity};

/// Bases of the Halton coordinates.
pub const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mc,
    Qmc,
    Trapezoid,
    Simpson,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mc, Method::Qmc, Method::Trapezoid, Method::Simpson];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Qmc => "qmc",
            Method::Trapezoid => "trapezoid",
            Method::Simpson => "simpson",
        }
    }

    pub fn grid_rule(self) -> Option<GridRule> {
        match self {
            Method::Trapezoid => Some(GridRule::Trapezoid),
            Method::Simpson => Some(GridRule::Simpson),
            _ => None,
        }
    }

    /// Node positions do not depend on the random stream.
    pub fn deterministic_nodes(self) -> bool {
        !matches!(self, Method::Mc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridRule {
    Trapezoid,
    Simpson,
}

impl GridRule {
    pub fn name(self) -> &'static str {
        match self {
            GridRule::Trapezoid => "trapezoid",
            GridRule::Simpson => "simpson",
        }
    }

    pub fn method(self) -> Method {
        match self {
            GridRule::Trapezoid => Method::Trapezoid,
            GridRule::Simpson => Method::Simpson,
        }
    }
}

/// Radical inverse of `n` in `base`.
pub fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while n > 0 {
        r += (n % base) as f64 * f;
        n /= base;
        f *= inv;
    }
    r
}

pub fn halton_into(index: u64, out: &mut [f64]) -> Result<()> {
    if index == 0 {
        return Err(Error::HaltonIndexZero);
    }
    if out.len() > PRIMES.len() {
        return Err(Error::TooManyDimensions(out.len()));
    }
    for (o, &p) in out.iter_mut().zip(PRIMES.iter()) {
        *o = radical_inverse(index, p);
    }
    Ok(())
}

/// Halton point with coordinate `j` the radical inverse of `index` in the `j`-th prime.
pub fn halton_point(index: u64, dims: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; dims];
    halton_into(index, &mut out)?;
    Ok(out)
}

/// Componentwise inverse CDF of a product density.
pub fn inverse_cdf_transform(u: &[f64], density: &ProductDensity) -> Result<Vec<f64>> {
    if u.len() != density.dims() {
        return Err(Error::DimensionMismatch { expected: density.dims(), got: u.len() });
    }
    let mut out = vec![0.0; u.len()];
    density.quantile_into(u, &mut out)?;
    Ok(out)
}

/// Uniform draw on the open unit interval with 53 random bits.
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Points and `Δ·ω` weights of one grid axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisGrid {
    pub fn new(lo: f64, hi: f64, count: usize, rule: GridRule) -> Self {
        let delta = (hi - lo) / (count - 1) as f64;
        let points = (0..count)
            .map(|i| if i + 1 == count { hi } else { lo + i as f64 * delta })
            .collect();
        let weights = (0..count)
            .map(|i| {
                let end = i == 0 || i + 1 == count;
                match rule {
                    GridRule::Trapezoid => delta * if end { 0.5 } else { 1.0 },
                    GridRule::Simpson => {
                        delta / 3.0
                            * if end {
                                1.0
                            } else if i % 2 == 1 {
                                4.0
                            } else {
                                2.0
                            }
                    }
                }
            })
            .collect();
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Points(Vec<f64>),
    Tensor(Vec<AxisGrid>),
}

/// Quadrature nodes with their classical weights.
///
/// MC and QMC sets store points with uniform weight `1/K`. Grid sets store
/// per-axis grids; node `k` enumerates them with the last axis fastest and
/// its weight is `Π_j Δ_j ω_j` (the density factor is applied by the estimator).
#[derive(Debug, Clone)]
pub struct NodeSet {
    kind: Method,
    dims: usize,
    len: usize,
    storage: Storage,
}

impl NodeSet {
    pub fn kind(&self) -> Method {
        self.kind
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn k_per_axis(&self) -> Option<Vec<usize>> {
        match &self.storage {
            Storage::Tensor(axes) => Some(axes.iter().map(AxisGrid::len).collect()),
            Storage::Points(_) => None,
        }
    }

    pub fn axis_grids(&self) -> Option<&[AxisGrid]> {
        match &self.storage {
            Storage::Tensor(axes) => Some(axes),
            Storage::Points(_) => None,
        }
    }

    /// Writes node `k` into `out` and returns its weight.
    #[inline]
    pub fn node_into(&self, k: usize, out: &mut [f64]) -> f64 {
        match &self.storage {
            Storage::Points(p) => {
                out.copy_from_slice(&p[k * self.dims..(k + 1) * self.dims]);
                1.0 / self.len as f64
            }
            Storage::Tensor(axes) => {
                let mut rem = k;
                let mut w = 1.0;
                for j in (0..self.dims).rev() {
                    let n = axes[j].len();
                    let i = rem % n;
                    rem /= n;
                    out[j] = axes[j].points[i];
                    w *= axes[j].weights[i];
                }
                w
            }
        }
    }

    pub fn node(&self, k: usize) -> (Vec<f64>, f64) {
        let mut t = vec![0.0; self.dims];
        let w = self.node_into(k, &mut t);
        (t, w)
    }

    pub fn weight_sum(&self) -> f64 {
        match &self.storage {
            Storage::Points(_) => 1.0,
            Storage::Tensor(axes) => axes.iter().map(|a| a.weights.iter().sum::<f64>()).product(),
        }
    }
}

/// `K` independent inversion samples of `density`.
pub fn mc_nodes<R: RngCore + ?Sized>(k: usize, density: &ProductDensity, rng: &mut R) -> Result<NodeSet> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let d = density.dims();
    let mut pts = vec![0.0; k * d];
    let mut u = vec![0.0; d];
    for chunk in pts.chunks_mut(d) {
        for x in u.iter_mut() {
            *x = open_unit(rng);
        }
        density.quantile_into(&u, chunk)?;
    }
    Ok(NodeSet { kind: Method::Mc, dims: d, len: k, storage: Storage::Points(pts) })
}

/// Halton indices `1..=K` pushed through the inverse CDF of `density`.
pub fn qmc_nodes(k: usize, density: &ProductDensity) -> Result<NodeSet> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let d = density.dims();
    let mut pts = vec![0.0; k * d];
    let mut u = vec![0.0; d];
    for (i, chunk) in pts.chunks_mut(d).enumerate() {
        halton_into(i as u64 + 1, &mut u)?;
        density.quantile_into(&u, chunk)?;
    }
    Ok(NodeSet { kind: Method::Qmc, dims: d, len: k, storage: Storage::Points(pts) })
}

/// Per-axis counts for a requested total: `round(K^{1/d})`, Simpson bumped to odd.
pub fn grid_counts(k_request: usize, dims: usize, rule: GridRule) -> Result<Vec<usize>> {
    let kj = (k_request as f64).powf(1.0 / dims as f64).round() as usize;
    let too_small = Error::GridTooSmall { k: k_request, rule: rule.name(), dims };
    let kj = match rule {
        GridRule::Trapezoid if kj < 2 => return Err(too_small),
        GridRule::Trapezoid => kj,
        GridRule::Simpson if kj < 2 => return Err(too_small),
        GridRule::Simpson => kj.max(3) | 1,
    };
    Ok(vec![kj; dims])
}

/// Tensor grid over `domain` with about `k_request` nodes.
pub fn grid_nodes(k_request: usize, domain: &Domain, rule: GridRule) -> Result<NodeSet> {
    let counts = grid_counts(k_request, domain.dims(), rule)?;
    grid_nodes_with_counts(&counts, domain, rule)
}

/// Tensor grid with explicit per-axis counts.
pub fn grid_nodes_with_counts(counts: &[usize], domain: &Domain, rule: GridRule) -> Result<NodeSet> {
    if counts.len() != domain.dims() {
        return Err(Error::DimensionMismatch { expected: domain.dims(), got: counts.len() });
    }
    let total: usize = counts.iter().product();
    for &c in counts {
        let ok = match rule {
            GridRule::Trapezoid => c >= 2,
            GridRule::Simpson => c >= 3 && c % 2 == 1,
        };
        if !ok {
            return Err(Error::GridTooSmall { k: total, rule: rule.name(), dims: domain.dims() });
        }
    }
    let axes = counts
        .iter()
        .zip(domain.bounds())
        .map(|(&c, &(a, b))| AxisGrid::new(a, b, c, rule))
        .collect();
    Ok(NodeSet { kind: rule.method(), dims: domain.dims(), len: total, storage: Storage::Tensor(axes) })
}
