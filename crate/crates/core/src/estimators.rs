//! Full estimators (MC, QMC, trapezoid, Simpson), error metrics and the
//! variance and bias constants of the estimators evaluated by reference
//! quadrature.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrands::{EvalScratch, LcuIntegrand};
use crate::operators::C64;
use crate::quadrature::{
    grid_nodes, grid_nodes_with_counts, mc_nodes, qmc_nodes, GridRule, Method, NodeSet,
};
use crate::shots::{checked_expectation, shot_mean, ShotMode};

/// Random stream used for every seeded estimator run.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRate {
    pub value: f64,
    /// The target was zero, so `value` is the absolute error.
    pub absolute_fallback: bool,
}

/// `|estimate - exact| / |exact|`, or the absolute error when `exact == 0`.
pub fn error_rate(estimate: f64, exact: f64) -> ErrorRate {
    let abs = (estimate - exact).abs();
    if exact == 0.0 {
        ErrorRate { value: abs, absolute_fallback: true }
    } else {
        ErrorRate { value: abs / exact.abs(), absolute_fallback: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRecord {
    pub method: Method,
    pub k_requested: usize,
    pub k_actual: usize,
    pub shots: ShotMode,
    pub seed: u64,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
    pub error_rate: f64,
    pub absolute_fallback: bool,
    pub wall_time_s: f64,
}

impl EstimateRecord {
    pub fn new(
        method: Method,
        k_requested: usize,
        k_actual: usize,
        shots: ShotMode,
        seed: u64,
        estimate: f64,
        exact: f64,
        wall_time_s: f64,
    ) -> Self {
        let rate = error_rate(estimate, exact);
        Self {
            method,
            k_requested,
            k_actual,
            shots,
            seed,
            estimate,
            exact,
            abs_error: (estimate - exact).abs(),
            error_rate: rate.value,
            absolute_fallback: rate.absolute_fallback,
            wall_time_s,
        }
    }
}

/// Per-node classical weights and measured values, reusable across shot draws.
///
/// For MC/QMC the weight is `c(t_k)/K`; for grids it is `Π Δ_j ω_k f(t_k) c(t_k)`
/// with `f` renormalized over the domain.
#[derive(Debug, Clone)]
pub struct EvaluatedNodes {
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl EvaluatedNodes {
    pub fn evaluate(integrand: &LcuIntegrand, nodes: &NodeSet) -> Result<Self> {
        if nodes.dims() != integrand.dims() {
            return Err(Error::DimensionMismatch { expected: integrand.dims(), got: nodes.dims() });
        }
        let grid = nodes.kind().grid_rule().is_some();
        let mut weights = Vec::with_capacity(nodes.len());
        let mut values = Vec::with_capacity(nodes.len());
        let mut t = vec![0.0; nodes.dims()];
        let mut s = EvalScratch::default();
        for k in 0..nodes.len() {
            let w = nodes.node_into(k, &mut t);
            let (c, x) = integrand.evaluate(&t, &mut s);
            let f = if grid { integrand.truncated_density_at(&t) } else { 1.0 };
            weights.push(w * f * c);
            values.push(checked_expectation(x)?);
        }
        Ok(Self { weights, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ_k weight_k ν_k` with fresh shot means drawn from `rng`.
    pub fn estimate<R: RngCore + ?Sized>(&self, mode: ShotMode, rng: &mut R) -> Result<f64> {
        match mode {
            ShotMode::Exact => Ok(self.weights.iter().zip(&self.values).map(|(w, x)| w * x).sum()),
            ShotMode::Shots(m) => {
                let mut acc = 0.0;
                for (w, &x) in self.weights.iter().zip(&self.values) {
                    acc += w * shot_mean(x, m, rng)?;
                }
                Ok(acc)
            }
        }
    }
}

/// Noiseless grid estimate computed channel by channel.
///
/// The classical weight, the density and the grid weights all factor over the
/// integrand's channels, so the tensor sum collapses to one sub-grid sum per
/// channel and frequency. The result equals the node-by-node sum up to rounding.
pub fn exact_grid_sum(integrand: &LcuIntegrand, nodes: &NodeSet) -> Result<f64> {
    let axes = nodes
        .axis_grids()
        .ok_or_else(|| Error::InvalidParameter("channel sums need a tensor grid".into()))?;
    if nodes.dims() != integrand.dims() {
        return Err(Error::DimensionMismatch { expected: integrand.dims(), got: nodes.dims() });
    }
    let laws = integrand.density().axes();
    let bounds = integrand.domain().bounds();
    let weighted: Vec<Vec<f64>> = axes
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let mass = laws[j].mass(bounds[j].0, bounds[j].1);
            g.points.iter().zip(&g.weights).map(|(&x, &w)| w * laws[j].pdf(x) / mass).collect()
        })
        .collect();
    let phases = integrand.phases();
    let mut table = vec![C64::new(0.0, 0.0); phases.scratch_len()];
    let mut t = vec![0.0; integrand.dims()];
    for (ch_idx, ch) in integrand.channels().iter().enumerate() {
        let ch_axes = ch.axes();
        let counts: Vec<usize> = ch_axes.iter().map(|&a| axes[a].len()).collect();
        let total: usize = counts.iter().product();
        let freqs = phases.freqs(ch_idx);
        let off = phases.offsets()[ch_idx];
        let mut acc = vec![C64::new(0.0, 0.0); freqs.len()];
        for k in 0..total {
            let mut rem = k;
            let mut w = 1.0;
            for (pos, &a) in ch_axes.iter().enumerate().rev() {
                let i = rem % counts[pos];
                rem /= counts[pos];
                t[a] = axes[a].points[i];
                w *= weighted[a][i];
            }
            if w == 0.0 {
                continue;
            }
            let tau = ch.time_at(&t);
            let w = w * ch.factor(&t, tau);
            for (s, &nu) in acc.iter_mut().zip(freqs) {
                let (sn, cs) = (nu * tau).sin_cos();
                *s += C64::new(w * cs, -w * sn);
            }
        }
        table[off..off + freqs.len()].copy_from_slice(&acc);
    }
    let total = phases.combine(&table) * integrand.scale();
    Ok(integrand.component().take(total))
}

fn finish(
    integrand: &LcuIntegrand,
    method: Method,
    k_requested: usize,
    k_actual: usize,
    mode: ShotMode,
    seed: u64,
    estimate: f64,
    start: Instant,
) -> EstimateRecord {
    EstimateRecord::new(
        method,
        k_requested,
        k_actual,
        mode,
        seed,
        estimate,
        integrand.exact_target(),
        start.elapsed().as_secs_f64(),
    )
}

/// Monte Carlo: `K` inversion samples and their shot means, all drawn from the stream of `seed`.
pub fn estimate_mc(integrand: &LcuIntegrand, k: usize, mode: ShotMode, seed: u64) -> Result<EstimateRecord> {
    let start = Instant::now();
    let mut rng = rng_from_seed(seed);
    let nodes = mc_nodes(k, integrand.density(), &mut rng)?;
    let est = EvaluatedNodes::evaluate(integrand, &nodes)?.estimate(mode, &mut rng)?;
    Ok(finish(integrand, Method::Mc, k, k, mode, seed, est, start))
}

/// Quasi-Monte Carlo over Halton points; only the shots use the stream of `seed`.
pub fn estimate_qmc(integrand: &LcuIntegrand, k: usize, mode: ShotMode, seed: u64) -> Result<EstimateRecord> {
    let start = Instant::now();
    let mut rng = rng_from_seed(seed);
    let nodes = qmc_nodes(k, integrand.density())?;
    let est = EvaluatedNodes::evaluate(integrand, &nodes)?.estimate(mode, &mut rng)?;
    Ok(finish(integrand, Method::Qmc, k, k, mode, seed, est, start))
}

/// Grid rule over the truncated, renormalized density.
pub fn estimate_grid(
    integrand: &LcuIntegrand,
    k: usize,
    rule: GridRule,
    mode: ShotMode,
    seed: u64,
) -> Result<EstimateRecord> {
    let start = Instant::now();
    let nodes = grid_nodes(k, integrand.domain(), rule)?;
    let est = grid_estimate(integrand, &nodes, mode, seed)?;
    Ok(finish(integrand, rule.method(), k, nodes.len(), mode, seed, est, start))
}

/// Grid rule with explicit per-axis counts.
pub fn estimate_grid_with_counts(
    integrand: &LcuIntegrand,
    counts: &[usize],
    rule: GridRule,
    mode: ShotMode,
    seed: u64,
) -> Result<EstimateRecord> {
    let start = Instant::now();
    let nodes = grid_nodes_with_counts(counts, integrand.domain(), rule)?;
    let est = grid_estimate(integrand, &nodes, mode, seed)?;
    Ok(finish(integrand, rule.method(), nodes.len(), nodes.len(), mode, seed, est, start))
}

fn grid_estimate(integrand: &LcuIntegrand, nodes: &NodeSet, mode: ShotMode, seed: u64) -> Result<f64> {
    match mode {
        ShotMode::Exact => exact_grid_sum(integrand, nodes),
        ShotMode::Shots(_) => {
            let mut rng = rng_from_seed(seed);
            EvaluatedNodes::evaluate(integrand, nodes)?.estimate(mode, &mut rng)
        }
    }
}

/// Dispatches on `method`.
pub fn estimate(
    integrand: &LcuIntegrand,
    method: Method,
    k: usize,
    mode: ShotMode,
    seed: u64,
) -> Result<EstimateRecord> {
    match method {
        Method::Mc => estimate_mc(integrand, k, mode, seed),
        Method::Qmc => estimate_qmc(integrand, k, mode, seed),
        Method::Trapezoid => estimate_grid(integrand, k, GridRule::Trapezoid, mode, seed),
        Method::Simpson => estimate_grid(integrand, k, GridRule::Simpson, mode, seed),
    }
}

/// Variance and bias constants of the MC and trapezoid estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryBounds {
    /// `∫ f c² - ∫ f c² x²`: shot-noise constant of MC.
    pub c_mc_ht: f64,
    /// `∫ f c² x² - target²`: integration-noise constant of MC.
    pub c_mc_ni: f64,
    /// `2^d |V| ∫ f² c² (1 - x²)`.
    pub c_tr_ht: f64,
    /// `Σ_{j,j'} |V|/3 · max|∂_j ∂_j' (f c x)| · (b_j - a_j)(b_j' - a_j')`.
    pub c_tr_ni: f64,
    /// `∫ f` over the domain, as seen by the reference grid.
    pub density_mass: f64,
    pub reference_k: usize,
}

/// Reference points per axis used when none is given.
pub fn default_reference_k(dims: usize) -> usize {
    if dims <= 2 {
        401
    } else {
        41
    }
}

/// Evaluates the defining integrals on a trapezoid grid with `reference_k`
/// points per axis. Second derivatives use central differences on the same
/// grid. A grid that cannot resolve the integrand's oscillation is rejected.
pub fn theory_bounds(integrand: &LcuIntegrand, reference_k: usize) -> Result<TheoryBounds> {
    let d = integrand.dims();
    if reference_k < 3 {
        return Err(Error::InvalidParameter("reference grid needs at least 3 points per axis".into()));
    }
    let bounds = integrand.domain().bounds();
    for (axis, (&bw, &(a, b))) in integrand.axis_bandwidth().iter().zip(bounds).enumerate() {
        let spacing = (b - a) / (reference_k - 1) as f64;
        if bw * spacing >= PI {
            return Err(Error::ReferenceGridTooCoarse {
                axis,
                spacing,
                required: PI / bw,
                min_k: (bw * (b - a) / PI).ceil() as usize + 2,
            });
        }
    }
    let nodes = grid_nodes_with_counts(&vec![reference_k; d], integrand.domain(), GridRule::Trapezoid)?;
    let mut t = vec![0.0; d];
    let mut s = EvalScratch::default();
    let (mut mass, mut m2, mut m_cx2, mut m_tr) = (0.0, 0.0, 0.0, 0.0);
    let mut h = Vec::with_capacity(nodes.len());
    for k in 0..nodes.len() {
        let w = nodes.node_into(k, &mut t);
        let f = integrand.truncated_density_at(&t);
        let (c, x) = integrand.evaluate(&t, &mut s);
        mass += w * f;
        m2 += w * f * c * c;
        m_cx2 += w * f * c * c * x * x;
        m_tr += w * f * f * c * c * (1.0 - x * x);
        h.push(f * c * x);
    }
    let target = integrand.exact_target();
    let volume = integrand.domain().volume();

    let spacing: Vec<f64> = bounds.iter().map(|(a, b)| (b - a) / (reference_k - 1) as f64).collect();
    let stride: Vec<usize> = (0..d).map(|j| reference_k.pow((d - 1 - j) as u32)).collect();
    let mut c_tr_ni = 0.0;
    for j in 0..d {
        for jp in j..d {
            let mut worst = 0.0f64;
            let mut idx = vec![0usize; d];
            for k in 0..h.len() {
                let mut rem = k;
                for q in (0..d).rev() {
                    idx[q] = rem % reference_k;
                    rem /= reference_k;
                }
                let interior = |q: usize| idx[q] >= 1 && idx[q] + 1 < reference_k;
                let v = if j == jp {
                    if !interior(j) {
                        continue;
                    }
                    (h[k + stride[j]] - 2.0 * h[k] + h[k - stride[j]]) / (spacing[j] * spacing[j])
                } else {
                    if !interior(j) || !interior(jp) {
                        continue;
                    }
                    let (a, b) = (stride[j], stride[jp]);
                    (h[k + a + b] - h[k + a - b] - h[k - a + b] + h[k - a - b])
                        / (4.0 * spacing[j] * spacing[jp])
                };
                worst = worst.max(v.abs());
            }
            let widths = (bounds[j].1 - bounds[j].0) * (bounds[jp].1 - bounds[jp].0);
            let term = volume / 3.0 * worst * widths;
            c_tr_ni += if j == jp { term } else { 2.0 * term };
        }
    }
    Ok(TheoryBounds {
        c_mc_ht: m2 - m_cx2,
        c_mc_ni: m_cx2 - target * target,
        c_tr_ht: 2f64.powi(d as i32) * volume * m_tr,
        c_tr_ni,
        density_mass: mass,
        reference_k,
    })
}
