//! Integral representations `F(A) = ∫_V f(t) c(t) U(t) dt` split into a
//! product density `f`, a real classical weight `c` and a unitary trace
//! `Tr(U(t) rho)` whose real or imaginary part is what a Hadamard test
//! measures.
//!
//! Every family evaluates its trace through a [`PhaseSum`]: the spectral
//! expansion `Σ w · Π_ch exp(-i ν_ch τ_ch(t))` where each channel owns a
//! disjoint group of axes and a time map (`t_a` or `t_a * t_b`).

mod families;
mod tails;

pub use families::{
    linear_solver_cutoffs, make_greens_function, make_ground_state, make_linear_solver,
    make_microcanonical, rescale_to_unit_norm,
};

use crate::error::{Error, Result};
use crate::operators::C64;

/// Relative tolerance for merging eigenvalues into one frequency.
pub const CLUSTER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidParameter("domain needs at least one axis".into()));
        }
        for &(a, b) in &bounds {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidParameter(format!("invalid axis bounds ({a}, {b})")));
            }
        }
        Ok(Self { bounds })
    }

    pub fn unit_cube(dims: usize) -> Self {
        Self { bounds: vec![(0.0, 1.0); dims] }
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, t: &[f64]) -> bool {
        t.iter().zip(&self.bounds).all(|(x, (a, b))| *x >= *a && *x <= *b)
    }
}

/// One-dimensional sampling law with a closed-form or high-accuracy quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisLaw {
    /// Centered normal with the given standard deviation.
    Gaussian { std: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Density `|t| e^{-t²/2} / (2 Z(L))` on `[-L, L]`, `Z(L) = 1 - e^{-L²/2}`.
    SignedRayleigh { cutoff: f64 },
}

/// `1 - e^{-L²/2}`.
pub fn rayleigh_mass(cutoff: f64) -> f64 {
    -(-0.5 * cutoff * cutoff).exp_m1()
}

impl AxisLaw {
    pub fn pdf(&self, t: f64) -> f64 {
        match *self {
            AxisLaw::Gaussian { std } => crate::special::normal_pdf(t / std) / std,
            AxisLaw::Uniform { lo, hi } => {
                if t >= lo && t <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            AxisLaw::SignedRayleigh { cutoff } => {
                if t.abs() <= cutoff {
                    t.abs() * (-0.5 * t * t).exp() / (2.0 * rayleigh_mass(cutoff))
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            AxisLaw::Gaussian { std } => crate::special::normal_cdf(t / std),
            AxisLaw::Uniform { lo, hi } => ((t - lo) / (hi - lo)).clamp(0.0, 1.0),
            AxisLaw::SignedRayleigh { cutoff } => {
                if t <= -cutoff {
                    0.0
                } else if t >= cutoff {
                    1.0
                } else {
                    let half = -(-0.5 * t * t).exp_m1() / (2.0 * rayleigh_mass(cutoff));
                    if t < 0.0 {
                        0.5 - half
                    } else {
                        0.5 + half
                    }
                }
            }
        }
    }

    /// Probability mass on `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        match *self {
            AxisLaw::Gaussian { std } if a == -b => {
                1.0 - 2.0 * crate::special::normal_sf(b / std)
            }
            _ => self.cdf(b) - self.cdf(a),
        }
    }

    /// Inverse CDF on the open unit interval.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::UniformOutOfRange(u));
        }
        Ok(match *self {
            AxisLaw::Gaussian { std } => std * crate::special::normal_quantile(u),
            AxisLaw::Uniform { lo, hi } => lo + u * (hi - lo),
            AxisLaw::SignedRayleigh { cutoff } => {
                let v = 2.0 * u - 1.0;
                let r = (-2.0 * libm::log1p(-v.abs() * rayleigh_mass(cutoff))).sqrt();
                if v < 0.0 {
                    -r
                } else {
                    r
                }
            }
        })
    }
}

/// Product of independent axis laws.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDensity {
    axes: Vec<AxisLaw>,
}

impl ProductDensity {
    pub fn new(axes: Vec<AxisLaw>) -> Self {
        Self { axes }
    }

    pub fn axes(&self) -> &[AxisLaw] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn pdf(&self, t: &[f64]) -> f64 {
        self.axes.iter().zip(t).map(|(law, &x)| law.pdf(x)).product()
    }

    /// Density renormalized to unit mass over `domain`.
    pub fn truncated_pdf(&self, t: &[f64], domain: &Domain) -> f64 {
        self.axes
            .iter()
            .zip(t)
            .zip(domain.bounds())
            .map(|((law, &x), &(a, b))| law.pdf(x) / law.mass(a, b))
            .product()
    }

    pub fn quantile_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        for ((law, &ui), o) in self.axes.iter().zip(u).zip(out.iter_mut()) {
            *o = law.quantile(ui)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Re,
    Im,
}

impl Component {
    pub fn take(self, z: C64) -> f64 {
        match self {
            Component::Re => z.re,
            Component::Im => z.im,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelTime {
    Axis(usize),
    Product(usize, usize),
}

/// A group of axes sharing one evolution time `τ_ch(t)`.
///
/// The channel also carries its share of the classical weight:
/// `sign(t[sign_axis]) * exp(growth * τ_ch)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub time: ChannelTime,
    pub sign_axis: Option<usize>,
    pub growth: f64,
}

impl Channel {
    pub fn axis(a: usize) -> Self {
        Self { time: ChannelTime::Axis(a), sign_axis: None, growth: 0.0 }
    }

    pub fn product(a: usize, b: usize, sign_axis: usize, growth: f64) -> Self {
        Self { time: ChannelTime::Product(a, b), sign_axis: Some(sign_axis), growth }
    }

    pub fn axes(&self) -> Vec<usize> {
        match self.time {
            ChannelTime::Axis(a) => vec![a],
            ChannelTime::Product(a, b) => vec![a, b],
        }
    }

    #[inline]
    pub fn time_at(&self, t: &[f64]) -> f64 {
        match self.time {
            ChannelTime::Axis(a) => t[a],
            ChannelTime::Product(a, b) => t[a] * t[b],
        }
    }

    #[inline]
    pub fn factor(&self, t: &[f64], tau: f64) -> f64 {
        let s = match self.sign_axis {
            Some(k) => sign(t[k]),
            None => 1.0,
        };
        if self.growth == 0.0 {
            s
        } else {
            s * (self.growth * tau).exp()
        }
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `Σ_terms w · Π_ch exp(-i ν[ch][idx] τ_ch)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSum {
    freqs: Vec<Vec<f64>>,
    offsets: Vec<usize>,
    idx: Vec<u32>,
    weights: Vec<C64>,
}

/// Groups sorted levels whose spread stays within `CLUSTER_TOL * max(1, max|level|)`.
/// Returns (cluster representative per cluster, cluster id per input index).
fn cluster_levels(levels: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let scale = levels.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    let tol = CLUSTER_TOL * scale;
    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]));
    let mut reps = Vec::new();
    let mut id = vec![0usize; levels.len()];
    let mut start = 0;
    while start < order.len() {
        let first = levels[order[start]];
        let mut end = start + 1;
        while end < order.len() && levels[order[end]] - first <= tol {
            end += 1;
        }
        let mean = order[start..end].iter().map(|&i| levels[i]).sum::<f64>() / (end - start) as f64;
        for &i in &order[start..end] {
            id[i] = reps.len();
        }
        reps.push(mean);
        start = end;
    }
    (reps, id)
}

/// Weights at or below this modulus are dropped.
const WEIGHT_FLOOR: f64 = 1e-15;

impl PhaseSum {
    /// General constructor: `terms` holds one frequency index per channel.
    /// Frequencies no term refers to are dropped.
    pub fn new(freqs: Vec<Vec<f64>>, terms: Vec<(Vec<usize>, C64)>) -> Result<Self> {
        let n_ch = freqs.len();
        if n_ch == 0 {
            return Err(Error::InvalidParameter("phase sum needs a channel".into()));
        }
        for (ix, _) in &terms {
            if ix.len() != n_ch || ix.iter().zip(&freqs).any(|(&i, f)| i >= f.len()) {
                return Err(Error::InvalidParameter("phase term index out of range".into()));
            }
        }
        let mut remap: Vec<Vec<Option<u32>>> = freqs.iter().map(|f| vec![None; f.len()]).collect();
        for (ix, _) in &terms {
            for (ch, &i) in ix.iter().enumerate() {
                remap[ch][i] = Some(0);
            }
        }
        let mut kept = Vec::with_capacity(n_ch);
        for (ch, f) in freqs.iter().enumerate() {
            let mut out = Vec::new();
            for (i, &nu) in f.iter().enumerate() {
                if remap[ch][i].is_some() {
                    remap[ch][i] = Some(out.len() as u32);
                    out.push(nu);
                }
            }
            kept.push(out);
        }
        let mut offsets = Vec::with_capacity(n_ch);
        let mut acc = 0;
        for f in &kept {
            offsets.push(acc);
            acc += f.len();
        }
        let mut idx = Vec::with_capacity(terms.len() * n_ch);
        let mut weights = Vec::with_capacity(terms.len());
        for (ix, w) in terms {
            idx.extend(ix.iter().enumerate().map(|(ch, &i)| remap[ch][i].expect("marked above")));
            weights.push(w);
        }
        Ok(Self { freqs: kept, offsets, idx, weights })
    }

    /// One channel: `Σ_i w_i exp(-i ν_i τ)` with degenerate `ν_i` merged.
    pub fn single(levels: &[f64], weights: &[C64]) -> Self {
        let (reps, id) = cluster_levels(levels);
        let mut merged = vec![C64::new(0.0, 0.0); reps.len()];
        for (i, w) in weights.iter().enumerate() {
            merged[id[i]] += w;
        }
        let terms = merged
            .into_iter()
            .enumerate()
            .filter(|(_, w)| w.norm() > WEIGHT_FLOOR)
            .map(|(a, w)| (vec![a], w))
            .collect();
        Self::new(vec![reps], terms).expect("indices in range")
    }

    /// Two channels: `Σ_ij W_ij exp(-i ν_i τ_0) exp(-i μ_j τ_1)`.
    pub fn pair(levels_a: &[f64], levels_b: &[f64], w: impl Fn(usize, usize) -> C64) -> Self {
        let (reps_a, id_a) = cluster_levels(levels_a);
        let (reps_b, id_b) = cluster_levels(levels_b);
        let nb = reps_b.len();
        let mut merged = vec![C64::new(0.0, 0.0); reps_a.len() * nb];
        for i in 0..levels_a.len() {
            for j in 0..levels_b.len() {
                merged[id_a[i] * nb + id_b[j]] += w(i, j);
            }
        }
        let terms = merged
            .into_iter()
            .enumerate()
            .filter(|(_, w)| w.norm() > WEIGHT_FLOOR)
            .map(|(k, w)| (vec![k / nb, k % nb], w))
            .collect();
        Self::new(vec![reps_a, reps_b], terms).expect("indices in range")
    }

    pub fn n_channels(&self) -> usize {
        self.freqs.len()
    }

    pub fn freqs(&self, ch: usize) -> &[f64] {
        &self.freqs[ch]
    }

    pub fn n_terms(&self) -> usize {
        self.weights.len()
    }

    /// Term `k` as (frequency index per channel, weight).
    pub fn term(&self, k: usize) -> (&[u32], C64) {
        let n = self.n_channels();
        (&self.idx[k * n..(k + 1) * n], self.weights[k])
    }

    /// `Σ |w|`, an upper bound on the modulus of the sum.
    pub fn weight_l1(&self) -> f64 {
        self.weights.iter().map(|w| w.norm()).sum()
    }

    pub fn scratch_len(&self) -> usize {
        self.freqs.iter().map(Vec::len).sum()
    }

    /// Evaluates at channel times `taus`; `scratch` is resized as needed.
    #[inline]
    pub fn eval(&self, taus: &[f64], scratch: &mut Vec<C64>) -> C64 {
        scratch.resize(self.scratch_len(), C64::new(0.0, 0.0));
        for (ch, f) in self.freqs.iter().enumerate() {
            let tau = taus[ch];
            let off = self.offsets[ch];
            for (a, &nu) in f.iter().enumerate() {
                let (s, c) = (nu * tau).sin_cos();
                scratch[off + a] = C64::new(c, -s);
            }
        }
        self.combine(scratch)
    }

    /// `Σ_terms w · Π_ch table[offset_ch + idx]` for precomputed per-frequency values.
    #[inline]
    pub fn combine(&self, table: &[C64]) -> C64 {
        let n = self.n_channels();
        let mut acc = C64::new(0.0, 0.0);
        if n == 1 {
            for (k, w) in self.weights.iter().enumerate() {
                acc += w * table[self.idx[k] as usize];
            }
        } else {
            for (k, w) in self.weights.iter().enumerate() {
                let mut p = *w;
                for ch in 0..n {
                    p *= table[self.offsets[ch] + self.idx[k * n + ch] as usize];
                }
                acc += p;
            }
        }
        acc
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

/// Cutoffs and an upper estimate of the error from truncating the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationSpec {
    pub cutoffs: Vec<f64>,
    pub tail_bound: f64,
}

/// Scratch space for repeated evaluations on one thread.
#[derive(Debug, Default, Clone)]
pub struct EvalScratch {
    phases: Vec<C64>,
    taus: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LcuIntegrand {
    label: String,
    domain: Domain,
    density: ProductDensity,
    channels: Vec<Channel>,
    phases: PhaseSum,
    scale: f64,
    component: Component,
    exact_target: f64,
    truncation: TruncationSpec,
}

pub struct IntegrandParts {
    pub label: String,
    pub domain: Domain,
    pub density: ProductDensity,
    pub channels: Vec<Channel>,
    pub phases: PhaseSum,
    /// Constant factor of the classical weight.
    pub scale: f64,
    pub component: Component,
    pub exact_target: f64,
    pub truncation: TruncationSpec,
}

impl LcuIntegrand {
    pub fn from_parts(p: IntegrandParts) -> Result<Self> {
        let d = p.domain.dims();
        if p.density.dims() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.density.dims() });
        }
        if p.phases.n_channels() != p.channels.len() {
            return Err(Error::InvalidParameter("one phase channel per integrand channel".into()));
        }
        let mut seen = vec![0usize; d];
        for ch in &p.channels {
            for a in ch.axes() {
                if a >= d {
                    return Err(Error::InvalidParameter(format!("channel axis {a} >= {d}")));
                }
                seen[a] += 1;
            }
            if let Some(s) = ch.sign_axis {
                if !ch.axes().contains(&s) {
                    return Err(Error::InvalidParameter("sign axis outside its channel".into()));
                }
            }
        }
        if seen.iter().any(|&c| c != 1) {
            return Err(Error::InvalidParameter("each axis must belong to exactly one channel".into()));
        }
        if !p.scale.is_finite() || !p.exact_target.is_finite() {
            return Err(Error::InvalidParameter("non-finite scale or target".into()));
        }
        Ok(Self {
            label: p.label,
            domain: p.domain,
            density: p.density,
            channels: p.channels,
            phases: p.phases,
            scale: p.scale,
            component: p.component,
            exact_target: p.exact_target,
            truncation: p.truncation,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn density(&self) -> &ProductDensity {
        &self.density
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn phases(&self) -> &PhaseSum {
        &self.phases
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn component(&self) -> Component {
        self.component
    }

    pub fn exact_target(&self) -> f64 {
        self.exact_target
    }

    pub fn truncation(&self) -> &TruncationSpec {
        &self.truncation
    }

    /// Untruncated density `f(t)`.
    pub fn density_at(&self, t: &[f64]) -> f64 {
        self.density.pdf(t)
    }

    /// Density renormalized over the domain, used by grid rules.
    pub fn truncated_density_at(&self, t: &[f64]) -> f64 {
        self.density.truncated_pdf(t, &self.domain)
    }

    /// `Tr(U(t) rho)`.
    pub fn trace_part(&self, t: &[f64]) -> C64 {
        let mut s = EvalScratch::default();
        self.trace_part_with(t, &mut s)
    }

    pub fn trace_part_with(&self, t: &[f64], s: &mut EvalScratch) -> C64 {
        s.taus.clear();
        s.taus.extend(self.channels.iter().map(|ch| ch.time_at(t)));
        self.phases.eval(&s.taus, &mut s.phases)
    }

    /// Classical weight `c(t)`.
    pub fn scalar_weight(&self, t: &[f64]) -> f64 {
        self.channels
            .iter()
            .fold(self.scale, |acc, ch| acc * ch.factor(t, ch.time_at(t)))
    }

    /// `(c(t), x(t))` with `x` the measured component of the trace.
    #[inline]
    pub fn evaluate(&self, t: &[f64], s: &mut EvalScratch) -> (f64, f64) {
        s.taus.clear();
        let mut c = self.scale;
        for ch in &self.channels {
            let tau = ch.time_at(t);
            c *= ch.factor(t, tau);
            s.taus.push(tau);
        }
        let z = self.phases.eval(&s.taus, &mut s.phases);
        (c, self.component.take(z))
    }

    /// Upper bound on the angular frequency of the integrand along each axis over the domain.
    pub fn axis_bandwidth(&self) -> Vec<f64> {
        let mut bw = vec![0.0; self.dims()];
        for (k, ch) in self.channels.iter().enumerate() {
            let top = self.phases.freqs(k).iter().fold(0.0f64, |m, f| m.max(f.abs()));
            let reach = |a: usize| {
                let (lo, hi) = self.domain.bounds()[a];
                lo.abs().max(hi.abs())
            };
            match ch.time {
                ChannelTime::Axis(a) => bw[a] = top,
                ChannelTime::Product(a, b) => {
                    bw[a] = top * reach(b);
                    bw[b] = top * reach(a);
                }
            }
        }
        bw
    }
}

/// Computable upper estimate of the error from truncating to the domain.
pub fn truncation_tail_bound(integrand: &LcuIntegrand) -> f64 {
    integrand.truncation().tail_bound
}
