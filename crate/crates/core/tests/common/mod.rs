//! Independent reference implementations used by the integration tests.
//! Nothing here goes through the library's eigensolver or phase sums.

#![allow(dead_code)]

use lcu_core::operators::{CMatrix, C64};
use nalgebra::DVector;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli2(axis: char) -> CMatrix {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match axis {
        'I' => CMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        'X' => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        'Y' => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        'Z' => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => panic!("unknown axis {axis}"),
    }
}

/// Kronecker product with site 0 as the leftmost factor.
pub fn kron_string(n: usize, factors: &[(usize, char)]) -> CMatrix {
    let mut m = CMatrix::from_element(1, 1, c(1.0, 0.0));
    for site in 0..n {
        let axis = factors.iter().find(|(s, _)| *s == site).map(|f| f.1).unwrap_or('I');
        m = m.kronecker(&pauli2(axis));
    }
    m
}

pub fn heisenberg_kron(n: usize, j: f64) -> CMatrix {
    let dim = 1 << n;
    let mut h = CMatrix::zeros(dim, dim);
    for a in 0..n {
        let b = (a + 1) % n;
        for axis in ['X', 'Y', 'Z'] {
            h += kron_string(n, &[(a, axis), (b, axis)]) * c(j, 0.0);
        }
    }
    h
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Matrix exponential through nalgebra's Padé scaling-and-squaring.
pub fn expm(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

pub fn inverse(m: &CMatrix) -> CMatrix {
    m.clone().try_inverse().expect("invertible")
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Singlet `(|01> - |10>)/sqrt 2`, the two-site Heisenberg ground state.
pub fn singlet() -> DVector<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)])
}

pub fn projector(v: &DVector<C64>) -> CMatrix {
    v * v.adjoint()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Composite trapezoid of `g` on `[a, b]` with `n` points.
pub fn trapezoid_1d(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (n - 1) as f64;
    let mut s = 0.5 * (g(a) + g(b));
    for i in 1..n - 1 {
        s += g(a + i as f64 * h);
    }
    s * h
}

/// `∫_{[0,1]^d} Π_j cos(t_j) dt = sin(1)^d`.
pub fn cos_product_exact(d: usize) -> f64 {
    1f64.sin().powi(d as i32)
}

/// Weighted node sum of `Π_j cos(t_j)` over `nodes`.
pub fn cos_product_sum(nodes: &lcu_core::quadrature::NodeSet) -> f64 {
    let mut t = vec![0.0; nodes.dims()];
    (0..nodes.len())
        .map(|k| {
            let w = nodes.node_into(k, &mut t);
            w * t.iter().map(|x| x.cos()).product::<f64>()
        })
        .sum()
}
