//! Closed-form bounds on the integrand mass outside the truncation box.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::special::normal_sf;

/// Probability that a centered normal with `std` leaves `[-c_j, c_j]` on any axis.
pub fn gaussian_box_escape(std: f64, cutoffs: &[f64]) -> f64 {
    let log_inside: f64 = cutoffs.iter().map(|c| (-2.0 * normal_sf(c / std)).ln_1p()).sum();
    -log_inside.exp_m1()
}

/// `∫_{z_c}^∞ z exp(-z²/2 + a z) dz`.
fn shifted_rayleigh_tail(z_c: f64, a: f64) -> f64 {
    let u = z_c - a;
    (0.5 * a * a).exp()
        * ((-0.5 * u * u).exp() + a * (PI / 2.0).sqrt() * libm::erfc(u * FRAC_1_SQRT_2))
}

/// Bound for the resolvent representation: the `|z| > z_c` strip over `[0, y_c]`
/// plus the exact modulus of each spectral term beyond `y_c`.
///
/// `terms` holds `(frequency, |weight|)` with the phase `exp(-i y z frequency)`.
pub fn greens(terms: &[(f64, f64)], eta: f64, y_c: f64, z_c: f64) -> f64 {
    let l1: f64 = terms.iter().map(|(_, w)| w).sum();
    let strip = l1 * 2.0 * y_c / (2.0 * PI).sqrt() * shifted_rayleigh_tail(z_c, eta * y_c);
    let mut beyond = 0.0;
    for &(f, w) in terms {
        let kappa = f * f - eta * eta;
        if kappa <= 0.0 {
            return f64::INFINITY;
        }
        let b = (f * f + eta * eta).sqrt();
        beyond += w * b * (-0.5 * y_c * y_c * kappa).exp() / kappa;
    }
    strip + beyond
}

/// Error of one truncated inverse factor `∫_0^{L_o} ∫_{-L_e}^{L_e}` versus `-i/a`, for `|a| >= mu`.
fn inverse_factor(mu: f64, l_odd: f64, l_even: f64) -> f64 {
    l_odd * (2.0 / PI).sqrt() * (-0.5 * l_even * l_even).exp()
        + (-0.5 * l_odd * l_odd * mu * mu).exp() / mu
}

/// Bound for the two-factor inverse representation with weight mass `l1`.
pub fn linear_solver(l1: f64, mu: f64, cutoffs: &[f64; 4]) -> f64 {
    let d1 = inverse_factor(mu, cutoffs[0], cutoffs[1]);
    let d2 = inverse_factor(mu, cutoffs[2], cutoffs[3]);
    l1 * (d1 * (1.0 / mu + d2) + d2 / mu)
}
