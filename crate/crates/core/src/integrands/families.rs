//! Constructors for the microcanonical, ground-state, resolvent and
//! linear-solver representations.

use std::f64::consts::{PI, SQRT_2};

use super::{
    rayleigh_mass, tails, AxisLaw, Channel, Component, Domain, IntegrandParts, LcuIntegrand,
    PhaseSum, ProductDensity, TruncationSpec,
};
use crate::error::{Error, Result};
use crate::operators::{
    apply_function, pauli_matrix, trace_with, CMatrix, DensityState, HermitianOperator, PauliAxis,
    PauliTerm, C64,
};

fn n_qubits(dim: usize) -> Result<usize> {
    if dim.is_power_of_two() {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(Error::InvalidParameter(format!("dimension {dim} is not a power of two")))
    }
}

fn check_state(op: &HermitianOperator, rho: &DensityState) -> Result<()> {
    if rho.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: rho.dim() });
    }
    Ok(())
}

fn observable(o: &PauliTerm, n: usize) -> Result<CMatrix> {
    if !o.is_unitary() {
        return Err(Error::NonUnitaryObservable);
    }
    pauli_matrix(o, n)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Gaussian filter `exp(-(H - E)² τ²)` applied to `O` against `rho`, as a
/// one-dimensional Fourier integral over `t ∈ [-t_c, t_c]`.
pub fn make_microcanonical(
    h: &HermitianOperator,
    o: &PauliTerm,
    energy: f64,
    tau: f64,
    t_c: f64,
    rho: &DensityState,
) -> Result<LcuIntegrand> {
    positive("tau", tau)?;
    positive("t_c", t_c)?;
    check_state(h, rho)?;
    let n = n_qubits(h.dim())?;
    let om = observable(o, n)?;
    let v = h.eigenbasis();
    let m = v.adjoint() * rho.matrix() * &om * v;
    let weights: Vec<C64> = (0..h.dim()).map(|i| m[(i, i)]).collect();
    let levels: Vec<f64> = h.spectrum().iter().map(|l| l - energy).collect();
    let phases = PhaseSum::single(&levels, &weights);

    let filter = apply_function(h, |l| C64::new((-(l - energy).powi(2) * tau * tau).exp(), 0.0))?;
    let exact = trace_with(&(&om * filter), rho)?.re;

    let std = tau * SQRT_2;
    let sup = phases.weight_l1().min(1.0);
    let tail = 2.0 * sup * tails::gaussian_box_escape(std, &[t_c]);
    LcuIntegrand::from_parts(IntegrandParts {
        label: "microcanonical".into(),
        domain: Domain::new(vec![(-t_c, t_c)])?,
        density: ProductDensity::new(vec![AxisLaw::Gaussian { std }]),
        channels: vec![Channel::axis(0)],
        phases,
        scale: 1.0,
        component: Component::Re,
        exact_target: exact,
        truncation: TruncationSpec { cutoffs: vec![t_c], tail_bound: tail },
    })
}

/// Numerator `Tr(g O g rho)` and denominator `Tr(g² rho)` of the filtered
/// expectation with `g = exp(-τ² H²)`, both as two-dimensional integrals.
pub fn make_ground_state(
    h: &HermitianOperator,
    o: &PauliTerm,
    tau: f64,
    t_c: f64,
    rho: &DensityState,
) -> Result<(LcuIntegrand, LcuIntegrand)> {
    positive("tau", tau)?;
    positive("t_c", t_c)?;
    check_state(h, rho)?;
    let floor = -1e-9 * h.spectral_norm().max(1.0);
    if h.spectrum()[0] < floor {
        return Err(Error::InvalidParameter(format!(
            "Hamiltonian must be positive semidefinite, lowest eigenvalue {}",
            h.spectrum()[0]
        )));
    }
    let n = n_qubits(h.dim())?;
    let om = observable(o, n)?;
    let v = h.eigenbasis();
    let o_eig = v.adjoint() * &om * v;
    let rho_eig = v.adjoint() * rho.matrix() * v;
    let levels = h.spectrum();

    let filter = apply_function(h, |l| C64::new((-tau * tau * l * l).exp(), 0.0))?;
    let num_exact = trace_with(&(&filter * &om * &filter), rho)?.re;
    let den_exact = trace_with(&(&filter * &filter), rho)?.re;

    let std = tau * SQRT_2;
    let escape = tails::gaussian_box_escape(std, &[t_c, t_c]);
    let build = |label: &str, phases: PhaseSum, exact: f64| {
        let sup = phases.weight_l1().min(1.0);
        LcuIntegrand::from_parts(IntegrandParts {
            label: label.into(),
            domain: Domain::new(vec![(-t_c, t_c), (-t_c, t_c)])?,
            density: ProductDensity::new(vec![AxisLaw::Gaussian { std }; 2]),
            channels: vec![Channel::axis(0), Channel::axis(1)],
            phases,
            scale: 1.0,
            component: Component::Re,
            exact_target: exact,
            truncation: TruncationSpec { cutoffs: vec![t_c, t_c], tail_bound: 2.0 * sup * escape },
        })
    };
    let num_phases = PhaseSum::pair(levels, levels, |i, j| o_eig[(i, j)] * rho_eig[(j, i)]);
    let den_phases =
        PhaseSum::pair(levels, levels, |i, j| if i == j { rho_eig[(i, i)] } else { C64::new(0.0, 0.0) });
    Ok((
        build("ground_state_numerator", num_phases, num_exact)?,
        build("ground_state_denominator", den_phases, den_exact)?,
    ))
}

/// Real part of the resolvent element `<X_k (ω + E0 - H + iη)^{-1} X_l>` on a
/// pure state, as a two-dimensional integral over `(y, z) ∈ [0, y_c] × [-z_c, z_c]`.
///
/// The measured quantity is the imaginary part of
/// `Tr(X_k exp(-i y z (ω + E0 - H)) X_l rho)`; the damping `exp(η y z)` and the
/// sign of `z` are carried by the classical weight.
#[allow(clippy::too_many_arguments)]
pub fn make_greens_function(
    h: &HermitianOperator,
    e0: f64,
    eta: f64,
    omega: f64,
    k: usize,
    l: usize,
    y_c: f64,
    z_c: f64,
    rho: &DensityState,
) -> Result<LcuIntegrand> {
    positive("eta", eta)?;
    positive("y_c", y_c)?;
    positive("z_c", z_c)?;
    check_state(h, rho)?;
    if !rho.is_pure() {
        return Err(Error::InvalidState("resolvent element needs a pure state".into()));
    }
    let n = n_qubits(h.dim())?;
    let xk = pauli_matrix(&PauliTerm::single(k, PauliAxis::X), n)?;
    let xl = pauli_matrix(&PauliTerm::single(l, PauliAxis::X), n)?;
    let shift = omega + e0;

    let v = h.eigenbasis();
    let m = v.adjoint() * &xl * rho.matrix() * &xk * v;
    let weights: Vec<C64> = (0..h.dim()).map(|i| m[(i, i)]).collect();
    let levels: Vec<f64> = h.spectrum().iter().map(|lam| shift - lam).collect();
    let phases = PhaseSum::single(&levels, &weights);

    let dim = h.dim();
    let mut b = -h.matrix().clone();
    for i in 0..dim {
        b[(i, i)] += C64::new(shift, eta);
    }
    let rhs = &xl * rho.matrix();
    let sol = b.lu().solve(&rhs).ok_or(Error::NotInvertible(0.0))?;
    let exact = (&xk * sol).trace().re;

    let terms: Vec<(f64, f64)> = (0..phases.n_terms())
        .map(|t| {
            let (ix, w) = phases.term(t);
            (phases.freqs(0)[ix[0] as usize], w.norm())
        })
        .collect();
    let tail = tails::greens(&terms, eta, y_c, z_c);
    let z_mass = rayleigh_mass(z_c);
    LcuIntegrand::from_parts(IntegrandParts {
        label: "greens".into(),
        domain: Domain::new(vec![(0.0, y_c), (-z_c, z_c)])?,
        density: ProductDensity::new(vec![
            AxisLaw::Uniform { lo: 0.0, hi: y_c },
            AxisLaw::SignedRayleigh { cutoff: z_c },
        ]),
        channels: vec![Channel::product(0, 1, 1, eta)],
        phases,
        scale: -2.0 * z_mass * y_c / (2.0 * PI).sqrt(),
        component: Component::Im,
        exact_target: exact,
        truncation: TruncationSpec { cutoffs: vec![y_c, z_c], tail_bound: tail },
    })
}

/// `A / ‖A‖` and the factor `‖A‖` that was divided out.
pub fn rescale_to_unit_norm(a: &HermitianOperator) -> Result<(HermitianOperator, f64)> {
    let s = a.spectral_norm();
    if s == 0.0 {
        return Err(Error::NotInvertible(0.0));
    }
    Ok((a.scaled(1.0 / s)?, s))
}

/// Cutoffs `[L1, L2, L3, L4]` making each truncation term of order `eps` for
/// a spectrum bounded away from zero by `mu`.
pub fn linear_solver_cutoffs(mu: f64, eps: f64) -> Result<[f64; 4]> {
    positive("mu", mu)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let even = (2.0 * (1.0 / eps).ln()).sqrt();
    let odd = even / mu;
    Ok([odd, even, odd, even])
}

/// `Re Tr(A^{-1} O A^{-1} rho)` for `A` with spectrum in `[-1, -μ] ∪ [μ, 1]`,
/// as a four-dimensional integral over `[0,L1]×[-L2,L2]×[0,L3]×[-L4,L4]`.
pub fn make_linear_solver(
    a: &HermitianOperator,
    o: &PauliTerm,
    cutoffs: [f64; 4],
    rho: &DensityState,
) -> Result<LcuIntegrand> {
    for (i, c) in cutoffs.iter().enumerate() {
        positive(&format!("L{}", i + 1), *c)?;
    }
    check_state(a, rho)?;
    if a.spectral_norm() > 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "operator norm {} exceeds 1; rescale first",
            a.spectral_norm()
        )));
    }
    let mu = a.spectrum().iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    if mu < 1e-12 {
        return Err(Error::NotInvertible(mu));
    }
    let n = n_qubits(a.dim())?;
    let om = observable(o, n)?;
    let v = a.eigenbasis();
    let o_eig = v.adjoint() * &om * v;
    let rho_eig = v.adjoint() * rho.matrix() * v;
    let levels = a.spectrum();
    let phases = PhaseSum::pair(levels, levels, |i, j| o_eig[(i, j)] * rho_eig[(j, i)]);

    let inv = apply_function(a, |l| C64::new(1.0 / l, 0.0))?;
    let exact = trace_with(&(&inv * &om * &inv), rho)?.re;

    let [l1, l2, l3, l4] = cutoffs;
    let tail = tails::linear_solver(phases.weight_l1(), mu, &cutoffs);
    LcuIntegrand::from_parts(IntegrandParts {
        label: "linear_solver".into(),
        domain: Domain::new(vec![(0.0, l1), (-l2, l2), (0.0, l3), (-l4, l4)])?,
        density: ProductDensity::new(vec![
            AxisLaw::Uniform { lo: 0.0, hi: l1 },
            AxisLaw::SignedRayleigh { cutoff: l2 },
            AxisLaw::Uniform { lo: 0.0, hi: l3 },
            AxisLaw::SignedRayleigh { cutoff: l4 },
        ]),
        channels: vec![Channel::product(0, 1, 1, 0.0), Channel::product(2, 3, 3, 0.0)],
        phases,
        scale: -(2.0 * rayleigh_mass(l2) * rayleigh_mass(l4) / PI) * l1 * l3,
        component: Component::Re,
        exact_target: exact,
        truncation: TruncationSpec { cutoffs: cutoffs.to_vec(), tail_bound: tail },
    })
}
