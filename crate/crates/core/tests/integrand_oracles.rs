mod common;

use std::f64::consts::PI;

use common::*;
use lcu_core::integrands::{
    linear_solver_cutoffs, make_greens_function, make_ground_state, make_linear_solver,
    make_microcanonical, rescale_to_unit_norm, truncation_tail_bound, LcuIntegrand,
};
use lcu_core::models::{build_heisenberg, ground_state, maximally_mixed, HeisenbergSpec};
use lcu_core::operators::{CMatrix, DensityState, HermitianOperator, PauliTerm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain(n: usize, offset: f64) -> HermitianOperator {
    build_heisenberg(&HeisenbergSpec { n_sites: n, coupling: 1.0, offset }).unwrap()
}

fn zz() -> PauliTerm {
    "Z0 Z1".parse().unwrap()
}

fn as_c(m: &CMatrix) -> CMatrix {
    m.clone()
}

fn solver_operator() -> HermitianOperator {
    let terms: Vec<PauliTerm> =
        ["1.0 I", "0.3 Z0", "0.2 X1", "0.1 Z0 Z1"].iter().map(|t| t.parse().unwrap()).collect();
    let a = HermitianOperator::from_pauli_sum(&terms, 2).unwrap();
    rescale_to_unit_norm(&a).unwrap().0
}

fn random_node(rng: &mut ChaCha8Rng, integrand: &LcuIntegrand) -> Vec<f64> {
    integrand.domain().bounds().iter().map(|&(a, b)| rng.random_range(a..b)).collect()
}

#[test]
fn microcanonical_target_and_trace_match_dense_oracle() {
    let h = chain(2, 0.0);
    let rho = maximally_mixed(2).unwrap();
    let (tau, e) = (2.0, -6.0);
    let t_c = 2.0 * tau * (1e8f64).ln().sqrt();
    let integ = make_microcanonical(&h, &zz(), e, tau, t_c, &rho).unwrap();
    let hm = heisenberg_kron(2, 1.0);
    let o = kron_string(2, &[(0, 'Z'), (1, 'Z')]);
    let shifted = &hm - identity(4) * c(e, 0.0);
    let filter = expm(&(&shifted * &shifted * c(-tau * tau, 0.0)));
    let oracle = trace(&(&o * filter * rho.matrix())).re;
    assert!((integ.exact_target() - oracle).abs() < 1e-12, "{} vs {oracle}", integ.exact_target());
    assert!(integ.trace_part(&[0.0]).norm() < 1e-15);
    let f0 = 1.0 / (2.0 * tau * PI.sqrt());
    assert!((integ.density_at(&[0.0]) - f0).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let t = rng.random_range(-t_c..t_c);
        let u = expm(&(&shifted * c(0.0, -t)));
        let want = trace(&(&o * u * rho.matrix()));
        assert!((integ.trace_part(&[t]) - want).norm() < 1e-11);
        assert_eq!(integ.scalar_weight(&[t]), 1.0);
    }
    assert!(truncation_tail_bound(&integ) <= 10.0 * 1e-8);
}

#[test]
fn ground_state_targets_match_dense_oracle() {
    let h = chain(2, 6.0);
    let rho = maximally_mixed(2).unwrap();
    for tau in [0.3, 1.0, 8.0] {
        let (num, den) = make_ground_state(&h, &zz(), tau, 100.0, &rho).unwrap();
        let hm = heisenberg_kron(2, 1.0) + identity(4) * c(6.0, 0.0);
        let g = expm(&(&hm * &hm * c(-tau * tau, 0.0)));
        let o = kron_string(2, &[(0, 'Z'), (1, 'Z')]);
        let want_num = trace(&(&g * &o * &g * rho.matrix())).re;
        let want_den = trace(&(&g * &g * rho.matrix())).re;
        assert!((num.exact_target() - want_num).abs() < 1e-12);
        assert!((den.exact_target() - want_den).abs() < 1e-12);
    }
    let (num, den) = make_ground_state(&h, &zz(), 8.0, 100.0, &rho).unwrap();
    let ratio = num.exact_target() / den.exact_target();
    assert!((ratio + 1.0).abs() <= 1e-8);
    assert!(num.trace_part(&[0.0, 0.0]).norm() < 1e-15);
    assert!(truncation_tail_bound(&num) < 1e-16);
}

#[test]
fn ground_state_trace_matches_dense_evolution() {
    let h = chain(2, 6.0);
    let rho = maximally_mixed(2).unwrap();
    let (num, den) = make_ground_state(&h, &zz(), 1.0, 10.0, &rho).unwrap();
    let hm = as_c(h.matrix());
    let o = kron_string(2, &[(0, 'Z'), (1, 'Z')]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let t = random_node(&mut rng, &num);
        let a = expm(&(&hm * c(0.0, -t[0])));
        let b = expm(&(&hm * c(0.0, -t[1])));
        let want = trace(&(&a * &o * &b * rho.matrix()));
        assert!((num.trace_part(&t) - want).norm() < 1e-11);
        let want_den = trace(&(&a * &b * rho.matrix()));
        assert!((den.trace_part(&t) - want_den).norm() < 1e-11);
    }
}

#[test]
fn ground_state_filter_rejects_indefinite_hamiltonian() {
    let h = chain(2, 0.0);
    let rho = maximally_mixed(2).unwrap();
    assert!(make_ground_state(&h, &zz(), 1.0, 10.0, &rho).is_err());
    let h = chain(2, 6.0);
    assert!(make_ground_state(&h, &"2 Z0".parse().unwrap(), 1.0, 10.0, &rho).is_err());
    assert!(make_ground_state(&h, &zz(), 0.0, 10.0, &rho).is_err());
}

fn greens_two_site() -> (LcuIntegrand, f64, DensityState) {
    let h = chain(2, 0.0);
    let (e0, rho) = ground_state(&h).unwrap();
    let g = make_greens_function(&h, e0, 0.01, e0, 0, 0, 8.0, 8.0, &rho).unwrap();
    (g, e0, rho)
}

#[test]
fn greens_target_matches_dense_inverse() {
    let (g, e0, _) = greens_two_site();
    let s = singlet();
    let hm = heisenberg_kron(2, 1.0);
    let x0 = kron_string(2, &[(0, 'X')]);
    let b = identity(4) * c(2.0 * e0, 0.01) - hm;
    let want = (s.adjoint() * &x0 * inverse(&b) * &x0 * &s)[(0, 0)].re;
    assert!((g.exact_target() - want).abs() < 1e-10, "{} vs {want}", g.exact_target());
    assert!(truncation_tail_bound(&g) < 1e-9);
}

#[test]
fn greens_density_is_uniform_times_signed_rayleigh() {
    let (g, _, _) = greens_two_site();
    let z_mass = 1.0 - (-32.0f64).exp();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let t = random_node(&mut rng, &g);
        let want = t[1].abs() * (-0.5 * t[1] * t[1]).exp() / (2.0 * 8.0 * z_mass);
        assert!((g.truncated_density_at(&t) - want).abs() < 1e-14);
    }
    let row = |y: f64| trapezoid_1d(|z| g.truncated_density_at(&[y, z]), -8.0, 8.0, 40001);
    let mass = trapezoid_1d(row, 0.0, 8.0, 3);
    assert!((mass - 1.0).abs() < 1e-6);
}

/// The measured imaginary part times the classical weight equals the real
/// part of the resolvent integrand `+i K sign(z) e^{ηyz} Tr(X e^{-iyz(2E0-H)} X ρ)`.
#[test]
fn greens_scalar_identity_pointwise() {
    let (g, e0, rho) = greens_two_site();
    let hm = heisenberg_kron(2, 1.0);
    let x0 = kron_string(2, &[(0, 'X')]);
    let shift = identity(4) * c(2.0 * e0, 0.0) - hm;
    let z_mass = 1.0 - (-32.0f64).exp();
    let k = 2.0 * z_mass * 8.0 / (2.0 * PI).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let t = random_node(&mut rng, &g);
        let (y, z) = (t[0], t[1]);
        let u = expm(&(&shift * c(0.0, -y * z)));
        let tr = trace(&(&x0 * u * &x0 * rho.matrix()));
        let direct = (c(0.0, 1.0) * k * z.signum() * (0.01 * y * z).exp() * tr).re;
        let f = g.truncated_density_at(&t);
        let lib = f * g.scalar_weight(&t) * g.trace_part(&t).im;
        let scale = f * k * (0.01 * y * z).exp();
        assert!((lib - f * direct).abs() <= 1e-12 * scale.max(1e-300), "t={t:?}");
        assert!(g.trace_part(&t).norm() <= 1.0 + 1e-10);
    }
}

#[test]
fn greens_requires_pure_state() {
    let h = chain(2, 0.0);
    let rho = maximally_mixed(2).unwrap();
    assert!(make_greens_function(&h, -6.0, 0.01, -6.0, 0, 0, 8.0, 8.0, &rho).is_err());
    let (_, psi) = ground_state(&h).unwrap();
    assert!(make_greens_function(&h, -6.0, 0.0, -6.0, 0, 0, 8.0, 8.0, &psi).is_err());
}

#[test]
fn linear_solver_target_matches_dense_inverse() {
    let a = solver_operator();
    let mu = a.spectrum().iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let rho = maximally_mixed(2).unwrap();
    let cut = linear_solver_cutoffs(mu, 1e-6).unwrap();
    let integ = make_linear_solver(&a, &"Z0".parse().unwrap(), cut, &rho).unwrap();
    let inv = inverse(&as_c(a.matrix()));
    let o = kron_string(2, &[(0, 'Z')]);
    let want = trace(&(&inv * &o * &inv * rho.matrix())).re;
    assert!((integ.exact_target() - want).abs() < 1e-12);
    assert_eq!(integ.truncated_density_at(&[0.3, 0.0, 0.2, 0.5]), 0.0);
    assert_eq!(integ.truncated_density_at(&[0.3, 0.4, 0.2, 0.0]), 0.0);

    let am = as_c(a.matrix());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let t = random_node(&mut rng, &integ);
        let u1 = expm(&(&am * c(0.0, -t[0] * t[1])));
        let u2 = expm(&(&am * c(0.0, -t[2] * t[3])));
        let want = trace(&(&u1 * &o * &u2 * rho.matrix()));
        assert!((integ.trace_part(&t) - want).norm() < 1e-10);
        let z2 = 1.0 - (-0.5 * cut[1] * cut[1]).exp();
        let z4 = 1.0 - (-0.5 * cut[3] * cut[3]).exp();
        let c_want = -(2.0 * z2 * z4 / PI) * (t[1] * t[3]).signum() * cut[0] * cut[2];
        assert!((integ.scalar_weight(&t) - c_want).abs() < 1e-12 * c_want.abs());
    }
}

#[test]
fn linear_solver_identity_operator() {
    let a = HermitianOperator::new(identity(2)).unwrap();
    let rho = maximally_mixed(1).unwrap();
    let integ = make_linear_solver(&a, &"X0".parse().unwrap(), [5.0, 5.0, 5.0, 5.0], &rho).unwrap();
    assert_eq!(integ.exact_target(), 0.0);
    let unscaled = HermitianOperator::new(identity(2) * c(2.0, 0.0)).unwrap();
    assert!(make_linear_solver(&unscaled, &"X0".parse().unwrap(), [5.0; 4], &rho).is_err());
}

#[test]
fn trace_part_is_bounded_on_random_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h6 = chain(6, 0.0);
    let e6 = h6.spectrum()[0];
    let (_, psi6) = ground_state(&h6).unwrap();
    let mixed6 = maximally_mixed(6).unwrap();
    let h6s = chain(6, -e6);
    let rho2 = maximally_mixed(2).unwrap();
    let (num, den) = make_ground_state(&h6s, &zz(), 8.0, 100.0, &mixed6).unwrap();
    let families = vec![
        make_microcanonical(&chain(2, 0.0), &zz(), -6.0, 2.0, 20.0, &rho2).unwrap(),
        num,
        den,
        make_greens_function(&h6s, 0.0, 0.01, 0.0, 0, 0, 8.0, 8.0, &psi6).unwrap(),
        greens_two_site().0,
        make_linear_solver(&solver_operator(), &"Z0".parse().unwrap(), [30.0, 5.0, 30.0, 5.0], &rho2).unwrap(),
    ];
    for f in &families {
        for _ in 0..10_000 {
            let t = random_node(&mut rng, f);
            assert!(f.trace_part(&t).norm() <= 1.0 + 1e-10, "{}", f.label());
        }
    }
}

#[test]
fn gaussian_densities_integrate_to_one_over_the_box() {
    let h = chain(2, 6.0);
    let rho = maximally_mixed(2).unwrap();
    let (num, _) = make_ground_state(&h, &zz(), 8.0, 100.0, &rho).unwrap();
    let std = 8.0 * 2f64.sqrt();
    let line = |y: f64| trapezoid_1d(|x| num.density_at(&[x, y]), -100.0, 100.0, 4001);
    let mass = trapezoid_1d(line, -100.0, 100.0, 4001);
    assert!((mass - 1.0).abs() < 1e-6);
    for t in [[0.0, 0.0], [3.0, -7.0], [50.0, 20.0]] {
        let g = |x: f64| (-x * x / (2.0 * std * std)).exp() / (std * (2.0 * PI).sqrt());
        assert!((num.density_at(&t) - g(t[0]) * g(t[1])).abs() < 1e-18);
    }
}

#[test]
fn case_two_tail_bound_is_below_threshold() {
    let h = chain(6, 0.0);
    let e0 = h.spectrum()[0];
    let hs = chain(6, -e0);
    let (_, psi) = ground_state(&hs).unwrap();
    let g = make_greens_function(&hs, 0.0, 0.01, 0.0, 0, 0, 8.0, 8.0, &psi).unwrap();
    let tail = truncation_tail_bound(&g);
    assert!(tail >= 0.0 && tail < 1e-9, "{tail}");
}

#[test]
fn gaussian_tail_bound_matches_closed_form() {
    let h = chain(2, 6.0);
    let rho = maximally_mixed(2).unwrap();
    let integ = make_microcanonical(&h, &zz(), 0.0, 1.5, 6.0, &rho).unwrap();
    let closed = libm::erfc(6.0 / (2.0 * 1.5));
    let sup = 1.0;
    assert!(truncation_tail_bound(&integ) <= 2.0 * sup * closed * (1.0 + 1e-12));
    assert!(truncation_tail_bound(&integ) >= 0.0);
}
