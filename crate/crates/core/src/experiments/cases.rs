//! Builds the integrands of a configured case.

use crate::error::{Error, Result};
use crate::integrands::{
    linear_solver_cutoffs, make_greens_function, make_ground_state, make_linear_solver,
    make_microcanonical, rescale_to_unit_norm, LcuIntegrand,
};
use crate::models::{build_heisenberg, ground_state, maximally_mixed, HeisenbergSpec};
use crate::operators::{HermitianOperator, PauliTerm};

use super::config::{CaseKind, ExperimentConfig, GroundTarget, ModelConfig, OffsetKeyword, OffsetRule};

/// Integrands estimated by a sweep. With a denominator, each row reports the
/// ratio of two independently seeded runs.
#[derive(Debug, Clone)]
pub struct CaseIntegrands {
    pub primary: LcuIntegrand,
    pub denominator: Option<LcuIntegrand>,
}

/// Chain Hamiltonian with the configured identity offset.
pub fn hamiltonian(model: &ModelConfig) -> Result<HermitianOperator> {
    let bare = HeisenbergSpec { n_sites: model.n_sites, coupling: model.coupling, offset: 0.0 };
    let offset = match model.offset {
        OffsetRule::Keyword(OffsetKeyword::None) => return build_heisenberg(&bare),
        OffsetRule::Keyword(OffsetKeyword::Ground) => -build_heisenberg(&bare)?.spectrum()[0],
        OffsetRule::Value(v) => v,
    };
    build_heisenberg(&HeisenbergSpec { offset, ..bare })
}

fn parse_term(s: &str) -> Result<PauliTerm> {
    s.parse().map_err(|e: Error| Error::Config(format!("`{s}`: {e}")))
}

pub fn build_case(config: &ExperimentConfig) -> Result<CaseIntegrands> {
    let missing = |s: &str| Error::Config(format!("missing [{s}] section"));
    match config.case {
        CaseKind::GroundState => {
            let g = config.ground_state.as_ref().ok_or_else(|| missing("ground_state"))?;
            let model = config.model.as_ref().ok_or_else(|| missing("model"))?;
            let h = hamiltonian(model)?;
            let rho = maximally_mixed(model.n_sites)?;
            let (num, den) = make_ground_state(&h, &parse_term(&g.observable)?, g.tau, g.t_cutoff, &rho)?;
            Ok(match g.target {
                GroundTarget::Numerator => CaseIntegrands { primary: num, denominator: None },
                GroundTarget::Denominator => CaseIntegrands { primary: den, denominator: None },
                GroundTarget::Ratio => CaseIntegrands { primary: num, denominator: Some(den) },
            })
        }
        CaseKind::Greens => {
            let g = config.greens.as_ref().ok_or_else(|| missing("greens"))?;
            let model = config.model.as_ref().ok_or_else(|| missing("model"))?;
            let h = hamiltonian(model)?;
            let (e0, rho) = ground_state(&h)?;
            let omega = g.omega.resolve(e0);
            let primary =
                make_greens_function(&h, e0, g.eta, omega, g.site_k, g.site_l, g.y_cutoff, g.z_cutoff, &rho)?;
            Ok(CaseIntegrands { primary, denominator: None })
        }
        CaseKind::Microcanonical => {
            let m = config.microcanonical.as_ref().ok_or_else(|| missing("microcanonical"))?;
            let model = config.model.as_ref().ok_or_else(|| missing("model"))?;
            let h = hamiltonian(model)?;
            let energy = m.energy.resolve(h.spectrum()[0]);
            let t_c = m.t_cutoff.unwrap_or(2.0 * m.tau * (1.0 / m.tolerance).ln().sqrt());
            let rho = maximally_mixed(model.n_sites)?;
            let primary = make_microcanonical(&h, &parse_term(&m.observable)?, energy, m.tau, t_c, &rho)?;
            Ok(CaseIntegrands { primary, denominator: None })
        }
        CaseKind::LinearSolver => {
            let l = config.linear_solver.as_ref().ok_or_else(|| missing("linear_solver"))?;
            let terms = l.terms.iter().map(|t| parse_term(t)).collect::<Result<Vec<_>>>()?;
            let a = HermitianOperator::from_pauli_sum(&terms, l.n_qubits)?;
            let (a, _) = rescale_to_unit_norm(&a)?;
            let mu = a.spectrum().iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
            let cutoffs = match l.cutoffs {
                Some(c) => c,
                None => linear_solver_cutoffs(mu, l.tolerance)?,
            };
            let rho = maximally_mixed(l.n_qubits)?;
            let primary = make_linear_solver(&a, &parse_term(&l.observable)?, cutoffs, &rho)?;
            Ok(CaseIntegrands { primary, denominator: None })
        }
    }
}
