//! Periodic Heisenberg chains and the initial and ground states used by the
//! experiments.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operators::{
    pauli_matrix, CMatrix, DensityState, HermitianOperator, PauliAxis, PauliTerm, C64,
};

/// Energy gap below which the ground space is treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisenbergSpec {
    pub n_sites: usize,
    pub coupling: f64,
    /// Coefficient of the identity.
    pub offset: f64,
}

/// `J * sum_j (X_j X_{j+1} + Y_j Y_{j+1} + Z_j Z_{j+1}) + offset * I` with site `N` identified with site 0.
pub fn build_heisenberg(spec: &HeisenbergSpec) -> Result<HermitianOperator> {
    let n = spec.n_sites;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n_sites = {n}, need at least 2")));
    }
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for j in 0..n {
        let k = (j + 1) % n;
        for axis in [PauliAxis::X, PauliAxis::Y, PauliAxis::Z] {
            let term = PauliTerm::new(spec.coupling, vec![(j, axis), (k, axis)])?;
            m += pauli_matrix(&term, n)?;
        }
    }
    for i in 0..dim {
        m[(i, i)] += C64::new(spec.offset, 0.0);
    }
    HermitianOperator::new(m)
}

/// `I / 2^n`.
pub fn maximally_mixed(n_qubits: usize) -> Result<DensityState> {
    if n_qubits == 0 {
        return Err(Error::InvalidParameter("n_qubits must be at least 1".into()));
    }
    let dim = 1usize << n_qubits;
    DensityState::new(CMatrix::identity(dim, dim).unscale(dim as f64))
}

/// Lowest eigenvalue and the projector onto its eigenvector.
pub fn ground_state(op: &HermitianOperator) -> Result<(f64, DensityState)> {
    let spec = op.spectrum();
    if spec.len() > 1 {
        let gap = spec[1] - spec[0];
        if gap < DEGENERACY_TOL {
            return Err(Error::DegenerateGroundState(gap));
        }
    }
    let v: DVector<C64> = op.eigenbasis().column(0).into_owned();
    Ok((spec[0], DensityState::pure(&v)?))
}
