//! Dense complex operators on N qubits: Pauli strings, Hermitian
//! eigendecomposition, spectral functions and traces against states.
//!
//! Qubit 0 is the leftmost tensor factor, so site `j` of an `n`-qubit
//! register is bit `n - 1 - j` of the computational-basis index.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Entrywise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// `coefficient * P_{s1} P_{s2} ...`; an empty factor list is a scaled identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    factors: Vec<(usize, PauliAxis)>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: Vec<(usize, PauliAxis)>) -> Result<Self> {
        for (i, (site, _)) in factors.iter().enumerate() {
            if factors[..i].iter().any(|(s, _)| s == site) {
                return Err(Error::DuplicateSite(*site));
            }
        }
        Ok(Self { coefficient, factors })
    }

    pub fn identity(coefficient: f64) -> Self {
        Self { coefficient, factors: Vec::new() }
    }

    pub fn single(site: usize, axis: PauliAxis) -> Self {
        Self { coefficient: 1.0, factors: vec![(site, axis)] }
    }

    pub fn factors(&self) -> &[(usize, PauliAxis)] {
        &self.factors
    }

    /// A Pauli string is unitary exactly when its coefficient has modulus one.
    pub fn is_unitary(&self) -> bool {
        (self.coefficient.abs() - 1.0).abs() < 1e-14
    }

    /// Largest site index referenced, if any.
    pub fn max_site(&self) -> Option<usize> {
        self.factors.iter().map(|(s, _)| *s).max()
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficient != 1.0 || self.factors.is_empty() {
            write!(f, "{}", self.coefficient)?;
            if !self.factors.is_empty() {
                write!(f, " ")?;
            }
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(s, a)| format!("{a:?}{s}"))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Parses whitespace-separated factors such as `Z0 Z1` or `0.5 X0 Y2`.
/// A bare number or `I` denotes a scaled identity.
impl FromStr for PauliTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut coefficient = 1.0;
        let mut factors = Vec::new();
        for (i, tok) in s.split_whitespace().enumerate() {
            if i == 0 {
                if let Ok(c) = tok.parse::<f64>() {
                    coefficient = c;
                    continue;
                }
            }
            if tok == "I" {
                continue;
            }
            let bad = || Error::PauliParse(s.to_string());
            let axis = match tok.chars().next() {
                Some('X') => PauliAxis::X,
                Some('Y') => PauliAxis::Y,
                Some('Z') => PauliAxis::Z,
                _ => return Err(bad()),
            };
            let site: usize = tok[1..].parse().map_err(|_| bad())?;
            factors.push((site, axis));
        }
        PauliTerm::new(coefficient, factors)
    }
}

/// Dense matrix of a Pauli term on `n_qubits` qubits.
pub fn pauli_matrix(term: &PauliTerm, n_qubits: usize) -> Result<CMatrix> {
    for &(site, _) in term.factors() {
        if site >= n_qubits {
            return Err(Error::SiteOutOfRange { site, n_qubits });
        }
    }
    let dim = 1usize << n_qubits;
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut row = col;
        let mut phase = C64::new(term.coefficient, 0.0);
        for &(site, axis) in term.factors() {
            let bit = n_qubits - 1 - site;
            let v = (col >> bit) & 1;
            match axis {
                PauliAxis::X => row ^= 1 << bit,
                PauliAxis::Y => {
                    row ^= 1 << bit;
                    phase *= if v == 0 { C64::i() } else { -C64::i() };
                }
                PauliAxis::Z => {
                    if v == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        m[(row, col)] += phase;
    }
    Ok(m)
}

/// Dense matrix of a sum of Pauli terms.
pub fn pauli_sum_matrix(terms: &[PauliTerm], n_qubits: usize) -> Result<CMatrix> {
    let dim = 1usize << n_qubits;
    let mut m = CMatrix::zeros(dim, dim);
    for t in terms {
        m += pauli_matrix(t, n_qubits)?;
    }
    Ok(m)
}

/// Largest entrywise deviation `|m_ij - conj(m_ji)|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian matrix with its eigendecomposition computed at construction.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: CMatrix,
    spectrum: Vec<f64>,
    eigenbasis: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 100_000)
            .ok_or(Error::EigenNoConvergence)?;
        let mut order: Vec<usize> = (0..matrix.nrows()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let columns: Vec<DVector<C64>> =
            order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        let eigenbasis = CMatrix::from_columns(&columns);
        Ok(Self { matrix, spectrum, eigenbasis })
    }

    pub fn from_pauli_sum(terms: &[PauliTerm], n_qubits: usize) -> Result<Self> {
        Self::new(pauli_sum_matrix(terms, n_qubits)?)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Orthonormal eigenvectors as columns, ordered like `spectrum`.
    pub fn eigenbasis(&self) -> &CMatrix {
        &self.eigenbasis
    }

    /// `self + c I`, reusing the eigenbasis.
    pub fn shifted(&self, c: f64) -> Self {
        let mut matrix = self.matrix.clone();
        for i in 0..self.dim() {
            matrix[(i, i)] += c;
        }
        Self {
            matrix,
            spectrum: self.spectrum.iter().map(|l| l + c).collect(),
            eigenbasis: self.eigenbasis.clone(),
        }
    }

    /// `self * s`, reusing the eigenbasis. Negative `s` reverses the order.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if s > 0.0 {
            Ok(Self {
                matrix: self.matrix.scale(s),
                spectrum: self.spectrum.iter().map(|l| l * s).collect(),
                eigenbasis: self.eigenbasis.clone(),
            })
        } else {
            Self::new(self.matrix.scale(s))
        }
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_norm(&self) -> f64 {
        self.spectrum.iter().fold(0.0f64, |m, l| m.max(l.abs()))
    }
}

/// Spectrum and eigenbasis of `op`; the decomposition is cached on the operator.
pub fn eigendecompose(op: &HermitianOperator) -> (&[f64], &CMatrix) {
    (op.spectrum(), op.eigenbasis())
}

/// `V diag(g(lambda_i)) V^dagger`.
pub fn apply_function<G>(op: &HermitianOperator, g: G) -> Result<CMatrix>
where
    G: Fn(f64) -> C64,
{
    let v = op.eigenbasis();
    let mut scaled = v.clone();
    for (j, &lam) in op.spectrum().iter().enumerate() {
        let gj = g(lam);
        if !(gj.re.is_finite() && gj.im.is_finite()) {
            return Err(Error::NonFiniteFunction(lam));
        }
        let mut col = scaled.column_mut(j);
        col *= gj;
    }
    Ok(&scaled * v.adjoint())
}

/// Density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityState {
    matrix: CMatrix,
}

impl DensityState {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 100_000)
            .ok_or(Error::EigenNoConvergence)?;
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Projector onto a normalized copy of `psi`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = psi.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.matrix[(i, j)] * self.matrix[(j, i)]).re;
            }
        }
        acc
    }

    pub fn is_pure(&self) -> bool {
        (self.purity() - 1.0).abs() < 1e-10
    }
}

/// `Tr(matrix * rho)`.
pub fn trace_with(matrix: &CMatrix, state: &DensityState) -> Result<C64> {
    let n = state.dim();
    if matrix.nrows() != n || matrix.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: matrix.nrows() });
    }
    let rho = state.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += matrix[(i, j)] * rho[(j, i)];
        }
    }
    Ok(acc)
}
