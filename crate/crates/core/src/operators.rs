//! Operator matrices, conversion between the Q basis and an eigenbasis, and
//! derivative operators obtained by integration by parts.

use nalgebra::{DMatrix, DVector};

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::spectral::SpectralState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    /// Raw `<Q_j|f|Q_k>`.
    Q,
    /// `<psi^[j]|f|psi^[k]>` for the eigenbasis of some spectrum.
    Psi,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub m: DMatrix<f64>,
    pub tag: BasisTag,
    pub hermitian: bool,
}

impl OperatorMatrix {
    pub fn q(m: DMatrix<f64>) -> Self {
        OperatorMatrix { m, tag: BasisTag::Q, hermitian: true }
    }

    pub fn psi(m: DMatrix<f64>, hermitian: bool) -> Self {
        OperatorMatrix { m, tag: BasisTag::Psi, hermitian }
    }

    /// Builds the Q-basis matrix of a sampled observable.
    pub fn from_moments(basis: &Basis, moms: &DVector<f64>) -> Self {
        OperatorMatrix::q(basis.matrix_from_moments(moms))
    }
}

/// `<Q_j|f|Q_k> = sum G alpha <psi|f|psi> alpha^T G`.
pub fn psi_to_q(m: &DMatrix<f64>, spec: &SpectralState, gram: &DMatrix<f64>) -> DMatrix<f64> {
    let ga = gram * &spec.alphas;
    &ga * m * ga.transpose()
}

/// `<psi^[j]|f|psi^[k]> = alpha^T <Q|f|Q> alpha`.
pub fn q_to_psi(m: &DMatrix<f64>, spec: &SpectralState) -> DMatrix<f64> {
    spec.alphas.transpose() * m * &spec.alphas
}

pub fn convert_basis(
    op: &OperatorMatrix,
    target: BasisTag,
    spec: &SpectralState,
    gram: &DMatrix<f64>,
) -> Result<OperatorMatrix> {
    let n = spec.n();
    if op.m.nrows() != n || op.m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: op.m.nrows() });
    }
    let m = match (op.tag, target) {
        (a, b) if a == b => op.m.clone(),
        (BasisTag::Q, BasisTag::Psi) => q_to_psi(&op.m, spec),
        (BasisTag::Psi, BasisTag::Q) => psi_to_q(&op.m, spec, gram),
        _ => unreachable!(),
    };
    Ok(OperatorMatrix { m, tag: target, hermitian: op.hermitian })
}

/// `<Q_j|df/dt|Q_k> = f_now Q_j(x_0) Q_k(x_0) - <ED(Q_j)|f|Q_k> - <Q_j|f|ED(Q_k)>`
/// from the Q-basis matrix of `f`.
pub fn ddt_operator(basis: &Basis, f: &DMatrix<f64>, f_now: f64) -> DMatrix<f64> {
    let q = basis.q_now_n();
    let e = basis.ed_n();
    let ef = e.transpose() * f;
    &q * q.transpose() * f_now - &ef - ef.transpose()
}

/// Same identity in the eigenbasis; `f` and the result are `psi`-basis
/// matrices, `ed_psi[(a, j)]` is the `psi^[a]` coefficient of `ED(psi^[j])`.
pub fn ddt_operator_psi(f: &DMatrix<f64>, ed_psi: &DMatrix<f64>, q_psi: &DVector<f64>, f_now: f64) -> DMatrix<f64> {
    let ef = ed_psi.transpose() * f;
    q_psi * q_psi.transpose() * f_now - &ef - ef.transpose()
}

/// Moment form: `<Q_m df/dt> = f_now Q_m(x_0) - <D(Q_m) f>`.
pub fn ddt_moments(basis: &Basis, f_moms: &DVector<f64>, f_now: f64) -> DVector<f64> {
    &basis.q_now * f_now - basis.deriv.transpose() * f_moms
}

/// `ED` expressed in the eigenbasis: `alpha^{-1} ED alpha`, computed as
/// `alpha^T G ED alpha` because `alpha^T G alpha = 1`.
pub fn ed_in_psi(basis: &Basis, spec: &SpectralState) -> DMatrix<f64> {
    spec.alphas.transpose() * &basis.gram * basis.ed_n() * &spec.alphas
}
