//! Density matrices reproducing polynomial-weighted averages.
//!
//! A density matrix `rho` for a polynomial `P` satisfies
//! `P(x) = sum_jk rho_jk Q_j(x) Q_k(x)`, so for every sampled observable `f`
//! `Spur(f, rho) = sum_jk <Q_j|f|Q_k> rho_kj = <P f>`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::basis::Basis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    FromPoly,
    /// `J(psi^2)` of the maximal-flow state.
    Jih,
    /// `J(J(psi^2))`.
    Jjih,
    /// `J(psi^2)` of the V/T state.
    Jvt,
}

#[derive(Debug, Clone)]
pub struct DensityState {
    /// Q-basis coefficients (contravariant).
    pub rho: DMatrix<f64>,
    pub origin: Origin,
}

impl DensityState {
    /// `Spur(f, rho)` for a Q-basis operator matrix.
    pub fn spur(&self, f: &DMatrix<f64>) -> f64 {
        spur(f, &self.rho)
    }

    /// Count of eigenvalues below `-tol * max|eig|`.
    pub fn negative_eigenvalues(&self) -> usize {
        let eig = SymmetricEigen::new(self.rho.clone()).eigenvalues;
        let tol = 1e-12 * eig.amax();
        eig.iter().filter(|v| **v < -tol).count()
    }

    /// Coefficients of the represented polynomial.
    pub fn polynomial(&self, basis: &Basis) -> DVector<f64> {
        let n = basis.n();
        let mut out = DVector::zeros(basis.moment_len());
        for j in 0..n {
            for k in 0..n {
                for (m, c) in basis.product(j, k) {
                    out[*m] += self.rho[(j, k)] * c;
                }
            }
        }
        out
    }
}

/// `sum_jk f_jk rho_kj`.
pub fn spur(f: &DMatrix<f64>, rho: &DMatrix<f64>) -> f64 {
    f.component_mul(&rho.transpose()).sum()
}

/// Minimum-norm symmetric solver for `P -> rho`.
///
/// The norm is the Frobenius norm in Gram-orthonormal coordinates, which makes
/// the result independent of the choice of Q basis for the same measure. A
/// residual correction in raw Q coordinates restores the polynomial to
/// rounding level when the Gram matrix is poorly conditioned.
#[derive(Debug, Clone)]
pub struct MinNormSolver {
    n: usize,
    linv: DMatrix<f64>,
    pinv: DMatrix<f64>,
    sys_q: DMatrix<f64>,
    pinv_q: DMatrix<f64>,
    pairs: Vec<(usize, usize)>,
}

fn unit_pair(n: usize, a: usize, b: usize) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(n, n);
    if a == b {
        r[(a, a)] = 1.0;
    } else {
        r[(a, b)] = std::f64::consts::FRAC_1_SQRT_2;
        r[(b, a)] = std::f64::consts::FRAC_1_SQRT_2;
    }
    r
}

fn pseudo_inverse(sys: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = sys.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max();
    svd.pseudo_inverse(eps).map_err(|e| Error::Config(e.to_string()))
}

impl MinNormSolver {
    pub fn new(basis: &Basis) -> Result<Self> {
        let n = basis.n();
        let size = basis.moment_len();
        let l = Cholesky::new(basis.gram.clone()).ok_or(Error::NotPositiveDefinite)?.l();
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(Error::NotPositiveDefinite)?;
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a..n {
                pairs.push((a, b));
            }
        }
        let poly = |rho: DMatrix<f64>| DensityState { rho, origin: Origin::FromPoly }.polynomial(basis);
        let mut sys = DMatrix::zeros(size, pairs.len());
        let mut sys_q = DMatrix::zeros(size, pairs.len());
        for (col, &(a, b)) in pairs.iter().enumerate() {
            let r = unit_pair(n, a, b);
            sys.set_column(col, &poly(linv.transpose() * &r * &linv));
            sys_q.set_column(col, &poly(r));
        }
        Ok(MinNormSolver { n, linv, pinv: pseudo_inverse(sys)?, pinv_q: pseudo_inverse(sys_q.clone())?, sys_q, pairs })
    }

    fn unpack(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut r = DMatrix::zeros(self.n, self.n);
        for (col, &(a, b)) in self.pairs.iter().enumerate() {
            r += unit_pair(self.n, a, b) * x[col];
        }
        r
    }

    fn pack(&self, rho: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.pairs.len(),
            self.pairs.iter().map(|&(a, b)| if a == b { rho[(a, a)] } else { rho[(a, b)] * std::f64::consts::SQRT_2 }),
        )
    }

    pub fn solve(&self, p: &DVector<f64>) -> DensityState {
        let r = self.unpack(&(&self.pinv * p));
        let mut st = DensityState { rho: self.linv.transpose() * r * &self.linv, origin: Origin::FromPoly };
        for _ in 0..2 {
            let resid = p - &self.sys_q * self.pack(&st.rho);
            st.rho += self.unpack(&(&self.pinv_q * resid));
        }
        st
    }
}

/// Minimum-norm density matrix for a polynomial of degree `<= 2n - 2`.
pub fn density_from_poly(basis: &Basis, p: &DVector<f64>) -> Result<DensityState> {
    if p.len() != basis.moment_len() {
        return Err(Error::DimensionMismatch { expected: basis.moment_len(), got: p.len() });
    }
    Ok(MinNormSolver::new(basis)?.solve(p))
}

/// Solves `E rho + rho E^T = C` for upper triangular `E` whose diagonal
/// pair sums never vanish.
pub fn lyapunov_upper(e: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = e.nrows();
    let mut r = DMatrix::zeros(n, n);
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            let mut s = c[(i, j)];
            for k in i + 1..n {
                s -= e[(i, k)] * r[(k, j)];
            }
            for k in j + 1..n {
                s -= r[(i, k)] * e[(j, k)];
            }
            r[(i, j)] = s / (e[(i, i)] + e[(j, j)]);
        }
    }
    r
}

/// Density matrix for `J(P)` built from a density matrix `sigma` for `P`.
///
/// The solution of `ED rho + rho ED^T = sigma` represents `J(P)`, since
/// `D(Q^T rho Q) = Q^T (ED rho + rho ED^T) Q`. It also makes
/// `Spur(df/dt, rho) = f_now Q^T rho Q|_{x_0} - Spur(f, sigma)` hold for any
/// operator `f`, not only for sampled ones.
pub fn integrate_density(basis: &Basis, sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let r = lyapunov_upper(&basis.ed_n(), sigma);
    (&r + r.transpose()) * 0.5
}

/// How `rho_JIH` is built from `psi^[IH]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoMethod {
    /// `ED rho + rho ED^T = psi psi^T` (positive semidefinite).
    #[default]
    Lyapunov,
    /// Minimum-norm solution of the polynomial contract.
    MinNorm,
}

/// `rho_JIH` and `rho_JJIH` for a normalized state.
pub fn since_state(
    basis: &Basis,
    psi: &DVector<f64>,
    method: RhoMethod,
    solver: Option<&MinNormSolver>,
) -> Result<(DensityState, DensityState)> {
    match method {
        RhoMethod::Lyapunov => {
            let pure = psi * psi.transpose();
            let r1 = integrate_density(basis, &pure);
            let r2 = integrate_density(basis, &r1);
            Ok((DensityState { rho: r1, origin: Origin::Jih }, DensityState { rho: r2, origin: Origin::Jjih }))
        }
        RhoMethod::MinNorm => {
            let owned;
            let s = match solver {
                Some(s) => s,
                None => {
                    owned = MinNormSolver::new(basis)?;
                    &owned
                }
            };
            let j1 = basis.j(&basis.square(psi));
            let j2 = basis.j(&j1);
            let mut a = s.solve(&j1);
            a.origin = Origin::Jih;
            let mut b = s.solve(&j2);
            b.origin = Origin::Jjih;
            Ok((a, b))
        }
    }
}
