//! Generalized symmetric eigenproblems `A alpha = lambda B alpha` and the
//! states derived from them.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::basis::Basis;
use crate::error::{Error, Result};

/// Which pair of operators produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GevKind {
    /// `||I|| psi = lambda ||1|| psi`.
    IVsOne,
    /// `||V_last - V|| psi = lambda ||t_now - t|| psi`.
    VVsT,
    /// `||dI/dt|| psi = lambda ||1|| psi`.
    DIdtVsOne,
    Other,
}

/// Relative floor applied to `B` eigenvalues when Cholesky fails.
const B_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectralState {
    /// Ascending eigenvalues.
    pub lambdas: DVector<f64>,
    /// Column `i` holds the Q-basis coefficients of `psi^[i]`.
    pub alphas: DMatrix<f64>,
    pub which: GevKind,
    /// True when `B` needed the eigenvalue floor instead of Cholesky.
    pub floored: bool,
    /// Orthonormal eigenvectors of the whitened problem, before orientation.
    pub rotation: DMatrix<f64>,
}

impl SpectralState {
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn psi(&self, i: usize) -> DVector<f64> {
        self.alphas.column(i).into_owned()
    }

    /// `psi^[i](x)` for every `i`, given `Q_k(x)` values.
    pub fn values_at(&self, q: &DVector<f64>) -> DVector<f64> {
        self.alphas.tr_mul(q)
    }

    /// Index of the largest eigenvalue; after [`orient`](Self::orient) this is
    /// the first member of the top degenerate cluster.
    pub fn top(&self) -> usize {
        let n = self.n();
        let tol = cluster_tol(&self.lambdas);
        let max = self.lambdas[n - 1];
        (0..n).find(|&i| max - self.lambdas[i] <= tol).unwrap_or(n - 1)
    }

    /// Fixes signs so `psi(x_0) >= 0` and rotates every degenerate cluster so
    /// its first member carries all of the cluster's value at `x_0`.
    pub fn orient(&mut self, q_now: &DVector<f64>) {
        let n = self.n();
        let tol = cluster_tol(&self.lambdas);
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && self.lambdas[end] - self.lambdas[start] <= tol {
                end += 1;
            }
            if end - start > 1 {
                self.rotate_cluster(start, end, q_now);
            }
            start = end;
        }
        let vals = self.values_at(q_now);
        for i in 0..n {
            if vals[i] < 0.0 {
                let mut c = self.alphas.column_mut(i);
                c.neg_mut();
            }
        }
    }

    fn rotate_cluster(&mut self, start: usize, end: usize, q_now: &DVector<f64>) {
        let k = end - start;
        let block = self.alphas.columns(start, k).into_owned();
        let v = block.tr_mul(q_now);
        let norm = v.norm();
        if norm == 0.0 {
            return;
        }
        let v = v / norm;
        // Householder reflection mapping e_1 to v.
        let mut w = -v.clone();
        w[0] += 1.0;
        let ww = w.dot(&w);
        let h = if ww < 1e-300 {
            DMatrix::identity(k, k)
        } else {
            DMatrix::identity(k, k) - &w * w.transpose() * (2.0 / ww)
        };
        let rotated = block * h;
        self.alphas.columns_mut(start, k).copy_from(&rotated);
        let mean = self.lambdas.rows(start, k).mean();
        self.lambdas.rows_mut(start, k).fill(mean);
    }
}

fn cluster_tol(lambdas: &DVector<f64>) -> f64 {
    1e-10 * lambdas.amax().max(1e-300)
}

/// Jacobi-scaled whitening of a positive definite `B`: `W^T S B S W = 1`.
#[derive(Debug, Clone)]
pub struct Whitening {
    scale: DVector<f64>,
    w: DMatrix<f64>,
    floored: bool,
}

impl Whitening {
    /// Cholesky, or a floored eigendecomposition when Cholesky fails.
    pub fn new(b: &DMatrix<f64>) -> Result<Self> {
        let n = b.nrows();
        if b.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.ncols() });
        }
        let mut s = DVector::zeros(n);
        for i in 0..n {
            let d = b[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            s[i] = 1.0 / d.sqrt();
        }
        let bs = symmetrize(&DMatrix::from_fn(n, n, |i, j| b[(i, j)] * s[i] * s[j]));
        let (w, floored) = match Cholesky::new(bs.clone()) {
            Some(ch) => {
                let linv = ch
                    .l()
                    .solve_lower_triangular(&DMatrix::identity(n, n))
                    .ok_or(Error::NotPositiveDefinite)?;
                (linv.transpose(), false)
            }
            None => {
                let eig = jacobi_eigen(&bs);
                let max = eig.eigenvalues.max();
                if !(max > 0.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                let floor = B_FLOOR * max;
                let mut w = eig.eigenvectors.clone();
                for j in 0..n {
                    let mu = eig.eigenvalues[j].max(floor);
                    w.column_mut(j).scale_mut(1.0 / mu.sqrt());
                }
                (w, true)
            }
        };
        Ok(Whitening { scale: s, w, floored })
    }

    pub fn n(&self) -> usize {
        self.scale.len()
    }

    /// Solves `A alpha = lambda B alpha`. `warm` is an orthogonal guess for
    /// the whitened eigenvectors, usually the previous solution's `rotation`.
    pub fn solve(&self, a: &DMatrix<f64>, which: GevKind, warm: Option<&DMatrix<f64>>) -> Result<SpectralState> {
        let n = self.n();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
        }
        let s = &self.scale;
        let as_ = symmetrize(&DMatrix::from_fn(n, n, |i, j| a[(i, j)] * s[i] * s[j]));
        let c = symmetrize(&(self.w.transpose() * &as_ * &self.w));
        let eig = match warm {
            Some(v0) if v0.nrows() == n && v0.ncols() == n => jacobi_eigen_from(&c, v0),
            _ => jacobi_eigen(&c),
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let lambdas = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut rotation = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            rotation.set_column(col, &eig.eigenvectors.column(i));
        }
        let mut alphas = &self.w * &rotation;
        for r in 0..n {
            alphas.row_mut(r).scale_mut(s[r]);
        }
        Ok(SpectralState { lambdas, alphas, which, floored: self.floored, rotation })
    }
}

/// Solves `A alpha = lambda B alpha` for symmetric `A` and positive definite `B`.
///
/// Eigenvectors are `B`-orthonormal. `B` is Jacobi-scaled and whitened by
/// Cholesky, or by a floored eigendecomposition when Cholesky fails.
pub fn solve_gev(a: &DMatrix<f64>, b: &DMatrix<f64>, which: GevKind) -> Result<SpectralState> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: b.nrows(), got: a.nrows() });
    }
    Whitening::new(b)?.solve(a, which, None)
}

/// Jacobi iterations started from the orthogonal `v0`, which only changes
/// how many sweeps are needed.
pub fn jacobi_eigen_from(m: &DMatrix<f64>, v0: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let rotated = symmetrize(&(v0.transpose() * m * v0));
    let eig = jacobi_eigen(&rotated);
    SymmetricEigen { eigenvalues: eig.eigenvalues, eigenvectors: v0 * eig.eigenvectors }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Used instead of the QR-based solver, which loses several digits on some
/// small inputs; Jacobi rotations keep residuals at rounding level.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        let diag: f64 = (0..n).map(|i| a[(i, i)].powi(2)).sum();
        if off <= 1e-32 * diag || off == 0.0 {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                // negligible against both diagonal entries: drop it
                if apq.abs() <= 1e-18 * (a[(p, p)] * a[(q, q)]).abs().sqrt() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    SymmetricEigen { eigenvalues: a.diagonal(), eigenvectors: v }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `||I|| psi = lambda ||1|| psi` oriented at `x_0`.
pub fn solve_flow_gev(basis: &Basis, i_matrix: &DMatrix<f64>) -> Result<SpectralState> {
    solve_flow_gev_from(basis, i_matrix, None)
}

/// [`solve_flow_gev`] warm-started from an earlier spectrum's `rotation`.
pub fn solve_flow_gev_from(basis: &Basis, i_matrix: &DMatrix<f64>, warm: Option<&DMatrix<f64>>) -> Result<SpectralState> {
    let mut spec = basis.gram_whitening()?.solve(i_matrix, GevKind::IVsOne, warm)?;
    spec.orient(&basis.q_now_n());
    Ok(spec)
}

/// State localized at `y`: `psi_y(x) = K(x, y) / sqrt(K(y, y))` with the
/// Christoffel kernel `K(x, y) = Q(x)^T G^{-1} Q(y)`.
pub fn localized_state(gram: &DMatrix<f64>, q_y: &DVector<f64>) -> Result<DVector<f64>> {
    let ch = Cholesky::new(gram.clone()).ok_or(Error::NotPositiveDefinite)?;
    let g_inv_q = ch.solve(q_y);
    let k = q_y.dot(&g_inv_q);
    Ok(g_inv_q / k.sqrt())
}

/// The eigenstate with maximal execution flow.
#[derive(Debug, Clone)]
pub struct MaxFlowState {
    /// Q-basis coefficients, normalized so `<psi|psi> = 1`.
    pub psi: DVector<f64>,
    /// `lambda^[IH]`, shares per second.
    pub lambda: f64,
    /// `<psi_0|psi^[IH]>^2`.
    pub projection_now: f64,
    pub index: usize,
    /// `<psi_0|I|psi_0>`.
    pub i0: f64,
}

impl MaxFlowState {
    /// `dI^F = lambda^[IH] - <psi_0|I|psi_0>`.
    pub fn d_i_future(&self) -> f64 {
        (self.lambda - self.i0).max(0.0)
    }
}

/// Picks the top state and the now-localized projections from an oriented spectrum.
pub fn max_flow_state(spec: &SpectralState, q_now: &DVector<f64>) -> MaxFlowState {
    let vals = spec.values_at(q_now);
    let total: f64 = vals.iter().map(|v| v * v).sum();
    let top = spec.top();
    let lam = spec.lambdas[top];
    // dI^F as a sum of non-negative terms, so its sign is exact
    let gap = vals.iter().zip(spec.lambdas.iter()).map(|(v, l)| v * v * (lam - l).max(0.0)).sum::<f64>() / total;
    MaxFlowState {
        psi: spec.psi(top),
        lambda: lam,
        projection_now: (vals[top] * vals[top] / total).clamp(0.0, 1.0),
        index: top,
        i0: lam - gap,
    }
}
