//! Measures, polynomial bases and the structural transforms built on them.
//!
//! Two families of the variable `x(t)` are supported. The exponential-support
//! family uses `x = (t - t_now)/tau` on `(-inf, 0]`; the unit-interval family
//! uses `x = exp(-(t_now - t)/tau)` on `(0, 1]`. In both the weight is
//! `omega(t) = exp(-(t_now - t)/tau)` and equals one at `t_now`.
//!
//! Time derivatives carry the `1/tau` factor and antiderivatives carry `tau`,
//! so every transform here maps time-measure quantities to time-measure
//! quantities in seconds.

use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::spectral::Whitening;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisKind {
    /// `Q_m(x) = L_m(-x)` on `x <= 0`.
    Laguerre,
    /// `Q_m(x) = P_m(2x - 1)` on `0 < x <= 1`.
    LegendreShifted,
    /// `Q_m(x) = x^m` with the Laguerre measure.
    Monomial,
    /// `Q_m(x) = T_m(2x - 1)` with the shifted Legendre measure.
    ChebyshevShifted,
}

impl BasisKind {
    pub const ALL: [BasisKind; 4] = [
        BasisKind::Laguerre,
        BasisKind::LegendreShifted,
        BasisKind::Monomial,
        BasisKind::ChebyshevShifted,
    ];

    /// True when `x = (t - t_now)/tau`; false for `x = exp(-(t_now - t)/tau)`.
    pub fn exponential_support(self) -> bool {
        matches!(self, BasisKind::Laguerre | BasisKind::Monomial)
    }

    pub fn x_now(self) -> f64 {
        if self.exponential_support() {
            0.0
        } else {
            1.0
        }
    }

    /// Largest usable basis dimension before multiplication coefficients blow up.
    pub fn max_dim(self) -> usize {
        if self.exponential_support() {
            50
        } else {
            150
        }
    }

    pub fn x_at_age(self, age: f64, tau: f64) -> f64 {
        if self.exponential_support() {
            -age / tau
        } else {
            (-age / tau).exp()
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Laguerre => "Laguerre",
            BasisKind::LegendreShifted => "LegendreShifted",
            BasisKind::Monomial => "Monomial",
            BasisKind::ChebyshevShifted => "ChebyshevShifted",
        }
    }

    /// Coefficients of `Q_{m+1}(x) = (a x + b) Q_m(x) - c Q_{m-1}(x)`.
    pub fn recurrence(self, m: usize) -> (f64, f64, f64) {
        let mf = m as f64;
        match self {
            BasisKind::LegendreShifted => {
                let d = mf + 1.0;
                (2.0 * (2.0 * mf + 1.0) / d, -(2.0 * mf + 1.0) / d, mf / d)
            }
            BasisKind::ChebyshevShifted => {
                if m == 0 {
                    (2.0, -1.0, 0.0)
                } else {
                    (4.0, -2.0, 1.0)
                }
            }
            BasisKind::Laguerre => {
                let d = mf + 1.0;
                (1.0 / d, (2.0 * mf + 1.0) / d, mf / d)
            }
            BasisKind::Monomial => (1.0, 0.0, 0.0),
        }
    }

    /// `Q_m(x_0)` in closed form.
    pub fn values_now(self, count: usize) -> Vec<f64> {
        match self {
            BasisKind::Monomial => (0..count).map(|m| if m == 0 { 1.0 } else { 0.0 }).collect(),
            _ => vec![1.0; count],
        }
    }

    /// `Q_0(x), ..., Q_{count-1}(x)`.
    pub fn eval_all(self, x: f64, count: usize) -> Vec<f64> {
        let mut q = Vec::with_capacity(count);
        if count == 0 {
            return q;
        }
        q.push(1.0);
        for m in 0..count.saturating_sub(1) {
            let (a, b, c) = self.recurrence(m);
            let prev = if m == 0 { 0.0 } else { q[m - 1] };
            q.push((a * x + b) * q[m] - c * prev);
        }
        q
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().trim_start_matches("CommonlyUsedMoments").to_ascii_lowercase();
        match key.as_str() {
            "laguerre" => Ok(BasisKind::Laguerre),
            "legendreshifted" | "legendre" => Ok(BasisKind::LegendreShifted),
            "monomials" | "monomial" => Ok(BasisKind::Monomial),
            "chebyshevshifted" | "chebyshev" => Ok(BasisKind::ChebyshevShifted),
            _ => Err(Error::Config(format!("unknown measure `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureParams {
    /// Exponent time scale in seconds.
    pub tau: f64,
    /// Number of basis functions.
    pub n: usize,
}

impl MeasureParams {
    pub fn new(tau: f64, n: usize) -> Self {
        MeasureParams { tau, n }
    }

    pub fn validate(&self, kind: BasisKind) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParams(format!("tau must be positive, got {}", self.tau)));
        }
        if self.n == 0 || self.n > kind.max_dim() {
            return Err(Error::InvalidParams(format!(
                "n must be in 1..={} for {kind}, got {}",
                kind.max_dim(),
                self.n
            )));
        }
        Ok(())
    }

    /// Length of moment vectors, `2n - 1`.
    pub fn moment_len(&self) -> usize {
        2 * self.n - 1
    }
}

/// Polynomial expanded in the `Q_m` basis of `kind`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub kind: BasisKind,
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(kind: BasisKind, coeffs: Vec<f64>) -> Self {
        Poly { kind, coeffs }
    }

    pub fn constant(kind: BasisKind, c: f64) -> Self {
        Poly { kind, coeffs: vec![c] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let q = self.kind.eval_all(x, self.coeffs.len());
        self.coeffs.iter().zip(&q).map(|(c, q)| c * q).sum()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn padded(&self, len: usize) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        v.resize(len.max(v.len()), 0.0);
        v
    }

    /// Product of two polynomials, expanded with the multiplication table.
    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.kind, other.kind, "basis kinds differ");
        let len = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = vec![0.0; len];
        for (j, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (k, b) in other.coeffs.iter().enumerate() {
                if *b == 0.0 {
                    continue;
                }
                for (m, c) in multiply_coeffs(j, k, self.kind).iter().enumerate() {
                    out[m] += a * b * c;
                }
            }
        }
        Poly::new(self.kind, out)
    }
}

/// Coefficients `c_m` of `Q_j Q_k = sum_m c_m Q_m`, length `j + k + 1`.
pub fn multiply_coeffs(j: usize, k: usize, kind: BasisKind) -> Vec<f64> {
    let (j, k) = if j <= k { (j, k) } else { (k, j) };
    let mut c = vec![0.0; j + k + 1];
    match kind {
        BasisKind::Monomial => c[j + k] = 1.0,
        BasisKind::ChebyshevShifted => {
            c[j + k] += 0.5;
            c[k - j] += 0.5;
        }
        BasisKind::LegendreShifted => {
            let a = legendre_a(j + k);
            for r in 0..=j {
                let s = j + k - r;
                let w = a[r] * a[j - r] * a[k - r] / a[s];
                let m = j + k - 2 * r;
                c[m] = w * (2 * m + 1) as f64 / (2 * s + 1) as f64;
            }
        }
        BasisKind::Laguerre => {
            for (m, v) in laguerre_product(j, k).into_iter().enumerate() {
                c[m] = v;
            }
        }
    }
    c
}

/// `A_r = (2r - 1)!! / r!` for `r = 0..=upto`.
fn legendre_a(upto: usize) -> Vec<f64> {
    let mut a = vec![1.0; upto + 1];
    for r in 1..=upto {
        a[r] = a[r - 1] * (2 * r - 1) as f64 / r as f64;
    }
    a
}

fn binomials(upto: usize) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(upto + 1);
    for n in 0..=upto {
        let mut row = vec![BigInt::one(); n + 1];
        for i in 1..n {
            row[i] = &rows[n - 1][i - 1] + &rows[n - 1][i];
        }
        rows.push(row);
    }
    rows
}

// Laguerre linearization in exact integers:
// c_m = (-1)^m sum_K (-1)^K C(K,m) sum_{i+l=K} C(j,i) C(k,l) C(K,i).
fn laguerre_product(j: usize, k: usize) -> Vec<f64> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&(j, k)) {
        return v.as_ref().clone();
    }
    let top = j + k;
    let binom = binomials(top);
    let b: Vec<BigInt> = (0..=top)
        .map(|kk| {
            let mut s = BigInt::zero();
            for i in kk.saturating_sub(k)..=kk.min(j) {
                s += &binom[j][i] * &binom[k][kk - i] * &binom[kk][i];
            }
            s
        })
        .collect();
    let out: Vec<f64> = (0..=top)
        .map(|m| {
            let mut s = BigInt::zero();
            for (kk, bk) in b.iter().enumerate().skip(m) {
                let t = &binom[kk][m] * bk;
                if (kk + m) % 2 == 0 {
                    s += t;
                } else {
                    s -= t;
                }
            }
            let mag = s.abs().to_f64().unwrap_or(f64::INFINITY);
            if s.is_negative() {
                -mag
            } else {
                mag
            }
        })
        .collect();
    cache.lock().unwrap().insert((j, k), Arc::new(out.clone()));
    out
}

/// Matrix of multiplication by `x`, acting on coefficient vectors of length `size`.
/// The image of `Q_{size-1}` is truncated.
pub fn x_operator(kind: BasisKind, size: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(size, size);
    for m in 0..size {
        let (a, b, c) = kind.recurrence(m);
        if m + 1 < size {
            x[(m + 1, m)] += 1.0 / a;
        }
        x[(m, m)] -= b / a;
        if m > 0 {
            x[(m - 1, m)] += c / a;
        }
    }
    x
}

/// Dimensionless derivative generator: `d/dx` (exponential support) or
/// `x d/dx` (unit interval). Column `m` holds the image of `Q_m`.
pub fn derivative_generator(kind: BasisKind, size: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(size, size);
    match kind {
        BasisKind::Laguerre => {
            for m in 0..size {
                for k in 0..m {
                    g[(k, m)] = 1.0;
                }
            }
        }
        BasisKind::Monomial => {
            for m in 1..size {
                g[(m - 1, m)] = m as f64;
            }
        }
        BasisKind::LegendreShifted => {
            for m in 0..size {
                g[(m, m)] = m as f64;
                for k in 0..m {
                    g[(k, m)] = (2 * k + 1) as f64;
                }
            }
        }
        BasisKind::ChebyshevShifted => return derivative_generator_by_recurrence(kind, size),
    }
    g
}

/// Same generator derived from the three-term recurrence alone.
pub fn derivative_generator_by_recurrence(kind: BasisKind, size: usize) -> DMatrix<f64> {
    // One extra row absorbs the transient degree raise of the x operator.
    let big = size + 1;
    let x = x_operator(kind, big);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(size);
    cols.push(DVector::zeros(big));
    let mut q = vec![DVector::zeros(big)];
    q[0][0] = 1.0;
    for m in 0..size.saturating_sub(1) {
        let (a, b, c) = kind.recurrence(m);
        let mut next = (&x * &q[m]) * a + &q[m] * b;
        let mut g = (&x * &cols[m]) * a + &cols[m] * b;
        if kind.exponential_support() {
            g += &q[m] * a;
        } else {
            g += (&x * &q[m]) * a;
        }
        if m > 0 {
            next -= &q[m - 1] * c;
            g -= &cols[m - 1] * c;
        }
        q.push(next);
        cols.push(g);
    }
    DMatrix::from_fn(size, size, |i, j| cols[j][i])
}

/// Time-derivative operator under the weight: `D(P) = d(omega P)/dt / omega`.
pub fn time_derivative_matrix(kind: BasisKind, size: usize, tau: f64) -> DMatrix<f64> {
    unit_derivative(kind, size) / tau
}

// D at tau = 1; integer-valued for all kinds except Chebyshev.
fn unit_derivative(kind: BasisKind, size: usize) -> DMatrix<f64> {
    let mut d = derivative_generator(kind, size);
    for i in 0..size {
        d[(i, i)] += 1.0;
    }
    d
}

/// `ED` operator matrix: `D - 1/(2 tau)`, so that `D(psi phi) = ED(psi) phi + psi ED(phi)`.
pub fn ed_matrix(kind: BasisKind, size: usize, tau: f64) -> DMatrix<f64> {
    let mut e = time_derivative_matrix(kind, size, tau);
    for i in 0..size {
        e[(i, i)] -= 0.5 / tau;
    }
    e
}

/// `J = D^{-1}`: `int_{-inf}^t P omega dt' = omega(t) J(P)(x(t))`.
pub fn antiderivative_matrix(kind: BasisKind, size: usize, tau: f64) -> DMatrix<f64> {
    let d = unit_derivative(kind, size);
    let mut j = DMatrix::identity(size, size);
    // D is upper triangular.
    for col in 0..size {
        for i in (0..size).rev() {
            let mut s = j[(i, col)];
            for k in i + 1..size {
                s -= d[(i, k)] * j[(k, col)];
            }
            j[(i, col)] = s / d[(i, i)];
        }
    }
    j * tau
}

pub fn ed_transform(psi: &Poly, tau: f64) -> Poly {
    let e = ed_matrix(psi.kind, psi.coeffs.len(), tau);
    Poly::new(psi.kind, (e * DVector::from_column_slice(&psi.coeffs)).as_slice().to_vec())
}

pub fn j_transform(p: &Poly, tau: f64) -> Poly {
    let j = antiderivative_matrix(p.kind, p.coeffs.len(), tau);
    Poly::new(p.kind, (j * DVector::from_column_slice(&p.coeffs)).as_slice().to_vec())
}

/// Full-support time moments `<Q_m>` for `m < size`.
///
/// Obtained from `<D(Q_m)> = Q_m(x_0)`, which holds because the weight
/// vanishes at the far end of the support.
pub fn time_moments(kind: BasisKind, size: usize, tau: f64) -> Vec<f64> {
    let d = unit_derivative(kind, size);
    let q0 = kind.values_now(size);
    let mut g = vec![0.0; size];
    for m in 0..size {
        let mut s = q0[m];
        for k in 0..m {
            s -= d[(k, m)] * g[k];
        }
        g[m] = s / d[(m, m)];
    }
    g.into_iter().map(|v| v * tau).collect()
}

pub fn gram_matrix(params: MeasureParams, kind: BasisKind) -> Result<DMatrix<f64>> {
    params.validate(kind)?;
    let size = params.moment_len();
    let g = time_moments(kind, size, params.tau);
    let n = params.n;
    Ok(DMatrix::from_fn(n, n, |j, k| {
        multiply_coeffs(j, k, kind).iter().zip(&g).map(|(c, g)| c * g).sum()
    }))
}

/// Monomial coefficients of `Q_0 .. Q_{count-1}`; row `m` is `Q_m`.
pub fn monomial_coefficients(kind: BasisKind, count: usize) -> DMatrix<f64> {
    let mut rows = DMatrix::zeros(count, count);
    if count == 0 {
        return rows;
    }
    rows[(0, 0)] = 1.0;
    for m in 0..count - 1 {
        let (a, b, c) = kind.recurrence(m);
        for p in 0..=m {
            let v = rows[(m, p)];
            rows[(m + 1, p + 1)] += a * v;
            rows[(m + 1, p)] += b * v;
            if m > 0 {
                rows[(m + 1, p)] -= c * rows[(m - 1, p)];
            }
        }
    }
    rows
}

/// Linear map advancing moment vectors of length `size` by `s = delta/tau`.
///
/// Row `m` is the expansion of `Q_m(phi(x))` with `phi(x) = x - s` or
/// `phi(x) = x e^{-s}`, scaled by the weight factor `e^{-s}`.
pub fn shift_matrix(kind: BasisKind, size: usize, s: f64) -> Result<DMatrix<f64>> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::NegativeShift(s));
    }
    if s == 0.0 {
        return Ok(DMatrix::identity(size, size));
    }
    if s > 700.0 {
        return Ok(DMatrix::zeros(size, size));
    }
    let x = x_operator(kind, size);
    let phi = if kind.exponential_support() {
        x - DMatrix::identity(size, size) * s
    } else {
        x * (-s).exp()
    };
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(size);
    let mut e0 = DVector::zeros(size);
    e0[0] = 1.0;
    rows.push(e0);
    for m in 0..size.saturating_sub(1) {
        let (a, b, c) = kind.recurrence(m);
        let mut next = (&phi * &rows[m]) * a + &rows[m] * b;
        if m > 0 {
            next -= &rows[m - 1] * c;
        }
        rows.push(next);
    }
    let w = (-s).exp();
    Ok(DMatrix::from_fn(size, size, |i, j| rows[i][j] * w))
}

/// Measure, basis and every derived table needed per tick.
#[derive(Debug, Clone)]
pub struct Basis {
    pub kind: BasisKind,
    pub params: MeasureParams,
    /// Sparse multiplication table for `j, k < n`, indexed `j * n + k`.
    products: Vec<Vec<(usize, f64)>>,
    /// Time derivative `D` on polynomials of degree `< 2n - 1`.
    pub deriv: DMatrix<f64>,
    /// `ED = D - 1/(2 tau)`.
    pub ed: DMatrix<f64>,
    /// Antiderivative `J = D^{-1}`.
    pub antideriv: DMatrix<f64>,
    /// Full-support `<Q_m>`.
    pub time_moments: DVector<f64>,
    /// `Q_m(x_0)` for `m < 2n - 1`.
    pub q_now: DVector<f64>,
    pub gram: DMatrix<f64>,
    whitening: std::result::Result<Whitening, String>,
}

impl Basis {
    pub fn new(kind: BasisKind, params: MeasureParams) -> Result<Self> {
        params.validate(kind)?;
        let n = params.n;
        let size = params.moment_len();
        let mut products: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let c = multiply_coeffs(j, k, kind);
                products.push(c.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect());
            }
        }
        let tm = time_moments(kind, size, params.tau);
        let gram = DMatrix::from_fn(n, n, |j, k| {
            products[j * n + k].iter().map(|(m, c)| c * tm[*m]).sum()
        });
        Ok(Basis {
            kind,
            params,
            products,
            deriv: time_derivative_matrix(kind, size, params.tau),
            ed: ed_matrix(kind, size, params.tau),
            antideriv: antiderivative_matrix(kind, size, params.tau),
            time_moments: DVector::from_vec(tm),
            q_now: DVector::from_vec(kind.values_now(size)),
            whitening: Whitening::new(&gram).map_err(|e| e.to_string()),
            gram,
        })
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// Cached whitening of the Gram matrix.
    pub fn gram_whitening(&self) -> Result<&Whitening> {
        self.whitening.as_ref().map_err(|_| Error::NotPositiveDefinite)
    }

    pub fn tau(&self) -> f64 {
        self.params.tau
    }

    pub fn moment_len(&self) -> usize {
        self.params.moment_len()
    }

    /// Nonzero `(m, c_m^{jk})` pairs.
    pub fn product(&self, j: usize, k: usize) -> &[(usize, f64)] {
        &self.products[j * self.params.n + k]
    }

    /// `M_jk = sum_m c_m^{jk} moms_m`.
    pub fn matrix_from_moments(&self, moms: &DVector<f64>) -> DMatrix<f64> {
        let n = self.params.n;
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in j..n {
                let v: f64 = self.product(j, k).iter().map(|(m, c)| c * moms[*m]).sum();
                out[(j, k)] = v;
                out[(k, j)] = v;
            }
        }
        out
    }

    /// Coefficients of `psi^2` for a degree `< n` coefficient vector.
    pub fn square(&self, psi: &DVector<f64>) -> DVector<f64> {
        let n = self.params.n;
        let mut out = DVector::zeros(self.moment_len());
        for j in 0..n {
            for k in 0..n {
                let w = psi[j] * psi[k];
                if w == 0.0 {
                    continue;
                }
                for (m, c) in self.product(j, k) {
                    out[*m] += w * c;
                }
            }
        }
        out
    }

    /// `J` applied to a moment-length polynomial.
    pub fn j(&self, p: &DVector<f64>) -> DVector<f64> {
        &self.antideriv * p
    }

    /// Values `Q_m(x)` for `m < n`.
    pub fn eval_basis(&self, x: f64) -> DVector<f64> {
        DVector::from_vec(self.kind.eval_all(x, self.params.n))
    }

    /// `Q_m(x_0)` for `m < n`.
    pub fn q_now_n(&self) -> DVector<f64> {
        self.q_now.rows(0, self.params.n).into_owned()
    }

    /// `ED` restricted to degree `< n` polynomials.
    pub fn ed_n(&self) -> DMatrix<f64> {
        let n = self.params.n;
        self.ed.view((0, 0), (n, n)).into_owned()
    }

    pub fn shift(&self, delta: f64) -> Result<DMatrix<f64>> {
        if delta < 0.0 {
            return Err(Error::NegativeShift(delta));
        }
        shift_matrix(self.kind, self.moment_len(), delta / self.params.tau)
    }

    /// Time-measure moments of `f_now - f` from increment moments of `f`,
    /// using `<Q_m (f_now - f)> = <J(Q_m) df/dt>`.
    pub fn integrate_by_parts(&self, dmoms: &DVector<f64>) -> DVector<f64> {
        self.antideriv.transpose() * dmoms
    }
}

/// Small least-recently-used cache of shift matrices keyed on `delta/tau`.
#[derive(Debug, Clone)]
pub struct ShiftCache {
    cap: usize,
    entries: Vec<(u64, DMatrix<f64>)>,
}

impl ShiftCache {
    pub fn new(cap: usize) -> Self {
        ShiftCache { cap: cap.max(1), entries: Vec::new() }
    }

    pub fn get(&mut self, basis: &Basis, delta: f64) -> Result<&DMatrix<f64>> {
        if delta < 0.0 {
            return Err(Error::NegativeShift(delta));
        }
        let key = (delta / basis.tau()).to_bits();
        if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
            let e = self.entries.remove(pos);
            self.entries.push(e);
        } else {
            let m = basis.shift(delta)?;
            if self.entries.len() == self.cap {
                self.entries.remove(0);
            }
            self.entries.push((key, m));
        }
        Ok(&self.entries.last().unwrap().1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{integrate, rel_err};

    fn sample_x(kind: BasisKind, i: usize) -> f64 {
        let u = 0.07 + 0.11 * i as f64;
        if kind.exponential_support() {
            -3.0 * u
        } else {
            u.min(0.99)
        }
    }

    #[test]
    fn unit_product_is_unit() {
        for kind in BasisKind::ALL {
            assert_eq!(multiply_coeffs(0, 0, kind), vec![1.0]);
        }
    }

    #[test]
    fn chebyshev_product_halves() {
        let c = multiply_coeffs(3, 1, BasisKind::ChebyshevShifted);
        assert_eq!(c, vec![0.0, 0.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn legendre_square_matches_monomial_expansion() {
        // (2x-1)^2 = 4x^2 - 4x + 1
        let c = multiply_coeffs(1, 1, BasisKind::LegendreShifted);
        let mono = monomial_coefficients(BasisKind::LegendreShifted, 3);
        let mut expanded = [0.0; 3];
        for m in 0..3 {
            for p in 0..3 {
                expanded[p] += c[m] * mono[(m, p)];
            }
        }
        assert!((expanded[0] - 1.0).abs() < 1e-14);
        assert!((expanded[1] + 4.0).abs() < 1e-14);
        assert!((expanded[2] - 4.0).abs() < 1e-14);
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn products_hold_pointwise() {
        for kind in BasisKind::ALL {
            for j in 0..9 {
                for k in 0..9 {
                    let c = multiply_coeffs(j, k, kind);
                    assert_eq!(c, multiply_coeffs(k, j, kind));
                    for i in 0..8 {
                        let x = sample_x(kind, i);
                        let q = kind.eval_all(x, j + k + 1);
                        let rhs: f64 = c.iter().zip(&q).map(|(c, q)| c * q).sum();
                        let lhs = q[j] * q[k];
                        assert!(
                            (lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()),
                            "{kind} j={j} k={k} x={x}: {lhs} vs {rhs}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn laguerre_product_small_case() {
        // L_1^2 = 1 - 2 L_1 + 2 L_2
        assert_eq!(multiply_coeffs(1, 1, BasisKind::Laguerre), vec![1.0, -2.0, 2.0]);
    }

    #[test]
    fn ed_examples() {
        let one = Poly::constant(BasisKind::LegendreShifted, 1.0);
        assert_eq!(ed_transform(&one, 1.0).coeffs, vec![0.5]);
        // x = Q_1 - Q_0 in the Laguerre basis.
        let x = Poly::new(BasisKind::Laguerre, vec![-1.0, 1.0]);
        let e = ed_transform(&x, 1.0);
        for xv in [-2.0, -0.5, 0.0] {
            assert!((e.eval(xv) - (1.0 + xv / 2.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn j_examples() {
        let one = Poly::constant(BasisKind::LegendreShifted, 1.0);
        assert!((j_transform(&one, 1.0).eval(0.3) - 1.0).abs() < 1e-14);
        let x = Poly::new(BasisKind::Laguerre, vec![-1.0, 1.0]);
        let j = j_transform(&x, 1.0);
        for xv in [-2.0, -0.5, 0.0] {
            assert!((j.eval(xv) - (xv - 1.0)).abs() < 1e-14);
        }
    }

    fn five_point<F: Fn(f64) -> f64>(f: &F, t: f64) -> f64 {
        let h = 1e-3;
        (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
    }

    fn x_of_t(kind: BasisKind, t: f64, tau: f64) -> f64 {
        kind.x_at_age(-t, tau)
    }

    #[test]
    fn ed_product_rule_by_finite_differences() {
        let tau = 1.7;
        for kind in BasisKind::ALL {
            let psi = Poly::new(kind, vec![0.3, -0.7, 0.2, 0.5, -0.1]);
            let phi = Poly::new(kind, vec![-0.4, 0.1, 0.9, -0.3, 0.25]);
            let epsi = ed_transform(&psi, tau);
            let ephi = ed_transform(&phi, tau);
            let f = |t: f64| {
                let x = x_of_t(kind, t, tau);
                (t / tau).exp() * psi.eval(x) * phi.eval(x)
            };
            for i in 1..=10 {
                let t = -0.35 * i as f64;
                let fd = five_point(&f, t);
                let x = x_of_t(kind, t, tau);
                let w = (t / tau).exp();
                let an = w * (epsi.eval(x) * phi.eval(x) + psi.eval(x) * ephi.eval(x));
                assert!(
                    (fd - an).abs() <= 1e-8 * (1.0 + an.abs()),
                    "{kind} t={t}: fd {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn j_matches_quadrature() {
        let tau = 2.0;
        for kind in BasisKind::ALL {
            let p = Poly::new(kind, vec![0.4, -1.1, 0.6, 0.3, -0.2, 0.15]);
            let jp = j_transform(&p, tau);
            for i in 1..=5 {
                let t = -0.8 * i as f64;
                let integrand = |s: f64| (s / tau).exp() * p.eval(x_of_t(kind, s, tau));
                let lhs = integrate(integrand, t - 200.0 * tau, t, 4000);
                let rhs = (t / tau).exp() * jp.eval(x_of_t(kind, t, tau));
                assert!(rel_err(lhs, rhs) < 1e-9, "{kind} t={t}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn j_then_differentiate_recovers_integrand() {
        let tau = 0.9;
        for kind in BasisKind::ALL {
            let p = Poly::new(kind, vec![1.0, 0.5, -0.25, 0.125]);
            let jp = j_transform(&p, tau);
            let f = |t: f64| (t / tau).exp() * jp.eval(x_of_t(kind, t, tau));
            for i in 1..=6 {
                let t = -0.4 * i as f64;
                let fd = five_point(&f, t);
                let an = (t / tau).exp() * p.eval(x_of_t(kind, t, tau));
                assert!((fd - an).abs() <= 1e-8 * (1.0 + an.abs()), "{kind}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn generator_recurrence_agrees_with_closed_forms() {
        for kind in [BasisKind::Laguerre, BasisKind::LegendreShifted, BasisKind::Monomial] {
            let a = derivative_generator(kind, 12);
            let b = derivative_generator_by_recurrence(kind, 12);
            assert!((a - b).abs().max() < 1e-9, "{kind}");
        }
    }

    #[test]
    fn analytic_gram() {
        let p = MeasureParams::new(3.5, 12);
        let g = gram_matrix(p, BasisKind::LegendreShifted).unwrap();
        let l = gram_matrix(p, BasisKind::Laguerre).unwrap();
        for j in 0..12 {
            for k in 0..12 {
                let want = if j == k { 3.5 / (2 * j + 1) as f64 } else { 0.0 };
                assert!((g[(j, k)] - want).abs() < 1e-10);
                let want = if j == k { 3.5 } else { 0.0 };
                assert!((l[(j, k)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gram_matches_quadrature() {
        let tau = 1.3;
        for kind in BasisKind::ALL {
            let n = 6;
            let g = gram_matrix(MeasureParams::new(tau, n), kind).unwrap();
            for j in 0..n {
                for k in 0..n {
                    let f = |t: f64| {
                        let q = kind.eval_all(x_of_t(kind, t, tau), n);
                        (t / tau).exp() * q[j] * q[k]
                    };
                    let quad = integrate(f, -120.0 * tau, 0.0, 3000);
                    assert!((quad - g[(j, k)]).abs() < 1e-9 * (1.0 + quad.abs()), "{kind} {j} {k}");
                }
            }
        }
    }

    #[test]
    fn monomial_and_laguerre_grams_agree_after_conversion() {
        let n = 7;
        let p = MeasureParams::new(2.0, n);
        let gm = gram_matrix(p, BasisKind::Monomial).unwrap();
        let gl = gram_matrix(p, BasisKind::Laguerre).unwrap();
        let c = monomial_coefficients(BasisKind::Laguerre, n);
        let converted = &c * &gm * c.transpose();
        assert!((converted - gl).abs().max() < 1e-9);
    }

    #[test]
    fn gram_is_spd_up_to_bound() {
        for kind in [BasisKind::Laguerre, BasisKind::LegendreShifted, BasisKind::ChebyshevShifted] {
            let g = gram_matrix(MeasureParams::new(1.0, kind.max_dim().min(60)), kind).unwrap();
            assert!(g.cholesky().is_some(), "{kind}");
        }
    }

    #[test]
    fn shift_identity_and_rejects_negative() {
        let b = Basis::new(BasisKind::Laguerre, MeasureParams::new(1.0, 4)).unwrap();
        assert_eq!(b.shift(0.0).unwrap(), DMatrix::identity(7, 7));
        assert!(b.shift(-1.0).is_err());
    }

    #[test]
    fn legendre_shift_by_ln2() {
        let s = shift_matrix(BasisKind::LegendreShifted, 2, std::f64::consts::LN_2).unwrap();
        let (a0, a1) = (0.8, -0.3);
        let v = &s * DVector::from_vec(vec![a0, a1]);
        // Q_1(x/2) = (Q_1 - 1)/2, then the weight factor 1/2.
        assert!((v[0] - a0 / 2.0).abs() < 1e-15);
        assert!((v[1] - (a1 - a0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn shift_matches_direct_substitution() {
        for kind in BasisKind::ALL {
            let size = 9;
            let s = 0.37;
            let m = shift_matrix(kind, size, s).unwrap();
            for i in 0..5 {
                let x = sample_x(kind, i);
                let y = if kind.exponential_support() { x - s } else { x * (-s).exp() };
                let qy = kind.eval_all(y, size);
                let qx = DVector::from_vec(kind.eval_all(x, size));
                let via = &m * qx;
                for r in 0..size {
                    let want = qy[r] * (-s).exp();
                    assert!((via[r] - want).abs() < 1e-11 * (1.0 + want.abs()), "{kind} row {r}");
                }
            }
        }
    }

    #[test]
    fn kinds_parse_from_measure_names() {
        assert_eq!(
            "CommonlyUsedMomentsLegendreShifted".parse::<BasisKind>().unwrap(),
            BasisKind::LegendreShifted
        );
        assert_eq!("CommonlyUsedMomentsMonomials".parse::<BasisKind>().unwrap(), BasisKind::Monomial);
        assert_eq!("Laguerre".parse::<BasisKind>().unwrap(), BasisKind::Laguerre);
        assert!("Hermite".parse::<BasisKind>().is_err());
    }
}
