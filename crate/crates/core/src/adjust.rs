//! Sign projectors of `dI/dt`, the flow-adjusted projector and
//! double-integration states. Outputs are experimental.

use nalgebra::{DMatrix, DVector};

use crate::basis::Basis;
use crate::density::spur;
use crate::error::Result;
use crate::idpdt::PsiFrame;
use crate::indicators::FlowData;
use crate::operators::ddt_operator;
use crate::spectral::{solve_gev, GevKind, SpectralState};

/// Mixed-form projector `beta diag(w) beta^T G`, which acts on Q-basis coefficients.
pub fn mixed_projector(gram: &DMatrix<f64>, beta: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let scaled = DMatrix::from_fn(beta.nrows(), beta.ncols(), |r, c| beta[(r, c)] * weights[c]);
    scaled * beta.transpose() * gram
}

/// `Spur||f|Pi|rho||` for Q-basis `f`, `rho` and a mixed-form `Pi`.
pub fn spur_projected(f: &DMatrix<f64>, pi: &DMatrix<f64>, rho: &DMatrix<f64>) -> f64 {
    (f * pi * rho).trace()
}

#[derive(Debug, Clone)]
pub struct ProjectionPair {
    /// Eigenvalues of `||dI/dt|| beta = lambda_dI ||1|| beta`.
    pub lambdas: DVector<f64>,
    pub beta: DMatrix<f64>,
    pub plus: DMatrix<f64>,
    /// Includes `lambda_dI = 0`.
    pub minus: DMatrix<f64>,
}

impl ProjectionPair {
    pub fn positive_count(&self) -> usize {
        self.lambdas.iter().filter(|&&l| l > 0.0).count()
    }
}

/// Projectors on the `dI/dt > 0` and `dI/dt <= 0` subspaces with boundary `I_0^F`.
pub fn didt_projectors(basis: &Basis, i_matrix: &DMatrix<f64>, i0f: f64) -> Result<ProjectionPair> {
    let di = ddt_operator(basis, i_matrix, i0f);
    let spec = solve_gev(&di, &basis.gram, GevKind::DIdtVsOne)?;
    let pos: Vec<f64> = spec.lambdas.iter().map(|&l| (l > 0.0) as u8 as f64).collect();
    let neg: Vec<f64> = pos.iter().map(|w| 1.0 - w).collect();
    Ok(ProjectionPair {
        plus: mixed_projector(&basis.gram, &spec.alphas, &pos),
        minus: mixed_projector(&basis.gram, &spec.alphas, &neg),
        lambdas: spec.lambdas,
        beta: spec.alphas,
    })
}

/// `Pi` with eigenvalues `1 - r/lambda^[i]` on the flow eigenstates, `r = V_IH/T_IH`.
#[derive(Debug, Clone)]
pub struct FlowAdjusted {
    pub r: f64,
    pub pi: DMatrix<f64>,
    pub plus: DMatrix<f64>,
    pub minus: DMatrix<f64>,
    pub p_plus: Option<f64>,
    pub p_minus: Option<f64>,
    pub pnl: f64,
    /// `Spur||I|Pi|rho_JIH||`, zero by construction.
    pub constraint: f64,
}

pub fn flow_adjusted_pi(
    basis: &Basis,
    spec: &SpectralState,
    data: &FlowData,
    rho: &DMatrix<f64>,
    v_ih: f64,
    t_ih: f64,
) -> Option<FlowAdjusted> {
    if !(t_ih > 0.0) {
        return None;
    }
    let r = v_ih / t_ih;
    let w: Vec<f64> = spec.lambdas.iter().map(|&l| 1.0 - r / l).collect();
    let wp: Vec<f64> = spec.lambdas.iter().zip(&w).map(|(&l, &x)| if l > r { x } else { 0.0 }).collect();
    let wm: Vec<f64> = spec.lambdas.iter().zip(&w).map(|(&l, &x)| if l > r { 0.0 } else { x }).collect();
    let pi = mixed_projector(&basis.gram, &spec.alphas, &w);
    let plus = mixed_projector(&basis.gram, &spec.alphas, &wp);
    let minus = mixed_projector(&basis.gram, &spec.alphas, &wm);
    let price = |p: &DMatrix<f64>, any: bool| {
        let den = spur_projected(&data.i, p, rho);
        (any && den != 0.0).then(|| spur_projected(&data.pi, p, rho) / den)
    };
    let has_p = spec.lambdas.iter().any(|&l| l > r);
    let has_m = spec.lambdas.iter().any(|&l| l <= r);
    Some(FlowAdjusted {
        r,
        p_plus: price(&plus, has_p),
        p_minus: price(&minus, has_m),
        pnl: -spur_projected(&data.pi, &pi, rho),
        constraint: spur_projected(&data.i, &pi, rho),
        pi,
        plus,
        minus,
    })
}

/// `V~ = (I_0^F - V_IH/T_IH) T_IH` and `P* = -delta_jj / V~`, where
/// `delta_jj` is the advancing difference taken in `rho_JJIH`.
pub fn double_integration_pstar(i0f: f64, v_ih: f64, t_ih: f64, delta_jj: f64, eps: f64) -> (f64, Option<f64>) {
    let v_tilde = i0f * t_ih - v_ih;
    if v_tilde.abs() < eps * i0f.abs() * t_ih.abs() || t_ih <= 0.0 {
        return (v_tilde, None);
    }
    (v_tilde, Some(-delta_jj / v_tilde))
}

/// `||V_last - V|| phi = lambda ||t_now - t|| phi`.
pub fn vt_state(basis: &Basis, data: &FlowData) -> Result<SpectralState> {
    let a = -&data.v;
    let age = basis.matrix_from_moments(&basis.integrate_by_parts(&basis.time_moments));
    let mut s = solve_gev(&a, &age, GevKind::VVsT)?;
    s.orient(&basis.q_now_n());
    Ok(s)
}

/// Largest `V/T` eigenvalue.
pub fn lambda_vt(basis: &Basis, data: &FlowData) -> Option<f64> {
    vt_state(basis, data).ok().map(|s| s.lambdas.max())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Experimental {
    pub lambda_vt: Option<f64>,
    pub didt_positive: Option<f64>,
    pub p_didt_plus: Option<f64>,
    pub p_didt_minus: Option<f64>,
    pub p_plus: Option<f64>,
    pub p_minus: Option<f64>,
    pub pnl: Option<f64>,
    pub v_tilde: Option<f64>,
    pub p_star: Option<f64>,
}

impl Experimental {
    pub fn fields(&self) -> Vec<(String, Option<f64>)> {
        [
            ("x.lambda_VT", self.lambda_vt),
            ("x.dIdt_positive", self.didt_positive),
            ("x.P_dIplus", self.p_didt_plus),
            ("x.P_dIminus", self.p_didt_minus),
            ("x.P_plus", self.p_plus),
            ("x.P_minus", self.p_minus),
            ("x.PnL", self.pnl),
            ("x.V_tilde", self.v_tilde),
            ("x.P_star", self.p_star),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

pub(crate) fn experimental(
    basis: &Basis,
    data: &FlowData,
    frame: &PsiFrame,
    rho: &DMatrix<f64>,
    rho_hat: &DMatrix<f64>,
    delta_jj: Option<f64>,
    i0f: f64,
) -> Experimental {
    let mut x = Experimental { lambda_vt: lambda_vt(basis, data), ..Default::default() };
    let t_ih = rho_hat.trace();
    let v_ih = spur(&data.i, rho);
    if let Ok(pp) = didt_projectors(basis, &data.i, i0f) {
        x.didt_positive = Some(pp.positive_count() as f64);
        let split = |p: &DMatrix<f64>| {
            let den = spur_projected(&data.i, p, rho);
            (den != 0.0).then(|| spur_projected(&data.pi, p, rho) / den)
        };
        x.p_didt_plus = split(&pp.plus);
        x.p_didt_minus = split(&pp.minus);
    }
    if let Some(fa) = flow_adjusted_pi(basis, frame.spec, data, rho, v_ih, t_ih) {
        x.p_plus = fa.p_plus;
        x.p_minus = fa.p_minus;
        x.pnl = Some(fa.pnl);
    }
    if let Some(d) = delta_jj {
        let (vt, ps) = double_integration_pstar(i0f, v_ih, t_ih, d, 1e-9);
        x.v_tilde = Some(vt);
        x.p_star = ps;
    }
    x
}
