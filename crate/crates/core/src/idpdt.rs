//! Approximations of the operator `||I dp/dt||` and of the difference
//! `||I dp/dt - p dI/dt||`, all evaluated in the eigenbasis of `||I||`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::density::spur;
use crate::error::{Error, Result};
use crate::indicators::FlowData;
use crate::operators::{ddt_operator_psi, ed_in_psi, q_to_psi};
use crate::spectral::SpectralState;
use crate::basis::Basis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdpdtVariant {
    /// `sqrt(lambda_j lambda_k) DP_jk`.
    SqrtSandwich,
    /// `||DP|| . ||I||`.
    RightProduct,
    /// `(lambda_j lambda_k)^(beta/2) DP_jk`.
    PowerBeta(f64),
    /// `||dp/dt|| . ||I||` from sampled price increments.
    DirectProduct,
    /// `||d(pI)/dt|| - ||p|| . ||dI/dt||`.
    PdIResidual,
    /// `||d/dt (V dp/dt)|| - ||V|| . ||d2p/dt2||`; diagnostic only.
    VddtResidual,
    /// `||d/dt (p/I)||`, scaled by `lambda^2` to stand in for the difference.
    DtPoverI,
    /// `||I|| . ||d/dt (p/I)|| . ||I||`, the difference directly.
    SandwichDtPoverI,
}

impl IdpdtVariant {
    pub const ALL: [IdpdtVariant; 8] = [
        IdpdtVariant::SqrtSandwich,
        IdpdtVariant::RightProduct,
        IdpdtVariant::PowerBeta(0.5),
        IdpdtVariant::DirectProduct,
        IdpdtVariant::PdIResidual,
        IdpdtVariant::VddtResidual,
        IdpdtVariant::DtPoverI,
        IdpdtVariant::SandwichDtPoverI,
    ];

    pub fn hermitian(self) -> bool {
        matches!(
            self,
            IdpdtVariant::SqrtSandwich
                | IdpdtVariant::PowerBeta(_)
                | IdpdtVariant::DtPoverI
                | IdpdtVariant::SandwichDtPoverI
        )
    }

    /// Whether the `I_0^F` boundary value enters the matrix.
    pub fn needs_boundary(self) -> bool {
        matches!(self, IdpdtVariant::PdIResidual | IdpdtVariant::DtPoverI | IdpdtVariant::SandwichDtPoverI)
    }

    /// Whether `1/lambda` factors appear.
    pub fn needs_inverse(self) -> bool {
        !matches!(self, IdpdtVariant::DirectProduct | IdpdtVariant::PdIResidual | IdpdtVariant::VddtResidual)
    }

    pub fn diagnostic_only(self) -> bool {
        self == IdpdtVariant::VddtResidual
    }

    pub fn name(self) -> String {
        match self {
            IdpdtVariant::SqrtSandwich => "SqrtSandwich".into(),
            IdpdtVariant::RightProduct => "RightProduct".into(),
            IdpdtVariant::PowerBeta(b) => format!("PowerBeta({b})"),
            IdpdtVariant::DirectProduct => "DirectProduct".into(),
            IdpdtVariant::PdIResidual => "PdIResidual".into(),
            IdpdtVariant::VddtResidual => "VddtResidual".into(),
            IdpdtVariant::DtPoverI => "DtPoverI".into(),
            IdpdtVariant::SandwichDtPoverI => "Sandwich_DtPoverI".into(),
        }
    }
}

impl Default for IdpdtVariant {
    fn default() -> Self {
        IdpdtVariant::RightProduct
    }
}

impl fmt::Display for IdpdtVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for IdpdtVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', '-'], "");
        if let Some(rest) = key.strip_prefix("powerbeta") {
            let b = rest.trim_matches(|c| c == '(' || c == ')' || c == '=' || c == ':');
            let beta = if b.is_empty() { 0.5 } else { b.parse().map_err(|_| Error::Config(format!("bad beta in `{s}`")))? };
            return Ok(IdpdtVariant::PowerBeta(beta));
        }
        Ok(match key.as_str() {
            "sqrtsandwich" | "dpwithitwomultiplies" => IdpdtVariant::SqrtSandwich,
            "rightproduct" | "dpwithi" => IdpdtVariant::RightProduct,
            "directproduct" | "withdpi" => IdpdtVariant::DirectProduct,
            "pdiresidual" | "dpiwithp" => IdpdtVariant::PdIResidual,
            "vddtresidual" | "withpdi" => IdpdtVariant::VddtResidual,
            "dtpoveri" => IdpdtVariant::DtPoverI,
            "sandwichdtpoveri" | "i2dtpdivi" => IdpdtVariant::SandwichDtPoverI,
            _ => return Err(Error::Config(format!("unknown idpdt variant `{s}`"))),
        })
    }
}

/// What a variant matrix represents.
#[derive(Debug, Clone)]
pub enum VariantMatrix {
    /// `||I dp/dt||`.
    Kinetic(DMatrix<f64>),
    /// `||I dp/dt - p dI/dt||` times a scalar.
    Difference(DMatrix<f64>, f64),
}

/// Everything about one frame expressed in the eigenbasis of `||I||`.
pub struct PsiFrame<'a> {
    pub basis: &'a Basis,
    pub spec: &'a SpectralState,
    pub data: &'a FlowData,
    /// `ED` in the eigenbasis.
    pub ed: DMatrix<f64>,
    /// `psi^[i](x_0)`.
    pub q: DVector<f64>,
    pub i_hat: DMatrix<f64>,
    pub pi_hat: DMatrix<f64>,
    /// `<ED(psi_j)|pI|psi_k>`.
    pub x_pi: DMatrix<f64>,
    pub lambda_ih: f64,
}

impl<'a> PsiFrame<'a> {
    pub fn new(basis: &'a Basis, spec: &'a SpectralState, data: &'a FlowData, lambda_ih: f64) -> Self {
        let ed = ed_in_psi(basis, spec);
        let q = spec.values_at(&basis.q_now_n());
        let i_hat = q_to_psi(&data.i, spec);
        let pi_hat = q_to_psi(&data.pi, spec);
        let x_pi = ed.transpose() * &pi_hat;
        PsiFrame { basis, spec, data, ed, q, i_hat, pi_hat, x_pi, lambda_ih }
    }

    pub fn to_psi(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        q_to_psi(m, self.spec)
    }

    /// Density matrix in the eigenbasis: `alpha^T G rho G alpha`.
    pub fn rho_hat(&self, rho: &DMatrix<f64>) -> DMatrix<f64> {
        let ga = &self.basis.gram * &self.spec.alphas;
        ga.transpose() * rho * ga
    }

    pub fn ddt(&self, f_hat: &DMatrix<f64>, f_now: f64) -> DMatrix<f64> {
        ddt_operator_psi(f_hat, &self.ed, &self.q, f_now)
    }

    fn lambdas(&self) -> &DVector<f64> {
        &self.spec.lambdas
    }

    /// `||d(pI)/dt||` with boundary `P_last I_0^F`.
    pub fn dpi_dt(&self, i0f: f64) -> DMatrix<f64> {
        self.ddt(&self.pi_hat, self.data.p_last * i0f)
    }

    /// `DP_jk` of the `(P_last - p) I` moments.
    pub fn dp_core(&self) -> DMatrix<f64> {
        let d = self.data;
        let w = &self.i_hat * (d.p_last - d.p_ref) - self.to_psi(&d.pi_dev);
        let x = self.ed.transpose() * w;
        let l = self.lambdas();
        let n = l.len();
        DMatrix::from_fn(n, n, |j, k| x[(j, k)] / l[k] + x[(k, j)] / l[j])
    }

    /// Smallest eigenvalue is safely positive for `1/lambda` factors.
    pub fn inverse_ok(&self, floor_rel: f64) -> bool {
        self.lambda_ih > 0.0 && self.lambdas().min() > floor_rel * self.lambda_ih
    }

    pub fn variant_matrix(&self, v: IdpdtVariant, i0f: f64) -> VariantMatrix {
        let l = self.lambdas();
        let n = l.len();
        let p = self.data.p_last;
        match v {
            IdpdtVariant::SqrtSandwich => self.power_beta(1.0),
            IdpdtVariant::PowerBeta(b) => self.power_beta(b),
            IdpdtVariant::RightProduct => VariantMatrix::Kinetic(self.dp_core() * &self.i_hat),
            IdpdtVariant::DirectProduct => VariantMatrix::Kinetic(self.to_psi(&self.data.dp) * &self.i_hat),
            IdpdtVariant::PdIResidual => {
                let p_hat = self.to_psi(&self.data.p);
                let di = self.ddt(&self.i_hat, i0f);
                VariantMatrix::Kinetic(self.dpi_dt(i0f) - p_hat * di)
            }
            IdpdtVariant::VddtResidual => {
                let vdp = self.ddt(&self.to_psi(&self.data.vdp), 0.0);
                let dp_hat = self.to_psi(&self.data.dp);
                let qq = self.q.dot(&self.q);
                let slope_now = if qq > 0.0 { self.q.dot(&(&dp_hat * &self.q)) / qq } else { 0.0 };
                let d2p = self.ddt(&dp_hat, slope_now);
                VariantMatrix::Kinetic(vdp - self.to_psi(&self.data.v) * d2p)
            }
            IdpdtVariant::DtPoverI => {
                let x = &self.x_pi;
                let m = DMatrix::from_fn(n, n, |j, k| {
                    p / i0f * self.q[j] * self.q[k] - x[(j, k)] / (l[k] * l[k]) - x[(k, j)] / (l[j] * l[j])
                });
                VariantMatrix::Difference(m, self.lambda_ih * self.lambda_ih)
            }
            IdpdtVariant::SandwichDtPoverI => VariantMatrix::Difference(self.sandwich(p, &self.x_pi, i0f), 1.0),
        }
    }

    fn power_beta(&self, beta: f64) -> VariantMatrix {
        let l = self.lambdas();
        let dp = self.dp_core();
        let n = l.len();
        VariantMatrix::Kinetic(DMatrix::from_fn(n, n, |j, k| (l[j] * l[k]).powf(0.5 * beta) * dp[(j, k)]))
    }

    fn sandwich(&self, p: f64, x: &DMatrix<f64>, i0f: f64) -> DMatrix<f64> {
        let l = self.lambdas();
        let n = l.len();
        DMatrix::from_fn(n, n, |j, k| {
            p / i0f * l[j] * l[k] * self.q[j] * self.q[k] - l[j] / l[k] * x[(j, k)] - l[k] / l[j] * x[(k, j)]
        })
    }

    /// `2 Spur(I dp/dt) - Spur(d(pI)/dt)` in the state `rho_hat`.
    pub fn delta(&self, vm: &VariantMatrix, dpi: &DMatrix<f64>, rho_hat: &DMatrix<f64>) -> f64 {
        match vm {
            VariantMatrix::Kinetic(k) => 2.0 * spur(k, rho_hat) - spur(dpi, rho_hat),
            VariantMatrix::Difference(d, scale) => scale * spur(d, rho_hat),
        }
    }

    /// `I_0^F` making the constant-price sandwich matrix spur to zero in
    /// `rho_hat`. The condition is affine in `1/I_0^F`, so the root is closed form.
    pub fn adjust_i0f(&self, rho_hat: &DMatrix<f64>, lo: f64, hi: f64) -> AdjustedI0F {
        let l = self.lambdas();
        let x_i = self.ed.transpose() * &self.i_hat;
        let n = l.len();
        let boundary = DMatrix::from_fn(n, n, |j, k| l[j] * l[k] * self.q[j] * self.q[k]);
        let rest = DMatrix::from_fn(n, n, |j, k| l[j] / l[k] * x_i[(j, k)] + l[k] / l[j] * x_i[(k, j)]);
        let a = spur(&boundary, rho_hat);
        let b = spur(&rest, rho_hat);
        let root = a / b;
        let residual = |v: f64| a / v - b;
        if b != 0.0 && root.is_finite() && root >= lo && root <= hi {
            AdjustedI0F { value: root, fallback: false, residual: residual(root) }
        } else {
            AdjustedI0F { value: self.lambda_ih, fallback: true, residual: residual(self.lambda_ih) }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdjustedI0F {
    pub value: f64,
    /// True when no root was found in the bracket and `lambda^[IH]` was used.
    pub fallback: bool,
    /// Spur of the constant-price sandwich matrix at `value`, per unit price.
    pub residual: f64,
}
