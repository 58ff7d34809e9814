//! Per-tick scalar indicators of one flow: moving averages, spike-state
//! observables, impact from the future and the equilibrium prices.

use std::sync::Mutex;

use nalgebra::DMatrix;

use crate::adjust::{self, Experimental};
use crate::basis::Basis;
use crate::density::{since_state, spur, MinNormSolver, RhoMethod};
use crate::idpdt::{IdpdtVariant, PsiFrame};
use crate::moments::{Flow, MomentSet, Observable};
use crate::spectral::{max_flow_state, solve_flow_gev_from, MaxFlowState, SpectralState};

/// Q-basis matrices of one flow at one tick.
#[derive(Debug, Clone)]
pub struct FlowData {
    pub flow: Flow,
    /// `<Q_j|I|Q_k>`.
    pub i: DMatrix<f64>,
    /// `<Q_j|pI|Q_k>`.
    pub pi: DMatrix<f64>,
    /// `pi` less `p_ref i`.
    pub pi_dev: DMatrix<f64>,
    pub p_ref: f64,
    /// `<Q_j|(V - V_last) dp/dt|Q_k>`.
    pub vdp: DMatrix<f64>,
    /// `<Q_j|(t_now - t) I|Q_k>`.
    pub ti: DMatrix<f64>,
    /// `<Q_j|dp/dt|Q_k>` from sampled increments.
    pub dp: DMatrix<f64>,
    /// `<Q_j|p|Q_k>` reconstructed by integration by parts.
    pub p: DMatrix<f64>,
    /// `<Q_j|V - V_last|Q_k>` reconstructed by integration by parts.
    pub v: DMatrix<f64>,
    pub i0: f64,
    pub pi0: f64,
    pub ti0: f64,
    pub p_last: f64,
    pub total: f64,
    pub ticks: u64,
}

impl FlowData {
    pub fn from_moments(m: &MomentSet, flow: Flow) -> Self {
        let b = m.basis();
        let i = m.get(Observable::I(flow));
        let pi = m.get(Observable::PI(flow));
        let ti = m.get(Observable::TI(flow));
        FlowData {
            flow,
            i0: i[0],
            pi0: pi[0],
            ti0: ti[0],
            i: b.matrix_from_moments(&i),
            pi: b.matrix_from_moments(&pi),
            pi_dev: b.matrix_from_moments(&m.pi_centered(flow)),
            p_ref: m.p_ref(),
            vdp: b.matrix_from_moments(&m.get(Observable::VDp(flow))),
            ti: b.matrix_from_moments(&ti),
            dp: b.matrix_from_moments(&m.get(Observable::Dp)),
            p: b.matrix_from_moments(&m.p_moments()),
            v: b.matrix_from_moments(&m.v_moments(flow)),
            p_last: m.p_last(),
            total: m.total(flow),
            ticks: m.ticks(),
        }
    }
}

/// Options shared by every frame of a run.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub variant: IdpdtVariant,
    /// Emit every variant's `Delta_I` side by side.
    pub compare: bool,
    /// `wH^2` at or above this marks the directional signals as no-info.
    pub threshold: f64,
    /// Eigenvalues below `lambda_floor * lambda^[IH]` disable `1/lambda` variants.
    pub lambda_floor: f64,
    /// Ticks before frames are ready; `None` means `2n`.
    pub warmup: Option<u64>,
    pub rho_method: RhoMethod,
    pub experimental: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            variant: IdpdtVariant::default(),
            compare: false,
            threshold: 0.1,
            lambda_floor: 1e-8,
            warmup: None,
            rho_method: RhoMethod::default(),
            experimental: false,
        }
    }
}

/// All indicators of one flow at one tick. `None` fields print as NA.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndicatorFrame {
    pub ready: bool,
    /// `P^tau = <Q_0 pI>/<Q_0 I>`.
    pub pv_average: Option<f64>,
    /// `T^tau = <Q_0 (t_now - t) I>/<Q_0 I>`.
    pub tv_average: Option<f64>,
    pub total_volume: f64,
    /// `P^[IH]`.
    pub pv_m: Option<f64>,
    /// `T^[IH]`.
    pub tv_m: Option<f64>,
    /// `<psi_0|psi^[IH]>^2`.
    pub wh_squared: Option<f64>,
    /// `lambda^[IH] = I_0^F`.
    pub lambda_ih: Option<f64>,
    /// `<psi_0|I|psi_0>`.
    pub i0: Option<f64>,
    /// `dI^F = I_0^F - I_0`.
    pub d_i_future: Option<f64>,
    /// Directional signals should be ignored.
    pub no_info: Option<bool>,
    pub delta_vd: Option<f64>,
    /// Lagging equilibrium price.
    pub peqv_from_m: Option<f64>,
    /// `Spur||rho_JIH||`, the time since the spike.
    pub t_ih: Option<f64>,
    /// `Spur||I|rho_JIH||`, the volume since the spike.
    pub v_ih: Option<f64>,
    pub vt_ratio: Option<f64>,
    /// `Spur||d(pI)/dt|rho_JIH||`.
    pub spur_dpi: Option<f64>,
    /// `I_0^F` used in the boundary terms.
    pub i0f: Option<f64>,
    pub i0f_fallback: bool,
    pub delta_i: Option<f64>,
    pub peq_i: Option<f64>,
    pub delta_v: Option<f64>,
    pub peq_v: Option<f64>,
    pub delta_t: Option<f64>,
    pub peq_t: Option<f64>,
    /// `Delta_I` per variant in comparison mode.
    pub variants: Vec<(IdpdtVariant, Option<f64>)>,
    pub experimental: Option<Experimental>,
}

impl IndicatorFrame {
    /// Output fields in a stable order; the flow prefix is added by the writer.
    pub fn fields(&self) -> Vec<(String, Option<f64>)> {
        let b = |v: Option<bool>| v.map(|x| x as u8 as f64);
        let mut out: Vec<(String, Option<f64>)> = vec![
            ("ready".into(), Some(self.ready as u8 as f64)),
            ("pv_average".into(), self.pv_average),
            ("Tv_average".into(), self.tv_average),
            ("totalVolume".into(), Some(self.total_volume)),
            ("pv_M".into(), self.pv_m),
            ("Tv_M".into(), self.tv_m),
            ("I.wH_squared".into(), self.wh_squared),
            ("lambda_IH".into(), self.lambda_ih),
            ("I0".into(), self.i0),
            ("dI_F".into(), self.d_i_future),
            ("no_info".into(), b(self.no_info)),
            ("Delta_VD".into(), self.delta_vd),
            ("PEQV_from_M".into(), self.peqv_from_m),
            ("T_IH".into(), self.t_ih),
            ("V_IH".into(), self.v_ih),
            ("VT_ratio".into(), self.vt_ratio),
            ("Spur_dpI".into(), self.spur_dpi),
            ("I0F".into(), self.i0f),
            ("Delta_I".into(), self.delta_i),
            ("PEQ_I".into(), self.peq_i),
            ("Delta_V".into(), self.delta_v),
            ("PEQ_V".into(), self.peq_v),
            ("Delta_T".into(), self.delta_t),
            ("PEQ_T".into(), self.peq_t),
        ];
        for (v, d) in &self.variants {
            out.push((format!("Delta_I.{}", v.name()), *d));
        }
        if let Some(x) = &self.experimental {
            out.extend(x.fields());
        }
        out
    }

    /// Names only, for headers; matches `fields` of a frame built with the
    /// same configuration.
    pub fn field_names(cfg: &AnalysisConfig) -> Vec<String> {
        IndicatorFrame::empty(cfg).fields().into_iter().map(|(n, _)| n).collect()
    }

    /// A not-ready frame with every optional block present but unset.
    pub fn empty(cfg: &AnalysisConfig) -> Self {
        let mut f = IndicatorFrame::default();
        if cfg.compare {
            f.variants = IdpdtVariant::ALL.iter().map(|v| (*v, None)).collect();
        }
        if cfg.experimental {
            f.experimental = Some(Experimental::default());
        }
        f
    }
}

/// Reusable per-run state for frame computation.
pub struct Analyzer {
    pub cfg: AnalysisConfig,
    solver: Option<MinNormSolver>,
    /// Last whitened eigenvectors per flow, used as the next Jacobi start.
    warm: Mutex<[Option<DMatrix<f64>>; 2]>,
}

impl Analyzer {
    pub fn new(basis: &Basis, cfg: AnalysisConfig) -> crate::Result<Self> {
        let solver = match cfg.rho_method {
            RhoMethod::MinNorm => Some(MinNormSolver::new(basis)?),
            RhoMethod::Lyapunov => None,
        };
        Ok(Analyzer { cfg, solver, warm: Mutex::new([None, None]) })
    }

    fn warmup(&self, basis: &Basis) -> u64 {
        self.cfg.warmup.unwrap_or(2 * basis.n() as u64)
    }

    /// Computes the frame of `flow` from the current moments.
    pub fn analyze(&self, m: &MomentSet, flow: Flow) -> IndicatorFrame {
        let data = FlowData::from_moments(m, flow);
        self.analyze_data(m.basis(), &data)
    }

    pub fn analyze_data(&self, basis: &Basis, data: &FlowData) -> IndicatorFrame {
        let mut fr = IndicatorFrame { total_volume: data.total, ..IndicatorFrame::empty(&self.cfg) };
        if data.i0 > 0.0 {
            fr.pv_average = Some(data.pi0 / data.i0);
            fr.tv_average = Some(data.ti0 / data.i0);
        }
        if data.ticks < self.warmup(basis) || data.i0 <= 0.0 {
            return fr;
        }
        let slot = (data.flow == Flow::Surrogate) as usize;
        let guess = self.warm.lock().map(|w| w[slot].clone()).unwrap_or(None);
        let Ok(spec) = solve_flow_gev_from(basis, &data.i, guess.as_ref()) else {
            return fr;
        };
        if let Ok(mut w) = self.warm.lock() {
            w[slot] = Some(spec.rotation.clone());
        }
        let q_now = basis.q_now_n();
        let mf = max_flow_state(&spec, &q_now);
        if !(mf.lambda > 0.0) || !mf.lambda.is_finite() {
            return fr;
        }
        fr.ready = true;
        self.fill(basis, data, &spec, &mf, &mut fr);
        fr
    }

    fn fill(&self, basis: &Basis, data: &FlowData, spec: &SpectralState, mf: &MaxFlowState, fr: &mut IndicatorFrame) {
        let lam = mf.lambda;
        let p_last = data.p_last;
        let psi = &mf.psi;
        let quad = |m: &DMatrix<f64>| psi.dot(&(m * psi));

        let pv_m = quad(&data.pi) / lam;
        fr.pv_m = Some(pv_m);
        fr.tv_m = Some(quad(&data.ti) / lam);
        fr.wh_squared = Some(mf.projection_now);
        fr.lambda_ih = Some(lam);
        fr.i0 = Some(mf.i0);
        fr.d_i_future = Some(mf.d_i_future());
        fr.no_info = Some(mf.projection_now >= self.cfg.threshold);
        let delta_vd = quad(&data.vdp);
        fr.delta_vd = Some(delta_vd);
        fr.peqv_from_m = Some(pv_m - delta_vd / lam);

        let Ok((rho1, rho2)) = since_state(basis, psi, self.cfg.rho_method, self.solver.as_ref()) else {
            return;
        };
        let t_ih = spur(&basis.gram, &rho1.rho);
        let v_ih = spur(&data.i, &rho1.rho);
        fr.t_ih = Some(t_ih);
        fr.v_ih = Some(v_ih);
        if t_ih > 0.0 {
            fr.vt_ratio = Some(v_ih / t_ih / lam);
        }

        let frame = PsiFrame::new(basis, spec, data, lam);
        let rho_hat = frame.rho_hat(&rho1.rho);
        let inverse_ok = frame.inverse_ok(self.cfg.lambda_floor);

        let sandwich = IdpdtVariant::SandwichDtPoverI;
        let adjusted = (inverse_ok && (self.cfg.variant == sandwich || self.cfg.compare)).then(|| {
            let lo = adjust::lambda_vt(basis, data).unwrap_or(0.0);
            frame.adjust_i0f(&rho_hat, lo, 10.0 * lam)
        });
        let i0f_of = |v: IdpdtVariant| match (&adjusted, v == sandwich) {
            (Some(a), true) => a.value,
            _ => lam,
        };
        let i0f = i0f_of(self.cfg.variant);
        if self.cfg.variant == sandwich {
            fr.i0f_fallback = adjusted.as_ref().map_or(true, |a| a.fallback);
        }
        fr.i0f = Some(i0f);

        let dpi = frame.dpi_dt(i0f);
        let s_dpi = spur(&dpi, &rho_hat);
        fr.spur_dpi = Some(s_dpi);

        let usable = |v: IdpdtVariant| inverse_ok || !v.needs_inverse();
        let delta_of = |v: IdpdtVariant, r: &DMatrix<f64>| {
            let f = i0f_of(v);
            let vm = frame.variant_matrix(v, f);
            if f == i0f {
                frame.delta(&vm, &dpi, r)
            } else {
                frame.delta(&vm, &frame.dpi_dt(f), r)
            }
        };

        if usable(self.cfg.variant) {
            let delta_i = delta_of(self.cfg.variant, &rho_hat);
            // kinetic part 2 Spur||I dp/dt|| recovered from the difference
            let two_kin = delta_i + s_dpi;
            let s_vddt = spur(&frame.ddt(&frame.to_psi(&data.vdp), 0.0), &rho_hat);
            let delta_v = two_kin - s_vddt;
            let delta_t = delta_i + delta_v;
            fr.delta_i = Some(delta_i);
            fr.peq_i = Some(p_last - delta_i / lam);
            fr.delta_v = Some(delta_v);
            fr.peq_v = Some(p_last - delta_v / lam);
            fr.delta_t = Some(delta_t);
            fr.peq_t = Some(p_last - delta_t / lam);
        }

        if self.cfg.compare {
            fr.variants = IdpdtVariant::ALL
                .iter()
                .map(|&v| (v, usable(v).then(|| delta_of(v, &rho_hat))))
                .collect();
        }

        if self.cfg.experimental {
            let rho2_hat = frame.rho_hat(&rho2.rho);
            let delta_jj = usable(self.cfg.variant).then(|| delta_of(self.cfg.variant, &rho2_hat));
            fr.experimental = Some(adjust::experimental(basis, data, &frame, &rho1.rho, &rho_hat, delta_jj, i0f));
        }
    }
}
