//! Time integration of `d_t x = (mu c_K(r) - H) nu` in graph form,
//! `d_t rho = (mu c_K(rho) - H) v`, with the quermassintegral-fixing global
//! term `mu = int H sigma_l / int c_K sigma_l`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{record, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::integrals::quermass_from_field;
use crate::origin::{choose_origin, origin_report, shift_decision, OriginReport, ShiftContext, ShiftPolicy, MIN_SHIFT};
use crate::spaceform::SpaceForm;
use crate::surface::{binomial, curvature, CurvatureField, Profile};

/// Graph steepness beyond which the radial representation is considered lost.
pub const V_MAX: f64 = 50.0;
/// Smallest admissible time step.
pub const DT_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Feedback {
    pub enabled: bool,
    /// Fraction of the conservation defect removed per step; `(0, 2)` is stable.
    pub gain: f64,
}

impl Default for Feedback {
    fn default() -> Self {
        Feedback { enabled: true, gain: 1.0 }
    }
}

/// Stop once the hypersurface is round to these tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub omega: f64,
    pub traceless: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Convergence { omega: 1e-6, traceless: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub k: f64,
    pub n: usize,
    pub ell: usize,
    /// Grid cells on `[0, pi]`.
    pub cells: usize,
    pub cfl: f64,
    pub t_end: f64,
    /// Time between recorded samples.
    pub sample_dt: f64,
    pub max_steps: Option<u64>,
    pub feedback: Feedback,
    pub shift_policy: ShiftPolicy,
    pub converge: Option<Convergence>,
    /// Relative conservation defect that is flagged in the trajectory.
    pub conservation_tol: f64,
    /// Steps stop once `min kappa` falls to this value.
    pub convexity_margin: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 1.0,
            n: 2,
            ell: 0,
            cells: 256,
            cfl: 0.4,
            t_end: 1.0,
            sample_dt: 0.05,
            max_steps: None,
            feedback: Feedback::default(),
            shift_policy: ShiftPolicy::default(),
            converge: Some(Convergence::default()),
            conservation_tol: 1e-6,
            convexity_margin: 0.0,
        }
    }
}

impl RunConfig {
    pub fn space_form(&self) -> Result<SpaceForm> {
        SpaceForm::new(self.k, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        self.space_form()?;
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.ell > self.n {
            return bad("ell must lie in 0..=n");
        }
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return bad("cfl must lie in (0, 0.5]");
        }
        if !(self.t_end > 0.0) || !(self.sample_dt > 0.0) {
            return bad("t_end and sample_dt must be positive");
        }
        if !(self.feedback.gain >= 0.0) {
            return bad("feedback gain must be non-negative");
        }
        if let ShiftPolicy::FixedInterval { tau0 } = self.shift_policy {
            if !(tau0 > 0.0) {
                return bad("tau0 must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub profile: Profile,
    pub t: f64,
    pub ell: usize,
    pub w_target: f64,
    /// `(time, axial shift)` for every origin move so far.
    pub origin_log: Vec<(f64, f64)>,
    pub mu_last: f64,
}

impl FlowState {
    pub fn new(profile: Profile, ell: usize) -> Result<Self> {
        let sf = profile.space_form();
        let cf = curvature(&profile)?;
        let w_target = quermass_from_field(sf, &cf).w[ell];
        let mu_last = global_term(&cf, ell)?;
        Ok(FlowState { profile, t: 0.0, ell, w_target, origin_log: Vec::new(), mu_last })
    }
}

/// `mu = int H sigma_l dV / int c_K sigma_l dV`.
pub fn global_term(cf: &CurvatureField, ell: usize) -> Result<f64> {
    let (num, den) = global_parts(cf, ell);
    if !(den > 0.0) {
        return Err(Error::EquatorCrossing(den));
    }
    Ok(num / den)
}

fn global_parts(cf: &CurvatureField, ell: usize) -> (f64, f64) {
    let sig = &cf.sigma[ell];
    let hs: Vec<f64> = cf.mean.iter().zip(sig).map(|(h, s)| h * s).collect();
    let cs: Vec<f64> = cf.c_k.iter().zip(sig).map(|(c, s)| c * s).collect();
    (cf.integrate(&hs), cf.integrate(&cs))
}

/// Normal speed `mu c_K - H` and the value of `mu` used.
pub fn normal_speed(cf: &CurvatureField, ell: usize) -> Result<(f64, Vec<f64>)> {
    let mu = global_term(cf, ell)?;
    Ok((mu, cf.c_k.iter().zip(&cf.mean).map(|(c, h)| mu * c - h).collect()))
}

/// Agreement of the evolution equations of `H` and `c_K` with finite-difference
/// time derivatives at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionCheck {
    /// `max |d_t H - rhs| / max |rhs|`.
    pub mean_rel: f64,
    /// `max |d_t c_K - rhs| / max |rhs|`.
    pub ck_rel: f64,
}

/// Surface Laplacian of a rotationally symmetric function from `f'`, `f''`
/// and the graph data `rho, rho', rho''` at angle `phi`.
fn laplacian(sf: SpaceForm, phi: f64, (r, r1, r2): (f64, f64, f64), (f1, f2): (f64, f64)) -> f64 {
    let n = sf.n() as f64;
    let (s, c) = sf.sc(r);
    let v = (1.0 + r1 * r1 / (s * s)).sqrt();
    let b2 = 1.0 / (s * s * v * v);
    if phi.sin().abs() < 1e-12 {
        return n * b2 * f2;
    }
    let dv = (r1 * r2 / (s * s) - r1 * r1 * r1 * c / (s * s * s)) / v;
    let dsv = (c * r1 * v + s * dv) / (s * v);
    b2 * (f2 + f1 * ((n - 1.0) * (c * r1 / s + phi.cos() / phi.sin()) - dsv))
}

/// Compares central differences of `H` and `c_K` at fixed polar angle, taken
/// from two Euler micro-steps `rho +- dt d_t rho`, with
/// `d_t H = Lap H + H(|A|^2 + nK) - mu(c_K |A|^2 + K u H)` and
/// `d_t c_K = Lap c_K + K c_K (n - mu u)`. Both are statements about normal
/// motion; the graph moves points at fixed angle, which adds the transport term
/// `d_t rho rho' f' / (s^2 v^2)`.
pub fn evolution_check(p: &Profile, ell: usize, dt: f64) -> Result<EvolutionCheck> {
    let sf = p.space_form();
    let (n, k) = (sf.n() as f64, sf.k());
    let cf = curvature(p)?;
    let (mu, speed) = normal_speed(&cf, ell)?;
    let rho_dot: Vec<f64> = speed.iter().zip(&cf.v).map(|(f, v)| f * v).collect();
    let moved = |sign: f64| -> Result<CurvatureField> {
        let rho = p.rho().iter().zip(&rho_dot).map(|(r, d)| r + sign * dt * d).collect();
        curvature(&Profile::new(sf, rho)?)
    };
    let (plus, minus) = (moved(1.0)?, moved(-1.0)?);
    let geo = p.interpolant();
    let mean = crate::quad::CosineSeries::new(&cf.mean);
    let ck = crate::quad::CosineSeries::new(&cf.c_k);
    let (mut err_h, mut max_h, mut err_c, mut max_c) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    #[allow(clippy::needless_range_loop)]
    for j in 0..cf.len() {
        let phi = cf.phi[j];
        let g = geo.eval3(phi);
        let (_, h1, h2) = mean.eval3(phi);
        let (_, c1, c2) = ck.eval3(phi);
        let transport = rho_dot[j] * g.1 / (sf.s(g.0).powi(2) * cf.v[j] * cf.v[j]);
        let (hh, c, u) = (cf.mean[j], cf.c_k[j], cf.u[j]);
        let a2 = cf.kappa_profile[j].powi(2) + (n - 1.0) * cf.kappa_rot[j].powi(2);
        let rhs_h = laplacian(sf, phi, g, (h1, h2)) + hh * (a2 + n * k) - mu * (c * a2 + k * u * hh) + transport * h1;
        let rhs_c = laplacian(sf, phi, g, (c1, c2)) + k * c * (n - mu * u) + transport * c1;
        let fd_h = (plus.mean[j] - minus.mean[j]) / (2.0 * dt);
        let fd_c = (plus.c_k[j] - minus.c_k[j]) / (2.0 * dt);
        err_h = err_h.max((fd_h - rhs_h).abs());
        max_h = max_h.max(rhs_h.abs());
        err_c = err_c.max((fd_c - rhs_c).abs());
        max_c = max_c.max(rhs_c.abs());
    }
    Ok(EvolutionCheck { mean_rel: err_h / max_h, ck_rel: err_c / max_c })
}

/// Explicit stability limit: `cfl h^2 min s_K(rho)^2 / n`.
pub fn stable_dt(p: &Profile, cfl: f64) -> f64 {
    let sf = p.space_form();
    // s_K is increasing (K <= 0) or concave (K > 0) on the admissible range,
    // so its minimum over the samples sits at the smallest or largest radius
    let s_min = sf.s(p.min_rho()).min(sf.s(p.max_rho()));
    cfl * p.h() * p.h() * s_min * s_min / sf.n() as f64
}

/// Per-step correction of `mu` that removes `gain` times the conservation defect.
fn feedback_shift(cf: &CurvatureField, sf: SpaceForm, ell: usize, w_target: f64, gain: f64, dt: f64) -> f64 {
    let n = sf.n();
    let w = quermass_from_field(sf, cf).w[ell];
    let coef = (n + 1 - ell) as f64 / ((n + 1) as f64 * binomial(n, ell));
    let (_, den) = global_parts(cf, ell);
    -gain * (w - w_target) / (dt * coef * den)
}

/// Grid-only factors of the graph equation, reused by every stage evaluation.
#[derive(Debug, Clone)]
pub struct Kernel {
    sf: SpaceForm,
    cells: usize,
    h: f64,
    /// `cot(phi)`; unused at the poles.
    cot: Vec<f64>,
    /// Simpson weight times `omega_{n-1} sin^{n-1}(phi)`.
    wsin: Vec<f64>,
    binom_a: f64,
    binom_b: f64,
    ell: usize,
    c: Vec<f64>,
    h_mean: Vec<f64>,
    v: Vec<f64>,
    /// `rho` with two reflected samples beyond each pole.
    padded: Vec<f64>,
}

/// What one stage evaluation learned besides the velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageInfo {
    pub mu: f64,
    pub min_kappa: f64,
    pub max_v: f64,
}

impl Kernel {
    pub fn new(sf: SpaceForm, cells: usize, ell: usize) -> Self {
        let n = sf.n();
        let h = std::f64::consts::PI / cells as f64;
        let omega = SpaceForm::unit_sphere_area(n - 1);
        let w = crate::quad::simpson_weights(cells, h);
        let phi = |j: usize| j as f64 * h;
        let cot = (0..=cells)
            .map(|j| if j == 0 || j == cells { 0.0 } else { phi(j).cos() / phi(j).sin() })
            .collect();
        let wsin = (0..=cells).map(|j| w[j] * omega * phi(j).sin().powi(n as i32 - 1)).collect();
        let binom_a = binomial(n - 1, ell);
        let binom_b = if ell >= 1 { binomial(n - 1, ell - 1) } else { 0.0 };
        Kernel {
            sf,
            cells,
            h,
            cot,
            wsin,
            binom_a,
            binom_b,
            ell,
            c: vec![0.0; cells + 1],
            h_mean: vec![0.0; cells + 1],
            v: vec![0.0; cells + 1],
            padded: vec![0.0; cells + 5],
        }
    }

    /// Graph velocity `(mu c_K - H) v` of the samples `rho` into `vel`, with
    /// `mu` shifted by `dmu`. Same formulas as [`curvature`], without the
    /// bookkeeping. Breakdown of the graph becomes `NeedsRecenter(t)`.
    pub fn velocity(&mut self, rho: &[f64], dmu: f64, t: f64, vel: &mut [f64]) -> Result<StageInfo> {
        let n = self.cells;
        let nd = self.sf.n();
        let ell = self.ell;
        // even reflection across both poles
        self.padded[2..n + 3].copy_from_slice(rho);
        self.padded[0] = rho[2];
        self.padded[1] = rho[1];
        self.padded[n + 3] = rho[n - 1];
        self.padded[n + 4] = rho[n - 2];
        let d1 = 1.0 / (12.0 * self.h);
        let d2 = d1 / self.h;
        let rot = (nd - 1) as f64;
        let (mut num, mut den) = (0.0, 0.0);
        let mut min_kappa = f64::INFINITY;
        let mut max_v: f64 = 0.0;
        for (j, w) in self.padded.windows(5).enumerate() {
            let (m2, m1, r, p1, p2) = (w[0], w[1], w[2], w[3], w[4]);
            let pole = j == 0 || j == n;
            let r1 = if pole { 0.0 } else { ((m2 - p2) + 8.0 * (p1 - m1)) * d1 };
            let r2 = (16.0 * ((m1 - r) + (p1 - r)) - ((m2 - r) + (p2 - r))) * d2;
            let (s, c) = self.sf.sc(r);
            if !(s > 0.0) || !r2.is_finite() {
                return Err(Error::NeedsRecenter(t));
            }
            let inv_s = 1.0 / s;
            let q = r1 * inv_s;
            let v2 = 1.0 + q * q;
            let v = v2.sqrt();
            let inv_v = 1.0 / v;
            let r1_cot = if pole { r2 } else { r1 * self.cot[j] };
            let kp = (s * c + 2.0 * c * r1 * q - r2) * inv_s * inv_s * inv_v / v2;
            let kr = (c - r1_cot * inv_s) * inv_s * inv_v;
            let hm = kp + rot * kr;
            let sigma = match ell {
                0 => 1.0,
                _ => self.binom_a * kr.powi(ell as i32) + kp * self.binom_b * kr.powi(ell as i32 - 1),
            };
            let dw = self.wsin[j] * s.powi(nd as i32) * v * sigma;
            num += hm * dw;
            den += c * dw;
            min_kappa = min_kappa.min(kp.min(kr));
            max_v = max_v.max(v);
            self.c[j] = c;
            self.h_mean[j] = hm;
            self.v[j] = v;
        }
        if max_v > V_MAX {
            return Err(Error::NeedsRecenter(t));
        }
        if !(den > 0.0) {
            return Err(Error::EquatorCrossing(den));
        }
        let mu = num / den + dmu;
        for (j, w) in vel.iter_mut().enumerate().take(n + 1) {
            *w = (mu * self.c[j] - self.h_mean[j]) * self.v[j];
        }
        Ok(StageInfo { mu, min_kappa, max_v })
    }
}

/// One classical RK4 step of size `dt` with `mu` recomputed at every stage.
/// Refuses to start from a state that is not strictly convex.
pub fn step_with(s: &FlowState, kernel: &mut Kernel, cfg: &RunConfig, dt: f64) -> Result<FlowState> {
    let p = &s.profile;
    let sf = p.space_form();
    let dmu = if cfg.feedback.enabled && cfg.feedback.gain > 0.0 {
        feedback_shift(&curvature(p)?, sf, s.ell, s.w_target, cfg.feedback.gain, dt)
    } else {
        0.0
    };
    let base = p.rho();
    let len = base.len();
    let mut k = [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]];
    let mut stage = vec![0.0; len];
    let first = kernel.velocity(base, dmu, s.t, &mut k[0])?;
    if !(first.min_kappa > cfg.convexity_margin) {
        return Err(Error::StopNonconvex { t: s.t, min_kappa: first.min_kappa });
    }
    for (i, a) in [(1, 0.5 * dt), (2, 0.5 * dt), (3, dt)] {
        let (prev, rest) = k.split_at_mut(i);
        for j in 0..len {
            stage[j] = base[j] + a * prev[i - 1][j];
        }
        kernel.velocity(&stage, dmu, s.t, &mut rest[0])?;
    }
    let rho: Vec<f64> = (0..len)
        .map(|j| base[j] + dt / 6.0 * (k[0][j] + 2.0 * (k[1][j] + k[2][j]) + k[3][j]))
        .collect();
    let t = s.t + dt;
    let next = p.with_rho(rho).map_err(|_| Error::NeedsRecenter(t))?;
    Ok(FlowState {
        profile: next,
        t,
        ell: s.ell,
        w_target: s.w_target,
        origin_log: s.origin_log.clone(),
        mu_last: first.mu,
    })
}

/// One step at the stability limit.
pub fn step(s: &FlowState, cfg: &RunConfig) -> Result<FlowState> {
    let dt = stable_dt(&s.profile, cfg.cfl);
    if dt < DT_MIN {
        return Err(Error::StiffBlowup { t: s.t, dt });
    }
    let p = &s.profile;
    let mut kernel = Kernel::new(p.space_form(), p.cells(), s.ell);
    step_with(s, &mut kernel, cfg, dt)
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Terminal {
    Converged,
    TEnd,
    MaxSteps,
    StopNonconvex { min_kappa: f64 },
    NeedsRecenter,
    EquatorCrossing { denominator: f64 },
    StiffBlowup { dt: f64 },
    RecenterFailed { reason: String },
}

impl Terminal {
    pub fn name(&self) -> &'static str {
        match self {
            Terminal::Converged => "converged",
            Terminal::TEnd => "t-end",
            Terminal::MaxSteps => "max-steps",
            Terminal::StopNonconvex { .. } => "stop-nonconvex",
            Terminal::NeedsRecenter => "needs-recenter",
            Terminal::EquatorCrossing { .. } => "equator-crossing",
            Terminal::StiffBlowup { .. } => "stiff-blowup",
            Terminal::RecenterFailed { .. } => "recenter-failed",
        }
    }

    /// Process exit status for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Terminal::Converged | Terminal::TEnd | Terminal::MaxSteps => 0,
            Terminal::StopNonconvex { .. } => 3,
            Terminal::StiffBlowup { .. } => 4,
            Terminal::NeedsRecenter | Terminal::EquatorCrossing { .. } | Terminal::RecenterFailed { .. } => 5,
        }
    }

    pub fn is_success(&self) -> bool {
        self.exit_code() == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Sample {
    #[serde(flatten)]
    pub record: DiagnosticsRecord,
    pub event: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<ShiftRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftRecord {
    pub t: f64,
    pub shift: f64,
    /// Constants about the new origin (only for `K > 0`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<OriginReport>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: RunConfig,
    pub samples: Vec<Sample>,
    pub shifts: Vec<ShiftRecord>,
    pub terminal: Terminal,
    pub final_profile: Profile,
    pub steps: u64,
    pub w_target: f64,
    /// Largest relative conservation defect seen at sample times.
    pub max_conservation_defect: f64,
    /// Radii and constants about the initial origin (only for `K > 0`).
    pub initial_report: Option<OriginReport>,
}

impl Trajectory {
    pub fn records(&self) -> Vec<DiagnosticsRecord> {
        self.samples.iter().map(|s| s.record.clone()).collect()
    }

    pub fn last(&self) -> &DiagnosticsRecord {
        &self.samples.last().expect("a trajectory always has a first sample").record
    }
}

fn terminal_of(e: Error) -> Result<Terminal> {
    Ok(match e {
        Error::StopNonconvex { min_kappa, .. } => Terminal::StopNonconvex { min_kappa },
        Error::NeedsRecenter(_) => Terminal::NeedsRecenter,
        Error::EquatorCrossing(d) => Terminal::EquatorCrossing { denominator: d },
        Error::StiffBlowup { dt, .. } => Terminal::StiffBlowup { dt },
        other => return Err(other),
    })
}

/// Integrates from `p0` until `t_end`, convergence, `max_steps` or a terminal event.
pub fn run(p0: &Profile, cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let sf = p0.space_form();
    if sf.k() != cfg.k || sf.n() != cfg.n || p0.cells() != cfg.cells {
        return Err(Error::Config("profile does not match the run configuration".into()));
    }
    let mut cf = curvature(p0)?;
    if !(cf.min_kappa() > cfg.convexity_margin) {
        return Err(Error::StopNonconvex { t: 0.0, min_kappa: cf.min_kappa() });
    }
    let mut state = FlowState::new(p0.clone(), cfg.ell)?;
    let initial_report = if sf.k() > 0.0 { origin_report(p0, cfg.ell).ok() } else { None };
    let mut traj = Trajectory {
        config: cfg.clone(),
        samples: Vec::new(),
        shifts: Vec::new(),
        terminal: Terminal::TEnd,
        final_profile: p0.clone(),
        steps: 0,
        w_target: state.w_target,
        max_conservation_defect: 0.0,
        initial_report,
    };
    let mut kernel = Kernel::new(sf, cfg.cells, cfg.ell);
    let mut fresh = true;
    let mut next_sample = 0.0;
    let mut last_shift = 0.0;
    let mut sample_index = 0u64;

    let terminal = loop {
        if state.t >= next_sample {
            if !fresh {
                match curvature(&state.profile) {
                    Ok(f) => cf = f,
                    Err(_) => break Terminal::NeedsRecenter,
                }
                fresh = true;
            }
            let rec = match sample_record(&state, &cf, &mut traj) {
                Ok(r) => r,
                Err(e) => break terminal_of(e)?,
            };
            let converged = cfg.converge.is_some_and(|c| rec.omega < c.omega && rec.traceless_sup < c.traceless);
            let omega = rec.omega;
            traj.samples.push(Sample { record: rec, event: "sample".into(), origin: None });
            if converged {
                break Terminal::Converged;
            }
            if state.t >= cfg.t_end {
                break Terminal::TEnd;
            }
            let ctx = ShiftContext {
                profile: &state.profile,
                field: &cf,
                t: state.t,
                last_shift,
                omega,
                ell: cfg.ell,
            };
            match shift_decision(ctx, &cfg.shift_policy) {
                Ok(Some(shift)) => {
                    if let Err(e) = apply_shift(&mut state, &mut cf, &mut traj, shift) {
                        break Terminal::RecenterFailed { reason: e.to_string() };
                    }
                    last_shift = state.t;
                }
                Ok(None) => {
                    // a fixed-interval tick that found nothing to move still counts
                    if let ShiftPolicy::FixedInterval { tau0 } = cfg.shift_policy {
                        if state.t - last_shift >= tau0 - 1e-12 {
                            last_shift = state.t;
                        }
                    }
                }
                Err(e) => break Terminal::RecenterFailed { reason: e.to_string() },
            }
            sample_index += 1;
            next_sample = (sample_index as f64 * cfg.sample_dt).min(cfg.t_end);
        }
        if cfg.max_steps.is_some_and(|m| traj.steps >= m) {
            break Terminal::MaxSteps;
        }
        let dt_stable = stable_dt(&state.profile, cfg.cfl);
        if dt_stable < DT_MIN {
            break Terminal::StiffBlowup { dt: dt_stable };
        }
        let landing = next_sample - state.t <= dt_stable;
        let dt = if landing { next_sample - state.t } else { dt_stable };
        match step_with(&state, &mut kernel, cfg, dt) {
            Ok(mut next) => {
                if landing {
                    next.t = next_sample;
                }
                state = next;
                fresh = false;
                traj.steps += 1;
            }
            Err(e) => {
                let recoverable = matches!(e, Error::NeedsRecenter(_) | Error::EquatorCrossing(_));
                if recoverable && cfg.shift_policy != ShiftPolicy::Off && state.t > last_shift {
                    // move the origin and retry from the last good state
                    let moved = choose_origin(&state.profile, cfg.ell)
                        .and_then(|c| {
                            if c.shift.abs() < MIN_SHIFT {
                                Err(Error::RecenterFailure("origin is already optimal".into()))
                            } else {
                                Ok(c.shift)
                            }
                        })
                        .and_then(|shift| apply_shift(&mut state, &mut cf, &mut traj, shift));
                    match moved {
                        Ok(()) => {
                            last_shift = state.t;
                            fresh = true;
                            continue;
                        }
                        Err(err) => break Terminal::RecenterFailed { reason: err.to_string() },
                    }
                }
                break terminal_of(e)?;
            }
        }
    };

    // close with a sample carrying the terminal event; a state whose field
    // cannot be evaluated leaves the event on the last good sample
    let last_t = traj.samples.last().map(|s| s.record.t);
    if last_t != Some(state.t) {
        let closing = if fresh { Ok(cf) } else { curvature(&state.profile) }
            .and_then(|f| sample_record(&state, &f, &mut traj));
        if let Ok(rec) = closing {
            traj.samples.push(Sample { record: rec, event: String::new(), origin: None });
        }
    }
    traj.samples.last_mut().expect("the initial sample always exists").event = terminal.name().into();
    traj.terminal = terminal;
    traj.final_profile = state.profile;
    Ok(traj)
}

fn sample_record(state: &FlowState, cf: &CurvatureField, traj: &mut Trajectory) -> Result<DiagnosticsRecord> {
    let sf = state.profile.space_form();
    let w = quermass_from_field(sf, cf).w[state.ell];
    let defect = ((w - state.w_target) / state.w_target).abs();
    traj.max_conservation_defect = traj.max_conservation_defect.max(defect);
    record(&state.profile, cf, state.t, global_term(cf, state.ell)?, w)
}

fn apply_shift(state: &mut FlowState, cf: &mut CurvatureField, traj: &mut Trajectory, shift: f64) -> Result<()> {
    let moved = state.profile.recenter(shift)?;
    let ncf = curvature(&moved)?;
    global_term(&ncf, state.ell)?;
    let sf = moved.space_form();
    let report = if sf.k() > 0.0 { origin_report(&moved, state.ell).ok() } else { None };
    state.profile = moved;
    state.origin_log.push((state.t, shift));
    *cf = ncf;
    let shift_record = ShiftRecord { t: state.t, shift, report };
    let rec = sample_record(state, cf, traj)?;
    traj.samples.push(Sample { record: rec, event: "shift".into(), origin: Some(shift_record.clone()) });
    traj.shifts.push(shift_record);
    Ok(())
}

/// The fixed per-sample field set of the trajectory stream.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct NdjsonLine<'a> {
    t: f64,
    mu: f64,
    #[serde(rename = "W_ell")]
    w_ell: f64,
    omega: f64,
    min_kappa: f64,
    max_kappa: f64,
    max_rho: f64,
    min_u: f64,
    traceless_sup: f64,
    sphere_fit_radius: f64,
    sphere_fit_residual: f64,
    event: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    origin: Option<&'a ShiftRecord>,
}

#[derive(Serialize)]
struct Header<'a> {
    config: &'a RunConfig,
    feedback: bool,
    #[serde(rename = "W_target")]
    w_target: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    origin: Option<&'a OriginReport>,
}

/// Writes a header line followed by one JSON object per sample.
pub fn write_ndjson(traj: &Trajectory, out: &mut impl Write) -> Result<()> {
    write_ndjson_with(traj, None, out)
}

/// As [`write_ndjson`], with `spec` (the run description that produced the
/// trajectory) embedded in the header.
pub fn write_ndjson_with(traj: &Trajectory, spec: Option<serde_json::Value>, out: &mut impl Write) -> Result<()> {
    let header = Header {
        config: &traj.config,
        feedback: traj.config.feedback.enabled && traj.config.feedback.gain > 0.0,
        w_target: traj.w_target,
        origin: traj.initial_report.as_ref(),
    };
    let mut header = serde_json::to_value(header).map_err(|e| Error::Config(e.to_string()))?;
    if let (Some(spec), Some(map)) = (spec, header.as_object_mut()) {
        map.insert("spec".into(), spec);
    }
    let line = serde_json::json!({ "header": header });
    writeln!(out, "{line}")?;
    for s in &traj.samples {
        let r = &s.record;
        let line = NdjsonLine {
            t: r.t,
            mu: r.mu,
            w_ell: r.w_ell,
            omega: r.omega,
            min_kappa: r.min_kappa,
            max_kappa: r.max_kappa,
            max_rho: r.max_rho,
            min_u: r.min_u,
            traceless_sup: r.traceless_sup,
            sphere_fit_radius: r.sphere_fit_radius,
            sphere_fit_residual: r.sphere_fit_residual,
            event: &s.event,
            origin: s.origin.as_ref(),
        };
        let text = serde_json::to_string(&line).map_err(|e| Error::Config(e.to_string()))?;
        writeln!(out, "{text}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evolution_equations_match_finite_differences() {
        use rand::SeedableRng;
        let sf = SpaceForm::new(1.0, 2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for ell in 0..=2 {
            let p = Profile::random_convex(sf, 256, &mut rng).unwrap();
            let e = evolution_check(&p, ell, 1e-6).unwrap();
            assert!(e.mean_rel < 1e-3 && e.ck_rel < 1e-3, "{e:?}");
        }
    }

    fn s3() -> SpaceForm {
        SpaceForm::new(1.0, 2).unwrap()
    }

    #[test]
    fn sphere_global_term_cancels() {
        for ell in 0..=2 {
            let cf = curvature(&Profile::sphere(s3(), 64, 0.8).unwrap()).unwrap();
            let (_, f) = normal_speed(&cf, ell).unwrap();
            assert!(f.iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn euclidean_global_term_is_average_mean_curvature() {
        let sf = SpaceForm::new(0.0, 2).unwrap();
        let p = Profile::from_fn(sf, 128, |f| 1.0 + 0.1 * (2.0 * f).cos()).unwrap();
        let cf = curvature(&p).unwrap();
        let avg = cf.integrate(&cf.mean) / cf.area();
        assert!((global_term(&cf, 0).unwrap() - avg).abs() < 1e-12);
    }

    #[test]
    fn sphere_is_stationary() {
        let p = Profile::sphere(s3(), 64, 0.8).unwrap();
        let cfg = RunConfig { cells: 64, ..RunConfig::default() };
        let mut s = FlowState::new(p.clone(), 0).unwrap();
        for _ in 0..50 {
            s = step(&s, &cfg).unwrap();
        }
        let dev = s.profile.rho().iter().map(|r| (r - 0.8).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-13, "{dev}");
    }

    #[test]
    fn perturbation_decays_and_mu_is_positive() {
        let p = Profile::from_fn(s3(), 64, |f| 0.8 + 0.05 * (2.0 * f).cos()).unwrap();
        let cfg = RunConfig { cells: 64, t_end: 0.2, sample_dt: 0.1, ..RunConfig::default() };
        let traj = run(&p, &cfg).unwrap();
        assert_eq!(traj.terminal, Terminal::TEnd);
        let recs = traj.records();
        assert!(recs.iter().all(|r| r.mu > 0.0));
        assert!(recs.last().unwrap().omega < 0.5 * recs[0].omega);
        assert!(traj.max_conservation_defect < 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig { cfl: 0.6, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { ell: 3, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = RunConfig { shift_policy: ShiftPolicy::FixedInterval { tau0: 0.5 }, ..RunConfig::default() };
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
