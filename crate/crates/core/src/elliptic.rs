//! Curvature functions, the rigidity equation `F = gamma c_K^alpha`, the
//! soliton equation `F^beta = u` and the Gauss-map duality of the unit sphere.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{sphere_fit, SphereFit};
use crate::error::{Error, Result};
use crate::spaceform::SpaceForm;
use crate::surface::{curvature, point_curvatures, resample, CurvatureField, Profile};

/// A symmetric function `f(kappa_1, ..., kappa_n)` of the principal curvatures.
#[derive(Debug, Clone, PartialEq)]
pub enum CurvatureFunction {
    /// `sum kappa_i`.
    Mean,
    /// `sqrt(n) |kappa|`.
    Norm,
    /// `n^2 / sum kappa_i^{-1}`.
    Harmonic,
    /// `f(kappa^{-1})`.
    Dual(Box<CurvatureFunction>),
    /// `1 / f(kappa^{-1})`, the inverse curvature function.
    Inverse(Box<CurvatureFunction>),
}

impl CurvatureFunction {
    pub fn builtins() -> [CurvatureFunction; 3] {
        [CurvatureFunction::Mean, CurvatureFunction::Norm, CurvatureFunction::Harmonic]
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "mean" => Ok(Self::Mean),
            "norm" => Ok(Self::Norm),
            "harmonic" => Ok(Self::Harmonic),
            other => Err(Error::Config(format!("unknown curvature function `{other}` (mean | norm | harmonic)"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Mean => "mean".into(),
            Self::Norm => "norm".into(),
            Self::Harmonic => "harmonic".into(),
            Self::Dual(f) => format!("dual({})", f.name()),
            Self::Inverse(f) => format!("inverse({})", f.name()),
        }
    }

    /// `f(kappa^{-1})`.
    pub fn dual(&self) -> Self {
        Self::Dual(Box::new(self.clone()))
    }

    /// `1 / f(kappa^{-1})`.
    pub fn inverse(&self) -> Self {
        Self::Inverse(Box::new(self.clone()))
    }

    fn needs_cone(&self) -> bool {
        !matches!(self, Self::Mean | Self::Norm)
    }

    pub fn eval(&self, k: &[f64]) -> Result<f64> {
        if self.needs_cone() && k.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::OutOfCone);
        }
        let n = k.len() as f64;
        Ok(match self {
            Self::Mean => k.iter().sum(),
            Self::Norm => n.sqrt() * k.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Self::Harmonic => n * n / k.iter().map(|x| 1.0 / x).sum::<f64>(),
            Self::Dual(f) => f.eval(&recip(k))?,
            Self::Inverse(f) => 1.0 / f.eval(&recip(k))?,
        })
    }

    /// Analytic gradient.
    pub fn grad(&self, k: &[f64]) -> Result<Vec<f64>> {
        if self.needs_cone() && k.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::OutOfCone);
        }
        let n = k.len() as f64;
        Ok(match self {
            Self::Mean => vec![1.0; k.len()],
            Self::Norm => {
                let norm = k.iter().map(|x| x * x).sum::<f64>().sqrt();
                k.iter().map(|x| n.sqrt() * x / norm).collect()
            }
            Self::Harmonic => {
                let s: f64 = k.iter().map(|x| 1.0 / x).sum();
                k.iter().map(|x| n * n / (s * s * x * x)).collect()
            }
            Self::Dual(f) => {
                let g = f.grad(&recip(k))?;
                g.iter().zip(k).map(|(g, x)| -g / (x * x)).collect()
            }
            Self::Inverse(f) => {
                let inv = recip(k);
                let (fv, g) = (f.eval(&inv)?, f.grad(&inv)?);
                g.iter().zip(k).map(|(g, x)| g / (x * x * fv * fv)).collect()
            }
        })
    }

    /// Central-difference gradient.
    pub fn fd_grad(&self, k: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(k.len());
        let mut x = k.to_vec();
        for i in 0..k.len() {
            let d = 1e-6 * k[i].abs().max(1e-3);
            x[i] = k[i] + d;
            let fp = self.eval(&x)?;
            x[i] = k[i] - d;
            let fm = self.eval(&x)?;
            x[i] = k[i];
            out.push((fp - fm) / (2.0 * d));
        }
        Ok(out)
    }

    /// Central-difference Hessian.
    pub fn fd_hessian(&self, k: &[f64]) -> Result<DMatrix<f64>> {
        let m = k.len();
        let mut hes = DMatrix::zeros(m, m);
        let mut x = k.to_vec();
        let f0 = self.eval(k)?;
        let d: Vec<f64> = k.iter().map(|v| 1e-4 * v.abs().max(1e-3)).collect();
        for i in 0..m {
            for j in i..m {
                let val = if i == j {
                    x[i] = k[i] + d[i];
                    let fp = self.eval(&x)?;
                    x[i] = k[i] - d[i];
                    let fm = self.eval(&x)?;
                    x[i] = k[i];
                    (fp - 2.0 * f0 + fm) / (d[i] * d[i])
                } else {
                    let mut corner = |si: f64, sj: f64| -> Result<f64> {
                        x[i] = k[i] + si * d[i];
                        x[j] = k[j] + sj * d[j];
                        let v = self.eval(&x);
                        x[i] = k[i];
                        x[j] = k[j];
                        v
                    };
                    (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?)
                        / (4.0 * d[i] * d[j])
                };
                hes[(i, j)] = val;
                hes[(j, i)] = val;
            }
        }
        Ok(hes)
    }
}

fn recip(k: &[f64]) -> Vec<f64> {
    k.iter().map(|x| 1.0 / x).collect()
}

/// Random point of the positive cone, entries spread over two decades.
pub fn random_cone_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.3f64..2.3).exp()).collect()
}

/// Sup-norm of `F/(gamma c_K^alpha) - 1` and the hypothesis flags of the rigidity theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeingartenResidual {
    pub residual: f64,
    /// `min Sec + alpha K`; the hypothesis holds when this is non-negative.
    pub sec_margin: f64,
    pub in_hemisphere: bool,
}

fn residual_vector(cf: &CurvatureField, f: &CurvatureFunction, gamma: f64, alpha: f64) -> Result<Vec<f64>> {
    (0..cf.len())
        .map(|j| {
            let target = gamma * cf.c_k[j].powf(alpha);
            Ok(f.eval(&cf.kappas(j))? / target - 1.0)
        })
        .collect()
}

pub fn weingarten_residual(p: &Profile, f: &CurvatureFunction, gamma: f64, alpha: f64) -> Result<WeingartenResidual> {
    let sf = p.space_form();
    let cf = curvature(p)?;
    let r = residual_vector(&cf, f, gamma, alpha)?;
    let min_sec = cf.sec_min.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(WeingartenResidual {
        residual: sup(&r),
        sec_margin: min_sec + alpha * sf.k(),
        in_hemisphere: sf.k() <= 0.0 || p.max_rho() < sf.hemisphere_radius(),
    })
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `f(1, ..., 1)`; the principal curvatures of a geodesic sphere are all `co_K(R)`,
/// so by homogeneity `F = co_K(R) f(1, ..., 1)` there.
fn unit_value(f: &CurvatureFunction, n: usize) -> f64 {
    f.eval(&vec![1.0; n]).expect("(1, ..., 1) lies in the cone")
}

/// Roots of the sphere relation `co_K(R) f(1, ..., 1) = gamma c_K(R)^alpha`, ascending.
pub fn gamma_relation_roots(sf: SpaceForm, f: &CurvatureFunction, gamma: f64, alpha: f64) -> Vec<f64> {
    let scale = unit_value(f, sf.n());
    let g = |r: f64| scale * sf.co(r) - gamma * sf.c(r).powf(alpha);
    let top = if sf.k() > 0.0 { sf.hemisphere_radius() } else { 50.0 / sf.k().abs().sqrt().max(0.02) };
    let m = 4000;
    let grid: Vec<f64> = (1..m).map(|i| top * i as f64 / m as f64).collect();
    let mut roots = Vec::new();
    for w in grid.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (mut fa, fb) = (g(a), g(b));
        if !(fa.is_finite() && fb.is_finite()) || fa * fb > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let fm = g(mid);
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fa * fm < 0.0 {
                b = mid;
            } else {
                a = mid;
                fa = fm;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    roots
}

/// The sphere-relation root closest to `near`.
pub fn gamma_relation_root(sf: SpaceForm, f: &CurvatureFunction, gamma: f64, alpha: f64, near: f64) -> Option<f64> {
    gamma_relation_roots(sf, f, gamma, alpha)
        .into_iter()
        .min_by(|a, b| (a - near).abs().total_cmp(&(b - near).abs()))
}

/// `gamma` for which the centred `R`-sphere solves `F = gamma c_K^alpha`.
pub fn sphere_gamma(sf: SpaceForm, f: &CurvatureFunction, radius: f64, alpha: f64) -> f64 {
    unit_value(f, sf.n()) * sf.co(radius) / sf.c(radius).powf(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Weingarten,
    Soliton,
}

/// Sample-tested structural properties of `F` plus the sectional-curvature hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisFlags {
    /// Weingarten: `min Sec + alpha K`. Soliton: `1/(1 - beta) - max Sec` when required.
    pub sec_margin: f64,
    pub sec_holds: bool,
    pub in_hemisphere: bool,
    /// Smallest eigenvalue of `diag(kappa) D^2 f diag(kappa) / f` over the samples.
    pub convex_margin: f64,
    pub convex: bool,
    /// Largest scaled Hessian eigenvalue of `1/f(kappa^{-1})`; concave when `<= tol`.
    pub inverse_concave_margin: f64,
    pub inverse_concave: bool,
    /// Smallest scaled Hessian eigenvalue of `f(kappa^{-1})`; convex when `>= -tol`.
    pub inverse_convex_margin: f64,
    pub inverse_convex: bool,
    /// Which structural hypothesis of the theorem is met: `convex`,
    /// `inverse-concave` (admissible for `alpha = -1`), `inverse-convex`,
    /// `concave` (admissible for `beta = 1`) or `none`.
    pub route: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Params {
    Weingarten { alpha: f64 },
    Soliton { beta: f64 },
}

const HESSIAN_TOL: f64 = 1e-5;

/// Extreme eigenvalues of `diag(kappa) D^2 f diag(kappa) / f` over random cone
/// points. The congruence keeps the signs of the Hessian eigenvalues and makes
/// them scale-free.
fn hessian_range(f: &CurvatureFunction, n: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..samples {
        let k = random_cone_point(&mut rng, n);
        let fv = f.eval(&k)?.abs();
        let mut hes = f.fd_hessian(&k)?;
        for i in 0..n {
            for j in 0..n {
                hes[(i, j)] *= k[i] * k[j] / fv;
            }
        }
        for e in SymmetricEigen::new(hes).eigenvalues.iter() {
            lo = lo.min(*e);
            hi = hi.max(*e);
        }
    }
    Ok((lo, hi))
}

/// Sectional-curvature hypothesis on `p` and Hessian-sampled structure of `f`
/// (1000 random cone points).
pub fn hypothesis_check(p: &Profile, f: &CurvatureFunction, params: Params) -> Result<HypothesisFlags> {
    let sf = p.space_form();
    let n = sf.n();
    let cf = curvature(p)?;
    let min_sec = cf.sec_min.iter().copied().fold(f64::INFINITY, f64::min);
    let max_sec = cf.sec_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (sec_margin, sec_required) = match params {
        Params::Weingarten { alpha } => (min_sec + alpha * sf.k(), true),
        Params::Soliton { beta } => {
            let sgn = sf.k().signum();
            let required = (1.0 - beta) / beta * sgn > 0.0;
            (sgn / (1.0 - beta) - max_sec, required)
        }
    };
    const SAMPLES: usize = 1000;
    let (convex_lo, concave_hi) = hessian_range(f, n, SAMPLES, 1)?;
    let (_, inv_hi) = hessian_range(&f.inverse(), n, SAMPLES, 2)?;
    let (dual_lo, _) = hessian_range(&f.dual(), n, SAMPLES, 3)?;
    let convex = convex_lo >= -HESSIAN_TOL;
    let inverse_concave = inv_hi <= HESSIAN_TOL;
    let inverse_convex = dual_lo >= -HESSIAN_TOL;
    let route = match params {
        Params::Weingarten { alpha } => {
            if convex {
                "convex"
            } else if alpha == -1.0 && inverse_concave {
                "inverse-concave"
            } else {
                "none"
            }
        }
        Params::Soliton { beta } => {
            if inverse_convex {
                "inverse-convex"
            } else if beta == 1.0 && concave_hi <= HESSIAN_TOL {
                "concave"
            } else {
                "none"
            }
        }
    };
    Ok(HypothesisFlags {
        sec_margin,
        sec_holds: !sec_required || sec_margin >= 0.0,
        in_hemisphere: sf.k() <= 0.0 || p.max_rho() < sf.hemisphere_radius(),
        convex_margin: convex_lo,
        convex,
        inverse_concave_margin: inv_hi,
        inverse_concave,
        inverse_convex_margin: dual_lo,
        inverse_convex,
        route: route.into(),
    })
}

/// Pointwise consistency of a Gauss-map dual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityCheck {
    /// `max |kappa~_i kappa_i - 1|`.
    pub kappa_product: f64,
    /// `max |c_K~ - u|`.
    pub ck_vs_support: f64,
}

/// Gauss-map dual of a strictly convex profile in the unit sphere: every
/// point is replaced by its inward unit normal, read as a point of the sphere.
/// The dual body again lies in the hemisphere about the origin.
pub fn gauss_dual(p: &Profile) -> Result<(Profile, DualityCheck)> {
    let sf = p.space_form();
    if sf.k() != 1.0 {
        return Err(Error::DualityFailed("the Gauss-map dual is implemented for K = 1".into()));
    }
    let cf = curvature(p)?;
    if !cf.is_strictly_convex() {
        return Err(Error::DualityFailed("profile is not strictly convex".into()));
    }
    let series = p.interpolant();
    let cells = p.cells();
    // inward normal at parameter t as a polar point (angle, radius)
    let dual_point = |t: f64| -> (f64, f64) {
        let (r, r1, _) = series.eval3(t);
        let (s, c) = sf.sc(r);
        let (st, ct) = t.sin_cos();
        let d_r = [-s, c * ct, c * st];
        let d_phi = [0.0, -s * st, s * ct];
        let a = r1 / (s * s);
        let nu: Vec<f64> = (0..3).map(|i| d_r[i] - a * d_phi[i]).collect();
        let len = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (rr, pp) = sf.point_to_polar([-nu[0] / len, -nu[1] / len, -nu[2] / len]);
        (pp.abs(), rr)
    };
    // resample the parameter, then read off radii; angles run from pi to 0
    let params = resample(cells, |t| (dual_point(t).0, t), false)
        .map_err(|e| Error::DualityFailed(e.to_string()))?;
    let rho: Vec<f64> = (0..=cells).map(|j| dual_point(params[cells - j]).1).collect();
    let dual = Profile::new(sf, rho).map_err(|e| Error::DualityFailed(e.to_string()))?;
    let dcf = curvature(&dual)?;
    if !dcf.is_strictly_convex() {
        return Err(Error::DualityFailed("dual is not strictly convex".into()));
    }
    let mut check = DualityCheck { kappa_product: 0.0, ck_vs_support: 0.0 };
    for j in 0..=cells {
        let t = params[cells - j];
        let (r, r1, r2) = series.eval3(t);
        let pole = t.sin().abs() < 1e-12;
        let r1_cot = if pole { r2 } else { r1 * t.cos() / t.sin() };
        let (kp, kr, v) = point_curvatures(sf, r, r1, r2, r1_cot);
        let u = sf.s(r) / v;
        check.kappa_product = check
            .kappa_product
            .max((dcf.kappa_profile[j] * kp - 1.0).abs())
            .max((dcf.kappa_rot[j] * kr - 1.0).abs());
        check.ck_vs_support = check.ck_vs_support.max((dcf.c_k[j] - u).abs());
    }
    Ok((dual, check))
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticReport {
    pub equation: Equation,
    pub function: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub profile: Profile,
    pub sphere_fit: SphereFit,
    /// Sphere-relation root nearest the fitted radius.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_root: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<HypothesisFlags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality: Option<DualityCheck>,
}

pub const SOLVE_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 60;
const MAX_DAMPING: usize = 20;

/// Residual of a trial profile, or `None` when it leaves the admissible class.
fn try_residual(sf: SpaceForm, rho: &[f64], f: &CurvatureFunction, gamma: f64, alpha: f64) -> Option<Vec<f64>> {
    let p = Profile::new(sf, rho.to_vec()).ok()?;
    let cf = curvature(&p).ok()?;
    if sf.k() > 0.0 && p.max_rho() >= sf.hemisphere_radius() {
        return None;
    }
    let r = residual_vector(&cf, f, gamma, alpha).ok()?;
    r.iter().all(|x| x.is_finite()).then_some(r)
}

/// Jacobian of the residual by the chain rule: each residual entry is a
/// pointwise function of `(rho, rho', rho'')` at its node, differentiated
/// numerically in those O(1) arguments, composed with the exact difference
/// weights. Differencing the residual in `rho` directly instead loses accuracy
/// like `N^4` for nonlinear `f`, which swamps the O(1) radial eigenvalue.
fn residual_jacobian(p: &Profile, f: &CurvatureFunction, gamma: f64, alpha: f64) -> Result<DMatrix<f64>> {
    let sf = p.space_form();
    let m = p.rho().len();
    let (d1, d2) = p.derivatives();
    let mut jac = DMatrix::zeros(m, m);
    for j in 0..m {
        let pole = j == 0 || j == m - 1;
        let cot = if pole { 0.0 } else { p.phi(j).cos() / p.phi(j).sin() };
        let point = |x: [f64; 3]| -> Result<f64> {
            let r1_cot = if pole { x[2] } else { x[1] * cot };
            let (kp, kr, _) = point_curvatures(sf, x[0], x[1], x[2], r1_cot);
            let mut kappas = vec![kr; sf.n()];
            kappas[0] = kp;
            Ok(f.eval(&kappas)? / (gamma * sf.c(x[0]).powf(alpha)))
        };
        let x0 = [p.rho()[j], d1[j], d2[j]];
        let mut grad = [0.0; 3];
        for (a, g) in grad.iter_mut().enumerate() {
            let e = 1e-6 * x0[a].abs().max(1.0);
            let (mut up, mut down) = (x0, x0);
            up[a] += e;
            down[a] -= e;
            *g = (point(up)? - point(down)?) / (2.0 * e);
        }
        jac[(j, j)] += grad[0];
        for (i, w1, w2) in p.stencil(j) {
            jac[(j, i)] += grad[1] * w1 + grad[2] * w2;
        }
    }
    Ok(jac)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton solve of `F = gamma c_K^alpha` for the samples of `initial`,
/// with a chain-rule Jacobian.
pub fn weingarten_solve(
    f: &CurvatureFunction,
    gamma: f64,
    alpha: f64,
    sf: SpaceForm,
    initial: &Profile,
) -> Result<EllipticReport> {
    if initial.space_form() != sf {
        return Err(Error::Config("initial profile lives in a different space form".into()));
    }
    let mut rho = initial.rho().to_vec();
    let mut r = try_residual(sf, &rho, f, gamma, alpha)
        .ok_or_else(|| Error::SolveFailed("initial profile is outside the admissible class".into()))?;
    let mut iterations = 0;
    while sup(&r) >= SOLVE_TOL {
        if iterations == MAX_NEWTON {
            return Err(Error::SolveFailed(format!("no convergence in {MAX_NEWTON} Newton steps (residual {:e})", sup(&r))));
        }
        iterations += 1;
        let jac = residual_jacobian(&Profile::new(sf, rho.clone())?, f, gamma, alpha)?;
        let delta = jac
            .lu()
            .solve(&(-DVector::from_vec(r.clone())))
            .ok_or_else(|| Error::SolveFailed("singular Jacobian".into()))?;
        let norm0 = l2(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_DAMPING {
            let trial: Vec<f64> = rho.iter().zip(delta.iter()).map(|(x, d)| x + lambda * d).collect();
            if let Some(rt) = try_residual(sf, &trial, f, gamma, alpha) {
                if l2(&rt) < norm0 {
                    rho = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::SolveFailed(format!(
                "no residual decrease over {MAX_DAMPING} damped steps (residual {:e})",
                sup(&r)
            )));
        }
    }
    let profile = Profile::new(sf, rho)?;
    let fit = sphere_fit(&profile)?;
    Ok(EllipticReport {
        equation: Equation::Weingarten,
        function: f.name(),
        gamma: Some(gamma),
        alpha: Some(alpha),
        beta: None,
        residual: sup(&r),
        iterations,
        converged: true,
        radius_root: gamma_relation_root(sf, f, gamma, alpha, fit.radius),
        sphere_fit: fit,
        profile,
        flags: None,
        duality: None,
    })
}

/// `max |F^beta - u| / u`.
pub fn soliton_residual(p: &Profile, f: &CurvatureFunction, beta: f64) -> Result<f64> {
    let cf = curvature(p)?;
    let mut worst: f64 = 0.0;
    for j in 0..cf.len() {
        let fv = f.eval(&cf.kappas(j))?;
        worst = worst.max((fv.powf(beta) - cf.u[j]).abs() / cf.u[j]);
    }
    Ok(worst)
}

/// `beta` for which the centred `R`-sphere of the unit sphere is a soliton:
/// `(n cot R)^beta = sin R`.
pub fn sphere_soliton_beta(sf: SpaceForm, radius: f64) -> f64 {
    sf.s(radius).ln() / (sf.n() as f64 * sf.co(radius)).ln()
}

/// Soliton check through the dual: the dual of a solution of `F^beta = u`
/// solves `F~ = c_K^alpha` with `F~ = 1/F(kappa^{-1})`, `alpha = -1/beta`, `gamma = 1`.
pub fn soliton_via_duality(p: &Profile, f: &CurvatureFunction, beta: f64) -> Result<EllipticReport> {
    if beta == 0.0 {
        return Err(Error::Config("beta must be non-zero".into()));
    }
    let (dual, check) = gauss_dual(p)?;
    let alpha = -1.0 / beta;
    let res = weingarten_residual(&dual, &f.inverse(), 1.0, alpha)?;
    Ok(EllipticReport {
        equation: Equation::Soliton,
        function: f.name(),
        gamma: Some(1.0),
        alpha: Some(alpha),
        beta: Some(beta),
        residual: res.residual,
        iterations: 0,
        converged: res.residual < SOLVE_TOL,
        sphere_fit: sphere_fit(p)?,
        profile: p.clone(),
        radius_root: None,
        flags: None,
        duality: Some(check),
    })
}

/// Solves `F^beta = u` by solving the dual Weingarten problem and mapping back.
pub fn soliton_solve(f: &CurvatureFunction, beta: f64, initial: &Profile) -> Result<EllipticReport> {
    let (dual, _) = gauss_dual(initial)?;
    let alpha = -1.0 / beta;
    let solved = weingarten_solve(&f.inverse(), 1.0, alpha, dual.space_form(), &dual)?;
    let (back, check) = gauss_dual(&solved.profile)?;
    let fit = sphere_fit(&back)?;
    let root = gamma_relation_root(dual.space_form(), &f.inverse(), 1.0, alpha, PI / 2.0 - fit.radius);
    Ok(EllipticReport {
        equation: Equation::Soliton,
        function: f.name(),
        gamma: Some(1.0),
        alpha: Some(alpha),
        beta: Some(beta),
        residual: soliton_residual(&back, f, beta)?,
        iterations: solved.iterations,
        converged: true,
        sphere_fit: fit,
        profile: back,
        radius_root: root.map(|r| PI / 2.0 - r),
        flags: None,
        duality: Some(check),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> SpaceForm {
        SpaceForm::new(1.0, 2).unwrap()
    }

    #[test]
    fn condition_suite_for_builtins() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in CurvatureFunction::builtins() {
            for n in 2..=4 {
                assert!((f.eval(&vec![1.0; n]).unwrap() - n as f64).abs() < 1e-12);
                for _ in 0..1000 {
                    let k = random_cone_point(&mut rng, n);
                    let g = f.grad(&k).unwrap();
                    assert!(g.iter().all(|&x| x > 0.0), "{} not monotone", f.name());
                    let fk = f.eval(&k).unwrap();
                    for lam in [0.5, 2.0, 10.0] {
                        let scaled: Vec<f64> = k.iter().map(|x| lam * x).collect();
                        assert!((f.eval(&scaled).unwrap() - lam * fk).abs() < 1e-10 * lam * fk);
                    }
                    let fd = f.fd_grad(&k).unwrap();
                    let euler: f64 = fd.iter().zip(&k).map(|(g, x)| g * x).sum();
                    assert!((euler - fk).abs() < 1e-6 * fk);
                    for (a, b) in g.iter().zip(&fd) {
                        assert!((a - b).abs() < 1e-6 * a.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn duals_and_inverses() {
        let h = CurvatureFunction::Harmonic;
        let k = [1.0, 2.0];
        assert!((h.eval(&k).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        // 1/harmonic(kappa^{-1}) = sum kappa / n^2
        assert!((h.inverse().eval(&k).unwrap() - 3.0 / 4.0).abs() < 1e-15);
        assert!((CurvatureFunction::Mean.dual().eval(&[1.0; 3]).unwrap() - 3.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in CurvatureFunction::builtins() {
            for _ in 0..1000 {
                let k = random_cone_point(&mut rng, 3);
                let a = f.dual().dual().eval(&k).unwrap();
                assert!((a - f.eval(&k).unwrap()).abs() < 1e-10 * a);
            }
        }
        assert_eq!(CurvatureFunction::Harmonic.eval(&[1.0, -1.0]), Err(Error::OutOfCone));
    }

    #[test]
    fn sphere_residuals() {
        let sf = s3();
        let p = Profile::sphere(sf, 64, 0.7).unwrap();
        for alpha in [1.0, -1.0, 2.0] {
            let g = sphere_gamma(sf, &CurvatureFunction::Mean, 0.7, alpha);
            let r = weingarten_residual(&p, &CurvatureFunction::Mean, g, alpha).unwrap();
            assert!(r.residual < 1e-10 && r.sec_margin > 0.0 && r.in_hemisphere);
        }
        let e = SpaceForm::new(0.0, 2).unwrap();
        let r = weingarten_residual(&Profile::sphere(e, 64, 2.0).unwrap(), &CurvatureFunction::Norm, 1.0, 1.0).unwrap();
        assert!(r.residual < 1e-10);
        let bumpy = Profile::from_fn(sf, 64, |f| 0.7 + 0.01 * (2.0 * f).cos()).unwrap();
        let small = weingarten_residual(&bumpy, &CurvatureFunction::Mean, sphere_gamma(sf, &CurvatureFunction::Mean, 0.7, 1.0), 1.0).unwrap();
        let bumpy2 = Profile::from_fn(sf, 64, |f| 0.7 + 0.02 * (2.0 * f).cos()).unwrap();
        let big = weingarten_residual(&bumpy2, &CurvatureFunction::Mean, sphere_gamma(sf, &CurvatureFunction::Mean, 0.7, 1.0), 1.0).unwrap();
        assert!(small.residual > 0.0 && (big.residual / small.residual - 2.0).abs() < 0.1);
    }

    #[test]
    fn gamma_roots_recover_radius() {
        let sf = s3();
        for (r, alpha) in [(0.7, 1.0), (0.6, 2.0), (0.9, -1.0)] {
            for f in [CurvatureFunction::Harmonic, CurvatureFunction::Mean.inverse()] {
                let g = sphere_gamma(sf, &f, r, alpha);
                assert!((gamma_relation_root(sf, &f, g, alpha, r).unwrap() - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn newton_recovers_sphere() {
        let sf = s3();
        let g = sphere_gamma(sf, &CurvatureFunction::Mean, 0.6, 1.0);
        let sphere = Profile::sphere(sf, 64, 0.6).unwrap();
        assert!(weingarten_solve(&CurvatureFunction::Mean, g, 1.0, sf, &sphere).unwrap().iterations <= 2);
        let init = Profile::from_fn(sf, 64, |f| 0.6 * (1.0 + 0.1 * (2.0 * f).cos())).unwrap();
        let rep = weingarten_solve(&CurvatureFunction::Mean, g, 1.0, sf, &init).unwrap();
        assert!(rep.sphere_fit.residual < 1e-8 && rep.sphere_fit.center.abs() < 1e-8);
        assert!((rep.sphere_fit.radius - rep.radius_root.unwrap()).abs() < 1e-8);
    }

    #[test]
    fn newton_other_functions() {
        let sf = s3();
        for (cells, f, alpha) in [
            (48, CurvatureFunction::Harmonic, -1.0),
            (48, CurvatureFunction::Norm, 2.0),
            // fine grids are where a crude Jacobian stalls for nonlinear f
            (512, CurvatureFunction::Norm, 1.0),
            (512, CurvatureFunction::Harmonic, 2.0),
        ] {
            let init = Profile::from_fn(sf, cells, |f| 0.6 + 0.03 * (2.0 * f).cos() + 0.02 * f.cos()).unwrap();
            let g = sphere_gamma(sf, &f, 0.6, alpha);
            let rep = weingarten_solve(&f, g, alpha, sf, &init).unwrap();
            assert!(rep.residual < SOLVE_TOL);
            assert!(rep.sphere_fit.residual < 1e-7, "{} {:?}", f.name(), rep.sphere_fit);
            assert!((rep.sphere_fit.radius - rep.radius_root.unwrap()).abs() < 1e-7);
            assert!(rep.iterations <= 8, "{} at N={cells}: {} iterations", f.name(), rep.iterations);
        }
    }

    #[test]
    fn soliton_solve_from_perturbed_sphere() {
        let sf = s3();
        let beta = sphere_soliton_beta(sf, 0.7);
        let init = Profile::from_fn(sf, 48, |f| 0.7 + 0.02 * (2.0 * f).cos()).unwrap();
        let rep = soliton_solve(&CurvatureFunction::Mean, beta, &init).unwrap();
        assert!(rep.residual < 1e-7, "{}", rep.residual);
        assert!(rep.sphere_fit.residual < 1e-6, "{:?}", rep.sphere_fit);
        assert!((rep.radius_root.unwrap() - rep.sphere_fit.radius).abs() < 1e-6);
    }

    #[test]
    fn dual_of_sphere_is_complementary_sphere() {
        let sf = s3();
        let (d, check) = gauss_dual(&Profile::sphere(sf, 128, 0.5).unwrap()).unwrap();
        let want = PI / 2.0 - 0.5;
        assert!(d.rho().iter().all(|r| (r - want).abs() < 1e-8));
        assert!(check.kappa_product < 1e-8 && check.ck_vs_support < 1e-12);
    }

    #[test]
    fn duality_is_an_involution() {
        let sf = s3();
        let p = Profile::from_fn(sf, 256, |f| 0.8 + 0.05 * (2.0 * f).cos() + 0.03 * f.cos()).unwrap();
        let (d, check) = gauss_dual(&p).unwrap();
        assert!(check.kappa_product < 1e-6 && check.ck_vs_support < 1e-6, "{check:?}");
        let (dd, _) = gauss_dual(&d).unwrap();
        let err = dd.rho().iter().zip(p.rho()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn sphere_soliton() {
        let sf = s3();
        let r = 0.7;
        let beta = sphere_soliton_beta(sf, r);
        let p = Profile::sphere(sf, 128, r).unwrap();
        assert!(soliton_residual(&p, &CurvatureFunction::Mean, beta).unwrap() < 1e-10);
        let rep = soliton_via_duality(&p, &CurvatureFunction::Mean, beta).unwrap();
        assert!(rep.residual < 1e-10, "{}", rep.residual);
    }

    #[test]
    fn hypothesis_flags() {
        let p = Profile::sphere(s3(), 64, 0.7).unwrap();
        let norm = hypothesis_check(&p, &CurvatureFunction::Norm, Params::Weingarten { alpha: 1.0 }).unwrap();
        assert!(norm.convex && norm.sec_holds && norm.route == "convex");
        let harm = hypothesis_check(&p, &CurvatureFunction::Harmonic, Params::Weingarten { alpha: -1.0 }).unwrap();
        assert!(!harm.convex && harm.inverse_concave && harm.route == "inverse-concave");
        let sol = hypothesis_check(&p, &CurvatureFunction::Harmonic, Params::Soliton { beta: 0.5 }).unwrap();
        assert!(sol.inverse_convex);
    }
}
