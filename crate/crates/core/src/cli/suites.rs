//! Property suites behind `qflow check`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elliptic::{
    gauss_dual, hypothesis_check, random_cone_point, sphere_gamma, weingarten_residual, CurvatureFunction, Params,
};
use crate::error::Result;
use crate::flow::{evolution_check, run, step, Feedback, FlowState, RunConfig};
use crate::integrals::{
    ball_quermass, ball_radius_from_quermass, hsiung_minkowski_from_field, newton_maclaurin_check, quermass_from_field,
};
use crate::origin::ShiftPolicy;
use crate::spaceform::SpaceForm;
use crate::surface::{curvature, Profile};

/// Source of `(s_K(r), c_K(r))`. The spaceform suite checks its identities
/// against whichever kernel it is handed, so a faulty one can be injected.
pub trait TrigKernel: Sync {
    fn sc(&self, sf: SpaceForm, r: f64) -> (f64, f64);
}

/// The library kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct LibraryTrig;

impl TrigKernel for LibraryTrig {
    fn sc(&self, sf: SpaceForm, r: f64) -> (f64, f64) {
        sf.sc(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    SpaceForm,
    Integrals,
    Elliptic,
    FlowShort,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::SpaceForm, Suite::Integrals, Suite::Elliptic, Suite::FlowShort];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SpaceForm => "spaceform",
            Suite::Integrals => "integrals",
            Suite::Elliptic => "elliptic",
            Suite::FlowShort => "flow-short",
        }
    }
}

/// Outcome of one property: `worst` is compared against `tol` in the stated direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub suite: &'static str,
    pub name: String,
    pub worst: f64,
    pub tol: f64,
    pub pass: bool,
}

struct Collector {
    suite: &'static str,
    out: Vec<PropertyResult>,
}

impl Collector {
    fn new(suite: Suite) -> Self {
        Collector { suite: suite.name(), out: Vec::new() }
    }

    /// Passes when `worst <= tol`.
    fn below(&mut self, name: &str, worst: f64, tol: f64) {
        let pass = worst <= tol;
        self.out.push(PropertyResult { suite: self.suite, name: name.into(), worst, tol, pass });
    }

    /// Passes when `worst >= tol`.
    fn above(&mut self, name: &str, worst: f64, tol: f64) {
        let pass = worst >= tol;
        self.out.push(PropertyResult { suite: self.suite, name: name.into(), worst, tol, pass });
    }

    fn fallible(&mut self, name: &str, r: Result<()>) {
        if let Err(e) = r {
            self.out.push(PropertyResult {
                suite: self.suite,
                name: format!("{name}: {e}"),
                worst: f64::NAN,
                tol: f64::NAN,
                pass: false,
            });
        }
    }
}

/// Runs one suite with a fixed seed; `samples` scales the random sample counts.
pub fn run_suite(suite: Suite, trig: &dyn TrigKernel, seed: u64, samples: usize) -> Vec<PropertyResult> {
    let mut c = Collector::new(suite);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = samples.max(1);
    match suite {
        Suite::SpaceForm => spaceform(&mut c, trig, &mut rng, samples),
        Suite::Integrals => {
            let r = integrals(&mut c, &mut rng, samples);
            c.fallible("integrals", r)
        }
        Suite::Elliptic => {
            let r = elliptic(&mut c, &mut rng, samples);
            c.fallible("elliptic", r)
        }
        Suite::FlowShort => {
            let r = flow_short(&mut c, &mut rng);
            c.fallible("flow-short", r)
        }
    }
    c.out
}

fn spaceform(c: &mut Collector, trig: &dyn TrigKernel, rng: &mut ChaCha8Rng, samples: usize) {
    let (mut pyth, mut ds, mut dc, mut add, mut polar) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in [1.0, 4.0, 0.0, -1.0, -0.25] {
        for n in [2, 3] {
            let sf = SpaceForm::new(k, n).expect("valid space form");
            let top = if k > 0.0 { 0.99 * sf.hemisphere_radius() } else { 3.0 };
            for _ in 0..samples * 20 {
                let r = rng.gen_range(1e-3..top);
                let (s, cc) = trig.sc(sf, r);
                pyth = pyth.max((cc * cc + k * s * s - 1.0).abs());
                let d = 1e-5;
                let (sp, cp) = trig.sc(sf, r + d);
                let (sm, cm) = trig.sc(sf, r - d);
                ds = ds.max(((sp - sm) / (2.0 * d) - cc).abs());
                dc = dc.max(((cp - cm) / (2.0 * d) + k * s).abs());
                let b = rng.gen_range(0.0..top - r);
                let (sb, cb) = trig.sc(sf, b);
                let (sab, _) = trig.sc(sf, r + b);
                add = add.max((sab - (s * cb + cc * sb)).abs());
                let phi = rng.gen_range(0.0..PI);
                let (rr, pp) = sf.point_to_polar(sf.polar_to_point(r, phi));
                polar = polar.max((rr - r).abs()).max((pp - phi).abs() * r.min(1.0));
            }
        }
    }
    c.below("pythagorean c^2 + K s^2 = 1", pyth, 1e-12);
    c.below("derivative s' = c", ds, 1e-8);
    c.below("derivative c' = -K s", dc, 1e-8);
    c.below("addition s(a+b) = s(a)c(b) + c(a)s(b)", add, 1e-12);
    c.below("polar round trip", polar, 1e-10);
}

fn integrals(c: &mut Collector, rng: &mut ChaCha8Rng, samples: usize) -> Result<()> {
    let (mut mink, mut rec, mut round) = (0.0f64, 0.0f64, 0.0f64);
    for k in [1.0, 0.0, -1.0] {
        for n in [2, 3] {
            let sf = SpaceForm::new(k, n)?;
            for _ in 0..samples {
                let p = Profile::random_convex(sf, 256, rng)?;
                let cf = curvature(&p)?;
                for ell in 0..n {
                    mink = mink.max(hsiung_minkowski_from_field(&cf, ell)?);
                }
                rec = rec.max(quermass_from_field(sf, &cf).recursion_residual());
            }
            for ell in 0..=n {
                let r = 0.7;
                let back = ball_radius_from_quermass(sf, ell, ball_quermass(sf, ell, r)?)?;
                round = round.max((back - r).abs());
            }
        }
    }
    c.below("hsiung-minkowski identities", mink, 1e-6);
    c.below("mixed-volume recursion", rec, 1e-6);
    c.below("ball quermassintegral inverse", round, 1e-9);
    let mut worst = f64::INFINITY;
    for n in 2..=4 {
        for _ in 0..samples * 2000 {
            worst = worst.min(newton_maclaurin_check(&random_cone_point(rng, n))?.worst_margin);
        }
    }
    c.above("newton-maclaurin margin", worst, -1e-12);
    Ok(())
}

fn elliptic(c: &mut Collector, rng: &mut ChaCha8Rng, samples: usize) -> Result<()> {
    let (mut norm, mut homog, mut euler, mut invol, mut grad) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut mono = f64::INFINITY;
    for f in CurvatureFunction::builtins() {
        for n in 2..=4 {
            norm = norm.max((f.eval(&vec![1.0; n])? - n as f64).abs());
            for _ in 0..samples * 100 {
                let k = random_cone_point(rng, n);
                let fk = f.eval(&k)?;
                let g = f.grad(&k)?;
                mono = mono.min(g.iter().copied().fold(f64::INFINITY, f64::min));
                for lam in [0.5, 2.0, 10.0] {
                    let scaled: Vec<f64> = k.iter().map(|x| lam * x).collect();
                    homog = homog.max((f.eval(&scaled)? / (lam * fk) - 1.0).abs());
                }
                let fd = f.fd_grad(&k)?;
                let e: f64 = fd.iter().zip(&k).map(|(g, x)| g * x).sum();
                euler = euler.max((e / fk - 1.0).abs());
                for (a, b) in g.iter().zip(&fd) {
                    grad = grad.max((a - b).abs() / a.abs().max(1.0));
                }
                invol = invol.max((f.dual().dual().eval(&k)? / fk - 1.0).abs());
            }
        }
    }
    c.below("normalisation f(1,...,1) = n", norm, 1e-12);
    c.above("monotonicity (min df/dkappa_i)", mono, f64::MIN_POSITIVE);
    c.below("1-homogeneity", homog, 1e-10);
    c.below("euler relation", euler, 1e-6);
    c.below("analytic gradient", grad, 1e-6);
    c.below("dual involution", invol, 1e-10);

    let sf = SpaceForm::new(1.0, 2)?;
    let mut sphere = 0.0f64;
    let p = Profile::sphere(sf, 64, 0.6)?;
    for f in CurvatureFunction::builtins() {
        for alpha in [1.0, -1.0, 2.0] {
            let r = weingarten_residual(&p, &f, sphere_gamma(sf, &f, 0.6, alpha), alpha)?;
            sphere = sphere.max(r.residual);
        }
    }
    c.below("sphere solves the weingarten equation", sphere, 1e-10);
    let (dual, _) = gauss_dual(&Profile::sphere(sf, 128, 0.5)?)?;
    let err = dual.rho().iter().map(|r| (r - (PI / 2.0 - 0.5)).abs()).fold(0.0, f64::max);
    c.below("dual of the R-sphere is the (pi/2 - R)-sphere", err, 1e-8);
    let nf = hypothesis_check(&p, &CurvatureFunction::Norm, Params::Weingarten { alpha: 1.0 })?;
    c.above("norm is convex (min scaled Hessian eigenvalue)", nf.convex_margin, -1e-5);
    let hf = hypothesis_check(&p, &CurvatureFunction::Harmonic, Params::Weingarten { alpha: -1.0 })?;
    c.below("harmonic is inverse concave (max scaled eigenvalue)", hf.inverse_concave_margin, 1e-5);
    Ok(())
}

fn flow_short(c: &mut Collector, rng: &mut ChaCha8Rng) -> Result<()> {
    let sf = SpaceForm::new(1.0, 2)?;
    let cfg = RunConfig { cells: 128, cfl: 0.5, ..RunConfig::default() };
    let mut s = FlowState::new(Profile::sphere(sf, 128, 0.8)?, 0)?;
    let rho0 = s.profile.rho().to_vec();
    for _ in 0..200 {
        s = step(&s, &cfg)?;
    }
    let moved = s.profile.rho().iter().zip(&rho0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    c.below("stationary sphere, 200 steps", moved, 1e-10);

    let (mut drift, mut min_kappa) = (0.0f64, f64::INFINITY);
    for ell in 0..=2 {
        let cfg = RunConfig {
            ell,
            cells: 128,
            cfl: 0.5,
            t_end: 0.1,
            feedback: Feedback { enabled: false, gain: 0.0 },
            shift_policy: ShiftPolicy::Off,
            converge: None,
            ..RunConfig::default()
        };
        let p = Profile::from_fn(sf, 128, |f| 0.8 + 0.05 * (2.0 * f).cos())?;
        let traj = run(&p, &cfg)?;
        drift = drift.max(traj.max_conservation_defect);
        min_kappa = min_kappa.min(traj.records().iter().map(|r| r.min_kappa).fold(f64::INFINITY, f64::min));
    }
    c.below("quermassintegral drift, t = 0.1, feedback off", drift, 1e-6);
    c.above("convexity preserved (min kappa)", min_kappa, f64::MIN_POSITIVE);

    let mut evol = 0.0f64;
    for ell in 0..=2 {
        let p = Profile::random_convex(sf, 256, rng)?;
        let e = evolution_check(&p, ell, 1e-6)?;
        evol = evol.max(e.mean_rel).max(e.ck_rel);
    }
    c.below("evolution of H and c_K", evol, 1e-3);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Skewed;

    impl TrigKernel for Skewed {
        fn sc(&self, sf: SpaceForm, r: f64) -> (f64, f64) {
            let (s, c) = sf.sc(r);
            (s * 1.001, c)
        }
    }

    #[test]
    fn spaceform_suite_passes_and_catches_a_faulty_kernel() {
        assert!(run_suite(Suite::SpaceForm, &LibraryTrig, 1, 1).iter().all(|r| r.pass));
        assert!(run_suite(Suite::SpaceForm, &Skewed, 1, 1).iter().any(|r| !r.pass));
    }
}
