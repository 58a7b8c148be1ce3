//! Inradius/outradius, the explicit constants of the long-time argument, and
//! the origin-shifting protocol.
//!
//! All centre searches run along the symmetry axis: the extremal balls of an
//! axisymmetric convex body are centred there. Points of the axis are labelled
//! by their signed distance from the current origin.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::diagnostics::pinching_deficit;
use crate::error::{Error, Result};
use crate::integrals::{ball_radius_from_quermass, hemisphere_quermass, quermass_from_field};
use crate::spaceform::SpaceForm;
use crate::surface::{curvature, CurvatureField, Profile};

const GOLDEN_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Radii {
    pub inradius: f64,
    pub in_center: f64,
    pub outradius: f64,
    pub out_center: f64,
}

/// Smallest and largest distance from the axis point `q` to the grid points of
/// `p`, each refined by a parabola through the extremal sample and its neighbours.
pub fn distance_range(p: &Profile, pts: &[[f64; 3]], q: f64) -> (f64, f64) {
    let sf = p.space_form();
    let a = sf.axis_point(q);
    let d: Vec<f64> = pts.iter().map(|x| sf.distance(a, *x)).collect();
    let n = d.len() - 1;
    let at = |j: isize| -> f64 {
        let i = if j < 0 { -j } else if j > n as isize { 2 * n as isize - j } else { j };
        d[i as usize]
    };
    let refine = |j: usize| -> f64 {
        let (l, c, r) = (at(j as isize - 1), d[j], at(j as isize + 1));
        let den = l - 2.0 * c + r;
        if den != 0.0 {
            let cand = c - (r - l) * (r - l) / (8.0 * den);
            // only accept a vertex that stays within the bracket
            if (cand - c).abs() <= (l - c).abs().max((r - c).abs()) {
                return cand;
            }
        }
        c
    };
    let (mut jmin, mut jmax) = (0, 0);
    for j in 0..=n {
        if d[j] < d[jmin] {
            jmin = j;
        }
        if d[j] > d[jmax] {
            jmax = j;
        }
    }
    (refine(jmin).min(d[jmin]), refine(jmax).max(d[jmax]))
}

fn golden(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    // minimises a unimodal f on [a, b]
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > GOLDEN_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Inradius and outradius with centres on the axis.
pub fn radii(p: &Profile) -> Radii {
    let pts = p.embed();
    let (lo, hi) = (-p.rho()[p.cells()], p.rho()[0]);
    let in_center = golden(lo, hi, |q| -distance_range(p, &pts, q).0);
    let out_center = golden(lo, hi, |q| distance_range(p, &pts, q).1);
    Radii {
        inradius: distance_range(p, &pts, in_center).0,
        in_center,
        outradius: distance_range(p, &pts, out_center).1,
        out_center,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginReport {
    pub inradius: f64,
    pub in_center: f64,
    pub outradius: f64,
    pub out_center: f64,
    /// Measured stand-in for the inradius lower bound: `f_l^{-1}(W_l) / (rho_+/rho_-)`.
    pub d1: f64,
    /// `(log W_l(hemisphere) - log W_l(Omega)) / (n + 1 - l)`.
    pub d2: f64,
    /// `min(s_K(d1/4)/4, 1/(2 sqrt K))`.
    pub d3: f64,
    /// Admissible `epsilon` of the origin configuration.
    pub eps0: f64,
    /// Measured stand-in for `epsilon_1`: radius of the largest ball about the origin inside `Omega`.
    pub eps1: f64,
    /// `epsilon_0(max(y_bar, psi_0))`, the constructive value (typically far smaller).
    pub eps1_formula: f64,
    pub max_h: f64,
    /// `1 / min(kappa_1/H)`; bounds `kappa_n/kappa_1` for all later times.
    pub pinch_c0: f64,
    /// Largest value of the auxiliary function `Psi` over axial points.
    pub psi_axial: f64,
}

/// `(log W_l(hemisphere) - log W_l(Omega)) / (n + 1 - l)`.
pub fn d2_constant(sf: SpaceForm, ell: usize, w: f64) -> Result<f64> {
    let w_hemi = hemisphere_quermass(sf, ell)?;
    if w >= w_hemi {
        return Err(Error::NotStrictlyInterior { w, w_hemi });
    }
    Ok((w_hemi.ln() - w.ln()) / (sf.n() + 1 - ell) as f64)
}

/// `epsilon` of the origin configuration: `1/4 min(d2/(2 max H), (pi/2 - atan(max H/sqrt K))/(2 sqrt K))`.
pub fn config_epsilon(sf: SpaceForm, d2: f64, max_h: f64) -> f64 {
    let a = sf.k().sqrt();
    0.25 * (d2 / (2.0 * max_h)).min((FRAC_PI_2 - (max_h / a).atan()) / (2.0 * a))
}

/// `epsilon_0(y) = 1/4 min(d2 d3 sqrt K/(2y), (pi/2 - atan(y/(d3 K)))/(2 sqrt K))`.
pub fn eps0_of(sf: SpaceForm, d2: f64, d3: f64, y: f64) -> f64 {
    let (k, a) = (sf.k(), sf.k().sqrt());
    0.25 * (d2 * d3 * a / (2.0 * y)).min((FRAC_PI_2 - (y / (d3 * k)).atan()) / (2.0 * a))
}

/// The cubic-dominated function whose largest zero `y_bar` enters `epsilon_1`.
pub fn q_of(sf: SpaceForm, ell: usize, c0: f64, d2: f64, d3: f64, y: f64) -> f64 {
    let (n, a) = (sf.n() as f64, sf.k().sqrt());
    let pi = std::f64::consts::PI;
    n * pi * c0.powi(ell as i32 + 1) / a * (1.0 + 5.0 * pi / (a * d3)) * y / eps0_of(sf, d2, d3, y)
        + n * pi * pi / 4.0 * y
        + pi / a * y * y
        - d3 * d3 / n * y.powi(3)
}

/// Largest zero of [`q_of`].
pub fn y_bar(sf: SpaceForm, ell: usize, c0: f64, d2: f64, d3: f64) -> f64 {
    let q = |y| q_of(sf, ell, c0, d2, d3, y);
    let mut hi = 1.0;
    while q(hi) >= 0.0 {
        hi *= 2.0;
    }
    // q > 0 just above zero, so walk back to bracket the last sign change
    let mut lo = hi / 2.0;
    while q(lo) < 0.0 && lo > 1e-300 {
        hi = lo;
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `max over axial p of max(0, dist(p, M) - 2 d3) max_M H/(u_p - d3)`.
pub fn psi_axial(p: &Profile, d3: f64, samples: usize) -> Result<f64> {
    let pts = p.embed();
    let (lo, hi) = (-p.rho()[p.cells()], p.rho()[0]);
    let mut best: f64 = 0.0;
    for i in 1..samples {
        let q = lo + (hi - lo) * i as f64 / samples as f64;
        let dist = distance_range(p, &pts, q).0;
        if dist <= 2.0 * d3 {
            continue;
        }
        let cf = curvature(&p.recenter(q)?)?;
        let phi = cf
            .mean
            .iter()
            .zip(&cf.u)
            .map(|(h, u)| h / (u - d3))
            .fold(f64::MIN, f64::max);
        best = best.max((dist - 2.0 * d3) * phi);
    }
    Ok(best)
}

/// Radii and all constants for the current origin. Requires `K > 0`.
pub fn origin_report(p: &Profile, ell: usize) -> Result<OriginReport> {
    let sf = p.space_form();
    if sf.k() <= 0.0 {
        return Err(Error::InvalidSpaceForm("origin constants need K > 0".into()));
    }
    let cf = curvature(p)?;
    let r = radii(p);
    let w = quermass_from_field(sf, &cf).w[ell];
    let ball = ball_radius_from_quermass(sf, ell, w)?;
    let d1 = ball / (r.outradius / r.inradius);
    let d2 = d2_constant(sf, ell, w)?;
    let d3 = (sf.s(d1 / 4.0) / 4.0).min(0.5 / sf.k().sqrt());
    let max_h = cf.max_mean();
    let pinch_c0 = 1.0 / (1.0 / sf.n() as f64 - pinching_deficit(&cf)?);
    let psi = psi_axial(p, d3, 24)?;
    let ybar = y_bar(sf, ell, pinch_c0, d2, d3);
    Ok(OriginReport {
        inradius: r.inradius,
        in_center: r.in_center,
        outradius: r.outradius,
        out_center: r.out_center,
        d1,
        d2,
        d3,
        eps0: config_epsilon(sf, d2, max_h),
        eps1: p.origin_distance(),
        eps1_formula: eps0_of(sf, d2, d3, ybar.max(psi)),
        max_h,
        pinch_c0,
        psi_axial: psi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutradiusBound {
    pub bound: f64,
    pub d2: f64,
    pub outradius: f64,
    /// `outradius <= bound + 1e-6`.
    pub holds: bool,
}

/// `pi/(2 sqrt K) - d2 / max H`, compared with the measured outradius.
pub fn outradius_bound(p: &Profile, ell: usize) -> Result<OutradiusBound> {
    let sf = p.space_form();
    if sf.k() <= 0.0 {
        return Err(Error::InvalidSpaceForm("outradius bound needs K > 0".into()));
    }
    let cf = curvature(p)?;
    outradius_bound_from(p, &cf, ell)
}

fn outradius_bound_from(p: &Profile, cf: &CurvatureField, ell: usize) -> Result<OutradiusBound> {
    let sf = p.space_form();
    let w = quermass_from_field(sf, cf).w[ell];
    let d2 = d2_constant(sf, ell, w)?;
    let bound = sf.hemisphere_radius() - d2 / cf.max_mean();
    let outradius = radii(p).outradius;
    Ok(OutradiusBound { bound, d2, outradius, holds: outradius <= bound + 1e-6 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OriginChoice {
    /// Axial shift to pass to [`Profile::recenter`].
    pub shift: f64,
    pub eps: f64,
}

/// Picks a new origin on the axis such that, about it, `B_{4 eps}` lies inside
/// `Omega` and `max rho <= pi/(2 sqrt K) - 4 eps`. Starts at the outball centre
/// and moves towards the inball centre if needed; both conditions are verified
/// on the recentred profile.
pub fn choose_origin(p: &Profile, ell: usize) -> Result<OriginChoice> {
    let sf = p.space_form();
    let cf = curvature(p)?;
    let r = radii(p);
    let eps = if sf.k() > 0.0 {
        let w = quermass_from_field(sf, &cf).w[ell];
        config_epsilon(sf, d2_constant(sf, ell, w)?, cf.max_mean())
    } else {
        0.0
    };
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let shift = r.out_center + frac * (r.in_center - r.out_center);
        let Ok(moved) = p.recenter(shift) else { continue };
        let inside = moved.origin_distance() >= 4.0 * eps;
        let below = moved.max_rho() <= sf.hemisphere_radius() - 4.0 * eps;
        if inside && below {
            return Ok(OriginChoice { shift, eps });
        }
    }
    Err(Error::ConfigInfeasible(format!(
        "no axial origin between the outball and inball centres satisfies the 4 eps = {} margins",
        4.0 * eps
    )))
}

/// When to move the origin during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ShiftPolicy {
    Off,
    /// Re-choose the origin every `tau0` time units.
    FixedInterval { tau0: f64 },
    /// Re-choose the origin when `min u < u_ratio s_K(rho_-)` or
    /// `max rho > pi/(2 sqrt K) - margin`; never once `omega < freeze_omega`.
    EventDriven { u_ratio: f64, margin: f64, freeze_omega: Option<f64> },
}

impl Default for ShiftPolicy {
    fn default() -> Self {
        ShiftPolicy::EventDriven { u_ratio: 0.95, margin: 0.05, freeze_omega: Some(1e-3) }
    }
}

/// What the shift decision needs to know about the run.
#[derive(Debug, Clone, Copy)]
pub struct ShiftContext<'a> {
    pub profile: &'a Profile,
    pub field: &'a CurvatureField,
    pub t: f64,
    pub last_shift: f64,
    pub omega: f64,
    pub ell: usize,
}

/// Smallest shift worth performing; below this the origin is already where it should be.
pub const MIN_SHIFT: f64 = 1e-6;

pub fn shift_decision(ctx: ShiftContext<'_>, policy: &ShiftPolicy) -> Result<Option<f64>> {
    let p = ctx.profile;
    let sf = p.space_form();
    let wanted = match *policy {
        ShiftPolicy::Off => false,
        ShiftPolicy::FixedInterval { tau0 } => ctx.t - ctx.last_shift >= tau0 - 1e-12,
        ShiftPolicy::EventDriven { u_ratio, margin, freeze_omega } => {
            if freeze_omega.is_some_and(|w| ctx.omega < w) {
                false
            } else {
                let min_u = ctx.field.u.iter().copied().fold(f64::INFINITY, f64::min);
                let floor = u_ratio * sf.s(radii(p).inradius);
                min_u < floor || p.max_rho() > sf.hemisphere_radius() - margin
            }
        }
    };
    if !wanted {
        return Ok(None);
    }
    let choice = choose_origin(p, ctx.ell)?;
    Ok((choice.shift.abs() >= MIN_SHIFT).then_some(choice.shift))
}

/// `(1/(K n)) log(c_K(rho/4)/c_K(rho/2))`: time for which `B_{rho/4}(p)` stays inside.
pub fn inball_persistence_time(sf: SpaceForm, rho: f64) -> f64 {
    (sf.c(rho / 4.0) / sf.c(rho / 2.0)).ln() / (sf.k() * sf.n() as f64)
}

/// Smallest support function of `p` measured about the axis point `q`.
pub fn support_about(p: &Profile, q: f64) -> Result<f64> {
    let cf = curvature(&p.recenter(q)?)?;
    Ok(cf.u.iter().copied().fold(f64::INFINITY, f64::min))
}
