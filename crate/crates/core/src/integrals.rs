//! Mixed volumes, quermassintegrals and the integral identities used as oracles.
//!
//! Mixed volumes are curvature integrals `V_{n-l} = int_M H_l dV`. The
//! quermassintegrals follow from the enclosed volume `W_0`, the area
//! `(n+1) W_1 = |M|`, the convention `W_{n+1} = omega_n/(n+1)` and the recursion
//!
//! ```text
//! V_{n-l} / (n+1) = W_{l+1} - K l/(n+2-l) W_{l-1},     l = 1..n
//! ```
//!
//! used forwards for `l = 1..n-1`. The last instance (`l = n`) is not used to
//! build anything; its residual is a discrete Gauss–Bonnet check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::surface::{binomial, curvature, CurvatureField, Profile};
use crate::spaceform::SpaceForm;

/// Grid used whenever a geodesic ball is evaluated through a constant profile.
pub const BALL_GRID: usize = 512;

/// Offset below `pi/(2 sqrt K)` at which hemisphere values are taken.
pub const HEMISPHERE_OFFSET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Simpson,
    Trapezoid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuermassReport {
    /// `mixed[l] = V_{n-l} = int_M H_l dV`, `l = 0..=n`.
    pub mixed: Vec<f64>,
    /// `w[l] = W_l`, `l = 0..=n+1`.
    pub w: Vec<f64>,
    pub vol: f64,
    pub area: f64,
    pub k: f64,
    pub n: usize,
}

impl QuermassReport {
    /// `V_m` in the usual indexing (`V_n = |M|`, `V_0 = int H_n`).
    pub fn v(&self, m: usize) -> f64 {
        self.mixed[self.n - m]
    }

    /// Largest relative residual of the recursion over `l = 1..n-1`.
    pub fn recursion_residual(&self) -> f64 {
        (1..self.n)
            .map(|l| self.recursion_defect(l))
            .fold(0.0, f64::max)
    }

    /// Relative residual of the recursion at `l = n`, which ties `int H_n` to
    /// the fixed value of `W_{n+1}`.
    pub fn gauss_bonnet_residual(&self) -> f64 {
        self.recursion_defect(self.n)
    }

    fn recursion_defect(&self, l: usize) -> f64 {
        let n = self.n;
        let lhs = self.mixed[l] / (n + 1) as f64;
        let rhs = self.w[l + 1] - self.k * l as f64 / (n + 2 - l) as f64 * self.w[l - 1];
        (lhs - rhs).abs() / self.w[l + 1].abs().max(lhs.abs()).max(f64::MIN_POSITIVE)
    }
}

/// `int_0^rho s_K(r)^n dr`.
pub fn radial_integral(sf: SpaceForm, rho: f64) -> f64 {
    let (k, n) = (sf.k(), sf.n());
    let x = k.abs().sqrt() * rho;
    if k != 0.0 && x >= 0.5 {
        // int_0^x sin^n (resp. sinh^n) by the reduction formula
        let (sx, cx) = if k > 0.0 { x.sin_cos() } else { (x.sinh(), x.cosh()) };
        let mut prev = x;
        let mut cur = if k > 0.0 { 1.0 - cx } else { cx - 1.0 };
        for m in 2..=n {
            let tail = sx.powi(m as i32 - 1) * cx;
            let m1 = (m - 1) as f64 * prev;
            let next = if k > 0.0 { m1 - tail } else { tail - m1 } / m as f64;
            prev = cur;
            cur = next;
        }
        return cur / k.abs().sqrt().powi(n as i32 + 1);
    }
    radial_integral_gl(sf, rho, 16)
}

/// Reference version of [`radial_integral`] with an `m`-point Gauss–Legendre rule.
pub fn radial_integral_gl(sf: SpaceForm, rho: f64, m: usize) -> f64 {
    let (x, w) = gauss_legendre(m);
    let half = 0.5 * rho;
    x.iter()
        .zip(&w)
        .map(|(x, w)| w * sf.s(half * (x + 1.0)).powi(sf.n() as i32))
        .sum::<f64>()
        * half
}

/// Enclosed volume `|Omega|` of a profile whose curvature field is `cf`.
pub fn enclosed_volume(sf: SpaceForm, cf: &CurvatureField) -> f64 {
    let n = sf.n();
    let omega = SpaceForm::unit_sphere_area(n - 1);
    cf.rho
        .iter()
        .zip(&cf.phi)
        .zip(&cf.weights)
        .map(|((&r, &phi), &w)| w * phi.sin().powi(n as i32 - 1) * radial_integral(sf, r))
        .sum::<f64>()
        * omega
}

/// `V_{n-m} = int_M H_m dV`.
pub fn mixed_volume(p: &Profile, m: usize) -> Result<f64> {
    mixed_volume_with(p, m, Rule::Simpson)
}

pub fn mixed_volume_with(p: &Profile, m: usize, rule: Rule) -> Result<f64> {
    let n = p.space_form().n();
    if m > n {
        return Err(Error::InvalidProfile(format!("mixed volume index {m} exceeds n = {n}")));
    }
    let cf = curvature(p)?;
    Ok(match rule {
        Rule::Simpson => cf.integrate(&cf.h_norm[m]),
        Rule::Trapezoid => cf.integrate_trapezoid(&cf.h_norm[m]),
    })
}

/// Quermassintegrals from an already computed curvature field.
pub fn quermass_from_field(sf: SpaceForm, cf: &CurvatureField) -> QuermassReport {
    let (n, k) = (sf.n(), sf.k());
    let mixed: Vec<f64> = (0..=n).map(|l| cf.integrate(&cf.h_norm[l])).collect();
    let vol = enclosed_volume(sf, cf);
    let area = mixed[0];
    let mut w = vec![0.0; n + 2];
    w[0] = vol;
    w[1] = area / (n + 1) as f64;
    for l in 1..n {
        w[l + 1] = mixed[l] / (n + 1) as f64 + k * l as f64 / (n + 2 - l) as f64 * w[l - 1];
    }
    w[n + 1] = SpaceForm::unit_sphere_area(n) / (n + 1) as f64;
    QuermassReport { mixed, w, vol, area, k, n }
}

pub fn quermassintegrals(p: &Profile) -> Result<QuermassReport> {
    Ok(quermass_from_field(p.space_form(), &curvature(p)?))
}

/// `f_l(R) = W_l(B_R)` for the geodesic ball of radius `R`.
pub fn ball_quermass(sf: SpaceForm, ell: usize, radius: f64) -> Result<f64> {
    if ell > sf.n() + 1 {
        return Err(Error::InvalidProfile(format!("quermassintegral index {ell} exceeds n + 1")));
    }
    if !(radius > 0.0) || radius >= sf.hemisphere_radius() {
        return Err(Error::NonConvexSphere { r: radius, k: sf.k() });
    }
    Ok(quermassintegrals(&Profile::sphere(sf, BALL_GRID, radius)?)?.w[ell])
}

/// `W_l` of the open hemisphere, taken as the one-sided limit of ball values.
pub fn hemisphere_quermass(sf: SpaceForm, ell: usize) -> Result<f64> {
    if sf.k() <= 0.0 {
        return Err(Error::InvalidSpaceForm("hemisphere values need K > 0".into()));
    }
    ball_quermass(sf, ell, sf.hemisphere_radius() - HEMISPHERE_OFFSET / sf.k().sqrt())
}

/// Inverse of [`ball_quermass`] in the radius, by bisection to `1e-12`.
pub fn ball_radius_from_quermass(sf: SpaceForm, ell: usize, w: f64) -> Result<f64> {
    if ell > sf.n() {
        return Err(Error::NoBall(w));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::NoBall(w));
    }
    let f = |r: f64| ball_quermass(sf, ell, r);
    let mut lo = 0.0;
    let mut hi = if sf.k() > 0.0 {
        let top = sf.hemisphere_radius() - HEMISPHERE_OFFSET / sf.k().sqrt();
        if w >= f(top)? {
            return Err(Error::NoBall(w));
        }
        top
    } else {
        let mut hi = 1.0;
        while f(hi)? < w {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::NoBall(w));
            }
        }
        hi
    };
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < w {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Relative residual of `(l+1) int u sigma_{l+1} = (n-l) int c_K sigma_l`.
pub fn hsiung_minkowski_residual(p: &Profile, ell: usize) -> Result<f64> {
    let cf = curvature(p)?;
    hsiung_minkowski_from_field(&cf, ell)
}

pub fn hsiung_minkowski_from_field(cf: &CurvatureField, ell: usize) -> Result<f64> {
    let n = cf.n;
    if ell >= n {
        return Err(Error::InvalidProfile(format!("identity index {ell} must be below n = {n}")));
    }
    let lhs_f: Vec<f64> = cf.u.iter().zip(&cf.sigma[ell + 1]).map(|(u, s)| u * s).collect();
    let rhs_f: Vec<f64> = cf.c_k.iter().zip(&cf.sigma[ell]).map(|(c, s)| c * s).collect();
    let lhs = (ell + 1) as f64 * cf.integrate(&lhs_f);
    let rhs = (n - ell) as f64 * cf.integrate(&rhs_f);
    Ok((lhs - rhs).abs() / rhs.abs())
}

/// Elementary symmetric functions `sigma_0..sigma_n` of an arbitrary tuple.
pub fn elementary_symmetric(kappas: &[f64]) -> Vec<f64> {
    let n = kappas.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (i, &k) in kappas.iter().enumerate() {
        for l in (1..=i + 1).rev() {
            e[l] += k * e[l - 1];
        }
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonMaclaurin {
    pub holds: bool,
    /// Smallest relative slack `(H_{l-1} H_k - H_l H_{k-1}) / (H_{l-1} H_k)`.
    pub worst_margin: f64,
}

/// Checks `H_{l-1} H_k >= H_l H_{k-1}` for all `1 <= k < l <= n`.
pub fn newton_maclaurin_check(kappas: &[f64]) -> Result<NewtonMaclaurin> {
    if kappas.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(Error::NotConvex);
    }
    let n = kappas.len();
    // homogeneous inequalities: rescale to keep products near one
    let scale = kappas.iter().copied().fold(0.0, f64::max);
    let scaled: Vec<f64> = kappas.iter().map(|k| k / scale).collect();
    let sigma = elementary_symmetric(&scaled);
    let hn: Vec<f64> = (0..=n).map(|l| sigma[l] / binomial(n, l)).collect();
    let mut worst = f64::INFINITY;
    for l in 2..=n {
        for k in 1..l {
            let big = hn[l - 1] * hn[k];
            let margin = (big - hn[l] * hn[k - 1]) / big;
            worst = worst.min(margin);
        }
    }
    if n < 2 {
        worst = 0.0;
    }
    Ok(NewtonMaclaurin { holds: worst >= -1e-12, worst_margin: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn s3() -> SpaceForm {
        SpaceForm::new(1.0, 2).unwrap()
    }

    #[test]
    fn radial_integral_matches_high_order_quadrature() {
        for n in 2..=5 {
            for k in [-1.0, -1e-3, 0.0, 1e-3, 1.0, 4.0] {
                let sf = SpaceForm::new(k, n).unwrap();
                for r in [0.05, 0.3, 0.7, 1.2] {
                    if r >= sf.hemisphere_radius() {
                        continue;
                    }
                    let a = radial_integral(sf, r);
                    let b = radial_integral_gl(sf, r, 64);
                    assert!((a - b).abs() <= 1e-13 * b.abs(), "n={n} k={k} r={r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn sphere_area_and_top_mixed_volume() {
        let r = 0.8;
        let p = Profile::sphere(s3(), 256, r).unwrap();
        let area = mixed_volume(&p, 0).unwrap();
        assert!((area - 4.0 * PI * r.sin().powi(2)).abs() < 1e-8);
        let v0 = mixed_volume(&p, 2).unwrap();
        assert!((v0 - (1.0 / r.tan()).powi(2) * area).abs() < 1e-8);
    }

    #[test]
    fn ball_volume_and_recursion() {
        let r = 0.8;
        let q = quermassintegrals(&Profile::sphere(s3(), 256, r).unwrap()).unwrap();
        assert!((q.w[0] - PI * (2.0 * r - (2.0 * r).sin())).abs() < 1e-8);
        assert!(q.recursion_residual() < 1e-12);
        assert!(q.gauss_bonnet_residual() < 1e-8);
        assert_eq!(q.w[3], 4.0 * PI / 3.0);
    }

    #[test]
    fn euclidean_ball_closed_forms() {
        // n = 2: W_0 = 4/3 pi R^3, W_1 = 4/3 pi R^2, W_2 = 4/3 pi R, W_3 = 4/3 pi
        let e = SpaceForm::new(0.0, 2).unwrap();
        let r = 1.7;
        let q = quermassintegrals(&Profile::sphere(e, 256, r).unwrap()).unwrap();
        for l in 0..=3 {
            let expect = 4.0 / 3.0 * PI * r.powi(3 - l as i32);
            assert!((q.w[l] - expect).abs() < 1e-8 * expect, "l={l}");
        }
    }

    #[test]
    fn ball_inverse_round_trip() {
        let sf = s3();
        for ell in 0..=2 {
            for r in [0.2, 0.8, 1.4] {
                let w = ball_quermass(sf, ell, r).unwrap();
                let back = ball_radius_from_quermass(sf, ell, w).unwrap();
                let w2 = ball_quermass(sf, ell, back).unwrap();
                assert!((w2 - w).abs() < 1e-10 * w, "{ell} {r} {back}");
                assert!((back - r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hemisphere_volume_is_half_the_sphere() {
        let w = hemisphere_quermass(s3(), 0).unwrap();
        assert!((w - PI * PI).abs() < 1e-7);
        assert!(ball_radius_from_quermass(s3(), 0, 1.01 * w).is_err());
    }

    #[test]
    fn minkowski_on_spheres() {
        let p = Profile::sphere(SpaceForm::new(1.0, 3).unwrap(), 64, 0.6).unwrap();
        for l in 0..3 {
            assert!(hsiung_minkowski_residual(&p, l).unwrap() < 1e-10);
        }
    }

    #[test]
    fn newton_maclaurin_examples() {
        let eq = newton_maclaurin_check(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(eq.holds && eq.worst_margin.abs() < 1e-15);
        // H_1^2 >= H_2 for (1, 2): 9/4 >= 2
        let r = newton_maclaurin_check(&[1.0, 2.0]).unwrap();
        assert!(r.holds);
        assert!((r.worst_margin - (1.0 - 2.0 / 2.25)).abs() < 1e-15);
        assert_eq!(newton_maclaurin_check(&[1.0, 0.0]), Err(Error::NotConvex));
    }

    #[test]
    fn elementary_symmetric_small_case() {
        assert_eq!(elementary_symmetric(&[1.0, 2.0, 3.0]), vec![1.0, 6.0, 11.0, 6.0]);
    }
}
