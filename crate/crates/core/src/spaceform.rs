//! Trigonometric kernel of the simply connected space form of curvature `K`.
//!
//! `s_K`, `c_K = s_K'` and `co_K = c_K / s_K` reduce to `sin`, `r` or `sinh`
//! depending on the sign of `K`. Near `K = 0` the kernel switches to a short
//! Taylor series so the three branches join continuously.
//!
//! The module also carries the model of the totally geodesic 2-plane that
//! contains the symmetry axis (the "meridian plane"). Points there are stored
//! as ambient coordinates `[w, x, y]`: on the sphere of radius `1/sqrt(K)` in
//! `R^3` for `K > 0`, on the hyperboloid for `K < 0`, and as `[0, x, y]` for
//! `K = 0`. The origin is `[1/sqrt(K), 0, 0]` (resp. `[0, 0, 0]`), the symmetry
//! axis is the `x` direction.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Below this value of `|K| r^2` the kernel is evaluated by its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceForm {
    k: f64,
    n: usize,
}

impl SpaceForm {
    pub fn new(k: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpaceForm(format!(
                "hypersurface dimension must be at least 2, got {n}"
            )));
        }
        if !k.is_finite() {
            return Err(Error::InvalidSpaceForm(format!("curvature {k} is not finite")));
        }
        Ok(Self { k, n })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn sqrt_abs_k(&self) -> f64 {
        self.k.abs().sqrt()
    }

    /// `s_K(r)`.
    pub fn s(&self, r: f64) -> f64 {
        let k = self.k;
        let x = k * r * r;
        if x.abs() < SERIES_THRESHOLD {
            return r * (1.0 - x / 6.0 + x * x / 120.0);
        }
        let a = self.sqrt_abs_k();
        if k > 0.0 {
            (a * r).sin() / a
        } else {
            (a * r).sinh() / a
        }
    }

    /// `(s_K(r), c_K(r))` in one evaluation.
    pub fn sc(&self, r: f64) -> (f64, f64) {
        let x = self.k * r * r;
        if x.abs() < SERIES_THRESHOLD {
            return (self.s(r), self.c(r));
        }
        let a = self.sqrt_abs_k();
        if self.k > 0.0 {
            let (s, c) = (a * r).sin_cos();
            (s / a, c)
        } else {
            ((a * r).sinh() / a, (a * r).cosh())
        }
    }

    /// `c_K(r) = s_K'(r)`.
    pub fn c(&self, r: f64) -> f64 {
        let k = self.k;
        let x = k * r * r;
        if x.abs() < SERIES_THRESHOLD {
            return 1.0 - x / 2.0 + x * x / 24.0;
        }
        let a = self.sqrt_abs_k();
        if k > 0.0 {
            (a * r).cos()
        } else {
            (a * r).cosh()
        }
    }

    /// `co_K(r) = c_K(r) / s_K(r)`, unchecked.
    pub fn co(&self, r: f64) -> f64 {
        self.c(r) / self.s(r)
    }

    /// Range-checked `s_K`.
    pub fn try_s(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.s(r))
    }

    /// Range-checked `c_K`.
    pub fn try_c(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.c(r))
    }

    /// Range-checked `co_K`; additionally requires `r > 0`.
    pub fn try_co(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        if r <= 0.0 {
            return Err(Error::InvalidRadius { r, k: self.k });
        }
        Ok(self.co(r))
    }

    /// Radial coordinates must lie in `[0, pi/sqrt(K))`.
    pub fn check_radius(&self, r: f64) -> Result<()> {
        if !r.is_finite() || r < 0.0 || r >= self.antipodal_radius() {
            return Err(Error::InvalidRadius { r, k: self.k });
        }
        Ok(())
    }

    /// `pi/sqrt(K)` for `K > 0`, infinity otherwise.
    pub fn antipodal_radius(&self) -> f64 {
        if self.k > 0.0 {
            PI / self.k.sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// `pi/(2 sqrt(K))` for `K > 0`, infinity otherwise.
    pub fn hemisphere_radius(&self) -> f64 {
        if self.k > 0.0 {
            0.5 * PI / self.k.sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Each principal curvature `co_K(R)` of the geodesic sphere of radius `R`.
    pub fn sphere_principal_curvature(&self, radius: f64) -> Result<f64> {
        if !(radius > 0.0) || radius >= self.hemisphere_radius() {
            return Err(Error::NonConvexSphere { r: radius, k: self.k });
        }
        Ok(self.co(radius))
    }

    /// Mean curvature `n co_K(R)` of the geodesic sphere of radius `R`.
    pub fn sphere_mean_curvature(&self, radius: f64) -> Result<f64> {
        Ok(self.n as f64 * self.sphere_principal_curvature(radius)?)
    }

    /// Area of the unit `m`-sphere in `R^{m+1}`.
    pub fn unit_sphere_area(m: usize) -> f64 {
        // omega_m = 2 pi/(m-1) * omega_{m-2}
        let (mut even, mut odd) = (2.0, 2.0 * PI);
        if m == 0 {
            return even;
        }
        if m == 1 {
            return odd;
        }
        let mut j = 2;
        loop {
            let next = 2.0 * PI / (j as f64 - 1.0) * if j % 2 == 0 { even } else { odd };
            if j % 2 == 0 {
                even = next;
            } else {
                odd = next;
            }
            if j == m {
                return next;
            }
            j += 1;
        }
    }

    // ---- meridian plane model ----

    /// Ambient coordinates of the meridian-plane point at distance `r` from the
    /// origin and polar angle `phi` measured from the positive axis.
    pub fn polar_to_point(&self, r: f64, phi: f64) -> [f64; 3] {
        let (sp, cp) = phi.sin_cos();
        let k = self.k;
        if k == 0.0 {
            return [0.0, r * cp, r * sp];
        }
        let a = self.sqrt_abs_k();
        let w = self.c(r) / a;
        let s = self.s(r);
        [w, s * cp, s * sp]
    }

    /// Inverse of [`polar_to_point`](Self::polar_to_point): `(r, phi)` with `phi` in `[-pi, pi]`.
    pub fn point_to_polar(&self, p: [f64; 3]) -> (f64, f64) {
        let perp = p[1].hypot(p[2]);
        let phi = p[2].atan2(p[1]);
        let k = self.k;
        if k == 0.0 {
            return (perp, phi);
        }
        let a = self.sqrt_abs_k();
        let r = if k > 0.0 {
            (a * perp).atan2(a * p[0]) / a
        } else {
            (a * perp).asinh() / a
        };
        (r, phi)
    }

    /// The isometry that moves the axis point at signed distance `shift` to the origin,
    /// keeping the axis (and the orientation along it) fixed.
    pub fn shift_along_axis(&self, p: [f64; 3], shift: f64) -> [f64; 3] {
        let k = self.k;
        if k == 0.0 {
            return [0.0, p[1] - shift, p[2]];
        }
        let a = self.sqrt_abs_k();
        let t = a * shift;
        if k > 0.0 {
            let (st, ct) = t.sin_cos();
            [p[0] * ct + p[1] * st, -p[0] * st + p[1] * ct, p[2]]
        } else {
            let (st, ct) = (t.sinh(), t.cosh());
            [p[0] * ct - p[1] * st, -p[0] * st + p[1] * ct, p[2]]
        }
    }

    /// Geodesic distance between two meridian-plane points.
    pub fn distance(&self, p: [f64; 3], q: [f64; 3]) -> f64 {
        let k = self.k;
        if k == 0.0 {
            return (p[1] - q[1]).hypot(p[2] - q[2]);
        }
        let a = self.sqrt_abs_k();
        let (pa, qa) = (p.map(|x| x * a), q.map(|x| x * a));
        if k > 0.0 {
            let cross = [
                pa[1] * qa[2] - pa[2] * qa[1],
                pa[2] * qa[0] - pa[0] * qa[2],
                pa[0] * qa[1] - pa[1] * qa[0],
            ];
            let cn = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
            let dot = pa[0] * qa[0] + pa[1] * qa[1] + pa[2] * qa[2];
            cn.atan2(dot) / a
        } else {
            // chordal form keeps full precision for nearby points
            let d = [pa[0] - qa[0], pa[1] - qa[1], pa[2] - qa[2]];
            let chord = (-d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).max(0.0).sqrt();
            2.0 * (0.5 * chord).asinh() / a
        }
    }

    /// Axis point at signed distance `t` from the origin.
    pub fn axis_point(&self, t: f64) -> [f64; 3] {
        if t >= 0.0 {
            self.polar_to_point(t, 0.0)
        } else {
            self.polar_to_point(-t, PI)
        }
    }

    /// Polar radius of the geodesic sphere with radius `radius` centred on the axis
    /// at signed distance `center`, in direction `phi`. Requires the origin to lie
    /// inside the sphere (`|center| < radius`).
    pub fn sphere_graph(&self, radius: f64, center: f64, phi: f64) -> f64 {
        let k = self.k;
        let cp = phi.cos();
        if k == 0.0 {
            let sp = phi.sin();
            return center * cp + (radius * radius - center * center * sp * sp).sqrt();
        }
        let a = self.sqrt_abs_k();
        let (ar, ac) = (a * radius, a * center);
        if k > 0.0 {
            // cos(c) cos(r) + sin(c) cos(phi) sin(r) = cos(R)
            let (p, q) = (ac.cos(), ac.sin() * cp);
            let norm = p.hypot(q);
            let theta = q.atan2(p);
            (theta + (ar.cos() / norm).clamp(-1.0, 1.0).acos()) / a
        } else {
            // cosh(c) cosh(r) - sinh(c) cos(phi) sinh(r) = cosh(R)
            let (p, q) = (ac.cosh(), ac.sinh() * cp);
            let norm = (p * p - q * q).sqrt();
            let theta = (q / p).atanh();
            (theta + (ar.cosh() / norm).max(1.0).acosh()) / a
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(k: f64) -> SpaceForm {
        SpaceForm::new(k, 2).unwrap()
    }

    #[test]
    fn fused_kernels_match() {
        for k in [-2.0, -1e-9, 0.0, 1e-9, 1.0, 4.0] {
            let sf = SpaceForm::new(k, 2).unwrap();
            for r in [1e-6, 0.1, 0.7, 1.5] {
                let (s, c) = sf.sc(r);
                assert!((s - sf.s(r)).abs() <= 1e-15 * sf.s(r).abs().max(1.0));
                assert!((c - sf.c(r)).abs() <= 1e-15 * sf.c(r).abs().max(1.0));
            }
        }
    }

    #[test]
    fn euclidean_branch() {
        let e = sf(0.0);
        for r in [0.0, 0.3, 2.0, 17.0] {
            assert_eq!(e.s(r), r);
            assert_eq!(e.c(r), 1.0);
        }
    }

    #[test]
    fn sphere_at_quarter_turn() {
        let s = sf(1.0);
        assert!((s.s(PI / 2.0) - 1.0).abs() < 1e-15);
        assert!(s.c(PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn pythagorean_identity_all_branches() {
        for k in [-3.0, -1.0, -1e-9, 0.0, 1e-9, 0.5, 1.0, 4.0] {
            let s = sf(k);
            for i in 1..50 {
                let r = i as f64 * 0.03;
                if r >= s.antipodal_radius() {
                    continue;
                }
                let (sv, cv) = (s.s(r), s.c(r));
                assert!((cv * cv + k * sv * sv - 1.0).abs() < 1e-12, "k={k} r={r}");
            }
        }
    }

    #[test]
    fn sphere_curvatures() {
        let s2 = sf(1.0);
        assert!((s2.sphere_mean_curvature(PI / 4.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((sf(0.0).sphere_mean_curvature(2.0).unwrap() - 1.0).abs() < 1e-15);
        let s3 = SpaceForm::new(1.0, 3).unwrap();
        let h = s3.sphere_mean_curvature(PI / 3.0).unwrap();
        assert!((h - 3.0 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn non_convex_sphere_rejected() {
        let s = sf(1.0);
        assert!(matches!(s.sphere_mean_curvature(PI / 2.0), Err(Error::NonConvexSphere { .. })));
        assert!(matches!(s.sphere_mean_curvature(0.0), Err(Error::NonConvexSphere { .. })));
        assert!(sf(-1.0).sphere_mean_curvature(50.0).is_ok());
    }

    #[test]
    fn radius_domain() {
        let s = sf(1.0);
        assert!(matches!(s.try_co(PI), Err(Error::InvalidRadius { .. })));
        assert!(matches!(s.try_s(-0.1), Err(Error::InvalidRadius { .. })));
        assert!(s.try_co(0.0).is_err());
        assert!(sf(-1.0).try_c(100.0).is_ok());
    }

    #[test]
    fn rejects_curves() {
        assert!(SpaceForm::new(1.0, 1).is_err());
        assert!(SpaceForm::new(f64::NAN, 2).is_err());
    }

    #[test]
    fn unit_sphere_areas() {
        assert!((SpaceForm::unit_sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((SpaceForm::unit_sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((SpaceForm::unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((SpaceForm::unit_sphere_area(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn meridian_model_round_trip() {
        for k in [-1.0, 0.0, 1.0] {
            let s = sf(k);
            for &(r, phi) in &[(0.3, 0.2), (1.2, 2.9), (0.7, PI / 2.0)] {
                let (r2, p2) = s.point_to_polar(s.polar_to_point(r, phi));
                assert!((r - r2).abs() < 1e-13 && (phi - p2).abs() < 1e-13, "k={k}");
            }
        }
    }

    #[test]
    fn axis_shift_is_an_isometry() {
        for k in [-1.0, 0.0, 1.0] {
            let s = sf(k);
            let p = s.polar_to_point(0.8, 1.1);
            let q = s.polar_to_point(0.5, 2.3);
            let d = s.distance(p, q);
            let d2 = s.distance(s.shift_along_axis(p, 0.37), s.shift_along_axis(q, 0.37));
            assert!((d - d2).abs() < 1e-13);
            let moved = s.shift_along_axis(s.axis_point(0.37), 0.37);
            assert!(s.point_to_polar(moved).0.abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_graph_matches_distance() {
        for k in [-1.0, 0.0, 1.0] {
            let s = sf(k);
            let (radius, center) = (0.7, 0.2);
            let c = s.axis_point(center);
            for i in 0..=16 {
                let phi = PI * i as f64 / 16.0;
                let r = s.sphere_graph(radius, center, phi);
                let d = s.distance(s.polar_to_point(r, phi), c);
                assert!((d - radius).abs() < 1e-12, "k={k} phi={phi}");
            }
        }
    }
}
