//! Strictly convex, rotationally symmetric hypersurfaces stored as radial graphs.
//!
//! A [`Profile`] holds `rho(phi_j)` at the uniform polar angles `phi_j = j pi / N`.
//! The hypersurface is swept out by rotating the meridian curve
//! `phi -> (rho(phi), phi)` about the axis `phi = 0`. In the warped metric
//! `dr^2 + s_K(r)^2 (dphi^2 + sin^2 phi g_{S^{n-1}})` the two distinct
//! principal curvatures of the radial graph are
//!
//! ```text
//! kappa_profile = (s c + 2 c rho'^2 / s - rho'') / (s^2 v^3)
//! kappa_rot     = (c / s - rho' cot(phi) / s^2) / v,      v^2 = 1 + rho'^2 / s^2
//! ```
//!
//! with `s = s_K(rho)`, `c = c_K(rho)`, and `kappa_rot` of multiplicity `n - 1`.
//! At the poles `rho' cot(phi)` is replaced by its limit `rho''`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quad::{simpson_weights, trapezoid_weights, CosineSeries};
use crate::spaceform::SpaceForm;

/// Smallest admissible grid size.
pub const MIN_GRID: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    sf: SpaceForm,
    rho: Vec<f64>,
}

impl Profile {
    /// Wraps the samples `rho[j] = rho(j pi / N)`; `N = rho.len() - 1` must be even and at least 32.
    pub fn new(sf: SpaceForm, rho: Vec<f64>) -> Result<Self> {
        let cells = rho.len().saturating_sub(1);
        if cells < MIN_GRID || !cells.is_multiple_of(2) {
            return Err(Error::InvalidProfile(format!(
                "grid size must be even and at least {MIN_GRID}, got {cells}"
            )));
        }
        let limit = sf.antipodal_radius();
        if let Some((j, &r)) = rho
            .iter()
            .enumerate()
            .find(|(_, r)| !r.is_finite() || **r <= 0.0 || **r >= limit)
        {
            return Err(Error::InvalidProfile(format!("rho[{j}] = {r} outside (0, {limit})")));
        }
        Ok(Self { sf, rho })
    }

    /// Samples `f(phi)` on a grid with `cells` intervals.
    pub fn from_fn(sf: SpaceForm, cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = PI / cells as f64;
        Self::new(sf, (0..=cells).map(|j| f(j as f64 * h)).collect())
    }

    /// Geodesic sphere of radius `radius` centred at the origin.
    pub fn sphere(sf: SpaceForm, cells: usize, radius: f64) -> Result<Self> {
        Self::from_fn(sf, cells, |_| radius)
    }

    /// Geodesic sphere of radius `radius` centred on the axis at signed distance `center`.
    pub fn off_center_sphere(sf: SpaceForm, cells: usize, radius: f64, center: f64) -> Result<Self> {
        if center.abs() >= radius {
            return Err(Error::OriginEscape(center));
        }
        Self::from_fn(sf, cells, |phi| sf.sphere_graph(radius, center, phi))
    }

    /// Random strictly convex profile about the origin: base radius in
    /// `[0.5, 0.9]` (scaled by `1/sqrt K` when `K > 0`) plus cosine modes
    /// `k = 1..4` of relative amplitude up to `0.05 / k^2`, halved until the
    /// result is strictly convex.
    pub fn random_convex(sf: SpaceForm, cells: usize, rng: &mut impl rand::Rng) -> Result<Self> {
        let scale = if sf.k() > 0.0 { 1.0 / sf.k().sqrt() } else { 1.0 };
        let base = scale * rng.gen_range(0.5..0.9);
        let mut amps: Vec<f64> = (1..=4).map(|k| base * rng.gen_range(-0.05..0.05) / (k * k) as f64).collect();
        for _ in 0..30 {
            let p = Self::from_fn(sf, cells, |phi| {
                base + amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * phi).cos()).sum::<f64>()
            })?;
            if curvature(&p)?.min_kappa() > 0.0 {
                return Ok(p);
            }
            amps.iter_mut().for_each(|a| *a *= 0.5);
        }
        Self::sphere(sf, cells, base)
    }

    pub fn space_form(&self) -> SpaceForm {
        self.sf
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Number of grid intervals `N`.
    pub fn cells(&self) -> usize {
        self.rho.len() - 1
    }

    pub fn h(&self) -> f64 {
        PI / self.cells() as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    pub fn max_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::MAX, f64::min)
    }

    /// `dist(origin, M)`, refined by a parabola through the smallest sample and its neighbours.
    pub fn origin_distance(&self) -> f64 {
        let (j, _) = self
            .rho
            .iter()
            .enumerate()
            .fold((0, f64::MAX), |acc, (j, &r)| if r < acc.1 { (j, r) } else { acc });
        let (a, b, c) = (self.ext(j as isize - 1), self.rho[j], self.ext(j as isize + 1));
        let denom = a - 2.0 * b + c;
        if denom > 0.0 {
            b - (c - a) * (c - a) / (8.0 * denom)
        } else {
            b
        }
    }

    /// Same curve, new samples (for time stepping).
    pub(crate) fn with_rho(&self, rho: Vec<f64>) -> Result<Self> {
        Self::new(self.sf, rho)
    }

    /// Sample with even reflection across both poles.
    fn ext(&self, j: isize) -> f64 {
        let n = self.cells() as isize;
        let i = if j < 0 {
            -j
        } else if j > n {
            2 * n - j
        } else {
            j
        };
        self.rho[i as usize]
    }

    /// Fourth-order central first and second derivatives.
    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.cells();
        let h = self.h();
        let mut d1 = vec![0.0; n + 1];
        let mut d2 = vec![0.0; n + 1];
        for j in 0..=n {
            let ji = j as isize;
            let (m2, m1, c, p1, p2) = (
                self.ext(ji - 2),
                self.ext(ji - 1),
                self.rho[j],
                self.ext(ji + 1),
                self.ext(ji + 2),
            );
            // differences against the centre value keep constants exact
            d1[j] = ((m2 - p2) + 8.0 * (p1 - m1)) / (12.0 * h);
            d2[j] = (16.0 * ((m1 - c) + (p1 - c)) - ((m2 - c) + (p2 - c))) / (12.0 * h * h);
        }
        d1[0] = 0.0;
        d1[n] = 0.0;
        (d1, d2)
    }

    /// Grid index and first/second derivative weights of each of the five
    /// samples `derivatives` combines at node `j`.
    pub(crate) fn stencil(&self, j: usize) -> [(usize, f64, f64); 5] {
        let n = self.cells() as isize;
        let h = self.h();
        let w1 = [1.0, -8.0, 0.0, 8.0, -1.0];
        let w2 = [-1.0, 16.0, -30.0, 16.0, -1.0];
        let pole = j == 0 || j == self.cells();
        std::array::from_fn(|k| {
            let i = j as isize + k as isize - 2;
            let i = if i < 0 { -i } else if i > n { 2 * n - i } else { i };
            let d1 = if pole { 0.0 } else { w1[k] / (12.0 * h) };
            (i as usize, d1, w2[k] / (12.0 * h * h))
        })
    }

    /// Spectral interpolant of `rho`, used wherever off-grid values are needed.
    pub fn interpolant(&self) -> CosineSeries {
        CosineSeries::new(&self.rho)
    }

    /// Ambient meridian-plane coordinates `[w, x, y]` of every grid point.
    ///
    /// For `K > 0` these are points of the sphere of radius `1/sqrt(K)` in the
    /// `(w, x, y)` 3-space spanned by the origin direction, the axis and one
    /// rotational direction; the remaining `n - 1` ambient coordinates vanish.
    /// For `K = 0`, `w = 0` and `(x, y)` are Euclidean coordinates.
    pub fn embed(&self) -> Vec<[f64; 3]> {
        self.rho
            .iter()
            .enumerate()
            .map(|(j, &r)| self.sf.polar_to_point(r, self.phi(j)))
            .collect()
    }

    /// The same point set expressed as a radial graph about the axis point at
    /// signed distance `shift` from the current origin.
    pub fn recenter(&self, shift: f64) -> Result<Self> {
        if shift == 0.0 {
            return Ok(self.clone());
        }
        if !(shift < self.rho[0] && -shift < self.rho[self.cells()]) {
            return Err(Error::OriginEscape(shift));
        }
        let sf = self.sf;
        let series = self.interpolant();
        let map = |phi: f64| -> (f64, f64) {
            let r = series.eval(phi);
            let p = sf.shift_along_axis(sf.polar_to_point(r, phi), shift);
            let (rr, pp) = sf.point_to_polar(p);
            (pp.abs(), rr)
        };
        let new_rho = resample(self.cells(), map, true)?;
        Self::new(sf, new_rho).map_err(|e| Error::RecenterFailure(e.to_string()))
    }

    /// Plain-text serialisation: header `K n N`, then `phi rho` rows, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:.16e} {} {}", self.sf.k(), self.sf.n(), self.cells());
        for (j, r) in self.rho.iter().enumerate() {
            let _ = writeln!(out, "{:.16e} {:.16e}", self.phi(j), r);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty profile".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse { line: hl + 1, msg: "header must be `K n N`".into() });
        }
        let parse_err = |line: usize, what: &str| Error::Parse { line: line + 1, msg: format!("bad {what}") };
        let k: f64 = fields[0].parse().map_err(|_| parse_err(hl, "K"))?;
        let n: usize = fields[1].parse().map_err(|_| parse_err(hl, "n"))?;
        let cells: usize = fields[2].parse().map_err(|_| parse_err(hl, "N"))?;
        let sf = SpaceForm::new(k, n)?;
        let mut rho = Vec::with_capacity(cells + 1);
        for (ln, line) in lines {
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse { line: ln + 1, msg: "expected `phi rho`".into() });
            }
            let _phi: f64 = cols[0].parse().map_err(|_| parse_err(ln, "phi"))?;
            rho.push(cols[1].parse::<f64>().map_err(|_| parse_err(ln, "rho"))?);
        }
        if rho.len() != cells + 1 {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header announces N = {cells} but {} rows follow", rho.len()),
            });
        }
        Self::new(sf, rho)
    }
}

/// Builds uniform-grid samples of a curve given as a monotone parametrisation
/// `t -> (angle, radius)` over `t in [0, pi]`. With `increasing = false` the
/// angle runs from `pi` down to `0`.
pub(crate) fn resample(
    cells: usize,
    map: impl Fn(f64) -> (f64, f64),
    increasing: bool,
) -> Result<Vec<f64>> {
    let h = PI / cells as f64;
    let samples: Vec<(f64, f64)> = (0..=cells).map(|j| map(j as f64 * h)).collect();
    let angle = |t: f64| {
        let a = map(t).0;
        if increasing {
            a
        } else {
            PI - a
        }
    };
    let ang: Vec<f64> = samples
        .iter()
        .map(|s| if increasing { s.0 } else { PI - s.0 })
        .collect();
    for j in 0..cells {
        if !(ang[j + 1] > ang[j]) {
            return Err(Error::RecenterFailure(format!(
                "curve is not a radial graph about the new centre near grid index {j}"
            )));
        }
    }
    let mut out = vec![0.0; cells + 1];
    let mut seg = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let target = i as f64 * h;
        if i == 0 {
            *slot = samples[0].1;
            continue;
        }
        if i == cells {
            *slot = samples[cells].1;
            continue;
        }
        while seg < cells - 1 && ang[seg + 1] < target {
            seg += 1;
        }
        // safeguarded secant (Illinois) on [t_seg, t_seg+1]
        let (mut a, mut b) = (seg as f64 * h, (seg + 1) as f64 * h);
        let (mut fa, mut fb) = (ang[seg] - target, ang[seg + 1] - target);
        if fa == 0.0 {
            *slot = samples[seg].1;
            continue;
        }
        if fb == 0.0 {
            *slot = samples[seg + 1].1;
            continue;
        }
        let mut side = 0i8;
        let mut t = 0.5 * (a + b);
        for _ in 0..100 {
            t = (a * fb - b * fa) / (fb - fa);
            let ft = angle(t) - target;
            if ft.abs() < 1e-15 || (b - a).abs() < 1e-15 {
                break;
            }
            if ft * fb > 0.0 {
                b = t;
                fb = ft;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                a = t;
                fa = ft;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            }
        }
        *slot = map(t).1;
    }
    Ok(out)
}

/// Per-grid-point geometry of a profile.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub n: usize,
    pub k: f64,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
    /// Curvature of the meridian direction.
    pub kappa_profile: Vec<f64>,
    /// Curvature of the rotational directions (multiplicity `n - 1`).
    pub kappa_rot: Vec<f64>,
    pub mean: Vec<f64>,
    /// `sigma[l][j]`, `l = 0..=n`.
    pub sigma: Vec<Vec<f64>>,
    /// Normalised `H_l = sigma_l / C(n, l)`.
    pub h_norm: Vec<Vec<f64>>,
    /// Generalised support function `s_K(rho)/v`.
    pub u: Vec<f64>,
    pub c_k: Vec<f64>,
    pub v: Vec<f64>,
    /// Area density: `dV = density dphi` after integrating out the rotation.
    pub density: Vec<f64>,
    /// Simpson weights on the grid.
    pub weights: Vec<f64>,
    /// Minimum sectional curvature of the hypersurface at each point.
    pub sec_min: Vec<f64>,
    /// Maximum sectional curvature of the hypersurface at each point.
    pub sec_max: Vec<f64>,
}

/// `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Elementary symmetric functions of `(kp, kr, ..., kr)` with `kr` repeated `n - 1` times.
pub fn sigma_axisymmetric(n: usize, kp: f64, kr: f64) -> Vec<f64> {
    (0..=n)
        .map(|l| {
            let a = binomial(n - 1, l) * kr.powi(l as i32);
            let b = if l >= 1 {
                kp * binomial(n - 1, l - 1) * kr.powi(l as i32 - 1)
            } else {
                0.0
            };
            a + b
        })
        .collect()
}

impl CurvatureField {
    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn min_kappa(&self) -> f64 {
        self.kappa_profile
            .iter()
            .chain(&self.kappa_rot)
            .copied()
            .fold(f64::MAX, f64::min)
    }

    pub fn max_kappa(&self) -> f64 {
        self.kappa_profile
            .iter()
            .chain(&self.kappa_rot)
            .copied()
            .fold(f64::MIN, f64::max)
    }

    pub fn is_strictly_convex(&self) -> bool {
        self.min_kappa() > 0.0
    }

    pub fn max_mean(&self) -> f64 {
        self.mean.iter().copied().fold(f64::MIN, f64::max)
    }

    /// Principal curvatures at grid point `j`, as an `n`-tuple.
    pub fn kappas(&self, j: usize) -> Vec<f64> {
        let mut k = vec![self.kappa_rot[j]; self.n];
        k[0] = self.kappa_profile[j];
        k
    }

    /// `int_M f dV` with the Simpson rule.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.density)
            .zip(&self.weights)
            .map(|((f, d), w)| f * d * w)
            .sum()
    }

    /// `int_M f dV` with the trapezoid rule.
    pub fn integrate_trapezoid(&self, f: &[f64]) -> f64 {
        let cells = self.len() - 1;
        let w = trapezoid_weights(cells, PI / cells as f64);
        f.iter().zip(&self.density).zip(&w).map(|((f, d), w)| f * d * w).sum()
    }

    pub fn area(&self) -> f64 {
        self.density.iter().zip(&self.weights).map(|(d, w)| d * w).sum()
    }
}

/// `(kappa_profile, kappa_rot, v)` at one point from `rho`, `rho'`, `rho''` and
/// `rho' cot(phi)` (which is `rho''` at the poles).
pub fn point_curvatures(sf: SpaceForm, r: f64, r1: f64, r2: f64, r1_cot: f64) -> (f64, f64, f64) {
    let (s, c) = sf.sc(r);
    let q = r1 / s;
    let v = (1.0 + q * q).sqrt();
    let kp = (s * c + 2.0 * c * r1 * r1 / s - r2) / (s * s * v * v * v);
    let kr = (c / s - r1_cot / (s * s)) / v;
    (kp, kr, v)
}

/// Full curvature field of a profile.
pub fn curvature(p: &Profile) -> Result<CurvatureField> {
    let sf = p.space_form();
    let (n, k) = (sf.n(), sf.k());
    let cells = p.cells();
    let h = p.h();
    let (d1, d2) = p.derivatives();
    let omega = SpaceForm::unit_sphere_area(n - 1);
    let weights = simpson_weights(cells, h);

    let len = cells + 1;
    let mut f = CurvatureField {
        n,
        k,
        phi: (0..len).map(|j| p.phi(j)).collect(),
        rho: p.rho().to_vec(),
        kappa_profile: vec![0.0; len],
        kappa_rot: vec![0.0; len],
        mean: vec![0.0; len],
        sigma: vec![vec![0.0; len]; n + 1],
        h_norm: vec![vec![0.0; len]; n + 1],
        u: vec![0.0; len],
        c_k: vec![0.0; len],
        v: vec![0.0; len],
        density: vec![0.0; len],
        weights,
        sec_min: vec![0.0; len],
        sec_max: vec![0.0; len],
    };
    let binoms: Vec<f64> = (0..=n).map(|l| binomial(n, l)).collect();

    for j in 0..len {
        let (r, r1, r2) = (p.rho()[j], d1[j], d2[j]);
        if !(r1.is_finite() && r2.is_finite()) {
            return Err(Error::CorruptProfile(j));
        }
        let phi = f.phi[j];
        let (s, c) = (sf.s(r), sf.c(r));
        if !(s > 0.0) {
            return Err(Error::LostStarshapedness(j));
        }
        let q = r1 / s;
        let v = (1.0 + q * q).sqrt();
        let r1_cot = if j == 0 || j == cells { r2 } else { r1 * phi.cos() / phi.sin() };
        let kp = (s * c + 2.0 * c * r1 * r1 / s - r2) / (s * s * v * v * v);
        let kr = (c / s - r1_cot / (s * s)) / v;
        let u = s / v;
        if !(u > 0.0) {
            return Err(Error::LostStarshapedness(j));
        }
        f.kappa_profile[j] = kp;
        f.kappa_rot[j] = kr;
        f.mean[j] = kp + (n - 1) as f64 * kr;
        let sig = sigma_axisymmetric(n, kp, kr);
        for l in 0..=n {
            f.sigma[l][j] = sig[l];
            f.h_norm[l][j] = sig[l] / binoms[l];
        }
        f.u[j] = u;
        f.c_k[j] = c;
        f.v[j] = v;
        f.density[j] = omega * s.powi(n as i32) * v * phi.sin().powi(n as i32 - 1);
        let mixed = kp * kr + k;
        let (lo, hi) = if n >= 3 {
            let rr = kr * kr + k;
            (mixed.min(rr), mixed.max(rr))
        } else {
            (mixed, mixed)
        };
        f.sec_min[j] = lo;
        f.sec_max[j] = hi;
    }
    // the density vanishes at the poles for n >= 2; the quadrature weights handle the rest
    Ok(f)
}
