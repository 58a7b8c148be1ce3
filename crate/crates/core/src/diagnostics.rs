//! Monitored quantities: pinching deficit, traceless second fundamental form,
//! exponential decay fits and the sphere-fit residual.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::simpson_weights;
use crate::spaceform::SpaceForm;
use crate::surface::{CurvatureField, Profile};

/// One sample of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mu: f64,
    #[serde(rename = "W_ell")]
    pub w_ell: f64,
    pub omega: f64,
    pub min_kappa: f64,
    pub max_kappa: f64,
    pub max_rho: f64,
    pub min_rho: f64,
    pub min_u: f64,
    pub traceless_sup: f64,
    pub sphere_fit_radius: f64,
    pub sphere_fit_center: f64,
    pub sphere_fit_residual: f64,
    pub min_sec: f64,
    /// `min kappa_1 / kappa_n` over the grid.
    pub pinching_ratio: f64,
    pub max_h: f64,
}

/// `1/n - min (kappa_1 / H)`; zero exactly at umbilic hypersurfaces.
pub fn pinching_deficit(cf: &CurvatureField) -> Result<f64> {
    let n = cf.n as f64;
    let mut worst = f64::INFINITY;
    for j in 0..cf.len() {
        let h = cf.mean[j];
        if !(h > 0.0) {
            return Err(Error::NotMeanConvex(j));
        }
        worst = worst.min(cf.kappa_profile[j].min(cf.kappa_rot[j]) / h);
    }
    // rounding can push an umbilic point a hair past 1/n
    Ok((1.0 / n - worst).max(0.0))
}

/// Pointwise `|A°|^2 = sum kappa_i^2 - H^2/n`.
pub fn traceless_norm_sq(cf: &CurvatureField) -> Vec<f64> {
    let n = cf.n as f64;
    cf.kappa_profile
        .iter()
        .zip(&cf.kappa_rot)
        .map(|(p, r)| (n - 1.0) / n * (p - r) * (p - r))
        .collect()
}

/// Minimum sectional curvature from the Gauss equation, recomputed from the
/// principal curvatures alone.
pub fn min_sectional(k: f64, n: usize, kappa_profile: &[f64], kappa_rot: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for (p, r) in kappa_profile.iter().zip(kappa_rot) {
        m = m.min(p * r + k);
        if n >= 3 {
            m = m.min(r * r + k);
        }
    }
    m
}

/// `min kappa_1/kappa_n` over the grid.
pub fn pinching_ratio(cf: &CurvatureField) -> f64 {
    cf.kappa_profile
        .iter()
        .zip(&cf.kappa_rot)
        .map(|(p, r)| p.min(*r) / p.max(*r))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereFit {
    pub radius: f64,
    /// Signed axial offset of the fitted centre from the origin.
    pub center: f64,
    /// Weighted RMS of `rho - sphere graph` (a length).
    pub residual: f64,
    pub iterations: usize,
}

/// Gauss–Newton fit of a geodesic sphere centred on the axis, in the norm
/// `L^2(sin^{n-1} phi dphi)`.
pub fn sphere_fit(p: &Profile) -> Result<SphereFit> {
    const MAX_ITER: usize = 100;
    let sf = p.space_form();
    let cells = p.cells();
    let simpson = simpson_weights(cells, p.h());
    let phi: Vec<f64> = (0..=cells).map(|j| p.phi(j)).collect();
    let wts: Vec<f64> = phi
        .iter()
        .zip(&simpson)
        .map(|(f, w)| w * f.sin().powi(sf.n() as i32 - 1))
        .collect();
    let total: f64 = wts.iter().sum();
    let rho = p.rho();

    let objective = |r: f64, c: f64| -> f64 {
        if !admissible(sf, r, c) {
            return f64::INFINITY;
        }
        phi.iter()
            .zip(rho)
            .zip(&wts)
            .map(|((&f, &x), &w)| {
                let d = x - sf.sphere_graph(r, c, f);
                w * d * d
            })
            .sum()
    };

    let mut r = rho.iter().zip(&wts).map(|(x, w)| x * w).sum::<f64>() / total;
    let mut c = 0.0;
    let mut obj = objective(r, c);
    for it in 0..MAX_ITER {
        // normal equations with a central-difference Jacobian
        let eps = 1e-7 * r.max(1e-3);
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..=cells {
            let g = sf.sphere_graph(r, c, phi[j]);
            let jr = (sf.sphere_graph(r + eps, c, phi[j]) - sf.sphere_graph(r - eps, c, phi[j])) / (2.0 * eps);
            let jc = (sf.sphere_graph(r, c + eps, phi[j]) - sf.sphere_graph(r, c - eps, phi[j])) / (2.0 * eps);
            let res = rho[j] - g;
            let w = wts[j];
            a11 += w * jr * jr;
            a12 += w * jr * jc;
            a22 += w * jc * jc;
            b1 += w * jr * res;
            b2 += w * jc * res;
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > 0.0) {
            return Err(Error::FitFailed(it));
        }
        let dr = (a22 * b1 - a12 * b2) / det;
        let dc = (a11 * b2 - a12 * b1) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (nr, nc) = (r + lambda * dr, c + lambda * dc);
            let nobj = objective(nr, nc);
            if nobj <= obj {
                r = nr;
                c = nc;
                obj = nobj;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        let step = (lambda * dr).abs().max((lambda * dc).abs());
        if !accepted || step < 1e-14 * r.max(1.0) {
            return Ok(SphereFit { radius: r, center: c, residual: (obj / total).sqrt(), iterations: it + 1 });
        }
    }
    Err(Error::FitFailed(MAX_ITER))
}

fn admissible(sf: SpaceForm, r: f64, c: f64) -> bool {
    r > 0.0 && c.abs() < r && r + c.abs() < sf.antipodal_radius()
}

/// Which monitored series a decay fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    /// Pinching deficit; continuum bound `e^{-2nKt}`.
    Omega,
    /// `max |A°|^2`; continuum bound `e^{-4nKt}`.
    TracelessSup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Least-squares slope of `log y` over the last half of the samples.
    pub rate: f64,
    /// `max_i y_i e^{bound (t_i - t_0)} / y_0`.
    pub envelope: f64,
    pub rate_bound: f64,
}

pub fn decay_fit(records: &[DiagnosticsRecord], series: Series, sf: SpaceForm) -> Result<DecayFit> {
    let nk = sf.n() as f64 * sf.k();
    let (ys, bound): (Vec<f64>, f64) = match series {
        Series::Omega => (records.iter().map(|r| r.omega).collect(), 2.0 * nk),
        Series::TracelessSup => (records.iter().map(|r| r.traceless_sup).collect(), 4.0 * nk),
    };
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    decay_fit_series(&ts, &ys, bound)
}

/// Exponential fit on raw samples; `rate_bound` is the envelope exponent.
pub fn decay_fit_series(t: &[f64], y: &[f64], rate_bound: f64) -> Result<DecayFit> {
    if t.len() != y.len() || t.len() < 10 {
        return Err(Error::TooFewSamples(t.len().min(y.len())));
    }
    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::AlreadyConverged);
    }
    let start = t.len() / 2;
    let (ts, ls): (Vec<f64>, Vec<f64>) = t[start..].iter().zip(&y[start..]).map(|(t, y)| (*t, y.ln())).unzip();
    let m = ts.len() as f64;
    let tbar = ts.iter().sum::<f64>() / m;
    let lbar = ls.iter().sum::<f64>() / m;
    let sxy: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - tbar) * (l - lbar)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - tbar) * (t - tbar)).sum();
    let rate = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let envelope = t
        .iter()
        .zip(y)
        .map(|(ti, yi)| yi * (rate_bound * (ti - t[0])).exp() / y[0])
        .fold(f64::MIN, f64::max);
    Ok(DecayFit { rate, envelope, rate_bound })
}

/// Builds a record from a profile and its field. `mu` and `w_ell` are supplied
/// by the caller because they depend on the conserved index.
pub fn record(p: &Profile, cf: &CurvatureField, t: f64, mu: f64, w_ell: f64) -> Result<DiagnosticsRecord> {
    let fit = sphere_fit(p)?;
    let sf = p.space_form();
    Ok(DiagnosticsRecord {
        t,
        mu,
        w_ell,
        omega: pinching_deficit(cf)?,
        min_kappa: cf.min_kappa(),
        max_kappa: cf.max_kappa(),
        max_rho: p.max_rho(),
        min_rho: p.origin_distance(),
        min_u: cf.u.iter().copied().fold(f64::INFINITY, f64::min),
        traceless_sup: traceless_norm_sq(cf).into_iter().fold(0.0, f64::max),
        sphere_fit_radius: fit.radius,
        sphere_fit_center: fit.center,
        sphere_fit_residual: fit.residual,
        min_sec: min_sectional(sf.k(), sf.n(), &cf.kappa_profile, &cf.kappa_rot),
        pinching_ratio: pinching_ratio(cf),
        max_h: cf.max_mean(),
    })
}

pub const CSV_HEADER: &str = "t,omega,tracelessSup,mu,W_ell,sphereFitRadius,sphereFitResidual,maxRho,minU,minSec";

/// CSV summary, one row per record.
pub fn to_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t,
            r.omega,
            r.traceless_sup,
            r.mu,
            r.w_ell,
            r.sphere_fit_radius,
            r.sphere_fit_residual,
            r.max_rho,
            r.min_u,
            r.min_sec
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::curvature;

    fn s3() -> SpaceForm {
        SpaceForm::new(1.0, 2).unwrap()
    }

    #[test]
    fn umbilic_sphere_has_zero_deficit() {
        let cf = curvature(&Profile::sphere(s3(), 64, 0.8).unwrap()).unwrap();
        assert!(pinching_deficit(&cf).unwrap() < 1e-15);
        assert!(traceless_norm_sq(&cf).iter().all(|a| *a < 1e-24));
    }

    #[test]
    fn deficit_arithmetic() {
        let mut cf = curvature(&Profile::sphere(s3(), 64, 0.8).unwrap()).unwrap();
        cf.kappa_profile.iter_mut().for_each(|k| *k = 1.0);
        cf.kappa_rot.iter_mut().for_each(|k| *k = 2.0);
        cf.mean.iter_mut().for_each(|h| *h = 3.0);
        assert!((pinching_deficit(&cf).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        cf.mean[3] = 0.0;
        assert_eq!(pinching_deficit(&cf), Err(Error::NotMeanConvex(3)));
    }

    #[test]
    fn perturbed_sphere_deficit_positive() {
        let p = Profile::from_fn(s3(), 128, |f| 0.8 + 0.05 * (2.0 * f).cos()).unwrap();
        let w = pinching_deficit(&curvature(&p).unwrap()).unwrap();
        assert!(w > 0.0 && w < 0.5);
    }

    #[test]
    fn sphere_fit_recovers_offset_sphere() {
        for k in [0.0, 1.0, -1.0] {
            let sf = SpaceForm::new(k, 2).unwrap();
            let p = Profile::off_center_sphere(sf, 128, 0.7, 0.2).unwrap();
            let fit = sphere_fit(&p).unwrap();
            assert!((fit.radius - 0.7).abs() < 1e-8, "{k} {fit:?}");
            assert!((fit.center - 0.2).abs() < 1e-8);
            assert!(fit.residual < 1e-10);
        }
    }

    #[test]
    fn sphere_fit_residual_is_linear_in_amplitude() {
        let res = |d: f64| {
            let p = Profile::from_fn(s3(), 256, |f| 0.8 + d * (2.0 * f).cos()).unwrap();
            sphere_fit(&p).unwrap().residual
        };
        let ratio = res(1e-2) / res(1e-3);
        assert!((ratio - 10.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn decay_fit_synthetic() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|t| (-4.0 * t).exp()).collect();
        let f = decay_fit_series(&t, &y, 4.0).unwrap();
        assert!((f.rate + 4.0).abs() < 1e-6);
        assert!((f.envelope - 1.0).abs() < 1e-12);
        let c = decay_fit_series(&t, &vec![0.3; 40], 4.0).unwrap();
        assert_eq!(c.rate, 0.0);
        let mut z = y.clone();
        z[7] = 0.0;
        assert_eq!(decay_fit_series(&t, &z, 4.0), Err(Error::AlreadyConverged));
        assert_eq!(decay_fit_series(&t[..5], &y[..5], 4.0), Err(Error::TooFewSamples(5)));
    }

    #[test]
    fn min_sectional_agrees_with_surface() {
        for n in [2, 3] {
            let sf = SpaceForm::new(1.0, n).unwrap();
            let p = Profile::from_fn(sf, 128, |f| 0.7 + 0.04 * (2.0 * f).cos() + 0.01 * f.cos()).unwrap();
            let cf = curvature(&p).unwrap();
            let here = min_sectional(1.0, n, &cf.kappa_profile, &cf.kappa_rot);
            let there = cf.sec_min.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(here, there);
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let p = Profile::sphere(s3(), 64, 0.8).unwrap();
        let cf = curvature(&p).unwrap();
        let r = record(&p, &cf, 0.0, 1.0, 2.0).unwrap();
        let csv = to_csv(&[r.clone(), r]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 10);
    }
}
