//! Quadrature rules and the even cosine-series interpolant on the polar grid.

use std::f64::consts::PI;

/// Composite Simpson weights on `N + 1` uniform nodes of spacing `h` (`N` even).
pub fn simpson_weights(n_cells: usize, h: f64) -> Vec<f64> {
    assert!(n_cells >= 2 && n_cells.is_multiple_of(2), "Simpson needs an even cell count");
    (0..=n_cells)
        .map(|j| {
            let m = if j == 0 || j == n_cells {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            m * h / 3.0
        })
        .collect()
}

/// Composite trapezoid weights on `N + 1` uniform nodes of spacing `h`.
pub fn trapezoid_weights(n_cells: usize, h: f64) -> Vec<f64> {
    (0..=n_cells)
        .map(|j| if j == 0 || j == n_cells { 0.5 * h } else { h })
        .collect()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 1 { 1.0 } else { p0 };
            let pn = if m == 1 { x } else { p1 };
            dp = m as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Trigonometric interpolant of samples `f(j pi / N)`, `j = 0..=N`, extended
/// evenly across both poles. Spectrally accurate for smooth pole-regular data.
#[derive(Debug, Clone)]
pub struct CosineSeries {
    coeffs: Vec<f64>,
}

impl CosineSeries {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len() - 1;
        let h = PI / n as f64;
        let mut coeffs = vec![0.0; n + 1];
        for (k, ck) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &v) in values.iter().enumerate() {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                acc += w * v * ((k * j % (2 * n)) as f64 * h).cos();
            }
            let wk = if k == 0 || k == n { 0.5 } else { 1.0 };
            *ck = 2.0 / n as f64 * acc * wk;
        }
        Self { coeffs }
    }

    /// Value and first two derivatives at `phi`.
    pub fn eval3(&self, phi: f64) -> (f64, f64, f64) {
        let (s1, c1) = phi.sin_cos();
        let (mut cprev, mut ccur) = (c1, 1.0); // cos(-phi), cos(0)
        let (mut sprev, mut scur) = (-s1, 0.0);
        let (mut f, mut df, mut d2f) = (0.0, 0.0, 0.0);
        for (k, &a) in self.coeffs.iter().enumerate() {
            let kf = k as f64;
            f += a * ccur;
            df -= a * kf * scur;
            d2f -= a * kf * kf * ccur;
            let cnext = 2.0 * c1 * ccur - cprev;
            let snext = 2.0 * c1 * scur - sprev;
            cprev = ccur;
            ccur = cnext;
            sprev = scur;
            scur = snext;
        }
        (f, df, d2f)
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.eval3(phi).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let i30: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i30 - 2.0 / 31.0).abs() < 1e-14);
        let (x64, w64) = gauss_legendre(64);
        let e: f64 = x64.iter().zip(&w64).map(|(x, w)| w * x.exp()).sum();
        assert!((e - (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let n = 10;
        let h = 1.0 / n as f64;
        let w = simpson_weights(n, h);
        let s: f64 = w.iter().enumerate().map(|(j, w)| w * (j as f64 * h).powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cosine_series_reproduces_smooth_even_data() {
        let n = 64;
        let f = |p: f64| (0.3 * p.cos()).exp() + 0.1 * (2.0 * p).cos();
        let vals: Vec<f64> = (0..=n).map(|j| f(PI * j as f64 / n as f64)).collect();
        let cs = CosineSeries::new(&vals);
        for i in 0..50 {
            let p = 0.0617 * i as f64;
            let (v, d, d2) = cs.eval3(p);
            let e = (0.3 * p.cos()).exp();
            let df = -0.3 * p.sin() * e - 0.2 * (2.0 * p).sin();
            let d2f = (0.09 * p.sin().powi(2) - 0.3 * p.cos()) * e - 0.4 * (2.0 * p).cos();
            assert!((v - f(p)).abs() < 1e-13);
            assert!((d - df).abs() < 1e-11);
            assert!((d2 - d2f).abs() < 1e-9);
        }
    }
}
