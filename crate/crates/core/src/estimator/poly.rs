use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares polynomial in a centred, scaled variable u = (x − center)/scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub order: usize,
    pub center: f64,
    pub scale: f64,
    /// Coefficients in u, lowest order first.
    pub coeffs_u: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub rss: f64,
}

impl PolyFit {
    /// Value at `x` and whether `x` lies outside the fitted range.
    pub fn eval(&self, x: f64) -> (f64, bool) {
        let u = (x - self.center) / self.scale;
        let v = self.coeffs_u.iter().rev().fold(0.0, |acc, &c| acc * u + c);
        (v, x < self.x_min || x > self.x_max)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Coefficients in x, lowest order first.
    pub fn coefficients(&self) -> Vec<f64> {
        let k = self.coeffs_u.len();
        let mut out = vec![0.0; k];
        // Σ b_j ((x − c)/s)^j expanded binomially.
        for (j, &b) in self.coeffs_u.iter().enumerate() {
            let f = b / self.scale.powi(j as i32);
            let mut binom = 1.0;
            for i in 0..=j {
                // coefficient of x^i in (x − c)^j
                out[i] += f * binom * (-self.center).powi((j - i) as i32);
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
        }
        out
    }
}

/// Fits a polynomial of the given order. Needs more distinct abscissae than
/// the order; otherwise the design is rank deficient.
pub fn interpolate_poly(x: &[f64], y: &[f64], order: usize) -> Result<PolyFit> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidArgument("x and y must be non-empty and equal length".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite data".into()));
    }
    let mut distinct: Vec<f64> = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= order {
        return Err(Error::RankDeficient(format!(
            "order {order} needs at least {} distinct points, got {}",
            order + 1,
            distinct.len()
        )));
    }
    let x_min = distinct[0];
    let x_max = *distinct.last().expect("non-empty");
    let center = 0.5 * (x_min + x_max);
    let scale = if x_max > x_min { 0.5 * (x_max - x_min) } else { 1.0 };
    let m = x.len();
    let a = DMatrix::from_fn(m, order + 1, |i, j| ((x[i] - center) / scale).powi(j as i32));
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-12 * smax {
        return Err(Error::RankDeficient("polynomial design matrix is singular".into()));
    }
    let c = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let rss = (&a * &c - b).norm_squared();
    Ok(PolyFit {
        order,
        center,
        scale,
        coeffs_u: c.iter().copied().collect(),
        x_min,
        x_max,
        rss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_exact_quadratic() {
        let x: Vec<f64> = (0..6).map(|i| 100.0 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.5 - 2e-3 * v + 3e-6 * v * v).collect();
        let p = interpolate_poly(&x, &y, 2).unwrap();
        let c = p.coefficients();
        assert!((c[0] - 0.5).abs() < 1e-12);
        assert!((c[1] + 2e-3).abs() < 1e-14);
        assert!((c[2] - 3e-6).abs() < 1e-17);
        assert_eq!(p.eval(250.0).1, false);
        assert_eq!(p.eval(600.0).1, true);
    }

    #[test]
    fn constant_data_gives_flat_polynomial() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let p = interpolate_poly(&x, &[0.7; 4], 2).unwrap();
        let c = p.coefficients();
        assert!((c[0] - 0.7).abs() < 1e-12);
        assert!(c[1].abs() < 1e-12 && c[2].abs() < 1e-12);
    }

    #[test]
    fn too_few_points_is_rank_deficient() {
        let err = interpolate_poly(&[1.0, 2.0, 2.0], &[1.0, 2.0, 3.0], 2).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
    }
}
