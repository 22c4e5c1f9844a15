//! Lorentzian line-shape fitting.

use nalgebra::{Matrix3, Vector3};

use crate::numeric::half_max_width;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzFit {
    pub center: f64,
    pub fwhm: f64,
    pub peak: f64,
    /// Width read directly from the half-maximum crossings, if both exist.
    pub crossing_fwhm: Option<f64>,
}

/// Fits `y = peak / (1 + ((x - center) / (fwhm/2))²)`.
///
/// Uses the linearisation `1/y = a + b x + c x²`, least squares weighted by
/// `y²` so that the peak region dominates, over samples above 5% of the
/// maximum.
pub fn fit_lorentzian(x: &[f64], y: &[f64]) -> Result<LorentzFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::invalid("Lorentzian fit needs at least three matching samples"));
    }
    let ymax = y.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    if !(ymax > 0.0) {
        return Err(Error::Degenerate("no positive samples to fit".into()));
    }
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    let mut used = 0;
    for (&xi, &yi) in x.iter().zip(y) {
        if yi < 0.05 * ymax {
            continue;
        }
        let w = yi * yi;
        let basis = Vector3::new(1.0, xi, xi * xi);
        normal += basis * basis.transpose() * w;
        rhs += basis * (w / yi);
        used += 1;
    }
    if used < 3 {
        return Err(Error::Degenerate("fewer than three samples near the peak".into()));
    }
    let coef = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("singular normal equations in Lorentzian fit".into()))?;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    if !(c > 0.0) {
        return Err(Error::Degenerate("samples are not peaked".into()));
    }
    let center = -b / (2.0 * c);
    let floor = a - c * center * center; // 1/peak
    if !(floor > 0.0) {
        return Err(Error::Degenerate("fitted peak is not positive".into()));
    }
    let half = (floor / c).sqrt();
    Ok(LorentzFit { center, fwhm: 2.0 * half, peak: 1.0 / floor, crossing_fwhm: half_max_width(x, y) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::linspace;

    #[test]
    fn recovers_exact_lorentzian() {
        let x = linspace(-40.0, 40.0, 401);
        let y: Vec<f64> = x.iter().map(|v| 7.0 / (1.0 + ((v - 1.5) / 2.5).powi(2))).collect();
        let f = fit_lorentzian(&x, &y).unwrap();
        assert!((f.center - 1.5).abs() < 1e-9);
        assert!((f.fwhm - 5.0).abs() < 1e-9);
        assert!((f.peak - 7.0).abs() < 1e-8);
        assert!((f.crossing_fwhm.unwrap() - 5.0).abs() < 0.05);
    }

    #[test]
    fn rejects_flat_data() {
        let x = linspace(-1.0, 1.0, 11);
        assert!(fit_lorentzian(&x, &[0.0; 11]).is_err());
        assert!(fit_lorentzian(&x, &x.iter().map(|v| v * v + 1.0).collect::<Vec<_>>()).is_err());
    }
}
