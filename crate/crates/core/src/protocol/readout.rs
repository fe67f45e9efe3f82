use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::ShotRecord;
use crate::error::{Error, Result};
use crate::estimator::{fit_curve, FitModel, FitOptions};
use crate::seed::rng;

/// Analog single-shot readout.
///
/// Ground shots are N(μ_g, σ_g). An excited qubit survives the readout
/// window with weight w = e^{−t_ro/T1} and produces N(μ_e, σ_e); otherwise it
/// has decayed and reads like the ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub mu_g: f64,
    pub sigma_g: f64,
    pub mu_e: f64,
    pub sigma_e: f64,
    /// Readout window (s).
    pub t_ro: f64,
    /// Qubit lifetime entering the decay-during-readout weight (s).
    pub t1: f64,
    pub threshold: f64,
}

impl Default for ReadoutModel {
    fn default() -> Self {
        Self {
            mu_g: 0.0,
            sigma_g: 0.35,
            mu_e: 1.0,
            sigma_e: 0.35,
            t_ro: 2e-6,
            t1: 2.78e-6,
            threshold: 0.5,
        }
    }
}

fn normal_sf(x: f64, mu: f64, sigma: f64) -> f64 {
    0.5 * libm::erfc((x - mu) / (sigma * std::f64::consts::SQRT_2))
}

impl ReadoutModel {
    pub fn with_t1(t1: f64) -> Self {
        Self {
            t1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu_g, self.mu_e, self.threshold, self.t_ro]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.sigma_g > 0.0) || !(self.sigma_e > 0.0) {
            return Err(Error::InvalidArgument(
                "readout needs finite levels and positive widths".into(),
            ));
        }
        if !(self.t_ro >= 0.0) || !(self.t1 > 0.0) {
            return Err(Error::InvalidArgument(
                "readout window must be ≥ 0 and T1 positive".into(),
            ));
        }
        Ok(())
    }

    /// Weight of the excited component in the excited-state histogram.
    pub fn survival(&self) -> f64 {
        if self.t1.is_infinite() {
            1.0
        } else {
            (-self.t_ro / self.t1).exp()
        }
    }

    /// P(read excited | ground), P(read excited | excited).
    pub fn confusion(&self) -> (f64, f64) {
        let qg = normal_sf(self.threshold, self.mu_g, self.sigma_g);
        let qe = normal_sf(self.threshold, self.mu_e, self.sigma_e);
        let w = self.survival();
        (qg, w * qe + (1.0 - w) * qg)
    }

    /// Expected thresholded excited fraction for excited population `p_e`.
    pub fn readout_probability(&self, p_e: f64) -> f64 {
        let (fg, fe) = self.confusion();
        p_e * fe + (1.0 - p_e) * fg
    }

    /// Mean analog value for excited population `p_e`.
    pub fn mean_signal(&self, p_e: f64) -> f64 {
        let w = self.survival();
        p_e * (w * self.mu_e + (1.0 - w) * self.mu_g) + (1.0 - p_e) * self.mu_g
    }

    /// Replaces the excited histogram by its pure excited component, read
    /// off a double-Gaussian fit of simulated calibration shots.
    pub fn ideal_from_histograms(&self, n_shots: usize, seed: u64) -> Result<Self> {
        let ground = sample_readout(0.0, self, n_shots, seed)?;
        let excited = sample_readout(1.0, self, n_shots, seed ^ 0x9e37_79b9)?;
        let lo = self.mu_g.min(self.mu_e) - 4.0 * self.sigma_g.max(self.sigma_e);
        let hi = self.mu_g.max(self.mu_e) + 4.0 * self.sigma_g.max(self.sigma_e);
        let n_bins = 80;
        let width = (hi - lo) / n_bins as f64;
        let centers: Vec<f64> = (0..n_bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
        let histogram = |s: &ShotRecord| {
            let mut h = vec![0.0; n_bins];
            for &v in &s.values {
                let b = ((v - lo) / width).floor();
                if b >= 0.0 && (b as usize) < n_bins {
                    h[b as usize] += 1.0;
                }
            }
            h
        };
        let hg = histogram(&ground);
        let g = fit_curve(FitModel::Gaussian { baseline: false }, &centers, &hg, &FitOptions::default())?;
        let mu_g = g.params[1];
        let he = histogram(&excited);
        let d = fit_curve(FitModel::DoubleGaussian, &centers, &he, &FitOptions::default())?;
        // Excited component: the lobe farther from the ground centre.
        let (mu_e, sigma_e) = if (d.params[1] - mu_g).abs() > (d.params[4] - mu_g).abs() {
            (d.params[1], d.params[2])
        } else {
            (d.params[4], d.params[5])
        };
        Ok(Self {
            mu_g,
            sigma_g: g.params[2],
            mu_e,
            sigma_e,
            t_ro: self.t_ro,
            t1: f64::INFINITY,
            threshold: 0.5 * (mu_g + mu_e),
        })
    }
}

/// Draws `n_shots` analog readout values for excited population `p_e`.
pub fn sample_readout(p_e: f64, model: &ReadoutModel, n_shots: usize, seed: u64) -> Result<ShotRecord> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(Error::InvalidArgument(format!("p_e = {p_e} is not a probability")));
    }
    if n_shots == 0 {
        return Err(Error::InvalidArgument("need at least one shot".into()));
    }
    model.validate()?;
    let w = model.survival();
    let ground = Normal::new(model.mu_g, model.sigma_g).expect("validated");
    let excited = Normal::new(model.mu_e, model.sigma_e).expect("validated");
    let mut r = rng(seed);
    let values = (0..n_shots)
        .map(|_| {
            let is_e = r.random::<f64>() < p_e;
            let survives = is_e && r.random::<f64>() < w;
            if survives {
                excited.sample(&mut r)
            } else {
                ground.sample(&mut r)
            }
        })
        .collect();
    Ok(ShotRecord {
        values,
        threshold: model.threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_and_excited_means() {
        let m = ReadoutModel {
            t1: f64::INFINITY,
            ..ReadoutModel::default()
        };
        let n = 20_000;
        let g = sample_readout(0.0, &m, n, 1).unwrap();
        assert!((g.mean() - m.mu_g).abs() < 3.0 * m.sigma_g / (n as f64).sqrt());
        let e = sample_readout(1.0, &m, n, 2).unwrap();
        assert!((e.mean() - m.mu_e).abs() < 3.0 * m.sigma_e / (n as f64).sqrt());
    }

    #[test]
    fn thresholded_fraction_matches_confusion_matrix() {
        let m = ReadoutModel::default();
        let s = sample_readout(0.5, &m, 100_000, 7).unwrap();
        let (p, _) = s.estimate();
        // Oracle: tail integrals of the two Gaussians, written out directly.
        let sf = |x: f64, mu: f64, s: f64| 0.5 * libm::erfc((x - mu) / (s * 2f64.sqrt()));
        let w = (-2e-6f64 / 2.78e-6).exp();
        let qg = sf(0.5, 0.0, 0.35);
        let qe = sf(0.5, 1.0, 0.35);
        let expected = 0.5 * (w * qe + (1.0 - w) * qg) + 0.5 * qg;
        assert!((p - expected).abs() < 0.005, "{p} vs {expected}");
    }

    #[test]
    fn deterministic_and_validated() {
        let m = ReadoutModel::default();
        assert_eq!(sample_readout(0.3, &m, 50, 3).unwrap(), sample_readout(0.3, &m, 50, 3).unwrap());
        assert!(sample_readout(1.2, &m, 10, 0).is_err());
        let bad = ReadoutModel { sigma_g: 0.0, ..m };
        assert!(sample_readout(0.3, &bad, 10, 0).is_err());
    }

    #[test]
    fn ideal_readout_recovers_pure_excited_lobe() {
        let m = ReadoutModel::default();
        let ideal = m.ideal_from_histograms(20_000, 11).unwrap();
        assert_eq!(ideal.survival(), 1.0);
        assert!((ideal.mu_e - 1.0).abs() < 0.03, "{}", ideal.mu_e);
        assert!((ideal.sigma_e - 0.35).abs() < 0.03, "{}", ideal.sigma_e);
        let (_, fe) = ideal.confusion();
        assert!(fe > m.confusion().1);
    }
}
