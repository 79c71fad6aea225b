use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `p = prefactor * lambda^exponent` in log-log space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub samples: Vec<(f64, f64)>,
}

pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {}", samples.len())));
    }
    for &(l, p) in samples {
        if !(l > 0.0 && l.is_finite() && p > 0.0 && p.is_finite()) {
            return Err(Error::Fit(format!("sample ({l}, {p}) is not strictly positive")));
        }
    }
    let mut ls: Vec<f64> = samples.iter().map(|s| s.0).collect();
    ls.sort_by(f64::total_cmp);
    if ls.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("lambda values must be distinct".into()));
    }

    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    Ok(ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared: r_squared.clamp(0.0, 1.0),
        samples: samples.to_vec(),
    })
}
