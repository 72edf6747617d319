use serde::Serialize;

use crate::error::{GopError, Result};
use crate::quantize::GridOperator;
use crate::scalar::Real;

/// Relative floor below which band norms are treated as zero.
pub const SMOOTHING_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingReport {
    pub cutoffs: Vec<usize>,
    pub norms: Vec<f64>,
    pub floor: f64,
    /// Least-squares slope of `−log ‖P_K D P_K‖` against `log K`.
    pub exponent: f64,
    pub decays: bool,
    /// Decay at every step and exponent at least 1.
    pub smoothing: bool,
}

/// Cutoffs `2, 4, 8, …` up to `n/8`, so every band `K ≤ |ξ| ≤ n/2 − K`
/// still spans several frequencies.
pub fn default_cutoffs(n_points: usize) -> Vec<usize> {
    let mut ks = Vec::new();
    let mut k = 2;
    while k <= n_points / 8 {
        ks.push(k);
        k *= 2;
    }
    ks
}

/// Decay of the high-band norms of `d` at the default cutoffs.
pub fn smoothing_check<T: Real>(d: &GridOperator<T>) -> Result<SmoothingReport> {
    smoothing_check_at(d, &default_cutoffs(d.grid().n_points()))
}

/// Decay of the high-band norms at explicit cutoffs (increasing, at most
/// `n/8`). Norms are clamped at `1e-13·‖D‖`; two consecutive clamped values
/// count as decaying.
pub fn smoothing_check_at<T: Real>(
    d: &GridOperator<T>,
    cutoffs: &[usize],
) -> Result<SmoothingReport> {
    let n = d.grid().n_points();
    if cutoffs.len() < 2 {
        return Err(GopError::Usage(
            "smoothing check needs at least two cutoffs".into(),
        ));
    }
    if cutoffs.windows(2).any(|w| w[1] <= w[0])
        || cutoffs[0] == 0
        || *cutoffs.last().expect("nonempty") > n / 8
    {
        return Err(GopError::Usage(format!(
            "cutoffs must increase within [1, {}]",
            n / 8
        )));
    }
    let floor = (SMOOTHING_FLOOR * d.op_norm().as_f64()).max(f64::MIN_POSITIVE);
    let norms: Vec<f64> = cutoffs
        .iter()
        .map(|&k| d.band_norm(k).as_f64().max(floor))
        .collect();
    let decays = norms
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] <= floor && w[1] <= floor));
    let xs: Vec<f64> = cutoffs.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = norms.iter().map(|v| -v.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    Ok(SmoothingReport {
        cutoffs: cutoffs.to_vec(),
        norms,
        floor,
        exponent,
        decays,
        smoothing: decays && exponent >= 1.0,
    })
}
