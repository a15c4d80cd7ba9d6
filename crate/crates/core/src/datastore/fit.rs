//! Least-squares fits for the film-capacitor series and the per-volume /
//! per-mass cost coefficients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One catalogue entry of a capacitor series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitorSample {
    pub part_id: String,
    pub capacitance: f64,
    pub rated_voltage: f64,
    pub cost: f64,
    pub esr: f64,
}

/// A capacitor series with fitted cost and ESR models:
///
/// * cost = a1_c·C + a2_c·V + a3_c
/// * ESR  = a1_r/C + a2_r/(C·V) + a3_r
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitorSeries {
    pub samples: Vec<CapacitorSample>,
    pub cost_coeffs: [f64; 3],
    pub esr_coeffs: [f64; 3],
    pub cost_residual_rms: f64,
    pub esr_residual_rms: f64,
}

impl CapacitorSeries {
    pub fn unit_cost(&self, capacitance: f64, voltage: f64) -> f64 {
        let [a1, a2, a3] = self.cost_coeffs;
        a1 * capacitance + a2 * voltage + a3
    }

    pub fn unit_esr(&self, capacitance: f64, voltage: f64) -> f64 {
        let [a1, a2, a3] = self.esr_coeffs;
        a1 / capacitance + a2 / (capacitance * voltage) + a3
    }

    pub fn mean_cost(&self) -> f64 {
        self.samples.iter().map(|s| s.cost).sum::<f64>() / self.samples.len() as f64
    }
}

/// Fits both capacitor models to the samples.
pub fn fit_capacitor_coeffs(samples: Vec<CapacitorSample>) -> Result<CapacitorSeries> {
    if samples.len() < 4 {
        return Err(Error::Fit(format!(
            "under-determined: {} samples, need at least 4",
            samples.len()
        )));
    }
    for s in &samples {
        if !(s.capacitance > 0.0 && s.rated_voltage > 0.0 && s.cost > 0.0 && s.esr >= 0.0) {
            return Err(Error::Fit(format!(
                "sample `{}` has a non-positive capacitance, voltage or cost",
                s.part_id
            )));
        }
    }

    let cost_rows: Vec<[f64; 3]> = samples
        .iter()
        .map(|s| [s.capacitance, s.rated_voltage, 1.0])
        .collect();
    let cost_y: Vec<f64> = samples.iter().map(|s| s.cost).collect();
    let (cost_coeffs, cost_residual_rms) = least_squares(&cost_rows, &cost_y, "cost")?;

    let esr_rows: Vec<[f64; 3]> = samples
        .iter()
        .map(|s| {
            [
                1.0 / s.capacitance,
                1.0 / (s.capacitance * s.rated_voltage),
                1.0,
            ]
        })
        .collect();
    let esr_y: Vec<f64> = samples.iter().map(|s| s.esr).collect();
    let (esr_coeffs, esr_residual_rms) = least_squares(&esr_rows, &esr_y, "esr")?;

    Ok(CapacitorSeries {
        samples,
        cost_coeffs,
        esr_coeffs,
        cost_residual_rms,
        esr_residual_rms,
    })
}

/// Solves min ||A·x − y|| for three unknowns. Columns are scaled to unit norm
/// first since capacitances (µF) and voltages (kV) differ by nine decades.
fn least_squares(rows: &[[f64; 3]], y: &[f64], what: &str) -> Result<([f64; 3], f64)> {
    let m = rows.len();
    let mut a = DMatrix::from_fn(m, 3, |i, j| rows[i][j]);
    let mut scale = [1.0; 3];
    for j in 0..3 {
        let norm = a.column(j).norm();
        if norm == 0.0 {
            return Err(Error::Fit(format!("{what}: rank-deficient sample set")));
        }
        scale[j] = norm;
        a.column_mut(j).scale_mut(1.0 / norm);
    }
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if smin <= smax * 1e-10 {
        return Err(Error::Fit(format!(
            "{what}: rank-deficient sample set (singular values {smax:.3e} / {smin:.3e})"
        )));
    }
    let x = svd
        .solve(&b, smax * 1e-12)
        .map_err(|e| Error::Fit(format!("{what}: {e}")))?;
    let resid = &a * &x - &b;
    let rms = (resid.norm_squared() / m as f64).sqrt();
    Ok(([x[0] / scale[0], x[1] / scale[1], x[2] / scale[2]], rms))
}

/// Proportional fit y = k·x through the origin (cost per kg, per m³).
pub fn fit_proportional(points: &[(f64, f64)], what: &str) -> Result<f64> {
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    if points.is_empty() || sxx <= 0.0 {
        return Err(Error::Fit(format!("{what}: no usable samples")));
    }
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    Ok(sxy / sxx)
}
