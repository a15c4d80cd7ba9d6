//! Core loss (iGSE on piecewise-linear flux) and foil winding loss
//! (Dowell factor per harmonic).

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::datastore::CoreMaterial;
use crate::electrical::PeriodicPwl;

pub const MU_0: f64 = 4e-7 * PI;

/// iGSE coefficient k_i from the Steinmetz triple.
pub fn igse_ki(k: f64, alpha: f64, beta: f64) -> f64 {
    // ∫₀^{2π} |cos θ|^α dθ
    let integral = 2.0 * PI.sqrt() * gamma((alpha + 1.0) / 2.0) / gamma(alpha / 2.0 + 1.0);
    k / ((2.0 * PI).powf(alpha - 1.0) * integral * 2f64.powf(beta - alpha))
}

/// Volumetric iGSE loss [W/m³] of a periodic piecewise-linear flux waveform
/// with a single major loop.
pub fn igse_loss_density(flux: &PeriodicPwl, m: &CoreMaterial) -> f64 {
    let (lo, hi) = flux
        .segments
        .iter()
        .flat_map(|s| [s.y0, s.y1])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
            (a.min(y), b.max(y))
        });
    let dbpp = hi - lo;
    if !(dbpp > 0.0) {
        return 0.0;
    }
    let ki = igse_ki(m.steinmetz_k, m.steinmetz_alpha, m.steinmetz_beta);
    let sum: f64 = flux
        .segments
        .iter()
        .filter(|s| s.dt() > 0.0)
        .map(|s| s.slope().abs().powf(m.steinmetz_alpha) * s.dt())
        .sum();
    ki * dbpp.powf(m.steinmetz_beta - m.steinmetz_alpha) * sum / flux.period
}

/// Closed form of the iGSE for a symmetric triangular flux of peak `b_peak`.
pub fn triangular_loss_density(b_peak: f64, f: f64, m: &CoreMaterial) -> f64 {
    if b_peak <= 0.0 {
        return 0.0;
    }
    let ki = igse_ki(m.steinmetz_k, m.steinmetz_alpha, m.steinmetz_beta);
    ki * (4.0 * b_peak * f).powf(m.steinmetz_alpha)
        * (2.0 * b_peak).powf(m.steinmetz_beta - m.steinmetz_alpha)
}

/// Core loss [W] of a core volume carrying the given flux waveform.
pub fn core_loss_igse(flux: &PeriodicPwl, m: &CoreMaterial, v_core: f64) -> f64 {
    igse_loss_density(flux, m) * v_core
}

pub fn skin_depth(resistivity: f64, f: f64) -> f64 {
    (resistivity / (PI * f * MU_0)).sqrt()
}

/// Dowell's AC resistance factor for `layers` foil layers with normalized
/// thickness `delta` (thickness over skin depth, porosity-corrected).
pub fn dowell_factor(delta: f64, layers: u32) -> f64 {
    let m2 = (layers as f64).powi(2);
    if delta < 1e-2 {
        let d4 = delta.powi(4);
        return 1.0 + (5.0 * m2 - 1.0) / 45.0 * d4;
    }
    let (s1, s2) = if delta > 300.0 {
        (1.0, 1.0)
    } else {
        let (d2, d) = (2.0 * delta, delta);
        (
            (d2.sinh() + d2.sin()) / (d2.cosh() - d2.cos()),
            (d.sinh() - d.sin()) / (d.cosh() + d.cos()),
        )
    };
    delta * (s1 + 2.0 / 3.0 * (m2 - 1.0) * s2)
}

/// A foil winding: one turn per layer, foil spanning `height` of a window of
/// height `window_height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoilWinding {
    pub turns: u32,
    pub mean_turn_length: f64,
    pub thickness: f64,
    pub height: f64,
    pub window_height: f64,
}

impl FoilWinding {
    pub fn dc_resistance(&self, resistivity: f64) -> f64 {
        resistivity * self.turns as f64 * self.mean_turn_length / (self.thickness * self.height)
    }

    pub fn porosity(&self) -> f64 {
        self.height / self.window_height
    }

    /// AC factor at frequency `f`.
    pub fn ac_factor(&self, resistivity: f64, f: f64) -> f64 {
        let delta = self.thickness / skin_depth(resistivity, f) * self.porosity().sqrt();
        dowell_factor(delta, self.turns)
    }
}

/// Squared rms of harmonics 1..=n_h, plus the energy left above them.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub dc_sq: f64,
    pub harmonics_sq: Vec<f64>,
    pub residual_sq: f64,
}

impl Spectrum {
    pub fn of(current: &PeriodicPwl, n_h: usize) -> Self {
        let dc = current.mean();
        let harmonics_sq: Vec<f64> = (1..=n_h).map(|k| current.harmonic_rms(k).powi(2)).collect();
        let total = current.rms().powi(2);
        let residual_sq = (total - dc * dc - harmonics_sq.iter().sum::<f64>()).max(0.0);
        Spectrum {
            dc_sq: dc * dc,
            harmonics_sq,
            residual_sq,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        let k2 = k * k;
        Spectrum {
            dc_sq: self.dc_sq * k2,
            harmonics_sq: self.harmonics_sq.iter().map(|h| h * k2).collect(),
            residual_sq: self.residual_sq * k2,
        }
    }

    /// Element-wise mean of several spectra of the same length.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a Spectrum>) -> Option<Self> {
        let mut it = items.into_iter();
        let mut acc = it.next()?.clone();
        let mut count: f64 = 1.0;
        for s in it {
            acc.dc_sq += s.dc_sq;
            acc.residual_sq += s.residual_sq;
            for (a, b) in acc.harmonics_sq.iter_mut().zip(&s.harmonics_sq) {
                *a += b;
            }
            count += 1.0;
        }
        // scaled() squares its factor.
        Some(acc.scaled(count.sqrt().recip()))
    }
}

/// AC factors at harmonics 1..=n_h of `f` for one winding.
pub fn harmonic_factors(w: &FoilWinding, resistivity: f64, f: f64, n_h: usize) -> Vec<f64> {
    (1..=n_h)
        .map(|k| w.ac_factor(resistivity, k as f64 * f))
        .collect()
}

/// Effective factor applied to energy above the last computed harmonic.
/// The factor is extrapolated as a power law in frequency, fitted between
/// harmonics n_h/2 and n_h, and weighted by a 1/k² spectrum.
pub fn tail_factor(factors: &[f64]) -> f64 {
    let n = factors.len();
    if n < 2 {
        return factors.last().copied().unwrap_or(1.0);
    }
    let (f_hi, f_mid) = (factors[n - 1], factors[n / 2 - 1]);
    let ratio = n as f64 / (n / 2) as f64;
    let p = ((f_hi / f_mid).ln() / ratio.ln()).clamp(0.0, 0.9);
    f_hi / (1.0 - p)
}

/// Σ F_k·I_k² over the harmonics plus the extrapolated tail, excluding DC.
pub fn weighted_ac_sum(factors: &[f64], tail: f64, s: &Spectrum) -> f64 {
    factors
        .iter()
        .zip(&s.harmonics_sq)
        .map(|(f, i2)| f * i2)
        .sum::<f64>()
        + tail * s.residual_sq
}

/// Loss [W] of a foil winding carrying `current`, resistivity evaluated by
/// the caller at winding temperature.
pub fn foil_winding_loss(
    current: &PeriodicPwl,
    w: &FoilWinding,
    resistivity: f64,
    n_h: usize,
) -> f64 {
    let f = 1.0 / current.period;
    let s = Spectrum::of(current, n_h);
    let factors = harmonic_factors(w, resistivity, f, n_h);
    let r_dc = w.dc_resistance(resistivity);
    r_dc * (s.dc_sq + weighted_ac_sum(&factors, tail_factor(&factors), &s))
}
