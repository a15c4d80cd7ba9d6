//! Single-phase-shift DAB electrical model: leakage-inductance sizing,
//! phase-shift solution, inductor-current waveform and device current
//! statistics.
//!
//! Conventions: the turns ratio `n` refers the secondary bridge voltage to the
//! primary as `v_ac2 / n`, so the matched operating point is
//! `v_in = v_out / n`. The primary bridge applies +v_in during the first half
//! period; the secondary bridge lags by `d·T/2`. Secondary winding current is
//! `i_L / n`.

pub mod pwl;

use serde::{Deserialize, Serialize};

use crate::datastore::SystemSpec;
use crate::error::{Error, Result};
pub use pwl::{PeriodicPwl, Segment};

/// Per-module ratings for one design point. The leakage inductance is filled
/// in by [`size_leakage_inductance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverterSpec {
    pub p_conv_max: f64,
    pub i_conv_max: f64,
    pub n: f64,
    pub f_sw: f64,
    pub l_lk: f64,
}

impl ConverterSpec {
    /// Splits the charger rating over `n_modules`. `l_lk` is left at zero.
    pub fn for_modules(system: &SystemSpec, n_modules: u32, n: f64, f_sw: f64) -> Self {
        ConverterSpec {
            p_conv_max: system.p_max_total / n_modules as f64,
            i_conv_max: system.i_max_total / n_modules as f64,
            n,
            f_sw,
            l_lk: 0.0,
        }
    }

    pub fn with_inductance(self, l_lk: f64) -> Self {
        ConverterSpec { l_lk, ..self }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f_sw
    }
}

/// One cell of the (output voltage × load) evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v_out: f64,
    pub load_fraction: f64,
    pub v_in: f64,
    pub p_req: f64,
    pub i_out: f64,
}

impl OperatingPoint {
    pub fn new(v_out: f64, load_fraction: f64, spec: &ConverterSpec, system: &SystemSpec) -> Self {
        let v_in = select_input_voltage(v_out, spec.n, system.v_in_min, system.v_in_max);
        let p_req = required_power(v_out, load_fraction, spec);
        OperatingPoint {
            v_out,
            load_fraction,
            v_in,
            p_req,
            i_out: p_req / v_out,
        }
    }
}

/// Input voltage at the unity conversion ratio, clamped to the allowed band.
pub fn select_input_voltage(v_out: f64, n: f64, v_in_min: f64, v_in_max: f64) -> f64 {
    (v_out / n).clamp(v_in_min, v_in_max)
}

/// Power demanded at `v_out`: the module rating, or the current limit at low
/// voltage, times the load fraction.
pub fn required_power(v_out: f64, load_fraction: f64, spec: &ConverterSpec) -> f64 {
    load_fraction * spec.p_conv_max.min(v_out * spec.i_conv_max)
}

/// Output voltages of the evaluation grid: `v_out_min`, `v_out_min + step`,
/// …, up to and including `v_out_max`.
pub fn output_voltage_grid(system: &SystemSpec, step: f64) -> Vec<f64> {
    let count = ((system.v_out_max - system.v_out_min) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=count)
        .map(|k| system.v_out_min + step * k as f64)
        .collect();
    if (out.last().copied().unwrap_or(f64::NAN) - system.v_out_max).abs() > 1e-9 {
        out.push(system.v_out_max);
    }
    out
}

/// Power transferred by SPS modulation at phase shift `d`.
pub fn sps_power(v_in: f64, v_out: f64, d: f64, spec: &ConverterSpec) -> f64 {
    v_in * v_out * d * (1.0 - d) / (2.0 * spec.n * spec.f_sw * spec.l_lk)
}

/// Largest leakage inductance that still reaches every given point's power at
/// phase shift `d_design`, i.e. the minimum of the single-point values.
///
/// Callers pass the full-power cells of the grid.
pub fn size_leakage_inductance(
    spec: &ConverterSpec,
    points: &[OperatingPoint],
    d_design: f64,
) -> f64 {
    points
        .iter()
        .filter(|op| op.p_req > 0.0)
        .map(|op| {
            op.v_out * op.v_in * d_design * (1.0 - d_design) / (2.0 * spec.n * spec.f_sw * op.p_req)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smaller root of P(d) = p_req.
pub fn solve_phase_shift(op: &OperatingPoint, spec: &ConverterSpec) -> Result<f64> {
    let kappa = 2.0 * spec.n * spec.f_sw * spec.l_lk * op.p_req / (op.v_in * op.v_out);
    if !(kappa <= 0.25 + 1e-12) || !kappa.is_finite() {
        return Err(Error::Infeasible(format!(
            "{:.0} W unreachable at v_out = {} V, v_in = {} V (kappa = {kappa:.4} > 0.25)",
            op.p_req, op.v_out, op.v_in
        )));
    }
    let disc = (1.0 - 4.0 * kappa).max(0.0);
    // Rationalized form keeps precision at small kappa.
    Ok(2.0 * kappa / (1.0 + disc.sqrt()))
}

/// Inductor current over one switching period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSolution {
    pub d: f64,
    pub t_sw: f64,
    pub n: f64,
    pub l_lk: f64,
    pub v_in: f64,
    pub v_out: f64,
    /// (time, i_L) at 0, dT/2, T/2, T/2 + dT/2 and T.
    pub breakpoints: [(f64, f64); 5],
    /// Primary bridge voltage on each of the four segments.
    pub v_primary: [f64; 4],
    /// Secondary bridge voltage on each of the four segments.
    pub v_secondary: [f64; 4],
}

impl WaveformSolution {
    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.breakpoints
            .windows(2)
            .map(|w| Segment::new(w[0].0, w[1].0, w[0].1, w[1].1))
    }

    pub fn inductor_current(&self) -> PeriodicPwl {
        PeriodicPwl {
            period: self.t_sw,
            segments: self.segments().collect(),
        }
    }

    /// Mean power delivered by the primary bridge, from the waveform.
    pub fn input_power(&self) -> f64 {
        self.segments()
            .zip(self.v_primary)
            .map(|(s, v)| v * s.integral())
            .sum::<f64>()
            / self.t_sw
    }

    /// Mean power absorbed by the secondary bridge, from the waveform.
    pub fn output_power(&self) -> f64 {
        self.segments()
            .zip(self.v_secondary)
            .map(|(s, v)| v * s.integral() / self.n)
            .sum::<f64>()
            / self.t_sw
    }
}

/// Builds the steady-state inductor current for phase shift `d`.
pub fn build_waveform(op: &OperatingPoint, spec: &ConverterSpec, d: f64) -> WaveformSolution {
    debug_assert!((0.0..=0.5 + 1e-12).contains(&d));
    let t = spec.period();
    let (vi, vo) = (op.v_in, op.v_out);
    let v_ref = vo / spec.n;
    let l = spec.l_lk;
    let t1 = d * t / 2.0;
    let half = t / 2.0;

    let v_primary = [vi, vi, -vi, -vi];
    let v_secondary = [-vo, vo, vo, -vo];
    // i(0) = -i(T/2) fixes the start value.
    let i0 = -t * (vi + v_ref * (2.0 * d - 1.0)) / (4.0 * l);
    let i1 = i0 + (vi + v_ref) * t1 / l;
    let i2 = i1 + (vi - v_ref) * (half - t1) / l;
    let i3 = i2 + (-vi - v_ref) * t1 / l;
    let i4 = i3 + (-vi + v_ref) * (half - t1) / l;

    WaveformSolution {
        d,
        t_sw: t,
        n: spec.n,
        l_lk: l,
        v_in: vi,
        v_out: vo,
        breakpoints: [(0.0, i0), (t1, i1), (half, i2), (half + t1, i3), (t, i4)],
        v_primary,
        v_secondary,
    }
}

/// Current through one switch position over its conduction interval, split
/// into channel (positive, drain to source) and reverse (diode) parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceCurrents {
    /// Position current while the switch is gated on.
    pub segments: Vec<Segment>,
    pub period: f64,
    pub channel_rms: f64,
    pub channel_avg: f64,
    pub diode_rms: f64,
    pub diode_avg: f64,
    /// RMS of the full position current (channel and diode together).
    pub rms: f64,
    /// Position current at the turn-on instant. Negative means the diode was
    /// carrying the current (zero-voltage turn-on).
    pub i_turn_on: f64,
    /// Position current at the turn-off instant. Positive means the channel
    /// interrupts current (hard turn-off).
    pub i_turn_off: f64,
}

impl DeviceCurrents {
    fn from_segments(segments: Vec<Segment>, period: f64) -> Self {
        let (mut ch, mut ch2, mut di, mut di2) = (0.0, 0.0, 0.0, 0.0);
        for s in &segments {
            let (a, b) = s.positive_part();
            ch += a;
            ch2 += b;
            let (c, e) = s.scaled(-1.0).positive_part();
            di += c;
            di2 += e;
        }
        let i_turn_on = segments.first().map_or(0.0, |s| s.y0);
        let i_turn_off = segments.last().map_or(0.0, |s| s.y1);
        DeviceCurrents {
            period,
            channel_rms: (ch2 / period).sqrt(),
            channel_avg: ch / period,
            diode_rms: (di2 / period).sqrt(),
            diode_avg: di / period,
            rms: ((ch2 + di2) / period).sqrt(),
            i_turn_on,
            i_turn_off,
            segments,
        }
    }

    /// Same waveform with every current multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let segs = self.segments.iter().map(|s| s.scaled(k)).collect();
        DeviceCurrents::from_segments(segs, self.period)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentStats {
    pub primary: DeviceCurrents,
    pub secondary: DeviceCurrents,
    pub transformer_primary_rms: f64,
    pub transformer_secondary_rms: f64,
    /// Capacitor current i_c = i_s,r − i_o over one period.
    pub capacitor_current: PeriodicPwl,
    pub capacitor_rms: f64,
    /// ∫|i_c| dt over one period.
    pub capacitor_abs_integral: f64,
    /// Half of ∫|i_c| dt: the charge moved in and out per period.
    pub ripple_charge: f64,
}

pub fn extract_current_stats(w: &WaveformSolution, op: &OperatingPoint) -> CurrentStats {
    let segs: Vec<Segment> = w.segments().collect();
    let inv_n = 1.0 / w.n;

    // Primary high-side switch of leg A: on during [0, T/2], carries +i_L.
    let primary = DeviceCurrents::from_segments(vec![segs[0], segs[1]], w.t_sw);
    // Secondary high-side switch of leg A: on during [dT/2, T/2 + dT/2],
    // carries the secondary current in reverse (rectifying direction).
    let secondary =
        DeviceCurrents::from_segments(vec![segs[1].scaled(-inv_n), segs[2].scaled(-inv_n)], w.t_sw);

    let i_l = w.inductor_current();
    let rms_l = i_l.rms();
    let i_o = op.p_req / op.v_out;
    let cap_segments: Vec<Segment> = segs
        .iter()
        .zip(w.v_secondary)
        .map(|(s, v)| s.scaled(v.signum() * inv_n).offset(-i_o))
        .collect();
    let capacitor_current = PeriodicPwl {
        period: w.t_sw,
        segments: cap_segments,
    };
    let abs_int = capacitor_current.integral_abs();

    CurrentStats {
        primary,
        secondary,
        transformer_primary_rms: rms_l,
        transformer_secondary_rms: rms_l * inv_n,
        capacitor_rms: capacitor_current.rms(),
        capacitor_abs_integral: abs_int,
        ripple_charge: abs_int / 2.0,
        capacitor_current,
    }
}
