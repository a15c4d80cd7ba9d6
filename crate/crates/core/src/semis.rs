//! Semiconductor selection and losses: conduction from the datasheet lookup
//! tables, switching from scaled reference energies, coupled through a
//! junction-temperature fixed point.

use serde::{Deserialize, Serialize};

use crate::datastore::{ConductionTable, Options, SwitchDevice};
use crate::electrical::{DeviceCurrents, Segment};
use crate::error::{Error, Result};

/// Quadrature intervals per monotone piece of the current waveform.
const QUAD_INTERVALS: usize = 64;
const MAX_PARALLEL: u32 = 4;
const FIXED_POINT_TOL: f64 = 0.5;
const FIXED_POINT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bridge {
    Primary,
    Secondary,
}

impl std::fmt::Display for Bridge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Bridge::Primary => "primary",
            Bridge::Secondary => "secondary",
        })
    }
}

/// A device choice for the four switch positions of one bridge.
#[derive(Debug, Clone, Copy)]
pub struct SwitchSelection<'a> {
    pub device: &'a SwitchDevice,
    pub parallel_count: u32,
    pub bridge: Bridge,
}

impl SwitchSelection<'_> {
    pub fn devices_per_bridge(&self) -> u32 {
        4 * self.parallel_count
    }

    pub fn bridge_cost(&self) -> f64 {
        self.devices_per_bridge() as f64 * self.device.unit_cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SwitchLossResult {
    /// Conduction loss per die, W.
    pub p_cond: f64,
    /// Turn-on plus turn-off loss per die, W.
    pub p_sw: f64,
    /// Reverse-recovery loss per die, W.
    pub p_rr: f64,
    pub t_j: f64,
    /// p_cond + p_sw + p_rr per die.
    pub p_loss_sw: f64,
    /// A table lookup left its tabulated range.
    pub clamped: bool,
    pub converged: bool,
    /// Junction temperature beyond the device limit.
    pub over_temperature: bool,
}

/// Time-averaged conduction loss of one die carrying `currents` at junction
/// temperature `t_j`. Positive current uses the channel table, negative
/// current the reverse-conduction table. Returns the loss and a clamp flag.
pub fn conduction_loss(currents: &DeviceCurrents, dev: &SwitchDevice, t_j: f64) -> (f64, bool) {
    let mut energy = 0.0;
    let mut clamped = false;
    for seg in &currents.segments {
        let (a, b) = seg.split_at_zero();
        for piece in std::iter::once(a).chain(b) {
            if piece.dt() <= 0.0 {
                continue;
            }
            let positive = piece.y0 + piece.y1 > 0.0;
            let table = if positive {
                &dev.conduction
            } else {
                &dev.diode
            };
            let (e, c) = integrate_iv(&piece, table, t_j, positive);
            energy += e;
            clamped |= c;
        }
    }
    (energy / currents.period, clamped)
}

/// ∫ |i|·v(|i|) dt over one segment of constant sign, composite Simpson.
fn integrate_iv(seg: &Segment, table: &ConductionTable, t_j: f64, positive: bool) -> (f64, bool) {
    let sign = if positive { 1.0 } else { -1.0 };
    let h = seg.dt() / QUAD_INTERVALS as f64;
    let mut clamped = false;
    let mut f = |k: usize| {
        let i = sign * seg.at(seg.t0 + h * k as f64);
        let i = i.max(0.0);
        let v = table.eval(t_j, i);
        clamped |= v.clamped;
        i * v.value
    };
    let mut sum = f(0) + f(QUAD_INTERVALS);
    for k in 1..QUAD_INTERVALS {
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
    }
    (sum * h / 3.0, clamped)
}

/// Operating conditions of a switching event beyond its current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingConditions {
    pub f_sw: f64,
    /// DC bus voltage the device switches against.
    pub v_bus: f64,
    pub t_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SwitchingLoss {
    pub p_sw: f64,
    pub p_rr: f64,
    pub clamped: bool,
}

fn k_tj(coeff: f64, t_j: f64, t_ref: f64) -> f64 {
    (1.0 + coeff * (t_j - t_ref)).max(0.0)
}

/// Switching and reverse-recovery loss of one die. A turn-on with negative
/// position current is a zero-voltage transition and costs no E_on; the
/// complementary diode then does not recover either. A turn-off with
/// non-positive current costs no E_off.
pub fn switching_loss(
    currents: &DeviceCurrents,
    dev: &SwitchDevice,
    cond: SwitchingConditions,
) -> SwitchingLoss {
    let r = &dev.ref_conditions;
    let k_v = cond.v_bus / r.v_ds;
    let mut out = SwitchingLoss::default();

    let i_on = currents.i_turn_on;
    if i_on > 0.0 {
        let e_on = dev.e_on.eval(i_on);
        let e_rr = dev.e_rr.eval(i_on);
        out.clamped |= e_on.clamped || e_rr.clamped;
        out.p_sw += e_on.value * dev.rg_scale_on * k_tj(dev.tj_coeff_on, cond.t_j, r.t_j) * k_v;
        out.p_rr += e_rr.value * dev.rg_scale_on * k_tj(dev.tj_coeff_rr, cond.t_j, r.t_j) * k_v;
    }
    let i_off = currents.i_turn_off;
    if i_off > 0.0 {
        let e_off = dev.e_off.eval(i_off);
        out.clamped |= e_off.clamped;
        out.p_sw += e_off.value * dev.rg_scale_off * k_tj(dev.tj_coeff_off, cond.t_j, r.t_j) * k_v;
    }
    out.p_sw *= cond.f_sw;
    out.p_rr *= cond.f_sw;
    out
}

/// Cheapest (device, parallel count) whose per-die rms current stays within
/// `rms_margin·I_d(100 °C)` and whose rating covers the bus voltage.
///
/// Returns `Ok(None)` when nothing in the database qualifies.
pub fn select_device<'a>(
    worst_rms: f64,
    db: &'a [SwitchDevice],
    bus_voltage: f64,
    bridge: Bridge,
    options: &Options,
) -> Result<Option<SwitchSelection<'a>>> {
    if db.is_empty() {
        return Err(Error::Database("switch database is empty".into()));
    }
    let mut best: Option<(f64, u32, &SwitchDevice)> = None;
    for dev in db {
        if bus_voltage > options.switch_voltage_margin * dev.v_rating {
            continue;
        }
        for count in 1..=MAX_PARALLEL {
            if worst_rms / count as f64 > options.rms_margin * dev.i_d_100c {
                continue;
            }
            let cost = count as f64 * dev.unit_cost;
            let better = match best {
                None => true,
                Some((c, k, d)) => (cost, count, dev.part_id.as_str()) < (c, k, d.part_id.as_str()),
            };
            if better {
                best = Some((cost, count, dev));
            }
            break;
        }
    }
    Ok(best.map(|(_, parallel_count, device)| SwitchSelection {
        device,
        parallel_count,
        bridge,
    }))
}

/// Outcome of the electro-thermal fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub t_j: f64,
    pub p_loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `t_j ← t_base + p_loss(t_j)·r_th` until successive temperatures
/// differ by less than 0.5 °C. The first evaluation at `t_base` is the
/// initial guess and does not count as an iteration. The converged value is
/// refined by one Aitken Δ² step over the last three iterates, which is exact
/// when the loss is linear in temperature.
pub fn electro_thermal_iterate(
    t_base: f64,
    r_th: f64,
    mut p_loss: impl FnMut(f64) -> f64,
) -> FixedPoint {
    debug_assert!(r_th >= 0.0);
    let mut prev = t_base;
    let mut t = t_base + p_loss(t_base) * r_th;
    for it in 1..=FIXED_POINT_MAX_ITER {
        let p = p_loss(t);
        let next = t_base + p * r_th;
        if !next.is_finite() || next > 1e4 {
            return FixedPoint {
                t_j: next,
                p_loss: p,
                iterations: it,
                converged: false,
            };
        }
        let step = next - t;
        if step.abs() < FIXED_POINT_TOL {
            let curvature = step - (t - prev);
            let mut t_j = next;
            if curvature.abs() > 1e-12 {
                let refined = next - step * step / curvature;
                if refined.is_finite() && (refined - next).abs() <= 2.0 * FIXED_POINT_TOL {
                    t_j = refined;
                }
            }
            return FixedPoint {
                t_j,
                p_loss: p_loss(t_j),
                iterations: it,
                converged: true,
            };
        }
        prev = t;
        t = next;
    }
    FixedPoint {
        t_j: t,
        p_loss: p_loss(t),
        iterations: FIXED_POINT_MAX_ITER,
        converged: false,
    }
}

/// Per-die losses of one switch position with the junction temperature
/// resolved. `t_case` is the case temperature the heatsink holds.
pub fn position_losses(
    position: &DeviceCurrents,
    selection: &SwitchSelection<'_>,
    f_sw: f64,
    v_bus: f64,
    t_case: f64,
) -> SwitchLossResult {
    let dev = selection.device;
    let die = position.scaled(1.0 / selection.parallel_count as f64);
    let eval = |t_j: f64| {
        let (p_cond, c1) = conduction_loss(&die, dev, t_j);
        let sw = switching_loss(&die, dev, SwitchingConditions { f_sw, v_bus, t_j });
        (p_cond, sw, c1 || sw.clamped)
    };
    let fp = electro_thermal_iterate(t_case, dev.r_th_jc, |t| {
        let (c, sw, _) = eval(t);
        c + sw.p_sw + sw.p_rr
    });
    let (p_cond, sw, clamped) = eval(fp.t_j);
    SwitchLossResult {
        p_cond,
        p_sw: sw.p_sw,
        p_rr: sw.p_rr,
        t_j: fp.t_j,
        p_loss_sw: p_cond + sw.p_sw + sw.p_rr,
        clamped,
        converged: fp.converged,
        over_temperature: fp.t_j > dev.t_j_max,
    }
}
